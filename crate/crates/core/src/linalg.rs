//! Dense complex linear algebra on small matrices.
//!
//! Factorizations are delegated to `nalgebra`; this module adds the gauge
//! conventions that make every downstream decomposition reproducible:
//!
//! * SVD vectors are phase-fixed so that the largest-magnitude entry of each
//!   left singular vector is real and non-negative.
//! * QR factors are fixed so that `R` has a real non-negative diagonal.
//! * Isometry completion orthonormalizes standard basis vectors in index
//!   order.
//!
//! All routines are pure functions of their inputs.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type Matrix4c = Matrix4<C64>;

/// Numerical tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Norm below which a Gram-Schmidt candidate counts as linearly dependent.
    pub dependence: f64,
    /// Allowed deviation from `U^dagger U = I` for inputs that must be unitary.
    pub unitarity: f64,
    /// Generic equality tolerance.
    pub equality: f64,
    /// Distance of an eigenphase from pi that triggers the branch-cut flag.
    pub branch_cut: f64,
    /// Relative singular value threshold used by truncation by default.
    pub sv_threshold: f64,
    /// Relative singular value below which a value counts as an exact zero.
    pub exact_zero: f64,
}

pub const TOL: Tolerances = Tolerances {
    dependence: 1e-8,
    unitarity: 1e-10,
    equality: 1e-12,
    branch_cut: 1e-8,
    sv_threshold: 1e-12,
    exact_zero: 1e-14,
};

const SVD_EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub left_vectors: ComplexMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `k x n` with orthonormal rows.
    pub right_vectors_conjugate_transposed: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.left_vectors.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.right_vectors_conjugate_transposed
    }

    /// Number of singular values strictly above `rel * s_max`.
    pub fn rank_above(&self, rel: f64) -> usize {
        let s0 = self.singular_values.first().copied().unwrap_or(0.0);
        if s0 == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .take_while(|s| **s > rel * s0)
            .count()
    }
}

pub fn check_finite(a: &ComplexMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Build a matrix from row-major entries, rejecting non-finite values.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m, "matrix")?;
    Ok(m)
}

/// Row-major copy of the entries.
pub fn to_row_major(a: &ComplexMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.push(a[(i, j)]);
        }
    }
    out
}

pub fn to_matrix4(a: &ComplexMatrix) -> Result<Matrix4c> {
    if a.shape() != (4, 4) {
        return Err(Error::Shape(format!("expected 4x4, got {:?}", a.shape())));
    }
    Ok(Matrix4c::from_fn(|i, j| a[(i, j)]))
}

pub fn from_matrix4(a: &Matrix4c) -> ComplexMatrix {
    DMatrix::from_fn(4, 4, |i, j| a[(i, j)])
}

/// `||A^dagger A - I||_max`.
pub fn isometry_deviation(a: &ComplexMatrix) -> f64 {
    let g = a.adjoint() * a;
    let mut dev = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Max of the left and right isometry deviations of a square matrix.
pub fn unitarity_deviation(a: &ComplexMatrix) -> f64 {
    isometry_deviation(a).max(isometry_deviation(&a.adjoint()))
}

pub fn unitarity_deviation4(a: &Matrix4c) -> f64 {
    let g = a.adjoint() * a - Matrix4c::identity();
    g.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Singular value decomposition with sorted values and a fixed phase gauge.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    check_finite(a, "svd input")?;
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdResult {
            left_vectors: DMatrix::zeros(m, 0),
            singular_values: Vec::new(),
            right_vectors_conjugate_transposed: DMatrix::zeros(0, n),
        });
    }
    let dec = a
        .clone()
        .try_svd(true, true, SVD_EPS, MAX_ITER)
        .ok_or(Error::NonConvergence {
            op: "svd",
            rows: m,
            cols: n,
        })?;
    let (u, vt) = match (dec.u, dec.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => {
            return Err(Error::NonConvergence {
                op: "svd",
                rows: m,
                cols: n,
            })
        }
    };
    let s = dec.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps the factorization's own order among exact ties.
    order.sort_by(|&x, &y| s[y].partial_cmp(&s[x]).unwrap_or(std::cmp::Ordering::Equal));

    let mut left = DMatrix::zeros(m, k);
    let mut right = DMatrix::zeros(k, n);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vrow = vt.row(src).into_owned();
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (i, z) in ucol.iter().enumerate() {
            let a = z.norm();
            if a > best_abs * (1.0 + 1e-12) {
                best = i;
                best_abs = a;
            }
        }
        if best_abs > 0.0 {
            let phase = ucol[best] / best_abs;
            ucol *= phase.conj();
            vrow *= phase;
        }
        left.set_column(dst, &ucol);
        right.set_row(dst, &vrow);
        values.push(s[src].max(0.0));
    }
    Ok(SvdResult {
        left_vectors: left,
        singular_values: values,
        right_vectors_conjugate_transposed: right,
    })
}

/// Thin QR with `R` gauge-fixed to a real non-negative diagonal.
pub fn qr_positive(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_finite(a, "qr input")?;
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            for row in 0..q.nrows() {
                q[(row, i)] *= phase;
            }
            for col in 0..r.ncols() {
                r[(i, col)] *= phase.conj();
            }
        }
    }
    Ok((q, r))
}

#[derive(Debug, Clone)]
pub struct PolarFactor {
    pub unitary: ComplexMatrix,
    /// Input was exactly zero; `unitary` is the identity.
    pub degenerate: bool,
}

/// The unitary closest to `f` in Frobenius norm, `U V^dagger` from the SVD
/// `f = U S V^dagger`. Equivalently the unitary maximizing `Re tr(f W^dagger)`.
pub fn closest_unitary(f: &ComplexMatrix) -> Result<PolarFactor> {
    if !f.is_square() {
        return Err(Error::Shape(format!(
            "closest_unitary needs a square matrix, got {:?}",
            f.shape()
        )));
    }
    check_finite(f, "closest_unitary input")?;
    if f.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(PolarFactor {
            unitary: DMatrix::identity(f.nrows(), f.ncols()),
            degenerate: true,
        });
    }
    let d = svd(f)?;
    Ok(PolarFactor {
        unitary: d.left_vectors * d.right_vectors_conjugate_transposed,
        degenerate: false,
    })
}

#[derive(Debug, Clone)]
pub struct FractionalPower {
    pub matrix: ComplexMatrix,
    /// Some eigenphase sat within the branch-cut tolerance of pi.
    pub branch_hazard: bool,
}

/// `V^r` for unitary `V`, using principal eigenphases in `(-pi, pi]`.
pub fn fractional_unitary_power(v: &ComplexMatrix, r: f64) -> Result<FractionalPower> {
    if !v.is_square() {
        return Err(Error::Shape(format!(
            "fractional power needs a square matrix, got {:?}",
            v.shape()
        )));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!(
            "exponent {r} outside [0, 1]"
        )));
    }
    check_finite(v, "fractional power input")?;
    let deviation = unitarity_deviation(v);
    if deviation > TOL.unitarity {
        return Err(Error::NotUnitary { deviation });
    }
    let n = v.nrows();
    // The QR iteration stalls on near-scalar input, so remove the scalar part.
    let shift = v.trace() / C64::new(n as f64, 0.0);
    let shifted = v - DMatrix::<C64>::identity(n, n) * shift;
    let (q, t) = Schur::try_new(shifted, SVD_EPS, MAX_ITER)
        .ok_or(Error::NonConvergence {
            op: "schur",
            rows: n,
            cols: n,
        })?
        .unpack();
    let mut hazard = false;
    let mut phases = Vec::with_capacity(n);
    for j in 0..n {
        let mut theta = (t[(j, j)] + shift).arg();
        if theta <= -std::f64::consts::PI {
            theta = std::f64::consts::PI;
        }
        if std::f64::consts::PI - theta.abs() < TOL.branch_cut {
            hazard = true;
        }
        phases.push(theta);
    }
    if r == 0.0 {
        return Ok(FractionalPower {
            matrix: DMatrix::identity(n, n),
            branch_hazard: hazard,
        });
    }
    if r == 1.0 {
        return Ok(FractionalPower {
            matrix: v.clone(),
            branch_hazard: hazard,
        });
    }
    let mut qd = q.clone();
    for (j, theta) in phases.iter().enumerate() {
        let e = C64::from_polar(1.0, r * theta);
        for i in 0..n {
            qd[(i, j)] *= e;
        }
    }
    Ok(FractionalPower {
        matrix: qd * q.adjoint(),
        branch_hazard: hazard,
    })
}

fn is_power_of_two(x: usize) -> bool {
    x != 0 && x & (x - 1) == 0
}

/// Extend a `2^n x 2^m` isometry to a `2^n x 2^n` unitary `[Q X]`.
///
/// The appended columns come from Gram-Schmidt on standard basis vectors in
/// index order (two projection passes), skipping candidates whose residual
/// norm falls below the dependence tolerance.
pub fn complete_isometry(q: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = q.shape();
    if !is_power_of_two(rows) || !is_power_of_two(cols) || cols > rows {
        return Err(Error::Shape(format!(
            "isometry must be 2^n x 2^m with n >= m, got {rows}x{cols}"
        )));
    }
    check_finite(q, "isometry")?;
    let deviation = isometry_deviation(q);
    if deviation > TOL.unitarity {
        return Err(Error::NotIsometry { deviation });
    }
    let mut u = DMatrix::zeros(rows, rows);
    for j in 0..cols {
        u.set_column(j, &q.column(j));
    }
    let mut filled = cols;
    for candidate in 0..rows {
        if filled == rows {
            break;
        }
        let mut v = nalgebra::DVector::<C64>::zeros(rows);
        v[candidate] = C64::new(1.0, 0.0);
        for _pass in 0..2 {
            for j in 0..filled {
                let col = u.column(j);
                let coeff = col.dotc(&v);
                v.axpy(-coeff, &col, C64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm < TOL.dependence {
            continue;
        }
        v /= C64::new(norm, 0.0);
        u.set_column(filled, &v);
        filled += 1;
    }
    if filled != rows {
        return Err(Error::Internal(format!(
            "isometry completion found {filled} of {rows} columns"
        )));
    }
    Ok(u)
}

/// Haar-like random unitary: complex Gaussian matrix, QR, `R` diagonal made
/// real and non-negative.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    // A Gaussian matrix is full rank with probability one, so QR is fine.
    qr_positive(&a).expect("finite gaussian matrix").0
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}
