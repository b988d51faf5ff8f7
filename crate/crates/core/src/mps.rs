//! Open-boundary matrix product states of qubits.
//!
//! A state on `N` sites is a chain of rank-3 cores with shape
//! `(chi_left, 2, chi_right)`, stored row-major. Site 0 is the most
//! significant bit of a basis index (big-endian). The boundary bonds have
//! dimension one.
//!
//! Row-major storage means a core can be read as either a `(2 chi_left) x
//! chi_right` matrix (left-grouped) or a `chi_left x (2 chi_right)` matrix
//! (right-grouped) without moving data.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{qr_positive, svd, ComplexMatrix, Matrix4c, C64, TOL};

/// Default cap on the number of sites for dense conversions.
pub const STATEVECTOR_CAP: usize = 20;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl Core {
    pub fn new(left: usize, right: usize, data: Vec<C64>) -> Result<Self> {
        if left == 0 || right == 0 || data.len() != left * 2 * right {
            return Err(Error::Shape(format!(
                "core ({left}, 2, {right}) with {} entries",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("mps core"));
        }
        Ok(Self { left, right, data })
    }

    pub fn zeros(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            data: vec![ZERO; left * 2 * right],
        }
    }

    pub fn left_dim(&self) -> usize {
        self.left
    }

    pub fn right_dim(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * 2 + s) * self.right + b]
    }

    #[inline]
    fn set(&mut self, a: usize, s: usize, b: usize, v: C64) {
        self.data[(a * 2 + s) * self.right + b] = v;
    }

    /// `(2 chi_left) x chi_right` view.
    pub fn left_matrix(&self) -> ComplexMatrix {
        DMatrix::from_row_slice(self.left * 2, self.right, &self.data)
    }

    /// `chi_left x (2 chi_right)` view.
    pub fn right_matrix(&self) -> ComplexMatrix {
        DMatrix::from_row_slice(self.left, 2 * self.right, &self.data)
    }

    fn from_matrix(m: &ComplexMatrix, left: usize, right: usize) -> Self {
        debug_assert_eq!(m.len(), left * 2 * right);
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { left, right, data }
    }

    /// Matrix `chi_left x chi_right` for one physical index.
    fn physical_slice(&self, s: usize) -> ComplexMatrix {
        DMatrix::from_fn(self.left, self.right, |a, b| self.get(a, s, b))
    }

    fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, factor: C64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    /// Zero-pad the bond dimensions up to `(left, right)`.
    pub fn padded(&self, left: usize, right: usize) -> Self {
        let mut out = Core::zeros(left.max(self.left), right.max(self.right));
        for a in 0..self.left {
            for s in 0..2 {
                for b in 0..self.right {
                    out.set(a, s, b, self.get(a, s, b));
                }
            }
        }
        out
    }
}

/// Singular values across one bond, normalized so their squares sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub bond_index: usize,
    pub values: Vec<f64>,
}

impl SchmidtSpectrum {
    /// `-sum p ln p` with `p = lambda^2`.
    pub fn entropy(&self) -> f64 {
        self.values
            .iter()
            .map(|l| l * l)
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>()
            .max(0.0)
    }

    /// Values above `rel` times the largest one.
    pub fn nonzero(&self, rel: f64) -> Vec<f64> {
        let s0 = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().copied().filter(|v| *v > rel * s0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mps {
    cores: Vec<Core>,
    /// Every core left of it is a left isometry and every core right of it a
    /// right isometry.
    center: Option<usize>,
}

impl Mps {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("an MPS needs at least one site".into()));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::Shape("boundary bonds must have dimension 1".into()));
        }
        for (i, w) in cores.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(Error::Shape(format!(
                    "bond {i}: right dimension {} does not match left dimension {}",
                    w[0].right, w[1].left
                )));
            }
        }
        Ok(Self {
            cores,
            center: None,
        })
    }

    /// Computational basis product state; `bits[i]` is the value of site `i`.
    pub fn product(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("an MPS needs at least one site".into()));
        }
        let cores = bits
            .iter()
            .map(|&b| {
                if b > 1 {
                    return Err(Error::InvalidArgument(format!("bit value {b}")));
                }
                let mut c = Core::zeros(1, 1);
                c.set(0, b as usize, 0, ONE);
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cores,
            center: Some(0),
        })
    }

    /// `|0...0>` on `n` sites.
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::product(&vec![0u8; n])
    }

    pub fn num_sites(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn orthogonality_center(&self) -> Option<usize> {
        self.center
    }

    /// Bond dimensions `chi_1 .. chi_{N-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.right)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn qr_step_right(&mut self, i: usize) -> Result<()> {
        let core = &self.cores[i];
        let l = core.left;
        let (q, rm) = qr_positive(&core.left_matrix())?;
        let k = q.ncols();
        self.cores[i] = Core::from_matrix(&q, l, k);
        let next = &self.cores[i + 1];
        let merged = rm * next.right_matrix();
        debug_assert_eq!(merged.nrows(), k);
        let nr = next.right;
        self.cores[i + 1] = Core::from_matrix(&merged, k, nr);
        Ok(())
    }

    fn lq_step_left(&mut self, i: usize) -> Result<()> {
        let core = &self.cores[i];
        let r = core.right;
        let (q, rm) = qr_positive(&core.right_matrix().adjoint())?;
        let k = q.ncols();
        self.cores[i] = Core::from_matrix(&q.adjoint(), k, r);
        let prev = &self.cores[i - 1];
        let pl = prev.left;
        let merged = prev.left_matrix() * rm.adjoint();
        self.cores[i - 1] = Core::from_matrix(&merged, pl, k);
        Ok(())
    }

    /// Bring every core but the last into left-isometric form by QR.
    pub fn left_canonicalize(&mut self) -> Result<()> {
        for i in 0..self.num_sites() - 1 {
            self.qr_step_right(i)?;
        }
        self.center = Some(self.num_sites() - 1);
        Ok(())
    }

    /// Bring every core but the first into right-isometric form.
    pub fn right_canonicalize(&mut self) -> Result<()> {
        for i in (1..self.num_sites()).rev() {
            self.lq_step_left(i)?;
        }
        self.center = Some(0);
        Ok(())
    }

    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.num_sites() {
            return Err(Error::SiteOutOfRange {
                site: target,
                num_sites: self.num_sites(),
            });
        }
        let mut c = match self.center {
            Some(c) => c,
            None => {
                self.left_canonicalize()?;
                self.num_sites() - 1
            }
        };
        while c < target {
            self.qr_step_right(c)?;
            c += 1;
        }
        while c > target {
            self.lq_step_left(c)?;
            c -= 1;
        }
        self.center = Some(c);
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        match self.center {
            Some(c) => self.cores[c].frobenius_norm(),
            None => self.inner_product(self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0),
        }
    }

    pub fn normalize(&mut self) -> Result<()> {
        if self.center.is_none() {
            self.left_canonicalize()?;
        }
        let c = self.center.unwrap_or(0);
        let n = self.cores[c].frobenius_norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero state".into()));
        }
        self.cores[c].scale(C64::new(1.0 / n, 0.0));
        Ok(())
    }

    /// Multiply the state by a scalar.
    pub fn scale(&mut self, factor: C64) {
        let c = self.center.unwrap_or(0);
        self.cores[c].scale(factor);
    }

    /// Bound every bond by `max_chi` and drop singular values below
    /// `sv_threshold` times the largest one on that bond.
    ///
    /// One left-canonicalizing QR sweep is followed by a right-to-left SVD
    /// sweep, so each cut is made in the orthogonal gauge. The result is
    /// renormalized and right-canonical (center at site 0). Returns the
    /// total discarded squared weight, relative to the norm at each cut.
    pub fn truncate(&mut self, max_chi: usize, sv_threshold: f64) -> Result<f64> {
        if max_chi == 0 {
            return Err(Error::InvalidArgument("max_chi must be at least 1".into()));
        }
        self.left_canonicalize()?;
        let mut discarded = 0.0;
        for i in (1..self.num_sites()).rev() {
            let core = &self.cores[i];
            let r = core.right;
            let d = svd(&core.right_matrix())?;
            let keep = d.rank_above(sv_threshold).clamp(1, max_chi);
            let total: f64 = d.singular_values.iter().map(|s| s * s).sum();
            let kept: f64 = d.singular_values[..keep].iter().map(|s| s * s).sum();
            if total > 0.0 {
                discarded += 1.0 - kept / total;
            }
            let vt = d.right_vectors_conjugate_transposed.rows(0, keep).into_owned();
            self.cores[i] = Core::from_matrix(&vt, keep, r);
            let mut us = d.left_vectors.columns(0, keep).into_owned();
            for (j, s) in d.singular_values[..keep].iter().enumerate() {
                us.column_mut(j).scale_mut(*s);
            }
            let prev = &self.cores[i - 1];
            let pl = prev.left;
            let merged = prev.left_matrix() * us;
            self.cores[i - 1] = Core::from_matrix(&merged, pl, keep);
        }
        self.center = Some(0);
        self.normalize()?;
        Ok(discarded)
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &Mps) -> Result<C64> {
        if self.num_sites() != other.num_sites() {
            return Err(Error::Shape(format!(
                "inner product of {}-site and {}-site states",
                self.num_sites(),
                other.num_sites()
            )));
        }
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (bra, ket) in self.cores.iter().zip(&other.cores) {
            env = transfer_left(&env, bra, ket);
        }
        Ok(env[(0, 0)])
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &Mps) -> Result<f64> {
        Ok(self.inner_product(other)?.norm())
    }

    /// Apply a two-qubit gate on sites `(site, site + 1)`.
    ///
    /// The gate's basis index is `2 * bit(site) + bit(site + 1)`. Without
    /// `max_chi` the split keeps every singular value above the exact-zero
    /// tolerance; with it, the bond is capped and the norm restored.
    pub fn apply_two_qubit_gate(
        &mut self,
        gate: &Matrix4c,
        site: usize,
        max_chi: Option<usize>,
        adjoint: bool,
    ) -> Result<()> {
        let n = self.num_sites();
        if n < 2 || site > n - 2 {
            return Err(Error::SiteOutOfRange { site, num_sites: n });
        }
        if max_chi == Some(0) {
            return Err(Error::InvalidArgument("max_chi must be at least 1".into()));
        }
        let absorb_right = match self.center {
            Some(c) => c <= site,
            None => true,
        };
        match self.center {
            Some(c) if c == site || c == site + 1 => {}
            Some(c) if c < site => self.move_center(site)?,
            Some(_) => self.move_center(site + 1)?,
            None => self.move_center(site)?,
        }

        let g = if adjoint { gate.adjoint() } else { *gate };
        let a = &self.cores[site];
        let b = &self.cores[site + 1];
        let (l, r) = (a.left, b.right);
        let theta = a.left_matrix() * b.right_matrix(); // (l,s1) x (s2,r)
        let mut out = ComplexMatrix::zeros(2 * l, 2 * r);
        for x in 0..l {
            for y in 0..r {
                let v = [
                    theta[(2 * x, y)],
                    theta[(2 * x, r + y)],
                    theta[(2 * x + 1, y)],
                    theta[(2 * x + 1, r + y)],
                ];
                for t in 0..4 {
                    let mut acc = ZERO;
                    for (s, vs) in v.iter().enumerate() {
                        acc += g[(t, s)] * vs;
                    }
                    out[(2 * x + (t >> 1), (t & 1) * r + y)] = acc;
                }
            }
        }

        let d = svd(&out)?;
        let mut keep = d.rank_above(TOL.exact_zero).max(1);
        if let Some(cap) = max_chi {
            keep = keep.min(cap);
        }
        let mut s: Vec<f64> = d.singular_values[..keep].to_vec();
        if max_chi.is_some() {
            let total: f64 = d.singular_values.iter().map(|v| v * v).sum();
            let kept: f64 = s.iter().map(|v| v * v).sum();
            if kept > 0.0 {
                let f = (total / kept).sqrt();
                s.iter_mut().for_each(|v| *v *= f);
            }
        }
        let mut u = d.left_vectors.columns(0, keep).into_owned();
        let mut vt = d.right_vectors_conjugate_transposed.rows(0, keep).into_owned();
        if absorb_right {
            for (i, sv) in s.iter().enumerate() {
                vt.row_mut(i).scale_mut(*sv);
            }
            self.center = Some(site + 1);
        } else {
            for (j, sv) in s.iter().enumerate() {
                u.column_mut(j).scale_mut(*sv);
            }
            self.center = Some(site);
        }
        self.cores[site] = Core::from_matrix(&u, l, keep);
        self.cores[site + 1] = Core::from_matrix(&vt, keep, r);
        Ok(())
    }

    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        self.to_statevector_capped(STATEVECTOR_CAP)
    }

    /// Dense amplitudes, site 0 as the most significant bit.
    pub fn to_statevector_capped(&self, cap: usize) -> Result<Vec<C64>> {
        let n = self.num_sites();
        if n > cap {
            return Err(Error::TooLarge { num_sites: n, cap });
        }
        // prefix[(idx, a)] with row length chi
        let mut prefix = vec![ONE];
        let mut chi = 1usize;
        for core in &self.cores {
            let rows = prefix.len() / chi;
            let r = core.right;
            let mut next = vec![ZERO; rows * 2 * r];
            for idx in 0..rows {
                for a in 0..chi {
                    let p = prefix[idx * chi + a];
                    if p == ZERO {
                        continue;
                    }
                    for s in 0..2 {
                        let row = (idx * 2 + s) * r;
                        for b in 0..r {
                            next[row + b] += p * core.get(a, s, b);
                        }
                    }
                }
            }
            prefix = next;
            chi = r;
        }
        Ok(prefix)
    }

    /// Sequential SVD factorization of a normalized dense vector.
    ///
    /// Bonds keep at most `max_chi` singular values; values below the
    /// exact-zero tolerance are dropped. The result is left-canonical and
    /// renormalized if anything was cut.
    pub fn from_statevector(v: &[C64], max_chi: usize) -> Result<Self> {
        let len = v.len();
        if len < 2 || len & (len - 1) != 0 {
            return Err(Error::InvalidArgument(format!(
                "statevector length {len} is not a power of two"
            )));
        }
        if max_chi == 0 {
            return Err(Error::InvalidArgument("max_chi must be at least 1".into()));
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "statevector norm {norm} is not 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let mut cores = Vec::with_capacity(n);
        let mut chi = 1usize;
        let mut rest = DMatrix::from_row_slice(2, len / 2, v);
        let mut truncated = false;
        for _site in 0..n - 1 {
            let cols = rest.ncols();
            let d = svd(&rest)?;
            let exact = d.rank_above(TOL.exact_zero).max(1);
            let keep = exact.min(max_chi);
            truncated |= keep < exact;
            let u = d.left_vectors.columns(0, keep).into_owned();
            cores.push(Core::from_matrix(&u, chi, keep));
            let mut svt = d.right_vectors_conjugate_transposed.rows(0, keep).into_owned();
            for (i, s) in d.singular_values[..keep].iter().enumerate() {
                svt.row_mut(i).scale_mut(*s);
            }
            // reshape keep x cols -> (keep*2) x (cols/2), row-major
            let half = cols / 2;
            rest = DMatrix::from_fn(keep * 2, half, |row, col| {
                svt[(row / 2, (row % 2) * half + col)]
            });
            chi = keep;
        }
        let last = Core::from_matrix(&rest, chi, 1);
        cores.push(last);
        let mut mps = Self {
            cores,
            center: Some(n - 1),
        };
        if truncated {
            mps.normalize()?;
        }
        Ok(mps)
    }

    /// Schmidt coefficients across bond `bond` (between sites `bond` and
    /// `bond + 1`).
    pub fn schmidt_spectrum(&self, bond: usize) -> Result<SchmidtSpectrum> {
        let n = self.num_sites();
        if n < 2 || bond > n - 2 {
            return Err(Error::BondOutOfRange { bond, num_sites: n });
        }
        let mut work = self.clone();
        work.move_center(bond)?;
        let d = svd(&work.cores[bond].left_matrix())?;
        let norm = d.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state has no spectrum".into()));
        }
        Ok(SchmidtSpectrum {
            bond_index: bond,
            values: d.singular_values.iter().map(|s| s / norm).collect(),
        })
    }

    /// Largest deviation of any core left of `upto` from the left isometry
    /// condition.
    pub fn left_isometry_deviation(&self, upto: usize) -> f64 {
        self.cores[..upto]
            .iter()
            .map(|c| crate::linalg::isometry_deviation(&c.left_matrix()))
            .fold(0.0, f64::max)
    }

    /// Largest deviation of any core right of `from` from the right isometry
    /// condition.
    pub fn right_isometry_deviation(&self, from: usize) -> f64 {
        self.cores[from + 1..]
            .iter()
            .map(|c| crate::linalg::isometry_deviation(&c.right_matrix().adjoint()))
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> MpsFile {
        MpsFile {
            format_version: MPS_FORMAT_VERSION,
            num_sites: self.num_sites(),
            bond_dims: self.bond_dims(),
            endianness: ENDIANNESS_NOTE.to_string(),
            orthogonality_center: self.center,
            cores: self
                .cores
                .iter()
                .map(|c| CoreFile {
                    shape: [c.left, 2, c.right],
                    data: c.data.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &MpsFile) -> Result<Self> {
        if file.format_version != MPS_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported MPS format version {}",
                file.format_version
            )));
        }
        if file.cores.len() != file.num_sites {
            return Err(Error::Format(format!(
                "header says {} sites, found {} cores",
                file.num_sites,
                file.cores.len()
            )));
        }
        let cores = file
            .cores
            .iter()
            .map(|c| {
                if c.shape[1] != 2 {
                    return Err(Error::Format("physical dimension must be 2".into()));
                }
                Core::new(
                    c.shape[0],
                    c.shape[2],
                    c.data.iter().map(|p| C64::new(p[0], p[1])).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut mps = Mps::new(cores)?;
        if mps.bond_dims() != file.bond_dims {
            return Err(Error::Format("bond_dims header does not match cores".into()));
        }
        mps.center = file.orthogonality_center.filter(|c| *c < mps.num_sites());
        Ok(mps)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: MpsFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }
}

/// `E'[b, b'] = sum conj(bra[a, s, b]) E[a, a'] ket[a', s, b']`.
pub(crate) fn transfer_left(env: &ComplexMatrix, bra: &Core, ket: &Core) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(bra.right, ket.right);
    for s in 0..2 {
        let t = env * ket.physical_slice(s);
        out += bra.physical_slice(s).adjoint() * t;
    }
    out
}

/// `E'[a, a'] = sum conj(bra[a, s, b]) E[b, b'] ket[a', s, b']`.
pub(crate) fn transfer_right(env: &ComplexMatrix, bra: &Core, ket: &Core) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(bra.left, ket.left);
    for s in 0..2 {
        let t = env * ket.physical_slice(s).transpose();
        out += bra.physical_slice(s).conjugate() * t;
    }
    out
}

/// Environment of a two-site gate between two states: the 4x4 matrix
/// `F[t, s] = sum_rest ket[.., t, ..] conj(bra[.., s, ..])`, so that
/// `<bra| U^dagger |ket> = tr(U^dagger F)`.
pub(crate) fn two_site_environment(bra: &Mps, ket: &Mps, site: usize) -> Result<Matrix4c> {
    let n = bra.num_sites();
    if ket.num_sites() != n {
        return Err(Error::Shape("environment of states with different sizes".into()));
    }
    if n < 2 || site > n - 2 {
        return Err(Error::SiteOutOfRange { site, num_sites: n });
    }
    let mut left = DMatrix::from_element(1, 1, ONE);
    for i in 0..site {
        left = transfer_left(&left, &bra.cores[i], &ket.cores[i]);
    }
    let mut right = DMatrix::from_element(1, 1, ONE);
    for i in (site + 2..n).rev() {
        right = transfer_right(&right, &bra.cores[i], &ket.cores[i]);
    }
    let (b1, b2) = (&bra.cores[site], &bra.cores[site + 1]);
    let (k1, k2) = (&ket.cores[site], &ket.cores[site + 1]);
    let bra_theta = b1.left_matrix() * b2.right_matrix(); // (y,s1) x (s2,y'')
    let ket_theta = k1.left_matrix() * k2.right_matrix(); // (x,t1) x (t2,x'')
    let (yl, yr) = (b1.left, b2.right);
    let (xl, xr) = (k1.left, k2.right);
    let mut f = Matrix4c::zeros();
    // G[y, t, y''] = sum_{x, x''} left[y, x] ket[x, t, x''] right[y'', x'']
    for t in 0..4 {
        let (t1, t2) = (t >> 1, t & 1);
        let kt = DMatrix::from_fn(xl, xr, |x, z| ket_theta[(2 * x + t1, t2 * xr + z)]);
        let g = &left * kt * right.transpose(); // y x y''
        for s in 0..4 {
            let (s1, s2) = (s >> 1, s & 1);
            let mut acc = ZERO;
            for y in 0..yl {
                for z in 0..yr {
                    acc += g[(y, z)] * bra_theta[(2 * y + s1, s2 * yr + z)].conj();
                }
            }
            f[(t, s)] = acc;
        }
    }
    Ok(f)
}

pub const MPS_FORMAT_VERSION: u32 = 1;
pub const ENDIANNESS_NOTE: &str = "big-endian: site 0 is the most significant bit";

/// On-disk layout of an MPS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpsFile {
    pub format_version: u32,
    pub num_sites: usize,
    pub bond_dims: Vec<usize>,
    pub endianness: String,
    #[serde(default)]
    pub orthogonality_center: Option<usize>,
    pub cores: Vec<CoreFile>,
}

/// One core as `(chi_left, 2, chi_right)` row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreFile {
    pub shape: [usize; 3],
    pub data: Vec<[f64; 2]>,
}
