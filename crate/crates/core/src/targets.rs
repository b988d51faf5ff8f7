//! Benchmark target states.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mps::{Core, Mps, STATEVECTOR_CAP};

/// Open-boundary rectangular lattice; site `(r, c)` maps to chain index
/// `r * cols + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid {rows}x{cols} needs at least two sites"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    /// Horizontal then vertical nearest-neighbour pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c + 1 < self.cols {
                    out.push((self.site(r, c), self.site(r, c + 1)));
                }
                if r + 1 < self.rows {
                    out.push((self.site(r, c), self.site(r + 1, c)));
                }
            }
        }
        out
    }
}

fn bit(idx: usize, site: usize, n: usize) -> usize {
    (idx >> (n - 1 - site)) & 1
}

/// `H v` for the spin-1/2 Heisenberg model `sum_<ij> S_i . S_j`.
pub fn heisenberg_matvec(grid: &GridSpec, v: &[f64], out: &mut [f64]) {
    let n = grid.num_sites();
    let edges = grid.edges();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (idx, &amp) in v.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        for &(i, j) in &edges {
            if bit(idx, i, n) == bit(idx, j, n) {
                out[idx] += 0.25 * amp;
            } else {
                out[idx] -= 0.25 * amp;
                let flipped = idx ^ (1 << (n - 1 - i)) ^ (1 << (n - 1 - j));
                out[flipped] += 0.5 * amp;
            }
        }
    }
}

/// `<v|H|v>` for a complex amplitude vector.
pub fn heisenberg_energy(grid: &GridSpec, amps: &[C64]) -> Result<f64> {
    if amps.len() != 1 << grid.num_sites() {
        return Err(Error::Shape("amplitude count does not match grid".into()));
    }
    let re: Vec<f64> = amps.iter().map(|z| z.re).collect();
    let im: Vec<f64> = amps.iter().map(|z| z.im).collect();
    let mut h = vec![0.0; amps.len()];
    let mut e = 0.0;
    heisenberg_matvec(grid, &re, &mut h);
    e += re.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
    heisenberg_matvec(grid, &im, &mut h);
    e += im.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
    let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    Ok(e / norm2)
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

const LANCZOS_KRYLOV: usize = 120;
const LANCZOS_RESTARTS: usize = 60;
const LANCZOS_TOL: f64 = 1e-11;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn normalize(w: &mut [f64]) -> f64 {
    let n = dot(w, w).sqrt();
    if n > 0.0 {
        w.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Lowest eigenpair of a real symmetric operator in the complement of
/// `deflate`, by restarted Lanczos with full reorthogonalization.
pub fn lanczos_lowest<F>(dim: usize, matvec: F, start: &[f64], deflate: &[Vec<f64>]) -> Result<Eigenpair>
where
    F: Fn(&[f64], &mut [f64]),
{
    if start.len() != dim {
        return Err(Error::Shape("start vector has the wrong length".into()));
    }
    let mut x = start.to_vec();
    orthogonalize(&mut x, deflate);
    if normalize(&mut x) == 0.0 {
        return Err(Error::InvalidArgument("start vector lies in the deflated space".into()));
    }
    let krylov = LANCZOS_KRYLOV.min(dim - deflate.len());
    let mut hw = vec![0.0; dim];
    let mut best = Eigenpair {
        value: f64::INFINITY,
        vector: x.clone(),
        residual: f64::INFINITY,
    };
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        loop {
            let v = basis.last().expect("non-empty basis");
            matvec(v, &mut hw);
            let a = dot(v, &hw);
            alpha.push(a);
            if basis.len() == krylov {
                break;
            }
            let scale = dot(&hw, &hw).sqrt();
            let mut w = hw.clone();
            orthogonalize(&mut w, deflate);
            orthogonalize(&mut w, &basis);
            let b = normalize(&mut w);
            // Invariant subspace reached; what remains is rounding noise.
            if b <= 1e-10 * scale {
                break;
            }
            beta.push(b);
            basis.push(w);
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let y = eig.eigenvectors.column(imin);
        let mut ritz = vec![0.0; dim];
        for (coef, v) in y.iter().zip(&basis) {
            ritz.iter_mut().zip(v).for_each(|(r, b)| *r += coef * b);
        }
        orthogonalize(&mut ritz, deflate);
        normalize(&mut ritz);
        matvec(&ritz, &mut hw);
        let value = dot(&ritz, &hw);
        let residual = hw
            .iter()
            .zip(&ritz)
            .map(|(h, r)| (h - value * r).powi(2))
            .sum::<f64>()
            .sqrt();
        best = Eigenpair {
            value,
            vector: ritz.clone(),
            residual,
        };
        if residual < LANCZOS_TOL {
            return Ok(best);
        }
        x = ritz;
    }
    if best.residual < 1e-8 {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            op: "lanczos",
            rows: dim,
            cols: dim,
        })
    }
}

/// Flip the sign so the first amplitude of magnitude at least `1e-8` times
/// the largest is positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&first) = v.iter().find(|x| x.abs() >= 1e-8 * max) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// First excited level from a deflated second solve.
    pub gap: f64,
    pub degenerate: bool,
    pub vector: Vec<f64>,
    pub mps: Mps,
}

/// Gap below which the ground space is reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

pub fn heisenberg_ground_state(grid: &GridSpec, max_chi: usize) -> Result<GroundState> {
    let n = grid.num_sites();
    if n > STATEVECTOR_CAP {
        return Err(Error::TooLarge {
            num_sites: n,
            cap: STATEVECTOR_CAP,
        });
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4865_6973);
    let start: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let matvec = |v: &[f64], out: &mut [f64]| heisenberg_matvec(grid, v, out);
    let ground = lanczos_lowest(dim, matvec, &start, &[])?;
    let gap = if dim > 1 {
        let excited = lanczos_lowest(dim, matvec, &start, std::slice::from_ref(&ground.vector))?;
        excited.value - ground.value
    } else {
        f64::INFINITY
    };
    let mut vector = ground.vector;
    fix_sign(&mut vector);
    let amps: Vec<C64> = vector.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mps = Mps::from_statevector(&amps, max_chi)?;
    Ok(GroundState {
        energy: ground.value,
        gap,
        degenerate: gap < DEGENERACY_GAP,
        vector,
        mps,
    })
}

/// Qubit carrying pixel `(r, c)`: pixels are read column by column.
pub fn bas_pixel_qubit(rows: usize, r: usize, c: usize) -> usize {
    c * rows + r
}

/// Basis indices of all bars-and-stripes images, sorted and deduplicated.
pub fn bas_patterns(rows: usize, cols: usize) -> Result<Vec<usize>> {
    let n = rows * cols;
    if rows == 0 || cols == 0 || n > STATEVECTOR_CAP {
        return Err(Error::InvalidArgument(format!("unsupported BAS size {rows}x{cols}")));
    }
    let encode = |pixel: &dyn Fn(usize, usize) -> bool| {
        let mut idx = 0usize;
        for r in 0..rows {
            for c in 0..cols {
                if pixel(r, c) {
                    idx |= 1 << (n - 1 - bas_pixel_qubit(rows, r, c));
                }
            }
        }
        idx
    };
    let mut out = Vec::new();
    for mask in 0..1usize << rows {
        out.push(encode(&|r, _| mask >> r & 1 == 1));
    }
    for mask in 0..1usize << cols {
        out.push(encode(&|_, c| mask >> c & 1 == 1));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn bas_superposition(rows: usize, cols: usize) -> Result<Mps> {
    let patterns = bas_patterns(rows, cols)?;
    let n = rows * cols;
    let amp = C64::new(1.0 / (patterns.len() as f64).sqrt(), 0.0);
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    for p in patterns {
        v[p] = amp;
    }
    Mps::from_statevector(&v, usize::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    /// Real standard normal entries.
    #[default]
    RealGaussian,
    /// Independent standard normal real and imaginary parts.
    ComplexGaussian,
    /// Absolute values of real standard normals.
    PositiveGaussian,
}

/// `min(max_chi, 2^min(i, N - i))` for bonds `i = 1..N-1`.
pub fn random_bond_profile(n: usize, max_chi: usize) -> Vec<usize> {
    (1..n)
        .map(|i| {
            let e = i.min(n - i);
            if e >= usize::BITS as usize - 1 {
                max_chi
            } else {
                max_chi.min(1 << e)
            }
        })
        .collect()
}

/// Real Gaussian cores, left-canonicalized and normalized.
pub fn random_mps(n: usize, max_chi: usize, seed: u64) -> Result<Mps> {
    random_mps_with(n, max_chi, seed, EntryDistribution::RealGaussian, true)
}

/// Random cores drawn entry by entry in row-major core order. With
/// `canonical = false` the raw, unnormalized cores are returned.
pub fn random_mps_with(
    n: usize,
    max_chi: usize,
    seed: u64,
    dist: EntryDistribution,
    canonical: bool,
) -> Result<Mps> {
    if n < 2 {
        return Err(Error::InvalidArgument("random MPS needs at least two sites".into()));
    }
    if max_chi == 0 {
        return Err(Error::InvalidArgument("max_chi must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bonds = vec![1];
    bonds.extend(random_bond_profile(n, max_chi));
    bonds.push(1);
    let mut cores = Vec::with_capacity(n);
    for j in 0..n {
        let (l, r) = (bonds[j], bonds[j + 1]);
        let data = (0..l * 2 * r)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                match dist {
                    EntryDistribution::RealGaussian => C64::new(x, 0.0),
                    EntryDistribution::PositiveGaussian => C64::new(x.abs(), 0.0),
                    EntryDistribution::ComplexGaussian => C64::new(x, rng.sample(StandardNormal)),
                }
            })
            .collect();
        cores.push(Core::new(l, r, data)?);
    }
    let mut psi = Mps::new(cores)?;
    if canonical {
        psi.left_canonicalize()?;
        psi.normalize()?;
    }
    Ok(psi)
}

/// Serializable description of a target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetDescriptor {
    HeisenbergGs {
        rows: usize,
        cols: usize,
        #[serde(default = "default_chi")]
        max_chi: usize,
    },
    BasSuperposition {
        rows: usize,
        cols: usize,
    },
    RandomMps {
        num_sites: usize,
        #[serde(default = "default_chi")]
        max_chi: usize,
        seed: u64,
        #[serde(default)]
        distribution: EntryDistribution,
    },
    ZeroState {
        num_sites: usize,
    },
    File {
        path: PathBuf,
    },
}

fn default_chi() -> usize {
    64
}

/// Short forms: `heisenberg:4x3[:chi]`, `bas:6x2`,
/// `random:N:chi:seed[:real|complex|positive]`, `zero:N`. Anything else is
/// read as a path to a saved MPS.
impl FromStr for TargetDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse target `{s}`"));
        let num = |x: &str| x.parse::<u64>().map_err(|_| bad());
        let grid = |x: &str| -> Result<(usize, usize)> {
            let (r, c) = x.split_once('x').ok_or_else(bad)?;
            Ok((num(r)? as usize, num(c)? as usize))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["heisenberg", g] | ["heisenberg", g, _] => {
                let (rows, cols) = grid(g)?;
                let max_chi = match parts.get(2) {
                    Some(c) => num(c)? as usize,
                    None => default_chi(),
                };
                Ok(TargetDescriptor::HeisenbergGs { rows, cols, max_chi })
            }
            ["bas", g] => {
                let (rows, cols) = grid(g)?;
                Ok(TargetDescriptor::BasSuperposition { rows, cols })
            }
            ["random", n, chi, seed] | ["random", n, chi, seed, _] => {
                let distribution = match parts.get(4).copied() {
                    None | Some("real") => EntryDistribution::RealGaussian,
                    Some("complex") => EntryDistribution::ComplexGaussian,
                    Some("positive") => EntryDistribution::PositiveGaussian,
                    Some(_) => return Err(bad()),
                };
                Ok(TargetDescriptor::RandomMps {
                    num_sites: num(n)? as usize,
                    max_chi: num(chi)? as usize,
                    seed: num(seed)?,
                    distribution,
                })
            }
            ["zero", n] => Ok(TargetDescriptor::ZeroState {
                num_sites: num(n)? as usize,
            }),
            [kind, ..] if ["heisenberg", "bas", "random", "zero"].contains(kind) => Err(bad()),
            _ => Ok(TargetDescriptor::File { path: PathBuf::from(s) }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub target_id: String,
    pub descriptor: TargetDescriptor,
    pub num_sites: usize,
    pub bond_dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate_ground_space: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl TargetDescriptor {
    /// The three 12-qubit benchmark targets.
    pub fn benchmark_set(seed: u64) -> Vec<TargetDescriptor> {
        vec![
            TargetDescriptor::HeisenbergGs {
                rows: 4,
                cols: 3,
                max_chi: 64,
            },
            TargetDescriptor::BasSuperposition { rows: 6, cols: 2 },
            TargetDescriptor::RandomMps {
                num_sites: 12,
                max_chi: 64,
                seed,
                distribution: EntryDistribution::RealGaussian,
            },
        ]
    }

    pub fn id(&self) -> String {
        match self {
            TargetDescriptor::HeisenbergGs { rows, cols, .. } => format!("heisenberg_{rows}x{cols}"),
            TargetDescriptor::BasSuperposition { rows, cols } => format!("bas_{rows}x{cols}"),
            TargetDescriptor::RandomMps {
                num_sites,
                max_chi,
                seed,
                distribution,
            } => {
                let tag = match distribution {
                    EntryDistribution::RealGaussian => "",
                    EntryDistribution::ComplexGaussian => "_complex",
                    EntryDistribution::PositiveGaussian => "_positive",
                };
                format!("random_n{num_sites}_chi{max_chi}_s{seed}{tag}")
            }
            TargetDescriptor::ZeroState { num_sites } => format!("zero_n{num_sites}"),
            TargetDescriptor::File { path } => {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("target");
                format!("file_{}", stem.strip_suffix(".mps").unwrap_or(stem))
            }
        }
    }

    pub fn build(&self) -> Result<(Mps, Provenance)> {
        let mut prov = Provenance {
            target_id: self.id(),
            descriptor: self.clone(),
            num_sites: 0,
            bond_dims: Vec::new(),
            energy: None,
            spectral_gap: None,
            degenerate_ground_space: None,
            pattern_count: None,
            notes: None,
        };
        let psi = match self {
            TargetDescriptor::HeisenbergGs { rows, cols, max_chi } => {
                let gs = heisenberg_ground_state(&GridSpec::new(*rows, *cols)?, *max_chi)?;
                prov.energy = Some(gs.energy);
                prov.spectral_gap = Some(gs.gap);
                prov.degenerate_ground_space = Some(gs.degenerate);
                prov.notes = Some("sites in row-major grid order".into());
                gs.mps
            }
            TargetDescriptor::BasSuperposition { rows, cols } => {
                prov.pattern_count = Some(bas_patterns(*rows, *cols)?.len());
                prov.notes = Some("pixels in column-major order".into());
                bas_superposition(*rows, *cols)?
            }
            TargetDescriptor::RandomMps {
                num_sites,
                max_chi,
                seed,
                distribution,
            } => random_mps_with(*num_sites, *max_chi, *seed, *distribution, true)?,
            TargetDescriptor::ZeroState { num_sites } => Mps::zero_state(*num_sites)?,
            TargetDescriptor::File { path } => Mps::load(path)?,
        };
        prov.num_sites = psi.num_sites();
        prov.bond_dims = psi.bond_dims();
        Ok((psi, prov))
    }
}

/// Write `<id>.mps.json` and `<id>.provenance.json` into `dir`.
pub fn save_target(dir: impl AsRef<Path>, psi: &Mps, prov: &Provenance) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.mps.json", prov.target_id));
    psi.save(&path)?;
    let side = dir.join(format!("{}.provenance.json", prov.target_id));
    std::fs::write(side, serde_json::to_string_pretty(prov)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_heisenberg(grid: &GridSpec) -> DMatrix<f64> {
        let dim = 1 << grid.num_sites();
        let mut h = DMatrix::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for j in 0..dim {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            heisenberg_matvec(grid, &e, &mut col);
            for i in 0..dim {
                h[(i, j)] = col[i];
            }
        }
        h
    }

    #[test]
    fn two_site_singlet() {
        let gs = heisenberg_ground_state(&GridSpec::new(1, 2).unwrap(), 4).unwrap();
        assert!((gs.energy + 0.75).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = gs.mps.to_statevector().unwrap();
        let overlap = (v[1] * h - v[2] * h).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
        assert!(!gs.degenerate);
    }

    #[test]
    fn two_by_two_matches_dense_diagonalization() {
        let grid = GridSpec::new(2, 2).unwrap();
        let eig = SymmetricEigen::new(dense_heisenberg(&grid));
        let e0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let gs = heisenberg_ground_state(&grid, 4).unwrap();
        let amps = gs.mps.to_statevector().unwrap();
        assert!((heisenberg_energy(&grid, &amps).unwrap() - e0).abs() < 1e-10);
        assert!((gs.energy - e0).abs() < 1e-10);
    }

    #[test]
    fn gap_on_degenerate_excited_level() {
        // The first excited level of the 3x2 ladder is a triplet, so the
        // deflated solve exhausts its Krylov space early.
        let grid = GridSpec::new(3, 2).unwrap();
        let mut levels: Vec<f64> = SymmetricEigen::new(dense_heisenberg(&grid)).eigenvalues.iter().cloned().collect();
        levels.sort_by(f64::total_cmp);
        let gs = heisenberg_ground_state(&grid, 8).unwrap();
        assert!((gs.energy - levels[0]).abs() < 1e-10);
        assert!((gs.gap - (levels[1] - levels[0])).abs() < 1e-9);
        assert!(!gs.degenerate);
    }

    #[test]
    fn grid_edges() {
        let g = GridSpec::new(4, 3).unwrap();
        assert_eq!(g.edges().len(), 4 * 2 + 3 * 3);
        assert!(GridSpec::new(1, 1).is_err());
    }

    #[test]
    fn bas_counts_match_brute_force() {
        for (rows, cols) in [(2, 2), (3, 2), (6, 2), (2, 3)] {
            let n = rows * cols;
            let mut brute = 0;
            for img in 0..1usize << n {
                let px = |r: usize, c: usize| img >> (r * cols + c) & 1;
                let rows_const = (0..rows).all(|r| (0..cols).all(|c| px(r, c) == px(r, 0)));
                let cols_const = (0..cols).all(|c| (0..rows).all(|r| px(r, c) == px(0, c)));
                brute += (rows_const || cols_const) as usize;
            }
            assert_eq!(bas_patterns(rows, cols).unwrap().len(), brute);
            assert_eq!(brute, (1 << rows) + (1 << cols) - 2);
        }
    }

    #[test]
    fn bas_amplitudes() {
        let psi = bas_superposition(2, 2).unwrap();
        let v = psi.to_statevector().unwrap();
        let a = 1.0 / 6f64.sqrt();
        let nonzero: Vec<_> = v.iter().filter(|z| z.norm() > 1e-12).collect();
        assert_eq!(nonzero.len(), 6);
        assert!(nonzero.iter().all(|z| (z.re - a).abs() < 1e-12 && z.im.abs() < 1e-12));
    }

    #[test]
    fn random_profile_and_determinism() {
        let a = random_mps(12, 64, 3).unwrap();
        assert_eq!(a.bond_dims(), vec![2, 4, 8, 16, 32, 64, 32, 16, 8, 4, 2]);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let b = random_mps(12, 64, 3).unwrap();
        assert_eq!(a.to_file(), b.to_file());
        assert_eq!(random_bond_profile(5, 3), vec![2, 3, 3, 2]);
    }

    #[test]
    fn signed_entries_decay_slower_than_positive() {
        let mut slower = 0;
        for seed in 0..5 {
            let s = random_mps_with(12, 64, seed, EntryDistribution::RealGaussian, true).unwrap();
            let p = random_mps_with(12, 64, seed, EntryDistribution::PositiveGaussian, true).unwrap();
            let es = s.schmidt_spectrum(5).unwrap().entropy();
            let ep = p.schmidt_spectrum(5).unwrap().entropy();
            slower += (es > ep) as usize;
        }
        assert_eq!(slower, 5);
    }

    #[test]
    fn descriptors_round_trip_and_build() {
        let set = TargetDescriptor::benchmark_set(7);
        let text = serde_json::to_string(&set).unwrap();
        let back: Vec<TargetDescriptor> = serde_json::from_str(&text).unwrap();
        assert_eq!(set, back);
        let (psi, prov) = TargetDescriptor::ZeroState { num_sites: 3 }.build().unwrap();
        assert_eq!(prov.target_id, "zero_n3");
        assert_eq!(psi.bond_dims(), vec![1, 1]);
        let (_, prov) = TargetDescriptor::BasSuperposition { rows: 2, cols: 2 }.build().unwrap();
        assert_eq!(prov.pattern_count, Some(6));
    }

    #[test]
    fn short_forms_parse() {
        let parse = |s: &str| s.parse::<TargetDescriptor>();
        assert_eq!(
            parse("heisenberg:4x3").unwrap(),
            TargetDescriptor::HeisenbergGs { rows: 4, cols: 3, max_chi: 64 }
        );
        assert_eq!(parse("bas:6x2").unwrap(), TargetDescriptor::BasSuperposition { rows: 6, cols: 2 });
        assert_eq!(
            parse("random:12:64:5:complex").unwrap(),
            TargetDescriptor::RandomMps {
                num_sites: 12,
                max_chi: 64,
                seed: 5,
                distribution: EntryDistribution::ComplexGaussian
            }
        );
        assert_eq!(parse("zero:3").unwrap(), TargetDescriptor::ZeroState { num_sites: 3 });
        assert_eq!(
            parse("out/t.mps.json").unwrap(),
            TargetDescriptor::File { path: "out/t.mps.json".into() }
        );
        assert!(parse("bas:6").is_err());
        assert!(parse("random:12:x:1").is_err());
    }

    #[test]
    fn saved_target_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let d = TargetDescriptor::RandomMps {
            num_sites: 5,
            max_chi: 4,
            seed: 1,
            distribution: EntryDistribution::ComplexGaussian,
        };
        let (psi, prov) = d.build().unwrap();
        let path = save_target(dir.path(), &psi, &prov).unwrap();
        let (loaded, _) = TargetDescriptor::File { path }.build().unwrap();
        assert_eq!(loaded.to_file().cores, psi.to_file().cores);
    }
}
