//! Analytic decomposition by iterative disentangling.
//!
//! Each iteration truncates the current residual to bond dimension 2, turns
//! that truncation into one exact staircase layer, and removes the layer by
//! applying its adjoint to the residual.

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_layer_in, LinearLayer, StaircaseCircuit, TwoQubitUnitary};
use crate::error::{Error, Result};
use crate::linalg::{complete_isometry, to_matrix4, ComplexMatrix, C64, TOL};
use crate::mps::Mps;

/// Convert a state with every bond at most 2 into the staircase layer that
/// prepares it from `|0...0>`.
///
/// The state is brought into right-canonical form; gate `(j, j+1)` for
/// `j < N-2` carries core `j` read as the isometry `(a_{j-1}) -> (s_j, a_j)`
/// with bonds zero-padded to 2, and the final gate carries the merged last
/// two cores. Each isometry is completed to a unitary and its columns placed
/// on the inputs where the incoming qubit `j+1` is `|0>`.
pub fn chi2_mps_to_layer(phi: &Mps) -> Result<LinearLayer> {
    let n = phi.num_sites();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "a staircase layer needs at least two sites".into(),
        ));
    }
    for (bond, dim) in phi.bond_dims().into_iter().enumerate() {
        if dim > 2 {
            return Err(Error::BondTooLarge { bond, dim });
        }
    }
    let mut rc = phi.clone();
    rc.right_canonicalize()?;
    rc.normalize()?;
    let cores = rc.cores();

    let mut gates = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let iso = if j == n - 2 {
            // (s_{N-2}, s_{N-1}) x a_{N-3}
            let a = &cores[n - 2];
            let b = &cores[n - 1];
            let l = a.left_dim();
            let mut q = ComplexMatrix::zeros(4, l);
            for x in 0..l {
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for m in 0..a.right_dim() {
                            acc += a.get(x, s1, m) * b.get(m, s2, 0);
                        }
                        q[(2 * s1 + s2, x)] = acc;
                    }
                }
            }
            q
        } else {
            // (s_j, a_j) x a_{j-1}, a_j zero-padded to 2
            let c = cores[j].padded(cores[j].left_dim(), 2);
            let l = cores[j].left_dim();
            let mut q = ComplexMatrix::zeros(4, l);
            for x in 0..l {
                for s in 0..2 {
                    for a in 0..2 {
                        q[(2 * s + a, x)] = c.get(x, s, a);
                    }
                }
            }
            q
        };
        let w = complete_isometry(&iso)?;
        // Input basis index 2*a + 0 receives column a of the isometry.
        let cols = iso.ncols();
        let mut order: Vec<usize> = (0..cols).map(|a| 2 * a).collect();
        let rest: Vec<usize> = (0..4).filter(|c| !order.contains(c)).collect();
        order.extend(rest);
        let mut u = ComplexMatrix::zeros(4, 4);
        for (src, &dst) in order.iter().enumerate() {
            u.set_column(dst, &w.column(src));
        }
        gates.push(TwoQubitUnitary::new(to_matrix4(&u)?, j)?);
    }
    LinearLayer::new(n, gates)
}

#[derive(Debug, Clone)]
pub struct DisentangleStep {
    pub layer: LinearLayer,
    /// `L^dagger |psi>`, cleaned of singular values below the default
    /// threshold and normalized.
    pub residual: Mps,
    /// `|<psi_{chi=2}|psi>|`.
    pub truncation_fidelity: f64,
}

/// One iteration: truncate to bond dimension 2, convert, disentangle.
pub fn disentangle_step(psi: &Mps) -> Result<DisentangleStep> {
    let mut truncated = psi.clone();
    truncated.truncate(2, TOL.sv_threshold)?;
    let truncation_fidelity = truncated.fidelity(psi)?;
    let layer = chi2_mps_to_layer(&truncated)?;
    let mut residual = psi.clone();
    apply_layer_in(&mut residual, &layer, true)?;
    residual.truncate(usize::MAX, TOL.sv_threshold)?;
    Ok(DisentangleStep {
        layer,
        residual,
        truncation_fidelity,
    })
}

/// How the iteration count and fidelity target combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Stop as soon as the budget is spent or the target is reached.
    #[default]
    Either,
    /// Continue until the budget is spent and the target is reached, up to a
    /// hard cap on iterations.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    pub max_layers: Option<usize>,
    pub target_fidelity: Option<f64>,
    pub stop_mode: StopMode,
    /// Iteration cap for [`StopMode::Both`] and fidelity-only runs.
    pub hard_cap: usize,
}

impl AnalyticConfig {
    pub fn layers(k: usize) -> Self {
        Self {
            max_layers: Some(k),
            target_fidelity: None,
            stop_mode: StopMode::Either,
            hard_cap: 1000,
        }
    }

    pub fn fidelity(target: f64) -> Self {
        Self {
            max_layers: None,
            target_fidelity: Some(target),
            stop_mode: StopMode::Either,
            hard_cap: 1000,
        }
    }
}

/// Fidelity treated as "already there" when no explicit target is given.
pub const DEFAULT_TARGET_FIDELITY: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentangleRecord {
    pub iteration: usize,
    /// `|<0...0|psi^(k)>|`.
    pub fidelity_to_zero: f64,
    pub bond_dims: Vec<usize>,
    /// `|<psi^(k-1)_{chi=2}|psi^(k-1)>|` for the truncation that produced
    /// layer `k`.
    pub truncation_fidelity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DisentangleTrace {
    pub records: Vec<DisentangleRecord>,
    pub initial_fidelity_to_zero: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyticDecomposition {
    pub circuit: StaircaseCircuit,
    pub trace: DisentangleTrace,
    /// `psi^(K)`.
    pub residual: Mps,
}

impl AnalyticDecomposition {
    pub fn final_fidelity(&self) -> f64 {
        self.trace
            .records
            .last()
            .map(|r| r.fidelity_to_zero)
            .unwrap_or(self.trace.initial_fidelity_to_zero)
    }
}

/// Repeated disentangling; layer extracted at iteration `k` becomes `L_k`.
pub fn analytic_decompose(psi: &Mps, cfg: &AnalyticConfig) -> Result<AnalyticDecomposition> {
    let n = psi.num_sites();
    let budget = cfg.max_layers.unwrap_or(0);
    if budget == 0 && cfg.target_fidelity.is_none() {
        return Err(Error::InvalidArgument(
            "analytic decomposition needs a layer budget or a target fidelity".into(),
        ));
    }
    if let Some(f) = cfg.target_fidelity {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidArgument(format!("target fidelity {f} outside (0, 1]")));
        }
    }
    let target = cfg.target_fidelity.unwrap_or(DEFAULT_TARGET_FIDELITY);
    let zero = Mps::zero_state(n)?;

    let mut residual = psi.clone();
    let mut circuit = StaircaseCircuit::empty(n)?;
    let mut trace = DisentangleTrace {
        records: Vec::new(),
        initial_fidelity_to_zero: zero.fidelity(&residual)?,
    };
    loop {
        let k = circuit.num_layers();
        let f = trace
            .records
            .last()
            .map(|r| r.fidelity_to_zero)
            .unwrap_or(trace.initial_fidelity_to_zero);
        let budget_spent = cfg.max_layers.is_none_or(|kmax| k >= kmax);
        let reached = f >= target && k > 0;
        let stop = match cfg.stop_mode {
            StopMode::Either => {
                (cfg.max_layers.is_some() && budget_spent)
                    || (reached && (cfg.target_fidelity.is_some() || cfg.max_layers.is_some()))
            }
            StopMode::Both => budget_spent && reached,
        };
        if stop || k >= cfg.hard_cap {
            break;
        }
        let step = disentangle_step(&residual)?;
        residual = step.residual;
        circuit.push_layer(step.layer)?;
        trace.records.push(DisentangleRecord {
            iteration: k + 1,
            fidelity_to_zero: zero.fidelity(&residual)?,
            bond_dims: residual.bond_dims(),
            truncation_fidelity: step.truncation_fidelity,
        });
    }
    Ok(AnalyticDecomposition {
        circuit,
        trace,
        residual,
    })
}
