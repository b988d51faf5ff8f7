//! The six decomposition protocols built from analytic disentangling and
//! sweep optimization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::disentangle_step;
use crate::backend::Backend;
use crate::circuit::{
    apply_layer_in, circuit_fidelity_in, identity_layer, random_layer_with, CircuitFile,
    LinearLayer, StaircaseCircuit,
};
use crate::error::{Error, Result};
use crate::linalg::TOL;
use crate::mps::Mps;
use crate::statevector::StateVector;
use crate::sweep::{sweep_optimize, FidelityTrace, Scope, SweepConfig, SweepDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "D_all")]
    DAll,
    #[serde(rename = "Iter_Di_Oi")]
    IterDiOi,
    #[serde(rename = "O_all")]
    OAll,
    #[serde(rename = "Dall_Oall")]
    DallOall,
    #[serde(rename = "Iter_Ii_Oall")]
    IterIiOall,
    #[serde(rename = "Iter_Di_Oall")]
    IterDiOall,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::DAll,
        ProtocolKind::IterDiOi,
        ProtocolKind::OAll,
        ProtocolKind::DallOall,
        ProtocolKind::IterIiOall,
        ProtocolKind::IterDiOall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::DAll => "D_all",
            ProtocolKind::IterDiOi => "Iter_Di_Oi",
            ProtocolKind::OAll => "O_all",
            ProtocolKind::DallOall => "Dall_Oall",
            ProtocolKind::IterIiOall => "Iter_Ii_Oall",
            ProtocolKind::IterDiOall => "Iter_Di_Oall",
        }
    }

    /// Grows the circuit one layer per stage.
    pub fn is_iterative(self) -> bool {
        matches!(
            self,
            ProtocolKind::IterDiOi | ProtocolKind::IterIiOall | ProtocolKind::IterDiOall
        )
    }

    /// Builds each depth from scratch with a single optimization run.
    pub fn is_flat_optimizer(self) -> bool {
        matches!(self, ProtocolKind::OAll | ProtocolKind::DallOall)
    }

    pub fn optimizes(self) -> bool {
        self != ProtocolKind::DAll
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name().replace('_', "").to_ascii_lowercase() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown protocol '{s}'")))
    }
}

/// Flat-protocol sweep count matching the layer-sweeps an iterative
/// protocol spends reaching depth `k`: `ceil(t (k + 1) / 2)`.
pub fn matched_budget(k: usize, t: usize) -> usize {
    (t * (k + 1)).div_ceil(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub num_layers: usize,
    pub sweeps_per_stage: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub budget_matching: bool,
    /// Smallest depth reported; depths below it are still built by the
    /// iterative kinds.
    pub min_layers: usize,
    pub retain_circuits: bool,
    pub backend: Backend,
    pub target_fidelity: Option<f64>,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, num_layers: usize, sweeps_per_stage: usize) -> Self {
        Self {
            kind,
            num_layers,
            sweeps_per_stage,
            learning_rate: 0.6,
            seed: 0,
            budget_matching: false,
            min_layers: 1,
            retain_circuits: false,
            backend: Backend::Auto,
            target_fidelity: SweepConfig::default().target_fidelity,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::InvalidArgument("protocols need at least one layer".into()));
        }
        if self.min_layers == 0 || self.min_layers > self.num_layers {
            return Err(Error::InvalidArgument(format!(
                "depth range {}..={} is empty",
                self.min_layers, self.num_layers
            )));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Sweeps run for one optimization at depth `k`.
    pub fn sweeps_at(&self, k: usize) -> usize {
        if self.budget_matching && self.kind.is_flat_optimizer() {
            matched_budget(k, self.sweeps_per_stage)
        } else {
            self.sweeps_per_stage
        }
    }

    fn sweep_config(&self, k: usize) -> SweepConfig {
        SweepConfig {
            max_sweeps: self.sweeps_at(k),
            target_fidelity: self.target_fidelity,
            learning_rate: self.learning_rate,
            backend: self.backend,
            probe_seed: self.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..SweepConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub k: usize,
    pub infidelity: f64,
    /// Gate updates performed so far, across all stages that fed this depth.
    pub cumulative_updates: u64,
    /// Wall time in seconds; cumulative for the iterative kinds.
    pub seconds: f64,
    pub sweeps: usize,
    /// Fidelity before the first sweep and after every sweep of the
    /// optimization that produced this depth.
    pub sweep_fidelities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SweepDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub target_id: String,
    pub kind: ProtocolKind,
    #[serde(rename = "K")]
    pub num_layers: usize,
    #[serde(rename = "T")]
    pub sweeps_per_stage: usize,
    pub r: f64,
    pub seed: u64,
    pub budget_matching: bool,
    pub rows: Vec<DepthRecord>,
}

impl DecompositionReport {
    pub fn final_row(&self) -> Option<&DepthRecord> {
        self.rows.last()
    }

    pub fn row(&self, k: usize) -> Option<&DepthRecord> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// `C^dagger |target>` with numerically zero singular values dropped.
pub fn circuit_residual(circuit: &StaircaseCircuit, target: &Mps) -> Result<Mps> {
    let mut residual = target.clone();
    for layer in circuit.layers() {
        apply_layer_in(&mut residual, layer, true)?;
    }
    residual.truncate(usize::MAX, TOL.sv_threshold)?;
    Ok(residual)
}

fn analytic_layers(target: &Mps, k: usize) -> Result<Vec<LinearLayer>> {
    let mut residual = target.clone();
    let mut layers = Vec::with_capacity(k);
    for _ in 0..k {
        let step = disentangle_step(&residual)?;
        residual = step.residual;
        layers.push(step.layer);
    }
    Ok(layers)
}

struct Evaluator {
    dense: Option<StateVector>,
    target: Mps,
}

impl Evaluator {
    fn new(target: &Mps, backend: Backend) -> Result<Self> {
        let dense = match backend.resolve(target.num_sites()) {
            Backend::Dense => Some(StateVector::from_mps(target)?),
            _ => None,
        };
        Ok(Self {
            dense,
            target: target.clone(),
        })
    }

    fn infidelity(&self, circuit: &StaircaseCircuit) -> Result<f64> {
        let f = match &self.dense {
            Some(t) => circuit_fidelity_in(circuit, t)?,
            None => circuit_fidelity_in(circuit, &self.target)?,
        };
        Ok((1.0 - f).clamp(0.0, 1.0))
    }
}

fn sweep_fidelities(trace: &FidelityTrace) -> Vec<f64> {
    std::iter::once(trace.initial_fidelity)
        .chain(trace.sweeps.iter().map(|s| s.fidelity))
        .collect()
}

pub fn run_protocol(target: &Mps, spec: &ProtocolSpec) -> Result<DecompositionReport> {
    spec.validate()?;
    let n = target.num_sites();
    if n < 2 {
        return Err(Error::InvalidArgument("protocols need at least two sites".into()));
    }
    let eval = Evaluator::new(target, spec.backend)?;
    let clock = Instant::now();
    let mut rows = Vec::new();
    let mut record = |k: usize,
                      circuit: &StaircaseCircuit,
                      updates: u64,
                      seconds: f64,
                      trace: Option<&FidelityTrace>|
     -> Result<()> {
        if k < spec.min_layers {
            return Ok(());
        }
        rows.push(DepthRecord {
            k,
            infidelity: eval.infidelity(circuit)?,
            cumulative_updates: updates,
            seconds,
            sweeps: trace.map_or(0, |t| t.sweeps.len()),
            sweep_fidelities: trace.map(sweep_fidelities).unwrap_or_default(),
            diagnostics: trace.map(|t| t.diagnostics),
            circuit: spec.retain_circuits.then(|| circuit.to_file()),
        });
        Ok(())
    };

    match spec.kind {
        ProtocolKind::DAll => {
            let layers = analytic_layers(target, spec.num_layers)?;
            let mut circuit = StaircaseCircuit::empty(n)?;
            for (i, layer) in layers.into_iter().enumerate() {
                circuit.push_layer(layer)?;
                record(i + 1, &circuit, 0, clock.elapsed().as_secs_f64(), None)?;
            }
        }
        ProtocolKind::OAll | ProtocolKind::DallOall => {
            let analytic = if spec.kind == ProtocolKind::DallOall {
                analytic_layers(target, spec.num_layers)?
            } else {
                Vec::new()
            };
            for k in spec.min_layers..=spec.num_layers {
                let start = Instant::now();
                let init = if spec.kind == ProtocolKind::OAll {
                    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                    (0..k)
                        .map(|_| random_layer_with(n, &mut rng))
                        .collect::<Result<Vec<_>>>()?
                } else {
                    analytic[..k].to_vec()
                };
                let circuit = StaircaseCircuit::new(n, init)?;
                let (circuit, trace) =
                    sweep_optimize(&circuit, target, &spec.sweep_config(k), &Scope::All)?;
                record(
                    k,
                    &circuit,
                    trace.diagnostics.updates,
                    start.elapsed().as_secs_f64(),
                    Some(&trace),
                )?;
            }
        }
        ProtocolKind::IterDiOi | ProtocolKind::IterIiOall | ProtocolKind::IterDiOall => {
            let mut circuit = StaircaseCircuit::empty(n)?;
            let mut updates = 0u64;
            for k in 1..=spec.num_layers {
                let layer = match spec.kind {
                    ProtocolKind::IterIiOall => identity_layer(n)?,
                    _ => disentangle_step(&circuit_residual(&circuit, target)?)?.layer,
                };
                circuit.push_layer(layer)?;
                let scope = match spec.kind {
                    ProtocolKind::IterDiOi => Scope::Layers(vec![k - 1]),
                    _ => Scope::All,
                };
                let (optimized, trace) =
                    sweep_optimize(&circuit, target, &spec.sweep_config(k), &scope)?;
                circuit = optimized;
                updates += trace.diagnostics.updates;
                record(k, &circuit, updates, clock.elapsed().as_secs_f64(), Some(&trace))?;
            }
        }
    }

    Ok(DecompositionReport {
        target_id: String::new(),
        kind: spec.kind,
        num_layers: spec.num_layers,
        sweeps_per_stage: spec.sweeps_per_stage,
        r: spec.learning_rate,
        seed: spec.seed,
        budget_matching: spec.budget_matching,
        rows,
    })
}

/// Closed-form update count at depth `k` when no early stop occurs.
pub fn expected_updates(kind: ProtocolKind, k: usize, t: usize, n: usize, budget_matching: bool) -> u64 {
    let per_layer = (n - 1) as u64;
    let (k64, t64) = (k as u64, t as u64);
    match kind {
        ProtocolKind::DAll => 0,
        ProtocolKind::OAll | ProtocolKind::DallOall => {
            let tp = if budget_matching { matched_budget(k, t) as u64 } else { t64 };
            k64 * tp * per_layer
        }
        ProtocolKind::IterDiOi => k64 * t64 * per_layer,
        ProtocolKind::IterIiOall | ProtocolKind::IterDiOall => k64 * (k64 + 1) / 2 * t64 * per_layer,
    }
}
