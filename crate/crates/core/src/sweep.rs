//! Forward-sweep optimization of every gate against its environment tensor.
//!
//! Gates are visited in application order (flattened index `m`, layer `K`
//! first). For gate `m` the cache holds
//! `left = U_{m-1} ... U_0 |0...0>` and
//! `right = U_{m+1}^dagger ... U_{M-1}^dagger |target>`, so the circuit
//! overlap is `<left| U_m^dagger |right> = tr(U_m^dagger F_m)`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::StopMode;
use crate::backend::{Backend, QuantumState};
use crate::circuit::{StaircaseCircuit, TwoQubitUnitary};
use crate::error::{Error, Result};
use crate::linalg::{
    closest_unitary, fractional_unitary_power, from_matrix4, to_matrix4, unitarity_deviation4,
    Matrix4c,
};
use crate::mps::Mps;
use crate::statevector::StateVector;

/// Unitarity drift that triggers re-projection onto the unitary group.
pub const REUNITARIZE_THRESHOLD: f64 = 1e-9;
/// Slack below which a fidelity drop is not counted as a decrease.
pub const DECREASE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub max_sweeps: usize,
    /// `None` disables the fidelity stop.
    pub target_fidelity: Option<f64>,
    pub learning_rate: f64,
    pub stop_mode: StopMode,
    /// Sweep cap for [`StopMode::Both`].
    pub hard_cap: usize,
    pub backend: Backend,
    /// Number of `(sweep, m)` points at which the cached environment is
    /// checked against one computed from scratch.
    pub coherence_probes: usize,
    pub probe_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            target_fidelity: Some(1.0 - 1e-12),
            learning_rate: 0.6,
            stop_mode: StopMode::Either,
            hard_cap: 100_000,
            backend: Backend::Auto,
            coherence_probes: 5,
            probe_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn with_sweeps(max_sweeps: usize, learning_rate: f64) -> Self {
        Self {
            max_sweeps,
            learning_rate,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        if let Some(f) = self.target_fidelity {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidArgument(format!("target fidelity {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    fn should_stop(&self, sweeps_done: usize, fidelity: f64) -> bool {
        let reached = self.target_fidelity.is_some_and(|t| fidelity >= t);
        let spent = sweeps_done >= self.max_sweeps;
        match self.stop_mode {
            StopMode::Either => spent || reached,
            StopMode::Both => (spent && (reached || self.target_fidelity.is_none()))
                || sweeps_done >= self.hard_cap,
        }
    }
}

/// Which gates a sweep updates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    /// Zero-based indices into [`StaircaseCircuit::layers`].
    Layers(Vec<usize>),
}

impl Scope {
    fn mask(&self, circuit: &StaircaseCircuit) -> Result<Vec<bool>> {
        let mut mask = vec![false; circuit.num_gates()];
        match self {
            Scope::All => mask.iter_mut().for_each(|x| *x = true),
            Scope::Layers(layers) => {
                for &l in layers {
                    if l >= circuit.num_layers() {
                        return Err(Error::InvalidArgument(format!(
                            "layer {l} outside a {}-layer circuit",
                            circuit.num_layers()
                        )));
                    }
                    for m in circuit.layer_gate_range(l) {
                        mask[m] = true;
                    }
                }
            }
        }
        Ok(mask)
    }
}

/// Partial contractions on both sides of the cursor gate.
#[derive(Debug, Clone)]
pub struct EnvironmentCache<S: QuantumState> {
    left: S,
    right: S,
    cursor: usize,
}

impl<S: QuantumState> EnvironmentCache<S> {
    /// Cache positioned at gate `start`.
    pub fn new(circuit: &StaircaseCircuit, target: &S, start: usize) -> Result<Self> {
        let total = circuit.num_gates();
        if start >= total {
            return Err(Error::InvalidArgument(format!(
                "cursor {start} outside a {total}-gate circuit"
            )));
        }
        if target.num_sites() != circuit.num_sites() {
            return Err(Error::Shape("circuit and target sizes differ".into()));
        }
        let mut left = S::zero_state(circuit.num_sites())?;
        for m in 0..start {
            let g = circuit.gate(m);
            left.apply_gate(g.matrix(), g.first_qubit(), false)?;
        }
        let mut right = target.clone();
        for m in (start + 1..total).rev() {
            let g = circuit.gate(m);
            right.apply_gate(g.matrix(), g.first_qubit(), true)?;
        }
        Ok(Self {
            left,
            right,
            cursor: start,
        })
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// `F_m`; `m` must equal the cursor.
    pub fn environment(&self, circuit: &StaircaseCircuit, m: usize) -> Result<Matrix4c> {
        if m != self.cursor {
            return Err(Error::Internal(format!(
                "environment requested at gate {m} with cache cursor at {}",
                self.cursor
            )));
        }
        S::environment(&self.left, &self.right, circuit.gate(m).first_qubit())
    }

    /// Move past gate `cursor`, whose (possibly updated) matrix is read from
    /// `circuit`.
    pub fn advance(&mut self, circuit: &StaircaseCircuit) -> Result<()> {
        let m = self.cursor;
        let g = circuit.gate(m);
        self.left.apply_gate(g.matrix(), g.first_qubit(), false)?;
        if m + 1 < circuit.num_gates() {
            let next = circuit.gate(m + 1);
            self.right.apply_gate(next.matrix(), next.first_qubit(), false)?;
        }
        self.cursor += 1;
        Ok(())
    }
}

/// `F_m` for the circuit's gate `m`, through a freshly built cache.
pub fn environment_tensor<S: QuantumState>(
    circuit: &StaircaseCircuit,
    target: &S,
    m: usize,
) -> Result<Matrix4c> {
    EnvironmentCache::new(circuit, target, m)?.environment(circuit, m)
}

#[derive(Debug, Clone)]
pub struct LocalUpdate {
    pub matrix: Matrix4c,
    pub degenerate: bool,
    pub branch_hazard: bool,
}

/// `U (U^dagger U_new)^r` with `U_new` the polar factor of `f`.
pub fn local_update(u: &Matrix4c, f: &Matrix4c, r: f64) -> Result<LocalUpdate> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("learning rate {r} outside [0, 1]")));
    }
    let polar = closest_unitary(&from_matrix4(f))?;
    let u_new = to_matrix4(&polar.unitary)?;
    if r == 1.0 {
        return Ok(LocalUpdate {
            matrix: u_new,
            degenerate: polar.degenerate,
            branch_hazard: false,
        });
    }
    if r == 0.0 {
        return Ok(LocalUpdate {
            matrix: *u,
            degenerate: polar.degenerate,
            branch_hazard: false,
        });
    }
    let step = fractional_unitary_power(&from_matrix4(&(u.adjoint() * u_new)), r)?;
    Ok(LocalUpdate {
        matrix: u * to_matrix4(&step.matrix)?,
        degenerate: polar.degenerate,
        branch_hazard: step.branch_hazard,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub sweep: usize,
    pub gate_index: usize,
    pub fidelity: f64,
    /// Seconds since the start of the optimization.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub fidelity: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub updates: u64,
    pub decreases: u64,
    pub reunitarizations: u64,
    pub degenerate_environments: u64,
    pub branch_hazards: u64,
    pub coherence_checks: u64,
    pub max_coherence_error: f64,
    /// Largest `| |tr(F U^dagger)| - circuit fidelity |` seen at a probe.
    pub max_identity_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrace {
    pub initial_fidelity: f64,
    pub updates: Vec<UpdateRecord>,
    pub sweeps: Vec<SweepRecord>,
    pub diagnostics: SweepDiagnostics,
}

impl FidelityTrace {
    pub fn final_fidelity(&self) -> f64 {
        self.sweeps
            .last()
            .map(|s| s.fidelity)
            .unwrap_or(self.initial_fidelity)
    }

    /// Rows `{sweep, gate_index, fidelity, wall_time}`, one per update.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sweep", "gate_index", "fidelity", "wall_time"])?;
        for u in &self.updates {
            w.write_record([
                u.sweep.to_string(),
                u.gate_index.to_string(),
                format!("{:.11e}", u.fidelity),
                format!("{:.6}", u.wall_time),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// What an observer sees before gate `gate_index` is replaced.
pub struct UpdateEvent<'a> {
    pub sweep: usize,
    pub gate_index: usize,
    pub circuit: &'a StaircaseCircuit,
    pub environment: &'a Matrix4c,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
}

pub fn sweep_optimize(
    circuit: &StaircaseCircuit,
    target: &Mps,
    cfg: &SweepConfig,
    scope: &Scope,
) -> Result<(StaircaseCircuit, FidelityTrace)> {
    sweep_optimize_observed(circuit, target, cfg, scope, |_| {})
}

/// [`sweep_optimize`] with a callback at every update.
pub fn sweep_optimize_observed<F>(
    circuit: &StaircaseCircuit,
    target: &Mps,
    cfg: &SweepConfig,
    scope: &Scope,
    observer: F,
) -> Result<(StaircaseCircuit, FidelityTrace)>
where
    F: FnMut(&UpdateEvent<'_>),
{
    if circuit.num_sites() != target.num_sites() {
        return Err(Error::Shape("circuit and target sizes differ".into()));
    }
    match cfg.backend.resolve(target.num_sites()) {
        Backend::Dense => {
            let t = StateVector::from_mps(target)?;
            sweep_optimize_in(circuit, &t, cfg, scope, observer)
        }
        _ => sweep_optimize_in(circuit, target, cfg, scope, observer),
    }
}

/// Backend-generic sweep loop.
pub fn sweep_optimize_in<S, F>(
    circuit: &StaircaseCircuit,
    target: &S,
    cfg: &SweepConfig,
    scope: &Scope,
    mut observer: F,
) -> Result<(StaircaseCircuit, FidelityTrace)>
where
    S: QuantumState,
    F: FnMut(&UpdateEvent<'_>),
{
    cfg.validate()?;
    let mut circuit = circuit.clone();
    let mut trace = FidelityTrace::default();
    let mask = scope.mask(&circuit)?;
    let (Some(first), Some(last)) = (
        mask.iter().position(|&x| x),
        mask.iter().rposition(|&x| x),
    ) else {
        return Ok((circuit, trace));
    };

    let probes = choose_probes(cfg, first, last);
    let clock = Instant::now();
    let mut sweeps_done = 0;
    loop {
        let mut cache = EnvironmentCache::new(&circuit, target, first)?;
        let f0 = cache.environment(&circuit, first)?;
        let fidelity_now = (circuit.gate(first).matrix().adjoint() * f0).trace().norm();
        if sweeps_done == 0 {
            trace.initial_fidelity = fidelity_now;
        }
        if cfg.should_stop(sweeps_done, fidelity_now) {
            break;
        }
        let sweep = sweeps_done + 1;
        let mut fidelity = fidelity_now;
        for m in first..=last {
            if mask[m] {
                let env = cache.environment(&circuit, m)?;
                let u = *circuit.gate(m).matrix();
                let before = (u.adjoint() * env).trace().norm();
                if probes.contains(&(sweep, m)) {
                    check_coherence(&circuit, target, m, &env, before, &mut trace.diagnostics)?;
                }
                let update = local_update(&u, &env, cfg.learning_rate)?;
                let mut next = update.matrix;
                if unitarity_deviation4(&next) > REUNITARIZE_THRESHOLD {
                    next = to_matrix4(&closest_unitary(&from_matrix4(&next))?.unitary)?;
                    trace.diagnostics.reunitarizations += 1;
                }
                let after = (next.adjoint() * env).trace().norm();
                observer(&UpdateEvent {
                    sweep,
                    gate_index: m,
                    circuit: &circuit,
                    environment: &env,
                    fidelity_before: before,
                    fidelity_after: after,
                });
                let d = &mut trace.diagnostics;
                d.updates += 1;
                d.degenerate_environments += update.degenerate as u64;
                d.branch_hazards += update.branch_hazard as u64;
                if after < before - DECREASE_SLACK {
                    d.decreases += 1;
                }
                circuit.gate_mut(m).set_matrix(next);
                fidelity = after;
                trace.updates.push(UpdateRecord {
                    sweep,
                    gate_index: m,
                    fidelity,
                    wall_time: clock.elapsed().as_secs_f64(),
                });
            }
            if m < last {
                cache.advance(&circuit)?;
            }
        }
        sweeps_done = sweep;
        trace.sweeps.push(SweepRecord {
            sweep,
            fidelity,
            wall_time: clock.elapsed().as_secs_f64(),
        });
    }
    Ok((circuit, trace))
}

fn choose_probes(cfg: &SweepConfig, first: usize, last: usize) -> Vec<(usize, usize)> {
    if cfg.coherence_probes == 0 || cfg.max_sweeps == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.probe_seed);
    (0..cfg.coherence_probes)
        .map(|_| {
            (
                rng.random_range(1..=cfg.max_sweeps),
                rng.random_range(first..=last),
            )
        })
        .collect()
}

fn check_coherence<S: QuantumState>(
    circuit: &StaircaseCircuit,
    target: &S,
    m: usize,
    cached: &Matrix4c,
    overlap: f64,
    diag: &mut SweepDiagnostics,
) -> Result<()> {
    let fresh = environment_tensor(circuit, target, m)?;
    let err = (fresh - cached).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fid = crate::circuit::circuit_fidelity_in(circuit, target)?;
    diag.coherence_checks += 1;
    diag.max_coherence_error = diag.max_coherence_error.max(err);
    diag.max_identity_error = diag.max_identity_error.max((overlap - fid).abs());
    Ok(())
}

/// Replace every gate by its polar factor if it has drifted from unitarity.
pub fn reunitarize(circuit: &mut StaircaseCircuit, threshold: f64) -> Result<usize> {
    let mut count = 0;
    for m in 0..circuit.num_gates() {
        let u = *circuit.gate(m).matrix();
        if unitarity_deviation4(&u) > threshold {
            let fixed = to_matrix4(&closest_unitary(&from_matrix4(&u))?.unitary)?;
            circuit.gate_mut(m).set_matrix(fixed);
            count += 1;
        }
    }
    Ok(count)
}

/// Replace a gate from outside the optimizer, keeping the unitarity check.
pub fn replace_gate(circuit: &mut StaircaseCircuit, m: usize, matrix: Matrix4c) -> Result<()> {
    let site = circuit.gate(m).first_qubit();
    let checked = TwoQubitUnitary::new(matrix, site)?;
    circuit.gate_mut(m).set_matrix(*checked.matrix());
    Ok(())
}
