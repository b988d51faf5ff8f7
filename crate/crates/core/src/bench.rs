//! Benchmark harness: protocol x target x sweep-count grids, summary tables,
//! plot-ready output and cost estimates.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::mps::Mps;
use crate::protocols::{matched_budget, run_protocol, DecompositionReport, ProtocolKind, ProtocolSpec};
use crate::targets::{save_target, TargetDescriptor};

fn default_sweeps() -> Vec<usize> {
    vec![10, 100, 1000]
}

fn default_rate() -> f64 {
    0.6
}

fn default_true() -> bool {
    true
}

fn default_k_min() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("bench_out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub targets: Vec<TargetDescriptor>,
    pub kinds: Vec<ProtocolKind>,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    pub k_max: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: Vec<usize>,
    #[serde(default = "default_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub budget_matching: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_true")]
    pub retain_circuits: bool,
    #[serde(default)]
    pub backend: Backend,
}

impl BenchmarkPlan {
    /// The full 12-qubit study over all protocols.
    pub fn standard(k_max: usize, sweeps: Vec<usize>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            targets: TargetDescriptor::benchmark_set(0),
            kinds: ProtocolKind::ALL.to_vec(),
            k_min: 1,
            k_max,
            sweeps,
            learning_rate: 0.6,
            seed: 0,
            budget_matching: true,
            output_dir: output_dir.into(),
            threads: 0,
            retain_circuits: true,
            backend: Backend::Auto,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() || self.kinds.is_empty() {
            return Err(Error::InvalidArgument("plan needs targets and protocol kinds".into()));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::InvalidArgument(format!(
                "depth range {}..={} is invalid",
                self.k_min, self.k_max
            )));
        }
        if self.sweeps.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one sweep count".into()));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn spec(&self, kind: ProtocolKind, sweeps: usize) -> ProtocolSpec {
        ProtocolSpec {
            kind,
            num_layers: self.k_max,
            sweeps_per_stage: sweeps,
            learning_rate: self.learning_rate,
            seed: self.seed,
            budget_matching: self.budget_matching,
            min_layers: self.k_min,
            retain_circuits: self.retain_circuits,
            backend: self.backend,
            ..ProtocolSpec::new(kind, self.k_max, sweeps)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub target_id: String,
    pub kind: ProtocolKind,
    pub sweeps: usize,
}

impl Cell {
    pub fn file_stem(&self) -> String {
        format!("{}_{}_T{}", self.target_id, self.kind.name(), self.sweeps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub target_id: String,
    pub kind: Option<ProtocolKind>,
    pub sweeps: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub target: String,
    pub kind: ProtocolKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub sweeps: usize,
    pub infidelity: f64,
    pub updates: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub reports: Vec<(Cell, DecompositionReport)>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

pub const SUMMARY_HEADER: [&str; 7] = ["target", "kind", "K", "T", "infidelity", "updates", "seconds"];

/// Twelve significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.target.clone(),
            r.kind.name().to_string(),
            r.k.to_string(),
            r.sweeps.to_string(),
            format_value(r.infidelity),
            r.updates.to_string(),
            format!("{:.6}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let parse_err = |what: &str| Error::Format(format!("bad {what} in summary row {rec:?}"));
        out.push(SummaryRow {
            target: field(0).to_string(),
            kind: field(1).parse()?,
            k: field(2).parse().map_err(|_| parse_err("K"))?,
            sweeps: field(3).parse().map_err(|_| parse_err("T"))?,
            infidelity: field(4).parse().map_err(|_| parse_err("infidelity"))?,
            updates: field(5).parse().map_err(|_| parse_err("updates"))?,
            seconds: field(6).parse().map_err(|_| parse_err("seconds"))?,
        });
    }
    Ok(out)
}

/// Run every `(target, kind, T)` cell, writing one report per cell, the
/// retained circuits, the targets, `summary.csv` and `failures.json` under
/// the plan's output directory. Cell failures are recorded, not fatal.
pub fn run_benchmark(plan: &BenchmarkPlan) -> Result<BenchmarkOutcome> {
    plan.validate()?;
    let out = &plan.output_dir;
    for sub in ["reports", "circuits", "targets"] {
        std::fs::create_dir_all(out.join(sub))?;
    }

    let mut failures = Vec::new();
    let mut built: Vec<(String, Mps)> = Vec::new();
    for desc in &plan.targets {
        let id = desc.id();
        match desc.build().and_then(|(psi, prov)| {
            save_target(out.join("targets"), &psi, &prov)?;
            Ok(psi)
        }) {
            Ok(psi) => built.push((id, psi)),
            Err(e) => failures.push(CellFailure {
                target_id: id,
                kind: None,
                sweeps: None,
                message: e.to_string(),
            }),
        }
    }

    let mut jobs = Vec::new();
    for (ti, (id, _)) in built.iter().enumerate() {
        for &kind in &plan.kinds {
            for &t in &plan.sweeps {
                jobs.push((
                    ti,
                    Cell {
                        target_id: id.clone(),
                        kind,
                        sweeps: t,
                    },
                ));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let results: Vec<(Cell, Result<DecompositionReport>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(ti, cell)| {
                let psi = &built[*ti].1;
                let res = run_cell(plan, cell, psi);
                (cell.clone(), res)
            })
            .collect()
    });

    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for (cell, res) in results {
        match res {
            Ok(rep) => {
                for row in &rep.rows {
                    summary.push(SummaryRow {
                        target: cell.target_id.clone(),
                        kind: cell.kind,
                        k: row.k,
                        sweeps: cell.sweeps,
                        infidelity: row.infidelity,
                        updates: row.cumulative_updates,
                        seconds: row.seconds,
                    });
                }
                reports.push((cell, rep));
            }
            Err(e) => failures.push(CellFailure {
                target_id: cell.target_id.clone(),
                kind: Some(cell.kind),
                sweeps: Some(cell.sweeps),
                message: e.to_string(),
            }),
        }
    }

    let summary_path = out.join("summary.csv");
    write_summary_csv(&summary, &summary_path)?;
    std::fs::write(out.join("failures.json"), serde_json::to_string_pretty(&failures)?)?;
    Ok(BenchmarkOutcome {
        reports,
        failures,
        summary,
        summary_path,
    })
}

fn run_cell(plan: &BenchmarkPlan, cell: &Cell, psi: &Mps) -> Result<DecompositionReport> {
    let mut rep = run_protocol(psi, &plan.spec(cell.kind, cell.sweeps))?;
    rep.target_id = cell.target_id.clone();
    let stem = cell.file_stem();
    if plan.retain_circuits {
        for row in &mut rep.rows {
            if let Some(c) = row.circuit.take() {
                let path = plan.output_dir.join("circuits").join(format!("{stem}_K{}.json", row.k));
                std::fs::write(path, serde_json::to_string(&c)?)?;
            }
        }
    }
    rep.save(plan.output_dir.join("reports").join(format!("{stem}.json")))?;
    Ok(rep)
}

/// Path of the persisted circuit for a cell and depth.
pub fn circuit_path(output_dir: impl AsRef<Path>, cell: &Cell, k: usize) -> PathBuf {
    output_dir
        .as_ref()
        .join("circuits")
        .join(format!("{}_K{k}.json", cell.file_stem()))
}

/// Abstract operation counts in units of one `chi^3` contraction per site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub decomposition_cost: u128,
    pub optimization_cost: u128,
    pub sequential_optimization_cost: u128,
    /// `ceil(log2 chi_max)`.
    pub k_min: u32,
    /// Sweeps per flat optimization.
    pub flat_sweeps: usize,
}

impl CostEstimate {
    /// Cost charged to one protocol at depth `K`.
    pub fn for_kind(&self, kind: ProtocolKind, k: usize, t: usize, n: usize, chi: usize) -> u128 {
        let unit = n as u128 * (chi as u128).pow(3);
        match kind {
            ProtocolKind::DAll => self.decomposition_cost,
            ProtocolKind::OAll => self.optimization_cost,
            ProtocolKind::DallOall => self.decomposition_cost + self.optimization_cost,
            ProtocolKind::IterDiOi => self.decomposition_cost + unit * (k * t) as u128,
            ProtocolKind::IterIiOall => self.sequential_optimization_cost,
            ProtocolKind::IterDiOall => self.decomposition_cost + self.sequential_optimization_cost,
        }
    }
}

pub fn estimate_cost(n: usize, chi: usize, k: usize, t: usize, budget_matching: bool) -> CostEstimate {
    let unit = n as u128 * (chi as u128).pow(3);
    let flat_sweeps = if budget_matching { matched_budget(k, t) } else { t };
    let k128 = k as u128;
    CostEstimate {
        decomposition_cost: unit * k128,
        optimization_cost: unit * k128 * flat_sweeps as u128,
        sequential_optimization_cost: unit * (k128 * (k128 + 1) / 2) * t as u128,
        k_min: if chi <= 1 { 0 } else { usize::BITS - (chi - 1).leading_zeros() },
        flat_sweeps,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub files: Vec<PathBuf>,
    pub merged: PathBuf,
    pub series: usize,
}

const PLOT_HEADER: &str = "# infidelity 1 - f against circuit depth K; plot on a log-scale infidelity axis.\n\
# is_point = 1 marks the value at depth K; is_point = 0 rows are the optimization\n\
# trace for that depth, spread over positions (K - 1, K].\n";

/// Long-format tables `(kind, K, position, infidelity, is_point)`, one per
/// `(target, T)` plus a merged table over everything.
pub fn emit_plot_data(reports: &[DecompositionReport], out_dir: impl AsRef<Path>) -> Result<PlotData> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to plot".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut groups: Vec<((String, usize), Vec<&DecompositionReport>)> = Vec::new();
    for rep in reports {
        let key = (rep.target_id.clone(), rep.sweeps_per_stage);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(rep),
            None => groups.push((key, vec![rep])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));

    let mut merged = String::from(PLOT_HEADER);
    merged.push_str("target,T,kind,K,position,infidelity,is_point\n");
    let mut series = BTreeSet::new();
    let mut files = Vec::new();
    for ((target, t), reps) in &groups {
        let mut text = String::from(PLOT_HEADER);
        text.push_str("kind,K,position,infidelity,is_point\n");
        for rep in reps {
            series.insert((target.clone(), *t, rep.kind));
            for line in plot_lines(rep) {
                let _ = writeln!(text, "{line}");
                let _ = writeln!(merged, "{target},{t},{line}");
            }
        }
        let path = out_dir.join(format!("plot_{target}_T{t}.csv"));
        std::fs::write(&path, text)?;
        files.push(path);
    }
    let merged_path = out_dir.join("plot_all.csv");
    std::fs::write(&merged_path, merged)?;
    Ok(PlotData {
        files,
        merged: merged_path,
        series: series.len(),
    })
}

fn plot_lines(rep: &DecompositionReport) -> Vec<String> {
    let kind = rep.kind.name();
    let mut rows: Vec<_> = rep.rows.iter().collect();
    rows.sort_by_key(|r| r.k);
    let mut out = Vec::new();
    for row in rows {
        let k = row.k as f64;
        let steps = row.sweep_fidelities.len().saturating_sub(1);
        if rep.kind.optimizes() && steps > 0 {
            for (j, f) in row.sweep_fidelities.iter().enumerate() {
                let pos = k - 1.0 + j as f64 / steps as f64;
                out.push(format!(
                    "{kind},{},{pos:.6},{},0",
                    row.k,
                    format_value((1.0 - f).clamp(0.0, 1.0))
                ));
            }
        }
        out.push(format!(
            "{kind},{},{:.6},{},1",
            row.k,
            k,
            format_value(row.infidelity)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_plan(dir: &Path) -> BenchmarkPlan {
        BenchmarkPlan {
            targets: vec![TargetDescriptor::ZeroState { num_sites: 4 }],
            kinds: vec![ProtocolKind::DAll],
            k_min: 1,
            k_max: 1,
            sweeps: vec![10],
            learning_rate: 0.6,
            seed: 0,
            budget_matching: true,
            output_dir: dir.to_path_buf(),
            threads: 1,
            retain_circuits: true,
            backend: Backend::Auto,
        }
    }

    #[test]
    fn zero_target_plan() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_benchmark(&zero_plan(dir.path())).unwrap();
        assert!(out.failures.is_empty());
        let rows = read_summary_csv(&out.summary_path).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].infidelity <= 1e-12);
        let text = std::fs::read_to_string(&out.summary_path).unwrap();
        assert!(text.starts_with("target,kind,K,T,infidelity,updates,seconds\n"));
    }

    #[test]
    fn failures_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = zero_plan(dir.path());
        plan.targets.push(TargetDescriptor::File {
            path: dir.path().join("missing.json"),
        });
        let out = run_benchmark(&plan).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.summary.len(), 1);
    }

    #[test]
    fn plan_toml_round_trip_and_defaults() {
        let text = r#"
            kinds = ["D_all", "Iter_Di_Oall"]
            k_max = 3
            [[targets]]
            kind = "random_mps"
            num_sites = 6
            seed = 2
        "#;
        let plan = BenchmarkPlan::from_toml_str(text).unwrap();
        assert_eq!(plan.sweeps, vec![10, 100, 1000]);
        assert_eq!(plan.learning_rate, 0.6);
        assert!(plan.budget_matching);
        let back = BenchmarkPlan::from_toml_str(&plan.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, plan);
        assert!(BenchmarkPlan::from_toml_str("kinds = []\nk_max = 1\ntargets = []").is_err());
    }

    #[test]
    fn cost_examples() {
        let c = estimate_cost(12, 64, 1, 10, false);
        assert_eq!(c.optimization_cost, c.sequential_optimization_cost);
        assert_eq!(c.k_min, 6);
        let a = estimate_cost(12, 32, 4, 10, false);
        let b = estimate_cost(12, 64, 4, 10, false);
        assert_eq!(b.decomposition_cost, 8 * a.decomposition_cost);
        assert_eq!(b.optimization_cost, 8 * a.optimization_cost);
        assert_eq!(b.sequential_optimization_cost, 8 * a.sequential_optimization_cost);
        for k in 1..8 {
            let e = estimate_cost(10, 8, k, 7, false);
            assert_eq!(2 * e.sequential_optimization_cost, (k as u128 + 1) * e.optimization_cost);
            assert!(e.sequential_optimization_cost >= e.optimization_cost);
        }
        assert_eq!(estimate_cost(4, 1, 1, 1, false).k_min, 0);
        assert_eq!(estimate_cost(4, 5, 1, 1, false).k_min, 3);
    }

    #[test]
    fn plot_tables() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_benchmark(&zero_plan(dir.path())).unwrap();
        let reps: Vec<_> = out.reports.into_iter().map(|(_, r)| r).collect();
        let plot = emit_plot_data(&reps, dir.path().join("plots")).unwrap();
        assert_eq!(plot.series, 1);
        assert_eq!(plot.files.len(), 1);
        let text = std::fs::read_to_string(&plot.files[0]).unwrap();
        let data: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 1);
        assert!(data[0].ends_with(",1"));
        assert!(emit_plot_data(&[], dir.path()).is_err());
    }
}
