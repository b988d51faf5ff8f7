use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stairmps::targets::save_target;
use stairmps::{
    emit_plot_data, estimate_cost, run_benchmark, run_protocol, Backend, BenchmarkPlan, ProtocolKind, ProtocolSpec,
    TargetDescriptor,
};

/// Decompose matrix product states into staircase circuits of two-qubit gates.
#[derive(Debug, Parser)]
#[command(name = "stairmps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose one target and write the deepest circuit.
    Decompose(DecomposeArgs),
    /// Run a benchmark plan.
    Bench(BenchArgs),
    /// Build targets and save them with provenance.
    Targets(TargetsArgs),
    /// Print abstract operation counts for every protocol.
    Estimate(EstimateArgs),
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    /// Saved MPS file or a short form such as `heisenberg:4x3`,
    /// `bas:6x2`, `random:12:64:7` or `zero:12`.
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "Iter_Di_Oall")]
    protocol: ProtocolKind,
    #[arg(long, default_value_t = 6)]
    layers: usize,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.6)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give flat optimizers T (K + 1) / 2 sweeps at depth K.
    #[arg(long)]
    budget_match: bool,
    /// Circuit file; the report goes next to it as `<stem>.report.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_backend, default_value = "auto")]
    backend: Backend,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML plan file.
    #[arg(required_unless_present = "print_standard")]
    plan: Option<PathBuf>,
    /// Overrides the plan's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the plan's worker count.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the standard plan as TOML and exit.
    #[arg(long)]
    print_standard: bool,
}

#[derive(Debug, Args)]
struct TargetsArgs {
    /// Targets to build; defaults to the standard benchmark set.
    #[arg(long)]
    target: Vec<String>,
    /// Seed of the random target in the standard set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "targets")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long, default_value_t = 12)]
    sites: usize,
    #[arg(long, default_value_t = 64)]
    chi: usize,
    #[arg(long, default_value_t = 6)]
    layers: usize,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long)]
    budget_match: bool,
    #[arg(long)]
    protocol: Option<ProtocolKind>,
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(Backend::Auto),
        "mps" => Ok(Backend::Mps),
        "dense" => Ok(Backend::Dense),
        _ => Err(format!("unknown backend `{s}`, expected auto, mps or dense")),
    }
}

fn report_path(circuit: &Path) -> PathBuf {
    let name = circuit.file_name().and_then(|s| s.to_str()).unwrap_or("circuit");
    let stem = name.strip_suffix(".json").unwrap_or(name);
    let stem = stem.strip_suffix(".circuit").unwrap_or(stem);
    circuit.with_file_name(format!("{stem}.report.json"))
}

fn decompose(args: DecomposeArgs) -> Result<()> {
    let desc: TargetDescriptor = args.target.parse()?;
    let (psi, prov) = desc.build().with_context(|| format!("building target {}", args.target))?;
    let spec = ProtocolSpec {
        learning_rate: args.learning_rate,
        seed: args.seed,
        budget_matching: args.budget_match,
        retain_circuits: true,
        backend: args.backend,
        ..ProtocolSpec::new(args.protocol, args.layers, args.sweeps)
    };
    let mut report = run_protocol(&psi, &spec)?;
    report.target_id = prov.target_id.clone();
    println!(
        "target {} ({} sites, bonds {:?}), {} K={} T={}",
        prov.target_id, prov.num_sites, prov.bond_dims, args.protocol, args.layers, args.sweeps
    );
    println!("K,infidelity,updates,seconds");
    for row in &report.rows {
        println!("{},{:.11e},{},{:.3}", row.k, row.infidelity, row.cumulative_updates, row.seconds);
    }
    let circuit = report
        .rows
        .last_mut()
        .and_then(|r| r.circuit.take())
        .context("protocol produced no circuit")?;
    for row in &mut report.rows {
        row.circuit = None;
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&circuit)?)?;
    let rep = report_path(&args.out);
    report.save(&rep)?;
    println!("wrote {} and {}", args.out.display(), rep.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.print_standard {
        print!("{}", BenchmarkPlan::standard(6, vec![10, 100, 1000], "bench_out").to_toml_string()?);
        return Ok(());
    }
    let path = args.plan.context("no plan file given")?;
    let mut plan = BenchmarkPlan::load(&path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(out) = args.out {
        plan.output_dir = out;
    }
    if let Some(t) = args.threads {
        plan.threads = t;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    let outcome = run_benchmark(&plan)?;
    let reports: Vec<_> = outcome.reports.iter().map(|(_, r)| r.clone()).collect();
    if !reports.is_empty() {
        let plots = emit_plot_data(&reports, plan.output_dir.join("plots"))?;
        println!("{} plot series in {}", plots.series, plots.merged.display());
    }
    println!("{} cells, summary in {}", outcome.reports.len(), outcome.summary_path.display());
    for f in &outcome.failures {
        eprintln!(
            "failed: {} {} T={}: {}",
            f.target_id,
            f.kind.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            f.sweeps.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            f.message
        );
    }
    if !outcome.failures.is_empty() {
        bail!("{} cell(s) failed", outcome.failures.len());
    }
    Ok(())
}

fn targets(args: TargetsArgs) -> Result<()> {
    let descs: Vec<TargetDescriptor> = if args.target.is_empty() {
        TargetDescriptor::benchmark_set(args.seed)
    } else {
        args.target.iter().map(|s| s.parse()).collect::<stairmps::Result<_>>()?
    };
    std::fs::create_dir_all(&args.out)?;
    for d in descs {
        let (psi, prov) = d.build().with_context(|| format!("building {}", d.id()))?;
        let path = save_target(&args.out, &psi, &prov)?;
        let mut line = format!("{} -> {} bonds {:?}", prov.target_id, path.display(), prov.bond_dims);
        if let Some(e) = prov.energy {
            line.push_str(&format!(" energy {e:.12}"));
        }
        if let Some(p) = prov.pattern_count {
            line.push_str(&format!(" patterns {p}"));
        }
        println!("{line}");
    }
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    if args.sites < 2 || args.chi == 0 || args.layers == 0 || args.sweeps == 0 {
        bail!("estimate needs N >= 2 and positive chi, K and T");
    }
    let cost = estimate_cost(args.sites, args.chi, args.layers, args.sweeps, args.budget_match);
    println!(
        "N={} chi={} K={} T={} flat sweeps T'={} K_min={}",
        args.sites, args.chi, args.layers, args.sweeps, cost.flat_sweeps, cost.k_min
    );
    println!("decomposition {}", cost.decomposition_cost);
    println!("optimization {}", cost.optimization_cost);
    println!("sequential optimization {}", cost.sequential_optimization_cost);
    let kinds: Vec<ProtocolKind> = match args.protocol {
        Some(k) => vec![k],
        None => ProtocolKind::ALL.to_vec(),
    };
    for k in kinds {
        println!("{k} {}", cost.for_kind(k, args.layers, args.sweeps, args.sites, args.chi));
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Decompose(a) => decompose(a),
        Command::Bench(a) => bench(a),
        Command::Targets(a) => targets(a),
        Command::Estimate(a) => estimate(a),
    }
}
