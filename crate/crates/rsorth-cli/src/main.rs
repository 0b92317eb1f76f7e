use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rsorth::channel::{effective_channel, generate_iid_rayleigh};
use rsorth::estimation::{end_to_end_configure, pilot_count, EstimatedQuantities, PilotPlan};
use rsorth::io::{estimation_report_to_json, rs_config_to_json};
use rsorth::linalg::random_semi_unitary;
use rsorth::orthogonalizer::{
    min_elements, orthogonality_defect, relative_residual, rs_sum_power, SurfaceKind,
    TargetChannel,
};
use rsorth::power_opt::{minimize_power, OptimResult};
use rsorth::ris_baseline::{minimize_condition_number, per_ue_gains};
use rsorth::rng::derive_seed;
use rsorth_cli::spec::{ExperimentSpec, Overrides, SpecFile};
use rsorth_cli::{run_selftest, run_sweep};

#[derive(Parser)]
#[command(
    name = "rsorth",
    version,
    about = "Channel orthogonalization with reconfigurable surfaces: solvers, pilot protocols, power minimization, and figure sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Aris,
    Fris,
    Ris,
}

impl From<KindArg> for SurfaceKind {
    fn from(value: KindArg) -> Self {
        match value {
            KindArg::Aris => SurfaceKind::Aris,
            KindArg::Fris => SurfaceKind::Fris,
            KindArg::Ris => SurfaceKind::Ris,
        }
    }
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON experiment config; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Base-station antennas.
    #[arg(long)]
    m: Option<usize>,
    /// Single-antenna users.
    #[arg(long)]
    k: Option<usize>,
    /// Surface elements (applies to the surface selected with --kind).
    #[arg(long)]
    n: Option<usize>,
    /// Normalized direct-channel power.
    #[arg(long)]
    e0: Option<f64>,
    /// Independent channels per sweep cell.
    #[arg(long)]
    trials: Option<usize>,
}

impl CommonOpts {
    fn resolve(&self, kind: Option<SurfaceKind>) -> anyhow::Result<ExperimentSpec> {
        let file = match &self.config {
            Some(path) => SpecFile::load(path)?,
            None => SpecFile::default(),
        };
        let over = Overrides {
            m: self.m,
            k: self.k,
            n: self.n,
            kind,
            e0: self.e0,
            trials: self.trials,
            seed: self.seed,
        };
        ExperimentSpec::resolve(file, &over)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization for an exactly orthogonal channel.
    Orthogonalize {
        #[command(flatten)]
        common: CommonOpts,
        /// Surface kind to configure.
        #[arg(long, value_enum, default_value = "aris")]
        kind: KindArg,
        /// Per-user gain of the target channel.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Run the pilot protocol end to end and print the slot ledger.
    Estimate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum, default_value = "aris")]
        kind: KindArg,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Emit the full estimation report as JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Minimize the surface sum power over target channels.
    Minpower {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_enum, default_value = "aris")]
        kind: KindArg,
        /// Write the descent trace as CSV (iter,objective,grad_norm,step).
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Monte Carlo sweep over the E0 grid; writes the figure CSVs.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory for CSVs, plot script, and manifest.
        #[arg(long, default_value = "sweep_out")]
        out_dir: PathBuf,
    },
    /// Phase-only baseline: minimize the channel condition number.
    Baseline {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Cross-module consistency checks at desk scale.
    Selftest {
        #[command(flatten)]
        common: CommonOpts,
        /// Negative control: corrupt the analytic gradient and expect the
        /// finite-difference check to fail.
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            // Surface library errors with their stable name.
            match err.downcast_ref::<rsorth::Error>() {
                Some(lib) => eprintln!("error[{}]: {lib}", lib.name()),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Orthogonalize { common, kind, beta } => {
            cmd_orthogonalize(&common.resolve(Some(kind.into()))?, kind.into(), beta)
        }
        Command::Estimate {
            common,
            kind,
            beta,
            json,
        } => cmd_estimate(&common.resolve(Some(kind.into()))?, kind.into(), beta, json),
        Command::Minpower {
            common,
            kind,
            trace_out,
        } => cmd_minpower(&common.resolve(Some(kind.into()))?, kind.into(), trace_out),
        Command::Sweep { common, out_dir } => cmd_sweep(&common.resolve(None)?, &out_dir),
        Command::Baseline { common } => cmd_baseline(&common.resolve(Some(SurfaceKind::Ris))?),
        Command::Selftest {
            common,
            corrupt_gradient,
        } => cmd_selftest(&common.resolve(None)?, corrupt_gradient),
    }
}

/// Direct-channel power for single-instance commands: the explicit `--e0`
/// (or a one-point grid from the config), otherwise 1.
fn single_e0(spec: &ExperimentSpec) -> f64 {
    if spec.e0_grid.len() == 1 {
        spec.e0_grid[0]
    } else {
        1.0
    }
}

fn cmd_orthogonalize(spec: &ExperimentSpec, kind: SurfaceKind, beta: f64) -> anyhow::Result<ExitCode> {
    let n = spec.n_for(kind);
    let e0 = single_e0(spec);
    let required = min_elements(kind, spec.m, spec.k)?;
    let cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, derive_seed(spec.seed, &[1]))?;
    let target = TargetChannel::new(beta, random_semi_unitary(spec.m, spec.k, derive_seed(spec.seed, &[2])))?;
    let config = match kind {
        SurfaceKind::Aris => rsorth::orthogonalizer::solve_aris(&cs, &target)?,
        SurfaceKind::Fris => rsorth::orthogonalizer::solve_fris(&cs, &target)?,
        SurfaceKind::Ris => unreachable!("min_elements rejected the phase-only surface"),
    };
    let achieved = effective_channel(&cs, &config)?;
    let desired = target.matrix();
    println!("m={} k={} n={} (min feasible n={required}) e0={e0} seed={}", spec.m, spec.k, n, spec.seed);
    println!("relative residual : {:.3e}", relative_residual(&achieved, &desired));
    println!(
        "orthogonality     : |H^H H - beta I| = {:.3e}",
        orthogonality_defect(&achieved, target.beta())
    );
    println!("surface sum power : {:.6}", rs_sum_power(&config));
    println!("config:\n{}", rs_config_to_json(&config));
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(
    spec: &ExperimentSpec,
    kind: SurfaceKind,
    beta: f64,
    json: bool,
) -> anyhow::Result<ExitCode> {
    let n = spec.n_for(kind);
    let e0 = single_e0(spec);
    let cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, derive_seed(spec.seed, &[1]))?;
    let target = TargetChannel::new(beta, random_semi_unitary(spec.m, spec.k, derive_seed(spec.seed, &[2])))?;
    let plan = PilotPlan::identity(spec.k, spec.n0, spec.es)?;
    let report = end_to_end_configure(&cs, kind, &target, &plan, derive_seed(spec.seed, &[3]))?;
    if json {
        println!("{}", estimation_report_to_json(&report));
        return Ok(ExitCode::SUCCESS);
    }
    println!("protocol          : {}", kind.label());
    println!("m={} k={} n={} e0={e0} n0={} es={}", spec.m, spec.k, n, spec.n0, spec.es);
    println!("pilot slot ledger :");
    match &report.quantities {
        EstimatedQuantities::Aris { .. } => {
            println!("  direct channel   {:>5} slots", spec.k);
            println!("  cascade columns  {:>5} slots", n * spec.k);
        }
        EstimatedQuantities::Fris { .. } => {
            println!("  direct channel   {:>5} slots", spec.k);
            println!("  surface pilots   {:>5} slots", n);
            println!("  hop-2 blocks     {:>5} slots", n.div_ceil(spec.m) * spec.k);
        }
    }
    println!("  total            {:>5} slots", report.pilot_slots_used);
    let budget = pilot_count(kind, spec.m, spec.k, n);
    debug_assert_eq!(budget.value(), report.pilot_slots_used);
    println!("residual          : {:.3e}", report.residual);
    println!("config sum power  : {:.6}", rs_sum_power(&report.config));
    Ok(ExitCode::SUCCESS)
}

fn cmd_minpower(
    spec: &ExperimentSpec,
    kind: SurfaceKind,
    trace_out: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let n = spec.n_for(kind);
    let e0 = single_e0(spec);
    let cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, derive_seed(spec.seed, &[1]))?;
    let cfg = spec.optimizer.to_config(derive_seed(spec.seed, &[4]));
    let result = minimize_power(&cs, kind, &cfg)?;
    println!("kind              : {}", kind.label());
    println!("m={} k={} n={n} e0={e0} restarts={} max_iters={}", spec.m, spec.k, cfg.restarts, cfg.max_iters);
    println!("minimum sum power : {:.6e}", result.p_min);
    println!("power per element : {:.6e}", result.p_min / n as f64);
    println!("gain per UE (beta): {:.6e}", result.beta_star);
    println!("iterations        : {}", result.trace.len());
    println!("converged         : {}", result.converged);
    if let Some(path) = trace_out {
        write_trace_csv(&result, &path)?;
        println!("trace written to  : {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn write_trace_csv(result: &OptimResult, path: &PathBuf) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    writeln!(out, "iter,objective,grad_norm,step")?;
    for point in &result.trace {
        writeln!(
            out,
            "{},{},{},{}",
            point.iteration, point.objective, point.grad_norm, point.step
        )?;
    }
    Ok(())
}

fn cmd_sweep(spec: &ExperimentSpec, out_dir: &PathBuf) -> anyhow::Result<ExitCode> {
    eprintln!(
        "sweep: {} grid points x 3 kinds x {} trials (seed {})",
        spec.e0_grid.len(),
        spec.trials,
        spec.seed
    );
    let summary = run_sweep(spec, out_dir)?;
    println!("{}", summary.fig1_power.display());
    println!("{}", summary.fig1_gain.display());
    println!("{}", summary.fig2_gain.display());
    println!("{}", summary.plot_script.display());
    println!("{}", summary.manifest.display());
    eprintln!("done in {:.1}s", summary.wall_time_s);
    Ok(ExitCode::SUCCESS)
}

fn cmd_baseline(spec: &ExperimentSpec) -> anyhow::Result<ExitCode> {
    let n = spec.n_ris;
    let e0 = single_e0(spec);
    let cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, derive_seed(spec.seed, &[1]))?;
    let cfg = spec.ris_optimizer.to_config(derive_seed(spec.seed, &[5]));
    let result = minimize_condition_number(&cs, &cfg);
    let gains = per_ue_gains(&cs, &result.phases);
    println!("m={} k={} n={n} e0={e0} restarts={}", spec.m, spec.k, cfg.restarts);
    println!("condition number  : {:.6}", result.kappa);
    println!("accepted steps    : {}", result.trace.len() - 1);
    println!(
        "per-UE gains      : min {:.6e}  avg {:.6e}",
        gains[0],
        gains.iter().sum::<f64>() / gains.len() as f64
    );
    let phases: Vec<String> = result.phases.iter().map(|p| format!("{p:.4}")).collect();
    println!("phases (rad)      : [{}]", phases.join(", "));
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(spec: &ExperimentSpec, corrupt_gradient: bool) -> anyhow::Result<ExitCode> {
    let report = run_selftest(spec.seed, corrupt_gradient);
    for check in &report.checks {
        println!(
            "{} {:<24} measured {:.3e}  tolerance {:.0e}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.measured,
            check.tolerance
        );
    }
    println!(
        "{}: {} of {} checks passed in {:.2}s",
        if report.all_passed() { "OK" } else { "FAILED" },
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        report.wall_time_s
    );
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
