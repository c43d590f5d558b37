//! `pwait`: command-line front end of the waiting-time laboratory.
//!
//! stdout carries data and reports; diagnostics go to stderr. Exit codes:
//! 0 success, 1 failed check, 2 configuration or usage error, 3 solver or
//! internal failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwait::analytic::{
    barenblatt_constants, barrier_upper_time_limit, critical_time_1d, PParameters,
};
use pwait::experiments::verify::run_all;
use pwait::experiments::{
    barrier_check_bracket, builtin, flagship_problem, run_scenario, RunManifest, RunStatus,
    ScenarioConfig, BUILTIN_NAMES,
};
use pwait::interface::{resolve_threshold, waiting_time, DEFAULT_ABS_FLOOR, DEFAULT_REL_THRESHOLD};
use pwait::mol::integrate;
use pwait::Error;

const SCHEMA_HELP: &str = "Scenario files are TOML; the schema is documented in docs/scenario-schema.md.\n\
Output directory precedence: --output-dir, then $PWAIT_OUTPUT_DIR, then the scenario's output_dir, then ./pwait-out.";

const DEFAULT_OUTPUT: &str = "pwait-out";

#[derive(Parser, Debug)]
#[command(name = "pwait", version, about = "Waiting-time laboratory for u_t = Δ_p u", after_help = SCHEMA_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base directory for scenario outputs; each scenario writes to <dir>/<name>.
    #[arg(long, env = "PWAIT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Override a scenario key after parsing, e.g. --set problem.n_cells=400.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct Flagship {
    /// Exponent p > 2.
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    /// Number of grid cells.
    #[arg(long, default_value_t = 800)]
    n_cells: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print k, q, ĥt, t₂(0) and t₂(0)/ĥt for each p.
    #[command(after_help = SCHEMA_HELP)]
    Constants {
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        p: Vec<f64>,
    },
    /// Integrate the flagship problem and write the waterfall CSV to stdout.
    #[command(after_help = SCHEMA_HELP)]
    Solve {
        #[command(flatten)]
        flagship: Flagship,
        /// Final time as a multiple of ĥt.
        #[arg(long, default_value_t = 1.2)]
        t_end_critical: f64,
        /// Number of uniformly spaced snapshots.
        #[arg(long, default_value_t = 40)]
        snapshots: usize,
        /// Keep every k-th snapshot (the last one is always kept).
        #[arg(long, default_value_t = 1)]
        every: usize,
    },
    /// Run the flagship problem and print the waiting-time report.
    #[command(after_help = SCHEMA_HELP)]
    WaitingTime {
        #[command(flatten)]
        flagship: Flagship,
    },
    /// Level-set and support-edge tracks of the flagship run (fig3 scenario).
    #[command(after_help = SCHEMA_HELP)]
    LevelSets {
        #[command(flatten)]
        flagship: Flagship,
        #[command(flatten)]
        common: Common,
    },
    /// Edge profiles and exponent fits of the flagship run (fig4 scenario).
    #[command(after_help = SCHEMA_HELP)]
    Profile {
        #[command(flatten)]
        flagship: Flagship,
        #[command(flatten)]
        common: Common,
    },
    /// Barenblatt convergence study (convergence scenario).
    #[command(after_help = SCHEMA_HELP)]
    Convergence {
        /// Comma-separated cell counts.
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        grids: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite and print one line per criterion.
    #[command(after_help = SCHEMA_HELP)]
    Verify,
    /// Run scenario files or builtin scenarios.
    #[command(after_help = SCHEMA_HELP)]
    Run {
        /// Scenario TOML files.
        configs: Vec<PathBuf>,
        /// Builtin scenario names (fig2, fig3, fig4, memory, convergence, arrival, comparison, flagship).
        #[arg(long = "builtin", value_name = "NAME")]
        builtins: Vec<String>,
        /// Number of scenarios run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Checks,
    Config(String),
    Hard(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver { .. } | Error::Consistency(_) => Failure::Hard(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("cannot write to stdout: {e}"))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("pwait: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Hard(msg)) => {
            eprintln!("pwait: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Constants { p } => constants(&p),
        Command::Solve {
            flagship,
            t_end_critical,
            snapshots,
            every,
        } => solve(&flagship, t_end_critical, snapshots, every),
        Command::WaitingTime { flagship } => waiting(&flagship),
        Command::LevelSets { flagship, common } => {
            run_named("fig3", &flagship_overrides(&flagship, &common), &common, 1)
        }
        Command::Profile { flagship, common } => {
            run_named("fig4", &flagship_overrides(&flagship, &common), &common, 1)
        }
        Command::Convergence { grids, common } => {
            let list: Vec<String> = grids.iter().map(|n| n.to_string()).collect();
            let mut overrides = vec![format!("analyses.0.grids=[{}]", list.join(","))];
            overrides.extend(common.overrides.iter().cloned());
            run_named("convergence", &overrides, &common, 1)
        }
        Command::Verify => verify(),
        Command::Run {
            configs,
            builtins,
            jobs,
            common,
        } => run(&configs, &builtins, jobs, &common),
    }
}

fn flagship_overrides(f: &Flagship, common: &Common) -> Vec<String> {
    let mut v = vec![
        format!("problem.p={:?}", f.p),
        format!("problem.n_cells={}", f.n_cells),
    ];
    v.extend(common.overrides.iter().cloned());
    v
}

fn constants(ps: &[f64]) -> Outcome {
    let mut out = std::io::stdout().lock();
    writeln!(out, "p,k,q,t_hat,t2_0,ratio")?;
    for &p in ps {
        let params = PParameters::one_d(p)?;
        let bc = barenblatt_constants(params, None)?;
        let t_hat = critical_time_1d(params)?;
        let t2 = barrier_upper_time_limit(params)?;
        writeln!(
            out,
            "{p},{:.16e},{:.16e},{t_hat:.16e},{t2:.16e},{:.16e}",
            bc.k,
            bc.q,
            t2 / t_hat
        )?;
    }
    Ok(())
}

fn solve(f: &Flagship, t_end_critical: f64, snapshots: usize, every: usize) -> Outcome {
    if every == 0 {
        return Err(Failure::Config("--every must be >= 1".into()));
    }
    let mut cfg = flagship_problem(f.p, f.n_cells);
    cfg.t_end_critical = Some(t_end_critical);
    cfg.snapshots = snapshots;
    let spec = cfg.to_spec()?;
    let trace = integrate(&spec, &cfg.snapshot_times()?, &mut [])?;
    let xs: Vec<f64> = spec.grid.nodes().collect();
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    trace.write_csv(&xs, &mut out, every)?;
    out.flush()?;
    eprintln!(
        "{}",
        trace.stats.to_key_value().trim_end().replace('\n', " ")
    );
    Ok(())
}

fn waiting(f: &Flagship) -> Outcome {
    let cfg = flagship_problem(f.p, f.n_cells);
    let spec = cfg.to_spec()?;
    let trace = integrate(&spec, &cfg.snapshot_times()?, &mut [])?;
    let thr = resolve_threshold(&trace, DEFAULT_REL_THRESHOLD, DEFAULT_ABS_FLOOR);
    let report = waiting_time(&trace, &spec.grid, spec.params, 0.0, thr)?;
    let bracket = barrier_check_bracket(&report, spec.params)?;
    let mut out = std::io::stdout().lock();
    write!(out, "{}", report.to_key_value())?;
    writeln!(out, "bracket={} {}", bracket.status(), bracket.detail)?;
    if bracket.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn verify() -> Outcome {
    let outcomes = run_all();
    let mut out = std::io::stdout().lock();
    for c in &outcomes {
        writeln!(out, "{}", c.line())?;
    }
    let passed = outcomes.iter().filter(|c| c.passed).count();
    writeln!(out, "{passed}/{} criteria passed", outcomes.len())?;
    if passed == outcomes.len() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn named(name: &str, overrides: &[String]) -> Result<ScenarioConfig, Failure> {
    let base = builtin(name)?;
    if overrides.is_empty() {
        return Ok(base);
    }
    Ok(ScenarioConfig::from_toml_with_overrides(
        &base.to_toml_string(),
        overrides,
    )?)
}

fn run_named(name: &str, overrides: &[String], common: &Common, jobs: usize) -> Outcome {
    let cfg = named(name, overrides)?;
    run_configs(vec![cfg], common, jobs)
}

fn run(configs: &[PathBuf], builtins: &[String], jobs: usize, common: &Common) -> Outcome {
    if configs.is_empty() && builtins.is_empty() {
        return Err(Failure::Config(format!(
            "nothing to run: give scenario files or --builtin NAME (one of {})",
            BUILTIN_NAMES.join(", ")
        )));
    }
    let mut all = Vec::new();
    for path in configs {
        all.push(ScenarioConfig::load(path, &common.overrides)?);
    }
    for name in builtins {
        all.push(named(name, &common.overrides)?);
    }
    run_configs(all, common, jobs)
}

fn output_dir_for(cfg: &ScenarioConfig, common: &Common) -> PathBuf {
    match (&common.output_dir, &cfg.output_dir) {
        (Some(base), _) => base.join(&cfg.name),
        (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new(DEFAULT_OUTPUT).join(&cfg.name),
    }
}

fn run_configs(configs: Vec<ScenarioConfig>, common: &Common, width: usize) -> Outcome {
    if width == 0 {
        return Err(Failure::Config("--jobs must be >= 1".into()));
    }
    let dirs: Vec<PathBuf> = configs.iter().map(|c| output_dir_for(c, common)).collect();
    for (i, d) in dirs.iter().enumerate() {
        if dirs[..i].contains(d) {
            return Err(Failure::Config(format!(
                "two scenarios would share the output directory {}",
                d.display()
            )));
        }
    }
    // Each scenario owns its output directory, so batches of `width` run in parallel.
    let jobs: Vec<(ScenarioConfig, PathBuf)> = configs.into_iter().zip(dirs).collect();
    let mut results: Vec<Option<pwait::Result<RunManifest>>> =
        (0..jobs.len()).map(|_| None).collect();
    for (chunk, slots) in jobs.chunks(width).zip(results.chunks_mut(width)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(cfg, dir)| s.spawn(move || run_scenario(cfg, dir)))
                .collect();
            for (h, slot) in handles.into_iter().zip(slots.iter_mut()) {
                *slot = Some(h.join().expect("scenario thread panicked"));
            }
        });
    }
    let mut worst: Outcome = Ok(());
    let mut out = std::io::stdout().lock();
    for ((cfg, dir), result) in jobs.iter().zip(results) {
        match result.expect("every scenario ran") {
            Ok(manifest) => {
                writeln!(
                    out,
                    "# {}",
                    dir.join(pwait::experiments::MANIFEST_NAME).display()
                )?;
                write!(out, "{}", manifest.render())?;
                let failure = match &manifest.status {
                    RunStatus::Passed => None,
                    RunStatus::ChecksFailed => Some(Failure::Checks),
                    RunStatus::SolverError(msg) => {
                        Some(Failure::Hard(format!("{}: {msg}", cfg.name)))
                    }
                };
                if let Some(f) = failure {
                    worst = merge(worst, f);
                }
            }
            Err(e) => {
                let f = Failure::from(e);
                let msg = match &f {
                    Failure::Config(m) | Failure::Hard(m) => m.clone(),
                    Failure::Checks => String::new(),
                };
                eprintln!("pwait: scenario {}: {msg}", cfg.name);
                worst = merge(worst, f);
            }
        }
    }
    worst
}

/// Keeps the most severe failure: hard > config > checks.
fn merge(current: Outcome, new: Failure) -> Outcome {
    let rank = |f: &Failure| match f {
        Failure::Checks => 1,
        Failure::Config(_) => 2,
        Failure::Hard(_) => 3,
    };
    match current {
        Ok(()) => Err(new),
        Err(old) if rank(&new) > rank(&old) => Err(new),
        other => other,
    }
}
