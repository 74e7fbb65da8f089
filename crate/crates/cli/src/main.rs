mod config;
mod report;
mod tasks;

use clap::{Args, Parser, Subcommand};
use config::{Overrides, Range, SweepConfig};
use polylab_core::modalgreen::fit::{EstimateId, SamplePlan};
use polylab_core::modecheck::Identity;
use polylab_core::rational::Q;
use report::Report;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use tasks::Task;

#[derive(Parser)]
#[command(name = "polylab", version, about = "Exact and numerical checks for polyharmonic operators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Global {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write fitted samples as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write gnuplot data for the fits.
    #[arg(long, global = true)]
    plot_data: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies the numerical acceptance tolerances.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tolerance_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    Symbols {
        #[command(subcommand)]
        action: SymbolsAction,
    },
    Positivity {
        #[command(subcommand)]
        action: PositivityAction,
    },
    Fundsol {
        #[command(subcommand)]
        action: FundsolAction,
    },
    Identity {
        #[command(subcommand)]
        action: IdentityAction,
    },
    Green {
        #[command(subcommand)]
        action: GreenAction,
    },
    /// Ray-dependent derivatives of a polyharmonic function in low dimension.
    Counterexample {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        /// Comma-separated rationals in (0, 1/4).
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<String>>,
    },
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
}

#[derive(Subcommand)]
enum SymbolsAction {
    /// Symbol identities and lower-bound sweep for one (m, n).
    Check {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        q_max: Option<u32>,
    },
}

#[derive(Subcommand)]
enum PositivityAction {
    /// Kernel positivity certificates for the shifted operators.
    Check {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        /// Single exponent; all admissible ones when absent.
        #[arg(long)]
        p: Option<u32>,
        /// Also run chains with base and target pairings exchanged (expected to fail).
        #[arg(long)]
        negative_control: bool,
    },
}

#[derive(Subcommand)]
enum FundsolAction {
    /// Exact fundamental solution of the base operator.
    Build {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum IdentityAction {
    /// Energy or trace inequality over the test-function library.
    Check {
        /// odd-energy, odd-trace, even-energy or even-trace.
        #[arg(long)]
        identity: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

#[derive(Subcommand)]
enum GreenAction {
    /// Fit one decay estimate of the shell Green function.
    Fit {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 16.0)]
        r1: f64,
        /// far-field, near-diagonal, mixed-derivative or log-law.
        #[arg(long)]
        estimate: String,
    },
}

#[derive(Subcommand)]
enum SuiteAction {
    /// Every selected check over the configured ranges.
    Run {
        /// TOML key/value file; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        negative_control: bool,
    },
}

fn parse_q(s: &str) -> Result<Q, String> {
    s.trim().parse::<Q>().map_err(|e| format!("bad rational {s:?}: {e}"))
}

fn single(cfg: &mut SweepConfig, m: u32, n: u32) {
    cfg.m = Range::new(m, m);
    cfg.n = Range::new(n, n);
}

/// Builds the task list and the configuration echoed in the report.
fn prepare(command: Command, flags: &Overrides, cfg: &mut SweepConfig) -> Result<(&'static str, Vec<Task>), String> {
    Ok(match command {
        Command::Symbols { action: SymbolsAction::Check { m, n, q_max } } => {
            single(cfg, m, n);
            cfg.q_max = q_max;
            ("symbols", tasks::symbol_tasks(cfg, m, n))
        }
        Command::Positivity { action: PositivityAction::Check { m, n, p, negative_control } } => {
            single(cfg, m, n);
            cfg.p = p.map(|p| Range::new(p, p));
            cfg.negative_control |= negative_control;
            let mut out = tasks::root_tasks(cfg, m, n);
            out.extend(tasks::positivity_tasks(cfg, m, n));
            ("positivity", out)
        }
        Command::Fundsol { action: FundsolAction::Build { m, n } } => {
            single(cfg, m, n);
            ("fundsol", vec![Task::Fundamental { m, n }])
        }
        Command::Identity { action: IdentityAction::Check { identity, m, n, radius } } => {
            single(cfg, m, n);
            let identity = Identity::parse(&identity).map_err(|e| e.to_string())?;
            ("identity", vec![Task::Identity { identity, m, n, radius }])
        }
        Command::Green { action: GreenAction::Fit { m, n, r0, r1, estimate } } => {
            single(cfg, m, n);
            cfg.shell_ratios = vec![r1 / r0];
            let estimate = EstimateId::parse(&estimate).map_err(|e| e.to_string())?;
            let plan = SamplePlan::for_estimate(estimate, m, n);
            ("green", vec![Task::Fit { m, n, r0, r1, estimate, plan }])
        }
        Command::Counterexample { m, n, radii } => {
            single(cfg, m, n);
            let radii = match radii {
                Some(r) => r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()?,
                None => polylab_core::modalgreen::counterexample::default_radii(),
            };
            ("counterexample", vec![Task::Counterexample { m, n, radii }])
        }
        Command::Suite { action: SuiteAction::Run { config, negative_control } } => {
            if let Some(path) = config {
                *cfg = SweepConfig::load(&path).map_err(|e| e.to_string())?;
                flags.apply(cfg);
            }
            cfg.negative_control |= negative_control;
            ("suite", tasks::plan(cfg))
        }
    })
}

fn run(cli: Cli) -> Result<bool, String> {
    let g = cli.global;
    let mut cfg = SweepConfig::default();
    let flags = Overrides {
        jobs: g.jobs,
        seed: g.seed,
        tolerance_scale: g.tolerance_scale,
        json: g.json,
        csv: g.csv,
        plot_data: g.plot_data,
        negative_control: false,
    };
    flags.apply(&mut cfg);
    cfg.validate().map_err(|(field, msg)| format!("{field}: {msg}"))?;
    let (suite, list) = prepare(cli.command, &flags, &mut cfg)?;
    cfg.validate().map_err(|(field, msg)| format!("{field}: {msg}"))?;

    let jobs = cfg.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let cases = pool.install(|| tasks::run_all(&list, cfg.tolerance_scale));
    let mut echoed = serde_json::to_value(&cfg).map_err(|e| e.to_string())?;
    // thread count lives in the timing block so that reports compare equal across --jobs
    echoed.as_object_mut().map(|o| o.remove("jobs"));
    let report = Report::new(suite, echoed, cases, jobs, start.elapsed().as_secs_f64());

    for c in &report.cases {
        eprintln!("{:<14} {:<11} {}: {}", c.module, format!("{:?}", c.status).to_uppercase(), c.id, c.detail);
    }
    let s = &report.summary;
    eprintln!("{} pass, {} fail, {} uncertified", s.pass, s.fail, s.uncertified);

    match &cfg.json {
        Some(path) => std::fs::write(path, report.to_json()).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{}", report.to_json()),
    }
    if let Some(path) = &cfg.csv {
        report.write_csv(path, suite == "suite").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &cfg.plot_data {
        report.write_plot_data(path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(!report.failed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("polylab: {e}");
            ExitCode::from(2)
        }
    }
}
