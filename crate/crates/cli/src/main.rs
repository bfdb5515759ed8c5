use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evosemi::harness::{self, base_dir, parse_json, RunReport, SimulateConfig, SolveDdeConfig, SweepAxis};
use evosemi::metrics::{d_ab_j1, d_j1, SearchBudget};
use evosemi::{Error, Result, SampledPath};

const THREADS_VAR: &str = "EVOSEMI_THREADS";

#[derive(Parser)]
#[command(name = "evosemi", version, about = "Experiments on evolutionary semigroups of path functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check of a config and write its CSV and JSON report.
    Run { config: PathBuf },
    /// Rerun the checks of a config along one axis.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
    },
    /// J1 distance between two path files.
    J1 {
        a: PathBuf,
        b: PathBuf,
        /// Restrict to `[a, b]` instead of the integrated distance.
        #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
        interval: Option<Vec<f64>>,
    },
    /// Solve a deterministic delay equation.
    SolveDde { config: PathBuf },
    /// Simulate trajectories of a dynamics.
    Simulate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_VAR) {
        match n.parse::<usize>() {
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!("error: {THREADS_VAR} must be a thread count, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config } => {
            let (raw, cfg) = harness::load(&config)?;
            let base = base_dir(&config);
            let report = harness::run(&cfg, &raw, &base)?;
            finish(&cfg, &base, &report)
        }
        Command::Sweep { config, axis, values } => {
            let (raw, cfg) = harness::load(&config)?;
            let base = base_dir(&config);
            let axis = SweepAxis::parse(&axis)?;
            let values = parse_values(&values)?;
            let report = harness::sweep(&cfg, &raw, &base, axis, &values)?;
            finish(&cfg, &base, &report)
        }
        Command::J1 { a, b, interval } => {
            let (x, y) = (read_path(&a)?, read_path(&b)?);
            let budget = SearchBudget::default();
            let m = match interval.as_deref() {
                Some([lo, hi]) => d_ab_j1(&x, &y, *lo, *hi, &budget)?,
                _ => d_j1(&x, &y, budget.s_max, budget.quad_step, &budget)?,
            };
            println!("{}", m.to_json());
            Ok(true)
        }
        Command::SolveDde { config } => {
            let cfg: SolveDdeConfig = parse_json(&std::fs::read_to_string(&config)?)?;
            let base = base_dir(&config);
            let y = cfg.solve(&base)?;
            let mut out = Vec::new();
            y.write_csv(&mut out)?;
            emit(&base, cfg.output.as_deref(), &out)?;
            Ok(true)
        }
        Command::Simulate { config } => {
            let cfg: SimulateConfig = parse_json(&std::fs::read_to_string(&config)?)?;
            let base = base_dir(&config);
            let paths = cfg.simulate(&base)?;
            emit(&base, cfg.output.as_deref(), trajectories_csv(&paths).as_bytes())?;
            Ok(true)
        }
    }
}

fn finish(cfg: &harness::ExperimentConfig, base: &Path, report: &RunReport) -> Result<bool> {
    let (csv, json) = harness::write_outputs(cfg, base, report)?;
    let failed = report.records.iter().filter(|r| !r.pass).count();
    eprintln!(
        "{}: {} rows, {} failed; wrote {} and {}",
        report.name,
        report.records.len(),
        failed,
        csv.display(),
        json.display()
    );
    Ok(report.passed)
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config { pointer: "/sweep/values".into(), message: format!("not a number: `{v}`") })
        })
        .collect()
}

fn read_path(p: &Path) -> Result<SampledPath> {
    SampledPath::from_json(&std::fs::read_to_string(p)?)
}

fn trajectories_csv(paths: &[SampledPath]) -> String {
    let dim = paths.first().map_or(0, SampledPath::dim);
    let mut out = String::from("trajectory,time");
    for j in 0..dim {
        out.push_str(&format!(",coord_{j}"));
    }
    out.push('\n');
    for (k, p) in paths.iter().enumerate() {
        for (i, row) in p.nodes().enumerate() {
            out.push_str(&format!("{k},{}", harness::fmt_f64(p.time(i))));
            for v in row {
                out.push_str(&format!(",{}", harness::fmt_f64(*v)));
            }
            out.push('\n');
        }
    }
    out
}

fn emit(base: &Path, output: Option<&str>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => {
            let p = base.join(p);
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&p, bytes)?;
            eprintln!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}
