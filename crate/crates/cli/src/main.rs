use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use finhor::bench::{run_table1, BenchOptions};
use finhor::margin::{MarginSolver, Terminal};
use finhor::oracle::{enumerate_frontier_capped, HorizonFrontier};
use finhor::policy::{validate_policy, Policy, ValidationReport};
use finhor::region::DEFAULT_ENUMERATION_CAP;
use finhor::solver::{SearchMode, SolverOptions};
use finhor::{Error, NetworkScenario, RateTuple};

const NODE_BUDGET_VAR: &str = "FINHOR_NODE_BUDGET";

const UNITS: &str = "# gains and powers are dimensionless; rates in bits per channel use; queues in bits";

#[derive(Parser)]
#[command(name = "finhor", version, about = "Finite-horizon throughput regions of interference networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the T-slot frontier of a scenario.
    Frontier {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Rate margin of a rate tuple over a horizon.
    Margin {
        scenario: PathBuf,
        /// Comma-separated rates, one per pair.
        #[arg(long)]
        rate: String,
        #[arg(long)]
        horizon: usize,
        /// Write the search expansions of the first drain as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Derive a rate-achieving policy, or validate one.
    Policy {
        scenario: PathBuf,
        #[arg(long, required_unless_present = "validate")]
        rate: Option<String>,
        #[arg(long, required_unless_present = "validate")]
        horizon: Option<usize>,
        #[arg(long, conflicts_with = "validate")]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["rate", "horizon"])]
        validate: Option<PathBuf>,
    },
    /// Monte Carlo study of iteration counts and branching ratios.
    Bench {
        scenario: PathBuf,
        #[arg(long, default_value = "2,3,4,5")]
        horizons: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write per-trial records as JSON.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Use the zero-heuristic search without dominance pruning.
        #[arg(long)]
        uninformed: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capacity { .. } => 3,
            Error::Unachievable { .. } => 4,
            _ => 2,
        };
        let message = e.to_string();
        Failure { code, message }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Frontier {
            scenario,
            horizon,
            out,
            format,
        } => cmd_frontier(&scenario, horizon, out.as_deref(), format),
        Command::Margin {
            scenario,
            rate,
            horizon,
            trace,
        } => cmd_margin(&scenario, &rate, horizon, trace.as_deref()),
        Command::Policy {
            scenario,
            rate,
            horizon,
            out,
            validate,
        } => match validate {
            Some(path) => cmd_validate(&scenario, &path),
            None => cmd_policy(
                &scenario,
                rate.as_deref().unwrap_or_default(),
                horizon.unwrap_or_default(),
                out.as_deref(),
            ),
        },
        Command::Bench {
            scenario,
            horizons,
            trials,
            seed,
            out,
            format,
            raw,
            uninformed,
        } => cmd_bench(
            &scenario,
            &horizons,
            trials,
            seed,
            out.as_deref(),
            format,
            raw.as_deref(),
            uninformed,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> std::result::Result<NetworkScenario, Failure> {
    NetworkScenario::from_path(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn solver_options() -> std::result::Result<SolverOptions, Failure> {
    let mut opts = SolverOptions::default();
    if let Ok(v) = std::env::var(NODE_BUDGET_VAR) {
        opts.node_budget = v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{NODE_BUDGET_VAR} must be a positive integer, got {v:?}")))?;
    }
    Ok(opts)
}

fn parse_rate(text: &str, pairs: usize) -> std::result::Result<Vec<f64>, Failure> {
    let rate: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Failure::input(format!("bad rate list {text:?}: {e}")))?;
    if rate.len() != pairs {
        return Err(Failure::input(format!(
            "rate list has {} entries, scenario has {pairs} pairs",
            rate.len()
        )));
    }
    if let Some(x) = rate.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Failure::input(format!("rates must be positive, got {x}")));
    }
    Ok(rate)
}

fn parse_horizons(text: &str) -> std::result::Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(Failure::input(format!("bad horizon {s:?} in {text:?}"))),
        })
        .collect()
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Outcome {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::input(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_frontier_csv(out: Option<&Path>, f: &HorizonFrontier, pairs: usize) -> Outcome {
    let mut w = sink(out)?;
    writeln!(w, "{UNITS}")?;
    writeln!(w, "# horizon {}; power_seq lists one power tuple per slot, separated by '|'", f.horizon)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=pairs).map(|n| format!("rate_{n}")).collect();
    header.extend(["pareto".into(), "weak_pareto".into(), "power_seq".into()]);
    csv.write_record(&header)?;
    for p in &f.points {
        let mut row: Vec<String> = p.rate.iter().map(|r| r.to_string()).collect();
        row.push(p.pareto.to_string());
        row.push(p.weak_pareto.to_string());
        row.push(p.powers.iter().map(|s| join(s)).collect::<Vec<_>>().join("|"));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn cmd_frontier(path: &Path, horizon: usize, out: Option<&Path>, format: Format) -> Outcome {
    let scenario = load(path)?;
    if horizon == 0 {
        return Err(Failure::input("horizon must be at least 1"));
    }
    let f = enumerate_frontier_capped(&scenario, horizon, DEFAULT_ENUMERATION_CAP)?;
    match format {
        Format::Csv => write_frontier_csv(out, &f, scenario.n_pairs()),
        Format::Json => write_json(out, &f),
    }
}

#[derive(Serialize)]
struct MarginReport {
    delta: f64,
    iterations: usize,
    achievable: bool,
    terminal: Terminal,
    boundary_rate: Option<RateTuple>,
}

fn cmd_margin(path: &Path, rate: &str, horizon: usize, trace: Option<&Path>) -> Outcome {
    let scenario = load(path)?;
    let mu = parse_rate(rate, scenario.n_pairs())?;
    if horizon == 0 {
        return Err(Failure::input("horizon must be at least 1"));
    }
    let ms = MarginSolver::with_options(&scenario, solver_options()?, SearchMode::AStar)?;
    let m = ms.rate_margin(&mu, horizon)?;
    if let Some(p) = trace {
        let q0 = ms.initial_queue(&mu, horizon);
        let (_, records) = ms.search().solve_traced(&q0, horizon, SearchMode::AStar)?;
        let mut w = File::create(p)?;
        writeln!(w, "{UNITS}")?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["depth", "f", "g", "e", "queue", "path"])?;
        for r in records {
            let path = r.path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            csv.write_record([
                r.depth.to_string(),
                r.f.to_string(),
                r.g.to_string(),
                r.e.to_string(),
                join(&r.queue),
                path,
            ])?;
        }
        csv.flush()?;
    }
    let report = MarginReport {
        delta: m.delta,
        iterations: m.iterations,
        achievable: m.achievable,
        terminal: m.terminal,
        boundary_rate: (m.delta > 0.0).then(|| RateTuple(mu.iter().map(|x| x * m.delta).collect())),
    };
    write_json(None, &report)
}

#[derive(Serialize)]
struct PolicyDocument<'a> {
    #[serde(flatten)]
    policy: &'a Policy,
    validation: &'a ValidationReport,
}

fn cmd_policy(path: &Path, rate: &str, horizon: usize, out: Option<&Path>) -> Outcome {
    let scenario = load(path)?;
    let mu = parse_rate(rate, scenario.n_pairs())?;
    if horizon == 0 {
        return Err(Failure::input("horizon must be at least 1"));
    }
    let ms = MarginSolver::with_options(&scenario, solver_options()?, SearchMode::AStar)?;
    let policy = ms.derive_policy(&mu, horizon)?;
    let validation = validate_policy(&scenario, &policy);
    write_json(
        out,
        &PolicyDocument {
            policy: &policy,
            validation: &validation,
        },
    )
}

fn cmd_validate(path: &Path, policy_path: &Path) -> Outcome {
    let scenario = load(path)?;
    let policy = Policy::from_path(policy_path)
        .map_err(|e| Failure::input(format!("{}: {e}", policy_path.display())))?;
    let report = validate_policy(&scenario, &policy);
    write_json(None, &report)?;
    if report.verdict {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: match report.first_violation {
                Some(slot) => format!("policy is not rate-achieving: slot {slot} violates its constraints"),
                None => format!("policy is not rate-achieving: residual {:.3e}", report.residual),
            },
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    path: &Path,
    horizons: &str,
    trials: usize,
    seed: u64,
    out: Option<&Path>,
    format: Format,
    raw: Option<&Path>,
    uninformed: bool,
) -> Outcome {
    let scenario = load(path)?;
    let horizons = parse_horizons(horizons)?;
    if trials == 0 {
        return Err(Failure::input("trials must be at least 1"));
    }
    let options = BenchOptions {
        mode: if uninformed { SearchMode::Uninformed } else { SearchMode::AStar },
        solver: solver_options()?,
    };
    let report = run_table1(&scenario, &horizons, trials, seed, options)?;
    match format {
        Format::Csv => {
            let mut w = sink(out)?;
            w.write_all(report.to_csv().as_bytes())?;
        }
        Format::Json => write_json(out, &report.rows)?,
    }
    if let Some(p) = raw {
        write_json(Some(p), &report.records)?;
    }
    Ok(())
}
