use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use metaedge::baselines::{place, BaselineConfig, RateRule, Scheme};
use metaedge::bench::{emit_results, run_sweep, verify, SweepSpec};
use metaedge::evaluator::Evaluator;
use metaedge::ilp::{export_lp, IlpModel};
use metaedge::instance::{generate, load_instance, save_instance, GeneratorParams, ScenarioInstance};
use metaedge::solver::{solve_enumerate, solve_exact, solve_heuristic, Budget, HeuristicParams};
use serde_json::json;

#[derive(Parser)]
#[command(name = "metaedge", version, about = "Service placement, caching and rate selection for edge AR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Enumerate,
    Exact,
    Heuristic,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance document.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON object of generator parameter overrides.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Start from the small desk preset with this many requests.
        #[arg(long)]
        desk: Option<usize>,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and print the report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "heuristic")]
        method: SolveMethod,
        /// Delay/power weight; the instance's own if absent.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        max_nodes: Option<u64>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Omit the assignment from the output.
        #[arg(long)]
        brief: bool,
    },
    /// Run one baseline scheme.
    Baseline {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        util_cap: f64,
        /// Use this rate for every request instead of the best response.
        #[arg(long)]
        fixed_rate_mbps: Option<u64>,
    },
    /// Run a sweep document and write its result files.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle-equivalence, linearization and dominance suites.
    Verify {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
    /// Write the integer program in LP format.
    ExportLp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the variable index/name map as JSON.
        #[arg(long)]
        var_map: Option<PathBuf>,
    },
}

enum Failure {
    /// Bad input: exit 2.
    Usage(anyhow::Error),
    /// A check or run failed: exit 1.
    Check(anyhow::Error),
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn check(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Check(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(usage)
}

fn instance(path: &Path) -> Result<ScenarioInstance, Failure> {
    load_instance(&read(path)?).with_context(|| format!("loading {}", path.display())).map_err(usage)
}

fn weight(inst: &ScenarioInstance, mu: Option<f64>) -> Result<f64, Failure> {
    let mu = mu.unwrap_or(inst.constants.mu);
    if !(0.0..=1.0).contains(&mu) {
        return Err(usage(anyhow!("--mu {mu} outside [0, 1]")));
    }
    Ok(mu)
}

fn print(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate { seed, params, desk, out } => {
            let base = desk.map(GeneratorParams::desk).unwrap_or_default();
            let p = match params {
                Some(path) => {
                    let v: serde_json::Value = serde_json::from_str(&read(&path)?).map_err(usage)?;
                    let map = v.as_object().ok_or_else(|| usage(anyhow!("{} is not a JSON object", path.display())))?;
                    base.with_overrides(map).map_err(usage)?
                }
                None => base,
            };
            let text = save_instance(&generate(seed, &p).map_err(usage)?);
            match out {
                Some(path) => write(&path, &text)?,
                None => println!("{text}"),
            }
        }
        Command::Solve { instance: path, method, mu, max_nodes, time_limit, threads, restarts, seed, brief } => {
            let inst = instance(&path)?;
            let mu = weight(&inst, mu)?;
            let budget = Budget { max_nodes, time_limit_s: time_limit, threads };
            let mut report = match method {
                SolveMethod::Enumerate => solve_enumerate(&inst, mu).map_err(check)?,
                SolveMethod::Exact => {
                    let model = IlpModel::build(&inst, mu).map_err(check)?;
                    solve_exact(&model, &budget).with_metrics(&inst, mu)
                }
                SolveMethod::Heuristic => {
                    solve_heuristic(&inst, mu, &HeuristicParams { restarts, seed, ..HeuristicParams::default() })
                }
            };
            if brief {
                report.assignment = None;
            }
            print(&report);
        }
        Command::Baseline { instance: path, scheme, mu, seed, util_cap, fixed_rate_mbps } => {
            let inst = instance(&path)?;
            let mu = weight(&inst, mu)?;
            let rate_rule = match fixed_rate_mbps {
                Some(m) => RateRule::Fixed { rate_bps: m * 1_000_000 },
                None => RateRule::BestResponse,
            };
            let cfg = BaselineConfig { scheme, util_cap, seed, rate_rule };
            let a = place(&inst, mu, &cfg).map_err(check)?;
            let metrics = Evaluator::<f64>::new(&inst).with_mu(mu).metrics_unchecked(&a).map_err(check)?;
            print(&json!({ "scheme": scheme.name(), "mu": mu, "metrics": metrics, "assignment": a }));
        }
        Command::Sweep { spec, out } => {
            let spec: SweepSpec = serde_json::from_str(&read(&spec)?)
                .with_context(|| format!("parsing {}", spec.display()))
                .map_err(usage)?;
            spec.validate().map_err(usage)?;
            let result = run_sweep(&spec).map_err(check)?;
            let manifest = emit_results(&result, &out).map_err(usage)?;
            for f in &manifest.files {
                println!("{}", out.join(&f.name).display());
            }
            let bad = result.audit_failures().len();
            if bad > 0 {
                return Err(check(anyhow!("{bad} row(s) failed the feasibility audit")));
            }
        }
        Command::Verify { seeds } => {
            let checks = verify(seeds);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(check(anyhow!("verification failed")));
            }
        }
        Command::ExportLp { instance: path, mu, out, var_map } => {
            let inst = instance(&path)?;
            let mu = weight(&inst, mu)?;
            let model = IlpModel::build(&inst, mu).map_err(check)?;
            write(&out, &export_lp(&model))?;
            if let Some(vm) = var_map {
                write(&vm, &serde_json::to_string_pretty(&model.variable_map()).expect("serializable"))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
