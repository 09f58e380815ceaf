//! `opmp`: run scenarios, sweep horizons and seeds, and check lemmas.
//!
//! Exit status: 0 when everything requested passed, 1 on a failed check or
//! a runtime error, 2 on a usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opmp_core::harness::{self, Lemma, ScenarioConfig, SweepSpec};
use opmp_core::metrics;
use opmp_core::Error;

#[derive(Parser)]
#[command(
    name = "opmp",
    version,
    about = "Online primal-dual mirror prox experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for per-round CSV and summary.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (T, seed) pair and fit growth slopes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated horizons, e.g. 100,1000,10000.
        #[arg(long = "T", value_delimiter = ',', required = true)]
        horizons: Vec<usize>,
        /// Seed range `a..b` (end exclusive), `a..=b`, or a comma list.
        #[arg(long, default_value = "0..1")]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate lemma checks on a scenario.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// `all` or a comma list of queue, dpp, pushback, mixing, descent.
        #[arg(long, default_value = "all")]
        lemmas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) | Error::Argument(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Usage(format!("invalid seed list '{s}'"));
    let num = |p: &str| p.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let cfg = ScenarioConfig::load(path).map_err(|e| Failure::Usage(e.to_string()))?;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<bool, Failure> {
    let mut cfg = load(config)?;
    if let Some(s) = seed {
        cfg = cfg.with_run(cfg.horizon, s);
    }
    let outcome = harness::run_scenario(&cfg, out)?;
    let r = &outcome.report;
    let bound = metrics::violation_bound_check(&outcome.trace, outcome.hyper.gamma)?;
    println!("scenario      {}", r.scenario_id);
    println!("variant       {}", cfg.variant.as_str());
    println!("T             {}", r.horizon);
    println!("seed          {}", cfg.seed);
    println!(
        "eta, gamma    {}, {}",
        outcome.hyper.eta, outcome.hyper.gamma
    );
    println!("V_cap         {}", r.v_cap);
    println!("regret        {}", r.regret);
    for (k, v) in r.violation.iter().enumerate() {
        println!("violation[{}]  {v}", k + 1);
    }
    println!(
        "queue bound   {} ({})",
        r.queue_bound,
        if bound.holds { "holds" } else { "VIOLATED" }
    );
    Ok(bound.holds)
}

fn sweep(
    config: &Path,
    horizons: Vec<usize>,
    seeds: &str,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    let base = load(config)?;
    let spec = SweepSpec {
        base,
        horizons,
        seeds: parse_seeds(seeds)?,
    };
    let s = harness::sweep(&spec, out)?;
    println!("T,mean_regret,mean_max_violation");
    for ((t, reg), (_, viol)) in s.mean_regret.iter().zip(&s.mean_max_violation) {
        println!("{t},{reg},{viol}");
    }
    println!("regret slope     {}", fmt_slope(s.regret_slope));
    println!(
        "violation slope  {} (offset {})",
        fmt_slope(s.violation_slope),
        s.violation_offset
    );
    Ok(true)
}

fn check(config: &Path, lemmas: &str, out: Option<&Path>) -> Result<bool, Failure> {
    let cfg = load(config)?;
    let lemmas = Lemma::parse_list(lemmas)?;
    let reports = harness::run_checks(&cfg, &lemmas)?;
    if let Some(dir) = out {
        harness::write_checks(dir, &cfg.scenario_id, &reports)?;
    }
    let mut all = true;
    for r in &reports {
        all &= r.pass;
        println!(
            "{:<22} {:>6} rounds {:>7} samples  max residual {:>12.4e}  {}",
            r.name,
            r.rounds,
            r.samples,
            r.max_residual,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    if reports.is_empty() {
        println!(
            "no requested check applies to variant {}",
            cfg.variant.as_str()
        );
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => run(&config, seed, out.as_deref()),
        Command::Sweep {
            config,
            horizons,
            seeds,
            out,
        } => sweep(&config, horizons, &seeds, out.as_deref()),
        Command::Check {
            config,
            lemmas,
            out,
        } => check(&config, &lemmas, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..4").ok().unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("2..=3").ok().unwrap(), vec![2, 3]);
        assert_eq!(parse_seeds("5,7").ok().unwrap(), vec![5, 7]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
