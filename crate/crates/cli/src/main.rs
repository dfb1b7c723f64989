mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssl_rate_lab::eval::exact::ExactEngine;

use crate::commands::BoundsParams;
use crate::config::{parse_ell_list, Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{manifest_hash, write_run};

#[derive(Debug, Parser)]
#[command(name = "ssl-rate-lab", version, about = "Exact minimax-rate experiments for semi-supervised learning")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone)]
struct EllList(Vec<u64>);

fn ell_list(s: &str) -> Result<EllList, String> {
    parse_ell_list(s).map(EllList)
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SSL_RATE_LAB_JOBS")]
    jobs: Option<usize>,
    /// Labeled sample sizes, `4,8,16` or `4..=64`.
    #[arg(long, global = true, value_parser = ell_list)]
    ell: Option<EllList>,
    /// zero, linear:k, square, quartic, exp or exp:cap.
    #[arg(long, global = true)]
    budget: Option<String>,
    /// pi0, pi1, piell[:n], pic:c or rich[:c:c'].
    #[arg(long, global = true)]
    family: Option<String>,
    /// Learner name; repeat or separate with commas.
    #[arg(long = "learner", global = true, value_delimiter = ',')]
    learner: Option<Vec<String>>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case exact risk per learner and labeled size, with lower bounds and fitted slopes.
    Sweep,
    /// Closed-form bounds at one parameter point.
    Bounds {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        u: u64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "c-prime")]
        c_prime: Option<f64>,
    },
    /// Best worst-case risk among the learner menu.
    Minimax {
        /// Also try each learner with some labeled draws discarded.
        #[arg(long)]
        discards: bool,
    },
    /// Mixture of the two-coin family with the threshold problem.
    Mixture,
    /// Runs the acceptance criteria.
    Verify {
        /// Criterion ids or 1-based positions.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Semi-supervised worst-case risk over the supervised lower bound.
    Compare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Bounds { .. } => "bounds",
            Command::Minimax { .. } => "minimax",
            Command::Mixture => "mixture",
            Command::Verify { .. } => "verify",
            Command::Compare => "compare",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = Overrides {
        seed: cli.common.seed,
        ell: cli.common.ell.clone().map(|e| e.0),
        budget: cli.common.budget.clone(),
        family: cli.common.family.clone(),
        learners: cli.common.learner.clone(),
        out: cli.common.out.clone(),
        jobs: cli.common.jobs,
    };
    let mut cfg = RunConfig::resolve(cli.common.config.as_deref(), flags)?;
    if let Command::Minimax { discards: true } = cli.command {
        cfg.with_discards = true;
    }
    let validated = cfg.validate()?;
    if let Some(n) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(anyhow::anyhow!("thread pool: {e}")))?;
    }
    let engine = ExactEngine::new(cfg.node_cap);
    let name = cli.command.name();

    match &cli.command {
        Command::Verify { only } => {
            let ids = commands::resolve_criteria(only)?;
            let reports = commands::verify(&ids, &engine);
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
            println!("{} of {} criteria passed", reports.len() - failed.len(), reports.len());
            if !failed.is_empty() {
                return Err(CliError::Failed(format!("failed: {}", failed.join(", "))));
            }
            Ok(())
        }
        Command::Bounds { alpha, beta, u, c, c_prime } => {
            let Some(ells) = cli.common.ell.as_ref().map(|e| e.0.clone()) else {
                return Err(CliError::Validation("bounds needs --ell".into()));
            };
            let args = serde_json::json!({ "alpha": alpha, "beta": beta, "u": u, "c": c, "c_prime": c_prime, "ell": ells });
            let hash = manifest_hash(name, &args, &cfg);
            let params = BoundsParams { alpha: *alpha, beta: *beta, u: *u, c: *c, c_prime: *c_prime };
            let table = commands::bounds(&ells, &params, &hash)?;
            print!("{}", String::from_utf8_lossy(&table.to_bytes()?));
            if cli.common.out.is_some() {
                write_run(&cfg.output_dir, name, &hash, &args, &cfg, &table)?;
            }
            Ok(())
        }
        cmd => {
            let args = serde_json::json!({});
            let hash = manifest_hash(name, &args, &cfg);
            let table = match cmd {
                Command::Sweep => commands::sweep(&cfg, &validated, &engine, &hash)?,
                Command::Minimax { .. } => commands::minimax(&cfg, &validated, &engine, &hash)?,
                Command::Mixture => commands::mixture(&cfg, &validated, &engine, &hash)?,
                Command::Compare => commands::compare(&cfg, &validated, &engine, &hash)?,
                Command::Verify { .. } | Command::Bounds { .. } => unreachable!("handled above"),
            };
            let path = write_run(&cfg.output_dir, name, &hash, &args, &cfg, &table)?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
