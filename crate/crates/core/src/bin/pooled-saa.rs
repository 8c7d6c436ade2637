use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pooled_saa::experiments::{
    ingest_demand_csv, load_spec, report_meta, run_backtest_file, run_diagnostics, run_simulation, solve_demand,
    spec_hash, write_demand_csv, AnchorKind, BacktestSpec, Bins, Cleaning, ExperimentReport, GridSpec, Policy,
    PolicySettings, RepId, ReportRow, SimSpec, SyntheticDemand,
};
use pooled_saa::par;

#[derive(Parser)]
#[command(name = "pooled-saa", version, about = "Data-pooled newsvendor and sample average approximation experiments")]
struct Cli {
    /// Worker threads (also read from POOLED_SAA_THREADS).
    #[arg(long, global = true, env = "POOLED_SAA_THREADS")]
    threads: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo simulation over synthetic subproblems.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated-subsampling backtest on a demand CSV.
    Backtest {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the CSV path in the spec.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sub-optimality, instability and LOO curves over the alpha grid.
    Diagnose {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pooled order quantities from a demand CSV, no truth needed.
    Solve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "gm")]
        anchor: AnchorArg,
        #[arg(long)]
        out: PathBuf,
        /// Bins per store, or `inf` for the continuous solver.
        #[arg(long, default_value = "20")]
        d: Bins,
        #[arg(long, default_value_t = 0.95)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        drop_weekends: bool,
    },
    /// Writes a synthetic store-demand CSV.
    GenDemand {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1115)]
        stores: usize,
        #[arg(long, default_value_t = 942)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnchorArg {
    Gm,
    Uniform,
    Beta,
}

fn write(report: &ExperimentReport, out: &Path) -> Result<()> {
    report.write(out).with_context(|| format!("writing {}", out.display()))?;
    log::info!("wrote {} rows to {}", report.rows.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    par::init_threads(cli.threads);
    if cli.serial {
        par::set_default(par::Schedule::Serial);
    }
    match cli.command {
        Command::Simulate { spec, out } => {
            let spec: SimSpec = load_spec(&spec)?;
            write(&run_simulation(&spec)?, &out)
        }
        Command::Backtest { spec, data, out } => {
            let spec: BacktestSpec = load_spec(&spec)?;
            write(&run_backtest_file(&spec, data.as_deref())?, &out)
        }
        Command::Diagnose { spec, out } => {
            let spec: SimSpec = load_spec(&spec)?;
            write(&run_diagnostics(&spec)?, &out)
        }
        Command::Solve { data, anchor, out, d, s, seed, drop_weekends } => {
            let started = chrono::Utc::now().to_rfc3339();
            let demand = ingest_demand_csv(&data, &Cleaning { drop_weekends, ..Default::default() })?;
            let kind = match anchor {
                AnchorArg::Gm => AnchorKind::GrandMean,
                AnchorArg::Uniform => AnchorKind::Fixed,
                AnchorArg::Beta => AnchorKind::Beta,
            };
            let grid = GridSpec::default().resolve()?;
            let ctx = PolicySettings::default().context(grid, seed, 0)?;
            let (alpha, decisions) = solve_demand(&demand, d, s, kind, &ctx)?;
            let k = decisions.len();
            let policy = Policy::Ssaa(kind).to_string();
            let rows = decisions
                .into_iter()
                .map(|(id, x)| ReportRow {
                    rep: RepId::Index(0),
                    k,
                    policy: policy.clone(),
                    alpha: Some(alpha),
                    metric: format!("decision:{id}"),
                    value: x,
                })
                .collect();
            let hash = spec_hash(&(data.display().to_string(), Policy::Ssaa(kind), d, s, seed));
            let report = ExperimentReport { rows, meta: report_meta(hash, seed, started) };
            write(&report, &out)
        }
        Command::GenDemand { out, stores, days, seed } => {
            let stores = SyntheticDemand { stores, days, seed, ..Default::default() }.generate()?;
            write_demand_csv(&stores, &out)?;
            log::info!("wrote {} stores to {}", stores.len(), out.display());
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
