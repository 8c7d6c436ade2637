//! Experiment specs, data generation and ingestion, orchestration, reports.

pub mod backtest;
pub mod discretize;
pub mod ingest;
pub mod policy;
pub mod report;
pub mod sim;
pub mod spec;
pub mod synthetic;

pub use backtest::{run_backtest, run_backtest_file, solve_demand};
pub use discretize::{discretize, Binning};
pub use ingest::{clean, ingest_demand_csv, parse_demand_csv, read_demand_csv, Cleaning, DemandData, StoreSeries};
pub use policy::{pooled_decisions, run_policy, AnchorKind, Policy, PolicyContext, PolicyOutcome};
pub use report::{fmt_g9, mean_se, ExperimentReport, RepId, ReportMeta, ReportRow, CSV_HEADER};
pub use sim::{gen_instance, multinomial, report_meta, run_diagnostics, run_simulation, true_performance, SimWorld};
pub use spec::{
    load_spec, spec_hash, AlphaValue, BacktestSpec, Bins, DataModel, GridSpec, MixtureComponent, PolicySettings,
    SimSpec, TruthModel,
};
pub use synthetic::{write_demand_csv, SyntheticDemand};
