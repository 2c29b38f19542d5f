//! End-to-end orchestration: seeded sampling, characteristics, training,
//! regression and report emission, as resumable cells recorded in a ledger.

mod config;
mod ledger;
mod report;
mod run;

pub use config::{DatasetSource, ExperimentConfig, Metric, PlantedTarget, Target, OUTPUT_ENV};
pub use ledger::{LedgerEntry, RunLedger, Status, LEDGER_HEADER};
pub use report::{render_markdown, summary_csv, AlphaSummary, ALPHA_STATS_HEADER};
pub use run::{rq2_sweep, run, run_experiment, Command, RunOptions, RunOutcome, LEDGER_FILE};
