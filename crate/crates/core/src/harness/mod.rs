//! Experiment configs, the simulation loop, metrics, sweeps and slope fits.

mod checks;
mod config;
pub mod presets;
mod run;
mod sweep;

pub use checks::{check_quadratic_lemma, fuzz_lemma1, fuzz_surrogate, igw_contract_holds, verify_oracle, OracleCheck};
pub use config::{ExperimentConfig, OracleConfig, RegimeConfig, SCHEMA_VERSION};
pub use run::{
    quantile, run_single, run_streaming, write_round_csv, write_round_header, write_round_row, RoundLog, RunOutput,
    RunSummary,
};
pub use sweep::{
    fit_slope, run_sweep, run_sweep_with_threads, write_sweep_csv, HorizonStats, SlopeFit, SweepOutput, SweepSummary,
};
