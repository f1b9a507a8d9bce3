//! Configuration, runs over particle numbers at fixed `R`, rate fits and
//! plot-script emission.

pub mod config;
pub mod fit;
pub mod plots;
pub mod run;

pub use config::{validate_config, RawConfig, RunConfig};
pub use fit::{fit_rate, fit_rows, Quantity, RateFit};
pub use plots::emit_plots;
pub use run::{run_hartree, run_manybody, run_point, run_sweep, CsvRow, SweepSummary};
