//! Scenario files, sweeps and tabular output for the WPT-MEC energy solver.

pub mod output;
pub mod run;
pub mod scenario;

pub use output::{format_number, parse_json, write_csv, write_json, write_trace_csv};
pub use run::{run, solve_point, Mode, Record, RunOptions, Status};
pub use scenario::{load_scenario, parse_scenario, Point, Scenario, ScenarioError};
