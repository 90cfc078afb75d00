//! Scenario runner behind the `memsim` binary: replicate orchestration and
//! the files a run leaves on disk.

pub mod output;
pub mod runner;

pub use output::{summarize_dir, write_run};
pub use runner::{run_scenario, Replicate, RunOutput};
