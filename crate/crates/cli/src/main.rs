use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use memsim::scenario::{bundled, parse_override, resolve};
use memsim::Error;
use memsim_cli::output::summary_text;
use memsim_cli::{run_scenario, summarize_dir, write_run};

/// Immune memory simulations: clonal shape-space and spatial agent models.
#[derive(Parser)]
#[command(name = "memsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled scenario by name, or a scenario file by path.
    Run {
        scenario: String,
        /// Master seed; replicate seeds derive from it.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Existing directory; results go to OUT/<scenario name>/.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override a scenario key, e.g. clonal.theory.death_rate=40.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List bundled scenarios.
    List,
    /// Recompute peak-comparison summaries from finished runs under DIR.
    Summarize { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::List => {
            for s in bundled() {
                println!("{:<20} {}", s.name, s.description);
            }
        }
        Command::Run {
            scenario,
            seed,
            replicates,
            out,
            set,
        } => {
            if !out.is_dir() {
                return Err(Error::MissingOutputDir(out));
            }
            let mut overrides = set
                .iter()
                .map(|s| parse_override(s))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(s) = seed {
                overrides.push(("run.seed".into(), s.to_string()));
            }
            if let Some(r) = replicates {
                overrides.push(("run.replicates".into(), r.to_string()));
            }
            let scenario = resolve(&scenario, &overrides)?;
            let start = Instant::now();
            let run = run_scenario(&scenario)?;
            let dir = write_run(&run, &out)?;
            eprintln!(
                "{}: {} replicate(s) in {:.1} s -> {}",
                scenario.name,
                run.replicates.len(),
                start.elapsed().as_secs_f64(),
                dir.display()
            );
            let summary = dir.join("summary.txt");
            if summary.is_file() {
                print!(
                    "{}",
                    std::fs::read_to_string(&summary).map_err(|e| Error::io(&summary, e))?
                );
            }
        }
        Command::Summarize { dir } => {
            let rows = summarize_dir(&dir)?;
            print!("{}", summary_text(&rows));
        }
    }
    Ok(())
}
