//! Replicate orchestration.

use memsim::clonal::{run_clonal, RunRecord};
use memsim::scenario::{Engine, Scenario};
use memsim::seed::replicate_seed;
use memsim::spatial::{run_spatial, SpatialRecord};
use memsim::stats::{classify_experiment, WilcoxonResult, MIN_PAIRS};
use memsim::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Replicate {
    Clonal(RunRecord),
    Spatial(SpatialRecord),
}

impl Replicate {
    /// Total antigen per recorded step, summed over strains.
    pub fn antigen_series(&self) -> Vec<f64> {
        match self {
            Replicate::Clonal(r) => r.antigen_series(),
            Replicate::Spatial(r) => r
                .rows
                .iter()
                .map(|row| row.antigen.iter().sum::<u64>() as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub replicates: Vec<Replicate>,
}

impl RunOutput {
    /// Peak comparison across replicates, when the scenario has two
    /// distinct injection times and enough replicates for the test.
    pub fn summary(
        &self,
    ) -> Option<std::result::Result<WilcoxonResult, memsim::error::StatsError>> {
        summarize_series(
            &self.scenario,
            self.replicates.iter().map(Replicate::antigen_series),
        )
    }
}

/// Distinct injection times, in order.
pub fn injection_times(scenario: &Scenario) -> Vec<usize> {
    let mut times: Vec<usize> = match scenario.engine {
        Engine::Clonal => scenario
            .clonal
            .iter()
            .flat_map(|c| c.injections.iter().map(|i| i.at as usize))
            .collect(),
        Engine::Spatial => scenario
            .spatial
            .iter()
            .flat_map(|s| s.injections.iter().map(|i| i.tick as usize))
            .collect(),
    };
    times.dedup();
    times
}

pub fn summarize_series<I>(
    scenario: &Scenario,
    series: I,
) -> Option<std::result::Result<WilcoxonResult, memsim::error::StatsError>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let times = injection_times(scenario);
    let series: Vec<Vec<f64>> = series.into_iter().collect();
    if times.len() < 2 || series.len() < MIN_PAIRS {
        return None;
    }
    Some(classify_experiment(
        series.iter().map(Vec::as_slice),
        &times,
    ))
}

pub fn run_one(scenario: &Scenario, seed: u64) -> Result<Replicate> {
    let rec = match scenario.engine {
        Engine::Clonal => Replicate::Clonal(run_clonal(
            scenario.clonal.as_ref().expect("normalised"),
            seed,
        )?),
        Engine::Spatial => Replicate::Spatial(run_spatial(
            scenario.spatial.as_ref().expect("normalised"),
            seed,
        )?),
    };
    Ok(rec)
}

/// Runs every replicate on a pool of `run.workers` threads (0 means one per
/// hardware thread). Results come back in replicate order whatever the
/// scheduling.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let seeds: Vec<u64> = (0..scenario.run.replicates as u64)
        .map(|i| replicate_seed(scenario.run.seed, i))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scenario.run.workers)
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    let replicates = pool.install(|| {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&seed| run_one(scenario, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(RunOutput {
        scenario: scenario.clone(),
        seeds,
        replicates,
    })
}
