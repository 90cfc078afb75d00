//! Generational clonal-selection model.
//!
//! A homeostatic population of reactive elements ("Rises") is fed by constant
//! recruitment and thinned by age-dependent mortality. Antigen injections
//! trigger tournament binding and clonal expansion. Memory mechanisms are
//! switched on through [`TheoryConfig`]; none of them creates memory cells
//! directly.

pub mod ops;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::shape::{AffinityHistogram, BindingParams, ShapeValue};
use ops::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rise {
    pub value: ShapeValue,
    /// Generations since birth; pushed up by network suppression and down
    /// by emergent rejuvenation. Negative while a preservation credit lasts.
    pub age: i32,
}

impl Rise {
    pub fn newborn(value: ShapeValue) -> Self {
        Self { value, age: 0 }
    }
}

/// A non-replicating antigen particle. Its shape never changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntigenParticle {
    value: ShapeValue,
}

impl AntigenParticle {
    pub fn new(value: ShapeValue) -> Self {
        Self { value }
    }

    pub fn value(&self) -> ShapeValue {
        self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionParams {
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            sigma_max: 200.0,
            sigma_min: 1.0,
        }
    }
}

pub const DEFAULT_PRESERVATION_SPAN: u32 = 250;
pub const DEFAULT_RESIDUAL_DEPOT: usize = 60;
pub const DEFAULT_SUPPRESSION_PENALTY: u32 = 5;

/// Population dynamics plus the switchable memory mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub death_rate: u32,
    pub recruits_per_gen: usize,
    pub tournament_k: usize,
    pub max_clones: u32,
    pub expansion: ExpansionParams,

    pub emergent: bool,
    pub rejuvenation_gain: f64,
    /// Generations of extra life a perfect binder is credited on binding.
    pub preservation_span: u32,

    pub residual: bool,
    pub mean_interval: f64,
    /// Particles retained per injection for later reintroduction; 0
    /// reintroduces indefinitely.
    pub residual_depot: usize,

    pub network: bool,
    pub sample_fraction: f64,
    pub network_clones: u32,
    /// Generations of age added to a Rise bound by another Rise.
    pub suppression_penalty: u32,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            death_rate: 30,
            recruits_per_gen: 50,
            tournament_k: 10,
            max_clones: 20,
            expansion: ExpansionParams::default(),
            emergent: false,
            rejuvenation_gain: 1.0,
            preservation_span: DEFAULT_PRESERVATION_SPAN,
            residual: false,
            mean_interval: 3.0,
            residual_depot: DEFAULT_RESIDUAL_DEPOT,
            network: false,
            sample_fraction: 0.1,
            network_clones: 2,
            suppression_penalty: DEFAULT_SUPPRESSION_PENALTY,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.death_rate == 0 {
            return Err(ConfigError::invalid("death_rate", "must be > 0"));
        }
        if self.tournament_k == 0 {
            return Err(ConfigError::invalid("tournament_k", "must be >= 1"));
        }
        if self.max_clones == 0 || self.network_clones == 0 {
            return Err(ConfigError::invalid("max_clones", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.rejuvenation_gain) {
            return Err(ConfigError::invalid(
                "rejuvenation_gain",
                "must lie in [0, 1]",
            ));
        }
        if !(self.mean_interval >= 1.0) {
            return Err(ConfigError::invalid("mean_interval", "must be >= 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(ConfigError::invalid(
                "sample_fraction",
                "must lie in (0, 1]",
            ));
        }
        let e = &self.expansion;
        if !(e.sigma_min > 0.0 && e.sigma_max >= 0.0) {
            return Err(ConfigError::invalid(
                "expansion.sigma_min",
                "mutation widths must be positive",
            ));
        }
        Ok(())
    }

    pub fn network_params(&self) -> NetworkParams {
        NetworkParams {
            sample_fraction: self.sample_fraction,
            tournament_k: self.tournament_k,
            max_clones: self.network_clones,
            age_penalty: self.suppression_penalty.min(i32::MAX as u32) as i32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub at: u32,
    pub count: usize,
}

/// Everything needed to run one replicate of the generational model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClonalConfig {
    pub total_generations: u32,
    pub antigen_value: f64,
    pub initial_population: usize,
    pub injections: Vec<Injection>,
    pub binding: BindingParams,
    pub theory: TheoryConfig,
}

pub const DEFAULT_INJECTION_SIZE: usize = 500;
pub const PRIMARY_INJECTION: u32 = 70;
pub const SMALL_GAP_SECONDARY: u32 = 120;
pub const BIG_GAP_SECONDARY: u32 = 420;

impl Default for ClonalConfig {
    fn default() -> Self {
        Self {
            total_generations: 600,
            antigen_value: 3.3,
            initial_population: 0,
            injections: vec![
                Injection {
                    at: PRIMARY_INJECTION,
                    count: DEFAULT_INJECTION_SIZE,
                },
                Injection {
                    at: SMALL_GAP_SECONDARY,
                    count: DEFAULT_INJECTION_SIZE,
                },
            ],
            binding: BindingParams::clonal(),
            theory: TheoryConfig::default(),
        }
    }
}

impl ClonalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.binding.validate().map_err(|e| e.within("binding"))?;
        self.theory.validate().map_err(|e| e.within("theory"))?;
        ShapeValue::new(self.antigen_value, self.binding.space_size)
            .map_err(|e| ConfigError::invalid("antigen_value", e.message))?;
        for inj in &self.injections {
            if inj.at >= self.total_generations {
                return Err(ConfigError::invalid(
                    "injections",
                    format!(
                        "generation {} is outside [0, {})",
                        inj.at, self.total_generations
                    ),
                ));
            }
            if inj.count == 0 {
                return Err(ConfigError::invalid("injections", "count must be > 0"));
            }
        }
        if self.injections.windows(2).any(|w| w[0].at >= w[1].at) {
            return Err(ConfigError::invalid(
                "injections",
                "generations must be strictly increasing",
            ));
        }
        Ok(())
    }

    pub fn antigen(&self) -> ShapeValue {
        ShapeValue::wrapped(self.antigen_value, self.binding.space_size)
    }

    /// Generation of the first injection, which arms residual reintroduction.
    pub fn primary_generation(&self) -> Option<u32> {
        self.injections.first().map(|i| i.at)
    }
}

/// One recorded generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    pub generation: u32,
    pub rise_count: usize,
    pub antigen_count: usize,
    pub bound: usize,
    pub network_bindings: usize,
    pub affinity: AffinityHistogram,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<GenerationRow>,
}

impl RunRecord {
    pub fn antigen_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.antigen_count as f64).collect()
    }

    pub fn population_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rise_count as f64).collect()
    }
}

/// Mutable state of one replicate.
#[derive(Debug, Clone)]
pub struct ClonalWorld {
    pub generation: u32,
    pub rises: Vec<Rise>,
    pub antigen: Vec<AntigenParticle>,
    /// Particles still available for residual reintroduction.
    pub depot: Option<usize>,
    config: ClonalConfig,
    antigen_value: ShapeValue,
    rng: ChaCha8Rng,
}

impl ClonalWorld {
    pub fn new(config: ClonalConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rises = Vec::new();
        ops::recruit(
            &mut rises,
            config.initial_population,
            config.binding.space_size,
            &mut rng,
        );
        Ok(Self {
            generation: 0,
            rises,
            antigen: Vec::new(),
            depot: (config.theory.residual_depot > 0).then_some(0),
            antigen_value: config.antigen(),
            config,
            rng,
        })
    }

    pub fn config(&self) -> &ClonalConfig {
        &self.config
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Adds `count` particles of `value` immediately.
    pub fn inject_antigen(&mut self, count: usize, value: ShapeValue) {
        self.antigen
            .extend(std::iter::repeat_n(AntigenParticle::new(value), count));
    }

    /// Adds `n` newborns at random shape values, outside the regular
    /// recruitment schedule.
    pub fn add_newborns(&mut self, n: usize) {
        ops::recruit(
            &mut self.rises,
            n,
            self.config.binding.space_size,
            &mut self.rng,
        );
    }

    /// Removes a uniformly random `fraction` of the population.
    pub fn cull(&mut self, fraction: f64) {
        let keep = self.rises.len()
            - (self.rises.len() as f64 * fraction.clamp(0.0, 1.0)).round() as usize;
        self.rises.shuffle(&mut self.rng);
        self.rises.truncate(keep);
    }

    /// Runs one generation and returns its record row.
    ///
    /// Order: age, recruit, mortality, scheduled injections, residual
    /// reintroduction, one binding attempt per antigen, network stimulation,
    /// record.
    pub fn step(&mut self) -> GenerationRow {
        let g = self.generation;
        let binding = self.config.binding;
        let theory = self.config.theory.clone();

        if g > 0 {
            for r in &mut self.rises {
                r.age = r.age.saturating_add(1);
            }
        }
        ops::recruit(
            &mut self.rises,
            theory.recruits_per_gen,
            binding.space_size,
            &mut self.rng,
        );
        ops::apply_mortality(&mut self.rises, theory.death_rate, &mut self.rng);

        for inj in self.config.injections.iter().filter(|i| i.at == g) {
            self.antigen.extend(std::iter::repeat_n(
                AntigenParticle::new(self.antigen_value),
                inj.count,
            ));
            if let Some(left) = &mut self.depot {
                *left += theory.residual_depot;
            }
        }

        let depot_open = self.depot.is_none_or(|left| left > 0);
        if theory.residual && depot_open && self.config.primary_generation().is_some_and(|p| g > p)
        {
            if let Some(particle) =
                ops::residual_reintroduce(self.antigen_value, theory.mean_interval, &mut self.rng)
            {
                self.antigen.push(particle);
                if let Some(left) = &mut self.depot {
                    *left -= 1;
                }
            }
        }

        let bound = self.bind_antigen();

        let network_bindings = if theory.network {
            let net = theory.network_params();
            ops::network_stimulate(
                &mut self.rises,
                &net,
                &theory.expansion,
                &binding,
                &mut self.rng,
            )
        } else {
            0
        };

        let row = GenerationRow {
            generation: g,
            rise_count: self.rises.len(),
            antigen_count: self.antigen.len(),
            bound,
            network_bindings,
            affinity: AffinityHistogram::from_values(
                self.rises.iter().map(|r| r.value),
                self.antigen_value,
                &binding,
            ),
        };
        self.generation += 1;
        row
    }

    /// One tournament per live antigen against the population as it stood
    /// when binding began; clones join the population afterwards.
    fn bind_antigen(&mut self) -> usize {
        let binding = self.config.binding;
        let theory = &self.config.theory;
        let mut clones = Vec::new();
        let mut bound = 0;
        let rises = &mut self.rises;
        let rng = &mut self.rng;
        self.antigen.retain(|particle| {
            match ops::tournament_bind(rises, particle.value(), theory.tournament_k, &binding, rng)
            {
                Some((winner, d)) => {
                    bound += 1;
                    if theory.emergent {
                        ops::emergent_rejuvenate(
                            &mut rises[winner],
                            d,
                            theory.rejuvenation_gain,
                            theory.preservation_span,
                            &binding,
                        );
                    }
                    ops::clonal_expand(
                        rises[winner].value,
                        d,
                        theory.max_clones,
                        &theory.expansion,
                        &binding,
                        rng,
                        &mut clones,
                    );
                    false
                }
                None => true,
            }
        });
        self.rises.append(&mut clones);
        bound
    }

    pub fn run_to_end(mut self) -> RunRecord {
        let total = self.config.total_generations;
        let mut record = RunRecord {
            rows: Vec::with_capacity(total as usize),
        };
        while self.generation < total {
            record.rows.push(self.step());
        }
        record
    }
}

/// Runs a full replicate.
pub fn run_clonal(config: &ClonalConfig, seed: u64) -> Result<RunRecord, ConfigError> {
    Ok(ClonalWorld::new(config.clone(), seed)?.run_to_end())
}
