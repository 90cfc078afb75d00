use serde::{Deserialize, Deserializer, Serialize};

use super::field::ChemicalParams;
use crate::clonal::ExpansionParams;
use crate::error::ConfigError;
use crate::shape::{circular_distance, BindingParams, ShapeValue};

/// What activation does to a cell's lifespan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rescue {
    /// Activated cells keep the naive lifespan.
    None,
    /// Lifespan stretched toward the memory lifespan in proportion to
    /// binding strength.
    Affinity,
    /// Every activated cell gets the memory lifespan.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strain {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialInjection {
    pub tick: u32,
    pub strain: String,
    pub count: usize,
    /// Centre of the landing square; the grid centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<[u32; 2]>,
    /// Particles land uniformly in a square of side `2 * spread + 1`.
    #[serde(default = "default_spread")]
    pub spread: u32,
}

fn default_spread() -> u32 {
    3
}

/// Memory mechanisms and the bystander rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialTheory {
    pub rescue: Rescue,
    pub memory_probability: f64,
    pub residual: bool,
    pub mean_interval: f64,
    /// Particles retained per injection for reintroduction; 0 is unlimited.
    pub residual_depot: usize,
    pub bystander: bool,
    pub bystander_probability: f64,
    pub il15_threshold: f64,
    /// IL-15 released per tick by each activated cell.
    pub il15_secretion: f64,
}

impl Default for SpatialTheory {
    fn default() -> Self {
        Self {
            rescue: Rescue::Affinity,
            memory_probability: 0.1,
            residual: false,
            mean_interval: 3.0,
            residual_depot: 0,
            bystander: true,
            bystander_probability: 0.3,
            il15_threshold: 0.5,
            il15_secretion: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialConfig {
    pub width: u32,
    pub height: u32,
    pub total_ticks: u32,
    pub recruits_per_tick: u32,
    /// Fill the grid with a steady-state naive pool before tick 0.
    pub prefill: bool,
    pub naive_lifespan: u32,
    pub memory_lifespan: u32,
    pub antibody_lifespan: u32,
    /// Ticks a cell stays activated after binding.
    pub activation_ticks: u32,
    /// Antibodies released per tick by each activated cell.
    pub antibody_rate: u64,
    pub max_clones: u32,
    pub expansion: ExpansionParams,
    #[serde(deserialize_with = "spatial_binding")]
    pub binding: BindingParams,
    /// Smallest attractant gain that triggers a directed move.
    pub chemotaxis_sensitivity: f64,
    /// Attractant released per tick by each antigen particle.
    pub attractant_secretion: f64,
    pub attractant: ChemicalParams,
    pub il15: ChemicalParams,
    pub theory: SpatialTheory,
    pub strains: Vec<Strain>,
    pub injections: Vec<SpatialInjection>,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            width: 48,
            height: 48,
            total_ticks: 1200,
            recruits_per_tick: 400,
            prefill: true,
            naive_lifespan: 24,
            memory_lifespan: 2160,
            antibody_lifespan: 240,
            activation_ticks: 24,
            antibody_rate: 10,
            max_clones: 20,
            expansion: ExpansionParams::default(),
            binding: BindingParams::spatial(),
            chemotaxis_sensitivity: 1e-6,
            attractant_secretion: 1.0,
            attractant: ChemicalParams {
                diffusion: 0.5,
                decay: 0.05,
            },
            il15: ChemicalParams {
                diffusion: 0.2,
                decay: 0.1,
            },
            theory: SpatialTheory::default(),
            strains: vec![Strain {
                name: "A".into(),
                value: 5000.0,
            }],
            injections: vec![
                SpatialInjection {
                    tick: 50,
                    strain: "A".into(),
                    count: 300,
                    site: None,
                    spread: default_spread(),
                },
                SpatialInjection {
                    tick: 550,
                    strain: "A".into(),
                    count: 300,
                    site: None,
                    spread: default_spread(),
                },
            ],
        }
    }
}

/// Partial `binding` tables fill the gaps from the lattice defaults rather
/// than the generational ones.
fn spatial_binding<'de, D: Deserializer<'de>>(d: D) -> Result<BindingParams, D::Error> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Partial {
        radius: Option<f64>,
        shift: Option<f64>,
        space_size: Option<f64>,
        affinity_floor: Option<f64>,
    }
    let p = Partial::deserialize(d)?;
    let base = BindingParams::spatial();
    Ok(BindingParams {
        radius: p.radius.unwrap_or(base.radius),
        shift: p.shift.unwrap_or(base.shift),
        space_size: p.space_size.unwrap_or(base.space_size),
        affinity_floor: p.affinity_floor.unwrap_or(base.affinity_floor),
    })
}

fn probability(key: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must lie in [0, 1]"))
    }
}

impl SpatialTheory {
    pub fn validate(&self) -> Result<(), ConfigError> {
        probability("memory_probability", self.memory_probability)?;
        probability("bystander_probability", self.bystander_probability)?;
        if !(self.mean_interval >= 1.0) {
            return Err(ConfigError::invalid("mean_interval", "must be >= 1"));
        }
        if !(self.il15_threshold >= 0.0) || !(self.il15_secretion >= 0.0) {
            return Err(ConfigError::invalid(
                "il15_threshold",
                "IL-15 amounts must be >= 0",
            ));
        }
        Ok(())
    }
}

impl SpatialConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width < 3 || self.height < 3 {
            return Err(ConfigError::invalid("width", "grid sides must be >= 3"));
        }
        if self.naive_lifespan == 0 || self.naive_lifespan >= self.memory_lifespan {
            return Err(ConfigError::invalid(
                "naive_lifespan",
                "must be > 0 and below memory_lifespan",
            ));
        }
        if self.antibody_lifespan == 0 {
            return Err(ConfigError::invalid("antibody_lifespan", "must be > 0"));
        }
        if self.max_clones == 0 {
            return Err(ConfigError::invalid("max_clones", "must be >= 1"));
        }
        if !(self.chemotaxis_sensitivity >= 0.0) || !(self.attractant_secretion >= 0.0) {
            return Err(ConfigError::invalid(
                "chemotaxis_sensitivity",
                "chemotaxis constants must be >= 0",
            ));
        }
        self.binding.validate().map_err(|e| e.within("binding"))?;
        self.attractant
            .validate()
            .map_err(|e| e.within("attractant"))?;
        self.il15.validate().map_err(|e| e.within("il15"))?;
        self.theory.validate().map_err(|e| e.within("theory"))?;
        self.validate_strains()?;
        for inj in &self.injections {
            if inj.tick >= self.total_ticks {
                return Err(ConfigError::invalid(
                    "injections",
                    format!("tick {} is outside [0, {})", inj.tick, self.total_ticks),
                ));
            }
            if inj.count == 0 {
                return Err(ConfigError::invalid("injections", "count must be > 0"));
            }
            if inj
                .site
                .is_some_and(|[x, y]| x >= self.width || y >= self.height)
            {
                return Err(ConfigError::invalid(
                    "injections",
                    "site lies outside the grid",
                ));
            }
            if self.strain_index(&inj.strain).is_none() {
                return Err(ConfigError::invalid(
                    "injections",
                    format!("unknown strain `{}`", inj.strain),
                ));
            }
        }
        if self.injections.windows(2).any(|w| w[0].tick > w[1].tick) {
            return Err(ConfigError::invalid(
                "injections",
                "ticks must be non-decreasing",
            ));
        }
        Ok(())
    }

    /// Distinct strains must sit at least two binding radii apart, otherwise
    /// a response to one could cross-react with the other.
    fn validate_strains(&self) -> Result<(), ConfigError> {
        if self.strains.is_empty() || self.strains.len() > u8::MAX as usize {
            return Err(ConfigError::invalid(
                "strains",
                "need between 1 and 255 strains",
            ));
        }
        for (i, a) in self.strains.iter().enumerate() {
            ShapeValue::new(a.value, self.binding.space_size).map_err(|e| {
                ConfigError::invalid("strains", format!("{}: {}", a.name, e.message))
            })?;
            for b in &self.strains[..i] {
                if a.name == b.name {
                    return Err(ConfigError::invalid(
                        "strains",
                        format!("duplicate strain name `{}`", a.name),
                    ));
                }
                let d = circular_distance(
                    ShapeValue::wrapped(a.value, self.binding.space_size),
                    ShapeValue::wrapped(b.value, self.binding.space_size),
                    self.binding.space_size,
                );
                if d < 2.0 * self.binding.radius {
                    return Err(ConfigError::invalid(
                        "strains",
                        format!(
                            "`{}` and `{}` are {d} apart, closer than twice the binding radius",
                            b.name, a.name
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn strain_index(&self, name: &str) -> Option<usize> {
        self.strains.iter().position(|s| s.name == name)
    }

    pub fn strain_values(&self) -> Vec<ShapeValue> {
        self.strains
            .iter()
            .map(|s| ShapeValue::wrapped(s.value, self.binding.space_size))
            .collect()
    }
}
