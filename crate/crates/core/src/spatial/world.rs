use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Rescue, SpatialConfig};
use super::field::ChemicalField;
use super::grid::Torus;
use super::motion::sense_and_move;
use crate::clonal::ops::{match_strength, mutated_clones};
use crate::error::ConfigError;
use crate::seed::combine;
use crate::shape::{circular_distance, ShapeValue};

// Stream tags keep the per-purpose random streams of a tick apart.
const TAG_AGENT: u64 = 1;
const TAG_RECRUIT: u64 = 2;
const TAG_INJECT: u64 = 3;
const TAG_RESIDUAL: u64 = 4;
const TAG_PREFILL: u64 = 5;
const TAG_CLONE: u64 = 6;
const TAG_COPY: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellState {
    Naive,
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BCell {
    /// Stable identity; keys the cell's random stream and breaks ties.
    pub id: u64,
    pub receptor: ShapeValue,
    pub pos: u32,
    pub age: u32,
    pub lifespan: u32,
    pub state: CellState,
    /// The cell counts as activated while the tick is below this value.
    pub active_until: u32,
    /// Strain of the antigen that last activated the cell.
    pub family: u8,
}

impl BCell {
    pub fn is_active(&self, tick: u32) -> bool {
        tick < self.active_until
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialAntigen {
    pub id: u64,
    pub strain: u8,
    pub value: ShapeValue,
    pub pos: u32,
}

/// Antibodies released against one strain in one tick. They share a fixed
/// lifespan, so a cohort is a count and an expiry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AntibodyCohort {
    strain: u8,
    expires: u32,
    count: u64,
}

/// One recorded tick. Per-strain vectors follow the order of
/// `SpatialConfig::strains`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialRow {
    pub tick: u32,
    pub naive: u64,
    pub memory: u64,
    /// Memory cells able to bind each strain.
    pub memory_specific: Vec<u64>,
    /// Naive cells able to bind none of the strains.
    pub naive_unrelated: u64,
    pub antibodies: Vec<u64>,
    pub antigen: Vec<u64>,
    pub activations: u64,
    pub bystander_divisions: u64,
    pub il15_mass: f64,
    pub attractant_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpatialRecord {
    pub strain_names: Vec<String>,
    pub rows: Vec<SpatialRow>,
}

impl SpatialRecord {
    pub fn memory_series(&self, strain: usize) -> Vec<u64> {
        self.rows
            .iter()
            .map(|r| r.memory_specific[strain])
            .collect()
    }

    pub fn antibody_series(&self, strain: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r.antibodies[strain]).collect()
    }

    pub fn antigen_series(&self, strain: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r.antigen[strain]).collect()
    }
}

/// What a cell decided during the read phase of a tick.
#[derive(Debug, Clone, Default)]
struct Intent {
    dies: bool,
    new_pos: u32,
    claim: Option<Claim>,
    divides: bool,
}

#[derive(Debug, Clone, Default)]
struct Claim {
    antigen: u32,
    distance: f64,
    becomes_memory: bool,
    clones: Vec<ShapeValue>,
}

/// Antigen bucketed by location, rebuilt every tick.
#[derive(Debug, Clone, Default)]
struct AntigenIndex {
    start: Vec<u32>,
    items: Vec<u32>,
}

impl AntigenIndex {
    fn rebuild(&mut self, cells: usize, antigen: &[SpatialAntigen]) {
        self.start.clear();
        self.start.resize(cells + 1, 0);
        for a in antigen {
            self.start[a.pos as usize + 1] += 1;
        }
        for i in 0..cells {
            self.start[i + 1] += self.start[i];
        }
        let mut fill = self.start.clone();
        self.items.clear();
        self.items.resize(antigen.len(), 0);
        for (i, a) in antigen.iter().enumerate() {
            let slot = &mut fill[a.pos as usize];
            self.items[*slot as usize] = i as u32;
            *slot += 1;
        }
    }

    #[inline]
    fn at(&self, pos: u32) -> &[u32] {
        let p = pos as usize;
        &self.items[self.start[p] as usize..self.start[p + 1] as usize]
    }
}

/// The full state of one spatial replicate.
#[derive(Debug, Clone)]
pub struct SpatialWorld {
    config: SpatialConfig,
    torus: Torus,
    seed: u64,
    strains: Vec<ShapeValue>,
    tick: u32,
    pub cells: Vec<BCell>,
    pub antigen: Vec<SpatialAntigen>,
    pub attractant: ChemicalField,
    pub il15: ChemicalField,
    antibodies: Vec<AntibodyCohort>,
    depot: Option<usize>,
    /// Strain and site of the latest injection, used for reintroduction.
    last_site: Option<(u8, u32, u32)>,
    index: AntigenIndex,
    intents: Vec<Intent>,
    antigen_serial: u64,
}

impl SpatialWorld {
    pub fn new(config: SpatialConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let torus = Torus::new(config.width, config.height).expect("validated grid");
        let mut world = Self {
            torus,
            seed,
            strains: config.strain_values(),
            tick: 0,
            cells: Vec::new(),
            antigen: Vec::new(),
            attractant: ChemicalField::new(torus, config.attractant),
            il15: ChemicalField::new(torus, config.il15),
            antibodies: Vec::new(),
            depot: (config.theory.residual_depot > 0).then_some(0),
            last_site: None,
            index: AntigenIndex::default(),
            intents: Vec::new(),
            antigen_serial: 0,
            config,
        };
        if world.config.prefill {
            world.prefill();
        }
        Ok(world)
    }

    pub fn config(&self) -> &SpatialConfig {
        &self.config
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    fn stream(&self, tag: u64) -> SmallRng {
        SmallRng::seed_from_u64(combine(combine(self.seed, self.tick as u64), tag))
    }

    fn new_naive(&self, id: u64, rng: &mut SmallRng, age: u32) -> BCell {
        let space = self.config.binding.space_size;
        BCell {
            id,
            receptor: ShapeValue::wrapped(rng.random::<f64>() * space, space),
            pos: rng.random_range(0..self.torus.len() as u32),
            age,
            lifespan: self.config.naive_lifespan,
            state: CellState::Naive,
            active_until: 0,
            family: 0,
        }
    }

    /// A naive pool at its steady state: `recruits_per_tick` cells of every
    /// age below the naive lifespan.
    fn prefill(&mut self) {
        let mut rng = SmallRng::seed_from_u64(combine(self.seed, TAG_PREFILL));
        let per_age = self.config.recruits_per_tick;
        self.cells
            .reserve(per_age as usize * self.config.naive_lifespan as usize);
        for age in 0..self.config.naive_lifespan {
            for i in 0..per_age {
                let id = combine(combine(TAG_PREFILL, age as u64), i as u64);
                let cell = self.new_naive(id, &mut rng, age);
                self.cells.push(cell);
            }
        }
    }

    /// Places a cell directly, bypassing recruitment.
    pub fn place_cell(&mut self, cell: BCell) {
        self.cells.push(cell);
    }

    /// Places one antigen particle of strain `strain` at `pos`.
    pub fn place_antigen(&mut self, strain: u8, pos: u32) {
        self.antigen_serial += 1;
        self.antigen.push(SpatialAntigen {
            id: combine(TAG_INJECT, self.antigen_serial),
            strain,
            value: self.strains[strain as usize],
            pos,
        });
    }

    fn inject(&mut self) {
        let centre = self
            .torus
            .index(self.torus.width() / 2, self.torus.height() / 2);
        let due: Vec<(usize, usize, u32, u32)> = self
            .config
            .injections
            .iter()
            .filter(|inj| inj.tick == self.tick)
            .map(|inj| {
                let strain = self
                    .config
                    .strain_index(&inj.strain)
                    .expect("validated strain");
                let site = inj.site.map_or(centre, |[x, y]| self.torus.index(x, y));
                (strain, inj.count, site, inj.spread)
            })
            .collect();
        for (k, (strain, count, site, spread)) in due.into_iter().enumerate() {
            let mut rng = self.stream(combine(TAG_INJECT, k as u64));
            for _ in 0..count {
                let pos = self.scatter(site, spread, &mut rng);
                self.place_antigen(strain as u8, pos);
            }
            self.last_site = Some((strain as u8, site, spread));
            if let Some(left) = &mut self.depot {
                *left += self.config.theory.residual_depot;
            }
        }
    }

    fn scatter(&self, centre: u32, spread: u32, rng: &mut SmallRng) -> u32 {
        let s = spread as i32;
        let dx = rng.random_range(-s..=s);
        let dy = rng.random_range(-s..=s);
        self.torus.offset(centre, dx, dy)
    }

    fn reintroduce(&mut self) {
        let theory = &self.config.theory;
        let Some((strain, centre, spread)) = self.last_site else {
            return;
        };
        if !theory.residual || self.depot == Some(0) {
            return;
        }
        let mut rng = self.stream(TAG_RESIDUAL);
        if rng.random::<f64>() < 1.0 / theory.mean_interval {
            let pos = self.scatter(centre, spread, &mut rng);
            self.place_antigen(strain, pos);
            if let Some(left) = &mut self.depot {
                *left -= 1;
            }
        }
    }

    fn secrete(&mut self) {
        let amount = self.config.attractant_secretion;
        for a in &self.antigen {
            self.attractant.secrete(a.pos, amount);
        }
        let il15 = self.config.theory.il15_secretion;
        for c in self.cells.iter().filter(|c| c.is_active(self.tick)) {
            self.il15.secrete(c.pos, il15);
        }
    }

    /// Everything a cell decides from the tick's snapshot. Reads only its
    /// own 3x3 block of the grid.
    fn decide(&self, cell: &BCell) -> Intent {
        let cfg = &self.config;
        let age = cell.age + 1;
        if age >= cell.lifespan {
            return Intent {
                dies: true,
                new_pos: cell.pos,
                ..Intent::default()
            };
        }
        let mut rng = SmallRng::seed_from_u64(combine(
            combine(combine(self.seed, self.tick as u64), TAG_AGENT),
            cell.id,
        ));

        let mut claim = None;
        let mut antigen_near = false;
        if !self.antigen.is_empty() {
            // Particles of one strain are equally good to a given cell, so
            // ties are broken by a per-cell hash; otherwise every cell in a
            // crowd would chase the same particle.
            let mut best: Option<(f64, u64, u32)> = None;
            for loc in self.torus.block(cell.pos) {
                for &ai in self.index.at(loc) {
                    antigen_near = true;
                    let a = &self.antigen[ai as usize];
                    let d = circular_distance(cell.receptor, a.value, cfg.binding.space_size);
                    let key = combine(cell.id, a.id);
                    if d < cfg.binding.radius && best.is_none_or(|(bd, bk, _)| (d, key) < (bd, bk))
                    {
                        best = Some((d, key, ai));
                    }
                }
            }
            if let Some((distance, _, antigen)) = best {
                let becomes_memory = rng.random::<f64>() < cfg.theory.memory_probability;
                let clones = mutated_clones(
                    cell.receptor,
                    distance,
                    cfg.max_clones,
                    &cfg.expansion,
                    &cfg.binding,
                    &mut rng,
                )
                .collect();
                claim = Some(Claim {
                    antigen,
                    distance,
                    becomes_memory,
                    clones,
                });
            }
        }

        let divides = cfg.theory.bystander
            && cell.state == CellState::Memory
            && antigen_near
            && self.il15.get(cell.pos) >= cfg.theory.il15_threshold
            && rng.random::<f64>() < cfg.theory.bystander_probability;

        let new_pos = sense_and_move(
            &self.attractant,
            cell.pos,
            cfg.chemotaxis_sensitivity,
            &mut rng,
        );
        Intent {
            dies: false,
            new_pos,
            claim,
            divides,
        }
    }

    /// Advances one tick and returns its record row.
    ///
    /// Order: injections and reintroduction, secretion, diffusion, the
    /// read phase over all cells, the commit phase, antibody release and
    /// expiry, recruitment, record.
    pub fn step(&mut self) -> SpatialRow {
        self.inject();
        self.reintroduce();
        self.secrete();
        self.attractant.diffuse_step();
        self.il15.diffuse_step();
        self.index.rebuild(self.torus.len(), &self.antigen);

        let mut intents = std::mem::take(&mut self.intents);
        self.cells
            .par_iter()
            .map(|c| self.decide(c))
            .collect_into_vec(&mut intents);

        let (activations, divisions) = self.commit(&mut intents);
        self.intents = intents;

        self.release_antibodies();
        self.recruit();
        let row = self.record(activations, divisions);
        self.tick += 1;
        row
    }

    fn commit(&mut self, intents: &mut [Intent]) -> (u64, u64) {
        let t = self.tick;
        let cfg = &self.config;

        // Each antigen goes to its closest claimant; equal distances go to
        // the lower cell id.
        let mut winner: Vec<Option<(f64, u64, usize)>> = vec![None; self.antigen.len()];
        for (i, (cell, intent)) in self.cells.iter().zip(intents.iter()).enumerate() {
            if let Some(c) = &intent.claim {
                let slot = &mut winner[c.antigen as usize];
                if slot.is_none_or(|(d, id, _)| (c.distance, cell.id) < (d, id)) {
                    *slot = Some((c.distance, cell.id, i));
                }
            }
        }
        let mut won = vec![false; self.cells.len()];
        for &(_, _, i) in winner.iter().flatten() {
            won[i] = true;
        }

        let mut next = Vec::with_capacity(self.cells.len() + 64);
        let mut born = Vec::new();
        let mut activations = 0;
        let mut divisions = 0;
        for (i, (cell, intent)) in self.cells.iter().zip(intents.iter_mut()).enumerate() {
            if intent.dies {
                continue;
            }
            let mut c = *cell;
            c.age += 1;
            if won[i] {
                let claim = intent.claim.take().expect("winner has a claim");
                let strain = self.antigen[claim.antigen as usize].strain;
                activations += 1;
                c.active_until = t + 1 + cfg.activation_ticks;
                c.family = strain;
                let s = match_strength(claim.distance, &cfg.binding);
                let rescued = match cfg.theory.rescue {
                    Rescue::None => c.lifespan,
                    Rescue::Full => cfg.memory_lifespan,
                    Rescue::Affinity => {
                        let extra = f64::from(cfg.memory_lifespan - cfg.naive_lifespan) * s;
                        cfg.naive_lifespan + extra.round() as u32
                    }
                };
                c.lifespan = c.lifespan.max(rescued);
                if claim.becomes_memory && c.state == CellState::Naive {
                    c.state = CellState::Memory;
                    c.lifespan = c.lifespan.max(cfg.memory_lifespan);
                }
                for (k, receptor) in claim.clones.into_iter().enumerate() {
                    born.push(BCell {
                        id: combine(combine(combine(c.id, t as u64), TAG_CLONE), k as u64),
                        receptor,
                        pos: c.pos,
                        age: 0,
                        lifespan: cfg.naive_lifespan,
                        state: CellState::Naive,
                        active_until: 0,
                        family: strain,
                    });
                }
            } else {
                c.pos = intent.new_pos;
            }
            if intent.divides {
                divisions += 1;
                born.push(BCell {
                    id: combine(combine(c.id, t as u64), TAG_COPY),
                    age: 0,
                    lifespan: cfg.memory_lifespan,
                    active_until: 0,
                    ..c
                });
            }
            next.push(c);
        }
        next.append(&mut born);
        self.cells = next;

        if activations > 0 {
            let mut taken = winner.iter().map(Option::is_some);
            self.antigen.retain(|_| !taken.next().unwrap_or(false));
        }
        (activations, divisions)
    }

    fn release_antibodies(&mut self) {
        let t = self.tick;
        let cfg = &self.config;
        self.antibodies.retain(|c| c.expires > t);
        if cfg.antibody_rate == 0 {
            return;
        }
        let mut per_strain = vec![0u64; self.strains.len()];
        for c in self.cells.iter().filter(|c| c.is_active(t)) {
            per_strain[c.family as usize] += cfg.antibody_rate;
        }
        for (strain, count) in per_strain.into_iter().enumerate() {
            if count > 0 {
                self.antibodies.push(AntibodyCohort {
                    strain: strain as u8,
                    expires: t + cfg.antibody_lifespan,
                    count,
                });
            }
        }
    }

    fn recruit(&mut self) {
        let mut rng = self.stream(TAG_RECRUIT);
        let t = self.tick as u64;
        for i in 0..self.config.recruits_per_tick {
            let id = combine(combine(TAG_RECRUIT, t), i as u64);
            let cell = self.new_naive(id, &mut rng, 0);
            self.cells.push(cell);
        }
    }

    fn record(&self, activations: u64, bystander_divisions: u64) -> SpatialRow {
        let cfg = &self.config;
        let k = self.strains.len();
        let mut row = SpatialRow {
            tick: self.tick,
            naive: 0,
            memory: 0,
            memory_specific: vec![0; k],
            naive_unrelated: 0,
            antibodies: vec![0; k],
            antigen: vec![0; k],
            activations,
            bystander_divisions,
            il15_mass: self.il15.total(),
            attractant_mass: self.attractant.total(),
        };
        for c in &self.cells {
            let binds = |s: &ShapeValue| {
                circular_distance(c.receptor, *s, cfg.binding.space_size) < cfg.binding.radius
            };
            match c.state {
                CellState::Naive => {
                    row.naive += 1;
                    if !self.strains.iter().any(binds) {
                        row.naive_unrelated += 1;
                    }
                }
                CellState::Memory => {
                    row.memory += 1;
                    for (j, s) in self.strains.iter().enumerate() {
                        if binds(s) {
                            row.memory_specific[j] += 1;
                        }
                    }
                }
            }
        }
        for a in &self.antigen {
            row.antigen[a.strain as usize] += 1;
        }
        for c in &self.antibodies {
            row.antibodies[c.strain as usize] += c.count;
        }
        row
    }

    pub fn run_to_end(mut self) -> SpatialRecord {
        let mut record = SpatialRecord {
            strain_names: self.config.strains.iter().map(|s| s.name.clone()).collect(),
            rows: Vec::with_capacity(self.config.total_ticks as usize),
        };
        while self.tick < self.config.total_ticks {
            record.rows.push(self.step());
        }
        record
    }
}

/// Runs a full spatial replicate.
pub fn run_spatial(config: &SpatialConfig, seed: u64) -> Result<SpatialRecord, ConfigError> {
    Ok(SpatialWorld::new(config.clone(), seed)?.run_to_end())
}
