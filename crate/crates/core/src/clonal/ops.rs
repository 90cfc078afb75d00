//! The individual rules of the generational model, as free functions over
//! plain data so each can be exercised in isolation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{AntigenParticle, ExpansionParams, Rise};
use crate::shape::{circular_distance, BindingParams, ShapeValue};

/// Removes each Rise independently when `u1 * age > u2 * death_rate`.
///
/// Per-cell removal probability is `a / (2 dr)` for `a <= dr` and
/// `1 - dr / (2a)` beyond. Newborns (age 0) and preserved Rises (negative
/// age) are never removed.
pub fn apply_mortality<R: Rng + ?Sized>(population: &mut Vec<Rise>, death_rate: u32, rng: &mut R) {
    let dr = f64::from(death_rate);
    population.retain(|rise| {
        if rise.age <= 0 {
            return true;
        }
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        u1 * f64::from(rise.age) <= u2 * dr
    });
}

/// Removal probability implied by [`apply_mortality`] at a given age.
pub fn removal_probability(age: i32, death_rate: u32) -> f64 {
    let (a, dr) = (f64::from(age.max(0)), f64::from(death_rate));
    if a <= dr {
        a / (2.0 * dr)
    } else {
        1.0 - dr / (2.0 * a)
    }
}

/// Appends `n` newborn Rises with uniformly random shape values.
pub fn recruit<R: Rng + ?Sized>(
    population: &mut Vec<Rise>,
    n: usize,
    space_size: f64,
    rng: &mut R,
) {
    population.reserve(n);
    for _ in 0..n {
        let raw = rng.random::<f64>() * space_size;
        population.push(Rise::newborn(ShapeValue::wrapped(raw, space_size)));
    }
}

/// Samples `k` Rises with replacement and returns the index and distance of
/// the closest one, provided it lies inside the binding radius.
pub fn tournament_bind<R: Rng + ?Sized>(
    population: &[Rise],
    target: ShapeValue,
    k: usize,
    params: &BindingParams,
    rng: &mut R,
) -> Option<(usize, f64)> {
    if population.is_empty() {
        return None;
    }
    let mut best = (usize::MAX, f64::INFINITY);
    for _ in 0..k {
        let idx = rng.random_range(0..population.len());
        let d = circular_distance(population[idx].value, target, params.space_size);
        if d < best.1 {
            best = (idx, d);
        }
    }
    (best.1 < params.radius).then_some(best)
}

/// Match quality in `(0, 1]` for a bound distance.
#[inline]
pub fn match_strength(distance: f64, params: &BindingParams) -> f64 {
    1.0 - distance / params.radius
}

/// Clone count and mutation width for a binder at `distance`.
pub fn expansion_plan(
    distance: f64,
    max_clones: u32,
    expansion: &ExpansionParams,
    params: &BindingParams,
) -> (usize, f64) {
    let s = match_strength(distance, params);
    let n = (s * f64::from(max_clones)).ceil().max(1.0) as usize;
    let sigma = expansion.sigma_max * (1.0 - s) + expansion.sigma_min;
    (n, sigma)
}

/// Produces the clones of a bound Rise: better matches clone more and mutate less.
pub fn clonal_expand<R: Rng + ?Sized>(
    parent: ShapeValue,
    distance: f64,
    max_clones: u32,
    expansion: &ExpansionParams,
    params: &BindingParams,
    rng: &mut R,
    out: &mut Vec<Rise>,
) {
    out.extend(
        mutated_clones(parent, distance, max_clones, expansion, params, rng).map(Rise::newborn),
    );
}

/// Shape values of the clones of a binder at `distance`, following
/// [`expansion_plan`]. Shared by both engines.
pub fn mutated_clones<'a, R: Rng + ?Sized>(
    parent: ShapeValue,
    distance: f64,
    max_clones: u32,
    expansion: &ExpansionParams,
    params: &'a BindingParams,
    rng: &'a mut R,
) -> impl Iterator<Item = ShapeValue> + 'a {
    let (n, sigma) = expansion_plan(distance, max_clones, expansion, params);
    let noise = Normal::new(0.0, sigma).expect("sigma is positive");
    (0..n).map(move |_| ShapeValue::wrapped(parent.get() + noise.sample(rng), params.space_size))
}

/// Reduces the age of a bound Rise in proportion to its match strength.
///
/// The age is first scaled by `1 - gain * s`. A non-zero
/// `preservation_span` then credits a further `span * gain * s` generations,
/// letting the age go negative down to `-span`; a Rise with negative age
/// cannot die. With a span of zero the age bottoms out at 0. Rejuvenation
/// never makes a Rise older.
pub fn emergent_rejuvenate(
    rise: &mut Rise,
    distance: f64,
    gain: f64,
    preservation_span: u32,
    params: &BindingParams,
) {
    let s = match_strength(distance, params).clamp(0.0, 1.0);
    let scaled = (f64::from(rise.age.max(0)) * (1.0 - gain * s)).floor() as i32;
    let span = preservation_span.min(i32::MAX as u32) as i32;
    let credit = (f64::from(span) * gain * s).round() as i32;
    let candidate = (scaled - credit).max(-span);
    rise.age = rise.age.min(candidate);
}

/// Bernoulli draw with `p = 1 / mean_interval`; returns the particle to add.
pub fn residual_reintroduce<R: Rng + ?Sized>(
    value: ShapeValue,
    mean_interval: f64,
    rng: &mut R,
) -> Option<AntigenParticle> {
    (rng.random::<f64>() < 1.0 / mean_interval).then_some(AntigenParticle::new(value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub sample_fraction: f64,
    pub tournament_k: usize,
    pub max_clones: u32,
    pub age_penalty: i32,
}

/// Receptor-receptor stimulation: sampled Rises bind other Rises at their
/// shifted epitope, clone weakly, and age the Rise they bound.
///
/// Returns the number of successful bindings.
pub fn network_stimulate<R: Rng + ?Sized>(
    population: &mut Vec<Rise>,
    net: &NetworkParams,
    expansion: &ExpansionParams,
    params: &BindingParams,
    rng: &mut R,
) -> usize {
    let n = population.len();
    if n == 0 {
        return 0;
    }
    let actors = (net.sample_fraction * n as f64).round() as usize;
    let mut clones = Vec::new();
    let mut hits = 0;
    for _ in 0..actors {
        let actor = rng.random_range(0..n);
        let target = crate::shape::shifted_target(population[actor].value, params);
        if let Some((bound, d)) = tournament_bind(population, target, net.tournament_k, params, rng)
        {
            hits += 1;
            let parent = population[actor].value;
            clonal_expand(
                parent,
                d,
                net.max_clones,
                expansion,
                params,
                rng,
                &mut clones,
            );
            let victim = &mut population[bound];
            victim.age = victim.age.saturating_add(net.age_penalty);
        }
    }
    population.append(&mut clones);
    hits
}
