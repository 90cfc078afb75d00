//! Circular shape space shared by both engines.
//!
//! Receptors and antigen are points on a circle of circumference
//! `space_size`. Binding strength is a decreasing function of the circular
//! distance between two points.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// A point in shape space, always held in `[0, space_size)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShapeValue(f64);

impl ShapeValue {
    /// Wraps an arbitrary real onto the circle.
    pub fn wrapped(raw: f64, space_size: f64) -> Self {
        let mut v = raw.rem_euclid(space_size);
        // rem_euclid can round up to exactly space_size for tiny negatives
        if v >= space_size {
            v = 0.0;
        }
        ShapeValue(v)
    }

    /// Checked constructor for values that must already lie on the circle.
    pub fn new(value: f64, space_size: f64) -> Result<Self, ConfigError> {
        if value.is_finite() && (0.0..space_size).contains(&value) {
            Ok(ShapeValue(value))
        } else {
            Err(ConfigError::invalid(
                "shape_value",
                format!("{value} is outside [0, {space_size})"),
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Binding geometry: threshold radius, epitope shift and circle size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BindingParams {
    pub radius: f64,
    pub shift: f64,
    pub space_size: f64,
    pub affinity_floor: f64,
}

impl Default for BindingParams {
    fn default() -> Self {
        Self::clonal()
    }
}

impl BindingParams {
    /// Defaults for the generational model (circle of 10,000).
    pub fn clonal() -> Self {
        Self {
            radius: 100.0,
            shift: 2_500.0,
            space_size: 10_000.0,
            affinity_floor: 0.001,
        }
    }

    /// Defaults for the lattice model (circle of 20,000, radius scaled to match).
    pub fn spatial() -> Self {
        Self {
            radius: 200.0,
            shift: 5_000.0,
            space_size: 20_000.0,
            affinity_floor: 0.001,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.space_size.is_finite() && self.space_size > 0.0) {
            return Err(ConfigError::invalid("space_size", "must be positive"));
        }
        if !(self.radius > 0.0 && self.radius < self.space_size / 2.0) {
            return Err(ConfigError::invalid(
                "radius",
                format!("must lie in (0, {})", self.space_size / 2.0),
            ));
        }
        if !(self.shift >= 0.0 && self.shift < self.space_size) {
            return Err(ConfigError::invalid(
                "shift",
                format!("must lie in [0, {})", self.space_size),
            ));
        }
        if !(self.affinity_floor > 0.0) {
            return Err(ConfigError::invalid("affinity_floor", "must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, raw: f64) -> ShapeValue {
        ShapeValue::wrapped(raw, self.space_size)
    }
}

/// Shortest arc between two points on a circle of circumference `space_size`.
#[inline]
pub fn circular_distance(a: ShapeValue, b: ShapeValue, space_size: f64) -> f64 {
    let d = (a.0 - b.0).abs();
    d.min(space_size - d)
}

/// `radius / max(d, floor)`: 1.0 exactly at the binding threshold.
#[inline]
pub fn affinity(distance: f64, params: &BindingParams) -> f64 {
    params.radius / distance.max(params.affinity_floor)
}

#[inline]
pub fn can_bind(cell: ShapeValue, target: ShapeValue, params: &BindingParams) -> bool {
    circular_distance(cell, target, params.space_size) < params.radius
}

/// The epitope a receptor binds best when binding other receptors.
#[inline]
pub fn shifted_target(v: ShapeValue, params: &BindingParams) -> ShapeValue {
    ShapeValue::wrapped(v.0 + params.shift, params.space_size)
}

/// Lower edges of the affinity buckets. Values below the first edge land in
/// the underflow bucket; values at or above the last edge are clamped into
/// the top bucket.
pub const AFFINITY_EDGES: [f64; 8] = [0.01, 0.1, 1.0, 10.0, 100.0, 1_000.0, 10_000.0, 100_000.0];

/// Underflow plus seven decades `[0.01, 0.1) .. [10^4, 10^5]`.
pub const AFFINITY_BUCKETS: usize = AFFINITY_EDGES.len();

pub const AFFINITY_BUCKET_LABELS: [&str; AFFINITY_BUCKETS] = [
    "aff_lt_0.01",
    "aff_0.01_0.1",
    "aff_0.1_1",
    "aff_1_10",
    "aff_10_100",
    "aff_100_1e3",
    "aff_1e3_1e4",
    "aff_1e4_1e5",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinityHistogram {
    pub counts: [u64; AFFINITY_BUCKETS],
}

impl AffinityHistogram {
    pub fn bucket_of(affinity: f64) -> usize {
        // index of the first edge strictly greater than `affinity`
        let above = AFFINITY_EDGES.partition_point(|&edge| edge <= affinity);
        above.min(AFFINITY_BUCKETS - 1)
    }

    pub fn add(&mut self, affinity: f64) {
        self.counts[Self::bucket_of(affinity)] += 1;
    }

    pub fn from_values<I>(values: I, target: ShapeValue, params: &BindingParams) -> Self
    where
        I: IntoIterator<Item = ShapeValue>,
    {
        let mut hist = Self::default();
        for v in values {
            hist.add(affinity(
                circular_distance(v, target, params.space_size),
                params,
            ));
        }
        hist
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
