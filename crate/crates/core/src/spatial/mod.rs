//! Grid-based simulation of B-cells, antigen, antibodies and two chemical
//! species on a torus.
//!
//! Each tick runs in two phases. In the read phase every cell decides what
//! to do from a snapshot of the tick, looking only at its own 3x3 block;
//! the phase runs in parallel and each cell draws from a random stream keyed
//! by `(seed, tick, cell id)`. The commit phase then applies all decisions in
//! a fixed order, so results do not depend on the thread count.

pub mod config;
pub mod field;
pub mod grid;
pub mod motion;
pub mod world;

pub use config::{Rescue, SpatialConfig, SpatialInjection, SpatialTheory, Strain};
pub use field::{ChemicalField, ChemicalParams};
pub use grid::Torus;
pub use motion::sense_and_move;
pub use world::{
    run_spatial, BCell, CellState, SpatialAntigen, SpatialRecord, SpatialRow, SpatialWorld,
};
