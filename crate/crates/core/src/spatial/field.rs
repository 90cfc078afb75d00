use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Torus;
use crate::error::ConfigError;

/// Transport constants of one chemical species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemicalParams {
    /// Fraction of each location's content shared with its neighbours per tick.
    pub diffusion: f64,
    /// Fraction destroyed everywhere per tick, applied after diffusion.
    pub decay: f64,
}

impl Default for ChemicalParams {
    fn default() -> Self {
        Self {
            diffusion: 0.2,
            decay: 0.01,
        }
    }
}

impl ChemicalParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.diffusion) {
            return Err(ConfigError::invalid("diffusion", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(ConfigError::invalid("decay", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Concentration of one species over a torus, double-buffered.
#[derive(Debug, Clone)]
pub struct ChemicalField {
    torus: Torus,
    params: ChemicalParams,
    conc: Vec<f64>,
    next: Vec<f64>,
}

impl ChemicalField {
    pub fn new(torus: Torus, params: ChemicalParams) -> Self {
        Self {
            torus,
            params,
            conc: vec![0.0; torus.len()],
            next: vec![0.0; torus.len()],
        }
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn params(&self) -> ChemicalParams {
        self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.conc
    }

    #[inline]
    pub fn get(&self, idx: u32) -> f64 {
        self.conc[idx as usize]
    }

    /// Adds `amount` at one location. Negative amounts are ignored.
    #[inline]
    pub fn secrete(&mut self, idx: u32, amount: f64) {
        if amount > 0.0 {
            self.conc[idx as usize] += amount;
        }
    }

    pub fn total(&self) -> f64 {
        self.conc.iter().sum()
    }

    /// Each location keeps `1 - diffusion` of its content and sends an eighth
    /// of the remainder to each neighbour; then everything decays.
    pub fn diffuse_step(&mut self) {
        let ChemicalParams { diffusion, decay } = self.params;
        if diffusion == 0.0 && decay == 0.0 {
            return;
        }
        let w = self.torus.width() as usize;
        let h = self.torus.height() as usize;
        let keep = 1.0 - diffusion;
        let share = diffusion / 8.0;
        let survive = 1.0 - decay;
        let src = &self.conc;
        self.next
            .par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| {
                let up = &src[((y + h - 1) % h) * w..][..w];
                let mid = &src[y * w..][..w];
                let down = &src[((y + 1) % h) * w..][..w];
                for x in 0..w {
                    let l = (x + w - 1) % w;
                    let r = (x + 1) % w;
                    let around =
                        up[l] + up[x] + up[r] + mid[l] + mid[r] + down[l] + down[x] + down[r];
                    row[x] = (keep * mid[x] + share * around) * survive;
                }
            });
        std::mem::swap(&mut self.conc, &mut self.next);
    }
}
