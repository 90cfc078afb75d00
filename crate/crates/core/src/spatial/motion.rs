use rand::Rng;

use super::field::ChemicalField;

/// One tick of chemotaxis.
///
/// Moves to the richest neighbouring location when it beats the current one
/// by at least `sensitivity` (ties broken uniformly), otherwise takes a
/// uniform random step.
pub fn sense_and_move<R: Rng + ?Sized>(
    field: &ChemicalField,
    pos: u32,
    sensitivity: f64,
    rng: &mut R,
) -> u32 {
    let around = field.torus().neighbors(pos);
    let here = field.get(pos);
    let mut best = f64::NEG_INFINITY;
    let mut ties = [0u32; 8];
    let mut n = 0;
    for &m in &around {
        let c = field.get(m);
        if c > best {
            best = c;
            ties[0] = m;
            n = 1;
        } else if c == best {
            ties[n] = m;
            n += 1;
        }
    }
    if best > here && best - here >= sensitivity {
        if n == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..n)]
        }
    } else {
        around[rng.random_range(0..8)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::field::ChemicalParams;
    use crate::spatial::grid::Torus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat(w: u32) -> ChemicalField {
        ChemicalField::new(Torus::new(w, w).unwrap(), ChemicalParams::default())
    }

    #[test]
    fn flat_field_steps_uniformly() {
        let f = flat(9);
        let t = f.torus();
        let start = t.index(4, 4);
        let around = t.neighbors(start);
        let mut counts = [0u32; 8];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 1_000_000;
        for _ in 0..trials {
            let to = sense_and_move(&f, start, 1e-9, &mut rng);
            counts[around.iter().position(|&m| m == to).unwrap()] += 1;
        }
        for c in counts {
            let share = c as f64 / trials as f64;
            assert!((share - 0.125).abs() < 0.02 * 0.125, "{share}");
        }
    }

    #[test]
    fn two_way_tie_splits_evenly() {
        let mut f = flat(9);
        let t = f.torus();
        let start = t.index(4, 4);
        let (a, b) = (t.index(5, 4), t.index(3, 4));
        f.secrete(a, 1.0);
        f.secrete(b, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 1_000_000;
        let hits_a = (0..trials)
            .filter(|_| sense_and_move(&f, start, 1e-9, &mut rng) == a)
            .count();
        let share = hits_a as f64 / trials as f64;
        assert!((share - 0.5).abs() < 0.02 * 0.5, "{share}");
    }

    #[test]
    fn weak_gradient_below_sensitivity_is_ignored() {
        let mut f = flat(9);
        let t = f.torus();
        let start = t.index(4, 4);
        let up = t.index(4, 3);
        f.secrete(up, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let moves: Vec<u32> = (0..400)
            .map(|_| sense_and_move(&f, start, 1.0, &mut rng))
            .collect();
        assert!(moves.iter().any(|&m| m != up));
        assert!((0..400).all(|_| sense_and_move(&f, start, 0.1, &mut rng) == up));
    }
}
