//! Seeded random instances and divisions for property suites.
//!
//! Instances share breakpoints on the 1/8 grid so every player's cells line up,
//! and masses are small integer weights normalized to 1.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CakeError, Result};
use crate::model::{Division, Instance, Interval, Valuation};
use crate::rational::{int, rat, Rational};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` players over at most `max_cells` shared cells. Weights are drawn from
/// `0..=4` per cell, and at least one is positive per player.
pub fn random_instance(rng: &mut SeededRng, n: usize, max_cells: usize) -> Result<Instance> {
    if n == 0 {
        return Err(CakeError::NoPlayers);
    }
    if !(1..=8).contains(&max_cells) {
        return Err(CakeError::ParamOutOfRange("max_cells must lie in 1..=8".into()));
    }
    let cells = rng.gen_range(1..=max_cells);
    let mut interior: Vec<i64> = (1..8).collect();
    interior.shuffle(rng);
    let mut cuts: Vec<i64> = interior[..cells - 1].to_vec();
    cuts.sort_unstable();
    let mut breakpoints = vec![int(0)];
    breakpoints.extend(cuts.iter().map(|&c| rat(c, 8)));
    breakpoints.push(int(1));

    let mut players = Vec::with_capacity(n);
    for _ in 0..n {
        let mut weights: Vec<i64> = (0..cells).map(|_| rng.gen_range(0..=4)).collect();
        if weights.iter().all(|&w| w == 0) {
            let c = rng.gen_range(0..cells);
            weights[c] = rng.gen_range(1..=4);
        }
        let total: i64 = weights.iter().sum();
        let masses: Vec<Rational> = weights.iter().map(|&w| rat(w, total)).collect();
        players.push(Valuation::from_cells(breakpoints.clone(), masses)?);
    }
    Instance::new(players, format!("random-n{n}-c{cells}"))
}

pub fn seeded_instance(seed: u64, n: usize, max_cells: usize) -> Result<Instance> {
    let mut rng = rng_from_seed(seed);
    let mut inst = random_instance(&mut rng, n, max_cells)?;
    inst.label = format!("random-s{seed}-n{n}");
    Ok(inst)
}

/// A division with endpoints on the 1/16 grid. Complete divisions use
/// `n - 1` sorted cuts; partial ones use `2n` sorted points, and their pieces
/// may be empty. Players are placed in a random order.
pub fn random_division(rng: &mut SeededRng, n: usize, complete: bool) -> Division {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let count = if complete { n.saturating_sub(1) } else { 2 * n };
    let mut points: Vec<i64> = (0..count).map(|_| rng.gen_range(0..=16)).collect();
    points.sort_unstable();
    let mut pieces = vec![Interval::whole(); n];
    for (pos, &p) in order.iter().enumerate() {
        let (l, r) = if complete {
            let l = if pos == 0 { 0 } else { points[pos - 1] };
            let r = if pos + 1 == n { 16 } else { points[pos] };
            (l, r)
        } else {
            (points[2 * pos], points[2 * pos + 1])
        };
        pieces[p] = Interval::new(rat(l, 16), rat(r, 16)).expect("sorted grid points");
    }
    Division::new(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let a = seeded_instance(7, 3, 4).unwrap();
        let b = seeded_instance(7, 3, 4).unwrap();
        assert_eq!(a, b);
        assert!(crate::model::refine(&a).len() <= 4);
    }

    #[test]
    fn divisions_are_valid() {
        let mut rng = rng_from_seed(1);
        for complete in [true, false] {
            for _ in 0..50 {
                let d = random_division(&mut rng, 3, complete);
                let coverage = d.classify().unwrap();
                if complete {
                    assert!(coverage.is_complete());
                }
            }
        }
    }
}
