//! Brute-force grid search over envy-free divisions, independent of the LP
//! solver. Used to cross-check exact optima from below.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{CakeError, Result};
use crate::metrics::envy_matrix;
use crate::model::{refine, Division, Instance, Interval};
use crate::rational::{int, Rational};
use crate::solver::{Mode, Objective, SolverOptions};

/// Nominal cost of one grid leaf, used only for the upfront budget check.
pub const NOMINAL_SECS_PER_GRID_LEAF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub value: Rational,
    pub witness: Division,
    /// Number of grid points cuts may use.
    pub grid_points: usize,
    pub leaves: u64,
}

/// Sorted union of the cell boundaries and `j / resolution`.
pub fn grid_points(instance: &Instance, resolution: u32) -> Vec<Rational> {
    let mut points: Vec<Rational> = refine(instance).boundaries().to_vec();
    points.extend((0..=resolution as i64).map(|j| Rational::new(j.into(), (resolution as i64).into())));
    points.sort();
    points.dedup();
    points
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn leaf_estimate(n: usize, points: usize, mode: Mode) -> Option<u128> {
    let orderings = (1..=n as u128).try_fold(1u128, |a, k| a.checked_mul(k))?;
    let per = match mode {
        Mode::Complete => binomial((points + n - 2) as u128, (n - 1) as u128)?,
        Mode::Partial => binomial((points + 2 * n - 1) as u128, (2 * n) as u128)?,
    };
    orderings.checked_mul(per)
}

fn to_i128(value: &BigInt) -> Result<i128> {
    value
        .to_i128()
        .ok_or_else(|| CakeError::Internal("grid values exceed the integer range".into()))
}

/// Integer objective: weighted sum, minimum, or a single player.
enum Score {
    Sum(Vec<i128>),
    Min,
    Single(usize),
}

struct Grid {
    n: usize,
    points: usize,
    /// `cum[p][g]`: player `p`'s scaled value of `(0, point g)`.
    cum: Vec<Vec<i128>>,
    score: Score,
    complete: bool,
    deadline: Option<Instant>,
    leaves: u64,
    timed_out: bool,
    best: Option<(i128, Vec<(usize, usize)>)>,
}

impl Grid {
    fn value(&self, p: usize, piece: (usize, usize)) -> i128 {
        self.cum[p][piece.1] - self.cum[p][piece.0]
    }

    fn score(&self, own: &[i128]) -> i128 {
        match &self.score {
            Score::Sum(w) => own.iter().zip(w).map(|(u, w)| u * w).sum(),
            Score::Min => *own.iter().min().unwrap(),
            Score::Single(p) => own[*p],
        }
    }

    /// Upper bound on the score of any completion from `frontier`.
    fn bound(&self, own: &[i128], placed: &[bool], frontier: usize) -> i128 {
        let top = self.points - 1;
        let cap = |p: usize| {
            if placed[p] {
                own[p]
            } else {
                self.cum[p][top] - self.cum[p][frontier]
            }
        };
        match &self.score {
            Score::Sum(w) => (0..self.n)
                .map(|p| {
                    if w[p] >= 0 {
                        w[p] * cap(p)
                    } else if placed[p] {
                        w[p] * own[p]
                    } else {
                        0
                    }
                })
                .sum(),
            Score::Min => (0..self.n).map(cap).min().unwrap(),
            Score::Single(p) => cap(*p),
        }
    }

    fn search(&mut self, order: &[usize]) {
        let mut pieces = vec![(0usize, 0usize); self.n];
        let mut own = vec![0i128; self.n];
        let mut placed = vec![false; self.n];
        self.place(order, 0, 0, &mut pieces, &mut own, &mut placed);
    }

    fn place(
        &mut self,
        order: &[usize],
        depth: usize,
        frontier: usize,
        pieces: &mut [(usize, usize)],
        own: &mut [i128],
        placed: &mut [bool],
    ) {
        if self.timed_out {
            return;
        }
        if depth == order.len() {
            self.leaves += 1;
            if self.leaves.is_multiple_of(1 << 16) {
                if let Some(d) = self.deadline {
                    if Instant::now() > d {
                        self.timed_out = true;
                        return;
                    }
                }
            }
            let s = self.score(own);
            if self.best.as_ref().is_none_or(|(b, _)| s > *b) {
                self.best = Some((s, pieces.to_vec()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if self.bound(own, placed, frontier) <= *b {
                return;
            }
        }
        let p = order[depth];
        let top = self.points - 1;
        let last = depth + 1 == order.len();
        let lefts = if self.complete {
            frontier..=frontier
        } else {
            frontier..=top
        };
        for l in lefts {
            let rights = if self.complete && last { top..=top } else { l..=top };
            for r in rights {
                // One representative for every empty piece.
                if !self.complete && l == r && l != frontier {
                    continue;
                }
                let piece = (l, r);
                let mine = self.value(p, piece);
                let envy_free = order[..depth]
                    .iter()
                    .all(|&q| own[q] >= self.value(q, piece) && mine >= self.value(p, pieces[q]));
                if !envy_free {
                    continue;
                }
                pieces[p] = piece;
                own[p] = mine;
                placed[p] = true;
                self.place(order, depth + 1, r, pieces, own, placed);
                placed[p] = false;
                own[p] = 0;
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for p in 0..n {
            if !used[p] {
                used[p] = true;
                current.push(p);
                rec(n, current, used, out);
                current.pop();
                used[p] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

/// Best envy-free division whose cuts all lie on [`grid_points`]. Ties keep
/// the first division met in (ordering, cut vector) lexicographic order.
/// The ordering filter and parallelism options are ignored.
pub fn grid_oracle(instance: &Instance, options: &SolverOptions, resolution: u32) -> Result<OracleResult> {
    if resolution == 0 {
        return Err(CakeError::ParamOutOfRange("resolution must be at least 1".into()));
    }
    let n = instance.n();
    let points = grid_points(instance, resolution);
    let estimate = leaf_estimate(n, points.len(), options.mode);
    if let Some(budget) = options.time_budget {
        let secs = estimate.map_or(f64::INFINITY, |c| c as f64 * NOMINAL_SECS_PER_GRID_LEAF);
        if secs > budget.as_secs_f64() {
            return Err(CakeError::BudgetExceeded {
                configurations: estimate.map_or_else(|| "more than 2^128".to_string(), |c| c.to_string()),
                estimated_secs: secs,
                budget_secs: budget.as_secs_f64(),
            });
        }
    }

    let cum: Vec<Vec<Rational>> = instance
        .players()
        .iter()
        .map(|v| points.iter().map(|x| v.cumulative(x)).collect())
        .collect();
    let scale = cum.iter().flatten().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled = |v: &Rational| -> Result<i128> { to_i128(&(v.numer() * (&scale / v.denom()))) };
    let cum_int = cum
        .iter()
        .map(|row| row.iter().map(scaled).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let (score, weight_scale) = match &options.objective {
        Objective::Utilitarian => (Score::Sum(vec![1; n]), BigInt::one()),
        Objective::Egalitarian => (Score::Min, BigInt::one()),
        Objective::SinglePlayer(p) => {
            if *p >= n {
                return Err(CakeError::ParamOutOfRange(format!("no player {}", p + 1)));
            }
            (Score::Single(*p), BigInt::one())
        }
        Objective::Custom(weights) => {
            if weights.len() != n {
                return Err(CakeError::SizeMismatch {
                    expected: n,
                    found: weights.len(),
                });
            }
            let ws = weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
            let w = weights
                .iter()
                .map(|w| to_i128(&(w.numer() * (&ws / w.denom()))))
                .collect::<Result<Vec<_>>>()?;
            (Score::Sum(w), ws)
        }
    };
    // Guard the sums against overflow.
    let max_abs = match &score {
        Score::Sum(w) => w.iter().map(|x| x.abs()).max().unwrap_or(1).max(1),
        _ => 1,
    };
    let cap = cum_int.iter().flatten().map(|x| x.abs()).max().unwrap_or(0);
    if cap
        .checked_mul(max_abs)
        .and_then(|x| x.checked_mul(2 * n as i128 + 2))
        .is_none()
    {
        return Err(CakeError::Internal("grid values exceed the integer range".into()));
    }

    let mut grid = Grid {
        n,
        points: points.len(),
        cum: cum_int,
        score,
        complete: options.mode == Mode::Complete,
        deadline: options.time_budget.map(|b| Instant::now() + b),
        leaves: 0,
        timed_out: false,
        best: None,
    };
    for order in permutations(n) {
        grid.search(&order);
    }
    if grid.timed_out {
        let budget = options.time_budget.unwrap_or(Duration::ZERO);
        return Err(CakeError::BudgetExceeded {
            configurations: estimate.map_or_else(|| "more than 2^128".to_string(), |c| c.to_string()),
            estimated_secs: budget.as_secs_f64(),
            budget_secs: budget.as_secs_f64(),
        });
    }
    let Some((best, pieces)) = grid.best else {
        return Err(CakeError::NoEnvyFreeDivision);
    };
    let witness = Division::new(
        pieces
            .iter()
            .map(|&(l, r)| Interval::new(points[l].clone(), points[r].clone()))
            .collect::<Result<Vec<_>>>()?,
    );
    if !envy_matrix(instance, &witness)?.check().is_envy_free() {
        return Err(CakeError::Internal("grid witness is not envy-free".into()));
    }
    let value = Rational::new(BigInt::from(best), scale * weight_scale);
    debug_assert!(!value.is_negative() || matches!(options.objective, Objective::Custom(_)));
    Ok(OracleResult {
        value,
        witness,
        grid_points: points.len(),
        leaves: grid.leaves,
    })
}

/// `n · D / resolution`: how far the grid optimum may trail the exact one
/// when rounding cuts keeps envy-freeness.
pub fn lipschitz_gap(instance: &Instance, resolution: u32) -> Rational {
    int(instance.n() as i64) * instance.max_density() / int(resolution as i64)
}
