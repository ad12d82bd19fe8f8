//! Envy, welfare and Pareto relations over divisions, plus leftover absorption.

use std::fmt;

use num_traits::Zero;

use crate::error::{CakeError, Result};
use crate::model::{Division, Instance, Interval};
use crate::rational::Rational;

/// `entries[i][j]` is the value player `i` assigns to player `j`'s piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyMatrix {
    n: usize,
    entries: Vec<Rational>,
}

/// Outcome of an envy-freeness check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvyCheck {
    EnvyFree,
    /// The lexicographically least pair where `envier` strictly prefers the
    /// piece of `envied` (0-based indices).
    Envious {
        envier: usize,
        envied: usize,
    },
}

impl EnvyCheck {
    pub fn is_envy_free(self) -> bool {
        matches!(self, EnvyCheck::EnvyFree)
    }
}

impl EnvyMatrix {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(CakeError::SizeMismatch {
                expected: n,
                found: row.len(),
            });
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Own-piece utilities.
    pub fn diagonal(&self) -> Vec<Rational> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn check(&self) -> EnvyCheck {
        for i in 0..self.n {
            let own = self.get(i, i);
            if let Some(j) = (0..self.n).find(|&j| self.get(i, j) > own) {
                return EnvyCheck::Envious { envier: i, envied: j };
            }
        }
        EnvyCheck::EnvyFree
    }
}

impl fmt::Display for EnvyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let cells: Vec<String> = self.row(i).iter().map(crate::rational::format_rational).collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

pub fn envy_matrix(instance: &Instance, division: &Division) -> Result<EnvyMatrix> {
    let n = instance.n();
    if division.n() != n {
        return Err(CakeError::SizeMismatch {
            expected: n,
            found: division.n(),
        });
    }
    let entries = instance
        .players()
        .iter()
        .flat_map(|v| division.pieces().iter().map(move |p| v.value_of(p)))
        .collect();
    Ok(EnvyMatrix { n, entries })
}

/// True iff every diagonal entry is a maximum of its row.
pub fn is_envy_free(matrix: &EnvyMatrix) -> EnvyCheck {
    matrix.check()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WelfareKind {
    Utilitarian,
    Egalitarian,
}

impl WelfareKind {
    pub fn name(self) -> &'static str {
        match self {
            WelfareKind::Utilitarian => "utilitarian",
            WelfareKind::Egalitarian => "egalitarian",
        }
    }

    /// Welfare of a vector of own-piece utilities.
    pub fn aggregate(self, utilities: &[Rational]) -> Rational {
        match self {
            WelfareKind::Utilitarian => utilities.iter().sum(),
            WelfareKind::Egalitarian => utilities.iter().min().cloned().unwrap_or_else(Rational::zero),
        }
    }
}

impl fmt::Display for WelfareKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WelfareValue {
    pub kind: WelfareKind,
    pub value: Rational,
}

/// `u_i(x, i)` for every player.
pub fn utilities(instance: &Instance, division: &Division) -> Result<Vec<Rational>> {
    if division.n() != instance.n() {
        return Err(CakeError::SizeMismatch {
            expected: instance.n(),
            found: division.n(),
        });
    }
    Ok(instance
        .players()
        .iter()
        .zip(division.pieces())
        .map(|(v, p)| v.value_of(p))
        .collect())
}

pub fn welfare(instance: &Instance, division: &Division, kind: WelfareKind) -> Result<WelfareValue> {
    let utilities = utilities(instance, division)?;
    Ok(WelfareValue {
        kind,
        value: kind.aggregate(&utilities),
    })
}

/// Weak mode: `x` is at least as good for everyone and strictly better for
/// someone. Strict mode: strictly better for everyone.
pub fn pareto_dominates(instance: &Instance, x: &Division, y: &Division, strict: bool) -> Result<bool> {
    let ux = utilities(instance, x)?;
    let uy = utilities(instance, y)?;
    let pairs = || ux.iter().zip(&uy);
    Ok(if strict {
        pairs().all(|(a, b)| a > b)
    } else {
        pairs().all(|(a, b)| a >= b) && pairs().any(|(a, b)| a > b)
    })
}

/// Turns a partial division into a complete one by merging every maximal
/// unallocated interval into an adjacent piece, the left neighbour when there
/// is one. No player's utility decreases.
pub fn absorb_leftover(instance: &Instance, division: &Division) -> Result<Division> {
    if division.n() != instance.n() {
        return Err(CakeError::SizeMismatch {
            expected: instance.n(),
            found: division.n(),
        });
    }
    division.check_disjoint()?;
    let order = division.allocated_order();
    if order.is_empty() {
        return Err(CakeError::NoAllocatedPiece);
    }
    let mut bounds: Vec<(Rational, Rational)> = order
        .iter()
        .map(|&i| (division.piece(i).left().clone(), division.piece(i).right().clone()))
        .collect();
    bounds[0].0 = Rational::zero();
    for k in 0..bounds.len() {
        let next_left = match bounds.get(k + 1) {
            Some(next) => next.0.clone(),
            None => num_traits::One::one(),
        };
        bounds[k].1 = next_left;
    }
    let mut pieces = division.pieces().to_vec();
    for (&i, (l, r)) in order.iter().zip(bounds) {
        pieces[i] = Interval::new(l, r)?;
    }
    Ok(Division::new(pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_valuation, Coverage, Valuation};
    use crate::rational::{int, rat};

    fn iv(l: Rational, r: Rational) -> Interval {
        Interval::new(l, r).unwrap()
    }

    fn intro(candy: Rational) -> Instance {
        let half = rat(1, 2);
        let bob = make_valuation(&[(&half - &candy / int(2), &half + &candy / int(2), int(1))]).unwrap();
        Instance::new(vec![Valuation::uniform(), bob], "intro").unwrap()
    }

    fn tight3(eps: &Rational) -> Instance {
        let p1 = make_valuation(&[
            (int(0), eps.clone(), rat(1, 2) - eps),
            (rat(2, 3), rat(2, 3) + int(3) * eps, int(3) * eps),
            (int(1) - eps, int(1), rat(1, 2) - int(2) * eps),
        ])
        .unwrap();
        Instance::new(vec![p1, Valuation::uniform(), Valuation::uniform()], "tight3").unwrap()
    }

    #[test]
    fn intro_cut_at_half() {
        let inst = intro(rat(1, 100));
        let d = Division::new(vec![iv(int(0), rat(1, 2)), iv(rat(1, 2), int(1))]);
        let m = envy_matrix(&inst, &d).unwrap();
        let half = rat(1, 2);
        assert_eq!(m.row(0), &[half.clone(), half.clone()]);
        assert_eq!(m.row(1), &[half.clone(), half.clone()]);
        assert!(is_envy_free(&m).is_envy_free());
        assert_eq!(welfare(&inst, &d, WelfareKind::Utilitarian).unwrap().value, int(1));
    }

    #[test]
    fn all_empty_matrix_is_zero_and_envy_free() {
        let inst = intro(rat(1, 100));
        let m = envy_matrix(&inst, &Division::all_empty(2)).unwrap();
        assert!(m.row(0).iter().chain(m.row(1)).all(Zero::is_zero));
        assert_eq!(is_envy_free(&m), EnvyCheck::EnvyFree);
    }

    #[test]
    fn tight3_partial_diagonal() {
        let eps = rat(1, 100);
        let inst = tight3(&eps);
        let d = Division::new(vec![
            iv(int(0), eps.clone()),
            iv(eps.clone(), rat(1, 2)),
            iv(rat(1, 2), int(1) - &eps),
        ]);
        let m = envy_matrix(&inst, &d).unwrap();
        assert_eq!(m.diagonal(), vec![rat(1, 2) - &eps; 3]);
        assert!(m.check().is_envy_free());
    }

    #[test]
    fn uniform_cut_at_third_envies() {
        let inst = Instance::new(vec![Valuation::uniform(); 2], "u").unwrap();
        let d = Division::from_cuts(&[0, 1], &[rat(1, 3)]).unwrap();
        let m = envy_matrix(&inst, &d).unwrap();
        assert_eq!(m.check(), EnvyCheck::Envious { envier: 0, envied: 1 });
    }

    #[test]
    fn size_mismatch() {
        let inst = intro(rat(1, 100));
        assert_eq!(
            envy_matrix(&inst, &Division::all_empty(3)).unwrap_err(),
            CakeError::SizeMismatch { expected: 2, found: 3 }
        );
    }

    #[test]
    fn intro_partial_utilitarian() {
        let (candy, eps) = (rat(1, 100), rat(1, 50));
        let inst = intro(candy.clone());
        let start = rat(1, 2) - &candy / int(2);
        let d = Division::new(vec![iv(int(0), start.clone()), iv(start, int(1) - eps)]);
        let w = welfare(&inst, &d, WelfareKind::Utilitarian).unwrap();
        assert_eq!(w.value, rat(3, 2) - candy / int(2));
        assert!(envy_matrix(&inst, &d).unwrap().check().is_envy_free());
    }

    #[test]
    fn pareto_modes() {
        let inst = intro(rat(1, 100));
        let d = Division::from_cuts(&[0, 1], &[rat(1, 2)]).unwrap();
        assert!(!pareto_dominates(&inst, &d, &d, false).unwrap());
        assert!(!pareto_dominates(&inst, &d, &d, true).unwrap());
        let better = Division::new(vec![iv(int(0), rat(99, 200)), iv(rat(99, 200), int(1))]);
        assert!(!pareto_dominates(&inst, &better, &d, false).unwrap());
        let empty = Division::all_empty(2);
        assert!(pareto_dominates(&inst, &d, &empty, true).unwrap());
    }

    #[test]
    fn absorb_examples() {
        let eps = rat(1, 100);
        let inst = intro(rat(1, 100));
        let complete = Division::new(vec![iv(int(0), rat(1, 2)), iv(rat(1, 2), int(1))]);
        assert_eq!(absorb_leftover(&inst, &complete).unwrap(), complete);

        let partial = Division::new(vec![iv(int(0), rat(1, 2)), iv(rat(1, 2), int(1) - &eps)]);
        assert_eq!(absorb_leftover(&inst, &partial).unwrap(), complete);

        let t = tight3(&eps);
        let d = Division::new(vec![
            iv(int(0), eps.clone()),
            iv(eps.clone(), rat(1, 2)),
            iv(rat(1, 2), int(1) - &eps),
        ]);
        let absorbed = absorb_leftover(&t, &d).unwrap();
        assert_eq!(absorbed.piece(2), &iv(rat(1, 2), int(1)));
        assert_eq!(absorbed.classify().unwrap(), Coverage::Complete);

        assert_eq!(
            absorb_leftover(&inst, &Division::all_empty(2)).unwrap_err(),
            CakeError::NoAllocatedPiece
        );
    }

    #[test]
    fn absorb_leading_gap_goes_right() {
        let inst = Instance::new(vec![Valuation::uniform(); 2], "u").unwrap();
        let d = Division::new(vec![Interval::empty_at(int(0)).unwrap(), iv(rat(1, 4), rat(1, 2))]);
        let absorbed = absorb_leftover(&inst, &d).unwrap();
        assert_eq!(absorbed.piece(1), &Interval::whole());
        assert!(absorbed.piece(0).is_empty());
    }
}
