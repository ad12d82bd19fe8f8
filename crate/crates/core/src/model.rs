//! The cake `[0, 1]`, piecewise-constant valuations, intervals and divisions.
//!
//! Everything is exact. Valuations are nonatomic, so an interval's value does
//! not depend on whether its endpoints are included; intervals are treated as
//! open and pieces may share endpoints.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{CakeError, Result};
use crate::rational::{int, Rational};

/// An interval `(left, right)` with `0 <= left <= right <= 1`. `left == right`
/// is the empty piece.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    left: Rational,
    right: Rational,
}

impl Interval {
    pub fn new(left: Rational, right: Rational) -> Result<Self> {
        if left < Rational::zero() || right > Rational::one() || left > right {
            return Err(CakeError::InvalidInterval { left, right });
        }
        Ok(Self { left, right })
    }

    /// The empty piece located at `point`.
    pub fn empty_at(point: Rational) -> Result<Self> {
        Self::new(point.clone(), point)
    }

    pub fn whole() -> Self {
        Self {
            left: Rational::zero(),
            right: Rational::one(),
        }
    }

    pub fn left(&self) -> &Rational {
        &self.left
    }

    pub fn right(&self) -> &Rational {
        &self.right
    }

    pub fn length(&self) -> Rational {
        &self.right - &self.left
    }

    pub fn is_empty(&self) -> bool {
        self.left == self.right
    }
}

/// A nonatomic measure on `[0, 1]` with constant density on each cell
/// `(breakpoints[c], breakpoints[c + 1])`.
///
/// Adjacent zero-mass cells are always merged, so two valuations describing
/// the same measure through the same nonzero segments compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    breakpoints: Vec<Rational>,
    masses: Vec<Rational>,
    /// `prefix[c]` is the value of `[0, breakpoints[c]]`.
    prefix: Vec<Rational>,
    densities: Vec<Rational>,
}

impl Valuation {
    /// The uniform valuation.
    pub fn uniform() -> Self {
        Self::from_cells(vec![int(0), int(1)], vec![int(1)]).expect("uniform valuation is valid")
    }

    /// Builds a valuation from explicit cells. Breakpoints must run strictly
    /// increasing from 0 to 1 and the masses must be non-negative and sum to 1.
    pub fn from_cells(breakpoints: Vec<Rational>, masses: Vec<Rational>) -> Result<Self> {
        if breakpoints.len() != masses.len() + 1 {
            return Err(CakeError::SizeMismatch {
                expected: breakpoints.len().saturating_sub(1),
                found: masses.len(),
            });
        }
        if breakpoints.first() != Some(&Rational::zero()) || breakpoints.last() != Some(&Rational::one()) {
            return Err(CakeError::InvalidSegment {
                index: 0,
                reason: "breakpoints must start at 0 and end at 1",
            });
        }
        for (index, pair) in breakpoints.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(CakeError::InvalidSegment {
                    index,
                    reason: "breakpoints must be strictly increasing",
                });
            }
        }
        for (index, mass) in masses.iter().enumerate() {
            if mass < &Rational::zero() {
                return Err(CakeError::InvalidSegment {
                    index,
                    reason: "mass must be non-negative",
                });
            }
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return Err(CakeError::NotNormalized { total });
        }

        // Merge runs of zero-mass cells.
        let mut bps = vec![breakpoints[0].clone()];
        let mut ms: Vec<Rational> = Vec::with_capacity(masses.len());
        for (c, mass) in masses.into_iter().enumerate() {
            let right = breakpoints[c + 1].clone();
            if mass.is_zero() && ms.last().is_some_and(|m| m.is_zero()) {
                *bps.last_mut().unwrap() = right;
            } else {
                ms.push(mass);
                bps.push(right);
            }
        }
        Ok(Self::from_parts(bps, ms))
    }

    fn from_parts(breakpoints: Vec<Rational>, masses: Vec<Rational>) -> Self {
        let mut prefix = Vec::with_capacity(breakpoints.len());
        let mut acc = Rational::zero();
        prefix.push(acc.clone());
        for m in &masses {
            acc += m;
            prefix.push(acc.clone());
        }
        let densities = masses
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(m, w)| m / (&w[1] - &w[0]))
            .collect();
        Self {
            breakpoints,
            masses,
            prefix,
            densities,
        }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn cell_masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn max_density(&self) -> Rational {
        self.densities.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    /// Value of `[0, x]`. `x` is clamped to `[0, 1]`.
    pub fn cumulative(&self, x: &Rational) -> Rational {
        if x <= &self.breakpoints[0] {
            return Rational::zero();
        }
        if x >= self.breakpoints.last().unwrap() {
            return Rational::one();
        }
        let cell = self.breakpoints.partition_point(|b| b <= x) - 1;
        &self.prefix[cell] + &self.densities[cell] * (x - &self.breakpoints[cell])
    }

    pub fn value_of(&self, interval: &Interval) -> Rational {
        if interval.is_empty() {
            return Rational::zero();
        }
        self.cumulative(interval.right()) - self.cumulative(interval.left())
    }

    /// The cells with positive mass, as `(left, right, mass)`.
    pub fn segments(&self) -> impl Iterator<Item = (&Rational, &Rational, &Rational)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(c, m)| (&self.breakpoints[c], &self.breakpoints[c + 1], m))
    }
}

/// One input segment for [`make_valuation`]: `(left, right, mass)`.
pub type Segment = (Rational, Rational, Rational);

/// Builds a valuation from disjoint segments, each carrying its mass uniformly.
/// Parts of `[0, 1]` not covered by a segment get zero density.
pub fn make_valuation(segments: &[Segment]) -> Result<Valuation> {
    let mut order: Vec<usize> = (0..segments.len()).collect();
    for (index, (left, right, mass)) in segments.iter().enumerate() {
        if left < &Rational::zero() || right > &Rational::one() || left > right {
            return Err(CakeError::InvalidSegment {
                index,
                reason: "segment must satisfy 0 <= left <= right <= 1",
            });
        }
        if mass < &Rational::zero() {
            return Err(CakeError::InvalidSegment {
                index,
                reason: "mass must be non-negative",
            });
        }
        if left == right && !mass.is_zero() {
            return Err(CakeError::InvalidSegment {
                index,
                reason: "a zero-width segment cannot carry mass",
            });
        }
    }
    order.retain(|&i| segments[i].0 != segments[i].1);
    order.sort_by(|&a, &b| segments[a].0.cmp(&segments[b].0));
    for pair in order.windows(2) {
        let (prev, next) = (&segments[pair[0]], &segments[pair[1]]);
        if prev.1 > next.0 {
            let (first, second) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            return Err(CakeError::OverlappingSegments { first, second });
        }
    }

    let mut breakpoints = vec![Rational::zero()];
    let mut masses = Vec::new();
    for &i in &order {
        let (left, right, mass) = &segments[i];
        if left > breakpoints.last().unwrap() {
            masses.push(Rational::zero());
            breakpoints.push(left.clone());
        }
        masses.push(mass.clone());
        breakpoints.push(right.clone());
    }
    if breakpoints.last().unwrap() < &Rational::one() {
        masses.push(Rational::zero());
        breakpoints.push(Rational::one());
    }
    Valuation::from_cells(breakpoints, masses)
}

/// `v(interval)`.
pub fn value_of(valuation: &Valuation, interval: &Interval) -> Rational {
    valuation.value_of(interval)
}

/// An ordered list of players plus a label and the construction parameters it
/// was generated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    players: Vec<Valuation>,
    pub label: String,
    pub params: BTreeMap<String, Rational>,
}

impl Instance {
    pub fn new(players: Vec<Valuation>, label: impl Into<String>) -> Result<Self> {
        if players.is_empty() {
            return Err(CakeError::NoPlayers);
        }
        Ok(Self {
            players,
            label: label.into(),
            params: BTreeMap::new(),
        })
    }

    pub fn with_param(mut self, name: &str, value: Rational) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[Valuation] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &Valuation {
        &self.players[i]
    }

    /// Largest density of any player on any cell.
    pub fn max_density(&self) -> Rational {
        self.players
            .iter()
            .map(Valuation::max_density)
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// One interval per player; `pieces[i]` belongs to player `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Division {
    pieces: Vec<Interval>,
}

/// Result of [`Division::classify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coverage {
    Complete,
    /// The maximal unallocated intervals, left to right.
    Partial(Vec<Interval>),
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        matches!(self, Coverage::Complete)
    }
}

impl Division {
    /// Wraps the pieces without checking disjointness; see [`Division::classify`].
    pub fn new(pieces: Vec<Interval>) -> Self {
        Self { pieces }
    }

    /// `n` empty pieces at 0.
    pub fn all_empty(n: usize) -> Self {
        Self::new(vec![Interval::empty_at(Rational::zero()).unwrap(); n])
    }

    /// Builds the complete division that hands out `(cuts[p-1], cuts[p])`
    /// (with implicit 0 and 1 at the ends) to `order[p]`.
    pub fn from_cuts(order: &[usize], cuts: &[Rational]) -> Result<Self> {
        if cuts.len() + 1 != order.len() {
            return Err(CakeError::SizeMismatch {
                expected: order.len().saturating_sub(1),
                found: cuts.len(),
            });
        }
        let mut points = Vec::with_capacity(order.len() + 1);
        points.push(Rational::zero());
        points.extend(cuts.iter().cloned());
        points.push(Rational::one());
        let mut pieces = vec![Interval::whole(); order.len()];
        for (p, &player) in order.iter().enumerate() {
            pieces[player] = Interval::new(points[p].clone(), points[p + 1].clone())?;
        }
        Ok(Self::new(pieces))
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> &Interval {
        &self.pieces[i]
    }

    pub fn n(&self) -> usize {
        self.pieces.len()
    }

    /// Indices of the non-empty pieces sorted left to right.
    pub fn allocated_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pieces.len()).filter(|&i| !self.pieces[i].is_empty()).collect();
        order.sort_by(|&a, &b| self.pieces[a].left.cmp(&self.pieces[b].left).then(a.cmp(&b)));
        order
    }

    /// Checks that the pieces are pairwise disjoint as open intervals.
    pub fn check_disjoint(&self) -> Result<()> {
        let order = self.allocated_order();
        for pair in order.windows(2) {
            if self.pieces[pair[0]].right > self.pieces[pair[1]].left {
                return Err(CakeError::OverlappingPieces {
                    first: pair[0].min(pair[1]),
                    second: pair[0].max(pair[1]),
                });
            }
        }
        Ok(())
    }

    /// Complete iff the closed pieces cover `[0, 1]`; otherwise lists the
    /// leftover intervals.
    pub fn classify(&self) -> Result<Coverage> {
        self.check_disjoint()?;
        let mut leftover = Vec::new();
        let mut frontier = Rational::zero();
        for i in self.allocated_order() {
            let piece = &self.pieces[i];
            if piece.left > frontier {
                leftover.push(Interval::new(frontier.clone(), piece.left.clone())?);
            }
            frontier = piece.right.clone();
        }
        if frontier < Rational::one() {
            leftover.push(Interval::new(frontier, Rational::one())?);
        }
        Ok(if leftover.is_empty() {
            Coverage::Complete
        } else {
            Coverage::Partial(leftover)
        })
    }
}

/// The common refinement of all players' breakpoints: every density is
/// constant on each cell `(boundaries[c], boundaries[c + 1])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPartition {
    boundaries: Vec<Rational>,
}

impl CellPartition {
    pub fn boundaries(&self) -> &[Rational] {
        &self.boundaries
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, cell: usize) -> Rational {
        &self.boundaries[cell + 1] - &self.boundaries[cell]
    }

    /// The cell whose closed span contains `x`, preferring the left one at a
    /// shared boundary.
    pub fn cell_of(&self, x: &Rational) -> usize {
        let idx = self.boundaries.partition_point(|b| b < x);
        idx.saturating_sub(1).min(self.len() - 1)
    }

    /// Merges in further boundaries.
    pub fn with_points<'a>(&self, points: impl IntoIterator<Item = &'a Rational>) -> Self {
        let mut all = self.boundaries.clone();
        all.extend(points.into_iter().cloned());
        all.sort();
        all.dedup();
        Self { boundaries: all }
    }
}

/// Sorted, deduplicated union of all players' breakpoints.
pub fn refine(instance: &Instance) -> CellPartition {
    let mut all: Vec<Rational> = instance
        .players()
        .iter()
        .flat_map(|v| v.breakpoints().iter().cloned())
        .collect();
    all.sort();
    all.dedup();
    CellPartition { boundaries: all }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn seg(l: Rational, r: Rational, m: Rational) -> Segment {
        (l, r, m)
    }

    fn iv(l: Rational, r: Rational) -> Interval {
        Interval::new(l, r).unwrap()
    }

    fn intro(delta: Rational) -> Instance {
        let half = rat(1, 2);
        let bob = make_valuation(&[seg(&half - &delta / int(2), &half + &delta / int(2), int(1))]).unwrap();
        Instance::new(vec![Valuation::uniform(), bob], "intro").unwrap()
    }

    #[test]
    fn uniform_half() {
        let v = make_valuation(&[seg(int(0), int(1), int(1))]).unwrap();
        assert_eq!(v, Valuation::uniform());
        assert_eq!(v.value_of(&iv(int(0), rat(1, 2))), rat(1, 2));
    }

    #[test]
    fn candy_strip_is_worth_everything_to_bob() {
        let inst = intro(rat(1, 100));
        let strip = iv(rat(99, 200), rat(101, 200));
        assert_eq!(inst.player(1).value_of(&strip), int(1));
        assert_eq!(inst.player(1).value_of(&iv(int(0), rat(1, 2))), rat(1, 2));
    }

    #[test]
    fn focused_player_interval() {
        let (n, eps) = (int(4), rat(1, 100));
        let i = int(2);
        let v = make_valuation(&[seg(&i / &n - &eps, &i / &n + &eps, int(1))]).unwrap();
        assert_eq!(v.value_of(&iv(&i / &n - &eps, &i / &n + &eps)), int(1));
    }

    #[test]
    fn tight_three_player_segments_are_normalized() {
        let eps = rat(1, 100);
        let v = make_valuation(&[
            seg(int(0), eps.clone(), rat(1, 2) - &eps),
            seg(rat(2, 3), rat(2, 3) + int(3) * &eps, int(3) * &eps),
            seg(int(1) - &eps, int(1), rat(1, 2) - int(2) * &eps),
        ])
        .unwrap();
        assert_eq!(v.cell_masses().len(), 5);
        assert_eq!(v.value_of(&iv(int(0), int(1))), int(1));
    }

    #[test]
    fn deficit_is_not_normalized() {
        let err = make_valuation(&[seg(int(0), rat(1, 2), rat(1, 4))]).unwrap_err();
        assert_eq!(err, CakeError::NotNormalized { total: rat(1, 4) });
    }

    #[test]
    fn overlapping_segments_rejected() {
        let err = make_valuation(&[seg(rat(1, 2), int(1), rat(1, 2)), seg(int(0), rat(3, 5), rat(1, 2))]).unwrap_err();
        assert_eq!(err, CakeError::OverlappingSegments { first: 0, second: 1 });
    }

    #[test]
    fn atoms_rejected() {
        let err = make_valuation(&[seg(rat(1, 2), rat(1, 2), int(1))]).unwrap_err();
        assert!(matches!(err, CakeError::InvalidSegment { index: 0, .. }));
    }

    #[test]
    fn zero_cells_merge() {
        let a = make_valuation(&[
            seg(int(0), rat(1, 4), int(0)),
            seg(rat(1, 4), rat(1, 2), int(0)),
            seg(rat(1, 2), int(1), int(1)),
        ])
        .unwrap();
        let b = make_valuation(&[seg(rat(1, 2), int(1), int(1))]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.breakpoints(), &[int(0), rat(1, 2), int(1)]);
    }

    #[test]
    fn refine_examples() {
        let two_uniform = Instance::new(vec![Valuation::uniform(); 2], "u").unwrap();
        assert_eq!(refine(&two_uniform).boundaries(), &[int(0), int(1)]);

        let delta = rat(1, 100);
        let cells = refine(&intro(delta.clone()));
        assert_eq!(
            cells.boundaries(),
            &[int(0), rat(1, 2) - &delta / int(2), rat(1, 2) + &delta / int(2), int(1)]
        );
        assert_eq!(
            refine(&Instance::new(vec![cells_instance_player(); 1], "x").unwrap()).len(),
            3
        );
    }

    fn cells_instance_player() -> Valuation {
        make_valuation(&[seg(rat(1, 3), rat(2, 3), int(1))]).unwrap()
    }

    #[test]
    fn classify_examples() {
        let eps = rat(1, 100);
        let complete = Division::new(vec![iv(int(0), rat(1, 2)), iv(rat(1, 2), int(1))]);
        assert_eq!(complete.classify().unwrap(), Coverage::Complete);

        let partial = Division::new(vec![iv(int(0), rat(1, 2)), iv(rat(1, 2), int(1) - &eps)]);
        assert_eq!(
            partial.classify().unwrap(),
            Coverage::Partial(vec![iv(int(1) - &eps, int(1))])
        );

        let overlapping = Division::new(vec![iv(int(0), rat(3, 5)), iv(rat(1, 2), int(1))]);
        assert_eq!(
            overlapping.classify().unwrap_err(),
            CakeError::OverlappingPieces { first: 0, second: 1 }
        );
    }

    #[test]
    fn empty_pieces_and_leading_gap() {
        let d = Division::new(vec![Interval::empty_at(rat(1, 4)).unwrap(), iv(rat(1, 3), rat(2, 3))]);
        assert_eq!(
            d.classify().unwrap(),
            Coverage::Partial(vec![iv(int(0), rat(1, 3)), iv(rat(2, 3), int(1))])
        );
        assert_eq!(
            Division::all_empty(3).classify().unwrap(),
            Coverage::Partial(vec![Interval::whole()])
        );
    }

    #[test]
    fn from_cuts_assigns_by_order() {
        let d = Division::from_cuts(&[1, 0], &[rat(1, 3)]).unwrap();
        assert_eq!(d.piece(1), &iv(int(0), rat(1, 3)));
        assert_eq!(d.piece(0), &iv(rat(1, 3), int(1)));
    }

    #[test]
    fn cell_of_prefers_left_cell() {
        let inst = intro(rat(1, 10));
        let cells = refine(&inst);
        assert_eq!(cells.cell_of(&int(0)), 0);
        assert_eq!(cells.cell_of(&rat(9, 20)), 0);
        assert_eq!(cells.cell_of(&rat(1, 2)), 1);
        assert_eq!(cells.cell_of(&int(1)), 2);
    }
}
