//! Small exact linear programs.
//!
//! Dense two-phase simplex with Bland's rule, so the pivot sequence (and the
//! returned vertex) is a function of the input alone. Arithmetic first runs on
//! `Ratio<i64>` with overflow checks and restarts on big rationals if any
//! intermediate value does not fit.

use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::error::{CakeError, Result};
use crate::rational::Rational;

/// `constant + Σ coeffs[k] · x_k` over a fixed variable list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearExpr {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl LinearExpr {
    pub fn zero(vars: usize) -> Self {
        Self {
            coeffs: vec![Rational::zero(); vars],
            constant: Rational::zero(),
        }
    }

    pub fn constant(vars: usize, value: Rational) -> Self {
        Self {
            constant: value,
            ..Self::zero(vars)
        }
    }

    pub fn variable(vars: usize, index: usize) -> Self {
        let mut e = Self::zero(vars);
        e.coeffs[index] = Rational::one();
        e
    }

    pub fn add_term(&mut self, index: usize, coeff: &Rational) {
        self.coeffs[index] += coeff;
    }

    pub fn add_scaled(&mut self, other: &LinearExpr, factor: &Rational) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if !b.is_zero() {
                *a += b * factor;
            }
        }
        self.constant += &other.constant * factor;
    }

    pub fn sub(&self, other: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(point)
            .filter(|(c, _)| !c.is_zero())
            .fold(self.constant.clone(), |acc, (c, x)| acc + c * x)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `expr <= 0`
    AtMostZero,
    /// `expr >= 0`
    AtLeastZero,
    /// `expr == 0`
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub expr: LinearExpr,
    pub relation: Relation,
}

impl LinearConstraint {
    /// `lhs >= rhs`
    pub fn ge(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Self {
            expr: lhs.sub(rhs),
            relation: Relation::AtLeastZero,
        }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Self {
            expr: lhs.sub(rhs),
            relation: Relation::AtMostZero,
        }
    }

    pub fn eq(lhs: &LinearExpr, rhs: &LinearExpr) -> Self {
        Self {
            expr: lhs.sub(rhs),
            relation: Relation::Zero,
        }
    }

    pub fn holds_at(&self, point: &[Rational]) -> bool {
        let v = self.expr.eval(point);
        match self.relation {
            Relation::AtMostZero => !v.is_positive(),
            Relation::AtLeastZero => !v.is_negative(),
            Relation::Zero => v.is_zero(),
        }
    }
}

/// A variable with finite bounds `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Rational,
    pub upper: Rational,
}

/// Maximize `objective` subject to `constraints` and the variable bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgramSpec {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: LinearExpr,
}

impl LinearProgramSpec {
    pub fn is_feasible_point(&self, point: &[Rational]) -> bool {
        point.len() == self.variables.len()
            && self
                .variables
                .iter()
                .zip(point)
                .all(|(v, x)| &v.lower <= x && x <= &v.upper)
            && self.constraints.iter().all(|c| c.holds_at(point))
    }
}

impl fmt::Display for LinearProgramSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let show = |e: &LinearExpr| {
            let mut parts: Vec<String> = e
                .coeffs
                .iter()
                .zip(&names)
                .filter(|(c, _)| !c.is_zero())
                .map(|(c, n)| format!("{c}*{n}"))
                .collect();
            if !e.constant.is_zero() || parts.is_empty() {
                parts.push(e.constant.to_string());
            }
            parts.join(" + ")
        };
        writeln!(f, "maximize {}", show(&self.objective))?;
        for v in &self.variables {
            writeln!(f, "  {} <= {} <= {}", v.lower, v.name, v.upper)?;
        }
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::AtMostZero => "<=",
                Relation::AtLeastZero => ">=",
                Relation::Zero => "==",
            };
            writeln!(f, "  {} {rel} 0", show(&c.expr))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible,
}

/// Field operations the tableau needs; `None` signals overflow.
trait Scalar: Clone + PartialOrd {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn is_nil(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn minus(&self, other: &Self) -> Option<Self>;
    fn times(&self, other: &Self) -> Option<Self>;
    fn over(&self, other: &Self) -> Option<Self>;
    fn negated(&self) -> Option<Self>;
    fn from_rational(value: &Rational) -> Option<Self>;
    fn to_rational(&self) -> Rational;
}

type Small = Ratio<i64>;

impl Scalar for Small {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn minus(&self, other: &Self) -> Option<Self> {
        self.checked_sub(other)
    }
    fn times(&self, other: &Self) -> Option<Self> {
        self.checked_mul(other)
    }
    fn over(&self, other: &Self) -> Option<Self> {
        self.checked_div(other)
    }
    fn negated(&self) -> Option<Self> {
        Some(Ratio::new_raw(self.numer().checked_neg()?, *self.denom()))
    }
    fn from_rational(value: &Rational) -> Option<Self> {
        let n = value.numer().to_i64()?;
        let d = value.denom().to_i64()?;
        // Keep headroom so that negation never overflows.
        (n != i64::MIN).then(|| Ratio::new_raw(n, d))
    }
    fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
}

impl Scalar for Rational {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn minus(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
    fn times(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn over(&self, other: &Self) -> Option<Self> {
        Some(self / other)
    }
    fn negated(&self) -> Option<Self> {
        Some(-self)
    }
    fn from_rational(value: &Rational) -> Option<Self> {
        Some(value.clone())
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

/// Row-major tableau. The last column is the right-hand side; the objective
/// row stores reduced costs and `-z` in its last entry.
struct Tableau<S> {
    rows: Vec<Vec<S>>,
    objective: Vec<S>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.objective.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) -> Option<()> {
        let p = self.rows[r][c].clone();
        if !(p == S::one_value()) {
            for x in self.rows[r].iter_mut() {
                if !x.is_nil() {
                    *x = x.over(&p)?;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let eliminate = |row: &mut Vec<S>| -> Option<()> {
            let f = row[c].clone();
            if f.is_nil() {
                return Some(());
            }
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_nil() {
                    *x = x.minus(&f.times(y)?)?;
                }
            }
            Some(())
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row)?;
            }
        }
        eliminate(&mut self.objective)?;
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        Some(())
    }

    /// Sets the objective to `costs` (one per column) priced out against the
    /// current basis.
    fn set_objective(&mut self, costs: &[S]) -> Option<()> {
        let mut obj: Vec<S> = costs.to_vec();
        obj.push(S::zero_value());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let f = obj[b].clone();
            if f.is_nil() {
                continue;
            }
            for (x, y) in obj.iter_mut().zip(row) {
                if !y.is_nil() {
                    *x = x.minus(&f.times(y)?)?;
                }
            }
        }
        self.objective = obj;
        Some(())
    }

    fn maximize(&mut self) -> Option<Step> {
        let w = self.width();
        loop {
            let Some(c) = (0..w).find(|&j| self.enterable[j] && self.objective[j].is_pos()) else {
                return Some(Step::Optimal);
            };
            let mut best: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_pos() {
                    continue;
                }
                let ratio = row[w].over(&row[c])?;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c)?,
                None => return Some(Step::Unbounded),
            }
        }
    }

    fn value(&self) -> Option<S> {
        self.objective[self.width()].negated()
    }
}

fn convert<S: Scalar>(values: &[Rational]) -> Option<Vec<S>> {
    values.iter().map(S::from_rational).collect()
}

/// Returns `None` on arithmetic overflow.
fn run<S: Scalar>(lp: &LinearProgramSpec) -> Option<Result<LpOutcome>> {
    let nv = lp.variables.len();
    for v in &lp.variables {
        if v.lower > v.upper {
            return Some(Ok(LpOutcome::Infeasible));
        }
    }
    let lower: Vec<Rational> = lp.variables.iter().map(|v| v.lower.clone()).collect();

    // Rows over shifted variables y = x - lower: coeffs, relation, rhs.
    let mut raw: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for (k, v) in lp.variables.iter().enumerate() {
        let mut coeffs = vec![Rational::zero(); nv];
        coeffs[k] = Rational::one();
        raw.push((coeffs, Relation::AtMostZero, &v.upper - &v.lower));
    }
    for c in &lp.constraints {
        let rhs = -c.expr.eval(&lower);
        if c.expr.is_constant() {
            let ok = match c.relation {
                Relation::AtMostZero => !rhs.is_negative(),
                Relation::AtLeastZero => !rhs.is_pos(),
                Relation::Zero => rhs.is_nil(),
            };
            if !ok {
                return Some(Ok(LpOutcome::Infeasible));
            }
            continue;
        }
        raw.push((c.expr.coeffs.clone(), c.relation, rhs));
    }
    // Normalize to non-negative right-hand sides.
    for (coeffs, rel, rhs) in raw.iter_mut() {
        if rhs.is_negative() {
            for x in coeffs.iter_mut() {
                *x = -x.clone();
            }
            *rhs = -rhs.clone();
            *rel = match *rel {
                Relation::AtMostZero => Relation::AtLeastZero,
                Relation::AtLeastZero => Relation::AtMostZero,
                Relation::Zero => Relation::Zero,
            };
        }
    }

    // Columns: structural, then one slack/surplus per inequality, then artificials.
    let m = raw.len();
    let slack_count = raw.iter().filter(|r| r.1 != Relation::Zero).count();
    let art_rows: Vec<usize> = (0..m).filter(|&i| raw[i].1 != Relation::AtMostZero).collect();
    let width = nv + slack_count + art_rows.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = vec![0; m];
    let mut slack = nv;
    let mut art = nv + slack_count;
    for (i, (coeffs, rel, rhs)) in raw.iter().enumerate() {
        let mut row = vec![S::zero_value(); width + 1];
        row[..nv].clone_from_slice(&convert::<S>(coeffs)?);
        row[width] = S::from_rational(rhs)?;
        match rel {
            Relation::AtMostZero => {
                row[slack] = S::one_value();
                basis[i] = slack;
                slack += 1;
            }
            Relation::AtLeastZero => {
                row[slack] = S::one_value().negated()?;
                slack += 1;
                row[art] = S::one_value();
                basis[i] = art;
                art += 1;
            }
            Relation::Zero => {
                row[art] = S::one_value();
                basis[i] = art;
                art += 1;
            }
        }
        rows.push(row);
    }
    let first_art = nv + slack_count;
    let mut t = Tableau {
        rows,
        objective: vec![S::zero_value(); width + 1],
        basis,
        enterable: vec![true; width],
    };

    if !art_rows.is_empty() {
        let mut costs = vec![S::zero_value(); width];
        for c in costs.iter_mut().skip(first_art) {
            *c = S::one_value().negated()?;
        }
        t.set_objective(&costs)?;
        if let Step::Unbounded = t.maximize()? {
            return Some(Err(CakeError::Internal("phase one reported unbounded".into())));
        }
        if t.value()?.to_rational().is_negative() {
            return Some(Ok(LpOutcome::Infeasible));
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| !t.rows[i][j].is_nil()) {
                    Some(j) => t.pivot(i, j)?,
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for e in t.enterable.iter_mut().skip(first_art) {
            *e = false;
        }
    }

    let mut costs = convert::<S>(&lp.objective.coeffs)?;
    costs.resize(width, S::zero_value());
    t.set_objective(&costs)?;
    if let Step::Unbounded = t.maximize()? {
        return Some(Err(CakeError::Internal("linear program is unbounded".into())));
    }

    let mut point = lower;
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < nv {
            point[b] += row[width].to_rational();
        }
    }
    let value = lp.objective.eval(&point);
    Some(Ok(LpOutcome::Optimal { value, point }))
}

/// Solves `lp` exactly. Unboundedness cannot happen with finite variable
/// bounds and is reported as [`CakeError::Internal`].
pub fn solve_lp(lp: &LinearProgramSpec) -> Result<LpOutcome> {
    for c in lp.constraints.iter().map(|c| &c.expr).chain([&lp.objective]) {
        if c.coeffs.len() != lp.variables.len() {
            return Err(CakeError::SizeMismatch {
                expected: lp.variables.len(),
                found: c.coeffs.len(),
            });
        }
    }
    if let Some(outcome) = run::<Small>(lp) {
        return outcome;
    }
    run::<Rational>(lp).expect("big rationals do not overflow")
}
