//! Exact optimization over envy-free connected divisions.
//!
//! A configuration fixes which player sits at each position (left to right)
//! and which cell of the common refinement each cut variable lies in. Inside
//! one configuration every utility is affine in the cut variables, so the
//! best envy-free division is the optimum of a linear program. The search
//! walks configurations depth first, position by position, and discards
//! subtrees using bounds read off the prefix sums at cell boundaries.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{CakeError, Result};
use crate::lp::{solve_lp, LinearConstraint, LinearExpr, LinearProgramSpec, LpOutcome, Variable};
use crate::metrics::{envy_matrix, utilities, WelfareKind};
use crate::model::{refine, CellPartition, Division, Instance, Interval};
use crate::rational::{common_denominator, scale_ceil, scale_exact, Rational};

/// Nominal cost of one configuration, used only for the upfront budget check.
pub const NOMINAL_SECS_PER_CONFIGURATION: f64 = 2e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Complete,
    Partial,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Complete => "complete",
            Mode::Partial => "partial",
        }
    }

    /// Number of cut variables for `n` players.
    pub fn variables(self, n: usize) -> usize {
        match self {
            Mode::Complete => n - 1,
            Mode::Partial => 2 * n,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Objective {
    Utilitarian,
    Egalitarian,
    /// Utility of one player (0-based).
    SinglePlayer(usize),
    /// `Σ weights[i] · u_i`.
    Custom(Vec<Rational>),
}

impl From<WelfareKind> for Objective {
    fn from(kind: WelfareKind) -> Self {
        match kind {
            WelfareKind::Utilitarian => Objective::Utilitarian,
            WelfareKind::Egalitarian => Objective::Egalitarian,
        }
    }
}

/// `ordering[p]` is the player at position `p`.
pub type Ordering = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub ordering: Ordering,
    /// Non-decreasing cell index per cut variable. Complete mode has `n - 1`
    /// cuts; partial mode has `l_1, r_1, …, l_n, r_n`.
    pub cut_cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mode: Mode,
    pub objective: Objective,
    /// Restricts the search to these orderings.
    pub ordering_filter: Option<Vec<Ordering>>,
    pub time_budget: Option<Duration>,
    pub parallelism: usize,
}

impl SolverOptions {
    pub fn new(mode: Mode, objective: Objective) -> Self {
        Self {
            mode,
            objective,
            ordering_filter: None,
            time_budget: None,
            parallelism: 1,
        }
    }

    pub fn with_budget(mut self, budget: Option<Duration>) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn with_parallelism(mut self, workers: usize) -> Self {
        self.parallelism = workers.max(1);
        self
    }

    pub fn with_orderings(mut self, orderings: Vec<Ordering>) -> Self {
        self.ordering_filter = Some(orderings);
        self
    }
}

/// Configuration count; `None` when it does not fit in 128 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigCount(pub Option<u128>);

impl fmt::Display for ConfigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(c) => write!(f, "{c}"),
            None => f.write_str("more than 2^128"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchStats {
    pub configurations: ConfigCount,
    pub nodes: u64,
    pub lps_solved: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub value: Rational,
    pub witness: Division,
    pub config: Configuration,
    /// Values of the cut variables, in configuration order.
    pub cuts: Vec<Rational>,
    pub stats: SearchStats,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// `orderings × C(cells + vars - 1, vars)`.
pub fn count_configurations(n: usize, cells: usize, mode: Mode, orderings: Option<usize>) -> ConfigCount {
    let vars = mode.variables(n) as u128;
    let per_ordering = binomial(cells as u128 + vars - 1, vars);
    let orderings = match orderings {
        Some(k) => Some(k as u128),
        None => factorial(n),
    };
    ConfigCount(per_ordering.zip(orderings).and_then(|(a, b)| a.checked_mul(b)))
}

fn check_budget(count: ConfigCount, budget: Option<Duration>) -> Result<()> {
    let Some(budget) = budget else {
        return Ok(());
    };
    let estimated = match count.0 {
        Some(c) => c as f64 * NOMINAL_SECS_PER_CONFIGURATION,
        None => f64::INFINITY,
    };
    if estimated > budget.as_secs_f64() {
        return Err(CakeError::BudgetExceeded {
            configurations: count.to_string(),
            estimated_secs: estimated,
            budget_secs: budget.as_secs_f64(),
        });
    }
    Ok(())
}

fn validate(instance: &Instance, options: &SolverOptions) -> Result<()> {
    let n = instance.n();
    if let Objective::SinglePlayer(i) = options.objective {
        if i >= n {
            return Err(CakeError::ParamOutOfRange(format!(
                "player index {i} out of range for {n} players"
            )));
        }
    }
    if let Objective::Custom(w) = &options.objective {
        if w.len() != n {
            return Err(CakeError::SizeMismatch {
                expected: n,
                found: w.len(),
            });
        }
    }
    if let Some(filter) = &options.ordering_filter {
        for o in filter {
            let mut seen = vec![false; n];
            let ok = o.len() == n && o.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true));
            if !ok {
                return Err(CakeError::ParamOutOfRange(format!(
                    "{o:?} is not an ordering of {n} players"
                )));
            }
        }
    }
    Ok(())
}

/// Every configuration for the instance, orderings in lexicographic order and
/// cell assignments lexicographic within each ordering.
pub struct Configurations {
    orderings: Vec<Ordering>,
    next_ordering: usize,
    cells: usize,
    vars: usize,
    current: Option<(usize, Vec<usize>)>,
}

impl Iterator for Configurations {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        loop {
            match &mut self.current {
                None => {
                    if self.next_ordering >= self.orderings.len() {
                        return None;
                    }
                    self.current = Some((self.next_ordering, vec![0; self.vars]));
                    self.next_ordering += 1;
                }
                Some((o, cells)) => {
                    let out = Configuration {
                        ordering: self.orderings[*o].clone(),
                        cut_cells: cells.clone(),
                    };
                    match cells.iter().rposition(|&c| c + 1 < self.cells) {
                        Some(i) => {
                            let v = cells[i] + 1;
                            cells[i..].iter_mut().for_each(|c| *c = v);
                        }
                        None => self.current = None,
                    }
                    return Some(out);
                }
            }
        }
    }
}

fn all_orderings(n: usize) -> Vec<Ordering> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        out.push(perm.clone());
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

/// Lists configurations lazily after the budget check.
pub fn enumerate_configurations(instance: &Instance, options: &SolverOptions) -> Result<(ConfigCount, Configurations)> {
    validate(instance, options)?;
    let n = instance.n();
    let cells = refine(instance).len();
    let mut orderings = match &options.ordering_filter {
        Some(f) => f.clone(),
        None => all_orderings(n),
    };
    orderings.sort();
    orderings.dedup();
    let count = count_configurations(n, cells, options.mode, Some(orderings.len()));
    check_budget(count, options.time_budget)?;
    Ok((
        count,
        Configurations {
            orderings,
            next_ordering: 0,
            cells,
            vars: options.mode.variables(n),
            current: None,
        },
    ))
}

/// Precomputed prefix values at cell boundaries.
struct Tables {
    n: usize,
    cells: CellPartition,
    /// `prefix[q][k]` is player `q`'s value of `[0, boundaries[k]]`.
    prefix: Vec<Vec<Rational>>,
    density: Vec<Vec<Rational>>,
    scaled: Option<Scaled>,
}

/// Prefix values multiplied by a common denominator, when they fit in `i64`
/// with room for sums over all players.
struct Scaled {
    scale: BigInt,
    prefix: Vec<Vec<i64>>,
    baseline: Vec<i64>,
}

impl Tables {
    fn new(instance: &Instance, baseline: Option<&[Rational]>) -> Self {
        let cells = refine(instance);
        let n = instance.n();
        let mut prefix = Vec::with_capacity(n);
        let mut density = Vec::with_capacity(n);
        for v in instance.players() {
            prefix.push(cells.boundaries().iter().map(|b| v.cumulative(b)).collect::<Vec<_>>());
            density.push(
                (0..cells.len())
                    .map(|c| {
                        let mid =
                            (&cells.boundaries()[c] + &cells.boundaries()[c + 1]) / Rational::from_integer(2.into());
                        let cell = v.breakpoints().partition_point(|b| b <= &mid) - 1;
                        v.densities()[cell].clone()
                    })
                    .collect(),
            );
        }
        let base: Vec<Rational> = baseline.map(<[Rational]>::to_vec).unwrap_or_default();
        let scale = common_denominator(prefix.iter().flatten().chain(&base));
        let limit = BigInt::from(i64::MAX / (4 * (n as i64 + 2)));
        let scaled = (scale <= limit).then(|| Scaled {
            prefix: prefix
                .iter()
                .map(|row| row.iter().map(|p| scale_exact(p, &scale).to_i64().unwrap()).collect())
                .collect(),
            baseline: base.iter().map(|b| scale_exact(b, &scale).to_i64().unwrap()).collect(),
            scale,
        });
        Self {
            n,
            cells,
            prefix,
            density,
            scaled,
        }
    }

    fn c(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Zero,
    One,
    Var(usize),
}

fn piece_ends(mode: Mode, n: usize, position: usize) -> (End, End) {
    match mode {
        Mode::Complete => (
            if position == 0 {
                End::Zero
            } else {
                End::Var(position - 1)
            },
            if position + 1 == n {
                End::One
            } else {
                End::Var(position)
            },
        ),
        Mode::Partial => (End::Var(2 * position), End::Var(2 * position + 1)),
    }
}

/// What a search maximizes. The Pareto margin is `min_i (u_i - baseline_i)`
/// and is searched without envy constraints.
#[derive(Debug, Clone)]
enum Goal {
    Objective(Objective),
    ParetoMargin(Vec<Rational>),
}

impl Goal {
    fn requires_envy_freeness(&self) -> bool {
        matches!(self, Goal::Objective(_))
    }

    fn aux_name(&self) -> Option<&'static str> {
        match self {
            Goal::Objective(Objective::Egalitarian) => Some("t"),
            Goal::ParetoMargin(_) => Some("delta"),
            _ => None,
        }
    }
}

struct LpBuilder<'a> {
    tables: &'a Tables,
    mode: Mode,
    config: &'a Configuration,
    vars: usize,
}

impl<'a> LpBuilder<'a> {
    fn total_vars(&self, goal: &Goal) -> usize {
        self.vars + usize::from(goal.aux_name().is_some())
    }

    fn bounds(&self, end: End) -> (usize, usize) {
        match end {
            End::Zero => (0, 0),
            End::One => (self.tables.c(), self.tables.c()),
            End::Var(v) => (self.config.cut_cells[v], self.config.cut_cells[v] + 1),
        }
    }

    /// Player `q`'s cumulative value at `end`, affine in the cut variables.
    fn cumulative(&self, q: usize, end: End, width: usize) -> LinearExpr {
        match end {
            End::Zero => LinearExpr::zero(width),
            End::One => LinearExpr::constant(width, Rational::one()),
            End::Var(v) => {
                let c = self.config.cut_cells[v];
                let d = &self.tables.density[q][c];
                let base = &self.tables.cells.boundaries()[c];
                let mut e = LinearExpr::constant(width, &self.tables.prefix[q][c] - d * base);
                e.add_term(v, d);
                e
            }
        }
    }

    fn piece_value(&self, q: usize, position: usize, width: usize) -> LinearExpr {
        let (l, r) = piece_ends(self.mode, self.tables.n, position);
        self.cumulative(q, r, width).sub(&self.cumulative(q, l, width))
    }

    /// Box bounds on `v_q` of the piece at `position`.
    fn piece_range(&self, q: usize, position: usize) -> (Rational, Rational) {
        let (l, r) = piece_ends(self.mode, self.tables.n, position);
        let ((ll, lh), (rl, rh)) = (self.bounds(l), self.bounds(r));
        let p = &self.tables.prefix[q];
        let low = (&p[rl] - &p[lh]).max(Rational::zero());
        (low, &p[rh] - &p[ll])
    }

    /// With `reduce`, drops constraints implied by the cell boxes.
    fn build(&self, goal: &Goal, reduce: bool) -> LinearProgramSpec {
        let n = self.tables.n;
        let width = self.total_vars(goal);
        let bounds = self.tables.cells.boundaries();
        let mut variables: Vec<Variable> = (0..self.vars)
            .map(|v| {
                let c = self.config.cut_cells[v];
                let name = match self.mode {
                    Mode::Complete => format!("c{}", v + 1),
                    Mode::Partial => format!("{}{}", if v % 2 == 0 { "l" } else { "r" }, v / 2 + 1),
                };
                Variable {
                    name,
                    lower: bounds[c].clone(),
                    upper: bounds[c + 1].clone(),
                }
            })
            .collect();
        if let Some(name) = goal.aux_name() {
            let lower = match goal {
                Goal::ParetoMargin(_) => -Rational::one(),
                _ => Rational::zero(),
            };
            variables.push(Variable {
                name: name.into(),
                lower,
                upper: Rational::one(),
            });
        }

        let mut constraints = Vec::new();
        for v in 1..self.vars {
            if !reduce || self.config.cut_cells[v - 1] == self.config.cut_cells[v] {
                constraints.push(LinearConstraint::le(
                    &LinearExpr::variable(width, v - 1),
                    &LinearExpr::variable(width, v),
                ));
            }
        }
        if !reduce && self.vars > 0 {
            constraints.push(LinearConstraint::ge(
                &LinearExpr::variable(width, 0),
                &LinearExpr::zero(width),
            ));
            constraints.push(LinearConstraint::le(
                &LinearExpr::variable(width, self.vars - 1),
                &LinearExpr::constant(width, Rational::one()),
            ));
        }

        let order = &self.config.ordering;
        let own: Vec<LinearExpr> = (0..n).map(|p| self.piece_value(order[p], p, width)).collect();
        if goal.requires_envy_freeness() {
            for p in 0..n {
                let q = order[p];
                let own_min = reduce.then(|| self.piece_range(q, p).0);
                for s in (0..n).filter(|&s| s != p) {
                    if let Some(own_min) = &own_min {
                        if own_min >= &self.piece_range(q, s).1 {
                            continue;
                        }
                    }
                    constraints.push(LinearConstraint::ge(&own[p], &self.piece_value(q, s, width)));
                }
            }
        }

        let mut objective = LinearExpr::zero(width);
        match goal {
            Goal::Objective(Objective::Utilitarian) => {
                for e in &own {
                    objective.add_scaled(e, &Rational::one());
                }
            }
            Goal::Objective(Objective::Egalitarian) => {
                let t = LinearExpr::variable(width, self.vars);
                for e in &own {
                    constraints.push(LinearConstraint::le(&t, e));
                }
                objective = t;
            }
            Goal::Objective(Objective::SinglePlayer(i)) => {
                let p = order.iter().position(|q| q == i).unwrap();
                objective = own[p].clone();
            }
            Goal::Objective(Objective::Custom(weights)) => {
                for (p, e) in own.iter().enumerate() {
                    objective.add_scaled(e, &weights[order[p]]);
                }
            }
            Goal::ParetoMargin(base) => {
                let delta = LinearExpr::variable(width, self.vars);
                for (p, e) in own.iter().enumerate() {
                    let mut rhs = delta.clone();
                    rhs.constant += &base[order[p]];
                    constraints.push(LinearConstraint::ge(e, &rhs));
                }
                objective = delta;
            }
        }
        LinearProgramSpec {
            variables,
            constraints,
            objective,
        }
    }

    fn division(&self, point: &[Rational]) -> Result<Division> {
        let n = self.tables.n;
        let at = |end: End| match end {
            End::Zero => Rational::zero(),
            End::One => Rational::one(),
            End::Var(v) => point[v].clone(),
        };
        let mut pieces = vec![Interval::whole(); n];
        for p in 0..n {
            let (l, r) = piece_ends(self.mode, n, p);
            pieces[self.config.ordering[p]] = Interval::new(at(l), at(r))?;
        }
        Ok(Division::new(pieces))
    }
}

fn check_config(instance: &Instance, mode: Mode, config: &Configuration) -> Result<()> {
    let n = instance.n();
    let cells = refine(instance).len();
    let mut seen = vec![false; n];
    let ordering_ok = config.ordering.len() == n
        && config
            .ordering
            .iter()
            .all(|&p| p < n && !std::mem::replace(&mut seen[p], true));
    let cells_ok = config.cut_cells.len() == mode.variables(n)
        && config.cut_cells.iter().all(|&c| c < cells)
        && config.cut_cells.windows(2).all(|w| w[0] <= w[1]);
    if ordering_ok && cells_ok {
        Ok(())
    } else {
        Err(CakeError::ParamOutOfRange(format!("invalid configuration {config:?}")))
    }
}

/// The full linear program of one configuration: cell spans as variable
/// bounds, the chain `0 <= c_1 <= … <= 1`, every envy inequality, and the
/// objective. Egalitarian objectives add a variable `t` with `t <= u_i`.
pub fn build_lp(
    instance: &Instance,
    mode: Mode,
    config: &Configuration,
    objective: &Objective,
) -> Result<LinearProgramSpec> {
    validate(instance, &SolverOptions::new(mode, objective.clone()))?;
    check_config(instance, mode, config)?;
    let tables = Tables::new(instance, None);
    let builder = LpBuilder {
        tables: &tables,
        mode,
        config,
        vars: mode.variables(instance.n()),
    };
    Ok(builder.build(&Goal::Objective(objective.clone()), false))
}

/// The division a configuration produces at `point` (cut variables first;
/// any trailing auxiliary variable is ignored).
pub fn configuration_division(
    instance: &Instance,
    mode: Mode,
    config: &Configuration,
    point: &[Rational],
) -> Result<Division> {
    check_config(instance, mode, config)?;
    let tables = Tables::new(instance, None);
    let builder = LpBuilder {
        tables: &tables,
        mode,
        config,
        vars: mode.variables(instance.n()),
    };
    builder.division(point)
}

#[derive(Clone)]
struct Candidate {
    value: Rational,
    config: Configuration,
}

struct Shared {
    /// Scaled ceiling of the incumbent value; subtrees whose bound is strictly
    /// below it are skipped.
    threshold: AtomicI64,
    best: Mutex<Option<Candidate>>,
    abort: AtomicBool,
    nodes: AtomicU64,
    lps: AtomicU64,
    deadline: Option<Instant>,
    error: Mutex<Option<CakeError>>,
}

struct Search<'a> {
    tables: &'a Tables,
    mode: Mode,
    goal: &'a Goal,
    filter: Option<&'a [Ordering]>,
    shared: &'a Shared,
    budget: Option<Duration>,
    count: ConfigCount,
    perm: Vec<usize>,
    used: Vec<bool>,
    cells: Vec<usize>,
    /// Boundary index range of each placed piece's endpoints.
    ends: Vec<((usize, usize), (usize, usize))>,
}

impl<'a> Search<'a> {
    fn stopped(&self) -> bool {
        self.shared.abort.load(AtomicOrdering::Relaxed)
    }

    fn fail(&self, err: CakeError) {
        self.shared.abort.store(true, AtomicOrdering::Relaxed);
        let mut slot = self.shared.error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn tick(&self) {
        let nodes = self.shared.nodes.fetch_add(1, AtomicOrdering::Relaxed);
        if nodes.is_multiple_of(1024) {
            if let Some(deadline) = self.shared.deadline {
                if Instant::now() > deadline {
                    let budget = self.budget.unwrap_or_default().as_secs_f64();
                    self.fail(CakeError::BudgetExceeded {
                        configurations: self.count.to_string(),
                        estimated_secs: budget,
                        budget_secs: budget,
                    });
                }
            }
        }
    }

    fn allowed_prefix(&self) -> bool {
        match self.filter {
            None => true,
            Some(f) => f.iter().any(|o| o.starts_with(&self.perm)),
        }
    }

    fn run(&mut self, first: usize) {
        self.place(0, Some(first));
    }

    fn place(&mut self, position: usize, only: Option<usize>) {
        let n = self.tables.n;
        let c = self.tables.c();
        let prev_cell = self.cells.last().copied().unwrap_or(0);
        for q in 0..n {
            if self.used[q] || only.is_some_and(|o| o != q) {
                continue;
            }
            self.perm.push(q);
            if self.allowed_prefix() {
                self.used[q] = true;
                match self.mode {
                    Mode::Complete => {
                        let left = if position == 0 {
                            (0, 0)
                        } else {
                            (prev_cell, prev_cell + 1)
                        };
                        if position + 1 == n {
                            self.visit(position, left, (c, c));
                        } else {
                            for k in prev_cell..c {
                                self.cells.push(k);
                                self.visit(position, left, (k, k + 1));
                                self.cells.pop();
                                if self.stopped() {
                                    break;
                                }
                            }
                        }
                    }
                    Mode::Partial => {
                        'outer: for kl in prev_cell..c {
                            for kr in kl..c {
                                self.cells.push(kl);
                                self.cells.push(kr);
                                self.visit(position, (kl, kl + 1), (kr, kr + 1));
                                self.cells.truncate(self.cells.len() - 2);
                                if self.stopped() {
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                self.used[q] = false;
            }
            self.perm.pop();
            if self.stopped() {
                return;
            }
        }
    }

    fn visit(&mut self, position: usize, left: (usize, usize), right: (usize, usize)) {
        self.tick();
        if self.stopped() {
            return;
        }
        self.ends.push((left, right));
        if self.feasible_bound(position) {
            if position + 1 == self.tables.n {
                self.leaf();
            } else {
                self.place(position + 1, None);
            }
        }
        self.ends.pop();
    }

    /// Necessary conditions for some completion of the current prefix to be
    /// envy-free and to reach the incumbent.
    fn feasible_bound(&self, position: usize) -> bool {
        let Some(scaled) = &self.tables.scaled else {
            return true;
        };
        let p = &scaled.prefix;
        let c = self.tables.c();
        let max_of = |q: usize, r: usize| {
            let ((ll, _), (_, rh)) = self.ends[r];
            p[q][rh] - p[q][ll]
        };
        let min_of = |q: usize, r: usize| {
            let ((_, lh), (rl, _)) = self.ends[r];
            (p[q][rl] - p[q][lh]).max(0)
        };
        let frontier = self.ends[position].1 .0;
        let envy = self.goal.requires_envy_freeness();

        if envy {
            let q = self.perm[position];
            let own = max_of(q, position);
            for r in 0..position {
                let o = self.perm[r];
                if min_of(q, r) > own || min_of(o, position) > max_of(o, r) {
                    return false;
                }
            }
        }
        let future = |u: usize| p[u][c] - p[u][frontier];
        if envy {
            for u in (0..self.tables.n).filter(|&u| !self.used[u]) {
                let f = future(u);
                if (0..=position).any(|r| min_of(u, r) > f) {
                    return false;
                }
            }
        }

        let own_max = |q: usize| match self.perm.iter().position(|&x| x == q) {
            Some(r) => max_of(q, r),
            None => future(q),
        };
        let n = self.tables.n;
        let bound = match self.goal {
            Goal::Objective(Objective::Utilitarian) => (0..n).map(own_max).sum(),
            Goal::Objective(Objective::Egalitarian) => (0..n).map(own_max).min().unwrap(),
            Goal::Objective(Objective::SinglePlayer(i)) => own_max(*i),
            Goal::Objective(Objective::Custom(_)) => i64::MAX,
            Goal::ParetoMargin(_) => {
                let margin = (0..n).map(|q| own_max(q) - scaled.baseline[q]).min().unwrap();
                if margin <= 0 {
                    return false;
                }
                margin
            }
        };
        bound >= self.shared.threshold.load(AtomicOrdering::Relaxed)
    }

    fn leaf(&mut self) {
        let config = Configuration {
            ordering: self.perm.clone(),
            cut_cells: self.cells.clone(),
        };
        let builder = LpBuilder {
            tables: self.tables,
            mode: self.mode,
            config: &config,
            vars: self.mode.variables(self.tables.n),
        };
        let lp = builder.build(self.goal, true);
        self.shared.lps.fetch_add(1, AtomicOrdering::Relaxed);
        let value = match solve_lp(&lp) {
            Ok(LpOutcome::Optimal { value, .. }) => value,
            Ok(LpOutcome::Infeasible) => return,
            Err(e) => return self.fail(e),
        };
        if matches!(self.goal, Goal::ParetoMargin(_)) && !value.is_positive() {
            return;
        }
        let mut best = self.shared.best.lock().unwrap();
        let better = match &*best {
            None => true,
            Some(b) => value > b.value || (value == b.value && config < b.config),
        };
        if better {
            if let Some(scaled) = &self.tables.scaled {
                let t = scale_ceil(&value, &scaled.scale).to_i64().unwrap_or(i64::MAX);
                self.shared.threshold.fetch_max(t, AtomicOrdering::Relaxed);
            }
            *best = Some(Candidate { value, config });
        }
    }
}

/// Branch and bound over all configurations. Returns the best configuration
/// under (value descending, configuration ascending), or `None`.
fn search(
    instance: &Instance,
    mode: Mode,
    goal: &Goal,
    filter: Option<&[Ordering]>,
    budget: Option<Duration>,
    parallelism: usize,
) -> Result<(Option<Candidate>, Tables, SearchStats)> {
    let n = instance.n();
    let baseline = match goal {
        Goal::ParetoMargin(b) => Some(b.as_slice()),
        _ => None,
    };
    let tables = Tables::new(instance, baseline);
    let count = count_configurations(n, tables.c(), mode, filter.map(<[Ordering]>::len));
    check_budget(count, budget)?;

    let shared = Shared {
        threshold: AtomicI64::new(i64::MIN),
        best: Mutex::new(None),
        abort: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
        lps: AtomicU64::new(0),
        deadline: budget.map(|b| Instant::now() + b),
        error: Mutex::new(None),
    };
    let task = |first: usize| {
        let mut s = Search {
            tables: &tables,
            mode,
            goal,
            filter,
            shared: &shared,
            budget,
            count,
            perm: Vec::with_capacity(n),
            used: vec![false; n],
            cells: Vec::new(),
            ends: Vec::with_capacity(n),
        };
        s.run(first);
    };
    if parallelism <= 1 {
        (0..n).for_each(task);
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| CakeError::Internal(e.to_string()))?;
        pool.install(|| (0..n).into_par_iter().for_each(task));
    }

    if let Some(err) = shared.error.into_inner().unwrap() {
        return Err(err);
    }
    let stats = SearchStats {
        configurations: count,
        nodes: shared.nodes.into_inner(),
        lps_solved: shared.lps.into_inner(),
    };
    Ok((shared.best.into_inner().unwrap(), tables, stats))
}

/// Lexicographically least cut vector among the optimal points of the
/// winning configuration.
fn refine_point(builder: &LpBuilder<'_>, goal: &Goal, value: &Rational) -> Result<Vec<Rational>> {
    let mut lp = builder.build(goal, false);
    let width = lp.variables.len();
    lp.constraints.push(LinearConstraint::ge(
        &lp.objective.clone(),
        &LinearExpr::constant(width, value.clone()),
    ));
    let mut fixed = Vec::with_capacity(builder.vars);
    for v in 0..builder.vars {
        let mut neg = LinearExpr::zero(width);
        neg.add_term(v, &-Rational::one());
        lp.objective = neg;
        let x = match solve_lp(&lp)? {
            LpOutcome::Optimal { value, .. } => -value,
            LpOutcome::Infeasible => return Err(CakeError::Internal("winning configuration became infeasible".into())),
        };
        lp.constraints.push(LinearConstraint::eq(
            &LinearExpr::variable(width, v),
            &LinearExpr::constant(width, x.clone()),
        ));
        fixed.push(x);
    }
    Ok(fixed)
}

fn objective_value(instance: &Instance, division: &Division, objective: &Objective) -> Result<Rational> {
    let u = utilities(instance, division)?;
    Ok(match objective {
        Objective::Utilitarian => WelfareKind::Utilitarian.aggregate(&u),
        Objective::Egalitarian => WelfareKind::Egalitarian.aggregate(&u),
        Objective::SinglePlayer(i) => u[*i].clone(),
        Objective::Custom(w) => u.iter().zip(w).map(|(a, b)| a * b).sum(),
    })
}

fn finish(
    instance: &Instance,
    mode: Mode,
    goal: &Goal,
    tables: &Tables,
    winner: Candidate,
    stats: SearchStats,
) -> Result<SolveResult> {
    let builder = LpBuilder {
        tables,
        mode,
        config: &winner.config,
        vars: mode.variables(instance.n()),
    };
    let cuts = refine_point(&builder, goal, &winner.value)?;
    let witness = builder.division(&cuts)?;
    witness.check_disjoint()?;
    Ok(SolveResult {
        value: winner.value,
        witness,
        config: winner.config,
        cuts,
        stats,
    })
}

/// Maximum of the objective over all envy-free divisions of the given mode.
/// Ties go to the lexicographically least configuration, then the least cut
/// vector.
pub fn optimize(instance: &Instance, options: &SolverOptions) -> Result<SolveResult> {
    validate(instance, options)?;
    let goal = Goal::Objective(options.objective.clone());
    let mut filter = options.ordering_filter.clone();
    if let Some(f) = &mut filter {
        f.sort();
        f.dedup();
    }
    let (winner, tables, stats) = search(
        instance,
        options.mode,
        &goal,
        filter.as_deref(),
        options.time_budget,
        options.parallelism,
    )?;
    let Some(winner) = winner else {
        return Err(match (options.mode, &filter) {
            (Mode::Complete, None) => CakeError::Internal("no envy-free complete division found".into()),
            _ => CakeError::NoEnvyFreeDivision,
        });
    };
    let result = finish(instance, options.mode, &goal, &tables, winner, stats)?;

    let matrix = envy_matrix(instance, &result.witness)?;
    if !matrix.check().is_envy_free() {
        return Err(CakeError::Internal("witness is not envy-free".into()));
    }
    if objective_value(instance, &result.witness, &options.objective)? != result.value {
        return Err(CakeError::Internal("witness value differs from the optimum".into()));
    }
    if options.mode == Mode::Complete && !result.witness.classify()?.is_complete() {
        return Err(CakeError::Internal("complete-mode witness leaves cake".into()));
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpingReport {
    pub kind: WelfareKind,
    pub complete: SolveResult,
    pub partial: SolveResult,
    /// `partial / complete`; `None` when the complete optimum is 0.
    pub alpha: Option<Rational>,
}

impl DumpingReport {
    pub fn alpha_text(&self) -> String {
        match &self.alpha {
            Some(a) => crate::rational::format_rational(a),
            None => "inf".to_string(),
        }
    }
}

/// Optimal complete and partial welfare and their ratio. Mode and objective
/// in `base` are ignored.
pub fn dumping_report(instance: &Instance, kind: WelfareKind, base: &SolverOptions) -> Result<DumpingReport> {
    let run = |mode| {
        let options = SolverOptions {
            mode,
            objective: kind.into(),
            ..base.clone()
        };
        optimize(instance, &options)
    };
    let complete = run(Mode::Complete)?;
    let partial = run(Mode::Partial)?;
    let alpha = (!complete.value.is_zero()).then(|| &partial.value / &complete.value);
    Ok(DumpingReport {
        kind,
        complete,
        partial,
        alpha,
    })
}

/// Largest utility `player` can get in an envy-free division.
pub fn max_player_utility_ef(
    instance: &Instance,
    player: usize,
    mode: Mode,
    base: &SolverOptions,
) -> Result<SolveResult> {
    let options = SolverOptions {
        mode,
        objective: Objective::SinglePlayer(player),
        ..base.clone()
    };
    optimize(instance, &options)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParetoCheck {
    No,
    /// A division giving every player strictly more; `margin` is the largest
    /// achievable minimum gain.
    Yes {
        witness: Division,
        margin: Rational,
    },
}

/// Searches every partial division (envy-freeness not required) for one that
/// strictly improves every player's utility over `x`.
pub fn exists_strict_pareto_improvement(
    instance: &Instance,
    x: &Division,
    base: &SolverOptions,
) -> Result<ParetoCheck> {
    x.check_disjoint()?;
    let baseline = utilities(instance, x)?;
    let goal = Goal::ParetoMargin(baseline.clone());
    let (winner, tables, stats) = search(instance, Mode::Partial, &goal, None, base.time_budget, base.parallelism)?;
    let Some(winner) = winner else {
        return Ok(ParetoCheck::No);
    };
    let result = finish(instance, Mode::Partial, &goal, &tables, winner, stats)?;
    let improved = utilities(instance, &result.witness)?;
    let margin = improved.iter().zip(&baseline).map(|(a, b)| a - b).min().unwrap();
    if margin != result.value || !margin.is_positive() {
        return Err(CakeError::Internal("Pareto witness does not match its margin".into()));
    }
    Ok(ParetoCheck::Yes {
        witness: result.witness,
        margin,
    })
}
