//! Instance families with their canonical divisions and closed-form values.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CakeError, Result};
use crate::io::{DivisionDoc, InstanceDoc};
use crate::metrics::{utilities, WelfareKind};
use crate::model::{make_valuation, Division, Instance, Interval, Segment, Valuation};
use crate::rational::{approx, format_rational, int, rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DivisionTag {
    Complete,
    Partial,
}

impl DivisionTag {
    pub fn name(self) -> &'static str {
        match self {
            DivisionTag::Complete => "complete",
            DivisionTag::Partial => "partial",
        }
    }
}

impl fmt::Display for DivisionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DivisionTag {
    type Err = CakeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(DivisionTag::Complete),
            "partial" => Ok(DivisionTag::Partial),
            other => Err(CakeError::UnknownTag(other.to_string())),
        }
    }
}

/// What a prediction measures on a division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Welfare(WelfareKind),
    /// Own-piece utility of one player (0-based).
    PlayerUtility(usize),
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Welfare(kind) => write!(f, "{kind}"),
            Measure::PlayerUtility(i) => write!(f, "player {}", i + 1),
        }
    }
}

impl Measure {
    pub fn evaluate(self, instance: &Instance, division: &Division) -> Result<Rational> {
        let u = utilities(instance, division)?;
        Ok(match self {
            Measure::Welfare(kind) => kind.aggregate(&u),
            Measure::PlayerUtility(i) => u
                .get(i)
                .cloned()
                .ok_or_else(|| CakeError::ParamOutOfRange(format!("no player {}", i + 1)))?,
        })
    }
}

/// A stated bound that the canonical divisions do not attain by themselves,
/// such as the best complete welfare over all envy-free divisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub name: String,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionBundle {
    pub family: String,
    pub instance: Instance,
    pub canonical_complete: Division,
    pub canonical_partial: Division,
    pub predicted: BTreeMap<(DivisionTag, Measure), Rational>,
    pub bounds: Vec<Bound>,
    pub notes: String,
}

impl ConstructionBundle {
    pub fn division(&self, tag: DivisionTag) -> &Division {
        match tag {
            DivisionTag::Complete => &self.canonical_complete,
            DivisionTag::Partial => &self.canonical_partial,
        }
    }

    pub fn prediction(&self, tag: DivisionTag, measure: Measure) -> Result<&Rational> {
        self.predicted
            .get(&(tag, measure))
            .ok_or_else(|| CakeError::UnknownTag(format!("{tag} {measure}")))
    }

    pub fn bound(&self, name: &str) -> Option<&Rational> {
        self.bounds.iter().find(|b| b.name == name).map(|b| &b.value)
    }

    fn predict(&mut self, tag: DivisionTag, measure: Measure, value: Rational) {
        self.predicted.insert((tag, measure), value);
    }

    fn add_bound(&mut self, name: &str, value: Rational) {
        self.bounds.push(Bound {
            name: name.to_string(),
            value,
        });
    }
}

/// The stored closed form for `(tag, kind)`.
pub fn predicted_value(bundle: &ConstructionBundle, tag: &str, kind: WelfareKind) -> Result<Rational> {
    let tag: DivisionTag = tag.parse()?;
    bundle.prediction(tag, Measure::Welfare(kind)).cloned()
}

fn out_of_range(msg: impl Into<String>) -> CakeError {
    CakeError::ParamOutOfRange(msg.into())
}

fn iv(left: Rational, right: Rational) -> Result<Interval> {
    Interval::new(left, right)
}

fn bundle(family: &str, instance: Instance, complete: Division, partial: Division, notes: &str) -> ConstructionBundle {
    ConstructionBundle {
        family: family.to_string(),
        instance,
        canonical_complete: complete,
        canonical_partial: partial,
        predicted: BTreeMap::new(),
        bounds: Vec::new(),
        notes: notes.to_string(),
    }
}

/// Alice is uniform; Bob's whole mass sits on a strip of width `candy_width`
/// around 1/2.
pub fn intro_two_player(eps: Rational, candy_width: Rational) -> Result<ConstructionBundle> {
    if !(Rational::zero() < candy_width && candy_width < eps && eps < rat(1, 4)) {
        return Err(out_of_range("intro requires 0 < candy_width < eps < 1/4"));
    }
    let half = rat(1, 2);
    let start = &half - &candy_width / int(2);
    let bob = make_valuation(&[(start.clone(), &half + &candy_width / int(2), int(1))])?;
    let instance = Instance::new(vec![Valuation::uniform(), bob], "intro")?
        .with_param("eps", eps.clone())
        .with_param("candy_width", candy_width.clone());
    let complete = Division::new(vec![iv(int(0), half.clone())?, iv(half.clone(), int(1))?]);
    let partial = Division::new(vec![iv(int(0), start.clone())?, iv(start.clone(), int(1) - &eps)?]);
    let mut b = bundle(
        "intro",
        instance,
        complete,
        partial,
        "Player 1 is uniform, player 2 values only the candy strip. Discarding (1 - eps, 1) lets player 2 keep the strip.",
    );
    use DivisionTag::*;
    use WelfareKind::*;
    b.predict(Complete, Measure::Welfare(Utilitarian), int(1));
    b.predict(Complete, Measure::Welfare(Egalitarian), half.clone());
    b.predict(
        Partial,
        Measure::Welfare(Utilitarian),
        rat(3, 2) - &candy_width / int(2),
    );
    b.predict(Partial, Measure::Welfare(Egalitarian), start);
    Ok(b)
}

/// Utilitarian family on `n = 2k(3t - 2)` players. Uses `1/(4S)` as the
/// default width, where `S = k(10t - 9)` is the number of special intervals.
pub fn utilitarian_family(k: u32, t: u32, width: Option<Rational>) -> Result<ConstructionBundle> {
    if k < 1 {
        return Err(out_of_range("utilitarian family requires k >= 1"));
    }
    if t < 2 {
        return Err(out_of_range("utilitarian family requires t >= 2"));
    }
    let (k, t) = (k as usize, t as usize);
    let n = 2 * k * (3 * t - 2);
    let special = k * (10 * t - 9);
    let slot = rat(1, 2 * special as i64);
    let width = width.unwrap_or_else(|| rat(1, 4 * special as i64));
    if !(Rational::zero() < width && width <= slot) {
        return Err(out_of_range(format!(
            "utilitarian family requires 0 < width <= 1/{}",
            2 * special
        )));
    }
    let nn = int(n as i64);
    let set_size = 3 * t - 2;
    let chosen = |s: usize| s * set_size;
    let type_a = |s: usize, i: usize, second: bool| s * set_size + 1 + 3 * i + usize::from(second);
    let type_b = |s: usize, i: usize| s * set_size + 3 + 3 * i;
    let common_first = k * set_size;

    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Chosen { first: bool },
        HighA,
        Comp,
        B1,
        B2,
        B3,
    }
    // (owner, mass, role) left to right.
    let mut items: Vec<(usize, Rational, Role)> = Vec::with_capacity(special);
    for s in 0..k {
        items.push((chosen(s), rat(1, t as i64), Role::Chosen { first: true }));
        for i in 0..t - 1 {
            items.push((type_a(s, i, false), int(4) / &nn, Role::HighA));
            items.push((type_a(s, i, true), int(4) / &nn, Role::HighA));
            items.push((chosen(s), rat(1, t as i64), Role::Chosen { first: false }));
        }
    }
    for s in 0..k {
        for i in 0..t - 1 {
            let (a, a2, b) = (type_a(s, i, false), type_a(s, i, true), type_b(s, i));
            items.push((a, int(2) / &nn, Role::Comp));
            items.push((b, rat(3, 2) / &nn, Role::B1));
            items.push((a, int(2) / &nn, Role::Comp));
            items.push((b, int(1) / &nn, Role::B2));
            items.push((a2, int(2) / &nn, Role::Comp));
            items.push((b, rat(3, 2) / &nn, Role::B3));
            items.push((a2, int(2) / &nn, Role::Comp));
        }
    }
    debug_assert_eq!(items.len(), special);
    let start = |j: usize| rat(1, 2) + &slot * int(j as i64);
    let end = |j: usize| start(j) + &width;

    let half = rat(1, 2);
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); n];
    for (q, segs) in segments.iter_mut().enumerate() {
        let common_mass = if q >= common_first {
            int(1)
        } else if q % set_size == 0 {
            int(0)
        } else if (q % set_size) % 3 == 0 {
            int(1) - int(4) / &nn
        } else {
            int(1) - int(8) / &nn
        };
        if !common_mass.is_zero() {
            segs.push((int(0), half.clone(), common_mass));
        }
    }
    for (j, (owner, mass, _)) in items.iter().enumerate() {
        segments[*owner].push((start(j), end(j), mass.clone()));
    }
    let players = segments.iter().map(|s| make_valuation(s)).collect::<Result<Vec<_>>>()?;
    let instance = Instance::new(players, format!("utilitarian-k{k}-t{t}"))?
        .with_param("k", int(k as i64))
        .with_param("t", int(t as i64))
        .with_param("width", width.clone());

    // Complete: common part in n/2 equal pieces; every anchor runs to the next.
    let mut complete = vec![Interval::whole(); n];
    for j in 0..n / 2 {
        complete[common_first + j] = iv(rat(j as i64, n as i64), rat(j as i64 + 1, n as i64))?;
    }
    let anchors: Vec<usize> = (0..items.len())
        .filter(|&j| matches!(items[j].2, Role::Chosen { first: true } | Role::HighA | Role::B1))
        .collect();
    for (a, &j) in anchors.iter().enumerate() {
        let right = anchors.get(a + 1).map_or_else(Rational::one, |&next| start(next));
        complete[items[j].0] = iv(start(j), right)?;
    }

    // Partial: common part shared by common and Type B players; B2 discarded.
    let sharers = n / 2 + k * (t - 1);
    let share = |j: usize| rat(j as i64, 2 * sharers as i64);
    let mut partial = vec![Interval::whole(); n];
    let mut slot_owner = (0..n / 2).map(|j| common_first + j).collect::<Vec<_>>();
    for s in 0..k {
        for i in 0..t - 1 {
            slot_owner.push(type_b(s, i));
        }
    }
    for (j, &q) in slot_owner.iter().enumerate() {
        partial[q] = iv(share(j), share(j + 1))?;
    }
    let firsts: Vec<usize> = (0..items.len())
        .filter(|&j| matches!(items[j].2, Role::Chosen { first: true }))
        .collect();
    let comp_start = firsts.last().unwrap() + 3 * (t - 1) + 1;
    for (s, &j) in firsts.iter().enumerate() {
        let right = firsts.get(s + 1).copied().unwrap_or(comp_start);
        partial[chosen(s)] = iv(start(j), start(right))?;
    }
    for s in 0..k {
        for i in 0..t - 1 {
            let g = comp_start + 7 * (s * (t - 1) + i);
            partial[type_a(s, i, false)] = iv(start(g), end(g + 2))?;
            let right = if g + 7 < items.len() { start(g + 7) } else { int(1) };
            partial[type_a(s, i, true)] = iv(start(g + 4), right)?;
        }
    }

    let mut b = bundle(
        "utilitarian",
        instance,
        Division::new(complete),
        Division::new(partial),
        &format!(
            "n = {n}: {k} chosen players, {} Type A, {} Type B and {} common players. \
             The partial division discards each Type B player's 1/n interval.",
            2 * k * (t - 1),
            k * (t - 1),
            n / 2
        ),
    );
    let (kr, tr) = (int(k as i64), int(t as i64));
    let tm1 = &tr - int(1);
    let complete_value = (int(1) / &tr + int(12) * &tm1 / &nn) * &kr + int(1);
    let partial_value = &kr + int(1) + (int(8) * &tm1 * &kr / &nn) * (int(1) - int(1) / (&nn + int(2) * &kr * &tm1));
    b.predict(
        DivisionTag::Complete,
        Measure::Welfare(WelfareKind::Utilitarian),
        complete_value.clone(),
    );
    b.predict(
        DivisionTag::Partial,
        Measure::Welfare(WelfareKind::Utilitarian),
        partial_value,
    );
    b.add_bound("complete utilitarian optimum at most", complete_value);
    b.add_bound("discarded intervals", &kr * &tm1);
    Ok(b)
}

/// Places `masses.len()` intervals in equal slots over `[from, to]`. With no
/// width the intervals fill their slots; otherwise each sits at the left end
/// of its slot. Returns the interval endpoints.
fn lay_out(from: &Rational, to: &Rational, count: usize, width: Option<&Rational>) -> Vec<(Rational, Rational)> {
    let slot = (to - from) / int(count as i64);
    (0..count)
        .map(|j| {
            let l = from + &slot * int(j as i64);
            let r = match width {
                Some(w) => &l + w,
                None => &l + &slot,
            };
            (l, r)
        })
        .collect()
}

/// Egalitarian family on `n = 3k + 1` players: main part `[0, 3/4]`, last
/// player part `[3/4, 1]`. With `width = None` intervals are contiguous.
pub fn egalitarian_family(k: u32, eps: Rational, width: Option<Rational>) -> Result<ConstructionBundle> {
    if k < 1 {
        return Err(out_of_range("egalitarian family requires k >= 1"));
    }
    if !(Rational::zero() < eps && eps < rat(1, 12)) {
        return Err(out_of_range("egalitarian family requires 0 < eps < 1/12"));
    }
    let k = k as usize;
    let n = 3 * k + 1;
    let main_count = 10 * k;
    let last_count = 3 * k + 1;
    if let Some(w) = &width {
        let limit = rat(3, 4 * main_count as i64).min(rat(1, 4 * last_count as i64));
        if !(&Rational::zero() < w && w <= &limit) {
            return Err(out_of_range(format!(
                "egalitarian family requires 0 < width <= {}",
                format_rational(&limit)
            )));
        }
    }
    let last = n - 1;
    let nn = int(n as i64);
    let one_n = int(1) / &nn;
    let a_mass = (int(1) + &eps) / int(4);
    let t_mass = (int(1) - &eps) / int(3);
    let h_mass = (int(1) - &eps) / int(2);

    // Main part per group: n, A, T, A, I, n, A', T, A', T.
    let mut main: Vec<(usize, Rational)> = Vec::with_capacity(main_count);
    for j in 0..k {
        let (a, a2, tp) = (3 * j, 3 * j + 1, 3 * j + 2);
        main.extend([
            (last, one_n.clone()),
            (a, a_mass.clone()),
            (tp, t_mass.clone()),
            (a, a_mass.clone()),
            (tp, eps.clone()),
            (last, one_n.clone()),
            (a2, a_mass.clone()),
            (tp, t_mass.clone()),
            (a2, a_mass.clone()),
            (tp, t_mass.clone()),
        ]);
    }
    // Last part: n, then (A-half, A'-half, n) per group.
    let mut tail: Vec<(usize, Rational)> = vec![(last, one_n.clone())];
    for j in 0..k {
        tail.extend([
            (3 * j, h_mass.clone()),
            (3 * j + 1, h_mass.clone()),
            (last, one_n.clone()),
        ]);
    }
    let three_quarters = rat(3, 4);
    let main_pos = lay_out(&int(0), &three_quarters, main_count, width.as_ref());
    let tail_pos = lay_out(&three_quarters, &int(1), last_count, width.as_ref());

    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); n];
    for ((owner, mass), (l, r)) in main.iter().zip(&main_pos).chain(tail.iter().zip(&tail_pos)) {
        segments[*owner].push((l.clone(), r.clone(), mass.clone()));
    }
    let players = segments.iter().map(|s| make_valuation(s)).collect::<Result<Vec<_>>>()?;
    let mut instance = Instance::new(players, format!("egalitarian-k{k}"))?
        .with_param("k", int(k as i64))
        .with_param("eps", eps.clone());
    if let Some(w) = &width {
        instance = instance.with_param("width", w.clone());
    }

    let ms = |j: usize, g: usize| main_pos[10 * g + j].0.clone();
    let ts = |j: usize| tail_pos[j].0.clone();
    let main_end = three_quarters.clone();

    // Partial: drop every I_j.
    let mut partial = vec![Interval::whole(); n];
    for g in 0..k {
        let block1_left = if g == 0 { int(0) } else { ms(0, g) };
        partial[3 * g] = iv(block1_left, ms(4, g))?;
        partial[3 * g + 1] = iv(main_pos[10 * g + 4].1.clone(), ms(9, g))?;
        let next = if g + 1 < k { ms(0, g + 1) } else { main_end.clone() };
        partial[3 * g + 2] = iv(ms(9, g), next)?;
    }
    partial[last] = iv(three_quarters.clone(), int(1))?;

    // Complete: every piece holds exactly one of the last player's intervals.
    let mut complete = vec![Interval::whole(); n];
    for g in 0..k {
        let left = if g == 0 { int(0) } else { ms(8, g - 1) };
        complete[3 * g] = iv(left, ms(4, g))?;
        complete[3 * g + 2] = iv(ms(4, g), ms(8, g))?;
        let left_half = 3 * g + 1;
        let right = if g + 1 < k { ts(3 * g + 5) } else { int(1) };
        complete[3 * g + 1] = iv(ts(left_half + 1), right)?;
    }
    complete[last] = iv(ms(8, k - 1), ts(2))?;

    let mut b = bundle(
        "egalitarian",
        instance,
        Division::new(complete),
        Division::new(partial),
        &format!(
            "n = {n}. The partial division discards the {k} separator intervals of mass eps; \
             the complete division gives player {n} exactly 1/{n}."
        ),
    );
    use DivisionTag::*;
    use WelfareKind::*;
    b.predict(Complete, Measure::Welfare(Egalitarian), one_n.clone());
    b.predict(Complete, Measure::PlayerUtility(last), one_n.clone());
    b.predict(Partial, Measure::Welfare(Egalitarian), t_mass.clone());
    b.predict(Partial, Measure::PlayerUtility(last), int(k as i64 + 1) / &nn);
    b.add_bound("complete egalitarian optimum at most", one_n.clone());
    b.add_bound(&format!("player {n} complete utility at most"), one_n.clone());
    b.add_bound("dumping ratio at least", t_mass * nn);
    Ok(b)
}

/// The two tight instances for `n = 3` and `n = 4`.
pub fn egalitarian_tight(n: u32, eps: Rational) -> Result<ConstructionBundle> {
    if !(Rational::zero() < eps && eps < rat(1, 20)) {
        return Err(out_of_range("egalitarian-tight requires 0 < eps < 1/20"));
    }
    let e = |m: i64| &eps * int(m);
    let half = rat(1, 2);
    let (instance, complete, partial, partial_value, complete_value, bound, ratio) = match n {
        3 => {
            let p1 = make_valuation(&[
                (int(0), e(1), &half - e(1)),
                (rat(2, 3), rat(2, 3) + e(3), e(3)),
                (int(1) - e(1), int(1), &half - e(2)),
            ])?;
            let instance = Instance::new(
                vec![p1, Valuation::uniform(), Valuation::uniform()],
                "egalitarian-tight-3",
            )?;
            let complete = Division::new(vec![
                iv(rat(2, 3) + e(2), int(1))?,
                iv(int(0), rat(1, 3) + e(1))?,
                iv(rat(1, 3) + e(1), rat(2, 3) + e(2))?,
            ]);
            let partial = Division::new(vec![
                iv(int(0), e(1))?,
                iv(e(1), half.clone())?,
                iv(half.clone(), int(1) - e(1))?,
            ]);
            (
                instance,
                complete,
                partial,
                &half - e(1),
                rat(1, 3) + e(1),
                rat(1, 3) + e(1),
                (int(3) - e(6)) / (int(2) + e(6)),
            )
        }
        4 => {
            let quarter = rat(1, 4);
            let p1 = make_valuation(&[
                (int(0), e(1), &half - e(1)),
                (rat(3, 4), rat(3, 4) + e(3), e(3)),
                (int(1) - e(1), int(1), &half - e(2)),
            ])?;
            let p2 = make_valuation(&[
                (e(1), e(2), e(3)),
                (&quarter - e(1), quarter.clone(), &half - e(2)),
                (half.clone(), &half + e(1), &half - e(1)),
            ])?;
            let instance = Instance::new(
                vec![p1, p2, Valuation::uniform(), Valuation::uniform()],
                "egalitarian-tight-4",
            )?;
            let complete = Division::new(vec![
                iv(rat(3, 4) + e(2), int(1))?,
                iv(int(0), quarter.clone())?,
                iv(quarter.clone(), &half + e(1))?,
                iv(&half + e(1), rat(3, 4) + e(2))?,
            ]);
            let partial = Division::new(vec![
                iv(int(0), e(2))?,
                iv(half.clone(), &half + e(1))?,
                iv(e(2), half.clone())?,
                iv(&half + e(1), int(1) - e(1))?,
            ]);
            (
                instance,
                complete,
                partial,
                &half - e(2),
                &quarter + e(1),
                &quarter + e(2),
                (int(2) - e(8)) / (int(1) + e(8)),
            )
        }
        other => {
            return Err(out_of_range(format!(
                "egalitarian-tight requires n in {{3, 4}}, got {other}"
            )))
        }
    };
    let instance = instance.with_param("n", int(n as i64)).with_param("eps", eps.clone());
    let mut b = bundle(
        "egalitarian-tight",
        instance,
        complete,
        partial,
        "Players 1 (and 2 for n = 4) have concentrated valuations; the rest are uniform. \
         The partial division discards (1 - eps, 1).",
    );
    b.predict(
        DivisionTag::Complete,
        Measure::Welfare(WelfareKind::Egalitarian),
        complete_value,
    );
    b.predict(
        DivisionTag::Partial,
        Measure::Welfare(WelfareKind::Egalitarian),
        partial_value,
    );
    b.add_bound("complete egalitarian optimum at most", bound);
    b.add_bound("dumping ratio at least", ratio);
    Ok(b)
}

/// Default `eps` for [`pareto_family`]: `1/(2n(n+1))`.
pub fn pareto_default_eps(n: u32) -> Rational {
    rat(1, 2 * n as i64 * (n as i64 + 1))
}

/// Players `1..n-1` each want a `2 eps` strip around `i/n`; player `n` is
/// uniform.
pub fn pareto_family(n: u32, eps: Rational) -> Result<ConstructionBundle> {
    if n <= 2 {
        return Err(out_of_range("pareto family requires n > 2"));
    }
    let limit = rat(1, n as i64 * (n as i64 + 1));
    if !(Rational::zero() < eps && eps < limit) {
        return Err(out_of_range(format!(
            "pareto family requires 0 < eps < {}",
            format_rational(&limit)
        )));
    }
    let n = n as usize;
    let nn = int(n as i64);
    let at = |i: usize| int(i as i64) / &nn;
    let mut players = Vec::with_capacity(n);
    for i in 1..n {
        players.push(make_valuation(&[(at(i) - &eps, at(i) + &eps, int(1))])?);
    }
    players.push(Valuation::uniform());
    let instance = Instance::new(players, format!("pareto-{n}"))?
        .with_param("n", nn.clone())
        .with_param("eps", eps.clone());

    let mut complete = vec![Interval::whole(); n];
    complete[n - 1] = iv(int(0), at(1))?;
    for i in 1..n {
        complete[i - 1] = iv(at(i), at(i + 1))?;
    }
    let step = at(1) - &eps;
    let mut partial = vec![Interval::whole(); n];
    partial[n - 1] = iv(int(0), at(1))?;
    partial[0] = iv(at(1), at(2) - e2(&eps))?;
    for i in 2..n {
        partial[i - 1] = iv(&step * int(i as i64), &step * int(i as i64 + 1))?;
    }

    let mut b = bundle(
        "pareto",
        instance,
        Division::new(complete),
        Division::new(partial),
        "The partial division doubles the utility of players 2..n-1 and leaves players 1 and n unchanged.",
    );
    use DivisionTag::*;
    use WelfareKind::*;
    let half = rat(1, 2);
    let one_n = int(1) / &nn;
    b.predict(
        Complete,
        Measure::Welfare(Utilitarian),
        int(n as i64 - 1) / int(2) + &one_n,
    );
    b.predict(Complete, Measure::Welfare(Egalitarian), one_n.clone());
    b.predict(
        Partial,
        Measure::Welfare(Utilitarian),
        &half + int(n as i64 - 2) + &one_n,
    );
    b.predict(Partial, Measure::Welfare(Egalitarian), one_n.clone());
    for i in 0..n - 1 {
        b.predict(Complete, Measure::PlayerUtility(i), half.clone());
        let partial_utility = if i == 0 { half.clone() } else { int(1) };
        b.predict(Partial, Measure::PlayerUtility(i), partial_utility);
    }
    b.predict(Complete, Measure::PlayerUtility(n - 1), one_n.clone());
    b.predict(Partial, Measure::PlayerUtility(n - 1), one_n.clone());
    b.add_bound(&format!("player {n} complete utility at most"), one_n);
    Ok(b)
}

fn e2(eps: &Rational) -> Rational {
    eps * int(2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionDoc {
    pub division: String,
    pub measure: String,
    pub value: String,
    pub approx: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundDoc {
    pub name: String,
    pub value: String,
    pub approx: String,
}

/// One document with the instance, both canonical divisions and predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleDoc {
    pub family: String,
    pub instance: InstanceDoc,
    pub canonical_complete: DivisionDoc,
    pub canonical_partial: DivisionDoc,
    pub predictions: Vec<PredictionDoc>,
    pub bounds: Vec<BoundDoc>,
    pub notes: String,
}

impl BundleDoc {
    pub fn from_bundle(b: &ConstructionBundle) -> Self {
        Self {
            family: b.family.clone(),
            instance: InstanceDoc::from_instance(&b.instance),
            canonical_complete: DivisionDoc::from_division(&b.canonical_complete),
            canonical_partial: DivisionDoc::from_division(&b.canonical_partial),
            predictions: b
                .predicted
                .iter()
                .map(|((tag, measure), v)| PredictionDoc {
                    division: tag.to_string(),
                    measure: measure.to_string(),
                    value: format_rational(v),
                    approx: approx(v),
                })
                .collect(),
            bounds: b
                .bounds
                .iter()
                .map(|bound| BoundDoc {
                    name: bound.name.clone(),
                    value: format_rational(&bound.value),
                    approx: approx(&bound.value),
                })
                .collect(),
            notes: b.notes.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{envy_matrix, pareto_dominates, welfare};
    use crate::model::Coverage;

    fn check_bundle(b: &ConstructionBundle) {
        for tag in [DivisionTag::Complete, DivisionTag::Partial] {
            let d = b.division(tag);
            let coverage = d.classify().unwrap();
            assert_eq!(
                coverage.is_complete(),
                tag == DivisionTag::Complete,
                "{} {tag}",
                b.family
            );
            let m = envy_matrix(&b.instance, d).unwrap();
            assert!(m.check().is_envy_free(), "{} {tag}: {:?}", b.family, m.check());
        }
        for ((tag, measure), value) in &b.predicted {
            assert_eq!(
                &measure.evaluate(&b.instance, b.division(*tag)).unwrap(),
                value,
                "{} {tag} {measure}",
                b.family
            );
        }
    }

    #[test]
    fn intro_bundle() {
        let b = intro_two_player(rat(1, 50), rat(1, 100)).unwrap();
        check_bundle(&b);
        assert_eq!(
            predicted_value(&b, "complete", WelfareKind::Utilitarian).unwrap(),
            int(1)
        );
        assert_eq!(
            predicted_value(&b, "partial", WelfareKind::Utilitarian).unwrap(),
            rat(299, 200)
        );
        assert!(matches!(
            predicted_value(&b, "neither", WelfareKind::Utilitarian),
            Err(CakeError::UnknownTag(_))
        ));
        assert!(intro_two_player(rat(1, 100), rat(1, 50)).is_err());
    }

    #[test]
    fn tight_bundles() {
        let eps = rat(1, 100);
        let b3 = egalitarian_tight(3, eps.clone()).unwrap();
        check_bundle(&b3);
        assert_eq!(
            predicted_value(&b3, "partial", WelfareKind::Egalitarian).unwrap(),
            rat(49, 100)
        );
        let b4 = egalitarian_tight(4, eps).unwrap();
        check_bundle(&b4);
        assert_eq!(
            predicted_value(&b4, "partial", WelfareKind::Egalitarian).unwrap(),
            rat(12, 25)
        );
        assert!(egalitarian_tight(5, rat(1, 100)).is_err());
        assert!(egalitarian_tight(3, rat(1, 20)).is_err());
    }

    #[test]
    fn pareto_bundles() {
        for n in 3..=6 {
            let b = pareto_family(n, pareto_default_eps(n)).unwrap();
            check_bundle(&b);
            let (c, p) = (&b.canonical_complete, &b.canonical_partial);
            assert!(pareto_dominates(&b.instance, p, c, false).unwrap());
            let uc = utilities(&b.instance, c).unwrap();
            let up = utilities(&b.instance, p).unwrap();
            let strict = uc.iter().zip(&up).filter(|(a, b)| b > a).count();
            assert_eq!(strict, n as usize - 2);
        }
        assert!(pareto_family(2, rat(1, 100)).is_err());
        assert!(pareto_family(4, rat(1, 20)).is_err());
    }

    #[test]
    fn egalitarian_bundles() {
        for k in 1..=3 {
            let b = egalitarian_family(k, rat(1, 100), None).unwrap();
            check_bundle(&b);
            match b.canonical_partial.classify().unwrap() {
                Coverage::Partial(left) => assert_eq!(left.len(), k as usize),
                Coverage::Complete => panic!(),
            }
        }
        let b = egalitarian_family(2, rat(1, 100), Some(rat(1, 200))).unwrap();
        check_bundle(&b);
        assert!(egalitarian_family(0, rat(1, 100), None).is_err());
        assert!(egalitarian_family(1, rat(1, 12), None).is_err());
    }

    #[test]
    fn utilitarian_small() {
        let b = utilitarian_family(1, 2, None).unwrap();
        assert_eq!(b.instance.n(), 8);
        assert_eq!(
            predicted_value(&b, "complete", WelfareKind::Utilitarian).unwrap(),
            int(3)
        );
        let m = envy_matrix(&b.instance, &b.canonical_complete).unwrap();
        assert!(m.check().is_envy_free());
        assert_eq!(
            welfare(&b.instance, &b.canonical_complete, WelfareKind::Utilitarian)
                .unwrap()
                .value,
            int(3)
        );
        assert_eq!(
            welfare(&b.instance, &b.canonical_partial, WelfareKind::Utilitarian)
                .unwrap()
                .value,
            predicted_value(&b, "partial", WelfareKind::Utilitarian).unwrap()
        );
        match b.canonical_partial.classify().unwrap() {
            Coverage::Partial(left) => assert_eq!(left.len(), 1),
            Coverage::Complete => panic!(),
        }
        assert!(utilitarian_family(1, 1, None).is_err());
    }

    #[test]
    fn utilitarian_k8() {
        for t in [2, 8] {
            let b = utilitarian_family(8, t, None).unwrap();
            check_bundle(&b);
            match b.canonical_partial.classify().unwrap() {
                Coverage::Partial(left) => assert_eq!(left.len(), 8 * (t as usize - 1)),
                Coverage::Complete => panic!(),
            }
        }
    }
}
