//! Quantitative reachability on the abstracted game graph: exact profile
//! evaluation over the rational-function field in y, policy/strategy
//! iteration with certified comparisons, and threshold decisions.

use crate::exppoly::ExpPoly;
use crate::mdp::{Mdp, MdpStateKind};
use crate::rat::{Rat, RatInterval};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("linear system is singular after preprocessing")]
    Singular,
    #[error("policy iteration exceeded the profile-count bound")]
    IterationBound,
    #[error("cannot separate value from threshold within the refinement cap")]
    CannotSeparate,
    #[error("mode max admits no Min states; found `{0}`")]
    UnexpectedMinState(String),
    #[error("value decreased at `{0}` after an improvement step")]
    NonMonotone(String),
    #[error("threshold parse error: {0}")]
    ThresholdSyntax(String),
}

/// Exact element of Q(y): a quotient of two `ExpPoly` values whose
/// denominator is nonzero at y = e^(-1/q).
#[derive(Debug, Clone)]
pub struct RationalFunctionValue {
    pub num: ExpPoly,
    pub den: ExpPoly,
}

impl RationalFunctionValue {
    pub fn from_poly(p: ExpPoly) -> Self {
        let q = p.q;
        RationalFunctionValue { num: p, den: ExpPoly::one(q) }
    }

    pub fn zero(q: u64) -> Self {
        Self::from_poly(ExpPoly::zero(q))
    }

    pub fn one(q: u64) -> Self {
        Self::from_poly(ExpPoly::one(q))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalFunctionValue {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .reduced()
    }

    pub fn sub(&self, other: &Self) -> Self {
        RationalFunctionValue {
            num: self.num.mul(&other.den).sub(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .reduced()
    }

    pub fn mul(&self, other: &Self) -> Self {
        RationalFunctionValue { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
            .reduced()
    }

    pub fn mul_poly(&self, p: &ExpPoly) -> Self {
        RationalFunctionValue { num: self.num.mul(p), den: self.den.clone() }.reduced()
    }

    pub fn div(&self, other: &Self) -> Self {
        RationalFunctionValue {
            num: self.num.mul(&other.den),
            den: self.den.mul(&other.num),
        }
        .reduced()
    }

    /// Structural equality as field elements (cross multiplication).
    pub fn eq_value(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }

    /// Canonical form: common y-shift removed, gcd-reduced, denominator with
    /// leading coefficient 1 and minimal exponent 0.
    pub fn canonical(&self) -> Self {
        self.reduced()
    }

    fn reduced(&self) -> Self {
        let q = self.num.q;
        if self.num.is_zero() {
            return RationalFunctionValue { num: ExpPoly::zero(q), den: ExpPoly::one(q) };
        }
        let (mut n, n_shift) = to_dense(&self.num);
        let (mut d, d_shift) = to_dense(&self.den);
        let g = poly_gcd(&n, &d);
        if poly_deg(&g) > 0 {
            n = poly_div_exact(&n, &g);
            d = poly_div_exact(&d, &g);
        }
        // normalize: denominator leading coefficient 1
        let lead = d.iter().rev().find(|c| !c.is_zero()).cloned().unwrap_or_else(Rat::one);
        for c in n.iter_mut() {
            *c /= &lead;
        }
        for c in d.iter_mut() {
            *c /= &lead;
        }
        let _ = (n_shift, d_shift);
        RationalFunctionValue {
            num: from_dense(q, &n, n_shift - d_shift),
            den: from_dense(q, &d, 0),
        }
    }

    pub fn enclosure(&self, digits: u32) -> RatInterval {
        let mut terms = 32usize;
        loop {
            let n = self.num.eval_enclosure(terms);
            let d = self.den.eval_enclosure(terms);
            if let Some(sign) = d.sign() {
                if sign != Ordering::Equal {
                    // interval division with a sign-definite denominator
                    let cands = [
                        &n.lo / &d.lo,
                        &n.lo / &d.hi,
                        &n.hi / &d.lo,
                        &n.hi / &d.hi,
                    ];
                    let lo = cands.iter().min().unwrap().clone();
                    let hi = cands.iter().max().unwrap().clone();
                    let enc = RatInterval::new(lo, hi);
                    let target =
                        Rat::new(1.into(), num_bigint::BigInt::from(10u32).pow(digits));
                    if enc.width() < target || terms >= 4096 {
                        return enc;
                    }
                }
            }
            if terms >= 4096 {
                // denominator straddles zero even at maximum refinement;
                // fall back to the widest sensible answer
                return RatInterval::new(Rat::from_integer((-1).into()) * Rat::from_integer(10.into()), Rat::from_integer(10.into()));
            }
            terms *= 2;
        }
    }

    pub fn eval_f64(&self) -> f64 {
        self.num.eval_f64() / self.den.eval_f64()
    }
}

impl fmt::Display for RationalFunctionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", crate::mdp::compact_poly(&self.num), self.den)
        }
    }
}

// -- dense polynomial helpers over Q[y] (Laurent values carry a shift) --

fn to_dense(p: &ExpPoly) -> (Vec<Rat>, i64) {
    let min = p.min_exp().unwrap_or(0);
    let max = p.max_exp().unwrap_or(0);
    let mut out = vec![Rat::zero(); (max - min + 1) as usize];
    for (k, c) in &p.terms {
        out[(k - min) as usize] = c.clone();
    }
    (out, min)
}

fn from_dense(q: u64, coeffs: &[Rat], shift: i64) -> ExpPoly {
    let mut out = ExpPoly::zero(q);
    for (i, c) in coeffs.iter().enumerate() {
        if !c.is_zero() {
            out = out.add(&ExpPoly::monomial(q, c.clone(), i as i64 + shift));
        }
    }
    out
}

fn poly_deg(p: &[Rat]) -> usize {
    p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

fn poly_is_zero(p: &[Rat]) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_rem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let db = poly_deg(b);
    let lead = b[db].clone();
    let mut r = a.to_vec();
    while !poly_is_zero(&r) && poly_deg(&r) >= db {
        let dr = poly_deg(&r);
        let f = &r[dr] / &lead;
        for i in 0..=db {
            let idx = dr - db + i;
            let delta = &f * &b[i];
            r[idx] -= delta;
        }
        r[dr] = Rat::zero();
        if dr == 0 {
            break;
        }
    }
    r
}

fn poly_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    if poly_is_zero(&x) {
        return y;
    }
    while !poly_is_zero(&y) {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    // monic
    let lead = x[poly_deg(&x)].clone();
    for c in x.iter_mut() {
        *c /= &lead;
    }
    x
}

fn poly_div_exact(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let db = poly_deg(b);
    let lead = b[db].clone();
    let mut r = a.to_vec();
    let mut qout = vec![Rat::zero(); a.len()];
    while !poly_is_zero(&r) && poly_deg(&r) >= db {
        let dr = poly_deg(&r);
        let f = &r[dr] / &lead;
        qout[dr - db] = f.clone();
        for i in 0..=db {
            let idx = dr - db + i;
            let delta = &f * &b[i];
            r[idx] -= delta;
        }
        r[dr] = Rat::zero();
        if dr == 0 {
            break;
        }
    }
    qout
}

/// Certified sign of an `ExpPoly` at y = e^(-1/q). A nonzero polynomial with
/// rational coefficients cannot vanish at the transcendental point, so
/// refinement terminates for well-formed inputs; the term cap guards
/// malformed ones.
pub fn decide_sign(p: &ExpPoly) -> Result<Ordering, SolveError> {
    if p.is_zero() {
        return Ok(Ordering::Equal);
    }
    let mut terms = 32usize;
    while terms <= 4096 {
        let enc = p.eval_enclosure(terms);
        match enc.sign() {
            Some(Ordering::Greater) => return Ok(Ordering::Greater),
            Some(Ordering::Less) => return Ok(Ordering::Less),
            _ => {}
        }
        terms *= 2;
    }
    Err(SolveError::CannotSeparate)
}

/// Certified comparison of two values in Q(y).
pub fn cmp_values(
    a: &RationalFunctionValue,
    b: &RationalFunctionValue,
) -> Result<Ordering, SolveError> {
    // sign(a - b) = sign(a.num b.den - b.num a.den) * sign(a.den) * sign(b.den)
    let diff = a.num.mul(&b.den).sub(&b.num.mul(&a.den));
    let s = decide_sign(&diff)?;
    if s == Ordering::Equal {
        return Ok(Ordering::Equal);
    }
    let sa = decide_sign(&a.den)?;
    let sb = decide_sign(&b.den)?;
    let mut flip = false;
    if sa == Ordering::Less {
        flip = !flip;
    }
    if sb == Ordering::Less {
        flip = !flip;
    }
    Ok(if flip { s.reverse() } else { s })
}

/// A pure memoryless profile: one chosen action index per player state.
pub type Profile = BTreeMap<usize, usize>;

fn player_states(mdp: &Mdp) -> Vec<usize> {
    mdp.states
        .iter()
        .enumerate()
        .filter(|(i, s)| {
            !s.target
                && matches!(s.kind, MdpStateKind::Max | MdpStateKind::Min)
                && !mdp.actions_of(*i).is_empty()
        })
        .map(|(i, _)| i)
        .collect()
}

/// Reachability values of the Markov chain induced by `profile`, by exact
/// linear solving over Q(y). Absorbing non-target components get value 0.
pub fn evaluate_profile(mdp: &Mdp, profile: &Profile) -> Result<Vec<RationalFunctionValue>, SolveError> {
    let n = mdp.states.len();
    let q = mdp.q;

    // successor sets under the profile
    let succs = |i: usize| -> Vec<(usize, ExpPoly)> {
        if mdp.states[i].target {
            return vec![];
        }
        match mdp.states[i].kind {
            MdpStateKind::Max | MdpStateKind::Min => match profile.get(&i) {
                Some(&a) => vec![(mdp.actions[a].successor, ExpPoly::one(q))],
                None => vec![],
            },
            MdpStateKind::Chance => mdp
                .chance
                .get(&i)
                .map(|es| {
                    es.iter()
                        .filter(|e| !e.probability.is_zero())
                        .map(|e| (e.successor, e.probability.clone()))
                        .collect()
                })
                .unwrap_or_default(),
        }
    };

    // states that can reach a target in the induced chain
    let mut can = vec![false; n];
    for (i, s) in mdp.states.iter().enumerate() {
        if s.target {
            can[i] = true;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if !can[i] && succs(i).iter().any(|(t, _)| can[*t]) {
                can[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // unknowns: non-target states that can reach a target
    let unknowns: Vec<usize> =
        (0..n).filter(|&i| can[i] && !mdp.states[i].target).collect();
    let col: BTreeMap<usize, usize> =
        unknowns.iter().enumerate().map(|(c, &i)| (i, c)).collect();
    let m = unknowns.len();

    // (I - P) x = b over Q(y)
    let mut mat: Vec<Vec<RationalFunctionValue>> =
        vec![vec![RationalFunctionValue::zero(q); m + 1]; m];
    for (r, &i) in unknowns.iter().enumerate() {
        mat[r][r] = RationalFunctionValue::one(q);
        for (t, p) in succs(i) {
            if mdp.states[t].target {
                let add = RationalFunctionValue::from_poly(p);
                mat[r][m] = mat[r][m].add(&add);
            } else if let Some(&c) = col.get(&t) {
                let sub = RationalFunctionValue::from_poly(p);
                mat[r][c] = mat[r][c].sub(&sub);
            }
            // successors with value 0 drop out
        }
    }

    // Gaussian elimination with exact fraction arithmetic
    for pivot in 0..m {
        let row = (pivot..m)
            .find(|&r| !mat[r][pivot].is_zero())
            .ok_or(SolveError::Singular)?;
        mat.swap(pivot, row);
        let p = mat[pivot][pivot].clone();
        for c in pivot..=m {
            mat[pivot][c] = mat[pivot][c].div(&p);
        }
        for r in 0..m {
            if r != pivot && !mat[r][pivot].is_zero() {
                let f = mat[r][pivot].clone();
                for c in pivot..=m {
                    let delta = f.mul(&mat[pivot][c]);
                    mat[r][c] = mat[r][c].sub(&delta);
                }
            }
        }
    }

    let mut values = vec![RationalFunctionValue::zero(q); n];
    for (i, s) in mdp.states.iter().enumerate() {
        if s.target {
            values[i] = RationalFunctionValue::one(q);
        }
    }
    for (r, &i) in unknowns.iter().enumerate() {
        values[i] = mat[r][m].canonical();
    }
    Ok(values)
}

/// Shortest-path-to-target initial profile (keeps the induced chain proper
/// wherever the target is reachable at all).
fn attractor_profile(mdp: &Mdp) -> Profile {
    let n = mdp.states.len();
    let mut dist = vec![usize::MAX; n];
    let mut choice: Profile = BTreeMap::new();
    for (i, s) in mdp.states.iter().enumerate() {
        if s.target {
            dist[i] = 0;
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if mdp.states[i].target {
                continue;
            }
            match mdp.states[i].kind {
                MdpStateKind::Max | MdpStateKind::Min => {
                    for a in mdp.actions_of(i) {
                        let t = mdp.actions[a].successor;
                        if dist[t] != usize::MAX && dist[t] + 1 < dist[i] {
                            dist[i] = dist[t] + 1;
                            choice.insert(i, a);
                            changed = true;
                        }
                    }
                }
                MdpStateKind::Chance => {
                    if let Some(es) = mdp.chance.get(&i) {
                        for e in es.iter().filter(|e| !e.probability.is_zero()) {
                            if dist[e.successor] != usize::MAX && dist[e.successor] + 1 < dist[i] {
                                dist[i] = dist[e.successor] + 1;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // states that cannot reach the target still need a fixed action
    for i in player_states(mdp) {
        choice.entry(i).or_insert_with(|| mdp.actions_of(i)[0]);
    }
    choice
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// 1.5 players: Diamond maximizes.
    Max,
    /// 2.5 players: Diamond maximizes, Box minimizes.
    MaxMin,
}

fn profile_bound(mdp: &Mdp) -> usize {
    let mut bound = 1usize;
    for s in player_states(mdp) {
        bound = bound.saturating_mul(mdp.actions_of(s).len().max(1));
    }
    bound.saturating_add(1)
}

/// Improves `who`-states greedily against fixed values; equal-value ties
/// never trigger a switch.
fn improve_player(
    mdp: &Mdp,
    profile: &mut Profile,
    values: &[RationalFunctionValue],
    who: MdpStateKind,
) -> Result<bool, SolveError> {
    let better = |a: Ordering| match who {
        MdpStateKind::Max => a == Ordering::Greater,
        MdpStateKind::Min => a == Ordering::Less,
        MdpStateKind::Chance => unreachable!(),
    };
    let mut switched = false;
    for s in player_states(mdp) {
        if mdp.states[s].kind != who {
            continue;
        }
        let current = profile[&s];
        let mut best = current;
        for a in mdp.actions_of(s) {
            if a == best {
                continue;
            }
            let cmp = cmp_values(&values[mdp.actions[a].successor], &values[mdp.actions[best].successor])?;
            if better(cmp) {
                best = a;
            }
        }
        // only switch on a strict improvement over the current action
        let cmp = cmp_values(&values[mdp.actions[best].successor], &values[mdp.actions[current].successor])?;
        if better(cmp) {
            profile.insert(s, best);
            switched = true;
        }
    }
    Ok(switched)
}

/// Best response of the Min player against a fixed Max profile, by policy
/// iteration.
fn best_response_min(mdp: &Mdp, profile: &mut Profile) -> Result<Vec<RationalFunctionValue>, SolveError> {
    let bound = profile_bound(mdp);
    let mut values = evaluate_profile(mdp, profile)?;
    for _ in 0..bound {
        if !improve_player(mdp, profile, &values, MdpStateKind::Min)? {
            return Ok(values);
        }
        let new_values = evaluate_profile(mdp, profile)?;
        values = new_values;
    }
    Err(SolveError::IterationBound)
}

pub struct Solution {
    pub values: Vec<RationalFunctionValue>,
    pub profile: Profile,
    pub iterations: usize,
}

/// Optimal value and a pure memoryless optimal profile.
///
/// Max mode: policy iteration with exact evaluation and certified strict
/// improvement. MaxMin mode: strategy iteration, re-computing the Min best
/// response after every Max improvement round.
pub fn solve_optimal(mdp: &Mdp, mode: Mode) -> Result<Solution, SolveError> {
    if mode == Mode::Max {
        if let Some(s) = mdp
            .states
            .iter()
            .enumerate()
            .find(|(i, s)| s.kind == MdpStateKind::Min && !mdp.actions_of(*i).is_empty())
        {
            return Err(SolveError::UnexpectedMinState(s.1.name.clone()));
        }
    }
    let mut profile = attractor_profile(mdp);
    let bound = profile_bound(mdp);
    let mut iterations = 0usize;

    match mode {
        Mode::Max => {
            let mut values = evaluate_profile(mdp, &profile)?;
            loop {
                iterations += 1;
                if iterations > bound {
                    return Err(SolveError::IterationBound);
                }
                if !improve_player(mdp, &mut profile, &values, MdpStateKind::Max)? {
                    return Ok(Solution { values, profile, iterations });
                }
                let new_values = evaluate_profile(mdp, &profile)?;
                monotonicity_check(mdp, &values, &new_values)?;
                values = new_values;
            }
        }
        Mode::MaxMin => {
            loop {
                iterations += 1;
                if iterations > bound {
                    return Err(SolveError::IterationBound);
                }
                let values = best_response_min(mdp, &mut profile)?;
                if !improve_player(mdp, &mut profile, &values, MdpStateKind::Max)? {
                    return Ok(Solution { values, profile, iterations });
                }
            }
        }
    }
}

fn monotonicity_check(
    mdp: &Mdp,
    old: &[RationalFunctionValue],
    new: &[RationalFunctionValue],
) -> Result<(), SolveError> {
    for (i, s) in mdp.states.iter().enumerate() {
        if s.kind == MdpStateKind::Max
            && cmp_values(&new[i], &old[i])? == Ordering::Less {
                return Err(SolveError::NonMonotone(s.name.clone()));
            }
    }
    Ok(())
}

/// Exhaustive enumeration over all pure profiles (small instances only):
/// max over Diamond choices of min over Box choices of the initial value.
pub fn solve_exhaustive(mdp: &Mdp) -> Result<Solution, SolveError> {
    let states = player_states(mdp);
    let max_states: Vec<usize> =
        states.iter().copied().filter(|&s| mdp.states[s].kind == MdpStateKind::Max).collect();
    let min_states: Vec<usize> =
        states.iter().copied().filter(|&s| mdp.states[s].kind == MdpStateKind::Min).collect();

    let assignments = |sts: &[usize]| -> Vec<Profile> {
        let mut out: Vec<Profile> = vec![BTreeMap::new()];
        for &s in sts {
            let mut next = vec![];
            for base in &out {
                for a in mdp.actions_of(s) {
                    let mut p = base.clone();
                    p.insert(s, a);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    };

    let mut best: Option<Solution> = None;
    for max_p in assignments(&max_states) {
        // adversarial Box: minimize the initial value
        let mut worst: Option<Solution> = None;
        for min_p in assignments(&min_states) {
            let mut profile = max_p.clone();
            profile.extend(min_p);
            let values = evaluate_profile(mdp, &profile)?;
            let replace = match &worst {
                None => true,
                Some(w) => {
                    cmp_values(&values[mdp.initial], &w.values[mdp.initial])? == Ordering::Less
                }
            };
            if replace {
                worst = Some(Solution { values, profile, iterations: 0 });
            }
        }
        let cand = worst.expect("at least one profile");
        let replace = match &best {
            None => true,
            Some(b) => {
                cmp_values(&cand.values[mdp.initial], &b.values[mdp.initial])? == Ordering::Greater
            }
        };
        if replace {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one profile"))
}

/// Fast floating-point preview by value iteration (never used for verdicts).
pub fn value_iteration_preview(mdp: &Mdp, mode: Mode) -> Vec<f64> {
    let n = mdp.states.len();
    let mut v = vec![0.0f64; n];
    for (i, s) in mdp.states.iter().enumerate() {
        if s.target {
            v[i] = 1.0;
        }
    }
    for _ in 0..100_000 {
        let mut next = v.clone();
        let mut delta = 0.0f64;
        for (i, s) in mdp.states.iter().enumerate() {
            if s.target {
                continue;
            }
            let nv = match s.kind {
                MdpStateKind::Max | MdpStateKind::Min => {
                    let acts = mdp.actions_of(i);
                    if acts.is_empty() {
                        0.0
                    } else {
                        let vals = acts.iter().map(|&a| v[mdp.actions[a].successor]);
                        if s.kind == MdpStateKind::Max || mode == Mode::Max {
                            vals.fold(f64::NEG_INFINITY, f64::max)
                        } else {
                            vals.fold(f64::INFINITY, f64::min)
                        }
                    }
                }
                MdpStateKind::Chance => mdp
                    .chance
                    .get(&i)
                    .map(|es| {
                        es.iter().map(|e| e.probability.eval_f64() * v[e.successor]).sum()
                    })
                    .unwrap_or(0.0),
            };
            delta = delta.max((nv - v[i]).abs());
            next[i] = nv;
        }
        v = next;
        if delta < 1e-13 {
            break;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

#[derive(Debug, Clone)]
pub struct ThresholdQuery {
    pub rel: ThresholdRel,
    pub p: Rat,
}

impl ThresholdQuery {
    /// Parses forms like ">= 1/2", "< 0.3", "= 1".
    pub fn parse(s: &str) -> Result<Self, SolveError> {
        let s = s.trim();
        let (rel, rest) = if let Some(r) = s.strip_prefix(">=") {
            (ThresholdRel::Ge, r)
        } else if let Some(r) = s.strip_prefix("<=") {
            (ThresholdRel::Le, r)
        } else if let Some(r) = s.strip_prefix('>') {
            (ThresholdRel::Gt, r)
        } else if let Some(r) = s.strip_prefix('<') {
            (ThresholdRel::Lt, r)
        } else if let Some(r) = s.strip_prefix('=') {
            (ThresholdRel::Eq, r)
        } else {
            return Err(SolveError::ThresholdSyntax(format!("no relation in `{s}`")));
        };
        let p = crate::rat::parse_rat(rest).map_err(SolveError::ThresholdSyntax)?;
        if p.is_negative() || p > Rat::one() {
            return Err(SolveError::ThresholdSyntax("threshold must lie in [0,1]".into()));
        }
        Ok(ThresholdQuery { rel, p })
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdDecision {
    pub verdict: bool,
    /// Ordering of the value against p.
    pub ordering: Ordering,
    pub certificate: String,
}

/// Compares R(y) with the rational threshold p: the sign of N - p D is
/// certified by enclosure refinement unless it is identically zero.
pub fn decide_threshold(
    value: &RationalFunctionValue,
    query: &ThresholdQuery,
) -> Result<ThresholdDecision, SolveError> {
    let diff = value.num.sub(&value.den.scale(&query.p));
    let (ordering, certificate) = if diff.is_zero() {
        (Ordering::Equal, "N - p*D is identically zero".to_string())
    } else {
        let s = decide_sign(&diff)?;
        let sd = decide_sign(&value.den)?;
        let ord = if sd == Ordering::Less { s.reverse() } else { s };
        let enc = diff.eval_to_digits(12);
        (
            ord,
            format!(
                "sign of N - p*D certified by the enclosure [{}, {}]",
                crate::rat::rat_to_decimal(&enc.lo, 12),
                crate::rat::rat_to_decimal(&enc.hi, 12)
            ),
        )
    };
    let verdict = match query.rel {
        ThresholdRel::Lt => ordering == Ordering::Less,
        ThresholdRel::Le => ordering != Ordering::Greater,
        ThresholdRel::Eq => ordering == Ordering::Equal,
        ThresholdRel::Ge => ordering != Ordering::Less,
        ThresholdRel::Gt => ordering == Ordering::Greater,
    };
    Ok(ThresholdDecision { verdict, ordering, certificate })
}
