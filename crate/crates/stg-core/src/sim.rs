//! Run semantics: single transitions, strategies, Monte Carlo sampling and
//! reachability estimation with Wilson confidence intervals.

use crate::interval::{time_to_f64, Interval, TimeOps, Upper};
use crate::model::{
    enabled_interval, enabled_set, DistributionSpec, EdgeId, LocationId, Owner,
    State, Stg,
};
use crate::rat::{rat_to_f64, Rat};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("illegal move: delay {delay} with edge `{edge}` is not enabled from `{location}`")]
    IllegalMove { location: String, edge: String, delay: f64 },
    #[error("uniform distribution over unbounded enabled set at `{0}`")]
    UniformUnbounded(String),
    #[error("uniform distribution over an empty or ambiguous zero-measure set at `{0}`")]
    DegenerateUniform(String),
    #[error("exponential distribution with restricted enabled set at `{0}`")]
    ExponentialRestricted(String),
    #[error("stochastic location `{0}` has no delay distribution")]
    MissingDistribution(String),
    #[error("strategy exhausted at `{0}`")]
    StrategyExhausted(String),
    #[error("no strategy provided for player {0}")]
    MissingStrategy(&'static str),
}

/// A player decision: an explicit delay, or "wait until `clock` reads exactly
/// `value`". The anchored form keeps equality guards exact under f64.
#[derive(Debug, Clone)]
pub enum PlayerDelay<T> {
    Delay(T),
    DelayToValue { clock: crate::model::Clock, value: u32 },
}

pub type Move<T> = (PlayerDelay<T>, EdgeId);

/// Deterministic player strategy. Stateful per run: `reset` is called before
/// each sampled run, `decide` once per decision point of the owner.
pub trait Strategy<T: TimeOps + 'static>: Send + Sync {
    fn reset(&mut self);
    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError>;
    /// Fresh instance for a parallel worker.
    fn clone_box(&self) -> Box<dyn Strategy<T>>;
}

/// Strategy that is never consulted; used for games without that player.
pub struct NoStrategy;

impl<T: TimeOps + 'static> Strategy<T> for NoStrategy {
    fn reset(&mut self) {}
    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError> {
        Err(SimError::MissingStrategy(
            match stg.location(state.location).owner {
                Owner::Box => "box",
                _ => "diamond",
            },
        ))
    }
    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(NoStrategy)
    }
}

/// Positional rule: fixed delay and edge per location.
#[derive(Debug, Clone)]
pub struct PositionalStrategy {
    pub rules: Vec<(LocationId, Rat, EdgeId)>,
}

impl<T: TimeOps + 'static> Strategy<T> for PositionalStrategy {
    fn reset(&mut self) {}
    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError> {
        let rule = self.rules.iter().find(|(l, _, _)| *l == state.location);
        match rule {
            Some((_, delay, edge)) => Ok((PlayerDelay::Delay(rat_to_time::<T>(delay)), *edge)),
            None => Err(SimError::StrategyExhausted(stg.location(state.location).name.clone())),
        }
    }
    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(self.clone())
    }
}

/// Schedule keyed by decision count: the k-th decision of this player takes
/// the k-th entry.
#[derive(Debug, Clone)]
pub struct ScheduleStrategy {
    pub moves: Vec<(Rat, EdgeId)>,
    cursor: usize,
}

impl ScheduleStrategy {
    pub fn new(moves: Vec<(Rat, EdgeId)>) -> Self {
        ScheduleStrategy { moves, cursor: 0 }
    }
}

impl<T: TimeOps + 'static> Strategy<T> for ScheduleStrategy {
    fn reset(&mut self) {
        self.cursor = 0;
    }
    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError> {
        let m = self.moves.get(self.cursor).ok_or_else(|| {
            SimError::StrategyExhausted(stg.location(state.location).name.clone())
        })?;
        self.cursor += 1;
        Ok((PlayerDelay::Delay(rat_to_time::<T>(&m.0)), m.1))
    }
    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(self.clone())
    }
}

pub fn rat_to_time<T: TimeOps + 'static>(r: &Rat) -> T {
    use std::any::Any;
    let any: Box<dyn Any> = if std::any::TypeId::of::<T>() == std::any::TypeId::of::<f64>() {
        Box::new(rat_to_f64(r))
    } else {
        Box::new(r.clone())
    };
    *any.downcast::<T>().expect("time type is f64 or Rat")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepErrorKind {
    IllegalMove,
    TargetInvariantViolated,
}

/// Executes one transition. The delay must lie in the enabled interval of the
/// edge; resets are applied after advancing.
pub fn step<T: TimeOps + 'static>(
    stg: &Stg,
    s: &State<T>,
    delay: &PlayerDelay<T>,
    edge: EdgeId,
) -> Result<(State<T>, T), SimError> {
    let e = stg.edge(edge);
    let concrete: T = match delay {
        PlayerDelay::Delay(t) => t.clone(),
        PlayerDelay::DelayToValue { clock, value } => {
            let cur = &s.valuation[clock.0];
            let target = T::from_u32(*value);
            if target >= *cur {
                target - cur.clone()
            } else {
                T::zero()
            }
        }
    };
    let iv = enabled_interval(stg, s, edge);
    if !iv.contains(&concrete) {
        return Err(SimError::IllegalMove {
            location: stg.location(s.location).name.clone(),
            edge: e.name.clone(),
            delay: time_to_f64(&concrete),
        });
    }
    let mut vals = s.advance(&concrete);
    // Pin anchored clocks to their exact landmark (defends equality guards
    // against f64 rounding).
    if let PlayerDelay::DelayToValue { clock, value } = delay {
        vals[clock.0] = T::from_u32(*value);
    }
    for c in &e.resets {
        vals[c.0] = T::zero();
    }
    Ok((State::new(e.target, vals), concrete))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Target entered; elapsed total time at entry.
    TargetHit(f64),
    /// Step limit reached without target.
    LimitReached(f64),
    /// Blocked state (player or stochastic with empty enabled set).
    Blocked(f64),
    /// Entered a location from which no target is graph-reachable; the run is
    /// cut short and counted as a non-hit.
    TargetUnreachable(f64),
    /// Time bound exceeded before reaching the target.
    TimeBoundExceeded(f64),
}

impl Outcome {
    pub fn is_hit(&self) -> bool {
        matches!(self, Outcome::TargetHit(_))
    }
    pub fn elapsed(&self) -> f64 {
        match self {
            Outcome::TargetHit(t)
            | Outcome::LimitReached(t)
            | Outcome::Blocked(t)
            | Outcome::TargetUnreachable(t)
            | Outcome::TimeBoundExceeded(t) => *t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunStep {
    pub delay: f64,
    pub edge: EdgeId,
    pub location: LocationId,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub origin: LocationId,
    pub steps: Vec<RunStep>,
    pub total_elapsed: f64,
    pub outcome: Outcome,
    /// measure-zero boundary resamples that occurred (diagnostics)
    pub resamples: u64,
}

#[derive(Debug, Clone)]
pub struct SimLimits {
    pub max_steps: usize,
    pub time_bound: Option<f64>,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits { max_steps: 10_000, time_bound: None }
    }
}

/// Locations from which some target is reachable in the edge graph
/// (guard-insensitive over-approximation; used to cut dead runs short).
pub fn targets_reachable_from(stg: &Stg) -> Vec<bool> {
    let mut can = vec![false; stg.locations.len()];
    for t in &stg.targets {
        can[t.0] = true;
    }
    loop {
        let mut changed = false;
        for e in &stg.edges {
            if can[e.target.0] && !can[e.source.0] {
                can[e.source.0] = true;
                changed = true;
            }
        }
        if !changed {
            return can;
        }
    }
}

fn sample_uniform(set: &crate::interval::IntervalSet<f64>, rng: &mut ChaCha8Rng) -> f64 {
    let total: f64 = set
        .parts
        .iter()
        .map(|iv| iv.length().unwrap_or(0.0))
        .sum();
    let mut u: f64 = rng.gen::<f64>() * total;
    for iv in &set.parts {
        let len = iv.length().unwrap_or(0.0);
        if u <= len {
            return iv.lo + u;
        }
        u -= len;
    }
    set.parts.last().map(|iv| iv.lo).unwrap_or(0.0)
}

fn sample_exponential(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    // inverse transform; guard against u == 0
    let u: f64 = rng.gen::<f64>();
    let u = if u <= f64::MIN_POSITIVE { f64::MIN_POSITIVE } else { u };
    -u.ln() / rate
}

fn pick_weighted(choices: &[(EdgeId, u64)], rng: &mut ChaCha8Rng) -> EdgeId {
    let total: u64 = choices.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen_range(0..total);
    for (e, w) in choices {
        if x < *w {
            return *e;
        }
        x -= w;
    }
    choices.last().unwrap().0
}

/// Samples one run from `from` under the given strategy profile.
///
/// At stochastic locations the delay is drawn from the location's
/// distribution (uniform over I(s), which must then be bounded, or
/// exponential, which requires I(s) = R+ or a single forced point) and the
/// edge from the weight shares at s+t. At player locations the owning
/// strategy is consulted. The first entry into a target location ends the run.
pub fn sample_run(
    stg: &Stg,
    from: &State<f64>,
    diamond: &mut dyn Strategy<f64>,
    boxp: &mut dyn Strategy<f64>,
    limits: &SimLimits,
    can_reach: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<Run, SimError> {
    diamond.reset();
    boxp.reset();
    let mut state = from.clone();
    let mut steps = vec![];
    let mut elapsed = 0.0f64;
    let mut resamples = 0u64;

    let outcome = loop {
        if stg.is_target(state.location) {
            break Outcome::TargetHit(elapsed);
        }
        if let Some(bound) = limits.time_bound {
            if elapsed > bound {
                break Outcome::TimeBoundExceeded(elapsed);
            }
        }
        if !can_reach[state.location.0] {
            break Outcome::TargetUnreachable(elapsed);
        }
        if steps.len() >= limits.max_steps {
            break Outcome::LimitReached(elapsed);
        }
        let loc = stg.location(state.location);
        let (mv, edge) = match loc.owner {
            Owner::Diamond => {
                let (set, _) = enabled_set(stg, &state);
                if set.is_empty() {
                    break Outcome::Blocked(elapsed);
                }
                diamond.decide(stg, &state)?
            }
            Owner::Box => {
                let (set, _) = enabled_set(stg, &state);
                if set.is_empty() {
                    break Outcome::Blocked(elapsed);
                }
                boxp.decide(stg, &state)?
            }
            Owner::Stochastic => {
                let (set, per_edge) = enabled_set(stg, &state);
                if set.is_empty() {
                    break Outcome::Blocked(elapsed);
                }
                let dist = stg
                    .distribution(state.location)
                    .ok_or_else(|| SimError::MissingDistribution(loc.name.clone()))?;
                let t = loop {
                    let t = match dist {
                        DistributionSpec::UniformOverEnabled => {
                            if !set.is_bounded() {
                                return Err(SimError::UniformUnbounded(loc.name.clone()));
                            }
                            let total = set.total_length().unwrap_or(0.0);
                            if total <= 0.0 {
                                match set.as_singleton() {
                                    Some(p) => p,
                                    None => {
                                        return Err(SimError::DegenerateUniform(loc.name.clone()))
                                    }
                                }
                            } else {
                                sample_uniform(&set, rng)
                            }
                        }
                        DistributionSpec::Exponential { rate } => {
                            // a.e. coverage suffices: boundary gaps are
                            // measure zero and handled by the resample loop
                            if set.covers_nonneg_reals_ae() {
                                sample_exponential(rat_to_f64(rate), rng)
                            } else if let Some(p) = set.as_singleton() {
                                p
                            } else {
                                return Err(SimError::ExponentialRestricted(loc.name.clone()));
                            }
                        }
                    };
                    let enabled: Vec<(EdgeId, u64)> = per_edge
                        .iter()
                        .filter(|(_, iv)| iv.contains(&t))
                        .map(|(id, _)| (*id, stg.edge(*id).weight))
                        .collect();
                    if enabled.is_empty() {
                        // measure-zero boundary event under both densities
                        resamples += 1;
                        if resamples > 1000 {
                            return Err(SimError::DegenerateUniform(loc.name.clone()));
                        }
                        continue;
                    }
                    break t;
                };
                let enabled: Vec<(EdgeId, u64)> = per_edge
                    .iter()
                    .filter(|(_, iv)| iv.contains(&t))
                    .map(|(id, _)| (*id, stg.edge(*id).weight))
                    .collect();
                (PlayerDelay::Delay(t), pick_weighted(&enabled, rng))
            }
        };
        let (next, dt) = step(stg, &state, &mv, edge)?;
        elapsed += dt;
        if let Some(bound) = limits.time_bound {
            // a target hit only counts within the bound
            if elapsed > bound && stg.is_target(next.location) {
                break Outcome::TimeBoundExceeded(elapsed);
            }
        }
        steps.push(RunStep { delay: dt, edge, location: next.location });
        state = next;
    };

    Ok(Run { origin: from.location, steps, total_elapsed: outcome.elapsed(), outcome, resamples })
}

/// Point estimate with a two-sided Wilson score interval.
#[derive(Debug, Clone)]
pub struct ReachEstimate {
    pub hits: u64,
    pub samples: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub seed: u64,
}

/// Inverse standard normal CDF (Acklam's rational approximation, |eps|<1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let plow = 0.02425;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

pub fn wilson_interval(hits: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(0.5 + confidence / 2.0);
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = p + z2 / (2.0 * n_f);
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if hits == 0 { 0.0 } else { ((centre - half) / denom).max(0.0) };
    let hi = if hits == n { 1.0 } else { ((centre + half) / denom).min(1.0) };
    (lo, hi)
}

pub struct EstimateOptions {
    pub samples: u64,
    pub confidence: f64,
    pub seed: u64,
    pub limits: SimLimits,
}

/// Estimates the reachability probability from `from` by sampling.
///
/// Runs fan out across the rayon pool; worker `i` uses an RNG stream derived
/// from `(seed, i)`, so results are bit-identical for any worker count.
pub fn estimate_reach(
    stg: &Stg,
    from: &State<f64>,
    diamond: &dyn Strategy<f64>,
    boxp: &dyn Strategy<f64>,
    opts: &EstimateOptions,
) -> Result<ReachEstimate, SimError> {
    let can_reach = targets_reachable_from(stg);
    let chunk = 4096u64;
    let chunks: Vec<u64> = (0..opts.samples.div_ceil(chunk)).collect();
    let hits: Result<Vec<u64>, SimError> = chunks
        .par_iter()
        .map(|ci| {
            let mut d = diamond.clone_box();
            let mut b = boxp.clone_box();
            let mut local_hits = 0u64;
            let lo = ci * chunk;
            let hi = (lo + chunk).min(opts.samples);
            for i in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(i);
                let run =
                    sample_run(stg, from, d.as_mut(), b.as_mut(), &opts.limits, &can_reach, &mut rng)?;
                if run.outcome.is_hit() {
                    local_hits += 1;
                }
            }
            Ok(local_hits)
        })
        .collect();
    let hits: u64 = hits?.iter().sum();
    let point = hits as f64 / opts.samples.max(1) as f64;
    let (ci_low, ci_high) = wilson_interval(hits, opts.samples, opts.confidence);
    Ok(ReachEstimate {
        hits,
        samples: opts.samples,
        point,
        ci_low,
        ci_high,
        confidence: opts.confidence,
        seed: opts.seed,
    })
}

/// Batch of runs (for time-bound audits and diagnostics); same determinism
/// contract as `estimate_reach`.
pub fn sample_many(
    stg: &Stg,
    from: &State<f64>,
    diamond: &dyn Strategy<f64>,
    boxp: &dyn Strategy<f64>,
    opts: &EstimateOptions,
) -> Result<Vec<Run>, SimError> {
    let can_reach = targets_reachable_from(stg);
    (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let mut d = diamond.clone_box();
            let mut b = boxp.clone_box();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i);
            sample_run(stg, from, d.as_mut(), b.as_mut(), &opts.limits, &can_reach, &mut rng)
        })
        .collect()
}

/// Exact deterministic replay: walks a prescribed sequence of moves with
/// rational arithmetic, asserting each transition is legal. Stochastic steps
/// must be scripted too (branch choice plus delay). Used by invariant tests.
pub fn replay_exact(
    stg: &Stg,
    from: &State<Rat>,
    moves: &[(PlayerDelay<Rat>, EdgeId)],
) -> Result<Vec<State<Rat>>, SimError> {
    let mut out = vec![from.clone()];
    let mut cur = from.clone();
    for (d, e) in moves {
        let (next, _) = step(stg, &cur, d, *e)?;
        out.push(next.clone());
        cur = next;
    }
    Ok(out)
}

/// Convenience: initial state of the model in f64 coordinates.
pub fn initial_state_f64(stg: &Stg) -> State<f64> {
    State::new(stg.initial_location, stg.initial_valuation.iter().map(rat_to_f64).collect())
}

pub fn initial_state_exact(stg: &Stg) -> State<Rat> {
    State::new(stg.initial_location, stg.initial_valuation.clone())
}

/// Positional strategies that pick, at every player location, the first
/// enabled edge with delay 0 if possible, else the earliest enabling delay.
/// Used as a harmless default for models whose player choices are forced.
pub struct EagerStrategy;

impl Strategy<f64> for EagerStrategy {
    fn reset(&mut self) {}
    fn decide(&mut self, stg: &Stg, state: &State<f64>) -> Result<Move<f64>, SimError> {
        let (_, per_edge) = enabled_set(stg, state);
        let mut best: Option<(f64, EdgeId, bool)> = None;
        for (id, iv) in &per_edge {
            if iv.is_empty() {
                continue;
            }
            let (lo, closed) = (iv.lo, iv.lo_closed);
            let cand = if closed { lo } else { lo + boundary_nudge(iv) };
            if best.is_none_or(|(b, _, _)| cand < b) {
                best = Some((cand, *id, closed));
            }
        }
        match best {
            Some((d, e, _)) => Ok((PlayerDelay::Delay(d), e)),
            None => Err(SimError::StrategyExhausted(stg.location(state.location).name.clone())),
        }
    }
    fn clone_box(&self) -> Box<dyn Strategy<f64>> {
        Box::new(EagerStrategy)
    }
}

fn boundary_nudge(iv: &Interval<f64>) -> f64 {
    match &iv.hi {
        Upper::Finite(h) => (h - iv.lo) / 2.0,
        Upper::Infinite => 0.5,
    }
}

/// Set of locations that are graph-reachable from the initial location.
pub fn reachable_locations(stg: &Stg) -> BTreeSet<LocationId> {
    let mut seen = BTreeSet::from([stg.initial_location]);
    let mut stack = vec![stg.initial_location];
    while let Some(l) = stack.pop() {
        for (_, e) in stg.edges_from(l) {
            if seen.insert(e.target) {
                stack.push(e.target);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_model;
    use crate::rat::{rat, rat_int};

    fn sec2_model() -> Stg {
        parse_model(
            r#"{
            "clocks": ["x"],
            "locations": [
                {"name": "A", "owner": "stochastic", "invariant": "x <= 1"},
                {"name": "B", "owner": "stochastic", "invariant": "x <= 2"},
                {"name": "D", "owner": "stochastic"}
            ],
            "edges": [
                {"id": "e1", "source": "A", "guard": "x <= 1", "resets": ["x"], "target": "B"},
                {"id": "e3", "source": "A", "guard": "x <= 1", "target": "A"},
                {"id": "e2", "source": "B", "guard": "x >= 1", "target": "D"},
                {"id": "e4", "source": "B", "guard": "x <= 2", "target": "A"}
            ],
            "distributions": {"A": {"kind": "uniform"}, "B": {"kind": "uniform"}},
            "initial": {"location": "A", "valuation": {"x": 0}},
            "targets": ["D"]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn step_applies_resets_and_additivity() {
        let m = sec2_model();
        let s = initial_state_exact(&m);
        let e1 = m.edge_by_name("e1").unwrap();
        let e3 = m.edge_by_name("e3").unwrap();
        let (with_reset, _) =
            step(&m, &s, &PlayerDelay::Delay(rat(2, 5)), e1).unwrap();
        assert_eq!(with_reset.valuation[0], rat_int(0));
        let (no_reset, _) = step(&m, &s, &PlayerDelay::Delay(rat(2, 5)), e3).unwrap();
        assert_eq!(no_reset.valuation[0], rat(2, 5));
    }

    #[test]
    fn step_rejects_illegal_delay() {
        let m = sec2_model();
        let s = initial_state_exact(&m);
        let e1 = m.edge_by_name("e1").unwrap();
        let r = step(&m, &s, &PlayerDelay::Delay(rat(3, 2)), e1);
        assert!(matches!(r, Err(SimError::IllegalMove { .. })));
    }

    #[test]
    fn sec2_example_estimate_near_one_eighth() {
        // The probability that a run starts with exactly e1 e2 is 1/8.
        let m = sec2_model();
        let opts = EstimateOptions {
            samples: 60_000,
            confidence: 0.99,
            seed: 7,
            limits: SimLimits::default(),
        };
        let from = initial_state_f64(&m);
        // count runs whose first two edges are exactly e1 e2
        let runs = sample_many(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
        let e1 = m.edge_by_name("e1").unwrap();
        let e2 = m.edge_by_name("e2").unwrap();
        let hits = runs
            .iter()
            .filter(|r| {
                r.steps.len() >= 2 && r.steps[0].edge == e1 && r.steps[1].edge == e2
            })
            .count() as f64;
        let p = hits / runs.len() as f64;
        assert!((p - 0.125).abs() < 0.005, "estimate {p} too far from 1/8");
    }

    #[test]
    fn estimator_is_deterministic() {
        let m = sec2_model();
        let opts = EstimateOptions {
            samples: 5_000,
            confidence: 0.95,
            seed: 42,
            limits: SimLimits::default(),
        };
        let from = initial_state_f64(&m);
        let a = estimate_reach(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
        let b = estimate_reach(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
        assert_eq!(a.hits, b.hits);
        assert!(a.ci_low <= a.point && a.point <= a.ci_high);
    }

    #[test]
    fn immediate_target_hits_every_sample() {
        let mut m = sec2_model();
        m.targets = BTreeSet::from([m.initial_location]);
        let opts = EstimateOptions {
            samples: 100,
            confidence: 0.99,
            seed: 1,
            limits: SimLimits::default(),
        };
        let from = initial_state_f64(&m);
        let est = estimate_reach(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
        assert_eq!(est.hits, 100);
    }

    #[test]
    fn normal_quantile_sanity() {
        assert!((normal_quantile(0.975) - 1.959964).abs() < 1e-4);
        assert!((normal_quantile(0.995) - 2.575829).abs() < 1e-4);
        assert!((normal_quantile(0.5)).abs() < 1e-9);
    }
}
