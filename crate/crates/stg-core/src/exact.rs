//! Exact symbolic path probability for resolved paths: the nested integral of
//! the run measure, evaluated innermost-out with exact arithmetic.
//!
//! Supported stochastic steps: uniform distributions entered at a determined
//! valuation (reset-separated or initial), exponential steps with I(s) = R+,
//! and forced zero-measure (Dirac) sojourns. Weight shares are integrated
//! piecewise, splitting at the integer breakpoints where the enabled edge set
//! changes.

use crate::exppoly::ExpPoly;
use crate::interval::{Interval, Upper};
use crate::model::{
    enabled_interval, enabled_set, DistributionSpec, EdgeId, Owner, State, Stg,
};
use crate::rat::{rat_int, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("edge `{0}` does not start at the current location")]
    WrongSource(String),
    #[error("player step at `{0}` needs an explicit delay")]
    MissingDelay(String),
    #[error("delay {1} is not enabled for edge `{0}`")]
    DelayNotEnabled(String, Rat),
    #[error("edge `{0}` is never enabled from the current state")]
    EdgeNotEnabled(String),
    #[error("stochastic location `{0}` has no distribution")]
    MissingDistribution(String),
    #[error("uniform distribution over an unbounded enabled set at `{0}`")]
    UniformUnbounded(String),
    #[error("exponential location `{0}` with restricted enabled set")]
    ExponentialRestricted(String),
    #[error(
        "non-final {1} step at `{0}` leaves the successor valuation undetermined; \
         resolved paths need reset-separated sojourns here (exponential chains through \
         intermediate regions are computed exactly by the abstraction pipeline instead)"
    )]
    UndeterminedContinuation(String, &'static str),
    #[error("zero-measure enabled set at `{0}` is not a single point")]
    AmbiguousDirac(String),
}

/// One resolved path step: the edge, plus the chosen delay when the source is
/// a player location.
#[derive(Debug, Clone)]
pub struct PathStep {
    pub edge: EdgeId,
    pub player_delay: Option<Rat>,
}

/// Exact sum of c_i * e^(-r_i) with rational r_i; folded into an `ExpPoly`
/// once the common denominator of the exponents is known.
#[derive(Debug, Clone)]
struct ExpSum {
    terms: Vec<(Rat, Rat)>, // (exponent r, coefficient)
}

impl ExpSum {
    fn constant(c: Rat) -> Self {
        ExpSum { terms: vec![(Rat::zero(), c)] }
    }

    fn one() -> Self {
        Self::constant(Rat::one())
    }

    fn add_term(&mut self, exponent: Rat, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        if let Some((_, c)) = self.terms.iter_mut().find(|(r, _)| *r == exponent) {
            *c += coeff;
        } else {
            self.terms.push((exponent, coeff));
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = ExpSum { terms: vec![] };
        for (r1, c1) in &self.terms {
            for (r2, c2) in &other.terms {
                out.add_term(r1 + r2, c1 * c2);
            }
        }
        out
    }

    fn scale(&self, c: &Rat) -> Self {
        ExpSum { terms: self.terms.iter().map(|(r, k)| (r.clone(), k * c)).collect() }
    }

    fn into_exppoly(self) -> ExpPoly {
        // q = lcm of the denominators of all exponents (1 when none).
        let mut q = BigInt::one();
        for (r, c) in &self.terms {
            if !c.is_zero() {
                q = q.lcm(r.denom());
            }
        }
        let q_u: u64 = (&q).try_into().unwrap_or(1);
        let mut out = ExpPoly::zero(q_u);
        for (r, c) in &self.terms {
            // e^(-r) = y^(r*q)
            let k = (r * Rat::from_integer(q.clone())).to_integer();
            let k: i64 = (&k).try_into().expect("exponent fits i64");
            out = out.add(&ExpPoly::monomial(q_u, c.clone(), k));
        }
        out
    }
}

/// Splits `window` at the delays where any edge of the current location flips
/// enabledness, and returns (piece, weight share of `edge`) for the pieces of
/// positive length.
fn choice_pieces(
    stg: &Stg,
    s: &State<Rat>,
    edge: EdgeId,
    window: &Interval<Rat>,
) -> Vec<(Interval<Rat>, Rat)> {
    let mut cuts: Vec<Rat> = vec![window.lo.clone()];
    if let Upper::Finite(h) = &window.hi {
        cuts.push(h.clone());
    }
    for (_, e) in stg.edges_from(s.location) {
        for a in &e.guard.atoms {
            let t = crate::rat::rat_u32(a.bound) - &s.valuation[a.clock.0];
            if t.is_positive() && window.contains(&t) {
                cuts.push(t);
            }
        }
    }
    cuts.sort();
    cuts.dedup();

    let mut pieces = vec![];
    let upper_open = matches!(window.hi, Upper::Infinite);
    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a >= b {
            continue;
        }
        let mid = (a + b) / rat_int(2);
        let share = share_at(stg, s, edge, &mid);
        pieces.push((Interval::closed(a.clone(), b.clone()), share));
    }
    if upper_open {
        let last = cuts.last().unwrap().clone();
        let probe = &last + rat_int(1);
        let share = share_at(stg, s, edge, &probe);
        pieces.push((
            Interval::unbounded_from(last, false),
            share,
        ));
    }
    pieces.retain(|(_, share)| !share.is_zero());
    pieces
}

fn share_at(stg: &Stg, s: &State<Rat>, edge: EdgeId, t: &Rat) -> Rat {
    let mut total = 0u64;
    let mut mine = 0u64;
    for (id, e) in stg.edges_from(s.location) {
        if enabled_interval(stg, s, id).contains(t) {
            total += e.weight;
            if id == edge {
                mine = e.weight;
            }
        }
    }
    if total == 0 {
        Rat::zero()
    } else {
        rat_int(mine as i64) / rat_int(total as i64)
    }
}

/// Exact probability of the symbolic path `steps` from `start`.
///
/// Rational for uniform-only paths; an `ExpPoly` in y = e^(-1/q) when
/// exponential sojourns occur (q = lcm of the exponent denominators).
pub fn exact_path_probability(
    stg: &Stg,
    start: &State<Rat>,
    steps: &[PathStep],
) -> Result<ExpPoly, ExactError> {
    let mut factor = ExpSum::one();
    let mut state = start.clone();

    for (idx, st) in steps.iter().enumerate() {
        let e = stg.edge(st.edge);
        let final_step = idx + 1 == steps.len();
        if e.source != state.location {
            return Err(ExactError::WrongSource(e.name.clone()));
        }
        let loc = stg.location(state.location);
        let lname = loc.name.clone();
        match loc.owner {
            Owner::Box | Owner::Diamond => {
                let d = st
                    .player_delay
                    .clone()
                    .ok_or_else(|| ExactError::MissingDelay(lname.clone()))?;
                let iv = enabled_interval(stg, &state, st.edge);
                if !iv.contains(&d) {
                    return Err(ExactError::DelayNotEnabled(e.name.clone(), d));
                }
                state = apply(stg, &state, &d, st.edge);
            }
            Owner::Stochastic => {
                let dist = stg
                    .distribution(state.location)
                    .ok_or_else(|| ExactError::MissingDistribution(lname.clone()))?;
                let (set, _) = enabled_set(stg, &state);
                let window = enabled_interval(stg, &state, st.edge);
                if window.is_empty() {
                    return Err(ExactError::EdgeNotEnabled(e.name.clone()));
                }
                let zero_measure =
                    set.total_length().map(|l| l.is_zero()).unwrap_or(false);
                if zero_measure {
                    // Dirac sojourn at the single possible delay.
                    let t = set
                        .as_singleton()
                        .ok_or_else(|| ExactError::AmbiguousDirac(lname.clone()))?;
                    if !window.contains(&t) {
                        return Err(ExactError::EdgeNotEnabled(e.name.clone()));
                    }
                    let share = share_at(stg, &state, st.edge, &t);
                    factor = factor.scale(&share);
                    state = apply(stg, &state, &t, st.edge);
                    continue;
                }
                let resets_all = e.resets.len() == stg.num_clocks();
                if !final_step && !resets_all {
                    return Err(ExactError::UndeterminedContinuation(
                        lname.clone(),
                        match dist {
                            DistributionSpec::UniformOverEnabled => "uniform",
                            DistributionSpec::Exponential { .. } => "exponential",
                        },
                    ));
                }
                match dist {
                    DistributionSpec::UniformOverEnabled => {
                        if !set.is_bounded() {
                            return Err(ExactError::UniformUnbounded(lname));
                        }
                        let total = set.total_length().expect("bounded");
                        let mut mass = Rat::zero();
                        for (piece, share) in choice_pieces(stg, &state, st.edge, &window) {
                            let len = piece.length().expect("bounded piece");
                            mass += share * len;
                        }
                        factor = factor.scale(&(mass / total));
                    }
                    DistributionSpec::Exponential { rate } => {
                        if !set.is_all_nonneg_reals() {
                            return Err(ExactError::ExponentialRestricted(lname));
                        }
                        // integral of rate e^(-rate t) over each share piece
                        let mut step_sum = ExpSum { terms: vec![] };
                        for (piece, share) in choice_pieces(stg, &state, st.edge, &window) {
                            step_sum.add_term(rate * &piece.lo, share.clone());
                            if let Upper::Finite(h) = &piece.hi {
                                step_sum.add_term(rate * h, -share);
                            }
                        }
                        factor = factor.mul(&step_sum);
                    }
                }
                // Successor valuation: all-zero after a full reset (non-final
                // steps), arbitrary representative for a final step.
                let t_repr = match &window.hi {
                    Upper::Finite(h) => (&window.lo + h) / rat_int(2),
                    Upper::Infinite => &window.lo + rat_int(1),
                };
                state = apply(stg, &state, &t_repr, st.edge);
            }
        }
    }
    Ok(factor.into_exppoly())
}

fn apply(stg: &Stg, s: &State<Rat>, delay: &Rat, edge: EdgeId) -> State<Rat> {
    let e = stg.edge(edge);
    let mut vals = s.advance(delay);
    for c in &e.resets {
        vals[c.0] = Rat::zero();
    }
    State::new(e.target, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_model;
    use crate::rat::rat;
    use crate::sim::initial_state_exact;

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

    fn path(stg: &Stg, names: &[&str]) -> Vec<PathStep> {
        names
            .iter()
            .map(|n| PathStep { edge: stg.edge_by_name(n).unwrap(), player_delay: None })
            .collect()
    }

    #[test]
    fn worked_example_is_exactly_one_eighth() {
        let m = sec2_model();
        let p = exact_path_probability(&m, &initial_state_exact(&m), &path(&m, &["e1", "e2"]))
            .unwrap();
        assert_eq!(p.as_constant(), Some(rat(1, 8)));
    }

    #[test]
    fn empty_path_has_probability_one() {
        let m = sec2_model();
        let p = exact_path_probability(&m, &initial_state_exact(&m), &[]).unwrap();
        assert!(p.is_one());
    }

    #[test]
    fn single_exponential_step_gives_e_minus_one() {
        let m = parse_model(
            r#"{
            "clocks": ["x"],
            "locations": [
                {"name": "A", "owner": "stochastic"},
                {"name": "B", "owner": "diamond"},
                {"name": "C", "owner": "diamond"}
            ],
            "edges": [
                {"id": "hi", "source": "A", "guard": "x >= 1", "target": "B"},
                {"id": "lo", "source": "A", "guard": "x < 1", "target": "C"}
            ],
            "distributions": {"A": {"kind": "exponential", "rate": "1"}},
            "initial": {"location": "A", "valuation": {"x": 0}},
            "targets": ["B"]
        }"#,
        )
        .unwrap();
        let p = exact_path_probability(&m, &initial_state_exact(&m), &path(&m, &["hi"])).unwrap();
        assert_eq!(p.to_string(), "y; y=exp(-1/1)");
        let p2 = exact_path_probability(&m, &initial_state_exact(&m), &path(&m, &["lo"])).unwrap();
        assert_eq!(p2.to_string(), "1 - y; y=exp(-1/1)");
        assert!(p.add(&p2).is_one());
    }

    #[test]
    fn reset_separated_path_factorizes() {
        let m = sec2_model();
        let s0 = initial_state_exact(&m);
        let p12 = exact_path_probability(&m, &s0, &path(&m, &["e1", "e2"])).unwrap();
        let p1 = exact_path_probability(&m, &s0, &path(&m, &["e1"])).unwrap();
        let s_b = State::new(m.location_by_name("B").unwrap(), vec![Rat::zero()]);
        let p2 = exact_path_probability(&m, &s_b, &path(&m, &["e2"])).unwrap();
        assert_eq!(p12, p1.mul(&p2));
    }

    #[test]
    fn one_step_paths_partition_unity() {
        let m = sec2_model();
        // From (B, 0): P(e2) + P(e4) = 1.
        let s_b = State::new(m.location_by_name("B").unwrap(), vec![Rat::zero()]);
        let p2 = exact_path_probability(&m, &s_b, &path(&m, &["e2"])).unwrap();
        let p4 = exact_path_probability(&m, &s_b, &path(&m, &["e4"])).unwrap();
        assert_eq!(p2.as_constant(), Some(rat(1, 4)));
        assert_eq!(p4.as_constant(), Some(rat(3, 4)));
        assert!(p2.add(&p4).is_one());
    }

    #[test]
    fn undetermined_uniform_continuation_rejected() {
        let m = sec2_model();
        let s0 = initial_state_exact(&m);
        // e3 keeps the clock running, so the next uniform step is entered at
        // an undetermined valuation.
        let err = exact_path_probability(&m, &s0, &path(&m, &["e3", "e1"]));
        assert!(matches!(err, Err(ExactError::UndeterminedContinuation(_, _))));
    }
}
