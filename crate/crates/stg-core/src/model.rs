//! Core model types: clocks, guards, locations, edges, distributions and the
//! game structure itself, together with the basic state predicates.

use crate::interval::{Interval, IntervalSet, TimeOps, Upper};
use crate::rat::Rat;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clock(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn holds<T: TimeOps>(self, value: &T, bound: u32) -> bool {
        let b = T::from_u32(bound);
        match self {
            Relation::Lt => *value < b,
            Relation::Le => *value <= b,
            Relation::Eq => *value == b,
            Relation::Ge => *value >= b,
            Relation::Gt => *value > b,
        }
    }
}

/// One conjunct `clock ~ bound` with a non-negative integer bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub clock: Clock,
    pub rel: Relation,
    pub bound: u32,
}

/// Conjunction of atoms; the empty conjunction is "true".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClockConstraint {
    pub atoms: Vec<Atom>,
}

impl ClockConstraint {
    pub fn tru() -> Self {
        ClockConstraint { atoms: vec![] }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }

    /// Maximal constant appearing in the constraint.
    pub fn max_bound(&self) -> u32 {
        self.atoms.iter().map(|a| a.bound).max().unwrap_or(0)
    }

    /// Whether the per-clock conjunction has any solution over the reals >= 0.
    pub fn satisfiable(&self) -> bool {
        let mut per_clock: BTreeMap<Clock, Vec<&Atom>> = BTreeMap::new();
        for a in &self.atoms {
            per_clock.entry(a.clock).or_default().push(a);
        }
        for atoms in per_clock.values() {
            // Intersect [lo, hi] windows on this clock's value.
            let mut lo = Rat::from_integer(0.into());
            let mut lo_closed = true;
            let mut hi: Option<Rat> = None;
            let mut hi_closed = true;
            for a in atoms {
                let b = crate::rat::rat_u32(a.bound);
                match a.rel {
                    Relation::Ge => {
                        if b > lo || (b == lo && !lo_closed) {
                            lo = b;
                            lo_closed = true;
                        }
                    }
                    Relation::Gt => {
                        if b >= lo {
                            lo = b;
                            lo_closed = false;
                        }
                    }
                    Relation::Le => {
                        if hi.as_ref().is_none_or(|h| b < *h) {
                            hi = Some(b);
                            hi_closed = true;
                        }
                    }
                    Relation::Lt => {
                        if hi.as_ref().is_none_or(|h| b <= *h) {
                            hi = Some(b);
                            hi_closed = false;
                        }
                    }
                    Relation::Eq => {
                        if b > lo || (b == lo && !lo_closed) {
                            lo = b.clone();
                            lo_closed = true;
                        }
                        if hi.as_ref().is_none_or(|h| b < *h) {
                            hi = Some(b);
                            hi_closed = true;
                        }
                    }
                }
            }
            if let Some(h) = hi {
                if lo > h || (lo == h && !(lo_closed && hi_closed)) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Box,
    Diamond,
    Stochastic,
}

impl Owner {
    pub fn is_player(self) -> bool {
        !matches!(self, Owner::Stochastic)
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Box => write!(f, "box"),
            Owner::Diamond => write!(f, "diamond"),
            Owner::Stochastic => write!(f, "stochastic"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Location {
    pub name: String,
    pub owner: Owner,
    pub invariant: ClockConstraint,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub name: String,
    pub source: LocationId,
    pub guard: ClockConstraint,
    pub resets: BTreeSet<Clock>,
    pub target: LocationId,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    UniformOverEnabled,
    Exponential { rate: Rat },
}

/// A stochastic timed game: timed automaton, ownership partition, weights,
/// delay distributions, initial state and target set.
#[derive(Debug, Clone)]
pub struct Stg {
    pub clocks: Vec<String>,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
    pub distributions: BTreeMap<LocationId, DistributionSpec>,
    pub initial_location: LocationId,
    pub initial_valuation: Vec<Rat>,
    pub targets: BTreeSet<LocationId>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate location name `{0}`")]
    DuplicateLocation(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("guard parse error: {0}")]
    GuardSyntax(String),
    #[error("edge weight must be >= 1 on `{0}`")]
    ZeroWeight(String),
    #[error("negative clock value for `{0}` in initial valuation")]
    NegativeInitial(String),
    #[error("{0}")]
    Format(String),
}

impl Stg {
    pub fn num_clocks(&self) -> usize {
        self.clocks.len()
    }

    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn location_by_name(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name).map(LocationId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    pub fn clock_by_name(&self, name: &str) -> Option<Clock> {
        self.clocks.iter().position(|c| c == name).map(Clock)
    }

    pub fn edges_from(&self, loc: LocationId) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.source == loc)
            .map(|(i, e)| (EdgeId(i), e))
    }

    pub fn is_target(&self, loc: LocationId) -> bool {
        self.targets.contains(&loc)
    }

    /// Maximal constant in any guard or invariant.
    pub fn max_constant(&self) -> u32 {
        let g = self.edges.iter().map(|e| e.guard.max_bound()).max().unwrap_or(0);
        let i = self.locations.iter().map(|l| l.invariant.max_bound()).max().unwrap_or(0);
        g.max(i)
    }

    pub fn distribution(&self, loc: LocationId) -> Option<&DistributionSpec> {
        self.distributions.get(&loc)
    }
}

/// A concrete state: location plus clock valuation, generic over time type.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub location: LocationId,
    pub valuation: Vec<T>,
}

impl<T: TimeOps> State<T> {
    pub fn new(location: LocationId, valuation: Vec<T>) -> Self {
        State { location, valuation }
    }

    pub fn advance(&self, delay: &T) -> Vec<T> {
        self.valuation.iter().map(|v| v.clone() + delay.clone()).collect()
    }
}

/// `v |= g`: every atom holds under the valuation.
pub fn satisfies<T: TimeOps>(valuation: &[T], g: &ClockConstraint) -> bool {
    g.atoms.iter().all(|a| a.rel.holds(&valuation[a.clock.0], a.bound))
}

/// Per-atom delay window: the set of delays t such that (v + t)(clock) ~ bound.
fn atom_delay_window<T: TimeOps>(value: &T, rel: Relation, bound: u32) -> Interval<T> {
    let b = T::from_u32(bound);
    let past = b < *value; // bound already passed
    let dist = if past { T::zero() } else { b - value.clone() };
    match rel {
        Relation::Ge => Interval::unbounded_from(dist, true),
        Relation::Gt => {
            if past {
                Interval::unbounded_from(T::zero(), true)
            } else {
                Interval::unbounded_from(dist, false)
            }
        }
        Relation::Le => {
            if past {
                // empty
                Interval { lo: T::from_u32(1), lo_closed: true, hi: Upper::Finite(T::zero()), hi_closed: true }
            } else {
                Interval::closed(T::zero(), dist)
            }
        }
        Relation::Lt => {
            if past || dist == T::zero() {
                Interval { lo: T::from_u32(1), lo_closed: true, hi: Upper::Finite(T::zero()), hi_closed: true }
            } else {
                Interval { lo: T::zero(), lo_closed: true, hi: Upper::Finite(dist), hi_closed: false }
            }
        }
        Relation::Eq => {
            if past {
                Interval { lo: T::from_u32(1), lo_closed: true, hi: Upper::Finite(T::zero()), hi_closed: true }
            } else {
                Interval::point(dist)
            }
        }
    }
}

/// I(s, e): delays after which edge `e` can be taken from state `s`.
///
/// Requires the guard at v+t and the source invariant throughout [0, t]. For
/// conjunctive constraints this is a single interval obtained by intersecting
/// per-atom windows.
pub fn enabled_interval<T: TimeOps>(stg: &Stg, s: &State<T>, edge: EdgeId) -> Interval<T> {
    let e = stg.edge(edge);
    debug_assert_eq!(e.source, s.location);
    let mut iv = Interval::full();

    // Guard at the moment of firing.
    for a in &e.guard.atoms {
        iv = iv.intersect(&atom_delay_window(&s.valuation[a.clock.0], a.rel, a.bound));
        if iv.is_empty() {
            return iv;
        }
    }

    // Source invariant throughout [0, t]. Lower-bound atoms hold at entry by
    // state well-formedness and stay true; upper bounds must hold at t; an
    // equality pins the delay to zero.
    for a in &stg.location(s.location).invariant.atoms {
        let v = &s.valuation[a.clock.0];
        match a.rel {
            Relation::Le | Relation::Lt | Relation::Eq => {
                iv = iv.intersect(&atom_delay_window(v, a.rel, a.bound));
            }
            Relation::Ge | Relation::Gt => {
                if !a.rel.holds(v, a.bound) {
                    return Interval {
                        lo: T::from_u32(1),
                        lo_closed: true,
                        hi: Upper::Finite(T::zero()),
                        hi_closed: true,
                    };
                }
            }
        }
        if iv.is_empty() {
            return iv;
        }
    }

    // Note: the arrival state's invariant is not part of enabledness (the
    // worked probability computations require the guard-only reading); a run
    // entering a state that violates its invariant blocks there, because
    // I(s) is empty at such a state.
    iv
}

/// I(s) = union of I(s, e) over the outgoing edges, normalized, together with
/// the per-edge intervals.
pub fn enabled_set<T: TimeOps>(stg: &Stg, s: &State<T>) -> (IntervalSet<T>, Vec<(EdgeId, Interval<T>)>) {
    let per_edge: Vec<(EdgeId, Interval<T>)> = stg
        .edges_from(s.location)
        .map(|(id, _)| (id, enabled_interval(stg, s, id)))
        .collect();
    let set = IntervalSet::from_intervals(per_edge.iter().map(|(_, iv)| iv.clone()).collect());
    (set, per_edge)
}

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("no edge enabled at the queried state (blocked)")]
    Blocked,
    #[error("edge weights are only meaningful at stochastic locations")]
    NotStochastic,
}

/// Weight-share probabilities over the edges enabled right now (zero delay).
/// The shares are exact rationals summing to 1.
pub fn edge_choice_prob<T: TimeOps>(stg: &Stg, s: &State<T>) -> Result<Vec<(EdgeId, Rat)>, SemanticsError> {
    let enabled: Vec<(EdgeId, u64)> = stg
        .edges_from(s.location)
        .filter(|(id, _)| enabled_interval(stg, s, *id).contains(&T::zero()))
        .map(|(id, e)| (id, e.weight))
        .collect();
    if enabled.is_empty() {
        return Err(SemanticsError::Blocked);
    }
    let total: u64 = enabled.iter().map(|(_, w)| w).sum();
    let total = crate::rat::rat_int(total as i64);
    Ok(enabled
        .into_iter()
        .map(|(id, w)| (id, crate::rat::rat_int(w as i64) / total.clone()))
        .collect())
}
