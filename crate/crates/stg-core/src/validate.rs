//! Structural and region-level model validation.

use crate::model::{DistributionSpec, Owner, Relation, State, Stg};
use crate::region::build_region_stg;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn has(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }

    fn error(&mut self, code: &'static str, message: String) {
        self.findings.push(Finding { severity: Severity::Error, code, message });
    }

    fn warning(&mut self, code: &'static str, message: String) {
        self.findings.push(Finding { severity: Severity::Warning, code, message });
    }
}

/// Validates a model. References are already resolved by the parser, so this
/// focuses on semantic well-formedness:
///
/// - unsatisfiable guards and invariants;
/// - the initial state satisfies its invariant;
/// - stochastic non-target locations carry a distribution and at least one
///   outgoing edge;
/// - for 1-clock models, exact region-level checks: non-blocking on every
///   reachable (location, region) pair, and bounded enabled sets wherever a
///   uniform distribution is used;
/// - for multi-clock models, a structural boundedness check for uniform
///   locations (invariant or all guards upper-bounded).
pub fn check_wellformed(stg: &Stg) -> ValidationReport {
    let mut rep = ValidationReport::default();

    for e in &stg.edges {
        if !e.guard.satisfiable() {
            rep.warning("unsat-guard", format!("guard of edge `{}` is unsatisfiable", e.name));
        }
    }
    for l in &stg.locations {
        if !l.invariant.satisfiable() {
            rep.warning("unsat-invariant", format!("invariant of `{}` is unsatisfiable", l.name));
        }
    }

    if !crate::model::satisfies(&stg.initial_valuation, &stg.location(stg.initial_location).invariant)
    {
        rep.error(
            "initial-invariant",
            format!(
                "initial valuation violates the invariant of `{}`",
                stg.location(stg.initial_location).name
            ),
        );
    }

    for (i, l) in stg.locations.iter().enumerate() {
        let id = crate::model::LocationId(i);
        let is_target = stg.is_target(id);
        let has_out = stg.edges_from(id).next().is_some();
        match l.owner {
            Owner::Stochastic => {
                if !is_target {
                    if !has_out {
                        rep.error(
                            "non-blocking",
                            format!("stochastic location `{}` has no outgoing edge", l.name),
                        );
                    }
                    match stg.distribution(id) {
                        None => rep.error(
                            "missing-distribution",
                            format!("stochastic location `{}` has no delay distribution", l.name),
                        ),
                        Some(DistributionSpec::UniformOverEnabled) => {
                            if stg.num_clocks() > 1 && !structurally_bounded(stg, id) {
                                rep.warning(
                                    "uniform-unbounded",
                                    format!(
                                        "cannot certify bounded I(s) at uniform location `{}`",
                                        l.name
                                    ),
                                );
                            }
                        }
                        Some(DistributionSpec::Exponential { .. }) => {}
                    }
                }
            }
            Owner::Box | Owner::Diamond => {
                if !is_target && !has_out {
                    rep.warning(
                        "player-sink",
                        format!("player location `{}` has no outgoing edge; runs block there", l.name),
                    );
                }
                if stg.distribution(id).is_some() {
                    rep.warning(
                        "distribution-on-player",
                        format!("distribution attached to player location `{}` is ignored", l.name),
                    );
                }
            }
        }
    }

    if stg.num_clocks() == 1 {
        region_level_checks(stg, &mut rep);
    }

    rep
}

/// Sufficient structural condition for bounded I(s): the invariant has an
/// upper bound on some clock, or every outgoing edge guard does.
fn structurally_bounded(stg: &Stg, loc: crate::model::LocationId) -> bool {
    let upper = |g: &crate::model::ClockConstraint| {
        g.atoms
            .iter()
            .any(|a| matches!(a.rel, Relation::Lt | Relation::Le | Relation::Eq))
    };
    if upper(&stg.location(loc).invariant) {
        return true;
    }
    let mut edges = stg.edges_from(loc).peekable();
    edges.peek().is_some() && stg.edges_from(loc).all(|(_, e)| upper(&e.guard))
}

/// Exact per-(location, region) checks for 1-clock models.
fn region_level_checks(stg: &Stg, rep: &mut ValidationReport) {
    let rg = match build_region_stg(stg) {
        Ok(rg) => rg,
        Err(_) => return,
    };
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, n) in rg.nodes.iter().enumerate() {
        if rg.is_target(i) {
            continue;
        }
        let v = n.region.representative(rg.c_max);
        let s = State::new(n.location, vec![v]);
        let (set, _) = crate::model::enabled_set(stg, &s);
        let name = rg.node_name(i);
        if set.is_empty() {
            if seen.insert(format!("blk:{name}")) {
                let invalid_entry = !n.region.satisfies(&stg.location(n.location).invariant);
                if invalid_entry {
                    // Entered past its invariant: a defined dead end under the
                    // entry-permissive semantics.
                    rep.warning("dead-entry", format!("runs entering {name} block immediately"));
                } else if rg.owner(i) == Owner::Stochastic {
                    rep.error("non-blocking", format!("blocked state at {name}"));
                } else {
                    rep.warning("player-blocked", format!("player blocked at {name}"));
                }
            }
            continue;
        }
        if rg.owner(i) == Owner::Stochastic {
            match stg.distribution(n.location) {
                Some(DistributionSpec::UniformOverEnabled) => {
                    if !set.is_bounded() && seen.insert(format!("ub:{name}")) {
                        rep.error(
                            "uniform-unbounded",
                            format!("uniform distribution over unbounded I(s) at {name}"),
                        );
                    }
                }
                Some(DistributionSpec::Exponential { .. }) => {
                    let zero_measure =
                        set.total_length().map(|l| num_traits::Zero::is_zero(&l)).unwrap_or(false);
                    if !set.is_all_nonneg_reals()
                        && !zero_measure
                        && seen.insert(format!("exp:{name}"))
                    {
                        rep.warning(
                            "exponential-restricted",
                            format!("exponential location with I(s) neither R+ nor a point at {name}"),
                        );
                    }
                }
                None => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_model;

    fn model(json: &str) -> Stg {
        parse_model(json).unwrap()
    }

    #[test]
    fn stochastic_sink_is_violation() {
        let m = model(
            r#"{
            "clocks": ["x"],
            "locations": [{"name": "A", "owner": "stochastic"}],
            "edges": [],
            "distributions": {"A": {"kind": "uniform"}},
            "initial": {"location": "A", "valuation": {"x": 0}},
            "targets": []
        }"#,
        );
        let rep = check_wellformed(&m);
        assert!(!rep.ok());
        assert!(rep.has("non-blocking"));
    }

    #[test]
    fn missing_distribution_reported() {
        let m = model(
            r#"{
            "clocks": ["x"],
            "locations": [
                {"name": "A", "owner": "stochastic"},
                {"name": "B", "owner": "diamond"}
            ],
            "edges": [{"id": "e1", "source": "A", "guard": "x <= 1", "target": "B"}],
            "initial": {"location": "A", "valuation": {"x": 0}},
            "targets": ["B"]
        }"#,
        );
        let rep = check_wellformed(&m);
        assert!(rep.has("missing-distribution"));
    }

    #[test]
    fn uniform_needs_bounded_enabled_set() {
        let m = model(
            r#"{
            "clocks": ["x"],
            "locations": [
                {"name": "A", "owner": "stochastic"},
                {"name": "B", "owner": "diamond"}
            ],
            "edges": [{"id": "e1", "source": "A", "guard": "x >= 1", "target": "B"}],
            "distributions": {"A": {"kind": "uniform"}},
            "initial": {"location": "A", "valuation": {"x": 0}},
            "targets": ["B"]
        }"#,
        );
        let rep = check_wellformed(&m);
        assert!(rep.has("uniform-unbounded"));
        assert!(!rep.ok());
    }

    #[test]
    fn initial_invariant_checked() {
        let m = model(
            r#"{
            "clocks": ["x"],
            "locations": [
                {"name": "A", "owner": "diamond", "invariant": "x <= 1"},
                {"name": "B", "owner": "diamond"}
            ],
            "edges": [{"id": "e1", "source": "A", "guard": "true", "target": "B"}],
            "initial": {"location": "A", "valuation": {"x": 2}},
            "targets": ["B"]
        }"#,
        );
        let rep = check_wellformed(&m);
        assert!(rep.has("initial-invariant"));
    }
}
