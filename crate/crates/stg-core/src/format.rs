//! Text formats: the guard grammar and the JSON model document.

use crate::model::{
    Atom, Clock, ClockConstraint, DistributionSpec, Edge, Location, LocationId, ModelError, Owner,
    Relation, Stg,
};
use crate::rat::{parse_rat, Rat};
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Parses `atom ("&&" atom)* | "true"` with
/// `atom := clock ("<"|"<="|"="|">="|">") integer`.
pub fn parse_guard(s: &str, clocks: &[String]) -> Result<ClockConstraint, ModelError> {
    let s = s.trim();
    if s.is_empty() || s == "true" {
        return Ok(ClockConstraint::tru());
    }
    let mut atoms = vec![];
    for part in s.split("&&") {
        let part = part.trim();
        let (idx, rel) = ["<=", ">=", "<", ">", "="]
            .iter()
            .filter_map(|op| part.find(op).map(|i| (i, *op)))
            .min_by_key(|(i, _)| *i)
            .ok_or_else(|| ModelError::GuardSyntax(format!("no relation in `{part}`")))?;
        let (lhs, rhs) = (part[..idx].trim(), part[idx + rel.len()..].trim());
        let clock = clocks
            .iter()
            .position(|c| c == lhs)
            .map(Clock)
            .ok_or_else(|| ModelError::UnknownClock(lhs.to_string()))?;
        let bound: u32 = rhs
            .parse()
            .map_err(|_| ModelError::GuardSyntax(format!("bound `{rhs}` is not a non-negative integer")))?;
        let rel = match rel {
            "<" => Relation::Lt,
            "<=" => Relation::Le,
            "=" => Relation::Eq,
            ">=" => Relation::Ge,
            ">" => Relation::Gt,
            _ => unreachable!(),
        };
        atoms.push(Atom { clock, rel, bound });
    }
    Ok(ClockConstraint { atoms })
}

pub fn print_guard(g: &ClockConstraint, clocks: &[String]) -> String {
    if g.is_true() {
        return "true".to_string();
    }
    g.atoms
        .iter()
        .map(|a| format!("{} {} {}", clocks[a.clock.0], a.rel.symbol(), a.bound))
        .collect::<Vec<_>>()
        .join(" && ")
}

fn print_rat(r: &Rat) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LocationDoc {
    name: String,
    owner: Owner,
    #[serde(default = "default_true_guard")]
    invariant: String,
}

fn default_true_guard() -> String {
    "true".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeDoc {
    id: String,
    source: String,
    #[serde(default = "default_true_guard")]
    guard: String,
    #[serde(default)]
    resets: Vec<String>,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistributionDoc {
    Uniform,
    Exponential { rate: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct InitialDoc {
    location: String,
    valuation: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StgDoc {
    clocks: Vec<String>,
    locations: Vec<LocationDoc>,
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    distributions: BTreeMap<String, DistributionDoc>,
    initial: InitialDoc,
    targets: Vec<String>,
}

fn value_to_rat(v: &serde_json::Value) -> Result<Rat, ModelError> {
    match v {
        serde_json::Value::Number(n) => {
            parse_rat(&n.to_string()).map_err(ModelError::Format)
        }
        serde_json::Value::String(s) => parse_rat(s).map_err(ModelError::Format),
        _ => Err(ModelError::Format(format!("expected number or \"p/q\" string, got {v}"))),
    }
}

pub fn parse_model(text: &str) -> Result<Stg, ModelError> {
    let doc: StgDoc =
        serde_json::from_str(text).map_err(|e| ModelError::Format(format!("model JSON: {e}")))?;
    stg_from_doc(doc)
}

fn stg_from_doc(doc: StgDoc) -> Result<Stg, ModelError> {
    let clocks = doc.clocks;
    let mut locations = Vec::with_capacity(doc.locations.len());
    let mut seen = BTreeSet::new();
    for l in &doc.locations {
        if !seen.insert(l.name.clone()) {
            return Err(ModelError::DuplicateLocation(l.name.clone()));
        }
        locations.push(Location {
            name: l.name.clone(),
            owner: l.owner,
            invariant: parse_guard(&l.invariant, &clocks)?,
        });
    }
    let loc_id = |name: &str| -> Result<LocationId, ModelError> {
        locations
            .iter()
            .position(|l| l.name == name)
            .map(LocationId)
            .ok_or_else(|| ModelError::UnknownLocation(name.to_string()))
    };
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut seen_edges = BTreeSet::new();
    for e in &doc.edges {
        if !seen_edges.insert(e.id.clone()) {
            return Err(ModelError::DuplicateEdge(e.id.clone()));
        }
        let weight = e.weight.unwrap_or(1);
        if weight == 0 {
            return Err(ModelError::ZeroWeight(e.id.clone()));
        }
        let mut resets = BTreeSet::new();
        for c in &e.resets {
            let clock = clocks
                .iter()
                .position(|x| x == c)
                .map(Clock)
                .ok_or_else(|| ModelError::UnknownClock(c.clone()))?;
            resets.insert(clock);
        }
        edges.push(Edge {
            name: e.id.clone(),
            source: loc_id(&e.source)?,
            guard: parse_guard(&e.guard, &clocks)?,
            resets,
            target: loc_id(&e.target)?,
            weight,
        });
    }
    let mut distributions = BTreeMap::new();
    for (name, d) in &doc.distributions {
        let id = loc_id(name)?;
        let spec = match d {
            DistributionDoc::Uniform => DistributionSpec::UniformOverEnabled,
            DistributionDoc::Exponential { rate } => {
                let rate = parse_rat(rate).map_err(ModelError::Format)?;
                if !rate.is_positive() {
                    return Err(ModelError::Format(format!(
                        "exponential rate must be positive at `{name}`"
                    )));
                }
                DistributionSpec::Exponential { rate }
            }
        };
        distributions.insert(id, spec);
    }
    let initial_location = loc_id(&doc.initial.location)?;
    let mut initial_valuation = vec![Rat::from_integer(0.into()); clocks.len()];
    for (c, v) in &doc.initial.valuation {
        let clock = clocks
            .iter()
            .position(|x| x == c)
            .ok_or_else(|| ModelError::UnknownClock(c.clone()))?;
        let r = value_to_rat(v)?;
        if r.is_negative() {
            return Err(ModelError::NegativeInitial(c.clone()));
        }
        initial_valuation[clock] = r;
    }
    let mut targets = BTreeSet::new();
    for t in &doc.targets {
        targets.insert(loc_id(t)?);
    }
    Ok(Stg {
        clocks,
        locations,
        edges,
        distributions,
        initial_location,
        initial_valuation,
        targets,
    })
}

pub fn print_model(stg: &Stg) -> String {
    let doc = StgDoc {
        clocks: stg.clocks.clone(),
        locations: stg
            .locations
            .iter()
            .map(|l| LocationDoc {
                name: l.name.clone(),
                owner: l.owner,
                invariant: print_guard(&l.invariant, &stg.clocks),
            })
            .collect(),
        edges: stg
            .edges
            .iter()
            .map(|e| EdgeDoc {
                id: e.name.clone(),
                source: stg.location(e.source).name.clone(),
                guard: print_guard(&e.guard, &stg.clocks),
                resets: e.resets.iter().map(|c| stg.clocks[c.0].clone()).collect(),
                target: stg.location(e.target).name.clone(),
                weight: if e.weight == 1 { None } else { Some(e.weight) },
            })
            .collect(),
        distributions: stg
            .distributions
            .iter()
            .map(|(id, d)| {
                let doc = match d {
                    DistributionSpec::UniformOverEnabled => DistributionDoc::Uniform,
                    DistributionSpec::Exponential { rate } => {
                        DistributionDoc::Exponential { rate: print_rat(rate) }
                    }
                };
                (stg.location(*id).name.clone(), doc)
            })
            .collect(),
        initial: InitialDoc {
            location: stg.location(stg.initial_location).name.clone(),
            valuation: stg
                .clocks
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    (c.clone(), serde_json::Value::String(print_rat(&stg.initial_valuation[i])))
                })
                .collect(),
        },
        targets: stg.targets.iter().map(|t| stg.location(*t).name.clone()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
}
