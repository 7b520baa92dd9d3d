//! Deletable-node elimination on the region STG and exact macro-edge
//! probabilities in Q[e^(-1/q)], producing the finite MDP abstraction.

use crate::exppoly::{ExpPoly, ExpPolyDoc};
use crate::model::{DistributionSpec, EdgeId, Owner};
use crate::rat::Rat;
use crate::region::{Region, RegionStg};
use crate::transient::{integrate_step, TransientExpr, XBound};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("deletable nodes form a cycle: {0}")]
    DeletableCycle(String),
    #[error("node `{0}` is not deletable")]
    NotDeletable(String),
    #[error("macro path runs through non-deletable node `{0}`")]
    NotIntermediate(String),
    #[error("deletable node `{0}` sits on an integer region; the (*) conditions exclude this")]
    PointRegionDeletable(String),
    #[error("macro path resets the clock before its final step")]
    IntermediateReset,
    #[error("stochastic location `{0}` lacks an exponential rate")]
    MissingRate(String),
    #[error("chance state `{state}` probabilities sum to {sum}, not 1")]
    SumToOne { state: String, sum: String },
    #[error("initial node is deletable; the abstraction keeps only 0/inf stochastic nodes")]
    InitialDeleted,
    #[error(transparent)]
    Transient(#[from] crate::transient::TransientError),
}

/// Stochastic region nodes with an intermediate region: eliminated during
/// MDP construction.
#[derive(Debug, Clone)]
pub struct DeletableSet {
    pub nodes: BTreeSet<usize>,
}

/// Verifies the definition and the acyclicity of the induced subgraph.
pub fn deletable_nodes(rg: &RegionStg) -> Result<DeletableSet, MdpError> {
    let mut nodes = BTreeSet::new();
    for (i, n) in rg.nodes.iter().enumerate() {
        if rg.owner(i) == Owner::Stochastic
            && !rg.is_target(i)
            && !n.region.is_zero()
            && n.region != Region::Unbounded
        {
            nodes.insert(i);
        }
    }
    // acyclicity of the induced subgraph
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in &rg.edges {
        if nodes.contains(&e.source) && nodes.contains(&e.target) {
            adj.entry(e.source).or_default().push(e.target);
        }
    }
    let mut mark: BTreeMap<usize, u8> = BTreeMap::new();
    fn dfs(
        u: usize,
        adj: &BTreeMap<usize, Vec<usize>>,
        mark: &mut BTreeMap<usize, u8>,
        path: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        mark.insert(u, 1);
        path.push(u);
        for &v in adj.get(&u).into_iter().flatten() {
            match mark.get(&v) {
                Some(1) => {
                    let cyc: Vec<usize> =
                        path.iter().copied().skip_while(|w| *w != v).collect();
                    return Some(cyc);
                }
                Some(_) => {}
                None => {
                    if let Some(c) = dfs(v, adj, mark, path) {
                        return Some(c);
                    }
                }
            }
        }
        mark.insert(u, 2);
        path.pop();
        None
    }
    for &u in &nodes {
        if !mark.contains_key(&u) {
            let mut path = vec![];
            if let Some(cyc) = dfs(u, &adj, &mut mark, &mut path) {
                let names: Vec<String> = cyc.iter().map(|i| rg.node_name(*i)).collect();
                return Err(MdpError::DeletableCycle(names.join(" -> ")));
            }
        }
    }
    Ok(DeletableSet { nodes })
}

/// One original edge occurrence inside a macro edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroStep {
    pub edge: EdgeId,
    pub firing: Region,
    pub reset: bool,
}

/// Region STG with path-labelled edges: the working structure of the
/// recursive remove operation.
#[derive(Debug, Clone)]
pub struct ElimGraph {
    pub present: Vec<bool>,
    pub edges: Vec<ElimEdge>,
}

#[derive(Debug, Clone)]
pub struct ElimEdge {
    pub source: usize,
    pub steps: Vec<MacroStep>,
    pub target: usize,
}

impl ElimGraph {
    pub fn from_region_stg(rg: &RegionStg) -> Self {
        ElimGraph {
            present: vec![true; rg.nodes.len()],
            edges: rg
                .edges
                .iter()
                .map(|e| ElimEdge {
                    source: e.source,
                    steps: vec![MacroStep {
                        edge: e.edge,
                        firing: e.firing_region,
                        reset: e.reset,
                    }],
                    target: e.target,
                })
                .collect(),
        }
    }
}

/// Removes one deletable node: every (incoming, outgoing) pair becomes a
/// direct edge labelled by the concatenation. Self-loops cannot occur on a
/// deletable node (acyclicity).
pub fn remove_node(
    rg: &RegionStg,
    g: &ElimGraph,
    node: usize,
    deletable: &DeletableSet,
) -> Result<ElimGraph, MdpError> {
    if !deletable.nodes.contains(&node) {
        return Err(MdpError::NotDeletable(rg.node_name(node)));
    }
    let incoming: Vec<&ElimEdge> = g.edges.iter().filter(|e| e.target == node).collect();
    let outgoing: Vec<&ElimEdge> = g.edges.iter().filter(|e| e.source == node).collect();
    if incoming.iter().any(|e| e.source == node) {
        return Err(MdpError::DeletableCycle(rg.node_name(node)));
    }
    let mut edges: Vec<ElimEdge> = g
        .edges
        .iter()
        .filter(|e| e.source != node && e.target != node)
        .cloned()
        .collect();
    for inc in &incoming {
        for out in &outgoing {
            let mut steps = inc.steps.clone();
            steps.extend(out.steps.iter().cloned());
            edges.push(ElimEdge { source: inc.source, steps, target: out.target });
        }
    }
    let mut present = g.present.clone();
    present[node] = false;
    Ok(ElimGraph { present, edges })
}

/// Common exponent denominator: lcm of the rate denominators of all
/// stochastic locations, per the canonical choice of q.
pub fn common_q(rg: &RegionStg) -> u64 {
    let mut q = BigInt::one();
    for (id, d) in &rg.stg.distributions {
        let _ = id;
        if let DistributionSpec::Exponential { rate } = d {
            q = q.lcm(rate.denom());
        }
    }
    (&q).try_into().unwrap_or(1)
}

fn rate_alpha_num(rg: &RegionStg, loc: crate::model::LocationId, q: u64) -> Result<u64, MdpError> {
    match rg.stg.distribution(loc) {
        Some(DistributionSpec::Exponential { rate }) => {
            let scaled = rate * Rat::from_integer(BigInt::from(q));
            debug_assert!(scaled.is_integer());
            Ok((&scaled.to_integer()).try_into().unwrap_or(0))
        }
        _ => Err(MdpError::MissingRate(rg.stg.location(loc).name.clone())),
    }
}

/// Weight share of `edge` among the edges of its source location whose guards
/// hold on the firing region.
fn region_share(rg: &RegionStg, source_loc: crate::model::LocationId, firing: Region, edge: EdgeId) -> Rat {
    let mut total: u64 = 0;
    let mut mine: u64 = 0;
    for (id, e) in rg.stg.edges_from(source_loc) {
        if firing.satisfies(&e.guard) {
            total += e.weight;
            if id == edge {
                mine = e.weight;
            }
        }
    }
    if total == 0 {
        Rat::from_integer(0.into())
    } else {
        Rat::new((mine as i64).into(), (total as i64).into())
    }
}

/// Exact probability of a macro edge: the label's step sequence from a kept
/// stochastic node, computed backwards with symbolic integration. The entry
/// value is 0 at a zero-region source; from the unbounded region the enabled
/// set is delay-invariant and the probability is the plain weight share.
pub fn macro_edge_probability(
    rg: &RegionStg,
    source: usize,
    steps: &[MacroStep],
    q: u64,
) -> Result<ExpPoly, MdpError> {
    let src_node = rg.nodes[source];
    debug_assert_eq!(rg.owner(source), Owner::Stochastic);

    if src_node.region == Region::Unbounded {
        // single step; weight share in the unbounded region
        debug_assert_eq!(steps.len(), 1);
        let share = region_share(rg, src_node.location, steps[0].firing, steps[0].edge);
        return Ok(ExpPoly::constant(q, share));
    }

    // Walk forward once to collect each step's source location and entry
    // region, then integrate backwards.
    let mut sources = Vec::with_capacity(steps.len());
    let mut loc = src_node.location;
    let mut entry = src_node.region;
    for (i, st) in steps.iter().enumerate() {
        if matches!(st.firing, Region::Point(_)) {
            // stochastic steps firing on an integer region carry no
            // probability mass under exponential distributions
            return Err(MdpError::PointRegionDeletable(rg.node_name(source)));
        }
        sources.push((loc, entry));
        if st.reset && i + 1 < steps.len() {
            return Err(MdpError::IntermediateReset);
        }
        loc = rg.stg.edge(st.edge).target;
        entry = if st.reset { Region::Point(0) } else { st.firing };
    }

    let mut f = TransientExpr::one(q);
    for (i, st) in steps.iter().enumerate().rev() {
        let (sloc, sentry) = sources[i];
        let alpha = rate_alpha_num(rg, sloc, q)?;
        let share = region_share(rg, sloc, st.firing, st.edge);
        let (xlo, xhi) = match st.firing {
            Region::Open(c) => {
                if sentry == Region::Open(c) {
                    (XBound::EntryValue, XBound::Int(c + 1))
                } else {
                    (XBound::Int(c), XBound::Int(c + 1))
                }
            }
            Region::Unbounded => (XBound::Int(rg.c_max), XBound::PlusInf),
            Region::Point(_) => unreachable!("rejected above"),
        };
        f = integrate_step(&f, alpha, &share, xlo, xhi, st.reset)?;
    }
    Ok(f.eval_at_zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdpStateKind {
    /// Diamond (maximizer) choice state.
    Max,
    /// Box (minimizer) choice state.
    Min,
    /// Stochastic state with one distribution over macro edges.
    Chance,
}

#[derive(Debug, Clone)]
pub struct MdpState {
    pub name: String,
    pub kind: MdpStateKind,
    pub target: bool,
}

#[derive(Debug, Clone)]
pub struct PlayerAction {
    pub state: usize,
    pub label: String,
    pub successor: usize,
}

#[derive(Debug, Clone)]
pub struct ChanceEdge {
    pub label: String,
    pub probability: ExpPoly,
    pub successor: usize,
}

/// Finite turn-based Max/Min/Chance graph with exact transition
/// probabilities.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub q: u64,
    pub states: Vec<MdpState>,
    pub actions: Vec<PlayerAction>,
    pub chance: BTreeMap<usize, Vec<ChanceEdge>>,
    pub initial: usize,
}

impl Mdp {
    pub fn actions_of(&self, state: usize) -> Vec<usize> {
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.state == state)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn label_set(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> =
            self.actions.iter().map(|a| a.label.clone()).collect();
        for edges in self.chance.values() {
            out.extend(edges.iter().map(|e| e.label.clone()));
        }
        out
    }

    pub fn state_by_name(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }
}

fn label_of(rg: &RegionStg, steps: &[MacroStep]) -> String {
    steps
        .iter()
        .map(|s| rg.stg.edge(s.edge).name.clone())
        .collect::<Vec<_>>()
        .join("")
}

/// Builds the MDP: recursively removes all deletable nodes, labels the
/// surviving edges with exact probabilities, and verifies stochasticity at
/// every chance state.
pub fn build_mdp(rg: &RegionStg) -> Result<Mdp, MdpError> {
    let deletable = deletable_nodes(rg)?;
    for &d in &deletable.nodes {
        if let Region::Point(_) = rg.nodes[d].region {
            return Err(MdpError::PointRegionDeletable(rg.node_name(d)));
        }
    }
    if deletable.nodes.contains(&rg.initial) {
        return Err(MdpError::InitialDeleted);
    }
    let mut g = ElimGraph::from_region_stg(rg);
    for &d in &deletable.nodes {
        g = remove_node(rg, &g, d, &deletable)?;
    }
    build_mdp_from_elimination(rg, &g)
}

/// Assembles the MDP from an eliminated graph (exposed separately so tests
/// can check elimination-order independence).
pub fn build_mdp_from_elimination(rg: &RegionStg, g: &ElimGraph) -> Result<Mdp, MdpError> {
    let q = common_q(rg);

    // keep only the part reachable from the initial node (targets keep their
    // outgoing structure; they become absorbing only in the solver)
    let mut reach = vec![false; rg.nodes.len()];
    reach[rg.initial] = true;
    let mut stack = vec![rg.initial];
    while let Some(u) = stack.pop() {
        for e in g.edges.iter().filter(|e| e.source == u) {
            if !reach[e.target] {
                reach[e.target] = true;
                stack.push(e.target);
            }
        }
    }

    let kept: Vec<usize> =
        (0..rg.nodes.len()).filter(|i| g.present[*i] && reach[*i]).collect();
    let index: BTreeMap<usize, usize> =
        kept.iter().enumerate().map(|(new, old)| (*old, new)).collect();

    let states: Vec<MdpState> = kept
        .iter()
        .map(|&i| MdpState {
            name: rg.node_name(i),
            kind: match rg.owner(i) {
                Owner::Diamond => MdpStateKind::Max,
                Owner::Box => MdpStateKind::Min,
                Owner::Stochastic => MdpStateKind::Chance,
            },
            target: rg.is_target(i),
        })
        .collect();

    let mut actions = vec![];
    let mut chance: BTreeMap<usize, Vec<ChanceEdge>> = BTreeMap::new();

    for (&old, &new) in &index {
        match rg.owner(old) {
            Owner::Diamond | Owner::Box => {
                let mut seen = BTreeSet::new();
                for e in g.edges.iter().filter(|e| e.source == old) {
                    debug_assert_eq!(e.steps.len(), 1, "player edges stay one-step");
                    let succ = index[&e.target];
                    let label = label_of(rg, &e.steps);
                    if seen.insert((label.clone(), succ)) {
                        actions.push(PlayerAction { state: new, label, successor: succ });
                    }
                }
            }
            Owner::Stochastic => {
                let mut edges = vec![];
                let mut sum = ExpPoly::zero(q);
                for e in g.edges.iter().filter(|e| e.source == old) {
                    let p = macro_edge_probability(rg, old, &e.steps, q)?;
                    sum = sum.add(&p);
                    edges.push(ChanceEdge {
                        label: label_of(rg, &e.steps),
                        probability: p,
                        successor: index[&e.target],
                    });
                }
                if !edges.is_empty() && !sum.is_one() {
                    return Err(MdpError::SumToOne {
                        state: rg.node_name(old),
                        sum: sum.to_string(),
                    });
                }
                edges.sort_by(|a, b| a.label.cmp(&b.label));
                chance.insert(new, edges);
            }
        }
    }

    Ok(Mdp { q, states, actions, chance, initial: index[&rg.initial] })
}

// ---- serialization ----

#[derive(Serialize, Deserialize)]
struct MdpStateDoc {
    name: String,
    kind: MdpStateKind,
    target: bool,
}

#[derive(Serialize, Deserialize)]
struct ActionDoc {
    state: usize,
    label: String,
    successor: usize,
}

#[derive(Serialize, Deserialize)]
struct ChanceEdgeDoc {
    label: String,
    successor: usize,
    probability: ExpPolyDoc,
    symbolic: String,
    enclosure: String,
}

#[derive(Serialize, Deserialize)]
struct MdpDoc {
    q: u64,
    initial: usize,
    states: Vec<MdpStateDoc>,
    actions: Vec<ActionDoc>,
    chance: BTreeMap<String, Vec<ChanceEdgeDoc>>,
}

pub fn mdp_to_json(mdp: &Mdp, precision: usize) -> String {
    let doc = MdpDoc {
        q: mdp.q,
        initial: mdp.initial,
        states: mdp
            .states
            .iter()
            .map(|s| MdpStateDoc { name: s.name.clone(), kind: s.kind, target: s.target })
            .collect(),
        actions: mdp
            .actions
            .iter()
            .map(|a| ActionDoc { state: a.state, label: a.label.clone(), successor: a.successor })
            .collect(),
        chance: mdp
            .chance
            .iter()
            .map(|(s, es)| {
                (
                    s.to_string(),
                    es.iter()
                        .map(|e| ChanceEdgeDoc {
                            label: e.label.clone(),
                            successor: e.successor,
                            probability: ExpPolyDoc::from(&e.probability),
                            symbolic: e.probability.to_string(),
                            enclosure: e.probability.decimal_enclosure(precision),
                        })
                        .collect(),
                )
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("mdp serialization cannot fail")
}

pub fn mdp_from_json(text: &str) -> Result<Mdp, String> {
    let doc: MdpDoc = serde_json::from_str(text).map_err(|e| format!("mdp JSON: {e}"))?;
    let mut chance = BTreeMap::new();
    for (s, es) in &doc.chance {
        let idx: usize = s.parse().map_err(|_| format!("bad chance state key {s}"))?;
        let edges: Result<Vec<ChanceEdge>, String> = es
            .iter()
            .map(|e| {
                Ok(ChanceEdge {
                    label: e.label.clone(),
                    successor: e.successor,
                    probability: ExpPoly::try_from(&e.probability)?,
                })
            })
            .collect();
        chance.insert(idx, edges?);
    }
    Ok(Mdp {
        q: doc.q,
        initial: doc.initial,
        states: doc
            .states
            .into_iter()
            .map(|s| MdpState { name: s.name, kind: s.kind, target: s.target })
            .collect(),
        actions: doc
            .actions
            .into_iter()
            .map(|a| PlayerAction { state: a.state, label: a.label, successor: a.successor })
            .collect(),
        chance,
    })
}

pub fn mdp_to_dot(mdp: &Mdp) -> String {
    let mut out = String::from("digraph mdp {\n  rankdir=LR;\n");
    for (i, s) in mdp.states.iter().enumerate() {
        let shape = match s.kind {
            MdpStateKind::Max => "diamond",
            MdpStateKind::Min => "box",
            MdpStateKind::Chance => "ellipse",
        };
        let peripheries = if s.target { 2 } else { 1 };
        out.push_str(&format!(
            "  n{i} [label=\"{}\", shape={shape}, peripheries={peripheries}];\n",
            s.name
        ));
    }
    for a in &mdp.actions {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{}\"];\n",
            a.state, a.successor, a.label
        ));
    }
    for (s, es) in &mdp.chance {
        for e in es {
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{} : {}\"];\n",
                s,
                e.successor,
                e.label,
                compact_poly(&e.probability)
            ));
        }
    }
    out.push_str("}\n");
    out
}

/// Short form without the y-definition suffix, for edge labels.
pub fn compact_poly(p: &ExpPoly) -> String {
    let s = p.to_string();
    match s.split_once("; y=") {
        Some((head, _)) => head.to_string(),
        None => s,
    }
}
