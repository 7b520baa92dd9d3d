//! 1-clock region construction: the region STG and the three structural
//! restrictions that license the MDP abstraction.

use crate::model::{
    Clock, ClockConstraint, DistributionSpec, Edge, EdgeId, Location, LocationId, Owner, Relation,
    State, Stg,
};
use crate::rat::{rat, rat_u32, Rat};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

/// 1-clock region: an integer point {c}, an open unit interval (c, c+1), or
/// the unbounded tail (c_max, +inf).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Point(u32),
    Open(u32),
    Unbounded,
}

impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Region {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl Region {
    /// Position on the time line: Point(c) < Open(c) < Point(c+1) < … < Unbounded.
    fn rank(self) -> u64 {
        match self {
            Region::Point(c) => 2 * c as u64,
            Region::Open(c) => 2 * c as u64 + 1,
            Region::Unbounded => u64::MAX,
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, Region::Point(0))
    }

    pub fn is_bounded(self) -> bool {
        !matches!(self, Region::Unbounded)
    }

    /// A rational representative of the region.
    pub fn representative(self, c_max: u32) -> Rat {
        match self {
            Region::Point(c) => rat_u32(c),
            Region::Open(c) => rat_u32(c) + rat(1, 2),
            Region::Unbounded => rat_u32(c_max) + rat_u32(1),
        }
    }

    /// True when every value in the region satisfies `value ~ bound`.
    pub fn satisfies_atom(self, rel: Relation, bound: u32) -> bool {
        match self {
            Region::Point(c) => rel.holds(&rat_u32(c), bound),
            Region::Open(c) => match rel {
                Relation::Lt | Relation::Le => bound > c,
                Relation::Gt | Relation::Ge => bound <= c,
                Relation::Eq => false,
            },
            Region::Unbounded => matches!(rel, Relation::Gt | Relation::Ge),
        }
    }

    pub fn satisfies(self, g: &ClockConstraint) -> bool {
        g.atoms.iter().all(|a| self.satisfies_atom(a.rel, a.bound))
    }

    /// The minimal guard capturing this region, on clock `x`.
    pub fn minimal_guard(self, clock: Clock, c_max: u32) -> ClockConstraint {
        let mut g = ClockConstraint::tru();
        match self {
            Region::Point(c) => {
                g = g.and(crate::model::Atom { clock, rel: Relation::Eq, bound: c });
            }
            Region::Open(c) => {
                if c > 0 {
                    g = g.and(crate::model::Atom { clock, rel: Relation::Gt, bound: c });
                } else {
                    g = g.and(crate::model::Atom { clock, rel: Relation::Gt, bound: 0 });
                }
                g = g.and(crate::model::Atom { clock, rel: Relation::Lt, bound: c + 1 });
            }
            Region::Unbounded => {
                g = g.and(crate::model::Atom { clock, rel: Relation::Gt, bound: c_max });
            }
        }
        g
    }

    /// All regions reachable from this one by letting time pass (including
    /// itself), in increasing order.
    pub fn reachable_by_delay(self, c_max: u32) -> Vec<Region> {
        let mut out = vec![];
        let (c0, include_point) = match self {
            Region::Point(c) => (c, true),
            Region::Open(c) => (c, false),
            Region::Unbounded => return vec![Region::Unbounded],
        };
        if include_point {
            out.push(Region::Point(c0));
        }
        for c in c0..c_max {
            out.push(Region::Open(c));
            out.push(Region::Point(c + 1));
        }
        out.push(Region::Unbounded);
        out
    }

    pub fn of_value(v: &Rat, c_max: u32) -> Region {
        if *v > rat_u32(c_max) {
            return Region::Unbounded;
        }
        let floor = v.floor().to_integer();
        let floor_u: u32 = floor.try_into().unwrap_or(0);
        if v == &rat_u32(floor_u) {
            Region::Point(floor_u)
        } else {
            Region::Open(floor_u)
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Point(0) => write!(f, "0"),
            Region::Point(c) => write!(f, "{{{c}}}"),
            Region::Open(c) => write!(f, "({},{})", c, c + 1),
            Region::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionNode {
    pub location: LocationId,
    pub region: Region,
}

#[derive(Debug, Clone)]
pub struct RegionEdge {
    pub source: usize,
    /// Region in which the original edge fires (the minimal region guard).
    pub firing_region: Region,
    pub edge: EdgeId,
    pub reset: bool,
    pub target: usize,
}

/// The region STG: (location, entry region) nodes with region-guarded edges.
#[derive(Debug, Clone)]
pub struct RegionStg {
    pub stg: Stg,
    pub c_max: u32,
    pub nodes: Vec<RegionNode>,
    pub edges: Vec<RegionEdge>,
    pub initial: usize,
}

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("region construction requires exactly one clock, model has {0}")]
    NotOneClock(usize),
}

impl RegionStg {
    pub fn node_name(&self, idx: usize) -> String {
        let n = &self.nodes[idx];
        format!("{}@{}", self.stg.location(n.location).name, n.region)
    }

    pub fn owner(&self, idx: usize) -> Owner {
        self.stg.location(self.nodes[idx].location).owner
    }

    pub fn is_target(&self, idx: usize) -> bool {
        self.stg.is_target(self.nodes[idx].location)
    }

    pub fn edges_from(&self, idx: usize) -> impl Iterator<Item = (usize, &RegionEdge)> {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.source == idx)
    }

    pub fn find_node(&self, location: &str, region: Region) -> Option<usize> {
        let loc = self.stg.location_by_name(location)?;
        self.nodes
            .iter()
            .position(|n| n.location == loc && n.region == region)
    }
}

/// Whether `I(s)` has Lebesgue measure zero for states of this node
/// (the invariant pins the delay; distributions degenerate to a Dirac).
fn node_is_dirac(stg: &Stg, location: LocationId, region: Region, c_max: u32) -> bool {
    let v = region.representative(c_max);
    let s = State::new(location, vec![v]);
    let (set, _) = crate::model::enabled_set(stg, &s);
    match set.total_length() {
        Some(len) => len.is_zero(),
        None => false,
    }
}

/// Builds the region STG of a 1-clock game, pruned to the reachable part.
///
/// Firing regions with a measure-zero delay window are dropped for stochastic
/// sources with a continuous delay distribution: they carry probability zero.
/// Player sources keep them (a player can hit an exact time point).
pub fn build_region_stg(stg: &Stg) -> Result<RegionStg, RegionError> {
    if stg.num_clocks() != 1 {
        return Err(RegionError::NotOneClock(stg.num_clocks()));
    }
    let c_max = stg.max_constant();
    let clock = Clock(0);

    let initial_region = Region::of_value(&stg.initial_valuation[0], c_max);
    let init = RegionNode { location: stg.initial_location, region: initial_region };

    let mut index: HashMap<RegionNode, usize> = HashMap::new();
    let mut nodes = vec![init];
    index.insert(init, 0);
    let mut edges: Vec<RegionEdge> = vec![];
    let mut queue = VecDeque::from([0usize]);

    while let Some(src_idx) = queue.pop_front() {
        let node = nodes[src_idx];
        let loc = stg.location(node.location);
        let stochastic = loc.owner == Owner::Stochastic;
        let dirac = stochastic && node_is_dirac(stg, node.location, node.region, c_max);
        let out_edges: Vec<(EdgeId, Edge)> = stg
            .edges_from(node.location)
            .map(|(id, e)| (id, e.clone()))
            .collect();
        for firing in node.region.reachable_by_delay(c_max) {
            if stochastic && !dirac && matches!(firing, Region::Point(_)) {
                continue;
            }
            // Source invariant must hold from entry through the firing region.
            let invariant_ok = node
                .region
                .reachable_by_delay(c_max)
                .into_iter()
                .take_while(|w| *w <= firing)
                .all(|w| w.satisfies(&loc.invariant));
            if !invariant_ok {
                continue;
            }
            for (eid, e) in &out_edges {
                if !firing.satisfies(&e.guard) {
                    continue;
                }
                let reset = e.resets.contains(&clock);
                let target_region = if reset { Region::Point(0) } else { firing };
                let tgt_node = RegionNode { location: e.target, region: target_region };
                let tgt_idx = *index.entry(tgt_node).or_insert_with(|| {
                    nodes.push(tgt_node);
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                });
                edges.push(RegionEdge {
                    source: src_idx,
                    firing_region: firing,
                    edge: *eid,
                    reset,
                    target: tgt_idx,
                });
            }
        }
    }

    let _ = clock;
    Ok(RegionStg { stg: stg.clone(), c_max, nodes, edges, initial: 0 })
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub witness: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict { pass: true, witness: None }
    }
    fn fail(witness: String) -> Self {
        Verdict { pass: false, witness: Some(witness) }
    }
}

/// Report for the three (*) restrictions.
#[derive(Debug, Clone)]
pub struct StarReport {
    pub non_zeno: Verdict,
    pub exponential_unbounded: Verdict,
    pub initialized: Verdict,
}

impl StarReport {
    pub fn all_pass(&self) -> bool {
        self.non_zeno.pass && self.exponential_unbounded.pass && self.initialized.pass
    }
}

/// Checks the three restrictions on the (pruned) region STG:
/// 1. structurally non-Zeno: every cycle of bounded-region edges passes
///    through a zero-region node;
/// 2. stochastic nodes carry exponential distributions with I(s) = R+;
/// 3. initialized: player-to-stochastic edges reset the clock.
pub fn check_star(rg: &RegionStg) -> StarReport {
    // (1) after removing zero-region nodes, the bounded-edge subgraph must be
    // acyclic.
    let non_zeno = {
        let keep: Vec<bool> = rg.nodes.iter().map(|n| !n.region.is_zero()).collect();
        let mut adj: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (i, e) in rg.edges.iter().enumerate() {
            if e.firing_region.is_bounded() && keep[e.source] && keep[e.target] {
                adj.entry(e.source).or_default().push((e.target, i));
            }
        }
        match find_cycle(rg.nodes.len(), &adj) {
            None => Verdict::pass(),
            Some(cycle) => {
                let names: Vec<String> = cycle
                    .iter()
                    .map(|(n, e)| format!("{} -{}->", rg.node_name(*n), rg.stg.edge(rg.edges[*e].edge).name))
                    .collect();
                Verdict::fail(names.join(" "))
            }
        }
    };

    // (2) exponential with unbounded enabled set, at region granularity.
    let mut exp_unbounded = Verdict::pass();
    for (i, n) in rg.nodes.iter().enumerate() {
        if rg.stg.location(n.location).owner != Owner::Stochastic || rg.is_target(i) {
            continue;
        }
        match rg.stg.distribution(n.location) {
            Some(DistributionSpec::Exponential { .. }) => {}
            _ => {
                exp_unbounded = Verdict::fail(format!(
                    "{} has no exponential distribution",
                    rg.node_name(i)
                ));
                break;
            }
        }
        let v = n.region.representative(rg.c_max);
        let s = State::new(n.location, vec![v]);
        let (set, _) = crate::model::enabled_set(&rg.stg, &s);
        if !set.is_all_nonneg_reals() {
            exp_unbounded =
                Verdict::fail(format!("I(s) != R+ at {}", rg.node_name(i)));
            break;
        }
    }

    // (3) initialized: player -> stochastic region edges reset the clock.
    let mut initialized = Verdict::pass();
    for e in &rg.edges {
        let src_owner = rg.owner(e.source);
        let tgt_owner = rg.owner(e.target);
        if src_owner.is_player() && tgt_owner == Owner::Stochastic && !e.reset {
            initialized = Verdict::fail(rg.stg.edge(e.edge).name.clone());
            break;
        }
    }

    StarReport { non_zeno, exponential_unbounded: exp_unbounded, initialized }
}

/// Finds a cycle in the adjacency map, returning (node, edge-index) pairs.
fn find_cycle(
    n: usize,
    adj: &BTreeMap<usize, Vec<(usize, usize)>>,
) -> Option<Vec<(usize, usize)>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    let mut stack: Vec<(usize, usize)> = vec![];

    fn dfs(
        u: usize,
        adj: &BTreeMap<usize, Vec<(usize, usize)>>,
        mark: &mut [Mark],
        stack: &mut Vec<(usize, usize)>,
    ) -> Option<Vec<(usize, usize)>> {
        mark[u] = Mark::Grey;
        if let Some(nexts) = adj.get(&u) {
            for &(v, ei) in nexts {
                if mark[v] == Mark::Grey {
                    let mut cyc: Vec<(usize, usize)> =
                        stack.iter().copied().skip_while(|(w, _)| *w != v).collect();
                    cyc.push((u, ei));
                    return Some(cyc);
                }
                if mark[v] == Mark::White {
                    stack.push((u, ei));
                    if let Some(c) = dfs(v, adj, mark, stack) {
                        return Some(c);
                    }
                    stack.pop();
                }
            }
        }
        mark[u] = Mark::Black;
        None
    }

    (0..n).find_map(|u| {
        if mark[u] == Mark::White {
            dfs(u, adj, &mut mark, &mut stack)
        } else {
            None
        }
    })
}

/// Exports the region STG as an ordinary STG (region guards on edges), so the
/// simulator can run it directly.
pub fn region_stg_to_stg(rg: &RegionStg) -> Stg {
    let clock = Clock(0);
    let locations: Vec<Location> = rg
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| Location {
            name: rg.node_name(i),
            owner: rg.stg.location(n.location).owner,
            invariant: rg.stg.location(n.location).invariant.clone(),
        })
        .collect();
    let edges: Vec<Edge> = rg
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let orig = rg.stg.edge(e.edge);
            Edge {
                name: format!("{}#{}", orig.name, i),
                source: LocationId(e.source),
                guard: e.firing_region.minimal_guard(clock, rg.c_max),
                resets: if e.reset { BTreeSet::from([clock]) } else { BTreeSet::new() },
                target: LocationId(e.target),
                weight: orig.weight,
            }
        })
        .collect();
    let distributions = rg
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            rg.stg.distribution(n.location).map(|d| (LocationId(i), d.clone()))
        })
        .collect();
    let targets = rg
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| rg.stg.is_target(n.location))
        .map(|(i, _)| LocationId(i))
        .collect();
    Stg {
        clocks: rg.stg.clocks.clone(),
        locations,
        edges,
        distributions,
        initial_location: LocationId(rg.initial),
        initial_valuation: rg.stg.initial_valuation.clone(),
        targets,
    }
}

pub fn region_stg_to_dot(rg: &RegionStg) -> String {
    let mut out = String::from("digraph region_stg {\n  rankdir=LR;\n");
    for (i, n) in rg.nodes.iter().enumerate() {
        let shape = match rg.owner(i) {
            Owner::Box => "box",
            Owner::Diamond => "diamond",
            Owner::Stochastic => "ellipse",
        };
        let peripheries = if rg.is_target(i) { 2 } else { 1 };
        out.push_str(&format!(
            "  n{} [label=\"{}\", shape={}, peripheries={}];\n",
            i,
            rg.node_name(i),
            shape,
            peripheries
        ));
        let _ = n;
    }
    for e in &rg.edges {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{} : {}\"];\n",
            e.source,
            e.target,
            rg.stg.edge(e.edge).name,
            e.firing_region
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn region_of_value_partition() {
        // Every value belongs to exactly one region; boundaries at integers.
        let c_max = 2;
        for (v, want) in [
            (rat(0, 1), Region::Point(0)),
            (rat(1, 2), Region::Open(0)),
            (rat(1, 1), Region::Point(1)),
            (rat(3, 2), Region::Open(1)),
            (rat(2, 1), Region::Point(2)),
            (rat(5, 2), Region::Unbounded),
        ] {
            assert_eq!(Region::of_value(&v, c_max), want, "value {v}");
        }
    }

    #[test]
    fn reachable_by_delay_is_increasing() {
        let r = Region::Open(0).reachable_by_delay(2);
        assert_eq!(
            r,
            vec![
                Region::Open(0),
                Region::Point(1),
                Region::Open(1),
                Region::Point(2),
                Region::Unbounded
            ]
        );
        assert_eq!(Region::Unbounded.reachable_by_delay(2), vec![Region::Unbounded]);
    }

    #[test]
    fn representative_lies_in_region() {
        for r in [Region::Point(1), Region::Open(1), Region::Unbounded] {
            let v = r.representative(2);
            assert_eq!(Region::of_value(&v, 2), r);
        }
        assert!(Region::Open(0).representative(1) < Rat::one());
    }
}
