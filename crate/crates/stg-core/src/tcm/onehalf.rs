//! Compiles two-counter machines into 4-clock 1.5-player games with uniform
//! distributions: per-instruction modules wired to probability-testing
//! gadgets whose target mass penalizes simulation errors quadratically.

use super::machine::{Config, Counter, Instr, TwoCounterMachine};
use crate::model::{
    Clock, ClockConstraint, DistributionSpec, Edge, EdgeId, Location, LocationId, Owner, Stg,
};
use crate::rat::{rat, rat_int, Rat};
use crate::sim::{Move, PlayerDelay, SimError, Strategy};
use crate::interval::TimeOps;
use num_traits::One;
use std::collections::BTreeMap;
use std::sync::Arc;

pub const X1: usize = 0;
pub const X2: usize = 1;
pub const X3: usize = 2;
pub const X4: usize = 3;

/// How a Diamond location is played under the faithful strategy.
#[derive(Debug, Clone)]
pub enum DiamondRule {
    /// Wait until `exit.0 == exit.1` and leave, taking a realignment
    /// self-loop first whenever a loop clock reaches its landmark sooner.
    /// `loop_on_tie` settles simultaneous landmarks: gadget chains must
    /// realign before exiting, module exits must not.
    AnchorExit {
        exit: (Clock, u32, EdgeId),
        loops: Vec<(Clock, u32, EdgeId)>,
        loop_on_tie: bool,
    },
    /// Dwell a planned amount derived from the machine configuration,
    /// interleaving realignment loops.
    PlannedDwell { kind: DwellKind, exit: EdgeId, loops: Vec<(Clock, u32, EdgeId)> },
    /// Zero-test branch: delay 0 and pick the edge matching the counter.
    ZeroBranch { counter: Counter, zero: EdgeId, pos: EdgeId },
}

#[derive(Debug, Clone, Copy)]
pub enum DwellKind {
    /// Increment module location B: ideal dwell 1/2^(c+1).
    IncB(Counter),
    /// Decrement module entry: ideal dwell 1 - 1/2^(c-1).
    DecEntry(Counter),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetKind {
    IncrementGetProb,
    DecrementGetProb,
}

#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub instr: usize,
    pub counter: Counter,
    pub kind: GadgetKind,
    pub entry: LocationId,
}

/// Compiler metadata: strategy rules and gadget entry points.
#[derive(Debug, Clone)]
pub struct OneHalfMeta {
    pub rules: BTreeMap<LocationId, DiamondRule>,
    pub entry_of: BTreeMap<LocationId, usize>,
    pub gadgets: Vec<GadgetInstance>,
}

pub struct OneHalfGame {
    pub stg: Stg,
    pub meta: OneHalfMeta,
}

struct Builder {
    clocks: Vec<String>,
    locations: Vec<Location>,
    edges: Vec<Edge>,
    distributions: BTreeMap<LocationId, DistributionSpec>,
    rules: BTreeMap<LocationId, DiamondRule>,
    entry_of: BTreeMap<LocationId, usize>,
    gadgets: Vec<GadgetInstance>,
}

impl Builder {
    fn new(clocks: &[&str]) -> Self {
        Builder {
            clocks: clocks.iter().map(|s| s.to_string()).collect(),
            locations: vec![],
            edges: vec![],
            distributions: BTreeMap::new(),
            rules: BTreeMap::new(),
            entry_of: BTreeMap::new(),
            gadgets: vec![],
        }
    }

    fn guard(&self, s: &str) -> ClockConstraint {
        crate::format::parse_guard(s, &self.clocks).expect("compiler guard")
    }

    fn loc(&mut self, name: &str, owner: Owner, invariant: &str) -> LocationId {
        let id = LocationId(self.locations.len());
        self.locations.push(Location {
            name: name.to_string(),
            owner,
            invariant: self.guard(invariant),
        });
        id
    }

    fn stochastic_uniform(&mut self, name: &str, invariant: &str) -> LocationId {
        let id = self.loc(name, Owner::Stochastic, invariant);
        self.distributions.insert(id, DistributionSpec::UniformOverEnabled);
        id
    }

    fn edge(
        &mut self,
        name: &str,
        source: LocationId,
        guard: &str,
        resets: &[usize],
        target: LocationId,
        weight: u64,
    ) -> EdgeId {
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge {
            name: name.to_string(),
            source,
            guard: self.guard(guard),
            resets: resets.iter().map(|c| Clock(*c)).collect(),
            target,
            weight,
        });
        id
    }

    fn finish(self, initial: LocationId, initial_valuation: Vec<Rat>, targets: &[LocationId]) -> OneHalfGame {
        let stg = Stg {
            clocks: self.clocks,
            locations: self.locations,
            edges: self.edges,
            distributions: self.distributions,
            initial_location: initial,
            initial_valuation,
            targets: targets.iter().copied().collect(),
        };
        OneHalfGame {
            stg,
            meta: OneHalfMeta { rules: self.rules, entry_of: self.entry_of, gadgets: self.gadgets },
        }
    }
}

/// Clock roles of a counter module: `own` encodes the manipulated counter,
/// `other` the spectator counter whose value is realigned modulo 1.
struct Roles {
    own: usize,
    other: usize,
}

fn roles(counter: Counter) -> Roles {
    match counter {
        Counter::C1 => Roles { own: X1, other: X2 },
        Counter::C2 => Roles { own: X2, other: X1 },
    }
}

fn clock_name(i: usize) -> &'static str {
    ["x1", "x2", "x3", "x4"][i]
}

/// The increment-flavoured GetProb gadget: entered with the error carried in
/// both `u` (the manipulated clock) and x3, the target mass is
/// (1/2)(1 - 4 eps^2). Returns the gadget entry location.
fn build_getprob_increment(
    b: &mut Builder,
    prefix: &str,
    u: usize,
    free: usize,
    target: LocationId,
    sink: LocationId,
) -> LocationId {
    let un = clock_name(u);
    let e0 = b.stochastic_uniform(&format!("{prefix}.E0"), "x4 <= 2");
    let names = ["E1", "E2", "E3", "E4"];
    let windows = [
        format!("{un} >= 1 && x4 <= 1"),
        "x3 >= 2 && x4 <= 2".to_string(),
        format!("{un} <= 1"),
        "x4 >= 1 && x3 <= 2".to_string(),
    ];
    // E1/E2 feed P2, E3/E4 feed P1
    let p1 = b.stochastic_uniform(&format!("{prefix}.P1"), "x4 <= 2");
    let p2 = b.stochastic_uniform(&format!("{prefix}.P2"), "x4 <= 2");
    for (i, name) in names.iter().enumerate() {
        let ei = b.loc(&format!("{prefix}.{name}"), Owner::Diamond, "true");
        b.edge(&format!("{prefix}.to{name}"), e0, &windows[i], &[], ei, 1);
        let mid = b.loc(&format!("{prefix}.M{name}"), Owner::Diamond, "true");
        let to_mid =
            b.edge(&format!("{prefix}.{name}m"), ei, "x4 = 2", &[free, X4], mid, 1);
        b.rules.insert(
            ei,
            DiamondRule::AnchorExit { exit: (Clock(X4), 2, to_mid), loops: vec![], loop_on_tie: false },
        );
        let mid1 = b.loc(&format!("{prefix}.N{name}"), Owner::Diamond, "true");
        let lp = b.edge(
            &format!("{prefix}.{name}l"),
            mid,
            "x3 = 3",
            &[X3],
            mid,
            1,
        );
        let ex = b.edge(
            &format!("{prefix}.{name}x"),
            mid,
            &format!("{un} = 3"),
            &[u, free],
            mid1,
            1,
        );
        b.rules.insert(
            mid,
            DiamondRule::AnchorExit {
                exit: (Clock(u), 3, ex),
                loops: vec![(Clock(X3), 3, lp)],
                loop_on_tie: true,
            },
        );
        let p = if i < 2 { p2 } else { p1 };
        let tp = b.edge(&format!("{prefix}.{name}p"), mid1, "x4 = 1", &[free, X4], p, 1);
        b.rules.insert(
            mid1,
            DiamondRule::AnchorExit { exit: (Clock(X4), 1, tp), loops: vec![], loop_on_tie: false },
        );
    }
    // P1: targets through the E1/E2-type windows
    b.edge(&format!("{prefix}.T3"), p1, &format!("{un} >= 1 && x4 <= 1"), &[], target, 1);
    b.edge(&format!("{prefix}.T4"), p1, "x3 >= 2 && x4 <= 2", &[], target, 1);
    b.edge(&format!("{prefix}.R3"), p1, &format!("{un} <= 1"), &[], sink, 1);
    b.edge(&format!("{prefix}.R4"), p1, "x4 >= 1 && x3 <= 2", &[], sink, 1);
    // P2: targets through the E3/E4-type windows
    b.edge(&format!("{prefix}.T1"), p2, &format!("{un} <= 1"), &[], target, 1);
    b.edge(&format!("{prefix}.T2"), p2, "x4 >= 1 && x3 <= 2", &[], target, 1);
    b.edge(&format!("{prefix}.R1"), p2, &format!("{un} >= 1 && x4 <= 1"), &[], sink, 1);
    b.edge(&format!("{prefix}.R2"), p2, "x3 >= 2 && x4 <= 2", &[], sink, 1);
    e0
}

/// The decrement-flavoured GetProb gadget: entered with the error carried in
/// the `m` clock only; target mass (1/2)(1 - eps^2).
fn build_getprob_decrement(
    b: &mut Builder,
    prefix: &str,
    m: usize,
    build: usize,
    target: LocationId,
    sink: LocationId,
) -> LocationId {
    let mn = clock_name(m);
    let e0 = b.stochastic_uniform(&format!("{prefix}.E0"), "x4 <= 2");
    let names = ["E1", "E2", "E3", "E4"];
    let windows = [
        "x3 >= 1 && x4 <= 1".to_string(),
        format!("{mn} >= 2 && x4 <= 2"),
        "x3 <= 1".to_string(),
        format!("x4 >= 1 && {mn} <= 2"),
    ];
    let p1 = b.stochastic_uniform(&format!("{prefix}.P1"), "x4 <= 2");
    let p2 = b.stochastic_uniform(&format!("{prefix}.P2"), "x4 <= 2");
    for (i, name) in names.iter().enumerate() {
        let ei = b.loc(&format!("{prefix}.{name}"), Owner::Diamond, "true");
        b.edge(&format!("{prefix}.to{name}"), e0, &windows[i], &[], ei, 1);
        let mid = b.loc(&format!("{prefix}.M{name}"), Owner::Diamond, "true");
        let to_mid =
            b.edge(&format!("{prefix}.{name}m"), ei, "x4 = 2", &[build, X4], mid, 1);
        b.rules.insert(
            ei,
            DiamondRule::AnchorExit { exit: (Clock(X4), 2, to_mid), loops: vec![], loop_on_tie: false },
        );
        let mid1 = b.loc(&format!("{prefix}.N{name}"), Owner::Diamond, "true");
        let lp = b.edge(&format!("{prefix}.{name}l"), mid, "x3 = 3", &[X3], mid, 1);
        let ex = b.edge(
            &format!("{prefix}.{name}x"),
            mid,
            &format!("{mn} = 3"),
            &[m, build],
            mid1,
            1,
        );
        b.rules.insert(
            mid,
            DiamondRule::AnchorExit {
                exit: (Clock(m), 3, ex),
                loops: vec![(Clock(X3), 3, lp)],
                loop_on_tie: true,
            },
        );
        let p = if i < 2 { p2 } else { p1 };
        let tp = b.edge(&format!("{prefix}.{name}p"), mid1, "x4 = 1", &[build, X4], p, 1);
        b.rules.insert(
            mid1,
            DiamondRule::AnchorExit { exit: (Clock(X4), 1, tp), loops: vec![], loop_on_tie: false },
        );
    }
    // P1 (entered with mass (1+eps)/2): targets are the E1/E2-type windows
    b.edge(&format!("{prefix}.T3"), p1, "x3 >= 1 && x4 <= 1", &[], target, 1);
    b.edge(&format!("{prefix}.T4"), p1, &format!("{mn} >= 2 && x4 <= 2"), &[], target, 1);
    b.edge(&format!("{prefix}.R3"), p1, "x3 <= 1", &[], sink, 1);
    b.edge(&format!("{prefix}.R4"), p1, &format!("x4 >= 1 && {mn} <= 2"), &[], sink, 1);
    // P2 (mass (1-eps)/2): targets are the E3/E4-type windows
    b.edge(&format!("{prefix}.T1"), p2, "x3 <= 1", &[], target, 1);
    b.edge(&format!("{prefix}.T2"), p2, &format!("x4 >= 1 && {mn} <= 2"), &[], target, 1);
    b.edge(&format!("{prefix}.R1"), p2, "x3 >= 1 && x4 <= 1", &[], sink, 1);
    b.edge(&format!("{prefix}.R2"), p2, &format!("{mn} >= 2 && x4 <= 2"), &[], sink, 1);
    e0
}

/// Compiles the 4-clock 1.5-player game. Upon each module entry the faithful
/// invariant x_own = 1/2^c_own, x_other = 1/2^c_other, x3 = x4 = 0 holds.
pub fn compile_onehalf(m: &TwoCounterMachine) -> OneHalfGame {
    let mut b = Builder::new(&["x1", "x2", "x3", "x4"]);

    let target = b.loc("target", Owner::Diamond, "true");
    let sink = b.stochastic_uniform("sink", "x4 <= 2");
    b.edge("sink.loop", sink, "true", &[X4], sink, 1);

    // entry locations first so jumps can be wired in one pass
    let entries: Vec<LocationId> = m
        .labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let owner = match m.instrs[i] {
                Instr::Halt => Owner::Stochastic,
                _ => Owner::Diamond,
            };
            let id = b.loc(label, owner, "true");
            b.entry_of.insert(id, i);
            id
        })
        .collect();

    for (i, instr) in m.instrs.iter().enumerate() {
        let label = &m.labels[i].clone();
        let entry = entries[i];
        match instr {
            Instr::Halt => {
                // absorbing non-target location
                b.distributions.insert(entry, DistributionSpec::UniformOverEnabled);
                b.locations[entry.0].invariant = b.guard("x4 <= 2");
                b.edge(&format!("{label}.loop"), entry, "true", &[X4], entry, 1);
            }
            Instr::Inc { counter, next } => {
                let r = roles(*counter);
                let (own, other) = (clock_name(r.own), clock_name(r.other));
                let loc_b = b.loc(&format!("{label}.B"), Owner::Diamond, "true");
                let loc_c = b.stochastic_uniform(&format!("{label}.C"), "x4 = 0");
                let loc_d = b.loc(&format!("{label}.D"), Owner::Diamond, "true");

                let e_loop = b.edge(
                    &format!("{label}.entry.loop"),
                    entry,
                    &format!("{other} = 1"),
                    &[r.other],
                    entry,
                    1,
                );
                let e_exit = b.edge(
                    &format!("{label}.entry.toB"),
                    entry,
                    &format!("{own} = 1"),
                    &[r.own, X4],
                    loc_b,
                    1,
                );
                b.rules.insert(
                    entry,
                    DiamondRule::AnchorExit {
                        exit: (Clock(r.own), 1, e_exit),
                        loops: vec![(Clock(r.other), 1, e_loop)],
                        loop_on_tie: false,
                    },
                );

                let b_loop = b.edge(
                    &format!("{label}.B.loop"),
                    loc_b,
                    &format!("{other} = 1"),
                    &[r.other],
                    loc_b,
                    1,
                );
                let b_exit = b.edge(
                    &format!("{label}.B.toC"),
                    loc_b,
                    &format!("{own} > 0 && {own} < 1 && x3 < 1"),
                    &[X4],
                    loc_c,
                    1,
                );
                b.rules.insert(
                    loc_b,
                    DiamondRule::PlannedDwell {
                        kind: DwellKind::IncB(*counter),
                        exit: b_exit,
                        loops: vec![(Clock(r.other), 1, b_loop)],
                    },
                );

                let gp = build_getprob_increment(
                    &mut b,
                    &format!("{label}.gp"),
                    r.own,
                    r.other,
                    target,
                    sink,
                );
                b.gadgets.push(GadgetInstance {
                    instr: i,
                    counter: *counter,
                    kind: GadgetKind::IncrementGetProb,
                    entry: gp,
                });
                b.edge(&format!("{label}.C.toD"), loc_c, "true", &[r.own], loc_d, 1);
                b.edge(&format!("{label}.C.toGp"), loc_c, "true", &[r.other], gp, 1);

                let d_loop = b.edge(
                    &format!("{label}.D.loop"),
                    loc_d,
                    &format!("{other} = 1"),
                    &[r.other],
                    loc_d,
                    1,
                );
                let d_exit = b.edge(
                    &format!("{label}.D.next"),
                    loc_d,
                    "x3 = 1",
                    &[X3, X4],
                    entries[*next],
                    1,
                );
                b.rules.insert(
                    loc_d,
                    DiamondRule::AnchorExit {
                        exit: (Clock(X3), 1, d_exit),
                        loops: vec![(Clock(r.other), 1, d_loop)],
                        loop_on_tie: false,
                    },
                );
            }
            Instr::Dec { counter, next } => {
                let r = roles(*counter);
                let (own, other) = (clock_name(r.own), clock_name(r.other));
                let loc_b = b.stochastic_uniform(&format!("{label}.B"), "x4 = 0");
                let loc_c = b.loc(&format!("{label}.C"), Owner::Diamond, "true");
                let loc_d = b.loc(&format!("{label}.D"), Owner::Diamond, "true");

                let e_loop = b.edge(
                    &format!("{label}.entry.loop"),
                    entry,
                    &format!("{other} = 1"),
                    &[r.other],
                    entry,
                    1,
                );
                let e_exit = b.edge(
                    &format!("{label}.entry.toB"),
                    entry,
                    &format!("{own} < 1"),
                    &[X4],
                    loc_b,
                    1,
                );
                b.rules.insert(
                    entry,
                    DiamondRule::PlannedDwell {
                        kind: DwellKind::DecEntry(*counter),
                        exit: e_exit,
                        loops: vec![(Clock(r.other), 1, e_loop)],
                    },
                );

                // stochastic no-time split: continue or verify
                b.edge(&format!("{label}.B.toD"), loc_b, "true", &[r.own], loc_d, 1);
                b.edge(&format!("{label}.B.toC"), loc_b, "true", &[r.other], loc_c, 1);

                let gp = build_getprob_decrement(
                    &mut b,
                    &format!("{label}.gp"),
                    r.other,
                    r.own,
                    target,
                    sink,
                );
                b.gadgets.push(GadgetInstance {
                    instr: i,
                    counter: *counter,
                    kind: GadgetKind::DecrementGetProb,
                    entry: gp,
                });
                let c_exit = b.edge(
                    &format!("{label}.C.toGp"),
                    loc_c,
                    &format!("{own} = 1"),
                    &[r.own, X4],
                    gp,
                    1,
                );
                b.rules.insert(
                    loc_c,
                    DiamondRule::AnchorExit { exit: (Clock(r.own), 1, c_exit), loops: vec![], loop_on_tie: false },
                );

                let d_loop = b.edge(
                    &format!("{label}.D.loop"),
                    loc_d,
                    &format!("{other} = 1"),
                    &[r.other],
                    loc_d,
                    1,
                );
                let d_exit = b.edge(
                    &format!("{label}.D.next"),
                    loc_d,
                    "x3 = 1",
                    &[X3, X4],
                    entries[*next],
                    1,
                );
                b.rules.insert(
                    loc_d,
                    DiamondRule::AnchorExit {
                        exit: (Clock(X3), 1, d_exit),
                        loops: vec![(Clock(r.other), 1, d_loop)],
                        loop_on_tie: false,
                    },
                );
            }
            Instr::Jz { counter, if_zero, if_pos } => {
                let r = roles(*counter);
                let own = clock_name(r.own);
                let b1 = b.stochastic_uniform(&format!("{label}.B1"), "x4 = 0");
                let b2 = b.stochastic_uniform(&format!("{label}.B2"), "x4 = 0");
                let z_edge = b.edge(
                    &format!("{label}.toB1"),
                    entry,
                    &format!("{own} = 1"),
                    &[],
                    b1,
                    1,
                );
                let p_edge = b.edge(
                    &format!("{label}.toB2"),
                    entry,
                    &format!("{own} < 1"),
                    &[],
                    b2,
                    1,
                );
                b.rules.insert(
                    entry,
                    DiamondRule::ZeroBranch { counter: *counter, zero: z_edge, pos: p_edge },
                );
                b.edge(&format!("{label}.B1.hit"), b1, "true", &[], target, 1);
                b.edge(&format!("{label}.B1.go"), b1, "true", &[], entries[*if_zero], 1);
                b.edge(&format!("{label}.B2.hit"), b2, "true", &[], target, 1);
                b.edge(&format!("{label}.B2.go"), b2, "true", &[], entries[*if_pos], 1);
            }
        }
    }

    let initial = entries[0];
    // c1 = c2 = 0: x1 = x2 = 1, x3 = x4 = 0
    let init_val = vec![rat_int(1), rat_int(1), rat_int(0), rat_int(0)];
    b.finish(initial, init_val, &[target])
}

/// Faithful Diamond strategy for compiled onehalf games, optionally
/// perturbing the planned dwell at one step by eps.
pub struct FaithfulOneHalf {
    meta: Arc<OneHalfMeta>,
    machine: Arc<TwoCounterMachine>,
    /// 1-based step to perturb, with the injected error.
    pub perturbation: Option<(usize, Rat)>,
    trace: Vec<Config>,
    step_idx: Option<usize>,
    at_entry: bool,
    pending: Option<Rat>,
}

impl FaithfulOneHalf {
    pub fn new(
        machine: Arc<TwoCounterMachine>,
        meta: Arc<OneHalfMeta>,
        perturbation: Option<(usize, Rat)>,
    ) -> Self {
        FaithfulOneHalf {
            meta,
            machine,
            perturbation,
            trace: vec![Config { pc: 0, c1: 0, c2: 0 }],
            step_idx: None,
            at_entry: false,
            pending: None,
        }
    }

    fn config_at(&mut self, step: usize) -> Result<Config, SimError> {
        while self.trace.len() <= step {
            let cur = *self.trace.last().unwrap();
            let next = match &self.machine.instrs[cur.pc] {
                Instr::Halt => return Err(SimError::StrategyExhausted("halt".into())),
                Instr::Inc { counter, next } => {
                    let mut c = cur;
                    match counter {
                        Counter::C1 => c.c1 += 1,
                        Counter::C2 => c.c2 += 1,
                    }
                    c.pc = *next;
                    c
                }
                Instr::Dec { counter, next } => {
                    let mut c = cur;
                    match counter {
                        Counter::C1 => c.c1 = c.c1.saturating_sub(1),
                        Counter::C2 => c.c2 = c.c2.saturating_sub(1),
                    }
                    c.pc = *next;
                    c
                }
                Instr::Jz { counter, if_zero, if_pos } => {
                    let mut c = cur;
                    c.pc = if cur.counter(*counter) == 0 { *if_zero } else { *if_pos };
                    c
                }
            };
            self.trace.push(next);
        }
        Ok(self.trace[step])
    }

    fn planned_dwell(&mut self, kind: DwellKind, step: usize) -> Result<Rat, SimError> {
        let cfg = self.config_at(step)?;
        let mut t = match kind {
            DwellKind::IncB(c) => {
                // 1/2^(c+1)
                let c = cfg.counter(c);
                rat(1, 1) / pow2(c + 1)
            }
            DwellKind::DecEntry(c) => {
                let c = cfg.counter(c);
                debug_assert!(c >= 1, "decrement of a zero counter is rejected at parse time");
                Rat::one() - rat(1, 1) / pow2(c - 1)
            }
        };
        if let Some((j, eps)) = &self.perturbation {
            if *j == step + 1 {
                t += eps;
            }
        }
        Ok(t)
    }
}

fn pow2(e: u64) -> Rat {
    let mut r = Rat::one();
    for _ in 0..e {
        r *= rat_int(2);
    }
    r
}

fn pow3(e: u64) -> Rat {
    let mut r = Rat::one();
    for _ in 0..e {
        r *= rat_int(3);
    }
    r
}

/// `1/(2^(k+c1) 3^(k+c2))`, the time-bounded counter encoding.
pub fn tb_encoding(k: u64, c1: u64, c2: u64) -> Rat {
    Rat::one() / (pow2(k + c1) * pow3(k + c2))
}

impl<T: TimeOps + 'static> Strategy<T> for FaithfulOneHalf {
    fn reset(&mut self) {
        self.step_idx = None;
        self.at_entry = false;
        self.pending = None;
    }

    fn decide(&mut self, stg: &Stg, state: &crate::model::State<T>) -> Result<Move<T>, SimError> {
        let loc = state.location;
        let is_entry = self.meta.entry_of.contains_key(&loc);
        if is_entry {
            if !self.at_entry {
                self.step_idx = Some(self.step_idx.map_or(0, |s| s + 1));
                self.at_entry = true;
                self.pending = None;
            }
        } else {
            self.at_entry = false;
        }
        let step = self.step_idx.unwrap_or(0);
        let rule = self
            .meta
            .rules
            .get(&loc)
            .ok_or_else(|| SimError::StrategyExhausted(stg.location(loc).name.clone()))?
            .clone();
        match rule {
            DiamondRule::AnchorExit { exit, loops, loop_on_tie } => {
                let exit_delay = delay_to(state, exit.0, exit.1);
                if let Some((clock, value, edge)) = loops
                    .iter()
                    .filter_map(|(c, v, e)| {
                        let d = delay_to(state, *c, *v);
                        d.map(|d| (d, (*c, *v, *e)))
                    })
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .and_then(|(d, l)| {
                        let ed = exit_delay.clone()?;
                        let sooner = if loop_on_tie { d <= ed } else { d < ed };
                        if ed > T::zero() && sooner {
                            Some(l)
                        } else {
                            None
                        }
                    })
                {
                    return Ok((PlayerDelay::DelayToValue { clock, value }, edge));
                }
                Ok((PlayerDelay::DelayToValue { clock: exit.0, value: exit.1 }, exit.2))
            }
            DiamondRule::PlannedDwell { kind, exit, loops } => {
                let total = match self.pending.take() {
                    Some(rem) => rem,
                    None => self.planned_dwell(kind, step)?,
                };
                let total_t = crate::sim::rat_to_time::<T>(&total);
                // realign first when a loop landmark falls strictly inside
                for (c, v, e) in &loops {
                    if let Some(d) = delay_to(state, *c, *v) {
                        if d < total_t {
                            let d_rat = time_to_rat(&d);
                            self.pending = Some(&total - &d_rat);
                            return Ok((
                                PlayerDelay::DelayToValue { clock: *c, value: *v },
                                *e,
                            ));
                        }
                    }
                }
                Ok((PlayerDelay::Delay(total_t), exit))
            }
            DiamondRule::ZeroBranch { counter, zero, pos } => {
                let cfg = self.config_at(step)?;
                let edge = if cfg.counter(counter) == 0 { zero } else { pos };
                Ok((PlayerDelay::Delay(T::zero()), edge))
            }
        }
    }

    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(FaithfulOneHalf {
            meta: self.meta.clone(),
            machine: self.machine.clone(),
            perturbation: self.perturbation.clone(),
            trace: vec![Config { pc: 0, c1: 0, c2: 0 }],
            step_idx: None,
            at_entry: false,
            pending: None,
        })
    }
}

/// Delay until `clock` reads exactly `value`; `None` when the landmark has
/// passed.
fn delay_to<T: TimeOps>(state: &crate::model::State<T>, clock: Clock, value: u32) -> Option<T> {
    let cur = &state.valuation[clock.0];
    let tgt = T::from_u32(value);
    if tgt >= *cur {
        Some(tgt - cur.clone())
    } else {
        None
    }
}

fn time_to_rat<T: TimeOps + 'static>(t: &T) -> Rat {
    use std::any::Any;
    if let Some(r) = (t as &dyn Any).downcast_ref::<Rat>() {
        r.clone()
    } else if let Some(f) = (t as &dyn Any).downcast_ref::<f64>() {
        Rat::from_float(*f).unwrap_or_else(Rat::one)
    } else {
        unreachable!()
    }
}

/// Entry valuation of an increment GetProb instance for error `eps` at
/// counter values (c1, c2): (u, 0, 1-u', 0) with u = 1/2^(c+1) + eps on the
/// manipulated clock.
pub fn getprob_entry_valuation(
    kind: GadgetKind,
    counter: Counter,
    eps: &Rat,
    c_own: u64,
) -> Vec<Rat> {
    let r = roles(counter);
    let mut vals = vec![rat_int(0); 4];
    match kind {
        GadgetKind::IncrementGetProb => {
            let u = Rat::one() / pow2(c_own + 1) + eps;
            let w = Rat::one() - Rat::one() / pow2(c_own + 1) + eps;
            vals[r.own] = u;
            vals[X3] = w;
        }
        GadgetKind::DecrementGetProb => {
            let mu = Rat::one() / pow2(c_own);
            vals[r.other] = &mu - eps;
            vals[X3] = Rat::one() - mu;
        }
    }
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{
        estimate_reach, initial_state_f64, EstimateOptions, NoStrategy, SimLimits,
    };
    use crate::tcm::machine::parse_tcm;
    use crate::validate::check_wellformed;

    fn game(src: &str) -> (OneHalfGame, Arc<TwoCounterMachine>) {
        let m = Arc::new(parse_tcm(src).unwrap());
        (compile_onehalf(&m), m)
    }

    #[test]
    fn structural_audit() {
        let (g, _) = game("l0: inc c1 goto l1\nl1: halt");
        assert_eq!(g.stg.clocks.len(), 4);
        assert!(g.stg.locations.iter().all(|l| l.owner != Owner::Box));
        let rep = check_wellformed(&g.stg);
        assert!(rep.ok(), "{:?}", rep.findings);
    }

    #[test]
    fn faithful_entry_invariant_exact() {
        // inc c1; inc c2; zero test; dec c1; halt: exact rational replay.
        let (g, m) = game(
            "l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: jz c1 l4 l3\nl3: dec c1 goto l4\nl4: halt",
        );
        let meta = Arc::new(g.meta.clone());
        let mut strat = FaithfulOneHalf::new(m, meta, None);
        <FaithfulOneHalf as Strategy<Rat>>::reset(&mut strat);
        let mut state = crate::sim::initial_state_exact(&g.stg);
        let entry_vals = |c1: u64, c2: u64| {
            vec![Rat::one() / pow2(c1), Rat::one() / pow2(c2), rat_int(0), rat_int(0)]
        };
        assert_eq!(state.valuation, entry_vals(0, 0));
        let mut entries_seen = 0;
        for _ in 0..200 {
            if g.stg.location(state.location).owner == Owner::Diamond
                && !g.stg.is_target(state.location)
            {
                let (d, e) = strat.decide(&g.stg, &state).unwrap();
                let (next, _) = crate::sim::step(&g.stg, &state, &d, e).unwrap();
                state = next;
            } else if g.stg.location(state.location).owner == Owner::Stochastic {
                // take the continuation branch of the split nodes
                let cont = g
                    .stg
                    .edges_from(state.location)
                    .find(|(_, e)| {
                        let t = g.stg.location(e.target).name.clone();
                        t.ends_with(".D") || g.meta.entry_of.contains_key(&e.target)
                    })
                    .map(|(id, _)| id);
                match cont {
                    Some(edge) => {
                        let (next, _) = crate::sim::step(
                            &g.stg,
                            &state,
                            &PlayerDelay::Delay(rat_int(0)),
                            edge,
                        )
                        .unwrap();
                        state = next;
                    }
                    None => break, // halt reached
                }
            } else {
                break;
            }
            if g.meta.entry_of.contains_key(&state.location) {
                entries_seen += 1;
                match entries_seen {
                    1 => assert_eq!(state.valuation, entry_vals(1, 0), "after inc c1"),
                    2 => assert_eq!(state.valuation, entry_vals(1, 1), "after inc c2"),
                    3 => assert_eq!(state.valuation, entry_vals(1, 1), "after zero test"),
                    4 => assert_eq!(state.valuation, entry_vals(0, 1), "after dec c1"),
                    _ => {}
                }
            }
        }
        assert!(entries_seen >= 4, "replay traversed all four modules");
    }

    #[test]
    fn getprob_faithful_is_half() {
        let (g, m) = game("l0: inc c1 goto l1\nl1: halt");
        let gp = &g.meta.gadgets[0];
        let meta = Arc::new(g.meta.clone());
        let vals = getprob_entry_valuation(gp.kind, gp.counter, &rat_int(0), 0);
        let from = crate::model::State::new(
            gp.entry,
            vals.iter().map(crate::rat::rat_to_f64).collect(),
        );
        let strat = FaithfulOneHalf::new(m, meta, None);
        let opts = EstimateOptions {
            samples: 40_000,
            confidence: 0.99,
            seed: 11,
            limits: SimLimits::default(),
        };
        let est = estimate_reach(&g.stg, &from, &strat, &NoStrategy, &opts).unwrap();
        assert!(
            (est.point - 0.5).abs() < 0.01,
            "GetProb at eps=0 estimated {}",
            est.point
        );
    }

    #[test]
    fn whole_game_faithful_hits_three_eighths() {
        // inc c1; inc c2; halt: faithful probability 1/4 + 1/8 = 3/8.
        let (g, m) = game("l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: halt");
        let meta = Arc::new(g.meta.clone());
        let strat = FaithfulOneHalf::new(m, meta, None);
        let opts = EstimateOptions {
            samples: 40_000,
            confidence: 0.99,
            seed: 5,
            limits: SimLimits::default(),
        };
        let est =
            estimate_reach(&g.stg, &initial_state_f64(&g.stg), &strat, &NoStrategy, &opts)
                .unwrap();
        assert!((est.point - 0.375).abs() < 0.01, "estimated {}", est.point);
    }
}
