//! Compiles two-counter machines into 5-clock 2.5-player games with uniform
//! distributions and a global time horizon: Box verifies the simulation via
//! check widgets, every faithful run finishes within 5 time units.
//!
//! Counter values ride on x1/x2 in alternation (even steps read x1, odd steps
//! x2), z tracks the instruction count as 1 - 1/2^k, and a/b are auxiliary.

use super::machine::{Config, Counter, Instr, TwoCounterMachine};
use crate::interval::TimeOps;
use crate::model::{
    Clock, ClockConstraint, DistributionSpec, Edge, EdgeId, Location, LocationId, Owner, State,
    Stg,
};
use crate::rat::{rat_int, Rat};
use crate::sim::{Move, PlayerDelay, SimError, Strategy};
use num_traits::One;
use std::collections::BTreeMap;
use std::sync::Arc;

pub const TX1: usize = 0;
pub const TX2: usize = 1;
pub const TZ: usize = 2;
pub const TA: usize = 3;
pub const TB: usize = 4;

fn cname(i: usize) -> &'static str {
    ["x1", "x2", "z", "a", "b"][i]
}

/// Check-x weight for each instruction kind: the carried value must shrink by
/// the divisor 1 + weight.
pub fn weight_for(instr: &Instr) -> u64 {
    match instr {
        Instr::Inc { counter: Counter::C1, .. } => 11,
        Instr::Inc { counter: Counter::C2, .. } => 17,
        Instr::Dec { counter: Counter::C1, .. } => 2,
        Instr::Dec { counter: Counter::C2, .. } => 1,
        Instr::Jz { .. } => 5,
        Instr::Halt => 0,
    }
}

#[derive(Debug, Clone)]
pub enum TbRule {
    /// Module entry: dwell 1/2^(k+1) - n/d.
    PlannedT1 { divisor: u64, edge: EdgeId },
    /// Module location B: dwell n/d (the new encoded value).
    PlannedT2 { divisor: u64, edge: EdgeId },
    /// Zero-check guess at location D.
    ZeroGuess { counter: Counter, zero: EdgeId, pos: EdgeId },
    /// Leave immediately over a fixed edge.
    ZeroDelayEdge { edge: EdgeId },
    /// Wait until the clock reads the landmark.
    AnchorExit { clock: Clock, value: u32, edge: EdgeId },
    /// Multiply loop: dwell (factor-1) * carrier, exit when the carrier
    /// reads 1.
    MulDwell { carrier: Clock, factor_minus_one: u32, loop_edge: EdgeId, exit_edge: EdgeId },
    /// Rem first wait: dwell a - 6*carrier.
    RemWait1 { carrier: Clock, edge: EdgeId },
    /// Rem second wait: dwell 6*carrier.
    RemWait2 { carrier: Clock, edge: EdgeId },
}

#[derive(Debug, Clone)]
pub enum TbBoxRole {
    MainCheck { cont: EdgeId, checkz: EdgeId, checkx: EdgeId },
    GuessBox { cont: EdgeId, rem: EdgeId },
    RemCheck { iterate: EdgeId, finish: EdgeId },
    WidLoop { back: EdgeId },
    /// Take the first edge enabled with zero delay.
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidgetKind {
    CheckZ,
    CheckX { divisor: u64 },
    Wid { factor: u32 },
}

#[derive(Debug, Clone)]
pub struct WidgetEntry {
    pub instr: usize,
    pub parity: u8,
    pub kind: WidgetKind,
    pub entry: LocationId,
    /// clock carrying the freshly written value at widget entry
    pub carrier: Clock,
}

#[derive(Debug, Clone)]
pub struct TbMeta {
    pub diamond_rules: BTreeMap<LocationId, TbRule>,
    pub box_rules: BTreeMap<LocationId, TbBoxRole>,
    pub entry_of: BTreeMap<LocationId, (usize, u8)>,
    pub entries: BTreeMap<(usize, u8), LocationId>,
    pub widgets: Vec<WidgetEntry>,
}

pub struct TbGame {
    pub stg: Stg,
    pub meta: TbMeta,
}

struct Builder {
    clocks: Vec<String>,
    locations: Vec<Location>,
    edges: Vec<Edge>,
    distributions: BTreeMap<LocationId, DistributionSpec>,
    meta: TbMeta,
}

impl Builder {
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

    fn chance(&mut self, name: &str, invariant: &str) -> LocationId {
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
}

struct Shared {
    target: LocationId,
    sink: LocationId,
}

/// `Check z` widget: pass probability (1/2)(1-t) + (1/4)/2^k for t = a.
fn build_checkz(b: &mut Builder, pfx: &str, sh: &Shared) -> LocationId {
    let a0 = b.chance(&format!("{pfx}.A0"), "b = 0");
    let b0 = b.chance(&format!("{pfx}.B0"), "b <= 1");
    let d0 = b.chance(&format!("{pfx}.D0"), "b = 0");
    let e0 = b.loc(&format!("{pfx}.E0"), Owner::Diamond, "true");
    let f0 = b.chance(&format!("{pfx}.F0"), "b <= 1");
    b.edge(&format!("{pfx}.top"), a0, "true", &[], b0, 1);
    b.edge(&format!("{pfx}.bot"), a0, "true", &[], d0, 1);
    b.edge(&format!("{pfx}.hit1"), b0, "a <= 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss1"), b0, "a > 1", &[], sh.sink, 1);
    b.edge(&format!("{pfx}.dead"), d0, "true", &[], sh.sink, 1);
    b.edge(&format!("{pfx}.go"), d0, "true", &[], e0, 1);
    let anchor = b.edge(&format!("{pfx}.arm"), e0, "a = 1", &[TB], f0, 1);
    b.meta
        .diamond_rules
        .insert(e0, TbRule::AnchorExit { clock: Clock(TA), value: 1, edge: anchor });
    b.edge(&format!("{pfx}.hit2"), f0, "z <= 2", &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss2"), f0, "z > 2", &[], sh.sink, 1);
    a0
}

/// `Check x` widget with weight W: pass probability
/// (1/2)(1-t2) + n/(2(1+W)) for t2 carried by `xout` and n by `xin`.
fn build_checkx(
    b: &mut Builder,
    pfx: &str,
    xin: usize,
    xout: usize,
    weight: u64,
    sh: &Shared,
) -> LocationId {
    let a1 = b.chance(&format!("{pfx}.A1"), "b = 0");
    let b1 = b.chance(&format!("{pfx}.B1"), "b <= 1");
    let f1 = b.chance(&format!("{pfx}.F1"), "b = 0");
    let c1 = b.loc(&format!("{pfx}.C1"), Owner::Diamond, "true");
    let d1 = b.loc(&format!("{pfx}.D1"), Owner::Diamond, "true");
    let e1 = b.chance(&format!("{pfx}.E1"), "b <= 1");
    b.edge(&format!("{pfx}.top"), a1, "true", &[], b1, 1);
    b.edge(&format!("{pfx}.bot"), a1, "true", &[], f1, 1);
    b.edge(&format!("{pfx}.hit1"), b1, &format!("{} <= 1", cname(xout)), &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss1"), b1, &format!("{} > 1", cname(xout)), &[], sh.sink, 1);
    b.edge(&format!("{pfx}.keep"), f1, "true", &[], c1, 1);
    b.edge(&format!("{pfx}.drop"), f1, "true", &[], sh.sink, weight);
    let arm = b.edge(&format!("{pfx}.arm"), c1, "a = 1", &[TA], d1, 1);
    b.meta
        .diamond_rules
        .insert(c1, TbRule::AnchorExit { clock: Clock(TA), value: 1, edge: arm });
    let arm2 = b.edge(
        &format!("{pfx}.arm2"),
        d1,
        &format!("{} = 2", cname(xin)),
        &[TB],
        e1,
        1,
    );
    b.meta
        .diamond_rules
        .insert(d1, TbRule::AnchorExit { clock: Clock(xin), value: 2, edge: arm2 });
    b.edge(&format!("{pfx}.hit2"), e1, "a <= 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss2"), e1, "a > 1", &[], sh.sink, 1);
    a1
}

/// `Mul a` widget: target probability (1/2)s + (1/2)(1 - a0) for the sojourn
/// sum s carried by z and the widget-entry value a0 of clock a.
fn build_mula(b: &mut Builder, pfx: &str, sh: &Shared) -> LocationId {
    let ma = b.chance(&format!("{pfx}.A"), "b = 0");
    let b3 = b.chance(&format!("{pfx}.B3"), "b <= 1");
    let c3 = b.loc(&format!("{pfx}.C3"), Owner::Diamond, "true");
    let d3 = b.loc(&format!("{pfx}.D3"), Owner::Diamond, "true");
    let e3 = b.chance(&format!("{pfx}.E3"), "b <= 1");
    b.edge(&format!("{pfx}.top"), ma, "true", &[], b3, 1);
    b.edge(&format!("{pfx}.bot"), ma, "true", &[], c3, 1);
    b.edge(&format!("{pfx}.hit1"), b3, "z > 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss1"), b3, "z <= 1", &[], sh.sink, 1);
    let arm = b.edge(&format!("{pfx}.arm"), c3, "z = 1", &[TZ], d3, 1);
    b.meta
        .diamond_rules
        .insert(c3, TbRule::AnchorExit { clock: Clock(TZ), value: 1, edge: arm });
    let arm2 = b.edge(&format!("{pfx}.arm2"), d3, "a = 2", &[TB], e3, 1);
    b.meta
        .diamond_rules
        .insert(d3, TbRule::AnchorExit { clock: Clock(TA), value: 2, edge: arm2 });
    b.edge(&format!("{pfx}.hit2"), e3, "z > 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss2"), e3, "z <= 1", &[], sh.sink, 1);
    ma
}

/// `Mul x` widget: target probability (1/2)(1-n) + (1/12) t2 for the entry
/// carrier n in `xc` and the fresh value t2 in `xb`.
fn build_mulx(b: &mut Builder, pfx: &str, xb: usize, xc: usize, sh: &Shared) -> LocationId {
    let a4 = b.chance(&format!("{pfx}.A4"), "b = 0");
    let b4 = b.loc(&format!("{pfx}.B4"), Owner::Diamond, "true");
    let c4 = b.chance(&format!("{pfx}.C4"), "z <= 1");
    let h = b.chance(&format!("{pfx}.H"), "b = 0");
    let e4 = b.chance(&format!("{pfx}.E4"), "b <= 1");
    b.edge(&format!("{pfx}.top"), a4, "true", &[], b4, 1);
    b.edge(&format!("{pfx}.bot"), a4, "true", &[], h, 1);
    let arm = b.edge(&format!("{pfx}.arm"), b4, "z = 1", &[TZ], c4, 1);
    b.meta
        .diamond_rules
        .insert(b4, TbRule::AnchorExit { clock: Clock(TZ), value: 1, edge: arm });
    b.edge(&format!("{pfx}.hit1"), c4, &format!("{} <= 2", cname(xc)), &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss1"), c4, &format!("{} > 2", cname(xc)), &[], sh.sink, 1);
    b.edge(&format!("{pfx}.keep"), h, "true", &[], e4, 1);
    b.edge(&format!("{pfx}.drop"), h, "true", &[], sh.sink, 5);
    b.edge(&format!("{pfx}.hit2"), e4, &format!("{} >= 1", cname(xb)), &[], sh.target, 1);
    b.edge(&format!("{pfx}.miss2"), e4, &format!("{} < 1", cname(xb)), &[], sh.sink, 1);
    a4
}

/// Multiply-verdict widget: an A5/B5 multiply loop with a J5 spot check and
/// an E5 verdict at carrier = 1; the positive-guess variant interposes a
/// doubling loop before the verdict coin.
fn build_wid(
    b: &mut Builder,
    pfx: &str,
    xcar: usize,
    guess_zero: bool,
    sh: &Shared,
) -> LocationId {
    let car = cname(xcar);
    let a5 = b.loc(&format!("{pfx}.A5"), Owner::Diamond, "true");
    let b5 = b.loc(&format!("{pfx}.B5"), Owner::Box, "b = 0");
    let e5 = b.loc(&format!("{pfx}.E5"), Owner::Box, "b = 0");
    let j5 = b.chance(&format!("{pfx}.J5"), "b = 0");
    let k5 = b.chance(&format!("{pfx}.K5"), "b = 0");
    let l5 = b.chance(&format!("{pfx}.L5"), "b <= 1");
    let p5 = b.loc(&format!("{pfx}.P5"), Owner::Diamond, "true");
    let q5 = b.loc(&format!("{pfx}.Q5"), Owner::Diamond, "true");
    let r5 = b.chance(&format!("{pfx}.R5"), "b <= 1");
    let g5 = b.chance(&format!("{pfx}.G5"), "b = 0");

    let to_b5 = b.edge(&format!("{pfx}.loopin"), a5, &format!("{car} <= 1"), &[TB], b5, 1);
    let to_e5 = b.edge(&format!("{pfx}.verdict"), a5, &format!("{car} <= 1"), &[TB], e5, 1);
    b.edge(&format!("{pfx}.over"), a5, &format!("{car} > 1"), &[], sh.sink, 1);
    b.meta.diamond_rules.insert(
        a5,
        TbRule::MulDwell {
            carrier: Clock(xcar),
            factor_minus_one: 2,
            loop_edge: to_b5,
            exit_edge: to_e5,
        },
    );
    let back = b.edge(&format!("{pfx}.back"), b5, &format!("{car} <= 1"), &[TA], a5, 1);
    b.edge(&format!("{pfx}.spot"), b5, "true", &[], j5, 1);
    b.meta.box_rules.insert(b5, TbBoxRole::WidLoop { back });

    b.edge(&format!("{pfx}.j.k"), j5, "true", &[], k5, 1);
    b.edge(&format!("{pfx}.j.p"), j5, "true", &[], p5, 1);
    b.edge(&format!("{pfx}.k.l"), k5, "true", &[], l5, 1);
    b.edge(&format!("{pfx}.k.dead"), k5, "true", &[], sh.sink, 1);
    b.edge(&format!("{pfx}.l.hit"), l5, "a <= 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.l.miss"), l5, "a > 1", &[], sh.sink, 1);
    let arm = b.edge(&format!("{pfx}.p.arm"), p5, "a = 1", &[TA], q5, 1);
    b.meta
        .diamond_rules
        .insert(p5, TbRule::AnchorExit { clock: Clock(TA), value: 1, edge: arm });
    let arm2 = b.edge(&format!("{pfx}.q.arm"), q5, &format!("{car} = 2"), &[TB], r5, 1);
    b.meta
        .diamond_rules
        .insert(q5, TbRule::AnchorExit { clock: Clock(xcar), value: 2, edge: arm2 });
    b.edge(&format!("{pfx}.r.hit"), r5, "a <= 1", &[], sh.target, 1);
    b.edge(&format!("{pfx}.r.miss"), r5, "a > 1", &[], sh.sink, 1);

    b.edge(&format!("{pfx}.coin.hit"), g5, "true", &[], sh.target, 1);
    b.edge(&format!("{pfx}.coin.miss"), g5, "true", &[], sh.sink, 1);

    if guess_zero {
        b.edge(&format!("{pfx}.eq"), e5, &format!("{car} = 1"), &[], g5, 1);
        b.edge(&format!("{pfx}.lt"), e5, &format!("{car} < 1"), &[], sh.sink, 1);
    } else {
        // positive guess: carrier = 1 after the sixfold rebuild means both
        // counters were zero, i.e. the guess was wrong
        b.edge(&format!("{pfx}.eq"), e5, &format!("{car} = 1"), &[], sh.sink, 1);
        let dbl = build_double_loop(b, &format!("{pfx}.dbl"), xcar, g5, sh);
        b.edge(&format!("{pfx}.lt"), e5, &format!("{car} < 1"), &[], dbl, 1);
    }
    b.meta.box_rules.insert(e5, TbBoxRole::Forced);
    a5
}

/// Doubling loop of the positive-guess verdict: multiply the carrier by 2
/// until it reads 1, then flip the coin.
fn build_double_loop(
    b: &mut Builder,
    pfx: &str,
    xcar: usize,
    coin: LocationId,
    sh: &Shared,
) -> LocationId {
    let car = cname(xcar);
    let a = b.loc(&format!("{pfx}.A"), Owner::Diamond, "true");
    let lb = b.loc(&format!("{pfx}.B"), Owner::Box, "b = 0");
    let e = b.loc(&format!("{pfx}.E"), Owner::Box, "b = 0");
    let to_b = b.edge(&format!("{pfx}.loopin"), a, &format!("{car} <= 1"), &[TB], lb, 1);
    let to_e = b.edge(&format!("{pfx}.verdict"), a, &format!("{car} <= 1"), &[TB], e, 1);
    b.edge(&format!("{pfx}.over"), a, &format!("{car} > 1"), &[], sh.sink, 1);
    b.meta.diamond_rules.insert(
        a,
        TbRule::MulDwell {
            carrier: Clock(xcar),
            factor_minus_one: 1,
            loop_edge: to_b,
            exit_edge: to_e,
        },
    );
    let back = b.edge(&format!("{pfx}.back"), lb, &format!("{car} <= 1"), &[TA], a, 1);
    b.meta.box_rules.insert(lb, TbBoxRole::WidLoop { back });
    b.edge(&format!("{pfx}.eq"), e, &format!("{car} = 1"), &[], coin, 1);
    b.edge(&format!("{pfx}.lt"), e, &format!("{car} < 1"), &[], sh.sink, 1);
    b.meta.box_rules.insert(e, TbBoxRole::Forced);
    a
}

struct RemIds {
    entry: LocationId,
    check: LocationId,
}

/// Rem widget: rebuilds the carried value multiplied by 6 on the build clock
/// while the instruction counter in `a` doubles; iterate/finish edges are
/// wired by the caller.
fn build_rem(b: &mut Builder, pfx: &str, xb: usize, xc: usize, sh: &Shared) -> RemIds {
    let w1 = b.loc(&format!("{pfx}.A0"), Owner::Diamond, "true");
    let w2 = b.loc(&format!("{pfx}.B2"), Owner::Diamond, "true");
    let ck = b.loc(&format!("{pfx}.chk"), Owner::Box, "b = 0");
    let t1 = b.edge(&format!("{pfx}.t1"), w1, &format!("{} <= 1", cname(xb)), &[xb], w2, 1);
    b.meta.diamond_rules.insert(w1, TbRule::RemWait1 { carrier: Clock(xc), edge: t1 });
    let t2 = b.edge(&format!("{pfx}.t2"), w2, &format!("{} <= 1", cname(xb)), &[TB], ck, 1);
    b.meta.diamond_rules.insert(w2, TbRule::RemWait2 { carrier: Clock(xc), edge: t2 });
    let mula = build_mula(b, &format!("{pfx}.ma"), sh);
    let mulx = build_mulx(b, &format!("{pfx}.mx"), xb, xc, sh);
    b.edge(&format!("{pfx}.tomula"), ck, "true", &[], mula, 1);
    b.edge(&format!("{pfx}.tomulx"), ck, "true", &[], mulx, 1);
    RemIds { entry: w1, check: ck }
}

/// Compiles the time-bounded game (advertised global bound 5).
pub fn compile_timebounded(m: &TwoCounterMachine) -> TbGame {
    let mut b = Builder {
        clocks: ["x1", "x2", "z", "a", "b"].iter().map(|s| s.to_string()).collect(),
        locations: vec![],
        edges: vec![],
        distributions: BTreeMap::new(),
        meta: TbMeta {
            diamond_rules: BTreeMap::new(),
            box_rules: BTreeMap::new(),
            entry_of: BTreeMap::new(),
            entries: BTreeMap::new(),
            widgets: vec![],
        },
    };

    let target = b.loc("target", Owner::Diamond, "true");
    let sink = b.chance("sink", "b <= 2");
    b.edge("sink.loop", sink, "true", &[TB], sink, 1);
    let sh = Shared { target, sink };

    for (i, _) in m.instrs.iter().enumerate() {
        for p in 0..2u8 {
            let name = format!("{}{}", m.labels[i], if p == 0 { "" } else { "~" });
            let id = b.loc(&name, Owner::Diamond, "true");
            b.meta.entry_of.insert(id, (i, p));
            b.meta.entries.insert((i, p), id);
        }
    }

    for (i, instr) in m.instrs.iter().enumerate() {
        for p in 0..2u8 {
            let label = format!("{}{}", m.labels[i], if p == 0 { "" } else { "~" });
            let entry = b.meta.entries[&(i, p)];
            let (xin, xout) = if p == 0 { (TX1, TX2) } else { (TX2, TX1) };
            match instr {
                Instr::Halt => {
                    let a = b.chance(&format!("{label}.A"), "b = 0");
                    let go = b.edge(&format!("{label}.go"), entry, "true", &[TB], a, 1);
                    b.meta.diamond_rules.insert(entry, TbRule::ZeroDelayEdge { edge: go });
                    b.edge(&format!("{label}.hit"), a, "true", &[], target, 1);
                    b.edge(&format!("{label}.miss"), a, "true", &[], sink, 1);
                }
                Instr::Inc { next, .. } | Instr::Dec { next, .. } => {
                    let w = weight_for(instr);
                    let d = w + 1;
                    let loc_b = b.loc(&format!("{label}.B"), Owner::Diamond, "true");
                    let check = b.loc(&format!("{label}.Check"), Owner::Box, "b = 0");
                    let t1 = b.edge(&format!("{label}.t1"), entry, "a < 1", &[xout], loc_b, 1);
                    b.meta
                        .diamond_rules
                        .insert(entry, TbRule::PlannedT1 { divisor: d, edge: t1 });
                    let t2 = b.edge(&format!("{label}.t2"), loc_b, "a < 1", &[TB], check, 1);
                    b.meta
                        .diamond_rules
                        .insert(loc_b, TbRule::PlannedT2 { divisor: d, edge: t2 });

                    let cz = build_checkz(&mut b, &format!("{label}.cz"), &sh);
                    b.meta.widgets.push(WidgetEntry {
                        instr: i,
                        parity: p,
                        kind: WidgetKind::CheckZ,
                        entry: cz,
                        carrier: Clock(xout),
                    });
                    let cx = build_checkx(&mut b, &format!("{label}.cx"), xin, xout, w, &sh);
                    b.meta.widgets.push(WidgetEntry {
                        instr: i,
                        parity: p,
                        kind: WidgetKind::CheckX { divisor: d },
                        entry: cx,
                        carrier: Clock(xout),
                    });
                    let cont = b.edge(
                        &format!("{label}.cont"),
                        check,
                        "true",
                        &[xin, TA],
                        b.meta.entries[&(*next, 1 - p)],
                        1,
                    );
                    let ez = b.edge(&format!("{label}.goz"), check, "true", &[], cz, 1);
                    let ex = b.edge(&format!("{label}.gox"), check, "true", &[], cx, 1);
                    b.meta
                        .box_rules
                        .insert(check, TbBoxRole::MainCheck { cont, checkz: ez, checkx: ex });
                }
                Instr::Jz { counter, if_zero, if_pos } => {
                    let d = 6u64;
                    let loc_b = b.loc(&format!("{label}.B"), Owner::Diamond, "true");
                    let check = b.loc(&format!("{label}.Check"), Owner::Box, "b = 0");
                    let t1 = b.edge(&format!("{label}.t1"), entry, "a < 1", &[xout], loc_b, 1);
                    b.meta
                        .diamond_rules
                        .insert(entry, TbRule::PlannedT1 { divisor: d, edge: t1 });
                    let t2 = b.edge(&format!("{label}.t2"), loc_b, "a < 1", &[TB], check, 1);
                    b.meta
                        .diamond_rules
                        .insert(loc_b, TbRule::PlannedT2 { divisor: d, edge: t2 });

                    let cz = build_checkz(&mut b, &format!("{label}.cz"), &sh);
                    b.meta.widgets.push(WidgetEntry {
                        instr: i,
                        parity: p,
                        kind: WidgetKind::CheckZ,
                        entry: cz,
                        carrier: Clock(xout),
                    });
                    let cx = build_checkx(&mut b, &format!("{label}.cx"), xin, xout, 5, &sh);
                    b.meta.widgets.push(WidgetEntry {
                        instr: i,
                        parity: p,
                        kind: WidgetKind::CheckX { divisor: d },
                        entry: cx,
                        carrier: Clock(xout),
                    });

                    let guess = b.loc(&format!("{label}.D"), Owner::Diamond, "b = 0");
                    let dz = b.loc(&format!("{label}.D1"), Owner::Box, "b = 0");
                    let dp = b.loc(&format!("{label}.D2"), Owner::Box, "b = 0");
                    let cont = b.edge(&format!("{label}.cont"), check, "true", &[xin], guess, 1);
                    let ez = b.edge(&format!("{label}.goz"), check, "true", &[], cz, 1);
                    let ex = b.edge(&format!("{label}.gox"), check, "true", &[], cx, 1);
                    b.meta
                        .box_rules
                        .insert(check, TbBoxRole::MainCheck { cont, checkz: ez, checkx: ex });

                    let gz = b.edge(&format!("{label}.guessz"), guess, "true", &[], dz, 1);
                    let gp = b.edge(&format!("{label}.guessp"), guess, "true", &[], dp, 1);
                    b.meta
                        .diamond_rules
                        .insert(guess, TbRule::ZeroGuess { counter: *counter, zero: gz, pos: gp });

                    for (boxloc, guess_zero, branch) in
                        [(dz, true, *if_zero), (dp, false, *if_pos)]
                    {
                        let gn = if guess_zero { "z" } else { "p" };
                        let rem_a = build_rem(&mut b, &format!("{label}.rem{gn}a"), xin, xout, &sh);
                        let rem_b = build_rem(&mut b, &format!("{label}.rem{gn}b"), xout, xin, &sh);
                        let wid_a =
                            build_wid(&mut b, &format!("{label}.wid{gn}a"), xin, guess_zero, &sh);
                        let wid_b =
                            build_wid(&mut b, &format!("{label}.wid{gn}b"), xout, guess_zero, &sh);
                        if guess_zero {
                            b.meta.widgets.push(WidgetEntry {
                                instr: i,
                                parity: p,
                                kind: WidgetKind::Wid { factor: 3 },
                                entry: wid_a,
                                carrier: Clock(xin),
                            });
                        }
                        let it_a = b.edge(
                            &format!("{label}.rem{gn}a.iter"),
                            rem_a.check,
                            "a < 1",
                            &[TZ, xout],
                            rem_b.entry,
                            1,
                        );
                        let fin_a = b.edge(
                            &format!("{label}.rem{gn}a.fin"),
                            rem_a.check,
                            "a = 1",
                            &[TA],
                            wid_a,
                            1,
                        );
                        b.meta
                            .box_rules
                            .insert(rem_a.check, TbBoxRole::RemCheck { iterate: it_a, finish: fin_a });
                        let it_b = b.edge(
                            &format!("{label}.rem{gn}b.iter"),
                            rem_b.check,
                            "a < 1",
                            &[TZ, xin],
                            rem_a.entry,
                            1,
                        );
                        let fin_b = b.edge(
                            &format!("{label}.rem{gn}b.fin"),
                            rem_b.check,
                            "a = 1",
                            &[TA],
                            wid_b,
                            1,
                        );
                        b.meta
                            .box_rules
                            .insert(rem_b.check, TbBoxRole::RemCheck { iterate: it_b, finish: fin_b });

                        let cont = b.edge(
                            &format!("{label}.{gn}cont"),
                            boxloc,
                            "true",
                            &[TA],
                            b.meta.entries[&(branch, 1 - p)],
                            1,
                        );
                        let rem = b.edge(
                            &format!("{label}.{gn}rem"),
                            boxloc,
                            "true",
                            &[TZ],
                            rem_a.entry,
                            1,
                        );
                        b.meta.box_rules.insert(boxloc, TbBoxRole::GuessBox { cont, rem });
                    }
                }
            }
        }
    }

    let initial = b.meta.entries[&(0, 0)];
    let init_val = vec![Rat::one(), rat_int(0), rat_int(0), rat_int(0), rat_int(0)];
    let stg = Stg {
        clocks: b.clocks,
        locations: b.locations,
        edges: b.edges,
        distributions: b.distributions,
        initial_location: initial,
        initial_valuation: init_val,
        targets: [target].into_iter().collect(),
    };
    TbGame { stg, meta: b.meta }
}

// ---- strategies ----

/// Faithful Diamond strategy for time-bounded games.
pub struct FaithfulTimebounded {
    meta: Arc<TbMeta>,
    machine: Arc<TwoCounterMachine>,
    /// 1-based step to perturb: eps is added to the second sojourn t2.
    pub perturbation: Option<(usize, Rat)>,
    trace: Vec<Config>,
    step_idx: Option<usize>,
    at_entry: bool,
    pending: Option<Rat>,
}

impl FaithfulTimebounded {
    pub fn new(
        machine: Arc<TwoCounterMachine>,
        meta: Arc<TbMeta>,
        perturbation: Option<(usize, Rat)>,
    ) -> Self {
        FaithfulTimebounded {
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

    /// t2 = n/d with n the new encoding numerator; t1 = 1/2^(k+1) - t2.
    fn dwell_parts(&mut self, step: usize, divisor: u64) -> Result<(Rat, Rat), SimError> {
        let cfg = self.config_at(step)?;
        let n = super::onehalf::tb_encoding(step as u64, cfg.c1, cfg.c2);
        let mut t2 = n / rat_int(divisor as i64);
        if let Some((j, eps)) = &self.perturbation {
            if *j == step + 1 {
                t2 += eps;
            }
        }
        let total = Rat::one() / pow2_rat(step as u64 + 1);
        let t1 = &total - &t2;
        Ok((t1, t2))
    }
}

fn pow2_rat(e: u64) -> Rat {
    let mut r = Rat::one();
    for _ in 0..e {
        r *= rat_int(2);
    }
    r
}

fn times<T: TimeOps>(v: &T, k: u32) -> T {
    let mut acc = T::zero();
    for _ in 0..k {
        acc = acc + v.clone();
    }
    acc
}

impl<T: TimeOps + 'static> Strategy<T> for FaithfulTimebounded {
    fn reset(&mut self) {
        self.step_idx = None;
        self.at_entry = false;
        self.pending = None;
    }

    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError> {
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
            .diamond_rules
            .get(&loc)
            .ok_or_else(|| SimError::StrategyExhausted(stg.location(loc).name.clone()))?
            .clone();
        match rule {
            TbRule::PlannedT1 { divisor, edge } => {
                let (t1, t2) = self.dwell_parts(step, divisor)?;
                self.pending = Some(t2);
                Ok((PlayerDelay::Delay(crate::sim::rat_to_time::<T>(&t1)), edge))
            }
            TbRule::PlannedT2 { divisor, edge } => {
                let t2 = match self.pending.take() {
                    Some(t2) => t2,
                    None => self.dwell_parts(step, divisor)?.1,
                };
                Ok((PlayerDelay::Delay(crate::sim::rat_to_time::<T>(&t2)), edge))
            }
            TbRule::ZeroGuess { counter, zero, pos } => {
                let cfg = self.config_at(step)?;
                let edge = if cfg.counter(counter) == 0 { zero } else { pos };
                Ok((PlayerDelay::Delay(T::zero()), edge))
            }
            TbRule::ZeroDelayEdge { edge } => Ok((PlayerDelay::Delay(T::zero()), edge)),
            TbRule::AnchorExit { clock, value, edge } => {
                Ok((PlayerDelay::DelayToValue { clock, value }, edge))
            }
            TbRule::MulDwell { carrier, factor_minus_one, loop_edge, exit_edge } => {
                let v = &state.valuation[carrier.0];
                let one = T::from_u32(1);
                let done = *v >= one.clone() - tolerance::<T>();
                if done {
                    Ok((PlayerDelay::Delay(T::zero()), exit_edge))
                } else {
                    Ok((PlayerDelay::Delay(times(v, factor_minus_one)), loop_edge))
                }
            }
            TbRule::RemWait1 { carrier, edge } => {
                let a = &state.valuation[TA];
                let six_c = times(&state.valuation[carrier.0], 6);
                let dwell = if *a >= six_c { a.clone() - six_c } else { T::zero() };
                Ok((PlayerDelay::Delay(dwell), edge))
            }
            TbRule::RemWait2 { carrier, edge } => {
                let dwell = times(&state.valuation[carrier.0], 6);
                Ok((PlayerDelay::Delay(dwell), edge))
            }
        }
    }

    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(FaithfulTimebounded {
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

fn tolerance<T: TimeOps + 'static>() -> T {
    use std::any::Any;
    let zero = T::zero();
    if (&zero as &dyn Any).downcast_ref::<f64>().is_some() {
        let t: Box<dyn Any> = Box::new(1e-9f64);
        *t.downcast::<T>().unwrap()
    } else {
        T::zero()
    }
}

/// Box policies shipped with the compiler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxPolicy {
    /// Always allow the simulation to continue.
    AlwaysContinue,
    /// Enter the `Check z` widget at the given 1-based step.
    CheckZAt(usize),
    /// Enter the `Check x` widget at the given step.
    CheckXAt(usize),
    /// Verify the zero-check guess at the given step (Rem/Wid chain).
    CheckGuessAt(usize),
}

pub struct TbBoxStrategy {
    meta: Arc<TbMeta>,
    pub policy: BoxPolicy,
    checks_seen: usize,
}

impl TbBoxStrategy {
    pub fn new(meta: Arc<TbMeta>, policy: BoxPolicy) -> Self {
        TbBoxStrategy { meta, policy, checks_seen: 0 }
    }
}

impl<T: TimeOps + 'static> Strategy<T> for TbBoxStrategy {
    fn reset(&mut self) {
        self.checks_seen = 0;
    }

    fn decide(&mut self, stg: &Stg, state: &State<T>) -> Result<Move<T>, SimError> {
        let role = self
            .meta
            .box_rules
            .get(&state.location)
            .ok_or_else(|| {
                SimError::StrategyExhausted(stg.location(state.location).name.clone())
            })?
            .clone();
        let zero = PlayerDelay::Delay(T::zero());
        match role {
            TbBoxRole::MainCheck { cont, checkz, checkx } => {
                self.checks_seen += 1;
                let edge = match self.policy {
                    BoxPolicy::CheckZAt(j) if j == self.checks_seen => checkz,
                    BoxPolicy::CheckXAt(j) if j == self.checks_seen => checkx,
                    _ => cont,
                };
                Ok((zero, edge))
            }
            TbBoxRole::GuessBox { cont, rem } => {
                let edge = match self.policy {
                    BoxPolicy::CheckGuessAt(j) if j == self.checks_seen => rem,
                    _ => cont,
                };
                Ok((zero, edge))
            }
            TbBoxRole::RemCheck { iterate, finish } => {
                let fin_iv = crate::model::enabled_interval(stg, state, finish);
                if fin_iv.contains(&T::zero()) {
                    Ok((zero, finish))
                } else {
                    Ok((zero, iterate))
                }
            }
            TbBoxRole::WidLoop { back } => Ok((zero, back)),
            TbBoxRole::Forced => {
                let (_, per_edge) = crate::model::enabled_set(stg, state);
                per_edge
                    .iter()
                    .find(|(_, iv)| iv.contains(&T::zero()))
                    .map(|(id, _)| (zero, *id))
                    .ok_or_else(|| {
                        SimError::StrategyExhausted(stg.location(state.location).name.clone())
                    })
            }
        }
    }

    fn clone_box(&self) -> Box<dyn Strategy<T>> {
        Box::new(TbBoxStrategy { meta: self.meta.clone(), policy: self.policy, checks_seen: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{
        estimate_reach, initial_state_f64, sample_many, EstimateOptions, SimLimits,
    };
    use crate::tcm::machine::parse_tcm;
    use crate::validate::check_wellformed;

    fn game(src: &str) -> (TbGame, Arc<TwoCounterMachine>) {
        let m = Arc::new(parse_tcm(src).unwrap());
        (compile_timebounded(&m), m)
    }

    #[test]
    fn structural_audit() {
        let (g, _) = game("l0: inc c1 goto l1\nl1: halt");
        assert_eq!(g.stg.clocks.len(), 5);
        assert!(g.stg.locations.iter().any(|l| l.owner == Owner::Box));
        let rep = check_wellformed(&g.stg);
        assert!(rep.ok(), "{:?}", rep.findings);
    }

    #[test]
    fn always_continue_gives_half() {
        // With Box always continuing, only the halt coin decides: 1/2.
        let (g, m) = game("l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: halt");
        let meta = Arc::new(g.meta.clone());
        let diamond = FaithfulTimebounded::new(m, meta.clone(), None);
        let boxp = TbBoxStrategy::new(meta, BoxPolicy::AlwaysContinue);
        let opts = EstimateOptions {
            samples: 20_000,
            confidence: 0.99,
            seed: 3,
            limits: SimLimits::default(),
        };
        let est =
            estimate_reach(&g.stg, &initial_state_f64(&g.stg), &diamond, &boxp, &opts).unwrap();
        assert!((est.point - 0.5).abs() < 0.015, "estimated {}", est.point);
    }

    #[test]
    fn checks_at_each_step_give_half() {
        let (g, m) = game("l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: halt");
        let meta = Arc::new(g.meta.clone());
        for (policy, name) in [
            (BoxPolicy::CheckZAt(1), "z@1"),
            (BoxPolicy::CheckZAt(2), "z@2"),
            (BoxPolicy::CheckXAt(1), "x@1"),
            (BoxPolicy::CheckXAt(2), "x@2"),
        ] {
            let diamond = FaithfulTimebounded::new(m.clone(), meta.clone(), None);
            let boxp = TbBoxStrategy::new(meta.clone(), policy);
            let opts = EstimateOptions {
                samples: 20_000,
                confidence: 0.99,
                seed: 7,
                limits: SimLimits::default(),
            };
            let est = estimate_reach(&g.stg, &initial_state_f64(&g.stg), &diamond, &boxp, &opts)
                .unwrap();
            assert!(
                (est.point - 0.5).abs() < 0.015,
                "{name} estimated {}",
                est.point
            );
        }
    }

    #[test]
    fn faithful_encoding_invariant_exact() {
        // exact rational replay along the continue path: at the start of the
        // (k+1)-th instruction the carrier clock holds 1/(2^(k+c1) 3^(k+c2)),
        // the other counter clock is 0, z = 1 - 1/2^k and a = b = 0
        let (g, m) = game(
            "l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: jz c1 l3 l3\nl3: dec c1 goto l4\nl4: halt",
        );
        let meta = Arc::new(g.meta.clone());
        let mut diamond = FaithfulTimebounded::new(m.clone(), meta.clone(), None);
        let mut boxp = TbBoxStrategy::new(meta.clone(), BoxPolicy::AlwaysContinue);
        <FaithfulTimebounded as Strategy<Rat>>::reset(&mut diamond);
        <TbBoxStrategy as Strategy<Rat>>::reset(&mut boxp);
        let mut state = crate::sim::initial_state_exact(&g.stg);
        let run = crate::tcm::machine::run_tcm(&m, 100).unwrap();
        let mut entries_seen = 0usize;
        for _ in 0..200 {
            if g.stg.is_target(state.location) {
                break;
            }
            let owner = g.stg.location(state.location).owner;
            let mv = match owner {
                Owner::Diamond => diamond.decide(&g.stg, &state),
                Owner::Box => boxp.decide(&g.stg, &state),
                Owner::Stochastic => break, // halt coin reached
            };
            let (d, e) = mv.unwrap();
            let (next, _) = crate::sim::step(&g.stg, &state, &d, e).unwrap();
            state = next;
            if let Some((i, p)) = g.meta.entry_of.get(&state.location) {
                entries_seen += 1;
                let k = entries_seen as u64;
                let cfg = run.configurations[entries_seen];
                assert_eq!(*i, cfg.pc, "entry {entries_seen} is the machine's pc");
                let n = super::super::onehalf::tb_encoding(k, cfg.c1, cfg.c2);
                let (xin, xout) = if *p == 0 { (TX1, TX2) } else { (TX2, TX1) };
                assert_eq!(state.valuation[xin], n, "carrier at step {k}");
                assert_eq!(state.valuation[xout], rat_int(0), "spectator at step {k}");
                let z_expected = Rat::one() - Rat::one() / pow2_rat(k);
                assert_eq!(state.valuation[TZ], z_expected, "z at step {k}");
                assert_eq!(state.valuation[TA], rat_int(0), "a at step {k}");
                assert_eq!(state.valuation[TB], rat_int(0), "b at step {k}");
            }
        }
        assert_eq!(entries_seen, 4, "replay reached the halt module");
    }

    #[test]
    fn faithful_time_never_exceeds_five() {
        let (g, m) = game("l0: inc c1 goto l1\nl1: inc c2 goto l2\nl2: halt");
        let meta = Arc::new(g.meta.clone());
        for policy in [
            BoxPolicy::AlwaysContinue,
            BoxPolicy::CheckZAt(1),
            BoxPolicy::CheckZAt(2),
            BoxPolicy::CheckXAt(1),
            BoxPolicy::CheckXAt(2),
        ] {
            let diamond = FaithfulTimebounded::new(m.clone(), meta.clone(), None);
            let boxp = TbBoxStrategy::new(meta.clone(), policy);
            let opts = EstimateOptions {
                samples: 2_000,
                confidence: 0.99,
                seed: 17,
                limits: SimLimits::default(),
            };
            let runs =
                sample_many(&g.stg, &initial_state_f64(&g.stg), &diamond, &boxp, &opts).unwrap();
            let max = runs.iter().map(|r| r.total_elapsed).fold(0.0, f64::max);
            assert!(max < 5.0, "policy {policy:?}: max elapsed {max}");
        }
    }
}
