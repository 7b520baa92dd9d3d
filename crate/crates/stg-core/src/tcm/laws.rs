//! Closed-form gadget probability laws with exact rational evaluation, plus
//! the entry-state builders and Monte Carlo harness used to verify each law
//! on the compiled games.

use super::machine::{Counter, Instr, TwoCounterMachine};
use super::onehalf::{self, GadgetKind, OneHalfGame};
use super::timebounded::{self, TbGame, WidgetKind};
use crate::model::State;
use crate::rat::{rat, rat_int, rat_to_f64, Rat};
use crate::sim::{estimate_reach, EstimateOptions, NoStrategy, ReachEstimate, SimLimits};
use num_traits::{One, Signed, Zero};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LawError {
    #[error("parameter out of the law's domain: {0}")]
    Domain(String),
    #[error("no gadget `{0}` in the compiled program")]
    NoSuchGadget(String),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

/// Names of the shipped laws.
pub const LAW_NAMES: &[&str] = &[
    "getprob-inc",
    "getprob-dec",
    "getprob-dec-stated",
    "checkz",
    "checkx",
    "zerotest",
    "wid0",
    "halt",
];

#[derive(Debug, Clone)]
pub struct LawParams {
    /// deviation from the faithful delay
    pub eps: Rat,
    /// completed instruction count (time-bounded laws)
    pub k: u64,
    pub c1: u64,
    pub c2: u64,
    /// Check-x divisor (12, 18, 3, 2 or 6)
    pub divisor: u64,
}

impl Default for LawParams {
    fn default() -> Self {
        LawParams { eps: Rat::zero(), k: 0, c1: 0, c2: 0, divisor: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct GadgetLaw {
    pub name: &'static str,
    pub description: &'static str,
}

/// The shipped law table.
pub fn gadget_laws() -> Vec<GadgetLaw> {
    vec![
        GadgetLaw {
            name: "getprob-inc",
            description: "increment GetProb: (1/2)(1 - 4 eps^2) on |eps| < 1/2^(c+1)",
        },
        GadgetLaw {
            name: "getprob-dec",
            description: "decrement GetProb: (1/2)(1 - eps^2) on |eps| < 1/2^c",
        },
        GadgetLaw {
            name: "getprob-dec-stated",
            description: "decrement GetProb, advertised closed form: (1/2)(1 - 2 eps^2); the \
                          construction satisfies (1/2)(1 - eps^2) instead - kept for the \
                          acceptance comparison",
        },
        GadgetLaw {
            name: "checkz",
            description: "Check z: (1/2)(1-t) + (1/4)/2^k at t = 1/2^(k+1) + eps",
        },
        GadgetLaw {
            name: "checkx",
            description: "Check x: (1/2)(1-t2) + n/(2d) at t2 = n/d + eps, n = 1/(2^(k+c1) 3^(k+c2))",
        },
        GadgetLaw { name: "zerotest", description: "zero-test branch nodes: constant 1/2" },
        GadgetLaw {
            name: "wid0",
            description: "Wid=0 spot check from J5: (1/4)(1-t) + m/2 at t = 2m + eps, \
                          m = 1/(2^c1 3^c2)",
        },
        GadgetLaw { name: "halt", description: "halt gadget: constant 1/2" },
    ]
}

fn pow2(e: u64) -> Rat {
    let mut r = Rat::one();
    for _ in 0..e {
        r *= rat_int(2);
    }
    r
}

/// Exact value of the named law at the given parameters.
pub fn law_value(name: &str, p: &LawParams) -> Result<Rat, LawError> {
    let half = rat(1, 2);
    match name {
        "getprob-inc" => {
            let bound = Rat::one() / pow2(p.c1 + 1);
            if p.eps.abs() >= bound {
                return Err(LawError::Domain(format!(
                    "|eps| must be < 1/2^{}",
                    p.c1 + 1
                )));
            }
            Ok(&half * (Rat::one() - rat_int(4) * &p.eps * &p.eps))
        }
        "getprob-dec" => {
            if p.c1 == 0 {
                return Err(LawError::Domain("decrement requires c1 >= 1".into()));
            }
            let bound = Rat::one() / pow2(p.c1);
            if p.eps.abs() >= bound {
                return Err(LawError::Domain(format!("|eps| must be < 1/2^{}", p.c1)));
            }
            Ok(&half * (Rat::one() - &p.eps * &p.eps))
        }
        "getprob-dec-stated" => {
            if p.c1 == 0 {
                return Err(LawError::Domain("decrement requires c1 >= 1".into()));
            }
            Ok(&half * (Rat::one() - rat_int(2) * &p.eps * &p.eps))
        }
        "checkz" => {
            let t = Rat::one() / pow2(p.k + 1) + &p.eps;
            if t.is_negative() || t > Rat::one() {
                return Err(LawError::Domain("t must lie in [0, 1]".into()));
            }
            Ok(&half * (Rat::one() - &t) + rat(1, 4) / pow2(p.k))
        }
        "checkx" => {
            let n = onehalf::tb_encoding(p.k, p.c1, p.c2);
            let t2 = &n / rat_int(p.divisor as i64) + &p.eps;
            if t2.is_negative() || t2 > Rat::one() {
                return Err(LawError::Domain("t2 must lie in [0, 1]".into()));
            }
            Ok(&half * (Rat::one() - &t2) + &n / rat_int(2 * p.divisor as i64))
        }
        "zerotest" | "halt" => Ok(half),
        "wid0" => {
            let m = Rat::one() / (pow2(p.c1) * pow3(p.c2));
            let t = rat_int(2) * &m + &p.eps;
            if t.is_negative() || t > Rat::one() {
                return Err(LawError::Domain("t must lie in [0, 1]".into()));
            }
            Ok(rat(1, 4) * (Rat::one() - &t) + &m * half)
        }
        other => Err(LawError::NoSuchGadget(other.to_string())),
    }
}

fn pow3(e: u64) -> Rat {
    let mut r = Rat::one();
    for _ in 0..e {
        r *= rat_int(3);
    }
    r
}

/// Result of one verification run.
#[derive(Debug, Clone)]
pub struct LawCheck {
    pub law: Rat,
    pub estimate: ReachEstimate,
    /// |estimate - law| expressed in binomial sigmas at the law value
    pub sigmas: f64,
    pub pass: bool,
}

fn check(law: Rat, estimate: ReachEstimate) -> LawCheck {
    let p = rat_to_f64(&law);
    let n = estimate.samples as f64;
    let sigma = (p * (1.0 - p) / n).sqrt().max(f64::EPSILON);
    let sigmas = (estimate.point - p).abs() / sigma;
    LawCheck { law, estimate, sigmas, pass: sigmas <= 3.0 }
}

fn opts(samples: u64, seed: u64) -> EstimateOptions {
    EstimateOptions { samples, confidence: 0.99, seed, limits: SimLimits::default() }
}

/// Monte Carlo verification of a GetProb gadget on a compiled onehalf game.
pub fn verify_getprob(
    game: &OneHalfGame,
    machine: &Arc<TwoCounterMachine>,
    kind: GadgetKind,
    p: &LawParams,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let law_name = match kind {
        GadgetKind::IncrementGetProb => "getprob-inc",
        GadgetKind::DecrementGetProb => "getprob-dec",
    };
    let law = law_value(law_name, p)?;
    let inst = game
        .meta
        .gadgets
        .iter()
        .find(|g| g.kind == kind)
        .ok_or_else(|| LawError::NoSuchGadget(law_name.to_string()))?;
    let c_own = match inst.counter {
        Counter::C1 => p.c1,
        Counter::C2 => p.c2,
    };
    let vals = onehalf::getprob_entry_valuation(kind, inst.counter, &p.eps, c_own);
    let from = State::new(inst.entry, vals.iter().map(rat_to_f64).collect());
    let meta = Arc::new(game.meta.clone());
    let strat = onehalf::FaithfulOneHalf::new(machine.clone(), meta, None);
    let est = estimate_reach(&game.stg, &from, &strat, &NoStrategy, &opts(samples, seed))?;
    Ok(check(law, est))
}

/// Monte Carlo verification of a zero-test branch node: target mass 1/2.
pub fn verify_zerotest(
    game: &OneHalfGame,
    machine: &Arc<TwoCounterMachine>,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let law = law_value("zerotest", &LawParams::default())?;
    let loc = game
        .stg
        .locations
        .iter()
        .position(|l| l.name.ends_with(".B1"))
        .ok_or_else(|| LawError::NoSuchGadget("zerotest".to_string()))?;
    // entered with x4 = 0 and the tested clock at 1
    let vals = vec![1.0, 1.0, 0.0, 0.0];
    let from = State::new(crate::model::LocationId(loc), vals);
    let meta = Arc::new(game.meta.clone());
    let strat = onehalf::FaithfulOneHalf::new(machine.clone(), meta, None);
    // only the immediate split matters: cap the run length
    let mut o = opts(samples, seed);
    o.limits.max_steps = 1;
    let est = estimate_reach(&game.stg, &from, &strat, &NoStrategy, &o)?;
    Ok(check(law, est))
}

/// Entry valuation of a `Check z` instance at step k+1 with sojourn t.
fn checkz_entry(k: u64, t: &Rat) -> Vec<Rat> {
    let z = Rat::one() - Rat::one() / pow2(k) + t;
    vec![Rat::zero(), Rat::zero(), z, t.clone(), Rat::zero()]
}

/// Entry valuation of a `Check x` instance: carriers n (in) and t2 (out).
fn checkx_entry(parity: u8, k: u64, c1: u64, c2: u64, t2: &Rat, t: &Rat) -> Vec<Rat> {
    let n = onehalf::tb_encoding(k, c1, c2);
    let mut v = vec![Rat::zero(), Rat::zero(), Rat::zero(), t.clone(), Rat::zero()];
    let (xin, xout) = if parity == 0 { (0, 1) } else { (1, 0) };
    v[xin] = &n + t;
    v[xout] = t2.clone();
    v
}

/// Monte Carlo verification of `Check z` on a compiled time-bounded game.
pub fn verify_checkz(
    game: &TbGame,
    machine: &Arc<TwoCounterMachine>,
    p: &LawParams,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let law = law_value("checkz", p)?;
    let w = game
        .meta
        .widgets
        .iter()
        .find(|w| w.kind == WidgetKind::CheckZ)
        .ok_or_else(|| LawError::NoSuchGadget("checkz".to_string()))?;
    let t = Rat::one() / pow2(p.k + 1) + &p.eps;
    let vals = checkz_entry(p.k, &t);
    let from = State::new(w.entry, vals.iter().map(rat_to_f64).collect());
    let meta = Arc::new(game.meta.clone());
    let diamond = timebounded::FaithfulTimebounded::new(machine.clone(), meta.clone(), None);
    let boxp = timebounded::TbBoxStrategy::new(meta, timebounded::BoxPolicy::AlwaysContinue);
    let est = estimate_reach(&game.stg, &from, &diamond, &boxp, &opts(samples, seed))?;
    Ok(check(law, est))
}

/// Monte Carlo verification of `Check x` with the instance's weight divisor.
pub fn verify_checkx(
    game: &TbGame,
    machine: &Arc<TwoCounterMachine>,
    p: &LawParams,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let w = game
        .meta
        .widgets
        .iter()
        .find_map(|w| match w.kind {
            WidgetKind::CheckX { divisor } if divisor == p.divisor => Some(w),
            _ => None,
        })
        .or_else(|| {
            game.meta
                .widgets
                .iter()
                .find(|w| matches!(w.kind, WidgetKind::CheckX { .. }))
        })
        .ok_or_else(|| LawError::NoSuchGadget("checkx".to_string()))?;
    let divisor = match w.kind {
        WidgetKind::CheckX { divisor } => divisor,
        _ => unreachable!(),
    };
    let mut p = p.clone();
    p.divisor = divisor;
    let law = law_value("checkx", &p)?;
    let n = onehalf::tb_encoding(p.k, p.c1, p.c2);
    let t2 = &n / rat_int(divisor as i64) + &p.eps;
    let t = Rat::one() / pow2(p.k + 1);
    let vals = checkx_entry(w.parity, p.k, p.c1, p.c2, &t2, &t);
    let from = State::new(w.entry, vals.iter().map(rat_to_f64).collect());
    let meta = Arc::new(game.meta.clone());
    let diamond = timebounded::FaithfulTimebounded::new(machine.clone(), meta.clone(), None);
    let boxp = timebounded::TbBoxStrategy::new(meta, timebounded::BoxPolicy::AlwaysContinue);
    let est = estimate_reach(&game.stg, &from, &diamond, &boxp, &opts(samples, seed))?;
    Ok(check(law, est))
}

/// Monte Carlo verification of the Wid=0 spot check from J5.
pub fn verify_wid0(
    game: &TbGame,
    machine: &Arc<TwoCounterMachine>,
    p: &LawParams,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let law = law_value("wid0", p)?;
    let w = game
        .meta
        .widgets
        .iter()
        .find(|w| matches!(w.kind, WidgetKind::Wid { .. }))
        .ok_or_else(|| LawError::NoSuchGadget("wid0".to_string()))?;
    // J5 of this widget instance: entered with a = t, carrier = m + t, b = 0
    let prefix = game.stg.location(w.entry).name.trim_end_matches(".A5").to_string();
    let j5 = game
        .stg
        .locations
        .iter()
        .position(|l| l.name == format!("{prefix}.J5"))
        .ok_or_else(|| LawError::NoSuchGadget("wid0.J5".to_string()))?;
    let m = Rat::one() / (pow2(p.c1) * pow3(p.c2));
    let t = rat_int(2) * &m + &p.eps;
    let mut vals = vec![Rat::zero(); 5];
    vals[timebounded::TA] = t.clone();
    vals[w.carrier.0] = &m + &t;
    let from =
        State::new(crate::model::LocationId(j5), vals.iter().map(rat_to_f64).collect());
    let meta = Arc::new(game.meta.clone());
    let diamond = timebounded::FaithfulTimebounded::new(machine.clone(), meta.clone(), None);
    let boxp = timebounded::TbBoxStrategy::new(meta, timebounded::BoxPolicy::AlwaysContinue);
    let est = estimate_reach(&game.stg, &from, &diamond, &boxp, &opts(samples, seed))?;
    Ok(check(law, est))
}

/// Monte Carlo verification of the halt coin on a time-bounded game.
pub fn verify_halt(
    game: &TbGame,
    machine: &Arc<TwoCounterMachine>,
    samples: u64,
    seed: u64,
) -> Result<LawCheck, LawError> {
    let law = law_value("halt", &LawParams::default())?;
    let halt = machine
        .instrs
        .iter()
        .position(|i| matches!(i, Instr::Halt))
        .ok_or_else(|| LawError::NoSuchGadget("halt".to_string()))?;
    let entry = game.meta.entries[&(halt, 0)];
    let from = State::new(entry, vec![0.0; 5]);
    let meta = Arc::new(game.meta.clone());
    let diamond = timebounded::FaithfulTimebounded::new(machine.clone(), meta.clone(), None);
    let boxp = timebounded::TbBoxStrategy::new(meta, timebounded::BoxPolicy::AlwaysContinue);
    let est = estimate_reach(&game.stg, &from, &diamond, &boxp, &opts(samples, seed))?;
    Ok(check(law, est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcm::machine::parse_tcm;
    use crate::tcm::onehalf::compile_onehalf;
    use crate::tcm::timebounded::compile_timebounded;

    #[test]
    fn law_values_match_pinned_points() {
        let mut p = LawParams::default();
        assert_eq!(law_value("getprob-inc", &p).unwrap(), rat(1, 2));
        p.eps = rat(1, 4);
        assert_eq!(law_value("getprob-inc", &p).unwrap(), rat(3, 8));
        p.eps = Rat::zero();
        for k in 0..3 {
            p.k = k;
            assert_eq!(law_value("checkz", &p).unwrap(), rat(1, 2), "k = {k}");
        }
        p.k = 0;
        p.divisor = 12;
        assert_eq!(law_value("checkx", &p).unwrap(), rat(1, 2));
        assert_eq!(law_value("zerotest", &p).unwrap(), rat(1, 2));
    }

    #[test]
    fn law_domain_errors() {
        let mut p = LawParams::default();
        p.eps = rat(1, 2);
        assert!(matches!(law_value("getprob-inc", &p), Err(LawError::Domain(_))));
        p.eps = Rat::zero();
        p.c1 = 0;
        assert!(matches!(law_value("getprob-dec", &p), Err(LawError::Domain(_))));
    }

    #[test]
    fn getprob_inc_law_verifies_at_two_epsilons() {
        let m = Arc::new(parse_tcm("l0: inc c1 goto l1\nl1: halt").unwrap());
        let g = compile_onehalf(&m);
        for (eps_n, eps_d) in [(0i64, 10i64), (1, 10)] {
            let mut p = LawParams::default();
            p.eps = rat(eps_n, eps_d);
            let chk =
                verify_getprob(&g, &m, GadgetKind::IncrementGetProb, &p, 60_000, 23).unwrap();
            assert!(
                chk.pass,
                "eps {eps_n}/{eps_d}: law {} vs estimate {} ({} sigmas)",
                rat_to_f64(&chk.law),
                chk.estimate.point,
                chk.sigmas
            );
        }
    }

    #[test]
    fn getprob_dec_matches_derived_law() {
        let m = Arc::new(
            parse_tcm("l0: inc c1 goto l1\nl1: dec c1 goto l2\nl2: halt").unwrap(),
        );
        let g = compile_onehalf(&m);
        for (eps_n, eps_d) in [(0i64, 10i64), (3, 10)] {
            let mut p = LawParams::default();
            p.c1 = 1;
            p.eps = rat(eps_n, eps_d);
            let chk =
                verify_getprob(&g, &m, GadgetKind::DecrementGetProb, &p, 60_000, 29).unwrap();
            assert!(
                chk.pass,
                "eps {eps_n}/{eps_d}: law {} vs estimate {} ({} sigmas)",
                rat_to_f64(&chk.law),
                chk.estimate.point,
                chk.sigmas
            );
        }
    }

    #[test]
    fn checkz_and_checkx_laws_verify() {
        let m = Arc::new(parse_tcm("l0: inc c1 goto l1\nl1: halt").unwrap());
        let g = compile_timebounded(&m);
        for k in 0..2 {
            let mut p = LawParams::default();
            p.k = k;
            let chk = verify_checkz(&g, &m, &p, 40_000, 31).unwrap();
            assert!(chk.pass, "checkz k={k}: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);
        }
        let mut p = LawParams::default();
        p.eps = rat(1, 24);
        let chk = verify_checkz(&g, &m, &p, 40_000, 37).unwrap();
        assert!(chk.pass, "checkz perturbed: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);

        let p = LawParams::default();
        let chk = verify_checkx(&g, &m, &p, 40_000, 41).unwrap();
        assert!(chk.pass, "checkx: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);
    }

    #[test]
    fn wid0_and_halt_laws_verify() {
        let m = Arc::new(parse_tcm("l0: jz c1 l1 l0\nl1: halt").unwrap());
        let g = compile_timebounded(&m);
        // m = 1/(2*3) = 1/6, faithful t = 1/3: law = (1/4)(2/3) + 1/12 = 1/4
        let mut p = LawParams::default();
        p.c1 = 1;
        p.c2 = 1;
        let chk = verify_wid0(&g, &m, &p, 40_000, 43).unwrap();
        assert_eq!(chk.law, rat(1, 4));
        assert!(chk.pass, "wid0: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);
        let chk = verify_halt(&g, &m, 40_000, 47).unwrap();
        assert!(chk.pass, "halt: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);
    }

    #[test]
    fn zerotest_law_verifies() {
        let m = Arc::new(parse_tcm("l0: jz c1 l1 l0\nl1: halt").unwrap());
        let g = compile_onehalf(&m);
        let chk = verify_zerotest(&g, &m, 40_000, 53).unwrap();
        assert!(chk.pass, "zerotest: {} vs {}", rat_to_f64(&chk.law), chk.estimate.point);
    }
}
