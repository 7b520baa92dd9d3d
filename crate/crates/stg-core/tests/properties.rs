//! Property tests for the spec invariants that benefit from random inputs.

use proptest::prelude::*;
use std::collections::BTreeMap;
use stg_core::exppoly::ExpPoly;
use stg_core::format::{parse_model, print_model};
use stg_core::interval::TimeOps;
use stg_core::model::{enabled_interval, satisfies, State};
use stg_core::rat::{rat, Rat};
use stg_core::region::Region;
use stg_core::sim::wilson_interval;

fn arb_rat() -> impl Strategy<Value = Rat> {
    (-20i64..20, 1i64..12).prop_map(|(n, d)| rat(n, d))
}

fn arb_poly() -> impl Strategy<Value = ExpPoly> {
    proptest::collection::btree_map(-4i64..6, arb_rat(), 0..5).prop_map(|terms| {
        let mut t: BTreeMap<i64, Rat> = terms;
        t.retain(|_, c| !num_traits::Zero::is_zero(c));
        ExpPoly { q: 1, terms: t }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    // ExpPoly is a commutative ring.
    #[test]
    fn exppoly_ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&ExpPoly::one(1)), a.clone());
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    // Interval evaluation soundness: the certified enclosure at a modest term
    // count contains the value computed at a much higher (reference) count.
    #[test]
    fn exppoly_enclosure_sound(a in arb_poly()) {
        let coarse = a.eval_enclosure(48);
        let reference = a.eval_enclosure(160);
        // reference interval is much narrower and must overlap coarse
        prop_assert!(coarse.lo <= reference.hi && reference.lo <= coarse.hi);
        prop_assert!(coarse.lo <= reference.lo && reference.hi <= coarse.hi);
    }

    // Every clock value belongs to exactly one region.
    #[test]
    fn region_partition(n in 0i64..40, d in 1i64..10, c_max in 1u32..6) {
        let v = rat(n, d);
        let r = Region::of_value(&v, c_max);
        let mut all = vec![Region::Unbounded];
        for c in 0..=c_max {
            all.push(Region::Point(c));
            if c < c_max {
                all.push(Region::Open(c));
            }
        }
        let member = |reg: Region| -> bool {
            match reg {
                Region::Point(c) => v == rat(c as i64, 1),
                Region::Open(c) => v > rat(c as i64, 1) && v < rat(c as i64 + 1, 1),
                Region::Unbounded => v > rat(c_max as i64, 1),
            }
        };
        prop_assert!(member(r));
        let count = all.iter().filter(|reg| member(**reg)).count();
        prop_assert_eq!(count, 1);
    }

    // Wilson interval brackets the point estimate.
    #[test]
    fn wilson_brackets_point(hits in 0u64..500, extra in 0u64..500) {
        let n = hits + extra;
        prop_assume!(n > 0);
        let (lo, hi) = wilson_interval(hits, n, 0.99);
        let p = hits as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p - 1e-12 <= hi);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
    }

    // Monotonicity of pure lower-bound constraints under time passage.
    #[test]
    fn lower_bounds_monotone(v in 0i64..8, d in 1i64..6, t in 0i64..8, bound in 0u32..5) {
        let clocks = vec!["x".to_string()];
        let g = stg_core::format::parse_guard(&format!("x >= {bound}"), &clocks).unwrap();
        let val = rat(v, d);
        if satisfies(std::slice::from_ref(&val), &g) {
            prop_assert!(satisfies(&[val + rat(t, 1)], &g));
        }
    }
}

const SEC2: &str = r#"{
    "clocks": ["x"],
    "locations": [
        {"name": "A", "owner": "stochastic", "invariant": "x <= 1"},
        {"name": "B", "owner": "stochastic", "invariant": "x <= 2"},
        {"name": "D", "owner": "stochastic"}
    ],
    "edges": [
        {"id": "e1", "source": "A", "guard": "x <= 1", "resets": ["x"], "target": "B"},
        {"id": "e2", "source": "B", "guard": "x >= 1", "target": "D"},
        {"id": "e3", "source": "A", "guard": "x <= 1", "target": "A"},
        {"id": "e4", "source": "B", "guard": "x <= 2", "target": "A"}
    ],
    "distributions": {"A": {"kind": "uniform"}, "B": {"kind": "uniform"}},
    "initial": {"location": "A", "valuation": {"x": 0}},
    "targets": ["D"]
}"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    // Enabled intervals are convex: t1 < t2 < t3 with the ends enabled
    // implies the middle is enabled.
    #[test]
    fn enabled_interval_convex(
        v in 0i64..3,
        dv in 1i64..7,
        (a, b, c) in (0i64..30, 0i64..30, 0i64..30),
        edge_idx in 0usize..4,
    ) {
        let m = parse_model(SEC2).unwrap();
        let loc = m.edges[edge_idx].source;
        let val = rat(v, dv);
        prop_assume!(satisfies(std::slice::from_ref(&val), &m.location(loc).invariant));
        let s = State::new(loc, vec![val]);
        let iv = enabled_interval(&m, &s, stg_core::EdgeId(edge_idx));
        let mut ts = [rat(a, 10), rat(b, 10), rat(c, 10)];
        ts.sort();
        let [t1, t2, t3] = ts;
        if iv.contains(&t1) && iv.contains(&t3) {
            prop_assert!(iv.contains(&t2));
        }
        let _ = <Rat as TimeOps>::zero();
    }
}

#[test]
fn serialization_roundtrip_on_compiled_games() {
    // parse(print(model)) is structurally identical, including for the
    // largest generated artifacts
    for src in ["l0: inc c1 goto l1\nl1: halt", "l0: jz c2 l1 l0\nl1: dec c2 goto l2\nl2: halt"] {
        let m = stg_core::tcm::parse_tcm(src).unwrap();
        for stg in [
            stg_core::tcm::onehalf::compile_onehalf(&m).stg,
            stg_core::tcm::timebounded::compile_timebounded(&m).stg,
        ] {
            let printed = print_model(&stg);
            let reparsed = parse_model(&printed).unwrap();
            assert_eq!(print_model(&reparsed), printed);
            assert_eq!(reparsed.locations.len(), stg.locations.len());
            assert_eq!(reparsed.edges.len(), stg.edges.len());
        }
    }
}
