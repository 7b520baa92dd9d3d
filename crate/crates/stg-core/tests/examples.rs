//! Direct checks of the worked per-operation examples.

use std::collections::BTreeMap;
use stg_core::format::parse_model;
use stg_core::interval::Upper;
use stg_core::mdp::{deletable_nodes, remove_node, ElimGraph};
use stg_core::model::{edge_choice_prob, enabled_interval, enabled_set, State};
use stg_core::rat::{rat, rat_int, Rat};
use stg_core::region::build_region_stg;
use stg_core::sim::{estimate_reach, sample_many, EstimateOptions, NoStrategy, SimLimits};
use stg_core::Stg;

fn model(text: &str) -> Stg {
    parse_model(text).unwrap()
}

fn fig1() -> Stg {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/fig1.json"))
            .unwrap();
    parse_model(&text).unwrap()
}

#[test]
fn enabled_interval_examples() {
    let m = model(
        r#"{
        "clocks": ["x"],
        "locations": [
            {"name": "A", "owner": "stochastic", "invariant": "x <= 1"},
            {"name": "B", "owner": "stochastic", "invariant": "true"},
            {"name": "T", "owner": "diamond", "invariant": "true"}
        ],
        "edges": [
            {"id": "a", "source": "A", "guard": "x <= 1", "target": "T"},
            {"id": "b", "source": "B", "guard": "x >= 1", "target": "T"},
            {"id": "c", "source": "B", "guard": "x < 1", "target": "T"}
        ],
        "distributions": {"A": {"kind": "uniform"}, "B": {"kind": "uniform"}},
        "initial": {"location": "A", "valuation": {"x": 0}},
        "targets": ["T"]
    }"#,
    );
    // guard x <= 1, invariant x <= 1, from x = 0: [0, 1]
    let s = State::new(m.location_by_name("A").unwrap(), vec![rat_int(0)]);
    let iv = enabled_interval(&m, &s, m.edge_by_name("a").unwrap());
    assert_eq!((iv.lo, iv.lo_closed, iv.hi_closed), (rat_int(0), true, true));
    assert_eq!(iv.hi, Upper::Finite(rat_int(1)));

    // guard x >= 1, invariant true, from x = 0.3: [0.7, +inf)
    let s = State::new(m.location_by_name("B").unwrap(), vec![rat(3, 10)]);
    let iv = enabled_interval(&m, &s, m.edge_by_name("b").unwrap());
    assert_eq!(iv.lo, rat(7, 10));
    assert!(matches!(iv.hi, Upper::Infinite));

    // guard x < 1 from x = 2: empty
    let s = State::new(m.location_by_name("B").unwrap(), vec![rat_int(2)]);
    let iv = enabled_interval(&m, &s, m.edge_by_name("c").unwrap());
    assert!(iv.is_empty());
}

#[test]
fn enabled_set_merges_to_all_delays() {
    // from (C, 0): e3 on [0,1), e2 on [1,inf) merge to [0, inf)
    let m = fig1();
    let s = State::new(m.location_by_name("C").unwrap(), vec![rat_int(0)]);
    let (set, per_edge) = enabled_set(&m, &s);
    assert!(set.is_all_nonneg_reals());
    assert_eq!(per_edge.len(), 2);
}

#[test]
fn edge_choice_weight_shares() {
    let m = model(
        r#"{
        "clocks": ["x"],
        "locations": [
            {"name": "S", "owner": "stochastic", "invariant": "true"},
            {"name": "T", "owner": "diamond", "invariant": "true"}
        ],
        "edges": [
            {"id": "a", "source": "S", "guard": "true", "target": "T", "weight": 1},
            {"id": "b", "source": "S", "guard": "true", "target": "T", "weight": 1},
            {"id": "c", "source": "S", "guard": "true", "target": "T", "weight": 2}
        ],
        "distributions": {"S": {"kind": "exponential", "rate": "1"}},
        "initial": {"location": "S", "valuation": {"x": 0}},
        "targets": ["T"]
    }"#,
    );
    let s = State::new(m.location_by_name("S").unwrap(), vec![rat_int(0)]);
    let probs: BTreeMap<String, Rat> = edge_choice_prob(&m, &s)
        .unwrap()
        .into_iter()
        .map(|(e, p)| (m.edge(e).name.clone(), p))
        .collect();
    assert_eq!(probs["a"], rat(1, 4));
    assert_eq!(probs["b"], rat(1, 4));
    assert_eq!(probs["c"], rat(1, 2));
    let total: Rat = probs.values().cloned().sum();
    assert_eq!(total, rat_int(1));
}

#[test]
fn remove_node_pairing_counts() {
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let del = deletable_nodes(&rg).unwrap();
    let g = ElimGraph::from_region_stg(&rg);

    // removing (B,(0,1)): 2 in-edges (e4 from A@0 and from A@(0,1)) and
    // 2 out-edges (e5, e7) -> 4 macro edges replace 4 removed ones
    let b01 = rg.find_node("B", stg_core::Region::Open(0)).unwrap();
    let before = g.edges.len();
    let g2 = remove_node(&rg, &g, b01, &del).unwrap();
    assert_eq!(g2.edges.len(), before - 4 + 4);
    // the label e4e7 from (A,0) to (D,(0,1)) exists
    let a0 = rg.find_node("A", stg_core::Region::Point(0)).unwrap();
    let d01 = rg.find_node("D", stg_core::Region::Open(0)).unwrap();
    assert!(g2.edges.iter().any(|e| {
        e.source == a0
            && e.target == d01
            && e.steps.len() == 2
            && rg.stg.edge(e.steps[0].edge).name == "e4"
            && rg.stg.edge(e.steps[1].edge).name == "e7"
    }));

    // a node is not removable twice
    assert!(remove_node(&rg, &g2, b01, &del).is_err() || !g2.present[b01]);
}

#[test]
fn time_bound_monotonicity() {
    // estimates with nested time bounds are ordered on identical seeds
    let m = fig1();
    let from = stg_core::sim::initial_state_f64(&m);
    let mut points = vec![];
    for bound in [0.5, 2.0, 8.0] {
        let opts = EstimateOptions {
            samples: 20_000,
            confidence: 0.99,
            seed: 271,
            limits: SimLimits { max_steps: 10_000, time_bound: Some(bound) },
        };
        let est = estimate_reach(
            &m,
            &from,
            &stg_core::sim::EagerStrategy,
            &NoStrategy,
            &opts,
        )
        .unwrap();
        points.push(est.point);
    }
    assert!(points[0] <= points[1] && points[1] <= points[2], "{points:?}");
}

#[test]
fn unreachable_target_estimates_zero() {
    let m = model(
        r#"{
        "clocks": ["x"],
        "locations": [
            {"name": "S", "owner": "stochastic", "invariant": "x <= 1"},
            {"name": "T", "owner": "diamond", "invariant": "true"}
        ],
        "edges": [
            {"id": "a", "source": "S", "guard": "x <= 1", "resets": ["x"], "target": "S"}
        ],
        "distributions": {"S": {"kind": "uniform"}},
        "initial": {"location": "S", "valuation": {"x": 0}},
        "targets": ["T"]
    }"#,
    );
    let opts = EstimateOptions {
        samples: 500,
        confidence: 0.99,
        seed: 5,
        limits: SimLimits::default(),
    };
    let from = stg_core::sim::initial_state_f64(&m);
    let est = estimate_reach(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
    assert_eq!(est.hits, 0);
    assert_eq!(est.ci_low, 0.0);
    // runs are cut short rather than burning the step budget
    let runs = sample_many(&m, &from, &NoStrategy, &NoStrategy, &opts).unwrap();
    assert!(runs.iter().all(|r| r.steps.is_empty()));
}
