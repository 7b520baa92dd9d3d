//! Region/MDP pipeline on the shipped one-clock example model.

use std::collections::BTreeSet;
use stg_core::format::parse_model;
use stg_core::mdp::{build_mdp, compact_poly, deletable_nodes};
use stg_core::region::{build_region_stg, check_star, Region};

fn fig1() -> stg_core::Stg {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/fig1.json"))
        .unwrap();
    parse_model(&text).unwrap()
}

#[test]
fn region_graph_has_expected_nodes() {
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    assert_eq!(rg.c_max, 1);
    let names: BTreeSet<String> = (0..rg.nodes.len()).map(|i| rg.node_name(i)).collect();
    let want: BTreeSet<String> = [
        "A@0", "B@(0,1)", "D@(0,1)", "C@0", "A@(0,1)", "E@0", "B@0", "E@inf",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(names, want);
}

#[test]
fn star_conditions_pass() {
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let rep = check_star(&rg);
    assert!(rep.non_zeno.pass, "non-zeno witness: {:?}", rep.non_zeno.witness);
    assert!(rep.exponential_unbounded.pass, "{:?}", rep.exponential_unbounded.witness);
    assert!(rep.initialized.pass, "{:?}", rep.initialized.witness);
}

#[test]
fn deletable_set_is_the_two_intermediate_nodes() {
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let del = deletable_nodes(&rg).unwrap();
    let names: BTreeSet<String> = del.nodes.iter().map(|i| rg.node_name(*i)).collect();
    let want: BTreeSet<String> =
        ["B@(0,1)", "A@(0,1)"].iter().map(|s| s.to_string()).collect();
    assert_eq!(names, want);
}

#[test]
fn mdp_states_labels_and_probabilities() {
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let mdp = build_mdp(&rg).unwrap();

    let names: BTreeSet<String> = mdp.states.iter().map(|s| s.name.clone()).collect();
    let want: BTreeSet<String> =
        ["A@0", "C@0", "B@0", "E@0", "E@inf", "D@(0,1)"].iter().map(|s| s.to_string()).collect();
    assert_eq!(names, want);

    let labels = mdp.label_set();
    let want_labels: BTreeSet<String> = [
        "e4e7", "e8", "e4e5", "e1", "e7", "e5", "e6", "e3e1", "e2", "e3e4e7", "e3e4e5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(labels, want_labels);

    let prob = |state: &str, label: &str| {
        let s = mdp.state_by_name(state).unwrap();
        let edges = &mdp.chance[&s];
        compact_poly(&edges.iter().find(|e| e.label == label).unwrap().probability)
    };
    // advertised single-edge values
    assert_eq!(prob("C@0", "e2"), "y");
    assert_eq!(prob("B@0", "e7"), "1 - y");
    assert_eq!(prob("A@0", "e4e7"), "1 - 2*y");
    assert_eq!(prob("A@0", "e1"), "y");
    assert_eq!(prob("B@0", "e5"), "y");

    // player moves survive as one-step Dirac actions
    let e0 = mdp.state_by_name("E@0").unwrap();
    let b0 = mdp.state_by_name("B@0").unwrap();
    let e6_actions: Vec<_> = mdp.actions.iter().filter(|a| a.state == e0).collect();
    assert_eq!(e6_actions.len(), 1);
    assert_eq!(e6_actions[0].label, "e6");
    assert_eq!(e6_actions[0].successor, b0);
}

#[test]
fn elimination_region_partition() {
    // region partition sanity on values
    for c_max in [1u32, 3] {
        let vals = ["0", "1/2", "1", "3/2", "2", "7/3", "100"];
        for v in vals {
            let r = Region::of_value(&stg_core::rat::parse_rat(v).unwrap(), c_max);
            let _ = r;
        }
    }
}

#[test]
fn elimination_order_independent()  {
    use stg_core::mdp::{build_mdp_from_elimination, deletable_nodes, remove_node, ElimGraph};
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let del = deletable_nodes(&rg).unwrap();
    let order_a: Vec<usize> = del.nodes.iter().copied().collect();
    let order_b: Vec<usize> = del.nodes.iter().rev().copied().collect();
    let mut results = vec![];
    for order in [order_a, order_b] {
        let mut g = ElimGraph::from_region_stg(&rg);
        for n in order {
            g = remove_node(&rg, &g, n, &del).unwrap();
        }
        results.push(build_mdp_from_elimination(&rg, &g).unwrap());
    }
    let (a, b) = (&results[0], &results[1]);
    assert_eq!(a.label_set(), b.label_set());
    let names = |m: &stg_core::mdp::Mdp| -> Vec<String> {
        m.states.iter().map(|s| s.name.clone()).collect::<Vec<_>>()
    };
    assert_eq!(names(a), names(b));
    for (s, edges) in &a.chance {
        let sb = b.state_by_name(&a.states[*s].name).unwrap();
        let eb = &b.chance[&sb];
        for e in edges {
            let other = eb.iter().find(|x| x.label == e.label).expect("same labels");
            assert_eq!(e.probability, other.probability, "label {}", e.label);
        }
    }
}

#[test]
fn bisimulation_spot_check() {
    // Monte Carlo reachability on the game and on its region STG, under the
    // matched eager strategies, produce overlapping 99% CIs.
    use stg_core::region::region_stg_to_stg;
    use stg_core::sim::{
        estimate_reach, initial_state_f64, EagerStrategy, EstimateOptions, NoStrategy, SimLimits,
    };
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let region_game = region_stg_to_stg(&rg);
    let opts = EstimateOptions {
        samples: 40_000,
        confidence: 0.99,
        seed: 9,
        limits: SimLimits::default(),
    };
    let a = estimate_reach(&m, &initial_state_f64(&m), &EagerStrategy, &NoStrategy, &opts)
        .unwrap();
    let b = estimate_reach(
        &region_game,
        &initial_state_f64(&region_game),
        &EagerStrategy,
        &NoStrategy,
        &opts,
    )
    .unwrap();
    assert!(
        a.ci_low <= b.ci_high && b.ci_low <= a.ci_high,
        "CIs overlap: [{}, {}] vs [{}, {}]",
        a.ci_low,
        a.ci_high,
        b.ci_low,
        b.ci_high
    );
}

#[test]
fn region_edges_have_delay_witnesses() {
    // Every region edge can be replayed concretely: a representative
    // valuation of the source region admits a delay into the firing region
    // satisfying the original guard.
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    for e in &rg.edges {
        let node = rg.nodes[e.source];
        let v = node.region.representative(rg.c_max);
        let s = stg_core::State::new(node.location, vec![v.clone()]);
        let iv = stg_core::enabled_interval(&m, &s, e.edge);
        let w = e.firing_region.representative(rg.c_max);
        // firing representative must be reachable: delay = w - v when w >= v
        if w >= v {
            let delay = w - v;
            assert!(
                iv.contains(&delay),
                "edge {} from {} into {}",
                rg.stg.edge(e.edge).name,
                rg.node_name(e.source),
                e.firing_region
            );
        }
    }
}

#[test]
fn profile_values_lie_in_unit_interval() {
    use stg_core::solver::{evaluate_profile, solve_optimal, Mode};
    let m = fig1();
    let rg = build_region_stg(&m).unwrap();
    let mdp = stg_core::mdp::build_mdp(&rg).unwrap();
    let sol = solve_optimal(&mdp, Mode::Max).unwrap();
    let values = evaluate_profile(&mdp, &sol.profile).unwrap();
    for (i, v) in values.iter().enumerate() {
        let enc = v.enclosure(12);
        let lo = stg_core::rat::rat_to_f64(&enc.lo);
        let hi = stg_core::rat::rat_to_f64(&enc.hi);
        assert!(
            lo >= -1e-9 && hi <= 1.0 + 1e-9,
            "value of {} outside [0,1]: [{lo}, {hi}]",
            mdp.states[i].name
        );
    }
}
