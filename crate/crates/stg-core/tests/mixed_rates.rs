//! Abstraction with heterogeneous exponential rates: q = lcm of the rate
//! denominators, exponents folded into powers of y = exp(-1/q).

use std::collections::BTreeSet;
use stg_core::format::parse_model;
use stg_core::mdp::{build_mdp, compact_poly};
use stg_core::region::{build_region_stg, check_star};
use stg_core::sim::{sample_many, wilson_interval, EstimateOptions, NoStrategy, SimLimits};
use stg_core::model::State;
use stg_core::Stg;

fn two_rate_model() -> Stg {
    parse_model(
        r#"{
        "clocks": ["x"],
        "locations": [
            {"name": "S", "owner": "diamond", "invariant": "true"},
            {"name": "A", "owner": "stochastic", "invariant": "true"},
            {"name": "B", "owner": "stochastic", "invariant": "true"},
            {"name": "T", "owner": "diamond", "invariant": "true"},
            {"name": "Z", "owner": "diamond", "invariant": "true"}
        ],
        "edges": [
            {"id": "s", "source": "S", "guard": "true", "resets": ["x"], "target": "A"},
            {"id": "e2", "source": "A", "guard": "x >= 1", "resets": ["x"], "target": "T"},
            {"id": "e1", "source": "A", "guard": "x < 1", "resets": [], "target": "B"},
            {"id": "f1", "source": "B", "guard": "x < 1", "resets": [], "target": "T"},
            {"id": "f2", "source": "B", "guard": "x >= 1", "resets": ["x"], "target": "Z"},
            {"id": "z", "source": "Z", "guard": "true", "resets": ["x"], "target": "Z"}
        ],
        "distributions": {
            "A": {"kind": "exponential", "rate": "1/2"},
            "B": {"kind": "exponential", "rate": "2/3"}
        },
        "initial": {"location": "S", "valuation": {"x": 0}},
        "targets": ["T"]
    }"#,
    )
    .unwrap()
}

#[test]
fn mixed_rate_abstraction_is_exact() {
    let m = two_rate_model();
    let rg = build_region_stg(&m).unwrap();
    assert!(check_star(&rg).all_pass());
    let mdp = build_mdp(&rg).unwrap();
    assert_eq!(mdp.q, 6, "q = lcm(2, 3)");

    let a0 = mdp.state_by_name("A@0").unwrap();
    let probs: BTreeSet<(String, String)> = mdp.chance[&a0]
        .iter()
        .map(|e| (e.label.clone(), compact_poly(&e.probability)))
        .collect();
    // hand-computed: P(e2) = e^(-1/2) = y^3, P(e1 f1) = 1 - 4y^3 + 3y^4,
    // P(e1 f2) = 3y^3 - 3y^4 with y = e^(-1/6)
    let want: BTreeSet<(String, String)> = [
        ("e2", "y^3"),
        ("e1f1", "1 - 4*y^3 + 3*y^4"),
        ("e1f2", "3*y^3 - 3*y^4"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    assert_eq!(probs, want);

    let mut sum = stg_core::ExpPoly::zero(mdp.q);
    for e in &mdp.chance[&a0] {
        sum = sum.add(&e.probability);
    }
    assert!(sum.is_one(), "stochasticity holds exactly across rates");
}

#[test]
fn mixed_rate_macro_edges_match_monte_carlo() {
    let m = two_rate_model();
    let rg = build_region_stg(&m).unwrap();
    let mdp = build_mdp(&rg).unwrap();
    let a0 = mdp.state_by_name("A@0").unwrap();

    let from = State::new(m.location_by_name("A").unwrap(), vec![0.0]);
    let n = 100_000u64;
    let opts = EstimateOptions {
        samples: n,
        confidence: 0.99,
        seed: 321,
        limits: SimLimits { max_steps: 4, time_bound: None },
    };
    let runs =
        sample_many(&m, &from, &stg_core::sim::EagerStrategy, &NoStrategy, &opts).unwrap();
    for edge in &mdp.chance[&a0] {
        let ids: Vec<_> = match edge.label.as_str() {
            "e2" => vec![m.edge_by_name("e2").unwrap()],
            "e1f1" => vec![m.edge_by_name("e1").unwrap(), m.edge_by_name("f1").unwrap()],
            "e1f2" => vec![m.edge_by_name("e1").unwrap(), m.edge_by_name("f2").unwrap()],
            other => panic!("unexpected label {other}"),
        };
        let hits = runs
            .iter()
            .filter(|r| {
                r.steps.len() >= ids.len()
                    && r.steps[..ids.len()].iter().zip(&ids).all(|(s, e)| s.edge == *e)
            })
            .count() as u64;
        let (lo, hi) = wilson_interval(hits, n, 0.99);
        let exact = edge.probability.eval_f64();
        assert!(
            lo <= exact && exact <= hi,
            "{}: exact {exact} outside CI [{lo}, {hi}]",
            edge.label
        );
    }
}
