//! Shared fixtures: the two-variable network, a random-network generator,
//! and a brute-force enumeration oracle for marginals.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use senscreen_core::{
    joint_prob, load_network, Cpt, Evidence, NetworkDef, Query, VarId, VarState, Variable,
};

pub fn n1_text() -> &'static str {
    r#"{
      "variables": [
        {"name": "A", "states": ["a", "na"]},
        {"name": "B", "states": ["b", "nb"]}
      ],
      "cpts": [
        {"child": "A", "parents": [], "table": [[0.4, 0.6]]},
        {"child": "B", "parents": ["A"], "table": [[0.9, 0.1], [0.2, 0.8]]}
      ]
    }"#
}

pub fn n1() -> NetworkDef {
    load_network(n1_text()).unwrap()
}

/// Random DAG over 2..=6 variables with 2..=3 states each. Entries are
/// bounded away from zero so posteriors stay comfortably interior.
pub fn random_network(rng: &mut ChaCha8Rng) -> NetworkDef {
    let n = rng.random_range(2..=6);
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let k = rng.random_range(2..=3);
            Variable {
                name: format!("V{i}"),
                states: (0..k).map(|j| format!("s{j}")).collect(),
            }
        })
        .collect();
    let cpts = (0..n)
        .map(|i| {
            let mut parents: Vec<VarId> = (0..i)
                .filter(|_| rng.random_bool(0.4))
                .map(VarId)
                .collect();
            parents.truncate(3);
            let rows: usize = parents
                .iter()
                .map(|&p| variables[p.0].cardinality())
                .product();
            let k = variables[i].cardinality();
            let table = (0..rows)
                .map(|_| {
                    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
                    let sum: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / sum).collect()
                })
                .collect();
            Cpt {
                child: VarId(i),
                parents,
                table,
            }
        })
        .collect();
    NetworkDef::new(variables, cpts).unwrap()
}

/// Random query with nonempty evidence and the target outside it.
pub fn random_query(rng: &mut ChaCha8Rng, net: &NetworkDef) -> Query {
    let n = net.n_vars();
    let target_var = rng.random_range(0..n);
    let target = VarState {
        var: VarId(target_var),
        state: rng.random_range(0..net.var(VarId(target_var)).cardinality()),
    };
    let mut evidence = Evidence::new();
    loop {
        for i in 0..n {
            if i != target_var && rng.random_bool(0.4) {
                evidence
                    .insert(VarState {
                        var: VarId(i),
                        state: rng.random_range(0..net.var(VarId(i)).cardinality()),
                    })
                    .unwrap();
            }
        }
        if !evidence.is_empty() {
            break;
        }
    }
    Query::new(target, evidence).unwrap()
}

/// Pr(e) by summing the joint over all completions of the evidence.
pub fn enum_marginal(net: &NetworkDef, e: &Evidence) -> f64 {
    let n = net.n_vars();
    let cards: Vec<usize> = (0..n).map(|i| net.var(VarId(i)).cardinality()).collect();
    let total: usize = cards.iter().product();
    let mut sum = 0.0;
    for mut code in 0..total {
        let mut assignment = vec![0usize; n];
        for i in (0..n).rev() {
            assignment[i] = code % cards[i];
            code /= cards[i];
        }
        let consistent = e.iter().all(|(var, state)| assignment[var.0] == state);
        if consistent {
            sum += joint_prob(net, &assignment).unwrap();
        }
    }
    sum
}
