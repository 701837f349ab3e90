//! Fixture builders for the benchmarks.

use senscreen_core::{Cpt, Evidence, NetworkDef, Query, VarId, VarState, Variable};

/// A Markov chain of `n` binary variables, each noisily copying its parent.
///
/// The transition is deliberately asymmetric so no posterior degenerates and
/// every parameter stays hyperbolic under a head-to-tail query.
pub fn chain(n: usize) -> NetworkDef {
    assert!(n >= 2);
    let variables: Vec<Variable> = (0..n)
        .map(|i| Variable {
            name: format!("X{i}"),
            states: vec!["on".into(), "off".into()],
        })
        .collect();
    let mut cpts = vec![Cpt {
        child: VarId(0),
        parents: vec![],
        table: vec![vec![0.55, 0.45]],
    }];
    for i in 1..n {
        cpts.push(Cpt {
            child: VarId(i),
            parents: vec![VarId(i - 1)],
            table: vec![vec![0.85, 0.15], vec![0.25, 0.75]],
        });
    }
    NetworkDef::new(variables, cpts).expect("chain is a valid network")
}

/// Tail-state target with head-state evidence: the query every benchmark uses.
pub fn head_to_tail_query(net: &NetworkDef) -> Query {
    let last = VarId(net.n_vars() - 1);
    let evidence = Evidence::from_pairs([VarState {
        var: VarId(0),
        state: 0,
    }])
    .expect("single observation");
    Query::new(VarState { var: last, state: 0 }, evidence).expect("target is unobserved")
}
