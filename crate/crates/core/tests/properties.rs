//! Randomized invariants tying the cheap bounds to the exact machinery.

mod common;

use common::{enum_marginal, n1, random_network, random_query};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use senscreen_core::{
    bounding_curves, check_row, classify, deriv_bounds, emit, filter_rank, general_sv_bound,
    in_subspace, intersection_lines, marginal_prob, posterior, r_range, s_for_all_parameters,
    screen, sensitivity_constants, simple_rule_le_one, t_range, thresholds, verify, vertex_t_set,
    Evidence, FunctionKind, OutputFormat, Query, RowKind, SSign, SValue, ScreenOptions,
    ThroughPoint, TrueFunction, VarState, VertexWindow, CSV_HEADER,
};

#[test]
fn variable_elimination_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..120 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let ve = marginal_prob(&net, &q.evidence).unwrap();
        let brute = enum_marginal(&net, &q.evidence);
        assert!(
            (ve - brute).abs() < 1e-9,
            "marginal mismatch: {ve} vs {brute}"
        );
        let joint = q.evidence.with(q.target).unwrap();
        let ve = marginal_prob(&net, &joint).unwrap();
        let brute = enum_marginal(&net, &joint);
        assert!((ve - brute).abs() < 1e-9, "joint mismatch: {ve} vs {brute}");
    }
}

#[test]
fn covariation_keeps_rows_normalized_and_ratios_fixed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let net = random_network(&mut rng);
        let params = net.enumerate_parameters();
        let p = &params[rng.random_range(0..params.len())];
        let x = rng.random_range(0.0..=1.0);
        let moved = net.covary(p, x).unwrap();
        let cpt = moved.cpt(p.child);
        let row_index = moved.row_index(p.child, &p.parent_config);
        for (ri, row) in cpt.table.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "row {ri} sums to {sum}");
        }
        let row = &cpt.table[row_index];
        assert!((row[p.child_state] - x).abs() < 1e-12);
        // Siblings keep their mutual proportions.
        let old_row = &net.cpt(p.child).table[row_index];
        let pairs: Vec<(f64, f64)> = (0..row.len())
            .filter(|&k| k != p.child_state)
            .map(|k| (old_row[k], row[k]))
            .collect();
        for w in pairs.windows(2) {
            let (a0, a1) = w[0];
            let (b0, b1) = w[1];
            assert!((a0 * b1 - b0 * a1).abs() < 1e-9);
        }
    }
}

#[test]
fn posterior_of_the_moved_network_is_the_classified_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    for _ in 0..60 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let params = net.enumerate_parameters();
        let p = &params[rng.random_range(0..params.len())];
        if net.entry(p) == 1.0 {
            continue;
        }
        let c = sensitivity_constants(&net, p, &q).unwrap();
        let kind = match classify(&c) {
            Ok(kind) => kind,
            Err(_) => continue,
        };
        for i in 0..=10 {
            let x = 0.02 + 0.96 * i as f64 / 10.0;
            let expected = posterior(&net.covary(p, x).unwrap(), &q).unwrap();
            let got = senscreen_core::evaluate(&kind, x);
            assert!(
                (got - expected).abs() < 1e-9,
                "function mismatch at x = {x}: {got} vs {expected}"
            );
        }
        checked += 1;
    }
    assert!(checked >= 30, "too few classifiable cases: {checked}");
}

#[test]
fn derivative_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    for _ in 0..60 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let params = net.enumerate_parameters();
        let p = &params[rng.random_range(0..params.len())];
        let x0 = net.entry(p);
        if !(0.01..=0.99).contains(&x0) {
            continue;
        }
        let c = sensitivity_constants(&net, p, &q).unwrap();
        let kind = match classify(&c) {
            Ok(kind) => kind,
            Err(_) => continue,
        };
        let h = 1e-6;
        let at = |x: f64| posterior(&net.covary(p, x).unwrap(), &q).unwrap();
        let fd = (at(x0 + h) - at(x0 - h)) / (2.0 * h);
        let exact = senscreen_core::derivative(&kind, x0);
        assert!(
            (fd - exact).abs() < 1e-5,
            "derivative mismatch: fd {fd} vs exact {exact}"
        );
        checked += 1;
    }
    assert!(checked >= 30, "too few classifiable cases: {checked}");
}

#[test]
fn asymptotes_do_not_depend_on_the_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..40 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let by_evidence = s_for_all_parameters(&net, &q.evidence).unwrap();
        // Any target state outside the evidence must see the same s.
        for (p, sv) in &by_evidence {
            if q.evidence.contains(q.target.var) || net.entry(p) == 1.0 {
                continue;
            }
            let c = sensitivity_constants(&net, p, &q).unwrap();
            match sv {
                SValue::S(s) => {
                    let from_target = -c.c4 / c.c3;
                    assert!(
                        (s - from_target).abs() < 1e-9 * s.abs().max(1.0),
                        "s differs: {s} vs {from_target}"
                    );
                }
                SValue::Linear => {
                    assert!(c.c3.abs() < 1e-12 * c.c4.abs().max(1e-300));
                }
            }
        }
    }
}

#[test]
fn vertex_set_membership_matches_the_true_vertex() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut checked = 0;
    for _ in 0..300 {
        let x0 = rng.random_range(0.05..0.95);
        let p0 = rng.random_range(0.05..0.95);
        let s = if rng.random_bool(0.5) {
            -rng.random_range(0.05..5.0)
        } else {
            1.0 + rng.random_range(0.05..5.0)
        };
        let tp = ThroughPoint::new(x0, p0).unwrap();
        let alpha = rng.random_range(0.0..0.8);
        let w = VertexWindow::new(alpha, alpha + rng.random_range(0.05..0.2)).unwrap();
        let set = vertex_t_set(tp, s, w).unwrap();
        let tb = t_range(tp, s).unwrap();
        for i in 0..=40 {
            let t = tb.range.lo + tb.range.width() * i as f64 / 40.0;
            let r = (x0 - s) * (p0 - t);
            if r.abs() < 1e-10 {
                continue;
            }
            let form = senscreen_core::HyperbolaForm { s, t, r };
            let v = form.vertex();
            // Skip knife edges of both the window and the set.
            let near_edge = (v.x_v - w.alpha).abs() < 1e-9
                || (v.x_v - w.beta).abs() < 1e-9
                || set
                    .intervals()
                    .iter()
                    .any(|iv| (t - iv.lo).abs() < 1e-9 || (t - iv.hi).abs() < 1e-9);
            if near_edge {
                continue;
            }
            assert_eq!(
                w.contains(v.x_v, 0.0),
                set.contains(t, 0.0),
                "vertex membership mismatch at t = {t} (x_v = {}, window [{}, {}])",
                v.x_v,
                w.alpha,
                w.beta
            );
            checked += 1;
        }
    }
    assert!(checked > 2000, "too few decisive samples: {checked}");
}

#[test]
fn wider_windows_admit_supersets() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let x0 = rng.random_range(0.05..0.95);
        let p0 = rng.random_range(0.05..0.95);
        let s = if rng.random_bool(0.5) {
            -rng.random_range(0.05..5.0)
        } else {
            1.0 + rng.random_range(0.05..5.0)
        };
        let tp = ThroughPoint::new(x0, p0).unwrap();
        let a = rng.random_range(0.0..0.5);
        let b = a + rng.random_range(0.1..0.5);
        let inner = VertexWindow::new(a, b).unwrap();
        let outer = VertexWindow::new((a - 0.2).max(0.0), (b + 0.2).min(1.0)).unwrap();
        let small = vertex_t_set(tp, s, inner).unwrap();
        let large = vertex_t_set(tp, s, outer).unwrap();
        assert!(small.total_length() <= large.total_length() + 1e-12);
        for iv in small.intervals() {
            let mid = 0.5 * (iv.lo + iv.hi);
            assert!(large.contains(mid, 1e-12), "midpoint {mid} escaped");
        }
    }
}

#[test]
fn screening_partitions_and_never_wobbles() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..60 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let rows = screen(&net, &q, &ScreenOptions::default()).unwrap();
        assert_eq!(rows.len(), net.enumerate_parameters().len());
        for row in &rows {
            match row.kind {
                RowKind::Hyperbolic(_) => {
                    assert!(row.s.is_some() && row.sv_bound.is_some());
                    assert!(row.t_bounds.is_some() && row.r_range.is_some());
                    assert!(row.vertex_possible.is_some());
                }
                RowKind::Linear | RowKind::Constant => {
                    assert!(row.s.is_none() && row.sv_bound.is_some());
                    assert!(row.t_bounds.is_none());
                }
                RowKind::Boundary => {
                    assert!(row.sv_bound.is_none());
                    assert!(!row.flags.is_empty());
                }
                RowKind::DegenerateCovariation => {
                    assert!(row.s.is_none() && row.sv_bound.is_none());
                }
            }
        }
        let csv = emit(&rows, OutputFormat::Csv);
        let rerun = screen(&net, &q, &ScreenOptions::default()).unwrap();
        assert_eq!(csv, emit(&rerun, OutputFormat::Csv));
        assert_eq!(filter_rank(rows.clone(), 0.0, None).len(), rows.len());
        assert!(csv.starts_with(CSV_HEADER));
    }
}

#[test]
fn verification_finds_nothing_to_flag_on_random_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..200 {
        let net = random_network(&mut rng);
        let q = random_query(&mut rng, &net);
        let report = verify(&net, &q).unwrap();
        assert_eq!(
            report.summary.checks_failed, 0,
            "violations on a random network: {:?}",
            report
                .rows
                .iter()
                .flat_map(|r| r.checks.iter().filter(|c| !c.pass).map(|c| (
                    r.parameter.clone(),
                    r.row_kind.clone(),
                    r.true_kind.clone(),
                    c.name,
                    c.violation,
                    r.sv_bound,
                    r.sv_true,
                )))
                .collect::<Vec<_>>()
        );
        assert!(report.summary.max_violation <= 1e-9);
        assert!(report.summary.rows_checked > 0);
    }
}

#[test]
fn tampered_rows_fail_verification() {
    let net = n1();
    let q = Query::new(
        VarState {
            var: net.find_var("A").unwrap(),
            state: 0,
        },
        Evidence::from_pairs([VarState {
            var: net.find_var("B").unwrap(),
            state: 0,
        }])
        .unwrap(),
    )
    .unwrap();
    let rows = screen(&net, &q, &ScreenOptions::default()).unwrap();
    let row = rows.iter().find(|r| r.parameter == "A=a|").unwrap();
    let c = sensitivity_constants(&net, &row.pref, &q).unwrap();
    let form = match classify(&c).unwrap() {
        FunctionKind::Hyperbolic { form, .. } => form,
        _ => unreachable!(),
    };
    let truth = TrueFunction {
        form,
        d_at_x0: form.derivative_at(row.x0),
        vertex: form.vertex(),
    };
    let mut bad = row.clone();
    bad.sv_bound = Some(truth.d_at_x0.abs() / 2.0);
    let checks = check_row(&bad, &truth, 1e-9);
    assert!(checks.iter().any(|c| c.name == "sv-bound" && !c.pass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn crossings_merge_at_the_thresholds(
        x0 in 0.02f64..0.98,
        mag in 0.02f64..8.0,
        left in any::<bool>(),
    ) {
        let s = if left { -mag } else { 1.0 + mag };
        let th = thresholds(x0, s).unwrap();

        let tp = ThroughPoint::new(x0, th.p_ab).unwrap();
        let lines = intersection_lines(tp, s).unwrap();
        prop_assert!((lines.t_a - lines.t_b).abs() < 1e-9);
        prop_assert!((lines.t_a - s).abs() < 1e-9);

        let tp = ThroughPoint::new(x0, th.p_cd).unwrap();
        let lines = intersection_lines(tp, s).unwrap();
        prop_assert!((lines.t_c - lines.t_d).abs() < 1e-9);
        prop_assert!((lines.t_c - (1.0 - s)).abs() < 1e-9);
    }

    #[test]
    fn ceilings_nest_and_rules_guarantee(
        x0 in 0.02f64..0.98,
        p0 in 0.02f64..0.98,
        mag in 0.02f64..8.0,
        left in any::<bool>(),
    ) {
        let s = if left { -mag } else { 1.0 + mag };
        let tp = ThroughPoint::new(x0, p0).unwrap();
        let d = deriv_bounds(tp, s).unwrap();
        prop_assert!(d.sv_bound <= general_sv_bound(tp) + 1e-9);
        let sign = if s < 0.0 { SSign::Negative } else { SSign::Positive };
        if simple_rule_le_one(tp, sign) {
            prop_assert!(d.sv_bound <= 1.0 + 1e-9);
        }
        // Every admissible offset yields a subspace member on the anchor line.
        let tb = t_range(tp, s).unwrap();
        for i in 0..=8 {
            let t = tb.range.lo + tb.range.width() * i as f64 / 8.0;
            let r = (x0 - s) * (p0 - t);
            prop_assert!(in_subspace(s, t, r, 1e-9));
        }
        let rr = r_range(tp, s).unwrap();
        prop_assert!(rr.lo <= rr.hi);
    }

    #[test]
    fn envelope_curves_bracket_every_admissible_function(
        x0 in 0.05f64..0.95,
        p0 in 0.05f64..0.95,
        mag in 0.05f64..5.0,
        left in any::<bool>(),
        frac in 0.0f64..1.0,
    ) {
        let s = if left { -mag } else { 1.0 + mag };
        let tp = ThroughPoint::new(x0, p0).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let curves = bounding_curves(tp, s, &grid).unwrap();
        let tb = t_range(tp, s).unwrap();
        let t = tb.range.lo + tb.range.width() * frac;
        let form = senscreen_core::HyperbolaForm {
            s,
            t,
            r: (x0 - s) * (p0 - t),
        };
        for sample in &curves.samples {
            let lo = sample.f_t_lo.min(sample.f_t_hi);
            let hi = sample.f_t_lo.max(sample.f_t_hi);
            let y = form.eval(sample.x);
            prop_assert!(
                y >= lo - 1e-9 && y <= hi + 1e-9,
                "escaped the envelope at x = {} (y = {y}, [{lo}, {hi}])",
                sample.x
            );
        }
    }
}
