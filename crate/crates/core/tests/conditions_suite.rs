mod common;

use common::{preset_problem, problem_1d};
use proptest::prelude::*;
use stencil_lab::conditions::{
    check_quadratic_form, check_rough_condition, quadratic_form_matrices, run_checks, Budgets, SampleSpec, Verdict,
};
use stencil_lab::expr::Expr;
use stencil_lab::lattice::DomainKind;
use stencil_lab::linalg::symmetric_eigen;
use stencil_lab::operator::{CoefficientSet, Constants};

const SUITE: [&str; 9] = [
    "model-1d",
    "heat-periodic",
    "heat-2d",
    "degenerate-q-x2",
    "drift-example",
    "transport-decreasing-b",
    "transport-increasing-b",
    "upwind-1d",
    "manufactured-cos",
];

#[test]
fn records_are_consistent() {
    for name in SUITE {
        let prob = preset_problem(name);
        let prob = prob.with_constants(Constants { kappa: Some(0.5), ..prob.constants().clone() }).unwrap();
        for r in run_checks(&prob, &["all"], &SampleSpec::default()).unwrap().records {
            match r.verdict {
                Verdict::Fail => {
                    assert!(r.margin < -r.tolerance, "{name}/{}", r.name);
                    assert!(r.witness.is_some(), "{name}/{}", r.name);
                }
                Verdict::Pass => assert!(r.margin >= -r.tolerance, "{name}/{}", r.name),
                Verdict::NotApplicable => assert!(r.margin.is_nan() && r.note.is_some(), "{name}/{}", r.name),
            }
        }
    }
}

#[test]
fn checkers_are_monotone_in_c() {
    for name in SUITE {
        let prob = preset_problem(name);
        let raised = prob
            .with_coeffs(CoefficientSet {
                c: prob.coeffs().c.clone() + Expr::num(10.0),
                ..prob.coeffs().clone()
            })
            .unwrap();
        let spec = SampleSpec::default();
        let a = run_checks(&prob, &["all"], &spec).unwrap();
        let b = run_checks(&raised, &["all"], &spec).unwrap();
        for (r, s) in a.records.iter().zip(&b.records) {
            if r.verdict == Verdict::Pass {
                assert_ne!(s.verdict, Verdict::Fail, "{name}/{}", r.name);
            }
            if r.margin.is_finite() && s.margin.is_finite() {
                assert!(s.margin >= r.margin - 1e-12, "{name}/{}: {} -> {}", r.name, r.margin, s.margin);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn x_independent_coefficients_pass_quadratic_form(
        q in 0.0f64..5.0,
        p1 in 0.0f64..5.0,
        p2 in 0.0f64..5.0,
        extra in 0.0f64..3.0,
        delta in 0.001f64..0.2499,
        h in prop_oneof![Just(0.5), Just(0.25), Just(0.1)],
    ) {
        let qs = format!("{q}");
        let (a, b) = (format!("{p1}"), format!("{p2}"));
        let c = format!("{}", 1.0 + extra);
        let prob = problem_1d(DomainKind::Box, -1.0, 1.0, h, &qs, [&a, &b], &c, "0", "0");
        let prob = prob.with_constants(Constants { delta, ..Constants::default() }).unwrap();
        let r = check_quadratic_form(&prob, &SampleSpec::default(), &Budgets::default());
        prop_assert_eq!(r.verdict, Verdict::Pass, "{:?}", r);
    }
}

#[test]
fn eigenvalues_match_independent_solvers() {
    for name in ["transport-increasing-b", "transport-decreasing-b", "degenerate-q-x2"] {
        let prob = preset_problem(name);
        let dom = prob.domain();
        for i in (0..dom.len()).step_by(7) {
            let x = dom.point(i);
            let Ok((a, b)) = quadratic_form_matrices(&prob, 0.0, &x) else { continue };
            let n = a.len();
            let diff: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| b[r][c] - a[r][c]).collect()).collect();
            let (vals, _) = symmetric_eigen(&diff);
            let m = nalgebra::DMatrix::from_fn(n, n, |r, c| diff[r][c]);
            let reference = m.symmetric_eigen().eigenvalues.min();
            let scale = diff.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
            assert!((vals[0] - reference).abs() <= 1e-10 * scale, "{name} x={x:?}");
            if n == 2 {
                let grid = (0..7200)
                    .map(|k| {
                        let th = k as f64 * std::f64::consts::PI / 3600.0;
                        let xi = [th.cos(), th.sin()];
                        (0..2).map(|r| (0..2).map(|c| xi[r] * diff[r][c] * xi[c]).sum::<f64>()).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(grid >= vals[0] - 1e-9 * scale && grid - vals[0] <= 1e-5 * scale, "{name} x={x:?}");
            }
        }
    }
}

#[test]
fn rough_condition_implies_quadratic_form_for_small_delta() {
    let mut exercised = 0;
    for name in SUITE {
        let prob = preset_problem(name);
        let k1 = Constants { k1: 10.0, ..prob.constants().clone() };
        let prob = prob.with_constants(k1.clone()).unwrap();
        let spec = SampleSpec::default();
        if check_rough_condition(&prob, &spec).verdict != Verdict::Pass {
            continue;
        }
        exercised += 1;
        let small = prob.with_constants(Constants { delta: 0.01, ..k1 }).unwrap();
        let r = check_quadratic_form(&small, &spec, &Budgets::default());
        assert_ne!(r.verdict, Verdict::Fail, "{name}: {r:?}");
    }
    assert!(exercised >= 3, "only {exercised} presets satisfy the rough condition");
}
