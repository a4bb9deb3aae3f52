mod common;

use common::{ex, preset_problem, problem_1d};
use proptest::prelude::*;
use stencil_lab::elliptic::{solve_elliptic, solve_via_resolvent, DEFAULT_MAX_ITER};
use stencil_lab::lattice::{sample, DomainKind, GridFunction};
use stencil_lab::operator::{CoefficientSet, Problem};
use stencil_lab::parabolic::{solve_parabolic_with, stable_dt, verify_max_principle, ParabolicOptions, Record};
use stencil_lab::richardson::{combine, extrapolate, vandermonde_weights};

fn with_data(prob: &Problem, f: &str, g: &str) -> Problem {
    prob.with_coeffs(CoefficientSet {
        f: ex(f),
        g: ex(g),
        ..prob.coeffs().clone()
    })
    .unwrap()
}

fn every_step() -> ParabolicOptions {
    ParabolicOptions {
        record: Record::Every(1),
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parabolic_comparison(a in -1.0f64..1.0, b in 0.0f64..1.0, s in 0.0f64..1.0) {
        for name in ["degenerate-q-x2", "drift-example", "heat-2d"] {
            let base = preset_problem(name);
            let lo = with_data(&base, &format!("{a}*sin(3*x1)"), &format!("{a}*x1"));
            let hi = with_data(&base, &format!("{a}*sin(3*x1) + {b}*exp(-x1^2)"), &format!("{a}*x1 + {s}"));
            let t1 = solve_parabolic_with(&lo, &every_step()).unwrap();
            let t2 = solve_parabolic_with(&hi, &every_step()).unwrap();
            for (u1, u2) in t1.states.iter().zip(&t2.states) {
                for (x, y) in u1.values().iter().zip(u2.values()) {
                    prop_assert!(*x <= *y + 1e-12);
                }
            }
        }
    }

    #[test]
    fn elliptic_comparison(a in -1.0f64..1.0, b in 0.0f64..1.0) {
        for name in ["degenerate-q-x2", "drift-example", "stationary"] {
            let base = preset_problem(name);
            let lo = with_data(&base, &format!("{a}*cos(2*x1)"), "x1");
            let hi = with_data(&base, &format!("{a}*cos(2*x1) + {b}*(1 + sin(x1))"), "x1");
            let u1 = solve_elliptic(&lo, 1e-13, DEFAULT_MAX_ITER).unwrap();
            let u2 = solve_elliptic(&hi, 1e-13, DEFAULT_MAX_ITER).unwrap();
            for (x, y) in u1.values().iter().zip(u2.values()) {
                prop_assert!(*x <= *y + 1e-12);
            }
        }
    }
}

#[test]
fn parabolic_boundedness_when_nu_is_negative() {
    for name in ["decay", "heat-periodic", "degenerate-q-x2", "drift-example"] {
        let prob = preset_problem(name);
        let traj = solve_parabolic_with(&prob, &every_step()).unwrap();
        let rep = verify_max_principle(&prob, &traj, 0.0, None).unwrap();
        assert!(rep.nu <= -prob.constants().c0);
        let g0 = traj.states[0].values().iter().fold(0.0f64, |m, v| m.max(*v));
        let f_sup = sample(&prob.coeffs().f, prob.domain(), 0.0).unwrap().max().unwrap().max(0.0);
        let vmax = traj.states.iter().flat_map(|u| u.values().iter().copied()).fold(f64::NEG_INFINITY, f64::max);
        assert!(vmax <= g0 + f_sup / prob.constants().c0 + 1e-12, "{name}");
    }
}

#[test]
fn euler_is_first_order_in_time() {
    let prob = problem_1d(DomainKind::Periodic, 0.0, std::f64::consts::TAU, std::f64::consts::TAU / 16.0, "1", ["0", "0"], "1", "cos(x1)", "sin(x1)");
    let dt0 = stable_dt(&prob).unwrap();
    let run = |dt: f64| {
        let opts = ParabolicOptions { dt: Some(dt), record: Record::Endpoints, t_final: None };
        solve_parabolic_with(&prob, &opts).unwrap().final_state().clone()
    };
    // reference: Richardson in time from the two finest runs
    let fine = run(dt0 / 64.0);
    let finer = run(dt0 / 128.0);
    let reference = finer.scale(2.0).sub(&fine).unwrap();
    let dts: Vec<f64> = (0..4).map(|j| dt0 / (1 << j) as f64).collect();
    let errs: Vec<f64> = dts.iter().map(|&dt| run(dt).sub(&reference).unwrap().sup_norm()).collect();
    let order = stencil_lab::operator::fit_order(&dts, &errs);
    assert!((order - 1.0).abs() <= 0.3, "order {order}, errors {errs:?}");
}

#[test]
fn elliptic_sup_bound() {
    for name in ["model-1d", "degenerate-q-x2", "drift-example", "stationary", "manufactured-cos"] {
        let prob = preset_problem(name);
        let u = solve_elliptic(&prob, 1e-12, DEFAULT_MAX_ITER).unwrap();
        let dom = prob.domain();
        let interior = dom.interior_mask(prob.stencil());
        let f = sample(&prob.coeffs().f, dom, 0.0).unwrap();
        let g = sample(&prob.coeffs().g, dom, 0.0).unwrap();
        let sup_f = (0..dom.len()).filter(|&i| interior[i]).map(|i| f.values()[i].abs()).fold(0.0, f64::max);
        let sup_g = (0..dom.len()).filter(|&i| !interior[i]).map(|i| g.values()[i].abs()).fold(0.0, f64::max);
        assert!(u.sup_norm() <= sup_f / prob.constants().c0 + sup_g + 1e-10, "{name}");
    }
}

#[test]
fn gauss_seidel_matches_resolvent() {
    let tol = 1e-9;
    for name in ["degenerate-q-x2", "drift-example", "stationary", "heat-periodic"] {
        let prob = preset_problem(name);
        let a = solve_elliptic(&prob, tol, DEFAULT_MAX_ITER).unwrap();
        let b = solve_via_resolvent(&prob, tol).unwrap();
        let d = a.sub(&b).unwrap().sup_norm();
        assert!(d <= 3.0 * tol, "{name}: {d:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn extrapolation_is_linear_in_the_data(k in 0usize..5, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let prob = preset_problem("heat-periodic");
        let w = vandermonde_weights(k).unwrap();
        let level = |j: usize, salt: u64| {
            let d = prob.with_spacing(prob.h() / (1u64 << j) as f64).unwrap();
            let vals = (0..d.domain().len()).map(|i| (((i as u64 + 1) * (seed + salt + 7)) % 101) as f64 / 50.0 - 1.0).collect();
            GridFunction::new(d.domain().clone(), vals).unwrap()
        };
        let us: Vec<GridFunction> = (0..=k).map(|j| level(j, 1)).collect();
        let ws: Vec<GridFunction> = (0..=k).map(|j| level(j, 2)).collect();
        let mixed: Vec<GridFunction> = us.iter().zip(&ws).map(|(u, v)| u.scale(a).add(&v.scale(b)).unwrap()).collect();
        let lhs = combine(&w, &mixed).unwrap();
        let rhs = combine(&w, &us).unwrap().scale(a).add(&combine(&w, &ws).unwrap().scale(b)).unwrap();
        let scale = lhs.sup_norm().max(1.0);
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * scale);
    }
}

#[test]
fn weights_sum_to_one() {
    for k in 0..=8 {
        let s: f64 = vandermonde_weights(k).unwrap().b.iter().sum();
        assert!((s - 1.0).abs() < 1e-10, "k = {k}: {s}");
    }
}

#[test]
fn second_order_extrapolation_beats_plain_solve() {
    let prob = preset_problem("manufactured-cos");
    let exact = ex("cos(x1)");
    for h in [std::f64::consts::PI / 32.0, std::f64::consts::PI / 64.0] {
        let p = prob.with_spacing(h).unwrap();
        let v = sample(&exact, p.domain(), 0.0).unwrap();
        let e0 = extrapolate(&p, 0, 1e-12).unwrap().sub(&v).unwrap().sup_norm();
        let e2 = extrapolate(&p, 2, 1e-10).unwrap().sub(&v).unwrap().sup_norm();
        assert!(e2 * 4.0 <= e0, "h = {h}: {e2:e} vs {e0:e}");
    }
}
