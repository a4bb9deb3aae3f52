mod common;

use common::{ex, preset_problem};
use stencil_lab::estimates::{gradient_bound_study, StudyMode};
use stencil_lab::lattice::{gradient_functional_u, sample};
use stencil_lab::operator::{CoefficientSet, Constants};

#[test]
fn doubling_the_data_doubles_the_sups() {
    for (name, mode) in [("degenerate-q-x2", StudyMode::Elliptic), ("heat-periodic", StudyMode::Parabolic), ("drift-example", StudyMode::Parabolic)] {
        let prob = preset_problem(name);
        let doubled = prob
            .with_coeffs(CoefficientSet {
                f: ex("2") * prob.coeffs().f.clone(),
                g: ex("2") * prob.coeffs().g.clone(),
                ..prob.coeffs().clone()
            })
            .unwrap();
        let h = [prob.h()];
        let a = &gradient_bound_study(&prob, &h, mode).unwrap().rows[0];
        let b = &gradient_bound_study(&doubled, &h, mode).unwrap().rows[0];
        for (x, y) in [(a.sup_u, b.sup_u), (a.sup_big_u, b.sup_big_u)] {
            assert!((2.0 * x - y).abs() <= 1e-10 * y.abs().max(1.0), "{name}: {x} {y}");
        }
    }
}

#[test]
fn zero_weights_give_zero_functional() {
    let prob = preset_problem("heat-2d");
    let st = prob.stencil().clone().with_tau(vec![0.0; prob.stencil().len()]).unwrap();
    let u = sample(&ex("sin(3*x1)*cos(x2)"), prob.domain(), 0.0).unwrap();
    let big_u = gradient_functional_u(&u, &st).unwrap();
    assert!(big_u.iter_valid().all(|(_, v)| v == 0.0));
}

#[test]
fn ratio_grows_at_most_threefold_when_t_doubles() {
    for name in ["heat-periodic", "transport-decreasing-b", "drift-example", "degenerate-q-x2"] {
        let prob = preset_problem(name);
        let twice = prob
            .with_constants(Constants { t_final: 2.0 * prob.constants().t_final, ..prob.constants().clone() })
            .unwrap();
        let h = [prob.h(), prob.h() / 2.0];
        let a = gradient_bound_study(&prob, &h, StudyMode::Parabolic).unwrap();
        let b = gradient_bound_study(&twice, &h, StudyMode::Parabolic).unwrap();
        for (r, s) in a.rows.iter().zip(&b.rows) {
            assert!(s.ratio <= 3.0 * r.ratio, "{name} h={}: {} vs {}", r.h, s.ratio, r.ratio);
        }
    }
}
