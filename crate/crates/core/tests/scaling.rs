mod common;

use common::{ex, preset_problem};
use proptest::prelude::*;
use stencil_lab::conditions::{run_checks, SampleSpec};
use stencil_lab::expr::{Expr, Var};
use stencil_lab::lattice::sample;
use stencil_lab::operator::{apply_l, Constants, Problem};

/// `φ ∘ S⁻¹` with `S x = κ x`.
fn pulled(phi: &Expr, kappa: f64) -> Expr {
    phi.substitute(&|v| match v {
        Var::X(i) => Some(Expr::x(i) / Expr::num(kappa)),
        Var::T => None,
    })
}

fn scheme_is_invariant(prob: &Problem, phi: &Expr, kappa: f64) {
    let scaled = prob.rescaled(kappa).unwrap();
    let lu = apply_l(prob, &sample(phi, prob.domain(), 0.0).unwrap(), 0.0).unwrap();
    let lbar = apply_l(&scaled, &sample(&pulled(phi, kappa), scaled.domain(), 0.0).unwrap(), 0.0).unwrap();
    let scale = lu.sup_norm().max(1.0);
    for (i, v) in lu.iter_valid() {
        assert!(lbar.is_valid(i));
        assert!((v - lbar.values()[i]).abs() <= 1e-10 * scale, "{v} vs {}", lbar.values()[i]);
    }
}

/// Constants under which the checker inequalities are scale free: `K₁`
/// and `κ_q` multiply `q`, which scales by `κ²`.
fn scaled_constants(c: &Constants, kappa: f64) -> Constants {
    Constants {
        k1: c.k1 / (kappa * kappa),
        kappa: c.kappa.map(|k| k * kappa * kappa),
        ..c.clone()
    }
}

const PRESETS: [&str; 6] = [
    "heat-periodic",
    "transport-decreasing-b",
    "degenerate-q-x2",
    "drift-example",
    "heat-2d",
    "upwind-1d",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_scale_invariant(which in 0usize..PRESETS.len(), kappa in 0.25f64..4.0, phi in prop_oneof![
        Just("sin(x1) + x1^2"),
        Just("exp(-x1^2)*cos(3*x1)"),
    ]) {
        let prob = preset_problem(PRESETS[which]);
        let phi = if prob.dim() == 2 { ex(&format!("({phi})*cos(x2)")) } else { ex(phi) };
        scheme_is_invariant(&prob, &phi, kappa);
    }

    #[test]
    fn checker_verdicts_are_scale_invariant(which in 0usize..PRESETS.len(), kappa in 0.25f64..1.0) {
        let prob = preset_problem(PRESETS[which]);
        let prob = prob.with_constants(Constants { kappa: Some(0.5), ..prob.constants().clone() }).unwrap();
        let scaled = prob.rescaled(kappa).unwrap();
        let scaled = scaled.with_constants(scaled_constants(prob.constants(), kappa)).unwrap();
        let spec = SampleSpec::default();
        let a = run_checks(&prob, &["all"], &spec).unwrap();
        let b = run_checks(&scaled, &["all"], &spec).unwrap();
        for (r, s) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(r.verdict, s.verdict, "{} on {}", r.name, PRESETS[which]);
        }
    }
}
