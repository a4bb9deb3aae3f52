#![allow(dead_code)]

use proptest::prelude::*;
use stencil_lab::config::RunConfig;
use stencil_lab::expr::Expr;
use stencil_lab::lattice::{Domain, DomainKind, Stencil};
use stencil_lab::operator::{CoefficientSet, Constants, Problem};
use stencil_lab::presets::preset;

pub fn ex(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

pub fn preset_problem(name: &str) -> Problem {
    preset(name).unwrap().problem().unwrap()
}

pub fn preset_config(name: &str) -> RunConfig {
    preset(name).unwrap()
}

/// One-dimensional problem on `[lo, hi]` with stencil `{1, -1}`.
#[allow(clippy::too_many_arguments)]
pub fn problem_1d(kind: DomainKind, lo: f64, hi: f64, h: f64, q: &str, p: [&str; 2], c: &str, f: &str, g: &str) -> Problem {
    let dom = Domain::new(kind, vec![lo], vec![hi], h).unwrap();
    let coeffs = CoefficientSet {
        q: vec![ex(q), ex(q)],
        p: vec![ex(p[0]), ex(p[1])],
        c: ex(c),
        f: ex(f),
        g: ex(g),
    };
    Problem::new(dom, Stencil::axes(1), coeffs, Constants::default()).unwrap()
}

/// Smooth expressions in `x1`, `x2` and `t`, bounded on `[-1, 1]³`.
pub fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("t".to_string()),
        (-3.0f64..3.0).prop_map(|v| format!("{v:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + sin({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.2*sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}
