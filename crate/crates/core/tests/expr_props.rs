mod common;

use common::smooth_expr;
use proptest::prelude::*;
use stencil_lab::expr::{Expr, Var};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn render_then_parse_evaluates_identically(
        src in smooth_expr(),
        t in -1.0f64..1.0,
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
    ) {
        let e = Expr::parse(&src).unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        let x = [x1, x2];
        prop_assert!(close(e.eval(t, &x).unwrap(), again.eval(t, &x).unwrap(), 1e-15), "{} vs {}", e, again);
    }

    #[test]
    fn derivative_matches_central_difference(
        src in smooth_expr(),
        t in -1.0f64..1.0,
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
        which in 0usize..3,
    ) {
        let e = Expr::parse(&src).unwrap();
        let var = [Var::T, Var::X(1), Var::X(2)][which];
        let d = e.differentiate(var).eval(t, &[x1, x2]).unwrap();
        let eps = 1e-5;
        let at = |s: f64| {
            let (mut tt, mut x) = (t, [x1, x2]);
            match var {
                Var::T => tt += s,
                Var::X(i) => x[i - 1] += s,
            }
            e.eval(tt, &x).unwrap()
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        prop_assert!(close(d, fd, 1e-5), "{}: d = {}, fd = {}", e, d, fd);
    }
}

#[test]
fn arithmetic_operators_build_expressions() {
    let x = Expr::x(1);
    let e = (x.clone() * x.clone() + Expr::num(1.0)) / Expr::num(2.0) - (-x);
    assert_eq!(e.eval(0.0, &[3.0]).unwrap(), 8.0);
}
