use super::{BinOp, Expr, Func, Var};

// Constructors that fold the trivial identities differentiation produces
// (0 + a, 1 * a, ...). No further simplification.

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => Expr::zero(),
        (_, Some(1.0)) => a,
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(1.0) => a,
        Some(0.0) => Expr::Num(1.0),
        _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, vec![a])
}

pub(super) fn differentiate(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(differentiate(a, var)),
        Expr::Bin(op, a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => {
                    if db.is_zero() {
                        div(da, b)
                    } else {
                        div(sub(mul(da, b.clone()), mul(a, db)), mul(b.clone(), b))
                    }
                }
                BinOp::Pow => {
                    if !b.depends_on(var) {
                        // b * a^(b-1) * a'
                        let reduced = pow(a, sub(b.clone(), Expr::Num(1.0)));
                        mul(mul(b, reduced), da)
                    } else {
                        // a^b * (b' ln a + b a'/a)
                        let whole = pow(a.clone(), b.clone());
                        let term = add(mul(db, call(Func::Ln, a.clone())), div(mul(b, da), a));
                        mul(whole, term)
                    }
                }
            }
        }
        Expr::Call(func, args) => {
            let a = args[0].clone();
            let da = differentiate(&a, var);
            match func {
                Func::Min | Func::Max => {
                    let b = args[1].clone();
                    let db = differentiate(&b, var);
                    if da.is_zero() && db.is_zero() {
                        return Expr::zero();
                    }
                    // selector = 1 where the first argument is strictly chosen
                    let selector = match func {
                        Func::Min => call(Func::Step, sub(b, a)),
                        _ => call(Func::Step, sub(a, b)),
                    };
                    let other = sub(Expr::Num(1.0), selector.clone());
                    add(mul(selector, da), mul(other, db))
                }
                _ if da.is_zero() => Expr::zero(),
                Func::Sin => mul(call(Func::Cos, a), da),
                Func::Cos => neg(mul(call(Func::Sin, a), da)),
                Func::Exp => mul(call(Func::Exp, a), da),
                Func::Ln => div(da, a),
                Func::Sqrt => div(da, mul(Expr::Num(2.0), call(Func::Sqrt, a))),
                Func::Abs => mul(call(Func::Sign, a), da),
                Func::Sign | Func::Step => Expr::zero(),
                Func::Pos => mul(call(Func::Step, a), da),
                Func::Neg => neg(mul(call(Func::Step, neg(a)), da)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Expr {
        Expr::parse(s).unwrap().differentiate(Var::X(1))
    }

    #[test]
    fn power_rule_matches_closed_form() {
        let de = d("x1^2");
        let reference = Expr::parse("2*x1").unwrap();
        // deterministic pseudo-random points
        let mut s = 0x2545_f491_4f6c_dd1d_u64;
        for _ in 0..100 {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let x = (s >> 11) as f64 / (1u64 << 53) as f64 * 20.0 - 10.0;
            assert_eq!(de.eval(0.0, &[x]).unwrap(), reference.eval(0.0, &[x]).unwrap());
        }
    }

    #[test]
    fn time_derivative_of_space_function_is_zero() {
        let e = Expr::parse("sin(x1)").unwrap().differentiate(Var::T);
        assert!(e.is_zero());
    }

    #[test]
    fn sqrt_chain_rule_against_central_difference() {
        let e = Expr::parse("sqrt(1 + x1^2)").unwrap();
        let de = e.differentiate(Var::X(1));
        let step = 1e-5;
        for x in [-1.0, 0.3, 2.0] {
            let fd = (e.eval(0.0, &[x + step]).unwrap() - e.eval(0.0, &[x - step]).unwrap()) / (2.0 * step);
            assert!((de.eval(0.0, &[x]).unwrap() - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn nonsmooth_conventions() {
        assert_eq!(d("pos(x1)").eval(0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(d("pos(x1)").eval(0.0, &[0.5]).unwrap(), 1.0);
        assert_eq!(d("neg(x1)").eval(0.0, &[-0.5]).unwrap(), -1.0);
        assert_eq!(d("neg(x1)").eval(0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(d("abs(x1)").eval(0.0, &[-2.0]).unwrap(), -1.0);
        assert_eq!(d("abs(x1)").eval(0.0, &[0.0]).unwrap(), 0.0);
        let clip = d("max(min(x1, 1), -1)");
        assert_eq!(clip.eval(0.0, &[0.2]).unwrap(), 1.0);
        assert_eq!(clip.eval(0.0, &[1.5]).unwrap(), 0.0);
        assert_eq!(clip.eval(0.0, &[-1.5]).unwrap(), 0.0);
        assert_eq!(d("min(x1, 2*x1)").eval(0.0, &[1.0]).unwrap(), 1.0);
        assert_eq!(d("min(x1, 2*x1)").eval(0.0, &[-1.0]).unwrap(), 2.0);
    }

    #[test]
    fn variable_exponent() {
        let e = Expr::parse("x1^x1").unwrap();
        let de = e.differentiate(Var::X(1));
        let x: f64 = 1.7;
        let expected = x.powf(x) * (x.ln() + 1.0);
        assert!((de.eval(0.0, &[x]).unwrap() - expected).abs() < 1e-12);
    }
}
