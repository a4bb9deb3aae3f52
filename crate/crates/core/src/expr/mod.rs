//! Coefficient expression language.
//!
//! Every coefficient field of a problem (`q`, `p`, `c`, `f`, `g`, manufactured
//! solutions, test functions) is written as a small arithmetic expression over
//! the variables `t, x1, ..., xd`. Expressions are parsed once into an immutable
//! tree, evaluated in IEEE double precision and differentiated exactly.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)` and `2^-1` is `0.5`.
//!
//! Functions: `sin cos exp ln sqrt abs sign step pos neg` (one argument) and
//! `min max` (two arguments). `pos(y) = max(y, 0)`, `neg(y) = max(-y, 0)`,
//! `step(y)` is 1 for `y > 0` and 0 otherwise, `sign(0) = 0`.

mod diff;
mod parse;

use std::fmt;

pub use parse::ParseError;

/// Independent variable of a coefficient expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    /// Spatial coordinate, 1-based (`X(1)` is `x1`).
    X(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
    Step,
    Pos,
    Neg,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 12] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
        Func::Step,
        Func::Pos,
        Func::Neg,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Step => "step",
            Func::Pos => "pos",
            Func::Neg => "neg",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Functions whose derivative jumps somewhere (ties, kinks).
    pub fn is_nonsmooth(self) -> bool {
        matches!(
            self,
            Func::Abs | Func::Sign | Func::Step | Func::Pos | Func::Neg | Func::Min | Func::Max
        )
    }
}

/// Immutable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// What went wrong while evaluating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    SqrtOfNegative,
    LogOfNonPositive,
    DivisionByZero,
    NonFinite,
    UnboundVariable,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainErrorKind::SqrtOfNegative => "square root of a negative number",
            DomainErrorKind::LogOfNonPositive => "logarithm of a non-positive number",
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::NonFinite => "non-finite result",
            DomainErrorKind::UnboundVariable => "unbound variable",
        };
        f.write_str(s)
    }
}

/// Domain error raised by [`Expr::eval`]; carries the offending sub-expression
/// and the evaluation point.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} in `{expr}` at t = {t}, x = {x:?}")]
pub struct EvalError {
    pub kind: DomainErrorKind,
    pub expr: String,
    pub t: f64,
    pub x: Vec<f64>,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse::parse(source)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Evaluates at time `t` and point `x` (`x[0]` is `x1`).
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.eval_inner(t, x).map_err(|(kind, node)| EvalError {
            kind,
            expr: node.to_string(),
            t,
            x: x.to_vec(),
        })
    }

    fn eval_inner<'a>(&'a self, t: f64, x: &[f64]) -> Result<f64, (DomainErrorKind, &'a Expr)> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X(i)) => match x.get(i.wrapping_sub(1)) {
                Some(v) => *v,
                None => return Err((DomainErrorKind::UnboundVariable, self)),
            },
            Expr::Neg(a) => -a.eval_inner(t, x)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval_inner(t, x)?;
                let b = b.eval_inner(t, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err((DomainErrorKind::DivisionByZero, self));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err((DomainErrorKind::DivisionByZero, self));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval_inner(t, x)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err((DomainErrorKind::LogOfNonPositive, self));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err((DomainErrorKind::SqrtOfNegative, self));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Step => {
                        if a > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Pos => a.max(0.0),
                    Func::Neg => (-a).max(0.0),
                    Func::Min => a.min(args[1].eval_inner(t, x)?),
                    Func::Max => a.max(args[1].eval_inner(t, x)?),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err((DomainErrorKind::NonFinite, self))
        }
    }

    /// Exact symbolic derivative with respect to `var`.
    ///
    /// Nonsmooth primitives use one-sided conventions at their kinks:
    /// `abs' = sign`, `pos' = step`, `neg'(y) = -step(-y)`, and at a tie
    /// `min`/`max` take the derivative of their second argument.
    pub fn differentiate(&self, var: Var) -> Expr {
        diff::differentiate(self, var)
    }

    /// Gradient in `x1..x_dim`.
    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (1..=dim).map(|i| self.differentiate(Var::X(i))).collect()
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) => a.depends_on(var),
            Expr::Bin(_, a, b) => a.depends_on(var) || b.depends_on(var),
            Expr::Call(_, args) => args.iter().any(|a| a.depends_on(var)),
        }
    }

    /// Largest spatial index referenced (0 when no `x_i` appears).
    pub fn max_x_index(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(Var::T) => 0,
            Expr::Var(Var::X(i)) => *i,
            Expr::Neg(a) => a.max_x_index(),
            Expr::Bin(_, a, b) => a.max_x_index().max(b.max_x_index()),
            Expr::Call(_, args) => args.iter().map(Expr::max_x_index).max().unwrap_or(0),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        !self.depends_on(Var::T)
    }

    pub fn is_space_independent(&self) -> bool {
        self.max_x_index() == 0
    }

    /// True when any of `abs sign step pos neg min max` occurs.
    pub fn has_nonsmooth(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(a) => a.has_nonsmooth(),
            Expr::Bin(_, a, b) => a.has_nonsmooth() || b.has_nonsmooth(),
            Expr::Call(f, args) => f.is_nonsmooth() || args.iter().any(Expr::has_nonsmooth),
        }
    }

    /// Replaces variables according to `map`; variables mapped to `None` stay.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(v) => map(*v).unwrap_or(Expr::Var(*v)),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

macro_rules! expr_op {
    ($trait:ident, $method:ident, $build:path) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;

            fn $method(self, rhs: Expr) -> Expr {
                $build(self, rhs)
            }
        }
    };
}

// Folding constructors: `0 + a`, `1 * a` and numeric operands collapse.
expr_op!(Add, add, diff::add);
expr_op!(Sub, sub, diff::sub);
expr_op!(Mul, mul, diff::mul);
expr_op!(Div, div, diff::div);

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        diff::neg(self)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 3)
            }
            Expr::Bin(op, a, b) => {
                let (left, right) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                write_operand(f, a, left)?;
                f.write_str(op.symbol())?;
                write_operand(f, b, right)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
