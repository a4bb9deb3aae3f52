//! Solvers for `Lu + f = 0` in `Q°`, `u = g` on `δQ`, and the closed-form
//! one-dimensional model oracle.
//!
//! Coefficients are evaluated at `t = 0`.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{sample, Domain, DomainKind, GridFunction};
use crate::operator::{sample_at, OperatorTable, Problem};
use crate::parabolic::{stable_dt, Stepper};

/// Default sweep limit for Gauss–Seidel.
pub const DEFAULT_MAX_ITER: usize = 2_000_000;

/// Checks `χ_λ ≥ 0` and `c ≥ c₀` on `Q°` at `t = 0`.
pub fn check_elliptic_preconditions(prob: &Problem, table: &OperatorTable) -> Result<()> {
    let dom = prob.domain();
    let c0 = prob.constants().c0;
    for (j, &i) in table.interior.iter().enumerate() {
        let (_, w) = table.row(j);
        if let Some(k) = w.iter().position(|&v| v < 0.0) {
            return Err(Error::Precondition(format!(
                "chi for lambda = {:?} is {} < 0 at x = {:?}",
                prob.stencil().vector(k),
                w[k] * prob.h() * prob.h(),
                dom.point(i)
            )));
        }
        if table.c[j] < c0 {
            return Err(Error::Precondition(format!(
                "c = {} < c0 = {c0} at x = {:?}",
                table.c[j],
                dom.point(i)
            )));
        }
    }
    Ok(())
}

fn residual(table: &OperatorTable, u: &[f64], f: &[f64]) -> f64 {
    (0..table.interior.len()).fold(0.0, |m, j| m.max((table.apply_l_at(u, j) + f[j]).abs()))
}

/// Gauss–Seidel on `(c + h⁻² Σ χ) u = h⁻² Σ χ u(x + hλ) + f`, sweeping `Q°`
/// in lattice order until `sup |Lu + f| ≤ tol · min(1, c₀)`; since
/// `sup |u - u*| ≤ c₀⁻¹ sup |Lu + f|`, the returned iterate is within `tol`
/// of the discrete solution.
pub fn solve_elliptic(prob: &Problem, tol: f64, max_iter: usize) -> Result<GridFunction> {
    if !(tol > 0.0) {
        return Err(Error::Problem(format!("tolerance {tol} must be positive")));
    }
    let table = OperatorTable::build(prob, 0.0)?;
    check_elliptic_preconditions(prob, &table)?;
    let dom = prob.domain();
    let f = sample_at(&prob.coeffs().f, dom, &table.interior, 0.0)?;
    let mut u = sample(&prob.coeffs().g, dom, 0.0)?.into_values();
    for (j, &i) in table.interior.iter().enumerate() {
        u[i] = f[j] / (table.c[j] + table.weight_sum(j));
    }
    let diag: Vec<f64> = (0..table.interior.len()).map(|j| table.c[j] + table.weight_sum(j)).collect();
    let target = tol * prob.constants().c0.min(1.0);
    let mut res = residual(&table, &u, &f);
    let mut iterations = 0;
    while res > target {
        if iterations == max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: res,
                best: Box::new(GridFunction::from_parts(dom.clone(), u, None)),
            });
        }
        for (j, &i) in table.interior.iter().enumerate() {
            let (nb, w) = table.row(j);
            let s: f64 = nb.iter().zip(w).map(|(&n, &wk)| wk * u[n]).sum();
            u[i] = (s + f[j]) / diag[j];
        }
        iterations += 1;
        res = residual(&table, &u, &f);
        if !res.is_finite() {
            return Err(Error::NonFinite { step: iterations, time: 0.0 });
        }
    }
    Ok(GridFunction::from_parts(dom.clone(), u, None))
}

/// `u = ∫₀^∞ e^{-νt} v dt` with `ν = c₀/2`, `D_t v = (L + ν) v`, `v(0) = f`
/// and `v = νg` on `δQ`. The integral is taken with the weights
/// `dt (1 + ν dt)^{-(n+1)}`, which make the sum the exact solution of the
/// discrete equation for Euler steps; the sum is truncated once the tail
/// bound `ρ^N max(sup|f|, ν sup|g|) / ν` falls below `tol / 2`.
pub fn solve_via_resolvent(prob: &Problem, tol: f64) -> Result<GridFunction> {
    if !(tol > 0.0) {
        return Err(Error::Problem(format!("tolerance {tol} must be positive")));
    }
    let table = OperatorTable::build(prob, 0.0)?;
    check_elliptic_preconditions(prob, &table)?;
    let nu = prob.constants().c0 / 2.0;
    let dom = prob.domain();
    let mut coeffs = prob.coeffs().clone();
    coeffs.c = coeffs.c.clone() - Expr::num(nu);
    coeffs.f = Expr::zero();
    let frozen = coeffs.map(|e| e.substitute(&|v| matches!(v, crate::expr::Var::T).then(Expr::zero)));
    let shifted = prob.with_coeffs(frozen)?;
    let dt = stable_dt(&shifted)?;

    let g = sample(&prob.coeffs().g, dom, 0.0)?;
    let f = sample_at(&prob.coeffs().f, dom, &table.interior, 0.0)?;
    let boundary: Vec<f64> = g.values().iter().map(|v| nu * v).collect();
    let mut initial = boundary.clone();
    for (j, &i) in table.interior.iter().enumerate() {
        initial[i] = f[j];
    }
    let m = f.iter().chain(&boundary).fold(0.0f64, |m, v| m.max(v.abs()));
    let rho = 1.0 / (1.0 + nu * dt);
    let mut acc = vec![0.0; dom.len()];
    let mut stepper = Stepper::new(&shifted, initial, &boundary, false)?;
    let mut weight = dt * rho;
    let mut tail = m / nu;
    loop {
        for (a, v) in acc.iter_mut().zip(stepper.values()) {
            *a += weight * v;
        }
        weight *= rho;
        tail *= rho;
        if tail <= tol / 2.0 {
            break;
        }
        stepper.step(dt)?;
    }
    Ok(GridFunction::from_parts(dom.clone(), acc, None))
}

/// Value of the series oracle with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Solution at `x` of `h⁻²(u(x+h) - 2u(x) + u(x-h)) - u(x) + f(x) = 0` on the
/// whole line, as the random-walk series
/// `u(x) = Σ_n α βⁿ E f(x + h S_n)`, `α = h²/(2+h²)`, `β = 2/(2+h²)`,
/// with `S_n` a simple symmetric walk. Expectations are summed exactly over
/// the binomial law. Terms are added until the tail `β^{n+1} sup|f|` is at
/// most `tol`; `sup_f` defaults to the sup of `|f|` over the lattice points
/// within `4 n_max` steps of `x`.
pub fn series_oracle_1d(f: &Expr, h: f64, x: f64, n_max: usize, tol: f64, sup_f: Option<f64>) -> Result<SeriesValue> {
    if !(h > 0.0) {
        return Err(Error::Problem(format!("spacing h = {h} must be positive")));
    }
    if f.max_x_index() > 1 {
        return Err(Error::Problem(format!("`{f}` is not a function of x1 alone")));
    }
    let eval = |k: i64| f.eval(0.0, &[x + h * k as f64]);
    let sup_f = match sup_f {
        Some(s) => s,
        None => {
            let reach = 4 * n_max as i64;
            let mut s = 0.0f64;
            for k in -reach..=reach {
                s = s.max(eval(k)?.abs());
            }
            s
        }
    };
    let n = n_max as i64;
    let values: Vec<f64> = (-n..=n).map(eval).collect::<std::result::Result<_, _>>()?;
    let alpha = h * h / (2.0 + h * h);
    let beta = 2.0 / (2.0 + h * h);
    // prob[k + n] = P(S_m = k)
    let mut prob = vec![0.0; values.len()];
    prob[n_max] = 1.0;
    let mut next = prob.clone();
    let mut value = 0.0;
    let mut coef = alpha;
    let mut tail = beta * sup_f;
    for m in 0..=n_max {
        let lo = n_max - m;
        let hi = n_max + m;
        let mut e = 0.0;
        for k in (lo..=hi).step_by(2) {
            e += prob[k] * values[k];
        }
        value += coef * e;
        if tail <= tol {
            return Ok(SeriesValue {
                value,
                tail_bound: tail,
                terms: m + 1,
            });
        }
        if m == n_max {
            break;
        }
        for v in next[lo.saturating_sub(1)..=(hi + 1).min(2 * n_max)].iter_mut() {
            *v = 0.0;
        }
        for k in (lo..=hi).step_by(2) {
            next[k - 1] += 0.5 * prob[k];
            next[k + 1] += 0.5 * prob[k];
        }
        std::mem::swap(&mut prob, &mut next);
        coef *= beta;
        tail *= beta;
    }
    Err(Error::TailTooLarge { bound: tail, tol, n_max })
}

/// Direct solve of the model equation
/// `h⁻²(u(x+h) - 2u(x) + u(x-h)) - u(x) + f(x) = 0` on `[lower, upper]`
/// with `u = 0` at both ends (Thomas algorithm).
pub fn tridiagonal_model_1d(f: &Expr, h: f64, lower: f64, upper: f64) -> Result<GridFunction> {
    let dom = Domain::new(DomainKind::Box, vec![lower], vec![upper], h)?;
    let n = dom.len();
    let fv = sample(f, &dom, 0.0)?;
    let off = -1.0 / (h * h);
    let diag = 2.0 / (h * h) + 1.0;
    let m = n - 2;
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    for i in 0..m {
        let rhs = fv.values()[i + 1];
        let (c_prev, d_prev) = if i == 0 { (0.0, 0.0) } else { (cp[i - 1], dp[i - 1]) };
        let denom = diag - off * c_prev;
        cp[i] = off / denom;
        dp[i] = (rhs - off * d_prev) / denom;
    }
    let mut u = vec![0.0; n];
    for i in (0..m).rev() {
        let next = if i + 1 < m { u[i + 2] } else { 0.0 };
        u[i + 1] = dp[i] - cp[i] * next;
    }
    GridFunction::new(dom, u)
}
