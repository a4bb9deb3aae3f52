//! Richardson extrapolation over the spacings `h, h/2, ..., h/2^k`.

use rayon::prelude::*;

use crate::elliptic::{solve_elliptic, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{sample, GridFunction};
use crate::linalg;
use crate::operator::{fit_order, Problem};

/// Largest supported extrapolation order.
pub const MAX_K: usize = 12;

/// Weights `b` with `b V = e₁`, `V^{ij} = 2^{-(i-1)(j-1)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationWeights {
    pub k: usize,
    pub b: Vec<f64>,
}

fn vandermonde(k: usize) -> Vec<Vec<f64>> {
    (0..=k).map(|i| (0..=k).map(|j| 0.5f64.powi((i * j) as i32)).collect()).collect()
}

pub fn vandermonde_weights(k: usize) -> Result<ExtrapolationWeights> {
    if k > MAX_K {
        return Err(Error::OutOfRange(format!("extrapolation order k = {k} outside 0..={MAX_K}")));
    }
    let v = vandermonde(k);
    let mut rhs = vec![0.0; k + 1];
    rhs[0] = 1.0;
    // bV = e₁ is Vᵀbᵀ = e₁, and V is symmetric
    let b = linalg::solve(&v, &rhs).ok_or_else(|| Error::OutOfRange(format!("singular Vandermonde system at k = {k}")))?;
    let residual = (0..=k)
        .map(|j| ((0..=k).map(|i| b[i] * v[i][j]).sum::<f64>() - rhs[j]).abs())
        .fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(Error::OutOfRange(format!("weights for k = {k} have residual {residual:e}")));
    }
    Ok(ExtrapolationWeights { k, b })
}

/// `Σ b_j u_j` at the coarse points, where `levels[j]` lives on spacing `h/2^j`.
pub fn combine(weights: &ExtrapolationWeights, levels: &[GridFunction]) -> Result<GridFunction> {
    if levels.len() != weights.b.len() {
        return Err(Error::OutOfRange(format!("{} levels for {} weights", levels.len(), weights.b.len())));
    }
    let coarse = levels[0].domain();
    let values = (0..coarse.len())
        .map(|i| {
            levels
                .iter()
                .zip(&weights.b)
                .enumerate()
                .map(|(j, (u, b))| b * u.values()[coarse.refined_index(i, 1 << j)])
                .sum()
        })
        .collect();
    GridFunction::new(coarse.clone(), values)
}

/// Solves at every level concurrently with tolerance `tol · 4^{-k}` and
/// combines them on the lattice of `prob`.
pub fn extrapolate(prob: &Problem, k: usize, tol: f64) -> Result<GridFunction> {
    let weights = vandermonde_weights(k)?;
    let level_tol = tol * 4f64.powi(-(k as i32));
    let levels = (0..=k)
        .into_par_iter()
        .map(|j| {
            let p = prob.with_spacing(prob.h() / (1u64 << j) as f64)?;
            solve_elliptic(&p, level_tol, DEFAULT_MAX_ITER).map_err(|e| Error::Level { level: j, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    combine(&weights, &levels)
}

/// Least-squares slope of `ln e` against `ln h`; `+∞` if any error is zero.
pub fn observed_order(errors: &[(f64, f64)]) -> Result<f64> {
    if errors.len() < 3 {
        return Err(Error::OutOfRange(format!("{} levels; at least 3 are needed", errors.len())));
    }
    if errors.iter().any(|&(_, e)| e == 0.0) {
        return Ok(f64::INFINITY);
    }
    let (h, e): (Vec<f64>, Vec<f64>) = errors.iter().copied().unzip();
    Ok(fit_order(&h, &e))
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationRow {
    pub k: usize,
    pub h: f64,
    pub sup_error: f64,
}

/// Errors of the order-`k` extrapolant against an exact solution `v` over
/// each spacing, with the fitted order (NaN if fewer than 3 spacings).
pub fn convergence_study(prob: &Problem, exact: &Expr, k: usize, h_list: &[f64], tol: f64) -> Result<(Vec<ExtrapolationRow>, f64)> {
    let rows = h_list
        .iter()
        .map(|&h| {
            let p = prob.with_spacing(h)?;
            let v = extrapolate(&p, k, tol).map_err(Error::at_spacing(h))?;
            let reference = sample(exact, p.domain(), 0.0)?;
            let sup_error = v.sub(&reference)?.sup_norm();
            Ok(ExtrapolationRow { k, h, sup_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.sup_error)).collect();
    let order = observed_order(&pairs).unwrap_or(f64::NAN);
    Ok((rows, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_small_orders() {
        assert_eq!(vandermonde_weights(0).unwrap().b, vec![1.0]);
        let b1 = vandermonde_weights(1).unwrap().b;
        assert!((b1[0] + 1.0).abs() < 1e-14 && (b1[1] - 2.0).abs() < 1e-14);
        let b2 = vandermonde_weights(2).unwrap().b;
        for (got, want) in b2.iter().zip([1.0 / 3.0, -2.0, 8.0 / 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(vandermonde_weights(13).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        for k in 0..=MAX_K {
            let b = vandermonde_weights(k).unwrap().b;
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn observed_order_examples() {
        let h: f64 = 0.1;
        let e = [(h, h * h), (h / 2.0, h * h / 4.0), (h / 4.0, h * h / 16.0)];
        assert!((observed_order(&e).unwrap() - 2.0).abs() < 1e-6);
        assert_eq!(observed_order(&[(1.0, 0.0), (0.5, 0.0), (0.25, 0.0)]).unwrap(), f64::INFINITY);
        assert!(observed_order(&e[..2]).is_err());
    }
}
