//! Problems and the discrete operators `L⁰` and `L = L⁰ - c`.
//!
//! For a stencil `Λ₁` and coefficients `q_λ, p_λ, c` the scheme acts by
//!
//! ```text
//! L⁰φ(x) = h⁻² Σ_λ χ_λ(t,x) (φ(x + hλ) - φ(x)),   χ_λ = q_λ + h p_λ
//! ```
//!
//! and approximates `ℒ = a_ij D_i D_j + b_i D_i - c` with
//! `a_ij = ½ Σ q_λ λ_i λ_j` and `b_i = Σ p_λ λ_i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::lattice::{Domain, GridFunction, Stencil};

/// Coefficient expressions; `q` and `p` are aligned with the stencil vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub q: Vec<Expr>,
    pub p: Vec<Expr>,
    pub c: Expr,
    pub f: Expr,
    pub g: Expr,
}

impl CoefficientSet {
    /// All coefficients zero for a stencil of `n` vectors.
    pub fn zero(n: usize) -> Self {
        CoefficientSet {
            q: vec![Expr::zero(); n],
            p: vec![Expr::zero(); n],
            c: Expr::zero(),
            f: Expr::zero(),
            g: Expr::zero(),
        }
    }

    fn all(&self) -> impl Iterator<Item = &Expr> {
        self.q.iter().chain(&self.p).chain([&self.c, &self.f, &self.g])
    }

    /// Applies `map` to every expression.
    pub fn map(&self, map: impl Fn(&Expr) -> Expr) -> Self {
        CoefficientSet {
            q: self.q.iter().map(&map).collect(),
            p: self.p.iter().map(&map).collect(),
            c: map(&self.c),
            f: map(&self.f),
            g: map(&self.g),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    pub c0: f64,
    pub delta: f64,
    pub k1: f64,
    /// Declared smoothness order of the coefficients (metadata only).
    pub m: u32,
    pub t_final: f64,
    /// Artificial diffusion already added to every `p_λ`.
    pub theta: f64,
    /// Lower bound for `q_λ` used by the nondegenerate shortcut check.
    pub kappa: Option<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c0: 1.0,
            delta: 0.2,
            k1: 1.0,
            m: 1,
            t_final: 1.0,
            theta: 0.0,
            kappa: None,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Problem(m));
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return bad(format!("c0 = {} must be positive", self.c0));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} outside (0,1]", self.delta));
        }
        if !(self.k1 >= 1.0 && self.k1.is_finite()) {
            return bad(format!("K1 = {} must be at least 1", self.k1));
        }
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("T = {} must be positive", self.t_final));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return bad(format!("theta = {} must be nonnegative", self.theta));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("kappa = {k} must be positive"));
            }
        }
        Ok(())
    }
}

/// Domain, stencil, coefficients and constants of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    domain: Domain,
    stencil: Stencil,
    coeffs: CoefficientSet,
    constants: Constants,
}

impl Problem {
    pub fn new(domain: Domain, stencil: Stencil, coeffs: CoefficientSet, constants: Constants) -> Result<Self> {
        let d = domain.dim();
        if stencil.dim() != d {
            return Err(Error::Problem(format!(
                "stencil dimension {} does not match domain dimension {d}",
                stencil.dim()
            )));
        }
        if coeffs.q.len() != stencil.len() || coeffs.p.len() != stencil.len() {
            return Err(Error::Problem(format!(
                "{} q and {} p entries for {} stencil vectors",
                coeffs.q.len(),
                coeffs.p.len(),
                stencil.len()
            )));
        }
        if let Some(e) = coeffs.all().find(|e| e.max_x_index() > d) {
            return Err(Error::Problem(format!("expression `{e}` uses a variable beyond x{d}")));
        }
        if coeffs.g.depends_on(Var::T) {
            return Err(Error::Problem(format!("g = `{}` must not depend on t", coeffs.g)));
        }
        constants.validate()?;
        Ok(Problem {
            domain,
            stencil,
            coeffs,
            constants,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn h(&self) -> f64 {
        self.domain.h()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn with_spacing(&self, h: f64) -> Result<Self> {
        let mut out = self.clone();
        out.domain = self.domain.with_spacing(h)?;
        Ok(out)
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Problem::new(domain, self.stencil.clone(), self.coeffs.clone(), self.constants.clone())
    }

    pub fn with_coeffs(&self, coeffs: CoefficientSet) -> Result<Self> {
        Problem::new(self.domain.clone(), self.stencil.clone(), coeffs, self.constants.clone())
    }

    pub fn with_constants(&self, constants: Constants) -> Result<Self> {
        Problem::new(self.domain.clone(), self.stencil.clone(), self.coeffs.clone(), constants)
    }

    pub fn with_stencil(&self, stencil: Stencil) -> Result<Self> {
        Problem::new(self.domain.clone(), stencil, self.coeffs.clone(), self.constants.clone())
    }

    /// `q`, `p` and `c` do not depend on `t`.
    pub fn operator_is_autonomous(&self) -> bool {
        self.coeffs.q.iter().chain(&self.coeffs.p).chain([&self.coeffs.c]).all(Expr::is_time_independent)
    }

    /// Adds `theta` to every `p_λ`; requires `Λ₁ = -Λ₁` so the limit drift is unchanged.
    pub fn add_theta(&self, theta: f64) -> Result<Self> {
        if !self.stencil.is_symmetric() {
            return Err(Error::Problem("artificial diffusion needs a symmetric stencil".into()));
        }
        let mut coeffs = self.coeffs.clone();
        for p in &mut coeffs.p {
            *p = p.clone() + Expr::num(theta);
        }
        let mut constants = self.constants.clone();
        constants.theta += theta;
        Problem::new(self.domain.clone(), self.stencil.clone(), coeffs, constants)
    }

    /// The problem seen through `x -> kappa x`: spacing `kappa h`,
    /// `q̄ = kappa² q(x/kappa)`, `p̄ = kappa p(x/kappa)`, other fields `(x/kappa)`.
    pub fn rescaled(&self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Problem(format!("scale factor {kappa} must be positive")));
        }
        let pull = |e: &Expr| {
            e.substitute(&|v| match v {
                Var::X(i) => Some(Expr::x(i) / Expr::num(kappa)),
                Var::T => None,
            })
        };
        let base = self.coeffs.map(pull);
        let coeffs = CoefficientSet {
            q: base.q.into_iter().map(|q| Expr::num(kappa * kappa) * q).collect(),
            p: base.p.into_iter().map(|p| Expr::num(kappa) * p).collect(),
            ..base
        };
        Problem::new(self.domain.dilated(kappa)?, self.stencil.clone(), coeffs, self.constants.clone())
    }

    /// `χ_λ(t, x) = q_λ + h p_λ` for the stencil vector with index `k`.
    pub fn chi(&self, k: usize, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.coeffs.q[k].eval(t, x)? + self.h() * self.coeffs.p[k].eval(t, x)?)
    }

    /// Symbolic `a_ij` and `b_i` of the limit operator.
    pub fn limit_coefficient_exprs(&self) -> (Vec<Vec<Expr>>, Vec<Expr>) {
        let d = self.dim();
        let vecs = self.stencil.vectors();
        let a = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        vecs.iter().zip(&self.coeffs.q).fold(Expr::zero(), |acc, (v, q)| {
                            let w = 0.5 * (v[i] * v[j]) as f64;
                            acc + Expr::num(w) * q.clone()
                        })
                    })
                    .collect()
            })
            .collect();
        let b = (0..d)
            .map(|i| {
                vecs.iter()
                    .zip(&self.coeffs.p)
                    .fold(Expr::zero(), |acc, (v, p)| acc + Expr::num(v[i] as f64) * p.clone())
            })
            .collect();
        (a, b)
    }

    /// Numeric `a(t,x)` and `b(t,x)` of the limit operator.
    pub fn limit_coefficients(&self, t: f64, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let d = self.dim();
        let mut a = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        for (k, v) in self.stencil.vectors().iter().enumerate() {
            let q = self.coeffs.q[k].eval(t, x)?;
            let p = self.coeffs.p[k].eval(t, x)?;
            for i in 0..d {
                b[i] += p * v[i] as f64;
                for j in 0..d {
                    a[i][j] += 0.5 * q * (v[i] * v[j]) as f64;
                }
            }
        }
        Ok((a, b))
    }

    /// `ℒφ` as an expression.
    pub fn limit_operator_applied(&self, phi: &Expr) -> Expr {
        let (a, b) = self.limit_coefficient_exprs();
        let grad = phi.gradient(self.dim());
        let mut out = -(self.coeffs.c.clone() * phi.clone());
        for (i, gi) in grad.iter().enumerate() {
            out = out + b[i].clone() * gi.clone();
            for (j, aij) in a[i].iter().enumerate() {
                out = out + aij.clone() * gi.differentiate(Var::X(j + 1));
            }
        }
        out
    }

    /// The forcing `f = -ℒv` that makes `v` the exact solution of `ℒv + f = 0`.
    pub fn manufactured_forcing(&self, v: &Expr) -> Expr {
        -self.limit_operator_applied(v)
    }
}

/// `χ_λ` and `c` tabulated on `Q°` at a fixed time.
#[derive(Debug, Clone)]
pub struct OperatorTable {
    pub t: f64,
    /// Flat lattice indices of `Q°`.
    pub interior: Vec<usize>,
    /// `neighbors[j * K + k]`: index of `x_j + h λ_k`.
    pub neighbors: Vec<usize>,
    /// `h⁻² χ_{λ_k}(t, x_j)` laid out like `neighbors`.
    pub weights: Vec<f64>,
    pub c: Vec<f64>,
    pub width: usize,
}

impl OperatorTable {
    pub fn build(prob: &Problem, t: f64) -> Result<Self> {
        let dom = prob.domain();
        let st = prob.stencil();
        let width = st.len();
        let mask = dom.interior_mask(st);
        let interior: Vec<usize> = (0..dom.len()).filter(|&i| mask[i]).collect();
        let inv_h2 = 1.0 / (prob.h() * prob.h());
        let rows: Vec<(Vec<usize>, Vec<f64>, f64)> = interior
            .par_iter()
            .map(|&i| {
                let x = dom.point(i);
                let mut nb = Vec::with_capacity(width);
                let mut w = Vec::with_capacity(width);
                for (k, v) in st.vectors().iter().enumerate() {
                    nb.push(dom.neighbor(i, v).expect("interior point"));
                    w.push(inv_h2 * prob.chi(k, t, &x)?);
                }
                Ok((nb, w, prob.coeffs().c.eval(t, &x)?))
            })
            .collect::<Result<_>>()?;
        let mut neighbors = Vec::with_capacity(interior.len() * width);
        let mut weights = Vec::with_capacity(interior.len() * width);
        let mut c = Vec::with_capacity(interior.len());
        for (nb, w, cj) in rows {
            neighbors.extend(nb);
            weights.extend(w);
            c.push(cj);
        }
        Ok(OperatorTable {
            t,
            interior,
            neighbors,
            weights,
            c,
            width,
        })
    }

    pub fn row(&self, j: usize) -> (&[usize], &[f64]) {
        let r = j * self.width..(j + 1) * self.width;
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    /// `h⁻² Σ χ_λ` at interior point `j`.
    pub fn weight_sum(&self, j: usize) -> f64 {
        self.row(j).1.iter().sum()
    }

    /// `L⁰u` at interior point `j`.
    pub fn apply_l0_at(&self, u: &[f64], j: usize) -> f64 {
        let center = u[self.interior[j]];
        let (nb, w) = self.row(j);
        nb.iter().zip(w).map(|(&n, &wk)| wk * (u[n] - center)).sum()
    }

    /// `Lu` at interior point `j`.
    pub fn apply_l_at(&self, u: &[f64], j: usize) -> f64 {
        self.apply_l0_at(u, j) - self.c[j] * u[self.interior[j]]
    }

    pub fn interior_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.interior {
            m[i] = true;
        }
        m
    }
}

/// Values of `e` at the lattice points `idx` at time `t`.
pub fn sample_at(e: &Expr, dom: &Domain, idx: &[usize], t: f64) -> Result<Vec<f64>> {
    if e.is_space_independent() {
        let v = e.eval(t, &vec![0.0; dom.dim()])?;
        return Ok(vec![v; idx.len()]);
    }
    idx.par_iter().map(|&i| Ok(e.eval(t, &dom.point(i))?)).collect()
}

fn check_lattice(prob: &Problem, u: &GridFunction) -> Result<()> {
    if u.domain() != prob.domain() {
        return Err(Error::Domain("grid function is not on the problem lattice".into()));
    }
    Ok(())
}

fn apply_with(prob: &Problem, u: &GridFunction, t: f64, with_c: bool) -> Result<GridFunction> {
    check_lattice(prob, u)?;
    let table = OperatorTable::build(prob, t)?;
    let n = prob.domain().len();
    let mut values = vec![0.0; n];
    for j in 0..table.interior.len() {
        values[table.interior[j]] = if with_c {
            table.apply_l_at(u.values(), j)
        } else {
            table.apply_l0_at(u.values(), j)
        };
    }
    let mask = table.interior_mask(n);
    let full = GridFunction::from_parts(prob.domain().clone(), values, None).with_time(t);
    Ok(if mask.iter().all(|&m| m) { full } else { full.restricted(&mask) })
}

/// `L⁰u` on `Q°` at time `t`.
pub fn apply_l0(prob: &Problem, u: &GridFunction, t: f64) -> Result<GridFunction> {
    apply_with(prob, u, t, false)
}

/// `Lu = L⁰u - cu` on `Q°` at time `t`.
pub fn apply_l(prob: &Problem, u: &GridFunction, t: f64) -> Result<GridFunction> {
    apply_with(prob, u, t, true)
}

/// Sup-norm errors over a sequence of spacings with a fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln e` against `ln h`; `+∞` when every error
    /// vanishes, NaN when the fit is refused.
    pub order: f64,
    pub diagnostic: Option<String>,
}

/// Errors at or below this level count as exact.
pub const EXACT_ERROR: f64 = 1e-12;

/// Least-squares slope of `ln e` against `ln h`.
pub fn fit_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl ConvergenceReport {
    /// Fits an order to `(h, e)` pairs ordered by decreasing `h`.
    pub fn from_errors(h: Vec<f64>, errors: Vec<f64>) -> Self {
        let (order, diagnostic) = if errors.iter().all(|&e| e <= EXACT_ERROR) {
            (f64::INFINITY, Some(format!("all errors below {EXACT_ERROR:e}: scheme exact")))
        } else if h.len() < 3 {
            (f64::NAN, Some(format!("{} levels; at least 3 are needed for a fit", h.len())))
        } else if let Some(i) = errors.windows(2).position(|w| w[1] > w[0]) {
            (
                f64::NAN,
                Some(format!(
                    "error increases from {:e} at h = {} to {:e} at h = {}",
                    errors[i],
                    h[i],
                    errors[i + 1],
                    h[i + 1]
                )),
            )
        } else if errors.iter().any(|&e| e <= 0.0) {
            (f64::INFINITY, Some("zero error at a level: exact".into()))
        } else {
            (fit_order(&h, &errors), None)
        };
        ConvergenceReport {
            h,
            errors,
            order,
            diagnostic,
        }
    }
}

/// `sup |L_h φ - ℒφ|` over `Q°` at `t = 0` for each `h`, with a fitted order.
pub fn consistency_error(prob: &Problem, phi: &Expr, h_list: &[f64]) -> Result<ConvergenceReport> {
    let exact = prob.limit_operator_applied(phi);
    let mut h_sorted = h_list.to_vec();
    h_sorted.sort_by(|a, b| b.total_cmp(a));
    let errors = h_sorted
        .par_iter()
        .map(|&h| {
            let p = prob.with_spacing(h)?;
            let u = crate::lattice::sample(phi, p.domain(), 0.0)?;
            let lu = apply_l(&p, &u, 0.0)?;
            let reference = crate::lattice::sample(&exact, p.domain(), 0.0)?;
            Ok(lu.iter_valid().map(|(i, v)| (v - reference.values()[i]).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceReport::from_errors(h_sorted, errors))
}
