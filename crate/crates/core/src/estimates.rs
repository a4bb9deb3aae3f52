//! Empirical study of the mesh-independent bound on
//! `|u| + τ₀|Du| + U` in terms of `F₁` and the boundary data.

use rayon::prelude::*;

use crate::conditions::{sample_points, SampleSpec};
use crate::elliptic::{solve_elliptic, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{central_gradient, gradient_functional_u, sample, GridFunction};
use crate::operator::Problem;
use crate::parabolic::{stable_dt, Stepper};

/// Residual tolerance of the elliptic solves in a study.
pub const STUDY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Parabolic,
    Elliptic,
}

/// One spacing of a [`GradientStudy`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRow {
    pub h: f64,
    pub sup_u: f64,
    pub sup_tau0_du: f64,
    pub sup_big_u: f64,
    /// `sup(|u| + τ₀|Du| + U)` taken pointwise.
    pub sup_total: f64,
    pub f1: f64,
    pub boundary: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientStudy {
    pub mode: StudyMode,
    pub rows: Vec<GradientRow>,
    /// `Σ_λ |τ_λ λ|²`.
    pub stencil_size_sq: f64,
    /// Sampled `sup |Dc|` at the first spacing.
    pub sup_dc: f64,
}

impl GradientStudy {
    pub fn h_list(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    /// `max R / min R`; NaN if some ratio is zero or not finite.
    pub fn ratio_spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
        if lo > 0.0 && hi.is_finite() {
            hi / lo
        } else {
            f64::NAN
        }
    }
}

fn euclid(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// Sampled `sup (|f| + |∇f|)`.
pub fn compute_f1(prob: &Problem, spec: &SampleSpec) -> Result<f64> {
    let f = &prob.coeffs().f;
    let grad = f.gradient(prob.dim());
    sup_over(&sample_points(prob, spec), |t, x| {
        Ok(f.eval(t, x)?.abs() + euclid(grad.iter().map(|g| g.eval(t, x)).collect::<std::result::Result<Vec<_>, _>>()?.into_iter()))
    })
}

/// Sampled `sup |∇e|`.
fn sup_gradient(prob: &Problem, e: &Expr, spec: &SampleSpec) -> Result<f64> {
    let grad = e.gradient(prob.dim());
    sup_over(&sample_points(prob, spec), |t, x| {
        Ok(euclid(grad.iter().map(|g| g.eval(t, x)).collect::<std::result::Result<Vec<_>, _>>()?.into_iter()))
    })
}

fn sup_over<F>(points: &[(f64, Vec<f64>)], f: F) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> Result<f64> + Sync,
{
    points.par_iter().map(|(t, x)| f(*t, x)).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `sup (|g| + τ₀|∇g| + U_g)` over the points where data is imposed: the
/// Dirichlet layer, and in the parabolic case also the initial slice.
fn boundary_term(prob: &Problem, mode: StudyMode) -> Result<f64> {
    let dom = prob.domain();
    let st = prob.stencil();
    let g = &prob.coeffs().g;
    let grad = g.gradient(prob.dim());
    let h = prob.h();
    let interior = dom.interior_mask(st);
    let points: Vec<usize> = (0..dom.len()).filter(|&i| mode == StudyMode::Parabolic || !interior[i]).collect();
    points
        .par_iter()
        .map(|&i| {
            let x = dom.point(i);
            let g0 = g.eval(0.0, &x)?;
            let dg = euclid(grad.iter().map(|e| e.eval(0.0, &x)).collect::<std::result::Result<Vec<_>, _>>()?.into_iter());
            let mut y = x.clone();
            let mut u2 = 0.0;
            for (k, v) in st.vectors().iter().enumerate() {
                for j in 0..x.len() {
                    y[j] = x[j] + h * v[j] as f64;
                }
                let d = st.tau(k) * (g.eval(0.0, &y)? - g0) / h;
                u2 += d * d;
            }
            Ok(g0.abs() + st.tau0() * dg + u2.sqrt())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Pointwise sups of `|u|`, `τ₀|Du|`, `U` and of their sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sups {
    u: f64,
    du: f64,
    big_u: f64,
    total: f64,
}

impl Sups {
    fn merge(self, o: Sups) -> Sups {
        Sups {
            u: self.u.max(o.u),
            du: self.du.max(o.du),
            big_u: self.big_u.max(o.big_u),
            total: self.total.max(o.total),
        }
    }
}

fn state_sups(u: &GridFunction, prob: &Problem) -> Result<Sups> {
    let tau0 = prob.stencil().tau0();
    let big_u = gradient_functional_u(u, prob.stencil())?;
    let grad = central_gradient(u)?;
    let mut s = Sups::default();
    for i in 0..u.values().len() {
        if !u.is_valid(i) {
            continue;
        }
        let a = u.values()[i].abs();
        let du = if grad.iter().all(|g| g.is_valid(i)) {
            tau0 * euclid(grad.iter().map(|g| g.values()[i]))
        } else {
            0.0
        };
        let bu = if big_u.is_valid(i) { big_u.values()[i] } else { 0.0 };
        s = s.merge(Sups {
            u: a,
            du,
            big_u: bu,
            total: a + du + bu,
        });
    }
    Ok(s)
}

fn solution_sups(prob: &Problem, mode: StudyMode) -> Result<Sups> {
    match mode {
        StudyMode::Elliptic => state_sups(&solve_elliptic(prob, STUDY_TOL, DEFAULT_MAX_ITER)?, prob),
        StudyMode::Parabolic => {
            let t_final = prob.constants().t_final;
            let dt = stable_dt(prob)?;
            let g = sample(&prob.coeffs().g, prob.domain(), 0.0)?;
            let mut stepper = Stepper::new(prob, g.values().to_vec(), g.values(), true)?;
            let mut sups = state_sups(&g, prob)?;
            let n_steps = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            for n in 1..=n_steps {
                let step = if n == n_steps { t_final - stepper.time() } else { dt };
                stepper.step(step)?;
                let u = GridFunction::new(prob.domain().clone(), stepper.values().to_vec())?;
                sups = sups.merge(state_sups(&u, prob)?);
            }
            Ok(sups)
        }
    }
}

/// Solves at every spacing of `h_list` (strictly decreasing) and reports
/// `R(h) = sup(|u| + τ₀|Du| + U) / (F₁ + boundary term)`.
pub fn gradient_bound_study(prob: &Problem, h_list: &[f64], mode: StudyMode) -> Result<GradientStudy> {
    if h_list.is_empty() {
        return Err(Error::OutOfRange("empty h list".into()));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::OutOfRange(format!("h list {h_list:?} is not strictly decreasing")));
    }
    let spec = match mode {
        StudyMode::Parabolic => SampleSpec::default(),
        StudyMode::Elliptic => SampleSpec { t_samples: 1 },
    };
    let rows = h_list
        .par_iter()
        .map(|&h| {
            let run = || -> Result<GradientRow> {
                let p = prob.with_spacing(h)?;
                let s = solution_sups(&p, mode)?;
                let f1 = compute_f1(&p, &spec)?;
                let boundary = boundary_term(&p, mode)?;
                let denom = f1 + boundary;
                let ratio = if s.total == 0.0 && denom == 0.0 { 0.0 } else { s.total / denom };
                Ok(GradientRow {
                    h,
                    sup_u: s.u,
                    sup_tau0_du: s.du,
                    sup_big_u: s.big_u,
                    sup_total: s.total,
                    f1,
                    boundary,
                    ratio,
                })
            };
            run().map_err(Error::at_spacing(h))
        })
        .collect::<Result<Vec<_>>>()?;
    let st = prob.stencil();
    let stencil_size_sq = st
        .vectors()
        .iter()
        .zip(st.taus())
        .map(|(v, t)| t * t * v.iter().map(|&c| (c * c) as f64).sum::<f64>())
        .sum();
    let first = prob.with_spacing(h_list[0])?;
    let sup_dc = sup_gradient(&first, &prob.coeffs().c, &spec)?;
    Ok(GradientStudy {
        mode,
        rows,
        stencil_size_sq,
        sup_dc,
    })
}
