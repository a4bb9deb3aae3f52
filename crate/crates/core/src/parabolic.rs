//! Explicit Euler time stepping of `D_t u = Lu + f`, `u(0) = g`, and the
//! maximum-principle verifier.
//!
//! On a box the Dirichlet layer `δQ = Q \ Q°` is held at `g` for all `t`.

use crate::error::{Error, Result};
use crate::lattice::{sample, GridFunction};
use crate::operator::{sample_at, OperatorTable, Problem};

/// Stability safety factor: `dt · sup(c + h⁻² Σ χ) = SAFETY`.
pub const SAFETY: f64 = 0.9;

/// Number of uniformly spaced time samples used before the step is known.
pub const T_SAMPLES: usize = 17;

fn sup_rate(prob: &Problem, t: f64) -> Result<f64> {
    let table = OperatorTable::build(prob, t)?;
    Ok((0..table.interior.len()).map(|j| table.c[j] + table.weight_sum(j)).fold(f64::NEG_INFINITY, f64::max))
}

fn uniform_times(t_final: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_final * i as f64 / (n - 1) as f64).collect()
}

/// `0.9 / sup_{t,x} (c + h⁻² Σ χ_λ)`; time dependence is sampled first on a
/// uniform grid, then at the resulting step resolution.
pub fn stable_dt(prob: &Problem) -> Result<f64> {
    let t_final = prob.constants().t_final;
    let mut rate = sup_rate(prob, 0.0)?;
    if !prob.operator_is_autonomous() {
        for t in uniform_times(t_final, T_SAMPLES) {
            rate = rate.max(sup_rate(prob, t)?);
        }
        let coarse = SAFETY / rate;
        let steps = (t_final / coarse).ceil() as usize;
        for n in 0..=steps {
            rate = rate.max(sup_rate(prob, (n as f64 * coarse).min(t_final))?);
        }
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Precondition(format!(
            "sup of c + h^-2 sum chi is {rate}; c >= c0 > 0 fails on the grid"
        )));
    }
    Ok(SAFETY / rate)
}

/// One explicit Euler integrator; the operator and forcing tables are cached
/// when they do not depend on time.
pub struct Stepper<'a> {
    prob: &'a Problem,
    table: OperatorTable,
    forcing: Vec<f64>,
    f_autonomous: bool,
    with_forcing: bool,
    interior_mask: Vec<bool>,
    u: Vec<f64>,
    scratch: Vec<f64>,
    t: f64,
    steps: usize,
}

impl<'a> Stepper<'a> {
    /// Starts from `initial`; boundary points keep their values from `boundary`.
    pub fn new(prob: &'a Problem, initial: Vec<f64>, boundary: &[f64], with_forcing: bool) -> Result<Self> {
        let table = OperatorTable::build(prob, 0.0)?;
        let f_autonomous = prob.coeffs().f.is_time_independent();
        let forcing = if with_forcing {
            sample_at(&prob.coeffs().f, prob.domain(), &table.interior, 0.0)?
        } else {
            vec![0.0; table.interior.len()]
        };
        let mut scratch = boundary.to_vec();
        for &i in &table.interior {
            scratch[i] = 0.0;
        }
        Ok(Stepper {
            prob,
            interior_mask: table.interior_mask(boundary.len()),
            table,
            forcing,
            f_autonomous,
            with_forcing,
            u: initial,
            scratch,
            t: 0.0,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn interior(&self) -> &[usize] {
        &self.table.interior
    }

    /// `u ← u + dt (Lu + f(t))` on `Q°`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !self.prob.operator_is_autonomous() && self.table.t != self.t {
            self.table = OperatorTable::build(self.prob, self.t)?;
        }
        if self.with_forcing && !self.f_autonomous {
            self.forcing = sample_at(&self.prob.coeffs().f, self.prob.domain(), &self.table.interior, self.t)?;
        }
        for (j, &i) in self.table.interior.iter().enumerate() {
            self.scratch[i] = self.u[i] + dt * (self.table.apply_l_at(&self.u, j) + self.forcing[j]);
        }
        std::mem::swap(&mut self.u, &mut self.scratch);
        for &i in &self.table.interior {
            if !self.u[i].is_finite() {
                return Err(Error::NonFinite {
                    step: self.steps + 1,
                    time: self.t + dt,
                });
            }
        }
        if self.steps == 0 {
            // the swapped-out buffer still carries the initial boundary values
            for (i, (dst, src)) in self.scratch.iter_mut().zip(&self.u).enumerate() {
                if !self.interior_mask[i] {
                    *dst = *src;
                }
            }
        }
        self.t += dt;
        self.steps += 1;
        Ok(())
    }
}

/// Which states a solve keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Every `n`-th step plus the final state.
    Every(usize),
    /// Initial and final states only.
    Endpoints,
}

#[derive(Debug, Clone)]
pub struct ParabolicOptions {
    /// Step override; must not exceed the stable step.
    pub dt: Option<f64>,
    pub record: Record,
    /// Final time override.
    pub t_final: Option<f64>,
}

impl Default for ParabolicOptions {
    fn default() -> Self {
        ParabolicOptions {
            dt: None,
            record: Record::Every(1),
            t_final: None,
        }
    }
}

/// Recorded states of a parabolic solve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trajectory has an initial state")
    }
}

pub fn solve_parabolic(prob: &Problem) -> Result<Trajectory> {
    solve_parabolic_with(prob, &ParabolicOptions::default())
}

pub fn solve_parabolic_with(prob: &Problem, opts: &ParabolicOptions) -> Result<Trajectory> {
    let t_final = opts.t_final.unwrap_or(prob.constants().t_final);
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Problem(format!("T = {t_final} must be positive")));
    }
    let stable = stable_dt(prob)?;
    let dt = match opts.dt {
        Some(dt) if !(dt > 0.0) => return Err(Error::Problem(format!("dt = {dt} must be positive"))),
        Some(dt) if dt > stable * (1.0 + 1e-12) => {
            return Err(Error::Precondition(format!("dt = {dt} exceeds the stable step {stable}")))
        }
        Some(dt) => dt,
        None => stable,
    };
    let g = sample(&prob.coeffs().g, prob.domain(), 0.0)?;
    let mut stepper = Stepper::new(prob, g.values().to_vec(), g.values(), true)?;
    let n_steps = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let snapshot = |s: &Stepper| {
        GridFunction::from_parts(prob.domain().clone(), s.values().to_vec(), None).with_time(s.time())
    };
    let mut times = vec![0.0];
    let mut states = vec![g.with_time(0.0)];
    for n in 1..=n_steps {
        let step = if n == n_steps { t_final - stepper.time() } else { dt };
        stepper.step(step)?;
        let keep = match opts.record {
            Record::Every(k) => n == n_steps || n % k.max(1) == 0,
            Record::Endpoints => n == n_steps,
        };
        if keep {
            let mut s = snapshot(&stepper);
            if n == n_steps {
                s = s.with_time(t_final);
            }
            times.push(s.time().unwrap_or(t_final));
            states.push(s);
        }
    }
    Ok(Trajectory { times, states, dt })
}

/// Outcome of comparing a trajectory against the maximum-principle bound
/// `v̄(t) ≤ G(t) e^{νt} + ∫₀ᵗ F(s) e^{ν(t-s)} ds`.
#[derive(Debug, Clone)]
pub struct MaxPrincipleReport {
    pub nu: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `sup_Q v(t)`.
    pub vbar: Vec<f64>,
    pub bound: Vec<f64>,
    /// `min_t (bound - v̄)`; nonnegative means the bound holds.
    pub margin: f64,
    pub worst_time: f64,
    /// `sup_{δ'Q} v₊ + |ν|⁻¹ sup F - sup_t v̄`, only when `ν < 0`.
    pub long_time_margin: Option<f64>,
}

/// Checks the bound along `traj` with perturbation constant `big_c ≥ 0` and
/// forcing envelope `forcing` (default `sup_{Q°} f₊(t)`).
pub fn verify_max_principle(
    prob: &Problem,
    traj: &Trajectory,
    big_c: f64,
    forcing: Option<&dyn Fn(f64) -> f64>,
) -> Result<MaxPrincipleReport> {
    let dom = prob.domain();
    let st = prob.stencil();
    let interior_mask = dom.interior_mask(st);
    let interior: Vec<usize> = (0..dom.len()).filter(|&i| interior_mask[i]).collect();
    let boundary: Vec<usize> = (0..dom.len()).filter(|&i| !interior_mask[i]).collect();

    let c_times: Vec<f64> = if prob.coeffs().c.is_time_independent() { vec![0.0] } else { traj.times.clone() };
    let mut nu = f64::NEG_INFINITY;
    for &t in &c_times {
        for c in sample_at(&prob.coeffs().c, dom, &interior, t)? {
            nu = nu.max(big_c - c);
        }
    }
    let envelope = |t: f64| -> Result<f64> {
        match forcing {
            Some(f) => Ok(f(t)),
            None => Ok(sample_at(&prob.coeffs().f, dom, &interior, t)?.into_iter().fold(0.0, |m, v| m.max(v))),
        }
    };

    let sup_pos = |u: &GridFunction, idx: &[usize]| idx.iter().fold(0.0f64, |m, &i| m.max(u.values()[i]));
    let mut g_run = sup_pos(&traj.states[0], &(0..dom.len()).collect::<Vec<_>>());
    let mut long_time_g = g_run;
    let mut f_prev = envelope(traj.times[0])?;
    let mut f_sup = f_prev;
    let mut integral = 0.0;
    let mut vbar = Vec::with_capacity(traj.times.len());
    let mut bound = Vec::with_capacity(traj.times.len());
    let mut margin = f64::INFINITY;
    let mut worst_time = 0.0;
    for (n, (&t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
        if n > 0 {
            let lateral = sup_pos(u, &boundary);
            g_run = g_run.max((-nu * t).exp() * lateral);
            long_time_g = long_time_g.max(lateral);
            let step = t - traj.times[n - 1];
            let f_now = envelope(t)?;
            let decay = (nu * step).exp();
            integral = decay * integral + 0.5 * step * (f_prev * decay + f_now);
            f_prev = f_now;
            f_sup = f_sup.max(f_now);
        }
        let v = u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = g_run * (nu * t).exp() + integral;
        if b - v < margin {
            margin = b - v;
            worst_time = t;
        }
        vbar.push(v);
        bound.push(b);
    }
    let long_time_margin = (nu < 0.0).then(|| {
        let cb = long_time_g + f_sup / nu.abs();
        vbar.iter().fold(f64::INFINITY, |m, &v| m.min(cb - v))
    });
    Ok(MaxPrincipleReport {
        nu,
        dt: traj.dt,
        times: traj.times.clone(),
        vbar,
        bound,
        margin,
        worst_time,
        long_time_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::lattice::{Domain, DomainKind, Stencil};
    use crate::operator::{CoefficientSet, Constants};

    fn ex(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn problem(kind: DomainKind, h: f64, q: &str, c: &str, f: &str, g: &str, t_final: f64) -> Problem {
        let (lo, hi) = match kind {
            DomainKind::Box => (-1.0, 1.0),
            DomainKind::Periodic => (0.0, std::f64::consts::TAU),
        };
        let dom = Domain::new(kind, vec![lo], vec![hi], h).unwrap();
        let coeffs = CoefficientSet {
            q: vec![ex(q), ex(q)],
            p: vec![Expr::zero(), Expr::zero()],
            c: ex(c),
            f: ex(f),
            g: ex(g),
        };
        let constants = Constants { t_final, ..Constants::default() };
        Problem::new(dom, Stencil::axes(1), coeffs, constants).unwrap()
    }

    #[test]
    fn stable_dt_examples() {
        let p = problem(DomainKind::Box, 0.1, "1", "1", "0", "0", 1.0);
        assert!((stable_dt(&p).unwrap() - 0.9 / 201.0).abs() < 1e-15);
        let p = problem(DomainKind::Box, 0.1, "0", "1", "0", "0", 1.0);
        assert!((stable_dt(&p).unwrap() - 0.9).abs() < 1e-15);
        let p = problem(DomainKind::Box, 0.05, "1", "0", "0", "0", 1.0);
        let q = p.with_spacing(0.1).unwrap();
        assert!((stable_dt(&q).unwrap() / stable_dt(&p).unwrap() - 4.0).abs() < 1e-12);
        let p = problem(DomainKind::Box, 0.1, "0", "1 + t", "0", "0", 1.0);
        assert!((stable_dt(&p).unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn decay_matches_exponential() {
        let p = problem(DomainKind::Periodic, std::f64::consts::TAU / 8.0, "0", "1", "0", "1", 1.0);
        let traj = solve_parabolic_with(&p, &ParabolicOptions { dt: Some(0.01), ..Default::default() }).unwrap();
        let u = traj.final_state();
        assert_eq!(traj.times.last(), Some(&1.0));
        for &v in u.values() {
            assert!((v - (-1f64).exp()).abs() < 5.0 * 0.01);
            assert!((v - 0.99f64.powi(100)).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_solution_stays() {
        let p = problem(DomainKind::Box, 0.1, "1 + x1^2", "2 + sin(x1)", "2 + sin(x1)", "1", 0.5);
        let traj = solve_parabolic(&p).unwrap();
        for s in &traj.states {
            assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn final_partial_step() {
        let p = problem(DomainKind::Box, 0.1, "0", "1", "0", "1", 1.0);
        let traj = solve_parabolic_with(&p, &ParabolicOptions { dt: Some(0.3), ..Default::default() }).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert!((traj.times[3] - 0.9).abs() < 1e-15);
        assert_eq!(traj.times[4], 1.0);
    }

    #[test]
    fn max_principle_examples() {
        let p = problem(DomainKind::Periodic, std::f64::consts::TAU / 8.0, "0", "1", "0", "1", 1.0);
        let traj = solve_parabolic(&p).unwrap();
        let r = verify_max_principle(&p, &traj, 0.0, None).unwrap();
        assert!(r.margin >= -10.0 * traj.dt, "{r:?}");

        let p = problem(DomainKind::Periodic, std::f64::consts::TAU / 8.0, "0", "2", "6", "0", 10.0);
        let traj = solve_parabolic(&p).unwrap();
        let r = verify_max_principle(&p, &traj, 0.0, None).unwrap();
        assert!((traj.final_state().values()[0] - 3.0).abs() < 1e-8);
        assert!(r.long_time_margin.unwrap() >= -1e-8);
        assert!(r.margin >= -10.0 * traj.dt);

        let p = problem(DomainKind::Box, 0.1, "1", "1", "-1 - x1^2", "-abs(x1)", 0.5);
        let traj = solve_parabolic(&p).unwrap();
        assert!(traj.states.iter().all(|s| s.values().iter().all(|&v| v <= 0.0)));
        assert!(verify_max_principle(&p, &traj, 0.0, None).unwrap().margin >= 0.0);
    }
}
