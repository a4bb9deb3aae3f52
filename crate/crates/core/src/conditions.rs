//! Pointwise checks of the structural and sufficient conditions on the
//! coefficients.
//!
//! Every check samples the coefficient expressions on the full lattice times a
//! uniform time grid and reports its worst margin (positive means slack).
//! Difference quotients such as `δ_λ r_μ` use the problem's own `h` and are
//! evaluated off the lattice from the expressions. Sample points at which an
//! expression is undefined are skipped and counted.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::expr::{EvalError, Expr, Var};
use crate::linalg;
use crate::operator::Problem;

/// Tolerance for sign and equality checks on floating-point values.
pub const EQ_TOL: f64 = 1e-12;
/// Tolerance for derivative identities.
pub const DERIV_TOL: f64 = 1e-10;
/// Tolerance for eigenvalue margins.
pub const EIG_TOL: f64 = 1e-9;

/// Which points a check visits.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    /// Uniform samples of `[0, T]`; only `t = 0` is used when every
    /// coefficient is time independent.
    pub t_samples: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { t_samples: 17 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        })
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: Verdict,
    /// Worst margin; NaN when not applicable.
    pub margin: f64,
    pub tolerance: f64,
    pub t: Option<f64>,
    pub x: Option<Vec<f64>>,
    /// Human-readable witness (stencil vector, component, ...).
    pub witness: Option<String>,
    /// Worst direction of a quadratic form.
    pub xi: Option<Vec<f64>>,
    /// Named sub-margins.
    pub aux: Vec<(String, f64)>,
    pub skipped: usize,
    pub note: Option<String>,
}

impl CheckRecord {
    fn from_margin(name: &str, margin: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.to_string(),
            verdict: if margin < -tolerance { Verdict::Fail } else { Verdict::Pass },
            margin: margin + 0.0,
            tolerance,
            t: None,
            x: None,
            witness: None,
            xi: None,
            aux: Vec::new(),
            skipped: 0,
            note: None,
        }
    }

    fn not_applicable(name: &str, reason: impl Into<String>) -> Self {
        CheckRecord {
            verdict: Verdict::NotApplicable,
            margin: f64::NAN,
            note: Some(reason.into()),
            ..CheckRecord::from_margin(name, 0.0, 0.0)
        }
    }

    fn at(mut self, t: f64, x: &[f64]) -> Self {
        self.t = Some(t);
        self.x = Some(x.to_vec());
        self
    }

    fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// All records from one run of the checkers at one spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub h: f64,
    pub records: Vec<CheckRecord>,
}

impl AssumptionReport {
    pub fn any_failed(&self) -> bool {
        self.records.iter().any(|r| r.verdict == Verdict::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

/// Names accepted by [`run_checks`].
pub const CHECK_NAMES: [&str; 8] = [
    "positivity",
    "symmetry",
    "drift_constancy",
    "linearity_orthogonality",
    "quadratic_form",
    "rough_condition",
    "explicit_1d",
    "nondegenerate_shortcut",
];

/// Runs the named checks (all of them for `["all"]`).
pub fn run_checks(prob: &Problem, names: &[&str], spec: &SampleSpec) -> Result<AssumptionReport> {
    run_checks_with(prob, names, spec, &Budgets::default())
}

/// [`run_checks`] with explicit quadratic-form budgets.
pub fn run_checks_with(prob: &Problem, names: &[&str], spec: &SampleSpec, budgets: &Budgets) -> Result<AssumptionReport> {
    for n in names {
        if *n != "all" && !CHECK_NAMES.contains(n) {
            return Err(crate::Error::Problem(format!(
                "unknown check `{n}`; expected one of {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let all = names.contains(&"all");
    let mut records = Vec::new();
    for &name in CHECK_NAMES.iter() {
        if !all && !names.contains(&name) {
            continue;
        }
        records.push(match name {
            "positivity" => check_positivity(prob, spec),
            "symmetry" => check_symmetry_s(prob, spec),
            "drift_constancy" => check_drift_constancy(prob, spec),
            "linearity_orthogonality" => check_linearity_orthogonality(prob, spec),
            "quadratic_form" => check_quadratic_form(prob, spec, budgets),
            "rough_condition" => check_rough_condition(prob, spec),
            "explicit_1d" => check_explicit_1d(prob, spec),
            _ => check_nondegenerate_shortcut(prob, spec),
        });
    }
    Ok(AssumptionReport { h: prob.h(), records })
}

fn all_exprs(prob: &Problem) -> impl Iterator<Item = &Expr> {
    let c = prob.coeffs();
    c.q.iter().chain(&c.p).chain([&c.c, &c.f])
}

/// Sample points `(t, x)`.
pub fn sample_points(prob: &Problem, spec: &SampleSpec) -> Vec<(f64, Vec<f64>)> {
    let autonomous = all_exprs(prob).all(Expr::is_time_independent);
    let times: Vec<f64> = if autonomous || spec.t_samples <= 1 {
        vec![0.0]
    } else {
        let n = spec.t_samples;
        (0..n).map(|i| prob.constants().t_final * i as f64 / (n - 1) as f64).collect()
    };
    let dom = prob.domain();
    times.iter().flat_map(|&t| (0..dom.len()).map(move |i| (t, dom.point(i)))).collect()
}

/// Per-point result: margin, witness and optional sub-margins.
struct PointEval {
    margin: f64,
    witness: Option<String>,
    xi: Option<Vec<f64>>,
    aux: Vec<f64>,
}

impl PointEval {
    fn new(margin: f64) -> Self {
        PointEval {
            margin,
            witness: None,
            xi: None,
            aux: Vec::new(),
        }
    }
}

struct Scan {
    worst: Option<(usize, PointEval)>,
    aux_min: Vec<f64>,
    skipped: usize,
    skip_reason: Option<String>,
}

/// Evaluates `f` at every point in parallel and keeps the worst margin.
fn scan<F>(points: &[(f64, Vec<f64>)], n_aux: usize, f: F) -> Scan
where
    F: Fn(f64, &[f64]) -> std::result::Result<PointEval, EvalError> + Sync,
{
    let evals: Vec<std::result::Result<PointEval, EvalError>> =
        points.par_iter().map(|(t, x)| f(*t, x)).collect();
    let mut out = Scan {
        worst: None,
        aux_min: vec![f64::INFINITY; n_aux],
        skipped: 0,
        skip_reason: None,
    };
    for (i, e) in evals.into_iter().enumerate() {
        match e {
            Ok(p) => {
                for (m, a) in out.aux_min.iter_mut().zip(&p.aux) {
                    *m = m.min(*a);
                }
                if out.worst.as_ref().is_none_or(|(_, w)| p.margin < w.margin) {
                    out.worst = Some((i, p));
                }
            }
            Err(err) => {
                out.skipped += 1;
                out.skip_reason.get_or_insert_with(|| err.to_string());
            }
        }
    }
    out
}

fn finish(name: &str, tol: f64, points: &[(f64, Vec<f64>)], s: Scan, aux_names: &[&str]) -> CheckRecord {
    let Some((i, w)) = s.worst else {
        return CheckRecord {
            skipped: s.skipped,
            ..CheckRecord::not_applicable(
                name,
                format!("no sample point could be evaluated: {}", s.skip_reason.unwrap_or_default()),
            )
        };
    };
    let mut r = CheckRecord::from_margin(name, w.margin, tol).at(points[i].0, &points[i].1);
    r.witness = w.witness;
    r.xi = w.xi;
    r.aux = aux_names.iter().map(|n| n.to_string()).zip(s.aux_min).collect();
    r.skipped = s.skipped;
    if s.skipped > 0 {
        r.note = Some(format!("{} point(s) skipped: {}", s.skipped, s.skip_reason.unwrap_or_default()));
    }
    match r.verdict {
        Verdict::Fail => {
            r.witness.get_or_insert_with(|| "worst sample point".into());
        }
        _ => r.witness = None,
    }
    r
}

fn fmt_vec<T: fmt::Debug>(v: &[T]) -> String {
    format!("{v:?}").replace(' ', "")
}

fn lambda_label(prob: &Problem, k: usize) -> String {
    format!("lambda={}", fmt_vec(prob.stencil().vector(k)))
}

/// `min χ_λ ≥ 0` and `min (c - c₀) ≥ 0`.
pub fn check_positivity(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    let points = sample_points(prob, spec);
    let c0 = prob.constants().c0;
    let s = scan(&points, 2, |t, x| {
        let mut chi_min = f64::INFINITY;
        let mut arg = 0;
        for k in 0..prob.stencil().len() {
            let chi = prob.chi(k, t, x).map_err(unwrap_eval)?;
            if chi < chi_min {
                chi_min = chi;
                arg = k;
            }
        }
        let cm = prob.coeffs().c.eval(t, x)? - c0;
        let mut p = PointEval::new(chi_min.min(cm));
        p.witness = Some(if chi_min <= cm { format!("chi {}", lambda_label(prob, arg)) } else { "c - c0".into() });
        p.aux = vec![chi_min, cm];
        Ok(p)
    });
    finish("positivity", EQ_TOL, &points, s, &["chi", "c_minus_c0"])
}

fn unwrap_eval(e: crate::Error) -> EvalError {
    match e {
        crate::Error::Eval(e) => e,
        other => unreachable!("coefficient evaluation returned {other}"),
    }
}

/// First stencil vector whose negation is missing.
fn set_asymmetry(prob: &Problem) -> Option<usize> {
    (0..prob.stencil().len()).find(|&k| prob.stencil().opposite(k).is_none())
}

/// `Λ₁ = -Λ₁` and `q_λ = q_{-λ}`.
pub fn check_symmetry_s(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    if let Some(k) = set_asymmetry(prob) {
        let mut r = CheckRecord::from_margin("symmetry", f64::NEG_INFINITY, EQ_TOL)
            .witness(format!("{} has no opposite in the stencil", lambda_label(prob, k)));
        r.note = Some("stencil is not symmetric".into());
        return r;
    }
    let points = sample_points(prob, spec);
    let q = &prob.coeffs().q;
    let s = scan(&points, 0, |t, x| {
        let mut worst = PointEval::new(f64::INFINITY);
        for k in 0..q.len() {
            let o = prob.stencil().opposite(k).expect("symmetric stencil");
            let diff = (q[k].eval(t, x)? - q[o].eval(t, x)?).abs();
            if -diff < worst.margin {
                worst.margin = -diff;
                worst.witness = Some(format!("q differs between {} and its opposite", lambda_label(prob, k)));
            }
        }
        Ok(worst)
    });
    finish("symmetry", EQ_TOL, &points, s, &[])
}

/// `Σ_λ λ q_λ` independent of `x` at every sampled time.
pub fn check_drift_constancy(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    let points = sample_points(prob, spec);
    let d = prob.dim();
    let sums: Vec<std::result::Result<Vec<f64>, EvalError>> = points
        .par_iter()
        .map(|(t, x)| {
            let mut s = vec![0.0; d];
            for (v, q) in prob.stencil().vectors().iter().zip(&prob.coeffs().q) {
                let qv = q.eval(*t, x)?;
                for i in 0..d {
                    s[i] += v[i] as f64 * qv;
                }
            }
            Ok(s)
        })
        .collect();
    let mut skipped = 0;
    let mut skip_reason = None;
    // per time: per component (min, argmin, max, argmax)
    let mut groups: Vec<(f64, Vec<(f64, usize, f64, usize)>)> = Vec::new();
    for (idx, s) in sums.into_iter().enumerate() {
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                skipped += 1;
                skip_reason.get_or_insert(e.to_string());
                continue;
            }
        };
        let t = points[idx].0;
        if groups.last().is_none_or(|g| g.0 != t) {
            groups.push((t, vec![(f64::INFINITY, 0, f64::NEG_INFINITY, 0); d]));
        }
        let g = &mut groups.last_mut().expect("group").1;
        for i in 0..d {
            if s[i] < g[i].0 {
                g[i].0 = s[i];
                g[i].1 = idx;
            }
            if s[i] > g[i].2 {
                g[i].2 = s[i];
                g[i].3 = idx;
            }
        }
    }
    let mut best: Option<(f64, usize, String)> = None;
    for (_, comps) in &groups {
        for (i, &(lo, ilo, hi, ihi)) in comps.iter().enumerate() {
            let magnitude = lo.abs().max(hi.abs());
            let margin = -(hi - lo) / (1.0 + magnitude);
            if best.as_ref().is_none_or(|b| margin < b.0) {
                let w = format!(
                    "component {} of sum lambda q_lambda ranges over [{lo}, {hi}] (min at x={})",
                    i + 1,
                    fmt_vec(&points[ilo].1)
                );
                best = Some((margin, ihi, w));
            }
        }
    }
    let Some((margin, idx, w)) = best else {
        return CheckRecord::not_applicable("drift_constancy", "no sample point could be evaluated");
    };
    let mut r = CheckRecord::from_margin("drift_constancy", margin, DERIV_TOL).at(points[idx].0, &points[idx].1);
    r.skipped = skipped;
    r.note = skip_reason.map(|s| format!("{skipped} point(s) skipped: {s}"));
    if r.verdict == Verdict::Fail {
        r.witness = Some(w);
    }
    r
}

/// Basis of the functions `φ` on `Λ₁ ∪ {0}` with `φ(0) = 0` and
/// `φ(λ + μ) = φ(λ) + φ(μ)` whenever `λ, μ, λ + μ ∈ Λ₁ ∪ {0}`.
/// Entries are aligned with the stencil vectors.
pub fn linear_functions(stencil: &crate::lattice::Stencil) -> Vec<Vec<f64>> {
    let n = stencil.len();
    let d = stencil.dim();
    let zero = vec![0i64; d];
    let mut ext: Vec<Option<usize>> = vec![None];
    ext.extend((0..n).map(Some));
    let vec_of = |e: Option<usize>| e.map_or(zero.clone(), |k| stencil.vector(k).to_vec());
    let index_of = |v: &[i64]| -> Option<Option<usize>> {
        if v.iter().all(|&c| c == 0) {
            Some(None)
        } else {
            stencil.index_of(v).map(Some)
        }
    };
    let mut rows = Vec::new();
    for (a, &ea) in ext.iter().enumerate() {
        for &eb in &ext[a..] {
            let s: Vec<i64> = vec_of(ea).iter().zip(vec_of(eb)).map(|(x, y)| x + y).collect();
            let Some(es) = index_of(&s) else { continue };
            let mut row = vec![0.0; n];
            if let Some(k) = es {
                row[k] += 1.0;
            }
            for k in [ea, eb].into_iter().flatten() {
                row[k] -= 1.0;
            }
            if row.iter().any(|&v| v != 0.0) {
                rows.push(row);
            }
        }
    }
    linalg::null_space(&rows, n, 1e-12)
}

/// `Σ_λ (D_i q_λ) φ(λ) = 0` for every linear `φ` and every `i`.
pub fn check_linearity_orthogonality(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    let basis = linear_functions(prob.stencil());
    if basis.is_empty() {
        let mut r = CheckRecord::from_margin("linearity_orthogonality", 0.0, DERIV_TOL);
        r.note = Some("only the zero function is linear on this stencil".into());
        return r;
    }
    let d = prob.dim();
    // combos[b][i] = Σ_λ φ_b(λ) D_i q_λ
    let combos: Vec<Vec<Expr>> = basis
        .iter()
        .map(|phi| {
            (1..=d)
                .map(|i| {
                    prob.coeffs()
                        .q
                        .iter()
                        .zip(phi)
                        .fold(Expr::zero(), |acc, (q, &w)| acc + Expr::num(w) * q.differentiate(Var::X(i)))
                })
                .collect()
        })
        .collect();
    let points = sample_points(prob, spec);
    let s = scan(&points, 0, |t, x| {
        let mut worst = PointEval::new(f64::INFINITY);
        for (b, comps) in combos.iter().enumerate() {
            for (i, e) in comps.iter().enumerate() {
                let v = e.eval(t, x)?.abs();
                if -v < worst.margin {
                    worst.margin = -v;
                    worst.witness = Some(format!("phi={} coordinate {}", fmt_vec(&basis[b]), i + 1));
                }
            }
        }
        Ok(worst)
    });
    let mut r = finish("linearity_orthogonality", DERIV_TOL, &points, s, &[]);
    if r.verdict == Verdict::Pass {
        r.note.get_or_insert_with(|| format!("linear subspace has dimension {}", basis.len()));
    }
    r
}

/// Prerequisites shared by the quadratic-form and rough checks:
/// `(S)`, `q_λ ≥ 0`, `p_λ ≥ 0` at the sample points.
fn form_prerequisites(prob: &Problem, points: &[(f64, Vec<f64>)]) -> std::result::Result<(), String> {
    if let Some(k) = set_asymmetry(prob) {
        return Err(format!("{} has no opposite in the stencil", lambda_label(prob, k)));
    }
    let c = prob.coeffs();
    let bad = points.par_iter().find_map_any(|(t, x)| {
        for k in 0..c.q.len() {
            let o = prob.stencil().opposite(k).expect("symmetric");
            let (q, qo, p) = match (c.q[k].eval(*t, x), c.q[o].eval(*t, x), c.p[k].eval(*t, x)) {
                (Ok(a), Ok(b), Ok(p)) => (a, b, p),
                _ => continue,
            };
            if (q - qo).abs() > EQ_TOL {
                return Some(format!("q_lambda != q_-lambda for {} at x={}", lambda_label(prob, k), fmt_vec(x)));
            }
            if q < 0.0 {
                return Some(format!("q < 0 for {} at x={}", lambda_label(prob, k), fmt_vec(x)));
            }
            if p < 0.0 {
                return Some(format!("p < 0 for {} at x={}", lambda_label(prob, k), fmt_vec(x)));
            }
        }
        None
    });
    bad.map_or(Ok(()), Err)
}

/// Difference quotients of `r = √q` and `p` at one point.
struct Quotients {
    /// `dr[λ][μ] = δ_λ r_μ`.
    dr: Vec<Vec<f64>>,
    /// `dp[λ][μ] = δ_λ p_μ`.
    dp: Vec<Vec<f64>>,
    chi: Vec<f64>,
    q: Vec<f64>,
    c: f64,
}

fn root(q: &Expr, t: f64, x: &[f64]) -> std::result::Result<f64, EvalError> {
    let v = q.eval(t, x)?;
    if v < 0.0 {
        return Err(EvalError {
            kind: crate::expr::DomainErrorKind::SqrtOfNegative,
            expr: format!("sqrt({q})"),
            t,
            x: x.to_vec(),
        });
    }
    Ok(v.sqrt())
}

fn quotients(prob: &Problem, t: f64, x: &[f64]) -> std::result::Result<Quotients, EvalError> {
    let c = prob.coeffs();
    let h = prob.h();
    let n = c.q.len();
    let r0: Vec<f64> = c.q.iter().map(|q| root(q, t, x)).collect::<std::result::Result<_, _>>()?;
    let p0: Vec<f64> = c.p.iter().map(|p| p.eval(t, x)).collect::<std::result::Result<_, _>>()?;
    let q: Vec<f64> = r0.iter().map(|r| r * r).collect();
    let mut dr = vec![vec![0.0; n]; n];
    let mut dp = vec![vec![0.0; n]; n];
    let mut y = x.to_vec();
    for (l, v) in prob.stencil().vectors().iter().enumerate() {
        for i in 0..x.len() {
            y[i] = x[i] + h * v[i] as f64;
        }
        for m in 0..n {
            dr[l][m] = (root(&c.q[m], t, &y)? - r0[m]) / h;
            dp[l][m] = (c.p[m].eval(t, &y)? - p0[m]) / h;
        }
    }
    let chi = c.q.iter().zip(&p0).map(|(qe, p)| Ok(qe.eval(t, x)? + h * p)).collect::<std::result::Result<_, EvalError>>()?;
    Ok(Quotients {
        dr,
        dp,
        chi,
        q,
        c: c.c.eval(t, x)?,
    })
}

/// Constant budgets `r²_{λμ}`, `p_{λμ}` for the auxiliary bounds; `None`
/// selects the smallest admissible value at each point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Budgets {
    pub r2: Option<f64>,
    pub p: Option<f64>,
}

/// Left and right sides of the sufficient quadratic-form inequality as
/// symmetric matrices indexed by the stencil.
pub fn quadratic_form_matrices(prob: &Problem, t: f64, x: &[f64]) -> std::result::Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), EvalError> {
    let qt = quotients(prob, t, x)?;
    Ok(assemble_forms(prob, &qt))
}

fn assemble_forms(prob: &Problem, qt: &Quotients) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = qt.chi.len();
    let delta = prob.constants().delta;
    let k1 = prob.constants().k1;
    let h2 = prob.h() * prob.h();
    let w = 1.0 / (1.0 - 4.0 * delta);
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; n]; n];
    for l in 0..n {
        let j1: f64 = qt.dr[l].iter().map(|v| v * v).sum();
        let pabs: f64 = qt.dp[l].iter().map(|v| v.abs()).sum();
        a[l][l] += 10.0 * w * j1 + 2.0 * delta * pabs;
        for m in 0..n {
            // J₂ = Σ_μ (Σ_λ ξ_λ δ_λ r_μ)²
            let j2: f64 = (0..n).map(|mu| qt.dr[l][mu] * qt.dr[m][mu]).sum();
            a[l][m] += 2.0 * w * j2;
            let cross = qt.dp[l][m] + qt.dr[l][m] * qt.dr[l][m];
            a[l][m] += cross;
            a[m][l] += cross;
        }
        b[l][l] += (2.0 - 8.0 * delta) * qt.c + k1 * qt.chi[l];
        let o = prob.stencil().opposite(l).expect("symmetric stencil");
        let s = delta * qt.chi[l] / h2;
        for (i, j) in [(l, l), (l, o), (o, l), (o, o)] {
            b[i][j] += s;
        }
    }
    (a, b)
}

/// Smallest eigenvalue of `B - A` at every sample point, together with the
/// auxiliary budget margins `2δc - Σ_μ sup_λ r²_{λμ}` and
/// `δc - Σ_μ sup_λ p_{λμ}`.
pub fn check_quadratic_form(prob: &Problem, spec: &SampleSpec, budgets: &Budgets) -> CheckRecord {
    const NAME: &str = "quadratic_form";
    let delta = prob.constants().delta;
    if !(delta > 0.0 && delta < 0.25) {
        return CheckRecord::not_applicable(NAME, format!("delta = {delta} outside (0, 1/4)"));
    }
    let points = sample_points(prob, spec);
    if let Err(reason) = form_prerequisites(prob, &points) {
        return CheckRecord::not_applicable(NAME, reason);
    }
    let h2 = prob.h() * prob.h();
    let s = scan(&points, 3, |t, x| {
        let qt = quotients(prob, t, x)?;
        let (a, b) = assemble_forms(prob, &qt);
        let n = a.len();
        let diff: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| b[i][j] - a[i][j]).collect()).collect();
        let (vals, vecs) = linalg::symmetric_eigen(&diff);
        let eig = vals[0];

        let mut r_budget = 0.0;
        let mut p_budget = 0.0;
        let mut pointwise = f64::INFINITY;
        for m in 0..n {
            let mut r_sup = 0.0f64;
            let mut p_sup = 0.0f64;
            for l in 0..n {
                let chis = (qt.chi[m] + qt.chi[l]) / h2;
                let need_r = qt.dr[l][m] * qt.dr[l][m] - delta * chis;
                let need_p = (qt.dp[l][m].abs() - delta * delta * chis) / delta;
                match budgets.r2 {
                    Some(r2) => pointwise = pointwise.min(r2 - need_r),
                    None => r_sup = r_sup.max(need_r.max(0.0)),
                }
                match budgets.p {
                    Some(pb) => pointwise = pointwise.min(pb - need_p),
                    None => p_sup = p_sup.max(need_p.max(0.0)),
                }
            }
            r_budget += budgets.r2.unwrap_or(r_sup);
            p_budget += budgets.p.unwrap_or(p_sup);
        }
        let r_margin = 2.0 * delta * qt.c - r_budget;
        let p_margin = delta * qt.c - p_budget;
        let mut pe = PointEval::new(eig.min(r_margin).min(p_margin).min(pointwise));
        pe.aux = vec![eig, r_margin, p_margin];
        pe.xi = Some(vecs[0].clone());
        pe.witness = Some(if eig <= r_margin.min(p_margin).min(pointwise) {
            "min eigenvalue of B - A".to_string()
        } else if r_margin <= p_margin.min(pointwise) {
            "r budget".to_string()
        } else if p_margin <= pointwise {
            "p budget".to_string()
        } else {
            "pointwise budget bound".to_string()
        });
        Ok(pe)
    });
    finish(NAME, EIG_TOL, &points, s, &["min_eigenvalue", "r_budget", "p_budget"])
}

/// Per-`λ` scalar inequality bounding all the difference-quotient terms by
/// `c + K₁ q_λ`.
pub fn check_rough_condition(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    const NAME: &str = "rough_condition";
    let points = sample_points(prob, spec);
    if let Err(reason) = form_prerequisites(prob, &points) {
        return CheckRecord::not_applicable(NAME, reason);
    }
    let k1 = prob.constants().k1;
    let s = scan(&points, 0, |t, x| {
        let qt = quotients(prob, t, x)?;
        let n = qt.q.len();
        let mut worst = PointEval::new(f64::INFINITY);
        for l in 0..n {
            let a: f64 = qt.dr[l].iter().map(|v| v * v).sum();
            let b: f64 = (0..n)
                .map(|nu| (0..n).map(|m| qt.dr[l][m] * qt.dr[nu][m]).sum::<f64>().abs())
                .sum();
            let c: f64 = (0..n)
                .map(|m| {
                    (qt.dp[l][m] + qt.dp[m][l] + qt.dr[l][m] * qt.dr[l][m] + qt.dr[m][l] * qt.dr[m][l]).abs()
                })
                .sum();
            let lhs = 10.0 * a + 4.0 * b + 2.0 * c;
            let margin = qt.c + k1 * qt.q[l] - lhs;
            if margin < worst.margin {
                worst.margin = margin;
                worst.witness = Some(lambda_label(prob, l));
            }
        }
        Ok(worst)
    });
    finish(NAME, EQ_TOL, &points, s, &[])
}

/// One-dimensional explicit condition `14(r')² + b' ≤ (1-δ)c + K₁a` with
/// `a = q_{±1}`, `r = √a` and `b = p₁ - p₋₁`.
pub fn check_explicit_1d(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    const NAME: &str = "explicit_1d";
    let st = prob.stencil();
    let (Some(plus), Some(minus)) = (st.index_of(&[1]), st.index_of(&[-1])) else {
        return CheckRecord::not_applicable(NAME, "needs d = 1 and stencil {1, -1}");
    };
    if prob.dim() != 1 || st.len() != 2 {
        return CheckRecord::not_applicable(NAME, "needs d = 1 and stencil {1, -1}");
    }
    let points = sample_points(prob, spec);
    let c = prob.coeffs();
    let (a, a_minus) = (&c.q[plus], &c.q[minus]);
    if a != a_minus {
        let mismatch = points.iter().find(|(t, x)| match (a.eval(*t, x), a_minus.eval(*t, x)) {
            (Ok(u), Ok(v)) => (u - v).abs() > EQ_TOL,
            _ => false,
        });
        if let Some((_, x)) = mismatch {
            return CheckRecord::not_applicable(NAME, format!("q_1 != q_-1 at x={}", fmt_vec(x)));
        }
    }
    let r_prime = Expr::Call(crate::expr::Func::Sqrt, vec![a.clone()]).differentiate(Var::X(1));
    let (_, b) = prob.limit_coefficient_exprs();
    let b_prime = b[0].differentiate(Var::X(1));
    let delta = prob.constants().delta;
    let k1 = prob.constants().k1;
    let s = scan(&points, 0, |t, x| {
        let rp = r_prime.eval(t, x)?;
        let lhs = 14.0 * rp * rp + b_prime.eval(t, x)?;
        let rhs = (1.0 - delta) * c.c.eval(t, x)? + k1 * a.eval(t, x)?;
        Ok(PointEval::new(rhs - lhs))
    });
    finish(NAME, EQ_TOL, &points, s, &[])
}

/// `(S)`-set symmetry, `q_λ ≥ κ` and `D q_λ = D q_{-λ}`; under these the
/// main assumption holds for all small `h`.
pub fn check_nondegenerate_shortcut(prob: &Problem, spec: &SampleSpec) -> CheckRecord {
    const NAME: &str = "nondegenerate_shortcut";
    let Some(kappa) = prob.constants().kappa else {
        return CheckRecord::not_applicable(NAME, "kappa not supplied");
    };
    if let Some(k) = set_asymmetry(prob) {
        return CheckRecord::from_margin(NAME, f64::NEG_INFINITY, DERIV_TOL)
            .witness(format!("{} has no opposite in the stencil", lambda_label(prob, k)));
    }
    let d = prob.dim();
    let q = &prob.coeffs().q;
    let grads: Vec<Vec<Expr>> = q.iter().map(|e| e.gradient(d)).collect();
    let points = sample_points(prob, spec);
    let s = scan(&points, 2, |t, x| {
        let mut worst = PointEval::new(f64::INFINITY);
        let mut q_margin = f64::INFINITY;
        let mut d_margin = f64::INFINITY;
        for k in 0..q.len() {
            let o = prob.stencil().opposite(k).expect("symmetric");
            let qm = q[k].eval(t, x)? - kappa;
            if qm < worst.margin {
                worst.margin = qm;
                worst.witness = Some(format!("q below kappa for {}", lambda_label(prob, k)));
            }
            q_margin = q_margin.min(qm);
            for i in 0..d {
                let dm = -(grads[k][i].eval(t, x)? - grads[o][i].eval(t, x)?).abs();
                d_margin = d_margin.min(dm);
                if dm < worst.margin {
                    worst.margin = dm;
                    worst.witness = Some(format!("D{} q differs between {} and its opposite", i + 1, lambda_label(prob, k)));
                }
            }
        }
        worst.aux = vec![q_margin, d_margin];
        Ok(worst)
    });
    let mut r = finish(NAME, DERIV_TOL, &points, s, &["q_minus_kappa", "derivative_symmetry"]);
    if r.verdict == Verdict::Pass {
        r.note.get_or_insert_with(|| "sufficient for the main assumption at small h".into());
    }
    r
}

/// Warning text when nonsmooth primitives meet a declared smoothness order.
pub fn smoothness_warning(prob: &Problem) -> Option<String> {
    let m = prob.constants().m;
    let rough: Vec<String> = all_exprs(prob).filter(|e| e.has_nonsmooth()).map(|e| format!("`{e}`")).collect();
    (m >= 1 && !rough.is_empty()).then(|| {
        format!(
            "m = {m} declared but {} use abs/sign/step/pos/neg/min/max: derivatives follow the tie conventions",
            rough.join(", ")
        )
    })
}
