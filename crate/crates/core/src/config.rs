//! TOML run configurations.
//!
//! ```toml
//! [problem]
//! dimension = 1
//! kind = "periodic"
//! lower = [0.0]
//! upper = ["2*pi"]
//! h = "pi/16"
//! T = 1.0
//!
//! [constants]
//! c0 = 1.0
//!
//! [[stencil]]
//! lambda = [1]
//! q = "1"
//!
//! [[stencil]]
//! lambda = [-1]
//! q = "1"
//!
//! [coefficients]
//! c = "1"
//! g = "sin(x1)"
//! ```
//!
//! Every scalar may be a number or a constant expression such as `"pi/16"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conditions::Budgets;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{Domain, DomainKind, Stencil};
use crate::operator::{CoefficientSet, Constants, Problem};

/// A number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    pub fn to_expr(&self) -> Result<Expr> {
        match self {
            Scalar::Num(v) => Ok(Expr::num(*v)),
            Scalar::Text(s) => Expr::parse(s).map_err(|e| Error::parse(s, e)),
        }
    }

    /// Value of a constant scalar.
    pub fn value(&self, field: &str) -> Result<f64> {
        let e = self.to_expr()?;
        if !e.is_time_independent() || !e.is_space_independent() {
            return Err(Error::Config {
                line: None,
                message: format!("{field}: `{e}` must not depend on t or x"),
            });
        }
        Ok(e.eval(0.0, &[])?)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Num(v)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Box,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub dimension: usize,
    pub kind: Kind,
    pub lower: Vec<Scalar>,
    pub upper: Vec<Scalar>,
    pub h: Scalar,
    #[serde(rename = "T", default = "one")]
    pub t_final: Scalar,
}

fn one() -> Scalar {
    Scalar::Num(1.0)
}

fn zero() -> Scalar {
    Scalar::Num(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "one")]
    pub c0: Scalar,
    #[serde(default = "default_delta")]
    pub delta: Scalar,
    #[serde(rename = "K1", default = "one")]
    pub k1: Scalar,
    #[serde(default = "zero")]
    pub tau0: Scalar,
    /// Artificial diffusion added to every `p_λ` at load time.
    #[serde(default = "zero")]
    pub theta: Scalar,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Scalar>,
}

fn default_delta() -> Scalar {
    Scalar::Num(0.2)
}

fn default_m() -> u32 {
    1
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection {
            c0: one(),
            delta: default_delta(),
            k1: one(),
            tau0: zero(),
            theta: zero(),
            m: 1,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StencilEntry {
    pub lambda: Vec<i64>,
    pub q: Scalar,
    #[serde(default = "zero")]
    pub p: Scalar,
    #[serde(default = "one")]
    pub tau: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    pub c: Scalar,
    #[serde(default = "zero")]
    pub f: Scalar,
    #[serde(default = "zero")]
    pub g: Scalar,
}

/// Subcommand parameters; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Extrapolation order.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h_list: Vec<Scalar>,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
    /// `parabolic` or `elliptic`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Test function for `consistency`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// Exact solution for `extrapolate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Evaluation points for `oracle-1d`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<Scalar>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_every: Option<usize>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    crate::elliptic::DEFAULT_MAX_ITER
}

fn default_k() -> usize {
    2
}

fn default_checks() -> Vec<String> {
    vec!["all".into()]
}

fn default_t_samples() -> usize {
    17
}

fn default_mode() -> String {
    "parabolic".into()
}

fn default_n_max() -> usize {
    1000
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("all run fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    pub stencil: Vec<StencilEntry>,
    pub coefficients: CoefficientsSection,
    #[serde(default)]
    pub run: RunSection,
}

/// 1-based line of byte offset `pos`.
fn line_of(source: &str, pos: usize) -> usize {
    source[..pos.min(source.len())].matches('\n').count() + 1
}

/// Line of the first `key = ...` assignment, if any.
fn line_of_key(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Line of the `n`-th `[[stencil]]` header.
fn line_of_stencil(source: &str, n: usize) -> Option<usize> {
    source
        .lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == "[[stencil]]")
        .nth(n)
        .map(|(i, _)| i + 1)
}

impl RunConfig {
    pub fn parse(source: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(source).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.problem_with_source(Some(source))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    /// Validated problem, with `theta` added to every `p_λ`.
    pub fn problem(&self) -> Result<Problem> {
        self.problem_with_source(None)
    }

    fn problem_with_source(&self, source: Option<&str>) -> Result<Problem> {
        let at_key = |key: &str, e: Error| Error::Config {
            line: source.and_then(|s| line_of_key(s, key)),
            message: format!("{key}: {}", strip_config(e)),
        };
        let at_stencil = |n: usize, e: Error| Error::Config {
            line: source.and_then(|s| line_of_stencil(s, n)),
            message: format!("stencil entry {}: {}", n + 1, strip_config(e)),
        };
        let pr = &self.problem;
        let d = pr.dimension;
        if d == 0 {
            return Err(at_key("dimension", Error::Problem("must be at least 1".into())));
        }
        let coords = |v: &[Scalar], key: &str| -> Result<Vec<f64>> {
            if v.len() != d {
                return Err(at_key(key, Error::Problem(format!("{} entries for dimension {d}", v.len()))));
            }
            v.iter().map(|s| s.value(key).map_err(|e| at_key(key, e))).collect()
        };
        let lower = coords(&pr.lower, "lower")?;
        let upper = coords(&pr.upper, "upper")?;
        let h = pr.h.value("h").map_err(|e| at_key("h", e))?;
        let kind = match pr.kind {
            Kind::Box => DomainKind::Box,
            Kind::Periodic => DomainKind::Periodic,
        };
        let domain = Domain::new(kind, lower, upper, h).map_err(|e| at_key("h", e))?;

        let cs = &self.constants;
        let num = |s: &Scalar, key: &str| s.value(key).map_err(|e| at_key(key, e));
        let tau0 = num(&cs.tau0, "tau0")?;
        if self.stencil.is_empty() {
            return Err(Error::Config {
                line: None,
                message: "stencil: at least one [[stencil]] entry is required".into(),
            });
        }
        let mut vectors = Vec::new();
        let mut taus = Vec::new();
        let mut q = Vec::new();
        let mut p = Vec::new();
        for (n, entry) in self.stencil.iter().enumerate() {
            if entry.lambda.len() != d {
                return Err(at_stencil(
                    n,
                    Error::Stencil(format!("lambda has {} components for dimension {d}", entry.lambda.len())),
                ));
            }
            if entry.lambda.iter().all(|&c| c == 0) {
                return Err(at_stencil(n, Error::Stencil("lambda = 0 violates 0 ∉ Λ₁".into())));
            }
            if let Some(m) = self.stencil[..n].iter().position(|o| o.lambda == entry.lambda) {
                return Err(at_stencil(n, Error::Stencil(format!("lambda {:?} repeats entry {}", entry.lambda, m + 1))));
            }
            vectors.push(entry.lambda.clone());
            taus.push(entry.tau.value("tau").map_err(|e| at_stencil(n, e))?);
            q.push(entry.q.to_expr().map_err(|e| at_stencil(n, e))?);
            p.push(entry.p.to_expr().map_err(|e| at_stencil(n, e))?);
        }
        if !(0.0..=1.0).contains(&tau0) {
            return Err(at_key("tau0", Error::Stencil(format!("tau0 = {tau0} outside [0,1]"))));
        }
        let stencil = Stencil::new(vectors, taus, tau0).map_err(|e| Error::Config {
            line: None,
            message: format!("stencil: {e}"),
        })?;

        let cc = &self.coefficients;
        let expr = |s: &Scalar, key: &str| s.to_expr().map_err(|e| at_key(key, e));
        let coeffs = CoefficientSet {
            q,
            p,
            c: expr(&cc.c, "c")?,
            f: expr(&cc.f, "f")?,
            g: expr(&cc.g, "g")?,
        };
        let constants = Constants {
            c0: num(&cs.c0, "c0")?,
            delta: num(&cs.delta, "delta")?,
            k1: num(&cs.k1, "K1")?,
            m: cs.m,
            t_final: num(&pr.t_final, "T")?,
            theta: 0.0,
            kappa: cs.kappa.as_ref().map(|k| num(k, "kappa")).transpose()?,
        };
        let theta = num(&cs.theta, "theta")?;
        let prob = Problem::new(domain, stencil, coeffs, constants).map_err(|e| Error::Config {
            line: None,
            message: strip_config(e),
        })?;
        if theta == 0.0 {
            return Ok(prob);
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(at_key("theta", Error::Problem(format!("theta = {theta} must be nonnegative"))));
        }
        prob.add_theta(theta).map_err(|e| at_key("theta", e))
    }

    /// Spacings of `run.h_list`.
    pub fn h_list(&self) -> Result<Vec<f64>> {
        self.run.h_list.iter().map(|s| s.value("h_list")).collect()
    }

    pub fn x_list(&self) -> Result<Vec<f64>> {
        self.run.x.iter().map(|s| s.value("x")).collect()
    }

    pub fn budgets(&self) -> Budgets {
        Budgets {
            r2: self.run.budget_r2,
            p: self.run.budget_p,
        }
    }
}

/// Message of `e` without a repeated config prefix.
pub(crate) fn strip_config(e: Error) -> String {
    match e {
        Error::Config { message, .. } => message,
        other => other.to_string(),
    }
}
