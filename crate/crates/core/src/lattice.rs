//! Lattices, grid functions and the shift/difference operators acting on them.
//!
//! A [`Domain`] is a uniform lattice of spacing `h`, either a box whose
//! outermost layer carries Dirichlet data or a periodic torus. Difference
//! operators on a box are only defined where the shifted point stays in the
//! box; outputs there carry a validity mask and the masked-out values are 0.

use crate::error::{Error, Result};
use crate::expr::Expr;

/// The stencil set of integer shift vectors with their gradient weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    vectors: Vec<Vec<i64>>,
    tau: Vec<f64>,
    tau0: f64,
}

impl Stencil {
    pub fn new(vectors: Vec<Vec<i64>>, tau: Vec<f64>, tau0: f64) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or_else(|| Error::Stencil("empty stencil".into()))?;
        if dim == 0 {
            return Err(Error::Stencil("zero-dimensional shift vectors".into()));
        }
        if tau.len() != vectors.len() {
            return Err(Error::Stencil(format!(
                "{} weights for {} vectors",
                tau.len(),
                vectors.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Stencil(format!("vector {v:?} has dimension {}, expected {dim}", v.len())));
            }
            if v.iter().all(|&c| c == 0) {
                return Err(Error::Stencil("the zero vector is not allowed (0 ∉ Λ₁)".into()));
            }
            if vectors[..i].contains(v) {
                return Err(Error::Stencil(format!("duplicate vector {v:?}")));
            }
        }
        for &w in tau.iter().chain(std::iter::once(&tau0)) {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Stencil(format!("weight {w} outside [0,1]")));
            }
        }
        Ok(Stencil { vectors, tau, tau0 })
    }

    /// `±e_1, ..., ±e_d` with unit weights and `tau0 = 0`.
    pub fn axes(dim: usize) -> Self {
        let mut vectors = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1, -1] {
                let mut v = vec![0; dim];
                v[i] = s;
                vectors.push(v);
            }
        }
        let n = vectors.len();
        Stencil::new(vectors, vec![1.0; n], 0.0).expect("axis stencil is valid")
    }

    pub fn with_tau0(mut self, tau0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau0) {
            return Err(Error::Stencil(format!("tau0 = {tau0} outside [0,1]")));
        }
        self.tau0 = tau0;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: Vec<f64>) -> Result<Self> {
        self.tau = tau;
        Stencil::new(self.vectors, self.tau, self.tau0)
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[i64] {
        &self.vectors[i]
    }

    pub fn tau(&self, i: usize) -> f64 {
        self.tau[i]
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn index_of(&self, v: &[i64]) -> Option<usize> {
        self.vectors.iter().position(|w| w == v)
    }

    /// Index of `-λ_i`, if present.
    pub fn opposite(&self, i: usize) -> Option<usize> {
        let neg: Vec<i64> = self.vectors[i].iter().map(|c| -c).collect();
        self.index_of(&neg)
    }

    /// `Λ₁ = -Λ₁` as sets.
    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.opposite(i).is_some())
    }

    /// `Σ |τ_λ λ|²`.
    pub fn weighted_size_sq(&self) -> f64 {
        self.vectors
            .iter()
            .zip(&self.tau)
            .map(|(v, t)| t * t * v.iter().map(|&c| (c * c) as f64).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// Box with a Dirichlet layer on the points where some stencil shift exits.
    Box,
    /// Torus; coefficients are assumed periodic (not checked).
    Periodic,
}

/// Uniform lattice `lower + h k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
    h: f64,
    shape: Vec<usize>,
}

impl Domain {
    pub fn new(kind: DomainKind, lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Domain("lower and upper corners must have the same nonzero dimension".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("spacing h = {h} must be positive")));
        }
        let mut shape = Vec::with_capacity(lower.len());
        for (a, b) in lower.iter().zip(&upper) {
            let cells = (b - a) / h;
            let rounded = cells.round();
            if !(cells > 0.0) || (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(Error::Domain(format!(
                    "extent [{a}, {b}] is not a positive integer multiple of h = {h}"
                )));
            }
            let n = rounded as usize;
            shape.push(match kind {
                DomainKind::Box => n + 1,
                DomainKind::Periodic => n,
            });
        }
        Ok(Domain {
            kind,
            lower,
            upper,
            h,
            shape,
        })
    }

    /// Same region, new spacing.
    pub fn with_spacing(&self, h: f64) -> Result<Self> {
        Domain::new(self.kind, self.lower.clone(), self.upper.clone(), h)
    }

    /// The image of this lattice under `x -> kappa x`.
    pub fn dilated(&self, kappa: f64) -> Result<Self> {
        let scale = |v: &[f64]| v.iter().map(|c| c * kappa).collect();
        Domain::new(self.kind, scale(&self.lower), scale(&self.upper), self.h * kappa)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == DomainKind::Periodic
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(flat, &mut x);
        x
    }

    pub fn point_into(&self, mut flat: usize, x: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let i = flat % self.shape[axis];
            flat /= self.shape[axis];
            x[axis] = self.lower[axis] + self.h * i as f64;
        }
    }

    /// Lattice index of `x + h shift`, wrapping on a torus.
    pub fn neighbor(&self, flat: usize, shift: &[i64]) -> Option<usize> {
        let mut rem = flat;
        let mut stride = 1usize;
        let mut out = 0usize;
        for axis in (0..self.dim()).rev() {
            let n = self.shape[axis];
            let i = (rem % n) as i64;
            rem /= n;
            let mut j = i + shift[axis];
            match self.kind {
                DomainKind::Periodic => j = j.rem_euclid(n as i64),
                DomainKind::Box => {
                    if j < 0 || j >= n as i64 {
                        return None;
                    }
                }
            }
            out += j as usize * stride;
            stride *= n;
        }
        Some(out)
    }

    pub fn neighbor_table(&self, shift: &[i64]) -> Vec<Option<usize>> {
        (0..self.len()).map(|i| self.neighbor(i, shift)).collect()
    }

    /// Points `x` with `x + hλ` in the lattice for every stencil vector.
    pub fn interior_mask(&self, stencil: &Stencil) -> Vec<bool> {
        (0..self.len())
            .map(|i| stencil.vectors().iter().all(|v| self.neighbor(i, v).is_some()))
            .collect()
    }

    /// Embedding of this lattice's points into the lattice refined `factor` times.
    pub fn refined_index(&self, flat: usize, factor: usize) -> usize {
        let idx = self.multi_index(flat);
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            let fine_n = match self.kind {
                DomainKind::Box => (n - 1) * factor + 1,
                DomainKind::Periodic => n * factor,
            };
            acc * fine_n + i * factor
        })
    }
}

/// Real values on every point of a [`Domain`], optionally restricted to a
/// sub-region by a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    values: Vec<f64>,
    time: Option<f64>,
    valid: Option<Vec<bool>>,
}

impl GridFunction {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Domain(format!(
                "{} values for a lattice of {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at lattice point {i}")));
        }
        Ok(GridFunction {
            domain,
            values,
            time: None,
            valid: None,
        })
    }

    pub(crate) fn from_parts(domain: Domain, values: Vec<f64>, valid: Option<Vec<bool>>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        GridFunction {
            domain,
            values,
            time: None,
            valid,
        }
    }

    pub fn constant(domain: &Domain, value: f64) -> Self {
        GridFunction::from_parts(domain.clone(), vec![value; domain.len()], None)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn valid_mask(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid.as_ref().is_none_or(|m| m[i])
    }

    /// Values at valid points, with their lattice index.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter(|(i, _)| self.is_valid(*i)).map(|(i, &v)| (i, v))
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.domain.flat_index(idx)]
    }

    /// Restricts to points where `mask` holds (intersected with the current mask).
    pub fn restricted(mut self, mask: &[bool]) -> Self {
        let merged = intersect(self.valid.as_deref(), Some(mask));
        if let Some(m) = &merged {
            for (v, ok) in self.values.iter_mut().zip(m) {
                if !ok {
                    *v = 0.0;
                }
            }
        }
        self.valid = merged;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.is_valid(i) { f(v) } else { 0.0 })
            .collect();
        GridFunction {
            domain: self.domain.clone(),
            values,
            time: self.time,
            valid: self.valid.clone(),
        }
    }

    /// Pointwise combination on the intersection of both supports.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::Domain("grid functions live on different lattices".into()));
        }
        let valid = intersect(self.valid.as_deref(), other.valid.as_deref());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (&a, &b))| if valid.as_ref().is_none_or(|m| m[i]) { f(a, b) } else { 0.0 })
            .collect();
        Ok(GridFunction {
            domain: self.domain.clone(),
            values,
            time: self.time,
            valid,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `sup |u|` over valid points (0 when nothing is valid).
    pub fn sup_norm(&self) -> f64 {
        self.iter_valid().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn max(&self) -> Option<f64> {
        self.iter_valid().map(|(_, v)| v).reduce(f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        self.iter_valid().map(|(_, v)| v).reduce(f64::min)
    }

    /// Sum over valid points.
    pub fn sum(&self) -> f64 {
        self.iter_valid().map(|(_, v)| v).sum()
    }
}

fn intersect(a: Option<&[bool]>, b: Option<&[bool]>) -> Option<Vec<bool>> {
    match (a, b) {
        (None, None) => None,
        (Some(m), None) | (None, Some(m)) => Some(m.to_vec()),
        (Some(m), Some(n)) => Some(m.iter().zip(n).map(|(x, y)| *x && *y).collect()),
    }
}

/// Where a box-domain operator result should live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    /// Every lattice point; an error if any shift leaves the box.
    Full,
    /// Only points where the shifted point stays in the box.
    Interior,
}

/// Samples `e` at every lattice point at time `t`.
pub fn sample(e: &Expr, dom: &Domain, t: f64) -> Result<GridFunction> {
    let mut x = vec![0.0; dom.dim()];
    let mut values = Vec::with_capacity(dom.len());
    for i in 0..dom.len() {
        dom.point_into(i, &mut x);
        values.push(e.eval(t, &x)?);
    }
    Ok(GridFunction::from_parts(dom.clone(), values, None).with_time(t))
}

fn check_dim(u: &GridFunction, shift: &[i64]) -> Result<()> {
    if shift.len() != u.domain.dim() {
        return Err(Error::Stencil(format!(
            "shift {shift:?} does not match lattice dimension {}",
            u.domain.dim()
        )));
    }
    Ok(())
}

/// Combines `u` at `x` with `u` at each of `shifts`; `f(u(x), [u(x + h s)])`.
fn stencil_map(
    u: &GridFunction,
    shifts: &[&[i64]],
    extent: Extent,
    f: impl Fn(f64, &[f64]) -> f64,
) -> Result<GridFunction> {
    for s in shifts {
        check_dim(u, s)?;
    }
    let dom = &u.domain;
    let mut values = vec![0.0; dom.len()];
    let mut mask = vec![true; dom.len()];
    let mut buf = vec![0.0; shifts.len()];
    for i in 0..dom.len() {
        let mut ok = u.is_valid(i);
        for (k, s) in shifts.iter().enumerate() {
            match dom.neighbor(i, s) {
                Some(j) => {
                    ok &= u.is_valid(j);
                    buf[k] = u.values[j];
                }
                None => {
                    if extent == Extent::Full {
                        return Err(Error::OutsideBox {
                            shift: s.to_vec(),
                            index: i,
                        });
                    }
                    ok = false;
                }
            }
        }
        mask[i] = ok;
        if ok {
            values[i] = f(u.values[i], &buf);
        }
    }
    let valid = if mask.iter().all(|&m| m) { None } else { Some(mask) };
    Ok(GridFunction {
        domain: dom.clone(),
        values,
        time: u.time,
        valid,
    })
}

/// `T_λ u (x) = u(x + hλ)`.
pub fn shift(u: &GridFunction, lambda: &[i64], extent: Extent) -> Result<GridFunction> {
    stencil_map(u, &[lambda], extent, |_, n| n[0])
}

/// `δ_λ u = (u(x + hλ) - u(x)) / h`.
pub fn delta(u: &GridFunction, lambda: &[i64], extent: Extent) -> Result<GridFunction> {
    let h = u.domain.h;
    stencil_map(u, &[lambda], extent, |c, n| (n[0] - c) / h)
}

/// `Δ_λ u = (u(x + hλ) - 2u(x) + u(x - hλ)) / h²`.
pub fn delta2(u: &GridFunction, lambda: &[i64], extent: Extent) -> Result<GridFunction> {
    let h2 = u.domain.h * u.domain.h;
    let minus: Vec<i64> = lambda.iter().map(|c| -c).collect();
    stencil_map(u, &[lambda, &minus], extent, |c, n| (n[0] - 2.0 * c + n[1]) / h2)
}

/// Central differences `(u(x + h e_i) - u(x - h e_i)) / 2h`, one per axis.
pub fn central_gradient(u: &GridFunction) -> Result<Vec<GridFunction>> {
    let d = u.domain.dim();
    let h = u.domain.h;
    (0..d)
        .map(|i| {
            let mut plus = vec![0; d];
            plus[i] = 1;
            let minus: Vec<i64> = plus.iter().map(|c| -c).collect();
            stencil_map(u, &[&plus, &minus], Extent::Interior, |_, n| (n[0] - n[1]) / (2.0 * h))
        })
        .collect()
}

pub fn sup_norm(u: &GridFunction) -> f64 {
    u.sup_norm()
}

/// `U = (Σ_λ |τ_λ δ_λ u|²)^{1/2}`, valid where every `δ_λ u` is.
pub fn gradient_functional_u(u: &GridFunction, stencil: &Stencil) -> Result<GridFunction> {
    let shifts: Vec<&[i64]> = stencil.vectors().iter().map(Vec::as_slice).collect();
    let h = u.domain.h;
    let tau = stencil.taus();
    stencil_map(u, &shifts, Extent::Interior, |c, n| {
        n.iter()
            .zip(tau)
            .map(|(v, t)| {
                let d = t * (v - c) / h;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    })
}
