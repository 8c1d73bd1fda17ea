//! Symplectic potentials on the interior of `P`: the canonical potential,
//! the Abreu residual, the modified K-energy and the crease jump integral.
//!
//! The canonical potential is `u = Σ δ_i log δ_i` with `δ_i = λ_i - <l_i, x>`.
//! This is twice Guillemin's potential; with the lattice boundary measure it
//! is the normalization for which `-Σ ∂²U^{ij}/∂x_i∂x_j = s` holds exactly on
//! the interval and the square. [`Convention::GuilleminHalf`] gives the other
//! normalization for comparison.

use crate::error::{Error, Result};
use crate::extremal::ExtremalData;
use crate::plfunc::{subdivide, PLFunc};
use crate::polynomial::Polynomial;
use crate::polytope::Polytope;
use crate::rational::{to_f64, Rational};
use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `Σ δ_i log δ_i`.
    #[default]
    Paper,
    /// `½ Σ δ_i log δ_i`.
    GuilleminHalf,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Paper => 1.0,
            Convention::GuilleminHalf => 0.5,
        }
    }
}

/// Facet data of `P` in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Facets {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl Facets {
    pub fn new(p: &Polytope) -> Self {
        Self {
            normals: (0..p.num_facets())
                .map(|i| p.normal_as_rational(i).iter().map(to_f64).collect())
                .collect(),
            offsets: p.offsets().iter().map(to_f64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    /// `δ_i(x) = λ_i - <l_i, x>`, without checks.
    pub fn deltas(&self, x: &[f64]) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(l, lam)| lam - l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Facet distances of an interior point; rejects everything else.
    pub fn interior_deltas(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.deltas(x);
        if d.iter().all(|&v| v > 0.0) {
            Ok(d)
        } else {
            Err(Error::OutsideInterior { point: x.to_vec() })
        }
    }
}

/// A strictly convex function on the interior of `P`. Evaluators receive the
/// point together with its facet distances so that callers holding more
/// accurate distances (quadrature near `∂P`) can supply them.
pub trait Potential: Sync {
    fn facets(&self) -> &Facets;

    /// Value at `x`; must accept `δ_i = 0` on the boundary.
    fn value_with(&self, x: &[f64], deltas: &[f64]) -> f64;

    fn hessian_with(&self, x: &[f64], deltas: &[f64]) -> Matrix;

    fn dim(&self) -> usize {
        self.facets().dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.facets().interior_deltas(x)?;
        Ok(self.value_with(x, &d))
    }

    fn hessian(&self, x: &[f64]) -> Result<Matrix> {
        let d = self.facets().interior_deltas(x)?;
        Ok(self.hessian_with(x, &d))
    }
}

/// `c Σ δ_i log δ_i + g(x)` with `c` set by the convention and an optional
/// polynomial correction `g`.
#[derive(Debug, Clone)]
pub struct SymplecticPotential {
    facets: Facets,
    factor: f64,
    correction: Option<Polynomial>,
    /// Second derivatives of the correction, row-major.
    correction_hessian: Vec<Vec<Polynomial>>,
}

pub type CanonicalPotential = SymplecticPotential;

pub fn canonical_potential(p: &Polytope) -> SymplecticPotential {
    SymplecticPotential::canonical(p, Convention::Paper)
}

fn xlogx(d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        d * d.ln()
    }
}

impl SymplecticPotential {
    pub fn canonical(p: &Polytope, convention: Convention) -> Self {
        Self {
            facets: Facets::new(p),
            factor: convention.factor(),
            correction: None,
            correction_hessian: Vec::new(),
        }
    }

    pub fn with_correction(mut self, g: Polynomial) -> Result<Self> {
        let n = self.facets.dim();
        if g.nvars() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.nvars(),
            });
        }
        self.correction_hessian = (0..n)
            .map(|i| {
                let gi = g.derivative(i);
                (0..n).map(|j| gi.derivative(j)).collect()
            })
            .collect();
        self.correction = Some(g);
        Ok(self)
    }

    pub fn correction(&self) -> Option<&Polynomial> {
        self.correction.as_ref()
    }

    /// `∇u = -c Σ l_i (log δ_i + 1) + ∇g`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.facets.interior_deltas(x)?;
        let n = x.len();
        let mut g = vec![0.0; n];
        for (l, di) in self.facets.normals.iter().zip(&d) {
            let w = -self.factor * (di.ln() + 1.0);
            for k in 0..n {
                g[k] += w * l[k];
            }
        }
        if let Some(corr) = &self.correction {
            for (k, gk) in g.iter_mut().enumerate() {
                *gk += corr.derivative(k).eval_f64(x);
            }
        }
        Ok(g)
    }
}

impl Potential for SymplecticPotential {
    fn facets(&self) -> &Facets {
        &self.facets
    }

    fn value_with(&self, x: &[f64], deltas: &[f64]) -> f64 {
        let base: f64 = deltas.iter().map(|&d| xlogx(d)).sum::<f64>() * self.factor;
        base + self.correction.as_ref().map_or(0.0, |g| g.eval_f64(x))
    }

    /// `c Σ l_i l_iᵀ / δ_i + D²g`.
    fn hessian_with(&self, x: &[f64], deltas: &[f64]) -> Matrix {
        let n = x.len();
        let mut h = vec![vec![0.0; n]; n];
        for (l, d) in self.facets.normals.iter().zip(deltas) {
            let w = self.factor / d;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += w * l[i] * l[j];
                }
            }
        }
        for (i, row) in self.correction_hessian.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                h[i][j] += q.eval_f64(x);
            }
        }
        h
    }
}

/// Central-difference Hessian of `u` with step `h`.
pub fn fd_hessian(u: &dyn Potential, x: &[f64], h: f64) -> Result<Matrix> {
    let n = x.len();
    let at = |shift: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.to_vec();
        for &(k, s) in shift {
            y[k] += s;
        }
        u.value(&y)
    };
    let mut out = vec![vec![0.0; n]; n];
    let u0 = at(&[])?;
    for i in 0..n {
        out[i][i] = (at(&[(i, h)])? - 2.0 * u0 + at(&[(i, -h)])?) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                + at(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// Lower Cholesky factor, or `None` unless the matrix is positive definite.
fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d.is_finite() && d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// `log det A` for positive definite `A`.
pub fn log_det(a: &Matrix) -> Option<f64> {
    cholesky(a).map(|l| 2.0 * (0..a.len()).map(|i| l[i][i].ln()).sum::<f64>())
}

/// `A⁻¹` for positive definite `A`.
pub fn spd_inverse(a: &Matrix) -> Option<Matrix> {
    let l = cholesky(a)?;
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        // solve L y = e_col, then Lᵀ z = y
        let mut y = vec![0.0; n];
        for i in 0..n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            y[i] = (rhs - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
        }
        for i in (0..n).rev() {
            let z = (y[i] - (i + 1..n).map(|k| l[k][i] * inv[k][col]).sum::<f64>()) / l[i][i];
            inv[i][col] = z;
        }
    }
    Some(inv)
}

/// Axis-aligned lattice `lo + h k` covering the bounding box of `P`.
#[derive(Debug, Clone, PartialEq)]
struct Lattice {
    lo: Vec<f64>,
    h: f64,
    counts: Vec<usize>,
}

impl Lattice {
    fn new(p: &Polytope, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::BadParameter(format!("grid spacing must be positive, got {h}")));
        }
        let n = p.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for v in p.vertices() {
            for k in 0..n {
                let x = to_f64(&v[k]);
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        let counts = (0..n)
            .map(|k| ((hi[k] - lo[k]) / h + 1e-9).floor() as usize + 1)
            .collect();
        Ok(Self { lo, h, counts })
    }

    fn len(&self) -> usize {
        self.counts.iter().product()
    }

    fn multi(&self, mut flat: usize) -> Vec<i64> {
        let mut k = vec![0; self.counts.len()];
        for i in (0..self.counts.len()).rev() {
            k[i] = (flat % self.counts[i]) as i64;
            flat /= self.counts[i];
        }
        k
    }

    fn flat(&self, k: &[i64]) -> Option<usize> {
        let mut f = 0usize;
        for (i, &ki) in k.iter().enumerate() {
            if ki < 0 || ki as usize >= self.counts[i] {
                return None;
            }
            f = f * self.counts[i] + ki as usize;
        }
        Some(f)
    }

    fn point(&self, k: &[i64]) -> Vec<f64> {
        k.iter()
            .zip(&self.lo)
            .map(|(&ki, lo)| lo + self.h * ki as f64)
            .collect()
    }
}

/// Values of a potential on the lattice points of a bounding box of `P` that
/// lie in the open polytope; the mask marks points with every `δ_i >= margin`.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    lattice: Lattice,
    margin: f64,
    values: Vec<Option<f64>>,
    mask: Vec<bool>,
}

impl PotentialGrid {
    pub fn new(p: &Polytope, u: &dyn Potential, h: f64, margin: f64) -> Result<Self> {
        if margin.is_nan() || margin <= 0.0 {
            return Err(Error::BadParameter(format!("margin must be positive, got {margin}")));
        }
        let lattice = Lattice::new(p, h)?;
        let facets = Facets::new(p);
        let (values, mask): (Vec<Option<f64>>, Vec<bool>) = (0..lattice.len())
            .into_par_iter()
            .map(|f| {
                let x = lattice.point(&lattice.multi(f));
                let d = facets.deltas(&x);
                if d.iter().all(|&v| v > 0.0) {
                    (Some(u.value_with(&x, &d)), d.iter().all(|&v| v >= margin))
                } else {
                    (None, false)
                }
            })
            .unzip();
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            lattice,
            margin,
            values,
            mask,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.lattice.h
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn shape(&self) -> &[usize] {
        &self.lattice.counts
    }

    pub fn masked_points(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn value_at(&self, k: &[i64]) -> Result<f64> {
        self.lattice
            .flat(k)
            .and_then(|f| self.values[f])
            .ok_or_else(|| Error::OutsideInterior {
                point: self.lattice.point(k),
            })
    }

    /// Central-difference Hessian at a lattice point from stored values.
    fn hessian_at(&self, k: &[i64]) -> Result<Matrix> {
        let n = k.len();
        let h = self.lattice.h;
        let shifted = |moves: &[(usize, i64)]| -> Result<f64> {
            let mut m = k.to_vec();
            for &(i, s) in moves {
                m[i] += s;
            }
            self.value_at(&m)
        };
        let u0 = self.value_at(k)?;
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            out[i][i] = (shifted(&[(i, 1)])? - 2.0 * u0 + shifted(&[(i, -1)])?) / (h * h);
            for j in 0..i {
                let v = (shifted(&[(i, 1), (j, 1)])? - shifted(&[(i, 1), (j, -1)])? - shifted(&[(i, -1), (j, 1)])?
                    + shifted(&[(i, -1), (j, -1)])?)
                    / (4.0 * h * h);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        Ok(out)
    }
}

/// Where the Hessian in the Abreu residual comes from.
pub enum ResidualSource<'a> {
    /// Analytic Hessian of an evaluator on a lattice with spacing `h`.
    Analytic {
        potential: &'a dyn Potential,
        h: f64,
        margin: f64,
    },
    /// Central differences of sampled values.
    Grid(&'a PotentialGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    pub h: f64,
    pub margin: f64,
    pub analytic_hessian: bool,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub sup_norm: f64,
}

/// `r(x) = -Σ_ij ∂²U^{ij}/∂x_i∂x_j - s(x)` with `U = (D²u)⁻¹`, by second
/// central differences of `U` at every masked lattice point.
pub fn abreu_residual(p: &Polytope, ext: &ExtremalData, source: ResidualSource) -> Result<ResidualField> {
    let n = p.dim();
    let (lattice, mask, analytic) = match &source {
        ResidualSource::Analytic { potential, h, margin } => {
            if margin.is_nan() || *margin <= 0.0 {
                return Err(Error::BadParameter(format!("margin must be positive, got {margin}")));
            }
            let lattice = Lattice::new(p, *h)?;
            let facets = potential.facets();
            let mask: Vec<bool> = (0..lattice.len())
                .map(|f| {
                    facets
                        .deltas(&lattice.point(&lattice.multi(f)))
                        .iter()
                        .all(|&d| d >= *margin)
                })
                .collect();
            (lattice, mask, true)
        }
        ResidualSource::Grid(g) => (g.lattice.clone(), g.mask.clone(), false),
    };
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let margin = match &source {
        ResidualSource::Analytic { margin, .. } => *margin,
        ResidualSource::Grid(g) => g.margin,
    };

    // U is needed on masked points and their (diagonal) neighbours
    let mut needed = vec![false; lattice.len()];
    for (f, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let k = lattice.multi(f);
        for offset in neighbourhood(n) {
            let m: Vec<i64> = k.iter().zip(&offset).map(|(a, b)| a + b).collect();
            match lattice.flat(&m) {
                Some(g) => needed[g] = true,
                None => {
                    return Err(Error::OutsideInterior {
                        point: lattice.point(&m),
                    })
                }
            }
        }
    }
    let inverse_at = |f: usize| -> Result<Matrix> {
        let k = lattice.multi(f);
        let x = lattice.point(&k);
        let hess = match &source {
            ResidualSource::Analytic { potential, .. } => potential.hessian(&x)?,
            ResidualSource::Grid(g) => g.hessian_at(&k)?,
        };
        spd_inverse(&hess).ok_or(Error::NotConvex { point: x })
    };
    let inverses: Vec<Option<Matrix>> = (0..lattice.len())
        .into_par_iter()
        .map(|f| if needed[f] { inverse_at(f).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;

    let h = lattice.h;
    let masked: Vec<usize> = (0..lattice.len()).filter(|&f| mask[f]).collect();
    let results: Vec<(Vec<f64>, f64)> = masked
        .par_iter()
        .map(|&f| {
            let k = lattice.multi(f);
            let u = |moves: &[(usize, i64)], i: usize, j: usize| -> f64 {
                let mut m = k.clone();
                for &(a, s) in moves {
                    m[a] += s;
                }
                let g = lattice.flat(&m).expect("neighbour checked above");
                inverses[g].as_ref().expect("inverse computed above")[i][j]
            };
            let mut div = 0.0;
            for i in 0..n {
                div += (u(&[(i, 1)], i, i) - 2.0 * u(&[], i, i) + u(&[(i, -1)], i, i)) / (h * h);
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    div += (u(&[(i, 1), (j, 1)], i, j) - u(&[(i, 1), (j, -1)], i, j) - u(&[(i, -1), (j, 1)], i, j)
                        + u(&[(i, -1), (j, -1)], i, j))
                        / (4.0 * h * h);
                }
            }
            let x = lattice.point(&k);
            let r = -div - ext.s.eval_f64(&x);
            (x, r)
        })
        .collect();
    let sup_norm = results.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs()));
    let (points, values) = results.into_iter().unzip();
    Ok(ResidualField {
        h,
        margin,
        analytic_hessian: analytic,
        points,
        values,
        sup_norm,
    })
}

/// Offsets in `{-1, 0, 1}^n` with at most two nonzero entries.
fn neighbourhood(n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0; n]];
    for i in 0..n {
        for s in [-1, 1] {
            let mut e = vec![0; n];
            e[i] = s;
            out.push(e.clone());
            for j in 0..i {
                for t in [-1, 1] {
                    let mut f = e.clone();
                    f[j] = t;
                    out.push(f);
                }
            }
        }
    }
    out
}

/// Settings of the adaptive quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Target for the summed error estimate of each integral.
    pub tol: f64,
    /// Cap on the number of cells per simplex.
    pub max_cells: usize,
    /// Quintic grading of the collapsed coordinates toward the faces.
    pub grading: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_cells: 20_000,
            grading: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadStats {
    pub error_estimate: f64,
    pub cells: usize,
    pub converged: bool,
}

impl QuadStats {
    fn merge(&mut self, other: &QuadStats) {
        self.error_estimate += other.error_estimate;
        self.cells += other.cells;
        self.converged &= other.converged;
    }

    fn empty() -> Self {
        Self {
            error_estimate: 0.0,
            cells: 0,
            converged: true,
        }
    }
}

/// Quadrature point on a simplex: position, facet distances and weight.
struct Sample<'a> {
    x: &'a [f64],
    deltas: &'a [f64],
}

/// A simplex of dimension `k` in `R^n` with exact facet distances at its
/// vertices, integrated through the collapsed-coordinate map from `[0,1]^k`.
struct SimplexQuad {
    vertices: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    /// `k`-volume of the parallelepiped of the edges, times the measure factor.
    jacobian: f64,
}

struct Rules {
    high: Vec<(f64, f64)>,
    low: Vec<(f64, f64)>,
}

impl Rules {
    fn new() -> Self {
        let pairs = |k: usize| {
            GaussLegendre::new(NonZeroUsize::new(k).expect("nonzero order"))
                .as_node_weight_pairs()
                .iter()
                .map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0))
                .collect()
        };
        Self {
            high: pairs(8),
            low: pairs(5),
        }
    }
}

fn grade(t: f64) -> f64 {
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn grade_derivative(t: f64) -> f64 {
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

#[derive(Clone)]
struct QuadCell {
    lo: Vec<f64>,
    width: f64,
    values: Vec<f64>,
    error: f64,
    /// Creation order; breaks ties in the heap deterministically.
    id: usize,
}

impl PartialEq for QuadCell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QuadCell {}

impl PartialOrd for QuadCell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadCell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.id.cmp(&self.id))
    }
}

impl SimplexQuad {
    fn new(vertices: Vec<Vec<f64>>, deltas: Vec<Vec<f64>>, jacobian: f64) -> Self {
        Self {
            vertices,
            deltas,
            jacobian,
        }
    }

    fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Tensor rule on one cube cell; `f` returns a fixed-length vector.
    fn cell(
        &self,
        lo: &[f64],
        width: f64,
        rule: &[(f64, f64)],
        grading: bool,
        f: &dyn Fn(&Sample) -> Result<Vec<f64>>,
        out_len: usize,
    ) -> Result<Vec<f64>> {
        let k = self.k();
        let n = self.vertices[0].len();
        let m = self.deltas[0].len();
        let mut acc = vec![0.0; out_len];
        let total = rule.len().pow(k as u32);
        let mut t = vec![0.0; k];
        let mut one_minus = vec![0.0; k];
        let mut x = vec![0.0; n];
        let mut d = vec![0.0; m];
        let mut bary = vec![0.0; k + 1];
        for idx in 0..total {
            let mut rest = idx;
            let mut weight = width.powi(k as i32) * self.jacobian;
            for a in 0..k {
                let (node, w) = rule[rest % rule.len()];
                rest /= rule.len();
                let tau = lo[a] + width * node;
                weight *= w;
                if grading {
                    t[a] = grade(tau);
                    one_minus[a] = grade(1.0 - tau);
                    weight *= grade_derivative(tau);
                } else {
                    t[a] = tau;
                    one_minus[a] = 1.0 - tau;
                }
            }
            // collapsed coordinates: β_j = t_j Π_{i<j}(1 - t_i), β_0 = Π(1 - t_i)
            let mut prod = 1.0;
            for a in 0..k {
                bary[a + 1] = t[a] * prod;
                prod *= one_minus[a];
                weight *= one_minus[a].powi((k - 1 - a) as i32);
            }
            bary[0] = prod;
            x.iter_mut().for_each(|v| *v = 0.0);
            d.iter_mut().for_each(|v| *v = 0.0);
            for (b, (v, dv)) in bary.iter().zip(self.vertices.iter().zip(&self.deltas)) {
                for i in 0..n {
                    x[i] += b * v[i];
                }
                for i in 0..m {
                    d[i] += b * dv[i];
                }
            }
            let vals = f(&Sample { x: &x, deltas: &d })?;
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += weight * v;
            }
        }
        Ok(acc)
    }

    /// Adaptive dyadic refinement of `[0,1]^k` driven by the difference of
    /// the 8- and 5-point rules.
    fn integrate(
        &self,
        rules: &Rules,
        cfg: &QuadConfig,
        tol: f64,
        f: &dyn Fn(&Sample) -> Result<Vec<f64>>,
        out_len: usize,
    ) -> Result<(Vec<f64>, QuadStats)> {
        let k = self.k();
        let eval = |lo: Vec<f64>, width: f64, id: usize| -> Result<QuadCell> {
            let hi = self.cell(&lo, width, &rules.high, cfg.grading, f, out_len)?;
            let low = self.cell(&lo, width, &rules.low, cfg.grading, f, out_len)?;
            let error = hi.iter().zip(&low).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(QuadCell {
                lo,
                width,
                values: hi,
                error,
                id,
            })
        };
        let mut next_id = 0usize;
        let mut heap = BinaryHeap::new();
        heap.push(eval(vec![0.0; k], 1.0, next_id)?);
        next_id += 1;
        let mut total_error = heap.peek().map_or(0.0, |b| b.error);
        let mut converged = true;
        while total_error > tol {
            if heap.len() + (1 << k) > cfg.max_cells {
                converged = false;
                break;
            }
            let worst = heap.pop().expect("heap is nonempty");
            let half = worst.width / 2.0;
            total_error -= worst.error;
            for corner in 0..(1usize << k) {
                let lo: Vec<f64> = (0..k)
                    .map(|a| worst.lo[a] + if corner >> a & 1 == 1 { half } else { 0.0 })
                    .collect();
                let child = eval(lo, half, next_id)?;
                next_id += 1;
                total_error += child.error;
                heap.push(child);
            }
        }
        // sum in creation order for reproducibility
        let mut boxes = heap.into_vec();
        boxes.sort_by_key(|b| b.id);
        let mut sum = vec![0.0; out_len];
        let mut err = 0.0;
        for b in &boxes {
            for (s, v) in sum.iter_mut().zip(&b.values) {
                *s += v;
            }
            err += b.error;
        }
        Ok((
            sum,
            QuadStats {
                error_estimate: err,
                cells: boxes.len(),
                converged,
            },
        ))
    }
}

fn vertex_deltas(p: &Polytope, v: &[Rational]) -> Vec<f64> {
    (0..p.num_facets())
        .map(|i| {
            let l = p.normal_as_rational(i);
            let d: Rational = &p.offsets()[i] - crate::linalg::dot(&l, v);
            to_f64(&d)
        })
        .collect()
}

fn gram_sqrt(edges: &[Vec<f64>]) -> f64 {
    let k = edges.len();
    let gram: Matrix = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| edges[a].iter().zip(&edges[b]).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    log_det(&gram).map_or(0.0, |l| (0.5 * l).exp())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Interior simplices of `P` ready for quadrature.
fn interior_simplices(p: &Polytope) -> Vec<SimplexQuad> {
    p.triangulate()
        .iter()
        .map(|s| {
            let verts: Vec<Vec<f64>> = s.vertices().iter().map(|v| v.iter().map(to_f64).collect()).collect();
            let deltas = s.vertices().iter().map(|v| vertex_deltas(p, v)).collect();
            // |det E| with the 1/n! of the simplex absorbed by the collapsed map
            let jac = to_f64(&s.volume()) * factorial(p.dim());
            SimplexQuad::new(verts, deltas, jac)
        })
        .collect()
}

/// Boundary simplices of `P` weighted by the lattice measure `dσ`.
fn boundary_simplices(p: &Polytope) -> Vec<SimplexQuad> {
    let hull = p.hull();
    let n = p.dim();
    let mut out = Vec::new();
    for j in 0..p.num_facets() {
        let face = hull.facet_vertex_indices(j);
        let lnorm = p
            .normal_as_rational(j)
            .iter()
            .map(|x| to_f64(x).powi(2))
            .sum::<f64>()
            .sqrt();
        for s in hull.triangulate_face(face, n - 1) {
            let exact: Vec<&Vec<Rational>> = s.iter().map(|&v| &hull.vertices()[v]).collect();
            let verts: Vec<Vec<f64>> = exact.iter().map(|v| v.iter().map(to_f64).collect()).collect();
            let edges: Vec<Vec<f64>> = verts[1..]
                .iter()
                .map(|v| v.iter().zip(&verts[0]).map(|(a, b)| a - b).collect())
                .collect();
            let jac = if n == 1 { 1.0 } else { gram_sqrt(&edges) } / lnorm;
            let deltas = exact.iter().map(|v| vertex_deltas(p, v)).collect();
            out.push(SimplexQuad::new(verts, deltas, jac));
        }
    }
    out
}

fn integrate_over(
    simplices: &[SimplexQuad],
    cfg: &QuadConfig,
    f: &(dyn Fn(&Sample) -> Result<Vec<f64>> + Sync),
    out_len: usize,
) -> Result<(Vec<f64>, QuadStats)> {
    let rules = Rules::new();
    let tol = cfg.tol / simplices.len().max(1) as f64;
    let parts: Vec<(Vec<f64>, QuadStats)> = simplices
        .par_iter()
        .map(|s| {
            if s.k() == 0 {
                let vals = f(&Sample {
                    x: &s.vertices[0],
                    deltas: &s.deltas[0],
                })?;
                let vals = vals.into_iter().map(|v| v * s.jacobian).collect();
                return Ok((
                    vals,
                    QuadStats {
                        error_estimate: 0.0,
                        cells: 1,
                        converged: true,
                    },
                ));
            }
            s.integrate(&rules, cfg, tol, f, out_len)
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; out_len];
    let mut stats = QuadStats::empty();
    for (v, st) in &parts {
        for (a, b) in sum.iter_mut().zip(v) {
            *a += b;
        }
        stats.merge(st);
    }
    Ok((sum, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEnergy {
    /// `F(u) = -∫_P log det D²u dx + L(u)`.
    pub value: f64,
    /// `-∫_P log det D²u dx`.
    pub log_det_term: f64,
    /// `L(u) = ∫_{∂P} u dσ - ∫_P s u dx`.
    pub l_value: f64,
    pub boundary_integral: f64,
    pub interior_su: f64,
    pub interior: QuadStats,
    pub boundary: QuadStats,
    pub tol: f64,
}

/// Modified K-energy of `u` by adaptive quadrature on a triangulation of `P`.
pub fn kenergy(p: &Polytope, ext: &ExtremalData, u: &dyn Potential, cfg: &QuadConfig) -> Result<KEnergy> {
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::BadParameter(format!(
            "quadrature tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    let interior = |s: &Sample| -> Result<Vec<f64>> {
        let h = u.hessian_with(s.x, s.deltas);
        let ld = log_det(&h).ok_or_else(|| Error::NotConvex { point: s.x.to_vec() })?;
        let su = ext.s.eval_f64(s.x) * u.value_with(s.x, s.deltas);
        Ok(vec![-ld, su])
    };
    let (vals, istats) = integrate_over(&interior_simplices(p), cfg, &interior, 2)?;
    let boundary = |s: &Sample| -> Result<Vec<f64>> { Ok(vec![u.value_with(s.x, s.deltas)]) };
    let (bvals, bstats) = integrate_over(&boundary_simplices(p), cfg, &boundary, 1)?;
    let l_value = bvals[0] - vals[1];
    Ok(KEnergy {
        value: vals[0] + l_value,
        log_det_term: vals[0],
        l_value,
        boundary_integral: bvals[0],
        interior_su: vals[1],
        interior: istats,
        boundary: bstats,
        tol: cfg.tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpIntegral {
    pub value: f64,
    pub creases: usize,
    pub stats: QuadStats,
}

/// `Σ_creases ∫ U^{ij} d_i d_j / |d| dσ₀` with `d` the gradient jump across
/// the crease and `dσ₀` Euclidean measure.
pub fn crease_jump_integral(p: &Polytope, u: &dyn Potential, f: &PLFunc, cfg: &QuadConfig) -> Result<JumpIntegral> {
    let sub = subdivide(p, f)?;
    let n = p.dim();
    let mut total = 0.0;
    let mut stats = QuadStats::empty();
    for crease in &sub.creases {
        let jump: Vec<f64> = sub.crease_jump(crease).iter().map(to_f64).collect();
        let norm = jump.iter().map(|x| x * x).sum::<f64>().sqrt();
        let region = &sub.cells[crease.pieces.0].region;
        let face = region.facet_vertex_indices(crease.facet);
        let simplices: Vec<SimplexQuad> = region
            .triangulate_face(face, n - 1)
            .iter()
            .map(|s| {
                let exact: Vec<&Vec<Rational>> = s.iter().map(|&v| &region.vertices()[v]).collect();
                let verts: Vec<Vec<f64>> = exact.iter().map(|v| v.iter().map(to_f64).collect()).collect();
                let edges: Vec<Vec<f64>> = verts[1..]
                    .iter()
                    .map(|v| v.iter().zip(&verts[0]).map(|(a, b)| a - b).collect())
                    .collect();
                let jac = if n == 1 { 1.0 } else { gram_sqrt(&edges) };
                let deltas = exact.iter().map(|v| vertex_deltas(p, v)).collect();
                SimplexQuad::new(verts, deltas, jac)
            })
            .collect();
        let integrand = |s: &Sample| -> Result<Vec<f64>> {
            let h = u.hessian_with(s.x, s.deltas);
            let inv = spd_inverse(&h).ok_or_else(|| Error::NotConvex { point: s.x.to_vec() })?;
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += inv[i][j] * jump[i] * jump[j];
                }
            }
            Ok(vec![q / norm])
        };
        let (v, st) = integrate_over(&simplices, cfg, &integrand, 1)?;
        total += v[0];
        stats.merge(&st);
    }
    Ok(JumpIntegral {
        value: total,
        creases: sub.creases.len(),
        stats,
    })
}
