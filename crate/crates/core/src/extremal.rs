//! The extremal affine function `s = R̄ + θ` and the functional `L`.
//!
//! `s` is the unique affine function for which
//! `L(u) = ∫_{∂P} u dσ - ∫_P s u dx` vanishes on every affine `u`. It is found
//! by solving the moment system over the basis `{1, x_1, ..., x_n}`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::plfunc::{self, PLFunc};
use crate::polynomial::Polynomial;
use crate::polytope::Polytope;
use crate::rational::{self, Rational};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// `x -> <gradient, x> + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineFunc {
    #[serde(rename = "A", with = "rational::serde_vec")]
    pub gradient: Vec<Rational>,
    #[serde(rename = "a", with = "rational::serde_str")]
    pub constant: Rational,
}

impl AffineFunc {
    pub fn new(gradient: Vec<Rational>, constant: Rational) -> Self {
        Self { gradient, constant }
    }

    pub fn constant_fn(dim: usize, c: Rational) -> Self {
        Self::new(vec![Rational::zero(); dim], c)
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        linalg::dot(&self.gradient, x) + &self.constant
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.gradient
            .iter()
            .zip(x)
            .map(|(g, xi)| rational::to_f64(g) * xi)
            .sum::<f64>()
            + rational::to_f64(&self.constant)
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::affine(&self.gradient, &self.constant)
    }

    pub fn add(&self, other: &AffineFunc) -> AffineFunc {
        AffineFunc::new(
            self.gradient.iter().zip(&other.gradient).map(|(a, b)| a + b).collect(),
            &self.constant + &other.constant,
        )
    }

    pub fn sub(&self, other: &AffineFunc) -> AffineFunc {
        AffineFunc::new(
            self.gradient.iter().zip(&other.gradient).map(|(a, b)| a - b).collect(),
            &self.constant - &other.constant,
        )
    }

    pub fn scale(&self, c: &Rational) -> AffineFunc {
        AffineFunc::new(self.gradient.iter().map(|g| g * c).collect(), &self.constant * c)
    }
}

/// `s = rbar + theta` together with the moments that determine it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalData {
    pub s: AffineFunc,
    #[serde(with = "rational::serde_str")]
    pub rbar: Rational,
    /// Normalized so that `∫_P theta dx = 0`.
    pub theta: AffineFunc,
    #[serde(with = "rational::serde_str")]
    pub vol: Rational,
    #[serde(with = "rational::serde_str")]
    pub boundary_mass: Rational,
}

impl ExtremalData {
    pub fn dim(&self) -> usize {
        self.s.dim()
    }
}

/// Solve `M c = b` with `M_ab = ∫_P φ_a φ_b dx`, `b_a = ∫_{∂P} φ_a dσ` over
/// `φ = (1, x_1, ..., x_n)`.
pub fn solve_extremal_affine(p: &Polytope) -> Result<ExtremalData> {
    let n = p.dim();
    let basis: Vec<Polynomial> = std::iter::once(Polynomial::one(n))
        .chain((0..n).map(|i| Polynomial::var(n, i)))
        .collect();
    let mut m = vec![vec![Rational::zero(); n + 1]; n + 1];
    for a in 0..=n {
        for b in a..=n {
            let v = p.integrate(&(&basis[a] * &basis[b]));
            m[a][b] = v.clone();
            m[b][a] = v;
        }
    }
    let rhs: Vec<Rational> = basis.iter().map(|f| p.integrate_boundary(f)).collect();
    let c = linalg::solve(&m, &rhs).ok_or_else(|| Error::Internal("singular moment matrix".into()))?;
    let s = AffineFunc::new(c[1..].to_vec(), c[0].clone());
    let vol = m[0][0].clone();
    let boundary_mass = rhs[0].clone();
    let rbar = &boundary_mass / &vol;
    let theta = AffineFunc::new(s.gradient.clone(), &s.constant - &rbar);
    Ok(ExtremalData {
        s,
        rbar,
        theta,
        vol,
        boundary_mass,
    })
}

/// Exact `L(f)` for a polynomial `f`.
pub fn l_functional(p: &Polytope, ext: &ExtremalData, f: &Polynomial) -> Rational {
    p.integrate_boundary(f) - p.integrate(&(&ext.s.to_polynomial() * f))
}

/// Relative Futaki invariant of the toric degeneration induced by `f`:
/// `-L(f) / (2 Vol(P))`.
pub fn relative_futaki(p: &Polytope, ext: &ExtremalData, f: &PLFunc) -> Result<Rational> {
    let l = plfunc::l_of_pl(p, ext, f)?;
    Ok(futaki_from_l(&l, &ext.vol))
}

pub fn futaki_from_l(l: &Rational, vol: &Rational) -> Rational {
    -l / (Rational::from_integer(2.into()) * vol)
}

/// `s > 0` on `P`, decided exactly at the vertices.
pub fn check_positivity(ext: &ExtremalData, p: &Polytope) -> bool {
    p.vertices().iter().all(|v| ext.s.eval(v).is_positive())
}
