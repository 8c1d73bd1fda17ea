//! Sparse multivariate polynomials with exact rational coefficients.

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, Rational::one())
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, coef: Rational) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent length must match variable count");
        let mut p = Self::zero(nvars);
        p.add_term(exponents, coef);
        p
    }

    /// `<gradient, x> + constant`.
    pub fn affine(gradient: &[Rational], constant: &Rational) -> Self {
        let n = gradient.len();
        let mut p = Self::constant(n, constant.clone());
        for (i, g) in gradient.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, g.clone());
        }
        p
    }

    fn add_term(&mut self, exponents: Vec<u32>, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().fold(Rational::zero(), |acc, (e, c)| {
            let mut term = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    term *= num::pow(xi.clone(), k as usize);
                }
            }
            acc + term
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                x.iter()
                    .zip(e)
                    .fold(rational::to_f64(c), |t, (xi, &k)| t * xi.powi(k as i32))
            })
            .sum()
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * Rational::from_integer(e[i].into()));
        }
        out
    }

    /// Substitute `x = offset + linear · t`, where `linear` has one row per
    /// original variable and one column per new variable.
    pub fn compose_affine(&self, offset: &[Rational], linear: &[Vec<Rational>]) -> Polynomial {
        let k = linear.first().map_or(0, |r| r.len());
        let coords: Vec<Polynomial> = (0..self.nvars)
            .map(|i| Polynomial::affine(&linear[i], &offset[i]))
            .collect();
        // powers[i][p] = coords[i]^p
        let max_deg: Vec<u32> = (0..self.nvars)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Polynomial>> = coords
            .iter()
            .zip(&max_deg)
            .map(|(c, &d)| {
                let mut v = vec![Polynomial::one(k)];
                for p in 1..=d as usize {
                    let next = &v[p - 1] * c;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(k);
        for (e, coef) in &self.terms {
            let mut term = Polynomial::constant(k, coef.clone());
            for (i, &p) in e.iter().enumerate() {
                if p > 0 {
                    term = &term * &powers[i][p as usize];
                }
            }
            out = &out + &term;
        }
        out
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// JSON form: `{"nvars": n, "terms": [{"exp": [..], "coef": "p/q"}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub nvars: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    #[serde(with = "rational::serde_str")]
    pub coef: Rational,
}

impl From<&Polynomial> for PolynomialJson {
    fn from(p: &Polynomial) -> Self {
        Self {
            nvars: p.nvars,
            terms: p
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    exp: e.clone(),
                    coef: c.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialJson> for Polynomial {
    type Error = Error;
    fn try_from(j: PolynomialJson) -> Result<Self> {
        let mut p = Polynomial::zero(j.nvars);
        for t in j.terms {
            if t.exp.len() != j.nvars {
                return Err(Error::DimensionMismatch {
                    expected: j.nvars,
                    got: t.exp.len(),
                });
            }
            p.add_term(t.exp, t.coef);
        }
        Ok(p)
    }
}
