//! Univariate polynomials over the rationals: interpolation, Sturm sequences
//! and exact real-root isolation.

use crate::rational::Rational;
use num::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    /// Coefficients from the constant term up; no trailing zeros.
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `x - r`.
    pub fn linear_root(r: &Rational) -> Self {
        Self::new(vec![-r, Rational::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    fn lead(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(k.into()))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    let b = other.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let lead = divisor.lead().expect("division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        if rem.len() < divisor.coeffs.len() {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let factor = &rem[k + dd] / lead;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= &factor * d;
            }
            quot[k] = factor;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    pub fn monic(&self) -> Self {
        match self.lead() {
            Some(l) => self.scale(&l.recip()),
            None => Self::zero(),
        }
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Same roots, each simple.
    pub fn squarefree(&self) -> Self {
        if self.degree() == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0
    }

    /// Newton-form interpolation through `(nodes[i], values[i])`.
    pub fn interpolate(nodes: &[Rational], values: &[Rational]) -> Self {
        assert_eq!(nodes.len(), values.len());
        let n = nodes.len();
        let mut dd = values.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (&nodes[i] - &nodes[i - level]);
            }
        }
        let mut poly = Self::zero();
        for i in (0..n).rev() {
            poly = poly
                .mul(&Self::linear_root(&nodes[i]))
                .add(&Self::constant(dd[i].clone()));
        }
        poly
    }
}

/// `(p, p', -rem(p, p'), ...)`.
pub fn sturm_sequence(p: &UniPoly) -> Vec<UniPoly> {
    let mut seq = vec![p.clone()];
    if p.degree() == 0 {
        return seq;
    }
    seq.push(p.derivative());
    loop {
        let n = seq.len();
        let r = seq[n - 2].div_rem(&seq[n - 1]).1;
        if r.is_zero() {
            break;
        }
        seq.push(r.neg());
    }
    seq
}

fn sign_changes(seq: &[UniPoly], x: &Rational) -> usize {
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for p in seq {
        let v = p.eval(x);
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if let Some(l) = last {
            if l != pos {
                changes += 1;
            }
        }
        last = Some(pos);
    }
    changes
}

/// An isolating interval; `lo == hi` marks an exact rational root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// Distinct real roots of `p` in the open interval `(lo, hi)`, each isolated in
/// a disjoint interval of width at most `tol`, in increasing order. The zero
/// polynomial has no isolated roots (callers check for it).
pub fn isolate_roots(p: &UniPoly, lo: &Rational, hi: &Rational, tol: &Rational) -> Vec<RootInterval> {
    let mut out = Vec::new();
    if p.degree() == 0 || lo >= hi {
        return out;
    }
    let mut q = p.squarefree();
    for end in [lo, hi] {
        if q.eval(end).is_zero() {
            q = q.div_rem(&UniPoly::linear_root(end)).0;
        }
    }
    if q.degree() == 0 {
        return out;
    }
    let seq = sturm_sequence(&q);
    let vlo = sign_changes(&seq, lo);
    let vhi = sign_changes(&seq, hi);
    isolate_rec(&q, &seq, lo.clone(), hi.clone(), vlo, vhi, tol, &mut out);
    out.sort_by(|a, b| a.lo.cmp(&b.lo));
    out
}

#[allow(clippy::too_many_arguments)]
fn isolate_rec(
    q: &UniPoly,
    seq: &[UniPoly],
    lo: Rational,
    hi: Rational,
    vlo: usize,
    vhi: usize,
    tol: &Rational,
    out: &mut Vec<RootInterval>,
) {
    let count = vlo.saturating_sub(vhi);
    if count == 0 {
        return;
    }
    if count == 1 {
        out.push(refine_simple_root(q, lo, hi, tol));
        return;
    }
    let mid = (&lo + &hi) * half();
    if q.eval(&mid).is_zero() {
        // step off the exact root until it is the only root within the gap
        let mut delta = (&hi - &lo) * half() * half();
        loop {
            let a = &mid - &delta;
            let b = &mid + &delta;
            if !q.eval(&a).is_zero() && !q.eval(&b).is_zero() && sign_changes(seq, &a) - sign_changes(seq, &b) == 1 {
                out.push(RootInterval {
                    lo: mid.clone(),
                    hi: mid.clone(),
                });
                let va = sign_changes(seq, &a);
                let vb = sign_changes(seq, &b);
                isolate_rec(q, seq, lo, a, vlo, va, tol, out);
                isolate_rec(q, seq, b, hi, vb, vhi, tol, out);
                return;
            }
            delta *= half();
        }
    }
    let vmid = sign_changes(seq, &mid);
    isolate_rec(q, seq, lo, mid.clone(), vlo, vmid, tol, out);
    isolate_rec(q, seq, mid, hi, vmid, vhi, tol, out);
}

/// Bisection on a sign change of the squarefree `q`, which has exactly one
/// root in `(lo, hi)` and none at the ends.
fn refine_simple_root(q: &UniPoly, mut lo: Rational, mut hi: Rational, tol: &Rational) -> RootInterval {
    let lo_positive = q.eval(&lo).is_positive();
    while &(&hi - &lo) > tol {
        let mid = (&lo + &hi) * half();
        let v = q.eval(&mid);
        if v.is_zero() {
            return RootInterval {
                lo: mid.clone(),
                hi: mid,
            };
        }
        if v.is_positive() == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // a rational root with a small denominator is the simplest rational nearby
    let guess = simplest_between(&lo, &hi);
    if q.eval(&guess).is_zero() {
        return RootInterval {
            lo: guess.clone(),
            hi: guess,
        };
    }
    RootInterval { lo, hi }
}

/// The rational with the smallest denominator in `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    let f = lo.floor();
    if &f == lo {
        return f;
    }
    let next = &f + Rational::one();
    if &next <= hi {
        return next;
    }
    f + simplest_between(&(hi - lo.floor()).recip(), &(lo - lo.floor()).recip()).recip()
}

/// Exact sign pattern of `p` on `(lo, hi)`: the distinct roots inside and one
/// sample point per root-free gap.
#[derive(Debug, Clone)]
pub struct SignAnalysis {
    pub roots: Vec<RootInterval>,
    /// `(sample point, value of p there)` for each gap between roots.
    pub gaps: Vec<(Rational, Rational)>,
}

pub fn sign_analysis(p: &UniPoly, lo: &Rational, hi: &Rational, tol: &Rational) -> SignAnalysis {
    let roots = isolate_roots(p, lo, hi, tol);
    let mut bounds = vec![lo.clone()];
    for r in &roots {
        bounds.push(r.lo.clone());
        bounds.push(r.hi.clone());
    }
    bounds.push(hi.clone());
    let gaps = bounds
        .chunks(2)
        .map(|w| {
            let x = (&w[0] + &w[1]) * half();
            let v = p.eval(&x);
            (x, v)
        })
        .collect();
    SignAnalysis { roots, gaps }
}
