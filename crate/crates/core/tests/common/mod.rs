//! Shared helpers for integration tests: random polytopes and PL functions,
//! and an independent floating-point oracle for `L` built on coordinate
//! slicing instead of triangulation.
#![allow(dead_code)]

use kstab::plfunc::{PLFunc, SimplePL};
use kstab::rational::{frac, int, to_f64};
use kstab::{AffineFunc, Error, Polytope, Rational};
use rand::Rng;

/// Box `Π [-a_i, b_i]` with up to `cuts` extra random half-spaces; redundant
/// constraints are dropped until the description is irredundant.
pub fn random_polytope(rng: &mut impl Rng, n: usize, cuts: usize) -> Polytope {
    loop {
        let mut normals: Vec<Vec<i64>> = Vec::new();
        let mut offsets: Vec<Rational> = Vec::new();
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 1;
            normals.push(e.clone());
            offsets.push(int(rng.gen_range(1..4)));
            e[i] = -1;
            normals.push(e);
            offsets.push(int(rng.gen_range(0..3)));
        }
        for _ in 0..rng.gen_range(0..=cuts) {
            let l: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
            if l.iter().all(|&x| x == 0) {
                continue;
            }
            // through a point of the box interior region, shifted a little
            let c: i64 = l.iter().map(|x| x.abs()).sum();
            offsets.push(frac(rng.gen_range(c..3 * c + 2), 2));
            normals.push(l);
        }
        loop {
            match Polytope::from_i64(n, &normals, offsets.clone()) {
                Ok(p) => return p,
                Err(Error::Redundant(i)) | Err(Error::DuplicateFacet { second: i, .. }) => {
                    normals.remove(i);
                    offsets.remove(i);
                }
                Err(_) => break,
            }
        }
    }
}

/// A random rational point in the interior: a positive combination of vertices.
pub fn random_interior_point(rng: &mut impl Rng, p: &Polytope) -> Vec<Rational> {
    let verts = p.vertices();
    let weights: Vec<i64> = verts.iter().map(|_| rng.gen_range(1..6)).collect();
    let total: i64 = weights.iter().sum();
    (0..p.dim())
        .map(|k| {
            verts
                .iter()
                .zip(&weights)
                .map(|(v, &w)| &v[k] * int(w))
                .fold(int(0), |a, b| a + b)
                / int(total)
        })
        .collect()
}

/// Simple PL function whose crease passes through a random interior point.
pub fn random_simple_pl(rng: &mut impl Rng, p: &Polytope) -> SimplePL {
    let n = p.dim();
    loop {
        let a: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-3..=3))).collect();
        if a.iter().all(|x| *x == int(0)) {
            continue;
        }
        let x = random_interior_point(rng, p);
        let c = -kstab::linalg::dot(&a, &x);
        return SimplePL::new(a, c).expect("nonzero slope");
    }
}

pub fn random_affine(rng: &mut impl Rng, n: usize) -> AffineFunc {
    AffineFunc::new(
        (0..n)
            .map(|_| frac(rng.gen_range(-6..=6), rng.gen_range(1..4)))
            .collect(),
        frac(rng.gen_range(-6..=6), rng.gen_range(1..4)),
    )
}

pub fn random_pl(rng: &mut impl Rng, n: usize, pieces: usize) -> PLFunc {
    PLFunc::new((0..pieces).map(|_| random_affine(rng, n)).collect()).expect("nonempty")
}

/// Floating-point affine piece `<g, x> + c`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub g: Vec<f64>,
    pub c: f64,
}

impl Piece {
    pub fn of(a: &AffineFunc) -> Self {
        Self {
            g: a.gradient.iter().map(to_f64).collect(),
            c: to_f64(&a.constant),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.c
    }
}

fn max_eval(pieces: &[Piece], x: &[f64]) -> f64 {
    pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
}

/// Gauss-Legendre with `k` points on `[a, b]` (hard-coded nodes; exact for
/// polynomials of degree `2k - 1`).
fn gl(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let (m, r) = ((a + b) / 2.0, (b - a) / 2.0);
    X.iter().zip(&W).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

/// Integral of a function that is polynomial of degree <= 9 between the
/// given breakpoints.
fn piecewise(lo: f64, hi: f64, mut cuts: Vec<f64>, f: impl Fn(f64) -> f64) -> f64 {
    cuts.retain(|&t| t > lo && t < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| gl(w[0], w[1], &f)).sum()
}

/// Facet data in floating point.
pub struct FloatPolytope {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
}

impl FloatPolytope {
    pub fn new(p: &Polytope) -> Self {
        Self {
            normals: (0..p.num_facets())
                .map(|i| p.normal_as_rational(i).iter().map(to_f64).collect())
                .collect(),
            offsets: p.offsets().iter().map(to_f64).collect(),
            vertices: p.vertices().iter().map(|v| v.iter().map(to_f64).collect()).collect(),
        }
    }
}

/// `(∫_{∂P} f dσ, ∫_P w f dx)` for `f = max of pieces`, `w` affine, by slicing
/// (n = 1, 2). All breakpoints of the piecewise-polynomial integrands are
/// located explicitly, so the result is exact up to rounding.
pub fn oracle_terms(p: &FloatPolytope, w: &Piece, pieces: &[Piece]) -> (f64, f64) {
    let n = p.normals[0].len();
    let f = |x: &[f64]| max_eval(pieces, x);
    match n {
        1 => {
            let lo = p.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = p.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            let kinks = tie_points_1d(pieces, &[1.0], &[0.0]);
            let boundary = f(&[lo]) + f(&[hi]);
            let interior = piecewise(lo, hi, kinks, |x| w.eval(&[x]) * f(&[x]));
            (boundary, interior)
        }
        2 => oracle_2d(p, w, pieces),
        _ => panic!("oracle supports n <= 2"),
    }
}

/// Parameters `t` where two pieces tie along `base + t dir`.
fn tie_points_1d(pieces: &[Piece], dir: &[f64], base: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, a) in pieces.iter().enumerate() {
        for b in &pieces[i + 1..] {
            let slope: f64 = a.g.iter().zip(&b.g).zip(dir).map(|((x, y), d)| (x - y) * d).sum();
            let value = a.eval(base) - b.eval(base);
            if slope.abs() > 1e-14 {
                out.push(-value / slope);
            }
        }
    }
    out
}

fn oracle_2d(p: &FloatPolytope, w: &Piece, pieces: &[Piece]) -> (f64, f64) {
    let f = |x: &[f64]| max_eval(pieces, x);
    // lines: facets and tie lines, as (normal, rhs)
    let mut lines: Vec<(Vec<f64>, f64)> = p.normals.iter().cloned().zip(p.offsets.iter().copied()).collect();
    for (i, a) in pieces.iter().enumerate() {
        for b in &pieces[i + 1..] {
            lines.push((vec![a.g[0] - b.g[0], a.g[1] - b.g[1]], b.c - a.c));
        }
    }
    let xlo = p.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let xhi = p.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut xcuts: Vec<f64> = p.vertices.iter().map(|v| v[0]).collect();
    for (i, (l1, r1)) in lines.iter().enumerate() {
        for (l2, r2) in &lines[i + 1..] {
            let det = l1[0] * l2[1] - l1[1] * l2[0];
            if det.abs() > 1e-14 {
                xcuts.push((r1 * l2[1] - r2 * l1[1]) / det);
            }
        }
    }
    let y_range = |x: f64| -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (l, r) in p.normals.iter().zip(&p.offsets) {
            if l[1] > 0.0 {
                hi = hi.min((r - l[0] * x) / l[1]);
            } else if l[1] < 0.0 {
                lo = lo.max((r - l[0] * x) / l[1]);
            }
        }
        (lo, hi)
    };
    let inner = |x: f64| -> f64 {
        let (lo, hi) = y_range(x);
        if hi <= lo {
            return 0.0;
        }
        let kinks = tie_points_1d(pieces, &[0.0, 1.0], &[x, 0.0]);
        piecewise(lo, hi, kinks, |y| w.eval(&[x, y]) * f(&[x, y]))
    };
    let interior = piecewise(xlo, xhi, xcuts, inner);

    let mut boundary = 0.0;
    for (i, (l, r)) in p.normals.iter().zip(&p.offsets).enumerate() {
        // points base + t d on the facet line, d ⟂ l with |d| = |l|
        let d = [-l[1], l[0]];
        let ll = l[0] * l[0] + l[1] * l[1];
        let base = [l[0] * r / ll, l[1] * r / ll];
        let (mut tlo, mut thi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (j, (m, s)) in p.normals.iter().zip(&p.offsets).enumerate() {
            if j == i {
                continue;
            }
            let md = m[0] * d[0] + m[1] * d[1];
            let rest = s - (m[0] * base[0] + m[1] * base[1]);
            if md > 1e-14 {
                thi = thi.min(rest / md);
            } else if md < -1e-14 {
                tlo = tlo.max(rest / md);
            }
        }
        if thi - tlo <= 1e-14 {
            continue;
        }
        // Euclidean length element |d| dt divided by |l| is dt
        let kinks = tie_points_1d(pieces, &d, &base);
        boundary += piecewise(tlo, thi, kinks, |t| f(&[base[0] + t * d[0], base[1] + t * d[1]]));
    }
    (boundary, interior)
}

/// Independent floating solve of the moment system for `s` (n = 1, 2).
pub fn oracle_extremal(p: &FloatPolytope) -> Vec<f64> {
    let n = p.normals[0].len();
    let basis: Vec<Piece> = std::iter::once(Piece {
        g: vec![0.0; n],
        c: 1.0,
    })
    .chain((0..n).map(|i| {
        let mut g = vec![0.0; n];
        g[i] = 1.0;
        Piece { g, c: 0.0 }
    }))
    .collect();
    let m = n + 1;
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        let (bd, _) = oracle_terms(p, &basis[0], std::slice::from_ref(&basis[i]));
        b[i] = bd;
        for j in 0..m {
            a[i][j] = oracle_terms(p, &basis[i], std::slice::from_ref(&basis[j])).1;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let factor = a[r][col] / a[col][col];
            for k in col..m {
                a[r][k] -= factor * a[col][k];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        x[r] = (b[r] - (r + 1..m).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    // returned as (constant, gradient...)
    x
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// A lattice quadrilateral (not Delzant) on which some simple PL function has
/// `L < 0`; found by a randomized search and confirmed by the oracle above.
pub fn unstable_quadrilateral() -> Polytope {
    Polytope::from_i64(
        2,
        &[vec![-1, 0], vec![0, -1], vec![7, 2], vec![8, -1]],
        vec![int(0), int(0), int(15), int(2)],
    )
    .expect("valid quadrilateral")
}
