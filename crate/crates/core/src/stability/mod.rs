//! Search for destabilizing simple PL functions `max{0, <a, x> + c}` and
//! estimation of the properness constant.
//!
//! For a fixed primitive direction `a`, both `L(v_c)` and `∫_{∂P} v_c dσ` are
//! polynomials in `c` between consecutive vertex values of `-<a, x>`. The
//! search recovers these polynomials exactly by interpolation and analyses
//! them with Sturm sequences, so every offset of every enumerated direction
//! is covered.

pub mod univariate;

use crate::error::{Error, Result};
use crate::extremal::{futaki_from_l, ExtremalData};
use crate::linalg;
use crate::plfunc::{crease_meets_interior, PlTerms, SimplePL};
use crate::polynomial::Polynomial;
use crate::polytope::{HalfSpace, Polytope, Region};
use crate::rational::{self, Rational};
use num::integer::Integer;
use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use univariate::{isolate_roots, sign_analysis, UniPoly};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Bound on the components of the crease directions.
    pub height: u32,
    /// Interpolation nodes per segment; `None` uses the minimum `n + 3`.
    pub nodes: Option<usize>,
    /// Width below which isolating intervals stop being refined.
    pub tolerance: Rational,
    /// Worker threads for the direction sweep; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SearchConfig {
    pub fn new(height: u32) -> Self {
        Self {
            height,
            nodes: None,
            tolerance: Rational::new(1.into(), num::BigInt::from(10).pow(12u32)),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Some simple PL function has `L < 0`, certified exactly.
    Unstable,
    /// `L >= 0` on all candidates and `L = 0` is attained by a non-affine one.
    EqualityNonaffine,
    /// `L > 0` for every enumerated direction and offset.
    NoDestabilizerAtResolution,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Unstable => "UNSTABLE",
            Verdict::EqualityNonaffine => "EQUALITY_NONAFFINE",
            Verdict::NoDestabilizerAtResolution => "NO_DESTABILIZER_AT_RESOLUTION",
        })
    }
}

/// An exactly evaluated simple PL function. The stored representative is the
/// one vanishing at the centroid side of the crease (see [`Candidate::of`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub direction: Vec<i64>,
    #[serde(with = "rational::serde_vec")]
    pub a: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    #[serde(with = "rational::serde_str")]
    pub l: Rational,
    /// `∫_{∂P} v dσ` of the stored representative.
    #[serde(with = "rational::serde_str")]
    pub boundary: Rational,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
}

impl Candidate {
    pub fn simple_pl(&self) -> SimplePL {
        SimplePL::new(self.a.clone(), self.c.clone()).expect("candidate slope is nonzero")
    }
}

/// Per-direction summary, one CSV row in the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub direction: Vec<i64>,
    /// Offset of the smallest `L` found, for `max{0, <direction, x> + c}`.
    #[serde(with = "rational::serde_str")]
    pub best_offset: Rational,
    #[serde(with = "rational::serde_str")]
    pub best_l: Rational,
    /// Infimum of the normalized ratio along this direction.
    #[serde(with = "rational::serde_str")]
    pub best_ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    /// Destabilizer (UNSTABLE) or zero of `L` (EQUALITY_NONAFFINE).
    pub witness: Option<Candidate>,
    #[serde(with = "rational::serde_opt")]
    pub futaki_of_witness: Option<Rational>,
    /// Infimum of `L(v) / ∫_{∂P} v dσ` over the normalized candidates.
    #[serde(with = "rational::serde_str")]
    pub lambda_hat: Rational,
    /// Candidate realizing `lambda_hat`; `None` when it is only a limit.
    pub lambda_candidate: Option<Candidate>,
    pub candidates_evaluated: usize,
    pub directions: usize,
    pub segments: usize,
    /// Zero-length segments from coinciding vertex values.
    pub segments_skipped: usize,
    /// Set when the simple-PL reduction is not known to be complete.
    pub note: Option<String>,
    pub per_direction: Vec<DirectionSummary>,
}

/// Primitive integer vectors with components in `[-H, H]`, one per `±` pair
/// (first nonzero component positive), in lexicographic order.
pub fn enumerate_directions(n: usize, height: u32) -> Result<Vec<Vec<i64>>> {
    if height == 0 {
        return Err(Error::BadHeight);
    }
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let h = i64::from(height);
    let mut out = Vec::new();
    let mut cur = vec![-h; n];
    loop {
        let first = cur.iter().find(|&&x| x != 0);
        if first.is_some_and(|&x| x > 0) && cur.iter().fold(0i64, |g, &x| g.gcd(&x)) == 1 {
            out.push(cur.clone());
        }
        // odometer increment, last coordinate fastest
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < h {
                cur[i] += 1;
                break;
            }
            cur[i] = -h;
        }
    }
}

/// Sorted distinct values of `-<a, v>` over the vertices of `P`.
pub fn offset_breakpoints(p: &Polytope, a: &[Rational]) -> Vec<Rational> {
    let mut values: Vec<Rational> = p.vertices().iter().map(|v| -linalg::dot(a, v)).collect();
    values.sort();
    values.dedup();
    values
}

/// Exact `L(v) / ∫_{∂P} v dσ` for `v = max{0, <a, x> + c}`.
pub fn properness_ratio(p: &Polytope, ext: &ExtremalData, v: &SimplePL) -> Result<Rational> {
    if !crease_meets_interior(p, v) {
        return Err(Error::CreaseOutside);
    }
    let terms = simple_terms(p, ext, v.slope(), v.offset());
    if !terms.boundary.is_positive() {
        return Err(Error::CreaseOutside);
    }
    Ok(terms.l_value() / terms.boundary)
}

/// Boundary and interior terms of `max{0, <a, x> + c}` for any offset.
pub fn simple_terms(p: &Polytope, ext: &ExtremalData, a: &[Rational], c: &Rational) -> PlTerms {
    let values: Vec<Rational> = p.vertices().iter().map(|v| linalg::dot(a, v) + c).collect();
    if values.iter().all(|x| !x.is_positive()) {
        return PlTerms {
            boundary: Rational::zero(),
            interior: Rational::zero(),
        };
    }
    let f = Polynomial::affine(a, c);
    let s = ext.s.to_polynomial();
    if values.iter().all(|x| !x.is_negative()) {
        return PlTerms {
            boundary: p.integrate_boundary(&f),
            interior: p.integrate(&(&s * &f)),
        };
    }
    let cut = HalfSpace::new(a.iter().map(|x| -x).collect(), c.clone());
    let hull = p.hull();
    match hull.intersect(&[cut]) {
        Ok(Region::Full { polytope, kept }) => {
            let boundary = kept
                .iter()
                .enumerate()
                .filter(|(_, &k)| k < hull.num_facets())
                .map(|(j, _)| polytope.integrate_facet(j, &f))
                .fold(Rational::zero(), |x, y| x + y);
            PlTerms {
                boundary,
                interior: polytope.integrate(&(&s * &f)),
            }
        }
        _ => PlTerms {
            boundary: Rational::zero(),
            interior: Rational::zero(),
        },
    }
}

/// Data shared by every direction.
struct Context<'a> {
    p: &'a Polytope,
    ext: &'a ExtremalData,
    centroid: Vec<Rational>,
    /// `∫_{∂P} x_i dσ`.
    boundary_moments: Vec<Rational>,
    nodes: usize,
    tolerance: Rational,
}

impl Context<'_> {
    /// `∫_{∂P} (<a, x> + c) dσ`.
    fn affine_boundary(&self, a: &[Rational], c: &Rational) -> Rational {
        linalg::dot(a, &self.boundary_moments) + c * &self.ext.boundary_mass
    }
}

#[derive(Default)]
struct DirectionOutcome {
    min_l: Option<Candidate>,
    /// First exact or isolated zero of `L` when `L >= 0` on the whole line.
    touch: Option<Candidate>,
    min_ratio: Option<Candidate>,
    /// Ratio infima that are limits at the ends of the offset range.
    ratio_limits: Vec<Rational>,
    candidates: usize,
    segments: usize,
    skipped: usize,
    summary: Option<DirectionSummary>,
}

impl Candidate {
    /// Normalize `max{0, <a, x> + c}` so that it vanishes at the centroid: for
    /// `c > c_p` the representative `max{0, -<a, x> - c}` (same `L`) is used.
    fn of(ctx: &Context, dir: &[i64], a: &[Rational], c: &Rational, l: Rational, q_plus: Rational) -> Self {
        let c_p = -linalg::dot(a, &ctx.centroid);
        let (a, c, q) = if *c <= c_p {
            (a.to_vec(), c.clone(), q_plus)
        } else {
            let q = &q_plus - ctx.affine_boundary(a, c);
            (a.iter().map(|x| -x).collect(), -c, q)
        };
        let ratio = &l / &q;
        Candidate {
            direction: dir.to_vec(),
            a,
            c,
            l,
            boundary: q,
            ratio,
        }
    }
}

fn keep_min(slot: &mut Option<Candidate>, cand: Candidate, key: impl Fn(&Candidate) -> &Rational) {
    match slot {
        Some(best) if key(best).cmp(key(&cand)) != Ordering::Greater => {}
        _ => *slot = Some(cand),
    }
}

fn rational_nodes(lo: &Rational, hi: &Rational, count: usize) -> Vec<Rational> {
    let denom = Rational::from_integer((count + 1).into());
    (1..=count)
        .map(|k| lo + (hi - lo) * Rational::from_integer(k.into()) / &denom)
        .collect()
}

/// Strip common factors `(x - e)` so that `q(e) != 0`; `None` if `p/q` blows up.
fn limit_at(p: &UniPoly, q: &UniPoly, e: &Rational) -> Option<Rational> {
    let (mut p, mut q) = (p.clone(), q.clone());
    let factor = UniPoly::linear_root(e);
    while q.eval(e).is_zero() {
        if q.is_zero() || !p.eval(e).is_zero() {
            return None;
        }
        q = q.div_rem(&factor).0;
        p = if p.is_zero() { p } else { p.div_rem(&factor).0 };
    }
    Some(p.eval(e) / q.eval(e))
}

fn search_direction(ctx: &Context, dir: &[i64]) -> Result<DirectionOutcome> {
    let a: Vec<Rational> = dir.iter().map(|&x| rational::int(x)).collect();
    let mut out = DirectionOutcome::default();
    let breaks = offset_breakpoints(ctx.p, &a);
    out.skipped = ctx.p.vertices().len() - breaks.len();
    let c_p = -linalg::dot(&a, &ctx.centroid);
    let tol = &ctx.tolerance;
    let mut raw_best: Option<(Rational, Rational)> = None;
    let note_l = |raw: &mut Option<(Rational, Rational)>, c: &Rational, l: &Rational| {
        if raw.as_ref().is_none_or(|(_, best)| l < best) {
            *raw = Some((c.clone(), l.clone()));
        }
    };
    for (j, w) in breaks.windows(2).enumerate() {
        let (lo, hi) = (&w[0], &w[1]);
        out.segments += 1;
        let nodes = rational_nodes(lo, hi, ctx.nodes + 1);
        let terms: Vec<PlTerms> = nodes.iter().map(|c| simple_terms(ctx.p, ctx.ext, &a, c)).collect();
        let fit = ctx.nodes;
        let l_vals: Vec<Rational> = terms.iter().map(PlTerms::l_value).collect();
        let q_vals: Vec<Rational> = terms.iter().map(|t| t.boundary.clone()).collect();
        let l_poly = UniPoly::interpolate(&nodes[..fit], &l_vals[..fit]);
        let q_poly = UniPoly::interpolate(&nodes[..fit], &q_vals[..fit]);
        if l_poly.eval(&nodes[fit]) != l_vals[fit] || q_poly.eval(&nodes[fit]) != q_vals[fit] {
            return Err(Error::Internal(format!(
                "interpolant of direction {dir:?} failed verification on [{lo}, {hi}]"
            )));
        }
        let cand = |c: &Rational| {
            let l = l_poly.eval(c);
            let q = q_poly.eval(c);
            Candidate::of(ctx, dir, &a, c, l, q)
        };

        // sign of L on the open segment and at the right breakpoint when interior
        let mut l_points: Vec<Rational> = Vec::new();
        if l_poly.is_zero() {
            let mid = (lo + hi) / rational::int(2);
            if out.touch.is_none() {
                out.touch = Some(cand(&mid));
            }
            l_points.push(mid);
        } else {
            let sa = sign_analysis(&l_poly, lo, hi, tol);
            for (x, _) in &sa.gaps {
                l_points.push(x.clone());
            }
            for r in &sa.roots {
                let x = r.midpoint();
                if out.touch.is_none() {
                    out.touch = Some(cand(&x));
                }
                l_points.push(x);
            }
            for r in isolate_roots(&l_poly.derivative(), lo, hi, tol) {
                l_points.push(r.midpoint());
            }
        }
        if j + 2 < breaks.len() {
            let l = l_poly.eval(hi);
            if l.is_zero() && out.touch.is_none() {
                out.touch = Some(cand(hi));
            }
            l_points.push(hi.clone());
        }
        for c in &l_points {
            let cd = cand(c);
            out.candidates += 1;
            note_l(&mut raw_best, c, &cd.l);
            keep_min(&mut out.min_l, cd, |x| &x.l);
        }

        // normalized ratio on the parts of the segment on each side of c_p
        let q_minus = {
            let aff = UniPoly::new(vec![
                ctx.affine_boundary(&a, &Rational::zero()),
                ctx.ext.boundary_mass.clone(),
            ]);
            q_poly.sub(&aff)
        };
        let mut pieces = Vec::new();
        if lo < &c_p {
            pieces.push((lo.clone(), hi.clone().min(c_p.clone()), &q_poly));
        }
        if hi > &c_p {
            pieces.push((lo.clone().max(c_p.clone()), hi.clone(), &q_minus));
        }
        for (plo, phi, q) in pieces {
            let mut ratio_points = Vec::new();
            for e in [&plo, &phi] {
                if q.eval(e).is_zero() {
                    if let Some(lim) = limit_at(&l_poly, q, e) {
                        out.ratio_limits.push(lim);
                    }
                } else {
                    ratio_points.push(e.clone());
                }
            }
            let numer = l_poly.derivative().mul(q).sub(&l_poly.mul(&q.derivative()));
            if !numer.is_zero() {
                for r in isolate_roots(&numer, &plo, &phi, tol) {
                    ratio_points.push(r.midpoint());
                }
            }
            for c in &ratio_points {
                out.candidates += 1;
                keep_min(&mut out.min_ratio, cand(c), |x| &x.ratio);
            }
        }
    }
    if let (Some((c, l)), Some(min_ratio)) = (raw_best, out.min_ratio.as_ref()) {
        let best_ratio = out
            .ratio_limits
            .iter()
            .fold(min_ratio.ratio.clone(), |m, x| m.min(x.clone()));
        out.summary = Some(DirectionSummary {
            direction: dir.to_vec(),
            best_offset: c,
            best_l: l,
            best_ratio,
        });
    }
    Ok(out)
}

/// Sweep all directions of height at most `cfg.height` and every offset.
pub fn search_destabilizer(p: &Polytope, ext: &ExtremalData, cfg: &SearchConfig) -> Result<StabilityReport> {
    let n = p.dim();
    let directions = enumerate_directions(n, cfg.height)?;
    let nodes = match cfg.nodes {
        None => n + 3,
        Some(k) if k >= n + 3 => k,
        Some(k) => {
            return Err(Error::BadParameter(format!(
                "at least {} interpolation nodes are needed in dimension {n}, got {k}",
                n + 3
            )))
        }
    };
    if !cfg.tolerance.is_positive() {
        return Err(Error::BadParameter("tolerance must be positive".into()));
    }
    let centroid: Vec<Rational> = (0..n).map(|i| p.integrate(&Polynomial::var(n, i)) / &ext.vol).collect();
    let boundary_moments = (0..n).map(|i| p.integrate_boundary(&Polynomial::var(n, i))).collect();
    let ctx = Context {
        p,
        ext,
        centroid,
        boundary_moments,
        nodes,
        tolerance: cfg.tolerance.clone(),
    };
    let sweep =
        || -> Result<Vec<DirectionOutcome>> { directions.par_iter().map(|d| search_direction(&ctx, d)).collect() };
    let outcomes = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(sweep)?,
        None => sweep()?,
    };

    // ordered merge: earlier directions win ties
    let mut min_l: Option<Candidate> = None;
    let mut touch: Option<Candidate> = None;
    let mut min_ratio: Option<Candidate> = None;
    let mut lambda_limit: Option<Rational> = None;
    let mut report = StabilityReport {
        verdict: Verdict::NoDestabilizerAtResolution,
        witness: None,
        futaki_of_witness: None,
        lambda_hat: Rational::zero(),
        lambda_candidate: None,
        candidates_evaluated: 0,
        directions: directions.len(),
        segments: 0,
        segments_skipped: 0,
        note: (n != 2).then(|| {
            "simple PL functions only; completeness of this reduction is known for toric surfaces, \
             so the verdict is a statement at the sampled resolution"
                .to_string()
        }),
        per_direction: Vec::with_capacity(directions.len()),
    };
    for o in outcomes {
        report.candidates_evaluated += o.candidates;
        report.segments += o.segments;
        report.segments_skipped += o.skipped;
        if let Some(c) = o.min_l {
            keep_min(&mut min_l, c, |x| &x.l);
        }
        if touch.is_none() {
            touch = o.touch;
        }
        if let Some(c) = o.min_ratio {
            keep_min(&mut min_ratio, c, |x| &x.ratio);
        }
        for lim in o.ratio_limits {
            if lambda_limit.as_ref().is_none_or(|m| &lim < m) {
                lambda_limit = Some(lim);
            }
        }
        report.per_direction.extend(o.summary);
    }
    let min_ratio = min_ratio.ok_or_else(|| Error::Internal("no ratio candidates".into()))?;
    match lambda_limit {
        Some(lim) if lim < min_ratio.ratio => report.lambda_hat = lim,
        _ => {
            report.lambda_hat = min_ratio.ratio.clone();
            report.lambda_candidate = Some(min_ratio);
        }
    }
    let min_l = min_l.ok_or_else(|| Error::Internal("no L candidates".into()))?;
    if min_l.l.is_negative() {
        report.verdict = Verdict::Unstable;
        report.witness = Some(min_l);
    } else if let Some(t) = touch {
        report.verdict = Verdict::EqualityNonaffine;
        report.witness = Some(t);
    }
    report.futaki_of_witness = report.witness.as_ref().map(|w| futaki_from_l(&w.l, &ext.vol));
    Ok(report)
}

/// `n + 3` evenly spaced nodes strictly inside each segment suffice; exposed
/// for callers that want to report the effective setting.
pub fn default_nodes(n: usize) -> usize {
    n + 3
}
