//! Rational convex polytopes in half-space form.
//!
//! [`ConvexPolytope`] is the general object (arbitrary rational normals, used
//! for the cells of a PL subdivision); [`Polytope`] is a validated lattice
//! polytope with primitive integer normals.
//!
//! Every integral here is exact. The boundary measure on a facet with normal
//! `l` is Euclidean measure divided by `|l|`, evaluated by projecting the
//! facet along the coordinate where `|l_k|` is largest.

use crate::error::{Error, Result};
use crate::linalg;
use crate::polynomial::Polynomial;
use crate::rational::{self, Rational};
use num::integer::Integer;
use num::{BigInt, One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Closed half-space `<normal, x> <= offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

impl HalfSpace {
    pub fn new(normal: Vec<Rational>, offset: Rational) -> Self {
        Self { normal, offset }
    }

    /// `offset - <normal, x>`; nonnegative inside.
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.offset - linalg::dot(&self.normal, x)
    }

    /// Coordinate used to project the hyperplane: largest `|normal_k|`, lowest index on ties.
    pub fn projection_axis(&self) -> usize {
        let mut best = 0;
        for k in 1..self.normal.len() {
            if self.normal[k].abs() > self.normal[best].abs() {
                best = k;
            }
        }
        best
    }
}

/// Outcome of intersecting a list of half-spaces.
#[derive(Debug, Clone)]
pub enum Region {
    /// Full-dimensional and bounded. `kept[j]` is the input index of facet `j`.
    Full {
        polytope: ConvexPolytope,
        kept: Vec<usize>,
    },
    Empty,
    LowerDimensional,
    Unbounded,
}

/// Bounded full-dimensional polytope with irredundant facets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexPolytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    vertices: Vec<Vec<Rational>>,
    /// Sorted vertex indices on each facet.
    incidence: Vec<Vec<usize>>,
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

impl ConvexPolytope {
    /// Intersect half-spaces, dropping redundant ones. Zero-normal constraints
    /// are either vacuous (dropped) or make the region empty.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Region> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut active = Vec::new();
        for (i, h) in halfspaces.iter().enumerate() {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.normal.len(),
                });
            }
            if h.normal.iter().all(Zero::is_zero) {
                if h.offset.is_negative() {
                    return Ok(Region::Empty);
                }
                continue;
            }
            active.push(i);
        }
        let normals: Vec<Vec<Rational>> = active.iter().map(|&i| halfspaces[i].normal.clone()).collect();
        if linalg::rank(&normals) < dim {
            return Ok(Region::Unbounded);
        }

        // recession cone {y : <l_i, y> <= 0} is trivial iff no extreme ray exists
        let mut unbounded = false;
        for_each_combination(normals.len(), dim - 1, &mut |subset| {
            if unbounded {
                return;
            }
            let rows: Vec<Vec<Rational>> = subset.iter().map(|&j| normals[j].clone()).collect();
            if let Some(y) = linalg::kernel_line(&rows, dim) {
                let neg: Vec<Rational> = y.iter().map(|v| -v).collect();
                for dir in [&y, &neg] {
                    if normals.iter().all(|l| !linalg::dot(l, dir).is_positive()) {
                        unbounded = true;
                    }
                }
            }
        });
        if unbounded {
            return Ok(Region::Unbounded);
        }

        let mut found: BTreeSet<Vec<Rational>> = BTreeSet::new();
        for_each_combination(active.len(), dim, &mut |subset| {
            let a: Vec<Vec<Rational>> = subset.iter().map(|&j| normals[j].clone()).collect();
            let b: Vec<Rational> = subset.iter().map(|&j| halfspaces[active[j]].offset.clone()).collect();
            if let Some(x) = linalg::solve(&a, &b) {
                if active.iter().all(|&i| !halfspaces[i].slack(&x).is_negative()) {
                    found.insert(x);
                }
            }
        });
        if found.is_empty() {
            return Ok(Region::Empty);
        }
        let vertices: Vec<Vec<Rational>> = found.into_iter().collect();
        let refs: Vec<&[Rational]> = vertices.iter().map(Vec::as_slice).collect();
        if linalg::affine_dimension(&refs) < dim as isize {
            return Ok(Region::LowerDimensional);
        }

        let mut kept = Vec::new();
        let mut kept_hs = Vec::new();
        let mut incidence: Vec<Vec<usize>> = Vec::new();
        for &i in &active {
            let tight: Vec<usize> = (0..vertices.len())
                .filter(|&v| halfspaces[i].slack(&vertices[v]).is_zero())
                .collect();
            if tight.len() < dim || incidence.contains(&tight) {
                continue;
            }
            let pts: Vec<&[Rational]> = tight.iter().map(|&v| vertices[v].as_slice()).collect();
            if linalg::affine_dimension(&pts) == dim as isize - 1 {
                kept.push(i);
                kept_hs.push(halfspaces[i].clone());
                incidence.push(tight);
            }
        }
        Ok(Region::Full {
            polytope: ConvexPolytope {
                dim,
                halfspaces: kept_hs,
                vertices,
                incidence,
            },
            kept,
        })
    }

    /// This polytope cut by further half-spaces. Kept indices below
    /// `self.num_facets()` refer to this polytope's facets.
    pub fn intersect(&self, extra: &[HalfSpace]) -> Result<Region> {
        let mut all = self.halfspaces.clone();
        all.extend_from_slice(extra);
        Self::from_halfspaces(self.dim, all)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn num_facets(&self) -> usize {
        self.halfspaces.len()
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn facet_vertex_indices(&self, facet: usize) -> &[usize] {
        &self.incidence[facet]
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.halfspaces.iter().all(|h| !h.slack(x).is_negative())
    }

    /// Fan triangulation of the face spanned by `face` (sorted vertex indices,
    /// affine dimension `dim`): cone from its smallest vertex over the
    /// triangulated facets of the face that miss it.
    pub fn triangulate_face(&self, face: &[usize], dim: usize) -> Vec<Vec<usize>> {
        if dim == 0 {
            return vec![vec![face[0]]];
        }
        let apex = face[0];
        let mut subfaces: BTreeSet<Vec<usize>> = BTreeSet::new();
        for inc in &self.incidence {
            let sub: Vec<usize> = face.iter().copied().filter(|v| inc.binary_search(v).is_ok()).collect();
            if sub.len() < dim || sub.first() == Some(&apex) || sub.len() == face.len() {
                continue;
            }
            let pts: Vec<&[Rational]> = sub.iter().map(|&v| self.vertices[v].as_slice()).collect();
            if linalg::affine_dimension(&pts) == dim as isize - 1 {
                subfaces.insert(sub);
            }
        }
        let mut out = Vec::new();
        for sub in subfaces {
            for mut s in self.triangulate_face(&sub, dim - 1) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    /// Full-dimensional fan triangulation as vertex-index tuples.
    pub fn triangulation(&self) -> Vec<Vec<usize>> {
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        self.triangulate_face(&all, self.dim)
    }

    /// Exact `∫_P p dx`.
    pub fn integrate(&self, p: &Polynomial) -> Rational {
        self.triangulation()
            .iter()
            .map(|s| {
                let pts: Vec<&[Rational]> = s.iter().map(|&v| self.vertices[v].as_slice()).collect();
                let edges = edge_matrix(&pts);
                let jac = linalg::abs_det(&edges);
                integrate_simplex(&pts, &edges, p, &jac)
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn volume(&self) -> Rational {
        self.integrate(&Polynomial::one(self.dim))
    }

    /// Exact integral of `p` over facet `facet` against Euclidean measure
    /// divided by the length of that facet's normal.
    pub fn integrate_facet(&self, facet: usize, p: &Polynomial) -> Rational {
        let h = &self.halfspaces[facet];
        let k = h.projection_axis();
        let scale = h.normal[k].abs();
        self.triangulate_face(&self.incidence[facet], self.dim - 1)
            .iter()
            .map(|s| {
                let pts: Vec<&[Rational]> = s.iter().map(|&v| self.vertices[v].as_slice()).collect();
                let edges = edge_matrix(&pts);
                let projected: Vec<Vec<Rational>> = edges
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, r)| r.clone())
                    .collect();
                let jac = linalg::abs_det(&projected) / &scale;
                integrate_simplex(&pts, &edges, p, &jac)
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Sum of [`integrate_facet`](Self::integrate_facet) over all facets.
    pub fn integrate_boundary(&self, p: &Polynomial) -> Rational {
        (0..self.num_facets())
            .map(|j| self.integrate_facet(j, p))
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Columns are `p_i - p_0`; one row per ambient coordinate.
fn edge_matrix(pts: &[&[Rational]]) -> Vec<Vec<Rational>> {
    let n = pts[0].len();
    (0..n)
        .map(|r| pts[1..].iter().map(|p| &p[r] - &pts[0][r]).collect())
        .collect()
}

/// `∫` over the simplex `pts` of `p`, given the affine parametrization's
/// edge matrix and the measure's Jacobian.
fn integrate_simplex(pts: &[&[Rational]], edges: &[Vec<Rational>], p: &Polynomial, jac: &Rational) -> Rational {
    let k = pts.len() - 1;
    let pulled = p.compose_affine(pts[0], edges);
    let sum = pulled
        .terms()
        .fold(Rational::zero(), |acc, (e, c)| acc + c * standard_simplex_moment(e, k));
    sum * jac
}

/// `∫` over the standard `k`-simplex of `t^beta`: `prod(beta_i!) / (k + |beta|)!`.
pub fn standard_simplex_moment(beta: &[u32], k: usize) -> Rational {
    let num = beta
        .iter()
        .fold(BigInt::one(), |acc, &b| acc * rational::factorial(b as usize));
    let total: usize = k + beta.iter().map(|&b| b as usize).sum::<usize>();
    Rational::new(num, rational::factorial(total))
}

/// Full-dimensional simplex with rational vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    vertices: Vec<Vec<Rational>>,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<Rational>>) -> Result<Self> {
        let n = vertices.len().checked_sub(1).ok_or(Error::ZeroDimension)?;
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let pts: Vec<&[Rational]> = vertices.iter().map(Vec::as_slice).collect();
        if linalg::determinant(&edge_matrix(&pts)).is_zero() {
            return Err(Error::LowerDimensional);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn volume(&self) -> Rational {
        self.integrate(&Polynomial::one(self.vertices.len() - 1))
    }

    pub fn integrate(&self, p: &Polynomial) -> Rational {
        let pts: Vec<&[Rational]> = self.vertices.iter().map(Vec::as_slice).collect();
        let edges = edge_matrix(&pts);
        let jac = linalg::abs_det(&edges);
        integrate_simplex(&pts, &edges, p, &jac)
    }
}

/// Lattice polytope `{x : <l_i, x> <= λ_i}` with primitive integer normals and
/// no redundant inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytope {
    normals: Vec<Vec<BigInt>>,
    offsets: Vec<Rational>,
    hull: ConvexPolytope,
}

/// Per-vertex failure of the Delzant condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelzantViolation {
    pub vertex: Vec<Rational>,
    pub facets: Vec<usize>,
    /// Determinant of the facet normals when exactly `n` facets meet.
    pub determinant: Option<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelzantReport {
    pub is_delzant: bool,
    pub offending: Vec<DelzantViolation>,
}

fn primitivize(normal: &mut [BigInt], offset: &mut Rational) {
    let g = normal.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g > BigInt::one() {
        for x in normal.iter_mut() {
            *x /= &g;
        }
        *offset /= Rational::from_integer(g);
    }
}

impl Polytope {
    /// Validate and build. Non-primitive normals are divided (with their
    /// offset) by the gcd of their components.
    pub fn new(dim: usize, normals: Vec<Vec<BigInt>>, offsets: Vec<Rational>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if normals.len() != offsets.len() {
            return Err(Error::CountMismatch {
                expected: normals.len(),
                got: offsets.len(),
            });
        }
        let mut normals = normals;
        let mut offsets = offsets;
        for (i, (l, c)) in normals.iter_mut().zip(offsets.iter_mut()).enumerate() {
            if l.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: l.len(),
                });
            }
            if l.iter().all(Zero::is_zero) {
                return Err(Error::ZeroNormal(i));
            }
            primitivize(l, c);
        }
        let mut seen: BTreeMap<(&[BigInt], &Rational), usize> = BTreeMap::new();
        for (i, key) in normals.iter().map(Vec::as_slice).zip(offsets.iter()).enumerate() {
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicateFacet { first, second: i });
            }
            seen.insert(key, i);
        }
        let hs = normals
            .iter()
            .zip(&offsets)
            .map(|(l, c)| HalfSpace::new(l.iter().cloned().map(Rational::from_integer).collect(), c.clone()))
            .collect();
        match ConvexPolytope::from_halfspaces(dim, hs)? {
            Region::Full { polytope, kept } => {
                if let Some(missing) = (0..normals.len()).find(|i| !kept.contains(i)) {
                    return Err(Error::Redundant(missing));
                }
                Ok(Self {
                    normals,
                    offsets,
                    hull: polytope,
                })
            }
            Region::Empty => Err(Error::Empty),
            Region::LowerDimensional => Err(Error::LowerDimensional),
            Region::Unbounded => Err(Error::Unbounded),
        }
    }

    pub fn from_i64(dim: usize, normals: &[Vec<i64>], offsets: Vec<Rational>) -> Result<Self> {
        let normals = normals
            .iter()
            .map(|l| l.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Self::new(dim, normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.hull.dim
    }

    pub fn normals(&self) -> &[Vec<BigInt>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[Rational] {
        &self.offsets
    }

    pub fn num_facets(&self) -> usize {
        self.normals.len()
    }

    pub fn hull(&self) -> &ConvexPolytope {
        &self.hull
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.hull.vertices
    }

    /// Indices of the facets through each vertex.
    pub fn vertex_facets(&self, vertex: usize) -> Vec<usize> {
        (0..self.num_facets())
            .filter(|&j| self.hull.incidence[j].binary_search(&vertex).is_ok())
            .collect()
    }

    pub fn check_delzant(&self) -> DelzantReport {
        let n = self.dim();
        let mut offending = Vec::new();
        for (v, x) in self.vertices().iter().enumerate() {
            let facets = self.vertex_facets(v);
            let determinant = (facets.len() == n).then(|| {
                let m: Vec<Vec<Rational>> = facets
                    .iter()
                    .map(|&j| self.normals[j].iter().cloned().map(Rational::from_integer).collect())
                    .collect();
                linalg::determinant(&m).to_integer()
            });
            let ok = matches!(&determinant, Some(d) if d.abs().is_one());
            if !ok {
                offending.push(DelzantViolation {
                    vertex: x.clone(),
                    facets,
                    determinant,
                });
            }
        }
        DelzantReport {
            is_delzant: offending.is_empty(),
            offending,
        }
    }

    pub fn triangulate(&self) -> Vec<Simplex> {
        self.hull
            .triangulation()
            .into_iter()
            .map(|s| Simplex {
                vertices: s.iter().map(|&v| self.hull.vertices[v].clone()).collect(),
            })
            .collect()
    }

    /// Exact `∫_P p dx`.
    pub fn integrate(&self, p: &Polynomial) -> Rational {
        self.hull.integrate(p)
    }

    /// Exact `∫_{∂P} p dσ` with the lattice boundary measure.
    pub fn integrate_boundary(&self, p: &Polynomial) -> Rational {
        self.hull.integrate_boundary(p)
    }

    pub fn volume(&self) -> Rational {
        self.hull.volume()
    }

    pub fn boundary_mass(&self) -> Rational {
        self.integrate_boundary(&Polynomial::one(self.dim()))
    }

    /// Image under `x -> U x` for an integer matrix with determinant ±1.
    pub fn transform_unimodular(&self, u: &[Vec<i64>]) -> Result<Self> {
        let n = self.dim();
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        let m: Vec<Vec<Rational>> = u
            .iter()
            .map(|r| r.iter().map(|&x| rational::int(x)).collect())
            .collect();
        if !linalg::determinant(&m).abs().is_one() {
            return Err(Error::BadParameter("matrix is not unimodular".into()));
        }
        // new normal is U^{-T} l, i.e. the solution y of U^T y = l
        let ut: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| m[j][i].clone()).collect()).collect();
        let normals = self
            .normals
            .iter()
            .map(|l| {
                let rhs: Vec<Rational> = l.iter().cloned().map(Rational::from_integer).collect();
                let y = linalg::solve(&ut, &rhs).ok_or(Error::Singular)?;
                Ok(y.into_iter().map(|q| q.to_integer()).collect())
            })
            .collect::<Result<Vec<Vec<BigInt>>>>()?;
        Self::new(n, normals, self.offsets.clone())
    }

    /// `P + t`.
    pub fn translate(&self, t: &[Rational]) -> Result<Self> {
        let offsets = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(l, c)| {
                let lq: Vec<Rational> = l.iter().cloned().map(Rational::from_integer).collect();
                c + linalg::dot(&lq, t)
            })
            .collect();
        Self::new(self.dim(), self.normals.clone(), offsets)
    }

    /// `ρ P` for `ρ > 0`.
    pub fn scale(&self, rho: &Rational) -> Result<Self> {
        if !rho.is_positive() {
            return Err(Error::BadParameter("scale factor must be positive".into()));
        }
        let offsets = self.offsets.iter().map(|c| c * rho).collect();
        Self::new(self.dim(), self.normals.clone(), offsets)
    }

    pub fn normal_as_rational(&self, facet: usize) -> Vec<Rational> {
        self.normals[facet]
            .iter()
            .cloned()
            .map(Rational::from_integer)
            .collect()
    }
}
