//! Convex piecewise-linear functions `f = max_λ f^λ`, their subdivision of
//! `P` into cells where one piece is active, and the exact value of `L(f)`.

use crate::error::{Error, Result};
use crate::extremal::{AffineFunc, ExtremalData};
use crate::linalg;
use crate::polytope::{ConvexPolytope, HalfSpace, Polytope, Region};
use crate::rational::Rational;
use num::{Signed, Zero};

/// `x -> max over pieces`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLFunc {
    pieces: Vec<AffineFunc>,
}

impl PLFunc {
    pub fn new(pieces: Vec<AffineFunc>) -> Result<Self> {
        let first = pieces.first().ok_or(Error::EmptyPl)?;
        let n = first.dim();
        if let Some(p) = pieces.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.dim(),
            });
        }
        Ok(Self { pieces })
    }

    pub fn affine(f: AffineFunc) -> Self {
        Self { pieces: vec![f] }
    }

    pub fn pieces(&self) -> &[AffineFunc] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.pieces.iter().map(|p| p.eval(x)).max().expect("nonempty pieces")
    }

    /// `f + g` for affine `g` (every piece shifted).
    pub fn add_affine(&self, g: &AffineFunc) -> PLFunc {
        PLFunc {
            pieces: self.pieces.iter().map(|p| p.add(g)).collect(),
        }
    }

    /// Drop duplicate pieces and pieces not attained on an open subset of `P`.
    pub fn prune(&self, p: &Polytope) -> Result<PLFunc> {
        Ok(prune_with_cells(p, self)?.0)
    }
}

/// `max{0, <a, x> + c}`; its crease is the hyperplane `<a, x> + c = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplePL {
    a: Vec<Rational>,
    c: Rational,
}

impl SimplePL {
    pub fn new(a: Vec<Rational>, c: Rational) -> Result<Self> {
        if a.iter().all(Zero::is_zero) {
            return Err(Error::ZeroSlope);
        }
        Ok(Self { a, c })
    }

    pub fn slope(&self) -> &[Rational] {
        &self.a
    }

    pub fn offset(&self) -> &Rational {
        &self.c
    }

    /// Value of the affine part `<a, x> + c`.
    pub fn linear_part(&self, x: &[Rational]) -> Rational {
        linalg::dot(&self.a, x) + &self.c
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.linear_part(x).max(Rational::zero())
    }

    pub fn to_pl(&self) -> PLFunc {
        PLFunc {
            pieces: vec![
                AffineFunc::constant_fn(self.a.len(), Rational::zero()),
                AffineFunc::new(self.a.clone(), self.c.clone()),
            ],
        }
    }
}

pub fn eval_pl(f: &PLFunc, x: &[Rational]) -> Rational {
    f.eval(x)
}

/// True iff the crease of `v` passes through the interior of `P`.
pub fn crease_meets_interior(p: &Polytope, v: &SimplePL) -> bool {
    let values: Vec<Rational> = p.vertices().iter().map(|x| v.linear_part(x)).collect();
    values.iter().any(Signed::is_negative) && values.iter().any(Signed::is_positive)
}

/// Origin of a cell facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    /// Lies in facet `i` of `P`.
    Boundary(usize),
    /// Lies where the active piece ties with piece `μ`.
    Crease(usize),
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// Index of the active piece in the pruned function.
    pub piece: usize,
    pub region: ConvexPolytope,
    pub facets: Vec<FacetKind>,
}

/// Common facet of two cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crease {
    /// Piece (= cell) indices, first < second.
    pub pieces: (usize, usize),
    /// Facet index inside the first cell's region.
    pub facet: usize,
}

#[derive(Debug, Clone)]
pub struct Subdivision {
    /// The pruned function; cell `i` is where its piece `i` is active.
    pub function: PLFunc,
    pub cells: Vec<Cell>,
    pub creases: Vec<Crease>,
}

impl Subdivision {
    pub fn crease_vertices(&self, crease: &Crease) -> Vec<Vec<Rational>> {
        let region = &self.cells[crease.pieces.0].region;
        region
            .facet_vertex_indices(crease.facet)
            .iter()
            .map(|&v| region.vertices()[v].clone())
            .collect()
    }

    /// `a^λ - a^μ` for the two pieces meeting at a crease.
    pub fn crease_jump(&self, crease: &Crease) -> Vec<Rational> {
        let pieces = self.function.pieces();
        let (l, m) = crease.pieces;
        pieces[l]
            .gradient
            .iter()
            .zip(&pieces[m].gradient)
            .map(|(a, b)| a - b)
            .collect()
    }
}

fn cell_of(p: &Polytope, pieces: &[AffineFunc], lambda: usize) -> Result<Option<Cell>> {
    let me = &pieces[lambda];
    let mut extra = Vec::new();
    let mut owner = Vec::new();
    for (mu, other) in pieces.iter().enumerate() {
        if mu == lambda {
            continue;
        }
        // f^λ >= f^μ  <=>  <a^μ - a^λ, x> <= c^λ - c^μ
        let normal = other.gradient.iter().zip(&me.gradient).map(|(a, b)| a - b).collect();
        extra.push(HalfSpace::new(normal, &me.constant - &other.constant));
        owner.push(mu);
    }
    let d = p.num_facets();
    match p.hull().intersect(&extra)? {
        Region::Full { polytope, kept } => {
            let facets = kept
                .iter()
                .map(|&k| {
                    if k < d {
                        FacetKind::Boundary(k)
                    } else {
                        FacetKind::Crease(owner[k - d])
                    }
                })
                .collect();
            Ok(Some(Cell {
                piece: lambda,
                region: polytope,
                facets,
            }))
        }
        Region::Empty | Region::LowerDimensional => Ok(None),
        Region::Unbounded => Err(Error::Internal("cell of a bounded polytope is unbounded".into())),
    }
}

fn prune_with_cells(p: &Polytope, f: &PLFunc) -> Result<(PLFunc, Vec<Cell>)> {
    if f.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: f.dim(),
        });
    }
    let mut unique: Vec<AffineFunc> = Vec::new();
    for piece in &f.pieces {
        if !unique.contains(piece) {
            unique.push(piece.clone());
        }
    }
    let mut cells = Vec::new();
    for lambda in 0..unique.len() {
        if let Some(cell) = cell_of(p, &unique, lambda)? {
            cells.push(cell);
        }
    }
    if cells.len() == unique.len() {
        return Ok((PLFunc { pieces: unique }, cells));
    }
    let kept: Vec<AffineFunc> = cells.iter().map(|c| unique[c.piece].clone()).collect();
    let mut recomputed = Vec::with_capacity(kept.len());
    for lambda in 0..kept.len() {
        let cell = cell_of(p, &kept, lambda)?
            .ok_or_else(|| Error::Internal("attained piece lost its cell after pruning".into()))?;
        recomputed.push(cell);
    }
    Ok((PLFunc { pieces: kept }, recomputed))
}

/// Cells `P^λ = P ∩ {f^λ >= f^μ for all μ}` of the pruned function, with the
/// creases between them.
pub fn subdivide(p: &Polytope, f: &PLFunc) -> Result<Subdivision> {
    let (function, cells) = prune_with_cells(p, f)?;
    let mut creases = Vec::new();
    for cell in &cells {
        for (j, kind) in cell.facets.iter().enumerate() {
            if let FacetKind::Crease(mu) = *kind {
                if cell.piece < mu {
                    creases.push(Crease {
                        pieces: (cell.piece, mu),
                        facet: j,
                    });
                }
            }
        }
    }
    Ok(Subdivision {
        function,
        cells,
        creases,
    })
}

/// The two parts of `L(f) = boundary - interior`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlTerms {
    /// `∫_{∂P} f dσ`.
    pub boundary: Rational,
    /// `∫_P s f dx`.
    pub interior: Rational,
}

impl PlTerms {
    pub fn l_value(&self) -> Rational {
        &self.boundary - &self.interior
    }
}

pub fn pl_terms_of(sub: &Subdivision, ext: &ExtremalData) -> PlTerms {
    let s = ext.s.to_polynomial();
    let mut boundary = Rational::zero();
    let mut interior = Rational::zero();
    for cell in &sub.cells {
        let piece = sub.function.pieces()[cell.piece].to_polynomial();
        for (j, kind) in cell.facets.iter().enumerate() {
            if let FacetKind::Boundary(_) = kind {
                boundary += cell.region.integrate_facet(j, &piece);
            }
        }
        interior += cell.region.integrate(&(&s * &piece));
    }
    PlTerms { boundary, interior }
}

pub fn pl_terms(p: &Polytope, ext: &ExtremalData, f: &PLFunc) -> Result<PlTerms> {
    Ok(pl_terms_of(&subdivide(p, f)?, ext))
}

/// Exact `L(f) = Σ_λ [∫_{∂P ∩ P^λ} f^λ dσ - ∫_{P^λ} s f^λ dx]`.
pub fn l_of_pl(p: &Polytope, ext: &ExtremalData, f: &PLFunc) -> Result<Rational> {
    Ok(pl_terms(p, ext, f)?.l_value())
}
