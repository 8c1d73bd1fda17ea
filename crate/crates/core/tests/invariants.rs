//! Structural invariants of L and s under lattice symmetries, translation
//! and scaling, plus conservation laws of the PL subdivision.

mod common;

use common::*;
use kstab::extremal::{l_functional, solve_extremal_affine};
use kstab::plfunc::{l_of_pl, subdivide, FacetKind};
use kstab::polynomial::Polynomial;
use kstab::rational::{frac, int};
use kstab::{AffineFunc, PLFunc, Polytope, Rational};
use num::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNIMODULAR: &[[[i64; 2]; 2]] = &[
    [[0, 1], [1, 0]],
    [[1, 1], [0, 1]],
    [[1, 0], [-2, 1]],
    [[2, 1], [1, 1]],
    [[-1, 0], [0, 1]],
    [[0, -1], [1, 0]],
];

fn mat(u: &[[i64; 2]; 2]) -> Vec<Vec<i64>> {
    u.iter().map(|r| r.to_vec()).collect()
}

fn transpose_inverse(u: &[[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    // (U^{-1})^T = adj(U)^T / det
    [[u[1][1] * det, -u[1][0] * det], [-u[0][1] * det, u[0][0] * det]]
}

fn apply(m: &[[i64; 2]; 2], v: &[Rational]) -> Vec<Rational> {
    (0..2).map(|i| int(m[i][0]) * &v[0] + int(m[i][1]) * &v[1]).collect()
}

fn map_pieces(f: &PLFunc, g: impl Fn(&AffineFunc) -> AffineFunc) -> PLFunc {
    PLFunc::new(f.pieces().iter().map(g).collect()).unwrap()
}

fn l(p: &Polytope, f: &PLFunc) -> Rational {
    l_of_pl(p, &solve_extremal_affine(p).unwrap(), f).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lattice_transport(seed in any::<u64>(), which in 0..UNIMODULAR.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, 2, 2);
        let f = random_pl(&mut rng, 2, 3);
        let u = &UNIMODULAR[which];
        let q = p.transform_unimodular(&mat(u)).unwrap();
        let w = transpose_inverse(u);
        // f ∘ U^{-1}: gradient U^{-T} a
        let g = map_pieces(&f, |a| AffineFunc::new(apply(&w, &a.gradient), a.constant.clone()));
        prop_assert_eq!(l(&p, &f), l(&q, &g));

        let sp = solve_extremal_affine(&p).unwrap().s;
        let sq = solve_extremal_affine(&q).unwrap().s;
        prop_assert_eq!(apply(&w, &sp.gradient), sq.gradient);
        prop_assert_eq!(sp.constant, sq.constant);
    }

    #[test]
    fn translation(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, n, 2);
        let f = random_pl(&mut rng, n, 3);
        let t: Vec<Rational> = (0..n).map(|_| frac(rng.gen_range(-9..=9), rng.gen_range(1..5))).collect();
        let q = p.translate(&t).unwrap();
        let g = map_pieces(&f, |a| {
            AffineFunc::new(a.gradient.clone(), &a.constant - kstab::linalg::dot(&a.gradient, &t))
        });
        prop_assert_eq!(l(&p, &f), l(&q, &g));
    }

    #[test]
    fn scaling(seed in any::<u64>(), n in 1usize..=2, num in 1i64..7, den in 1i64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, n, 2);
        let f = random_pl(&mut rng, n, 3);
        let rho = frac(num, den);
        let q = p.scale(&rho).unwrap();
        let g = map_pieces(&f, |a| {
            AffineFunc::new(a.gradient.iter().map(|x| x / &rho).collect(), a.constant.clone())
        });
        let mut factor = int(1);
        for _ in 1..n {
            factor *= &rho;
        }
        prop_assert_eq!(l(&p, &f) * factor, l(&q, &g));
    }

    #[test]
    fn affine_functions_are_annihilated(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, n, 2);
        let ext = solve_extremal_affine(&p).unwrap();
        let a = random_affine(&mut rng, n);
        prop_assert!(l_of_pl(&p, &ext, &PLFunc::affine(a.clone())).unwrap().is_zero());
        prop_assert!(l_functional(&p, &ext, &a.to_polynomial()).is_zero());
    }

    #[test]
    fn subdivision_conserves_volume_and_boundary(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, n, 2);
        let f = random_pl(&mut rng, n, 4);
        let sub = subdivide(&p, &f).unwrap();
        let one = Polynomial::one(n);
        let vol = sub.cells.iter().map(|c| c.region.volume()).fold(Rational::zero(), |a, b| a + b);
        prop_assert_eq!(vol, p.volume());
        let mut mass = vec![Rational::zero(); p.num_facets()];
        for cell in &sub.cells {
            for (j, kind) in cell.facets.iter().enumerate() {
                if let FacetKind::Boundary(i) = kind {
                    mass[*i] += cell.region.integrate_facet(j, &one);
                }
            }
        }
        for (i, m) in mass.iter().enumerate() {
            prop_assert_eq!(m, &p.hull().integrate_facet(i, &one));
        }
    }
}

#[test]
fn affine_annihilation_on_a_thousand_polytopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..1000 {
        let n = 1 + k % 3;
        let p = random_polytope(&mut rng, n, 2);
        let ext = solve_extremal_affine(&p).unwrap();
        let a = random_affine(&mut rng, n);
        assert!(l_functional(&p, &ext, &a.to_polynomial()).is_zero());
    }
}
