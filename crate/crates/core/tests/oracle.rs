//! Exact L(f) on PL functions against an independent slicing quadrature.

mod common;

use common::*;
use kstab::extremal::solve_extremal_affine;
use kstab::library;
use kstab::plfunc::{l_of_pl, pl_terms};
use kstab::rational::to_f64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(p: &kstab::Polytope, f: &kstab::PLFunc) {
    let ext = solve_extremal_affine(p).unwrap();
    let terms = pl_terms(p, &ext, f).unwrap();
    let fp = FloatPolytope::new(p);
    let pieces: Vec<Piece> = f.pieces().iter().map(Piece::of).collect();
    let (b, i) = oracle_terms(&fp, &Piece::of(&ext.s), &pieces);
    assert!(
        rel_close(to_f64(&terms.boundary), b, 1e-9),
        "boundary {} vs {b}",
        to_f64(&terms.boundary)
    );
    assert!(
        rel_close(to_f64(&terms.interior), i, 1e-9),
        "interior {} vs {i}",
        to_f64(&terms.interior)
    );
    let l = to_f64(&terms.l_value());
    assert!((l - (b - i)).abs() <= 1e-8 * (b.abs() + i.abs()).max(1.0));
}

#[test]
fn random_pl_functions_in_one_and_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..120 {
        let n = 1 + trial % 2;
        let p = random_polytope(&mut rng, n, 3);
        let f = random_pl(&mut rng, n, 1 + trial % 4);
        check(&p, &f);
    }
}

#[test]
fn simple_pl_functions_on_the_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in ["interval", "square", "simplex", "trapezoid(2)", "trapezoid(3)"] {
        let p = library::example(name).unwrap();
        for _ in 0..15 {
            let v = random_simple_pl(&mut rng, &p);
            check(&p, &v.to_pl());
        }
    }
}

#[test]
fn extremal_function_matches_floating_moment_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut polys: Vec<kstab::Polytope> = ["interval", "square", "simplex", "trapezoid(2)", "trapezoid(3)"]
        .iter()
        .map(|n| library::example(n).unwrap())
        .collect();
    polys.extend((0..20).map(|k| random_polytope(&mut rng, 1 + k % 2, 3)));
    for p in &polys {
        let ext = solve_extremal_affine(p).unwrap();
        let x = oracle_extremal(&FloatPolytope::new(p));
        assert!(rel_close(to_f64(&ext.s.constant), x[0], 1e-10));
        for (g, y) in ext.s.gradient.iter().zip(&x[1..]) {
            assert!(rel_close(to_f64(g), *y, 1e-10));
        }
    }
}

#[test]
fn unstable_quadrilateral_has_negative_l_under_the_oracle() {
    let p = unstable_quadrilateral();
    let ext = solve_extremal_affine(&p).unwrap();
    let f = kstab::SimplePL::new(
        vec![kstab::rational::int(2), kstab::rational::int(-1)],
        kstab::rational::frac(22737, 10000),
    )
    .unwrap()
    .to_pl();
    let l = to_f64(&l_of_pl(&p, &ext, &f).unwrap());
    let pieces: Vec<Piece> = f.pieces().iter().map(Piece::of).collect();
    let (b, i) = oracle_terms(&FloatPolytope::new(&p), &Piece::of(&ext.s), &pieces);
    assert!(l < 0.0, "L = {l}");
    assert!((l - (b - i)).abs() < 1e-9);
}
