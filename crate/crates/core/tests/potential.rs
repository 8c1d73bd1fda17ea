//! Symplectic potentials: Hessians, K-energy, crease jumps and the Abreu
//! residual against closed forms.

use kstab::extremal::solve_extremal_affine;
use kstab::library;
use kstab::plfunc::PLFunc;
use kstab::polynomial::Polynomial;
use kstab::potential::{
    abreu_residual, canonical_potential, crease_jump_integral, fd_hessian, kenergy, log_det, Potential, QuadConfig,
    ResidualSource, SymplecticPotential,
};
use kstab::rational::{frac, int};
use kstab::{AffineFunc, SimplePL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN2: f64 = std::f64::consts::LN_2;

fn interior_point(rng: &mut impl Rng, p: &kstab::Polytope) -> Vec<f64> {
    let verts = p.vertices();
    let w: Vec<f64> = verts.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    (0..p.dim())
        .map(|k| {
            verts
                .iter()
                .zip(&w)
                .map(|(v, wi)| kstab::rational::to_f64(&v[k]) * wi)
                .sum::<f64>()
                / total
        })
        .collect()
}

fn corrected(p: &kstab::Polytope) -> SymplecticPotential {
    // small positive-definite quadratic plus a cubic
    let n = p.dim();
    let mut g = Polynomial::zero(n);
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        g = &g + &Polynomial::monomial(n, e.clone(), frac(1, 10));
        e[i] = 3;
        g = &g + &Polynomial::monomial(n, e, frac(1, 50));
    }
    canonical_potential(p).with_correction(g).unwrap()
}

#[test]
fn analytic_hessian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in ["interval", "square", "trapezoid(3)", "cube"] {
        let p = library::example(name).unwrap();
        let u = corrected(&p);
        for _ in 0..10 {
            let x = interior_point(&mut rng, &p);
            let h = u.hessian(&x).unwrap();
            let fd = fd_hessian(&u, &x, 1e-4).unwrap();
            for (r, s) in h.iter().zip(&fd) {
                for (a, b) in r.iter().zip(s) {
                    assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{name}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn hessian_is_positive_definite_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for name in library::STANDARD {
        let p = library::example(name).unwrap();
        let u = corrected(&p);
        for _ in 0..25 {
            let x = interior_point(&mut rng, &p);
            assert!(log_det(&u.hessian(&x).unwrap()).is_some(), "{name} at {x:?}");
        }
    }
}

#[test]
fn kenergy_of_canonical_potentials() {
    let cfg = QuadConfig::default();
    for (name, exact) in [("interval", 2.0 * LN2 - 2.0), ("square", 8.0 * LN2 - 8.0)] {
        let p = library::example(name).unwrap();
        let ext = solve_extremal_affine(&p).unwrap();
        let k = kenergy(&p, &ext, &canonical_potential(&p), &cfg).unwrap();
        assert!((k.value - exact).abs() < 1e-6, "{name}: {} vs {exact}", k.value);
        assert!(k.interior.converged && k.boundary.converged);
    }
}

#[test]
fn kenergy_ignores_affine_corrections() {
    let cfg = QuadConfig::default();
    let p = library::example("trapezoid(2)").unwrap();
    let ext = solve_extremal_affine(&p).unwrap();
    let base = kenergy(&p, &ext, &canonical_potential(&p), &cfg).unwrap().value;
    let shifted = canonical_potential(&p)
        .with_correction(Polynomial::affine(&[frac(3, 2), int(-2)], &int(7)))
        .unwrap();
    let moved = kenergy(&p, &ext, &shifted, &cfg).unwrap().value;
    assert!((base - moved).abs() < 1e-6, "{base} vs {moved}");
}

#[test]
fn crease_jump_closed_forms() {
    let cfg = QuadConfig::default();
    let step = |n: usize| SimplePL::new((0..n).map(|i| int((i == 0) as i64)).collect(), int(0)).unwrap();

    // U^{11} = (1 - x²)/2 on each axis, so the crease x = 0 contributes 1/2
    // per unit length (a point in one dimension)
    let interval = library::interval();
    let j = crease_jump_integral(&interval, &canonical_potential(&interval), &step(1).to_pl(), &cfg).unwrap();
    assert!((j.value - 0.5).abs() < 1e-10);
    let square = library::square();
    let u = canonical_potential(&square);
    let j = crease_jump_integral(&square, &u, &step(2).to_pl(), &cfg).unwrap();
    assert!((j.value - 1.0).abs() < 1e-8);
    assert_eq!(j.creases, 1);

    // positive homogeneity and blindness to affine terms
    let f = step(2).to_pl();
    let g = PLFunc::new(
        f.pieces()
            .iter()
            .map(|a| a.scale(&int(3)).add(&AffineFunc::new(vec![int(1), int(-4)], int(2))))
            .collect(),
    )
    .unwrap();
    let jg = crease_jump_integral(&square, &u, &g, &cfg).unwrap();
    assert!((jg.value - 3.0).abs() < 1e-8);

    let affine = PLFunc::affine(AffineFunc::new(vec![int(1), int(1)], int(0)));
    let j0 = crease_jump_integral(&square, &u, &affine, &cfg).unwrap();
    assert_eq!((j0.value, j0.creases), (0.0, 0));
}

/// `-U'' - s` for `u = Σ δ log δ + x⁴/12` on `[-1, 1]`, where `u'' = 2/(1-x²) + x²`
/// and `s = 1`, written as `U = N/D` with `N = 1 - x²`, `D = 2 + x² - x⁴`.
fn quartic_residual(x: f64) -> f64 {
    let (n, n1, n2) = (1.0 - x * x, -2.0 * x, -2.0);
    let (d, d1, d2) = (2.0 + x * x - x.powi(4), 2.0 * x - 4.0 * x.powi(3), 2.0 - 12.0 * x * x);
    let u2 = (n2 * d - n * d2) / (d * d) - 2.0 * d1 * (n1 * d - n * d1) / d.powi(3);
    -u2 - 1.0
}

#[test]
fn residual_converges_at_second_order_for_a_corrected_potential() {
    let p = library::interval();
    let ext = solve_extremal_affine(&p).unwrap();
    let u = canonical_potential(&p)
        .with_correction(Polynomial::monomial(1, vec![4], frac(1, 12)))
        .unwrap();
    let errors: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| {
            let field = abreu_residual(
                &p,
                &ext,
                ResidualSource::Analytic {
                    potential: &u,
                    h,
                    margin: 0.125,
                },
            )
            .unwrap();
            assert!(!field.points.is_empty());
            field
                .points
                .iter()
                .zip(&field.values)
                .map(|(x, r)| (r - quartic_residual(x[0])).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let rate = w[0] / w[1];
        assert!((3.5..4.5).contains(&rate), "errors {errors:?}");
    }
}

#[test]
fn canonical_residual_vanishes_on_the_interval() {
    let p = library::interval();
    let ext = solve_extremal_affine(&p).unwrap();
    let u = canonical_potential(&p);
    let field = abreu_residual(
        &p,
        &ext,
        ResidualSource::Analytic {
            potential: &u,
            h: 1.0 / 32.0,
            margin: 5.0 / 32.0,
        },
    )
    .unwrap();
    assert!(field.sup_norm < 1e-9);
}
