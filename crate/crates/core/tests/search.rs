mod common;

use common::unstable_quadrilateral;
use kstab::extremal::{check_positivity, relative_futaki, solve_extremal_affine};
use kstab::plfunc::l_of_pl;
use kstab::rational::{frac, int};
use kstab::stability::{properness_ratio, search_destabilizer};
use kstab::{library, Polytope, SearchConfig, SimplePL, StabilityReport, Verdict};
use num::Signed;

fn search(p: &Polytope, height: u32, threads: Option<usize>) -> StabilityReport {
    let ext = solve_extremal_affine(p).unwrap();
    let mut cfg = SearchConfig::new(height);
    cfg.threads = threads;
    search_destabilizer(p, &ext, &cfg).unwrap()
}

#[test]
fn thread_count_does_not_change_the_report() {
    for name in ["square", "simplex", "trapezoid(3)"] {
        let p = library::example(name).unwrap();
        let one = search(&p, 3, Some(1));
        for t in [2, 4, 7] {
            assert_eq!(one, search(&p, 3, Some(t)), "{name} with {t} threads");
        }
    }
}

#[test]
fn finer_resolution_never_raises_lambda_hat() {
    let p = library::example("trapezoid(3)").unwrap();
    let lambdas: Vec<_> = (1..=4).map(|h| search(&p, h, None).lambda_hat).collect();
    assert!(lambdas.windows(2).all(|w| w[1] <= w[0]), "{lambdas:?}");
    assert!(lambdas.iter().all(|l| l.is_positive()));
}

#[test]
fn reflection_and_translation_preserve_the_outcome() {
    let p = library::example("trapezoid(2)").unwrap();
    let base = search(&p, 3, None);
    // the height box is symmetric under coordinate sign changes and swaps
    let flipped = p.transform_unimodular(&[vec![-1, 0], vec![0, 1]]).unwrap();
    let swapped = p.transform_unimodular(&[vec![0, 1], vec![1, 0]]).unwrap();
    let moved = p.translate(&[frac(3, 2), int(-5)]).unwrap();
    for q in [flipped, swapped, moved] {
        let r = search(&q, 3, None);
        assert_eq!(r.verdict, base.verdict);
        assert_eq!(r.lambda_hat, base.lambda_hat);
    }
}

#[test]
fn library_examples_have_no_destabilizer() {
    for (name, lambda) in [
        ("interval", frac(1, 2)),
        ("square", frac(1, 3)),
        ("simplex", frac(1, 3)),
    ] {
        let p = library::example(name).unwrap();
        let r = search(&p, 3, None);
        assert_eq!(r.verdict, Verdict::NoDestabilizerAtResolution, "{name}");
        assert!(r.witness.is_none());
        assert_eq!(r.lambda_hat, lambda, "{name}");
    }
}

#[test]
fn unstable_witness_is_certified_independently() {
    let p = unstable_quadrilateral();
    assert!(!p.check_delzant().is_delzant);
    let ext = solve_extremal_affine(&p).unwrap();
    let r = search(&p, 2, None);
    assert_eq!(r.verdict, Verdict::Unstable);
    let w = r.witness.as_ref().unwrap();
    let f = w.simple_pl().to_pl();
    let l = l_of_pl(&p, &ext, &f).unwrap();
    assert!(l.is_negative());
    assert_eq!(l, w.l);
    let fut = relative_futaki(&p, &ext, &f).unwrap();
    assert!(fut.is_positive());
    assert_eq!(Some(fut), r.futaki_of_witness);
}

#[test]
fn properness_ratio_of_the_square_half_plane() {
    let p = library::square();
    let ext = solve_extremal_affine(&p).unwrap();
    let v = SimplePL::new(vec![int(1), int(0)], int(0)).unwrap();
    assert_eq!(properness_ratio(&p, &ext, &v).unwrap(), frac(1, 3));
    let outside = SimplePL::new(vec![int(1), int(0)], int(5)).unwrap();
    assert!(properness_ratio(&p, &ext, &outside).is_err());
}

#[test]
fn positivity_of_s() {
    for name in library::STANDARD {
        let p = library::example(name).unwrap();
        assert!(check_positivity(&solve_extremal_affine(&p).unwrap(), &p), "{name}");
    }
    let p = Polytope::from_i64(
        2,
        &[vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 4]],
        vec![int(0), int(0), int(1), int(5)],
    )
    .unwrap();
    let ext = solve_extremal_affine(&p).unwrap();
    assert!(!check_positivity(&ext, &p));
    assert!(p.vertices().iter().any(|v| ext.s.eval(v).is_negative()));
}
