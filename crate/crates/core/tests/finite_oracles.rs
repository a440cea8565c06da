//! Finite frames against an independent linear-algebra route: projections
//! from an SVD basis of the span, frame bounds from a symmetric eigensolver
//! on the real embedding of the frame operator.

use framelab_core::finframe::{
    comparison_residual, diagonal_terms, double_sum_bounds, random_frame, random_instance, FiniteFrame, Omega,
};
use framelab_core::linalg::{inner, norm};
use framelab_core::verify::{finite_oracle_instances, frame_bound_oracles};
use framelab_core::Point;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = nalgebra::Complex<f64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn synthesis(f: &FiniteFrame) -> DMatrix<C> {
    let n = f.dim();
    DMatrix::from_fn(n, f.len(), |i, j| {
        let v = f.vectors()[j][i] * f.weights()[j].sqrt();
        C::new(v.re, v.im)
    })
}

/// Orthogonal projection onto the column span via a truncated SVD.
fn svd_projection(f: &FiniteFrame, x: &[Complex64]) -> Vec<Complex64> {
    let a = synthesis(f);
    let svd = a.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let xv = DVector::from_iterator(x.len(), x.iter().map(|z| C::new(z.re, z.im)));
    let mut p = DVector::<C>::zeros(x.len());
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-7 * smax {
            let col = u.column(k);
            let coef = col.adjoint() * &xv;
            p += col * coef[(0, 0)];
        }
    }
    p.iter().map(|z| c(z.re, z.im)).collect()
}

/// Extreme nonzero eigenvalues of `S = A A*`, from the squared singular values.
fn svd_frame_bounds(f: &FiniteFrame) -> (f64, f64) {
    let s = synthesis(f).singular_values();
    let smax = s.max();
    let nz: Vec<f64> = s.iter().filter(|v| **v > 1e-7 * smax).map(|v| v * v).collect();
    (nz.iter().copied().fold(f64::INFINITY, f64::min), smax * smax)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))).collect()
}

fn mercedes() -> FiniteFrame {
    let s = 3f64.sqrt() / 2.0;
    FiniteFrame::from_real(2, &[&[0.0, 1.0], &[-s, -0.5], &[s, -0.5]]).unwrap()
}

#[test]
fn frame_operator_examples() {
    let s = mercedes().frame_operator();
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.5 } else { 0.0 };
            assert!((s[(i, j)] - c(want, 0.0)).norm() < 1e-15);
        }
    }
    let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
    let s = f.frame_operator();
    assert_eq!((s[(0, 0)].re, s[(1, 1)].re, s[(0, 1)].norm()), (2.0, 1.0, 0.0));
}

#[test]
fn known_frame_bounds() {
    for o in frame_bound_oracles().unwrap() {
        assert!(o.error <= 1e-12, "{}: {:?} vs {:?}", o.name, o.computed, o.expected);
    }
    let onb = FiniteFrame::from_real(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
    assert_eq!(onb.frame_bounds().unwrap(), (1.0, 1.0));
    let (lo, hi) = svd_frame_bounds(&mercedes());
    assert!((lo - 1.5).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
}

#[test]
fn canonical_dual_examples() {
    let d = mercedes().canonical_dual().unwrap();
    for (v, w) in d.vectors().iter().zip(mercedes().vectors()) {
        let scaled: Vec<Complex64> = w.iter().map(|z| z * (2.0 / 3.0)).collect();
        assert!(max_diff(v, &scaled) < 1e-14);
    }
    let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
    let d = f.canonical_dual().unwrap();
    let want = [[0.5, 0.0], [0.5, 0.0], [0.0, 1.0]];
    for (v, w) in d.vectors().iter().zip(want) {
        assert!(max_diff(v, &[c(w[0], 0.0), c(w[1], 0.0)]) < 1e-15);
    }
}

#[test]
fn projection_examples() {
    let e1 = FiniteFrame::from_vectors(2, vec![vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let p = e1.project(&[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
    assert!(max_diff(&p, &[c(3.0, 0.0), c(0.0, 0.0)]) < 1e-15);
    let p = mercedes().project(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert!(max_diff(&p, &[c(1.0, 0.0), c(1.0, 0.0)]) < 1e-14);
}

#[test]
fn riesz_bound_examples() {
    let twice = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
    let (lo, hi) = twice.riesz_bounds().unwrap();
    assert!(lo.abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    let (lo, hi) = mercedes().riesz_bounds().unwrap();
    assert!(lo.abs() < 1e-14 && (hi - 1.5).abs() < 1e-14);
}

#[test]
fn comparison_examples() {
    let onb = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
    let r = comparison_residual(&onb, &onb, &Omega::Masks { f: vec![true, false], g: vec![true, false] }).unwrap();
    assert_eq!(r.residual, 0.0);
    assert_eq!(r.lhs, [1.0, 0.0]);
    let r = comparison_residual(&onb, &onb, &Omega::Masks { f: vec![false; 2], g: vec![false; 2] }).unwrap();
    assert_eq!((r.residual, r.lhs), (0.0, [0.0, 0.0]));
}

#[test]
fn diagonal_terms_examples() {
    let e1 = FiniteFrame::from_real(2, &[&[1.0, 0.0]]).unwrap();
    let e2 = FiniteFrame::from_real(2, &[&[0.0, 1.0]]).unwrap();
    let t = diagonal_terms(&e1, &e2).unwrap();
    assert_eq!((t.g_side[0].norm(), t.f_side[0].norm()), (0.0, 0.0));

    // w <g, dual g> = w <S^-1 g, g> is at most 1 for every member of a frame
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(n..=12);
        let g = random_frame(&mut rng, n, m).unwrap();
        let t = diagonal_terms(&g, &g).unwrap();
        for (z, w) in t.f_side.iter().zip(g.weights()) {
            assert!(w * z.re <= 1.0 + 1e-12 && z.im.abs() < 1e-12, "{z} with weight {w}");
        }
    }
}

#[test]
fn parseval_frames_are_self_dual() {
    let onb = FiniteFrame::from_real(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
    let dual = onb.canonical_dual().unwrap();
    for (a, b) in dual.vectors().iter().zip(onb.vectors()) {
        assert!(max_diff(a, b) < 1e-10);
    }
    let s = 3f64.sqrt() / 2.0;
    let k = (2.0f64 / 3.0).sqrt();
    let tight = FiniteFrame::new(
        2,
        vec![
            vec![c(0.0, 0.0), c(k, 0.0)],
            vec![c(-s * k, 0.0), c(-0.5 * k, 0.0)],
            vec![c(s * k, 0.0), c(-0.5 * k, 0.0)],
        ],
        vec![1.0; 3],
        vec![Point::origin(1); 3],
    )
    .unwrap();
    let (lo, hi) = tight.frame_bounds().unwrap();
    assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    for (a, b) in tight.canonical_dual().unwrap().vectors().iter().zip(tight.vectors()) {
        assert!(max_diff(a, b) < 1e-10);
    }
}

#[test]
fn both_projection_formulas_match_the_svd_projection() {
    let (rows, _) = finite_oracle_instances(7, 100, 1000).unwrap();
    assert_eq!(rows.len(), 100);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 100 {
        let inst = random_instance(&mut rng).unwrap();
        if inst.f.spectrum().and_then(|s| s.check_unambiguous()).is_err() {
            continue;
        }
        checked += 1;
        let x = random_vec(&mut rng, inst.f.dim());
        let oracle = svd_projection(&inst.f, &x);
        let p = inst.f.project(&x).unwrap();
        assert!(max_diff(&p, &oracle) < 1e-10);
        assert!(max_diff(&inst.f.project_dual_form(&x).unwrap(), &oracle) < 1e-10);
        assert!(max_diff(&inst.f.project(&p).unwrap(), &p) < 1e-12);
    }
}

#[test]
fn comparison_and_double_sum_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen = 0;
    while seen < 100 {
        let inst = random_instance(&mut rng).unwrap();
        let Ok(r) = comparison_residual(&inst.f, &inst.g, &inst.omega) else { continue };
        seen += 1;
        assert!(r.residual < 1e-10, "residual {}", r.residual);
        let b = double_sum_bounds(&inst.f, &inst.g, &inst.omega, 1e-9).unwrap();
        assert!(b.dual_first.holds && b.dual_second.holds, "{b:?}");
    }
}

#[test]
fn frame_bounds_agree_with_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=16);
        let f = random_frame(&mut rng, n, m).unwrap();
        let Ok((lo, hi)) = f.frame_bounds() else { continue };
        let (olo, ohi) = svd_frame_bounds(&f);
        assert!((lo - olo).abs() <= 1e-10 * ohi && (hi - ohi).abs() <= 1e-10 * ohi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frame_inequality_on_the_span(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=16);
        let f = random_frame(&mut rng, n, m).unwrap();
        let Ok((lo, hi)) = f.frame_bounds() else { return Ok(()) };
        for _ in 0..50 {
            let x = random_vec(&mut rng, n);
            // frame bounds are stated on the span
            let u = svd_projection(&f, &x);
            let energy: f64 = f.vectors().iter().zip(f.weights()).map(|(v, w)| w * inner(&u, v).norm_sqr()).sum();
            let u2 = norm(&u).powi(2);
            prop_assert!(energy >= lo * u2 * (1.0 - 1e-9) - 1e-14);
            prop_assert!(energy <= hi * u2 * (1.0 + 1e-9) + 1e-14);
        }
    }

    #[test]
    fn eigen_reconstruction(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=16);
        let f = random_frame(&mut rng, n, m).unwrap();
        let s = f.frame_operator();
        let e = s.hermitian_eigen(true).unwrap();
        let back = e.reconstruct().unwrap();
        prop_assert!(back.sub(&s).frobenius_norm() <= 1e-11 * s.frobenius_norm());
    }
}
