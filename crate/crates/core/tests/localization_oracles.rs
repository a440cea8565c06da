//! Localization quantities against closed-form radial laws, direct lattice
//! sums and a polar-coordinate integral of the Gaussian envelope.

use std::f64::consts::PI;

use framelab_core::localization::{
    default_probes, double_tail, hap_check, localization_defect, mean_value_check, tail_sup, TestFunction,
};
use framelab_core::{Atoms, Ball, Error, FramePairSpec, KernelSpec, Lattice, LocalizationConfig, MeasureSpec, Point, PointSet, QuadConfig};
use num_complex::Complex64;

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

/// `int_{|y| > r} exp(-pi |y - g|^2) dy` with `|g| = d`, in polar coordinates:
/// Simpson in the radius, trapezoid in the angle.
fn gaussian_outside_disc(d: f64, r: f64) -> f64 {
    let n_rho = 3000;
    let h = 6.0 / n_rho as f64;
    let n_theta = 256;
    let mut acc = 0.0;
    for i in 0..=n_rho {
        let rho = r + i as f64 * h;
        let mut ang = 0.0;
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            ang += (-PI * (rho * rho + d * d - 2.0 * rho * d * th.cos())).exp();
        }
        ang *= 2.0 * PI / n_theta as f64;
        let w = if i == 0 || i == n_rho {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * rho * ang;
    }
    acc * h / 3.0
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn fock_tail_sup_follows_the_radial_law() {
    let probes = default_probes(&[0.0, 0.0], 1.0);
    let leb = MeasureSpec::lebesgue(2);
    for r in [0.5, 1.0, 1.5] {
        let t = tail_sup(&KernelSpec::Fock, &leb, r, &probes, &QuadConfig::new(0.02, r + 6.0)).unwrap();
        let want = (-PI * r * r).exp();
        assert!((t.value / want - 1.0).abs() < 1e-4, "R {r}: {} vs {want}", t.value);
        assert!(t.value - t.min_over_probes < 1e-6);
    }
    let t = tail_sup(&KernelSpec::Fock, &leb, 3.0, &probes, &QuadConfig::new(0.02, 9.0)).unwrap();
    assert!(t.value <= 1e-8);
}

#[test]
fn tail_sup_is_nonincreasing() {
    let cases = [
        (KernelSpec::Fock, MeasureSpec::counting_lattice(Lattice::new(0.8, 2).unwrap()), vec![0.5, 1.0, 2.0, 3.0]),
        (KernelSpec::paley_wiener(), MeasureSpec::counting_lattice(Lattice::new(1.0, 1).unwrap()), vec![1.0, 2.0, 4.0, 8.0]),
        (KernelSpec::paley_wiener(), KernelSpec::paley_wiener().natural_measure().unwrap(), vec![1.0, 2.0, 4.0]),
    ];
    for (k, m, radii) in cases {
        let d = k.point_dim();
        let probes = default_probes(&vec![0.0; d], 1.0);
        let mut prev = f64::INFINITY;
        for r in radii {
            let outer = if d == 1 { 64.0 * r + 6.0 } else { r + 6.0 };
            let t = tail_sup(&k, &m, r, &probes, &QuadConfig::new(0.02, outer)).unwrap().value;
            assert!(t <= prev + 1e-12, "R {r}: {t} after {prev}");
            prev = t;
        }
    }
}

#[test]
fn orthogonal_family_has_no_tail() {
    // the Paley-Wiener kernels at the integers are orthonormal
    let z = MeasureSpec::counting_lattice(Lattice::new(1.0, 1).unwrap());
    let probes = vec![pt(&[0.0]), pt(&[3.0])];
    let t = tail_sup(&KernelSpec::paley_wiener(), &z, 0.5, &probes, &QuadConfig::new(0.02, 40.0)).unwrap();
    assert!(t.value < 1e-28);
}

#[test]
fn hap_matches_direct_lattice_sum() {
    let z2 = Atoms::Lattice(Lattice::new(1.0, 2).unwrap());
    let h = hap_check(&KernelSpec::Fock, &z2, 2.0, &[pt(&[0.0, 0.0])], None).unwrap();
    let mut direct = 0.0;
    for i in -12i32..=12 {
        for j in -12i32..=12 {
            let n2 = (i * i + j * j) as f64;
            if n2 > 4.0 {
                direct += (-PI * n2).exp();
            }
        }
    }
    assert!((h.value - direct).abs() <= 1e-12 * direct, "{} vs {direct}", h.value);

    let far = hap_check(&KernelSpec::Fock, &z2, 2.0, &[pt(&[0.0, 0.0])], Some(1.5)).unwrap();
    assert_eq!(far.value, 0.0);
    let empty = hap_check(&KernelSpec::Fock, &Atoms::Set(PointSet::empty()), 2.0, &[pt(&[0.0, 0.0])], None).unwrap();
    assert_eq!(empty.value, 0.0);
}

#[test]
fn mean_value_examples() {
    let a = pt(&[0.3, -0.2]);
    let fock = mean_value_check(
        &KernelSpec::Fock,
        &MeasureSpec::lebesgue(2),
        1.0,
        std::slice::from_ref(&a),
        &[TestFunction::kernel_at(a.clone())],
        &QuadConfig::new(0.02, 7.0),
    )
    .unwrap();
    let want = 1.0 / (1.0 - (-PI).exp());
    assert!((fock.c_r / want - 1.0).abs() < 1e-4);

    let pw = KernelSpec::paley_wiener();
    let lambda = pw.natural_measure().unwrap();
    let origin = pt(&[0.0]);
    let r = mean_value_check(&pw, &lambda, 0.5, std::slice::from_ref(&origin), &[TestFunction::kernel_at(origin.clone())], &QuadConfig::new(0.01, 6.0))
        .unwrap();
    let sinc2 = |x: f64| if x == 0.0 { 1.0 } else { ((PI * x).sin() / (PI * x)).powi(2) };
    let integral = simpson(sinc2, -0.5, 0.5, 2000);
    // 0.9028 is the integral over [-1, 1]; the ball of radius 0.5 is [-0.5, 0.5]
    assert!((integral - 0.773695).abs() < 1e-6);
    assert!((simpson(sinc2, -1.0, 1.0, 4000) - 0.9028).abs() < 1e-4);
    assert!((r.c_r - 1.0 / integral).abs() < 1e-8, "{} vs {}", r.c_r, 1.0 / integral);

    // k_1 vanishes at 0
    let zero = mean_value_check(
        &pw,
        &lambda,
        0.5,
        std::slice::from_ref(&origin),
        &[TestFunction { centers: vec![pt(&[1.0])], coeffs: vec![Complex64::new(1.0, 0.0)] }],
        &QuadConfig::new(0.01, 6.0),
    )
    .unwrap();
    assert!(zero.c_r < 1e-30);
}

#[test]
fn fock_lattice_double_tail_matches_per_atom_integrals() {
    let r = 4.0;
    let pair = FramePairSpec::new(
        KernelSpec::Fock,
        MeasureSpec::lebesgue(2),
        MeasureSpec::counting_lattice(Lattice::new(1.0, 2).unwrap()),
    )
    .unwrap();
    let b = Ball::centered(&[0.0, 0.0], r).unwrap();
    let t = double_tail(&pair, &b, &LocalizationConfig::default()).unwrap();

    let mut oracle = 0.0;
    let mut atoms = 0.0;
    for i in -4i32..=4 {
        for j in -4i32..=4 {
            let d = ((i * i + j * j) as f64).sqrt();
            if d <= r {
                let term = gaussian_outside_disc(d, r);
                assert!(term <= (-PI * (r - d).powi(2)).exp() + 1e-15);
                oracle += term;
                atoms += 1.0;
            }
        }
    }
    assert!((t.t1 - oracle).abs() <= 1e-4 * oracle, "{} vs {oracle}", t.t1);
    assert!(t.t1 >= 0.0 && t.t2 >= 0.0);
    // each atom contributes at most its whole unit mass
    assert!(t.t1 <= atoms);
}

#[test]
fn defect_is_symmetric_and_vanishes_on_identical_families() {
    let cfg = LocalizationConfig::default();
    let pair = FramePairSpec::new(
        KernelSpec::Fock,
        MeasureSpec::lebesgue(2),
        MeasureSpec::counting_lattice(Lattice::new(0.8, 2).unwrap()),
    )
    .unwrap();
    let b = Ball::centered(&[0.1, 0.2], 4.0).unwrap();
    let a = localization_defect(&pair, &b, &cfg).unwrap();
    let s = localization_defect(&pair.swapped(), &b, &cfg).unwrap();
    assert!((a.defect - s.defect).abs() <= 1e-12 * a.defect.max(1.0));

    let lat = MeasureSpec::counting_lattice(Lattice::new(0.8, 2).unwrap());
    let same = FramePairSpec::new(KernelSpec::Fock, lat.clone(), lat).unwrap();
    assert_eq!(localization_defect(&same, &b, &cfg).unwrap().defect, 0.0);

    let mut general = pair.clone();
    general.self_dual = false;
    assert!(matches!(localization_defect(&general, &b, &cfg), Err(Error::GeneralDualsUnsupported)));
}

#[test]
fn continuous_fock_pair_has_equal_tails() {
    let leb = MeasureSpec::lebesgue(2);
    let pair = FramePairSpec::new(KernelSpec::Fock, leb.clone(), leb).unwrap();
    let cfg = LocalizationConfig { quad: QuadConfig::new(0.1, 6.0), ..LocalizationConfig::default() };
    let t = double_tail(&pair, &Ball::centered(&[0.0, 0.0], 2.0).unwrap(), &cfg).unwrap();
    assert!((t.t1 - t.t2).abs() <= 1e-10 * t.t1.max(1.0));
}
