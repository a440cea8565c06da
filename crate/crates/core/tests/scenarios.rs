//! End-to-end scenario runs: config handling, report structure, verdicts that
//! can be recomputed from their own tables, and reproducibility.

use std::f64::consts::PI;

use framelab_core::verify::{
    run, run_and_write, FamilyConfig, GramOptions, Scenario, ScenarioConfig, ScenarioReport, Verdict, SCHEMA,
};
use framelab_core::{Error, KernelSpec, Lattice};
use serde_json::Value;

/// `"gram_studies[0].rows[3]"` -> `/gram_studies/0/rows/3`.
fn pointer(path: &str) -> String {
    let mut out = String::new();
    for part in path.split('.') {
        let mut it = part.split('[');
        out.push('/');
        out.push_str(it.next().unwrap());
        for idx in it {
            out.push('/');
            out.push_str(idx.trim_end_matches(']'));
        }
    }
    out
}

fn assert_rows_resolve(report: &ScenarioReport) {
    let json: Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    for v in &report.verdicts {
        assert!(!v.rows.is_empty(), "verdict {} names no rows", v.id);
        for r in &v.rows {
            assert!(json.pointer(&pointer(r)).is_some(), "verdict {} cites missing row {r}", v.id);
        }
    }
}

fn small_lattice_config(sc: Scenario, alphas: &[f64]) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(sc);
    cfg.families = Some(
        alphas.iter().map(|&a| FamilyConfig::lattice(format!("{a}Z2"), Lattice::new(a, 2).unwrap())).collect(),
    );
    cfg.density.r_max = 64.0;
    cfg.localization.radii = vec![4.0, 8.0];
    cfg.gram = Some(GramOptions::new(vec![2.0, 3.0, 4.0]));
    cfg
}

#[test]
fn finite_oracle_seed_seven() {
    let mut cfg = ScenarioConfig::new(Scenario::FiniteOracle);
    cfg.seed = 7;
    let report = run(&cfg).unwrap();
    let finite = report.finite.as_ref().unwrap();
    assert_eq!(finite.instances, 100);
    assert!(finite.rows.iter().all(|r| r.comparison.residual < 1e-10));
    for id in ["comparison-identity", "projection-formulas", "projection-idempotent", "double-sum-bounds", "frame-inequality", "frame-bound-oracles"] {
        assert_eq!(report.verdict(id).unwrap().verdict, Verdict::Pass, "{id}");
    }
    assert!(report.ok());
    assert_eq!(report.schema, SCHEMA);
    assert_rows_resolve(&report);
}

#[test]
fn config_errors_carry_a_path() {
    match ScenarioConfig::from_json_str(r#"{"scenario": "fock", "density": {"r_max": "big"}}"#) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "density.r_max"),
        other => panic!("{other:?}"),
    }
    match ScenarioConfig::from_json_str(r#"{"scenario": "fock", "bogus": 1}"#) {
        Err(Error::Config { .. }) => {}
        other => panic!("{other:?}"),
    }
    let cfg = ScenarioConfig::from_json_str(r#"{"scenario": "nope"}"#).unwrap();
    assert!(matches!(run(&cfg), Err(Error::UnknownScenario(s)) if s == "nope"));

    let mut cfg = ScenarioConfig::new(Scenario::Fock);
    cfg.localization.radii = vec![];
    assert!(matches!(run(&cfg), Err(Error::Config { path, .. }) if path == "localization.radii"));

    let cfg = ScenarioConfig::from_json_str(
        r#"{"scenario": "gabor", "families": [{"label": "x", "index": {"points": {"csv": "/nonexistent.csv"}}}]}"#,
    )
    .unwrap();
    assert!(matches!(run(&cfg), Err(Error::Config { .. })));

    let cfg = ScenarioConfig::from_json_str(r#"{"scenario": "fock", "kernel": {"kernel": "paley-wiener"}}"#).unwrap();
    assert!(matches!(run(&cfg), Err(Error::Config { path, .. }) if path == "kernel.kernel"));
}

#[test]
fn config_round_trips_through_json() {
    let cfg = small_lattice_config(Scenario::Gabor, &[0.5, 1.2]);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
}

#[test]
fn paley_wiener_scenario() {
    let report = run(&ScenarioConfig::new(Scenario::PaleyWiener)).unwrap();
    assert!(report.ok(), "{:#?}", report.verdicts);
    let ortho = report.orthonormality.as_ref().unwrap();
    assert_eq!(ortho.points, 41);
    assert!(ortho.closed_form_error <= 1e-8 && ortho.fourier_error <= 1e-6);

    // all four densities within 5% of 1
    assert_eq!(report.densities.len(), 2);
    for d in &report.densities {
        assert!((d.estimate.upper - 1.0).abs() <= 0.05 && (d.estimate.lower - 1.0).abs() <= 0.05);
    }

    // orthonormal Nyquist family: the Gram matrix is the identity at every window
    let study = &report.gram_studies[0].study;
    for row in &study.rows {
        assert!((row.gram_min - 1.0).abs() < 1e-10 && (row.gram_max - 1.0).abs() < 1e-10);
    }

    // Parseval pair: the comparison identity holds up to truncation, and the
    // row gap is nonpositive
    let table = &report.theorem_tables[0];
    assert!(table.parseval && table.all_hold);
    for row in &table.rows {
        assert!(row.identity_residual.unwrap() <= row.trunc_bound);
        assert!(row.lemma_gap <= 1e-9);
        assert_eq!(row.a, 1.0);
        assert!((row.b - row.nu_mass / row.mu_mass).abs() < 1e-15);
    }
    assert_rows_resolve(&report);
}

#[test]
fn lattice_verdicts_follow_from_the_tables() {
    let cfg = small_lattice_config(Scenario::Fock, &[0.8, 2.0]);
    let report = run(&cfg).unwrap();
    assert_rows_resolve(&report);
    let tol = cfg.density.tolerance;
    for (i, fam) in ["0.8Z2", "2Z2"].iter().enumerate() {
        let dens = &report.densities[i].estimate;
        let study = &report.gram_studies[i].study;
        let rows: Vec<f64> = study.rows.iter().map(|r| r.frame_lower).filter(|v| v.is_finite()).collect();
        let (a, b) = (rows[rows.len() - 2], rows[rows.len() - 1]);
        let frame = a > 0.01 && b > 0.01 && (b - a).abs() <= 0.10 * a.max(b);
        assert_eq!(frame, study.frame_evidence);
        let v = report.verdict(&format!("density-theorem:{fam}")).unwrap();
        if frame {
            let want = if dens.lower >= 1.0 - tol { Verdict::Pass } else { Verdict::Contradiction };
            assert_eq!(v.verdict, want);
        }
        assert_ne!(v.verdict, Verdict::Contradiction);
    }
    let d = &report.densities[1].estimate;
    assert!((d.lower - 0.25).abs() <= 0.01 && (d.upper - 0.25).abs() <= 0.01);
    assert!(!report.gram_studies[1].study.frame_evidence);
    assert!(report.gram_studies[0].study.frame_evidence);

    // the sparse lattice fails the row inequality with a C that does not
    // make up the gap, so the table is vacuous on the hypothesis side
    let t = &report.theorem_tables[1];
    assert!(!t.all_hold);
    assert_eq!(report.verdict("theorem-table:2Z2").unwrap().verdict, Verdict::VacuousConsistent);
    for row in &t.rows {
        assert!(row.b < 0.3 && row.lhs > row.rhs);
    }
}

#[test]
fn gabor_thinned_lattice_is_not_a_contradiction() {
    let mut cfg = small_lattice_config(Scenario::Gabor, &[]);
    cfg.families = Some(vec![FamilyConfig::lattice(
        "thinned",
        Lattice::new(1.0, 2).unwrap().thinned(framelab_core::Thinning::EvenSublattice),
    )]);
    let report = run(&cfg).unwrap();
    let d = &report.densities[0].estimate;
    assert!((d.lower - 0.75).abs() < 0.02 && (d.upper - 0.75).abs() < 0.02);
    let v = report.verdict("density-theorem:thinned").unwrap();
    assert_ne!(v.verdict, Verdict::Contradiction);
    assert!(report.ok());
}

#[test]
fn critical_lattice_makes_no_claim() {
    let report = run(&small_lattice_config(Scenario::Fock, &[1.0])).unwrap();
    assert_eq!(report.verdict("density-theorem:1Z2").unwrap().verdict, Verdict::CriticalNoClaim);
    assert_eq!(report.verdict("theorem-table:1Z2").unwrap().verdict, Verdict::CriticalNoClaim);
    assert!(report.ok());
}

#[test]
fn dual_embedding_scenario() {
    let mut cfg = ScenarioConfig::new(Scenario::DualEmbedding);
    cfg.isometry.test_functions = 3;
    let report = run(&cfg).unwrap();
    assert!(report.ok(), "{:#?}", report.verdicts);
    for row in &report.isometry {
        assert!(row.residual <= row.tail_bound + 1e-6 * row.norm_sq);
    }
    assert_rows_resolve(&report);
}

#[test]
fn reports_are_reproducible_and_written() {
    let mut cfg = ScenarioConfig::new(Scenario::FiniteOracle);
    cfg.seed = 42;
    cfg.finite.instances = 20;
    let a = run(&cfg).unwrap().to_json().unwrap();
    let b = run(&cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    cfg.seed = 43;
    assert_ne!(a, run(&cfg).unwrap().to_json().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let (_, paths) = run_and_write(&cfg, dir.path()).unwrap();
    assert!(paths.iter().any(|p| p.ends_with("report.json")));
    assert!(paths.iter().any(|p| p.ends_with("finite.csv")));
    for p in &paths {
        assert!(p.exists());
    }
}

#[test]
fn pw_gram_entries_match_the_frequency_side() {
    // the report's Fourier route against a Simpson rule written here
    let band = PI;
    for (x, y) in [(0.0, 1.0), (0.0, 0.5), (-3.0, 7.0)] {
        let n = 20_000;
        let h = 2.0 * band / n as f64;
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for k in 0..=n {
            let xi = -band + k as f64 * h;
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * num_complex::Complex64::from_polar(1.0, xi * (x - y));
        }
        let simpson = acc * h / 3.0 / (2.0 * band);
        let ours = framelab_core::verify::pw_frequency_inner(band, x, y);
        assert!((ours - simpson).norm() < 1e-10);
        assert!((ours - KernelSpec::paley_wiener().normalized(&[x], &[y])).norm() < 1e-10);
    }
}
