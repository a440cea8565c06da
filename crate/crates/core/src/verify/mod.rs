//! End-to-end scenarios: each assembles the other modules into tables and
//! verdicts, and every verdict names the table rows it was read from.

pub mod config;
pub mod gram;
mod scenarios;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::DensityEstimate;
use crate::error::{Error, Result};
use crate::localization::{
    localization_table, FramePairSpec, HapResult, LocalizationConfig, LocalizationRow, TailSup,
};

pub use config::{
    DensityOptions, FamilyConfig, FiniteOptions, IsometryOptions, LocalizationOptions, MeasureConfig,
    OrthonormalityOptions, OutputOptions, ProbeOptions, Scenario, ScenarioConfig,
};
pub use gram::{gram_truncation_study, pw_frequency_inner, GramOptions, GramRow, GramStudy, TrialCache};
pub use scenarios::{finite_oracle_instances, frame_bound_oracles, FiniteRow};

pub const SCHEMA: &str = "framelab/1";

/// Outcome of one check. Desk-scale evidence never proves a theorem, so the
/// vocabulary stops at consistency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// The hypotheses are not in force, so the theorem asserts nothing.
    VacuousConsistent,
    HypothesesUnmet,
    /// Density within tolerance of the critical value 1.
    CriticalNoClaim,
    /// Frame or Riesz evidence together with a density on the wrong side.
    Contradiction,
    /// A numerical check missed its tolerance.
    Fail,
}

impl Verdict {
    /// Whether a run carrying this verdict may exit successfully.
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::VacuousConsistent | Verdict::CriticalNoClaim)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::VacuousConsistent => "vacuous-consistent",
            Verdict::HypothesesUnmet => "hypotheses-unmet",
            Verdict::CriticalNoClaim => "critical-no-claim",
            Verdict::Contradiction => "contradiction",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub id: String,
    pub verdict: Verdict,
    pub statement: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Report paths of the rows the verdict was read from.
    pub rows: Vec<String>,
}

impl VerdictRecord {
    pub fn new(id: impl Into<String>, verdict: Verdict, statement: impl Into<String>) -> Self {
        Self { id: id.into(), verdict, statement: statement.into(), value: None, tolerance: None, rows: Vec::new() }
    }

    pub fn check(id: impl Into<String>, ok: bool, statement: impl Into<String>) -> Self {
        Self::new(id, if ok { Verdict::Pass } else { Verdict::Fail }, statement)
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }

    pub fn rows(mut self, rows: impl IntoIterator<Item = String>) -> Self {
        self.rows.extend(rows);
        self
    }
}

/// One row of the comparison behind the main density inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub center: Vec<f64>,
    pub r: f64,
    /// `|int_B <P_G dual f_y, f_y> d mu| / mu(B)`; 1 for self-dual Parseval pairs.
    pub a: f64,
    /// `nu(B) / mu(B)`.
    pub b: f64,
    /// Effective localization epsilon.
    pub c: f64,
    pub lhs: f64,
    /// `B + C (1 + B)`.
    pub rhs: f64,
    /// Tolerance plus the truncation bound over `mu(B)`.
    pub slack: f64,
    pub holds: bool,
    pub mu_mass: f64,
    pub nu_mass: f64,
    /// `|A mu(B) - B mu(B)| - (defect + swapped defect)`; nonpositive when the
    /// comparison identity is in force.
    pub lemma_gap: f64,
    /// `|(mu(B) - nu(B)) - (t2 - t1)|` for pairs of complete Parseval families.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
    pub trunc_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremTable {
    pub label: String,
    /// Both families are complete Parseval frames.
    pub parseval: bool,
    pub rows: Vec<TheoremRow>,
    pub all_hold: bool,
}

/// Theorem-table rows from localization rows.
pub fn theorem_table_from_rows(label: &str, rows: &[LocalizationRow], tol: f64, parseval: bool) -> Result<TheoremTable> {
    let rows = rows
        .iter()
        .map(|row| {
            if !(row.mu_mass > 0.0) {
                return Err(Error::ReferenceVanishes { center: row.center.clone(), radius: row.r });
            }
            let a = 1.0;
            let b = row.nu_mass / row.mu_mass;
            let c = row.eps_eff;
            let rhs = b + c * (1.0 + b);
            let slack = tol + row.trunc_bound / row.mu_mass;
            Ok(TheoremRow {
                center: row.center.clone(),
                r: row.r,
                a,
                b,
                c,
                lhs: a,
                rhs,
                slack,
                holds: a <= rhs + slack,
                mu_mass: row.mu_mass,
                nu_mass: row.nu_mass,
                lemma_gap: (a * row.mu_mass - b * row.mu_mass).abs() - 2.0 * row.defect,
                identity_residual: parseval
                    .then(|| ((row.mu_mass - row.nu_mass) - row.signed_defect()).abs()),
                trunc_bound: row.trunc_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(TheoremTable { label: label.to_string(), parseval, rows, all_hold })
}

/// Localization rows and the theorem table for a self-dual pair, with `A = 1`.
pub fn theorem_main_table(
    pair: &FramePairSpec,
    centers: &[Vec<f64>],
    radii: &[f64],
    cfg: &LocalizationConfig,
    tol: f64,
    parseval: bool,
) -> Result<(Vec<LocalizationRow>, TheoremTable)> {
    let rows = localization_table(pair, centers, radii, cfg)?;
    let table = theorem_table_from_rows("pair", &rows, tol, parseval)?;
    Ok((rows, table))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub label: String,
    /// Measure being counted.
    pub numerator: String,
    /// Reference measure.
    pub reference: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub estimate: DensityEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRecord {
    pub label: String,
    pub index: String,
    pub r: f64,
    /// Closed-form value where the kernel has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
    pub tail: TailSup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HapRecord {
    pub label: String,
    pub r: f64,
    pub result: HapResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValueRecord {
    pub r: f64,
    pub probes: usize,
    /// `f = k_a` at each probe.
    pub self_ratio_min: f64,
    pub self_ratio_max: f64,
    pub c_r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramRecord {
    pub label: String,
    pub study: GramStudy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalityRecord {
    pub points: usize,
    /// `max |G - I|` with closed-form entries.
    pub closed_form_error: f64,
    /// `max |G - I|` with Fourier-side quadrature entries.
    pub fourier_error: f64,
    /// `max |G_closed - G_fourier|`.
    pub route_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub label: String,
    pub rows: Vec<LocalizationRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryRow {
    pub embedding: String,
    pub function: usize,
    pub norm_sq: f64,
    pub energy: f64,
    pub tail_bound: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSummary {
    pub instances: usize,
    pub draws: usize,
    pub rows: Vec<FiniteRow>,
    pub oracles: Vec<FrameBoundOracle>,
}

/// A frame with known bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBoundOracle {
    pub name: String,
    pub expected: [f64; 2],
    pub computed: [f64; 2],
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub config: ScenarioConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub densities: Vec<DensityRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tails: Vec<TailRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hap: Vec<HapRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_value: Option<MeanValueRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthonormality: Option<OrthonormalityRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gram_studies: Vec<GramRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub localization: Vec<LocalizationRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theorem_tables: Vec<TheoremTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub isometry: Vec<IsometryRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite: Option<FiniteSummary>,
    pub verdicts: Vec<VerdictRecord>,
}

impl ScenarioReport {
    fn empty(scenario: Scenario, cfg: &ScenarioConfig) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            scenario,
            seed: cfg.seed,
            config: cfg.clone(),
            densities: Vec::new(),
            tails: Vec::new(),
            hap: Vec::new(),
            mean_value: None,
            orthonormality: None,
            gram_studies: Vec::new(),
            localization: Vec::new(),
            theorem_tables: Vec::new(),
            isometry: Vec::new(),
            finite: None,
            verdicts: Vec::new(),
        }
    }

    /// Every verdict is pass, vacuous-consistent or critical-no-claim.
    pub fn ok(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict.is_ok())
    }

    pub fn verdict(&self, id: &str) -> Option<&VerdictRecord> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes the JSON report and one CSV per nonempty table into `dir`.
    /// Returns the paths written.
    pub fn write(&self, dir: &Path, json_name: &str, csv: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(json_name);
        std::fs::write(&json, self.to_json()?)?;
        written.push(json);
        if csv {
            written.extend(self.write_csv_tables(dir)?);
        }
        Ok(written)
    }

    fn write_csv_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let mut table = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
            if rows.is_empty() {
                return Ok(());
            }
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            out.push(path);
            Ok(())
        };
        let fmt_center = |c: &[f64]| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");

        table(
            "densities.csv",
            &["label", "r", "sup_ratio", "inf_ratio"],
            self.densities
                .iter()
                .flat_map(|d| {
                    d.estimate.per_radius.iter().map(move |row| {
                        vec![d.label.clone(), row.r.to_string(), row.sup_ratio.to_string(), row.inf_ratio.to_string()]
                    })
                })
                .collect(),
        )?;
        table(
            "localization.csv",
            &["label", "center", "r", "defect", "t1", "t2", "normalizer", "eps_eff", "trunc_bound"],
            self.localization
                .iter()
                .flat_map(|l| {
                    l.rows.iter().map(move |r| {
                        vec![
                            l.label.clone(),
                            fmt_center(&r.center),
                            r.r.to_string(),
                            r.defect.to_string(),
                            r.t1.to_string(),
                            r.t2.to_string(),
                            r.normalizer.to_string(),
                            r.eps_eff.to_string(),
                            r.trunc_bound.to_string(),
                        ]
                    })
                })
                .collect(),
        )?;
        table(
            "gram.csv",
            &["label", "window", "n", "gram_min", "gram_min_nonzero", "gram_max", "frame_lower", "frame_upper"],
            self.gram_studies
                .iter()
                .flat_map(|g| {
                    g.study.rows.iter().map(move |r| {
                        vec![
                            g.label.clone(),
                            r.window.to_string(),
                            r.n.to_string(),
                            r.gram_min.to_string(),
                            r.gram_min_nonzero.to_string(),
                            r.gram_max.to_string(),
                            r.frame_lower.to_string(),
                            r.frame_upper.to_string(),
                        ]
                    })
                })
                .collect(),
        )?;
        table(
            "theorem.csv",
            &["label", "center", "r", "a", "b", "c", "rhs", "slack", "holds"],
            self.theorem_tables
                .iter()
                .flat_map(|t| {
                    t.rows.iter().map(move |r| {
                        vec![
                            t.label.clone(),
                            fmt_center(&r.center),
                            r.r.to_string(),
                            r.a.to_string(),
                            r.b.to_string(),
                            r.c.to_string(),
                            r.rhs.to_string(),
                            r.slack.to_string(),
                            r.holds.to_string(),
                        ]
                    })
                })
                .collect(),
        )?;
        if let Some(f) = &self.finite {
            table(
                "finite.csv",
                &["index", "n", "m_f", "m_g", "residual", "projection_error", "dual_form_error", "idempotence"],
                f.rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.index.to_string(),
                            r.n.to_string(),
                            r.m_f.to_string(),
                            r.m_g.to_string(),
                            r.comparison.residual.to_string(),
                            r.projection_error.to_string(),
                            r.dual_form_error.to_string(),
                            r.idempotence.to_string(),
                        ]
                    })
                    .collect(),
            )?;
        }
        Ok(out)
    }
}

/// Runs the scenario named in the config.
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let scenario = cfg.validate()?;
    let mut report = ScenarioReport::empty(scenario, cfg);
    match scenario {
        Scenario::FiniteOracle => scenarios::finite_oracle(cfg, &mut report)?,
        Scenario::PaleyWiener => scenarios::paley_wiener(cfg, &mut report)?,
        Scenario::Fock => scenarios::lattice_scenario(cfg, Scenario::Fock, &mut report)?,
        Scenario::Gabor => scenarios::lattice_scenario(cfg, Scenario::Gabor, &mut report)?,
        Scenario::DualEmbedding => scenarios::dual_embedding(cfg, &mut report)?,
    }
    Ok(report)
}

/// Runs and writes the report into `cfg.output.dir` (or `default_dir`).
pub fn run_and_write(cfg: &ScenarioConfig, default_dir: &Path) -> Result<(ScenarioReport, Vec<PathBuf>)> {
    let report = run(cfg)?;
    let dir = cfg.output.dir.clone().unwrap_or_else(|| default_dir.to_path_buf());
    let json = cfg.output.json.clone().unwrap_or_else(|| "report.json".to_string());
    let paths = report.write(&dir, &json, cfg.output.csv)?;
    Ok((report, paths))
}
