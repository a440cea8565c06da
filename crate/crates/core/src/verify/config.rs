use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::gram::GramOptions;
use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::space::{Atoms, Lattice, MeasureSpec, Point, PointSet, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    FiniteOracle,
    PaleyWiener,
    Fock,
    Gabor,
    DualEmbedding,
}

impl Scenario {
    pub const ALL: [Scenario; 5] =
        [Scenario::FiniteOracle, Scenario::PaleyWiener, Scenario::Fock, Scenario::Gabor, Scenario::DualEmbedding];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FiniteOracle => "finite-oracle",
            Scenario::PaleyWiener => "paley-wiener",
            Scenario::Fock => "fock",
            Scenario::Gabor => "gabor",
            Scenario::DualEmbedding => "dual-embedding",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Serializable description of an index measure.
///
/// `{"lebesgue": {"dim": 2}}`, `{"lattice": {"scale": 0.5, "dim": 2}}`,
/// `{"points": {"csv": "pts.csv"}}`, `{"atomic": {"coords": [[0.0]], "weights": [1.0]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    Lebesgue {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<f64>,
    },
    Lattice(Lattice),
    Points {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coords: Option<Vec<Vec<f64>>>,
        /// Declared separation; the set is rejected when two points are closer.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        separation: Option<f64>,
    },
    Atomic {
        coords: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

fn points_from(coords: &[Vec<f64>]) -> Result<Vec<Point>> {
    coords.iter().map(|c| Point::new(c.clone())).collect()
}

impl MeasureConfig {
    pub fn build(&self) -> Result<MeasureSpec> {
        match self {
            MeasureConfig::Lebesgue { dim, weight } => {
                if *dim == 0 {
                    return Err(Error::InvalidInput("lebesgue dimension must be >= 1".into()));
                }
                let weight = match weight {
                    None => Weight::Unit,
                    Some(w) if *w > 0.0 && w.is_finite() => Weight::Constant(*w),
                    Some(w) => return Err(Error::InvalidInput(format!("lebesgue weight must be positive, got {w}"))),
                };
                Ok(MeasureSpec::Lebesgue { dim: *dim, weight })
            }
            MeasureConfig::Atomic { coords, weights } => MeasureSpec::atomic(points_from(coords)?, weights.clone()),
            _ => Ok(MeasureSpec::Counting(self.atoms()?)),
        }
    }

    /// Support of a counting measure; errors for the other variants.
    pub fn atoms(&self) -> Result<Atoms> {
        match self {
            MeasureConfig::Lattice(l) => {
                l.validate()?;
                Ok(Atoms::Lattice(l.clone()))
            }
            MeasureConfig::Points { csv, coords, separation } => match (csv, coords) {
                (Some(path), None) => Ok(Atoms::Set(PointSet::from_csv_path(path, *separation)?)),
                (None, Some(c)) => Ok(Atoms::Set(PointSet::new(points_from(c)?, *separation)?)),
                _ => Err(Error::InvalidInput("points need exactly one of `csv` and `coords`".into())),
            },
            _ => Err(Error::InvalidInput("expected a lattice or a point set".into())),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            MeasureConfig::Lebesgue { dim, .. } => Some(*dim),
            MeasureConfig::Lattice(l) => Some(l.dim),
            MeasureConfig::Points { coords: Some(c), .. } | MeasureConfig::Atomic { coords: c, .. } => {
                c.first().map(Vec::len)
            }
            MeasureConfig::Points { .. } => None,
        }
    }

    fn referenced_file(&self) -> Option<&Path> {
        match self {
            MeasureConfig::Points { csv: Some(p), .. } => Some(p),
            _ => None,
        }
    }

    /// Rebases relative file paths onto `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        if let MeasureConfig::Points { csv: Some(p), .. } = self {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

/// A discrete family `{k_gamma : gamma in Lambda}` under study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub label: String,
    pub index: MeasureConfig,
}

impl FamilyConfig {
    pub fn lattice(label: impl Into<String>, lattice: Lattice) -> Self {
        Self { label: label.into(), index: MeasureConfig::Lattice(lattice) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityOptions {
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Overrides the geometric schedule `4, 8, ..., r_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_density_tolerance")]
    pub tolerance: f64,
}

fn default_r_max() -> f64 {
    128.0
}
fn default_density_tolerance() -> f64 {
    crate::density::DEFAULT_TOLERANCE
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { r_max: default_r_max(), radii: None, tolerance: default_density_tolerance() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationOptions {
    #[serde(default = "default_loc_radii")]
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_pair_h")]
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Slack added to every theorem-table inequality.
    #[serde(default = "default_inequality_tolerance")]
    pub tolerance: f64,
}

fn default_loc_radii() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}
fn default_pair_h() -> f64 {
    crate::localization::DEFAULT_PAIR_H
}
fn default_inequality_tolerance() -> f64 {
    1e-9
}

impl Default for LocalizationOptions {
    fn default() -> Self {
        Self {
            radii: default_loc_radii(),
            center: None,
            h: default_pair_h(),
            cutoff: None,
            tolerance: default_inequality_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeOptions {
    /// Radii for the weak-localization tail. Kernel-specific default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_radii: Option<Vec<f64>>,
    #[serde(default = "default_probe_h")]
    pub h: f64,
    #[serde(default = "default_probe_margin")]
    pub truncation_margin: f64,
    #[serde(default = "default_hap_radius")]
    pub hap_radius: f64,
    /// Mean-value ball radius. Kernel-specific default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_value_radius: Option<f64>,
    /// Relative tolerance against closed-form Gaussian laws.
    #[serde(default = "default_law_tolerance")]
    pub law_tolerance: f64,
    /// Allowed spread of a translation-invariant quantity over the probes.
    #[serde(default = "default_center_tolerance")]
    pub center_tolerance: f64,
}

fn default_probe_h() -> f64 {
    0.02
}
fn default_probe_margin() -> f64 {
    crate::quad::DEFAULT_TRUNCATION_MARGIN
}
fn default_hap_radius() -> f64 {
    2.0
}
fn default_law_tolerance() -> f64 {
    1e-4
}
fn default_center_tolerance() -> f64 {
    1e-6
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            tail_radii: None,
            h: default_probe_h(),
            truncation_margin: default_probe_margin(),
            hap_radius: default_hap_radius(),
            mean_value_radius: None,
            law_tolerance: default_law_tolerance(),
            center_tolerance: default_center_tolerance(),
        }
    }
}

/// Orthonormality of the Nyquist family, closed form against the Fourier side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthonormalityOptions {
    #[serde(default = "default_half_range")]
    pub half_range: i64,
    #[serde(default = "default_closed_tolerance")]
    pub closed_form_tolerance: f64,
    #[serde(default = "default_fourier_tolerance")]
    pub fourier_tolerance: f64,
}

fn default_half_range() -> i64 {
    20
}
fn default_closed_tolerance() -> f64 {
    1e-8
}
fn default_fourier_tolerance() -> f64 {
    1e-6
}

impl Default for OrthonormalityOptions {
    fn default() -> Self {
        Self {
            half_range: default_half_range(),
            closed_form_tolerance: default_closed_tolerance(),
            fourier_tolerance: default_fourier_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteOptions {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_identity_tolerance")]
    pub identity_tolerance: f64,
    #[serde(default = "default_identity_tolerance")]
    pub projection_tolerance: f64,
    #[serde(default = "default_idempotence_tolerance")]
    pub idempotence_tolerance: f64,
    /// Draws allowed before giving up on numerically unambiguous instances.
    #[serde(default = "default_max_draws")]
    pub max_draws: usize,
}

fn default_instances() -> usize {
    100
}
fn default_identity_tolerance() -> f64 {
    1e-10
}
fn default_idempotence_tolerance() -> f64 {
    1e-12
}
fn default_max_draws() -> usize {
    1000
}

impl Default for FiniteOptions {
    fn default() -> Self {
        Self {
            instances: default_instances(),
            identity_tolerance: default_identity_tolerance(),
            projection_tolerance: default_identity_tolerance(),
            idempotence_tolerance: default_idempotence_tolerance(),
            max_draws: default_max_draws(),
        }
    }
}

/// Sampling isometry `sum |f(gamma)|^2 = |f|^2` on random kernel combinations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryOptions {
    #[serde(default = "default_test_functions")]
    pub test_functions: usize,
    /// Atoms are summed within this distance of the origin.
    #[serde(default = "default_isometry_window")]
    pub window: f64,
    #[serde(default = "default_isometry_tolerance")]
    pub tolerance: f64,
}

fn default_test_functions() -> usize {
    8
}
fn default_isometry_window() -> f64 {
    4096.0
}
fn default_isometry_tolerance() -> f64 {
    1e-6
}

impl Default for IsometryOptions {
    fn default() -> Self {
        Self {
            test_functions: default_test_functions(),
            window: default_isometry_window(),
            tolerance: default_isometry_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default = "default_true")]
    pub csv: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: None, json: None, csv: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Kept as text so an unknown name is reported as such.
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    /// Discrete families. Scenario-specific default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<FamilyConfig>>,
    #[serde(default)]
    pub density: DensityOptions,
    #[serde(default)]
    pub localization: LocalizationOptions,
    #[serde(default)]
    pub probes: ProbeOptions,
    /// Scenario-specific default windows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<GramOptions>,
    #[serde(default)]
    pub orthonormality: OrthonormalityOptions,
    #[serde(default)]
    pub finite: FiniteOptions,
    #[serde(default)]
    pub isometry: IsometryOptions,
    /// Where results go; left out of the report echo.
    #[serde(default, skip_serializing)]
    pub output: OutputOptions,
}

impl ScenarioConfig {
    /// A config with every option at its default.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario: scenario.name().to_string(),
            seed: 0,
            kernel: None,
            families: None,
            density: DensityOptions::default(),
            localization: LocalizationOptions::default(),
            probes: ProbeOptions::default(),
            gram: None,
            orthonormality: OrthonormalityOptions::default(),
            finite: FiniteOptions::default(),
            isometry: IsometryOptions::default(),
            output: OutputOptions::default(),
        }
    }

    /// Parses JSON; schema violations carry the JSON path of the offending
    /// value.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Ok(cfg)
    }

    /// Reads a config file; relative point-set paths resolve against the
    /// file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = Self::from_json_str(&text)?;
        if let Some(dir) = path.parent() {
            for fam in cfg.families.iter_mut().flatten() {
                fam.index.rebase(dir);
            }
        }
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.parse()
    }

    /// Checks the scenario name, schedules and referenced files.
    pub fn validate(&self) -> Result<Scenario> {
        let sc = self.scenario()?;
        let bad = |path: &str, message: String| Err(Error::Config { path: path.into(), message });
        if self.localization.radii.is_empty() {
            return bad("localization.radii", "schedule is empty".into());
        }
        if self.localization.radii.iter().any(|r| !(*r > 0.0)) || self.localization.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("localization.radii", "radii must be positive and strictly increasing".into());
        }
        if let Some(r) = &self.density.radii {
            if r.is_empty() {
                return bad("density.radii", "schedule is empty".into());
            }
        }
        if !(self.density.r_max > 0.0) {
            return bad("density.r_max", format!("must be positive, got {}", self.density.r_max));
        }
        if let Some(t) = &self.probes.tail_radii {
            if t.is_empty() {
                return bad("probes.tail_radii", "schedule is empty".into());
            }
        }
        if let Some(g) = &self.gram {
            g.validate().map_err(|e| Error::Config { path: "gram".into(), message: e.to_string() })?;
        }
        for (i, fam) in self.families.iter().flatten().enumerate() {
            if let Some(p) = fam.index.referenced_file() {
                if !p.exists() {
                    return bad(&format!("families[{i}].index"), format!("file {} does not exist", p.display()));
                }
            }
        }
        if sc == Scenario::FiniteOracle && self.finite.instances == 0 {
            return bad("finite.instances", "must be at least 1".into());
        }
        Ok(sc)
    }
}
