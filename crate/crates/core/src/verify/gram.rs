//! Finite-window spectra of normalized-kernel families.
//!
//! The raw Gram matrix of `{k_gamma : gamma in B(c, R)}` answers the Riesz
//! question directly: its smallest eigenvalue only decreases as the window
//! grows. The frame question concerns the nonzero spectrum of the infinite
//! Gram operator, which equals the spectrum of the frame operator. Truncated
//! Gram matrices of oversampled families have many eigenvalues near zero, so
//! the frame floor is estimated on a trial space instead: `V` is spanned by
//! normalized kernels on a fine grid inside the window, and the estimate is
//! the minimum of `sum_gamma |<f, k_gamma>|^2 / |f|^2` over `f` in `V`, with
//! `gamma` running over a margin-enlarged window.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::CMatrix;
use crate::quad::TailModel;
use crate::space::{Atoms, Lattice, Shell};

/// Windows, trial grid and evidence thresholds for a Gram study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramOptions {
    /// Window radii, strictly increasing.
    pub windows: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Spacing of the trial grid.
    #[serde(default = "default_trial_spacing")]
    pub trial_spacing: f64,
    /// Trial directions with `M`-eigenvalue below `rank_cutoff * max` are dropped.
    #[serde(default = "default_rank_cutoff")]
    pub rank_cutoff: f64,
    /// Extra radius for the family in the frame estimate. Defaults to where
    /// a Gaussian envelope drops below `1e-12`, or `64 * window` for
    /// power-law tails, whose truncation loss scales like `window / margin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Eigenvalue floor that counts as bounded away from zero.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Maximum relative change between the last two windows.
    #[serde(default = "default_stabilization")]
    pub stabilization: f64,
}

fn default_trial_spacing() -> f64 {
    0.5
}
fn default_rank_cutoff() -> f64 {
    1e-9
}
fn default_floor() -> f64 {
    0.01
}
fn default_stabilization() -> f64 {
    0.10
}

/// Threshold below which a raw Gram eigenvalue counts as zero, relative to
/// the largest one.
pub const GRAM_ZERO_RELATIVE: f64 = 1e-10;
const HEAVY_TAIL_MARGIN_FACTOR: f64 = 64.0;

impl GramOptions {
    pub fn new(windows: Vec<f64>) -> Self {
        Self {
            windows,
            center: None,
            trial_spacing: default_trial_spacing(),
            rank_cutoff: default_rank_cutoff(),
            margin: None,
            floor: default_floor(),
            stabilization: default_stabilization(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(Error::InvalidInput("gram study needs at least one window".into()));
        }
        if self.windows.iter().any(|w| !(*w > 0.0 && w.is_finite())) || self.windows.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidInput("gram windows must be positive and strictly increasing".into()));
        }
        for (name, v) in [("trial_spacing", self.trial_spacing), ("floor", self.floor), ("stabilization", self.stabilization)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("gram {name} must be positive, got {v}")));
            }
        }
        if !(self.rank_cutoff > 0.0 && self.rank_cutoff < 1.0) {
            return Err(Error::InvalidInput(format!("gram rank_cutoff must lie in (0, 1), got {}", self.rank_cutoff)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramRow {
    pub window: f64,
    pub margin: f64,
    /// Family members inside the window.
    pub n: usize,
    pub gram_min: f64,
    /// Smallest eigenvalue above `GRAM_ZERO_RELATIVE * gram_max`.
    pub gram_min_nonzero: f64,
    pub gram_max: f64,
    /// Lower frame-bound estimate on the trial space.
    pub frame_lower: f64,
    /// Upper frame-bound estimate on the trial space.
    pub frame_upper: f64,
    /// Dimension of the trial space.
    pub trial_rank: usize,
    /// Family members used by the frame estimate.
    pub family_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl GramRow {
    fn skipped(window: f64, margin: f64, note: &str) -> Self {
        Self {
            window,
            margin,
            n: 0,
            gram_min: f64::NAN,
            gram_min_nonzero: f64::NAN,
            gram_max: f64::NAN,
            frame_lower: f64::NAN,
            frame_upper: f64::NAN,
            trial_rank: 0,
            family_size: 0,
            note: Some(note.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramStudy {
    pub center: Vec<f64>,
    pub rows: Vec<GramRow>,
    /// Frame floor above `floor` and stable over the last two usable windows.
    pub frame_evidence: bool,
    /// Smallest raw Gram eigenvalue above `floor` and stable likewise.
    pub riesz_evidence: bool,
    /// The raw `gram_min_nonzero` passes the same rule.
    pub raw_nonzero_evidence: bool,
}

/// The last two finite values both exceed `floor` and differ by at most
/// `rel` relative to the larger.
fn stable_above(values: &[f64], floor: f64, rel: f64) -> bool {
    let usable: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if usable.len() < 2 {
        return false;
    }
    let a = usable[usable.len() - 2];
    let b = usable[usable.len() - 1];
    a > floor && b > floor && (a - b).abs() <= rel * a.max(b)
}

/// Eigen-decomposition of the trial-space Gram matrix, whitened.
struct TrialSpace {
    points: Vec<Vec<f64>>,
    /// `V_k / sqrt(lambda_k)` for the retained directions, `points x rank`.
    basis: CMatrix,
}

/// Caches trial spaces per kernel, window and grid; they do not depend on the
/// family under study.
#[derive(Default)]
pub struct TrialCache {
    spaces: HashMap<String, Arc<TrialSpace>>,
}

impl TrialCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, kernel: &KernelSpec, center: &[f64], r: f64, opts: &GramOptions) -> Result<Arc<TrialSpace>> {
        let cacheable = !matches!(kernel, KernelSpec::Tabulated(_));
        let key = format!("{kernel:?}|{center:?}|{r}|{}|{}", opts.trial_spacing, opts.rank_cutoff);
        if cacheable {
            if let Some(s) = self.spaces.get(&key) {
                return Ok(Arc::clone(s));
            }
        }
        let space = Arc::new(build_trial_space(kernel, center, r, opts)?);
        if cacheable {
            self.spaces.insert(key, Arc::clone(&space));
        }
        Ok(space)
    }
}

fn build_trial_space(kernel: &KernelSpec, center: &[f64], r: f64, opts: &GramOptions) -> Result<TrialSpace> {
    let grid = Atoms::Lattice(Lattice::new(opts.trial_spacing, center.len())?.with_shift(center.to_vec())?);
    let nodes = grid.in_shell(Shell { center, inner: None, outer: r });
    let points: Vec<Vec<f64>> = nodes.iter().map(|(x, _)| x.to_vec()).collect();
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    let eig = kernel.normalized_gram(&refs).hermitian_eigen(true)?;
    let vectors = eig.vectors.expect("vectors requested");
    let top = eig.values.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > opts.rank_cutoff * top).collect();
    let basis = CMatrix::from_fn(points.len(), kept.len(), |i, j| vectors[(i, kept[j])] / eig.values[kept[j]].sqrt());
    Ok(TrialSpace { points, basis })
}

fn family_points(gamma: &Atoms, center: &[f64], r: f64) -> Vec<Vec<f64>> {
    gamma.in_shell(Shell { center, inner: None, outer: r }).iter().map(|(x, _)| x.to_vec()).collect()
}

/// Extreme eigenvalues of `sum_gamma |<f, k_gamma>|^2` on the trial space.
fn frame_estimate(kernel: &KernelSpec, family: &[Vec<f64>], trial: &TrialSpace) -> Result<(f64, f64)> {
    if trial.basis.cols() == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    // B[gamma][j] = <k_{x_j}, k_gamma>
    let b = CMatrix::from_fn(family.len(), trial.points.len(), |g, j| kernel.normalized(&family[g], &trial.points[j]));
    let c = b.matmul(&trial.basis);
    let h = c.adjoint().matmul(&c);
    let values = h.eigenvalues_hermitian()?;
    Ok((values[0], *values.last().expect("nonempty")))
}

/// Raw and trial-space spectra of `{k_gamma}` over growing windows.
pub fn gram_truncation_study(
    kernel: &KernelSpec,
    gamma: &Atoms,
    opts: &GramOptions,
    cache: &mut TrialCache,
) -> Result<GramStudy> {
    opts.validate()?;
    let dim = kernel.point_dim();
    if let Some(d) = gamma.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: d });
        }
    }
    let center = opts.center.clone().unwrap_or_else(|| vec![0.0; dim]);
    if center.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
    }
    let margin_for = |r: f64| match (opts.margin, kernel.modulus_sq_tail()) {
        (Some(m), _) => m,
        (None, Some(t @ TailModel::Gaussian { .. })) => t.radius_below(1e-12),
        (None, _) => HEAVY_TAIL_MARGIN_FACTOR * r,
    };

    let mut rows = Vec::with_capacity(opts.windows.len());
    for &r in &opts.windows {
        let margin = margin_for(r);
        let inside = family_points(gamma, &center, r);
        if inside.is_empty() {
            rows.push(GramRow::skipped(r, margin, "no family members in window"));
            continue;
        }
        let refs: Vec<&[f64]> = inside.iter().map(Vec::as_slice).collect();
        let values = kernel.normalized_gram(&refs).eigenvalues_hermitian()?;
        let gram_max = *values.last().expect("nonempty");
        let gram_min_nonzero =
            values.iter().copied().find(|v| *v > GRAM_ZERO_RELATIVE * gram_max).unwrap_or(f64::NAN);

        let trial = cache.get(kernel, &center, r, opts)?;
        let family = family_points(gamma, &center, r + margin);
        let (frame_lower, frame_upper) = frame_estimate(kernel, &family, &trial)?;
        rows.push(GramRow {
            window: r,
            margin,
            n: inside.len(),
            gram_min: values[0],
            gram_min_nonzero,
            gram_max,
            frame_lower,
            frame_upper,
            trial_rank: trial.basis.cols(),
            family_size: family.len(),
            note: None,
        });
    }

    let col = |f: fn(&GramRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let frame_evidence = stable_above(&col(|r| r.frame_lower), opts.floor, opts.stabilization);
    let riesz_evidence = stable_above(&col(|r| r.gram_min), opts.floor, opts.stabilization);
    let raw_nonzero_evidence = stable_above(&col(|r| r.gram_min_nonzero), opts.floor, opts.stabilization);
    Ok(GramStudy { center, rows, frame_evidence, riesz_evidence, raw_nonzero_evidence })
}

/// `<k_y, k_x>` for Paley-Wiener kernels computed on the Fourier side:
/// `(1 / 2b) int_{-b}^{b} exp(i xi (x - y)) d xi` by panelled Gauss-Legendre.
pub fn pw_frequency_inner(band: f64, x: f64, y: f64) -> Complex64 {
    const NODES: usize = 10;
    let (t, w) = crate::quad::gauss_legendre(NODES);
    let d = x - y;
    let panels = (2.0 * band * d.abs()).ceil() as usize + 8;
    let width = 2.0 * band / panels as f64;
    let mut re = crate::quad::CompensatedSum::default();
    let mut im = crate::quad::CompensatedSum::default();
    for p in 0..panels {
        let mid = -band + width * (p as f64 + 0.5);
        for (ti, wi) in t.iter().zip(&w) {
            let xi = mid + 0.5 * width * ti;
            let (s, c) = (xi * d).sin_cos();
            re.add(0.5 * width * wi * c);
            im.add(0.5 * width * wi * s);
        }
    }
    Complex64::new(re.value(), im.value()) / (2.0 * band)
}
