//! Localization diagnostics for pairs of normalized-kernel families.
//!
//! A pair shares one kernel and carries two index measures: `f_x = k_x` over
//! `mu` and `g_x = k_x` over `nu`. Both families are self-dual, so every
//! cross term reduces to `|<k_x, k_y>|^2`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quad::{
    integrate_ball, integrate_complement, measure_nodes, uniform_tail_bound, CompensatedSum, QuadConfig, TailModel,
    DEFAULT_TRUNCATION_MARGIN,
};
use crate::space::{dist_sq, Atoms, Ball, MeasureSpec, Point, Shell, WeightedNodes};

#[derive(Clone, Debug)]
pub struct FramePairSpec {
    pub kernel: KernelSpec,
    /// Index measure of the `f` family.
    pub mu: MeasureSpec,
    /// Index measure of the `g` family.
    pub nu: MeasureSpec,
    pub self_dual: bool,
}

impl FramePairSpec {
    pub fn new(kernel: KernelSpec, mu: MeasureSpec, nu: MeasureSpec) -> Result<Self> {
        let d = kernel.point_dim();
        for m in [&mu, &nu] {
            if let Some(md) = m.dim() {
                if md != d {
                    return Err(Error::DimensionMismatch { expected: d, got: md });
                }
            }
        }
        Ok(Self { kernel, mu, nu, self_dual: true })
    }

    /// The same pair with the roles of the two families exchanged.
    pub fn swapped(&self) -> Self {
        Self { kernel: self.kernel.clone(), mu: self.nu.clone(), nu: self.mu.clone(), self_dual: self.self_dual }
    }
}

/// Quadrature settings for the double integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationConfig {
    pub quad: QuadConfig,
    /// Pairs farther apart than this are dropped and covered by the
    /// truncation bound. Defaults to the distance where the kernel envelope
    /// falls below `1e-18`, capped at `max_cutoff`.
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "default_max_cutoff")]
    pub max_cutoff: f64,
}

/// Panel width for the double integrals. Integrands are smooth on every
/// panel because panel edges follow the ball boundary.
pub const DEFAULT_PAIR_H: f64 = 0.05;

fn default_max_cutoff() -> f64 {
    256.0
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self { quad: QuadConfig::new(DEFAULT_PAIR_H, DEFAULT_TRUNCATION_MARGIN), cutoff: None, max_cutoff: default_max_cutoff() }
    }
}

impl LocalizationConfig {
    fn cutoff_for(&self, tail: &TailModel) -> f64 {
        self.cutoff.unwrap_or_else(|| tail.radius_below(1e-18).min(self.max_cutoff))
    }
}

fn kernel_tail(k: &KernelSpec) -> Result<TailModel> {
    k.modulus_sq_tail()
        .ok_or_else(|| Error::InvalidInput("kernel has no tail envelope; supply one for tabulated kernels".into()))
}

/// `int_{y in B^c} int_{x in B} |<k_x, k_y>|^2 dI(x) dO(y)` with its
/// truncation bound.
pub fn cross_tail(
    kernel: &KernelSpec,
    outer: &MeasureSpec,
    inner: &MeasureSpec,
    b: &Ball,
    cfg: &LocalizationConfig,
) -> Result<(f64, f64)> {
    let tail = kernel_tail(kernel)?;
    let t = cfg.cutoff_for(&tail);
    let c = b.center().coords();
    let r = b.radius();
    let inner_lo = if r > t { Some(r - t) } else { None };
    let inner_nodes = measure_nodes(inner, Shell { center: c, inner: inner_lo, outer: r }, cfg.quad.h)?;
    let outer_nodes = measure_nodes(outer, Shell { center: c, inner: Some(r), outer: r + t }, cfg.quad.h)?;
    let value = pair_sum(kernel, &inner_nodes, &outer_nodes, t);
    let inner_mass = inner.ball_mass(b)?;
    let bound = inner_mass * uniform_tail_bound(outer, t, &tail)?;
    Ok((value, bound))
}

/// `sum_{x in A} sum_{y in B, |x - y| <= t} w_x w_y |<k_x, k_y>|^2`, in the
/// order of `a`.
fn pair_sum(kernel: &KernelSpec, a: &WeightedNodes, b: &WeightedNodes, t: f64) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let dim = a.dim;
    let cell_of = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v / t).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for i in 0..b.len() {
        grid.entry(cell_of(b.node(i))).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let o = (k % 3) as i64 - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let t2 = t * t;
    let chunk = 4096;
    let partials: Vec<CompensatedSum> = (0..a.len().div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let mut acc = CompensatedSum::default();
            let mut key = vec![0i64; dim];
            for i in (ci * chunk)..((ci + 1) * chunk).min(a.len()) {
                let x = a.node(i);
                let base = cell_of(x);
                let mut local = CompensatedSum::default();
                for off in &offsets {
                    for k in 0..dim {
                        key[k] = base[k] + off[k];
                    }
                    if let Some(list) = grid.get(&key) {
                        for &j in list {
                            let y = b.node(j);
                            if dist_sq(x, y) <= t2 {
                                local.add(b.weights[j] * kernel.modulus_sq(x, y));
                            }
                        }
                    }
                }
                acc.add(a.weights[i] * local.value());
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleTail {
    /// `int_{B^c} int_B |<f_x, g_y>|^2 d nu(y) d mu(x)`
    pub t1: f64,
    /// `int_{B^c} int_B |<g_x, f_y>|^2 d mu(y) d nu(x)`
    pub t2: f64,
    pub bound1: f64,
    pub bound2: f64,
}

pub fn double_tail(pair: &FramePairSpec, b: &Ball, cfg: &LocalizationConfig) -> Result<DoubleTail> {
    let (t1, bound1) = cross_tail(&pair.kernel, &pair.mu, &pair.nu, b, cfg)?;
    let (t2, bound2) = cross_tail(&pair.kernel, &pair.nu, &pair.mu, b, cfg)?;
    Ok(DoubleTail { t1, t2, bound1, bound2 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRow {
    pub center: Vec<f64>,
    pub r: f64,
    pub defect: f64,
    pub t1: f64,
    pub t2: f64,
    pub normalizer: f64,
    pub eps_eff: f64,
    pub trunc_bound: f64,
    pub mu_mass: f64,
    pub nu_mass: f64,
}

impl LocalizationRow {
    pub fn signed_defect(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// The difference in (L) for a self-dual pair on one ball.
pub fn localization_defect(pair: &FramePairSpec, b: &Ball, cfg: &LocalizationConfig) -> Result<LocalizationRow> {
    if !pair.self_dual {
        return Err(Error::GeneralDualsUnsupported);
    }
    let dt = double_tail(pair, b, cfg)?;
    let mu_mass = pair.mu.ball_mass(b)?;
    let nu_mass = pair.nu.ball_mass(b)?;
    let normalizer = mu_mass + nu_mass;
    let defect = (dt.t2 - dt.t1).abs();
    Ok(LocalizationRow {
        center: b.center().coords().to_vec(),
        r: b.radius(),
        defect,
        t1: dt.t1,
        t2: dt.t2,
        normalizer,
        eps_eff: if normalizer > 0.0 { defect / normalizer } else { 0.0 },
        trunc_bound: dt.bound1 + dt.bound2,
        mu_mass,
        nu_mass,
    })
}

/// Rows for every (center, radius), centers outermost.
pub fn localization_table(
    pair: &FramePairSpec,
    centers: &[Vec<f64>],
    radii: &[f64],
    cfg: &LocalizationConfig,
) -> Result<Vec<LocalizationRow>> {
    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    for c in centers {
        for r in radii {
            rows.push(localization_defect(pair, &Ball::centered(c, *r)?, cfg)?);
        }
    }
    Ok(rows)
}

/// `5^d` probe points `origin + side * k / 5`.
pub fn default_probes(origin: &[f64], side: f64) -> Vec<Point> {
    let dim = origin.len();
    (0..5usize.pow(dim as u32))
        .map(|mut k| {
            let coords = (0..dim)
                .map(|i| {
                    let j = k % 5;
                    k /= 5;
                    origin[i] + side * j as f64 / 5.0
                })
                .collect();
            Point::new(coords).expect("finite probe")
        })
        .collect()
}

/// Probes over the fundamental cell of a lattice index, else the unit cell.
pub fn probes_for(index: &MeasureSpec, dim: usize) -> Vec<Point> {
    match index.lattice() {
        Some(l) => {
            let (o, s) = l.fundamental_cell();
            default_probes(&o, s)
        }
        None => default_probes(&vec![0.0; dim], 1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSup {
    pub value: f64,
    pub min_over_probes: f64,
    pub per_probe: Vec<f64>,
    pub truncation_bound: f64,
    pub node_count: usize,
}

/// `max_x int_{B(x, R)^c} |<k_x, k_y>|^2 d(index)(y)` over the probes.
pub fn tail_sup(kernel: &KernelSpec, index: &MeasureSpec, r: f64, probes: &[Point], cfg: &QuadConfig) -> Result<TailSup> {
    if probes.is_empty() {
        return Err(Error::EmptyGrid("tail_sup needs at least one probe".into()));
    }
    let tail = kernel_tail(kernel)?;
    let cfg = cfg.with_tail(tail);
    let results: Vec<_> = probes
        .iter()
        .map(|x| {
            let b = Ball::new(x.clone(), r)?;
            let xc = x.coords();
            integrate_complement(&|y: &[f64]| kernel.modulus_sq(xc, y), &b, index, &cfg)
        })
        .collect::<Result<_>>()?;
    let per_probe: Vec<f64> = results.iter().map(|r| r.value).collect();
    Ok(TailSup {
        value: per_probe.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_over_probes: per_probe.iter().copied().fold(f64::INFINITY, f64::min),
        truncation_bound: results.iter().map(|r| r.truncation_bound).fold(0.0, f64::max),
        node_count: results.iter().map(|r| r.node_count).sum(),
        per_probe,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HapResult {
    pub value: f64,
    /// Bound on the atoms beyond the summation window.
    pub truncation_bound: f64,
}

/// `max_x sum_{gamma : R < |gamma - x| <= window} |<k_x, k_gamma>|^2`.
/// Without a window, the sum runs to where the kernel envelope is below `1e-20`.
pub fn hap_check(kernel: &KernelSpec, gamma: &Atoms, r: f64, probes: &[Point], window: Option<f64>) -> Result<HapResult> {
    let tail = kernel_tail(kernel)?;
    let w = window.unwrap_or_else(|| r + tail.radius_below(1e-20).min(default_max_cutoff()));
    let m = MeasureSpec::Counting(gamma.clone());
    let mut best = 0.0f64;
    for x in probes {
        if w <= r {
            break;
        }
        let nodes = gamma.in_shell(Shell { center: x.coords(), inner: Some(r), outer: w });
        let s: CompensatedSum = nodes.iter().map(|(y, _)| kernel.modulus_sq(x.coords(), y)).collect();
        best = best.max(s.value());
    }
    let truncation_bound = if gamma_is_empty(gamma) { 0.0 } else { uniform_tail_bound(&m, w.max(r), &tail)? };
    Ok(HapResult { value: best, truncation_bound })
}

fn gamma_is_empty(g: &Atoms) -> bool {
    matches!(g, Atoms::Set(s) if s.is_empty())
}

/// A finite combination `f = sum_j c_j k_{x_j}` of normalized kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub centers: Vec<Point>,
    pub coeffs: Vec<Complex64>,
}

impl TestFunction {
    pub fn kernel_at(x: Point) -> Self {
        Self { centers: vec![x], coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    /// `<f, k_x>`.
    pub fn pair_with(&self, kernel: &KernelSpec, x: &[f64]) -> Complex64 {
        self.centers.iter().zip(&self.coeffs).map(|(p, c)| c * kernel.normalized(x, p.coords())).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValueResult {
    pub c_r: f64,
    /// Ratio per (probe, test function), probes outermost.
    pub ratios: Vec<f64>,
}

/// Empirical mean-value constant
/// `max |<f, k_a>|^2 / int_{B(a, r)} |<f, k_x>|^2 d lambda(x)`.
pub fn mean_value_check(
    kernel: &KernelSpec,
    lambda: &MeasureSpec,
    r: f64,
    probes: &[Point],
    tests: &[TestFunction],
    cfg: &QuadConfig,
) -> Result<MeanValueResult> {
    let mut ratios = Vec::with_capacity(probes.len() * tests.len());
    for a in probes {
        let b = Ball::new(a.clone(), r)?;
        for f in tests {
            let num = f.pair_with(kernel, a.coords()).norm_sqr();
            let den = integrate_ball(&|x: &[f64]| f.pair_with(kernel, x).norm_sqr(), &b, lambda, cfg)?.value;
            if num == 0.0 {
                ratios.push(0.0);
                continue;
            }
            if !(den >= 1e-14 * num) {
                return Err(Error::DegenerateTestFunction { numerator: num, denominator: den });
            }
            ratios.push(num / den);
        }
    }
    let c_r = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MeanValueResult { c_r, ratios })
}
