//! Deterministic quadrature over balls and ball complements in `R^d`, `d <= 4`.
//!
//! Lebesgue integrals use a ball-aligned product rule: the radial coordinate is
//! split into panels at the global breakpoints `k * h` (plus the region's own
//! inner and outer radii), each panel carries a 3-point Gauss-Legendre rule, and
//! the angular directions use a rule whose size depends only on the panel index.
//! Region boundaries therefore never cut through a cell, and a ball plus its
//! complementary shell reuses the same angular grids as the enclosing ball.
//! In `d = 4` the rule falls back to a midpoint tensor grid.
//!
//! Discrete measures are summed exactly over their atoms. All sums use
//! compensated accumulation; panels may be evaluated in parallel but their
//! partial sums are always combined in panel order.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{unit_sphere_area, Atoms, Ball, MeasureSpec, Point, Shell, WeightedNodes};

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Radial envelope `g(|x - c|)` bounding `|f|` outside the truncation radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TailModel {
    /// `amplitude * exp(-rate * rho^2)`
    Gaussian { amplitude: f64, rate: f64 },
    /// `amplitude * rho^-exponent`
    Power { amplitude: f64, exponent: f64 },
}

impl Default for TailModel {
    fn default() -> Self {
        TailModel::Gaussian { amplitude: 1.0, rate: PI }
    }
}

impl TailModel {
    #[inline]
    pub fn envelope(&self, rho: f64) -> f64 {
        match *self {
            TailModel::Gaussian { amplitude, rate } => amplitude * (-rate * rho * rho).exp(),
            TailModel::Power { amplitude, exponent } => {
                if rho <= 0.0 {
                    f64::INFINITY
                } else {
                    amplitude * rho.powf(-exponent)
                }
            }
        }
    }

    /// `int_{|v| > r} g(|v|) dv` over `R^d`.
    pub fn lebesgue_tail(&self, r: f64, dim: usize) -> Result<f64> {
        let area = unit_sphere_area(dim);
        let d = dim as f64;
        match *self {
            TailModel::Gaussian { amplitude, rate } => {
                let s = d / 2.0;
                let x = rate * r.max(0.0) * r.max(0.0);
                let upper = upper_gamma_half_integer(dim, x);
                Ok(amplitude * area * 0.5 * rate.powf(-s) * upper)
            }
            TailModel::Power { amplitude, exponent } => {
                if exponent <= d {
                    return Err(Error::TailNotIntegrable {
                        dim,
                        detail: format!("power tail exponent {exponent} must exceed the dimension"),
                    });
                }
                if r <= 0.0 {
                    return Err(Error::TailNotIntegrable { dim, detail: "power tail needs r > 0".into() });
                }
                Ok(amplitude * area * r.powf(d - exponent) / (exponent - d))
            }
        }
    }

    /// Smallest radius at which the envelope drops below `level`.
    pub fn radius_below(&self, level: f64) -> f64 {
        match *self {
            TailModel::Gaussian { amplitude, rate } => {
                if amplitude <= level {
                    0.0
                } else {
                    ((amplitude / level).ln() / rate).sqrt()
                }
            }
            TailModel::Power { amplitude, exponent } => (amplitude / level).powf(1.0 / exponent),
        }
    }
}

/// `Gamma(d / 2, x)` via the recurrence `Gamma(s + 1, x) = s Gamma(s, x) + x^s e^-x`
/// from `Gamma(1, x) = e^-x` or `Gamma(1/2, x) = sqrt(pi) erfc(sqrt(x))`.
fn upper_gamma_half_integer(dim: usize, x: f64) -> f64 {
    let (mut s, mut g) = if dim % 2 == 0 {
        (1.0, (-x).exp())
    } else {
        (0.5, PI.sqrt() * statrs::function::erf::erfc(x.sqrt()))
    };
    while s < dim as f64 / 2.0 {
        g = s * g + x.powf(s) * (-x).exp();
        s += 1.0;
    }
    g
}

/// Node layout for Lebesgue integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Ball-aligned product rule for `d <= 3`, tensor grid for `d = 4`.
    #[default]
    Auto,
    /// Midpoint tensor grid anchored at the region center.
    Tensor,
}

pub const DEFAULT_TRUNCATION_MARGIN: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Radial panel width / grid spacing.
    pub h: f64,
    /// Outer radius of complement integrals.
    pub r_truncate: f64,
    #[serde(default)]
    pub tail: TailModel,
    #[serde(default)]
    pub rule: Rule,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { h: 0.02, r_truncate: DEFAULT_TRUNCATION_MARGIN, tail: TailModel::default(), rule: Rule::Auto }
    }
}

impl QuadConfig {
    pub fn new(h: f64, r_truncate: f64) -> Self {
        Self { h, r_truncate, ..Self::default() }
    }

    /// Truncation at `radius + 6`.
    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.r_truncate = radius + DEFAULT_TRUNCATION_MARGIN;
        self
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidInput(format!("quadrature spacing must be positive, got {}", self.h)));
        }
        if !(self.r_truncate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "truncation radius must be positive, got {}",
                self.r_truncate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub truncation_bound: f64,
    pub node_count: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    (x, w)
}

const RADIAL_ORDER: usize = 3;

#[derive(Clone, Copy, Debug)]
struct Panel {
    index: usize,
    lo: f64,
    hi: f64,
}

fn radial_panels(inner: f64, outer: f64, h: f64) -> Vec<Panel> {
    let mut out = Vec::new();
    if outer <= inner {
        return out;
    }
    let mut k = (inner / h).floor() as usize;
    loop {
        let lo = (k as f64 * h).max(inner);
        let hi = ((k + 1) as f64 * h).min(outer);
        if hi > lo {
            out.push(Panel { index: k, lo, hi });
        }
        if (k + 1) as f64 * h >= outer {
            break;
        }
        k += 1;
    }
    out
}

fn angular_count(panel_index: usize, scale: f64) -> usize {
    ((scale * (panel_index + 1) as f64).ceil() as usize).max(16)
}

struct BallAlignedRule {
    dim: usize,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
}

impl BallAlignedRule {
    fn new(dim: usize) -> Self {
        let (gl_x, gl_w) = gauss_legendre(RADIAL_ORDER);
        Self { dim, gl_x, gl_w }
    }

    /// Visits the nodes of one radial panel with their Lebesgue weights.
    fn for_each_node(&self, center: &[f64], p: Panel, mut f: impl FnMut(&[f64], f64)) {
        let half = 0.5 * (p.hi - p.lo);
        let mid = 0.5 * (p.hi + p.lo);
        let mut x = vec![0.0; self.dim];
        for (gx, gw) in self.gl_x.iter().zip(&self.gl_w) {
            let rho = mid + half * gx;
            let wr = half * gw;
            match self.dim {
                1 => {
                    for sign in [-1.0, 1.0] {
                        x[0] = center[0] + sign * rho;
                        f(&x, wr);
                    }
                }
                2 => {
                    let n = angular_count(p.index, 2.0 * PI);
                    let dt = 2.0 * PI / n as f64;
                    for j in 0..n {
                        let t = dt * j as f64;
                        x[0] = center[0] + rho * t.cos();
                        x[1] = center[1] + rho * t.sin();
                        f(&x, wr * rho * dt);
                    }
                }
                3 => {
                    let nt = angular_count(p.index, PI).max(8);
                    let (cx, cw) = gauss_legendre(nt);
                    let np = angular_count(p.index, 2.0 * PI);
                    let dp = 2.0 * PI / np as f64;
                    for (ct, wt) in cx.iter().zip(&cw) {
                        let st = (1.0 - ct * ct).sqrt();
                        for j in 0..np {
                            let ph = dp * j as f64;
                            x[0] = center[0] + rho * st * ph.cos();
                            x[1] = center[1] + rho * st * ph.sin();
                            x[2] = center[2] + rho * ct;
                            f(&x, wr * rho * rho * wt * dp);
                        }
                    }
                }
                _ => unreachable!("ball-aligned rule supports d <= 3"),
            }
        }
    }
}

/// Midpoint tensor-grid nodes in the shell, lexicographic order, grouped by
/// first-axis index.
fn tensor_slabs(center: &[f64], inner: Option<f64>, outer: f64, h: f64) -> Vec<i64> {
    let _ = (center, inner);
    let n = (outer / h).ceil() as i64 + 1;
    (-n..n).collect()
}

fn tensor_slab_nodes(
    center: &[f64],
    inner: Option<f64>,
    outer: f64,
    h: f64,
    first: i64,
    mut f: impl FnMut(&[f64], f64),
) {
    let dim = center.len();
    let n = (outer / h).ceil() as i64 + 1;
    let shell = Shell { center, inner, outer };
    let cell = h.powi(dim as i32);
    let mut idx = vec![-n; dim];
    idx[0] = first;
    let mut x = vec![0.0; dim];
    loop {
        for i in 0..dim {
            x[i] = center[i] + h * (idx[i] as f64 + 0.5);
        }
        if shell.contains(&x) {
            f(&x, cell);
        }
        // advance axes 1..dim
        let mut axis = dim;
        loop {
            if axis == 1 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = -n;
        }
        if dim == 1 {
            return;
        }
    }
}

type Field<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

fn check_value(x: &[f64], v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteIntegrand { node: x.to_vec(), value: v })
    }
}

fn use_tensor(cfg: &QuadConfig, dim: usize) -> bool {
    cfg.rule == Rule::Tensor || dim > 3
}

/// Integrates `f` against the Lebesgue measure (with weight) over the shell.
fn lebesgue_shell(
    f: &Field<'_>,
    shell: Shell<'_>,
    weight: &crate::space::Weight,
    cfg: &QuadConfig,
) -> Result<(f64, usize)> {
    let dim = shell.center.len();
    if dim == 0 || dim > 4 {
        return Err(Error::InvalidInput(format!("quadrature supports 1 <= d <= 4, got {dim}")));
    }
    let eval = |x: &[f64], w: f64, acc: &mut CompensatedSum| -> Result<()> {
        let rho = weight.eval(x);
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::WeightNotIntegrable { at: x.to_vec(), value: rho });
        }
        if rho == 0.0 {
            return Ok(());
        }
        let v = f(x);
        check_value(x, v)?;
        acc.add(w * rho * v);
        Ok(())
    };
    let partials: Vec<Result<(CompensatedSum, usize)>> = if use_tensor(cfg, dim) {
        tensor_slabs(shell.center, shell.inner, shell.outer, cfg.h)
            .into_par_iter()
            .map(|first| {
                let mut acc = CompensatedSum::default();
                let mut count = 0;
                let mut err = None;
                tensor_slab_nodes(shell.center, shell.inner, shell.outer, cfg.h, first, |x, w| {
                    if err.is_none() {
                        count += 1;
                        if let Err(e) = eval(x, w, &mut acc) {
                            err = Some(e);
                        }
                    }
                });
                err.map_or(Ok((acc, count)), Err)
            })
            .collect()
    } else {
        let rule = BallAlignedRule::new(dim);
        radial_panels(shell.inner.unwrap_or(0.0), shell.outer, cfg.h)
            .into_par_iter()
            .map(|p| {
                let mut acc = CompensatedSum::default();
                let mut count = 0;
                let mut err = None;
                rule.for_each_node(shell.center, p, |x, w| {
                    if err.is_none() {
                        count += 1;
                        if let Err(e) = eval(x, w, &mut acc) {
                            err = Some(e);
                        }
                    }
                });
                err.map_or(Ok((acc, count)), Err)
            })
            .collect()
    };
    let mut total = CompensatedSum::default();
    let mut nodes = 0;
    for part in partials {
        let (acc, count) = part?;
        total.merge(&acc);
        nodes += count;
    }
    Ok((total.value(), nodes))
}

/// Weighted nodes discretizing `m` restricted to the shell: exact atoms for
/// discrete measures, quadrature nodes for Lebesgue measures.
pub fn measure_nodes(m: &MeasureSpec, shell: Shell<'_>, h: f64) -> Result<WeightedNodes> {
    let dim = shell.center.len();
    match m {
        MeasureSpec::Counting(atoms) => Ok(atoms.in_shell(shell)),
        MeasureSpec::Atomic { points, weights } => {
            let mut out = WeightedNodes::new(dim);
            for (p, w) in points.iter().zip(weights) {
                if shell.contains(p.coords()) {
                    out.push(p.coords(), *w);
                }
            }
            Ok(out)
        }
        MeasureSpec::Lebesgue { weight, .. } => {
            let mut out = WeightedNodes::new(dim);
            let mut push = |x: &[f64], w: f64| -> Result<()> {
                let rho = weight.eval(x);
                if !(rho.is_finite() && rho >= 0.0) {
                    return Err(Error::WeightNotIntegrable { at: x.to_vec(), value: rho });
                }
                if rho > 0.0 {
                    out.push(x, w * rho);
                }
                Ok(())
            };
            let mut err = None;
            if dim > 3 {
                for first in tensor_slabs(shell.center, shell.inner, shell.outer, h) {
                    tensor_slab_nodes(shell.center, shell.inner, shell.outer, h, first, |x, w| {
                        if err.is_none() {
                            err = push(x, w).err();
                        }
                    });
                }
            } else {
                let rule = BallAlignedRule::new(dim);
                for p in radial_panels(shell.inner.unwrap_or(0.0), shell.outer, h) {
                    rule.for_each_node(shell.center, p, |x, w| {
                        if err.is_none() {
                            err = push(x, w).err();
                        }
                    });
                }
            }
            err.map_or(Ok(out), Err)
        }
    }
}

fn discrete_shell(f: &Field<'_>, m: &MeasureSpec, shell: Shell<'_>) -> Result<(f64, usize)> {
    let nodes = measure_nodes(m, shell, 1.0)?;
    let mut acc = CompensatedSum::default();
    for (x, w) in nodes.iter() {
        let v = f(x);
        check_value(x, v)?;
        acc.add(w * v);
    }
    Ok((acc.value(), nodes.len()))
}

fn check_dims(b: &Ball, m: &MeasureSpec) -> Result<()> {
    match m.dim() {
        Some(d) if d != b.dim() => Err(Error::DimensionMismatch { expected: d, got: b.dim() }),
        _ => Ok(()),
    }
}

/// `int_{shell} f dm`.
pub fn integrate_shell(
    f: &Field<'_>,
    center: &Point,
    inner: Option<f64>,
    outer: f64,
    m: &MeasureSpec,
    cfg: &QuadConfig,
) -> Result<(f64, usize)> {
    cfg.validate()?;
    let shell = Shell { center: center.coords(), inner, outer };
    match m {
        MeasureSpec::Lebesgue { weight, .. } => lebesgue_shell(f, shell, weight, cfg),
        _ => discrete_shell(f, m, shell),
    }
}

/// `int_B f dm`.
pub fn integrate_ball(f: &Field<'_>, b: &Ball, m: &MeasureSpec, cfg: &QuadConfig) -> Result<IntegralResult> {
    check_dims(b, m)?;
    let (value, node_count) = integrate_shell(f, b.center(), None, b.radius(), m, cfg)?;
    Ok(IntegralResult { value, truncation_bound: 0.0, node_count })
}

/// `int_{B^c} f dm`, evaluated on `B(center, r_truncate) \ B` with a bound on
/// the remainder from `cfg.tail`, taken as an envelope of `|f|` around the
/// ball center.
pub fn integrate_complement(
    f: &Field<'_>,
    b: &Ball,
    m: &MeasureSpec,
    cfg: &QuadConfig,
) -> Result<IntegralResult> {
    check_dims(b, m)?;
    if cfg.r_truncate < b.radius() {
        return Err(Error::TruncationTooSmall { truncation: cfg.r_truncate, radius: b.radius() });
    }
    let (value, node_count) = if cfg.r_truncate > b.radius() {
        integrate_shell(f, b.center(), Some(b.radius()), cfg.r_truncate, m, cfg)?
    } else {
        (0.0, 0)
    };
    let truncation_bound = tail_bound(m, b.center(), cfg.r_truncate, &cfg.tail)?;
    Ok(IntegralResult { value: value.max(f64::MIN), truncation_bound, node_count: node_count.max(1) })
}

/// Upper bound for `int_{|x - c| > r} g(|x - c|) dm(x)`.
pub fn tail_bound(m: &MeasureSpec, center: &Point, r: f64, model: &TailModel) -> Result<f64> {
    let c = center.coords();
    let dim = c.len();
    match m {
        MeasureSpec::Lebesgue { weight, .. } => Ok(weight.sup() * model.lebesgue_tail(r, dim)?),
        MeasureSpec::Atomic { points, weights } => Ok(points
            .iter()
            .zip(weights)
            .filter_map(|(p, w)| {
                let rho = crate::space::dist_sq(p.coords(), c).sqrt();
                (rho > r).then(|| w * model.envelope(rho))
            })
            .collect::<CompensatedSum>()
            .value()),
        MeasureSpec::Counting(Atoms::Set(s)) => Ok(s
            .points()
            .iter()
            .filter_map(|p| {
                let rho = crate::space::dist_sq(p.coords(), c).sqrt();
                (rho > r).then(|| model.envelope(rho))
            })
            .collect::<CompensatedSum>()
            .value()),
        MeasureSpec::Counting(Atoms::Lattice(lat)) => {
            // Each site owns a cube of side `scale`; a site at distance rho has
            // every point of its cube within `half_diag` of it, so the site sum
            // is dominated by a shifted Lebesgue integral once rho > 2 * half_diag.
            let half_diag = lat.scale * (dim as f64).sqrt() / 2.0;
            let far_bound = |r_split: f64| -> Result<f64> {
                let u0 = r_split - 2.0 * half_diag;
                let inflate = (1.0 + half_diag / u0).powi(dim as i32 - 1);
                Ok(lat.scale.powi(-(dim as i32)) * inflate * model.lebesgue_tail(u0, dim)?)
            };
            // Sum sites explicitly out to a radius where the shifted integral
            // bound is small next to the leading term.
            let target = 1e-3 * model.envelope(r + lat.scale);
            let mut r_split = r.max(4.0 * half_diag);
            let mut far = far_bound(r_split)?;
            while far > target && r_split < r + 64.0 * lat.scale {
                r_split += 2.0 * lat.scale;
                far = far_bound(r_split)?;
            }
            let mut near = CompensatedSum::default();
            if r_split > r {
                let shell = Shell { center: c, inner: Some(r), outer: r_split };
                for (x, _) in Atoms::Lattice(lat.clone()).in_shell(shell).iter() {
                    near.add(model.envelope(crate::space::dist_sq(x, c).sqrt()));
                }
            }
            Ok(near.value() + far)
        }
    }
}

/// Upper bound for `int_{|x - c| > r} g(|x - c|) dm(x)` valid for every center `c`.
pub fn uniform_tail_bound(m: &MeasureSpec, r: f64, model: &TailModel) -> Result<f64> {
    match m {
        MeasureSpec::Lebesgue { dim, weight } => Ok(weight.sup() * model.lebesgue_tail(r, *dim)?),
        MeasureSpec::Atomic { weights, .. } => {
            Ok(weights.iter().copied().collect::<CompensatedSum>().value() * model.envelope(r))
        }
        MeasureSpec::Counting(Atoms::Set(s)) => Ok(s.len() as f64 * model.envelope(r)),
        MeasureSpec::Counting(Atoms::Lattice(lat)) => {
            let dim = lat.dim;
            let half_diag = lat.scale * (dim as f64).sqrt() / 2.0;
            let cell = lat.scale.powi(dim as i32);
            let far = |u0: f64| -> Result<f64> {
                let inflate = (1.0 + half_diag / u0).powi(dim as i32 - 1);
                Ok(inflate * model.lebesgue_tail(u0, dim)? / cell)
            };
            if r > 4.0 * half_diag {
                return far(r - 2.0 * half_diag);
            }
            // sites with r < |x - c| <= 4D, at most V_d (5D)^d / s^d of them
            let near = crate::space::unit_ball_volume(dim) * (5.0 * half_diag).powi(dim as i32) / cell;
            Ok(near * model.envelope(r) + far(2.0 * half_diag)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Lattice;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn indicator_of_unit_disc() {
        let b = Ball::centered(&[0.0, 0.0], 1.0).unwrap();
        let m = MeasureSpec::lebesgue(2);
        let cfg = QuadConfig::new(0.01, 2.0);
        let r = integrate_ball(&|_| 1.0, &b, &m, &cfg).unwrap();
        assert!((r.value - PI).abs() < 1e-2);
        let t = integrate_ball(&|_| 1.0, &b, &m, &cfg.with_rule(Rule::Tensor)).unwrap();
        assert!((t.value - PI).abs() < 1e-2);
    }

    #[test]
    fn gaussian_normalization() {
        let b = Ball::centered(&[0.0, 0.0], 6.0).unwrap();
        let m = MeasureSpec::lebesgue(2);
        let cfg = QuadConfig::new(0.02, 6.0);
        let f = |x: &[f64]| (-PI * (x[0] * x[0] + x[1] * x[1])).exp();
        let r = integrate_ball(&f, &b, &m, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn gaussian_complement_matches_radial_closed_form() {
        let z = [0.3, -0.7];
        let b = Ball::centered(&z, 1.0).unwrap();
        let m = MeasureSpec::lebesgue(2);
        let cfg = QuadConfig::new(0.02, 7.0);
        let f = |x: &[f64]| (-PI * ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2))).exp();
        let r = integrate_complement(&f, &b, &m, &cfg).unwrap();
        assert!((r.value - (-PI).exp()).abs() < 1e-4);
        assert!(r.truncation_bound < 1e-40);
    }

    #[test]
    fn zero_integrand_is_exactly_zero() {
        let b = Ball::centered(&[0.0, 0.0], 1.0).unwrap();
        let r = integrate_complement(&|_| 0.0, &b, &MeasureSpec::lebesgue(2), &QuadConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn counting_measures_sum_atoms() {
        let z2 = MeasureSpec::counting_lattice(Lattice::new(1.0, 2).unwrap());
        let b = Ball::centered(&[0.0, 0.0], 1.5).unwrap();
        let r = integrate_ball(&|_| 1.0, &b, &z2, &QuadConfig::default()).unwrap();
        assert_eq!(r.value, 9.0);

        let z = MeasureSpec::counting_lattice(Lattice::new(1.0, 1).unwrap());
        let b = Ball::centered(&[0.0], 2.5).unwrap();
        let r = integrate_complement(&|_| 1.0, &b, &z, &QuadConfig::new(0.02, 10.5)).unwrap();
        assert_eq!(r.value, 16.0);
        assert_eq!(r.node_count, 16);
    }

    #[test]
    fn truncation_smaller_than_ball_is_rejected() {
        let b = Ball::centered(&[0.0], 3.0).unwrap();
        let err = integrate_complement(&|_| 1.0, &b, &MeasureSpec::lebesgue(1), &QuadConfig::new(0.1, 2.0));
        assert!(matches!(err, Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let b = Ball::centered(&[0.0], 1.0).unwrap();
        let err = integrate_ball(&|_| f64::NAN, &b, &MeasureSpec::lebesgue(1), &QuadConfig::default());
        assert!(matches!(err, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn negative_weight_is_not_integrable() {
        let m = MeasureSpec::Lebesgue { dim: 1, weight: crate::space::Weight::field(|x| x[0], 1.0) };
        let b = Ball::centered(&[0.0], 1.0).unwrap();
        assert!(matches!(m.ball_mass(&b), Err(Error::WeightNotIntegrable { .. })));
    }

    #[test]
    fn weighted_ball_mass_by_quadrature() {
        let m = MeasureSpec::Lebesgue { dim: 1, weight: crate::space::Weight::field(|x| x[0] * x[0], 4.0) };
        let b = Ball::centered(&[0.0], 2.0).unwrap();
        assert!((m.ball_mass(&b).unwrap() - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_tail_bound_dominates_true_tail() {
        let lat = Lattice::new(0.5, 2).unwrap();
        let m = MeasureSpec::counting_lattice(lat.clone());
        let model = TailModel::default();
        for r in [0.5, 1.0, 2.0] {
            let bound = tail_bound(&m, &Point::origin(2), r, &model).unwrap();
            let mut exact = 0.0;
            lat.for_each_in_ball(&[0.0, 0.0], 12.0, |_, x| {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                if rho2 > r * r {
                    exact += (-PI * rho2).exp();
                }
            });
            assert!(bound >= exact, "r={r}: bound {bound} < {exact}");
            assert!(bound < 1.01 * exact, "r={r}: bound {bound} too loose vs {exact}");
        }
    }

    #[test]
    fn lebesgue_tail_closed_forms() {
        let g = TailModel::default();
        // d = 2: int_{|v|>R} e^{-pi |v|^2} = e^{-pi R^2}
        assert!((g.lebesgue_tail(1.0, 2).unwrap() - (-PI).exp()).abs() < 1e-15);
        // d = 1: erfc(sqrt(pi) R)
        let erfc = statrs::function::erf::erfc(PI.sqrt());
        assert!((g.lebesgue_tail(1.0, 1).unwrap() / erfc - 1.0).abs() < 1e-12);
        let p = TailModel::Power { amplitude: 1.0, exponent: 2.0 };
        assert!((p.lebesgue_tail(4.0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.lebesgue_tail(4.0, 2).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn three_dimensional_ball_volume() {
        let b = Ball::centered(&[0.1, 0.2, 0.3], 1.3).unwrap();
        let r = integrate_ball(&|_| 1.0, &b, &MeasureSpec::lebesgue(3), &QuadConfig::new(0.05, 2.0)).unwrap();
        assert!((r.value - 4.0 / 3.0 * PI * 1.3f64.powi(3)).abs() < 1e-10);
    }

    #[test]
    fn four_dimensional_gaussian_on_tensor_grid() {
        let b = Ball::centered(&[0.0; 4], 3.0).unwrap();
        let f = |x: &[f64]| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp();
        let r = integrate_ball(&f, &b, &MeasureSpec::lebesgue(4), &QuadConfig::new(0.1, 4.0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
    }
}
