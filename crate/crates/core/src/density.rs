//! Generalized Beurling densities `D^+-_nu(mu)` estimated from ball-mass
//! ratios over a finite grid of centers and a finite radii schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Atoms, Ball, MeasureSpec, Weight};

/// Centers `min + spacing * k` lying in the half-open box `[min, max)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterGrid {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub spacing: f64,
}

impl CenterGrid {
    pub fn new(min: Vec<f64>, max: Vec<f64>, spacing: f64) -> Result<Self> {
        let g = Self { min, max, spacing };
        g.validate()?;
        Ok(g)
    }

    pub fn cube(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim], spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() || self.min.is_empty() {
            return Err(Error::InvalidInput("center box corners must have equal, nonzero length".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("center spacing must be positive, got {}", self.spacing)));
        }
        if self.min.iter().zip(&self.max).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput("center box is empty".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Centers in lexicographic order.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| {
                let mut v = Vec::new();
                let mut k = 0u64;
                loop {
                    let x = a + self.spacing * k as f64;
                    if x >= *b {
                        break;
                    }
                    v.push(x);
                    k += 1;
                }
                v
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |x| {
                        let mut p = prefix.clone();
                        p.push(*x);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySchedule {
    pub radii: Vec<f64>,
    pub centers: CenterGrid,
    /// Convergence tolerance on `|ratio(r_max) - ratio(r_max / 2)|`.
    pub tolerance: f64,
}

pub const DEFAULT_RADII: [f64; 6] = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 16.0;
pub const DEFAULT_TOLERANCE: f64 = 0.05;

/// Geometric radii `4, 8, ...` up to `r_max`.
pub fn geometric_radii(r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 4.0;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    if out.is_empty() {
        out.push(r_max);
    }
    out
}

fn is_translation_invariant(m: &MeasureSpec) -> bool {
    matches!(m, MeasureSpec::Lebesgue { weight, .. } if !matches!(weight, Weight::Field { .. }))
}

fn discrete_separation(m: &MeasureSpec) -> Option<f64> {
    match m {
        MeasureSpec::Counting(a) => a.separation().ok(),
        MeasureSpec::Atomic { points, .. } => {
            crate::space::PointSet::new(points.clone(), None).ok().and_then(|s| s.separation().ok())
        }
        MeasureSpec::Lebesgue { .. } => None,
    }
}

impl DensitySchedule {
    pub fn new(radii: Vec<f64>, centers: CenterGrid, tolerance: f64) -> Result<Self> {
        let s = Self { radii, centers, tolerance };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::InvalidInput("radii schedule is empty".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput("radii must be positive".into()));
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("radii must be strictly increasing".into()));
        }
        self.centers.validate()
    }

    /// Default schedule for a pair: one fundamental cell when the ratio is
    /// periodic (a lattice against a translation-invariant measure or the
    /// same lattice), the box `[-16, 16]^d` otherwise; spacing
    /// `min(1, separation / 2)`.
    pub fn default_for(mu: &MeasureSpec, nu: &MeasureSpec, r_max: f64) -> Result<Self> {
        let dim = mu.dim().or(nu.dim()).ok_or_else(|| Error::InvalidInput("cannot infer dimension".into()))?;
        let sep = discrete_separation(mu).or_else(|| discrete_separation(nu));
        let spacing = sep.map_or(1.0, |s| (s / 2.0).min(1.0));
        let cell = match (mu.lattice(), nu.lattice()) {
            (Some(l), None) if is_translation_invariant(nu) => Some(l.fundamental_cell()),
            (None, Some(l)) if is_translation_invariant(mu) => Some(l.fundamental_cell()),
            (Some(a), Some(b)) if a == b => Some(a.fundamental_cell()),
            _ => None,
        };
        let centers = match cell {
            Some((origin, period)) => {
                CenterGrid::new(origin.clone(), origin.iter().map(|o| o + period).collect(), spacing.min(period))?
            }
            None => CenterGrid::cube(dim, DEFAULT_BOX_HALF_WIDTH, spacing)?,
        };
        Self::new(geometric_radii(r_max), centers, DEFAULT_TOLERANCE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub r: f64,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub per_radius: Vec<RadiusRow>,
    pub upper: f64,
    pub lower: f64,
    pub converged: bool,
    /// `ratio(r_max) - ratio(r_prev)` for the sup and inf ratios, where
    /// `r_prev` is `r_max / 2` when scheduled, else the previous radius.
    pub slope_upper: f64,
    pub slope_lower: f64,
    pub center_count: usize,
}

impl DensityEstimate {
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.upper - target).abs() <= tol && (self.lower - target).abs() <= tol
    }
}

/// Estimates `D^+_nu(mu)` and `D^-_nu(mu)`.
pub fn density(mu: &MeasureSpec, nu: &MeasureSpec, sched: &DensitySchedule) -> Result<DensityEstimate> {
    sched.validate()?;
    let dim = sched.centers.dim();
    for m in [mu, nu] {
        if let Some(d) = m.dim() {
            if d != dim {
                return Err(Error::DimensionMismatch { expected: d, got: dim });
            }
        }
    }
    let centers = sched.centers.centers();
    if centers.is_empty() {
        return Err(Error::EmptyGrid("density center grid".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..sched.radii.len()).flat_map(|i| (0..centers.len()).map(move |j| (i, j))).collect();
    let ratios: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let b = Ball::centered(&centers[j], sched.radii[i])?;
            let num = mu.ball_mass(&b)?;
            let den = nu.ball_mass(&b)?;
            if !(den > 0.0) {
                return Err(Error::ReferenceVanishes { center: centers[j].clone(), radius: sched.radii[i] });
            }
            Ok(num / den)
        })
        .collect::<Result<_>>()?;

    let per_radius: Vec<RadiusRow> = sched
        .radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let row = &ratios[i * centers.len()..(i + 1) * centers.len()];
            RadiusRow {
                r: *r,
                sup_ratio: row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                inf_ratio: row.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect();

    let last = *per_radius.last().expect("nonempty schedule");
    let half = last.r / 2.0;
    let prev = per_radius
        .iter()
        .find(|row| (row.r - half).abs() <= 1e-12 * half)
        .or_else(|| per_radius.len().checked_sub(2).map(|k| &per_radius[k]))
        .copied();
    let (slope_upper, slope_lower, converged) = match prev {
        Some(p) => {
            let su = last.sup_ratio - p.sup_ratio;
            let sl = last.inf_ratio - p.inf_ratio;
            (su, sl, su.abs() < sched.tolerance && sl.abs() < sched.tolerance)
        }
        None => (f64::NAN, f64::NAN, false),
    };
    Ok(DensityEstimate {
        per_radius,
        upper: last.sup_ratio,
        lower: last.inf_ratio,
        converged,
        slope_upper,
        slope_lower,
        center_count: centers.len(),
    })
}

/// Classical Beurling densities: `density(Counting(Lambda), Lebesgue)`.
pub fn classical_density(atoms: Atoms, dim: usize, sched: &DensitySchedule) -> Result<DensityEstimate> {
    density(&MeasureSpec::Counting(atoms), &MeasureSpec::lebesgue(dim), sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Lattice, PointSet};

    #[test]
    fn center_grid_is_half_open() {
        let g = CenterGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.5).unwrap();
        assert_eq!(g.centers(), vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.0], vec![0.5, 0.5]]);
        assert!(CenterGrid::new(vec![0.0], vec![0.0], 0.5).is_err());
    }

    #[test]
    fn identical_measures_have_density_one() {
        let m = MeasureSpec::counting_lattice(Lattice::new(0.7, 2).unwrap());
        let s = DensitySchedule::default_for(&m, &m, 32.0).unwrap();
        let e = density(&m, &m, &s).unwrap();
        for row in &e.per_radius {
            assert_eq!((row.sup_ratio, row.inf_ratio), (1.0, 1.0));
        }
        assert!(e.converged);
    }

    #[test]
    fn integers_on_the_line() {
        let z = Atoms::Lattice(Lattice::new(1.0, 1).unwrap());
        let s = DensitySchedule::default_for(&MeasureSpec::Counting(z.clone()), &MeasureSpec::lebesgue(1), 128.0).unwrap();
        assert!(classical_density(z, 1, &s).unwrap().within(1.0, 0.02));
        let two_z = Atoms::Lattice(Lattice::new(2.0, 1).unwrap());
        let s = DensitySchedule::default_for(&MeasureSpec::Counting(two_z.clone()), &MeasureSpec::lebesgue(1), 128.0).unwrap();
        assert!(classical_density(two_z, 1, &s).unwrap().within(0.5, 0.01));
    }

    #[test]
    fn empty_set_has_density_zero() {
        let s = DensitySchedule::new(vec![4.0, 8.0], CenterGrid::cube(1, 4.0, 1.0).unwrap(), 0.05).unwrap();
        let e = classical_density(Atoms::Set(PointSet::empty()), 1, &s).unwrap();
        assert_eq!((e.upper, e.lower), (0.0, 0.0));
    }

    #[test]
    fn vanishing_reference_is_an_error() {
        let p = PointSet::new(vec![crate::space::Point::new(vec![0.0]).unwrap()], None).unwrap();
        let s = DensitySchedule::new(vec![1.0], CenterGrid::cube(1, 4.0, 1.0).unwrap(), 0.05).unwrap();
        let err = density(&MeasureSpec::lebesgue(1), &MeasureSpec::counting_set(p), &s);
        assert!(matches!(err, Err(Error::ReferenceVanishes { .. })));
    }

    #[test]
    fn schedule_validation() {
        let g = CenterGrid::cube(1, 1.0, 1.0).unwrap();
        assert!(DensitySchedule::new(vec![], g.clone(), 0.05).is_err());
        assert!(DensitySchedule::new(vec![2.0, 1.0], g, 0.05).is_err());
        assert_eq!(geometric_radii(128.0), DEFAULT_RADII.to_vec());
    }
}
