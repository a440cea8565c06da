//! Reproducing kernels of the model spaces.
//!
//! Convention: `kernel_eval(x, y) = K(x, y) = <K_y, K_x>`, so `K(x, y) = K_y(x)`.
//! Normalized kernels are `k_x = K_x / |K_x|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quad::TailModel;
use crate::space::{dist_sq, Ball, MeasureSpec, Point, Weight};

pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;
pub type DiagonalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied kernel. The diagonal is supplied separately and never
/// interpolated.
#[derive(Clone)]
pub struct TabulatedKernel {
    pub dim: usize,
    pub eval: KernelFn,
    pub diagonal: DiagonalFn,
    /// Envelope of `|<k_x, k_y>|^2` in `|x - y|`, if known.
    pub tail: Option<TailModel>,
}

impl TabulatedKernel {
    pub fn new(
        dim: usize,
        eval: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
        diagonal: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, eval: Arc::new(eval), diagonal: Arc::new(diagonal), tail: None }
    }

    /// `K(x, y) = c` for every pair.
    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, move |_, _| Complex64::new(c, 0.0), move |_| c)
    }
}

impl fmt::Debug for TabulatedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedKernel").field("dim", &self.dim).field("tail", &self.tail).finish()
    }
}

#[derive(Clone, Debug)]
pub enum KernelSpec {
    /// Functions on `R` with spectrum in `[-band, band]`:
    /// `K(x, y) = sin(band (x - y)) / (pi (x - y))`.
    PaleyWiener { band: f64 },
    /// Bargmann-Fock space on `C ~ R^2`: `K(z, w) = exp(pi z conj(w))`.
    Fock,
    /// Gaussian Gabor system on `R^n`, indexed by `(p, q) in R^{2n}`:
    /// `g_(p,q)(t) = exp(2 pi i q.t) phi0(t - p)`, `phi0(t) = 2^{n/4} exp(-pi |t|^2)`.
    GaborGaussian { n: usize },
    Tabulated(TabulatedKernel),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedKernelValue {
    #[serde(with = "complex_pair")]
    pub value: Complex64,
    pub modulus_sq: f64,
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// `sin(u) / u` with the removable singularity filled in.
#[inline]
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

impl KernelSpec {
    pub fn paley_wiener() -> Self {
        KernelSpec::PaleyWiener { band: PI }
    }

    /// Dimension of the index space.
    pub fn point_dim(&self) -> usize {
        match self {
            KernelSpec::PaleyWiener { .. } => 1,
            KernelSpec::Fock => 2,
            KernelSpec::GaborGaussian { n } => 2 * n,
            KernelSpec::Tabulated(t) => t.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::PaleyWiener { band } if !(*band > 0.0 && band.is_finite()) => {
                Err(Error::InvalidInput(format!("Paley-Wiener band must be positive, got {band}")))
            }
            KernelSpec::GaborGaussian { n: 0 } => Err(Error::InvalidInput("Gabor dimension must be >= 1".into())),
            KernelSpec::Tabulated(t) if t.dim == 0 => Err(Error::InvalidInput("tabulated kernel needs dim >= 1".into())),
            _ => Ok(()),
        }
    }

    fn check(&self, p: &Point) -> Result<()> {
        let d = self.point_dim();
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        Ok(())
    }

    /// `K(x, y)`, unchecked.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        match self {
            KernelSpec::PaleyWiener { band } => Complex64::new(band / PI * sinc(band * (x[0] - y[0])), 0.0),
            KernelSpec::Fock => {
                // pi x conj(y) with x = x0 + i x1
                let re = PI * (x[0] * y[0] + x[1] * y[1]);
                let im = PI * (x[1] * y[0] - x[0] * y[1]);
                Complex64::from_polar(re.exp(), im)
            }
            KernelSpec::GaborGaussian { .. } => self.normalized(x, y),
            KernelSpec::Tabulated(t) => (t.eval)(x, y),
        }
    }

    /// `K(x, x) = |K_x|^2`, unchecked.
    pub fn diag(&self, x: &[f64]) -> f64 {
        match self {
            KernelSpec::PaleyWiener { band } => band / PI,
            KernelSpec::Fock => (PI * (x[0] * x[0] + x[1] * x[1])).exp(),
            KernelSpec::GaborGaussian { .. } => 1.0,
            KernelSpec::Tabulated(t) => (t.diagonal)(x),
        }
    }

    pub fn kernel_eval(&self, x: &Point, y: &Point) -> Result<Complex64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.eval(x.coords(), y.coords()))
    }

    pub fn diagonal(&self, x: &Point) -> Result<f64> {
        self.check(x)?;
        Ok(self.diag(x.coords()))
    }

    /// `<k_y, k_x>`, unchecked. Closed forms avoid the overflow of the raw
    /// Fock kernel far from the origin.
    pub fn normalized(&self, x: &[f64], y: &[f64]) -> Complex64 {
        match self {
            KernelSpec::PaleyWiener { band } => Complex64::new(sinc(band * (x[0] - y[0])), 0.0),
            KernelSpec::Fock => {
                let m = (-0.5 * PI * dist_sq(x, y)).exp();
                Complex64::from_polar(m, PI * (x[1] * y[0] - x[0] * y[1]))
            }
            KernelSpec::GaborGaussian { n } => {
                let (px, qx) = x.split_at(*n);
                let (py, qy) = y.split_at(*n);
                let mut phase = 0.0;
                for i in 0..*n {
                    phase += (qy[i] - qx[i]) * (py[i] + px[i]);
                }
                Complex64::from_polar((-0.5 * PI * dist_sq(x, y)).exp(), PI * phase)
            }
            KernelSpec::Tabulated(t) => (t.eval)(x, y) / ((t.diagonal)(x) * (t.diagonal)(y)).sqrt(),
        }
    }

    /// `|<k_x, k_y>|^2`, unchecked.
    #[inline]
    pub fn modulus_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::PaleyWiener { band } => sinc(band * (x[0] - y[0])).powi(2),
            KernelSpec::Fock | KernelSpec::GaborGaussian { .. } => (-PI * dist_sq(x, y)).exp(),
            KernelSpec::Tabulated(_) => self.normalized(x, y).norm_sqr(),
        }
    }

    pub fn normalized_inner(&self, x: &Point, y: &Point) -> Result<NormalizedKernelValue> {
        self.check(x)?;
        self.check(y)?;
        for p in [x, y] {
            let d = self.diag(p.coords());
            if !(d > 0.0) {
                return Err(Error::DegenerateKernel(p.coords().to_vec()));
            }
        }
        let value = if x == y { Complex64::new(1.0, 0.0) } else { self.normalized(x.coords(), y.coords()) };
        Ok(NormalizedKernelValue { value, modulus_sq: value.norm_sqr() })
    }

    /// Radial envelope of `|<k_x, k_y>|^2` in `|x - y|`.
    pub fn modulus_sq_tail(&self) -> Option<TailModel> {
        match self {
            KernelSpec::PaleyWiener { band } => Some(TailModel::Power { amplitude: 1.0 / (band * band), exponent: 2.0 }),
            KernelSpec::Fock | KernelSpec::GaborGaussian { .. } => Some(TailModel::Gaussian { amplitude: 1.0, rate: PI }),
            KernelSpec::Tabulated(t) => t.tail,
        }
    }

    /// Min and max of `K(x, x)` over `center + spacing * Z^d` within the ball.
    pub fn diagonal_bounds(&self, region: &Ball, spacing: f64) -> Result<(f64, f64)> {
        self.check(region.center())?;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::EmptyGrid(format!("sample spacing must be positive, got {spacing}")));
        }
        let d = self.point_dim();
        let c = region.center().coords();
        let n = (region.radius() / spacing).floor() as i64;
        let mut idx = vec![-n; d];
        let mut x = vec![0.0; d];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut seen = 0usize;
        'outer: loop {
            for i in 0..d {
                x[i] = c[i] + spacing * idx[i] as f64;
            }
            if region.contains(&x) {
                let v = self.diag(&x);
                lo = lo.min(v);
                hi = hi.max(v);
                seen += 1;
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= n {
                    break;
                }
                idx[axis] = -n;
            }
        }
        if seen == 0 {
            return Err(Error::EmptyGrid("no grid point inside the region".into()));
        }
        Ok((lo, hi))
    }

    /// The measure `|K_x|^2 d sigma` that makes `{k_x}` a Parseval frame, for
    /// the built-in kernels with `sigma` Lebesgue.
    pub fn natural_measure(&self) -> Option<MeasureSpec> {
        match self {
            KernelSpec::PaleyWiener { band } => {
                Some(MeasureSpec::Lebesgue { dim: 1, weight: Weight::Constant(band / PI) })
            }
            KernelSpec::Fock => Some(MeasureSpec::lebesgue(2)),
            KernelSpec::GaborGaussian { n } => Some(MeasureSpec::lebesgue(2 * n)),
            KernelSpec::Tabulated(_) => None,
        }
    }

    /// Gram matrix `G_ij = <k_j, k_i>` of normalized kernels at the given
    /// points, row-major.
    pub fn normalized_gram(&self, points: &[&[f64]]) -> CMatrix {
        let m = points.len();
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { self.normalized(points[i], points[j]) })
                    .collect()
            })
            .collect();
        CMatrix::from_rows(m, m, rows.into_iter().flatten().collect())
    }

    /// Raw Gram matrix `G_ij = K(x_i, x_j) = <K_j, K_i>`.
    pub fn gram(&self, points: &[&[f64]]) -> CMatrix {
        let m = points.len();
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(self.eval(points[i], points[j]));
            }
        }
        CMatrix::from_rows(m, m, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    PaleyWiener,
    Fock,
    GaborGaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// `{"kernel": "paley-wiener" | "fock" | "gabor-gaussian", "params": {...}}`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kernel: KernelKind,
    #[serde(default)]
    pub params: KernelParams,
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelSpec> {
        let spec = match self.kernel {
            KernelKind::PaleyWiener => KernelSpec::PaleyWiener { band: self.params.band.unwrap_or(PI) },
            KernelKind::Fock => KernelSpec::Fock,
            KernelKind::GaborGaussian => KernelSpec::GaborGaussian { n: self.params.n.unwrap_or(1) },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn paley_wiener_values() {
        let k = KernelSpec::paley_wiener();
        assert_eq!(k.kernel_eval(&pt(&[0.0]), &pt(&[0.0])).unwrap().re, 1.0);
        let v = k.kernel_eval(&pt(&[0.0]), &pt(&[0.5])).unwrap();
        assert!((v.re - 2.0 / PI).abs() < 1e-15 && v.im == 0.0);
        assert!(k.kernel_eval(&pt(&[0.0]), &pt(&[1.0])).unwrap().norm() < 1e-16);
    }

    #[test]
    fn fock_modulus() {
        let k = KernelSpec::Fock;
        let v = k.normalized_inner(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0])).unwrap();
        assert!((v.modulus_sq - (-PI).exp()).abs() < 1e-15);
        let raw = k.kernel_eval(&pt(&[0.3, -0.2]), &pt(&[0.1, 0.7])).unwrap();
        let z = Complex64::new(0.3, -0.2);
        let w = Complex64::new(0.1, 0.7);
        assert!((raw - (PI * z * w.conj()).exp()).norm() < 1e-14);
    }

    #[test]
    fn normalized_matches_raw_ratio() {
        let k = KernelSpec::Fock;
        let x = [0.4, -0.9];
        let y = [-0.3, 0.25];
        let direct = k.eval(&x, &y) / (k.diag(&x) * k.diag(&y)).sqrt();
        assert!((direct - k.normalized(&x, &y)).norm() < 1e-14);
    }

    #[test]
    fn gabor_modulus() {
        let k = KernelSpec::GaborGaussian { n: 1 };
        let v = k.normalized_inner(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0])).unwrap();
        assert!((v.modulus_sq - (-PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_of_same_point_is_one() {
        for k in [KernelSpec::paley_wiener(), KernelSpec::Fock, KernelSpec::GaborGaussian { n: 2 }] {
            let x = pt(&vec![0.37; k.point_dim()]);
            assert_eq!(k.normalized_inner(&x, &x).unwrap().value, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn degenerate_diagonal() {
        let k = KernelSpec::Tabulated(TabulatedKernel::constant(1, 0.0));
        assert!(matches!(k.normalized_inner(&pt(&[0.0]), &pt(&[1.0])), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn diagonal_bound_examples() {
        let b = Ball::centered(&[0.0], 3.0).unwrap();
        assert_eq!(KernelSpec::paley_wiener().diagonal_bounds(&b, 0.1).unwrap(), (1.0, 1.0));
        let c = KernelSpec::Tabulated(TabulatedKernel::constant(1, 2.5));
        assert_eq!(c.diagonal_bounds(&b, 0.1).unwrap(), (2.5, 2.5));

        let b = Ball::centered(&[0.0, 0.0], 1.0).unwrap();
        let (lo, hi) = KernelSpec::Fock.diagonal_bounds(&b, 0.1).unwrap();
        assert_eq!(lo, 1.0);
        // grid points with |z| = 1 exist (e.g. (1, 0)), so the max is e^pi
        assert!((hi - PI.exp()).abs() < 1e-12);
        assert!(KernelSpec::Fock.diagonal_bounds(&b, 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(KernelSpec::Fock.kernel_eval(&pt(&[0.0]), &pt(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn config_parsing() {
        let c: KernelConfig = serde_json::from_str(r#"{"kernel":"paley-wiener","params":{"band":2.0}}"#).unwrap();
        assert!(matches!(c.build().unwrap(), KernelSpec::PaleyWiener { band } if band == 2.0));
        let c: KernelConfig = serde_json::from_str(r#"{"kernel":"fock"}"#).unwrap();
        assert!(matches!(c.build().unwrap(), KernelSpec::Fock));
        let c: KernelConfig = serde_json::from_str(r#"{"kernel":"gabor-gaussian","params":{"n":1}}"#).unwrap();
        assert_eq!(c.build().unwrap().point_dim(), 2);
        assert!(serde_json::from_str::<KernelConfig>(r#"{"kernel":"bessel"}"#).is_err());
    }
}
