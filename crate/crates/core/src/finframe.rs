//! Frames over finite atomic index measures in `C^n`.
//!
//! Everything here is exact up to floating point: the frame operator is a
//! finite sum, duals come from the spectral pseudo-inverse, and the
//! comparison identity is evaluated term by term.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, HermitianEigen};
use crate::space::{Ball, Point};

/// Eigenvalues below `ZERO_THRESHOLD * lambda_max` are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// Eigenvalues in `[lo, hi] * lambda_max` make the span ambiguous.
pub const AMBIGUITY_BAND: (f64, f64) = (1e-11, 1e-9);

pub type CVector = Vec<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteFrame {
    dim: usize,
    vectors: Vec<CVector>,
    weights: Vec<f64>,
    index_points: Vec<Point>,
}

impl FiniteFrame {
    pub fn new(dim: usize, vectors: Vec<CVector>, weights: Vec<f64>, index_points: Vec<Point>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Hilbert space dimension must be >= 1".into()));
        }
        let m = vectors.len();
        if m == 0 {
            return Err(Error::InvalidInput("a frame needs at least one vector".into()));
        }
        if weights.len() != m || index_points.len() != m {
            return Err(Error::InvalidInput(format!(
                "{} vectors, {} weights, {} index points",
                m,
                weights.len(),
                index_points.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("frame weights must be positive, got {w}")));
        }
        Ok(Self { dim, vectors, weights, index_points })
    }

    /// Unit weights, index points `0, 1, 2, ...` on the line.
    pub fn from_vectors(dim: usize, vectors: Vec<CVector>) -> Result<Self> {
        let m = vectors.len();
        let pts = (0..m).map(|i| Point::new(vec![i as f64])).collect::<Result<_>>()?;
        Self::new(dim, vectors, vec![1.0; m], pts)
    }

    pub fn from_real(dim: usize, vectors: &[&[f64]]) -> Result<Self> {
        Self::from_vectors(dim, vectors.iter().map(|v| v.iter().map(|x| Complex64::new(*x, 0.0)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_points(&self) -> &[Point] {
        &self.index_points
    }

    /// Rows `re_1, im_1, ..., re_n, im_n, weight`, no header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut vectors = Vec::new();
        let mut weights = Vec::new();
        let mut dim = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("frame csv row {}: {e}", line + 1)))?;
            if vals.len() < 3 || vals.len() % 2 == 0 {
                return Err(Error::InvalidInput(format!(
                    "frame csv row {}: expected 2n + 1 columns, got {}",
                    line + 1,
                    vals.len()
                )));
            }
            let n = (vals.len() - 1) / 2;
            if *dim.get_or_insert(n) != n {
                return Err(Error::DimensionMismatch { expected: dim.unwrap_or(n), got: n });
            }
            vectors.push(vals[..2 * n].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
            weights.push(vals[2 * n]);
        }
        let dim = dim.ok_or_else(|| Error::InvalidInput("frame csv is empty".into()))?;
        let pts = (0..vectors.len()).map(|i| Point::new(vec![i as f64])).collect::<Result<_>>()?;
        Self::new(dim, vectors, weights, pts)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for (v, wt) in self.vectors.iter().zip(&self.weights) {
            let mut row: Vec<String> = v.iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
            row.push(wt.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `S = sum_i w_i v_i v_i*`.
    pub fn frame_operator(&self) -> CMatrix {
        let n = self.dim;
        let mut s = CMatrix::zeros(n, n);
        for (v, w) in self.vectors.iter().zip(&self.weights) {
            for i in 0..n {
                let vi = v[i] * *w;
                for j in 0..n {
                    s[(i, j)] += vi * v[j].conj();
                }
            }
        }
        s
    }

    pub fn spectrum(&self) -> Result<FrameSpectrum> {
        FrameSpectrum::new(&self.frame_operator())
    }

    /// `(c, C)`: smallest nonzero and largest eigenvalue of `S`.
    pub fn frame_bounds(&self) -> Result<(f64, f64)> {
        let sp = self.spectrum()?;
        Ok((sp.lower(), sp.lambda_max))
    }

    /// `S^+ v_i` with the same weights and index points.
    pub fn canonical_dual(&self) -> Result<FiniteFrame> {
        let sp = self.spectrum()?;
        sp.check_unambiguous()?;
        self.dual_with(&sp)
    }

    fn dual_with(&self, sp: &FrameSpectrum) -> Result<FiniteFrame> {
        let pinv = sp.pseudo_inverse();
        let vectors = self.vectors.iter().map(|v| pinv.mul_vec(v)).collect();
        FiniteFrame::new(self.dim, vectors, self.weights.clone(), self.index_points.clone())
    }

    /// Orthogonal projection onto the span, from the spectral decomposition of `S`.
    pub fn projection(&self) -> Result<CMatrix> {
        let sp = self.spectrum()?;
        sp.check_unambiguous()?;
        Ok(sp.range_projection())
    }

    /// `sum_i w_i <f, dual_i> v_i`.
    pub fn project(&self, f: &[Complex64]) -> Result<CVector> {
        let dual = self.canonical_dual()?;
        Ok(synthesis(&self.vectors, &dual.vectors, &self.weights, f, self.dim))
    }

    /// `sum_i w_i <f, v_i> dual_i`.
    pub fn project_dual_form(&self, f: &[Complex64]) -> Result<CVector> {
        let dual = self.canonical_dual()?;
        Ok(synthesis(&dual.vectors, &self.vectors, &self.weights, f, self.dim))
    }

    /// `G_ij = sqrt(w_i w_j) <v_j, v_i>`.
    pub fn gram(&self) -> CMatrix {
        let m = self.len();
        CMatrix::from_fn(m, m, |i, j| {
            inner(&self.vectors[j], &self.vectors[i]) * (self.weights[i] * self.weights[j]).sqrt()
        })
    }

    /// Min and max eigenvalue of the Gram matrix, zero included.
    pub fn riesz_bounds(&self) -> Result<(f64, f64)> {
        let ev = self.gram().eigenvalues_hermitian()?;
        Ok((ev[0], ev[ev.len() - 1]))
    }

    fn check_same_space(&self, other: &FiniteFrame) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }
}

fn synthesis(
    out_vectors: &[CVector],
    coeff_vectors: &[CVector],
    weights: &[f64],
    f: &[Complex64],
    n: usize,
) -> CVector {
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for ((v, u), w) in out_vectors.iter().zip(coeff_vectors).zip(weights) {
        let c = inner(f, u) * *w;
        for (a, x) in acc.iter_mut().zip(v) {
            *a += c * x;
        }
    }
    acc
}

/// Spectral data of a frame operator.
#[derive(Clone, Debug)]
pub struct FrameSpectrum {
    pub eigen: HermitianEigen,
    pub lambda_max: f64,
    pub cutoff: f64,
}

impl FrameSpectrum {
    pub fn new(s: &CMatrix) -> Result<Self> {
        let eigen = s.hermitian_eigen(true)?;
        let lambda_max = eigen.values.last().copied().unwrap_or(0.0);
        if !(lambda_max > 0.0) {
            return Err(Error::DegenerateFrame);
        }
        Ok(Self { eigen, lambda_max, cutoff: ZERO_THRESHOLD * lambda_max })
    }

    fn kept(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.eigen.values.iter().copied().enumerate().filter(|(_, l)| *l >= self.cutoff)
    }

    /// Smallest eigenvalue at or above the zero threshold.
    pub fn lower(&self) -> f64 {
        self.kept().map(|(_, l)| l).next().unwrap_or(self.lambda_max)
    }

    pub fn rank(&self) -> usize {
        self.kept().count()
    }

    pub fn check_unambiguous(&self) -> Result<()> {
        let (lo, hi) = (AMBIGUITY_BAND.0 * self.lambda_max, AMBIGUITY_BAND.1 * self.lambda_max);
        match self.eigen.values.iter().find(|l| **l >= lo && **l <= hi) {
            Some(l) => Err(Error::RankDeficient { eigenvalue: *l, cutoff: self.cutoff }),
            None => Ok(()),
        }
    }

    fn spectral_sum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = self.eigen.vectors.as_ref().expect("spectrum computed with vectors");
        let n = v.rows();
        let mut out = CMatrix::zeros(n, n);
        for (k, l) in self.kept() {
            let s = f(l);
            for i in 0..n {
                let a = v[(i, k)] * s;
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn pseudo_inverse(&self) -> CMatrix {
        self.spectral_sum(|l| 1.0 / l)
    }

    pub fn range_projection(&self) -> CMatrix {
        self.spectral_sum(|_| 1.0)
    }
}

/// The index set `Omega`, given geometrically or as explicit masks over the
/// atoms of `F` and `G`.
#[derive(Clone, Debug)]
pub enum Omega {
    Ball(Ball),
    Masks { f: Vec<bool>, g: Vec<bool> },
}

impl Omega {
    fn masks(&self, f: &FiniteFrame, g: &FiniteFrame) -> Result<(Vec<bool>, Vec<bool>)> {
        match self {
            Omega::Ball(b) => {
                let inside = |fr: &FiniteFrame| fr.index_points.iter().map(|p| b.contains(p.coords())).collect();
                Ok((inside(f), inside(g)))
            }
            Omega::Masks { f: mf, g: mg } => {
                if mf.len() != f.len() || mg.len() != g.len() {
                    return Err(Error::InvalidInput(format!(
                        "omega masks have lengths ({}, {}), frames have ({}, {})",
                        mf.len(),
                        mg.len(),
                        f.len(),
                        g.len()
                    )));
                }
                Ok((mf.clone(), mg.clone()))
            }
        }
    }
}

/// Both sides of the comparison identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
}

/// Diagonal quantities `<P_F g_x, dual g_x>` over `G` and `<P_G dual f_y, f_y>`
/// over `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalTerms {
    pub g_side: Vec<Complex64>,
    pub f_side: Vec<Complex64>,
}

impl DiagonalTerms {
    pub fn max_imag(&self) -> f64 {
        self.g_side.iter().chain(&self.f_side).map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

struct PairData {
    f_dual: FiniteFrame,
    g_dual: FiniteFrame,
    p_f: CMatrix,
    p_g: CMatrix,
}

fn pair_data(f: &FiniteFrame, g: &FiniteFrame) -> Result<PairData> {
    f.check_same_space(g)?;
    let sf = f.spectrum()?;
    let sg = g.spectrum()?;
    sf.check_unambiguous()?;
    sg.check_unambiguous()?;
    Ok(PairData { f_dual: f.dual_with(&sf)?, g_dual: g.dual_with(&sg)?, p_f: sf.range_projection(), p_g: sg.range_projection() })
}

pub fn diagonal_terms(f: &FiniteFrame, g: &FiniteFrame) -> Result<DiagonalTerms> {
    let pd = pair_data(f, g)?;
    Ok(diagonal_terms_with(f, g, &pd))
}

fn diagonal_terms_with(f: &FiniteFrame, g: &FiniteFrame, pd: &PairData) -> DiagonalTerms {
    let g_side = g.vectors.iter().zip(&pd.g_dual.vectors).map(|(gx, gdx)| inner(&pd.p_f.mul_vec(gx), gdx)).collect();
    let f_side = f.vectors.iter().zip(&pd.f_dual.vectors).map(|(fy, fdy)| inner(&pd.p_g.mul_vec(fdy), fy)).collect();
    DiagonalTerms { g_side, f_side }
}

/// `T[x][y] = <g_x, f_y> <dual f_y, dual g_x> mu_y nu_x`.
fn cross_terms(f: &FiniteFrame, g: &FiniteFrame, pd: &PairData) -> Vec<Vec<Complex64>> {
    g.vectors
        .iter()
        .zip(&pd.g_dual.vectors)
        .zip(&g.weights)
        .map(|((gx, gdx), nu)| {
            f.vectors
                .iter()
                .zip(&pd.f_dual.vectors)
                .zip(&f.weights)
                .map(|((fy, fdy), mu)| inner(gx, fy) * inner(fdy, gdx) * (mu * nu))
                .collect()
        })
        .collect()
}

fn kahan_complex(terms: impl Iterator<Item = Complex64>) -> Complex64 {
    let mut re = crate::quad::CompensatedSum::default();
    let mut im = crate::quad::CompensatedSum::default();
    for t in terms {
        re.add(t.re);
        im.add(t.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Residual of the comparison identity: the diagonal sums use the spectral
/// projections, the cross terms the explicit dual pairings.
pub fn comparison_residual(f: &FiniteFrame, g: &FiniteFrame, omega: &Omega) -> Result<ComparisonResult> {
    let pd = pair_data(f, g)?;
    let (in_f, in_g) = omega.masks(f, g)?;
    let diag = diagonal_terms_with(f, g, &pd);
    let t = cross_terms(f, g, &pd);

    let lhs = kahan_complex((0..f.len()).filter(|&y| in_f[y]).map(|y| diag.f_side[y] * f.weights[y]));
    let g_diag = kahan_complex((0..g.len()).filter(|&x| in_g[x]).map(|x| diag.g_side[x] * g.weights[x]));
    let leaving = kahan_complex(
        (0..g.len()).filter(|&x| in_g[x]).flat_map(|x| (0..f.len()).filter(|&y| !in_f[y]).map(move |y| (x, y))).map(|(x, y)| t[x][y]),
    );
    let entering = kahan_complex(
        (0..g.len()).filter(|&x| !in_g[x]).flat_map(|x| (0..f.len()).filter(|&y| in_f[y]).map(move |y| (x, y))).map(|(x, y)| t[x][y]),
    );
    let rhs = g_diag - leaving + entering;
    Ok(ComparisonResult { lhs: [lhs.re, lhs.im], rhs: [rhs.re, rhs.im], residual: (lhs - rhs).norm() })
}

/// One ordering of the diagonal-bound inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalBoundCheck {
    /// `[min, max]` of the real parts of the diagonal terms over `supp mu`.
    pub real_range: [f64; 2],
    pub imag_range: [f64; 2],
    pub holds: bool,
}

/// The double sum over `X x Omega` with its bracket checks for both pairings
/// `<P_G dual f_y, f_y>` and `<P_G f_y, dual f_y>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleSumBounds {
    pub double_sum: [f64; 2],
    pub omega_mass: f64,
    pub dual_first: DiagonalBoundCheck,
    pub dual_second: DiagonalBoundCheck,
}

pub fn double_sum_bounds(f: &FiniteFrame, g: &FiniteFrame, omega: &Omega, tol: f64) -> Result<DoubleSumBounds> {
    let pd = pair_data(f, g)?;
    let (in_f, _) = omega.masks(f, g)?;
    let t = cross_terms(f, g, &pd);
    let d = kahan_complex((0..g.len()).flat_map(|x| (0..f.len()).filter(|&y| in_f[y]).map(move |y| (x, y))).map(|(x, y)| t[x][y]));
    let mass: f64 = (0..f.len()).filter(|&y| in_f[y]).map(|y| f.weights[y]).sum();

    let first: Vec<Complex64> = diagonal_terms_with(f, g, &pd).f_side;
    let second: Vec<Complex64> =
        f.vectors.iter().zip(&pd.f_dual.vectors).map(|(fy, fdy)| inner(&pd.p_g.mul_vec(fy), fdy)).collect();
    let check = |terms: &[Complex64], d: Complex64| {
        let range = |sel: fn(&Complex64) -> f64| {
            terms.iter().map(sel).fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v), hi.max(v)])
        };
        let re = range(|z| z.re);
        let im = range(|z| z.im);
        let scale = tol * (1.0 + mass * re[1].abs().max(re[0].abs()).max(im[1].abs()).max(im[0].abs()));
        let inside = |v: f64, r: [f64; 2]| v >= r[0] * mass - scale && v <= r[1] * mass + scale;
        DiagonalBoundCheck { real_range: re, imag_range: im, holds: inside(d.re, re) && inside(d.im, im) }
    };
    Ok(DoubleSumBounds {
        double_sum: [d.re, d.im],
        omega_mass: mass,
        dual_first: check(&first, d),
        // The second pairing sums the conjugate cross terms.
        dual_second: check(&second, d.conj()),
    })
}

/// Uniform complex entries in `[-1, 1]^2`, weights in `[0.5, 2]`, index points
/// in `[0, 1]^2`.
pub fn random_frame<R: Rng>(rng: &mut R, dim: usize, m: usize) -> Result<FiniteFrame> {
    let vectors = (0..m)
        .map(|_| (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))).collect())
        .collect();
    let weights = (0..m).map(|_| rng.random_range(0.5..=2.0)).collect();
    let points = (0..m)
        .map(|_| Point::new(vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]))
        .collect::<Result<_>>()?;
    FiniteFrame::new(dim, vectors, weights, points)
}

/// A random instance of the comparison identity: two frames in the same
/// `C^n` (`n <= 8`, `m <= 16`) and random masks.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub f: FiniteFrame,
    pub g: FiniteFrame,
    pub omega: Omega,
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Result<RandomInstance> {
    let n = rng.random_range(1..=8);
    let mf = rng.random_range(1..=16);
    let mg = rng.random_range(1..=16);
    let f = random_frame(rng, n, mf)?;
    let g = random_frame(rng, n, mg)?;
    let omega = Omega::Masks {
        f: (0..mf).map(|_| rng.random_bool(0.5)).collect(),
        g: (0..mg).map(|_| rng.random_bool(0.5)).collect(),
    };
    Ok(RandomInstance { f, g, omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mercedes() -> FiniteFrame {
        let h = 3f64.sqrt() / 2.0;
        FiniteFrame::from_real(2, &[&[0.0, 1.0], &[-h, -0.5], &[h, -0.5]]).unwrap()
    }

    fn onb(n: usize) -> FiniteFrame {
        let vs = (0..n).map(|i| (0..n).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect()).collect();
        FiniteFrame::from_vectors(n, vs).unwrap()
    }

    #[test]
    fn frame_operator_examples() {
        assert_eq!(onb(2).frame_operator(), CMatrix::identity(2));
        let s = mercedes().frame_operator();
        assert!(s.sub(&CMatrix::identity(2).scale(1.5)).max_abs() < 1e-15);
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(f.frame_operator(), CMatrix::from_real_diagonal(&[2.0, 1.0]));
    }

    #[test]
    fn frame_bounds_examples() {
        assert_eq!(onb(3).frame_bounds().unwrap(), (1.0, 1.0));
        let (lo, hi) = mercedes().frame_bounds().unwrap();
        assert!((lo - 1.5).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let (lo, hi) = f.frame_bounds().unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        let z = FiniteFrame::from_real(2, &[&[0.0, 0.0]]).unwrap();
        assert!(matches!(z.frame_bounds(), Err(Error::DegenerateFrame)));
    }

    #[test]
    fn canonical_dual_examples() {
        let d = mercedes().canonical_dual().unwrap();
        for (a, b) in d.vectors().iter().zip(mercedes().vectors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y * (2.0 / 3.0)).norm() < 1e-14);
            }
        }
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let d = f.canonical_dual().unwrap();
        assert!((d.vectors()[0][0] - 0.5).norm() < 1e-15);
        assert!((d.vectors()[2][1] - 1.0).norm() < 1e-15);
        assert_eq!(onb(2).canonical_dual().unwrap(), onb(2));
    }

    #[test]
    fn ambiguous_rank_is_an_error() {
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[0.0, 1e-5]]).unwrap();
        assert!(matches!(f.canonical_dual(), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn projection_examples() {
        let e1 = FiniteFrame::from_real(2, &[&[1.0, 0.0]]).unwrap();
        let p = e1.project(&[c(3.0), Complex64::new(0.0, 4.0)]).unwrap();
        assert!((p[0] - 3.0).norm() < 1e-15 && p[1].norm() < 1e-15);
        let p = mercedes().project(&[c(1.0), c(1.0)]).unwrap();
        assert!((p[0] - 1.0).norm() < 1e-14 && (p[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn gram_examples() {
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(f.gram(), CMatrix::from_rows(2, 2, vec![c(1.0); 4]));
        let (a, b) = f.riesz_bounds().unwrap();
        assert!(a.abs() < 1e-15 && (b - 2.0).abs() < 1e-15);
        let (a, b) = mercedes().riesz_bounds().unwrap();
        assert!(a.abs() < 1e-14 && (b - 1.5).abs() < 1e-14);
    }

    #[test]
    fn comparison_examples() {
        let e = onb(3);
        let omega = Omega::Masks { f: vec![true, false, false], g: vec![true, false, false] };
        let r = comparison_residual(&e, &e, &omega).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.lhs, [1.0, 0.0]);
        let none = Omega::Masks { f: vec![false; 3], g: vec![false; 3] };
        let r = comparison_residual(&e, &e, &none).unwrap();
        assert_eq!((r.lhs, r.rhs, r.residual), ([0.0, 0.0], [0.0, 0.0], 0.0));
    }

    #[test]
    fn orthogonal_spans_have_zero_diagonals() {
        let f = FiniteFrame::from_real(2, &[&[1.0, 0.0]]).unwrap();
        let g = FiniteFrame::from_real(2, &[&[0.0, 1.0]]).unwrap();
        let d = diagonal_terms(&f, &g).unwrap();
        assert_eq!(d.f_side, vec![c(0.0)]);
        assert_eq!(d.g_side, vec![c(0.0)]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let omega = Omega::Masks { f: vec![true; 3], g: vec![true; 2] };
        assert!(comparison_residual(&mercedes(), &onb(3), &omega).is_err());
    }

    #[test]
    fn random_identity_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let inst = random_instance(&mut rng).unwrap();
            let r = comparison_residual(&inst.f, &inst.g, &inst.omega).unwrap();
            assert!(r.residual < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = mercedes();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = FiniteFrame::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(g.vectors(), f.vectors());
        assert_eq!(g.weights(), f.weights());
        assert!(FiniteFrame::from_csv_reader("1,2\n".as_bytes()).is_err());
    }
}
