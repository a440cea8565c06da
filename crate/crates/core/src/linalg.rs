//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian ones.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut data = vec![ZERO; n * m];
        data.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, out)| {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[l * m..(l + 1) * m];
                for (o, b) in out.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        });
        CMatrix { rows: n, cols: m, data }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigen-decomposition of a Hermitian matrix; only the upper triangle
    /// and the real part of the diagonal are read.
    pub fn hermitian_eigen(&self, want_vectors: bool) -> Result<HermitianEigen> {
        jacobi_eigen(self, want_vectors)
    }

    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_eigen(false)?.values)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in ascending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Option<CMatrix>,
}

impl HermitianEigen {
    /// `V diag(values) V*`.
    pub fn reconstruct(&self) -> Option<CMatrix> {
        let v = self.vectors.as_ref()?;
        Some(v.matmul(&CMatrix::from_real_diagonal(&self.values)).matmul(&v.adjoint()))
    }
}

pub const MAX_SWEEPS: usize = 60;

fn jacobi_eigen(input: &CMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    assert_eq!(input.rows, input.cols, "eigen-decomposition needs a square matrix");
    let n = input.rows;
    // Only the strict upper triangle and the diagonal of `a` are kept current.
    let mut a = input.data.clone();
    let mut diag: Vec<f64> = (0..n).map(|i| input.data[i * n + i].re).collect();
    // Row k of `vt` is eigenvector k, so rotations touch contiguous rows.
    let mut vt = want_vectors.then(|| CMatrix::identity(n).data);
    let scale = {
        let mut s: f64 = diag.iter().map(|d| d * d).sum();
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j].norm_sqr();
            }
        }
        s.sqrt()
    };
    if !scale.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if scale == 0.0 || n <= 1 {
        return Ok(finish(diag, vt, n));
    }
    let tol = f64::EPSILON * scale;
    let skip = 1e-3 * tol / n as f64;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            return Ok(finish(diag, vt, n));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag == 0.0 || mag < skip {
                    continue;
                }
                // e^{-i phi}, with a_pq = |a_pq| e^{i phi}
                let ph = apq.conj() / mag;
                let tau = (diag[q] - diag[p]) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = ph * s;
                let c_ph = ph * c;
                // col_p' = c col_p - s e^{-i phi} col_q, col_q' = s col_p + c e^{-i phi} col_q
                let rot = |akp: Complex64, akq: Complex64| (akp * c - akq * s_ph, akp * s + akq * c_ph);
                for k in 0..p {
                    let (np, nq) = rot(a[k * n + p], a[k * n + q]);
                    a[k * n + p] = np;
                    a[k * n + q] = nq;
                }
                for k in (p + 1)..q {
                    let (np, nq) = rot(a[p * n + k].conj(), a[k * n + q]);
                    a[p * n + k] = np.conj();
                    a[k * n + q] = nq;
                }
                for k in (q + 1)..n {
                    let (np, nq) = rot(a[p * n + k].conj(), a[q * n + k].conj());
                    a[p * n + k] = np.conj();
                    a[q * n + k] = nq.conj();
                }
                diag[p] -= t * mag;
                diag[q] += t * mag;
                a[p * n + q] = ZERO;
                if let Some(v) = vt.as_mut() {
                    let (head, tail) = v.split_at_mut(q * n);
                    let rp = &mut head[p * n..(p + 1) * n];
                    let rq = &mut tail[..n];
                    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                        let (np, nq) = rot(*x, *y);
                        *x = np;
                        *y = nq;
                    }
                }
            }
        }
    }
    Err(Error::NotConverged(MAX_SWEEPS))
}

fn finish(diag: Vec<f64>, vt: Option<Vec<Complex64>>, n: usize) -> HermitianEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = vt.map(|v| CMatrix::from_fn(n, n, |i, k| v[order[k] * n + i]));
    HermitianEigen { values, vectors }
}

/// `<a, b> = sum a_k conj(b_k)`.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
