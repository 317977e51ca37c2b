//! Dense row-major matrices and vectors plus the transforms everything else
//! is built from: the fast Walsh-Hadamard transform, power-of-two padding,
//! thin QR/SVD, and a power-iteration spectral norm estimate.

pub mod io;

use nalgebra as na;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// Column vector with dense storage.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn zeros(n: usize) -> Self {
        DenseVector(vec![0.0; n])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        DenseVector(data)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    /// n x 1 matrix view used by the file formats and sketch application.
    pub fn to_column_matrix(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.0.len(),
            cols: 1,
            data: self.0.clone(),
        }
    }
}

impl std::ops::Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        DenseVector(v)
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{}x{} matrix needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn col_copy(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// A * x.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "matvec: matrix has {} cols, vector has {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// A^T * y.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::dim(format!(
                "matvec_t: matrix has {} rows, vector has {}",
                self.rows,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    /// A * B.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn into_vector(self) -> Result<DenseVector> {
        if self.cols != 1 {
            return Err(Error::dim(format!(
                "expected a single-column matrix, got {} columns",
                self.cols
            )));
        }
        Ok(DenseVector(self.data))
    }

    pub(crate) fn to_na(&self) -> na::DMatrix<f64> {
        na::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_na(m: &na::DMatrix<f64>) -> Self {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place unnormalized Walsh-Hadamard transform; requires power-of-two length.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "fwht length must be a power of two, got {n}"
        )));
    }
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
            i += 2 * h;
        }
        h *= 2;
    }
    Ok(())
}

/// Zero-pads the rows of `m` up to the next power of two.
pub fn pad_pow2(m: &DenseMatrix) -> DenseMatrix {
    let target = next_pow2(m.rows());
    if target == m.rows() {
        return m.clone();
    }
    let mut out = DenseMatrix::zeros(target, m.cols());
    out.data[..m.rows() * m.cols()].copy_from_slice(&m.data);
    out
}

/// Thin QR factorization, Q of shape rows x min(rows, cols).
pub struct ThinQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    /// Columns whose R diagonal fell below 1e-10 of the largest.
    pub deficient_cols: Vec<usize>,
}

pub fn thin_qr(m: &DenseMatrix) -> Result<ThinQr> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::invalid("thin_qr on empty matrix"));
    }
    let qr = na::linalg::QR::new(m.to_na());
    let q = qr.q();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let deficient_cols = (0..k)
        .filter(|&i| r[(i, i)].abs() < 1e-10 * max_diag)
        .collect();
    Ok(ThinQr {
        q: DenseMatrix::from_na(&q),
        r: DenseMatrix::from_na(&r),
        deficient_cols,
    })
}

/// Thin SVD with singular values sorted in non-increasing order.
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl ThinSvd {
    /// Count of singular values above `rtol` times the largest.
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > rtol * smax).count()
    }

    /// Columns of U spanning the numerical column space.
    pub fn basis(&self, rtol: f64) -> DenseMatrix {
        let r = self.rank(rtol);
        DenseMatrix::from_fn(self.u.rows(), r, |i, j| self.u.get(i, j))
    }
}

pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::invalid("thin_svd on empty matrix"));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("thin_svd requires finite entries"));
    }
    let svd = na::linalg::SVD::new(m.to_na(), true, true);
    let u = svd.u.ok_or_else(|| Error::invalid("svd failed to produce U"))?;
    let vt = svd.v_t.ok_or_else(|| Error::invalid("svd failed to produce V^T"))?;
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DenseMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v_sorted = DenseMatrix::from_fn(vt.ncols(), k, |i, j| vt[(order[j], i)]);
    Ok(ThinSvd {
        u: u_sorted,
        s,
        v: v_sorted,
    })
}

pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iters: usize,
}

const POWER_ITERATION_SEED: u64 = 0x5EC7_0A11;

/// Largest squared singular value via power iteration on M^T M.
///
/// The start vector comes from a fixed seed so downstream step sizes are
/// reproducible bit for bit.
pub fn spectral_norm_sq(m: &DenseMatrix, tol: f64, max_iters: usize) -> Result<SpectralEstimate> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::invalid("spectral_norm_sq on empty matrix"));
    }
    if m.data.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("spectral_norm_sq requires a nonzero matrix"));
    }
    let mut gen = rng::rng_for(POWER_ITERATION_SEED, &[m.rows as u64, m.cols as u64]);
    let mut w: Vec<f64> = (0..m.cols).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
    let nw = norm2(&w);
    for x in w.iter_mut() {
        *x /= nw;
    }
    let mut lambda = 0.0f64;
    let mut iters = 0;
    let mut converged = false;
    while iters < max_iters {
        iters += 1;
        let aw = m.matvec(&w)?;
        let new_lambda = norm2_sq(&aw);
        let atw = m.matvec_t(&aw)?;
        let n_atw = norm2(&atw);
        if n_atw == 0.0 {
            // Start vector landed in the null space; perturb and continue.
            for x in w.iter_mut() {
                *x = gen.sample::<f64, _>(StandardNormal);
            }
            let nw = norm2(&w);
            for x in w.iter_mut() {
                *x /= nw;
            }
            continue;
        }
        for (wi, ai) in w.iter_mut().zip(atw.iter()) {
            *wi = ai / n_atw;
        }
        if iters > 1 && (new_lambda - lambda).abs() <= tol * new_lambda.max(f64::MIN_POSITIVE) {
            lambda = new_lambda;
            converged = true;
            break;
        }
        lambda = new_lambda;
    }
    Ok(SpectralEstimate {
        value: lambda,
        converged,
        iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut gen = rng::rng_for(seed, &[rows as u64, cols as u64]);
        DenseMatrix::from_fn(rows, cols, |_, _| gen.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn fwht_impulse() {
        let mut v = vec![1.0, 0.0, 0.0, 0.0];
        fwht_inplace(&mut v).unwrap();
        assert_eq!(v, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn fwht_pair() {
        let mut v = vec![1.0, 1.0];
        fwht_inplace(&mut v).unwrap();
        assert_eq!(v, vec![2.0, 0.0]);
    }

    #[test]
    fn fwht_rejects_non_pow2() {
        let mut v = vec![1.0, 2.0, 3.0];
        assert!(fwht_inplace(&mut v).is_err());
        let mut empty: Vec<f64> = vec![];
        assert!(fwht_inplace(&mut empty).is_err());
    }

    #[test]
    fn fwht_parseval_and_involution() {
        let n = 64;
        let mut gen = rng::rng_for(11, &[]);
        let orig: Vec<f64> = (0..n).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
        let mut v = orig.clone();
        fwht_inplace(&mut v).unwrap();
        let lhs = norm2_sq(&v);
        let rhs = (n as f64) * norm2_sq(&orig);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        fwht_inplace(&mut v).unwrap();
        for (a, b) in v.iter().zip(orig.iter()) {
            assert_relative_eq!(*a, n as f64 * b, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn pad_pow2_shapes() {
        let m = random_matrix(6, 3, 1);
        let p = pad_pow2(&m);
        assert_eq!(p.rows(), 8);
        assert_eq!(p.cols(), 3);
        for i in 0..6 {
            assert_eq!(p.row(i), m.row(i));
        }
        for i in 6..8 {
            assert!(p.row(i).iter().all(|&v| v == 0.0));
        }
        let already = random_matrix(8, 2, 2);
        assert_eq!(pad_pow2(&already), already);
    }

    #[test]
    fn qr_orthogonality_and_reconstruction() {
        let m = random_matrix(20, 5, 3);
        let f = thin_qr(&m).unwrap();
        assert_eq!(f.q.rows(), 20);
        assert_eq!(f.q.cols(), 5);
        let qtq = f.q.transpose().matmul(&f.q).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - want).abs() < 1e-10);
            }
        }
        let back = f.q.matmul(&f.r).unwrap();
        let err = back
            .data()
            .iter()
            .zip(m.data().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9 * m.frob_norm_sq().sqrt().max(1.0));
        assert!(f.deficient_cols.is_empty());
    }

    #[test]
    fn qr_flags_deficiency() {
        let mut m = random_matrix(10, 3, 4);
        let c0 = m.col_copy(0);
        for i in 0..10 {
            m.set(i, 2, 2.0 * c0[i]);
        }
        let f = thin_qr(&m).unwrap();
        assert_eq!(f.deficient_cols, vec![2]);
    }

    #[test]
    fn svd_diag_and_rank1() {
        let d = DenseMatrix::from_row_major(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let f = thin_svd(&d).unwrap();
        assert_relative_eq!(f.s[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.s[1], 1.0, max_relative = 1e-12);

        let u = [0.6, 0.8];
        let v = [0.8, 0.6];
        let outer = DenseMatrix::from_fn(2, 2, |i, j| u[i] * v[j]);
        let f = thin_svd(&outer).unwrap();
        assert_relative_eq!(f.s[0], 1.0, max_relative = 1e-10);
        assert!(f.s[1].abs() < 1e-10);
    }

    #[test]
    fn svd_reconstruction() {
        let m = random_matrix(8, 6, 5);
        let f = thin_svd(&m).unwrap();
        for w in f.s.windows(2) {
            assert!(w[0] >= w[1]);
            assert!(w[1] >= 0.0);
        }
        let us = DenseMatrix::from_fn(8, 6, |i, j| f.u.get(i, j) * f.s[j]);
        let back = us.matmul(&f.v.transpose()).unwrap();
        let num: f64 = back
            .data()
            .iter()
            .zip(m.data().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(num.sqrt() < 1e-9 * m.frob_norm_sq().sqrt());
    }

    #[test]
    fn spectral_matches_diag() {
        let d = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let est = spectral_norm_sq(&d, 1e-12, 10_000).unwrap();
        assert!(est.converged);
        assert_relative_eq!(est.value, 4.0, max_relative = 1e-9);

        let eye = DenseMatrix::identity(5);
        let est = spectral_norm_sq(&eye, 1e-12, 100).unwrap();
        assert_relative_eq!(est.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_matches_svd() {
        let m = random_matrix(10, 4, 6);
        let est = spectral_norm_sq(&m, 1e-12, 20_000).unwrap();
        let f = thin_svd(&m).unwrap();
        assert_relative_eq!(est.value, f.s[0] * f.s[0], max_relative = 1e-6);
    }

    #[test]
    fn spectral_rejects_zero() {
        let z = DenseMatrix::zeros(3, 3);
        assert!(spectral_norm_sq(&z, 1e-6, 10).is_err());
    }

    #[test]
    fn matvec_and_matmul_agree_with_naive() {
        let a = random_matrix(7, 5, 8);
        let b = random_matrix(5, 4, 9);
        let ab = a.matmul(&b).unwrap();
        for i in 0..7 {
            for j in 0..4 {
                let mut want = 0.0;
                for k in 0..5 {
                    want += a.get(i, k) * b.get(k, j);
                }
                assert_relative_eq!(ab.get(i, j), want, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
        let x: Vec<f64> = (0..5).map(|i| i as f64 - 2.0).collect();
        let ax = a.matvec(&x).unwrap();
        for i in 0..7 {
            let want = dot(a.row(i), &x);
            assert_eq!(ax[i], want);
        }
        let y: Vec<f64> = (0..7).map(|i| 0.5 * i as f64).collect();
        let aty = a.matvec_t(&y).unwrap();
        let att = a.transpose();
        let want = att.matvec(&y).unwrap();
        for (p, q) in aty.iter().zip(want.iter()) {
            assert_relative_eq!(*p, *q, max_relative = 1e-12, epsilon = 1e-12);
        }
    }
}
