//! Shared helpers for the integration tests.
//!
//! The projection oracles here solve the KKT conditions by scalar bisection
//! on the threshold level instead of sorted thresholding, and the nuclear
//! oracle goes through the Gram eigendecomposition instead of an SVD, so a
//! match against the library routes checks two independent derivations.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use sketchls::model::{self, ConstraintSpec};
use sketchls::rng;
use sketchls::tensor::{self, DenseMatrix};

const BISECT_ITERS: usize = 200;

/// Level `theta` with `sum_i max(w_i - theta, 0) = target`.
///
/// Requires the mass at `lo` to be >= target and at `hi` to be <= target.
fn bisect_level(w: &[f64], target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let mass: f64 = w.iter().map(|&x| (x - mid).max(0.0)).sum();
        if mass > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn proj_l1_oracle(v: &[f64], r: f64) -> Vec<f64> {
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    if abs.iter().sum::<f64>() <= r {
        return v.to_vec();
    }
    let hi = abs.iter().fold(0.0f64, |m, &x| m.max(x));
    let theta = bisect_level(&abs, r, 0.0, hi);
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

pub fn proj_simplex_oracle(v: &[f64]) -> Vec<f64> {
    let d = v.len() as f64;
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0 / d;
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let theta = bisect_level(v, 1.0, lo, hi);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub fn proj_group_oracle(v: &[f64], groups: &[Vec<usize>], r: f64) -> Vec<f64> {
    let norms: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt())
        .collect();
    let shrunk = proj_l1_oracle(&norms, r);
    let mut out = vec![0.0; v.len()];
    for (g, (&w, &wp)) in groups.iter().zip(norms.iter().zip(shrunk.iter())) {
        if w > 0.0 {
            for &i in g {
                out[i] = v[i] * (wp / w);
            }
        }
    }
    out
}

/// Nuclear-ball projection via eigendecomposition of M^T M plus bisection on
/// the singular values.
pub fn proj_nuclear_oracle(m: &DenseMatrix, r: f64) -> DenseMatrix {
    let (d1, d2) = (m.rows(), m.cols());
    let a = DMatrix::from_fn(d1, d2, |i, j| m.get(i, j));
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let sigma: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    if sigma.iter().sum::<f64>() <= r {
        return m.clone();
    }
    let shrunk = proj_l1_oracle(&sigma, r);
    let mut out = DMatrix::zeros(d1, d2);
    for (idx, &s) in sigma.iter().enumerate() {
        if s > 1e-12 && shrunk[idx] > 0.0 {
            let vcol = eig.eigenvectors.column(idx).clone_owned();
            // A v = sigma u, so scaling A v by shrunk/sigma yields shrunk * u.
            let ucol = &a * &vcol;
            out += (shrunk[idx] / s) * &ucol * vcol.transpose();
        }
    }
    DenseMatrix::from_fn(d1, d2, |i, j| out[(i, j)])
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

pub fn mat_max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut m = 0.0f64;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            m = m.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    m
}

pub fn gaussian_vec(len: usize, scale: f64, gen: &mut impl Rng) -> Vec<f64> {
    (0..len)
        .map(|_| scale * gen.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn gaussian_mat(rows: usize, cols: usize, gen: &mut impl Rng) -> DenseMatrix {
    let data = gaussian_vec(rows * cols, 1.0, gen);
    DenseMatrix::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn random_partition(d: usize, parts: usize, gen: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = gen.random_range(0..=i);
        idx.swap(i, j);
    }
    let parts = parts.clamp(1, d);
    let mut groups = vec![Vec::new(); parts];
    for (pos, &i) in idx.iter().enumerate() {
        groups[pos % parts].push(i);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

/// Worst disagreement between the library l1-ball projection and the
/// bisection oracle over `instances` random draws with ambient dim <= 8.
pub fn l1_sweep_worst_error(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..instances {
        let mut gen = rng::rng_for(1001, &[t]);
        let d = 1 + (t as usize) % 8;
        let scale = [0.1, 1.0, 10.0][(t as usize) % 3];
        let r = [0.5, 1.0, 2.0, 5.0][(t as usize) % 4];
        let v = gaussian_vec(d, scale, &mut gen);
        let lib = model::project_l1_ball(&v, r).unwrap();
        let oracle = proj_l1_oracle(&v, r);
        worst = worst.max(max_abs_diff(&lib, &oracle));
    }
    worst
}

pub fn simplex_sweep_worst_error(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..instances {
        let mut gen = rng::rng_for(1002, &[t]);
        let d = 1 + (t as usize) % 8;
        let scale = [0.2, 1.0, 6.0][(t as usize) % 3];
        let v = gaussian_vec(d, scale, &mut gen);
        let lib = model::project_simplex(&v).unwrap();
        let oracle = proj_simplex_oracle(&v);
        worst = worst.max(max_abs_diff(&lib, &oracle));
    }
    worst
}

pub fn group_sweep_worst_error(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..instances {
        let mut gen = rng::rng_for(1003, &[t]);
        let d = 2 + (t as usize) % 7;
        let parts = 1 + (t as usize) % 4;
        let groups = random_partition(d, parts, &mut gen);
        let r = [0.5, 1.0, 3.0][(t as usize) % 3];
        let v = gaussian_vec(d, 1.5, &mut gen);
        let spec = ConstraintSpec::GroupL1Ball {
            radius: r,
            groups: groups.clone(),
        };
        let lib = model::project(&spec, &v).unwrap();
        let oracle = proj_group_oracle(&v, &groups, r);
        worst = worst.max(max_abs_diff(&lib, &oracle));
    }
    worst
}

pub fn nuclear_sweep_worst_error(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..instances {
        let mut gen = rng::rng_for(1004, &[t]);
        let d1 = 2 + (t as usize) % 3;
        let d2 = 2 + (t as usize) % 2;
        let m = gaussian_mat(d1, d2, &mut gen);
        let nuclear: f64 = tensor::thin_svd(&m).unwrap().s.iter().sum();
        let r = if t % 5 == 0 { 2.0 * nuclear } else { 0.6 * nuclear };
        let spec = ConstraintSpec::NuclearBall { radius: r, d1, d2 };
        let lib = model::project(&spec, &model::vec_of(&m)).unwrap();
        let oracle = model::vec_of(&proj_nuclear_oracle(&m, r));
        worst = worst.max(max_abs_diff(&lib, &oracle));
    }
    worst
}
