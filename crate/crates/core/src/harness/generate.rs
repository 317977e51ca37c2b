//! Seeded instance generators for the benchmark experiments.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{ConstraintSpec, Problem};
use crate::rng;
use crate::solve;
use crate::tensor::{self, DenseMatrix, DenseVector};

const TAG_GEN_DESIGN: u64 = 0x6E01;
const TAG_GEN_SIGNAL: u64 = 0x6E02;
const TAG_GEN_NOISE: u64 = 0x6E03;
const TAG_GEN_MEANS: u64 = 0x6E04;
const TAG_GEN_SAMPLES: u64 = 0x6E05;
const TAG_GEN_WEIGHTS: u64 = 0x6E06;

fn gaussian_matrix(rows: usize, cols: usize, seed: u64, tag: u64) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        let mut gen = rng::rng_for(seed, &[tag, i as u64]);
        for v in s.row_mut(i).iter_mut() {
            *v = gen.sample::<f64, _>(StandardNormal);
        }
    }
    s
}

fn noisy_observations(a: &DenseMatrix, x0: &[f64], nu: f64, seed: u64) -> Result<Vec<f64>> {
    let mut y = a.matvec(x0)?;
    if nu > 0.0 {
        let mut gen = rng::rng_for(seed, &[TAG_GEN_NOISE]);
        for v in y.iter_mut() {
            *v += nu * gen.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(y)
}

/// Dense Gaussian regression: A iid standard normal, x0 a unit-norm Gaussian
/// direction, y = A x0 + noise.
pub fn gen_gaussian_regression(
    n: usize,
    d: usize,
    nu: f64,
    seed: u64,
) -> Result<(Problem, DenseVector)> {
    let a = gaussian_matrix(n, d, seed, TAG_GEN_DESIGN);
    let mut gen = rng::rng_for(seed, &[TAG_GEN_SIGNAL]);
    let mut x0: Vec<f64> = (0..d).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
    let nrm = tensor::norm2(&x0);
    if nrm > 0.0 {
        for v in x0.iter_mut() {
            *v /= nrm;
        }
    }
    let y = noisy_observations(&a, &x0, nu, seed)?;
    let p = Problem::new(a, DenseVector::from_vec(y), ConstraintSpec::Unconstrained)?;
    Ok((p, DenseVector::from_vec(x0)))
}

/// Sparse base vector with a uniform support of size k_prime and equiprobable
/// +-1 entries.
pub fn sparse_pm_one(d: usize, k_prime: usize, gen: &mut impl Rng) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..d).collect();
    // Partial Fisher-Yates: the first k_prime slots become the support.
    for i in 0..k_prime.min(d) {
        let j = i + gen.random_range(0..(d - i));
        idx.swap(i, j);
    }
    let mut x0 = vec![0.0; d];
    for &i in idx.iter().take(k_prime.min(d)) {
        x0[i] = if gen.random::<bool>() { 1.0 } else { -1.0 };
    }
    x0
}

/// Sparse regression over an l1 ball: Gaussian design, k_prime-sparse +-1
/// base vector, y = A x0 + noise.
pub fn gen_sparse_regression(
    n: usize,
    d: usize,
    k_prime: usize,
    nu: f64,
    radius: f64,
    seed: u64,
) -> Result<(Problem, DenseVector)> {
    let a = gaussian_matrix(n, d, seed, TAG_GEN_DESIGN);
    let mut gen = rng::rng_for(seed, &[TAG_GEN_SIGNAL]);
    let x0 = sparse_pm_one(d, k_prime, &mut gen);
    let y = noisy_observations(&a, &x0, nu, seed)?;
    let p = Problem::new(
        a,
        DenseVector::from_vec(y),
        ConstraintSpec::L1Ball { radius },
    )?;
    Ok((p, DenseVector::from_vec(x0)))
}

/// Two-component Gaussian mixture: means uniform in [-3,3]^dim, equal
/// component weights, unit covariance. Returns dim x d samples (one column
/// per sample) and +-1 labels by component.
pub fn gen_gmm_classification(d: usize, dim: usize, seed: u64) -> (DenseMatrix, Vec<f64>) {
    let mut mean_gen = rng::rng_for(seed, &[TAG_GEN_MEANS]);
    let mu0: Vec<f64> = (0..dim).map(|_| mean_gen.random_range(-3.0..3.0)).collect();
    let mu1: Vec<f64> = (0..dim).map(|_| mean_gen.random_range(-3.0..3.0)).collect();
    let mut samples = DenseMatrix::zeros(dim, d);
    let mut labels = Vec::with_capacity(d);
    for j in 0..d {
        let mut gen = rng::rng_for(seed, &[TAG_GEN_SAMPLES, j as u64]);
        let positive = gen.random::<bool>();
        let mu = if positive { &mu1 } else { &mu0 };
        labels.push(if positive { 1.0 } else { -1.0 });
        for i in 0..dim {
            samples.set(i, j, mu[i] + gen.sample::<f64, _>(StandardNormal));
        }
    }
    (samples, labels)
}

/// Weighted low-rank instance: Z = X0 + noise with X0 of rank r, column
/// weights uniform in [1,2], nuclear radius set to ||X0||_*. Returns the
/// Problem together with vec(X0).
pub fn gen_weighted_lowrank_instance(
    d1: usize,
    d2: usize,
    r: usize,
    nu: f64,
    seed: u64,
) -> Result<(Problem, DenseVector)> {
    let l = gaussian_matrix(d1, r, seed, TAG_GEN_DESIGN);
    let rt = gaussian_matrix(r, d2, seed, TAG_GEN_SIGNAL);
    let x0 = l.matmul(&rt)?;
    let mut z = x0.clone();
    if nu > 0.0 {
        let mut gen = rng::rng_for(seed, &[TAG_GEN_NOISE]);
        for i in 0..d1 {
            for j in 0..d2 {
                z.set(i, j, z.get(i, j) + nu * gen.sample::<f64, _>(StandardNormal));
            }
        }
    }
    let mut wgen = rng::rng_for(seed, &[TAG_GEN_WEIGHTS]);
    let weights: Vec<f64> = (0..d2).map(|_| wgen.random_range(1.0..2.0)).collect();
    let nuclear_radius: f64 = tensor::thin_svd(&x0)?.s.iter().sum();
    let p = solve::build_weighted_lowrank(&z, &weights, nuclear_radius)?;
    let x0_vec = crate::model::vec_of(&x0);
    Ok((p, DenseVector::from_vec(x0_vec)))
}
