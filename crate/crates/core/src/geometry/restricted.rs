//! Restricted eigenvalue estimation over the set {||z||_2 = 1, ||z||_1 <= 2 sqrt(k)}.
//!
//! The multistart heuristic is fast but uncertified. The brute-force support
//! sweep is certified for the support-restricted relaxation (supports of size
//! up to 4k) and serves as the test oracle at small dimension.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::rng;
use crate::tensor::{self, DenseMatrix};

const TAG_RE_MIN: u64 = 0x4E11;
const TAG_RE_MAX: u64 = 0x4E12;
const L1_SLACK: f64 = 1e-8;
const ALT_PROJ_ROUNDS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReMethod {
    HeuristicMultistart,
    BruteForceSupports,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReMode {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ReOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for ReOptions {
    fn default() -> Self {
        ReOptions {
            restarts: 20,
            iters: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReEstimate {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub k: usize,
    pub method: ReMethod,
    pub certified: bool,
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} out of range 1..={d}")));
    }
    Ok(())
}

/// Alternate l1-ball projection with sphere renormalization, ending on the
/// sphere. Returns false when the iterate degenerates.
fn project_sphere_l1(z: &mut [f64], l1_radius: f64) -> bool {
    for _ in 0..ALT_PROJ_ROUNDS {
        if tensor::norm1(z) > l1_radius {
            let p = match model::project_l1_ball(z, l1_radius) {
                Ok(p) => p,
                Err(_) => return false,
            };
            z.copy_from_slice(&p);
        }
        let nrm = tensor::norm2(z);
        if nrm < 1e-14 {
            return false;
        }
        for v in z.iter_mut() {
            *v /= nrm;
        }
    }
    true
}

/// Multistart projected-gradient estimate of both restricted eigenvalue
/// extremes. Every feasible point evaluated during either pass updates both
/// trackers, so gamma_minus <= gamma_plus by construction. The mode argument
/// names the extreme the caller is after; the returned record always carries
/// both and does not depend on it.
pub fn restricted_eig(
    a: &DenseMatrix,
    k: usize,
    _mode: ReMode,
    opts: &ReOptions,
) -> Result<ReEstimate> {
    let d = a.cols();
    check_k(k, d)?;
    if opts.restarts == 0 || opts.iters == 0 {
        return Err(Error::invalid("restricted_eig: restarts and iters must be positive"));
    }
    let l1_radius = 2.0 * (k as f64).sqrt();
    let gram = a.transpose().matmul(a)?;
    let lam_max = tensor::spectral_norm_sq(a, 1e-8, 300)
        .map(|est| est.value)
        .unwrap_or(0.0);
    if lam_max <= 0.0 {
        // Zero design: every feasible direction gives 0.
        return Ok(ReEstimate {
            gamma_minus: 0.0,
            gamma_plus: 0.0,
            k,
            method: ReMethod::HeuristicMultistart,
            certified: false,
        });
    }
    let eta = 1.0 / (2.0 * lam_max);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut quad = |z: &[f64]| -> Result<()> {
        if tensor::norm1(z) <= l1_radius * (1.0 + L1_SLACK) {
            let gz = gram.matvec(z)?;
            let val = tensor::dot(z, &gz);
            lo = lo.min(val);
            hi = hi.max(val);
        }
        Ok(())
    };

    for (pass_tag, ascend) in [(TAG_RE_MIN, false), (TAG_RE_MAX, true)] {
        for restart in 0..opts.restarts {
            let mut gen = rng::rng_for(opts.seed, &[pass_tag, restart as u64]);
            let mut z: Vec<f64> = (0..d).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
            if !project_sphere_l1(&mut z, l1_radius) {
                continue;
            }
            quad(&z)?;
            for _ in 0..opts.iters {
                let grad = gram.matvec(&z)?;
                let sign = if ascend { 1.0 } else { -1.0 };
                for (zi, gi) in z.iter_mut().zip(grad.iter()) {
                    *zi += sign * eta * 2.0 * gi;
                }
                if !project_sphere_l1(&mut z, l1_radius) {
                    break;
                }
                quad(&z)?;
            }
        }
    }

    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(
            "restricted_eig: no feasible iterate was ever evaluated",
        ));
    }
    Ok(ReEstimate {
        gamma_minus: lo,
        gamma_plus: hi,
        k,
        method: ReMethod::HeuristicMultistart,
        certified: false,
    })
}

fn supports_of_size(d: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(s);
    fn rec(start: usize, d: usize, s: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s {
            out.push(cur.clone());
            return;
        }
        let remaining = s - cur.len();
        for i in start..=(d - remaining) {
            cur.push(i);
            rec(i + 1, d, s, cur, out);
            cur.pop();
        }
    }
    rec(0, d, s, &mut cur, &mut out);
    out
}

/// Certified extremes over all supports of size up to 4k. Only maximal
/// supports of size min(4k, d) are enumerated; smaller supports never attain
/// a strictly better extreme (eigenvalue interlacing of principal
/// submatrices). Limited to d <= 20.
pub fn restricted_eig_brute(a: &DenseMatrix, k: usize) -> Result<ReEstimate> {
    let d = a.cols();
    check_k(k, d)?;
    if d > 20 {
        return Err(Error::invalid(format!(
            "restricted_eig_brute supports d <= 20, got {d}"
        )));
    }
    let gram = a.transpose().matmul(a)?;
    let s = (4 * k).min(d);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for support in supports_of_size(d, s) {
        let sub = nalgebra::DMatrix::from_fn(s, s, |i, j| gram.get(support[i], support[j]));
        let eig = nalgebra::SymmetricEigen::new(sub);
        for &lam in eig.eigenvalues.iter() {
            lo = lo.min(lam);
            hi = hi.max(lam);
        }
    }
    Ok(ReEstimate {
        gamma_minus: lo.max(0.0),
        gamma_plus: hi.max(0.0),
        k,
        method: ReMethod::BruteForceSupports,
        certified: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_unit_extremes() {
        let a = DenseMatrix::identity(8);
        for k in [1usize, 2, 8] {
            let est = restricted_eig(&a, k, ReMode::Min, &ReOptions::default()).unwrap();
            assert!((est.gamma_minus - 1.0).abs() < 1e-9, "k={k}: {:?}", est);
            assert!((est.gamma_plus - 1.0).abs() < 1e-9);
            assert!(!est.certified);
            let brute = restricted_eig_brute(&a, k).unwrap();
            assert!((brute.gamma_minus - 1.0).abs() < 1e-12);
            assert!((brute.gamma_plus - 1.0).abs() < 1e-12);
            assert!(brute.certified);
        }
    }

    #[test]
    fn diag_two_one_enumeration() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let brute = restricted_eig_brute(&a, 1).unwrap();
        assert!((brute.gamma_plus - 4.0).abs() < 1e-12);
        assert!((brute.gamma_minus - 1.0).abs() < 1e-12);
        let est = restricted_eig(&a, 1, ReMode::Max, &ReOptions::default()).unwrap();
        assert!((est.gamma_plus - 4.0).abs() < 1e-6, "{:?}", est);
        assert!((est.gamma_minus - 1.0).abs() < 1e-6, "{:?}", est);
    }

    #[test]
    fn ordering_always_holds() {
        let mut gen = rng::rng_for(12, &[1]);
        for _ in 0..10 {
            let a = DenseMatrix::from_fn(9, 6, |_, _| gen.sample::<f64, _>(StandardNormal));
            let est = restricted_eig(&a, 2, ReMode::Min, &ReOptions::default()).unwrap();
            assert!(est.gamma_plus >= est.gamma_minus);
            assert!(est.gamma_minus >= 0.0);
        }
    }

    #[test]
    fn brute_matches_full_spectrum_when_unrestricted() {
        // 4k >= d makes the support sweep one full-dimensional eigenproblem.
        let mut gen = rng::rng_for(4, &[7]);
        let a = DenseMatrix::from_fn(10, 6, |_, _| gen.sample::<f64, _>(StandardNormal));
        let brute = restricted_eig_brute(&a, 2).unwrap();
        let svd = tensor::thin_svd(&a).unwrap();
        let smax = svd.s.first().copied().unwrap();
        let smin = svd.s.last().copied().unwrap();
        assert!((brute.gamma_plus - smax * smax).abs() < 1e-8 * smax * smax);
        assert!((brute.gamma_minus - smin * smin).abs() < 1e-8);
    }

    #[test]
    fn heuristic_within_brute_interval() {
        let mut gen = rng::rng_for(99, &[3]);
        for trial in 0..5u64 {
            let a = DenseMatrix::from_fn(12, 8, |_, _| gen.sample::<f64, _>(StandardNormal));
            let k = 2 + (trial as usize % 2);
            let brute = restricted_eig_brute(&a, k).unwrap();
            let est = restricted_eig(&a, k, ReMode::Min, &ReOptions::default()).unwrap();
            assert!(
                est.gamma_minus >= brute.gamma_minus - 1e-6,
                "trial {trial}: {} < {}",
                est.gamma_minus,
                brute.gamma_minus
            );
            assert!(
                est.gamma_plus <= brute.gamma_plus + 1e-6,
                "trial {trial}: {} > {}",
                est.gamma_plus,
                brute.gamma_plus
            );
        }
    }

    #[test]
    fn k_out_of_range_rejected() {
        let a = DenseMatrix::identity(4);
        assert!(restricted_eig(&a, 0, ReMode::Min, &ReOptions::default()).is_err());
        assert!(restricted_eig(&a, 5, ReMode::Min, &ReOptions::default()).is_err());
        assert!(restricted_eig_brute(&a, 0).is_err());
        let big = DenseMatrix::identity(21);
        assert!(restricted_eig_brute(&big, 1).is_err());
    }

    #[test]
    fn method_serde_names() {
        assert_eq!(
            serde_json::to_string(&ReMethod::HeuristicMultistart).unwrap(),
            r#""heuristic_multistart""#
        );
        assert_eq!(
            serde_json::to_string(&ReMethod::BruteForceSupports).unwrap(),
            r#""brute_force_supports""#
        );
        assert_eq!(serde_json::to_string(&ReMode::Min).unwrap(), r#""min""#);
    }
}
