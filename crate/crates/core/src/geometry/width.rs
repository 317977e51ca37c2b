//! Gaussian-width estimation. The subspace estimator realizes the supremum
//! exactly through an orthonormal basis; the closed-form bounds come from the
//! constraint-specific width inequalities; the cone estimator lower-bounds
//! widths by Monte Carlo over sampled tangent directions.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ReEstimate;
use crate::model::{self, Problem};
use crate::rng;
use crate::sketch::SketchOperator;
use crate::tensor::{self, DenseMatrix};

const TAG_SUBSPACE_PROBE: u64 = 0x57D7;
const TAG_CONE_PROBE: u64 = 0x57D8;
const TAG_CONE_DIRS: u64 = 0x57D9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    SubspaceMc,
    L1Bound,
    NuclearBound,
    GroupBound,
    ConeMcLower,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub method: WidthMethod,
    pub samples: usize,
    pub stderr: f64,
}

fn mean_stderr(scores: &[f64]) -> (f64, f64) {
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Monte-Carlo width of the column space of A.
///
/// For a subspace the supremum over the intersected sphere is ||U^T g||_2
/// with U an orthonormal basis, so each probe realizes it exactly.
pub fn width_subspace_mc(a: &DenseMatrix, samples: usize, seed: u64) -> Result<WidthEstimate> {
    if samples == 0 {
        return Err(Error::invalid("width_subspace_mc needs at least one sample"));
    }
    let svd = tensor::thin_svd(a)?;
    let rank = svd.rank(1e-12);
    if rank == 0 {
        return Err(Error::invalid("width of a zero matrix is undefined"));
    }
    let u = svd.basis(1e-12);
    let n = a.rows();
    let mut scores = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut gen = rng::rng_for(seed, &[TAG_SUBSPACE_PROBE, i as u64]);
        let g: Vec<f64> = (0..n).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
        let proj = u.matvec_t(&g)?;
        scores.push(tensor::norm2(&proj));
    }
    let (value, stderr) = mean_stderr(&scores);
    Ok(WidthEstimate {
        value,
        method: WidthMethod::SubspaceMc,
        samples,
        stderr,
    })
}

/// Closed-form width bound for the l1-ball tangent cone:
/// 6 sqrt(k ln d) max_j ||a_j||_2 / sqrt(gamma_minus).
pub fn width_bound_l1(a: &DenseMatrix, k: usize, re: &ReEstimate) -> Result<WidthEstimate> {
    if k == 0 || k > a.cols() {
        return Err(Error::invalid(format!(
            "width_bound_l1: k = {k} out of range for d = {}",
            a.cols()
        )));
    }
    if !(re.gamma_minus > 0.0) {
        return Err(Error::invalid(
            "width_bound_l1: gamma_minus must be positive (bound undefined at 0)",
        ));
    }
    let d = a.cols();
    let mut max_col = 0.0f64;
    for j in 0..d {
        let nrm = tensor::norm2(&a.col_copy(j));
        max_col = max_col.max(nrm);
    }
    let value = 6.0 * (k as f64 * (d as f64).ln()).sqrt() * max_col / re.gamma_minus.sqrt();
    Ok(WidthEstimate {
        value,
        method: WidthMethod::L1Bound,
        samples: 0,
        stderr: 0.0,
    })
}

/// Closed-form width bound for the nuclear-ball tangent cone:
/// 2 (w_max/w_min) sqrt(r) (sqrt(d1) + sqrt(d2)).
pub fn width_bound_nuclear(omega: &[f64], r: usize, d1: usize, d2: usize) -> Result<WidthEstimate> {
    if omega.is_empty() {
        return Err(Error::invalid("width_bound_nuclear: empty weight vector"));
    }
    if r == 0 {
        return Err(Error::invalid("width_bound_nuclear: rank must be at least 1"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &w in omega {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("weights must be positive, got {w}")));
        }
        lo = lo.min(w);
        hi = hi.max(w);
    }
    let value = 2.0 * (hi / lo) * (r as f64).sqrt() * ((d1 as f64).sqrt() + (d2 as f64).sqrt());
    Ok(WidthEstimate {
        value,
        method: WidthMethod::NuclearBound,
        samples: 0,
        stderr: 0.0,
    })
}

/// Width bound for the group-l1 tangent cone, square root of the
/// group-sparse sketch-size term:
/// sqrt(max_g ||A_g||_op / gamma_minus * (k ln|G| + k M)).
pub fn width_bound_group(
    a: &DenseMatrix,
    groups: &[Vec<usize>],
    k: usize,
    re: &ReEstimate,
) -> Result<WidthEstimate> {
    if groups.is_empty() {
        return Err(Error::invalid("width_bound_group: no groups"));
    }
    if k == 0 || k > groups.len() {
        return Err(Error::invalid(format!(
            "width_bound_group: k = {k} out of range for {} groups",
            groups.len()
        )));
    }
    if !(re.gamma_minus > 0.0) {
        return Err(Error::invalid("width_bound_group: gamma_minus must be positive"));
    }
    let mut max_op = 0.0f64;
    for g in groups {
        if g.is_empty() {
            return Err(Error::invalid("width_bound_group: empty group"));
        }
        let sub = DenseMatrix::from_fn(a.rows(), g.len(), |i, j| a.get(i, g[j]));
        let op_sq = match tensor::spectral_norm_sq(&sub, 1e-10, 500) {
            Ok(est) => est.value,
            Err(_) => 0.0,
        };
        max_op = max_op.max(op_sq.sqrt());
    }
    let ng = groups.len() as f64;
    let max_size = groups.iter().map(|g| g.len()).max().unwrap_or(1) as f64;
    let value = (max_op / re.gamma_minus * (k as f64 * ng.ln() + k as f64 * max_size)).sqrt();
    Ok(WidthEstimate {
        value,
        method: WidthMethod::GroupBound,
        samples: 0,
        stderr: 0.0,
    })
}

/// Probe distribution for the sampled cone-width estimator.
pub enum ConeProbe<'a> {
    Gaussian,
    Rademacher,
    Sketch(&'a SketchOperator),
}

/// Monte-Carlo lower bound on a width of the transformed tangent cone at
/// xstar: directions are sampled feasible cone directions, each probe takes
/// the maximum absolute inner product over them.
pub fn width_cone_mc(
    p: &Problem,
    xstar: &[f64],
    directions: usize,
    probes: usize,
    seed: u64,
    probe: ConeProbe<'_>,
) -> Result<WidthEstimate> {
    if probes == 0 || directions == 0 {
        return Err(Error::invalid("width_cone_mc needs probes >= 1 and directions >= 1"));
    }
    let dirs = model::tangent_cone_sample(p, xstar, directions, rng::mix(seed, &[TAG_CONE_DIRS]))?;
    let n = p.n();

    // For sketch probes, pre-apply the operator to every direction.
    let sketched_dirs: Option<Vec<Vec<f64>>> = match &probe {
        ConeProbe::Sketch(op) => {
            let mut out = Vec::with_capacity(dirs.len());
            for d in &dirs {
                out.push(op.apply(d)?);
            }
            Some(out)
        }
        _ => None,
    };

    let mut scores = Vec::with_capacity(probes);
    for i in 0..probes {
        let mut gen = rng::rng_for(seed, &[TAG_CONE_PROBE, i as u64]);
        let score = match &probe {
            ConeProbe::Gaussian => {
                let g: Vec<f64> = (0..n).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
                dirs.iter()
                    .map(|z| tensor::dot(&g, z).abs())
                    .fold(0.0f64, f64::max)
            }
            ConeProbe::Rademacher => {
                let g: Vec<f64> = (0..n)
                    .map(|_| if gen.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                dirs.iter()
                    .map(|z| tensor::dot(&g, z).abs())
                    .fold(0.0f64, f64::max)
            }
            ConeProbe::Sketch(op) => {
                let m = op.m();
                let g: Vec<f64> = (0..m).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
                let scale = 1.0 / (m as f64).sqrt();
                sketched_dirs
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|sz| (tensor::dot(&g, sz) * scale).abs())
                    .fold(0.0f64, f64::max)
            }
        };
        scores.push(score);
    }
    let (value, stderr) = mean_stderr(&scores);
    Ok(WidthEstimate {
        value,
        method: WidthMethod::ConeMcLower,
        samples: probes,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReMethod;
    use crate::model::ConstraintSpec;
    use crate::tensor::DenseVector;

    fn re(gamma_minus: f64, k: usize) -> ReEstimate {
        ReEstimate {
            gamma_minus,
            gamma_plus: gamma_minus.max(1.0),
            k,
            method: ReMethod::BruteForceSupports,
            certified: true,
        }
    }

    #[test]
    fn single_column_matches_half_normal_mean() {
        let a = DenseMatrix::from_row_major(6, 1, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let est = width_subspace_mc(&a, 4000, 7).unwrap();
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (est.value - want).abs() <= 3.0 * est.stderr,
            "estimate {} vs {} (stderr {})",
            est.value,
            want,
            est.stderr
        );
    }

    #[test]
    fn identity_100_matches_chi_mean() {
        let a = DenseMatrix::identity(100);
        let est = width_subspace_mc(&a, 400, 11).unwrap();
        // E||g||_2 for g in R^100: sqrt(2) Gamma(50.5)/Gamma(50).
        let want = 9.975;
        assert!(
            (est.value - want).abs() / want < 0.05,
            "estimate {} vs {}",
            est.value,
            want
        );
        assert!(est.value <= 10.0 + 3.0 * est.stderr);
    }

    #[test]
    fn subspace_estimate_below_sqrt_rank() {
        for seed in 0..4 {
            let mut gen = rng::rng_for(seed, &[1]);
            let a = DenseMatrix::from_fn(30, 6, |_, _| gen.sample::<f64, _>(StandardNormal));
            let est = width_subspace_mc(&a, 300, seed).unwrap();
            assert!(est.value <= (6.0f64).sqrt() + 3.0 * est.stderr);
        }
    }

    #[test]
    fn l1_bound_instantiation_and_scale_invariance() {
        let d = 16usize;
        let a = DenseMatrix::identity(d);
        let est = width_bound_l1(&a, 1, &re(1.0, 1)).unwrap();
        let want = 6.0 * (d as f64).ln().sqrt();
        assert!((est.value - want).abs() < 1e-12);

        // Doubling the columns quadruples column norms squared and
        // gamma_minus alike, leaving the bound unchanged.
        let a2 = DenseMatrix::from_fn(d, d, |i, j| 2.0 * a.get(i, j));
        let est2 = width_bound_l1(&a2, 1, &re(4.0, 1)).unwrap();
        assert!((est2.value - est.value).abs() < 1e-12);

        assert!(width_bound_l1(&a, 1, &re(0.0, 1)).is_err());
    }

    #[test]
    fn nuclear_bound_instantiation() {
        let est = width_bound_nuclear(&[1.0, 1.0, 1.0, 1.0], 1, 4, 4).unwrap();
        assert!((est.value - 8.0).abs() < 1e-12);
        // Uniform scaling never changes the bound; condition number 2
        // doubles it.
        let est_scaled = width_bound_nuclear(&[5.0, 5.0, 5.0, 5.0], 1, 4, 4).unwrap();
        assert!((est_scaled.value - 8.0).abs() < 1e-12);
        let est_kappa = width_bound_nuclear(&[1.0, 2.0, 1.0, 1.0], 1, 4, 4).unwrap();
        assert!((est_kappa.value - 16.0).abs() < 1e-12);
    }

    #[test]
    fn group_bound_is_finite_and_positive() {
        let mut gen = rng::rng_for(3, &[9]);
        let a = DenseMatrix::from_fn(10, 6, |_, _| gen.sample::<f64, _>(StandardNormal));
        let groups = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
        let est = width_bound_group(&a, &groups, 2, &re(0.5, 2)).unwrap();
        assert!(est.value.is_finite() && est.value > 0.0);
        assert!(width_bound_group(&a, &groups, 0, &re(0.5, 2)).is_err());
    }

    #[test]
    fn cone_lower_bound_below_l1_upper_bound() {
        let d = 16usize;
        let n = 24usize;
        let mut gen = rng::rng_for(5, &[2]);
        let a = DenseMatrix::from_fn(n, d, |_, _| gen.sample::<f64, _>(StandardNormal));
        let p = Problem::new(
            a.clone(),
            DenseVector::zeros(n),
            ConstraintSpec::L1Ball { radius: 1.0 },
        )
        .unwrap();
        // Base point at a vertex of the ball, sparsity 1.
        let mut xstar = vec![0.0; d];
        xstar[0] = 1.0;
        let lower = width_cone_mc(&p, &xstar, 200, 200, 8, ConeProbe::Gaussian).unwrap();

        // Oracle gamma_minus: smallest eigenvalue of A^T A is a valid lower
        // bound for the restricted minimum.
        let svd = tensor::thin_svd(&a).unwrap();
        let smin = svd.s.last().copied().unwrap();
        let upper = width_bound_l1(&a, 2, &re(smin * smin, 2)).unwrap();
        assert!(
            lower.value <= upper.value,
            "cone lower {} exceeded closed-form upper {}",
            lower.value,
            upper.value
        );
    }

    #[test]
    fn cone_mc_deterministic_and_variants_run() {
        let p = Problem::new(
            DenseMatrix::identity(8),
            DenseVector::zeros(8),
            ConstraintSpec::Simplex,
        )
        .unwrap();
        let xstar = vec![0.125; 8];
        let a = width_cone_mc(&p, &xstar, 50, 60, 3, ConeProbe::Gaussian).unwrap();
        let b = width_cone_mc(&p, &xstar, 50, 60, 3, ConeProbe::Gaussian).unwrap();
        assert_eq!(a.value, b.value);
        let r = width_cone_mc(&p, &xstar, 50, 60, 3, ConeProbe::Rademacher).unwrap();
        assert!(r.value.is_finite());
        let op = crate::sketch::SketchOperator::build(
            crate::sketch::SketchSpec {
                kind: crate::sketch::SketchKind::RosHadamard,
                m: 16,
                seed: 1,
            },
            8,
        )
        .unwrap();
        let s = width_cone_mc(&p, &xstar, 50, 60, 3, ConeProbe::Sketch(&op)).unwrap();
        assert!(s.value.is_finite());
    }

    #[test]
    fn width_json_shape() {
        let est = WidthEstimate {
            value: 2.5,
            method: WidthMethod::L1Bound,
            samples: 0,
            stderr: 0.0,
        };
        let s = serde_json::to_string(&est).unwrap();
        assert!(s.contains(r#""method":"l1_bound""#), "{s}");
    }
}
