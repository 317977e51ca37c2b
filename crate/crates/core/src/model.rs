//! Problem representation and exact Euclidean projections for the supported
//! constraint geometries: unconstrained, l1 ball, probability simplex,
//! nuclear-norm ball, and group-l1 ball.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{self, DenseMatrix, DenseVector};

pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Zero threshold when counting the support of a numerical solution.
pub const SUPPORT_ZERO_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Unconstrained,
    #[serde(rename = "l1")]
    L1Ball { radius: f64 },
    Simplex,
    #[serde(rename = "nuclear")]
    NuclearBall { radius: f64, d1: usize, d2: usize },
    #[serde(rename = "group_l1")]
    GroupL1Ball { radius: f64, groups: Vec<Vec<usize>> },
}

impl ConstraintSpec {
    /// Checks internal consistency against ambient dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            ConstraintSpec::Unconstrained | ConstraintSpec::Simplex => Ok(()),
            ConstraintSpec::L1Ball { radius } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("l1 radius must be positive, got {radius}")))
                }
            }
            ConstraintSpec::NuclearBall { radius, d1, d2 } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!(
                        "nuclear radius must be positive, got {radius}"
                    )));
                }
                if d1 * d2 != d {
                    return Err(Error::dim(format!(
                        "nuclear ball needs d1*d2 = {d}, got {d1}x{d2}"
                    )));
                }
                Ok(())
            }
            ConstraintSpec::GroupL1Ball { radius, groups } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!(
                        "group l1 radius must be positive, got {radius}"
                    )));
                }
                let mut seen = vec![false; d];
                for g in groups {
                    if g.is_empty() {
                        return Err(Error::invalid("empty group"));
                    }
                    for &i in g {
                        if i >= d {
                            return Err(Error::invalid(format!("group index {i} out of range {d}")));
                        }
                        if seen[i] {
                            return Err(Error::invalid(format!("group index {i} repeated")));
                        }
                        seen[i] = true;
                    }
                }
                if seen.iter().all(|&s| s) {
                    Ok(())
                } else {
                    Err(Error::invalid("groups do not cover every coordinate"))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub a: DenseMatrix,
    pub y: DenseVector,
    pub constraint: ConstraintSpec,
}

impl Problem {
    pub fn new(a: DenseMatrix, y: DenseVector, constraint: ConstraintSpec) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::dim("design matrix must be at least 1x1"));
        }
        if y.len() != a.rows() {
            return Err(Error::dim(format!(
                "y has {} entries, design has {} rows",
                y.len(),
                a.rows()
            )));
        }
        constraint.validate(a.cols())?;
        Ok(Problem { a, y, constraint })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub x: DenseVector,
    pub objective: f64,
    pub iterations: usize,
    pub feasibility_gap: f64,
    pub converged: bool,
}

impl Solution {
    pub fn x_slice(&self) -> &[f64] {
        &self.x
    }
}

/// ||Ax - y||_2^2.
pub fn objective(p: &Problem, x: &[f64]) -> Result<f64> {
    if x.len() != p.d() {
        return Err(Error::dim(format!(
            "objective: x has {} entries, expected {}",
            x.len(),
            p.d()
        )));
    }
    let ax = p.a.matvec(x)?;
    Ok(ax
        .iter()
        .zip(p.y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Number of entries with magnitude above the support threshold.
pub fn support_size(x: &[f64]) -> usize {
    x.iter().filter(|v| v.abs() > SUPPORT_ZERO_TOL).count()
}

/// Projection of `v` onto the l1 ball of radius `r` via sorted thresholding.
pub fn project_l1_ball(v: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("l1 radius must be positive, got {r}")));
    }
    if tensor::norm1(v) <= r {
        return Ok(v.to_vec());
    }
    let theta = soft_threshold_level(v, r);
    Ok(v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect())
}

/// Unique theta with sum_i max(|v_i| - theta, 0) = r, assuming ||v||_1 > r.
fn soft_threshold_level(v: &[f64], r: f64) -> f64 {
    let mut mags: Vec<(f64, usize)> = v.iter().map(|x| x.abs()).zip(0..).collect();
    mags.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, (m, _)) in mags.iter().enumerate() {
        cumsum += m;
        let cand = (cumsum - r) / (j as f64 + 1.0);
        if j + 1 == mags.len() || mags[j + 1].0 <= cand {
            theta = cand;
            break;
        }
    }
    theta.max(0.0)
}

/// Projection onto the probability simplex via sorted thresholding.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("simplex projection needs at least one entry"));
    }
    let mut sorted: Vec<(f64, usize)> = v.iter().copied().zip(0..).collect();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, (val, _)) in sorted.iter().enumerate() {
        cumsum += val;
        let cand = (cumsum - 1.0) / (j as f64 + 1.0);
        if j + 1 == sorted.len() || sorted[j + 1].0 <= cand {
            theta = cand;
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Projection onto {x : sum_g ||x_g||_2 <= r}.
///
/// Group norms are projected onto the l1 ball and each block rescaled, which
/// is the exact Euclidean projection for this norm.
pub fn project_group_l1_ball(v: &[f64], groups: &[Vec<usize>], r: f64) -> Result<Vec<f64>> {
    let w: Vec<f64> = groups
        .iter()
        .map(|g| tensor::norm2(&gather(v, g)))
        .collect();
    let w_proj = project_l1_ball(&w, r)?;
    let mut out = vec![0.0; v.len()];
    for (g, (&wg, &wpg)) in groups.iter().zip(w.iter().zip(w_proj.iter())) {
        let scale = if wg > 0.0 { wpg / wg } else { 0.0 };
        for &i in g {
            out[i] = v[i] * scale;
        }
    }
    Ok(out)
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Projection onto the nuclear-norm ball: SVD, project singular values onto
/// the l1 ball, reconstruct.
pub fn project_nuclear_ball(m: &DenseMatrix, r: f64) -> Result<DenseMatrix> {
    let f = tensor::thin_svd(m)?;
    let nuclear: f64 = f.s.iter().sum();
    if nuclear <= r {
        return Ok(m.clone());
    }
    let s_proj = project_l1_ball(&f.s, r)?;
    let k = f.s.len();
    let us = DenseMatrix::from_fn(f.u.rows(), k, |i, j| f.u.get(i, j) * s_proj[j]);
    us.matmul(&f.v.transpose())
}

/// Reshapes a vectorized matrix (column-major blocks) into d1 x d2.
pub fn unvec(x: &[f64], d1: usize, d2: usize) -> Result<DenseMatrix> {
    if x.len() != d1 * d2 {
        return Err(Error::dim(format!(
            "unvec: {} entries cannot form {d1}x{d2}",
            x.len()
        )));
    }
    Ok(DenseMatrix::from_fn(d1, d2, |i, j| x[j * d1 + i]))
}

/// Stacks the columns of a d1 x d2 matrix into a vector of length d1*d2.
pub fn vec_of(m: &DenseMatrix) -> Vec<f64> {
    let (d1, d2) = (m.rows(), m.cols());
    let mut out = vec![0.0; d1 * d2];
    for j in 0..d2 {
        for i in 0..d1 {
            out[j * d1 + i] = m.get(i, j);
        }
    }
    out
}

/// Euclidean projection dispatch over constraint kinds.
pub fn project(c: &ConstraintSpec, v: &[f64]) -> Result<Vec<f64>> {
    c.validate(v.len())?;
    match c {
        ConstraintSpec::Unconstrained => Ok(v.to_vec()),
        ConstraintSpec::L1Ball { radius } => project_l1_ball(v, *radius),
        ConstraintSpec::Simplex => project_simplex(v),
        ConstraintSpec::GroupL1Ball { radius, groups } => project_group_l1_ball(v, groups, *radius),
        ConstraintSpec::NuclearBall { radius, d1, d2 } => {
            let m = unvec(v, *d1, *d2)?;
            let p = project_nuclear_ball(&m, *radius)?;
            Ok(vec_of(&p))
        }
    }
}

/// How far `x` sits outside the feasible set (0 when feasible).
pub fn feasibility_gap(c: &ConstraintSpec, x: &[f64]) -> Result<f64> {
    c.validate(x.len())?;
    Ok(match c {
        ConstraintSpec::Unconstrained => 0.0,
        ConstraintSpec::L1Ball { radius } => (tensor::norm1(x) - radius).max(0.0),
        ConstraintSpec::Simplex => {
            let sum_gap = (x.iter().sum::<f64>() - 1.0).abs();
            let neg_gap = x.iter().fold(0.0f64, |m, &v| m.max(-v));
            sum_gap.max(neg_gap)
        }
        ConstraintSpec::GroupL1Ball { radius, groups } => {
            let gnorm: f64 = groups.iter().map(|g| tensor::norm2(&gather(x, g))).sum();
            (gnorm - radius).max(0.0)
        }
        ConstraintSpec::NuclearBall { radius, d1, d2 } => {
            let m = unvec(x, *d1, *d2)?;
            let f = tensor::thin_svd(&m)?;
            (f.s.iter().sum::<f64>() - radius).max(0.0)
        }
    })
}

/// Draws a random feasible point of the constraint set.
///
/// These samplers trade uniformity for cheap full-support coverage; they feed
/// Monte-Carlo diagnostics, not certified bounds.
pub fn sample_feasible(c: &ConstraintSpec, d: usize, gen: &mut impl Rng) -> Result<Vec<f64>> {
    Ok(match c {
        ConstraintSpec::Unconstrained => (0..d).map(|_| gen.sample::<f64, _>(StandardNormal)).collect(),
        ConstraintSpec::Simplex => dirichlet(d, gen),
        ConstraintSpec::L1Ball { radius } => {
            let w = dirichlet(d, gen);
            let t: f64 = radius * gen.random::<f64>();
            w.iter()
                .map(|&wi| {
                    let sign = if gen.random::<bool>() { 1.0 } else { -1.0 };
                    sign * wi * t
                })
                .collect()
        }
        ConstraintSpec::GroupL1Ball { radius, groups } => {
            let w = dirichlet(groups.len(), gen);
            let t: f64 = radius * gen.random::<f64>();
            let mut out = vec![0.0; d];
            for (g, &wg) in groups.iter().zip(w.iter()) {
                let dir: Vec<f64> = (0..g.len()).map(|_| gen.sample::<f64, _>(StandardNormal)).collect();
                let nd = tensor::norm2(&dir);
                if nd > 0.0 {
                    for (&i, &di) in g.iter().zip(dir.iter()) {
                        out[i] = di / nd * wg * t;
                    }
                }
            }
            out
        }
        ConstraintSpec::NuclearBall { radius, d1, d2 } => {
            let g = DenseMatrix::from_fn(*d1, *d2, |_, _| gen.sample::<f64, _>(StandardNormal));
            let f = tensor::thin_svd(&g)?;
            let nuclear: f64 = f.s.iter().sum();
            let t: f64 = radius * gen.random::<f64>();
            let scale = if nuclear > 0.0 { t / nuclear } else { 0.0 };
            let mut m = g;
            for v in m.data_mut() {
                *v *= scale;
            }
            vec_of(&m)
        }
    })
}

fn dirichlet(d: usize, gen: &mut impl Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..d)
        .map(|_| -(1.0 - gen.random::<f64>()).ln())
        .collect();
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        for v in w.iter_mut() {
            *v /= s;
        }
    } else {
        w = vec![1.0 / d as f64; d];
    }
    w
}

/// Unit directions A(x - xstar)/||A(x - xstar)|| for random feasible x.
///
/// Directions shorter than 1e-10 before normalization are discarded. Stops
/// after 100 * count draws; errors only if nothing was found by then.
pub fn tangent_cone_sample(
    p: &Problem,
    xstar: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<DenseVector>> {
    if xstar.len() != p.d() {
        return Err(Error::dim("tangent_cone_sample: xstar dimension mismatch"));
    }
    let gap = feasibility_gap(&p.constraint, xstar)?;
    if gap > 1e-8 {
        return Err(Error::invalid(format!(
            "tangent_cone_sample: xstar infeasible by {gap:.3e}"
        )));
    }
    let mut gen = rng::rng_for(seed, &[0x7A46]);
    let mut out = Vec::with_capacity(count);
    let budget = 100usize.saturating_mul(count);
    let mut draws = 0;
    while out.len() < count && draws < budget {
        draws += 1;
        let x = sample_feasible(&p.constraint, p.d(), &mut gen)?;
        let diff: Vec<f64> = x.iter().zip(xstar.iter()).map(|(a, b)| a - b).collect();
        let mut dir = p.a.matvec(&diff)?;
        let norm = tensor::norm2(&dir);
        if norm < 1e-10 {
            continue;
        }
        for v in dir.iter_mut() {
            *v /= norm;
        }
        out.push(DenseVector::from_vec(dir));
    }
    if out.is_empty() {
        return Err(Error::invalid(
            "tangent_cone_sample: no usable feasible directions found",
        ));
    }
    Ok(out)
}
