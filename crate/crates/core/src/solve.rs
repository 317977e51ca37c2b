//! Solvers: a direct path for unconstrained least squares and projected
//! gradient (optionally accelerated) for every constrained geometry, plus
//! builders for the SVM dual and weighted low-rank approximation programs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ConstraintSpec, Problem, Solution};
use crate::tensor::{self, DenseMatrix, DenseVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    pub grad_map_tol: f64,
    pub acceleration: bool,
    /// Multiplier in (0, 1] on the safe step 1/(2 L).
    pub step_safety: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 5000,
            rel_obj_tol: 1e-10,
            grad_map_tol: 1e-8,
            acceleration: true,
            step_safety: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.rel_obj_tol > 0.0) || !(self.grad_map_tol > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if !(self.step_safety > 0.0 && self.step_safety <= 1.0) {
            return Err(Error::invalid(format!(
                "step_safety must lie in (0, 1], got {}",
                self.step_safety
            )));
        }
        Ok(())
    }
}

/// Minimum-norm least-squares solution via the thin SVD.
pub fn solve_unconstrained(a: &DenseMatrix, y: &[f64]) -> Result<Solution> {
    if y.len() != a.rows() {
        return Err(Error::dim(format!(
            "solve_unconstrained: y has {} entries, design has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let f = tensor::thin_svd(a)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cut = smax * 1e-12;
    let uty = f.u.matvec_t(y)?;
    let mut coeffs = vec![0.0; f.s.len()];
    for (c, (&s, &p)) in coeffs.iter_mut().zip(f.s.iter().zip(uty.iter())) {
        if s > cut {
            *c = p / s;
        }
    }
    let x = f.v.matvec(&coeffs)?;
    let resid = residual(a, y, &x)?;
    Ok(Solution {
        objective: tensor::norm2_sq(&resid),
        x: DenseVector::from_vec(x),
        iterations: 0,
        feasibility_gap: 0.0,
        converged: true,
    })
}

fn residual(a: &DenseMatrix, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut r = a.matvec(x)?;
    for (ri, &yi) in r.iter_mut().zip(y.iter()) {
        *ri -= yi;
    }
    Ok(r)
}

/// Projected gradient with a fixed safe step and optional Nesterov
/// acceleration restarted whenever the objective would increase.
pub fn solve_projected_gradient(
    a: &DenseMatrix,
    y: &[f64],
    c: &ConstraintSpec,
    opts: &SolverOptions,
) -> Result<Solution> {
    let mut sink = Vec::new();
    solve_projected_gradient_traced(a, y, c, opts, &mut sink)
}

/// Same as [`solve_projected_gradient`], recording the objective value after
/// every iteration into `trace`.
pub fn solve_projected_gradient_traced(
    a: &DenseMatrix,
    y: &[f64],
    c: &ConstraintSpec,
    opts: &SolverOptions,
    trace: &mut Vec<f64>,
) -> Result<Solution> {
    opts.validate()?;
    if y.len() != a.rows() {
        return Err(Error::dim(format!(
            "solve_projected_gradient: y has {} entries, design has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let d = a.cols();
    c.validate(d)?;

    let mut x = model::project(c, &vec![0.0; d])?;
    let mut r_x = residual(a, y, &x)?;
    let mut f_x = tensor::norm2_sq(&r_x);

    let lips = match tensor::spectral_norm_sq(a, 1e-10, 500) {
        Ok(est) => est.value,
        // All-zero design: the gradient vanishes everywhere, so the start
        // point is already optimal.
        Err(_) => {
            let gap = model::feasibility_gap(c, &x)?;
            return Ok(Solution {
                objective: f_x,
                x: DenseVector::from_vec(x),
                iterations: 0,
                feasibility_gap: gap,
                converged: true,
            });
        }
    };
    let step = opts.step_safety / (2.0 * lips);

    let mut x_prev = x.clone();
    let mut r_prev = r_x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;

    let mut z = vec![0.0; d];
    while iterations < opts.max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = if opts.acceleration { (t - 1.0) / t_next } else { 0.0 };

        // Momentum point and its residual, both linear in stored state.
        let mut r_z = vec![0.0; r_x.len()];
        for i in 0..d {
            z[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        for i in 0..r_x.len() {
            r_z[i] = r_x[i] + beta * (r_x[i] - r_prev[i]);
        }

        let grad = a.matvec_t(&r_z)?;
        let mut stepped: Vec<f64> = Vec::with_capacity(d);
        for i in 0..d {
            stepped.push(z[i] - 2.0 * step * grad[i]);
        }
        let mut x_new = model::project(c, &stepped)?;
        let mut r_new = residual(a, y, &x_new)?;
        let mut f_new = tensor::norm2_sq(&r_new);
        let mut from: &[f64] = &z;
        let mut restarted = false;

        if beta != 0.0 && f_new > f_x {
            // Momentum overshot: fall back to a plain step from x, which the
            // step-size choice makes non-increasing.
            let grad_x = a.matvec_t(&r_x)?;
            let mut stepped: Vec<f64> = Vec::with_capacity(d);
            for i in 0..d {
                stepped.push(x[i] - 2.0 * step * grad_x[i]);
            }
            x_new = model::project(c, &stepped)?;
            r_new = residual(a, y, &x_new)?;
            f_new = tensor::norm2_sq(&r_new);
            from = &x;
            restarted = true;
        }

        let mut gm_sq = 0.0;
        for i in 0..d {
            let diff = from[i] - x_new[i];
            gm_sq += diff * diff;
        }
        let gm = gm_sq.sqrt() / step;
        let rel_drop = (f_x - f_new) / f_x.max(f64::MIN_POSITIVE);

        x_prev = std::mem::replace(&mut x, x_new);
        r_prev = std::mem::replace(&mut r_x, r_new);
        f_x = f_new;
        t = if restarted { 1.0 } else { t_next };
        trace.push(f_x);

        if gm < opts.grad_map_tol || rel_drop.abs() < opts.rel_obj_tol {
            converged = true;
            break;
        }
    }

    let gap = model::feasibility_gap(c, &x)?;
    let resid = residual(a, y, &x)?;
    Ok(Solution {
        objective: tensor::norm2_sq(&resid),
        x: DenseVector::from_vec(x),
        iterations,
        feasibility_gap: gap,
        converged,
    })
}

/// Dispatch: direct path when unconstrained, projected gradient otherwise.
pub fn solve(p: &Problem, opts: &SolverOptions) -> Result<Solution> {
    match &p.constraint {
        ConstraintSpec::Unconstrained => solve_unconstrained(&p.a, &p.y),
        c => solve_projected_gradient(&p.a, &p.y, c, opts),
    }
}

/// Simplex-constrained dual of the soft-margin SVM.
///
/// `samples` holds one training point per column; `labels` are +1/-1. The
/// design stacks the label-signed samples over (1/C) I, with zero
/// observations, so the objective is ||A D x||^2 + (1/C^2)||x||^2 on the
/// simplex.
pub fn build_svm_dual(samples: &DenseMatrix, labels: &[f64], c: f64) -> Result<Problem> {
    let (n, d) = (samples.rows(), samples.cols());
    if labels.len() != d {
        return Err(Error::dim(format!(
            "build_svm_dual: {} labels for {} samples",
            labels.len(),
            d
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("svm C must be positive, got {c}")));
    }
    for &z in labels {
        if z != 1.0 && z != -1.0 {
            return Err(Error::invalid(format!("labels must be +1 or -1, got {z}")));
        }
    }
    let mut b = DenseMatrix::zeros(n + d, d);
    for j in 0..d {
        for i in 0..n {
            b.set(i, j, labels[j] * samples.get(i, j));
        }
        b.set(n + j, j, 1.0 / c);
    }
    Problem::new(b, DenseVector::zeros(n + d), ConstraintSpec::Simplex)
}

/// Maps a dual solution back to primal weights w = sum_i x_i z_i a_i.
pub fn svm_primal_weights(samples: &DenseMatrix, labels: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = (samples.rows(), samples.cols());
    if labels.len() != d || x.len() != d {
        return Err(Error::dim("svm_primal_weights: label or solution length mismatch"));
    }
    let mut w = vec![0.0; n];
    for j in 0..d {
        let s = x[j] * labels[j];
        if s != 0.0 {
            for i in 0..n {
                w[i] += s * samples.get(i, j);
            }
        }
    }
    Ok(w)
}

/// Nuclear-ball-constrained weighted low-rank approximation of Z.
///
/// Variables are the columns of X stacked into one vector; the design is
/// blkdiag(w_j I) and the observations are the correspondingly weighted
/// columns of Z, so the objective is sum_j w_j^2 ||X_j - Z_j||^2.
pub fn build_weighted_lowrank(z: &DenseMatrix, weights: &[f64], r: f64) -> Result<Problem> {
    let (d1, d2) = (z.rows(), z.cols());
    if weights.len() != d2 {
        return Err(Error::dim(format!(
            "build_weighted_lowrank: {} weights for {} columns",
            weights.len(),
            d2
        )));
    }
    for &w in weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("weights must be positive, got {w}")));
        }
    }
    let dd = d1 * d2;
    let mut a = DenseMatrix::zeros(dd, dd);
    let mut y = vec![0.0; dd];
    for j in 0..d2 {
        for i in 0..d1 {
            let row = j * d1 + i;
            a.set(row, row, weights[j]);
            y[row] = weights[j] * z.get(i, j);
        }
    }
    Problem::new(
        a,
        DenseVector::from_vec(y),
        ConstraintSpec::NuclearBall { radius: r, d1, d2 },
    )
}
