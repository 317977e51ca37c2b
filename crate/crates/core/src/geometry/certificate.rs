//! Per-instance optimality certificates built from the two variational
//! quantities z1 and z2 of the deterministic approximation bound
//! (1 + 2 z2/z1)^2. The subspace form is exact for unconstrained problems;
//! the sampled form is a conservative diagnostic for general constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::sketch::SketchOperator;
use crate::tensor::{self, DenseMatrix, DenseVector};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub z1: f64,
    pub z2: f64,
    pub bound: f64,
    pub exact: bool,
}

fn bound_from(z1: f64, z2: f64) -> f64 {
    if z1 <= 0.0 {
        f64::INFINITY
    } else {
        let b = 1.0 + 2.0 * z2 / z1;
        b * b
    }
}

fn unit_residual(a: &DenseMatrix, y: &[f64], xstar: &[f64]) -> Result<Vec<f64>> {
    let ax = a.matvec(xstar)?;
    let mut r: Vec<f64> = ax.iter().zip(y.iter()).map(|(p, q)| p - q).collect();
    let nrm = tensor::norm2(&r);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::invalid(
            "certificate undefined: residual at xstar is zero (or not finite)",
        ));
    }
    for v in r.iter_mut() {
        *v /= nrm;
    }
    Ok(r)
}

/// Exact certificate for the unconstrained geometry: the transformed tangent
/// cone is the column space of A, so both variational extremes are computed
/// in closed form through an orthonormal basis U.
pub fn certificate_subspace(
    a: &DenseMatrix,
    y: &[f64],
    xstar: &[f64],
    op: &SketchOperator,
) -> Result<Certificate> {
    if y.len() != a.rows() || xstar.len() != a.cols() {
        return Err(Error::dim("certificate_subspace: dimension mismatch"));
    }
    if op.n() != a.rows() {
        return Err(Error::dim(
            "certificate_subspace: sketch width must match design rows",
        ));
    }
    let u = unit_residual(a, y, xstar)?;
    let svd = tensor::thin_svd(a)?;
    let rank = svd.rank(1e-12);
    if rank == 0 {
        return Err(Error::invalid("certificate_subspace: zero design"));
    }
    let basis = svd.basis(1e-12);
    let m = op.m() as f64;

    let su = op.apply_left(&basis)?;
    let z1 = if op.m() < rank {
        0.0
    } else {
        let s = tensor::thin_svd(&su)?.s;
        let smin = s.last().copied().unwrap_or(0.0);
        smin * smin / m
    };

    // z2 = || U^T (S^T S u / m - u) ||_2
    let s_u = op.apply(&u)?;
    let st_s_u = op.apply_transpose(&s_u)?;
    let dev: Vec<f64> = st_s_u
        .iter()
        .zip(u.iter())
        .map(|(a, b)| a / m - b)
        .collect();
    let z2 = tensor::norm2(&basis.matvec_t(&dev)?);

    Ok(Certificate {
        z1,
        z2,
        bound: bound_from(z1, z2),
        exact: true,
    })
}

/// Sampled certificate over explicit cone directions (unit vectors in the
/// response space, e.g. from tangent_cone_sample). The sampled z1 upper
/// bounds the true infimum and the sampled z2 lower bounds the true
/// supremum, so the reported bound is a diagnostic, not a guarantee.
pub fn certificate_sampled(
    p: &Problem,
    xstar: &[f64],
    op: &SketchOperator,
    directions: &[DenseVector],
) -> Result<Certificate> {
    if directions.is_empty() {
        return Err(Error::invalid("certificate_sampled: no directions given"));
    }
    if op.n() != p.n() {
        return Err(Error::dim(
            "certificate_sampled: sketch width must match design rows",
        ));
    }
    let u = unit_residual(&p.a, &p.y, xstar)?;
    let m = op.m() as f64;
    let s_u = op.apply(&u)?;

    let mut z1 = f64::INFINITY;
    let mut z2 = 0.0f64;
    for v in directions {
        if v.len() != p.n() {
            return Err(Error::dim("certificate_sampled: direction length mismatch"));
        }
        let nrm = tensor::norm2(v);
        if nrm < 1e-12 {
            continue;
        }
        let vu: Vec<f64> = v.iter().map(|x| x / nrm).collect();
        let sv = op.apply(&vu)?;
        z1 = z1.min(tensor::norm2_sq(&sv) / m);
        z2 = z2.max((tensor::dot(&s_u, &sv) / m - tensor::dot(&u, &vu)).abs());
    }
    if !z1.is_finite() {
        return Err(Error::invalid(
            "certificate_sampled: every direction was numerically zero",
        ));
    }
    Ok(Certificate {
        z1,
        z2,
        bound: bound_from(z1, z2),
        exact: false,
    })
}

/// Per-symbol mutual information upper bound for a Gaussian sketch of an
/// n-symbol source observed through m rows: (m / 2n) ln(2 pi e gamma^2).
pub fn mutual_info_per_symbol_bound(m: usize, n: usize, gamma_sq: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("mutual_info_per_symbol_bound: n must be >= 1"));
    }
    if !(gamma_sq > 0.0 && gamma_sq.is_finite()) {
        return Err(Error::invalid(
            "mutual_info_per_symbol_bound: gamma_sq must be positive",
        ));
    }
    if m == 0 {
        return Ok(0.0);
    }
    Ok(m as f64 / (2.0 * n as f64) * (2.0 * std::f64::consts::PI * std::f64::consts::E * gamma_sq).ln())
}
