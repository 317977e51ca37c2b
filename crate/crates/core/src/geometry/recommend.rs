//! Sketch-size recommendation formulas. Each kind evaluates one closed-form
//! bound; min{...} forms evaluate every branch whose inputs were supplied and
//! report all of them so the active regime is visible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommendParams {
    pub rank: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub max_col_norm_sq: Option<f64>,
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub kappa_omega: Option<f64>,
    pub r: Option<usize>,
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    pub num_groups: Option<usize>,
    pub max_group_size: Option<usize>,
    pub max_group_op_ratio: Option<f64>,
    pub width: Option<f64>,
    pub rademacher_width: Option<f64>,
    pub sketch_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Recommendation {
    pub m: usize,
    pub terms: BTreeMap<String, f64>,
    pub delta: f64,
    pub c0: f64,
}

pub const RECOMMEND_KINDS: &[&str] = &[
    "theorem1",
    "theorem2_ros",
    "unconstrained",
    "unconstrained_ros",
    "lasso",
    "lasso_ros",
    "cs",
    "cs_ros",
    "svm",
    "nuclear",
    "nuclear_ros",
    "group",
];

fn need<T: Copy>(v: Option<T>, name: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("recommend kind '{kind}' needs param '{name}'")))
}

fn need_pos(v: Option<f64>, name: &str, kind: &str) -> Result<f64> {
    let x = need(v, name, kind)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "recommend kind '{kind}': param '{name}' must be positive and finite, got {x}"
        )));
    }
    Ok(x)
}

fn lnf(v: usize, name: &str, kind: &str) -> Result<f64> {
    if v < 2 {
        return Err(Error::invalid(format!(
            "recommend kind '{kind}': param '{name}' must be at least 2 to take its log"
        )));
    }
    Ok((v as f64).ln())
}

/// Smallest integer m >= 2 with m/ln(m) > rhs.
fn scan_m_over_log(rhs: f64) -> Result<usize> {
    let f = |m: usize| m as f64 / (m as f64).ln();
    if f(2) > rhs {
        return Ok(2);
    }
    // m/ln m is increasing on m >= 3, so exponential then binary search.
    let mut hi = 4usize;
    while f(hi) <= rhs {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::invalid(format!("no representable m satisfies m/ln m > {rhs}"))
        })?;
    }
    let mut lo = 3usize;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if f(mid) > rhs {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

pub fn recommend_sketch_size(
    kind: &str,
    delta: f64,
    c0: f64,
    params: &RecommendParams,
) -> Result<Recommendation> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1], got {delta}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::invalid(format!("c0 must be positive, got {c0}")));
    }
    let scale = c0 / (delta * delta);
    let mut terms: BTreeMap<String, f64> = BTreeMap::new();
    let put = |terms: &mut BTreeMap<String, f64>, name: &str, raw: f64| {
        terms.insert(name.to_string(), scale * raw);
    };

    let m = match kind {
        "theorem1" => {
            let w = need_pos(params.width, "width", kind)?;
            put(&mut terms, "width_term", w * w);
            None
        }
        "theorem2_ros" => {
            let r = need(params.rademacher_width, "rademacher_width", kind)?;
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid("rademacher_width must be nonnegative"));
            }
            let ws = need_pos(params.sketch_width, "sketch_width", kind)?;
            let n = need(params.n, "n", kind)?;
            if n == 0 {
                return Err(Error::invalid("n must be at least 1"));
            }
            let rhs = scale * (r * r + (n as f64).ln()) * ws * ws;
            terms.insert("ros_threshold".to_string(), rhs);
            Some(scan_m_over_log(rhs)?)
        }
        "unconstrained" => {
            let rank = need(params.rank, "rank", kind)?;
            put(&mut terms, "rank_term", rank as f64);
            None
        }
        "unconstrained_ros" => {
            let rank = need(params.rank, "rank", kind)?;
            let ln_n = lnf(need(params.n, "n", kind)?, "n", kind)?;
            put(&mut terms, "rank_log4_term", rank as f64 * ln_n.powi(4));
            None
        }
        "lasso" => {
            if let Some(rank) = params.rank {
                put(&mut terms, "rank_term", rank as f64);
            }
            if let (Some(col), Some(gm), Some(k), Some(d)) = (
                params.max_col_norm_sq,
                params.gamma_minus,
                params.k,
                params.d,
            ) {
                let gm = pos(gm, "gamma_minus", kind)?;
                put(
                    &mut terms,
                    "l1_term",
                    (col / gm) * k as f64 * lnf(d, "d", kind)?,
                );
            }
            None
        }
        "lasso_ros" => {
            let ln_n = lnf(need(params.n, "n", kind)?, "n", kind)?;
            let ln4 = ln_n.powi(4);
            if let Some(rank) = params.rank {
                put(&mut terms, "rank_log4_term", rank as f64 * ln4);
            }
            if let (Some(col), Some(gm), Some(k), Some(d)) = (
                params.max_col_norm_sq,
                params.gamma_minus,
                params.k,
                params.d,
            ) {
                let gm = pos(gm, "gamma_minus", kind)?;
                let base = (col / gm) * k as f64 * lnf(d, "d", kind)?;
                put(&mut terms, "l1_sq_term", base * base);
            }
            if let (Some(gp), Some(gm), Some(k), Some(d)) =
                (params.gamma_plus, params.gamma_minus, params.k, params.d)
            {
                let gm = pos(gm, "gamma_minus", kind)?;
                let cond = gp / gm;
                put(
                    &mut terms,
                    "cond_term",
                    cond * cond * k as f64 * lnf(d, "d", kind)? * ln4,
                );
            }
            None
        }
        "cs" => {
            let k = need(params.k, "k", kind)?;
            let ln_d = lnf(need(params.d, "d", kind)?, "d", kind)?;
            put(&mut terms, "sparsity_term", k as f64 * ln_d);
            None
        }
        "cs_ros" => {
            let k = need(params.k, "k", kind)? as f64;
            let ln_d = lnf(need(params.d, "d", kind)?, "d", kind)?;
            put(&mut terms, "log5_term", k * ln_d.powi(5));
            put(&mut terms, "k_sq_term", k * k * ln_d);
            None
        }
        "svm" => {
            let k = need(params.k, "k", kind)? as f64;
            let ln_d = lnf(need(params.d, "d", kind)?, "d", kind)?;
            let col = need_pos(params.max_col_norm_sq, "max_col_norm_sq", kind)?;
            let gm = need_pos(params.gamma_minus, "gamma_minus", kind)?;
            put(&mut terms, "margin_term", k * ln_d * (col / gm));
            None
        }
        "nuclear" => {
            let kappa = need_pos(params.kappa_omega, "kappa_omega", kind)?;
            let r = need(params.r, "r", kind)? as f64;
            let d1 = need(params.d1, "d1", kind)? as f64;
            let d2 = need(params.d2, "d2", kind)? as f64;
            put(&mut terms, "nuclear_term", kappa * kappa * r * (d1 + d2));
            None
        }
        "nuclear_ros" => {
            let kappa = need_pos(params.kappa_omega, "kappa_omega", kind)?;
            let r = need(params.r, "r", kind)? as f64;
            let d1 = need(params.d1, "d1", kind)?;
            let d2 = need(params.d2, "d2", kind)?;
            let ln4 = lnf(d1 * d2, "d1*d2", kind)?.powi(4);
            put(
                &mut terms,
                "nuclear_log4_term",
                kappa * kappa * r * (d1 + d2) as f64 * ln4,
            );
            None
        }
        "group" => {
            if let Some(rank) = params.rank {
                put(&mut terms, "rank_term", rank as f64);
            }
            if let (Some(ratio), Some(k), Some(ng), Some(gs)) = (
                params.max_group_op_ratio,
                params.k,
                params.num_groups,
                params.max_group_size,
            ) {
                let ratio = pos(ratio, "max_group_op_ratio", kind)?;
                put(
                    &mut terms,
                    "group_term",
                    ratio * (k as f64 * lnf(ng, "num_groups", kind)? + (k * gs) as f64),
                );
            }
            None
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown recommend kind '{other}'; expected one of {RECOMMEND_KINDS:?}"
            )));
        }
    };

    let m = match m {
        Some(scanned) => scanned,
        None => {
            let best = terms.values().copied().fold(f64::INFINITY, f64::min);
            if !best.is_finite() {
                return Err(Error::invalid(format!(
                    "recommend kind '{kind}': no branch had all its params supplied"
                )));
            }
            best.ceil() as usize
        }
    };
    Ok(Recommendation {
        m,
        terms,
        delta,
        c0,
    })
}

fn pos(x: f64, name: &str, kind: &str) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "recommend kind '{kind}': param '{name}' must be positive and finite, got {x}"
        )));
    }
    Ok(x)
}
