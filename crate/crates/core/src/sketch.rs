//! Random sketch operators: dense Gaussian, dense Rademacher, and the
//! randomized orthonormal system built from a fast Walsh-Hadamard transform.
//!
//! Entries are scaled so that E[S^T S / m] = I on the original coordinates,
//! which makes ||S v||^2 / m an unbiased estimate of ||v||^2.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::rng;
use crate::tensor::{self, DenseMatrix, DenseVector};

const TAG_GAUSSIAN: u64 = 0x5A67;
const TAG_RADEMACHER: u64 = 0x5A68;
const TAG_ROS_SIGNS: u64 = 0x5A69;
const TAG_ROS_ROWS: u64 = 0x5A6A;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    Gaussian,
    Rademacher,
    #[serde(rename = "ros")]
    RosHadamard,
}

impl SketchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Rademacher => "rademacher",
            SketchKind::RosHadamard => "ros",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SketchKind::Gaussian),
            "rademacher" => Ok(SketchKind::Rademacher),
            "ros" => Ok(SketchKind::RosHadamard),
            other => Err(Error::invalid(format!(
                "unknown sketch kind {other:?}, expected gaussian|rademacher|ros"
            ))),
        }
    }

    pub(crate) fn tag(&self) -> u64 {
        match self {
            SketchKind::Gaussian => TAG_GAUSSIAN,
            SketchKind::Rademacher => TAG_RADEMACHER,
            SketchKind::RosHadamard => TAG_ROS_SIGNS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub m: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
enum Payload {
    Dense(DenseMatrix),
    Ros {
        signs: Vec<f64>,
        rows: Vec<usize>,
        n_pad: usize,
    },
}

/// A realized m x n sketch operator.
#[derive(Clone, Debug)]
pub struct SketchOperator {
    pub spec: SketchSpec,
    n: usize,
    payload: Payload,
}

impl SketchOperator {
    /// Materializes sketch rows for the given input dimension.
    ///
    /// Rows are generated independently from (seed, row index), so the first
    /// rows of two operators that differ only in m coincide.
    pub fn build(spec: SketchSpec, n: usize) -> Result<Self> {
        if spec.m == 0 || n == 0 {
            return Err(Error::dim("sketch needs m >= 1 and n >= 1"));
        }
        let payload = match spec.kind {
            SketchKind::Gaussian => {
                let mut s = DenseMatrix::zeros(spec.m, n);
                for i in 0..spec.m {
                    let mut gen = rng::rng_for(spec.seed, &[TAG_GAUSSIAN, i as u64]);
                    let row = s.row_mut(i);
                    for v in row.iter_mut() {
                        *v = gen.sample::<f64, _>(StandardNormal);
                    }
                }
                Payload::Dense(s)
            }
            SketchKind::Rademacher => {
                let mut s = DenseMatrix::zeros(spec.m, n);
                for i in 0..spec.m {
                    let mut gen = rng::rng_for(spec.seed, &[TAG_RADEMACHER, i as u64]);
                    let row = s.row_mut(i);
                    for v in row.iter_mut() {
                        *v = if gen.random::<bool>() { 1.0 } else { -1.0 };
                    }
                }
                Payload::Dense(s)
            }
            SketchKind::RosHadamard => {
                let n_pad = tensor::next_pow2(n);
                let mut gen = rng::rng_for(spec.seed, &[TAG_ROS_SIGNS]);
                let signs: Vec<f64> = (0..n_pad)
                    .map(|_| if gen.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let rows: Vec<usize> = (0..spec.m)
                    .map(|i| {
                        let mut r = rng::rng_for(spec.seed, &[TAG_ROS_ROWS, i as u64]);
                        r.random_range(0..n_pad)
                    })
                    .collect();
                Payload::Ros { signs, rows, n_pad }
            }
        };
        Ok(SketchOperator { spec, n, payload })
    }

    /// Wraps an explicit matrix as a sketch operator (used by tests and by
    /// file-driven workflows).
    pub fn from_dense(s: DenseMatrix, seed: u64) -> Result<Self> {
        if s.rows() == 0 || s.cols() == 0 {
            return Err(Error::dim("sketch needs m >= 1 and n >= 1"));
        }
        Ok(SketchOperator {
            spec: SketchSpec {
                kind: SketchKind::Gaussian,
                m: s.rows(),
                seed,
            },
            n: s.cols(),
            payload: Payload::Dense(s),
        })
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// S v.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::dim(format!(
                "sketch apply: input has {} entries, expected {}",
                v.len(),
                self.n
            )));
        }
        match &self.payload {
            Payload::Dense(s) => s.matvec(v),
            Payload::Ros { signs, rows, n_pad } => {
                let mut buf = vec![0.0; *n_pad];
                for (b, (&vi, &si)) in buf.iter_mut().zip(v.iter().zip(signs.iter())) {
                    *b = vi * si;
                }
                tensor::fwht_inplace(&mut buf)?;
                Ok(rows.iter().map(|&r| buf[r]).collect())
            }
        }
    }

    /// S^T w, mapping back to the original n coordinates.
    pub fn apply_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.spec.m {
            return Err(Error::dim(format!(
                "sketch apply_transpose: input has {} entries, expected {}",
                w.len(),
                self.spec.m
            )));
        }
        match &self.payload {
            Payload::Dense(s) => s.matvec_t(w),
            Payload::Ros { signs, rows, n_pad } => {
                let mut buf = vec![0.0; *n_pad];
                for (&r, &wi) in rows.iter().zip(w.iter()) {
                    buf[r] += wi;
                }
                tensor::fwht_inplace(&mut buf)?;
                let mut out: Vec<f64> = buf[..self.n].to_vec();
                for (o, &si) in out.iter_mut().zip(signs.iter()) {
                    *o *= si;
                }
                Ok(out)
            }
        }
    }

    /// S M, applied column by column.
    pub fn apply_left(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.rows() != self.n {
            return Err(Error::dim(format!(
                "sketch apply_left: matrix has {} rows, expected {}",
                m.rows(),
                self.n
            )));
        }
        let mut out = DenseMatrix::zeros(self.spec.m, m.cols());
        let mut col = vec![0.0; self.n];
        for j in 0..m.cols() {
            for i in 0..self.n {
                col[i] = m.get(i, j);
            }
            let sc = self.apply(&col)?;
            for i in 0..self.spec.m {
                out.set(i, j, sc[i]);
            }
        }
        Ok(out)
    }

    /// Materializes the operator as an explicit m x n matrix.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        match &self.payload {
            Payload::Dense(s) => Ok(s.clone()),
            Payload::Ros { .. } => {
                let sm = self.apply_left(&DenseMatrix::identity(self.n))?;
                Ok(sm)
            }
        }
    }
}

/// Compresses a problem to m rows: min ||S(Ax - y)||^2 over the same
/// constraint set.
pub fn sketch_problem(p: &Problem, op: &SketchOperator) -> Result<Problem> {
    if op.n() != p.n() {
        return Err(Error::dim(format!(
            "sketch_problem: operator expects {} rows, problem has {}",
            op.n(),
            p.n()
        )));
    }
    let sa = op.apply_left(&p.a)?;
    let sy = op.apply(&p.y)?;
    Problem::new(sa, DenseVector::from_vec(sy), p.constraint.clone())
}
