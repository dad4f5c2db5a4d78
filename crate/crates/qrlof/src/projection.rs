//! Projection-based lack-of-fit statistic.
//!
//! The test aggregates the cumulative-sum process of signed residuals over
//! half-lines of projected covariates, `I(beta'X_i <= u)`, across all unit
//! directions `beta`. Integrating the indicator products over the sphere in
//! closed form yields an n x n matrix of accumulated complementary angles
//! between difference vectors of covariate triples; the statistic is the
//! largest eigenvalue of a q x q quadratic form in that matrix. A Monte Carlo
//! sphere-integration oracle of the defining integral is provided for
//! cross-checking.

use crate::error::{QrlofError, Result};
use crate::linalg::{self, Matrix};
use crate::parallel;
use crate::qreg::QuantileFit;
use crate::rng::stream_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Accumulated complementary-angle weights `A[i][j] = c_d * sum_r angle_ijr`,
/// where `angle_ijr` is the complementary angle between `X_i - X_r` and
/// `X_j - X_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeightMatrix {
    /// Symmetric n x n weight matrix, already scaled by `scale_constant`.
    pub values: Matrix,
    /// Covariate dimension the weights were built from.
    pub dimension_d: usize,
    /// The constant `pi^(d/2 - 1) / Gamma(d/2 + 1)`.
    pub scale_constant: f64,
}

impl ProjectionWeightMatrix {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// Same weights rescaled by `c > 0`. The statistic is homogeneous in the
    /// weights, so bootstrap p-values are invariant under this.
    pub fn scaled(&self, c: f64) -> ProjectionWeightMatrix {
        ProjectionWeightMatrix {
            values: self.values.scale(c),
            dimension_d: self.dimension_d,
            scale_constant: self.scale_constant * c,
        }
    }
}

/// The lack-of-fit statistic together with the q x q matrix whose largest
/// eigenvalue it is.
#[derive(Debug, Clone, PartialEq)]
pub struct LofStatistic {
    pub value: f64,
    pub core_matrix: Matrix,
}

/// Complementary angle (in radians) between `u` and `v`:
/// `pi - arccos(<u,v> / (|u||v|))`, clipped against rounding.
///
/// Degenerate cases follow the underlying sphere integral of
/// `I(beta'u <= 0) I(beta'v <= 0)`: both vectors zero gives `2*pi` (both
/// indicators always hold), exactly one zero gives `pi` (a half sphere).
pub fn complementary_angle(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let nu = linalg::dot(u, u).sqrt();
    let nv = linalg::dot(v, v).sqrt();
    match (nu == 0.0, nv == 0.0) {
        (true, true) => 2.0 * PI,
        (true, false) | (false, true) => PI,
        (false, false) => {
            let cos = (linalg::dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
            PI - cos.acos()
        }
    }
}

/// The scale constant `pi^(d/2 - 1) / Gamma(d/2 + 1)`.
pub fn weight_scale_constant(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    PI.powf(half - 1.0) / gamma(half + 1.0)
}

/// Surface measure of the unit sphere in `R^d`: `2 pi^(d/2) / Gamma(d/2)`.
fn sphere_surface(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Builds the projection weight matrix from the covariate rows of `x`.
///
/// O(n^3 d) work, parallelized over the row index; the inner sums run in a
/// fixed order so the result is bit-identical for any thread count. Computed
/// once per dataset and reused across bootstrap replications.
pub fn weight_matrix(x: &Matrix) -> Result<ProjectionWeightMatrix> {
    if !x.is_finite() {
        return Err(QrlofError::NonFiniteInput);
    }
    let n = x.rows();
    let d = x.cols();
    let c_d = weight_scale_constant(d);

    // Row i holds the angle sums for pairs (i, j), j >= i.
    let tails: Vec<Vec<f64>> = parallel::map_indexed(n, |i| {
        let xi = x.row(i);
        let mut tail = vec![0.0f64; n - i];
        let mut di = vec![0.0f64; d];
        for r in 0..n {
            let xr = x.row(r);
            for k in 0..d {
                di[k] = xi[k] - xr[k];
            }
            let ni2 = linalg::dot(&di, &di);
            // The (i, i) term is exact: equal vectors have complementary
            // angle pi (2*pi when both are zero); arccos would be
            // ill-conditioned there.
            tail[0] += if ni2 == 0.0 { 2.0 * PI } else { PI };
            for j in (i + 1)..n {
                let xj = x.row(j);
                let mut dot_ij = 0.0;
                let mut nj2 = 0.0;
                for k in 0..d {
                    let djk = xj[k] - xr[k];
                    dot_ij += di[k] * djk;
                    nj2 += djk * djk;
                }
                tail[j - i] += if ni2 == 0.0 && nj2 == 0.0 {
                    2.0 * PI
                } else if ni2 == 0.0 || nj2 == 0.0 {
                    PI
                } else {
                    let cos = (dot_ij / (ni2.sqrt() * nj2.sqrt())).clamp(-1.0, 1.0);
                    PI - cos.acos()
                };
            }
        }
        tail
    });

    let mut values = Matrix::zeros(n, n);
    for (i, tail) in tails.iter().enumerate() {
        for (offset, &sum) in tail.iter().enumerate() {
            let j = i + offset;
            let w = c_d * sum;
            values.set(i, j, w);
            values.set(j, i, w);
        }
    }
    Ok(ProjectionWeightMatrix {
        values,
        dimension_d: d,
        scale_constant: c_d,
    })
}

/// Per-observation marks `psi(r_i) * gradient_i` as the rows of an n x q
/// matrix.
fn score_marks(fit: &QuantileFit) -> Matrix {
    Matrix::from_fn(fit.n(), fit.q(), |i, k| {
        fit.score(i) * fit.gradient_row(i)[k]
    })
}

/// Closed form of the projection statistic: the largest eigenvalue of
/// `n^{-2} sum_i sum_j psi(r_i) psi(r_j) g_i g_j' A[i][j]`, with the gradient
/// rows taken from the fitted null model.
pub fn lof_statistic(fit: &QuantileFit, weights: &ProjectionWeightMatrix) -> Result<LofStatistic> {
    let n = fit.n();
    if weights.n() != n {
        return Err(QrlofError::DimensionMismatch(format!(
            "weight matrix is {} x {} but the fit has {} observations",
            weights.n(),
            weights.n(),
            n
        )));
    }
    let q = fit.q();
    let marks = score_marks(fit);
    let scale = 1.0 / (n as f64 * n as f64);

    let mut core = Matrix::zeros(q, q);
    for i in 0..n {
        let mi = marks.row(i);
        if mi.iter().all(|&v| v == 0.0) {
            continue;
        }
        for j in 0..n {
            let a_ij = weights.values.get(i, j);
            let mj = marks.row(j);
            for a in 0..q {
                let f = scale * a_ij * mi[a];
                if f != 0.0 {
                    for b in 0..q {
                        core.set(a, b, core.get(a, b) + f * mj[b]);
                    }
                }
            }
        }
    }
    // Accumulation order breaks exact symmetry; restore it before solving.
    let core = symmetrized(&core);
    let value = linalg::largest_eigenvalue(&core)?;
    Ok(LofStatistic {
        value,
        core_matrix: core,
    })
}

pub(crate) fn symmetrized(m: &Matrix) -> Matrix {
    let n = m.rows();
    Matrix::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
}

/// The marked empirical process at direction `beta` and threshold `u`:
/// `n^{-1/2} sum_i psi(r_i) g_i I(beta'X_i <= u)`.
///
/// `beta` must be a unit vector (within 1e-12).
pub fn projected_process(fit: &QuantileFit, x: &Matrix, beta: &[f64], u: f64) -> Vec<f64> {
    assert_eq!(x.rows(), fit.n(), "covariate rows must match the fit");
    assert_eq!(x.cols(), beta.len(), "beta must match the covariate dimension");
    let norm = linalg::dot(beta, beta).sqrt();
    assert!((norm - 1.0).abs() <= 1e-12, "beta must be a unit vector");
    let n = fit.n();
    let q = fit.q();
    let mut acc = vec![0.0f64; q];
    for i in 0..n {
        if linalg::dot(x.row(i), beta) <= u {
            let s = fit.score(i);
            if s != 0.0 {
                let g = fit.gradient_row(i);
                for k in 0..q {
                    acc[k] += s * g[k];
                }
            }
        }
    }
    let root_n = (n as f64).sqrt();
    acc.iter_mut().for_each(|v| *v /= root_n);
    acc
}

const MC_BATCH: usize = 2048;

/// Monte Carlo sphere-integration oracle for the defining integral of the
/// projection statistic.
///
/// Draws directions uniformly on the unit sphere, evaluates the process at
/// the projected sample points, and returns the largest eigenvalue of the
/// sphere-surface-scaled average of the outer products. Draw batches own
/// fixed RNG streams derived from `seed`, so results are reproducible under
/// any thread count.
pub fn mc_statistic(
    fit: &QuantileFit,
    x: &Matrix,
    num_projections: usize,
    seed: u64,
) -> Result<f64> {
    if num_projections == 0 {
        return Err(QrlofError::InvalidConfig(
            "num_projections must be at least 1".into(),
        ));
    }
    let n = fit.n();
    if x.rows() != n {
        return Err(QrlofError::DimensionMismatch(format!(
            "covariates have {} rows but the fit has {n} observations",
            x.rows()
        )));
    }
    let d = x.cols();
    let q = fit.q();
    let marks = score_marks(fit);

    let num_batches = num_projections.div_ceil(MC_BATCH);
    let batch_sums: Vec<Vec<f64>> = parallel::map_indexed(num_batches, |batch| {
        let mut rng = stream_rng(seed, batch as u64);
        let draws = MC_BATCH.min(num_projections - batch * MC_BATCH);
        let mut acc = vec![0.0f64; q * q];
        let mut beta = vec![0.0f64; d];
        let mut proj: Vec<(f64, usize)> = Vec::with_capacity(n);
        let mut prefix = vec![0.0f64; q];
        for _ in 0..draws {
            loop {
                let mut norm2 = 0.0;
                for b in beta.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *b = z;
                    norm2 += z * z;
                }
                if norm2 > 1e-24 {
                    let inv = norm2.sqrt().recip();
                    beta.iter_mut().for_each(|b| *b *= inv);
                    break;
                }
            }
            proj.clear();
            for i in 0..n {
                proj.push((linalg::dot(x.row(i), &beta), i));
            }
            proj.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            prefix.iter_mut().for_each(|v| *v = 0.0);
            let mut pos = 0;
            while pos < n {
                // Advance over a tie group before evaluating the process at
                // any of its members.
                let mut end = pos + 1;
                while end < n && proj[end].0 == proj[pos].0 {
                    end += 1;
                }
                for &(_, i) in &proj[pos..end] {
                    let m = marks.row(i);
                    for k in 0..q {
                        prefix[k] += m[k];
                    }
                }
                let copies = (end - pos) as f64;
                for a in 0..q {
                    for b in a..q {
                        acc[a * q + b] += copies * prefix[a] * prefix[b];
                    }
                }
                pos = end;
            }
        }
        acc
    });

    let mut total = vec![0.0f64; q * q];
    for batch in &batch_sums {
        for (t, v) in total.iter_mut().zip(batch) {
            *t += v;
        }
    }
    // The process carries n^{-1/2}, its empirical second moment another
    // n^{-1}; both are folded into the final scale.
    let scale = sphere_surface(d) / (num_projections as f64 * n as f64 * n as f64);
    let core = Matrix::from_fn(q, q, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        scale * total[lo * q + hi]
    });
    linalg::largest_eigenvalue(&core)
}
