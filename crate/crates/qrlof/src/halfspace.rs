//! Half-space indicator statistic (wire name `hz`), the classical benchmark
//! the projection test is compared against.
//!
//! The marked process is evaluated on componentwise half-spaces
//! `I(X_i <= t)` at the sample points `t = X_j`; the statistic is the largest
//! eigenvalue of the empirical second-moment matrix of the process, mirroring
//! the norm of the projection statistic so the two tests differ only in the
//! indicator family and share the bootstrap calibration.

use crate::error::{QrlofError, Result};
use crate::linalg::Matrix;
use crate::projection::{symmetrized, LofStatistic};
use crate::qreg::QuantileFit;

/// Statistic of the half-space indicator test:
/// `R(t) = n^{-1/2} sum_i psi(r_i) g_i I(X_i <= t)` evaluated at every sample
/// point, aggregated as the largest eigenvalue of `n^{-1} sum_j R(X_j)R(X_j)'`.
pub fn hz_statistic(fit: &QuantileFit, x: &Matrix) -> Result<LofStatistic> {
    let n = fit.n();
    if x.rows() != n {
        return Err(QrlofError::DimensionMismatch(format!(
            "covariates have {} rows but the fit has {n} observations",
            x.rows()
        )));
    }
    let d = x.cols();
    let q = fit.q();
    let mut core = Matrix::zeros(q, q);
    let mut process = vec![0.0f64; q];
    for j in 0..n {
        let t = x.row(j);
        process.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let xi = x.row(i);
            let dominated = (0..d).all(|k| xi[k] <= t[k]);
            if dominated {
                let s = fit.score(i);
                if s != 0.0 {
                    let g = fit.gradient_row(i);
                    for k in 0..q {
                        process[k] += s * g[k];
                    }
                }
            }
        }
        for a in 0..q {
            for b in 0..q {
                core.set(a, b, core.get(a, b) + process[a] * process[b]);
            }
        }
    }
    // R carries n^{-1/2} and the outer average another n^{-1}.
    let scale = 1.0 / (n as f64 * n as f64);
    let core = symmetrized(&core.scale(scale));
    let value = crate::linalg::largest_eigenvalue(&core)?;
    Ok(LofStatistic {
        value,
        core_matrix: core,
    })
}
