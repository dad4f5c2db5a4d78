//! Primal simplex solver for check-loss minimization.
//!
//! The fit is posed as the linear program
//!
//! ```text
//! min  tau * 1'u + (1 - tau) * 1'v
//! s.t. D theta + u - v = y,   u >= 0, v >= 0, theta free,
//! ```
//!
//! with `theta` split into positive and negative parts. The starting basis
//! `u_i` (or `v_i` for negative responses) is feasible, so no phase-1 pass is
//! needed. Entering and leaving variables follow Bland's smallest-index rule,
//! which makes the solve deterministic and free of cycling, and the optimum is
//! an exact basic solution: the observations interpolated by the optimal basis
//! get residuals that are exactly zero.

use crate::error::{QrlofError, Result};
use crate::linalg::{self, Matrix};

const REDUCED_COST_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-10;

pub(crate) struct LpFit {
    pub theta: Vec<f64>,
    /// Residuals y - D theta taken from the basic solution; exactly zero for
    /// observations whose u and v are both nonbasic.
    pub residuals: Vec<f64>,
}

#[inline]
fn variable_cost(var: usize, q: usize, n: usize, tau: f64) -> f64 {
    if var < 2 * q {
        0.0
    } else if var < 2 * q + n {
        tau
    } else {
        1.0 - tau
    }
}

/// Minimizes `sum_i rho_tau(y_i - d_i'theta)`. The design must have full
/// column rank (checked by the caller).
pub(crate) fn solve_check_loss_lp(design: &Matrix, y: &[f64], tau: f64) -> Result<LpFit> {
    let n = design.rows();
    let q = design.cols();
    debug_assert_eq!(n, y.len());
    debug_assert!(q >= 1 && n >= q);

    // Variable order for Bland's rule: theta+ (q), theta- (q), u (n), v (n).
    let n_vars = 2 * q + 2 * n;
    let mut basis: Vec<usize> = Vec::with_capacity(n);
    let mut in_basis = vec![false; n_vars];
    let mut binv = vec![0.0f64; n * n]; // B^{-1}, row-major
    let mut xb = vec![0.0f64; n];
    for i in 0..n {
        let var = if y[i] >= 0.0 { 2 * q + i } else { 2 * q + n + i };
        basis.push(var);
        in_basis[var] = true;
        binv[i * n + i] = if y[i] >= 0.0 { 1.0 } else { -1.0 };
        xb[i] = y[i].abs();
    }

    let max_iter = 400 + 60 * n;
    let mut pi = vec![0.0f64; n];
    let mut col = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut theta_dots = vec![(0.0f64, 0.0f64); q]; // (pi'D_k, sum |pi_i D_ik|)
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > max_iter {
            return Err(QrlofError::SolverStalled { iterations });
        }

        // pi' = c_B' B^{-1}; only u/v basics carry cost.
        pi.iter_mut().for_each(|p| *p = 0.0);
        for (k, &var) in basis.iter().enumerate() {
            let cost = variable_cost(var, q, n, tau);
            if cost != 0.0 {
                let row = &binv[k * n..(k + 1) * n];
                for j in 0..n {
                    pi[j] += cost * row[j];
                }
            }
        }

        // Pricing in Bland order; the first variable with a negative reduced
        // cost enters. theta columns use a magnitude-aware tolerance.
        let mut entering = None;
        for k in 0..q {
            let mut t = 0.0;
            let mut s = 0.0;
            for i in 0..n {
                let a = design.get(i, k);
                t += pi[i] * a;
                s += (pi[i] * a).abs();
            }
            theta_dots[k] = (t, s);
        }
        for k in 0..q {
            // theta+_k has reduced cost -pi'D_k
            if !in_basis[k] && theta_dots[k].0 > REDUCED_COST_TOL * (1.0 + theta_dots[k].1) {
                entering = Some(k);
                break;
            }
        }
        if entering.is_none() {
            for k in 0..q {
                // theta-_k has reduced cost +pi'D_k
                if !in_basis[q + k] && -theta_dots[k].0 > REDUCED_COST_TOL * (1.0 + theta_dots[k].1)
                {
                    entering = Some(q + k);
                    break;
                }
            }
        }
        if entering.is_none() {
            for i in 0..n {
                let var = 2 * q + i;
                if !in_basis[var] && pi[i] - tau > REDUCED_COST_TOL * (1.0 + pi[i].abs()) {
                    entering = Some(var);
                    break;
                }
            }
        }
        if entering.is_none() {
            for i in 0..n {
                let var = 2 * q + n + i;
                if !in_basis[var] && -pi[i] - (1.0 - tau) > REDUCED_COST_TOL * (1.0 + pi[i].abs())
                {
                    entering = Some(var);
                    break;
                }
            }
        }
        let Some(enter) = entering else {
            break; // optimal
        };

        // w = B^{-1} A_enter
        if enter < 2 * q {
            let k = if enter < q { enter } else { enter - q };
            let sign = if enter < q { 1.0 } else { -1.0 };
            for i in 0..n {
                col[i] = sign * design.get(i, k);
            }
            for r in 0..n {
                w[r] = linalg::dot(&binv[r * n..(r + 1) * n], &col);
            }
        } else {
            let i = if enter < 2 * q + n {
                enter - 2 * q
            } else {
                enter - 2 * q - n
            };
            let sign = if enter < 2 * q + n { 1.0 } else { -1.0 };
            for r in 0..n {
                w[r] = sign * binv[r * n + i];
            }
        }

        // Ratio test; among minimizers take the smallest basic variable index
        // (Bland's leaving rule).
        let w_scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let step_tol = RATIO_TOL * w_scale;
        let mut min_ratio = f64::INFINITY;
        for k in 0..n {
            if w[k] > step_tol {
                let ratio = xb[k] / w[k];
                if ratio < min_ratio {
                    min_ratio = ratio;
                }
            }
        }
        if !min_ratio.is_finite() {
            return Err(QrlofError::SolverFailure(
                "no blocking variable in ratio test".into(),
            ));
        }
        let ratio_cut = min_ratio * (1.0 + 1e-9) + 1e-300;
        let mut leave = usize::MAX;
        let mut leave_var = usize::MAX;
        for k in 0..n {
            if w[k] > step_tol && xb[k] / w[k] <= ratio_cut && basis[k] < leave_var {
                leave = k;
                leave_var = basis[k];
            }
        }

        // Pivot: update basic values and B^{-1} (eta update on the pivot row).
        let step = xb[leave] / w[leave];
        for k in 0..n {
            if k != leave {
                xb[k] -= step * w[k];
                if xb[k] < 0.0 {
                    xb[k] = 0.0;
                }
            }
        }
        xb[leave] = step;
        let wr = w[leave];
        {
            let (head, tail) = binv.split_at_mut(leave * n);
            let (pivot_row, rest) = tail.split_at_mut(n);
            for v in pivot_row.iter_mut() {
                *v /= wr;
            }
            for (k, row) in head.chunks_exact_mut(n).enumerate() {
                let f = w[k];
                if f != 0.0 {
                    for (rv, pv) in row.iter_mut().zip(pivot_row.iter()) {
                        *rv -= f * pv;
                    }
                }
            }
            for (k, row) in rest.chunks_exact_mut(n).enumerate() {
                let f = w[leave + 1 + k];
                if f != 0.0 {
                    for (rv, pv) in row.iter_mut().zip(pivot_row.iter()) {
                        *rv -= f * pv;
                    }
                }
            }
        }
        in_basis[basis[leave]] = false;
        in_basis[enter] = true;
        basis[leave] = enter;
    }

    // Read the vertex off the basis.
    let mut theta = vec![0.0f64; q];
    let mut residuals = vec![0.0f64; n];
    for (k, &var) in basis.iter().enumerate() {
        let val = xb[k];
        if var < q {
            theta[var] += val;
        } else if var < 2 * q {
            theta[var - q] -= val;
        } else if var < 2 * q + n {
            residuals[var - 2 * q] = val;
        } else {
            residuals[var - 2 * q - n] = -val;
        }
    }

    // Polish: the interpolated observations (u_i and v_i both nonbasic)
    // determine theta exactly; re-solving that q x q system removes the
    // rounding accumulated in the B^{-1} updates.
    let interpolated: Vec<usize> = (0..n)
        .filter(|&i| !in_basis[2 * q + i] && !in_basis[2 * q + n + i])
        .collect();
    if interpolated.len() == q {
        let sub = Matrix::from_fn(q, q, |r, c| design.get(interpolated[r], c));
        let rhs: Vec<f64> = interpolated.iter().map(|&i| y[i]).collect();
        if let Some(polished) = linalg::solve_square(&sub, &rhs, 1e-12) {
            theta = polished;
            for i in 0..n {
                residuals[i] = y[i] - linalg::dot(design.row(i), &theta);
            }
            for &i in &interpolated {
                residuals[i] = 0.0;
            }
        }
    }

    Ok(LpFit { theta, residuals })
}
