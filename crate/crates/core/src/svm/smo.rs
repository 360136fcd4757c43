//! Two-variable decomposition solver for the soft-margin dual
//!
//! ```text
//! min ½ αᵀQα − Σαᵢ   s.t. 0 ≤ αᵢ ≤ C, Σ αᵢyᵢ = 0,   Qᵢⱼ = yᵢyⱼK(xᵢ,xⱼ)
//! ```
//!
//! using maximal-violating-pair selection on the gradient G = Qα − 1.
//! The pair update is the closed-form two-point solution with box clipping;
//! G is maintained incrementally so each iteration is O(n).

use super::SvmError;

#[derive(Debug, Clone)]
pub struct SmoSolution {
    /// Dual variables for every training row (zeros included).
    pub alpha: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
}

/// Curvature floor for a working pair; keeps the step finite when two rows
/// coincide (K_ii + K_jj − 2K_ij = 0).
const ETA_FLOOR: f64 = 1e-12;

/// `kernel` is the dense n×n Gram matrix of K (not Q); `y` holds ±1 labels.
pub(crate) fn solve(
    kernel: &[f64],
    n: usize,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SmoSolution, SvmError> {
    debug_assert_eq!(kernel.len(), n * n);
    let mut alpha = vec![0.0; n];
    // G_i = (Qα)_i − 1; at α = 0 the gradient is −1 everywhere.
    let mut g = vec![-1.0; n];

    let mut iterations = 0;
    loop {
        let Some((i, j, m, m_low)) = select_pair(&alpha, &g, y, c) else {
            // No feasible ascent direction at all (every row is at a bound
            // that blocks movement); treat as converged.
            break;
        };
        if m - m_low <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(SvmError::NonConvergence {
                iterations: max_iter,
            });
        }
        iterations += 1;

        // Closed-form update of the pair (i, j), optimizing α_j first.
        // E_k = f₀(x_k) − y_k with the bias-free decision value f₀; the
        // identity f₀(x_k) = y_k(G_k + 1) gives E_k = y_k·G_k.
        let e_i = y[i] * g[i];
        let e_j = y[j] * g[j];
        let k_ii = kernel[i * n + i];
        let k_jj = kernel[j * n + j];
        let k_ij = kernel[i * n + j];
        let eta = (k_ii + k_jj - 2.0 * k_ij).max(ETA_FLOOR);

        let s = y[i] * y[j];
        let (lo, hi) = if s < 0.0 {
            let d = alpha[j] - alpha[i];
            (d.max(0.0), (c + d).min(c))
        } else {
            let t = alpha[i] + alpha[j];
            ((t - c).max(0.0), t.min(c))
        };

        let old_i = alpha[i];
        let old_j = alpha[j];
        let mut new_j = old_j + y[j] * (e_i - e_j) / eta;
        new_j = new_j.clamp(lo, hi);
        let new_i = old_i + s * (old_j - new_j);

        // Updates that algebraically land on a bound can round to a value a
        // few ulps inside it. Such a crumb stays in the selectable sets with
        // one ulp of movement room, which blocks the pair selection from
        // making progress. Snap to the exact bound instead.
        alpha[i] = snap_to_bounds(new_i.clamp(0.0, c), c);
        alpha[j] = snap_to_bounds(new_j, c);

        let delta_i = alpha[i] - old_i;
        let delta_j = alpha[j] - old_j;
        if delta_i == 0.0 && delta_j == 0.0 {
            // The violating pair cannot move (already at its box corner);
            // curvature-floored degenerate geometry. Bail out rather than
            // spin on the same pair.
            break;
        }
        for t in 0..n {
            let q_ti = y[t] * y[i] * kernel[t * n + i];
            let q_tj = y[t] * y[j] * kernel[t * n + j];
            g[t] += q_ti * delta_i + q_tj * delta_j;
        }
    }

    let b = bias(&alpha, &g, y, c);
    Ok(SmoSolution {
        alpha,
        b,
        iterations,
    })
}

/// Maximal-violating pair: i maximizes −yᵢGᵢ over rows that can increase
/// their contribution (I_up), j minimizes it over rows that can decrease
/// theirs (I_low). Returns (i, j, m, M); convergence is m − M ≤ tol.
fn select_pair(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> Option<(usize, usize, f64, f64)> {
    let mut i_best: Option<(usize, f64)> = None;
    let mut j_best: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -y[t] * g[t];
        if in_up_set(alpha[t], y[t], c) && i_best.map_or(true, |(_, best)| v > best) {
            i_best = Some((t, v));
        }
        if in_low_set(alpha[t], y[t], c) && j_best.map_or(true, |(_, best)| v < best) {
            j_best = Some((t, v));
        }
    }
    match (i_best, j_best) {
        (Some((i, m)), Some((j, m_low))) => Some((i, j, m, m_low)),
        _ => None,
    }
}

/// Round a multiplier to 0 or C when it is within a relative `1e-12` of the
/// bound. The perturbation is orders of magnitude below the duality-gap
/// tolerances in use, and exact bound values keep saturated rows out of the
/// working-set candidates.
fn snap_to_bounds(v: f64, c: f64) -> f64 {
    const SNAP: f64 = 1e-12;
    if v <= c * SNAP {
        0.0
    } else if v >= c * (1.0 - SNAP) {
        c
    } else {
        v
    }
}

fn in_up_set(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low_set(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

/// Average −yᵢGᵢ over free rows (0 < α < C); with none free, the midpoint
/// of the violating-pair bounds.
fn bias(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += -y[t] * g[t];
            free += 1;
        }
    }
    if free > 0 {
        return sum / free as f64;
    }
    let mut m = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * g[t];
        if in_up_set(alpha[t], y[t], c) {
            m = m.max(v);
        }
        if in_low_set(alpha[t], y[t], c) {
            m_low = m_low.min(v);
        }
    }
    if m.is_finite() && m_low.is_finite() {
        (m + m_low) / 2.0
    } else {
        0.0
    }
}
