//! Shared oracles for the integration suites: a dense projected-gradient
//! reference solver for the soft-margin SVM dual, brute-force drawdown
//! scanners, a Jacobi eigensolver, and small deterministic helpers.
//!
//! Everything here is deliberately independent of the library's own
//! algorithms: different method, different code path, same answer expected.

#![allow(dead_code)] // each integration target uses a subset

use chrono::NaiveDate;

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("valid test date")
}

/// Tiny xorshift* generator so the oracle inputs are reproducible without
/// depending on the library's RNG choices.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

// --------------------------------------------------------------------------
// Dense quadratic-program reference for the SVM dual
//
//   min ½ αᵀQα − Σαᵢ   s.t. 0 ≤ α ≤ C, yᵀα = 0,   Q = yyᵀ ∘ K
//
// Accelerated projected gradient identifies the active face; a direct linear
// solve on that face polishes the iterate to machine precision; a KKT
// certificate is required before the answer is returned.
// --------------------------------------------------------------------------

pub fn dual_objective(kernel: &[f64], n: usize, y: &[f64], alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] != 0.0 {
                quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
            }
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Gradient G = Qα − 1.
fn dual_gradient(kernel: &[f64], n: usize, y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let mut g = vec![-1.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += y[j] * kernel[i * n + j] * alpha[j];
        }
        g[i] += y[i] * acc;
    }
    g
}

/// Euclidean projection onto the box-and-hyperplane feasible set, by
/// bisection on the hyperplane multiplier λ: the projected point is
/// `clip(v − λy, 0, C)` and `g(λ) = yᵀ·clip(v − λy, 0, C)` is nonincreasing.
fn project_feasible(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let clip_at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let constraint = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(&ai, &yi)| ai * yi).sum() };

    let bound = v.iter().fold(0.0f64, |m, &x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if constraint(&clip_at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip_at(0.5 * (lo + hi))
}

/// Largest eigenvalue bound for Q via a few power iterations (Q and K share
/// a spectrum because Q = D·K·D with D = diag(y), D² = I).
fn lipschitz_bound(kernel: &[f64], n: usize) -> f64 {
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 1.0f64;
    for _ in 0..60 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += kernel[i * n + j] * x[j];
            }
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        for v in &mut next {
            *v /= norm;
        }
        x = next;
    }
    lambda.max(1.0) * 1.05
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn gaussian_solve(mut a: Vec<f64>, mut rhs: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    for col in 0..m {
        let pivot = (col..m).max_by(|&r, &s| {
            a[r * m + col]
                .abs()
                .partial_cmp(&a[s * m + col].abs())
                .unwrap()
        })?;
        if a[pivot * m + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for k in 0..m {
                a.swap(col * m + k, pivot * m + k);
            }
            rhs.swap(col, pivot);
        }
        for r in (col + 1)..m {
            let f = a[r * m + col] / a[col * m + col];
            if f == 0.0 {
                continue;
            }
            for k in col..m {
                a[r * m + k] -= f * a[col * m + k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut sol = vec![0.0; m];
    for r in (0..m).rev() {
        let mut acc = rhs[r];
        for k in (r + 1)..m {
            acc -= a[r * m + k] * sol[k];
        }
        sol[r] = acc / a[r * m + r];
    }
    Some(sol)
}

/// Solve the equality-constrained stationarity system on the face implied by
/// `alpha` (rows within `edge` of a bound are pinned there) and return the
/// polished point if it stays inside the box.
fn polish_on_face(kernel: &[f64], n: usize, y: &[f64], c: f64, alpha: &[f64]) -> Option<Vec<f64>> {
    let edge = 1e-8 * c.max(1.0);
    let mut polished = vec![0.0; n];
    let mut free = Vec::new();
    for i in 0..n {
        if alpha[i] <= edge {
            polished[i] = 0.0;
        } else if alpha[i] >= c - edge {
            polished[i] = c;
        } else {
            free.push(i);
        }
    }
    let fixed_y: f64 = (0..n)
        .filter(|&i| polished[i] == c)
        .map(|i| y[i] * c)
        .sum();
    if free.is_empty() {
        return (fixed_y.abs() <= 1e-9 * c.max(1.0)).then_some(polished);
    }
    let m = free.len() + 1;
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (r, &i) in free.iter().enumerate() {
        for (col, &j) in free.iter().enumerate() {
            a[r * m + col] = y[i] * y[j] * kernel[i * n + j];
        }
        a[r * m + (m - 1)] = y[i];
        let coupling: f64 = (0..n)
            .filter(|&j| polished[j] == c)
            .map(|j| y[i] * y[j] * kernel[i * n + j] * c)
            .sum();
        rhs[r] = 1.0 - coupling;
    }
    for (col, &j) in free.iter().enumerate() {
        a[(m - 1) * m + col] = y[j];
    }
    rhs[m - 1] = -fixed_y;
    let sol = gaussian_solve(a, rhs, m)?;
    for (idx, &i) in free.iter().enumerate() {
        if !(0.0..=c).contains(&sol[idx]) {
            return None;
        }
        polished[i] = sol[idx];
    }
    Some(polished)
}

/// Worst violating-pair gap m − M. Optimality certificate: gap ≤ tol.
pub fn kkt_gap(kernel: &[f64], n: usize, y: &[f64], c: f64, alpha: &[f64]) -> f64 {
    let g = dual_gradient(kernel, n, y, alpha);
    let mut m = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * g[t];
        if (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0) {
            m = m.max(v);
        }
        if (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0) {
            m_low = m_low.min(v);
        }
    }
    if m.is_finite() && m_low.is_finite() {
        m - m_low
    } else {
        0.0
    }
}

/// Dense reference solution of the dual: accelerated projected gradient with
/// periodic face polishing, certified by the violating-pair gap before it is
/// returned. Panics if no certificate is reached — a reference that cannot
/// prove its own optimality must not silently arbitrate.
pub fn projected_gradient_reference(kernel: &[f64], n: usize, y: &[f64], c: f64) -> Vec<f64> {
    const CERT: f64 = 1e-9;
    let step = 1.0 / lipschitz_bound(kernel, n);
    let mut alpha = project_feasible(&vec![0.0; n], y, c);
    let mut momentum = alpha.clone();
    let mut t_prev = 1.0f64;

    for iteration in 0..400_000usize {
        let g = dual_gradient(kernel, n, y, &momentum);
        let trial: Vec<f64> = momentum
            .iter()
            .zip(&g)
            .map(|(&a, &gi)| a - step * gi)
            .collect();
        let next = project_feasible(&trial, y, c);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t_next;
        momentum = next
            .iter()
            .zip(&alpha)
            .map(|(&xn, &xo)| xn + beta * (xn - xo))
            .collect();
        t_prev = t_next;
        alpha = next;

        if iteration % 250 == 0 {
            if let Some(polished) = polish_on_face(kernel, n, y, c, &alpha) {
                if kkt_gap(kernel, n, y, c, &polished) <= CERT {
                    return polished;
                }
            }
            if kkt_gap(kernel, n, y, c, &alpha) <= CERT {
                return alpha;
            }
        }
    }
    panic!("projected-gradient reference failed to certify optimality");
}

// --------------------------------------------------------------------------
// Brute-force drawdown oracles
// --------------------------------------------------------------------------

/// O(n²) maximum drawdown: max over ordered pairs of v[i] − v[j], i < j.
pub fn brute_force_max_drawdown(values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            worst = worst.max(values[i] - values[j]);
        }
    }
    worst
}

/// Episode description in index space.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeIdx {
    pub begin: usize,
    pub bottom: usize,
    pub end: usize,
    pub depth: f64,
}

/// Independent episode scan: underwater stretches against the prefix
/// maximum, each rescanned from scratch for its first minimum.
pub fn brute_force_episodes(values: &[f64]) -> Vec<EpisodeIdx> {
    let n = values.len();
    let mut episodes = Vec::new();
    let mut t = 1usize;
    while t < n {
        // Prefix maximum recomputed each time: slow and obviously correct.
        let peak = values[..t].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        if values[t] < peak {
            let begin = t - 1; // last index still at the peak level
            let mut stop = t;
            while stop < n && values[stop] < peak {
                stop += 1;
            }
            let end = if stop < n { stop } else { n - 1 };
            let mut bottom = t;
            for s in t..stop {
                if values[s] < values[bottom] {
                    bottom = s;
                }
            }
            episodes.push(EpisodeIdx {
                begin,
                bottom,
                end,
                depth: values[bottom] - values[begin],
            });
            t = stop;
        } else {
            t += 1;
        }
    }
    episodes
}

/// Sort + truncate with the library's ordering contract: deepest first,
/// ties broken by the earlier begin.
pub fn rank_episodes(mut episodes: Vec<EpisodeIdx>, k: usize) -> Vec<EpisodeIdx> {
    episodes.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .unwrap()
            .then(a.begin.cmp(&b.begin))
    });
    episodes.truncate(k);
    episodes
}

// --------------------------------------------------------------------------
// Jacobi eigensolver (symmetric), for positive-semidefiniteness checks
// --------------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-15 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
