//! Soft-margin SVM dual solved by SMO with second-order working-set selection.
//!
//! Minimizes `½ αᵀQα − eᵀα` subject to `0 ≤ α_i ≤ C` and `yᵀα = 0`, where
//! `Q_ij = y_i y_j K(x_i, x_j)`. Iteration stops once the maximal KKT
//! violation `m(α) − M(α)` drops below the tolerance.

use super::cache::QMatrix;
use super::KernelParams;
use crate::scalar::Real;

const TAU: f64 = 1e-12;

pub(crate) struct DualSolution<T> {
    pub alpha: Vec<T>,
    /// Offset `ρ`; the decision function is `Σ α_i y_i K(x_i, x) − ρ`.
    pub rho: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

pub(crate) fn solve<T: Real>(
    samples: &[&[T]],
    y: &[i8],
    params: &KernelParams<T>,
    tolerance: f64,
    cache_bytes: usize,
    max_iterations: usize,
) -> DualSolution<T> {
    let n = samples.len();
    let c = params.penalty_c;
    let tau = T::lit(TAU);
    let eps = T::lit(tolerance);
    let yt: Vec<T> = y.iter().map(|&v| T::from_i8(v).unwrap()).collect();
    let mut q = QMatrix::new(samples, y, params, cache_bytes);
    let qd = q.diag().to_vec();

    let mut alpha = vec![T::zero(); n];
    let mut status = vec![Bound::Lower; n];
    let mut grad = vec![-T::one(); n];
    let bound = |a: T| {
        if a >= c {
            Bound::Upper
        } else if a <= T::zero() {
            Bound::Lower
        } else {
            Bound::Free
        }
    };
    let in_up = |t: usize, st: &[Bound]| (y[t] == 1 && st[t] != Bound::Upper) || (y[t] == -1 && st[t] != Bound::Lower);
    let in_low = |t: usize, st: &[Bound]| (y[t] == 1 && st[t] != Bound::Lower) || (y[t] == -1 && st[t] != Bound::Upper);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        // i: maximal violating index in I_up.
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            if in_up(t, &status) {
                let v = -yt[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let q_i = q.row(i);

        // j: second-order choice in I_low.
        let mut gmax2 = T::neg_infinity();
        let mut j_sel = None;
        let mut obj_min = T::infinity();
        for t in 0..n {
            if !in_low(t, &status) {
                continue;
            }
            let v = -yt[t] * grad[t];
            gmax2 = gmax2.max(-v);
            let grad_diff = gmax - v;
            if grad_diff > T::zero() {
                // K_it = y_i y_t Q_it, so the second derivative is K_ii + K_tt − 2K_it.
                let mut quad = qd[i] + qd[t] - T::lit(2.0) * yt[i] * yt[t] * q_i[t];
                if quad <= T::zero() {
                    quad = tau;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < eps {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;

        let q_j = q.row(j);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + T::lit(2.0) * q_i[j];
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > T::zero() {
                if aj < T::zero() {
                    aj = T::zero();
                    ai = diff;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = -diff;
            }
            if diff > T::zero() {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - T::lit(2.0) * q_i[j];
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < T::zero() {
                aj = T::zero();
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < T::zero() {
                ai = T::zero();
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        status[i] = bound(ai);
        status[j] = bound(aj);
        let (dai, daj) = (ai - old_ai, aj - old_aj);
        for k in 0..n {
            grad[k] += q_i[k] * dai + q_j[k] * daj;
        }
    }

    // ρ from free variables, else the midpoint of the feasible interval.
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    let mut free_sum = T::zero();
    let mut free = 0usize;
    for t in 0..n {
        let yg = yt[t] * grad[t];
        match status[t] {
            Bound::Upper => {
                if y[t] == -1 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            }
            Bound::Lower => {
                if y[t] == 1 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            }
            Bound::Free => {
                free += 1;
                free_sum += yg;
            }
        }
    }
    let rho = if free > 0 {
        free_sum / T::from_usize(free).unwrap()
    } else {
        (ub + lb) / T::lit(2.0)
    };

    DualSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}
