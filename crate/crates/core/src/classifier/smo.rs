//! Sequential minimal optimization for the soft-margin SVM dual.
//!
//! Solves
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a
//! s.t.   y^T a = 0,  0 <= a_i <= C_i
//! ```
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)`, picking the working pair by maximal
//! violation for `i` and second-order gain for `j`. Per-sample upper bounds
//! allow class-weighted penalties.

use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration cap, expressed as full passes over the training set.
    pub max_passes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = sum a_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Value of the (maximized) dual `e^T a - 1/2 a^T Q a`.
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Precomputed `Q` matrix for one training set.
struct QMatrix {
    n: usize,
    q: Vec<f64>,
}

impl QMatrix {
    fn new(x: &[Vec<f64>], y: &[f64], kernel: &Kernel) -> QMatrix {
        let n = x.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = y[i] * y[j] * kernel.eval(&x[i], &x[j]);
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        QMatrix { n, q }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }
}

/// Runs SMO. `y` holds `+1.0`/`-1.0`; `upper` the per-sample box bounds.
pub fn solve(
    x: &[Vec<f64>],
    y: &[f64],
    upper: &[f64],
    kernel: &Kernel,
    params: &SolverParams,
) -> Solution {
    let n = x.len();
    assert_eq!(n, y.len());
    assert_eq!(n, upper.len());
    let q = QMatrix::new(x, y, kernel);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;

    let in_up = |a: f64, yt: f64, c: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64, c: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    while iterations < max_iter {
        // i = argmax_{t in I_up} -y_t G_t
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t], upper[t]) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let qi = q.row(i);

        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t], upper[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = qi[i] + q.row(t)[t] - 2.0 * y[i] * y[t] * qi[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain <= best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        if gmax - gmin < params.tolerance || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let qj = q.row(j);
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let mut quad = qi[i] + qj[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = qi[i] + qj[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }

    let rho = compute_rho(&alpha, y, upper, &grad);
    let dual_objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    Solution {
        alpha,
        rho,
        dual_objective,
        iterations,
        converged,
    }
}

fn compute_rho(alpha: &[f64], y: &[f64], upper: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Evaluates the maximized dual objective at an arbitrary point.
pub fn dual_objective(alpha: &[f64], x: &[Vec<f64>], y: &[f64], kernel: &Kernel) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decision(sol: &Solution, x: &[Vec<f64>], y: &[f64], k: &Kernel, p: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&sol.alpha)
            .map(|((xi, yi), a)| a * yi * k.eval(xi, p))
            .sum::<f64>()
            - sol.rho
    }

    #[test]
    fn two_points_linear() {
        let x = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let y = vec![1.0, -1.0];
        let sol = solve(&x, &y, &[10.0; 2], &Kernel::Linear, &SolverParams::default());
        assert!(sol.converged);
        // hard margin: w = (0.5, 0.5), a = 0.25 each
        assert!((sol.alpha[0] - 0.25).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.25).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
        assert!((sol.dual_objective - 0.25).abs() < 1e-9);
        assert!(decision(&sol, &x, &y, &Kernel::Linear, &x[0]) > 0.0);
        assert!(decision(&sol, &x, &y, &Kernel::Linear, &x[1]) < 0.0);
    }

    #[test]
    fn box_constraint_respected() {
        let x = vec![vec![0.0], vec![0.1], vec![0.05], vec![1.0]];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let c = [0.5, 0.5, 2.0, 2.0];
        let sol = solve(&x, &y, &c, &Kernel::Rbf { gamma: 1.0 }, &SolverParams::default());
        for (a, c) in sol.alpha.iter().zip(c) {
            assert!(*a >= 0.0 && *a <= c + 1e-12);
        }
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
        let direct = dual_objective(&sol.alpha, &x, &y, &Kernel::Rbf { gamma: 1.0 });
        assert!((direct - sol.dual_objective).abs() < 1e-9);
    }
}
