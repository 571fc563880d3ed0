//! Limited-memory quasi-Newton ascent with lower box bounds.
//!
//! Maximizes a smooth concave function over `x >= lower` (coordinatewise,
//! with unconstrained coordinates marked by `-inf`). Steps follow an
//! L-BFGS direction projected onto the feasible set, accepted under an
//! Armijo condition on the projected path; the projected-gradient
//! sup-norm is the convergence measure.

use std::collections::VecDeque;

/// Objective evaluation: value and gradient at a feasible point.
pub(crate) trait Objective {
    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

pub(crate) struct AscentOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

pub(crate) struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64]) {
    for (v, &l) in x.iter_mut().zip(lower) {
        if *v < l {
            *v = l;
        }
    }
}

/// sup-norm of P(x + g) - x, the ascent first-order optimality measure.
fn projected_gradient_norm(x: &[f64], grad: &[f64], lower: &[f64]) -> f64 {
    x.iter()
        .zip(grad)
        .zip(lower)
        .map(|((&xi, &gi), &li)| ((xi + gi).max(li) - xi).abs())
        .fold(0.0, f64::max)
}

/// Two-loop recursion producing an approximate Newton ascent direction.
fn lbfgs_direction(
    grad: &[f64],
    history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let yy = dot(y, y);
        if yy > 0.0 {
            let gamma = dot(s, y) / yy;
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn maximize<O: Objective>(
    objective: &mut O,
    start: &[f64],
    lower: &[f64],
    opts: &AscentOptions,
) -> AscentResult {
    let n = start.len();
    let mut x = start.to_vec();
    project(&mut x, lower);
    let mut grad = vec![0.0; n];
    let mut value = objective.value_grad(&x, &mut grad);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    let mut iterations = 0;
    while iterations < opts.max_iter {
        if projected_gradient_norm(&x, &grad, lower) < opts.tol {
            return AscentResult { x, value, iterations, converged: true };
        }
        iterations += 1;

        let mut direction = lbfgs_direction(&grad, &history);
        // fall back to steepest ascent when curvature info is unusable
        if dot(&direction, &grad) <= 0.0 || direction.iter().any(|v| !v.is_finite()) {
            direction = grad.clone();
            history.clear();
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut new_x = vec![0.0; n];
        let mut new_grad = vec![0.0; n];
        let mut new_value = f64::NEG_INFINITY;
        // Armijo on the projected path: gain measured against g'(x+ - x)
        for _ in 0..60 {
            for i in 0..n {
                new_x[i] = (x[i] + step * direction[i]).max(lower[i]);
            }
            let predicted: f64 = (0..n).map(|i| grad[i] * (new_x[i] - x[i])).sum();
            if predicted <= 0.0 {
                step *= 0.5;
                continue;
            }
            new_value = objective.value_grad(&new_x, &mut new_grad);
            if new_value.is_finite() && new_value >= value + 1e-4 * predicted {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // line-search failure: report the best iterate found so far
            return AscentResult { x, value, iterations, converged: false };
        }

        let s: Vec<f64> = (0..n).map(|i| new_x[i] - x[i]).collect();
        // curvature pair for maximization: y = g_old - g_new
        let y: Vec<f64> = (0..n).map(|i| grad[i] - new_grad[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = new_x.clone();
        grad = new_grad.clone();
        value = new_value;
    }

    let converged = projected_gradient_norm(&x, &grad, lower) < opts.tol;
    AscentResult { x, value, iterations, converged }
}
