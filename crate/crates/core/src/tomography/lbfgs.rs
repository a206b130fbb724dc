//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_evals: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            history: 10,
            max_evals: 10_000,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimises `f`, which returns the value and writes the gradient.
///
/// Non-finite values are treated as `+∞` and rejected by the line search.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.history);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    while norm(&g) >= opts.grad_tol && evaluations < opts.max_evals && value.is_finite() {
        // Two-loop recursion for d = −H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match memory.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / norm(&g).max(1.0),
        };
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        while evaluations < opts.max_evals {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let v = f(&x_new, &mut g_new);
            evaluations += 1;
            if v.is_finite() && v <= value + 1e-4 * step * slope {
                accepted = Some(v);
                break;
            }
            // Within rounding of the current value the sufficient-decrease
            // test is meaningless; accept if the gradient shrank instead.
            if v.is_finite() && (v - value).abs() <= 1e-14 * value.abs().max(1e-300) && norm(&g_new) < norm(&g) {
                accepted = Some(v.min(value));
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                break;
            }
        }
        let Some(new_value) = accepted else {
            if memory.is_empty() {
                break;
            }
            // Retry the iteration as steepest descent.
            memory.clear();
            continue;
        };
        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) {
            if memory.len() == opts.history {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        value = new_value;
    }
    let grad_norm = norm(&g);
    LbfgsResult {
        converged: grad_norm < opts.grad_tol,
        x,
        value,
        grad_norm,
        iterations,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_the_rosenbrock_function() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(f, &[-1.2, 1.0], &LbfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn respects_the_evaluation_budget() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 4.0 * x[0].powi(3);
            x[0].powi(4)
        };
        let opts = LbfgsOptions {
            max_evals: 5,
            grad_tol: 1e-300,
            ..LbfgsOptions::default()
        };
        let r = minimize(f, &[3.0], &opts);
        assert!(r.evaluations <= 5);
        assert!(!r.converged);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        // −ln x + x has its minimum at 1 and is undefined for x ≤ 0.
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0 / x[0] + 1.0;
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                -x[0].ln() + x[0]
            }
        };
        let r = minimize(f, &[0.1], &LbfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8);
    }
}
