//! Limited-memory BFGS with Armijo backtracking.
//!
//! The search direction comes from the usual two-loop recursion with the
//! initial inverse Hessian scaled by `s·y / y·y`. The memory is dropped (and the
//! iteration restarts from steepest descent) whenever the curvature condition
//! fails or the line search cannot make progress along the quasi-Newton
//! direction.

use std::collections::VecDeque;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOptions {
    /// Stop when `max |g_i| <= tol * max(1, |f|)`.
    pub tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Give up (unconverged) when the objective drops by less than
    /// `stall_rtol * max(1, |f|)` over `stall_window` accepted steps.
    pub stall_window: usize,
    pub stall_rtol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 10_000, memory: 10, armijo: 1e-4, shrink: 0.5, max_backtracks: 60, stall_window: 200, stall_rtol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of memory resets.
    pub restarts: usize,
    /// Objective value after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn direction(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alpha.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alpha.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimize `f`, which returns the objective and writes its gradient.
pub fn lbfgs(x0: &[f64], mut f: impl FnMut(&[f64], &mut [f64]) -> f64, opts: &LbfgsOptions) -> Result<LbfgsOutcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(invalid("objective is not finite at the initial point"));
    }
    let mut history = vec![fx];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut restarts = 0;
    let mut iterations = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let done = |g: &[f64], fx: f64| inf_norm(g) <= opts.tol * fx.abs().max(1.0);

    while !done(&g, fx) && iterations < opts.max_iters {
        let mut d = direction(&g, &mem);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            restarts += 1;
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut accepted = None;
        loop {
            let mut step = 1.0;
            for _ in 0..opts.max_backtracks {
                x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
                let f_try = f(&x_new, &mut g_new);
                if f_try.is_finite() && f_try <= fx + opts.armijo * step * slope {
                    accepted = Some(f_try);
                    break;
                }
                step *= opts.shrink;
            }
            if accepted.is_some() || mem.is_empty() {
                break;
            }
            mem.clear();
            restarts += 1;
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let Some(f_new) = accepted else { break };
        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        } else if !mem.is_empty() {
            mem.clear();
            restarts += 1;
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        history.push(fx);
        if let Some(&old) = history.len().checked_sub(opts.stall_window + 1).and_then(|i| history.get(i)) {
            if opts.stall_window > 0 && old - fx <= opts.stall_rtol * fx.abs().max(1.0) {
                break;
            }
        }
    }
    Ok(LbfgsOutcome { grad_inf_norm: inf_norm(&g), converged: done(&g, fx), x, f: fx, iterations, restarts, history })
}
