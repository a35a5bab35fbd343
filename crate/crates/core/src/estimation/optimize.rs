//! Nonlinear conjugate-gradient ascent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub max_iters: usize,
    /// Stop once `‖∇f‖ < grad_tol · (1 + |f|)`.
    pub grad_tol: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-5, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the objective or gradient became non-finite; `x` is then the
    /// last finite iterate.
    pub aborted: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn finite(v: f64, g: &[f64]) -> bool {
    v.is_finite() && g.iter().all(|x| x.is_finite())
}

/// Maximizes `f` (returning value and gradient) from `x0` by Polak–Ribière
/// conjugate gradients with restarts every `dim` steps and backtracking
/// line search.
pub fn maximize<F>(mut f: F, x0: &[f64], opts: &CgOptions) -> CgResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let (mut value, mut grad) = f(&x);
    if !finite(value, &grad) {
        return CgResult { x, value, grad_norm: f64::NAN, iterations: 0, converged: false, aborted: true };
    }
    if dim == 0 {
        return CgResult { x, value, grad_norm: 0.0, iterations: 0, converged: true, aborted: false };
    }
    let mut dir = grad.clone();
    let mut step = 1.0 / norm(&grad).max(1.0);
    let mut since_restart = 0;
    for iter in 0..opts.max_iters {
        let gn = norm(&grad);
        if gn < opts.grad_tol * (1.0 + value.abs()) {
            return CgResult { x, value, grad_norm: gn, iterations: iter, converged: true, aborted: false };
        }
        let mut slope = dot(&grad, &dir);
        if slope <= 0.0 {
            dir = grad.clone();
            slope = gn * gn;
            since_restart = 0;
        }
        // backtracking from a slightly enlarged previous step
        let mut alpha = step * 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let (v, g) = f(&trial);
            if finite(v, &g) && v >= value + opts.armijo * alpha * slope {
                accepted = Some((trial, v, g));
                break;
            }
            alpha *= 0.5;
        }
        let Some((nx, nv, ng)) = accepted else {
            // no ascent along a gradient direction: at numerical optimum
            let converged = since_restart == 0;
            if !converged {
                dir = grad.clone();
                since_restart = 0;
                continue;
            }
            return CgResult { x, value, grad_norm: gn, iterations: iter, converged: true, aborted: false };
        };
        step = alpha;
        let diff: Vec<f64> = ng.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let beta_pr = (dot(&ng, &diff) / (gn * gn)).max(0.0);
        since_restart += 1;
        if since_restart >= dim {
            dir = ng.clone();
            since_restart = 0;
        } else {
            dir = ng.iter().zip(&dir).map(|(g, d)| g + beta_pr * d).collect();
        }
        x = nx;
        value = nv;
        grad = ng;
    }
    let gn = norm(&grad);
    CgResult {
        x,
        value,
        grad_norm: gn,
        iterations: opts.max_iters,
        converged: gn < opts.grad_tol * (1.0 + value.abs()),
        aborted: false,
    }
}
