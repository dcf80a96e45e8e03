//! Polak-Ribiere conjugate gradient with finite-difference gradients.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

use crate::error::{Error, Result};

/// Central finite-difference gradient.
pub fn gradient<F>(objective: &F, p: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    (0..p.len())
        .into_par_iter()
        .map(|i| {
            let mut x = p.to_vec();
            x[i] = p[i] + h;
            let up = objective(&x);
            x[i] = p[i] - h;
            let down = objective(&x);
            if up.is_finite() && down.is_finite() {
                Ok((up - down) / (2.0 * h))
            } else {
                Err(Error::GradientProbeFailed { coordinate: i })
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Polak-Ribiere coefficient, clamped below at zero.
pub fn pr_beta(grad_k: &[f64], grad_km1: &[f64]) -> Result<f64> {
    let denom = dot(grad_km1, grad_km1);
    if denom == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let beta = (dot(grad_k, grad_k) - dot(grad_k, grad_km1)) / denom;
    Ok(beta.max(0.0))
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Step length approximately minimizing `J(p + eta * dir)` for `eta >= 0`.
///
/// Brackets a minimum by doubling or halving from `initial_step`, then runs
/// Brent's parabolic/golden-section search to relative tolerance `rel_tol`.
/// Returns 0 when no decrease is found.
pub fn line_search<F>(objective: &F, p: &[f64], dir: &[f64], initial_step: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if dir.iter().all(|d| *d == 0.0) {
        return Err(Error::InvalidArgument("search direction is zero".into()));
    }
    let phi = |eta: f64| {
        let x: Vec<f64> = p.iter().zip(dir).map(|(a, d)| a + eta * d).collect();
        let v = objective(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f0 = phi(0.0);
    if !f0.is_finite() {
        return Ok(0.0);
    }

    let mut step = if initial_step > 0.0 { initial_step } else { 1.0 };
    let mut fs = phi(step);
    let (a, b, c, mut fb);
    if fs < f0 {
        let mut prev = 0.0;
        let mut next = 2.0 * step;
        let mut fnext = phi(next);
        let mut guard = 0;
        while fnext < fs && guard < 60 {
            prev = step;
            step = next;
            fs = fnext;
            next *= 2.0;
            fnext = phi(next);
            guard += 1;
        }
        (a, b, c, fb) = (prev, step, next, fs);
    } else {
        let mut guard = 0;
        loop {
            let half = step / 2.0;
            let fh = phi(half);
            guard += 1;
            if fh < f0 {
                (a, b, c, fb) = (0.0, half, step, fh);
                break;
            }
            step = half;
            if guard > 60 {
                return Ok(0.0);
            }
        }
    }

    // Brent minimization on [a, c] seeded with b
    let (mut lo, mut hi) = (a, c);
    let (mut x, mut w, mut v) = (b, b, b);
    let (mut fx, mut fw, mut fv) = (fb, fb, fb);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let tol1 = rel_tol * x.abs() + 1e-300;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut pp = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                pp = -pp;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if pp.abs() < (0.5 * q * etemp).abs() && pp > q * (lo - x) && pp < q * (hi - x) {
                d = pp / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = tol1.copysign(mid - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { lo - x } else { hi - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = phi(u);
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            (v, w, x) = (w, x, u);
            (fv, fw, fx) = (fw, fx, fu);
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                (v, w) = (w, u);
                (fv, fw) = (fw, fu);
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    fb = fx;
    Ok(if fb < f0 { x } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Finite-difference step is `h_rel * (1 + |p|)`.
    pub h_rel: f64,
    pub line_tol: f64,
    pub initial_step: f64,
    /// Objective-evaluation budget, counting probes and line-search points.
    pub max_evals: usize,
    /// Stop as soon as an accepted iterate reaches this value.
    pub j_stop: Option<f64>,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            h_rel: 1e-6,
            line_tol: 1e-4,
            initial_step: 1.0,
            max_evals: usize::MAX,
            j_stop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgTermination {
    GradientTolerance,
    ZeroGradient,
    Threshold,
    LineSearchStalled,
    IterationLimit,
    EvalBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub p_best: Vec<f64>,
    pub j_best: f64,
    pub evals: usize,
    pub iterations: usize,
    pub termination: CgTermination,
    /// Objective value after each accepted iterate, starting with `J(p0)`.
    pub history: Vec<f64>,
}

/// Minimizes `objective` from `p0`.
pub fn cg_optimize<F>(objective: F, p0: &[f64], cfg: &CgConfig) -> Result<CgResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if p0.is_empty() {
        return Err(Error::Empty("initial point"));
    }
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let counted = |x: &[f64]| {
        evals.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        objective(x)
    };
    let count = || evals.load(std::sync::atomic::Ordering::Relaxed);
    let h_for = |p: &[f64]| cfg.h_rel * (1.0 + norm(p));
    let budget_left = Cell::new(true);

    let mut p = p0.to_vec();
    let mut j = counted(&p);
    let mut history = vec![j];
    let done = |p: Vec<f64>, j: f64, iterations: usize, termination: CgTermination, history: Vec<f64>| {
        Ok(CgResult { p_best: p, j_best: j, evals: count(), iterations, termination, history })
    };
    if let Some(stop) = cfg.j_stop {
        if j <= stop {
            return done(p, j, 0, CgTermination::Threshold, history);
        }
    }
    let mut g = gradient(&counted, &p, h_for(&p))?;
    if norm(&g) == 0.0 {
        return done(p, j, 0, CgTermination::ZeroGradient, history);
    }
    if norm(&g) <= cfg.grad_tol {
        return done(p, j, 0, CgTermination::GradientTolerance, history);
    }
    let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut restarted = true;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        if count() >= cfg.max_evals {
            budget_left.set(false);
            break;
        }
        let eta = line_search(&counted, &p, &dir, cfg.initial_step, cfg.line_tol)?;
        if eta == 0.0 {
            if restarted {
                return done(p, j, iterations, CgTermination::LineSearchStalled, history);
            }
            dir = g.iter().map(|v| -v).collect();
            restarted = true;
            continue;
        }
        iterations += 1;
        for (x, d) in p.iter_mut().zip(&dir) {
            *x += eta * d;
        }
        let j_new = counted(&p);
        // the line search only returns strictly improving steps
        debug_assert!(j_new <= j);
        j = j_new.min(j);
        history.push(j);
        if let Some(stop) = cfg.j_stop {
            if j <= stop {
                return done(p, j, iterations, CgTermination::Threshold, history);
            }
        }
        let g_new = gradient(&counted, &p, h_for(&p))?;
        if norm(&g_new) <= cfg.grad_tol {
            return done(p, j, iterations, CgTermination::GradientTolerance, history);
        }
        let beta = pr_beta(&g_new, &g)?;
        dir = g_new.iter().zip(&dir).map(|(gn, d)| -gn + beta * d).collect();
        restarted = beta == 0.0;
        if dot(&dir, &g_new) >= 0.0 {
            dir = g_new.iter().map(|v| -v).collect();
            restarted = true;
        }
        g = g_new;
    }
    let termination = if budget_left.get() { CgTermination::IterationLimit } else { CgTermination::EvalBudget };
    done(p, j, iterations, termination, history)
}
