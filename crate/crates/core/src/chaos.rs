//! Parallel variable-scaling chaos search.
//!
//! Every decision variable is driven by `n_traj` independent logistic-map
//! orbits. Each round advances all orbits once, maps them into the current
//! per-variable windows and evaluates one candidate per trajectory. Every
//! `rounds_per_shrink` rounds each window contracts by `shrink` around the
//! incumbent best.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosConfig {
    pub n_traj: usize,
    pub max_evals: usize,
    pub j_stop: f64,
    pub shrink: f64,
    pub rounds_per_shrink: usize,
}

impl Default for ChaosConfig {
    fn default() -> Self {
        Self { n_traj: 41, max_evals: 100_000, j_stop: 1e-3, shrink: 0.9, rounds_per_shrink: 50 }
    }
}

impl ChaosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 || self.rounds_per_shrink == 0 {
            return Err(Error::InvalidArgument("n_traj and rounds_per_shrink must be >= 1".into()));
        }
        if !(self.j_stop > 0.0) {
            return Err(Error::InvalidArgument("j_stop must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidArgument("shrink must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Best-so-far after a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub round: usize,
    pub best_j: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_params: Vec<f64>,
    pub best_j: f64,
    /// Evaluations spent; equals the index of the first evaluation at or
    /// below `j_stop` when the threshold was reached.
    pub evals: usize,
    pub reached: bool,
    pub history: Vec<ConvergenceRecord>,
}

pub fn logistic_step(alpha: f64) -> f64 {
    4.0 * alpha * (1.0 - alpha)
}

pub fn scale_to_interval(alpha: f64, lo: f64, hi: f64) -> f64 {
    lo + alpha * (hi - lo)
}

const EXCLUDED: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn is_degenerate(alpha: f64) -> bool {
    !(alpha > 0.0 && alpha < 1.0) || EXCLUDED.iter().any(|e| (alpha - e).abs() < 1e-12)
}

fn draw_seed<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let a: f64 = rng.random();
        if !is_degenerate(a) {
            return a;
        }
    }
}

/// Contracts `[lo, hi]` by `shrink` around `best`, staying inside the old window.
pub fn contract(lo: f64, hi: f64, best: f64, shrink: f64) -> (f64, f64) {
    let width = (hi - lo) * shrink;
    let mut new_lo = best - width / 2.0;
    let mut new_hi = best + width / 2.0;
    if new_lo < lo {
        new_lo = lo;
        new_hi = lo + width;
    }
    if new_hi > hi {
        new_hi = hi;
        new_lo = hi - width;
    }
    (new_lo, new_hi)
}

/// Tracks the incumbent and the point at which the threshold was reached.
pub(crate) struct Incumbent {
    pub best: Vec<f64>,
    pub best_j: f64,
    pub evals: usize,
    pub reached: bool,
}

impl Incumbent {
    pub fn new(dim: usize) -> Self {
        Self { best: vec![f64::NAN; dim], best_j: f64::INFINITY, evals: 0, reached: false }
    }

    /// Folds in evaluated candidates in index order; ties keep the earlier one.
    pub fn absorb(&mut self, candidates: &[Vec<f64>], values: &[f64], j_stop: f64) {
        for (x, &j) in candidates.iter().zip(values) {
            if self.reached {
                return;
            }
            self.evals += 1;
            if j < self.best_j || (self.best_j.is_infinite() && self.best[0].is_nan()) {
                self.best_j = j;
                self.best.clone_from(x);
            }
            if self.best_j <= j_stop {
                self.reached = true;
            }
        }
    }
}

/// Minimizes `objective` over the box `bounds`.
pub fn chaos_optimize<F>(objective: F, bounds: &[(f64, f64)], cfg: &ChaosConfig, seed: u64) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    validate_bounds(bounds)?;
    let dim = bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // orbits[t][v]
    let mut orbits: Vec<Vec<f64>> = (0..cfg.n_traj)
        .map(|_| (0..dim).map(|_| draw_seed(&mut rng)).collect())
        .collect();
    let mut windows: Vec<(f64, f64)> = bounds.to_vec();
    let mut inc = Incumbent::new(dim);
    let mut history = Vec::new();
    let mut round = 0;

    while !inc.reached && inc.evals < cfg.max_evals {
        round += 1;
        let budget = (cfg.max_evals - inc.evals).min(cfg.n_traj);
        let candidates: Vec<Vec<f64>> = orbits[..budget]
            .iter_mut()
            .map(|orbit| {
                orbit
                    .iter_mut()
                    .zip(&windows)
                    .map(|(alpha, &(lo, hi))| {
                        *alpha = logistic_step(*alpha);
                        if is_degenerate(*alpha) {
                            *alpha = draw_seed(&mut rng);
                        }
                        scale_to_interval(*alpha, lo, hi)
                    })
                    .collect()
            })
            .collect();
        let values: Vec<f64> = candidates.par_iter().map(|x| sanitize(objective(x))).collect();
        inc.absorb(&candidates, &values, cfg.j_stop);
        history.push(ConvergenceRecord { round, best_j: inc.best_j, evals: inc.evals });
        if round % cfg.rounds_per_shrink == 0 && inc.best_j.is_finite() {
            for (w, &b) in windows.iter_mut().zip(&inc.best) {
                *w = contract(w.0, w.1, b, cfg.shrink);
            }
        }
    }
    Ok(finish(inc, history, bounds))
}

pub(crate) fn finish(inc: Incumbent, history: Vec<ConvergenceRecord>, bounds: &[(f64, f64)]) -> OptimizeResult {
    let best_params = if inc.best.iter().any(|v| v.is_nan()) {
        bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    } else {
        inc.best
    };
    OptimizeResult { best_params, best_j: inc.best_j, evals: inc.evals, reached: inc.reached, history }
}

pub(crate) fn sanitize(j: f64) -> f64 {
    if j.is_nan() {
        f64::INFINITY
    } else {
        j
    }
}

pub(crate) fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Empty("search bounds"));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::InvalidArgument("every bound needs finite lo < hi".into()));
    }
    Ok(())
}
