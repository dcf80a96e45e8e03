//! Generational genetic algorithm used as a comparison baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{finish, sanitize, validate_bounds, ConvergenceRecord, Incumbent, OptimizeResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// BLX-alpha extension factor.
    pub blend_alpha: f64,
    /// Per-gene mutation probability; `None` means `1 / dim`.
    pub mutation_rate: Option<f64>,
    /// Mutation standard deviation as a fraction of each variable's range.
    pub mutation_sigma: f64,
    pub elites: usize,
    pub max_evals: usize,
    pub j_stop: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 40,
            tournament: 2,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: None,
            mutation_sigma: 0.1,
            elites: 1,
            max_evals: 100_000,
            j_stop: 1e-3,
        }
    }
}

pub fn ga_optimize<F>(objective: F, bounds: &[(f64, f64)], cfg: &GaConfig, seed: u64) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    validate_bounds(bounds)?;
    if cfg.population == 0 || cfg.tournament == 0 {
        return Err(Error::InvalidArgument("population and tournament size must be >= 1".into()));
    }
    if !(cfg.j_stop > 0.0) {
        return Err(Error::InvalidArgument("j_stop must be positive".into()));
    }
    let dim = bounds.len();
    let p_mut = cfg.mutation_rate.unwrap_or(1.0 / dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inc = Incumbent::new(dim);
    let mut history = Vec::new();

    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
        .collect();
    let mut fitness = evaluate(&objective, &pop, &mut inc, cfg);
    history.push(ConvergenceRecord { round: 0, best_j: inc.best_j, evals: inc.evals });
    let mut generation = 0;

    while !inc.reached && inc.evals < cfg.max_evals {
        generation += 1;
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
        // keep at least one offspring slot so every generation spends evaluations
        let elites = cfg.elites.min(cfg.population - 1);
        let mut next: Vec<Vec<f64>> = order.iter().take(elites).map(|&i| pop[i].clone()).collect();
        let elite_count = next.len();
        while next.len() < cfg.population {
            let pa = &pop[tournament(&fitness, cfg.tournament, &mut rng)];
            let pb = &pop[tournament(&fitness, cfg.tournament, &mut rng)];
            let mut child = if rng.random::<f64>() < cfg.crossover_rate {
                blend(pa, pb, cfg.blend_alpha, bounds, &mut rng)
            } else {
                pa.clone()
            };
            for (g, &(lo, hi)) in child.iter_mut().zip(bounds) {
                if p_mut > 0.0 && rng.random::<f64>() < p_mut {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *g = (*g + z * cfg.mutation_sigma * (hi - lo)).clamp(lo, hi);
                }
            }
            next.push(child);
        }
        let offspring = next.split_off(elite_count);
        let elite_fit: Vec<f64> = order.iter().take(elite_count).map(|&i| fitness[i]).collect();
        let off_fit = evaluate(&objective, &offspring, &mut inc, cfg);
        next.extend(offspring);
        pop = next;
        fitness = elite_fit.into_iter().chain(off_fit).collect();
        history.push(ConvergenceRecord { round: generation, best_j: inc.best_j, evals: inc.evals });
    }
    Ok(finish(inc, history, bounds))
}

fn evaluate<F>(objective: &F, pop: &[Vec<f64>], inc: &mut Incumbent, cfg: &GaConfig) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let budget = cfg.max_evals.saturating_sub(inc.evals).min(pop.len());
    let mut values: Vec<f64> = pop[..budget].par_iter().map(|x| sanitize(objective(x))).collect();
    inc.absorb(&pop[..budget], &values, cfg.j_stop);
    values.resize(pop.len(), f64::INFINITY);
    values
}

fn tournament<R: Rng>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    (0..size)
        .map(|_| rng.random_range(0..fitness.len()))
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
        .expect("tournament size >= 1")
}

fn blend<R: Rng>(a: &[f64], b: &[f64], alpha: f64, bounds: &[(f64, f64)], rng: &mut R) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(bounds)
        .map(|((&x, &y), &(lo, hi))| {
            let (mn, mx) = (x.min(y), x.max(y));
            let ext = alpha * (mx - mn);
            let (l, h) = (mn - ext, mx + ext);
            let v = if h > l { rng.random_range(l..h) } else { l };
            v.clamp(lo, hi)
        })
        .collect()
}
