//! Optimizer comparison: evaluations needed to reach `j_stop`, per method
//! and seed, with an infinity sentinel for exhausted budgets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cg::CgConfig;
use crate::chaos::{chaos_optimize, ChaosConfig};
use crate::controller::Structure;
use crate::error::{Error, Result};
use crate::ga::{ga_optimize, GaConfig};
use crate::plant::{ArxPlant, LoopConfig, ReferenceSignal};
use crate::tune::{cg_on_subspace, hybrid_optimize, random_start, HybridConfig, TuningProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Chaos,
    Cg,
    Ga,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Chaos, Method::Cg, Method::Ga, Method::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Method::Chaos => "chaos",
            Method::Cg => "cg",
            Method::Ga => "ga",
            Method::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub methods: Vec<Method>,
    pub n_seeds: usize,
    /// Evaluation budget per run, shared by both hybrid phases.
    pub budget: usize,
    pub j_stop: f64,
    /// Hybrid switches from chaos to CG at `switch_factor * j_stop`.
    pub switch_factor: f64,
    pub chaos: ChaosConfig,
    pub ga: GaConfig,
    pub cg: CgConfig,
}

// Desk-scale benchmark constants, calibrated on the demo plant landscape
// (J1 floor 1.0, random-controller median near 3000).
pub const DESK_J_STOP: f64 = 5.0;
pub const DESK_SWITCH_FACTOR: f64 = 1.5;
pub const DESK_BUDGET: usize = 20_000;
pub const DESK_STEPS: usize = 20;
pub const DESK_U_BOUND: f64 = 2.0;

/// Chaos schedule of the desk benchmark: windows shrink by 0.8 every 2 rounds.
pub fn desk_chaos_config() -> ChaosConfig {
    ChaosConfig { max_evals: DESK_BUDGET, j_stop: DESK_J_STOP, shrink: 0.8, rounds_per_shrink: 2, ..ChaosConfig::default() }
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_seeds: 20,
            budget: DESK_BUDGET,
            j_stop: DESK_J_STOP,
            switch_factor: DESK_SWITCH_FACTOR,
            chaos: desk_chaos_config(),
            ga: GaConfig::default(),
            cg: CgConfig::default(),
        }
    }
}

/// Stable first-order demo plant, `3/3/5` structure, unit step, 20 steps.
pub fn desk_problem() -> TuningProblem {
    TuningProblem {
        plant: ArxPlant::demo_plant(),
        reference: ReferenceSignal::default(),
        loop_cfg: LoopConfig::with_steps(DESK_STEPS),
        structure: Structure { m1: 3, m2: 3, o: 5 },
        u_bound: DESK_U_BOUND,
        noise_seed: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    /// Evaluations to reach `j_stop`; `None` when the budget ran out first.
    pub evals: Option<usize>,
    pub best_j: f64,
    /// Hybrid only: chaos-phase and CG-phase evaluations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: Vec<RunOutcome>,
    /// `None` encodes an infinite median.
    pub median_evals: Option<f64>,
}

/// Median with `None` ordered above every count.
pub fn median_evals(evals: &[Option<usize>]) -> Option<f64> {
    if evals.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = evals.iter().map(|e| e.map_or(f64::INFINITY, |n| n as f64)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

fn within(budget: usize, j_stop: f64, evals: usize, best_j: f64) -> Option<usize> {
    (budget > 0 && evals <= budget && best_j <= j_stop).then_some(evals)
}

/// One method on one seed.
pub fn run_method(problem: &TuningProblem, settings: &CompareSettings, method: Method, seed: u64) -> Result<RunOutcome> {
    let bounds = problem.bounds();
    let free = problem.continuous_slots();
    let objective = |a: &[f64]| problem.objective(a);
    let (budget, j_stop) = (settings.budget, settings.j_stop);
    if budget == 0 {
        return Ok(RunOutcome { seed, evals: None, best_j: f64::INFINITY, phases: None });
    }
    let out = match method {
        Method::Chaos => {
            let cfg = ChaosConfig { max_evals: budget, j_stop, ..settings.chaos };
            let r = chaos_optimize(objective, &bounds, &cfg, seed)?;
            RunOutcome { seed, evals: within(budget, j_stop, r.evals, r.best_j), best_j: r.best_j, phases: None }
        }
        Method::Ga => {
            let cfg = GaConfig { max_evals: budget, j_stop, ..settings.ga };
            let r = ga_optimize(objective, &bounds, &cfg, seed)?;
            RunOutcome { seed, evals: within(budget, j_stop, r.evals, r.best_j), best_j: r.best_j, phases: None }
        }
        Method::Cg => {
            let p0 = random_start(&bounds, seed);
            let cfg = CgConfig { max_evals: budget, j_stop: Some(j_stop), ..settings.cg };
            match cg_on_subspace(objective, &p0, &free, &cfg) {
                Ok((_, r)) => RunOutcome { seed, evals: within(budget, j_stop, r.evals, r.j_best), best_j: r.j_best, phases: None },
                // a failed probe at a random start ends the run without a solution
                Err(_) => RunOutcome { seed, evals: None, best_j: objective(&p0), phases: None },
            }
        }
        Method::Hybrid => {
            let hybrid = HybridConfig { switch_j: settings.switch_factor * j_stop, max_evals: budget, j_stop };
            let r = hybrid_optimize(objective, &bounds, Some(&free), &settings.chaos, &settings.cg, &hybrid, seed)?;
            RunOutcome {
                seed,
                evals: within(budget, j_stop, r.evals(), r.best_j),
                best_j: r.best_j,
                phases: Some((r.chaos_evals, r.cg_evals)),
            }
        }
    };
    Ok(out)
}

/// Every requested method over seeds `base_seed .. base_seed + n_seeds`.
pub fn compare(problem: &TuningProblem, settings: &CompareSettings, base_seed: u64) -> Result<Vec<MethodSummary>> {
    if !(settings.j_stop > 0.0) || !(settings.switch_factor >= 1.0) {
        return Err(Error::InvalidArgument("need j_stop > 0 and switch_factor >= 1".into()));
    }
    settings
        .methods
        .iter()
        .map(|&method| {
            let runs = (0..settings.n_seeds as u64)
                .into_par_iter()
                .map(|i| run_method(problem, settings, method, base_seed.wrapping_add(i)))
                .collect::<Result<Vec<_>>>()?;
            let evals: Vec<Option<usize>> = runs.iter().map(|r| r.evals).collect();
            Ok(MethodSummary { method, median_evals: median_evals(&evals), runs })
        })
        .collect()
}

fn count_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), |n| n.to_string())
}

/// Per-run rows: `method,seed,evals,best_j`, `inf` for exhausted budgets.
pub fn runs_csv(summaries: &[MethodSummary]) -> String {
    let mut out = String::from("method,seed,evals,best_j\n");
    for s in summaries {
        for r in &s.runs {
            out.push_str(&format!("{},{},{},{}\n", s.method.name(), r.seed, count_cell(r.evals.map(|n| n as f64)), r.best_j));
        }
    }
    out
}

/// `method,median_evals,reached,n_seeds`.
pub fn summary_csv(summaries: &[MethodSummary]) -> String {
    let mut out = String::from("method,median_evals,reached,n_seeds\n");
    for s in summaries {
        let reached = s.runs.iter().filter(|r| r.evals.is_some()).count();
        out.push_str(&format!("{},{},{},{}\n", s.method.name(), count_cell(s.median_evals), reached, s.runs.len()));
    }
    out
}

/// JSON report; infinite counts are `null` with an `*_is_inf` flag.
pub fn report_json(summaries: &[MethodSummary], settings: &CompareSettings, base_seed: u64) -> serde_json::Value {
    let methods: Vec<serde_json::Value> = summaries
        .iter()
        .map(|s| {
            let runs: Vec<serde_json::Value> = s
                .runs
                .iter()
                .map(|r| {
                    let mut v = serde_json::json!({
                        "seed": r.seed,
                        "evals": r.evals,
                        "budget_exhausted": r.evals.is_none(),
                        "best_j": finite_or_null(r.best_j),
                    });
                    if let Some((chaos, cg)) = r.phases {
                        v["chaos_evals"] = chaos.into();
                        v["cg_evals"] = cg.into();
                    }
                    v
                })
                .collect();
            serde_json::json!({
                "method": s.method.name(),
                "median_evals": s.median_evals,
                "median_is_inf": s.median_evals.is_none(),
                "runs": runs,
            })
        })
        .collect();
    serde_json::json!({
        "schema_version": 1,
        "base_seed": base_seed,
        "n_seeds": settings.n_seeds,
        "budget": settings.budget,
        "j_stop": settings.j_stop,
        "methods": methods,
    })
}

pub fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        v.into()
    } else {
        serde_json::Value::Null
    }
}
