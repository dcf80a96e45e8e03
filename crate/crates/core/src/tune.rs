//! Controller tuning: the closed-loop objective, the chaos-then-CG hybrid,
//! and windowed on-line refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cg::{cg_optimize, CgConfig, CgResult};
use crate::chaos::{chaos_optimize, ChaosConfig, OptimizeResult};
use crate::controller::{decode, CloudController, ControllerParams, SearchSpace, SlotKind, Structure};
use crate::error::{Error, Result};
use crate::plant::{j1, j2, noise_sequence, run_closed_loop, ArxPlant, LoopConfig, LoopState, ReferenceSignal, SimTrace};

/// Everything that fixes the tuning landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningProblem {
    pub plant: ArxPlant,
    pub reference: ReferenceSignal,
    pub loop_cfg: LoopConfig,
    pub structure: Structure,
    /// Output limit; `ku` ranges over `[0, u_bound]` and `u` is clamped to `±u_bound`.
    pub u_bound: f64,
    /// Noise is frozen per tuning run so the landscape is deterministic.
    pub noise_seed: u64,
}

impl TuningProblem {
    pub fn space(&self) -> SearchSpace {
        SearchSpace::for_structure(self.structure)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.space().bounds
    }

    /// Indices of slots with a continuous decoding; count and rule slots
    /// round to integers and carry no gradient information.
    pub fn continuous_slots(&self) -> Vec<usize> {
        self.space()
            .slot_kinds()
            .iter()
            .enumerate()
            .filter(|(_, k)| !matches!(k, SlotKind::Count | SlotKind::Rule))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn params(&self, alphas: &[f64]) -> Result<ControllerParams> {
        decode(alphas, self.structure, self.u_bound)
    }

    pub fn controller(&self, alphas: &[f64]) -> Result<CloudController> {
        CloudController::from_params(&self.params(alphas)?, (-self.u_bound, self.u_bound))
    }

    pub fn simulate(&self, alphas: &[f64]) -> Result<SimTrace> {
        let ctl = self.controller(alphas)?;
        run_closed_loop(&self.plant, &ctl, &self.reference, &self.loop_cfg, self.noise_seed)
    }

    /// J1 of the fixed-seed run; `+inf` for diverged or invalid candidates.
    pub fn objective(&self, alphas: &[f64]) -> f64 {
        self.simulate(alphas).map_or(f64::INFINITY, |t| j1(&t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    /// Chaos phase stops at this value (or its own budget), then CG takes over.
    pub switch_j: f64,
    /// Shared evaluation budget across both phases.
    pub max_evals: usize,
    pub j_stop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    pub chaos: OptimizeResult,
    pub cg: Option<CgResult>,
    pub best_params: Vec<f64>,
    pub best_j: f64,
    pub chaos_evals: usize,
    pub cg_evals: usize,
    pub reached: bool,
}

impl HybridResult {
    pub fn evals(&self) -> usize {
        self.chaos_evals + self.cg_evals
    }
}

/// CG over the coordinates in `free` with the others held at `base`.
pub fn cg_on_subspace<F>(objective: F, base: &[f64], free: &[usize], cfg: &CgConfig) -> Result<(Vec<f64>, CgResult)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if free.iter().any(|&i| i >= base.len()) {
        return Err(Error::InvalidArgument("free coordinate out of range".into()));
    }
    let embed = |sub: &[f64]| {
        let mut full = base.to_vec();
        for (&i, &v) in free.iter().zip(sub) {
            full[i] = v;
        }
        full
    };
    let sub0: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let res = cg_optimize(|sub: &[f64]| objective(&embed(sub)), &sub0, cfg)?;
    Ok((embed(&res.p_best), res))
}

/// Coarse chaos search to `switch_j` (or the chaos budget), then CG refinement to `j_stop` from the
/// chaos incumbent over the coordinates in `free` (all when `None`). A CG
/// failure keeps the chaos result.
pub fn hybrid_optimize<F>(
    objective: F,
    bounds: &[(f64, f64)],
    free: Option<&[usize]>,
    chaos_cfg: &ChaosConfig,
    cg_cfg: &CgConfig,
    hybrid: &HybridConfig,
    seed: u64,
) -> Result<HybridResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(hybrid.j_stop > 0.0) || !(hybrid.switch_j >= hybrid.j_stop) {
        return Err(Error::InvalidArgument("need 0 < j_stop <= switch_j".into()));
    }
    let phase1 = ChaosConfig { j_stop: hybrid.switch_j, max_evals: chaos_cfg.max_evals.min(hybrid.max_evals), ..*chaos_cfg };
    let chaos = chaos_optimize(&objective, bounds, &phase1, seed)?;
    let chaos_evals = chaos.evals;
    let mut out = HybridResult {
        best_params: chaos.best_params.clone(),
        best_j: chaos.best_j,
        chaos_evals,
        cg_evals: 0,
        reached: chaos.best_j <= hybrid.j_stop,
        cg: None,
        chaos,
    };
    if out.reached || chaos_evals >= hybrid.max_evals || !out.best_j.is_finite() {
        return Ok(out);
    }
    let phase2 = CgConfig { j_stop: Some(hybrid.j_stop), max_evals: hybrid.max_evals - chaos_evals, ..*cg_cfg };
    let all: Vec<usize> = (0..bounds.len()).collect();
    if let Ok((p_best, cg)) = cg_on_subspace(&objective, &out.best_params, free.unwrap_or(&all), &phase2) {
        out.cg_evals = cg.evals;
        if cg.j_best < out.best_j {
            out.best_j = cg.j_best;
            out.best_params = p_best;
        }
        out.reached = out.best_j <= hybrid.j_stop;
        out.cg = Some(cg);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Steps per window; the parameters are refined once per window.
    pub window: usize,
    pub cg: CgConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self { window: 10, cg: CgConfig { max_iters: 3, ..CgConfig::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineUpdate {
    /// First step of the window the update applies to.
    pub k: usize,
    pub j2_before: f64,
    pub j2_after: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineResult {
    pub trace: SimTrace,
    pub updates: Vec<OnlineUpdate>,
    pub alphas: Vec<f64>,
}

impl OnlineResult {
    pub fn updates_csv(&self) -> String {
        let mut out = String::from("k,j2_before,j2_after,evals\n");
        for u in &self.updates {
            out.push_str(&format!("{},{},{},{}\n", u.k, u.j2_before, u.j2_after, u.evals));
        }
        out
    }
}

/// Runs the loop for `problem.loop_cfg.steps` steps. Before each window the
/// parameters are refined by CG on the summed `J2` of a noise-free model
/// prediction of that window from the current loop state.
pub fn tune_online(problem: &TuningProblem, alphas0: &[f64], cfg: &OnlineConfig) -> Result<OnlineResult> {
    if cfg.window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let gamma = problem.structure.gamma();
    if alphas0.len() != gamma {
        return Err(Error::DimensionMismatch { expected: gamma, got: alphas0.len() });
    }
    let steps = problem.loop_cfg.steps;
    let noise = noise_sequence(&problem.plant, steps, problem.noise_seed);
    let mut state = LoopState::new(&problem.plant, &problem.reference, &problem.loop_cfg)?;
    let mut trace = SimTrace::new(problem.loop_cfg.dt);
    let mut alphas: Vec<f64> = alphas0.iter().map(|a| a.clamp(0.0, 1.0)).collect();
    let mut updates = Vec::new();
    let mut start = 0;
    while start < steps {
        let len = cfg.window.min(steps - start);
        let predicted = |a: &[f64]| -> f64 {
            let Ok(ctl) = problem.controller(a) else { return f64::INFINITY };
            let mut fork = state.clone();
            let mut total = 0.0;
            for _ in 0..len {
                match fork.step(&problem.plant, &ctl, &problem.reference, &problem.loop_cfg, 0.0) {
                    Ok(row) => total += j2(row.e),
                    Err(_) => return f64::INFINITY,
                }
            }
            total
        };
        let before = predicted(&alphas);
        let mut after = before;
        let mut evals = 1;
        if before.is_finite() {
            if let Ok(res) = cg_optimize(&predicted, &alphas, &cfg.cg) {
                evals += res.evals;
                if res.j_best < before {
                    alphas = res.p_best.iter().map(|a| a.clamp(0.0, 1.0)).collect();
                    after = predicted(&alphas);
                }
            }
        }
        updates.push(OnlineUpdate { k: start + 1, j2_before: before, j2_after: after, evals });
        let ctl = problem.controller(&alphas)?;
        for &n in &noise[start..start + len] {
            match state.step(&problem.plant, &ctl, &problem.reference, &problem.loop_cfg, n) {
                Ok(row) => trace.push(row.r, row.y, row.u),
                Err(Error::DivergedRun { step, magnitude, .. }) => {
                    return Err(Error::DivergedRun { step, magnitude, partial: Box::new(trace) })
                }
                Err(e) => return Err(e),
            }
        }
        start += len;
    }
    Ok(OnlineResult { trace, updates, alphas })
}

/// Uniform random start inside `bounds`.
pub fn random_start(bounds: &[(f64, f64)], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bounds.iter().map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect()
}
