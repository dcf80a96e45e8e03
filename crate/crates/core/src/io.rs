//! Experiment configuration, checkpoints and CSV logs.
//!
//! Every parser here returns an error on malformed input and never panics.

use serde::{Deserialize, Serialize};

use crate::chaos::{ChaosConfig, ConvergenceRecord};
use crate::cg::CgConfig;
use crate::cloud::TriangularCloud;
use crate::compare::{desk_chaos_config, CompareSettings, DESK_J_STOP, DESK_STEPS, DESK_SWITCH_FACTOR, DESK_U_BOUND};
use crate::controller::{ControllerParams, Structure};
use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::hinf::{UncertainRule, UncertainTsPlant};
use crate::plant::{ArxPlant, LoopConfig, ReferenceSignal};
use crate::tune::{OnlineConfig, TuningProblem};

pub const SCHEMA_VERSION: u32 = 1;

fn default_structure() -> Structure {
    Structure { m1: 3, m2: 3, o: 5 }
}

fn default_u_bound() -> f64 {
    DESK_U_BOUND
}

fn default_loop() -> LoopConfig {
    LoopConfig::with_steps(DESK_STEPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSettings {
    /// Chaos phase stops at this value.
    pub switch_j: f64,
    /// Shared budget for both phases.
    pub max_evals: usize,
    pub j_stop: f64,
}

impl Default for HybridSettings {
    fn default() -> Self {
        Self { switch_j: DESK_SWITCH_FACTOR * DESK_J_STOP, max_evals: 20_000, j_stop: DESK_J_STOP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropsSettings {
    pub ex: f64,
    pub en: f64,
    pub he: f64,
    /// Grid points across the support.
    pub points: usize,
    pub per_point: usize,
}

impl Default for DropsSettings {
    fn default() -> Self {
        Self { ex: 0.0, en: 1.0, he: 0.1, points: 11, per_point: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HinfSettings {
    pub rules: Vec<UncertainRule>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_robust_samples")]
    pub n_samples: usize,
}

fn default_robust_samples() -> usize {
    100
}

/// One run is fully determined by this and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "ArxPlant::demo_plant")]
    pub plant: ArxPlant,
    #[serde(default)]
    pub reference: ReferenceSignal,
    #[serde(default = "default_loop", rename = "loop")]
    pub loop_cfg: LoopConfig,
    #[serde(default = "default_structure")]
    pub structure: Structure,
    #[serde(default = "default_u_bound")]
    pub u_bound: f64,
    /// Seed of the frozen plant noise; the command seed drives the optimizers.
    #[serde(default)]
    pub noise_seed: u64,
    /// Explicit chaos vector for `simulate`.
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "desk_chaos_config")]
    pub chaos: ChaosConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub cg: CgConfig,
    #[serde(default)]
    pub hybrid: HybridSettings,
    #[serde(default)]
    pub online: OnlineConfig,
    #[serde(default)]
    pub compare: CompareSettings,
    #[serde(default)]
    pub drops: DropsSettings,
    #[serde(default)]
    pub hinf: Option<HinfSettings>,
    /// Default output directory when none is given on the command line.
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            plant: ArxPlant::demo_plant(),
            reference: ReferenceSignal::default(),
            loop_cfg: default_loop(),
            structure: default_structure(),
            u_bound: default_u_bound(),
            noise_seed: 0,
            alphas: None,
            chaos: desk_chaos_config(),
            ga: GaConfig::default(),
            cg: CgConfig::default(),
            hybrid: HybridSettings::default(),
            online: OnlineConfig::default(),
            compare: CompareSettings::default(),
            drops: DropsSettings::default(),
            hinf: None,
            output_dir: None,
        }
    }
}

const MAX_STEPS: usize = 1_000_000;
const MAX_BUDGET: usize = 100_000_000;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parse(m.to_string()));
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", self.schema_version)));
        }
        ArxPlant::new(self.plant.a.clone(), self.plant.b.clone(), self.plant.noise_std)
            .map_err(|e| Error::Parse(format!("plant: {e}")))?;
        if self.plant.a.len() > 64 || self.plant.b.len() > 64 {
            return bad("plant order above 64 is not supported");
        }
        Structure::new(self.structure.m1, self.structure.m2, self.structure.o)
            .map_err(|e| Error::Parse(format!("structure: {e}")))?;
        if !(self.u_bound > 0.0 && self.u_bound.is_finite()) {
            return bad("u_bound must be positive");
        }
        let l = &self.loop_cfg;
        if l.steps == 0 || l.steps > MAX_STEPS {
            return bad("loop.steps must lie in [1, 1000000]");
        }
        if !(l.dt > 0.0 && l.dt.is_finite()) || !(l.divergence_bound > 0.0) {
            return bad("loop.dt and loop.divergence_bound must be positive");
        }
        if [l.e_gain, l.de_gain].iter().flatten().any(|g| !g.is_finite()) {
            return bad("loop gains must be finite");
        }
        if !self.reference.peak().is_finite() {
            return bad("reference must be finite");
        }
        if let Some(a) = &self.alphas {
            if a.len() != self.structure.gamma() {
                return bad("alphas length must equal the structure's parameter count");
            }
            if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("alphas must lie in [0, 1]");
            }
        }
        self.chaos.validate().map_err(|e| Error::Parse(format!("chaos: {e}")))?;
        let budgets = [
            self.chaos.max_evals,
            self.ga.max_evals,
            self.hybrid.max_evals,
            self.compare.budget,
            self.ga.population,
            self.compare.n_seeds,
        ];
        if budgets.iter().any(|&b| b > MAX_BUDGET) || self.chaos.n_traj > 10_000 {
            return bad("budget too large");
        }
        let h = &self.hybrid;
        if !(h.j_stop > 0.0 && h.switch_j >= h.j_stop) {
            return bad("hybrid needs 0 < j_stop <= switch_j");
        }
        if self.online.window == 0 {
            return bad("online.window must be >= 1");
        }
        let c = &self.compare;
        if !(c.j_stop > 0.0 && c.switch_factor >= 1.0) {
            return bad("compare needs j_stop > 0 and switch_factor >= 1");
        }
        let d = &self.drops;
        TriangularCloud::new(d.ex, d.en, d.he).map_err(|e| Error::Parse(format!("drops: {e}")))?;
        if d.points < 2 || d.points > 100_000 || d.per_point > 1_000_000 {
            return bad("drops.points must lie in [2, 100000] and per_point in [0, 1000000]");
        }
        if let Some(hinf) = &self.hinf {
            if hinf.rules.len() > 64 || hinf.n_samples > 1_000_000 {
                return bad("hinf problem too large");
            }
            if let Some(eps) = hinf.eps {
                if !(eps > 0.0 && eps.is_finite()) {
                    return bad("hinf.eps must be positive");
                }
            }
            let plant = UncertainTsPlant::new(hinf.rules.clone()).map_err(|e| Error::Parse(format!("hinf: {e}")))?;
            if plant.dims()?.0 > 16 {
                return bad("hinf state dimension above 16 is not supported");
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> TuningProblem {
        TuningProblem {
            plant: self.plant.clone(),
            reference: self.reference,
            loop_cfg: self.loop_cfg,
            structure: self.structure,
            u_bound: self.u_bound,
            noise_seed: self.noise_seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

/// Parses and validates a configuration. Syntax errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Tuning result consumed by `simulate` and `tune-online`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub structure: Structure,
    pub u_bound: f64,
    pub alphas: Vec<f64>,
    pub params: ControllerParams,
    /// `None` when no finite value was found.
    pub best_j: Option<f64>,
    pub evals: usize,
    #[serde(default)]
    pub chaos_evals: Option<usize>,
    #[serde(default)]
    pub cg_evals: Option<usize>,
}

impl Checkpoint {
    pub fn new(problem: &TuningProblem, alphas: Vec<f64>, best_j: f64, evals: usize) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            structure: problem.structure,
            u_bound: problem.u_bound,
            params: problem.params(&alphas)?,
            alphas,
            best_j: best_j.is_finite().then_some(best_j),
            evals,
            chaos_evals: None,
            cg_evals: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if ck.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema_version {}", ck.schema_version)));
    }
    let s = Structure::new(ck.structure.m1, ck.structure.m2, ck.structure.o).map_err(|e| Error::Parse(e.to_string()))?;
    if ck.alphas.len() != s.gamma() || ck.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Parse("alphas must have the structure's length and lie in [0, 1]".into()));
    }
    if !(ck.u_bound > 0.0 && ck.u_bound.is_finite()) {
        return Err(Error::Parse("u_bound must be positive".into()));
    }
    Ok(ck)
}

/// `round,best_j,evals`, with `inf` for rounds before any finite value.
pub fn convergence_csv(history: &[ConvergenceRecord]) -> String {
    let mut out = String::from("round,best_j,evals\n");
    for r in history {
        out.push_str(&format!("{},{},{}\n", r.round, fmt_value(r.best_j), r.evals));
    }
    out
}

pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("round,best_j,evals") {
        return Err(Error::Parse("expected header round,best_j,evals".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |what: &str| Error::Parse(format!("line {}: {what}", i + 2));
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(err("expected 3 columns"));
            }
            let round = cells[0].parse().map_err(|_| err("bad round"))?;
            let best_j: f64 = cells[1].parse().map_err(|_| err("bad best_j"))?;
            let evals = cells[2].parse().map_err(|_| err("bad evals"))?;
            if best_j.is_nan() {
                return Err(err("best_j is NaN"));
            }
            Ok(ConvergenceRecord { round, best_j, evals })
        })
        .collect()
}

/// Floats for CSV; infinities print as `inf`.
pub fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.problem(), crate::compare::desk_problem());
        let back = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors_carry_position() {
        let err = parse_config("{\n  \"schema_version\": 1,\n  \"u_bound\": ,\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_config(r#"{"schema_version": 2}"#).is_err());
        assert!(parse_config(r#"{"schema_version": 1, "bogus": 3}"#).is_err());
        assert!(parse_config(r#"{"schema_version": 1, "loop": {"steps": 0}}"#).is_err());
        assert!(parse_config(r#"{"schema_version": 1, "plant": {"a": [], "b": [1], "noise_std": 0}}"#).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let problem = ExperimentConfig::default().problem();
        let alphas = vec![0.3; problem.structure.gamma()];
        let ck = Checkpoint::new(&problem, alphas, f64::INFINITY, 10).unwrap();
        assert_eq!(ck.best_j, None);
        assert_eq!(parse_checkpoint(&ck.to_json()).unwrap(), ck);
        let short = ck.to_json().replace("\"evals\": 10", "\"evals\": -1");
        assert!(parse_checkpoint(&short).is_err());
    }

    #[test]
    fn convergence_log_roundtrip() {
        let h = vec![
            ConvergenceRecord { round: 1, best_j: f64::INFINITY, evals: 41 },
            ConvergenceRecord { round: 2, best_j: 0.5, evals: 82 },
        ];
        let text = convergence_csv(&h);
        assert!(text.contains("1,inf,41"));
        assert_eq!(parse_convergence_csv(&text).unwrap(), h);
        assert!(parse_convergence_csv("round,best_j,evals\n1,2\n").is_err());
        assert!(parse_convergence_csv("").is_err());
    }
}
