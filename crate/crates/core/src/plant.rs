//! Discrete ARX plants, reference signals and closed-loop simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::controller::CloudController;
use crate::error::{Error, Result};

pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e9;

/// `y(k) = sum a_i y(k-i) + sum b_j u(k-j) + noise_std * N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArxPlant {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub noise_std: f64,
}

impl ArxPlant {
    pub fn new(a: Vec<f64>, b: Vec<f64>, noise_std: f64) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Empty("ARX coefficients"));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) || !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidArgument("ARX coefficients and noise_std must be finite, noise_std >= 0".into()));
        }
        Ok(Self { a, b, noise_std })
    }

    /// The third-order experiment plant with unit-variance output noise.
    pub fn unstable_benchmark() -> Self {
        Self {
            a: vec![3.737, -4.212, 1.492],
            b: vec![0.17, -0.238, 2.94],
            noise_std: 1.0,
        }
    }

    /// First-order stable demo plant `y(k) = 0.5 y(k-1) + u(k-1)`.
    pub fn demo_plant() -> Self {
        Self { a: vec![0.5], b: vec![1.0], noise_std: 0.0 }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    /// One step of the difference equation. Histories are most-recent
    /// first; missing entries count as zero.
    pub fn step(&self, y_hist: &[f64], u_hist: &[f64], noise: f64) -> f64 {
        let ar: f64 = self.a.iter().zip(y_hist).map(|(a, y)| a * y).sum();
        let x: f64 = self.b.iter().zip(u_hist).map(|(b, u)| b * u).sum();
        ar + x + noise
    }
}

/// Reference signal `r(k)` for `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSignal {
    Step { amplitude: f64 },
    Constant { value: f64 },
    /// Alternates between `+amplitude` and `-amplitude` every `half_period` steps.
    Square { amplitude: f64, half_period: usize },
}

impl Default for ReferenceSignal {
    fn default() -> Self {
        ReferenceSignal::Step { amplitude: 1.0 }
    }
}

impl ReferenceSignal {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            ReferenceSignal::Step { amplitude } => {
                if k >= 1 {
                    amplitude
                } else {
                    0.0
                }
            }
            ReferenceSignal::Constant { value } => value,
            ReferenceSignal::Square { amplitude, half_period } => {
                let hp = half_period.max(1);
                if (k.saturating_sub(1) / hp).is_multiple_of(2) {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            ReferenceSignal::Step { amplitude } | ReferenceSignal::Square { amplitude, .. } => amplitude.abs(),
            ReferenceSignal::Constant { value } => value.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub r: f64,
    pub y: f64,
    pub u: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn new(dt: f64) -> Self {
        Self { dt, rows: Vec::new() }
    }

    /// Appends a row with `e = r - y`; `k` continues the sequence.
    pub fn push(&mut self, r: f64, y: f64, u: f64) {
        let k = self.rows.len() + 1;
        self.rows.push(TraceRow { k, r, y, u, e: r - y });
    }

    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|row| row.e)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,r,y,u,e\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", row.k, row.r, row.y, row.u, row.e));
        }
        out
    }
}

/// Time-weighted absolute error `sum k^2 |e(k)| dt` with `k` from 1.
pub fn j1(trace: &SimTrace) -> f64 {
    trace
        .rows
        .iter()
        .map(|row| (row.k as f64).powi(2) * row.e.abs() * trace.dt)
        .sum()
}

/// Instantaneous squared-error index `e^2 / 2`.
pub fn j2(e: f64) -> f64 {
    0.5 * e * e
}

/// Simulation settings shared by every closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub steps: usize,
    pub dt: f64,
    /// Gains mapping `e` and `de` into the controller's `[-1, 1]` inputs;
    /// `None` uses `1 / max|r|`.
    #[serde(default)]
    pub e_gain: Option<f64>,
    #[serde(default)]
    pub de_gain: Option<f64>,
    #[serde(default = "default_divergence_bound")]
    pub divergence_bound: f64,
}

fn default_divergence_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self { steps: 100, dt: 1.0, e_gain: None, de_gain: None, divergence_bound: DEFAULT_DIVERGENCE_BOUND }
    }
}

impl LoopConfig {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }
}

/// Anything mapping `(e_norm, de_norm)` to a control action.
pub trait Controller {
    fn act(&self, e: f64, de: f64) -> Result<f64>;
}

impl Controller for CloudController {
    fn act(&self, e: f64, de: f64) -> Result<f64> {
        self.control(e, de)
    }
}

/// Controller that always outputs zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn act(&self, _e: f64, _de: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// Measurement noise for `steps` loop steps, in the order the loop draws it.
pub fn noise_sequence(plant: &ArxPlant, steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| {
            if plant.noise_std > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                plant.noise_std * z
            } else {
                0.0
            }
        })
        .collect()
}

/// Loop state between steps, so a run can be paused, forked and resumed.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    y_hist: Vec<f64>,
    u_hist: Vec<f64>,
    e_prev: f64,
    k: usize,
    ge: f64,
    gde: f64,
}

impl LoopState {
    pub fn new(plant: &ArxPlant, reference: &ReferenceSignal, cfg: &LoopConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        let peak = reference.peak();
        let default_gain = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        Ok(Self {
            y_hist: vec![0.0; plant.a.len()],
            u_hist: vec![0.0; plant.b.len()],
            e_prev: 0.0,
            k: 0,
            ge: cfg.e_gain.unwrap_or(default_gain),
            gde: cfg.de_gain.unwrap_or(default_gain),
        })
    }

    /// Last completed step.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Advances the plant with the given noise sample, measures, and applies
    /// the controller. Divergence yields `DivergedRun` with an empty partial trace.
    pub fn step<C: Controller + ?Sized>(
        &mut self,
        plant: &ArxPlant,
        ctl: &C,
        reference: &ReferenceSignal,
        cfg: &LoopConfig,
        noise: f64,
    ) -> Result<TraceRow> {
        let k = self.k + 1;
        let y = plant.step(&self.y_hist, &self.u_hist, noise);
        if !(y.abs() <= cfg.divergence_bound) {
            return Err(Error::DivergedRun { step: k, magnitude: y.abs(), partial: Box::new(SimTrace::new(cfg.dt)) });
        }
        let r = reference.at(k);
        let e = r - y;
        let u = ctl.act((self.ge * e).clamp(-1.0, 1.0), (self.gde * (e - self.e_prev)).clamp(-1.0, 1.0))?;
        self.e_prev = e;
        self.k = k;
        shift_in(&mut self.y_hist, y);
        shift_in(&mut self.u_hist, u);
        Ok(TraceRow { k, r, y, u, e })
    }
}

/// Runs the loop: at each step the plant advances on past inputs, the
/// output is measured, and the controller computes `u(k)` from the
/// normalized error and error change.
pub fn run_closed_loop<C: Controller + ?Sized>(
    plant: &ArxPlant,
    ctl: &C,
    reference: &ReferenceSignal,
    cfg: &LoopConfig,
    seed: u64,
) -> Result<SimTrace> {
    if cfg.steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    let mut state = LoopState::new(plant, reference, cfg)?;
    let mut trace = SimTrace::new(cfg.dt);
    for noise in noise_sequence(plant, cfg.steps, seed) {
        match state.step(plant, ctl, reference, cfg, noise) {
            Ok(row) => trace.push(row.r, row.y, row.u),
            Err(Error::DivergedRun { step, magnitude, .. }) => {
                return Err(Error::DivergedRun { step, magnitude, partial: Box::new(trace) })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

fn shift_in(hist: &mut [f64], v: f64) {
    if hist.is_empty() {
        return;
    }
    hist.rotate_right(1);
    hist[0] = v;
}

/// J1 of a closed-loop run, with diverged runs scored as `+inf`.
pub fn j1_or_inf<C: Controller + ?Sized>(
    plant: &ArxPlant,
    ctl: &C,
    reference: &ReferenceSignal,
    cfg: &LoopConfig,
    seed: u64,
) -> f64 {
    match run_closed_loop(plant, ctl, reference, cfg, seed) {
        Ok(trace) => j1(&trace),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_step_recursion() {
        let p = ArxPlant::unstable_benchmark();
        assert_eq!(p.step(&[0.0; 3], &[0.0; 3], 0.0), 0.0);
        assert_eq!(p.step(&[1.0, 0.0, 0.0], &[0.0; 3], 0.0), 3.737);
        assert_eq!(p.step(&[0.0; 3], &[1.0, 0.0, 0.0], 0.0), 0.17);
        assert_eq!(p.step(&[], &[], 0.25), 0.25);
    }

    #[test]
    fn j1_and_j2_values() {
        let mut t = SimTrace::new(1.0);
        t.push(1.0, 0.0, 0.0);
        t.push(1.0, 0.0, 0.0);
        assert_eq!(j1(&t), 5.0);
        let mut z = SimTrace::new(1.0);
        z.push(0.5, 0.5, 0.0);
        assert_eq!(j1(&z), 0.0);
        let mut doubled = SimTrace::new(1.0);
        doubled.push(2.0, 0.0, 0.0);
        doubled.push(2.0, 0.0, 0.0);
        assert_eq!(j1(&doubled), 2.0 * j1(&t));
        assert_eq!(j2(2.0), 2.0);
        assert_eq!(j2(0.0), 0.0);
        assert_eq!(j2(-2.0), 2.0);
    }

    #[test]
    fn zero_equilibrium() {
        let plant = ArxPlant::demo_plant();
        let trace = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::Constant { value: 0.0 }, &LoopConfig::with_steps(50), 1).unwrap();
        assert!(trace.rows.iter().all(|r| r.y == 0.0 && r.u == 0.0 && r.e == 0.0));
        assert_eq!(trace.rows.first().unwrap().k, 1);
        assert_eq!(trace.rows.last().unwrap().k, 50);
    }

    #[test]
    fn runs_are_reproducible() {
        let plant = ArxPlant::demo_plant().with_noise(0.3);
        let cfg = LoopConfig::with_steps(40);
        let a = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &cfg, 9).unwrap();
        let b = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let c = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &cfg, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unstable_plant_open_loop_diverges() {
        let plant = ArxPlant::unstable_benchmark();
        let res = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &LoopConfig::with_steps(100), 0);
        match res {
            Err(Error::DivergedRun { step, partial, .. }) => {
                assert_eq!(partial.rows.len(), step - 1);
                assert!(step < 100);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        assert_eq!(j1_or_inf(&plant, &ZeroController, &ReferenceSignal::default(), &LoopConfig::with_steps(100), 0), f64::INFINITY);
    }

    #[test]
    fn unstable_plant_has_real_pole_above_two() {
        // characteristic polynomial z^3 - 3.737 z^2 + 4.212 z - 1.492 changes sign on (1, 3)
        let p = |z: f64| z.powi(3) - 3.737 * z * z + 4.212 * z - 1.492;
        assert!(p(1.0) < 0.0 && p(3.0) > 0.0);
        assert!(p(2.0) < 0.0 && p(2.1) > 0.0);
    }

    #[test]
    fn noise_statistics() {
        let plant = ArxPlant::new(vec![0.0], vec![0.0], 1.0).unwrap();
        let cfg = LoopConfig { steps: 100_000, ..LoopConfig::default() };
        let trace = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::Constant { value: 0.0 }, &cfg, 5).unwrap();
        let n = trace.rows.len() as f64;
        let mean = trace.rows.iter().map(|r| r.y).sum::<f64>() / n;
        let var = trace.rows.iter().map(|r| (r.y - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn reference_shapes() {
        let sq = ReferenceSignal::Square { amplitude: 2.0, half_period: 3 };
        let vals: Vec<f64> = (1..=7).map(|k| sq.at(k)).collect();
        assert_eq!(vals, vec![2.0, 2.0, 2.0, -2.0, -2.0, -2.0, 2.0]);
        assert_eq!(ReferenceSignal::default().at(5), 1.0);
    }

    #[test]
    fn rejects_bad_loop_config() {
        let plant = ArxPlant::demo_plant();
        assert!(run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &LoopConfig::with_steps(0), 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn error_column_consistent(seed in any::<u64>(), noise in 0.0..2.0f64) {
                let plant = ArxPlant::demo_plant().with_noise(noise);
                let t = run_closed_loop(&plant, &ZeroController, &ReferenceSignal::default(), &LoopConfig::with_steps(30), seed).unwrap();
                for row in &t.rows {
                    prop_assert_eq!(row.e, row.r - row.y);
                }
            }

            #[test]
            fn j1_strictly_increases_with_error_rows(errs in prop::collection::vec(-3.0..3.0f64, 0..20), extra in 0.01..5.0f64) {
                let mut t = SimTrace::new(1.0);
                for e in &errs {
                    t.push(*e, 0.0, 0.0);
                }
                let before = j1(&t);
                t.push(extra, 0.0, 0.0);
                prop_assert!(j1(&t) > before);
            }
        }
    }
}
