//! Takagi-Sugeno rules over triangular-cloud antecedents.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::TriangularCloud;
use crate::error::{Error, Result};

/// Number of drops used to estimate a consequent spread when none is given.
pub const DEFAULT_SIGMA_DROPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsRule {
    antecedents: Vec<TriangularCloud>,
    coeff_means: Vec<f64>,
    coeff_sigmas: Vec<f64>,
}

impl TsRule {
    /// `coeff_means` holds `a0..an`; `coeff_sigmas[0]` is ignored and forced to 0.
    pub fn new(
        antecedents: Vec<TriangularCloud>,
        coeff_means: Vec<f64>,
        mut coeff_sigmas: Vec<f64>,
    ) -> Result<Self> {
        let n = antecedents.len();
        if n == 0 {
            return Err(Error::Empty("rule antecedents"));
        }
        for len in [coeff_means.len(), coeff_sigmas.len()] {
            if len != n + 1 {
                return Err(Error::DimensionMismatch { expected: n + 1, got: len });
            }
        }
        if coeff_sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("consequent sigmas must be finite and >= 0".into()));
        }
        if coeff_means.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("consequent means must be finite".into()));
        }
        coeff_sigmas[0] = 0.0;
        Ok(Self { antecedents, coeff_means, coeff_sigmas })
    }

    /// Rule with deterministic consequent (all sigmas zero).
    pub fn crisp(antecedents: Vec<TriangularCloud>, coeff_means: Vec<f64>) -> Result<Self> {
        let sigmas = vec![0.0; coeff_means.len()];
        Self::new(antecedents, coeff_means, sigmas)
    }

    /// Rule whose consequent sigmas are estimated from cloud drops of each
    /// antecedent at `x0`, per coordinate.
    pub fn with_drop_sigmas<R: Rng + ?Sized>(
        antecedents: Vec<TriangularCloud>,
        coeff_means: Vec<f64>,
        x0: &[f64],
        drops: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if x0.len() != antecedents.len() {
            return Err(Error::DimensionMismatch { expected: antecedents.len(), got: x0.len() });
        }
        let mut sigmas = vec![0.0];
        for (cloud, &x) in antecedents.iter().zip(x0) {
            let samples: Vec<f64> = (0..drops).map(|_| cloud.drop(x, rng).mu).collect();
            sigmas.push(consequent_sigma(&samples)?);
        }
        Self::new(antecedents, coeff_means, sigmas)
    }

    pub fn input_dim(&self) -> usize {
        self.antecedents.len()
    }

    pub fn antecedents(&self) -> &[TriangularCloud] {
        &self.antecedents
    }

    pub fn coeff_means(&self) -> &[f64] {
        &self.coeff_means
    }

    pub fn coeff_sigmas(&self) -> &[f64] {
        &self.coeff_sigmas
    }

    /// Product of antecedent expected memberships.
    pub fn firing_strength(&self, x0: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x0)?;
        Ok(self
            .antecedents
            .iter()
            .zip(x0)
            .map(|(c, &x)| c.expected_curve(x))
            .product())
    }

    /// Draws consequent coefficients; `a0` is never randomized.
    pub fn sample_consequent<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.coeff_means
            .iter()
            .zip(&self.coeff_sigmas)
            .enumerate()
            .map(|(j, (&mean, &sigma))| {
                if j == 0 || sigma == 0.0 {
                    mean
                } else {
                    Normal::new(mean, sigma).expect("validated sigma").sample(rng)
                }
            })
            .collect()
    }

    fn output(coeffs: &[f64], x0: &[f64]) -> f64 {
        coeffs[0] + coeffs[1..].iter().zip(x0).map(|(a, x)| a * x).sum::<f64>()
    }
}

fn check_dim(n: usize, x0: &[f64]) -> Result<()> {
    if x0.len() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: n, got: x0.len() })
    }
}

/// Raw firing strengths and their normalized shares.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringVector {
    pub w: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn normalize(w: &[f64]) -> Result<FiringVector> {
    if w.is_empty() {
        return Err(Error::Empty("firing strengths"));
    }
    if w.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("firing strengths must be >= 0".into()));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoRuleFires);
    }
    Ok(FiringVector {
        w: w.to_vec(),
        h: w.iter().map(|v| v / total).collect(),
    })
}

/// Spread `max - min` of a set of membership samples.
pub fn consequent_sigma(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("membership samples"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsModel {
    rules: Vec<TsRule>,
}

impl TsModel {
    pub fn new(rules: Vec<TsRule>) -> Result<Self> {
        let first = rules.first().ok_or(Error::Empty("model rules"))?;
        let n = first.input_dim();
        if let Some(bad) = rules.iter().find(|r| r.input_dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.input_dim() });
        }
        Ok(Self { rules })
    }

    pub fn input_dim(&self) -> usize {
        self.rules[0].input_dim()
    }

    pub fn rules(&self) -> &[TsRule] {
        &self.rules
    }

    pub fn firing(&self, x0: &[f64]) -> Result<FiringVector> {
        let w = self
            .rules
            .iter()
            .map(|r| r.firing_strength(x0))
            .collect::<Result<Vec<_>>>()?;
        normalize(&w)
    }

    /// Weighted-average output of all rules at `x0`.
    pub fn infer<R: Rng + ?Sized>(&self, x0: &[f64], rng: &mut R, mode: InferenceMode) -> Result<f64> {
        let firing = self.firing(x0)?;
        let mut y = 0.0;
        for (rule, &h) in self.rules.iter().zip(&firing.h) {
            let yl = match mode {
                InferenceMode::Deterministic => TsRule::output(&rule.coeff_means, x0),
                InferenceMode::Stochastic => TsRule::output(&rule.sample_consequent(rng), x0),
            };
            y += h * yl;
        }
        Ok(y)
    }
}
