//! Triangular cloud model primitives.
//!
//! A triangular cloud `(Ex, En, He)` has the expected membership curve
//! `max(0, 1 - |x - Ex| / En)`. Each drop perturbs the entropy with a
//! normal law of standard deviation `He`, clamped to `[En - 3He, En + 3He]`,
//! so every drop lies between the two envelope curves built from those
//! extreme entropies.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCloud", into = "RawCloud")]
pub struct TriangularCloud {
    ex: f64,
    en: f64,
    he: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCloud {
    ex: f64,
    en: f64,
    he: f64,
}

impl TryFrom<RawCloud> for TriangularCloud {
    type Error = Error;
    fn try_from(raw: RawCloud) -> Result<Self> {
        TriangularCloud::new(raw.ex, raw.en, raw.he)
    }
}

impl From<TriangularCloud> for RawCloud {
    fn from(c: TriangularCloud) -> Self {
        RawCloud { ex: c.ex, en: c.en, he: c.he }
    }
}

/// One sampled membership degree for a stimulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudDrop {
    pub x: f64,
    pub mu: f64,
}

/// Envelope values at a point. `y1` uses the narrow support `En - 3He`,
/// `y2` the wide support `En + 3He`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub y1: f64,
    pub y2: f64,
}

fn ramp(dist: f64, support: f64) -> f64 {
    (1.0 - dist / support).max(0.0)
}

impl TriangularCloud {
    pub fn new(ex: f64, en: f64, he: f64) -> Result<Self> {
        let ok = ex.is_finite()
            && en.is_finite()
            && he.is_finite()
            && en > 0.0
            && he >= 0.0
            && 3.0 * he < en;
        if ok {
            Ok(Self { ex, en, he })
        } else {
            Err(Error::InvalidCloud { ex, en, he })
        }
    }

    pub fn ex(&self) -> f64 {
        self.ex
    }

    pub fn en(&self) -> f64 {
        self.en
    }

    pub fn he(&self) -> f64 {
        self.he
    }

    /// Triangular expected membership curve.
    pub fn expected_curve(&self, x: f64) -> f64 {
        ramp((x - self.ex).abs(), self.en)
    }

    /// Samples a membership degree at `x`.
    pub fn drop<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> CloudDrop {
        let en_prime = if self.he > 0.0 {
            // he > 0 and finite, so the normal law is well formed
            let normal = Normal::new(self.en, self.he).expect("finite positive std");
            normal
                .sample(rng)
                .clamp(self.en - 3.0 * self.he, self.en + 3.0 * self.he)
        } else {
            self.en
        };
        CloudDrop {
            x,
            mu: ramp((x - self.ex).abs(), en_prime),
        }
    }

    pub fn envelope(&self, x: f64) -> Envelope {
        let dist = (x - self.ex).abs();
        Envelope {
            y1: ramp(dist, (self.en - 3.0 * self.he).abs()),
            y2: ramp(dist, (self.en + 3.0 * self.he).abs()),
        }
    }

    /// Pointwise distance between the envelope curves.
    pub fn width(&self, x: f64) -> f64 {
        let env = self.envelope(x);
        (env.y1 - env.y2).abs()
    }

    /// Width of the envelope band at the 1/3 level of the narrow curve,
    /// `1 - (2/3)|En - 3He| / |En + 3He| - 1/3`, evaluated in the
    /// rearranged form `(2/3)(|En + 3He| - |En - 3He|) / |En + 3He|` so that
    /// `He = 0` yields exactly zero.
    pub fn max_width(&self) -> f64 {
        let narrow = (self.en - 3.0 * self.he).abs();
        let wide = (self.en + 3.0 * self.he).abs();
        (2.0 / 3.0) * (wide - narrow) / wide
    }

    /// Largest pointwise width on a uniform grid of `points` samples over the
    /// narrow support `|x - Ex| < En - 3He`.
    pub fn grid_max_width(&self, points: usize) -> f64 {
        let narrow = self.en - 3.0 * self.he;
        (0..points)
            .map(|i| {
                let x = self.ex - narrow + 2.0 * narrow * (i as f64 + 0.5) / points as f64;
                self.width(x)
            })
            .fold(0.0, f64::max)
    }

    /// Open support interval `(Ex - En, Ex + En)` of the expected curve.
    pub fn support(&self) -> (f64, f64) {
        (self.ex - self.en, self.ex + self.en)
    }
}
