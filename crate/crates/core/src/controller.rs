//! Two-input, one-output triangle cloud controller.
//!
//! Inputs are the normalized error and error change. Each input has a
//! family of triangular clouds; every pair of clouds forms a rule whose
//! single-point consequent is picked from `o` singleton values by the rule
//! table. The output is the weighted average of fired singletons, scaled by
//! the gain `ku` and saturated to the actuator limits.
//!
//! The flat decision vector has `gamma = 3*m1 + 3*m2 + o + 4 + m1*m2`
//! slots laid out as
//!
//! | slots        | meaning                         | mapping            |
//! |--------------|---------------------------------|--------------------|
//! | m1           | Ex of input-1 clouds            | `1 - 2a`           |
//! | m2           | Ex of input-2 clouds            | `1 - 2a`           |
//! | m1           | En of input-1 clouds            | `a`                |
//! | m2           | En of input-2 clouds            | `a`                |
//! | m1           | He of input-1 clouds            | `a`                |
//! | m2           | He of input-2 clouds            | `a`                |
//! | o            | output singletons               | `1 - 2a`           |
//! | 3            | counts m1, m2, o                | `round(20a)`       |
//! | m1*m2        | rule table entries (1-based)    | `round(o*a)`       |
//! | 1            | output gain ku                  | `P_u * a`          |

use serde::{Deserialize, Serialize};

use crate::cloud::TriangularCloud;
use crate::error::{Error, Result};

/// Smallest entropy a decoded cloud may have.
pub const EN_MIN: f64 = 1e-3;
/// Overlap added when widening clouds to cover the input range.
const COVER_MARGIN: f64 = 1e-3;
const MAX_COUNT: usize = 20;

/// Number of decision variables for a controller structure.
pub fn param_count(m1: usize, m2: usize, o: usize) -> usize {
    m1 * 3 + m2 * 3 + o + 4 + m1 * m2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub m1: usize,
    pub m2: usize,
    pub o: usize,
}

impl Structure {
    pub fn new(m1: usize, m2: usize, o: usize) -> Result<Self> {
        for (name, v) in [("m1", m1), ("m2", m2), ("o", o)] {
            if !(1..=MAX_COUNT).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must be in [1, 20], got {v}")));
            }
        }
        Ok(Self { m1, m2, o })
    }

    pub fn gamma(&self) -> usize {
        param_count(self.m1, self.m2, self.o)
    }
}

/// Per-slot range classes of the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Center,
    Entropy,
    HyperEntropy,
    Singleton,
    Count,
    Rule,
    Gain,
}

/// Decision-variable layout for a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub structure: Structure,
    pub gamma: usize,
    pub bounds: Vec<(f64, f64)>,
}

impl SearchSpace {
    /// Unit hypercube over the chaos variables.
    pub fn for_structure(structure: Structure) -> Self {
        let gamma = structure.gamma();
        Self { structure, gamma, bounds: vec![(0.0, 1.0); gamma] }
    }

    pub fn slot_kinds(&self) -> Vec<SlotKind> {
        let Structure { m1, m2, o } = self.structure;
        let mut kinds = Vec::with_capacity(self.gamma);
        kinds.extend(std::iter::repeat_n(SlotKind::Center, m1 + m2));
        kinds.extend(std::iter::repeat_n(SlotKind::Entropy, m1 + m2));
        kinds.extend(std::iter::repeat_n(SlotKind::HyperEntropy, m1 + m2));
        kinds.extend(std::iter::repeat_n(SlotKind::Singleton, o));
        kinds.extend(std::iter::repeat_n(SlotKind::Count, 3));
        kinds.extend(std::iter::repeat_n(SlotKind::Rule, m1 * m2));
        kinds.push(SlotKind::Gain);
        kinds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub ex1: Vec<f64>,
    pub ex2: Vec<f64>,
    pub en1: Vec<f64>,
    pub en2: Vec<f64>,
    pub he1: Vec<f64>,
    pub he2: Vec<f64>,
    pub exu: Vec<f64>,
    pub m1: usize,
    pub m2: usize,
    pub o: usize,
    /// Decoded count slots; the structure itself stays fixed within a run.
    pub count_slots: [usize; 3],
    /// Row-major `m1 x m2` table of 1-based singleton indices.
    pub rl: Vec<usize>,
    pub ku: f64,
}

pub fn map_center(alpha: f64) -> f64 {
    -2.0 * alpha + 1.0
}

pub fn map_count(alpha: f64) -> usize {
    ((20.0 * alpha).round() as i64).clamp(1, MAX_COUNT as i64) as usize
}

pub fn map_rule(alpha: f64, o: usize) -> usize {
    ((o as f64 * alpha).round() as i64).clamp(1, o as i64) as usize
}

/// Maps a chaos vector onto controller parameters.
pub fn decode(alphas: &[f64], structure: Structure, u_bound: f64) -> Result<ControllerParams> {
    let gamma = structure.gamma();
    if alphas.len() != gamma {
        return Err(Error::DimensionMismatch { expected: gamma, got: alphas.len() });
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("non-finite chaos variable".into()));
    }
    if !(u_bound > 0.0 && u_bound.is_finite()) {
        return Err(Error::InvalidArgument("output bound must be positive".into()));
    }
    let Structure { m1, m2, o } = structure;
    let a: Vec<f64> = alphas.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut at = 0;
    let mut take = |len: usize| {
        let s = &a[at..at + len];
        at += len;
        s
    };
    let ex1: Vec<f64> = take(m1).iter().map(|&v| map_center(v)).collect();
    let ex2: Vec<f64> = take(m2).iter().map(|&v| map_center(v)).collect();
    let en1: Vec<f64> = take(m1).iter().map(|&v| v.max(EN_MIN)).collect();
    let en2: Vec<f64> = take(m2).iter().map(|&v| v.max(EN_MIN)).collect();
    let he1: Vec<f64> = take(m1).iter().zip(&en1).map(|(&v, &en)| clamp_he(v, en)).collect();
    let he2: Vec<f64> = take(m2).iter().zip(&en2).map(|(&v, &en)| clamp_he(v, en)).collect();
    let exu: Vec<f64> = take(o).iter().map(|&v| map_center(v)).collect();
    let counts = take(3);
    let count_slots = [map_count(counts[0]), map_count(counts[1]), map_count(counts[2])];
    let rl: Vec<usize> = take(m1 * m2).iter().map(|&v| map_rule(v, o)).collect();
    let ku = u_bound * take(1)[0];
    Ok(ControllerParams { ex1, ex2, en1, en2, he1, he2, exu, m1, m2, o, count_slots, rl, ku })
}

fn clamp_he(he: f64, en: f64) -> f64 {
    he.min(en / 3.0 * (1.0 - 1e-9))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudController {
    front1: Vec<TriangularCloud>,
    front2: Vec<TriangularCloud>,
    singletons: Vec<f64>,
    rule_table: Vec<usize>,
    ku: f64,
    u_limits: (f64, f64),
}

impl CloudController {
    /// `rule_table` is row-major with 0-based singleton indices.
    pub fn new(
        front1: Vec<TriangularCloud>,
        front2: Vec<TriangularCloud>,
        singletons: Vec<f64>,
        rule_table: Vec<usize>,
        ku: f64,
        u_limits: (f64, f64),
    ) -> Result<Self> {
        if front1.is_empty() || front2.is_empty() || singletons.is_empty() {
            return Err(Error::Empty("controller clouds or singletons"));
        }
        let cells = front1.len() * front2.len();
        if rule_table.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, got: rule_table.len() });
        }
        if rule_table.iter().any(|&i| i >= singletons.len()) {
            return Err(Error::InvalidArgument("rule table index out of range".into()));
        }
        if !(u_limits.0 < u_limits.1) || !u_limits.0.is_finite() || !u_limits.1.is_finite() {
            return Err(Error::InvalidArgument("u_limits must satisfy u_min < u_max".into()));
        }
        if !ku.is_finite() || singletons.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite gain or singleton".into()));
        }
        for family in [&front1, &front2] {
            if !covers_unit_range(family) {
                return Err(Error::InvalidArgument("clouds do not cover [-1, 1]".into()));
            }
        }
        Ok(Self { front1, front2, singletons, rule_table, ku, u_limits })
    }

    /// Builds a controller from decoded parameters, sorting each cloud
    /// family by center and widening entropies just enough for the open
    /// supports to cover `[-1, 1]`.
    pub fn from_params(p: &ControllerParams, u_limits: (f64, f64)) -> Result<Self> {
        let lens = [
            (p.m1, p.ex1.len()),
            (p.m1, p.en1.len()),
            (p.m1, p.he1.len()),
            (p.m2, p.ex2.len()),
            (p.m2, p.en2.len()),
            (p.m2, p.he2.len()),
            (p.o, p.exu.len()),
            (p.m1 * p.m2, p.rl.len()),
        ];
        for (expected, got) in lens {
            if expected != got {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        if p.rl.iter().any(|&r| r == 0 || r > p.o) {
            return Err(Error::InvalidArgument("rule entries must lie in [1, o]".into()));
        }
        let (front1, order1) = covering_family(&p.ex1, &p.en1, &p.he1)?;
        let (front2, order2) = covering_family(&p.ex2, &p.en2, &p.he2)?;
        // table rows/columns follow the sorted clouds
        let mut table = vec![0; p.m1 * p.m2];
        for (i, &oi) in order1.iter().enumerate() {
            for (j, &oj) in order2.iter().enumerate() {
                table[i * p.m2 + j] = p.rl[oi * p.m2 + oj] - 1;
            }
        }
        Self::new(front1, front2, p.exu.clone(), table, p.ku, u_limits)
    }

    pub fn front1(&self) -> &[TriangularCloud] {
        &self.front1
    }

    pub fn front2(&self) -> &[TriangularCloud] {
        &self.front2
    }

    pub fn singletons(&self) -> &[f64] {
        &self.singletons
    }

    pub fn rule_table(&self) -> &[usize] {
        &self.rule_table
    }

    pub fn ku(&self) -> f64 {
        self.ku
    }

    pub fn u_limits(&self) -> (f64, f64) {
        self.u_limits
    }

    /// Control action for normalized error `e` and error change `de`.
    pub fn control(&self, e: f64, de: f64) -> Result<f64> {
        let mu2: Vec<f64> = self.front2.iter().map(|c| c.expected_curve(de)).collect();
        let m2 = self.front2.len();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, c1) in self.front1.iter().enumerate() {
            let mu1 = c1.expected_curve(e);
            if mu1 == 0.0 {
                continue;
            }
            for (j, &m) in mu2.iter().enumerate() {
                let w = mu1 * m;
                num += w * self.singletons[self.rule_table[i * m2 + j]];
                den += w;
            }
        }
        if !(den > 0.0) {
            return Err(Error::NoRuleFires);
        }
        Ok((self.ku * num / den).clamp(self.u_limits.0, self.u_limits.1))
    }
}

fn covers_unit_range(family: &[TriangularCloud]) -> bool {
    let mut spans: Vec<(f64, f64)> = family.iter().map(|c| c.support()).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = -1.0;
    // open supports: need lo < reach to continue coverage
    let mut covered_start = false;
    for (lo, hi) in spans {
        if !covered_start {
            if lo < -1.0 {
                covered_start = true;
                reach = hi;
            }
            continue;
        }
        if lo < reach {
            reach = reach.max(hi);
        } else {
            break;
        }
    }
    covered_start && reach > 1.0
}

fn covering_family(
    ex: &[f64],
    en: &[f64],
    he: &[f64],
) -> Result<(Vec<TriangularCloud>, Vec<usize>)> {
    let mut order: Vec<usize> = (0..ex.len()).collect();
    order.sort_by(|&a, &b| ex[a].total_cmp(&ex[b]).then(a.cmp(&b)));
    let centers: Vec<f64> = order.iter().map(|&i| ex[i]).collect();
    let mut widths: Vec<f64> = order.iter().map(|&i| en[i].max(EN_MIN)).collect();
    let last = widths.len() - 1;
    widths[0] = widths[0].max(centers[0] + 1.0 + COVER_MARGIN);
    widths[last] = widths[last].max(1.0 - centers[last] + COVER_MARGIN);
    for k in 0..last {
        let gap = centers[k + 1] - centers[k];
        let deficit = gap + COVER_MARGIN - (widths[k] + widths[k + 1]);
        if deficit > 0.0 {
            widths[k] += deficit / 2.0;
            widths[k + 1] += deficit / 2.0;
        }
    }
    let clouds = order
        .iter()
        .zip(centers.iter().zip(&widths))
        .map(|(&i, (&c, &w))| TriangularCloud::new(c, w, clamp_he(he[i].max(0.0), w)))
        .collect::<Result<Vec<_>>>()?;
    Ok((clouds, order))
}
