//! Robust H-infinity compensator synthesis for uncertain T-S cloud plants.
//!
//! Each plant rule carries nominal matrices `(A, B, C)` and norm-bounded
//! uncertainty `ΔA = D1 δa E1`, `ΔB = D2 δb E2`, `ΔC = D3 δc E3` with
//! symmetric `δ` whose norm is bounded by the largest maximum width of the
//! rule's antecedent clouds. Synthesis solves two Riccati inequalities per
//! rule, checks the coupling condition, and evaluates the compensator
//! formulas. Disturbance attenuation is normalized to level 1.

pub mod linalg;
mod riccati;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::TriangularCloud;
use crate::error::{Error, Result};
pub use linalg::Mat;
use linalg::{asymmetry, condition_number, inverse, max_sym_eig, min_sym_eig, spectral_abscissa, symmetrize};
pub use riccati::{riccati_candidates, solve_riccati_inequality, RiccatiSolution, RiccatiStage};

/// Row-major nested-vector serialization for matrices.
pub mod mat_serde {
    use super::Mat;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err("ragged matrix rows".into());
        }
        if r.checked_mul(c).is_none_or(|cells| cells > 1 << 16) {
            return Err("matrix too large".into());
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err("non-finite matrix entry".into());
        }
        Ok(Mat::from_row_iterator(r, c, rows.iter().flatten().copied()))
    }

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainRule {
    #[serde(with = "mat_serde")]
    pub a: Mat,
    #[serde(with = "mat_serde")]
    pub b: Mat,
    #[serde(with = "mat_serde")]
    pub c: Mat,
    #[serde(with = "mat_serde")]
    pub d1: Mat,
    #[serde(with = "mat_serde")]
    pub d2: Mat,
    #[serde(with = "mat_serde")]
    pub d3: Mat,
    #[serde(with = "mat_serde")]
    pub e1: Mat,
    #[serde(with = "mat_serde")]
    pub e2: Mat,
    #[serde(with = "mat_serde")]
    pub e3: Mat,
    #[serde(default)]
    pub antecedents: Vec<TriangularCloud>,
}

fn expect_shape(name: &str, m: &Mat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )))
    }
}

impl UncertainRule {
    /// Checks the block shapes and returns `(n, m, s)`.
    pub fn validate(&self) -> Result<(usize, usize, usize)> {
        let n = self.a.nrows();
        let m = self.b.ncols();
        let s = self.c.nrows();
        if n == 0 || m == 0 || s == 0 {
            return Err(Error::InvalidArgument("A, B and C must be non-empty".into()));
        }
        expect_shape("A", &self.a, n, n)?;
        expect_shape("B", &self.b, n, m)?;
        expect_shape("C", &self.c, s, n)?;
        let (k1, k2, k3) = (self.d1.ncols(), self.d2.ncols(), self.d3.ncols());
        expect_shape("D1", &self.d1, n, k1)?;
        expect_shape("E1", &self.e1, k1, n)?;
        expect_shape("D2", &self.d2, n, k2)?;
        expect_shape("E2", &self.e2, k2, m)?;
        expect_shape("D3", &self.d3, s, k3)?;
        expect_shape("E3", &self.e3, k3, n)?;
        Ok((n, m, s))
    }

    /// Nominal rule with scalar-identity uncertainty structure on every channel.
    pub fn with_identity_factors(a: Mat, b: Mat, c: Mat, antecedents: Vec<TriangularCloud>) -> Self {
        let (n, m, s) = (a.nrows(), b.ncols(), c.nrows());
        Self {
            d1: Mat::identity(n, n),
            e1: Mat::identity(n, n),
            d2: Mat::identity(n, m),
            e2: Mat::identity(m, m),
            d3: Mat::identity(s, s),
            e3: Mat::identity(s, n),
            a,
            b,
            c,
            antecedents,
        }
    }
}

/// Largest maximum width over the rule's antecedent clouds.
pub fn uncertainty_bound(rule: &UncertainRule) -> f64 {
    rule.antecedents.iter().map(TriangularCloud::max_width).fold(0.0, f64::max)
}

/// Open supports of every antecedent coordinate intersect.
pub fn rules_overlap(rule_i: &UncertainRule, rule_j: &UncertainRule) -> bool {
    rule_i.antecedents.iter().zip(&rule_j.antecedents).all(|(a, b)| {
        let (alo, ahi) = a.support();
        let (blo, bhi) = b.support();
        alo.max(blo) < ahi.min(bhi)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainTsPlant {
    pub rules: Vec<UncertainRule>,
}

impl UncertainTsPlant {
    pub fn new(rules: Vec<UncertainRule>) -> Result<Self> {
        let plant = Self { rules };
        plant.dims()?;
        Ok(plant)
    }

    /// Shared `(n, m, s)`.
    pub fn dims(&self) -> Result<(usize, usize, usize)> {
        let first = self.rules.first().ok_or(Error::Empty("plant rules"))?;
        let dims = first.validate()?;
        let p = first.antecedents.len();
        for rule in &self.rules[1..] {
            if rule.validate()? != dims || rule.antecedents.len() != p {
                return Err(Error::InvalidArgument("plant rules disagree on dimensions".into()));
            }
        }
        Ok(dims)
    }

    pub fn overlapping(&self, j: usize) -> Vec<usize> {
        let mut set = vec![j];
        set.extend((0..self.rules.len()).filter(|&i| i != j && rules_overlap(&self.rules[i], &self.rules[j])));
        set
    }
}

/// Uncertainty channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationMatrices {
    /// Stack of `[E1l; 0; E3l]` blocks over all rules (state to uncertainty output).
    pub c_a: Mat,
    /// Stack of `[0; E2l; 0]` blocks over all rules (input to uncertainty output).
    pub c_b: Mat,
    /// Per-rule `sqrt(d) [E1; 0; E3]`.
    pub c_ai: Vec<Mat>,
    /// Per-rule `sqrt(d) [D1, D2, 0]`.
    pub d_ai: Vec<Mat>,
}

fn vstack(blocks: &[&Mat], cols: usize) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}

fn hstack(blocks: &[&Mat], rows: usize) -> Mat {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

impl AugmentationMatrices {
    pub fn build(plant: &UncertainTsPlant) -> Result<Self> {
        let (n, m, _) = plant.dims()?;
        let mut ca_blocks = Vec::new();
        let mut cb_blocks = Vec::new();
        let mut c_ai = Vec::new();
        let mut d_ai = Vec::new();
        for rule in &plant.rules {
            let (k1, k2, k3) = (rule.e1.nrows(), rule.e2.nrows(), rule.e3.nrows());
            let ca = vstack(&[&rule.e1, &Mat::zeros(k2, n), &rule.e3], n);
            let cb = vstack(&[&Mat::zeros(k1, m), &rule.e2, &Mat::zeros(k3, m)], m);
            let scale = uncertainty_bound(rule).sqrt();
            c_ai.push(&ca * scale);
            d_ai.push(hstack(&[&rule.d1, &rule.d2, &Mat::zeros(n, k3)], n) * scale);
            ca_blocks.push(ca);
            cb_blocks.push(cb);
        }
        Ok(Self {
            c_a: vstack(&ca_blocks.iter().collect::<Vec<_>>(), n),
            c_b: vstack(&cb_blocks.iter().collect::<Vec<_>>(), m),
            c_ai,
            d_ai,
        })
    }
}

/// Default strictness margin `1e-6 * ||A||`.
pub fn default_eps(a: &Mat) -> f64 {
    (1e-6 * a.norm()).max(1e-12)
}

fn p_terms(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat) -> (Mat, Mat) {
    (c_ai.transpose() * c_ai, d_ai * d_ai.transpose() - &rule.b * rule.b.transpose())
}

fn q_terms(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat) -> (Mat, Mat) {
    (d_ai * d_ai.transpose(), c_ai.transpose() * c_ai - rule.c.transpose() * &rule.c)
}

/// Positive definite `P` with
/// `A P + P A^T + P Ca^T Ca P + Da Da^T - B B^T <= -eps/2`.
pub fn solve_p_riccati(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat, eps: f64) -> Result<RiccatiSolution> {
    rule.validate()?;
    let (quad, constant) = p_terms(rule, c_ai, d_ai);
    solve_riccati_inequality(&rule.a, &quad, &constant, eps)
}

/// Positive definite `Q` with
/// `N = Q A + A^T Q + Q Da Da^T Q + Ca^T Ca - C^T C <= -eps/2`.
pub fn solve_q_riccati(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat, eps: f64) -> Result<RiccatiSolution> {
    rule.validate()?;
    let (quad, constant) = q_terms(rule, c_ai, d_ai);
    solve_riccati_inequality(&rule.a.transpose(), &quad, &constant, eps)
}

/// Left side of the P inequality for a given rule.
pub fn p_residual(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat, p: &Mat) -> Mat {
    symmetrize(
        &(&rule.a * p + p * rule.a.transpose() + p * c_ai.transpose() * c_ai * p + d_ai * d_ai.transpose()
            - &rule.b * rule.b.transpose()),
    )
}

/// `N` for a given rule and `Q`.
pub fn q_residual(rule: &UncertainRule, c_ai: &Mat, d_ai: &Mat, q: &Mat) -> Mat {
    symmetrize(
        &(q * &rule.a + rule.a.transpose() * q + q * d_ai * d_ai.transpose() * q + c_ai.transpose() * c_ai
            - rule.c.transpose() * &rule.c),
    )
}

/// `[[P, I], [I, Q]]` is positive definite with margin `tol`.
pub fn coupling_check(p: &Mat, q: &Mat, tol: f64) -> bool {
    let n = p.nrows();
    if p.shape() != (n, n) || q.shape() != (n, n) {
        return false;
    }
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(p);
    block.view_mut((0, n), (n, n)).fill_with_identity();
    block.view_mut((n, 0), (n, n)).fill_with_identity();
    block.view_mut((n, n), (n, n)).copy_from(q);
    min_sym_eig(&block) > tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compensator {
    #[serde(with = "mat_serde")]
    pub a_hat: Mat,
    #[serde(with = "mat_serde")]
    pub b_c: Mat,
    #[serde(with = "mat_serde")]
    pub c_c: Mat,
}

impl Compensator {
    pub fn zeros(n: usize, m: usize, s: usize) -> Self {
        Self { a_hat: Mat::zeros(n, n), b_c: Mat::zeros(n, s), c_c: Mat::zeros(m, n) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisCertificate {
    pub rule: usize,
    pub overlapping: Vec<usize>,
    #[serde(with = "mat_serde")]
    pub p: Mat,
    #[serde(with = "mat_serde")]
    pub q: Mat,
    #[serde(with = "mat_serde")]
    pub n_res: Mat,
    /// Largest eigenvalue of the P inequality for each overlapping rule.
    pub p_margins: Vec<f64>,
    pub q_margins: Vec<f64>,
    pub coupling_ok: bool,
}

/// Evaluates the compensator formulas for rule `j` from `P_j`, `Q_j` and `N_jj`.
pub fn compensator_from_certificate(
    rule: &UncertainRule,
    c_aj: &Mat,
    cert: &SynthesisCertificate,
) -> Result<Compensator> {
    let n = rule.a.nrows();
    let eye = Mat::identity(n, n);
    let coupling = &eye - &cert.p * &cert.q;
    let condition = condition_number(&coupling);
    if !(condition <= 1e12) {
        return Err(Error::SingularCoupling { condition });
    }
    let coupling_inv = inverse(&coupling).map_err(|_| Error::SingularCoupling { condition })?;
    let q_inv = inverse(&cert.q)?;
    let b_c = &q_inv * rule.c.transpose();
    let c_c = rule.b.transpose() * &cert.q * &coupling_inv;
    let a_hat = &rule.a + &rule.b * &c_c - &b_c * &rule.c + &q_inv * c_aj.transpose() * c_aj
        - &q_inv * &cert.n_res * &coupling_inv;
    Ok(Compensator { a_hat, b_c, c_c })
}

/// Compensators and certificates for every rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub eps: f64,
    pub compensators: Vec<Compensator>,
    pub certificates: Vec<SynthesisCertificate>,
}

fn common_solution<F, R>(candidates: &[usize], solve: F, residual: R, eps: f64) -> Result<(Mat, Vec<f64>)>
where
    F: Fn(usize, &mut dyn FnMut(&Mat) -> bool) -> Result<Option<Mat>>,
    R: Fn(usize, &Mat) -> Mat,
{
    let feasible = |x: &Mat| candidates.iter().all(|&k| max_sym_eig(&residual(k, x)) <= -eps / 2.0);
    let mut last_err = None;
    for &i in candidates {
        match solve(i, &mut |x| feasible(x)) {
            Ok(Some(x)) => {
                let margins = candidates.iter().map(|&k| max_sym_eig(&residual(k, &x))).collect();
                return Ok((x, margins));
            }
            Ok(None) => {
                last_err = Some(Error::NoStabilizingSolution(format!(
                    "no solution of rule {i} satisfies every overlapping rule's inequality"
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoStabilizingSolution("no candidate rules".into())))
}

fn first_feasible(
    m: &Mat,
    g: &Mat,
    h: &Mat,
    eps: f64,
    feasible: &mut dyn FnMut(&Mat) -> bool,
) -> Result<Option<Mat>> {
    Ok(riccati_candidates(m, g, h, eps)?.map(|s| s.x).find(|x| feasible(x)))
}

/// Certificate for compensator rule `j`: a single `P_j` and `Q_j` must
/// satisfy the inequalities of every rule overlapping rule `j`. Candidates
/// are the Riccati solutions of each overlapping rule, rule `j` first.
pub fn certify_rule(plant: &UncertainTsPlant, aug: &AugmentationMatrices, j: usize, eps: f64) -> Result<SynthesisCertificate> {
    if j >= plant.rules.len() {
        return Err(Error::InvalidArgument(format!("rule index {j} out of range")));
    }
    let overlapping = plant.overlapping(j);
    let rules = &plant.rules;
    let (p, p_margins) = common_solution(
        &overlapping,
        |i, ok| {
            let (quad, constant) = p_terms(&rules[i], &aug.c_ai[i], &aug.d_ai[i]);
            first_feasible(&rules[i].a, &quad, &constant, eps, ok)
        },
        |k, p| p_residual(&rules[k], &aug.c_ai[k], &aug.d_ai[k], p),
        eps,
    )?;
    let (q, q_margins) = common_solution(
        &overlapping,
        |i, ok| {
            let (quad, constant) = q_terms(&rules[i], &aug.c_ai[i], &aug.d_ai[i]);
            first_feasible(&rules[i].a.transpose(), &quad, &constant, eps, ok)
        },
        |k, q| q_residual(&rules[k], &aug.c_ai[k], &aug.d_ai[k], q),
        eps,
    )?;
    let n_res = q_residual(&rules[j], &aug.c_ai[j], &aug.d_ai[j], &q);
    let coupling_ok = coupling_check(&p, &q, 0.0);
    Ok(SynthesisCertificate { rule: j, overlapping, p, q, n_res, p_margins, q_margins, coupling_ok })
}

pub fn synthesize_compensator(
    plant: &UncertainTsPlant,
    aug: &AugmentationMatrices,
    j: usize,
    cert: &SynthesisCertificate,
) -> Result<Compensator> {
    if !cert.coupling_ok {
        return Err(Error::NoStabilizingSolution(format!("coupling condition fails for rule {j}")));
    }
    compensator_from_certificate(&plant.rules[j], &aug.c_ai[j], cert)
}

/// Full synthesis over all rules. `eps = None` uses [`default_eps`] per rule.
pub fn synthesize(plant: &UncertainTsPlant, eps: Option<f64>) -> Result<Synthesis> {
    let aug = AugmentationMatrices::build(plant)?;
    let eps = eps.unwrap_or_else(|| plant.rules.iter().map(|r| default_eps(&r.a)).fold(0.0, f64::max));
    let mut compensators = Vec::new();
    let mut certificates = Vec::new();
    for j in 0..plant.rules.len() {
        let cert = certify_rule(plant, &aug, j, eps)?;
        compensators.push(synthesize_compensator(plant, &aug, j, &cert)?);
        certificates.push(cert);
    }
    Ok(Synthesis { eps, compensators, certificates })
}

/// Augmented closed loop of plant rule `i` with compensator rule `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRealization {
    pub a_cl: Mat,
    pub b_cl: Mat,
    pub c_cl: Mat,
}

pub fn build_closed_loop(rule: &UncertainRule, comp: &Compensator) -> Result<ClosedLoopRealization> {
    let (n, m, s) = rule.validate()?;
    expect_shape("A_hat", &comp.a_hat, n, n)?;
    expect_shape("B_c", &comp.b_c, n, s)?;
    expect_shape("C_c", &comp.c_c, m, n)?;
    Ok(assemble_loop(&rule.a, &rule.b, &rule.c, comp))
}

fn assemble_loop(a: &Mat, b: &Mat, c: &Mat, comp: &Compensator) -> ClosedLoopRealization {
    let n = a.nrows();
    let s = c.nrows();
    let mut a_cl = Mat::zeros(2 * n, 2 * n);
    a_cl.view_mut((0, 0), (n, n)).copy_from(a);
    a_cl.view_mut((0, n), (n, n)).copy_from(&(b * &comp.c_c));
    a_cl.view_mut((n, 0), (n, n)).copy_from(&(&comp.b_c * c));
    a_cl.view_mut((n, n), (n, n)).copy_from(&comp.a_hat);
    let mut b_cl = Mat::zeros(2 * n, n);
    b_cl.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut c_cl = Mat::zeros(s, 2 * n);
    c_cl.view_mut((0, 0), (s, n)).copy_from(c);
    ClosedLoopRealization { a_cl, b_cl, c_cl }
}

/// `A^T P + P A + P B B^T P + C^T C`.
pub fn brl_matrix(p: &Mat, cl: &ClosedLoopRealization) -> Mat {
    symmetrize(
        &(cl.a_cl.transpose() * p + p * &cl.a_cl + p * &cl.b_cl * cl.b_cl.transpose() * p
            + cl.c_cl.transpose() * &cl.c_cl),
    )
}

/// `P > tol I` and the bounded-real matrix has every eigenvalue below `-tol`.
pub fn brl_certificate_check(p: &Mat, cl: &ClosedLoopRealization, tol: f64) -> Result<bool> {
    let dim = cl.a_cl.nrows();
    if p.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: p.nrows() });
    }
    let asym = asymmetry(p);
    if asym > 1e-9 * (1.0 + p.amax()) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(min_sym_eig(p) > tol && max_sym_eig(&brl_matrix(p, cl)) < -tol)
}

/// Searches a bounded-real certificate `P` for a closed loop.
pub fn find_brl_certificate(cl: &ClosedLoopRealization, eps: f64) -> Result<Mat> {
    // A^T P + P A + P B B^T P + C^T C < 0 in the generic form with M = A^T
    let quad = &cl.b_cl * cl.b_cl.transpose();
    let constant = cl.c_cl.transpose() * &cl.c_cl;
    Ok(solve_riccati_inequality(&cl.a_cl.transpose(), &quad, &constant, eps)?.x)
}

/// Checks `sum k_i M_i M_i^T >= sum_i sum_j k_i k_j M_i M_j^T` up to `tol`.
pub fn sum_square_inequality_check(k: &[f64], mats: &[Mat], tol: f64) -> Result<bool> {
    if k.len() != mats.len() {
        return Err(Error::DimensionMismatch { expected: mats.len(), got: k.len() });
    }
    if mats.is_empty() {
        return Err(Error::Empty("matrices"));
    }
    let total: f64 = k.iter().sum();
    if k.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("weights must be non-negative and sum to 1".into()));
    }
    let shape = mats[0].shape();
    if mats.iter().any(|m| m.shape() != shape) {
        return Err(Error::InvalidArgument("matrices must share a shape".into()));
    }
    let mut lhs = Mat::zeros(shape.0, shape.0);
    let mut rhs = Mat::zeros(shape.0, shape.0);
    for (ki, mi) in k.iter().zip(mats) {
        lhs += mi * mi.transpose() * *ki;
        for (kj, mj) in k.iter().zip(mats) {
            rhs += mi * mj.transpose() * (ki * kj);
        }
    }
    Ok(min_sym_eig(&(lhs - rhs)) >= -tol)
}

/// A sampled perturbation `D Δ E` together with its symmetric core `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySample {
    pub delta: Mat,
    pub perturbation: Mat,
}

/// Draws symmetric `Δ` with spectral norm at most `bound` and returns `D Δ E`.
pub fn sample_uncertainty<R: Rng + ?Sized>(d: &Mat, e: &Mat, bound: f64, rng: &mut R) -> Result<UncertaintySample> {
    let k = d.ncols();
    if e.nrows() != k {
        return Err(Error::DimensionMismatch { expected: k, got: e.nrows() });
    }
    if !(0.0..1.0).contains(&bound) {
        return Err(Error::InvalidArgument("uncertainty bound must lie in [0, 1)".into()));
    }
    let delta = if k == 0 || bound == 0.0 {
        Mat::zeros(k, k)
    } else {
        let raw = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
        let eig = symmetrize(&raw).symmetric_eigen();
        let values = nalgebra::DVector::from_fn(k, |_, _| rng.random_range(-bound..=bound));
        symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose()))
    };
    let perturbation = d * &delta * e;
    Ok(UncertaintySample { delta, perturbation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSample {
    pub index: usize,
    pub spectral_abscissa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub samples: Vec<RobustSample>,
    pub failures: Vec<usize>,
    pub pass: bool,
}

impl RobustReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,spectral_abscissa\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.index, s.spectral_abscissa));
        }
        out
    }
}

/// Samples uncertainties within each rule's width bound and random constant
/// membership weights, and checks the blended closed loop is Hurwitz.
pub fn robust_verify<R: Rng + ?Sized>(
    plant: &UncertainTsPlant,
    compensators: &[Compensator],
    n_samples: usize,
    rng: &mut R,
) -> Result<RobustReport> {
    let (n, m, s) = plant.dims()?;
    if compensators.len() != plant.rules.len() {
        return Err(Error::DimensionMismatch { expected: plant.rules.len(), got: compensators.len() });
    }
    let r = plant.rules.len();
    let mut samples = Vec::with_capacity(n_samples);
    let mut failures = Vec::new();
    for index in 0..n_samples {
        let raw: Vec<f64> = (0..r).map(|_| rng.random::<f64>() + 1e-12).collect();
        let total: f64 = raw.iter().sum();
        let h: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut a = Mat::zeros(n, n);
        let mut b = Mat::zeros(n, m);
        let mut c = Mat::zeros(s, n);
        let mut comp = Compensator::zeros(n, m, s);
        for ((rule, k), hl) in plant.rules.iter().zip(compensators).zip(&h) {
            let bound = uncertainty_bound(rule);
            let da = sample_uncertainty(&rule.d1, &rule.e1, bound, rng)?.perturbation;
            let db = sample_uncertainty(&rule.d2, &rule.e2, bound, rng)?.perturbation;
            let dc = sample_uncertainty(&rule.d3, &rule.e3, bound, rng)?.perturbation;
            a += (&rule.a + da) * *hl;
            b += (&rule.b + db) * *hl;
            c += (&rule.c + dc) * *hl;
            comp.a_hat += &k.a_hat * *hl;
            comp.b_c += &k.b_c * *hl;
            comp.c_c += &k.c_c * *hl;
        }
        let abscissa = spectral_abscissa(&assemble_loop(&a, &b, &c, &comp).a_cl);
        if !(abscissa < 0.0) {
            failures.push(index);
        }
        samples.push(RobustSample { index, spectral_abscissa: abscissa });
    }
    Ok(RobustReport { pass: failures.is_empty(), samples, failures })
}

/// Plant description file: `{"schema_version": 1, "rules": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantDescription {
    pub schema_version: u32,
    pub rules: Vec<UncertainRule>,
    #[serde(default)]
    pub eps: Option<f64>,
}

pub const PLANT_SCHEMA_VERSION: u32 = 1;

pub fn parse_plant_description(text: &str) -> Result<(UncertainTsPlant, Option<f64>)> {
    let desc: PlantDescription = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if desc.schema_version != PLANT_SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema_version {}", desc.schema_version)));
    }
    if let Some(eps) = desc.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parse("eps must be positive".into()));
        }
    }
    if desc.rules.len() > 64 {
        return Err(Error::Parse("too many rules".into()));
    }
    let plant = UncertainTsPlant::new(desc.rules)?;
    let (n, _, _) = plant.dims()?;
    if n > 16 {
        return Err(Error::Parse("state dimension above 16 is not supported".into()));
    }
    Ok((plant, desc.eps))
}
