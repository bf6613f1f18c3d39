//! Measured distortion `‖T‖ ‖T^{-1}‖` of the stage maps on finite-dimensional
//! subspaces, and certificates recording it.
//!
//! Operator norms are estimated by sampling the unit sphere of the domain
//! norm and refining the extremes by coordinate ascent. Both results are
//! lower bounds on the true operator norms.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbedConfig, EmbedError, Embedder};
use crate::exponents::RationalEnum;
use crate::odenorm::{lp_norm, merge_breakpoints, NormError, StepFn};
use crate::registry::Registry;

/// Samples drawn from one random stream.
pub const BATCH: usize = 256;

pub const CERTIFICATE_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("dimension {0} is outside 1..={max}", max = MAX_DIM)]
    Dimension(usize),
    #[error("{which} norm is not absolutely homogeneous at {coeffs:?}")]
    NotHomogeneous { which: &'static str, coeffs: Vec<f64> },
    #[error("basis is rank deficient: codomain values range over [{min:e}, {max:e}]")]
    RankDeficient { min: f64, max: f64 },
    #[error("no stage up to {max_stage} reached distortion {target}; best was {best} at stage {best_stage}")]
    Budget {
        max_stage: u32,
        target: f64,
        best: f64,
        best_stage: u32,
    },
    #[error("certificate field {field} is invalid: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

impl CertifyError {
    pub fn is_budget(&self) -> bool {
        match self {
            CertifyError::Budget { .. } => true,
            CertifyError::Embed(e) => e.is_budget(),
            _ => false,
        }
    }
}

/// Largest supported subspace dimension.
pub const MAX_DIM: usize = 6;

/// A norm, or seminorm, on coefficient vectors.
pub trait CoefficientNorm: Send + Sync {
    fn norm(&self, c: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> CoefficientNorm for F {
    fn norm(&self, c: &[f64]) -> f64 {
        self(c)
    }
}

pub struct L1;
pub struct L2;
pub struct LInf;

impl CoefficientNorm for L1 {
    fn norm(&self, c: &[f64]) -> f64 {
        c.iter().map(|v| v.abs()).sum()
    }
}

impl CoefficientNorm for L2 {
    fn norm(&self, c: &[f64]) -> f64 {
        c.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl CoefficientNorm for LInf {
    fn norm(&self, c: &[f64]) -> f64 {
        c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fixed coefficient norms, for calibrating the estimator.
pub fn norm_registry() -> Registry<dyn CoefficientNorm> {
    Registry::new("coefficient norm")
        .register("l2", Box::new(L2) as Box<dyn CoefficientNorm>)
        .register("l1", Box::new(L1))
        .register("linf", Box::new(LInf))
}

/// `c ↦ ‖Σ c_i f_i‖_{L^{p(.)}}`.
pub struct SpanNorm {
    breakpoints: Vec<f64>,
    /// `columns[i]` holds the values of `f_i` on the common cells.
    columns: Vec<Vec<f64>>,
    p: StepFn,
}

impl SpanNorm {
    pub fn new(basis: &[StepFn], p: StepFn) -> Self {
        let breakpoints = basis
            .iter()
            .fold(vec![0.0, 1.0], |acc, f| merge_breakpoints(&acc, f.breakpoints()));
        let mids: Vec<f64> = breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let columns = basis
            .iter()
            .map(|f| mids.iter().map(|&t| f.value_at(t)).collect())
            .collect();
        SpanNorm {
            breakpoints,
            columns,
            p,
        }
    }

    /// Smallest Gram-Schmidt residual of the basis in `L^2`, relative to
    /// the norm of the function it came from.
    pub fn independence(&self) -> f64 {
        let weights: Vec<f64> = self.breakpoints.windows(2).map(|w| (w[1] - w[0]).sqrt()).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut done: Vec<Vec<f64>> = Vec::new();
        let mut worst: f64 = 1.0;
        for col in &self.columns {
            let mut v: Vec<f64> = col.iter().zip(&weights).map(|(x, w)| x * w).collect();
            let norm = dot(&v, &v).sqrt();
            for u in &done {
                let t = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= t * y);
            }
            let rest = dot(&v, &v).sqrt();
            worst = worst.min(if norm > 0.0 { rest / norm } else { 0.0 });
            if rest > 0.0 {
                done.push(v.iter().map(|x| x / rest).collect());
            }
        }
        worst
    }

    pub fn combination(&self, c: &[f64]) -> StepFn {
        let cells = self.breakpoints.len() - 1;
        let values = (0..cells)
            .map(|j| c.iter().zip(&self.columns).map(|(ci, col)| ci * col[j]).sum())
            .collect();
        StepFn::new(self.breakpoints.clone(), values).expect("common refinement of valid step functions")
    }
}

impl CoefficientNorm for SpanNorm {
    fn norm(&self, c: &[f64]) -> f64 {
        lp_norm(&self.combination(c), &self.p).expect("exponent validated on construction")
    }
}

/// `c ↦ ‖Σ c_i x_n(f_i)‖_{l^{r(.)}}` for the placement of one stage.
pub struct StageNorm {
    images: Vec<Vec<f64>>,
    connectors: Vec<f64>,
}

impl StageNorm {
    pub fn new(embedder: &Embedder, basis: &[StepFn], n: u32) -> Result<Self, EmbedError> {
        let plan = embedder.plan(n)?;
        Ok(StageNorm {
            images: basis.iter().map(|f| plan.image(f).values).collect(),
            connectors: plan.placement.connector_values.clone(),
        })
    }
}

impl CoefficientNorm for StageNorm {
    fn norm(&self, c: &[f64]) -> f64 {
        let len = self.images.first().map_or(0, Vec::len);
        let mut acc = 0.0;
        for k in 0..len {
            let v: f64 = c
                .iter()
                .zip(&self.images)
                .map(|(ci, img)| ci * img[k])
                .sum::<f64>()
                .abs();
            acc = if k == 0 {
                v
            } else {
                crate::seqspace::boxplus_unchecked(acc, v, self.connectors[k - 1])
            };
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub norm_t: f64,
    pub norm_t_inv: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingBudget {
    pub samples: usize,
    pub refine_iters: usize,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        SamplingBudget {
            samples: 10_000,
            refine_iters: 100,
        }
    }
}

fn check_homogeneous(
    which: &'static str,
    n: &dyn CoefficientNorm,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(), CertifyError> {
    for _ in 0..4 {
        let c: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let base = n.norm(&c);
        for lambda in [-1.0, 2.5, -0.3] {
            let scaled: Vec<f64> = c.iter().map(|v| lambda * v).collect();
            let got = n.norm(&scaled);
            let want = f64::abs(lambda) * base;
            if !(got - want).abs().le(&(1e-9 * want.max(f64::MIN_POSITIVE))) {
                return Err(CertifyError::NotHomogeneous { which, coeffs: c });
            }
        }
    }
    Ok(())
}

#[derive(Clone)]
struct Extreme {
    value: f64,
    point: Vec<f64>,
}

fn unit(domain: &dyn CoefficientNorm, c: Vec<f64>) -> Option<(Vec<f64>, f64)> {
    let n = domain.norm(&c);
    (n > 0.0 && n.is_finite()).then(|| (c.iter().map(|v| v / n).collect(), n))
}

/// Codomain value at `c / domain(c)`, computed as a ratio so that equal
/// evaluators give exactly 1.
fn value(domain: &dyn CoefficientNorm, codomain: &dyn CoefficientNorm, c: Vec<f64>) -> Option<(Vec<f64>, f64)> {
    let v = codomain.norm(&c);
    unit(domain, c).map(|(u, n)| (u, v / n))
}

/// Coordinate ascent on the domain sphere: `sign = 1` maximizes, `-1` minimizes.
fn refine(
    domain: &dyn CoefficientNorm,
    codomain: &dyn CoefficientNorm,
    start: Extreme,
    iters: usize,
    sign: f64,
) -> Extreme {
    let mut best = start;
    let mut step = 0.1;
    for _ in 0..iters {
        let mut improved = false;
        for i in 0..best.point.len() {
            for s in [step, -step] {
                let mut c = best.point.clone();
                c[i] += s;
                let Some((c, v)) = value(domain, codomain, c) else {
                    continue;
                };
                if sign * (v - best.value) > 0.0 {
                    best = Extreme { value: v, point: c };
                    improved = true;
                }
            }
        }
        step *= if improved { 0.7 } else { 0.5 };
    }
    best
}

/// Estimates `‖T‖`, `‖T^{-1}‖` and their product for the map that is the
/// identity on coefficients, normed by `domain` and `codomain`.
pub fn distortion_estimate(
    domain: &dyn CoefficientNorm,
    codomain: &dyn CoefficientNorm,
    d: usize,
    budget: SamplingBudget,
    seed: u64,
) -> Result<Distortion, CertifyError> {
    if d == 0 || d > MAX_DIM {
        return Err(CertifyError::Dimension(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    check_homogeneous("domain", domain, d, &mut rng)?;
    check_homogeneous("codomain", codomain, d, &mut rng)?;

    let batches = budget.samples.div_ceil(BATCH).max(1);
    let extremes: Vec<(Extreme, Extreme)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(budget.samples.saturating_sub(b * BATCH)).max(1);
            let mut hi = Extreme {
                value: f64::NEG_INFINITY,
                point: Vec::new(),
            };
            let mut lo = Extreme {
                value: f64::INFINITY,
                point: Vec::new(),
            };
            for _ in 0..count {
                let c: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let Some((c, v)) = value(domain, codomain, c) else {
                    continue;
                };
                if v > hi.value {
                    hi = Extreme {
                        value: v,
                        point: c.clone(),
                    };
                }
                if v < lo.value {
                    lo = Extreme { value: v, point: c };
                }
            }
            (hi, lo)
        })
        .collect();

    let mut hi = extremes[0].0.clone();
    let mut lo = extremes[0].1.clone();
    for (h, l) in &extremes[1..] {
        if h.value > hi.value {
            hi = h.clone();
        }
        if l.value < lo.value {
            lo = l.clone();
        }
    }
    if hi.point.is_empty() {
        return Err(CertifyError::RankDeficient { min: 0.0, max: 0.0 });
    }
    let hi = refine(domain, codomain, hi, budget.refine_iters, 1.0);
    let lo = refine(domain, codomain, lo, budget.refine_iters, -1.0);
    if lo.value.is_nan() || lo.value < 1e-12 * hi.value || hi.value == 0.0 {
        return Err(CertifyError::RankDeficient {
            min: lo.value,
            max: hi.value,
        });
    }
    Ok(Distortion {
        norm_t: hi.value,
        norm_t_inv: lo.value.recip(),
        distortion: hi.value / lo.value,
    })
}

/// Serializable form of a step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl From<&StepFn> for StepRecord {
    fn from(f: &StepFn) -> Self {
        StepRecord {
            breakpoints: f.breakpoints().to_vec(),
            values: f.values().to_vec(),
        }
    }
}

impl TryFrom<&StepRecord> for StepFn {
    type Error = NormError;

    fn try_from(r: &StepRecord) -> Result<Self, NormError> {
        StepFn::new(r.breakpoints.clone(), r.values.clone())
    }
}

/// Positions and connector rationals of the certified stage; big integers are
/// written as decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRecord {
    pub scheme: String,
    pub positions: Vec<String>,
    pub connectors: Vec<String>,
    pub ratio_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub stage: u32,
    pub distortion: f64,
}

/// The stage-map configuration a certificate was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRecord {
    pub truncation_slope: f64,
    pub k_max: u32,
    pub cuts: String,
    pub delta: Option<f64>,
}

impl ConfigRecord {
    fn of(config: &EmbedConfig) -> Self {
        ConfigRecord {
            truncation_slope: config.truncation.alpha(1),
            k_max: config.k_max,
            cuts: config.cuts.clone(),
            delta: config.delta,
        }
    }

    pub fn to_config(&self) -> Result<EmbedConfig, CertifyError> {
        let truncation =
            crate::approx::TruncationSchedule::new(self.truncation_slope).map_err(|e| CertifyError::Invalid {
                field: "config.truncation_slope",
                reason: e.to_string(),
            })?;
        Ok(EmbedConfig {
            truncation,
            k_max: self.k_max,
            cuts: self.cuts.clone(),
            delta: self.delta,
        })
    }
}

pub const CAVEAT: &str = "norm_t and norm_t_inv are sampled lower bounds on the operator norms; \
the placement ratio bound is rigorous for the stage's connectors";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub schema: u32,
    pub basis: Vec<StepRecord>,
    pub p: StepRecord,
    pub stage: u32,
    pub placement: PlacementRecord,
    pub norm_t: f64,
    pub norm_t_inv: f64,
    pub distortion: f64,
    pub samples: usize,
    pub refine_iters: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Slack allowed when re-measuring with more samples.
    pub tolerance: f64,
    pub trace: Vec<TraceEntry>,
    pub caveat: String,
    pub config: ConfigRecord,
}

/// Stages and sampling effort available to [`finite_repr_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyBudget {
    pub max_stage: u32,
    pub sampling: SamplingBudget,
}

impl Default for CertifyBudget {
    fn default() -> Self {
        CertifyBudget {
            max_stage: 30,
            sampling: SamplingBudget::default(),
        }
    }
}

/// Re-measurement slack of emitted certificates.
pub const VERIFY_SLACK: f64 = 0.01;

fn check_basis(basis: &[StepFn], span: &SpanNorm) -> Result<(), CertifyError> {
    if basis.is_empty() || basis.len() > 4 {
        return Err(CertifyError::Dimension(basis.len()));
    }
    let rest = span.independence();
    if rest < 1e-12 {
        return Err(CertifyError::RankDeficient { min: rest, max: 1.0 });
    }
    Ok(())
}

/// Advances through stages `1..=budget.max_stage` until the measured
/// distortion of `span(basis) → l^{r(.)}` is at most `1 + epsilon`.
pub fn finite_repr_certificate(
    basis: &[StepFn],
    p: &StepFn,
    epsilon: f64,
    budget: CertifyBudget,
    seed: u64,
    config: EmbedConfig,
) -> Result<Certificate, CertifyError> {
    let domain = SpanNorm::new(basis, p.clone());
    check_basis(basis, &domain)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CertifyError::Invalid {
            field: "epsilon",
            reason: format!("{epsilon} is not a positive number"),
        });
    }
    let record = ConfigRecord::of(&config);
    let embedder = Embedder::new(p.clone(), config, Arc::new(RationalEnum::new()))?;
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, 0);
    for n in 1..=budget.max_stage {
        let codomain = StageNorm::new(&embedder, basis, n)?;
        let m = distortion_estimate(&domain, &codomain, basis.len(), budget.sampling, seed)?;
        trace.push(TraceEntry {
            stage: n,
            distortion: m.distortion,
        });
        if m.distortion < best.0 {
            best = (m.distortion, n);
        }
        if m.distortion <= 1.0 + epsilon {
            let plan = embedder.plan(n)?;
            return Ok(Certificate {
                schema: CERTIFICATE_SCHEMA,
                basis: basis.iter().map(StepRecord::from).collect(),
                p: p.into(),
                stage: n,
                placement: PlacementRecord {
                    scheme: embedder.enumeration().scheme().to_string(),
                    positions: plan.placement.positions.iter().map(|i| i.to_string()).collect(),
                    connectors: plan.placement.connectors.iter().map(|q| q.to_string()).collect(),
                    ratio_bound: plan.placement.ratio_bound(),
                },
                norm_t: m.norm_t,
                norm_t_inv: m.norm_t_inv,
                distortion: m.distortion,
                samples: budget.sampling.samples,
                refine_iters: budget.sampling.refine_iters,
                seed,
                epsilon,
                tolerance: VERIFY_SLACK,
                trace,
                caveat: CAVEAT.to_string(),
                config: record,
            });
        }
    }
    Err(CertifyError::Budget {
        max_stage: budget.max_stage,
        target: 1.0 + epsilon,
        best: best.0,
        best_stage: best.1,
    })
}

/// Outcome of re-measuring a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub placement_matches: bool,
    pub remeasured: Distortion,
    pub accepted: bool,
}

/// Rebuilds the certified stage, checks the recorded placement and
/// re-measures the distortion with `factor` times the samples.
pub fn verify(cert: &Certificate, factor: usize) -> Result<Verification, CertifyError> {
    if cert.schema != CERTIFICATE_SCHEMA {
        return Err(CertifyError::Invalid {
            field: "schema",
            reason: format!("expected {CERTIFICATE_SCHEMA}, found {}", cert.schema),
        });
    }
    let basis = cert.basis.iter().map(StepFn::try_from).collect::<Result<Vec<_>, _>>()?;
    let p = StepFn::try_from(&cert.p)?;
    let domain = SpanNorm::new(&basis, p.clone());
    check_basis(&basis, &domain)?;
    let embedder = Embedder::new(p.clone(), cert.config.to_config()?, Arc::new(RationalEnum::new()))?;
    if cert.stage == 0 {
        return Err(CertifyError::Invalid {
            field: "stage",
            reason: "must be at least 1".into(),
        });
    }
    let plan = embedder.plan(cert.stage)?;
    let positions: Vec<String> = plan.placement.positions.iter().map(|i| i.to_string()).collect();
    let connectors: Vec<String> = plan.placement.connectors.iter().map(|q| q.to_string()).collect();
    let placement_matches = positions == cert.placement.positions
        && connectors == cert.placement.connectors
        && cert.placement.scheme == embedder.enumeration().scheme();
    let sampling = SamplingBudget {
        samples: cert.samples * factor,
        refine_iters: cert.refine_iters,
    };
    let codomain = StageNorm::new(&embedder, &basis, cert.stage)?;
    let remeasured = distortion_estimate(&domain, &codomain, basis.len(), sampling, cert.seed)?;
    let accepted = placement_matches && remeasured.distortion <= 1.0 + cert.epsilon + cert.tolerance;
    Ok(Verification {
        placement_matches,
        remeasured,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> SamplingBudget {
        SamplingBudget {
            samples: 2000,
            refine_iters: 60,
        }
    }

    #[test]
    fn identity_and_scaled_evaluators() {
        let id = distortion_estimate(&L2, &L2, 3, small(), 1).unwrap();
        assert_eq!(id.distortion, 1.0);
        let double = |c: &[f64]| 2.0 * L2.norm(c);
        let m = distortion_estimate(&L2, &double, 3, small(), 1).unwrap();
        assert_relative_eq!(m.norm_t, 2.0, max_relative = 1e-15);
        assert_relative_eq!(m.norm_t_inv, 0.5, max_relative = 1e-15);
        assert_relative_eq!(m.distortion, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn l2_to_l1_approaches_sqrt_two() {
        let m = distortion_estimate(&L2, &L1, 2, SamplingBudget::default(), 7).unwrap();
        assert_relative_eq!(m.norm_t, 2f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(m.norm_t_inv, 1.0, max_relative = 1e-6);
        assert!(m.distortion <= 2f64.sqrt());
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let first = |c: &[f64]| c[0].abs();
        assert!(matches!(
            distortion_estimate(&L2, &first, 2, SamplingBudget::default(), 3),
            Err(CertifyError::RankDeficient { .. })
        ));
        let square = |c: &[f64]| L2.norm(c).powi(2);
        assert!(matches!(
            distortion_estimate(&L2, &square, 2, small(), 3),
            Err(CertifyError::NotHomogeneous { which: "codomain", .. })
        ));
        assert!(matches!(
            distortion_estimate(&L2, &L2, 7, small(), 3),
            Err(CertifyError::Dimension(7))
        ));
        let twice = [
            StepFn::indicator(0.0, 0.5).unwrap(),
            StepFn::constant(1.0),
            StepFn::indicator(0.5, 1.0).unwrap(),
        ];
        let err = finite_repr_certificate(
            &twice,
            &StepFn::constant(2.0),
            0.1,
            CertifyBudget::default(),
            1,
            EmbedConfig::default(),
        );
        assert!(matches!(err, Err(CertifyError::RankDeficient { .. })));
    }

    #[test]
    fn estimates_are_reproducible() {
        let a = distortion_estimate(&L2, &LInf, 3, small(), 11).unwrap();
        let b = distortion_estimate(&L2, &LInf, 3, small(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_constant_function_certifies_at_stage_one() {
        let cert = finite_repr_certificate(
            &[StepFn::constant(1.0)],
            &StepFn::constant(2.0),
            0.1,
            CertifyBudget::default(),
            5,
            EmbedConfig::default(),
        )
        .unwrap();
        assert_eq!(cert.stage, 1);
        assert!(cert.distortion <= 1.1);
    }

    #[test]
    fn halves_with_two_step_exponent() {
        let basis = [
            StepFn::indicator(0.0, 0.5).unwrap(),
            StepFn::indicator(0.5, 1.0).unwrap(),
        ];
        let p = StepFn::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        let domain = SpanNorm::new(&basis, p.clone());
        for (a, b) in [(1.0, 0.0), (0.3, -2.0), (-1.5, 0.25)] {
            let want = crate::seqspace::boxplus(f64::abs(a) / 2.0, f64::abs(b) / 2f64.sqrt(), 2.0).unwrap();
            assert_relative_eq!(domain.norm(&[a, b]), want, max_relative = 1e-12);
        }
        let cert =
            finite_repr_certificate(&basis, &p, 0.05, CertifyBudget::default(), 9, EmbedConfig::default()).unwrap();
        assert!(cert.distortion <= 1.05);
        let check = verify(&cert, 10).unwrap();
        assert!(check.accepted, "{check:?}");
    }

    #[test]
    fn unreachable_epsilon_exhausts_the_budget() {
        let basis = [StepFn::indicator(0.0, 0.3).unwrap(), StepFn::constant(1.0)];
        let p = StepFn::new(vec![0.0, 0.5, 1.0], vec![1.5, 3.0]).unwrap();
        let budget = CertifyBudget {
            max_stage: 2,
            sampling: small(),
        };
        let err = finite_repr_certificate(&basis, &p, 1e-9, budget, 1, EmbedConfig::default()).unwrap_err();
        assert!(err.is_budget(), "{err}");
    }
}
