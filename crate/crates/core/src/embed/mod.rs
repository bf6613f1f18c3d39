//! Stage maps `f ↦ x_n` from step functions into `l^{r(.)}` and the limit
//! objects they define.

mod double;
mod place;
mod stage;
mod ultra;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use thiserror::Error;

use crate::approx::TruncationSchedule;
use crate::exponents::{ExponentError, Rational, RationalEnum};
use crate::odenorm::{lp_norm, NormError, StepFn};
use crate::registry::UnknownStrategy;
use crate::seminorm::{cut_registry, SeminormError, SeminormSpec};
use crate::seqspace::{SeqError, SparseVector};

pub use double::{double_embed, double_embed_with, DoubleEmbedding};
pub use place::{place, Placement, PlacementPolicy};
pub use stage::{b_map, LadderImage, PlanAtom, StagePlan};
pub use ultra::{up_abs, up_leq, up_norm, UltrapowerElement, DEFAULT_ORDER_TOL, DEFAULT_WINDOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Seminorm(#[from] SeminormError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error("function is not constant on atom {0}")]
    NotConstant(usize),
    #[error("{atoms} atoms but {exponents} exponents")]
    Shape { atoms: usize, exponents: usize },
    #[error("connector {0} cannot be placed")]
    Unplaceable(f64),
    #[error("placing connector {connector} (target {target}) failed: {source}")]
    Placement {
        connector: usize,
        target: f64,
        #[source]
        source: ExponentError,
    },
    #[error("window {window} does not fit {stages} stages")]
    Window { window: usize, stages: usize },
    #[error("operation needs at least one stage")]
    EmptyElement,
    #[error("stage count must be positive")]
    NoStages,
    #[error("{what} needs {needed} connectors, got {got}")]
    Connectors {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("stage must be at least 1")]
    Stage,
}

impl EmbedError {
    /// True when the failure is an exhausted search budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        let exp = match self {
            EmbedError::Exponent(e) => e,
            EmbedError::Seq(SeqError::Enumeration(e)) => e,
            EmbedError::Placement { source, .. } => source,
            _ => return false,
        };
        matches!(exp, ExponentError::BudgetExceeded { .. } | ExponentError::Exhausted)
    }
}

/// Schedules for the stage maps.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub truncation: TruncationSchedule,
    /// Largest dyadic generation used for the stage partitions.
    pub k_max: u32,
    /// Name in [`cut_registry`].
    pub cuts: String,
    /// `None` keeps each stage within the ratio `(n+1)/n`.
    pub delta: Option<f64>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            truncation: TruncationSchedule::default(),
            k_max: 7,
            cuts: cut_registry()
                .default_name()
                .expect("cut strategies registered")
                .to_string(),
            delta: None,
        }
    }
}

impl EmbedConfig {
    pub fn generation(&self, n: u32) -> u32 {
        n.min(self.k_max)
    }

    pub fn policy(&self, n: u32) -> PlacementPolicy {
        match self.delta {
            Some(d) => PlacementPolicy::Delta(d),
            None => PlacementPolicy::ratio((n as f64 + 1.0) / n as f64),
        }
    }
}

/// The `f`-independent data of stage `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub n: u32,
    /// Index of the Lusin set used, `m_n = n`.
    pub m: u32,
    pub k: u32,
    pub alpha: f64,
    pub spec: SeminormSpec,
    pub positions: Vec<BigUint>,
    pub connectors: Vec<Rational>,
}

/// Measurements taken while building one stage for one `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub n: u32,
    pub alpha: f64,
    pub measure_c: f64,
    pub atoms: usize,
    /// `‖x_n‖` in `l^{r(.)}`.
    pub stage_norm: f64,
    /// Norm of the `B_n` image in its own ladder.
    pub ladder_norm: f64,
    pub lp_norm: f64,
    /// `‖1_C f‖`.
    pub restricted: f64,
    /// `ladder_norm / stage_norm`, 1 for the zero vector.
    pub quasi_ratio: f64,
    /// Rigorous upper bound on `quasi_ratio` from the placed connectors.
    pub bound: f64,
}

impl StageRecord {
    /// `stage_norm <= ladder_norm <= (n+1)/n · stage_norm`, with a relative
    /// allowance of `1e-12` for rounding in the folds.
    pub fn quasi_holds(&self) -> bool {
        let slack = 1e-12 * self.ladder_norm.max(self.stage_norm);
        let cap = (self.n as f64 + 1.0) / self.n as f64;
        self.stage_norm <= self.ladder_norm + slack && self.ladder_norm <= cap * self.stage_norm + slack
    }
}

/// Stage maps for one exponent function, with plans cached per stage.
pub struct Embedder {
    p: StepFn,
    config: EmbedConfig,
    r: Arc<RationalEnum>,
    plans: Mutex<HashMap<u32, Arc<StagePlan>>>,
}

impl Embedder {
    pub fn new(p: StepFn, config: EmbedConfig, r: Arc<RationalEnum>) -> Result<Self, EmbedError> {
        cut_registry().get(&config.cuts)?;
        lp_norm(&StepFn::constant(0.0), &p)?;
        Ok(Embedder {
            p,
            config,
            r,
            plans: Mutex::new(HashMap::new()),
        })
    }

    pub fn exponent(&self) -> &StepFn {
        &self.p
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.config
    }

    pub fn enumeration(&self) -> &Arc<RationalEnum> {
        &self.r
    }

    pub fn plan(&self, n: u32) -> Result<Arc<StagePlan>, EmbedError> {
        if n == 0 {
            return Err(EmbedError::Stage);
        }
        if let Some(plan) = self.plans.lock().unwrap().get(&n) {
            return Ok(plan.clone());
        }
        let registry = cut_registry();
        let cuts = registry.get(&self.config.cuts)?;
        let plan = Arc::new(StagePlan::build(
            &self.p,
            n,
            self.config.generation(n),
            self.config.truncation.alpha(n),
            cuts,
            &self.r,
            self.config.policy(n),
        )?);
        self.plans.lock().unwrap().insert(n, plan.clone());
        Ok(plan)
    }

    pub fn state(&self, n: u32) -> Result<StageState, EmbedError> {
        let plan = self.plan(n)?;
        Ok(StageState {
            n,
            m: n,
            k: plan.k,
            alpha: plan.alpha,
            spec: plan.spec.clone(),
            positions: plan.placement.positions.clone(),
            connectors: plan.placement.connectors.clone(),
        })
    }

    /// `x_n` alone.
    pub fn stage_vector(&self, f: &StepFn, n: u32) -> Result<SparseVector, EmbedError> {
        Ok(self.plan(n)?.map(f))
    }

    /// `x_n` with its measurements; `lp` is `‖f‖` if already known.
    pub fn build_stage(&self, f: &StepFn, n: u32, lp: Option<f64>) -> Result<(SparseVector, StageRecord), EmbedError> {
        let plan = self.plan(n)?;
        let image = plan.image(f);
        let x = plan.placement.apply(&image.values);
        let ladder_norm = image.norm();
        let stage_norm = plan.placement.norm(&image.values);
        let lp_norm = match lp {
            Some(v) => v,
            None => lp_norm(f, &self.p)?,
        };
        let restricted = crate::odenorm::lp_norm(&f.restrict(&plan.lusin), &self.p)?;
        let quasi_ratio = if stage_norm == 0.0 {
            1.0
        } else {
            ladder_norm / stage_norm
        };
        let record = StageRecord {
            n,
            alpha: plan.alpha,
            measure_c: plan.lusin.measure(),
            atoms: plan.atoms.len(),
            stage_norm,
            ladder_norm,
            lp_norm,
            restricted,
            quasi_ratio,
            bound: plan.placement.ratio_bound(),
        };
        Ok((x, record))
    }

    /// Stages `1..=stages` with their records.
    pub fn embed_traced(&self, f: &StepFn, stages: u32) -> Result<(UltrapowerElement, Vec<StageRecord>), EmbedError> {
        if stages == 0 {
            return Err(EmbedError::NoStages);
        }
        let lp = lp_norm(f, &self.p)?;
        let mut xs = Vec::with_capacity(stages as usize);
        let mut records = Vec::with_capacity(stages as usize);
        for n in 1..=stages {
            let (x, rec) = self.build_stage(f, n, Some(lp))?;
            xs.push(x);
            records.push(rec);
        }
        let norms = records.iter().map(|r| r.stage_norm).collect();
        let window = DEFAULT_WINDOW.min(xs.len());
        Ok((
            UltrapowerElement::with_norms(xs, norms, self.r.clone()).with_window(window),
            records,
        ))
    }

    pub fn embed(&self, f: &StepFn, stages: u32) -> Result<UltrapowerElement, EmbedError> {
        if stages == 0 {
            return Err(EmbedError::NoStages);
        }
        let mut xs = Vec::with_capacity(stages as usize);
        let mut norms = Vec::with_capacity(stages as usize);
        for n in 1..=stages {
            let plan = self.plan(n)?;
            let image = plan.image(f);
            norms.push(plan.placement.norm(&image.values));
            xs.push(plan.placement.apply(&image.values));
        }
        let window = DEFAULT_WINDOW.min(xs.len());
        Ok(UltrapowerElement::with_norms(xs, norms, self.r.clone()).with_window(window))
    }
}

/// One-shot [`Embedder::embed`] with a fresh enumeration.
pub fn embed(f: &StepFn, p: &StepFn, stages: u32, config: EmbedConfig) -> Result<UltrapowerElement, EmbedError> {
    Embedder::new(p.clone(), config, Arc::new(RationalEnum::new()))?.embed(f, stages)
}
