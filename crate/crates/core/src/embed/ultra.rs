//! Sequences of stage vectors read as elements of the quotient
//! `l^∞(l^{r(.)}) / N`. All sequences produced here converge, so the filter
//! limit is the ordinary limit and is read off a final window of stages.

use std::sync::Arc;

use crate::exponents::RationalEnum;
use crate::seqspace::{sparse_norm, Nesting, SparseVector};

use super::EmbedError;

/// Default number of final stages used to judge limits.
pub const DEFAULT_WINDOW: usize = 5;

/// Default slack of the order test, on top of the elements' Cauchy widths.
pub const DEFAULT_ORDER_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct UltrapowerElement {
    stages: Vec<SparseVector>,
    norms: Vec<f64>,
    window: usize,
    r: Arc<RationalEnum>,
}

impl UltrapowerElement {
    /// Norms are computed in `l^{r(.)}`.
    pub fn new(stages: Vec<SparseVector>, r: Arc<RationalEnum>) -> Result<Self, EmbedError> {
        let norms = stages
            .iter()
            .map(|x| sparse_norm(x, &r, Nesting::Left))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(UltrapowerElement {
            stages,
            norms,
            window: DEFAULT_WINDOW,
            r,
        })
    }

    /// For callers that already know the stage norms.
    pub(crate) fn with_norms(stages: Vec<SparseVector>, norms: Vec<f64>, r: Arc<RationalEnum>) -> Self {
        debug_assert_eq!(stages.len(), norms.len());
        UltrapowerElement {
            stages,
            norms,
            window: DEFAULT_WINDOW,
            r,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn stages(&self) -> &[SparseVector] {
        &self.stages
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Stage `i`, repeating the last stage past the end.
    fn stage(&self, i: usize) -> &SparseVector {
        &self.stages[i.min(self.stages.len() - 1)]
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&SparseVector, &SparseVector) -> SparseVector,
    ) -> Result<Self, EmbedError> {
        let len = self.len().max(other.len());
        if self.is_empty() || other.is_empty() {
            return Err(EmbedError::EmptyElement);
        }
        let stages = (0..len).map(|i| f(self.stage(i), other.stage(i))).collect();
        Ok(UltrapowerElement::new(stages, self.r.clone())?.with_window(self.window))
    }

    pub fn add(&self, other: &Self) -> Result<Self, EmbedError> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, EmbedError> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let stages = self.stages.iter().map(|x| x.scale(lambda)).collect();
        let norms = self.norms.iter().map(|n| lambda.abs() * n).collect();
        UltrapowerElement {
            stages,
            norms,
            window: self.window,
            r: self.r.clone(),
        }
    }
}

/// Last-stage norm and the spread `max - min` of the norms over the final window.
pub fn up_norm(u: &UltrapowerElement) -> Result<(f64, f64), EmbedError> {
    let w = u.window;
    if w == 0 || w > u.len() {
        return Err(EmbedError::Window {
            window: w,
            stages: u.len(),
        });
    }
    let tail = &u.norms[u.len() - w..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((*tail.last().unwrap(), max - min))
}

/// Entrywise absolute value, stage by stage.
pub fn up_abs(u: &UltrapowerElement) -> UltrapowerElement {
    UltrapowerElement {
        stages: u.stages.iter().map(SparseVector::abs).collect(),
        norms: u.norms.clone(),
        window: u.window,
        r: u.r.clone(),
    }
}

fn width(u: &UltrapowerElement) -> f64 {
    up_norm(u).map_or(0.0, |(_, w)| w)
}

/// `u ⪯ v`: `w = v - u` lies in the positive cone, i.e. `‖|w_n| - w_n‖` is
/// below `tol` plus the larger Cauchy width over the final window.
pub fn up_leq(u: &UltrapowerElement, v: &UltrapowerElement, tol: f64) -> Result<bool, EmbedError> {
    let w = v.sub(u)?;
    let window = u.window.max(v.window).min(w.len());
    let slack = tol + width(u).max(width(v));
    for x in &w.stages[w.len() - window..] {
        let defect = x.abs().sub(x);
        if sparse_norm(&defect, &w.r, Nesting::Left)? > slack {
            return Ok(false);
        }
    }
    Ok(true)
}
