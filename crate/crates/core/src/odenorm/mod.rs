//! The varying-exponent norm `‖f‖ = φ_f(1)`, where `φ_f(0) = 0` and
//! `φ' = |f|^p φ^{1-p} / p` almost everywhere.
//!
//! On a cell where `|f| = c` and `p` are constant the equation integrates to
//! `d(φ^p)/dt = c^p`, so each cell contributes one p-sum:
//! `φ(b) = φ(a) ⊞_p c (b - a)^{1/p}`. This is exact for step data and handles
//! the singular start `φ = 0` without any special casing.

mod solver;
mod step;

use thiserror::Error;

use crate::approx::IntervalUnion;
use crate::seqspace::boxplus_unchecked;

pub use solver::{solver_registry, ExactStep, MidpointGrid, NormSolver};
pub(crate) use step::merge_breakpoints;
pub use step::{SampledFn, StepFn};

/// Largest exponent accepted by the solvers.
pub const P_MAX: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("breakpoints must start at 0, end at 1 and increase strictly")]
    Breakpoints,
    #[error("{values} values given for {cells} cells")]
    ValueCount { values: usize, cells: usize },
    #[error("value {0} is not finite")]
    NonFinite(f64),
    #[error("exponent {0} is outside [1, {P_MAX}]")]
    Exponent(f64),
    #[error("a grid needs at least one cell")]
    EmptyGrid,
    #[error("f has {f} samples but p has {p}")]
    GridMismatch { f: usize, p: usize },
}

/// `φ_f` at the cell boundaries of the solve, starting with `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSolution {
    points: Vec<(f64, f64)>,
}

impl PhiSolution {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn terminal(&self) -> f64 {
        self.points.last().map_or(0.0, |pt| pt.1)
    }

    /// `φ` at a grid point of the solve.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points
            .binary_search_by(|pt| pt.0.total_cmp(&t))
            .ok()
            .map(|k| self.points[k].1)
    }
}

fn check_exponents(p: &[f64]) -> Result<(), NormError> {
    match p.iter().find(|&&q| !(1.0..=P_MAX).contains(&q)) {
        Some(&bad) => Err(NormError::Exponent(bad)),
        None => Ok(()),
    }
}

fn integrate(cells: impl Iterator<Item = (f64, f64, f64, f64)>) -> PhiSolution {
    let mut phi = 0.0;
    let mut points = vec![(0.0, 0.0)];
    for (a, b, c, q) in cells {
        let piece = c.abs() * (b - a).powf(q.recip());
        phi = boxplus_unchecked(phi, piece, q);
        points.push((b, phi));
    }
    PhiSolution { points }
}

/// Exact solution for step data on the common refinement of `f` and `p`.
pub fn phi_step(f: &StepFn, p: &StepFn) -> Result<PhiSolution, NormError> {
    check_exponents(p.values())?;
    let grid = merge_breakpoints(f.breakpoints(), p.breakpoints());
    Ok(integrate(
        grid.windows(2)
            .map(|w| (w[0], w[1], f.value_at(w[0]), p.value_at(w[0]))),
    ))
}

/// Solution for midpoint samples, each grid cell treated as constant.
pub fn phi_numeric(f: &SampledFn, p: &SampledFn) -> Result<PhiSolution, NormError> {
    if f.cells() != p.cells() {
        return Err(NormError::GridMismatch {
            f: f.cells(),
            p: p.cells(),
        });
    }
    check_exponents(p.samples())?;
    let n = f.cells() as f64;
    Ok(integrate(
        f.samples()
            .iter()
            .zip(p.samples())
            .enumerate()
            .map(|(k, (c, q))| (k as f64 / n, (k + 1) as f64 / n, *c, *q)),
    ))
}

pub fn lp_norm(f: &StepFn, p: &StepFn) -> Result<f64, NormError> {
    Ok(phi_step(f, p)?.terminal())
}

/// `sup_n ‖1_{C_n} f‖`.
pub fn restricted_sup_norm(f: &StepFn, p: &StepFn, sets: &[IntervalUnion]) -> Result<f64, NormError> {
    let mut best: f64 = 0.0;
    for c in sets {
        best = best.max(lp_norm(&f.restrict(c), p)?);
    }
    Ok(best)
}
