use crate::registry::Registry;

use super::{phi_numeric, phi_step, NormError, PhiSolution, SampledFn, StepFn};

/// A way of solving for `φ_f` given step data.
pub trait NormSolver: Send + Sync {
    fn solve(&self, f: &StepFn, p: &StepFn) -> Result<PhiSolution, NormError>;
}

/// Exact per-cell integration on the common refinement.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactStep;

impl NormSolver for ExactStep {
    fn solve(&self, f: &StepFn, p: &StepFn) -> Result<PhiSolution, NormError> {
        phi_step(f, p)
    }
}

/// Samples both functions at the midpoints of a uniform grid first.
#[derive(Debug, Clone, Copy)]
pub struct MidpointGrid {
    pub cells: usize,
}

impl NormSolver for MidpointGrid {
    fn solve(&self, f: &StepFn, p: &StepFn) -> Result<PhiSolution, NormError> {
        let fs = SampledFn::from_step(f, self.cells)?;
        let ps = SampledFn::from_step(p, self.cells)?;
        phi_numeric(&fs, &ps)
    }
}

/// `"step"` (default) and `"grid"` with the given cell count.
pub fn solver_registry(grid_cells: usize) -> Registry<dyn NormSolver> {
    Registry::new("solver")
        .register("step", Box::new(ExactStep) as Box<dyn NormSolver>)
        .register("grid", Box::new(MidpointGrid { cells: grid_cells }))
}
