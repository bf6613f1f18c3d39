use crate::approx::IntervalUnion;

use super::NormError;

/// Piecewise-constant function on `[0, 1]`: `values[k]` on
/// `[breakpoints[k], breakpoints[k + 1])`, the last cell closed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFn {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, NormError> {
        let ok = breakpoints.len() >= 2
            && breakpoints[0] == 0.0
            && *breakpoints.last().unwrap() == 1.0
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(NormError::Breakpoints);
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(NormError::ValueCount {
                values: values.len(),
                cells: breakpoints.len() - 1,
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(NormError::NonFinite(*bad));
        }
        Ok(StepFn { breakpoints, values })
    }

    pub fn constant(c: f64) -> Self {
        StepFn {
            breakpoints: vec![0.0, 1.0],
            values: vec![c],
        }
    }

    /// Step function equal to `values[k]` on the `k`-th of `n` equal cells.
    pub fn uniform(values: Vec<f64>) -> Result<Self, NormError> {
        let n = values.len();
        if n == 0 {
            return Err(NormError::EmptyGrid);
        }
        let breakpoints = (0..=n).map(|k| k as f64 / n as f64).collect();
        StepFn::new(breakpoints, values)
    }

    /// `1_{[a, b]}` for `0 <= a < b <= 1`.
    pub fn indicator(a: f64, b: f64) -> Result<Self, NormError> {
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        if a > 0.0 {
            breakpoints.push(a);
            values.push(0.0);
        }
        values.push(1.0);
        if b < 1.0 {
            breakpoints.push(b);
            values.push(0.0);
        }
        breakpoints.push(1.0);
        StepFn::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cells as `(start, end, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[0], w[1], *v))
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        self.values[k.clamp(1, self.values.len()) - 1]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interior points where the value actually changes.
    pub fn jumps(&self) -> Vec<f64> {
        self.values
            .windows(2)
            .zip(&self.breakpoints[1..])
            .filter(|(w, _)| w[0] != w[1])
            .map(|(_, b)| *b)
            .collect()
    }

    /// Same function on the union of its breakpoints and `extra` (points
    /// outside `(0, 1)` are ignored).
    pub fn refined(&self, extra: &[f64]) -> StepFn {
        let breakpoints = merge_breakpoints(&self.breakpoints, extra);
        let values = breakpoints.windows(2).map(|w| self.value_at(w[0])).collect();
        StepFn { breakpoints, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> StepFn {
        StepFn {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn abs(&self) -> StepFn {
        self.map(f64::abs)
    }

    pub fn scale(&self, lambda: f64) -> StepFn {
        self.map(|v| lambda * v)
    }

    /// Pointwise combination on the common refinement.
    pub fn combine(&self, other: &StepFn, f: impl Fn(f64, f64) -> f64) -> StepFn {
        let breakpoints = merge_breakpoints(&self.breakpoints, &other.breakpoints);
        let values = breakpoints
            .windows(2)
            .map(|w| f(self.value_at(w[0]), other.value_at(w[0])))
            .collect();
        StepFn { breakpoints, values }
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        self.combine(other, |a, b| a + b)
    }

    /// `1_C f`.
    pub fn restrict(&self, c: &IntervalUnion) -> StepFn {
        let ends: Vec<f64> = c.intervals().iter().flat_map(|&(a, b)| [a, b]).collect();
        let mut g = self.refined(&ends);
        for (k, w) in g.breakpoints.windows(2).enumerate() {
            if !c.contains(0.5 * (w[0] + w[1])) {
                g.values[k] = 0.0;
            }
        }
        g
    }

    /// Merges adjacent cells with equal values.
    pub fn simplified(&self) -> StepFn {
        let mut breakpoints = vec![0.0];
        let mut values: Vec<f64> = Vec::new();
        for (_, b, v) in self.cells() {
            if values.last() == Some(&v) {
                *breakpoints.last_mut().unwrap() = b;
            } else {
                values.push(v);
                breakpoints.push(b);
            }
        }
        StepFn { breakpoints, values }
    }

    /// `∫_0^1 |f|^p` for a constant exponent.
    pub fn integral_pow(&self, p: f64) -> f64 {
        self.cells().map(|(a, b, v)| v.abs().powf(p) * (b - a)).sum()
    }
}

/// Sorted union of two breakpoint lists, restricted to `[0, 1]`.
pub(crate) fn merge_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a
        .iter()
        .chain(b)
        .copied()
        .filter(|t| (0.0..=1.0).contains(t))
        .chain([0.0, 1.0])
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Uniform-grid samples at cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    samples: Vec<f64>,
}

impl SampledFn {
    pub fn new(samples: Vec<f64>) -> Result<Self, NormError> {
        if samples.is_empty() {
            return Err(NormError::EmptyGrid);
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(NormError::NonFinite(*bad));
        }
        Ok(SampledFn { samples })
    }

    /// Samples `f` at the midpoints of `n` equal cells.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, NormError> {
        SampledFn::new((0..n).map(|k| f((k as f64 + 0.5) / n as f64)).collect())
    }

    pub fn from_step(g: &StepFn, n: usize) -> Result<Self, NormError> {
        SampledFn::from_fn(n, |t| g.value_at(t))
    }

    pub fn cells(&self) -> usize {
        self.samples.len()
    }

    pub fn h(&self) -> f64 {
        1.0 / self.samples.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn to_step(&self) -> StepFn {
        StepFn::uniform(self.samples.clone()).expect("non-empty finite samples")
    }
}
