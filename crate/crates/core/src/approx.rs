//! Lusin sets, truncations, finite partitions and conditional expectations
//! for step data on `[0, 1]`.

use thiserror::Error;

use crate::odenorm::{merge_breakpoints, StepFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("interval [{0}, {1}] is empty or leaves [0, 1]")]
    Interval(f64, f64),
    #[error("intervals must be sorted and disjoint")]
    Overlap,
    #[error("truncation slope {0} must be positive and finite")]
    Slope(f64),
}

/// Finite union of disjoint closed intervals in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    /// Intervals must be sorted and pairwise disjoint; touching ends are merged.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, ApproxError> {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(ApproxError::Interval(a, b));
            }
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                Some(last) if last.1 > a => return Err(ApproxError::Overlap),
                _ => out.push((a, b)),
            }
        }
        Ok(IntervalUnion { intervals: out })
    }

    pub fn full() -> Self {
        IntervalUnion {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv.1 < t);
        self.intervals.get(k).is_some_and(|iv| iv.0 <= t)
    }

    /// `self ∩ [a, b]`, dropping null pieces.
    pub fn clip(&self, a: f64, b: f64) -> IntervalUnion {
        let intervals = self
            .intervals
            .iter()
            .map(|&(x, y)| (x.max(a), y.min(b)))
            .filter(|(x, y)| x < y)
            .collect();
        IntervalUnion { intervals }
    }

    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.intervals
            .iter()
            .all(|&(a, b)| other.intervals.iter().any(|&(x, y)| x <= a && b <= y))
    }

    pub fn inf(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn sup(&self) -> Option<f64> {
        self.intervals.last().map(|iv| iv.1)
    }
}

/// `C_n`: `[0, 1]` minus the open `2^{-n-2} / max(J, 1)` neighbourhoods of the
/// `J` jump points of `p`. Has measure at least `1 - 2^{-n}`, increases with
/// `n`, and `p` is constant on each of its components.
pub fn lusin_sets(p: &StepFn, n: u32) -> IntervalUnion {
    let jumps = p.jumps();
    let radius = 2f64.powi(-(n as i32) - 2) / jumps.len().max(1) as f64;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut start = 0.0;
    for x in jumps {
        let (lo, hi) = (x - radius, x + radius);
        if lo > start {
            intervals.push((start, lo));
        }
        start = start.max(hi);
    }
    if start < 1.0 {
        intervals.push((start, 1.0));
    }
    IntervalUnion { intervals }
}

/// `α_n = slope · n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSchedule {
    slope: f64,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        TruncationSchedule { slope: 1.0 }
    }
}

impl TruncationSchedule {
    pub fn new(slope: f64) -> Result<Self, ApproxError> {
        if slope > 0.0 && slope.is_finite() {
            Ok(TruncationSchedule { slope })
        } else {
            Err(ApproxError::Slope(slope))
        }
    }

    pub fn alpha(&self, n: u32) -> f64 {
        self.slope * n as f64
    }
}

/// `T(f) = min(α, max(-α, f))`.
pub fn truncate(f: &StepFn, alpha: f64) -> StepFn {
    f.map(|v| v.clamp(-alpha, alpha))
}

/// Partition of `[0, 1]` into atoms `[c_i, c_{i+1})`, the last one closed.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePartition {
    cuts: Vec<f64>,
    generation: u32,
}

impl FinitePartition {
    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cuts.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_diameter(&self) -> f64 {
        self.atoms().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn refines(&self, coarser: &FinitePartition) -> bool {
        coarser
            .cuts
            .iter()
            .all(|c| self.cuts.binary_search_by(|x| x.total_cmp(c)).is_ok())
    }

    fn atom_of(&self, t: f64) -> usize {
        self.cuts.partition_point(|&c| c <= t).clamp(1, self.len()) - 1
    }
}

/// `F_k`: cuts at every seed endpoint and at all multiples of `2^{-k}`.
pub fn refine_partition(seeds: &[IntervalUnion], k: u32) -> FinitePartition {
    let steps = 1u64 << k;
    let dyadic: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let ends: Vec<f64> = seeds
        .iter()
        .flat_map(|s| s.intervals().iter().flat_map(|&(a, b)| [a, b]))
        .collect();
    FinitePartition {
        cuts: merge_breakpoints(&dyadic, &ends),
        generation: k,
    }
}

/// Average of `f` over one `Δ ∩ C` of positive measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomAverage {
    /// The atom `Δ` of the partition.
    pub atom: (f64, f64),
    /// `m(Δ ∩ C)`.
    pub measure: f64,
    pub value: f64,
}

/// Averages of `f` over the sets `Δ ∩ C` of positive measure, in order. An
/// average over a set where `f` is constant is that constant exactly.
pub fn atom_averages(f: &StepFn, c: &IntervalUnion, partition: &FinitePartition) -> Vec<AtomAverage> {
    let c_ends: Vec<f64> = c.intervals().iter().flat_map(|&(a, b)| [a, b]).collect();
    let grid = merge_breakpoints(&merge_breakpoints(partition.cuts(), f.breakpoints()), &c_ends);
    let mut out: Vec<AtomAverage> = Vec::new();
    let mut current: Option<(usize, f64, f64, Option<f64>)> = None;
    let flush = |cur: Option<(usize, f64, f64, Option<f64>)>, out: &mut Vec<AtomAverage>| {
        if let Some((atom, measure, integral, uniform)) = cur {
            if measure > 0.0 {
                out.push(AtomAverage {
                    atom: (partition.cuts[atom], partition.cuts[atom + 1]),
                    measure,
                    value: uniform.unwrap_or(integral / measure),
                });
            }
        }
    };
    for w in grid.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if !c.contains(mid) {
            continue;
        }
        let atom = partition.atom_of(mid);
        let (len, v) = (w[1] - w[0], f.value_at(mid));
        match &mut current {
            Some((a, measure, integral, uniform)) if *a == atom => {
                *measure += len;
                *integral += v * len;
                if *uniform != Some(v) {
                    *uniform = None;
                }
            }
            _ => {
                flush(current.take(), &mut out);
                current = Some((atom, len, v * len, Some(v)));
            }
        }
    }
    flush(current, &mut out);
    out
}

/// `E(f | C, F)`: the average of `f` over `Δ ∩ C` on each such set, zero off `C`
/// and on atoms meeting `C` in a null set.
pub fn cond_expect(f: &StepFn, c: &IntervalUnion, partition: &FinitePartition) -> StepFn {
    let averages = atom_averages(f, c, partition);
    let c_ends: Vec<f64> = c.intervals().iter().flat_map(|&(a, b)| [a, b]).collect();
    let grid = merge_breakpoints(partition.cuts(), &c_ends);
    let values = grid
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            if !c.contains(mid) {
                return 0.0;
            }
            let atom = partition.atom_of(mid);
            let start = partition.cuts[atom];
            averages.iter().find(|av| av.atom.0 == start).map_or(0.0, |av| av.value)
        })
        .collect();
    StepFn::new(grid, values).expect("grid is a valid breakpoint list")
}

/// `‖E(f | C, F) - 1_C f‖` in `L^q` of Lebesgue measure restricted to `support`.
pub fn martingale_gap(
    f: &StepFn,
    c: &IntervalUnion,
    partition: &FinitePartition,
    support: &IntervalUnion,
    q: f64,
) -> f64 {
    let e = cond_expect(f, c, partition);
    let diff = e.combine(&f.restrict(c), |a, b| a - b).restrict(support);
    diff.integral_pow(q).powf(q.recip())
}
