//! Simple seminorms `|f|_N`: classical `L^{p_i}` norms over successive supports,
//! joined left to right by connectors `q_i`.

use thiserror::Error;

use crate::approx::{lusin_sets, IntervalUnion};
use crate::odenorm::{lp_norm, merge_breakpoints, NormError, StepFn, P_MAX};
use crate::registry::Registry;
use crate::seqspace::boxplus_unchecked;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeminormError {
    #[error("block {block}: exponent {value} is outside [1, {P_MAX}]")]
    Exponent { block: usize, value: f64 },
    #[error("block {0} does not lie to the right of block {prev}", prev = .0 - 1)]
    NotSuccessive(usize),
    #[error("block {0} needs a connector")]
    MissingConnector(usize),
    #[error("cuts must increase strictly from 0 to 1")]
    Cuts,
    #[error("derivative gap is singular at A = 0 for exponents ({p}, {q})")]
    Singular { p: f64, q: f64 },
    #[error(transparent)]
    Norm(#[from] NormError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub support: IntervalUnion,
    pub inner: f64,
    /// Joins this block to the blocks before it; `None` only for the first block.
    pub connector: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeminormSpec {
    blocks: Vec<Block>,
}

impl SeminormSpec {
    pub fn new(blocks: Vec<Block>) -> Result<Self, SeminormError> {
        for (i, b) in blocks.iter().enumerate() {
            for value in std::iter::once(b.inner).chain(b.connector) {
                if !(1.0..=P_MAX).contains(&value) {
                    return Err(SeminormError::Exponent { block: i, value });
                }
            }
            if i > 0 && b.connector.is_none() {
                return Err(SeminormError::MissingConnector(i));
            }
        }
        for (i, w) in blocks.windows(2).enumerate() {
            if let (Some(hi), Some(lo)) = (w[0].support.sup(), w[1].support.inf()) {
                if hi > lo {
                    return Err(SeminormError::NotSuccessive(i + 1));
                }
            }
        }
        Ok(SeminormSpec { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Union of the supports.
    pub fn support(&self) -> IntervalUnion {
        let all = self
            .blocks
            .iter()
            .flat_map(|b| b.support.intervals().iter().copied())
            .collect();
        IntervalUnion::new(all).expect("successive supports are disjoint")
    }
}

/// `(∫_S |f|^p)^{1/p}` over a finite union of intervals, scaled by the
/// largest `|f|` on `S` so high exponents do not overflow.
pub fn block_norm(f: &StepFn, support: &IntervalUnion, p: f64) -> f64 {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in support.intervals() {
        let grid = merge_breakpoints(f.breakpoints(), &[a, b]);
        let lo = grid.partition_point(|&t| t < a);
        let hi = grid.partition_point(|&t| t <= b);
        for w in grid[lo..hi].windows(2) {
            pieces.push((w[1] - w[0], f.value_at(0.5 * (w[0] + w[1])).abs()));
        }
    }
    let m = pieces.iter().fold(0.0, |m: f64, piece| m.max(piece.1));
    if m == 0.0 {
        return 0.0;
    }
    if pieces.iter().all(|piece| piece.1 == m) {
        let len: f64 = pieces.iter().map(|piece| piece.0).sum();
        return m * len.powf(p.recip());
    }
    let s: f64 = pieces.iter().map(|(len, v)| (v / m).powf(p) * len).sum();
    m * s.powf(p.recip())
}

pub fn simple_seminorm(f: &StepFn, spec: &SeminormSpec) -> f64 {
    let mut acc = 0.0;
    for b in &spec.blocks {
        let v = block_norm(f, &b.support, b.inner);
        acc = match b.connector {
            Some(q) => boxplus_unchecked(acc, v, q),
            None => v,
        };
    }
    acc
}

/// `N'`: every connector replaced by its block's inner exponent.
pub fn variant_nprime(spec: &SeminormSpec) -> SeminormSpec {
    let blocks = spec
        .blocks
        .iter()
        .map(|b| Block {
            connector: b.connector.map(|_| b.inner),
            ..b.clone()
        })
        .collect();
    SeminormSpec { blocks }
}

/// Blocks `C ∩ [a_i, a_{i+1}]` of positive measure with inner exponent the
/// infimum and connector the supremum of `p` there.
pub fn bracket_spec(p: &StepFn, c: &IntervalUnion, cuts: &[f64]) -> Result<SeminormSpec, SeminormError> {
    let valid =
        cuts.len() >= 2 && cuts[0] == 0.0 && *cuts.last().unwrap() == 1.0 && cuts.windows(2).all(|w| w[0] < w[1]);
    if !valid {
        return Err(SeminormError::Cuts);
    }
    let mut blocks: Vec<Block> = Vec::new();
    for w in cuts.windows(2) {
        let support = c.clip(w[0], w[1]);
        if support.measure() <= 0.0 {
            continue;
        }
        let (inf, sup) = range_on(p, &support);
        blocks.push(Block {
            support,
            inner: inf,
            connector: (!blocks.is_empty()).then_some(sup),
        });
    }
    SeminormSpec::new(blocks)
}

/// Essential infimum and supremum of a step function on a set of positive measure.
pub(crate) fn range_on(p: &StepFn, support: &IntervalUnion) -> (f64, f64) {
    let mut inf = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    for (a, b, v) in p.cells() {
        if support.clip(a, b).measure() > 0.0 {
            inf = inf.min(v);
            sup = sup.max(v);
        }
    }
    (inf, sup)
}

/// `| x^q A^{1-q} / q - x^p A^{1-p} / p |`: how far the initial rate of
/// `A ⊞_q (t x^p)^{1/p}` with the connector `q` drifts from the exact rate
/// with `q = p`.
pub fn bracket_gap(a: f64, x: f64, p: f64, q: f64) -> Result<f64, SeminormError> {
    if x == 0.0 || p == q {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Err(SeminormError::Singular { p, q });
    }
    let rate = |e: f64| x.powf(e) * a.powf(1.0 - e) / e;
    Ok((rate(q) - rate(p)).abs())
}

/// How to choose the cut points of a bracket at refinement level `k`.
pub trait CutStrategy: Send + Sync {
    fn cuts(&self, p: &StepFn, k: u32) -> Vec<f64>;
}

/// Breakpoints of `p` together with the dyadic grid `2^{-k}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BreakpointsDyadic;

impl CutStrategy for BreakpointsDyadic {
    fn cuts(&self, p: &StepFn, k: u32) -> Vec<f64> {
        merge_breakpoints(&dyadic(k), p.breakpoints())
    }
}

/// The dyadic grid `2^{-k}` alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dyadic;

impl CutStrategy for Dyadic {
    fn cuts(&self, _p: &StepFn, k: u32) -> Vec<f64> {
        dyadic(k)
    }
}

fn dyadic(k: u32) -> Vec<f64> {
    let steps = 1u64 << k;
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

/// `"breakpoints-dyadic"` (default) and `"dyadic"`.
pub fn cut_registry() -> Registry<dyn CutStrategy> {
    Registry::new("cut strategy")
        .register(
            "breakpoints-dyadic",
            Box::new(BreakpointsDyadic) as Box<dyn CutStrategy>,
        )
        .register("dyadic", Box::new(Dyadic))
}

/// One row of a seminorm convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormStage {
    pub stage: u32,
    pub n_value: f64,
    pub nprime_value: f64,
}

/// Stage `n` uses `C = C_n` and the strategy's cuts at level `min(n, k_max)`.
pub fn default_schedule(p: &StepFn, stages: u32, k_max: u32, cuts: &dyn CutStrategy) -> Vec<(IntervalUnion, Vec<f64>)> {
    (1..=stages)
        .map(|n| (lusin_sets(p, n), cuts.cuts(p, n.min(k_max))))
        .collect()
}

/// `|f|_{N_n}` and `|f|_{N'_n}` along a schedule of `(C_n, cuts_n)`.
pub fn seminorm_converge(
    f: &StepFn,
    p: &StepFn,
    schedule: &[(IntervalUnion, Vec<f64>)],
) -> Result<Vec<SeminormStage>, SeminormError> {
    schedule
        .iter()
        .enumerate()
        .map(|(i, (c, cuts))| {
            let spec = bracket_spec(p, c, cuts)?;
            Ok(SeminormStage {
                stage: i as u32 + 1,
                n_value: simple_seminorm(f, &spec),
                nprime_value: simple_seminorm(f, &variant_nprime(&spec)),
            })
        })
        .collect()
}

/// Relative distance of the terminal `|f|_N` from `‖f‖`.
pub fn terminal_gap(f: &StepFn, p: &StepFn, stages: &[SeminormStage]) -> Result<f64, SeminormError> {
    let target = lp_norm(f, p)?;
    let last = stages.last().map_or(0.0, |s| s.n_value);
    Ok(if target == 0.0 {
        last
    } else {
        (target - last).abs() / target
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> IntervalUnion {
        IntervalUnion::new(vec![(a, b)]).unwrap()
    }

    fn block(a: f64, b: f64, inner: f64, connector: Option<f64>) -> Block {
        Block {
            support: iv(a, b),
            inner,
            connector,
        }
    }

    fn step(b: &[f64], v: &[f64]) -> StepFn {
        StepFn::new(b.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn seminorm_examples() {
        let spec = SeminormSpec::new(vec![block(0.0, 1.0, 2.0, None)]).unwrap();
        assert_eq!(simple_seminorm(&StepFn::constant(1.0), &spec), 1.0);

        let spec = SeminormSpec::new(vec![block(0.0, 0.25, 1.0, None), block(0.25, 1.0, 2.0, Some(2.0))]).unwrap();
        let f = step(&[0.0, 0.25, 1.0], &[2.0, 3.0]);
        // oracle: 0.5 ⊞_2 3 sqrt(0.75)
        let oracle = (0.25f64 + 9.0 * 0.75).sqrt();
        assert_relative_eq!(simple_seminorm(&f, &spec), oracle, max_relative = 1e-15);
        assert_relative_eq!(oracle, 7f64.sqrt(), max_relative = 1e-15);

        let spec = SeminormSpec::new(vec![block(0.0, 0.5, 2.0, None), block(0.5, 1.0, 2.0, Some(2.0))]).unwrap();
        assert_relative_eq!(
            simple_seminorm(&StepFn::constant(1.0), &spec),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            SeminormSpec::new(vec![block(0.5, 1.0, 2.0, None), block(0.0, 0.5, 2.0, Some(2.0))]),
            Err(SeminormError::NotSuccessive(1))
        ));
        assert!(matches!(
            SeminormSpec::new(vec![block(0.0, 1.0, 0.5, None)]),
            Err(SeminormError::Exponent { .. })
        ));
        assert!(matches!(
            SeminormSpec::new(vec![block(0.0, 0.5, 2.0, None), block(0.5, 1.0, 2.0, None)]),
            Err(SeminormError::MissingConnector(1))
        ));
    }

    #[test]
    fn nprime_examples() {
        let spec = SeminormSpec::new(vec![block(0.0, 0.5, 1.4, None), block(0.5, 1.0, 1.4, Some(1.6))]).unwrap();
        let v = variant_nprime(&spec);
        assert_eq!(v.blocks()[1].connector, Some(1.4));
        assert_eq!(variant_nprime(&v), v);
        let spec = SeminormSpec::new(vec![block(0.0, 0.5, 1.0, None), block(0.5, 1.0, 2.0, Some(3.0))]).unwrap();
        assert_eq!(variant_nprime(&spec).blocks()[1].connector, Some(2.0));
    }

    #[test]
    fn bracket_examples() {
        let full = IntervalUnion::full();
        let spec = bracket_spec(&StepFn::constant(2.0), &full, &[0.0, 0.3, 1.0]).unwrap();
        assert!(spec
            .blocks()
            .iter()
            .all(|b| b.inner == 2.0 && b.connector.unwrap_or(2.0) == 2.0));

        let p = step(&[0.0, 0.5, 1.0], &[1.0, 3.0]);
        let spec = bracket_spec(&p, &full, &[0.0, 0.5, 1.0]).unwrap();
        let pairs: Vec<(f64, Option<f64>)> = spec.blocks().iter().map(|b| (b.inner, b.connector)).collect();
        assert_eq!(pairs, vec![(1.0, None), (3.0, Some(3.0))]);

        let spec = bracket_spec(&p, &full, &[0.0, 0.25, 1.0]).unwrap();
        assert_eq!((spec.blocks()[1].inner, spec.blocks()[1].connector), (1.0, Some(3.0)));

        let spec = bracket_spec(&p, &IntervalUnion::empty(), &[0.0, 1.0]).unwrap();
        assert!(spec.is_empty());
        assert!(bracket_spec(&p, &full, &[0.0, 0.7, 0.2, 1.0]).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(bracket_gap(0.7, 0.3, 2.0, 2.0).unwrap(), 0.0);
        assert_eq!(bracket_gap(0.7, 0.0, 1.0, 3.0).unwrap(), 0.0);
        let g = bracket_gap(1.0, 1.0, 2.0, 2.1).unwrap();
        assert_relative_eq!(g, 1.0 / 2.0 - 1.0 / 2.1, max_relative = 1e-14);
        assert!((g - 0.0238).abs() < 5e-5);
        assert!(matches!(
            bracket_gap(0.0, 1.0, 2.0, 3.0),
            Err(SeminormError::Singular { .. })
        ));
        assert_eq!(bracket_gap(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gap_vanishes_uniformly_as_brackets_tighten() {
        let grid: Vec<f64> = (1..=50).map(|k| k as f64 / 50.0).collect();
        let mut last = f64::INFINITY;
        for width in [0.5, 0.1, 0.01, 1e-3, 1e-4] {
            let mut worst: f64 = 0.0;
            for &a in &grid {
                for &x in &grid {
                    worst = worst.max(bracket_gap(a, x, 1.5, 1.5 + width).unwrap());
                }
            }
            assert!(worst < last);
            last = worst;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn converge_examples() {
        let f = step(&[0.0, 0.3, 1.0], &[2.0, -1.0]);
        let p = StepFn::constant(2.5);
        let schedule = default_schedule(&p, 6, 6, &BreakpointsDyadic);
        let target = lp_norm(&f, &p).unwrap();
        for s in seminorm_converge(&f, &p, &schedule).unwrap() {
            assert_relative_eq!(s.n_value, target, max_relative = 1e-14);
        }

        let p = step(&[0.0, 0.5, 1.0], &[1.0, 2.0]);
        let one = StepFn::constant(1.0);
        let rows = seminorm_converge(&one, &p, &[(IntervalUnion::full(), vec![0.0, 0.5, 1.0])]).unwrap();
        assert_relative_eq!(rows[0].n_value, 0.75f64.sqrt(), max_relative = 1e-15);

        let stair = StepFn::uniform((0..64).map(|k| 1.0 + (k as f64 + 0.5) / 64.0).collect()).unwrap();
        let rows = seminorm_converge(&one, &stair, &default_schedule(&stair, 10, 10, &BreakpointsDyadic)).unwrap();
        assert!(terminal_gap(&one, &stair, &rows).unwrap() <= 1e-3);
    }

    #[test]
    fn coarse_dyadic_brackets_can_exceed_the_norm() {
        // a single block spanning the jump of p uses the inner exponent 1
        let p = step(&[0.0, 0.5, 1.0], &[1.0, 2.0]);
        let spec = bracket_spec(&p, &IntervalUnion::full(), &Dyadic.cuts(&p, 0)).unwrap();
        let one = StepFn::constant(1.0);
        assert!(simple_seminorm(&one, &spec) > lp_norm(&one, &p).unwrap());
    }

    fn step_fn(lo: f64, hi: f64) -> impl Strategy<Value = StepFn> {
        prop::collection::btree_map(1u32..100, lo..hi, 0..10).prop_flat_map(move |cuts| {
            let mut b = vec![0.0];
            b.extend(cuts.keys().map(|&k| k as f64 / 100.0));
            b.push(1.0);
            let n = b.len() - 1;
            prop::collection::vec(lo..hi, n).prop_map(move |v| StepFn::new(b.clone(), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn brackets_dominated_and_ordered(f in step_fn(-4.0, 4.0), p in step_fn(1.0, 5.0), stages in 1u32..9) {
            let norm = lp_norm(&f, &p).unwrap();
            let registry = cut_registry();
            for (c, cuts) in default_schedule(&p, stages, stages, registry.default_strategy().unwrap()) {
                let spec = bracket_spec(&p, &c, &cuts).unwrap();
                prop_assert!(spec.blocks().iter().all(|b| b.connector.unwrap_or(b.inner) >= b.inner));
                let n = simple_seminorm(&f, &spec);
                prop_assert!(n <= norm * (1.0 + 1e-12));
                prop_assert!(n <= simple_seminorm(&f, &variant_nprime(&spec)) * (1.0 + 1e-12));
            }
            for (c, cuts) in default_schedule(&p, stages, stages, &Dyadic) {
                let spec = bracket_spec(&p, &c, &cuts).unwrap();
                prop_assert!(simple_seminorm(&f, &spec) <= simple_seminorm(&f, &variant_nprime(&spec)) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn splitting_constant_blocks_is_isometric(f in step_fn(-4.0, 4.0), q in 1.0f64..6.0, split in 1u32..99) {
            let s = split as f64 / 100.0;
            let whole = SeminormSpec::new(vec![block(0.0, 1.0, q, None)]).unwrap();
            let halves = SeminormSpec::new(vec![block(0.0, s, q, None), block(s, 1.0, q, Some(q))]).unwrap();
            let a = simple_seminorm(&f, &whole);
            prop_assert!((a - simple_seminorm(&f, &halves)).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
