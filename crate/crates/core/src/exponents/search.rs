//! Smallest Calkin-Wilf index with value in a closed interval.
//!
//! A node is reached from the root by a word over `{0, 1}` where `1` maps
//! `y -> y + 1` and `0` maps `y -> y / (1 + y)`. Read from the leaf back to the
//! root, the word is the subtractive Euclid trace of the value, so the set of
//! words whose values lie in `[lo, hi]` is governed by the continued-fraction
//! expansion shared by the interval ends. [`Trace`] precomputes that shared
//! expansion; [`Trace::feasible`] then decides in a few big-integer operations
//! whether a node with value `y` and `L` letters still to append has a
//! descendant exactly `L` levels further down whose value lies in the interval.
//!
//! Among indices of equal depth, heap order is lexicographic order of the
//! words, so the smallest qualifying index above a bound is found by a
//! lexicographic successor search on the bound's own level followed, if that
//! fails, by a greedy minimal word on the next feasible level.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{bits_to_heap, ExponentError};

/// Limit on the tree depth a search may reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_depth: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_depth: 1 << 16 }
    }
}

/// Run lengths beyond this are truncated; no search ever gets that deep.
const RUN_CAP: u64 = 1 << 62;

/// Non-negative rational, not necessarily reduced.
#[derive(Clone, Debug)]
pub(crate) struct Q {
    n: BigUint,
    d: BigUint,
}

impl Q {
    fn new(n: BigUint, d: BigUint) -> Self {
        Q { n, d }
    }

    pub(crate) fn from_f64(x: f64) -> Self {
        debug_assert!(x.is_finite() && x >= 0.0);
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        if mant == 0 {
            return Q::new(BigUint::zero(), BigUint::one());
        }
        if e >= 0 {
            return Q::new(BigUint::from(mant) << e as u64, BigUint::one());
        }
        let tz = (mant.trailing_zeros() as i64).min(-e);
        Q::new(BigUint::from(mant >> tz), BigUint::one() << (-e - tz) as u64)
    }

    pub(crate) fn add(&self, other: &Q) -> Q {
        Q::new(&self.n * &other.d + &other.n * &self.d, &self.d * &other.d)
    }

    fn le(&self, other: &Q) -> bool {
        &self.n * &other.d <= &other.n * &self.d
    }

    fn lt_one(&self) -> bool {
        self.n < self.d
    }

    fn gt_one(&self) -> bool {
        self.n > self.d
    }

    /// `y + 1`
    fn step_one(&self) -> Q {
        Q::new(&self.n + &self.d, self.d.clone())
    }

    /// `y / (1 + y)`
    fn step_zero(&self) -> Q {
        Q::new(self.n.clone(), &self.n + &self.d)
    }
}

fn clamp_u64(x: &BigUint) -> u64 {
    x.to_u64().map_or(RUN_CAP, |v| v.min(RUN_CAP))
}

fn ceil_div(n: &BigUint, d: &BigUint) -> BigUint {
    n.div_ceil(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunKind {
    /// Leaf-side letters `1`: the interval is shifted down by one per letter.
    Ones,
    /// Leaf-side letters `0`: the interval is mapped by `x -> x / (1 - x)`.
    Zeros,
}

#[derive(Debug, Clone)]
struct Run {
    kind: RunKind,
    start: u64,
    len: u64,
    lo: Q,
    hi: Q,
}

impl Run {
    /// Interval after `t` letters of this run have been peeled off.
    fn peeled(&self, t: u64) -> (Q, Q) {
        let t = BigUint::from(t);
        match self.kind {
            RunKind::Ones => (
                Q::new(&self.lo.n - &t * &self.lo.d, self.lo.d.clone()),
                Q::new(&self.hi.n - &t * &self.hi.d, self.hi.d.clone()),
            ),
            RunKind::Zeros => (
                Q::new(self.lo.n.clone(), &self.lo.d - &t * &self.lo.n),
                Q::new(self.hi.n.clone(), &self.hi.d - &t * &self.hi.n),
            ),
        }
    }

    /// Levels `start + t` at which the root itself is admissible.
    fn root_levels(&self) -> Option<(u64, u64)> {
        let (lo, hi) = (&self.lo, &self.hi);
        let (t_lo, t_hi) = match self.kind {
            RunKind::Ones => {
                // 1 in [lo - t, hi - t]  <=>  lo - 1 <= t <= hi - 1
                let a = ceil_div(&(&lo.n - &lo.d), &lo.d);
                let b = (&hi.n - &hi.d) / &hi.d;
                (clamp_u64(&a), clamp_u64(&b))
            }
            RunKind::Zeros => {
                // 1 in [lo / (1 - t lo), hi / (1 - t hi)]  <=>  1/hi - 1 <= t <= 1/lo - 1
                let a = ceil_div(&(&hi.d - &hi.n), &hi.n);
                let b = if lo.n.is_zero() {
                    RUN_CAP
                } else {
                    clamp_u64(&((&lo.d - &lo.n) / &lo.n))
                };
                (clamp_u64(&a), b)
            }
        };
        let t_hi = t_hi.min(self.len);
        (t_lo <= t_hi).then_some((self.start + t_lo, self.start + t_hi))
    }
}

/// Shared continued-fraction expansion of the interval ends.
#[derive(Debug, Clone)]
struct Trace {
    runs: Vec<Run>,
    /// Letters consumed before the interval straddles `1`; `None` if the trace
    /// was truncated by [`RUN_CAP`].
    straddle_start: Option<u64>,
    lo: Q,
    hi: Q,
}

impl Trace {
    fn new(lo: &Q, hi: &Q) -> Trace {
        let mut runs = Vec::new();
        let mut lo = lo.clone();
        let mut hi = hi.clone();
        let mut start = 0u64;
        loop {
            let kind = if lo.gt_one() {
                RunKind::Ones
            } else if hi.lt_one() {
                RunKind::Zeros
            } else {
                return Trace {
                    runs,
                    straddle_start: Some(start),
                    lo,
                    hi,
                };
            };
            let len = match kind {
                RunKind::Ones => (&lo.n - 1u32) / &lo.d,
                RunKind::Zeros => (&hi.d - 1u32) / &hi.n,
            };
            let len = clamp_u64(&len);
            let run = Run {
                kind,
                start,
                len,
                lo: lo.clone(),
                hi: hi.clone(),
            };
            if len >= RUN_CAP || start >= RUN_CAP - len {
                runs.push(run);
                return Trace {
                    runs,
                    straddle_start: None,
                    lo,
                    hi,
                };
            }
            (lo, hi) = run.peeled(len);
            runs.push(run);
            start += len;
        }
    }

    /// Whether some word of exactly `rem` letters maps `y` into the interval.
    fn feasible(&self, y: &Q, rem: u64) -> bool {
        for run in &self.runs {
            if rem <= run.start + run.len {
                let (lo, hi) = run.peeled(rem - run.start);
                return lo.le(y) && y.le(&hi);
            }
        }
        let Some(start) = self.straddle_start else {
            return false;
        };
        let l = rem - start;
        let (lo, hi) = (&self.lo, &self.hi);
        if l == 0 {
            return lo.le(y) && y.le(hi);
        }
        // last letter 1 with the rest zeros gives the smallest value above 1:
        // 1 + y / (1 + (l - 1) y)
        let lm1 = BigUint::from(l - 1);
        let smallest_above = Q::new(&y.d + &lm1 * &y.n + &y.n, &y.d + &lm1 * &y.n);
        if smallest_above.le(hi) {
            return true;
        }
        // last letter 0 with the rest ones gives the largest value below 1:
        // w / (1 + w) with w = y + l - 1, which is >= lo iff w >= lo / (1 - lo)
        if lo.lt_one() {
            let w = Q::new(&y.n + &lm1 * &y.d, y.d.clone());
            let bound = Q::new(lo.n.clone(), &lo.d - &lo.n);
            if bound.le(&w) {
                return true;
            }
        }
        false
    }

    /// Smallest level `>= from` at which the root has an admissible descendant.
    fn next_root_level(&self, from: u64) -> Option<u64> {
        for run in &self.runs {
            if let Some((a, b)) = run.root_levels() {
                if b >= from {
                    return Some(a.max(from));
                }
            }
        }
        let start = self.straddle_start?;
        let (lo, hi) = (&self.lo, &self.hi);
        if from <= start {
            return Some(start);
        }
        let mut threshold: Option<BigUint> = None;
        if hi.gt_one() {
            threshold = Some(ceil_div(&hi.d, &(&hi.n - &hi.d)));
        }
        if lo.lt_one() {
            let t0 = if lo.n.is_zero() {
                BigUint::zero()
            } else {
                ceil_div(&lo.n, &(&lo.d - &lo.n))
            };
            threshold = Some(threshold.map_or(t0.clone(), |t| t.min(t0)));
        }
        let threshold = clamp_u64(&threshold?).max(1);
        let level = start.checked_add(threshold)?;
        Some(level.max(from))
    }
}

fn value_along(bits: &[bool]) -> Vec<Q> {
    let mut ys = Vec::with_capacity(bits.len() + 1);
    let mut y = Q::new(BigUint::one(), BigUint::one());
    ys.push(y.clone());
    for &b in bits {
        y = if b { y.step_one() } else { y.step_zero() };
        ys.push(y.clone());
    }
    ys
}

/// Appends the lexicographically smallest `rem`-letter word taking `y` into the
/// interval. Requires `trace.feasible(y, rem)`.
fn complete_min(trace: &Trace, mut y: Q, rem: u64, bits: &mut Vec<bool>) -> Q {
    for left in (0..rem).rev() {
        let zero = y.step_zero();
        if trace.feasible(&zero, left) {
            bits.push(false);
            y = zero;
        } else {
            let one = y.step_one();
            debug_assert!(trace.feasible(&one, left));
            bits.push(true);
            y = one;
        }
    }
    y
}

fn reduce(q: Q) -> (BigUint, BigUint) {
    let g = q.n.gcd(&q.d);
    (q.n / &g, q.d / g)
}

/// Smallest filtered index `i > min_index` whose value lies in `[lo, hi]`
/// (`1 <= lo <= hi`), with that value in lowest terms.
pub(crate) fn smallest_index_in(
    lo: &Q,
    hi: &Q,
    min_index: &BigUint,
    budget: SearchBudget,
) -> Result<(BigUint, (BigUint, BigUint)), ExponentError> {
    let trace = Trace::new(lo, hi);
    let exceeded = ExponentError::BudgetExceeded {
        budget: budget.max_depth,
    };
    // every filtered index >= 2 has odd heap index; min 0 means no lower bound
    let mut first_level = 0u64;
    if !min_index.is_zero() {
        let heap = (min_index << 1u32) - 1u32;
        let depth = heap.bits() - 1;
        if depth > budget.max_depth {
            return Err(exceeded);
        }
        let bits: Vec<bool> = (0..depth).rev().map(|k| heap.bit(k)).collect();
        let ys = value_along(&bits);
        for k in (0..bits.len()).rev() {
            if bits[k] {
                continue;
            }
            let y = ys[k].step_one();
            let rem = depth - k as u64 - 1;
            if trace.feasible(&y, rem) {
                let mut word = bits[..k].to_vec();
                word.push(true);
                let y = complete_min(&trace, y, rem, &mut word);
                return Ok(finish(word, y));
            }
        }
        first_level = depth + 1;
    }
    let level = trace.next_root_level(first_level).ok_or(ExponentError::Exhausted)?;
    if level > budget.max_depth {
        return Err(exceeded);
    }
    let mut word = Vec::with_capacity(level as usize);
    let y = complete_min(&trace, Q::new(BigUint::one(), BigUint::one()), level, &mut word);
    Ok(finish(word, y))
}

fn finish(word: Vec<bool>, y: Q) -> (BigUint, (BigUint, BigUint)) {
    debug_assert!(word.is_empty() || *word.last().unwrap());
    let heap = bits_to_heap(word);
    ((heap + 1u32) >> 1u32, reduce(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::RationalEnum;
    use proptest::prelude::*;

    fn brute(r: &RationalEnum, lo: f64, hi: f64, min: u64, limit: u64) -> Option<u64> {
        let (lo, hi) = (Q::from_f64(lo), Q::from_f64(hi));
        (min + 1..=limit).find(|&i| {
            let q = r.enum_rational(i).unwrap();
            let v = Q::new(q.numer().clone(), q.denom().clone());
            lo.le(&v) && v.le(&hi)
        })
    }

    #[test]
    fn exact_float_conversion() {
        let q = Q::from_f64(1.5);
        assert_eq!((q.n.clone(), q.d.clone()), (3u32.into(), 2u32.into()));
        let q = Q::from_f64(0.1);
        assert!(q.d.bits() > 50);
        assert_eq!(Q::from_f64(0.0).n, BigUint::zero());
    }

    #[test]
    fn agrees_with_linear_scan_on_small_cases() {
        let r = RationalEnum::new();
        let limit = 1 << 17;
        let cases = [
            (1.0, 1.0, 0),
            (1.0, 1.0, 1),
            (2.0, 2.5, 0),
            (1.5, 1.51, 3),
            (1.5, 1.5, 3),
            (3.25, 3.3, 100),
            (1.0, 1.02, 7),
            (7.0, 7.125, 0),
            (1.2, 1.25, 5000),
            (2.0, 2.01, 17),
        ];
        for (lo, hi, min) in cases {
            let expected = brute(&r, lo, hi, min, limit);
            let got = r.find_index_in(lo, hi, &BigUint::from(min)).ok();
            if let Some(e) = expected {
                let (i, q) = got.expect("search finds an index");
                assert_eq!(i, BigUint::from(e), "[{lo}, {hi}] above {min}");
                assert_eq!(r.enum_rational(e).unwrap(), q);
            } else {
                match r.find_index_in(lo, hi, &BigUint::from(min)) {
                    Ok((i, _)) => assert!(i > BigUint::from(limit)),
                    Err(e) => assert_eq!(e, ExponentError::Exhausted),
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_linear_scan(
            lo in 1.0f64..6.0,
            width in 0.01f64..1.0,
            min in 0u64..3000,
        ) {
            let r = RationalEnum::new();
            let hi = lo + width;
            let got = r.find_index_in(lo, hi, &BigUint::from(min)).unwrap();
            match got.0.to_u64().filter(|&i| i < 1 << 14) {
                Some(i) => prop_assert_eq!(brute(&r, lo, hi, min, i), Some(i)),
                None => prop_assert_eq!(brute(&r, lo, hi, min, 1 << 14), None),
            }
            let v = got.1.to_f64();
            prop_assert!(v >= lo && v <= hi);
        }

        #[test]
        fn deep_results_are_in_range_and_above_bound(
            target in 1.0f64..50.0,
            delta in 1e-4f64..1e-2,
            min in 0u64..1_000_000,
        ) {
            let r = RationalEnum::new();
            let min = BigUint::from(min);
            let (i, q) = r.find_index_above(target, delta, &min).unwrap();
            prop_assert!(i > min);
            prop_assert_eq!(r.rational(&i).unwrap(), q.clone());
            let lo = Q::from_f64(target);
            let hi = lo.add(&Q::from_f64(delta));
            let v = Q::new(q.numer().clone(), q.denom().clone());
            prop_assert!(lo.le(&v) && v.le(&hi));
        }
    }

    #[test]
    fn chained_searches_are_strictly_increasing() {
        let r = RationalEnum::new();
        let mut last = BigUint::zero();
        for target in [2.0, 1.5, 3.0, 1.25, 2.0, 2.0, 1.0] {
            let (i, _) = r.find_index_above(target, 1e-3, &last).unwrap();
            assert!(i > last);
            last = i;
        }
    }
}
