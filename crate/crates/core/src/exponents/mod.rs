//! Exponent data for the universal sequence space.
//!
//! The connector exponents of `l^{r(.)}` are the rationals `q >= 1` listed by a
//! fixed bijection `r: N -> Q ∩ [1, inf)`. We use the Calkin-Wilf traversal with
//! the values below one dropped. In heap numbering the Calkin-Wilf node `h`
//! has children `2h` (value `v / (1 + v)`, always `< 1`) and `2h + 1` (value
//! `v + 1`, always `> 1`), so the retained nodes are exactly the root and the
//! odd heap indices: `r(i)` is the Calkin-Wilf value at heap index `2i - 1`.
//!
//! Indices quickly become astronomically large (a rational just above `2`
//! within `1e-4` sits roughly ten thousand levels down the tree), so indices
//! are [`BigUint`]s and searches work level by level on the tree instead of
//! walking the sequence.

mod search;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

pub use search::SearchBudget;

/// Longest memoized prefix of the enumeration.
const MEMO_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("enumeration indices start at 1")]
    ZeroIndex,
    #[error("target {0} must be a finite real >= 1")]
    InvalidTarget(f64),
    #[error("delta {0} must be finite and positive")]
    InvalidDelta(f64),
    #[error("bracket [{lo}, {hi}] is empty or leaves [1, inf)")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("{num}/{den} is not a rational >= 1")]
    NotAboveOne { num: BigUint, den: BigUint },
    #[error("no enumerated rational in the bracket lies beyond the given index")]
    Exhausted,
    #[error("search exceeded the depth budget of {budget} tree levels")]
    BudgetExceeded { budget: u64 },
}

/// An exact rational `num / den >= 1` in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigUint,
    den: BigUint,
}

impl Rational {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self, ExponentError> {
        if den.is_zero() || num < den {
            return Err(ExponentError::NotAboveOne { num, den });
        }
        let g = num.gcd(&den);
        Ok(Rational {
            num: num / &g,
            den: den / g,
        })
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self, ExponentError> {
        Rational::new(BigUint::from(num), BigUint::from(den))
    }

    /// Caller guarantees lowest terms and `num >= den > 0`.
    pub(crate) fn from_parts_unchecked(num: BigUint, den: BigUint) -> Self {
        debug_assert!(num >= den && !den.is_zero());
        Rational { num, den }
    }

    pub fn one() -> Self {
        Rational {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    pub fn numer(&self) -> &BigUint {
        &self.num
    }

    pub fn denom(&self) -> &BigUint {
        &self.den
    }

    /// Nearest-below-or-equal f64, monotone in the rational value; exact when the
    /// value is representable.
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

/// `num / den` as f64. The quotient is truncated to 64 significant bits before
/// the final rounding, which keeps the map monotone and exact on dyadic values.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (num.to_u64(), den.to_u64()) {
        if n < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    // scale so the integer quotient carries 64..65 significant bits
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let q = q.to_u128().expect("scaled quotient fits in 128 bits") as f64;
    q * 2f64.powi(-shift as i32)
}

/// Calkin-Wilf value at heap index `h >= 1`, as `(num, den)`.
fn heap_value(h: &BigUint) -> (BigUint, BigUint) {
    let mut a = BigUint::one();
    let mut b = BigUint::one();
    let top = h.bits();
    for k in (0..top.saturating_sub(1)).rev() {
        if h.bit(k) {
            a += &b;
        } else {
            b += &a;
        }
    }
    (a, b)
}

/// The enumeration `r(.)` with a memoized prefix and a cache of connector values
/// for the large indices produced by placements.
#[derive(Debug)]
pub struct RationalEnum {
    prefix: RwLock<Vec<Rational>>,
    connectors: RwLock<HashMap<BigUint, f64>>,
    budget: SearchBudget,
}

impl Default for RationalEnum {
    fn default() -> Self {
        RationalEnum::new()
    }
}

impl RationalEnum {
    pub fn new() -> Self {
        RationalEnum::with_budget(SearchBudget::default())
    }

    pub fn with_budget(budget: SearchBudget) -> Self {
        RationalEnum {
            prefix: RwLock::new(vec![Rational::one()]),
            connectors: RwLock::new(HashMap::new()),
            budget,
        }
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }

    /// Name of the enumeration scheme; certificates record it because index
    /// placements are scheme dependent.
    pub fn scheme(&self) -> &'static str {
        "calkin-wilf-filtered"
    }

    /// `r(index)` for a machine-sized index.
    pub fn enum_rational(&self, index: u64) -> Result<Rational, ExponentError> {
        if index == 0 {
            return Err(ExponentError::ZeroIndex);
        }
        if index <= MEMO_LIMIT {
            self.extend_prefix(index as usize);
            let prefix = self.prefix.read().unwrap();
            return Ok(prefix[index as usize - 1].clone());
        }
        self.rational(&BigUint::from(index))
    }

    /// `r(index)` for an arbitrary index.
    pub fn rational(&self, index: &BigUint) -> Result<Rational, ExponentError> {
        if index.is_zero() {
            return Err(ExponentError::ZeroIndex);
        }
        if let Some(i) = index.to_u64() {
            if i <= MEMO_LIMIT {
                return self.enum_rational(i);
            }
        }
        let heap = (index << 1u32) - 1u32;
        let (a, b) = heap_value(&heap);
        Ok(Rational::from_parts_unchecked(a, b))
    }

    /// `r(index)` as f64, cached for reuse by norm evaluations.
    pub fn connector(&self, index: &BigUint) -> Result<f64, ExponentError> {
        if let Some(i) = index.to_u64() {
            if i <= MEMO_LIMIT {
                return Ok(self.enum_rational(i)?.to_f64());
            }
        }
        if let Some(v) = self.connectors.read().unwrap().get(index) {
            return Ok(*v);
        }
        let v = self.rational(index)?.to_f64();
        self.connectors.write().unwrap().insert(index.clone(), v);
        Ok(v)
    }

    /// Inverse of the enumeration: the index `i` with `r(i) = q`.
    pub fn index_of(&self, q: &Rational) -> BigUint {
        // walk to the root, collecting the heap path bits from the bottom up
        let mut a = q.num.clone();
        let mut b = q.den.clone();
        let mut bits: Vec<bool> = Vec::new();
        while a != b {
            if a > b {
                let (steps, rem) = (&a - BigUint::one()).div_rem(&b);
                let steps = steps.to_u64().expect("run length fits in u64");
                bits.extend(std::iter::repeat_n(true, steps as usize));
                a = rem + BigUint::one();
            } else {
                let (steps, rem) = (&b - BigUint::one()).div_rem(&a);
                let steps = steps.to_u64().expect("run length fits in u64");
                bits.extend(std::iter::repeat_n(false, steps as usize));
                b = rem + BigUint::one();
            }
        }
        let heap = bits_to_heap(bits.iter().rev().copied());
        (heap + 1u32) >> 1u32
    }

    /// First `count` values `r(1), ..., r(count)`.
    pub fn prefix(&self, count: usize) -> Vec<Rational> {
        if count == 0 {
            return Vec::new();
        }
        if count as u64 <= MEMO_LIMIT {
            self.extend_prefix(count);
            return self.prefix.read().unwrap()[..count].to_vec();
        }
        (1..=count as u64)
            .map(|i| self.enum_rational(i).expect("positive index"))
            .collect()
    }

    /// Smallest index `i > min_index` with `r(i)` in `[target, target + delta]`.
    pub fn find_index_above(
        &self,
        target: f64,
        delta: f64,
        min_index: &BigUint,
    ) -> Result<(BigUint, Rational), ExponentError> {
        if !(target.is_finite() && target >= 1.0) {
            return Err(ExponentError::InvalidTarget(target));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(ExponentError::InvalidDelta(delta));
        }
        let lo = search::Q::from_f64(target);
        let hi = lo.add(&search::Q::from_f64(delta));
        self.search(lo, hi, min_index, self.budget)
    }

    /// Smallest index `i > min_index` with `lo <= r(i) <= hi`.
    pub fn find_index_in(&self, lo: f64, hi: f64, min_index: &BigUint) -> Result<(BigUint, Rational), ExponentError> {
        self.find_index_in_budget(lo, hi, min_index, self.budget)
    }

    /// [`find_index_in`](Self::find_index_in) with an explicit depth budget.
    pub fn find_index_in_budget(
        &self,
        lo: f64,
        hi: f64,
        min_index: &BigUint,
        budget: SearchBudget,
    ) -> Result<(BigUint, Rational), ExponentError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && lo <= hi) {
            return Err(ExponentError::InvalidBracket { lo, hi });
        }
        self.search(search::Q::from_f64(lo), search::Q::from_f64(hi), min_index, budget)
    }

    fn search(
        &self,
        lo: search::Q,
        hi: search::Q,
        min_index: &BigUint,
        budget: SearchBudget,
    ) -> Result<(BigUint, Rational), ExponentError> {
        let (index, (a, b)) = search::smallest_index_in(&lo, &hi, min_index, budget)?;
        let q = Rational::from_parts_unchecked(a, b);
        if index.to_u64().is_none_or(|i| i > MEMO_LIMIT) {
            self.connectors.write().unwrap().insert(index.clone(), q.to_f64());
        }
        Ok((index, q))
    }

    fn extend_prefix(&self, len: usize) {
        if self.prefix.read().unwrap().len() >= len {
            return;
        }
        let mut prefix = self.prefix.write().unwrap();
        // Newman's successor on the unfiltered sequence, starting from the last kept value
        let last = prefix.last().expect("prefix holds r(1)");
        let mut a = last.num.to_u64().expect("memoized values are small");
        let mut b = last.den.to_u64().expect("memoized values are small");
        while prefix.len() < len {
            let q = a / b;
            let next_den = 2 * q * b + b - a;
            a = b;
            b = next_den;
            if a >= b {
                prefix.push(Rational::from_parts_unchecked(a.into(), b.into()));
            }
        }
    }
}

/// Heap index with the given path bits below the root.
pub(crate) fn bits_to_heap(bits: impl IntoIterator<Item = bool>) -> BigUint {
    let bits: Vec<bool> = bits.into_iter().collect();
    let mut h = BigUint::one() << bits.len();
    for (k, bit) in bits.iter().enumerate() {
        if *bit {
            h.set_bit((bits.len() - 1 - k) as u64, true);
        }
    }
    h
}
