//! Positions in `l^{r(.)}` whose preceding connectors approximate a ladder.
//!
//! A ladder with connectors `p_2, ..., p_j` is copied into `l^{r(.)}` by putting
//! coordinate `k` at a position `j_k` with `r(j_k - 1)` close to `p_k`; under
//! left nesting the zeros in between collapse. Connectors are taken at or
//! above their targets, so the placed norm never exceeds the ladder norm, and
//! for every pair of exponents `p <= r` we have
//! `a ⊞_p b <= 2^{1/p - 1/r} (a ⊞_r b)`, so the ratio of the two norms is at
//! most `2^{Σ (1/p_k - 1/r_k)}`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::exponents::{ExponentError, Rational, RationalEnum, SearchBudget};
use crate::seqspace::{check_exponent, fold, Nesting, SparseVector};

use super::EmbedError;

/// How close placed connectors must be to their targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementPolicy {
    /// Each connector rational in `[p, p + delta]`.
    Delta(f64),
    /// Keep `2^{Σ (1/p_k - 1/r_k)} <= 1 + tight` when the enumeration allows it
    /// within `max_depth` tree levels, widening individual connectors by
    /// `widen` up to an overall bound of `cap`.
    Ratio {
        cap: f64,
        tight: f64,
        widen: f64,
        max_depth: u64,
    },
}

impl PlacementPolicy {
    /// Ratio policy with overall cap `cap` and the default tight target.
    pub fn ratio(cap: f64) -> Self {
        PlacementPolicy::Ratio {
            cap,
            tight: 1e-12,
            widen: 10.0,
            max_depth: 1 << 13,
        }
    }
}

/// Where the coordinates of a ladder went.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Strictly increasing positions, one per ladder coordinate.
    pub positions: Vec<BigUint>,
    /// `r(j_k - 1)` for `k >= 2`.
    pub connectors: Vec<Rational>,
    pub connector_values: Vec<f64>,
    /// `Σ (1/p_k - 1/r_k)`; the placed norm is within a factor `2^{log2_bound}`.
    pub log2_bound: f64,
}

impl Placement {
    pub fn ratio_bound(&self) -> f64 {
        self.log2_bound.exp2()
    }

    /// Sparse vector carrying `values` at the placed positions.
    pub fn apply(&self, values: &[f64]) -> SparseVector {
        assert_eq!(values.len(), self.positions.len(), "one value per position");
        SparseVector::new(self.positions.iter().cloned().zip(values.iter().copied()).collect())
            .expect("positions are strictly increasing")
    }

    /// `l^{r(.)}` norm of `values` placed at the positions.
    pub fn norm(&self, values: &[f64]) -> f64 {
        fold(values, &self.connector_values, Nesting::Left)
    }
}

/// Places a ladder with the given connectors after position `start`.
pub fn place(
    connectors: &[f64],
    r: &RationalEnum,
    policy: PlacementPolicy,
    start: &BigUint,
) -> Result<Placement, EmbedError> {
    for &p in connectors {
        if !p.is_finite() {
            return Err(EmbedError::Unplaceable(p));
        }
        check_exponent(p)?;
    }
    let mut positions = vec![start + 1u32];
    let mut rationals = Vec::with_capacity(connectors.len());
    let mut values = Vec::with_capacity(connectors.len());
    let mut log2_bound = 0.0;
    // A width that failed for a target also fails at every later position.
    let mut widths: HashMap<u64, f64> = HashMap::new();
    for (k, &p) in connectors.iter().enumerate() {
        let min_index = positions.last().unwrap() - BigUint::one();
        let (index, q) = match policy {
            PlacementPolicy::Delta(delta) => r.find_index_above(p, delta, &min_index)?,
            PlacementPolicy::Ratio {
                cap,
                tight,
                widen,
                max_depth,
            } => {
                let m = connectors.len() as f64;
                let per = |excess: f64| excess.ln_1p() / std::f64::consts::LN_2 / m;
                let capped = per(cap - 1.0);
                let mut b = *widths.entry(p.to_bits()).or_insert(per(tight).min(capped));
                loop {
                    let hi = if p.recip() > b {
                        (p.recip() - b).recip().max(p)
                    } else {
                        p + 1.0
                    };
                    let budget = SearchBudget { max_depth };
                    match r.find_index_in_budget(p, hi, &min_index, budget) {
                        Ok(found) => {
                            widths.insert(p.to_bits(), b);
                            break found;
                        }
                        Err(ExponentError::BudgetExceeded { .. } | ExponentError::Exhausted) if b < capped => {
                            b = (b * widen).min(capped);
                        }
                        Err(e) => {
                            return Err(EmbedError::Placement {
                                connector: k + 2,
                                target: p,
                                source: e,
                            })
                        }
                    }
                }
            }
        };
        let v = q.to_f64();
        log2_bound += p.recip() - v.recip();
        positions.push(index + 1u32);
        rationals.push(q);
        values.push(v);
    }
    Ok(Placement {
        positions,
        connectors: rationals,
        connector_values: values,
        log2_bound,
    })
}
