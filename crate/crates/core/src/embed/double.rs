//! Leading blocks of matrices in `l^{q(.)}(l^{s(.)})` copied into
//! `l^{r(.)}(l^{r(.)})`.
//!
//! Connectors are taken at or below their targets, so the copy never has
//! smaller norm. If every connector of a fold loses at most `b` in `1/q`, the
//! fold grows by at most `2^{(k-1) b}`; rows and the outer fold each get half
//! of `log2((k+1)/k)`.

use num_bigint::BigUint;
use num_traits::One;

use crate::exponents::{Rational, RationalEnum};
use crate::seqspace::{check_exponent, double_norm, SparseVector, VarMatrix};

use super::EmbedError;

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleEmbedding {
    pub k: usize,
    /// The `k x k` leading block.
    pub block: VarMatrix,
    pub row_positions: Vec<BigUint>,
    pub col_positions: Vec<BigUint>,
    pub row_connectors: Vec<Rational>,
    pub col_connectors: Vec<Rational>,
    /// Norm of the block with the given connectors.
    pub original: f64,
    /// Norm of the copy in `l^{r(.)}(l^{r(.)})`.
    pub embedded: f64,
    /// `embedded / original`, 1 for the zero block.
    pub ratio: f64,
    /// Upper bound on `ratio` from the placed connectors.
    pub bound: f64,
}

impl DoubleEmbedding {
    /// Nonzero rows of the copy, each a sparse vector over column positions.
    pub fn rows(&self) -> Vec<(BigUint, SparseVector)> {
        self.block
            .rows
            .iter()
            .zip(&self.row_positions)
            .map(|(row, pos)| {
                let entries = self.col_positions.iter().cloned().zip(row.iter().copied()).collect();
                (
                    pos.clone(),
                    SparseVector::new(entries).expect("column positions increase"),
                )
            })
            .collect()
    }

    /// `original <= embedded <= (k+1)/k · original`, allowing `1e-12` relative rounding.
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * self.embedded.max(self.original);
        let cap = (self.k as f64 + 1.0) / self.k as f64;
        self.original <= self.embedded + slack && self.embedded <= cap * self.original + slack
    }
}

struct Placed {
    positions: Vec<BigUint>,
    rationals: Vec<Rational>,
    values: Vec<f64>,
    log2: f64,
}

fn place_below(targets: &[f64], r: &RationalEnum, b: f64) -> Result<Placed, EmbedError> {
    let mut positions = vec![BigUint::one()];
    let mut rationals = Vec::with_capacity(targets.len());
    let mut values = Vec::with_capacity(targets.len());
    let mut log2 = 0.0;
    for (k, &q) in targets.iter().enumerate() {
        if !q.is_finite() {
            return Err(EmbedError::Unplaceable(q));
        }
        check_exponent(q)?;
        let lo = (q.recip() + b).recip().max(1.0).min(q);
        let min_index = positions.last().unwrap() - BigUint::one();
        let (index, rational) = r
            .find_index_in(lo, q, &min_index)
            .map_err(|source| EmbedError::Placement {
                connector: k + 2,
                target: q,
                source,
            })?;
        let v = rational.to_f64();
        log2 += v.recip() - q.recip();
        positions.push(index + 1u32);
        rationals.push(rational);
        values.push(v);
    }
    Ok(Placed {
        positions,
        rationals,
        values,
        log2,
    })
}

/// Copies the leading `k x k` block of `m`, with connector brackets sized so
/// the norm grows by at most `(k+1)/k`.
pub fn double_embed(
    m: &VarMatrix,
    outer: &[f64],
    inner: &[f64],
    k: usize,
    r: &RationalEnum,
) -> Result<DoubleEmbedding, EmbedError> {
    let b = if k > 1 {
        ((k as f64 + 1.0) / k as f64).log2() / (2.0 * (k as f64 - 1.0))
    } else {
        0.0
    };
    double_embed_with(m, outer, inner, k, r, b)
}

/// [`double_embed`] with each connector bracket `[1/(1/q + b), q]`.
pub fn double_embed_with(
    m: &VarMatrix,
    outer: &[f64],
    inner: &[f64],
    k: usize,
    r: &RationalEnum,
    b: f64,
) -> Result<DoubleEmbedding, EmbedError> {
    if k == 0 {
        return Err(EmbedError::Stage);
    }
    for (what, list) in [("outer", outer), ("inner", inner)] {
        if list.len() < k - 1 {
            return Err(EmbedError::Connectors {
                what,
                needed: k - 1,
                got: list.len(),
            });
        }
    }
    let (outer, inner) = (&outer[..k - 1], &inner[..k - 1]);
    let block = m.leading_block(k);
    let rows = place_below(outer, r, b)?;
    let cols = place_below(inner, r, b)?;
    let original = double_norm(&block, outer, inner)?;
    let embedded = double_norm(&block, &rows.values, &cols.values)?;
    let ratio = if original == 0.0 { 1.0 } else { embedded / original };
    Ok(DoubleEmbedding {
        k,
        block,
        row_positions: rows.positions,
        col_positions: cols.positions,
        row_connectors: rows.rationals,
        col_connectors: cols.rationals,
        original,
        embedded,
        ratio,
        bound: (rows.log2 + cols.log2).exp2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::sparse_norm;
    use crate::seqspace::Nesting;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one_is_exact() {
        let r = RationalEnum::new();
        let m = VarMatrix::new(vec![vec![-4.5, 1.0], vec![2.0, 2.0]]).unwrap();
        let d = double_embed(&m, &[], &[], 1, &r).unwrap();
        assert_eq!((d.embedded, d.ratio), (4.5, 1.0));
    }

    #[test]
    fn exact_connectors_hit() {
        let r = RationalEnum::new();
        let m = VarMatrix::new(vec![vec![3.0, 4.0], vec![0.0, 12.0]]).unwrap();
        let d = double_embed_with(&m, &[2.0], &[2.0], 2, &r, 1e-9).unwrap();
        assert_eq!(d.embedded, 13.0);
        assert_eq!(d.ratio, 1.0);
    }

    #[test]
    fn random_blocks_stay_within_the_bound() {
        let r = RationalEnum::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let stair: Vec<f64> = (0..8).map(|i| 1.0 + (i as f64 + 0.5) / 8.0).collect();
        for k in 1..=8 {
            for _ in 0..5 {
                let rows = (0..k)
                    .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let m = VarMatrix::new(rows).unwrap();
                let d = double_embed(&m, &stair, &stair[1..], k, &r).unwrap();
                assert!(d.holds(), "k = {k}: {d:?}");
                assert!(d.ratio <= d.bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rows_carry_the_row_norms() {
        let r = RationalEnum::new();
        let m = VarMatrix::new(vec![vec![1.0, 2.0, 0.5], vec![0.0, -1.0, 3.0], vec![2.0, 0.0, 0.0]]).unwrap();
        let d = double_embed(&m, &[1.3, 2.2], &[1.7, 2.9], 3, &r).unwrap();
        for ((_, row), orig) in d.rows().iter().zip(&d.block.rows) {
            let direct = crate::seqspace::fold(
                orig,
                &d.col_connectors.iter().map(Rational::to_f64).collect::<Vec<_>>(),
                Nesting::Left,
            );
            assert_eq!(sparse_norm(row, &r, Nesting::Left).unwrap(), direct);
        }
    }

    #[test]
    fn repeated_unit_connectors_run_out() {
        let r = RationalEnum::new();
        let m = VarMatrix::new(vec![vec![1.0; 3]; 3]).unwrap();
        let err = double_embed(&m, &[2.0, 2.0], &[1.0, 1.0], 3, &r).unwrap_err();
        assert!(err.is_budget(), "{err}");
    }
}
