//! Nested sequence norms built from the two-term p-sum `a ⊞_p b`.
//!
//! Exponents are `f64` values in `[1, inf]`, with `f64::INFINITY` standing for
//! the sup-norm connector.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exponents::{ExponentError, RationalEnum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error("p-sum arguments must be non-negative, got {a} and {b}")]
    Negative { a: f64, b: f64 },
    #[error("exponent {0} is not in [1, inf]")]
    Exponent(f64),
    #[error("vector of length {len} needs {expected} connectors, got {got}")]
    Shape { len: usize, expected: usize, got: usize },
    #[error("sparse indices must be positive and strictly increasing")]
    Unordered,
    #[error("coordinate {0} is not finite")]
    NonFinite(f64),
    #[error(transparent)]
    Enumeration(#[from] ExponentError),
}

/// Fold direction of a nested norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nesting {
    /// `((x_1 ⊞ x_2) ⊞ x_3) ⊞ ...`
    #[default]
    Left,
    /// `x_1 ⊞ (x_2 ⊞ (x_3 ⊞ ...))`
    Right,
}

pub fn check_exponent(p: f64) -> Result<f64, SeqError> {
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(SeqError::Exponent(p))
    }
}

/// `(a^p + b^p)^{1/p}`, or `max(a, b)` for `p = inf`.
pub fn boxplus(a: f64, b: f64, p: f64) -> Result<f64, SeqError> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(SeqError::Negative { a, b });
    }
    check_exponent(p)?;
    Ok(boxplus_unchecked(a, b, p))
}

/// [`boxplus`] without argument checks. Evaluated as `m (1 + (s/m)^p)^{1/p}`
/// with `m = max(a, b)`, which cannot overflow for large `p`.
pub(crate) fn boxplus_unchecked(a: f64, b: f64, p: f64) -> f64 {
    let (m, s) = if a >= b { (a, b) } else { (b, a) };
    if s == 0.0 || p == f64::INFINITY {
        return m;
    }
    if p == 1.0 {
        return a + b;
    }
    m * (1.0 + (s / m).powf(p)).powf(p.recip())
}

/// Connector exponents `(q_2, ..., q_j)` of `R^j` with a nested norm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExponentLadder {
    connectors: Vec<f64>,
}

impl ExponentLadder {
    pub fn new(connectors: Vec<f64>) -> Result<Self, SeqError> {
        for &q in &connectors {
            check_exponent(q)?;
        }
        Ok(ExponentLadder { connectors })
    }

    pub fn connectors(&self) -> &[f64] {
        &self.connectors
    }

    /// Dimension of the space the ladder lives on.
    pub fn dim(&self) -> usize {
        self.connectors.len() + 1
    }
}

/// Nested norm of `x` on the ladder; `x.len()` must equal `ladder.dim()`.
pub fn ladder_norm(x: &[f64], ladder: &ExponentLadder, nesting: Nesting) -> Result<f64, SeqError> {
    if x.len() != ladder.dim() {
        return Err(SeqError::Shape {
            len: x.len(),
            expected: x.len().saturating_sub(1),
            got: ladder.connectors.len(),
        });
    }
    if let Some(&bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(SeqError::NonFinite(bad));
    }
    Ok(fold(x, &ladder.connectors, nesting))
}

/// Nested fold with `connectors[k - 1]` joining `x[k - 1]` and `x[k]`; the
/// connector list may be longer than needed.
pub(crate) fn fold(x: &[f64], connectors: &[f64], nesting: Nesting) -> f64 {
    match nesting {
        Nesting::Left => {
            let mut acc = x.first().map_or(0.0, |v| v.abs());
            for (v, &q) in x.iter().skip(1).zip(connectors) {
                acc = boxplus_unchecked(acc, v.abs(), q);
            }
            acc
        }
        Nesting::Right => {
            let Some(last) = x.last() else { return 0.0 };
            let mut acc = last.abs();
            for k in (0..x.len() - 1).rev() {
                acc = boxplus_unchecked(x[k].abs(), acc, connectors[k]);
            }
            acc
        }
    }
}

/// Finitely supported element of `l^{r(.)}`, indexed from 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(BigUint, f64)>,
}

impl SparseVector {
    pub fn new(entries: Vec<(BigUint, f64)>) -> Result<Self, SeqError> {
        let ordered = entries.windows(2).all(|w| w[0].0 < w[1].0);
        if !ordered || entries.first().is_some_and(|(i, _)| i.is_zero()) {
            return Err(SeqError::Unordered);
        }
        if let Some((_, bad)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SeqError::NonFinite(*bad));
        }
        Ok(SparseVector { entries })
    }

    pub fn zero() -> Self {
        SparseVector::default()
    }

    pub fn entries(&self) -> &[(BigUint, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn abs(&self) -> SparseVector {
        self.map(f64::abs)
    }

    pub fn scale(&self, lambda: f64) -> SparseVector {
        self.map(|v| lambda * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SparseVector {
        SparseVector {
            entries: self.entries.iter().map(|(i, v)| (i.clone(), f(*v))).collect(),
        }
    }

    pub fn add(&self, other: &SparseVector) -> SparseVector {
        self.merge(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        self.merge(other, |a, b| a - b)
    }

    /// Entrywise combination over the union of supports, absent entries read as 0.
    pub fn merge(&self, other: &SparseVector, f: impl Fn(f64, f64) -> f64) -> SparseVector {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push((a[i].0.clone(), f(a[i].1, 0.0)));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b[j].0.clone(), f(0.0, b[j].1)));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), f(a[i].1, b[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        SparseVector { entries: out }
    }

    /// `self <= other` at every index of either support.
    pub fn le_entrywise(&self, other: &SparseVector) -> bool {
        other.sub(self).entries.iter().all(|(_, v)| *v >= 0.0)
    }
}

/// Norm of a sparse vector in `l^{r(.)}`. Zero coordinates collapse, so only
/// the connectors adjacent to supported indices act: `r(i - 1)` before index
/// `i` under left nesting, `r(i)` after it under right nesting.
pub fn sparse_norm(x: &SparseVector, r: &RationalEnum, nesting: Nesting) -> Result<f64, SeqError> {
    let support: Vec<&(BigUint, f64)> = x.entries.iter().filter(|(_, v)| *v != 0.0).collect();
    let values: Vec<f64> = support.iter().map(|(_, v)| *v).collect();
    let mut connectors = Vec::with_capacity(values.len().saturating_sub(1));
    match nesting {
        Nesting::Left => {
            for (i, _) in support.iter().skip(1) {
                connectors.push(r.connector(&(i - BigUint::one()))?);
            }
        }
        Nesting::Right => {
            for (i, _) in support.iter().take(values.len().saturating_sub(1)) {
                connectors.push(r.connector(i)?);
            }
        }
    }
    Ok(fold(&values, &connectors, nesting))
}

/// Finitely supported matrix, rows may be ragged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VarMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl VarMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SeqError> {
        if let Some(bad) = rows.iter().flatten().find(|v| !v.is_finite()) {
            return Err(SeqError::NonFinite(*bad));
        }
        Ok(VarMatrix { rows })
    }

    pub fn width(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Leading `k x k` block, padded with zeros.
    pub fn leading_block(&self, k: usize) -> VarMatrix {
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| self.rows.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        VarMatrix { rows }
    }
}

/// Norm of `l^{p(.)}(l^{s(.)})`: each row is normed with the inner connectors,
/// the row norms with the outer ones. Connector lists may be longer than the
/// matrix needs.
pub fn double_norm(m: &VarMatrix, outer: &[f64], inner: &[f64]) -> Result<f64, SeqError> {
    for &q in outer.iter().chain(inner) {
        check_exponent(q)?;
    }
    let width = m.width();
    if width > inner.len() + 1 {
        return Err(SeqError::Shape {
            len: width,
            expected: width - 1,
            got: inner.len(),
        });
    }
    if m.rows.len() > outer.len() + 1 {
        return Err(SeqError::Shape {
            len: m.rows.len(),
            expected: m.rows.len() - 1,
            got: outer.len(),
        });
    }
    if let Some(bad) = m.rows.iter().flatten().find(|v| !v.is_finite()) {
        return Err(SeqError::NonFinite(*bad));
    }
    let row_norms: Vec<f64> = m.rows.iter().map(|row| fold(row, inner, Nesting::Left)).collect();
    Ok(fold(&row_norms, outer, Nesting::Left))
}
