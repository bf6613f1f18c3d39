use num_bigint::BigUint;

use crate::approx::{atom_averages, lusin_sets, refine_partition, truncate, FinitePartition, IntervalUnion};
use crate::exponents::RationalEnum;
use crate::odenorm::StepFn;
use crate::seminorm::{bracket_spec, variant_nprime, CutStrategy, SeminormSpec};
use crate::seqspace::{fold, ExponentLadder, Nesting, SparseVector};

use super::place::{place, Placement, PlacementPolicy};
use super::EmbedError;

/// A vector together with the ladder it is normed by.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderImage {
    pub values: Vec<f64>,
    pub ladder: ExponentLadder,
}

impl LadderImage {
    pub fn norm(&self) -> f64 {
        fold(&self.values, self.ladder.connectors(), Nesting::Left)
    }
}

/// `B`: the function constant on each successive atom `Δ_i` goes to the
/// vector of `m(Δ_i)^{1/p_i}` times its value there, normed by the ladder
/// `(p_2, ..., p_j)`.
pub fn b_map(g: &StepFn, atoms: &[IntervalUnion], exponents: &[f64]) -> Result<LadderImage, EmbedError> {
    if atoms.len() != exponents.len() {
        return Err(EmbedError::Shape {
            atoms: atoms.len(),
            exponents: exponents.len(),
        });
    }
    let mut values = Vec::with_capacity(atoms.len());
    for (i, (atom, &p)) in atoms.iter().zip(exponents).enumerate() {
        let mut value = None;
        for &(a, b) in atom.intervals() {
            for (x, y, v) in g.cells() {
                if x.max(a) < y.min(b) && value.replace(v).is_some_and(|w| w != v) {
                    return Err(EmbedError::NotConstant(i));
                }
            }
        }
        values.push(atom.measure().powf(p.recip()) * value.unwrap_or(0.0));
    }
    let ladder = ExponentLadder::new(exponents.iter().skip(1).copied().collect())?;
    Ok(LadderImage { values, ladder })
}

/// One `Δ ∩ C` of positive measure in a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanAtom {
    pub atom: (f64, f64),
    pub measure: f64,
    /// Inner exponent of the seminorm block containing the atom.
    pub exponent: f64,
}

/// Everything about stage `n` that depends on `p` but not on `f`.
#[derive(Debug, Clone)]
pub struct StagePlan {
    pub n: u32,
    /// `C_{m_n}` with `m_n = n`.
    pub lusin: IntervalUnion,
    /// Dyadic generation `k_n` of the partition.
    pub k: u32,
    pub alpha: f64,
    /// `N'_n`.
    pub spec: SeminormSpec,
    pub partition: FinitePartition,
    pub atoms: Vec<PlanAtom>,
    pub placement: Placement,
}

impl StagePlan {
    pub fn build(
        p: &StepFn,
        n: u32,
        k: u32,
        alpha: f64,
        cuts: &dyn CutStrategy,
        r: &RationalEnum,
        policy: PlacementPolicy,
    ) -> Result<StagePlan, EmbedError> {
        let lusin = lusin_sets(p, n);
        let bracket = bracket_spec(p, &lusin, &cuts.cuts(p, k))?;
        let seeds: Vec<IntervalUnion> = bracket.blocks().iter().map(|b| b.support.clone()).collect();
        let partition = refine_partition(&seeds, k);
        let mut atoms = Vec::new();
        for (a, b) in partition.atoms() {
            let piece = lusin.clip(a, b);
            let measure = piece.measure();
            if measure <= 0.0 {
                continue;
            }
            let (x, y) = piece.intervals()[0];
            let t = 0.5 * (x + y);
            let block = bracket
                .blocks()
                .iter()
                .find(|blk| blk.support.contains(t))
                .expect("atoms inside C lie in some block");
            atoms.push(PlanAtom {
                atom: (a, b),
                measure,
                exponent: block.inner,
            });
        }
        let connectors: Vec<f64> = atoms.iter().skip(1).map(|a| a.exponent).collect();
        let placement = place(&connectors, r, policy, &BigUint::ZERO)?;
        Ok(StagePlan {
            n,
            lusin,
            k,
            alpha,
            spec: variant_nprime(&bracket),
            partition,
            atoms,
            placement,
        })
    }

    pub fn ladder(&self) -> ExponentLadder {
        ExponentLadder::new(self.atoms.iter().skip(1).map(|a| a.exponent).collect())
            .expect("seminorm exponents are >= 1")
    }

    /// `E(T_n f | C, F)` as the list of atom values.
    pub fn averages(&self, f: &StepFn) -> Vec<f64> {
        let averages = atom_averages(&truncate(f, self.alpha), &self.lusin, &self.partition);
        debug_assert_eq!(averages.len(), self.atoms.len());
        averages.into_iter().map(|a| a.value).collect()
    }

    /// `B_n E(T_n f | C_{m_n}, F_{k_n})`.
    pub fn image(&self, f: &StepFn) -> LadderImage {
        let values = self
            .averages(f)
            .iter()
            .zip(&self.atoms)
            .map(|(v, a)| a.measure.powf(a.exponent.recip()) * v)
            .collect();
        LadderImage {
            values,
            ladder: self.ladder(),
        }
    }

    /// `x_n = ι_n B_n E(T_n f | C_{m_n}, F_{k_n})`.
    pub fn map(&self, f: &StepFn) -> SparseVector {
        self.placement.apply(&self.image(f).values)
    }

    /// Norm of a vector supported on this stage's positions.
    pub fn sparse_norm(&self, x: &SparseVector) -> f64 {
        let values: Vec<f64> = x.entries().iter().map(|e| e.1).collect();
        self.placement.norm(&values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seminorm::{simple_seminorm, BreakpointsDyadic};
    use crate::seqspace::ladder_norm;
    use approx::assert_relative_eq;

    fn iv(a: f64, b: f64) -> IntervalUnion {
        IntervalUnion::new(vec![(a, b)]).unwrap()
    }

    #[test]
    fn b_map_examples() {
        let g = StepFn::new(vec![0.0, 0.25, 1.0], vec![2.0, 3.0]).unwrap();
        let img = b_map(&g, &[iv(0.0, 0.25), iv(0.25, 1.0)], &[1.0, 2.0]).unwrap();
        assert_eq!(img.values[0], 0.5);
        assert_relative_eq!(img.values[1], 3.0 * 0.75f64.sqrt(), max_relative = 1e-15);
        let n = ladder_norm(&img.values, &img.ladder, Nesting::Left).unwrap();
        assert_relative_eq!(n, 7f64.sqrt(), max_relative = 1e-15);

        let zero = b_map(&StepFn::constant(0.0), &[iv(0.0, 0.5), iv(0.5, 1.0)], &[1.0, 3.0]).unwrap();
        assert_eq!(zero.values, vec![0.0, 0.0]);
        let single = b_map(&StepFn::constant(-2.0), &[IntervalUnion::full()], &[2.0]).unwrap();
        assert_eq!(single.values, vec![-2.0]);

        assert!(matches!(
            b_map(&g, &[IntervalUnion::full()], &[2.0]),
            Err(EmbedError::NotConstant(0))
        ));
    }

    #[test]
    fn plan_image_matches_nprime_seminorm() {
        let p = StepFn::new(vec![0.0, 0.3, 0.8, 1.0], vec![1.5, 2.75, 1.25]).unwrap();
        let f = StepFn::new(vec![0.0, 0.5, 0.75, 1.0], vec![1.0, -3.0, 2.0]).unwrap();
        let r = RationalEnum::new();
        let plan = StagePlan::build(&p, 6, 6, 6.0, &BreakpointsDyadic, &r, PlacementPolicy::ratio(7.0 / 6.0)).unwrap();
        let img = plan.image(&f);
        let e = crate::approx::cond_expect(&truncate(&f, plan.alpha), &plan.lusin, &plan.partition);
        assert_relative_eq!(img.norm(), simple_seminorm(&e, &plan.spec), max_relative = 1e-12);
        assert!(plan.atoms.iter().all(|a| a.measure > 0.0));
        assert!(plan.partition.max_diameter() <= 2f64.powi(-6));
    }
}
