//! Seeded invariant checks over randomly generated inputs.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{double_embed, up_abs, up_leq, up_norm, EmbedConfig, Embedder, DEFAULT_ORDER_TOL};
use crate::exponents::RationalEnum;
use crate::odenorm::{lp_norm, phi_step, StepFn};
use crate::registry::Registry;
use crate::seminorm::{cut_registry, default_schedule, seminorm_converge};
use crate::seqspace::{boxplus, VarMatrix};

/// One invariant. `check` returns a summary on success and the first
/// counterexample on failure.
pub trait Property: Send + Sync {
    fn description(&self) -> &'static str;
    fn check(&self, seed: u64) -> Result<String, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn step(rng: &mut ChaCha8Rng, den: u32, max_cells: usize, lo: f64, hi: f64) -> StepFn {
    let cells = rng.random_range(1..=max_cells);
    let mut cuts: Vec<u32> = (1..cells).map(|_| rng.random_range(1..den)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut b = vec![0.0];
    b.extend(cuts.iter().map(|&c| c as f64 / den as f64));
    b.push(1.0);
    let values = (1..b.len()).map(|_| rng.random_range(lo..hi)).collect();
    StepFn::new(b, values).expect("sorted dyadic breakpoints")
}

fn err<T: std::fmt::Display>(e: T) -> String {
    e.to_string()
}

struct ClassicalLimit;

impl Property for ClassicalLimit {
    fn description(&self) -> &'static str {
        "constant exponents give the classical L^p norm"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let f = step(&mut rng, 1024, 8, -4.0, 4.0);
            let p = rng.random_range(1.0..8.0);
            let want = f
                .cells()
                .map(|(a, b, v)| v.abs().powf(p) * (b - a))
                .sum::<f64>()
                .powf(p.recip());
            let got = lp_norm(&f, &StepFn::constant(p)).map_err(err)?;
            worst = worst.max((got - want).abs());
            if (got - want).abs() > 1e-10 {
                return Err(format!("p = {p}: {got} vs {want} for {f:?}"));
            }
        }
        Ok(format!("max deviation {worst:.1e}"))
    }
}

struct LatticeMonotone;

impl Property for LatticeMonotone {
    fn description(&self) -> &'static str {
        "|f| <= |g| implies phi_f <= phi_g pointwise"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<f64> = (1..32).map(|i| i as f64 / 32.0).collect();
        for _ in 0..200 {
            let f = step(&mut rng, 32, 6, -3.0, 3.0);
            let g = f.combine(&step(&mut rng, 32, 6, 0.0, 1.0), |a, b| a.abs() + b);
            let p = step(&mut rng, 32, 4, 1.0, 5.0);
            let pf = phi_step(&f.refined(&grid), &p).map_err(err)?;
            let pg = phi_step(&g.refined(&grid), &p).map_err(err)?;
            for &t in &grid {
                let (a, b) = (pf.at(t).unwrap_or(0.0), pg.at(t).unwrap_or(0.0));
                if a > b * (1.0 + 1e-12) {
                    return Err(format!("phi_f({t}) = {a} > phi_g({t}) = {b}"));
                }
            }
        }
        Ok("200 pairs".into())
    }
}

struct BoxplusMonotone;

impl Property for BoxplusMonotone {
    fn description(&self) -> &'static str {
        "a ⊞_p b is nonincreasing in p and equals a + b at p = 1"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let (a, b) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
            let (p, q) = (rng.random_range(1.0..20.0), rng.random_range(1.0..20.0));
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            let (x, y) = (boxplus(a, b, lo).map_err(err)?, boxplus(a, b, hi).map_err(err)?);
            if y > x * (1.0 + 1e-15) {
                return Err(format!("{a} ⊞ {b}: {x} at {lo} < {y} at {hi}"));
            }
            let one = boxplus(a, b, 1.0).map_err(err)?;
            if one != a + b {
                return Err(format!("{a} ⊞_1 {b} = {one}"));
            }
        }
        Ok("1000 triples".into())
    }
}

struct Enumeration;

impl Property for Enumeration {
    fn description(&self) -> &'static str {
        "the rational enumeration is injective and index_of inverts it"
    }

    fn check(&self, _seed: u64) -> Result<String, String> {
        let r = RationalEnum::new();
        let prefix = r.prefix(1 << 12);
        let mut seen = std::collections::HashSet::new();
        for (i, q) in prefix.iter().enumerate() {
            if !seen.insert(q.clone()) {
                return Err(format!("{q} repeats at index {}", i + 1));
            }
            if r.index_of(q) != num_bigint::BigUint::from(i + 1) {
                return Err(format!("index_of({q}) != {}", i + 1));
            }
        }
        Ok(format!("{} indices", prefix.len()))
    }
}

struct SeminormDomination;

impl Property for SeminormDomination {
    fn description(&self) -> &'static str {
        "bracket seminorms never exceed the norm, up to 1e-12 relative rounding"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let registry = cut_registry();
        let cuts = registry.default_strategy().expect("default cuts");
        for _ in 0..20 {
            let f = step(&mut rng, 64, 6, -3.0, 3.0);
            let p = step(&mut rng, 16, 4, 1.0, 4.0);
            let norm = lp_norm(&f, &p).map_err(err)?;
            for s in seminorm_converge(&f, &p, &default_schedule(&p, 8, 8, cuts)).map_err(err)? {
                if s.n_value > norm * (1.0 + 1e-12) {
                    return Err(format!("stage {}: {} > {norm}", s.stage, s.n_value));
                }
            }
        }
        Ok("20 cases × 8 stages".into())
    }
}

fn embedder(rng: &mut ChaCha8Rng, r: &Arc<RationalEnum>) -> Result<Embedder, String> {
    Embedder::new(step(rng, 16, 4, 1.0, 4.0), EmbedConfig::default(), r.clone()).map_err(err)
}

struct QuasiIsometry;

impl Property for QuasiIsometry {
    fn description(&self) -> &'static str {
        "each stage satisfies ‖x_n‖ <= ‖B_n image‖ <= (n+1)/n ‖x_n‖"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Arc::new(RationalEnum::new());
        for _ in 0..3 {
            let e = embedder(&mut rng, &r)?;
            let f = step(&mut rng, 32, 5, -3.0, 3.0);
            let (_, records) = e.embed_traced(&f, 10).map_err(err)?;
            if let Some(bad) = records.iter().find(|rec| !rec.quasi_holds()) {
                return Err(format!("{bad:?}"));
            }
        }
        Ok("3 cases × 10 stages".into())
    }
}

struct OrderPreservation;

impl Property for OrderPreservation {
    fn description(&self) -> &'static str {
        "f <= g gives ordered stages and an ordered limit"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Arc::new(RationalEnum::new());
        for _ in 0..3 {
            let e = embedder(&mut rng, &r)?;
            let f = step(&mut rng, 32, 5, -3.0, 3.0);
            let g = f.combine(&step(&mut rng, 32, 5, 0.0, 1.0), |a, b| a + b);
            let (u, v) = (e.embed(&f, 8).map_err(err)?, e.embed(&g, 8).map_err(err)?);
            for (n, (x, y)) in u.stages().iter().zip(v.stages()).enumerate() {
                if !x.le_entrywise(y) {
                    return Err(format!("stage {} is not entrywise ordered", n + 1));
                }
            }
            if !up_leq(&u, &v, DEFAULT_ORDER_TOL).map_err(err)? {
                return Err("limit order fails".into());
            }
        }
        Ok("3 pairs × 8 stages".into())
    }
}

struct LatticeAxioms;

impl Property for LatticeAxioms {
    fn description(&self) -> &'static str {
        "|.| is idempotent and norm-preserving; the order respects sums and positive scaling"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Arc::new(RationalEnum::new());
        let e = embedder(&mut rng, &r)?;
        for _ in 0..3 {
            let f = step(&mut rng, 32, 5, -3.0, 3.0);
            let g = f.combine(&step(&mut rng, 32, 5, 0.0, 2.0), |a, b| a + b);
            let h = step(&mut rng, 32, 5, -3.0, 3.0);
            let (u, v, w) = (
                e.embed(&f, 8).map_err(err)?,
                e.embed(&g, 8).map_err(err)?,
                e.embed(&h, 8).map_err(err)?,
            );
            let a = up_abs(&u);
            if up_abs(&a).stages() != a.stages() {
                return Err("|.| is not idempotent".into());
            }
            let (nu, _) = up_norm(&u).map_err(err)?;
            let (na, _) = up_norm(&a).map_err(err)?;
            if nu != na {
                return Err(format!("‖u‖ = {nu} but ‖|u|‖ = {na}"));
            }
            let (uw, vw) = (u.add(&w).map_err(err)?, v.add(&w).map_err(err)?);
            if !up_leq(&uw, &vw, DEFAULT_ORDER_TOL).map_err(err)? {
                return Err("u <= v but u + w is not <= v + w".into());
            }
            let lambda = rng.random_range(0.1..5.0);
            if !up_leq(&u.scale(lambda), &v.scale(lambda), DEFAULT_ORDER_TOL).map_err(err)? {
                return Err(format!("order lost under scaling by {lambda}"));
            }
        }
        Ok("3 triples".into())
    }
}

struct Homogeneity;

impl Property for Homogeneity {
    fn description(&self) -> &'static str {
        "the limit norm is absolutely homogeneous"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = Arc::new(RationalEnum::new());
        let e = embedder(&mut rng, &r)?;
        for _ in 0..3 {
            let f = step(&mut rng, 32, 5, -3.0, 3.0);
            let lambda = rng.random_range(-2.0..2.0);
            let (a, wa) = up_norm(&e.embed(&f, 12).map_err(err)?).map_err(err)?;
            let (b, wb) = up_norm(&e.embed(&f.scale(lambda), 12).map_err(err)?).map_err(err)?;
            if (b - lambda.abs() * a).abs() > 1e-6 + wa.max(wb) {
                return Err(format!("‖λu‖ = {b}, |λ| ‖u‖ = {}", lambda.abs() * a));
            }
        }
        Ok("3 cases".into())
    }
}

struct DoubleEmbedding;

impl Property for DoubleEmbedding {
    fn description(&self) -> &'static str {
        "leading blocks embed with norm ratio in [1, (k+1)/k]"
    }

    fn check(&self, seed: u64) -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = RationalEnum::new();
        for k in 1..=8 {
            for _ in 0..10 {
                let rows = (0..k)
                    .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let m = VarMatrix::new(rows).map_err(err)?;
                let outer: Vec<f64> = (1..k).map(|_| rng.random_range(1.05..4.0)).collect();
                let inner: Vec<f64> = (1..k).map(|_| rng.random_range(1.05..4.0)).collect();
                let d = double_embed(&m, &outer, &inner, k, &r).map_err(err)?;
                if !d.holds() {
                    return Err(format!("k = {k}: ratio {}", d.ratio));
                }
            }
        }
        Ok("80 matrices".into())
    }
}

/// Every invariant check, by name.
pub fn props_registry() -> Registry<dyn Property> {
    Registry::new("property")
        .register("classical-limit", Box::new(ClassicalLimit) as Box<dyn Property>)
        .register("lattice-monotone", Box::new(LatticeMonotone))
        .register("boxplus-monotone", Box::new(BoxplusMonotone))
        .register("enumeration", Box::new(Enumeration))
        .register("seminorm-domination", Box::new(SeminormDomination))
        .register("quasi-isometry", Box::new(QuasiIsometry))
        .register("order-preservation", Box::new(OrderPreservation))
        .register("lattice-axioms", Box::new(LatticeAxioms))
        .register("homogeneity", Box::new(Homogeneity))
        .register("double-embedding", Box::new(DoubleEmbedding))
}

pub fn run_all(seed: u64) -> Vec<PropReport> {
    props_registry()
        .iter()
        .map(|(name, prop)| {
            let (passed, detail) = match prop.check(seed) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            PropReport { name, passed, detail }
        })
        .collect()
}
