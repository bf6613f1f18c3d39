//! The ten acceptance criteria, one report line each.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varlp::approx::{lusin_sets, martingale_gap, refine_partition, IntervalUnion};
use varlp::certify::{finite_repr_certificate, verify, CertifyBudget};
use varlp::embed::{double_embed, up_leq, up_norm, EmbedConfig, Embedder, DEFAULT_ORDER_TOL};
use varlp::exponents::RationalEnum;
use varlp::odenorm::{lp_norm, phi_numeric, phi_step, SampledFn, StepFn};
use varlp::seminorm::{bracket_spec, cut_registry, default_schedule, seminorm_converge, terminal_gap};
use varlp::seqspace::{sparse_norm, Nesting, VarMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random step function with breakpoints on the grid `1/den` and values in `[-amp, amp]`.
fn random_step(rng: &mut ChaCha8Rng, den: u32, max_cells: usize, amp: f64) -> StepFn {
    let cells = rng.random_range(1..=max_cells);
    let mut cuts: Vec<u32> = (0..cells - 1).map(|_| rng.random_range(1..den)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut b = vec![0.0];
    b.extend(cuts.iter().map(|&c| c as f64 / den as f64));
    b.push(1.0);
    let values = (0..b.len() - 1).map(|_| rng.random_range(-amp..amp)).collect();
    StepFn::new(b, values).unwrap()
}

fn random_exponent(rng: &mut ChaCha8Rng, den: u32, max_cells: usize, lo: f64, hi: f64) -> StepFn {
    random_step(rng, den, max_cells, 1.0).map(|v| lo + (hi - lo) * 0.5 * (v + 1.0))
}

fn classical(f: &StepFn, p: f64) -> f64 {
    f.cells()
        .map(|(a, b, v)| v.abs().powf(p) * (b - a))
        .sum::<f64>()
        .powf(p.recip())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
        for _ in 0..100 {
            let f = random_step(&mut r, 1000, 10, 5.0);
            let got = lp_norm(&f, &StepFn::constant(p)).unwrap();
            worst = worst.max((got - classical(&f, p)).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("max |lp_norm - classical| = {worst:.2e} over 500 cases in {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let cells = 10_000;
    let grid: Vec<f64> = (1..cells).map(|i| i as f64 / cells as f64).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f = random_step(&mut r, 16, 6, 4.0);
        let p = random_exponent(&mut r, 16, 5, 1.0, 5.0);
        let exact = phi_step(&f.refined(&grid), &p).unwrap();
        let numeric = phi_numeric(
            &SampledFn::from_step(&f, cells).unwrap(),
            &SampledFn::from_step(&p, cells).unwrap(),
        )
        .unwrap();
        for &(t, v) in numeric.points() {
            let w = exact.at(t).expect("grid point of the exact solve");
            worst = worst.max((v - w).abs());
        }
    }

    // Breakpoints off every grid: errors at n and 2n for n = 3 · 2^j.
    let f = StepFn::new(vec![0.0, 0.3141, 0.7183, 1.0], vec![2.0, -1.0, 3.0]).unwrap();
    let p = StepFn::new(vec![0.0, 0.4142, 0.8660, 1.0], vec![1.5, 3.5, 2.0]).unwrap();
    let target = lp_norm(&f, &p).unwrap();
    let err = |n: usize| {
        let fs = SampledFn::from_step(&f, n).unwrap();
        let ps = SampledFn::from_step(&p, n).unwrap();
        (phi_numeric(&fs, &ps).unwrap().terminal() - target).abs()
    };
    let errors: Vec<f64> = (3..10).map(|j| err(3 << j)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let mean_order = ratios.iter().map(|r| r.log2()).sum::<f64>() / ratios.len() as f64;
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && mean_order >= 0.9 && elapsed < Duration::from_secs(10),
        format!("max grid deviation {worst:.2e} on 50 pairs; mean halving order {mean_order:.2}; {elapsed:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let grid: Vec<f64> = (1..64).map(|i| i as f64 / 64.0).collect();
    let mut violations = 0;
    for _ in 0..1000 {
        let f = random_step(&mut r, 64, 8, 3.0);
        let bump = random_step(&mut r, 64, 8, 1.0).map(|v| v.max(0.0));
        let g = f.combine(&bump, |a, b| {
            let m = a.abs() + b;
            if a < 0.0 {
                -m
            } else {
                m
            }
        });
        let p = random_exponent(&mut r, 64, 6, 1.0, 6.0);
        let pf = phi_step(&f.refined(&grid), &p).unwrap();
        let pg = phi_step(&g.refined(&grid), &p).unwrap();
        for &t in &grid {
            let (a, b) = (pf.at(t).unwrap(), pg.at(t).unwrap());
            if a > b * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 1000 pairs × 63 grid points"),
    )
}

/// Staircases `p = 1 + s·t` sampled on `m` cells.
fn staircase(m: usize, slope: f64) -> StepFn {
    StepFn::uniform((0..m).map(|i| 1.0 + slope * (i as f64 + 0.5) / m as f64).collect()).unwrap()
}

fn criterion_4() -> Outcome {
    let registry = cut_registry();
    let cuts = registry.default_strategy().unwrap();
    let mut r = rng(4);
    let mut violations = 0;
    let mut worst_gap: f64 = 0.0;
    for (m, slope) in [(2, 1.0), (4, 2.0), (8, 1.0), (8, 3.0), (16, 2.0)] {
        let p = staircase(m, slope);
        for _ in 0..4 {
            let f = random_step(&mut r, 128, 6, 3.0);
            let norm = lp_norm(&f, &p).unwrap();
            let stages = seminorm_converge(&f, &p, &default_schedule(&p, 20, 10, cuts)).unwrap();
            violations += stages.iter().filter(|s| s.n_value > norm * (1.0 + 1e-12)).count();
            worst_gap = worst_gap.max(terminal_gap(&f, &p, &stages).unwrap());
        }
    }
    outcome(
        violations == 0 && worst_gap <= 1e-3,
        format!("{violations} domination violations; worst terminal gap {worst_gap:.2e} on 20 staircase cases"),
    )
}

/// The twenty `(f, p)` pairs of the embedding suite.
fn embed_suite() -> Vec<(StepFn, StepFn)> {
    let mut suite = vec![
        (StepFn::constant(1.0), StepFn::constant(2.0)),
        (
            StepFn::constant(1.0),
            StepFn::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap(),
        ),
        (
            StepFn::uniform((0..8).map(|i| (i as f64 + 0.5) / 8.0).collect()).unwrap(),
            staircase(8, 1.0),
        ),
    ];
    let mut r = rng(6);
    while suite.len() < 20 {
        let f = random_step(&mut r, 32, 5, 3.0);
        let p = random_exponent(&mut r, 16, 4, 1.0, 4.0);
        suite.push((f, p));
    }
    suite
}

struct EmbedRun {
    gaps: Vec<Vec<f64>>,
    quasi_violations: usize,
    stages: usize,
    elapsed: Duration,
}

fn run_embed_suite() -> EmbedRun {
    let start = Instant::now();
    let r = Arc::new(RationalEnum::new());
    let mut gaps = Vec::new();
    let mut quasi_violations = 0;
    let mut stages = 0;
    for (f, p) in embed_suite() {
        let e = Embedder::new(p, EmbedConfig::default(), r.clone()).unwrap();
        let (u, records) = e.embed_traced(&f, 30).unwrap();
        quasi_violations += records.iter().filter(|rec| !rec.quasi_holds()).count();
        stages += records.len();
        let mut trace: Vec<f64> = records.iter().map(|rec| (rec.stage_norm - rec.lp_norm).abs()).collect();
        let (limit, _) = up_norm(&u).unwrap();
        *trace.last_mut().unwrap() = (limit - records[0].lp_norm).abs();
        gaps.push(trace);
    }
    EmbedRun {
        gaps,
        quasi_violations,
        stages,
        elapsed: start.elapsed(),
    }
}

fn criterion_5(run: &EmbedRun) -> Outcome {
    outcome(
        run.quasi_violations == 0,
        format!("{} violations over {} stages", run.quasi_violations, run.stages),
    )
}

fn criterion_6(run: &EmbedRun) -> Outcome {
    let worst = run.gaps.iter().map(|g| *g.last().unwrap()).fold(0.0, f64::max);
    let rises = run
        .gaps
        .iter()
        .filter(|g| g[20..].windows(2).any(|w| w[1] > w[0] + 1e-9))
        .count();
    outcome(
        worst <= 1e-2 && rises == 0 && run.elapsed < Duration::from_secs(60),
        format!(
            "worst |up_norm - lp_norm| = {worst:.2e} at N = 30; {rises} traces rise over the final 10 stages; {:.2?}",
            run.elapsed
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = Arc::new(RationalEnum::new());
    let mut rg = rng(7);
    let mut order_failures = 0;
    let mut worst_defect: f64 = 0.0;
    for _ in 0..5 {
        let p = random_exponent(&mut rg, 16, 4, 1.0, 4.0);
        let e = Embedder::new(p, EmbedConfig::default(), r.clone()).unwrap();
        let f = random_step(&mut rg, 32, 5, 2.0);
        let g = f.combine(&random_step(&mut rg, 32, 5, 1.0), |a, b| a + b.abs());
        let (u, v) = (e.embed(&f, 12).unwrap(), e.embed(&g, 12).unwrap());
        if !up_leq(&u, &v, DEFAULT_ORDER_TOL).unwrap() {
            order_failures += 1;
        }
        // Breakpoints on 1/32 are refined from k = 5 on, and |f| + |g| <= 5 <= α_n from n = 5.
        let sum = f.add(&g);
        for n in 7..=12 {
            let x = e.stage_vector(&f, n).unwrap();
            let y = e.stage_vector(&g, n).unwrap();
            let s = e.stage_vector(&sum, n).unwrap();
            let defect = sparse_norm(&s.sub(&x).sub(&y), &r, Nesting::Left).unwrap();
            let scale = sparse_norm(&x, &r, Nesting::Left).unwrap() + sparse_norm(&y, &r, Nesting::Left).unwrap();
            worst_defect = worst_defect.max(defect / scale);
        }
    }
    outcome(
        order_failures == 0 && worst_defect <= 1e-12,
        format!("{order_failures} order failures; worst relative additivity defect {worst_defect:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let r = RationalEnum::new();
    let mut rg = rng(8);
    let mut failures = 0;
    let mut worst_ratio: f64 = 1.0;
    let mut per_k = Vec::new();
    for k in 1..=8 {
        let mut top: f64 = 1.0;
        for _ in 0..50 {
            let rows = (0..k)
                .map(|_| (0..k).map(|_| rg.random_range(-1.0..1.0)).collect())
                .collect();
            let m = VarMatrix::new(rows).unwrap();
            let outer: Vec<f64> = (0..k.max(2) - 1).map(|_| rg.random_range(1.05..4.0)).collect();
            let inner: Vec<f64> = (0..k.max(2) - 1).map(|_| rg.random_range(1.05..4.0)).collect();
            match double_embed(&m, &outer, &inner, k, &r) {
                Ok(d) if d.holds() => top = top.max(d.ratio),
                _ => failures += 1,
            }
        }
        worst_ratio = worst_ratio.max(top);
        per_k.push(format!("k={k}:{top:.4}"));
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(10),
        format!(
            "{failures} failures; max ratio per k [{}]; {elapsed:.2?}",
            per_k.join(" ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let basis = [
        StepFn::indicator(0.0, 0.5).unwrap(),
        StepFn::indicator(0.5, 1.0).unwrap(),
    ];
    let p = StepFn::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
    match finite_repr_certificate(&basis, &p, 0.05, CertifyBudget::default(), 2024, EmbedConfig::default()) {
        Ok(cert) => {
            let check = verify(&cert, 10).unwrap();
            outcome(
                cert.distortion <= 1.05 && check.accepted,
                format!(
                    "certified distortion {:.6} at stage {}; re-measured {:.6} with 10x samples",
                    cert.distortion, cert.stage, check.remeasured.distortion
                ),
            )
        }
        Err(e) => outcome(false, format!("no certificate: {e}")),
    }
}

fn criterion_10() -> Outcome {
    // One jump per block at an odd multiple of 1/32, so atoms refine f from k = 5 on.
    let p = StepFn::new(vec![0.0, 0.5, 1.0], vec![1.5, 3.0]).unwrap();
    let f = StepFn::new(vec![0.0, 5.0 / 32.0, 0.5, 23.0 / 32.0, 1.0], vec![2.0, -1.0, 0.5, 3.0]).unwrap();
    let c = lusin_sets(&p, 10);
    let spec = bracket_spec(&p, &c, &[0.0, 0.5, 1.0]).unwrap();
    let seeds: Vec<IntervalUnion> = spec.blocks().iter().map(|b| b.support.clone()).collect();
    let mut detail = Vec::new();
    let mut pass = true;
    for block in spec.blocks() {
        let gaps: Vec<f64> = (1..=8)
            .map(|k| martingale_gap(&f, &c, &refine_partition(&seeds, k), &block.support, block.inner))
            .collect();
        pass &= gaps[..5].windows(2).all(|w| w[1] < w[0]) && gaps[4..].iter().all(|&g| g == 0.0);
        detail.push(format!(
            "p={}: {:?}",
            block.inner,
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()
        ));
    }
    outcome(pass, detail.join("; "))
}

#[test]
fn acceptance() {
    let run = run_embed_suite();
    let criteria: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("1 classical limit", &criterion_1),
        ("2 ODE oracle equivalence", &criterion_2),
        ("3 lattice monotonicity", &criterion_3),
        ("4 seminorm domination and convergence", &criterion_4),
        ("5 per-stage quasi-isometry", &|| criterion_5(&run)),
        ("6 isometry in the limit", &|| criterion_6(&run)),
        ("7 order and additivity", &criterion_7),
        ("8 double-space embedding", &criterion_8),
        ("9 finite representability certificate", &criterion_9),
        ("10 martingale convergence", &criterion_10),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {} [{:.2?}]", o.detail, start.elapsed());
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
