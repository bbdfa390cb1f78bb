//! Acceptance suite. Prints one PASS/FAIL line per criterion plus a tally.
//! It is a report: a failing criterion is printed, not turned into a failed
//! test run, so known gaps stay visible without blocking the workspace
//! tests. Batteries are run once and shared between the criteria that need
//! them.

use std::sync::OnceLock;
use std::time::Instant;

use lade::bench::{BenchmarkFunction, FunctionId};
use lade::distinct::{hill_valley, hill_valley_samples};
use lade::engine::{run, run_traced, FoundPeak, RunConfig, RunReport, Settings};
use lade::error::BudgetExhausted;
use lade::history::{Evaluator, HistoryArchive};
use lade::metrics::{count_solutions, distinction_rates, summarize};
use lade::refine::mean_shift;
use lade::region::{enlargement_factor, simulation_distance, PeakRegion};
use lade::reinit::{divide, select_subspace};
use lade::space::UnitPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

const RUNS: u64 = 10;

/// A property suite returns a summary on success and a reason on failure.
type Suite = fn() -> Result<String, String>;
type Tweak = fn(&mut Settings);

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn battery(id: FunctionId, tweak: impl Fn(&mut Settings) + Sync) -> Vec<RunReport> {
    (0..RUNS)
        .into_par_iter()
        .map(|seed| {
            let mut cfg = RunConfig::new(id, seed);
            tweak(&mut cfg.settings);
            run(&cfg).expect("valid configuration")
        })
        .collect()
}

fn full(id: FunctionId) -> Vec<RunReport> {
    battery(id, |_| {})
}

fn pr(id: FunctionId, eps: f64, reports: &[RunReport]) -> f64 {
    summarize(id, eps, reports).pr
}

fn ar(reports: &[RunReport]) -> f64 {
    distinction_rates(reports.iter().flat_map(|r| &r.distinction_log)).map_or(0.0, |r| r.ar)
}

fn ac1() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for id in [
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
        FunctionId::F5,
    ] {
        let s = summarize(id, 1e-5, &full(id));
        ok &= s.pr == 1.0 && s.sr == 1.0;
        parts.push(format!("{id} PR={:.3} SR={:.3}", s.pr, s.sr));
    }
    check("AC1 F1-F5 at 1e-5: PR = SR = 1", ok, parts.join(", "))
}

fn ac2(f6: &[RunReport]) -> Check {
    let p = pr(FunctionId::F6, 1e-4, f6);
    check(
        "AC2 F6 at 1e-4: PR >= 0.99",
        p >= 0.99,
        format!("PR={p:.3}"),
    )
}

fn ac3(f10: &[RunReport]) -> Check {
    let p = pr(FunctionId::F10, 1e-4, f10);
    check("AC3 F10 at 1e-4: PR = 1", p == 1.0, format!("PR={p:.3}"))
}

fn ac4() -> Check {
    let p7 = pr(FunctionId::F7, 1e-4, &full(FunctionId::F7));
    let p8 = pr(FunctionId::F8, 1e-4, &full(FunctionId::F8));
    let p9 = pr(FunctionId::F9, 1e-4, &full(FunctionId::F9));
    check(
        "AC4 F7 at 1e-4: PR >= 0.95",
        p7 >= 0.95,
        format!("F7 PR={p7:.3}; reported only: F8 PR={p8:.3}, F9 PR={p9:.3}"),
    )
}

fn ac5() -> Check {
    let pts = [
        [0.10, 0.15],
        [0.60, 0.40],
        [0.85, 0.10],
        [0.85, 0.80],
        [0.90, 0.70],
    ];
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    let tree = divide(&refs, 2);
    let cuts: Vec<(usize, f64)> = tree.splits.iter().map(|s| (s.dim, s.cut)).collect();
    let expected = vec![(0, 0.5), (0, 0.75), (1, 0.5), (1, 0.25)];
    // the right strip [0.75, 1] holds x = 0.85, 0.85, 0.90 around 0.875 but
    // their spread 0.05 is below a quarter of the strip, so it stays whole
    let right_kept = tree
        .leaves
        .iter()
        .any(|b| b.lower[0] == 0.75 && b.upper[0] == 1.0 && b.lower[1] == 0.5 && b.upper[1] == 1.0);
    let count_at = |x: f64, y: f64| {
        tree.leaves
            .iter()
            .position(|b| b.contains(&[x, y]))
            .map(|i| tree.gpnum[i])
    };
    let counts_ok = count_at(0.9, 0.9) == Some(2)
        && count_at(0.1, 0.1) == Some(1)
        && count_at(0.6, 0.3) == Some(1)
        && count_at(0.9, 0.1) == Some(1)
        && count_at(0.3, 0.9) == Some(0);
    let ok = tree.len() == 9 && cuts == expected && right_kept && counts_ok;
    check(
        "AC5 subspace division worked example",
        ok,
        format!("{} leaves, cuts {:?}", tree.len(), cuts),
    )
}

/// Evaluates a benchmark in unit coordinates without recording anything.
struct Plain(&'static BenchmarkFunction);

impl Plain {
    fn at(&self, x: &[f64]) -> f64 {
        let raw = self.0.space.from_unit(&UnitPoint::new(x.to_vec())).unwrap();
        self.0.evaluate_raw(&raw)
    }
}

impl Evaluator for Plain {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn evaluate(&mut self, x: &UnitPoint) -> Result<f64, BudgetExhausted> {
        Ok(self.at(x))
    }
    fn best_fitness(&self) -> f64 {
        f64::INFINITY
    }
    fn worst_fitness(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

fn prop_volume_growth() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = BenchmarkFunction::get(FunctionId::F6);
    let eval = Plain(f);
    let (sd, mu) = (simulation_distance(2), enlargement_factor(2));
    let mut sims = 0;
    for trial in 0..20 {
        let mut archive = HistoryArchive::new(2, 1 << 20, sd);
        let anchor: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
        let fa = eval.at(&anchor);
        archive
            .record(UnitPoint::new(anchor.clone()), fa, 0, 0)
            .unwrap();
        let mut region = PeakRegion::new(UnitPoint::new(anchor.clone()), 1, fa, true, 1e-4, 0);
        for _ in 0..15 {
            for _ in 0..200 {
                let p: Vec<f64> = anchor
                    .iter()
                    .map(|a| (a + 0.1 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0))
                    .collect();
                let fp = eval.at(&p);
                archive.record(UnitPoint::new(p), fp, 0, 0).unwrap();
            }
            let before = region.volume();
            let after: f64 = region.simulate(&archive, sd, mu).iter().product();
            sims += 1;
            if before > 0.0 && after < mu.powi(2) * before * (1.0 - 1e-12) {
                return Err(format!("trial {trial}: {before:e} -> {after:e}"));
            }
        }
    }
    Ok(format!("{sims} re-simulations"))
}

/// Compares the sampled hill-valley test with a 10^4-point scan on `pairs`
/// segments whose endpoints satisfy `keep`. Returns the disagreeing pairs.
fn hill_valley_disagreements(
    id: FunctionId,
    pairs: usize,
    keep: impl Fn(f64) -> bool,
    rng: &mut ChaCha8Rng,
) -> Vec<String> {
    let f = BenchmarkFunction::get(id);
    let mut eval = Plain(f);
    let d = f.dim();
    let mut out = Vec::new();
    let mut done = 0;
    while done < pairs {
        let a: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let (fa, fb) = (eval.at(&a), eval.at(&b));
        if !keep(fa) || !keep(fb) {
            continue;
        }
        done += 1;
        let fast = hill_valley(&a, &b, fa, fb, hill_valley_samples(d), &mut eval).unwrap();
        let n = 10_000;
        let dense = (1..=n).all(|i| {
            let t = i as f64 / (n + 1) as f64;
            let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect();
            eval.at(&p) >= fa.min(fb)
        });
        if fast != dense {
            out.push(format!("{id} {a:.3?}-{b:.3?} f=({fa:.2e},{fb:.2e})"));
        }
    }
    out
}

fn prop_hill_valley() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut bad = hill_valley_disagreements(FunctionId::F2, 50, |_| true, &mut rng);
    bad.extend(hill_valley_disagreements(
        FunctionId::F4,
        50,
        |_| true,
        &mut rng,
    ));
    // endpoints high on a hill, as when an exhausted individual is compared
    // with a found peak; informational only
    let mut high = hill_valley_disagreements(FunctionId::F2, 50, |f| f >= 0.5, &mut rng);
    high.extend(hill_valley_disagreements(
        FunctionId::F4,
        50,
        |f| f >= 100.0,
        &mut rng,
    ));
    let note = format!("{}/100 high-fitness pairs agree", 100 - high.len());
    if bad.is_empty() {
        Ok(format!("100 uniform pairs agree, {note}"))
    } else {
        Err(format!(
            "{} of 100 uniform pairs disagree ({}), {note}",
            bad.len(),
            bad.join("; ")
        ))
    }
}

fn prop_neighbors() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for dim in 1..=3 {
        let mut archive = HistoryArchive::new(dim, 10_000, 0.01);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        for p in &pts {
            archive
                .record(UnitPoint::new(p.clone()), 0.0, 0, 0)
                .unwrap();
        }
        for radius in [0.0, 0.003, 0.01, 0.027, 0.1, 0.5] {
            for _ in 0..10 {
                let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let mut got: Vec<usize> = archive
                    .neighbors_within(&c, radius)
                    .iter()
                    .map(|r| r.eval_index)
                    .collect();
                got.sort_unstable();
                let want: Vec<usize> = pts
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| {
                        p.iter()
                            .zip(&c)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            <= radius * radius
                    })
                    .map(|(i, _)| i + 1)
                    .collect();
                if got != want {
                    return Err(format!(
                        "D={dim} r={radius}: {} vs {}",
                        got.len(),
                        want.len()
                    ));
                }
            }
        }
    }
    Ok("D=1..3, 10^4 points".into())
}

/// Brute force over every subset: the accepted set is the unique subset in
/// which a candidate is present iff no better-ranked member lies within the
/// niche radius.
fn count_oracle(cands: &[FoundPeak], gf: f64, radius: f64, eps: f64, nkp: usize) -> usize {
    let mut rank: Vec<usize> = (0..cands.len())
        .filter(|&i| gf - cands[i].fitness <= eps)
        .collect();
    rank.sort_by(|&a, &b| {
        cands[b]
            .fitness
            .total_cmp(&cands[a].fitness)
            .then(a.cmp(&b))
    });
    let n = rank.len();
    let close = |i: usize, j: usize| {
        let (p, q) = (&cands[rank[i]].position, &cands[rank[j]].position);
        p.iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            <= radius
    };
    let fixed: Vec<u32> = (0u32..1 << n)
        .filter(|&s| {
            (0..n).all(|i| {
                let dominated = (0..i).any(|j| s >> j & 1 == 1 && close(i, j));
                (s >> i & 1 == 1) == !dominated
            })
        })
        .collect();
    assert_eq!(fixed.len(), 1, "fixed point is unique");
    (fixed[0].count_ones() as usize).min(nkp)
}

fn prop_count_found() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..500 {
        let n = rng.random_range(0..=10);
        let cands: Vec<FoundPeak> = (0..n)
            .map(|_| FoundPeak {
                position: vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
                // coarse fitness levels make ties common
                fitness: 1.0 - rng.random_range(0..4) as f64 * 5e-4,
                is_global: true,
            })
            .collect();
        let nkp = rng.random_range(1..=6);
        let (radius, eps) = (0.3, 1e-3);
        let got = count_solutions(&cands, 1.0, radius, eps, nkp);
        let want = count_oracle(&cands, 1.0, radius, eps, nkp);
        if got != want {
            return Err(format!("case {case}: {got} vs {want}"));
        }
    }
    Ok("500 candidate sets".into())
}

fn prop_mean_shift() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let bw = 0.1;
    let blob = |c: [f64; 2], rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        let n = Normal::new(0.0, 0.05 * bw).unwrap();
        (0..40)
            .map(|_| vec![c[0] + n.sample(rng), c[1] + n.sample(rng)])
            .collect()
    };
    for (gap, clusters) in [(5.0 * bw, 2), (0.1 * bw, 1)] {
        let mut pts = blob([0.3, 0.5], &mut rng);
        pts.extend(blob([0.3 + gap, 0.5], &mut rng));
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let c = mean_shift(&refs, bw);
        let same_a = c.labels[..40].iter().all(|&l| l == c.labels[0]);
        let same_b = c.labels[40..].iter().all(|&l| l == c.labels[40]);
        if c.modes.len() != clusters || !same_a || !same_b {
            return Err(format!("gap {gap}: {} modes", c.modes.len()));
        }
    }
    Ok("5x separates, 0.1x merges".into())
}

fn prop_select_subspace() -> Result<String, String> {
    let pts = [
        [0.10, 0.15],
        [0.60, 0.40],
        [0.85, 0.10],
        [0.85, 0.80],
        [0.90, 0.70],
    ];
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    let tree = divide(&refs, 2);
    let probs = tree.probabilities();
    let draws = 100_000;
    let mut counts = vec![0usize; tree.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..draws {
        counts[select_subspace(&tree, &mut rng)] += 1;
    }
    for (i, (&c, &p)) in counts.iter().zip(&probs).enumerate() {
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        if (c as f64 - mean).abs() > 3.0 * sigma {
            return Err(format!(
                "leaf {i}: {c} draws, expected {mean:.0} ± {sigma:.0}"
            ));
        }
    }
    Ok(format!("{} leaves, 10^5 draws", tree.len()))
}

fn prop_reruns() -> Result<String, String> {
    let mut cfg = RunConfig::new(FunctionId::F6, 3);
    cfg.budget = Some(30_000);
    let a = run_traced(&cfg).unwrap();
    let b = run_traced(&cfg).unwrap();
    let trace = |o: &lade::engine::RunOutput| {
        let mut v = Vec::new();
        o.archive.write_jsonl(&mut v).unwrap();
        v
    };
    if a.report != b.report || trace(&a) != trace(&b) || a.sds_events != b.sds_events {
        return Err("reruns differ".into());
    }
    Ok("F6 seed 3, 3x10^4 FEs".into())
}

fn ac6() -> Check {
    let suites: [(&str, Suite); 7] = [
        ("a", prop_volume_growth),
        ("b", prop_hill_valley),
        ("c", prop_neighbors),
        ("d", prop_count_found),
        ("e", prop_mean_shift),
        ("f", prop_select_subspace),
        ("g", prop_reruns),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (tag, suite) in suites {
        match suite() {
            Ok(msg) => parts.push(format!("({tag}) ok: {msg}")),
            Err(msg) => {
                ok = false;
                parts.push(format!("({tag}) FAILED: {msg}"));
            }
        }
    }
    check("AC6 property suites (a)-(g)", ok, parts.join("; "))
}

fn ac7(f6: &[RunReport], f10: &[RunReport]) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, base) in [(FunctionId::F6, f6), (FunctionId::F10, f10)] {
        let full_pr = pr(id, 1e-4, base);
        parts.push(format!("{id} full={full_pr:.3}"));
        let variants: [(&str, Tweak); 3] = [
            ("NPR", |s| s.ablation.disable_prss = true),
            ("NPO", |s| s.ablation.disable_pords = true),
            ("NSD", |s| s.ablation.disable_sds = true),
        ];
        for (name, tweak) in variants {
            let p = pr(id, 1e-4, &battery(id, tweak));
            ok &= full_pr >= p;
            parts.push(format!("{name}={p:.3}"));
        }
    }
    check("AC7 ablations never beat full LADE", ok, parts.join(" "))
}

fn ac8(f6: &[RunReport]) -> Check {
    let base = ar(f6);
    let coarse = ar(&battery(FunctionId::F6, |s| s.pdm.lambda = 1.0));
    check(
        "AC8 F6 distinction: AR >= 0.75 and AR(1e-2) >= AR(1) - 0.05",
        base >= 0.75 && base >= coarse - 0.05,
        format!("AR(1e-2)={base:.3} AR(1)={coarse:.3}"),
    )
}

fn main() {
    let start = Instant::now();
    // optional filters such as `AC1 AC6`; flags added by cargo are ignored
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected =
        |tag: &str| wanted.is_empty() || wanted.iter().any(|w| w.eq_ignore_ascii_case(tag));
    let f6 = OnceLock::new();
    let f10 = OnceLock::new();
    let f6 = || f6.get_or_init(|| full(FunctionId::F6)).as_slice();
    let f10 = || f10.get_or_init(|| full(FunctionId::F10)).as_slice();
    let criteria: [(&str, &dyn Fn() -> Check); 8] = [
        ("AC1", &ac1),
        ("AC2", &|| ac2(f6())),
        ("AC3", &|| ac3(f10())),
        ("AC4", &ac4),
        ("AC5", &ac5),
        ("AC6", &ac6),
        ("AC7", &|| ac7(f6(), f10())),
        ("AC8", &|| ac8(f6())),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (tag, criterion) in criteria {
        if !selected(tag) {
            continue;
        }
        let c = criterion();
        if c.passed {
            passed += 1;
        } else {
            failed += 1;
        }
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {} | {}", c.name, c.detail);
    }
    println!(
        "acceptance: {passed} passed, {failed} failed in {:.0}s",
        start.elapsed().as_secs_f64()
    );
}
