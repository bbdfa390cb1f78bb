//! Peak ratio, success rate, peak counting, and distinction-quality rates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkFunction, FunctionId};
use crate::engine::{DistinctionEntry, FoundPeak, RunReport};
use crate::space::{euclidean, UnitPoint};

/// Counts distinct global optima among `found` at accuracy `eps`: greedy by
/// fitness, accepting a solution within `eps` of the optimum that is further
/// than the niche radius from everything already accepted.
pub fn count_found(found: &[FoundPeak], function: FunctionId, eps: f64) -> usize {
    let f = BenchmarkFunction::get(function);
    count_solutions(found, f.global_fitness, f.niche_radius, eps, f.nkp)
}

pub fn count_solutions(
    found: &[FoundPeak],
    global_fitness: f64,
    niche_radius: f64,
    eps: f64,
    nkp: usize,
) -> usize {
    let mut order: Vec<&FoundPeak> = found.iter().collect();
    order.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    let mut accepted: Vec<&[f64]> = Vec::new();
    for s in order {
        if accepted.len() == nkp {
            break;
        }
        if global_fitness - s.fitness > eps {
            break;
        }
        if accepted
            .iter()
            .all(|a| euclidean(a, &s.position) > niche_radius)
        {
            accepted.push(&s.position);
        }
    }
    accepted.len()
}

/// Peak ratio: found optima over all known optima across runs.
pub fn pr(npf: &[usize], nkp: usize) -> f64 {
    if npf.is_empty() || nkp == 0 {
        return 0.0;
    }
    npf.iter().sum::<usize>() as f64 / (nkp * npf.len()) as f64
}

/// Success rate: fraction of runs that found every optimum.
pub fn sr(npf: &[usize], nkp: usize) -> f64 {
    if npf.is_empty() {
        return 0.0;
    }
    npf.iter().filter(|&&n| n >= nkp).count() as f64 / npf.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinctionRates {
    /// Correct distinctions over all labelled distinctions.
    pub ar: f64,
    /// Global peaks labelled as local.
    pub tnr: f64,
    /// Local peaks labelled as global.
    pub fpr: f64,
    pub total: usize,
}

/// Accuracy and misclassification rates over the labelled entries of one or
/// more distinction logs. `None` when nothing is labelled.
pub fn distinction_rates<'a, I>(entries: I) -> Option<DistinctionRates>
where
    I: IntoIterator<Item = &'a DistinctionEntry>,
{
    let (mut correct, mut missed_global, mut false_global) = (0usize, 0usize, 0usize);
    for e in entries {
        let Some(truth) = e.truly_global else {
            continue;
        };
        match (truth, e.predicted_global) {
            (true, false) => missed_global += 1,
            (false, true) => false_global += 1,
            _ => correct += 1,
        }
    }
    let total = correct + missed_global + false_global;
    (total > 0).then(|| DistinctionRates {
        ar: correct as f64 / total as f64,
        tnr: missed_global as f64 / total as f64,
        fpr: false_global as f64 / total as f64,
        total,
    })
}

/// Ground truth for whether a point lies on a global peak.
pub trait TruthLabeler: Sync {
    fn is_global(&self, x: &UnitPoint) -> bool;
}

/// Labels a point as global when it sits on the hill of a known optimum: a
/// dense scan of the segment to one of its nearest optima never drops below
/// the lower of the two end values.
pub struct BenchLabeler {
    function: &'static BenchmarkFunction,
    samples: usize,
    candidates: usize,
}

impl BenchLabeler {
    pub fn new(id: FunctionId) -> Self {
        BenchLabeler {
            function: BenchmarkFunction::get(id),
            samples: 64,
            candidates: 8,
        }
    }

    pub fn is_global_raw(&self, raw: &[f64]) -> bool {
        let f = self.function;
        let mut optima: Vec<(f64, &Vec<f64>)> =
            f.optima().iter().map(|o| (euclidean(o, raw), o)).collect();
        optima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let floor = f.evaluate_raw(raw).min(f.global_fitness);
        let n = self.samples;
        optima.iter().take(self.candidates).any(|(_, opt)| {
            (1..=n).all(|i| {
                let t = i as f64 / (n + 1) as f64;
                let p: Vec<f64> = raw
                    .iter()
                    .zip(opt.iter())
                    .map(|(a, b)| a + t * (b - a))
                    .collect();
                f.evaluate_raw(&p) >= floor
            })
        })
    }
}

impl TruthLabeler for BenchLabeler {
    fn is_global(&self, x: &UnitPoint) -> bool {
        let raw = self
            .function
            .space
            .from_unit(x)
            .expect("labeler dimension matches the function");
        self.is_global_raw(&raw)
    }
}

/// Aggregate results of a batch of runs on one function at one accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub function: FunctionId,
    pub eps: f64,
    pub runs: usize,
    pub npf: Vec<usize>,
    pub pr: f64,
    pub sr: f64,
    pub mean_fe: f64,
    pub rates: Option<DistinctionRates>,
}

pub fn summarize(function: FunctionId, eps: f64, reports: &[RunReport]) -> Summary {
    let nkp = BenchmarkFunction::get(function).nkp;
    let npf: Vec<usize> = reports
        .iter()
        .map(|r| count_found(&r.found, function, eps))
        .collect();
    let mean_fe = if reports.is_empty() {
        0.0
    } else {
        reports.iter().map(|r| r.fe_used as f64).sum::<f64>() / reports.len() as f64
    };
    Summary {
        function,
        eps,
        runs: reports.len(),
        pr: pr(&npf, nkp),
        sr: sr(&npf, nkp),
        npf,
        mean_fe,
        rates: distinction_rates(reports.iter().flat_map(|r| &r.distinction_log)),
    }
}

pub const CSV_HEADER: &str = "fid,eps,runs,PR,SR,mean_FE,AR,TNR,FPR";

/// CSV table with one row per summary. Missing rates are left empty.
pub fn to_csv(rows: &[Summary]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in rows {
        let rate = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:e},{},{:.3},{:.3},{:.1},{},{},{}",
            s.function,
            s.eps,
            s.runs,
            s.pr,
            s.sr,
            s.mean_fe,
            rate(s.rates.map(|r| r.ar)),
            rate(s.rates.map(|r| r.tnr)),
            rate(s.rates.map(|r| r.fpr)),
        );
    }
    out
}
