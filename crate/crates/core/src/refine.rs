//! Local search on global peaks, demotion of misclassified peaks by fitness
//! gap rate and cluster pruning, and the mean-shift clustering primitive.

use rand::Rng;
use rand_distr::StandardNormal;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{BudgetExhausted, LadeError, Result};
use crate::history::Evaluator;
use crate::region::PeakRegion;
use crate::space::{euclidean, UnitPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LspSign {
    /// `p = 1/(1+e^{-θΔ})`: peaks further from the best fitness are refined
    /// more often.
    ProseConsistent,
    /// `p = 1/(1+e^{+θΔ})`.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LssParams {
    pub sigma_init: f64,
    pub sigma_term: f64,
    /// Non-improving samples tolerated before σ shrinks.
    pub descent_threshold: usize,
    pub bandwidth: f64,
    pub removal_threshold: f64,
    pub lsp_theta: f64,
    pub lsp_sign: LspSign,
    /// Minimum fitness deficit to the cluster best before a refined member is
    /// pruned. Zero prunes on any deficit.
    pub prune_gap_floor: f64,
}

impl Default for LssParams {
    fn default() -> Self {
        LssParams {
            sigma_init: 1e-4,
            sigma_term: 1e-11,
            descent_threshold: 40,
            bandwidth: 0.1,
            removal_threshold: 0.04,
            lsp_theta: 2e8,
            lsp_sign: LspSign::ProseConsistent,
            prune_gap_floor: 5e-8,
        }
    }
}

impl LssParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_term > 0.0 && self.sigma_term < self.sigma_init) {
            return Err(LadeError::InvalidParameter(
                "need 0 < sigma_term < sigma_init".into(),
            ));
        }
        if self.descent_threshold == 0 {
            return Err(LadeError::InvalidParameter("dt must be at least 1".into()));
        }
        if !(self.bandwidth > 0.0) {
            return Err(LadeError::InvalidParameter(
                "bandwidth must be positive".into(),
            ));
        }
        if !(self.prune_gap_floor >= 0.0) {
            return Err(LadeError::InvalidParameter(
                "prune_gap_floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSearchState {
    pub sigma: f64,
    pub sc: usize,
    pub lsum: usize,
    pub lsp: bool,
}

impl LocalSearchState {
    pub fn new(sigma_init: f64) -> Self {
        LocalSearchState {
            sigma: sigma_init,
            sc: 0,
            lsum: 0,
            lsp: false,
        }
    }
}

pub fn lsp_probability(delta: f64, params: &LssParams) -> f64 {
    let z = params.lsp_theta * delta.abs();
    match params.lsp_sign {
        LspSign::ProseConsistent => 1.0 / (1.0 + (-z).exp()),
        LspSign::AsPrinted => 1.0 / (1.0 + z.exp()),
    }
}

pub fn lsp_draw<R: Rng + ?Sized>(f_best: f64, f_gp: f64, params: &LssParams, rng: &mut R) -> bool {
    rng.random::<f64>() < lsp_probability(f_best - f_gp, params)
}

/// Samples per refined peak: `⌈3D·min(|GP|/opnum, 10)⌉`.
pub fn sample_count(dim: usize, gp_count: usize, opnum: usize) -> usize {
    if opnum == 0 {
        return 0;
    }
    let ratio = (gp_count as f64 / opnum as f64).min(10.0);
    (3.0 * dim as f64 * ratio).ceil() as usize
}

/// Fitness gap rate of a peak relative to the archive's fitness range.
pub fn fitness_gap_rate(f_best: f64, f_gp: f64, f_worst: f64) -> f64 {
    if f_best <= f_worst {
        return 0.0;
    }
    (f_best - f_gp) / (f_best - f_worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassOutcome {
    Kept,
    /// The peak was demoted to local by its fitness gap rate.
    Demoted,
}

/// One round of `samples` Gaussian probes around a peak's solution.
pub fn local_search_pass<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    peak: &mut PeakRegion,
    samples: usize,
    params: &LssParams,
    eval: &mut E,
    rng: &mut R,
) -> Result<PassOutcome, BudgetExhausted> {
    for _ in 0..samples {
        let sigma = peak.ls.sigma;
        let probe: Vec<f64> = peak
            .solution
            .iter()
            .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let probe = UnitPoint::new(probe);
        let f = eval.evaluate(&probe)?;
        if f > peak.fitness {
            peak.solution = probe;
            peak.fitness = f;
            peak.ls.sc = 0;
        } else {
            peak.ls.sc += 1;
        }
        if peak.ls.sc > params.descent_threshold {
            peak.ls.sc = 0;
            if peak.ls.sigma > params.sigma_term {
                peak.ls.sigma /= 5.0;
            } else {
                peak.ls.sigma = params.sigma_init;
                peak.ls.lsum += 1;
                let gap = fitness_gap_rate(eval.best_fitness(), peak.fitness, eval.worst_fitness());
                if gap * (peak.ls.lsum as f64).sqrt() > params.removal_threshold {
                    peak.is_global = false;
                    return Ok(PassOutcome::Demoted);
                }
            }
        }
    }
    Ok(PassOutcome::Kept)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LssReport {
    pub refined: usize,
    pub demoted: Vec<usize>,
    pub pruned: Vec<usize>,
}

/// One full local-search invocation over every global peak.
pub fn run_local_search<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    peaks: &mut [PeakRegion],
    params: &LssParams,
    eval: &mut E,
    rng: &mut R,
) -> Result<LssReport, BudgetExhausted> {
    let mut report = LssReport::default();
    let gp: Vec<usize> = (0..peaks.len()).filter(|&i| peaks[i].is_global).collect();
    if gp.is_empty() {
        return Ok(report);
    }
    let f_best = eval.best_fitness();
    for &i in &gp {
        peaks[i].ls.lsp = lsp_draw(f_best, peaks[i].fitness, params, rng);
    }
    let opnum = gp.iter().filter(|&&i| peaks[i].ls.lsp).count();
    if opnum == 0 {
        return Ok(report);
    }
    let samples = sample_count(eval.dim(), gp.len(), opnum);
    for &i in &gp {
        if !peaks[i].ls.lsp {
            continue;
        }
        report.refined += 1;
        if local_search_pass(&mut peaks[i], samples, params, eval, rng)? == PassOutcome::Demoted {
            report.demoted.push(i);
        }
    }
    report.pruned = prune_clusters(peaks, params);
    Ok(report)
}

/// Demotes refined members of a global-peak cluster whose best member was not
/// refined this round, folding their regions into the best member's region.
/// Returns the demoted peak indices.
pub fn prune_clusters(peaks: &mut [PeakRegion], params: &LssParams) -> Vec<usize> {
    let gp: Vec<usize> = (0..peaks.len()).filter(|&i| peaks[i].is_global).collect();
    if !gp.iter().any(|&i| peaks[i].ls.lsp && peaks[i].ls.lsum >= 1) {
        return Vec::new();
    }
    let points: Vec<&[f64]> = gp.iter().map(|&i| peaks[i].solution.coords()).collect();
    let clusters = mean_shift(&points, params.bandwidth);
    let mut removed = Vec::new();
    for c in 0..clusters.modes.len() {
        let members: Vec<usize> = gp
            .iter()
            .zip(&clusters.labels)
            .filter(|(_, l)| **l == c)
            .map(|(i, _)| *i)
            .collect();
        let mut best = members[0];
        for &m in &members[1..] {
            if peaks[m].fitness > peaks[best].fitness {
                best = m;
            }
        }
        if peaks[best].ls.lsp {
            continue;
        }
        let f_b = peaks[best].fitness;
        for &m in &members {
            let p = &peaks[m];
            if m == best || !p.ls.lsp || p.ls.lsum == 0 || f_b - p.fitness <= params.prune_gap_floor
            {
                continue;
            }
            peaks[m].is_global = false;
            let other = peaks[m].clone();
            peaks[best].expand_to_cover(&other);
            removed.push(m);
        }
    }
    removed.sort_unstable();
    removed
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster modes in lexicographic order.
    pub modes: Vec<Vec<f64>>,
    /// Cluster index for each input point.
    pub labels: Vec<usize>,
}

const SHIFT_TOL: f64 = 1e-6;
const SHIFT_MAX_ITER: usize = 200;

/// Gaussian-kernel mean shift. Points are processed in lexicographic order so
/// the result does not depend on input order.
pub fn mean_shift(points: &[&[f64]], bandwidth: f64) -> Clustering {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(points[a], points[b]));
    let sorted: Vec<&[f64]> = order.iter().map(|&i| points[i]).collect();
    let inv = -1.0 / (2.0 * bandwidth * bandwidth);

    // A trajectory that comes within `snap` of any point on an earlier
    // trajectory follows it to the same mode. Points are visited in sorted
    // order, so the shortcut does not break order independence.
    let snap = bandwidth / 20.0;
    let mut trail = Trail::new(snap);
    let mut finals: Vec<Vec<f64>> = Vec::new();
    let mut shifted: Vec<Vec<f64>> = Vec::with_capacity(n);
    for start in &sorted {
        let mut y = start.to_vec();
        let mut path = vec![y.clone()];
        let mut snapped = None;
        for _ in 0..SHIFT_MAX_ITER {
            if let Some(m) = trail.find(&y) {
                snapped = Some(m);
                break;
            }
            // accumulate the shift rather than the weighted mean so that
            // a point already at its mode stays there exactly
            let mut num = vec![0.0; y.len()];
            let mut den = 0.0;
            for p in &sorted {
                let d2: f64 = y.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let w = (d2 * inv).exp();
                den += w;
                for ((acc, v), yd) in num.iter_mut().zip(p.iter()).zip(&y) {
                    *acc += w * (v - yd);
                }
            }
            if den == 0.0 {
                break;
            }
            let shift: Vec<f64> = num.iter().map(|v| v / den).collect();
            for (yd, s) in y.iter_mut().zip(&shift) {
                *yd += s;
            }
            path.push(y.clone());
            if shift.iter().map(|s| s * s).sum::<f64>().sqrt() < SHIFT_TOL {
                break;
            }
        }
        let mode = snapped.unwrap_or_else(|| {
            finals.push(y);
            finals.len() - 1
        });
        for p in path {
            trail.insert(p, mode);
        }
        shifted.push(finals[mode].clone());
    }

    let mut mode_order: Vec<usize> = (0..n).collect();
    mode_order.sort_by(|&a, &b| lex_cmp(&shifted[a], &shifted[b]));
    let mut modes: Vec<Vec<f64>> = Vec::new();
    let mut sorted_labels = vec![0; n];
    for &k in &mode_order {
        let y = &shifted[k];
        match modes.iter().position(|m| euclidean(m, y) < bandwidth / 2.0) {
            Some(c) => sorted_labels[k] = c,
            None => {
                sorted_labels[k] = modes.len();
                modes.push(y.clone());
            }
        }
    }
    let mut labels = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        labels[orig] = sorted_labels[pos];
    }
    Clustering { modes, labels }
}

/// Grid index over trajectory points, each tagged with the mode it reached.
struct Trail {
    cell: f64,
    points: Vec<(Vec<f64>, usize)>,
    grid: FxHashMap<Vec<i64>, Vec<usize>>,
}

impl Trail {
    fn new(cell: f64) -> Self {
        Trail {
            cell,
            points: Vec::new(),
            grid: FxHashMap::default(),
        }
    }

    fn key(&self, y: &[f64]) -> Vec<i64> {
        y.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, y: Vec<f64>, mode: usize) {
        let k = self.key(&y);
        self.grid.entry(k).or_default().push(self.points.len());
        self.points.push((y, mode));
    }

    /// Mode of the first recorded point within one cell edge of `y`.
    fn find(&self, y: &[f64]) -> Option<usize> {
        let base = self.key(y);
        let dim = base.len();
        let mut offset = vec![-1i64; dim];
        let mut key = base.clone();
        loop {
            for d in 0..dim {
                key[d] = base[d] + offset[d];
            }
            if let Some(bucket) = self.grid.get(&key) {
                for &i in bucket {
                    let (p, m) = &self.points[i];
                    if euclidean(p, y) < self.cell {
                        return Some(*m);
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == dim {
                    return None;
                }
                offset[d] += 1;
                if offset[d] <= 1 {
                    break;
                }
                offset[d] = -1;
                d += 1;
            }
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
