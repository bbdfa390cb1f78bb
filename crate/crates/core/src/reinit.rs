//! Restart placement after a lifetime ends: potential optimal regions
//! between clustered peaks, roulette selection over a subspace division of
//! the found global peaks, or a uniform random restart.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::refine::fitness_gap_rate;
use crate::region::PeakRegion;
use crate::space::{euclidean, UnitBox, UnitPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinitParams {
    /// Exponent scale of the SDS probability sigmoid.
    pub sdp_exponent: f64,
    /// Leaves with a shorter minimum edge disable taboo checks.
    pub taboo_min_edge: f64,
}

impl Default for ReinitParams {
    fn default() -> Self {
        ReinitParams {
            sdp_exponent: 20.0,
            taboo_min_edge: 0.125,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialRegion {
    pub center: UnitPoint,
    pub radius: f64,
    pub source_cluster: Vec<usize>,
    pub resolved: bool,
}

impl PotentialRegion {
    /// Two regions are the same when their centres are within `bandwidth/2`.
    pub fn same_as(&self, other: &PotentialRegion, bandwidth: f64) -> bool {
        euclidean(&self.center, &other.center) < bandwidth / 2.0
    }
}

/// Where and how the next lifetime starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Restart {
    pub position: UnitPoint,
    pub range: f64,
    pub restriction: Option<UnitBox>,
    pub taboo_enabled: bool,
    pub por_flag: bool,
    pub kind: RestartKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestartKind {
    Random,
    Pords,
    Sds,
}

/// Checks whether the cluster holding the just-located peak marks a potential
/// optimal region. `cluster` lists peak indices; `f_best`/`f_worst` are the
/// archive extremes.
pub fn pords_check(
    cluster: &[usize],
    peaks: &[PeakRegion],
    f_best: f64,
    f_worst: f64,
    removal_threshold: f64,
) -> Option<PotentialRegion> {
    if cluster.len() < 2 {
        return None;
    }
    let best = cluster.iter().copied().reduce(|b, i| {
        if peaks[i].fitness > peaks[b].fitness {
            i
        } else {
            b
        }
    })?;
    if fitness_gap_rate(f_best, peaks[best].fitness, f_worst) >= removal_threshold {
        return None;
    }
    if cluster
        .iter()
        .any(|&i| peaks[i].is_global && !peaks[i].ls.lsp)
    {
        return None;
    }
    if !cluster.iter().any(|&i| peaks[i].ls.lsum >= 1) {
        return None;
    }
    let dim = peaks[cluster[0]].solution.dim();
    let mut center = vec![0.0; dim];
    for &i in cluster {
        for (c, x) in center.iter_mut().zip(peaks[i].solution.iter()) {
            *c += x;
        }
    }
    for c in center.iter_mut() {
        *c /= cluster.len() as f64;
    }
    let radius = cluster
        .iter()
        .flat_map(|&i| {
            let center = &center;
            peaks[i]
                .solution
                .iter()
                .zip(center)
                .map(|(x, c)| (c - x).abs() / 2.0)
        })
        .fold(0.0, f64::max);
    Some(PotentialRegion {
        center: UnitPoint::new(center),
        radius,
        source_cluster: cluster.to_vec(),
        resolved: false,
    })
}

/// Restart at the region centre with taboo disabled. `min_range` guards
/// against a zero range when all member peaks coincide.
pub fn pords_reinit(region: &PotentialRegion, min_range: f64) -> Restart {
    Restart {
        position: region.center.clone(),
        range: region.radius.max(min_range),
        restriction: None,
        taboo_enabled: false,
        por_flag: true,
        kind: RestartKind::Pords,
    }
}

pub fn sdp_probability(gp_count: usize, exponent: f64) -> f64 {
    1.0 / (1.0 + (-exponent * gp_count as f64).exp())
}

pub fn sdp_draw<R: Rng + ?Sized>(gp_count: usize, exponent: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < sdp_probability(gp_count, exponent)
}

/// One accepted midpoint split of a per-dimension interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceTree {
    pub leaves: Vec<UnitBox>,
    pub gpnum: Vec<usize>,
    /// Accepted splits in the order they were made.
    pub splits: Vec<Split>,
}

impl SubspaceTree {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// Roulette weights `SN^(−gpnum)`, normalised.
    pub fn probabilities(&self) -> Vec<f64> {
        let ln_sn = (self.len() as f64).ln();
        let logs: Vec<f64> = self.gpnum.iter().map(|&g| -(g as f64) * ln_sn).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }
}

/// Divides the unit cube by recursive midpoint bisection. Each dimension is
/// bisected over the projection of the global peaks onto it: an interval is
/// cut at its midpoint when peaks lie strictly on both sides and their spread
/// exceeds a quarter of the interval. Leaves are the products of the
/// per-dimension intervals.
pub fn divide(gps: &[&[f64]], dim: usize) -> SubspaceTree {
    let mut splits = Vec::new();
    let mut intervals: Vec<Vec<(f64, f64)>> = Vec::with_capacity(dim);
    for d in 0..dim {
        let coords: Vec<f64> = gps.iter().map(|p| p[d]).collect();
        let mut out = Vec::new();
        bisect(&coords, d, 0.0, 1.0, &mut out, &mut splits);
        intervals.push(out);
    }

    let mut leaves = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        leaves.push(UnitBox {
            lower: (0..dim).map(|d| intervals[d][idx[d]].0).collect(),
            upper: (0..dim).map(|d| intervals[d][idx[d]].1).collect(),
        });
        let mut d = dim;
        loop {
            if d == 0 {
                let gpnum = leaves.iter().map(|l| count_in(l, gps)).collect();
                return SubspaceTree {
                    leaves,
                    gpnum,
                    splits,
                };
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < intervals[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn bisect(
    coords: &[f64],
    dim: usize,
    lo: f64,
    hi: f64,
    out: &mut Vec<(f64, f64)>,
    splits: &mut Vec<Split>,
) {
    let inside: Vec<f64> = coords
        .iter()
        .copied()
        .filter(|&x| in_interval(x, lo, hi))
        .collect();
    let mid = 0.5 * (lo + hi);
    let below = inside.iter().any(|&x| x < mid);
    let above = inside.iter().any(|&x| x > mid);
    let spread = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - inside.iter().copied().fold(f64::INFINITY, f64::min);
    if below && above && spread > (hi - lo) / 4.0 {
        splits.push(Split {
            dim,
            lower: lo,
            upper: hi,
            cut: mid,
        });
        bisect(coords, dim, lo, mid, out, splits);
        bisect(coords, dim, mid, hi, out, splits);
    } else {
        out.push((lo, hi));
    }
}

/// Half-open membership, closed at the top of the cube.
fn in_interval(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && (x < hi || (hi >= 1.0 && x <= hi))
}

fn count_in(leaf: &UnitBox, gps: &[&[f64]]) -> usize {
    gps.iter()
        .filter(|p| (0..leaf.dim()).all(|d| in_interval(p[d], leaf.lower[d], leaf.upper[d])))
        .count()
}

pub fn select_subspace<R: Rng + ?Sized>(tree: &SubspaceTree, rng: &mut R) -> usize {
    let probs = tree.probabilities();
    let mut u = rng.random::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

pub fn sds_reinit<R: Rng + ?Sized>(leaf: &UnitBox, params: &ReinitParams, rng: &mut R) -> Restart {
    let position = (0..leaf.dim())
        .map(|d| {
            if leaf.upper[d] > leaf.lower[d] {
                rng.random_range(leaf.lower[d]..leaf.upper[d])
            } else {
                leaf.lower[d]
            }
        })
        .collect();
    Restart {
        position: UnitPoint::new(position),
        range: 1.0,
        restriction: Some(leaf.clone()),
        taboo_enabled: leaf.min_edge() >= params.taboo_min_edge,
        por_flag: false,
        kind: RestartKind::Sds,
    }
}

pub fn random_reinit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Restart {
    let position = (0..dim).map(|_| rng.random::<f64>()).collect();
    Restart {
        position: UnitPoint::new(position),
        range: 1.0,
        restriction: None,
        taboo_enabled: true,
        por_flag: false,
        kind: RestartKind::Random,
    }
}
