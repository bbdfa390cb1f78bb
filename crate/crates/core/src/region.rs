//! Peak-region simulation: estimate an axis-aligned box around every found
//! peak from the search history, and answer taboo-membership and
//! peak-region-relative-distance queries against those boxes.

use std::ops::ControlFlow;

use rustc_hash::{FxHashMap, FxHashSet};

use serde::{Deserialize, Serialize};

use crate::history::{squared_distance, HistoryArchive};
use crate::refine::LocalSearchState;
use crate::space::UnitPoint;

/// Neighbour radius used while growing a peak region: `0.005·(⌊D/5⌋+1)`.
pub fn simulation_distance(dim: usize) -> f64 {
    0.005 * ((dim / 5) as f64 + 1.0)
}

/// Minimum volume growth factor per re-simulation: `1.15 + 0.1·⌊D/5⌋`.
pub fn enlargement_factor(dim: usize) -> f64 {
    1.15 + 0.1 * (dim / 5) as f64
}

/// A found peak together with its simulated region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRegion {
    /// Position of the individual that first located the peak. The region
    /// box is centred here and never moves.
    pub anchor: UnitPoint,
    pub anchor_index: usize,
    pub anchor_fitness: f64,
    /// Best solution on this peak so far (refined by local search).
    pub solution: UnitPoint,
    pub fitness: f64,
    /// Half-widths of the region box, one per dimension.
    pub pd: Vec<f64>,
    pub is_global: bool,
    pub ls: LocalSearchState,
    pub origin_lifetime: usize,
    #[serde(skip)]
    closure: Closure,
}

/// Subordinate closure of the anchor, grown incrementally as the archive
/// grows. Reachability only ever gains records, so earlier work is reused.
#[derive(Debug, Clone, Default, PartialEq)]
struct Closure {
    visited: FxHashSet<usize>,
    /// Per archive grid cell: members, and the records not yet reached.
    cells: FxHashMap<Vec<i32>, CellState>,
    /// Archive records already examined.
    seen: usize,
    /// Per-dimension spread of the members around the anchor.
    md: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct CellState {
    members: Vec<usize>,
    /// Non-members of the cell sorted by ascending fitness, so expansion
    /// from a record only reads the prefix below it.
    pending: Vec<usize>,
    /// Length of the archive bucket already merged into `pending`.
    synced: usize,
}

impl PeakRegion {
    pub fn new(
        anchor: UnitPoint,
        anchor_index: usize,
        fitness: f64,
        is_global: bool,
        sigma_init: f64,
        origin_lifetime: usize,
    ) -> Self {
        let dim = anchor.dim();
        PeakRegion {
            solution: anchor.clone(),
            anchor,
            anchor_index,
            anchor_fitness: fitness,
            fitness,
            pd: vec![0.0; dim],
            is_global,
            ls: LocalSearchState::new(sigma_init),
            origin_lifetime,
            closure: Closure::default(),
        }
    }

    /// Box membership: `|x^d − P^d| ≤ PD^d` in every dimension.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.anchor.iter())
            .zip(&self.pd)
            .all(|((xi, ai), pd)| (xi - ai).abs() <= *pd)
    }

    /// Peak-region relative distance. Zero half-widths are replaced by
    /// `sd/10`.
    pub fn prrd(&self, x: &[f64], sd: f64) -> f64 {
        let floor = sd / 10.0;
        x.iter()
            .zip(self.anchor.iter())
            .zip(&self.pd)
            .map(|((xi, ai), pd)| {
                let w = if *pd > 0.0 { *pd } else { floor };
                ((xi - ai) / w).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.pd.iter().product()
    }

    /// Re-simulates the region from the archive and returns the new
    /// half-widths. Growth is at least `μ^D` in volume whenever the previous
    /// region had non-zero volume.
    pub fn simulate(&mut self, archive: &HistoryArchive, sd: f64, mu: f64) -> &[f64] {
        self.grow_closure(archive, sd);
        let md = self.closure.md.clone();
        self.pd = next_half_widths(&self.pd, &md, sd, mu);
        &self.pd
    }

    /// Number of archive records in the anchor's subordinate closure as of
    /// the last simulation.
    pub fn closure_size(&self) -> usize {
        self.closure.visited.len()
    }

    fn grow_closure(&mut self, archive: &HistoryArchive, sd: f64) {
        let records = archive.records();
        let sd2 = sd * sd;
        let Closure {
            visited,
            cells,
            seen,
            md,
        } = &mut self.closure;
        let mut queue = Vec::new();
        if *seen == 0 {
            let Some(root) = self
                .anchor_index
                .checked_sub(1)
                .filter(|&s| s < records.len())
            else {
                return;
            };
            *md = vec![0.0; self.anchor.dim()];
            visited.insert(root);
            let key = archive.cell_of(&records[root].position);
            cells.entry(key).or_default().members.push(root);
            queue.push(root);
        } else {
            for q in *seen..records.len() {
                if visited.contains(&q) {
                    continue;
                }
                let pos = &records[q].position;
                let near = pos
                    .iter()
                    .zip(self.anchor.iter())
                    .zip(md.iter())
                    .all(|((x, a), m)| (x - a).abs() <= m + sd);
                if !near {
                    continue;
                }
                let fq = records[q].fitness;
                let joined = archive
                    .visit_buckets(pos, sd, |key, _| {
                        let uphill = cells.get(key).is_some_and(|c| {
                            c.members.iter().any(|&p| {
                                records[p].fitness > fq
                                    && squared_distance(&records[p].position, pos) <= sd2
                            })
                        });
                        if uphill {
                            ControlFlow::Break(())
                        } else {
                            ControlFlow::Continue(())
                        }
                    })
                    .is_break();
                if joined {
                    visited.insert(q);
                    cells
                        .entry(archive.cell_of(pos))
                        .or_default()
                        .members
                        .push(q);
                    queue.push(q);
                }
            }
        }
        let by_fitness = |a: &usize, b: &usize| records[*a].fitness.total_cmp(&records[*b].fitness);
        while let Some(cur) = queue.pop() {
            let here = &records[cur];
            for (m, (x, a)) in md
                .iter_mut()
                .zip(here.position.iter().zip(self.anchor.iter()))
            {
                *m = m.max((x - a).abs());
            }
            let _ = archive.visit_buckets(&here.position, sd, |key, bucket| {
                let cell = match cells.get_mut(key) {
                    Some(c) => c,
                    None => cells.entry(key.to_vec()).or_default(),
                };
                if cell.synced < bucket.len() {
                    let fresh = bucket[cell.synced..]
                        .iter()
                        .filter(|n| !visited.contains(n));
                    cell.pending.extend(fresh);
                    cell.pending.sort_by(by_fitness);
                    cell.synced = bucket.len();
                }
                let below = cell
                    .pending
                    .partition_point(|&n| records[n].fitness < here.fitness);
                // compact the unreached part of the prefix in place
                let mut kept = 0;
                for i in 0..below {
                    let n = cell.pending[i];
                    if squared_distance(&records[n].position, &here.position) <= sd2 {
                        visited.insert(n);
                        cell.members.push(n);
                        queue.push(n);
                    } else {
                        cell.pending[kept] = n;
                        kept += 1;
                    }
                }
                cell.pending.drain(kept..below);
                ControlFlow::Continue(())
            });
        }
        *seen = records.len();
    }

    /// Grows this region so that it covers `other`'s box as well.
    pub fn expand_to_cover(&mut self, other: &PeakRegion) {
        for d in 0..self.pd.len() {
            let reach = other.pd[d] + (self.anchor[d] - other.anchor[d]).abs();
            self.pd[d] = self.pd[d].max(reach);
        }
    }
}

/// Half-width update once the closure spread `md` is known.
pub fn next_half_widths(pd: &[f64], md: &[f64], sd: f64, mu: f64) -> Vec<f64> {
    let dim = pd.len() as f64;
    let spread: f64 = md.iter().product();
    let grown: f64 = pd.iter().map(|p| mu * p).product();
    if spread > grown {
        return md.to_vec();
    }
    let floor = sd / 10.0;
    let md: Vec<f64> = md.iter().map(|m| m.max(floor)).collect();
    let ratio: f64 = pd.iter().zip(&md).map(|(p, m)| p / m).product();
    let scale = mu * ratio.powf(1.0 / dim);
    md.iter().map(|m| scale * m).collect()
}

/// Archive slots reachable from the anchor by repeatedly stepping to a
/// record within `sd` that is strictly worse than the current one.
/// The anchor itself is always the first element.
pub fn subordinate_closure(archive: &HistoryArchive, anchor_index: usize, sd: f64) -> Vec<usize> {
    let Some(root) = anchor_index.checked_sub(1).filter(|&s| s < archive.len()) else {
        return Vec::new();
    };
    let records = archive.records();
    let mut visited: FxHashSet<usize> = [root].into_iter().collect();
    let mut set = vec![root];
    let mut cur = 0;
    while cur < set.len() {
        let here = &records[set[cur]];
        for n in archive.neighbor_slots(&here.position, sd) {
            if records[n].fitness < here.fitness && visited.insert(n) {
                set.push(n);
            }
        }
        cur += 1;
    }
    set
}

/// Index of the region with the smallest relative distance to `x`; ties
/// resolve to the lowest index.
pub fn nearest_region(regions: &[PeakRegion], x: &[f64], sd: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in regions.iter().enumerate() {
        let d = r.prrd(x, sd);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}
