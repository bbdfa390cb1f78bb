//! Append-only archive of every fitness evaluation.
//!
//! The archive owns the FE budget: every evaluation, whether it comes from
//! peak exploration, a hill-valley probe or local search, passes through
//! [`HistoryArchive::record`]. Records are bucketed in a uniform grid whose
//! cell edge equals the peak-region simulation distance, so the fixed-radius
//! queries issued while simulating peak regions touch only `3^D` cells.

use rustc_hash::FxHashMap;
use std::io::{self, Write};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{BudgetExhausted, LadeError, Result};
use crate::space::{Objective, UnitPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// 1-based FE counter.
    pub eval_index: usize,
    pub lifetime_id: usize,
    pub generation: usize,
    pub fitness: f64,
    pub position: UnitPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetState {
    pub used: usize,
    pub max: usize,
}

impl BudgetState {
    pub fn remaining(&self) -> usize {
        self.max - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.max
    }
}

#[derive(Debug, Clone)]
pub struct HistoryArchive {
    dim: usize,
    records: Vec<EvalRecord>,
    budget: BudgetState,
    cell: f64,
    grid: FxHashMap<Vec<i32>, Vec<usize>>,
    best: Option<usize>,
    worst: Option<usize>,
}

impl HistoryArchive {
    /// `cell_edge` is the grid resolution in unit-cube coordinates.
    pub fn new(dim: usize, max_evals: usize, cell_edge: f64) -> Self {
        assert!(cell_edge > 0.0, "grid cell edge must be positive");
        HistoryArchive {
            dim,
            records: Vec::new(),
            budget: BudgetState {
                used: 0,
                max: max_evals,
            },
            cell: cell_edge,
            grid: FxHashMap::default(),
            best: None,
            worst: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> BudgetState {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    /// Looks a record up by its 1-based evaluation index.
    pub fn get(&self, eval_index: usize) -> Option<&EvalRecord> {
        eval_index.checked_sub(1).and_then(|i| self.records.get(i))
    }

    /// Appends an evaluation and charges one FE.
    pub fn record(
        &mut self,
        position: UnitPoint,
        fitness: f64,
        lifetime_id: usize,
        generation: usize,
    ) -> Result<usize, BudgetExhausted> {
        if self.budget.exhausted() {
            return Err(BudgetExhausted);
        }
        debug_assert_eq!(position.dim(), self.dim);
        let slot = self.records.len();
        let eval_index = slot + 1;
        self.grid
            .entry(self.cell_of(&position))
            .or_default()
            .push(slot);
        match self.best {
            Some(b) if self.records[b].fitness >= fitness => {}
            _ => self.best = Some(slot),
        }
        match self.worst {
            Some(w) if self.records[w].fitness <= fitness => {}
            _ => self.worst = Some(slot),
        }
        self.records.push(EvalRecord {
            eval_index,
            lifetime_id,
            generation,
            fitness,
            position,
        });
        self.budget.used += 1;
        Ok(eval_index)
    }

    /// Best record; ties go to the earliest evaluation.
    pub fn best(&self) -> Result<&EvalRecord> {
        self.best
            .map(|i| &self.records[i])
            .ok_or(LadeError::EmptyArchive)
    }

    /// Worst record; ties go to the earliest evaluation.
    pub fn worst(&self) -> Result<&EvalRecord> {
        self.worst
            .map(|i| &self.records[i])
            .ok_or(LadeError::EmptyArchive)
    }

    /// Every record within Euclidean distance `radius` of `center`.
    pub fn neighbors_within(&self, center: &[f64], radius: f64) -> Vec<&EvalRecord> {
        self.neighbor_slots(center, radius)
            .into_iter()
            .map(|i| &self.records[i])
            .collect()
    }

    /// Same as [`neighbors_within`](Self::neighbors_within) but yields
    /// 0-based archive slots (`eval_index - 1`).
    pub fn neighbor_slots(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        let _ = self.visit_buckets(center, radius, |_, bucket| {
            out.extend(
                bucket
                    .iter()
                    .copied()
                    .filter(|&i| squared_distance(&self.records[i].position, center) <= r2),
            );
            ControlFlow::Continue(())
        });
        out.sort_unstable();
        out
    }

    /// Calls `f` with the key and slots of every grid cell that may hold a
    /// record within `radius` of `center`. Slots are not distance filtered.
    /// Stops early when `f` breaks.
    pub fn visit_buckets<F>(&self, center: &[f64], radius: f64, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&[i32], &[usize]) -> ControlFlow<()>,
    {
        let reach = (radius / self.cell).ceil() as i64;
        let span = (2 * reach + 1) as f64;
        let base = self.cell_of(center);
        if span.powi(self.dim as i32) > self.grid.len() as f64 {
            for (key, bucket) in &self.grid {
                let near = key
                    .iter()
                    .zip(&base)
                    .all(|(k, b)| (*k as i64 - *b as i64).abs() <= reach);
                if near {
                    f(key, bucket)?;
                }
            }
            return ControlFlow::Continue(());
        }
        let mut key = base.clone();
        let mut offset = vec![-reach; self.dim];
        loop {
            for d in 0..self.dim {
                key[d] = base[d] + offset[d] as i32;
            }
            if let Some(bucket) = self.grid.get(&key) {
                f(&key, bucket)?;
            }
            // odometer increment over the (2*reach+1)^D neighbourhood
            let mut d = 0;
            loop {
                if d == self.dim {
                    return ControlFlow::Continue(());
                }
                offset[d] += 1;
                if offset[d] <= reach {
                    break;
                }
                offset[d] = -reach;
                d += 1;
            }
        }
    }

    /// Grid key of the cell holding `p`.
    pub fn cell_of(&self, p: &[f64]) -> Vec<i32> {
        p.iter().map(|x| (x / self.cell).floor() as i32).collect()
    }

    /// Writes one JSON object per record, in evaluation order, with fields
    /// `eval_index, lifetime_id, generation, fitness, position`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Budgeted fitness oracle used by the search operators. Every call to
/// `evaluate` costs one FE.
pub trait Evaluator {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, x: &UnitPoint) -> Result<f64, BudgetExhausted>;
    fn best_fitness(&self) -> f64;
    fn worst_fitness(&self) -> f64;
}

/// Evaluates an objective and records every evaluation in an archive.
pub struct Recorder<'a, P: Objective + ?Sized> {
    pub problem: &'a P,
    pub archive: &'a mut HistoryArchive,
    pub lifetime_id: usize,
    pub generation: usize,
}

impl<'a, P: Objective + ?Sized> Recorder<'a, P> {
    pub fn new(problem: &'a P, archive: &'a mut HistoryArchive, lifetime_id: usize) -> Self {
        Recorder {
            problem,
            archive,
            lifetime_id,
            generation: 0,
        }
    }

    /// Like `evaluate` but also returns the new record's `eval_index`.
    pub fn evaluate_indexed(&mut self, x: &UnitPoint) -> Result<(f64, usize), BudgetExhausted> {
        if self.archive.budget().exhausted() {
            return Err(BudgetExhausted);
        }
        let raw = self.problem.space().from_unit_unchecked(x);
        let f = self.problem.evaluate(&raw);
        let idx = self
            .archive
            .record(x.clone(), f, self.lifetime_id, self.generation)?;
        Ok((f, idx))
    }
}

impl<P: Objective + ?Sized> Evaluator for Recorder<'_, P> {
    fn dim(&self) -> usize {
        self.archive.dim()
    }

    fn evaluate(&mut self, x: &UnitPoint) -> Result<f64, BudgetExhausted> {
        self.evaluate_indexed(x).map(|(f, _)| f)
    }

    fn best_fitness(&self) -> f64 {
        self.archive.best().map_or(f64::NEG_INFINITY, |r| r.fitness)
    }

    fn worst_fitness(&self) -> f64 {
        self.archive.worst().map_or(f64::INFINITY, |r| r.fitness)
    }
}
