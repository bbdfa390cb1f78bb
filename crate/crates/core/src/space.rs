//! Box-constrained search spaces and the mapping onto the unit cube.
//!
//! Every distance, radius and half-width used by the optimizer is measured in
//! unit-cube coordinates; fitness is always evaluated on raw coordinates.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{LadeError, Result};

/// A point of the normalized search space `[0,1]^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitPoint(Vec<f64>);

impl UnitPoint {
    /// Builds a unit point, clamping every coordinate into `[0,1]`.
    pub fn new(mut coords: Vec<f64>) -> Self {
        for c in &mut coords {
            *c = c.clamp(0.0, 1.0);
        }
        UnitPoint(coords)
    }

    pub fn splat(dim: usize, value: f64) -> Self {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance in unit-cube coordinates.
    pub fn distance(&self, other: &[f64]) -> f64 {
        euclidean(&self.0, other)
    }
}

impl Deref for UnitPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for UnitPoint {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A maximization problem over a box-constrained domain.
pub trait Objective: Sync {
    fn space(&self) -> &SearchSpace;

    /// Fitness at raw coordinates; larger is better.
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Raw box bounds of an objective function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(LadeError::InvalidSpace(
                "dimension must be at least 1".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(LadeError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(d) = (0..lower.len()).find(|&d| !(upper[d] > lower[d])) {
            return Err(LadeError::InvalidSpace(format!(
                "upper bound {} is not greater than lower bound {} in dimension {d}",
                upper[d], lower[d]
            )));
        }
        Ok(SearchSpace { lower, upper })
    }

    /// The same interval `[lower, upper]` in every one of `dim` dimensions.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    /// Maps raw coordinates onto the unit cube. Out-of-bound inputs are clamped.
    pub fn to_unit(&self, raw: &[f64]) -> Result<UnitPoint> {
        self.check_dim(raw.len())?;
        Ok(UnitPoint::new(
            raw.iter()
                .enumerate()
                .map(|(d, x)| (x - self.lower[d]) / self.width(d))
                .collect(),
        ))
    }

    pub fn from_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        Ok(self.from_unit_unchecked(u))
    }

    /// Inverse mapping for callers that already guarantee `u.len() == dim`.
    pub(crate) fn from_unit_unchecked(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(d, x)| self.lower[d] + x * self.width(d))
            .collect()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(LadeError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Axis-aligned box inside the unit cube, used for subspace restrictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl UnitBox {
    pub fn unit(dim: usize) -> Self {
        UnitBox {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn edge(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn min_edge(&self) -> f64 {
        (0..self.dim())
            .map(|d| self.edge(d))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.edge(d)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, v)| *v >= self.lower[d] && *v <= self.upper[d])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }
}
