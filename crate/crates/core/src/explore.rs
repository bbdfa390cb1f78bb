//! Peak exploration: a single individual evolved by differential evolution
//! against a virtual population sampled around it. The sampling range shrinks
//! on stagnation and the lifetime ends after a fixed number of reductions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LadeError, Result};
use crate::region::PeakRegion;
use crate::space::{UnitBox, UnitPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PepParams {
    /// DE scaling factor F.
    pub scale_factor: f64,
    /// Binomial crossover rate CR.
    pub crossover_rate: f64,
    /// Consecutive non-improving generations before the range is halved.
    pub max_stagnation: usize,
    /// Number of range halvings that ends a lifetime.
    pub lifetime: usize,
    /// Offspring redraws allowed before taboo is ignored for one probe.
    pub retry_cap: usize,
}

impl Default for PepParams {
    fn default() -> Self {
        PepParams {
            scale_factor: 0.5,
            crossover_rate: 0.9,
            max_stagnation: 15,
            lifetime: 10,
            retry_cap: 100,
        }
    }
}

impl PepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(LadeError::InvalidParameter("F must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(LadeError::InvalidParameter("CR must lie in [0,1]".into()));
        }
        if self.max_stagnation == 0 || self.lifetime == 0 || self.retry_cap == 0 {
            return Err(LadeError::InvalidParameter(
                "m_cg, lt and retry_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LifeStatus {
    Alive,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub position: UnitPoint,
    pub fitness: f64,
    /// Archive index of the evaluation that produced `position`.
    pub eval_index: usize,
    pub range: f64,
    pub fail_count: usize,
    pub halvings: usize,
    /// Fitness of X after each generation; entry 0 is the initial point.
    pub trajectory: Vec<f64>,
    pub restriction: Option<UnitBox>,
    pub taboo_enabled: bool,
    pub por_flag: bool,
    pub lifetime_id: usize,
}

impl Individual {
    pub fn new(position: UnitPoint, fitness: f64, eval_index: usize, lifetime_id: usize) -> Self {
        Individual {
            position,
            fitness,
            eval_index,
            range: 1.0,
            fail_count: 0,
            halvings: 0,
            trajectory: vec![fitness],
            restriction: None,
            taboo_enabled: true,
            por_flag: false,
            lifetime_id,
        }
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }

    /// Current generation count (0 before the first offspring).
    pub fn generation(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn bounds(&self) -> UnitBox {
        self.restriction
            .clone()
            .unwrap_or_else(|| UnitBox::unit(self.dim()))
    }
}

/// Two virtual individuals drawn uniformly from the range-`r` box around `x`,
/// intersected with `bounds`.
pub fn virtual_pair<R: Rng + ?Sized>(
    x: &[f64],
    r: f64,
    bounds: &UnitBox,
    rng: &mut R,
) -> (UnitPoint, UnitPoint) {
    let mut draw = || {
        let coords = x
            .iter()
            .enumerate()
            .map(|(d, xd)| {
                let lo = (xd - r / 2.0).max(bounds.lower[d]);
                let hi = (xd + r / 2.0).min(bounds.upper[d]);
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect();
        UnitPoint::new(coords)
    };
    let a = draw();
    let b = draw();
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub point: UnitPoint,
    /// Candidates drawn, including the accepted one.
    pub draws: usize,
    /// True when every draw hit a taboo region and the last one was kept.
    pub retry_cap_hit: bool,
}

/// DE/rand/1-style offspring with binomial crossover. Candidates inside a
/// taboo region are redrawn at no FE cost.
pub fn generate_offspring<R: Rng + ?Sized>(
    ind: &Individual,
    params: &PepParams,
    taboo: &[PeakRegion],
    rng: &mut R,
) -> Offspring {
    let dim = ind.dim();
    let bounds = ind.bounds();
    let mut draws = 0;
    loop {
        draws += 1;
        let (a, b) = virtual_pair(&ind.position, ind.range, &bounds, rng);
        let forced = rng.random_range(0..dim);
        let mut u: Vec<f64> = (0..dim)
            .map(|d| {
                let cross = rng.random::<f64>() <= params.crossover_rate;
                if cross || d == forced {
                    ind.position[d] + params.scale_factor * (a[d] - b[d])
                } else {
                    ind.position[d]
                }
            })
            .collect();
        bounds.clamp(&mut u);
        let blocked = ind.taboo_enabled && taboo.iter().any(|r| r.contains(&u));
        if !blocked || draws >= params.retry_cap {
            return Offspring {
                point: UnitPoint::new(u),
                draws,
                retry_cap_hit: blocked,
            };
        }
    }
}

/// Greedy replacement followed by range adaptation. Equal fitness replaces X
/// but only a strict improvement resets the stagnation counter, so an
/// individual pinned against a boundary still ages.
pub fn select_step(
    ind: &mut Individual,
    u: UnitPoint,
    fu: f64,
    eval_index: usize,
    params: &PepParams,
) -> LifeStatus {
    let improved = fu > ind.fitness;
    if fu >= ind.fitness {
        ind.position = u;
        ind.fitness = fu;
        ind.eval_index = eval_index;
    }
    if improved {
        ind.fail_count = 0;
    } else {
        ind.fail_count += 1;
        if ind.fail_count >= params.max_stagnation {
            ind.range /= 2.0;
            ind.fail_count = 0;
            ind.halvings += 1;
        }
    }
    ind.trajectory.push(ind.fitness);
    if ind.halvings >= params.lifetime {
        LifeStatus::Exhausted
    } else {
        LifeStatus::Alive
    }
}
