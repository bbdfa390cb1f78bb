//! Peak distinction: decide whether an exhausted individual sits on a new
//! global peak, a new local peak, or a peak that is already known.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BudgetExhausted, LadeError, Result};
use crate::explore::Individual;
use crate::history::Evaluator;
use crate::region::{nearest_region, PeakRegion};
use crate::space::UnitPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdmParams {
    /// Scaling coefficient λ applied to the fitness gap to the best record.
    pub lambda: f64,
    /// Place hill-valley samples at random fractions instead of evenly.
    pub random_hill_valley: bool,
}

impl Default for PdmParams {
    fn default() -> Self {
        PdmParams {
            lambda: 1e-2,
            random_hill_valley: false,
        }
    }
}

impl PdmParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(LadeError::InvalidParameter(
                "lambda must lie in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NewGlobal,
    NewLocal,
    Found,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distinction {
    pub verdict: Verdict,
    pub sfd: f64,
    pub fir: f64,
    /// Region compared against by the hill-valley test, if any.
    pub nearest_region: Option<usize>,
}

/// Scaled fitness distance to the best record.
pub fn sfd(f_best: f64, f_x: f64, lambda: f64) -> f64 {
    lambda * (f_best - f_x).abs()
}

/// Length of the improvement window: `80·2^(⌊D/10⌋+1)` generations.
pub fn improvement_window(dim: usize) -> usize {
    80 << (dim / 10 + 1)
}

/// Samples per hill-valley test: `10 + 2D`.
pub fn hill_valley_samples(dim: usize) -> usize {
    10 + 2 * dim
}

/// Average fitness improvement per generation over the window that ends
/// `m_cg` generations before the lifetime's last generation.
///
/// `trajectory[g]` is the fitness after generation `g`, with the initial
/// point at index 0 standing in for generation 1 of a one-based count.
pub fn fir(trajectory: &[f64], m_cg: usize, dim: usize) -> f64 {
    if trajectory.len() < m_cg + 2 {
        return 0.0;
    }
    // one-based generation numbers: G = len, lg = G - m_cg >= 2
    let last = trajectory.len() - m_cg;
    let first = last.saturating_sub(improvement_window(dim)).max(1);
    let span = (last - first) as f64;
    (trajectory[last - 1] - trajectory[first - 1]).abs() / span
}

/// Hill-valley test at evenly spaced interior points. Returns `true` when no
/// sample falls below `min(fa, fb)`, i.e. both ends share a peak.
pub fn hill_valley<E: Evaluator + ?Sized>(
    a: &[f64],
    b: &[f64],
    fa: f64,
    fb: f64,
    samples: usize,
    eval: &mut E,
) -> Result<bool, BudgetExhausted> {
    let fractions: Vec<f64> = (1..=samples)
        .map(|i| i as f64 / (samples + 1) as f64)
        .collect();
    hill_valley_at(a, b, fa, fb, &fractions, eval)
}

/// Hill-valley test at caller-chosen fractions of the segment. The pair is
/// put in lexicographic order first, so swapping the ends gives the same
/// probe points bit for bit.
pub fn hill_valley_at<E: Evaluator + ?Sized>(
    a: &[f64],
    b: &[f64],
    fa: f64,
    fb: f64,
    fractions: &[f64],
    eval: &mut E,
) -> Result<bool, BudgetExhausted> {
    if a == b {
        return Ok(true);
    }
    let (a, b) = match lex_cmp(a, b) {
        std::cmp::Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let floor = fa.min(fb);
    let mut same = true;
    for &t in fractions {
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
        if eval.evaluate(&UnitPoint::new(p))? < floor {
            same = false;
        }
    }
    Ok(same)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Classifies an exhausted individual against the known peaks.
pub fn classify<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    ind: &Individual,
    peaks: &[PeakRegion],
    params: &PdmParams,
    m_cg: usize,
    sd: f64,
    eval: &mut E,
    rng: &mut R,
) -> Result<Distinction, BudgetExhausted> {
    let dim = ind.dim();
    let s = sfd(eval.best_fitness(), ind.fitness, params.lambda);
    let f = fir(&ind.trajectory, m_cg, dim);
    if s < f {
        return Ok(Distinction {
            verdict: Verdict::NewGlobal,
            sfd: s,
            fir: f,
            nearest_region: None,
        });
    }
    let Some(k) = nearest_region(peaks, &ind.position, sd) else {
        return Ok(Distinction {
            verdict: Verdict::NewLocal,
            sfd: s,
            fir: f,
            nearest_region: None,
        });
    };
    let peak = &peaks[k];
    let n = hill_valley_samples(dim);
    let same = if params.random_hill_valley {
        let mut fractions: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        fractions.sort_by(f64::total_cmp);
        hill_valley_at(
            &ind.position,
            &peak.solution,
            ind.fitness,
            peak.fitness,
            &fractions,
            eval,
        )?
    } else {
        hill_valley(
            &ind.position,
            &peak.solution,
            ind.fitness,
            peak.fitness,
            n,
            eval,
        )?
    };
    Ok(Distinction {
        verdict: if same {
            Verdict::Found
        } else {
            Verdict::NewLocal
        },
        sfd: s,
        fir: f,
        nearest_region: Some(k),
    })
}
