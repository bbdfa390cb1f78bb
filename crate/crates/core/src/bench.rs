//! CEC'2013 niching benchmark functions F1–F10, all posed as maximization.
//!
//! Formulas, domains, niche radii and evaluation budgets follow the CEC'2013
//! niching competition technical report. The transcription is kept in
//! `data/cec2013_manifest.tsv`; ground-truth peak positions, produced by the
//! `gen_optima` example (dense grid + polish), live in `data/optima.tsv`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{LadeError, Result};
use crate::space::{Objective, SearchSpace};

const MANIFEST: &str = include_str!("../data/cec2013_manifest.tsv");
const OPTIMA: &str = include_str!("../data/optima.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
}

impl FunctionId {
    pub const ALL: [FunctionId; 10] = [
        FunctionId::F1,
        FunctionId::F2,
        FunctionId::F3,
        FunctionId::F4,
        FunctionId::F5,
        FunctionId::F6,
        FunctionId::F7,
        FunctionId::F8,
        FunctionId::F9,
        FunctionId::F10,
    ];

    /// 1-based function number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        n.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.number())
    }
}

impl FromStr for FunctionId {
    type Err = LadeError;

    /// Accepts `F6`, `f6` or `6`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t.strip_prefix(['F', 'f']).unwrap_or(t);
        digits
            .parse::<usize>()
            .ok()
            .and_then(Self::from_number)
            .ok_or_else(|| LadeError::UnknownFunction(s.to_string()))
    }
}

/// Per-function metadata used by the peak-counting procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub nkp: usize,
    pub global_fitness: f64,
    pub niche_radius: f64,
    pub budget: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkFunction {
    pub id: FunctionId,
    pub name: &'static str,
    pub space: SearchSpace,
    pub global_fitness: f64,
    pub nkp: usize,
    pub budget: usize,
    pub niche_radius: f64,
}

impl BenchmarkFunction {
    pub fn get(id: FunctionId) -> &'static BenchmarkFunction {
        static TABLE: OnceLock<Vec<BenchmarkFunction>> = OnceLock::new();
        &TABLE.get_or_init(|| FunctionId::ALL.iter().map(|&id| build(id)).collect())[id as usize]
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            nkp: self.nkp,
            global_fitness: self.global_fitness,
            niche_radius: self.niche_radius,
            budget: self.budget,
        }
    }

    /// Raw-coordinate positions of every global peak.
    pub fn optima(&self) -> &'static [Vec<f64>] {
        static TABLE: OnceLock<Vec<Vec<Vec<f64>>>> = OnceLock::new();
        &TABLE.get_or_init(parse_optima)[self.id as usize]
    }

    /// Evaluates at raw coordinates, clamping into the domain first.
    pub fn evaluate_raw(&self, x: &[f64]) -> f64 {
        let lo = self.space.lower();
        let hi = self.space.upper();
        let clamped: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(d, v)| v.clamp(lo[d], hi[d]))
            .collect();
        formula(self.id, &clamped)
    }
}

impl Objective for BenchmarkFunction {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.evaluate_raw(x)
    }
}

/// Fitness of function `id` at raw coordinates `x`.
pub fn evaluate(id: FunctionId, x: &[f64]) -> Result<f64> {
    let f = BenchmarkFunction::get(id);
    if x.len() != f.dim() {
        return Err(LadeError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    Ok(f.evaluate_raw(x))
}

pub fn ground_truth(id: FunctionId) -> GroundTruth {
    BenchmarkFunction::get(id).ground_truth()
}

/// Renders the manifest table in the documented column order:
/// `id  D  lower  upper  nkp  global_fitness  niche_radius  budget`,
/// tab-separated, with per-dimension bounds joined by commas.
pub fn manifest() -> String {
    let mut out =
        String::from("# id\tD\tlower\tupper\tnkp\tglobal_fitness\tniche_radius\tbudget\n");
    for id in FunctionId::ALL {
        let f = BenchmarkFunction::get(id);
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            id,
            f.dim(),
            join(f.space.lower()),
            join(f.space.upper()),
            f.nkp,
            f.global_fitness,
            f.niche_radius,
            f.budget
        ));
    }
    out
}

/// The committed manifest file, verbatim.
pub fn manifest_file() -> &'static str {
    MANIFEST
}

fn build(id: FunctionId) -> BenchmarkFunction {
    use FunctionId::*;
    let (name, dim, lo, hi) = match id {
        F1 => ("Five-Uneven-Peak Trap", 1, 0.0, 30.0),
        F2 => ("Equal Maxima", 1, 0.0, 1.0),
        F3 => ("Uneven Decreasing Maxima", 1, 0.0, 1.0),
        F4 => ("Himmelblau", 2, -6.0, 6.0),
        F5 => ("Six-Hump Camel Back", 2, 0.0, 0.0),
        F6 => ("Shubert 2D", 2, -10.0, 10.0),
        F7 => ("Vincent 2D", 2, 0.25, 10.0),
        F8 => ("Shubert 3D", 3, -10.0, 10.0),
        F9 => ("Vincent 3D", 3, 0.25, 10.0),
        F10 => ("Modified Rastrigin", 2, 0.0, 1.0),
    };
    let space = if id == F5 {
        SearchSpace::new(vec![-1.9, -1.1], vec![1.9, 1.1])
    } else {
        SearchSpace::uniform(dim, lo, hi)
    }
    .expect("benchmark bounds are valid");
    let row = manifest_row(id);
    BenchmarkFunction {
        id,
        name,
        space,
        global_fitness: row.global_fitness,
        nkp: row.nkp,
        budget: row.budget,
        niche_radius: row.niche_radius,
    }
}

fn manifest_row(id: FunctionId) -> GroundTruth {
    let line = MANIFEST
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .find(|l| l.split('\t').next() == Some(&id.to_string()))
        .unwrap_or_else(|| panic!("manifest is missing {id}"));
    let cols: Vec<&str> = line.split('\t').collect();
    GroundTruth {
        nkp: cols[4].parse().expect("nkp"),
        global_fitness: cols[5].parse().expect("global_fitness"),
        niche_radius: cols[6].parse().expect("niche_radius"),
        budget: cols[7].parse().expect("budget"),
    }
}

fn parse_optima() -> Vec<Vec<Vec<f64>>> {
    let mut table = vec![Vec::new(); FunctionId::ALL.len()];
    for line in OPTIMA
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let mut cols = line.split('\t');
        let id: FunctionId = cols.next().and_then(|c| c.parse().ok()).expect("optima id");
        let pos = cols
            .map(|c| c.parse::<f64>().expect("optima coordinate"))
            .collect();
        table[id as usize].push(pos);
    }
    table
}

fn formula(id: FunctionId, x: &[f64]) -> f64 {
    use FunctionId::*;
    match id {
        F1 => five_uneven_peak_trap(x[0]),
        F2 => equal_maxima(x[0]),
        F3 => uneven_decreasing_maxima(x[0]),
        F4 => himmelblau(x[0], x[1]),
        F5 => six_hump_camel_back(x[0], x[1]),
        F6 | F8 => shubert(x),
        F7 | F9 => vincent(x),
        F10 => modified_rastrigin(x),
    }
}

pub fn five_uneven_peak_trap(x: f64) -> f64 {
    match x {
        x if x < 2.5 => 80.0 * (2.5 - x),
        x if x < 5.0 => 64.0 * (x - 2.5),
        x if x < 7.5 => 64.0 * (7.5 - x),
        x if x < 12.5 => 28.0 * (x - 7.5),
        x if x < 17.5 => 28.0 * (17.5 - x),
        x if x < 22.5 => 32.0 * (x - 17.5),
        x if x < 27.5 => 32.0 * (27.5 - x),
        x => 80.0 * (x - 27.5),
    }
}

pub fn equal_maxima(x: f64) -> f64 {
    (5.0 * PI * x).sin().powi(6)
}

pub fn uneven_decreasing_maxima(x: f64) -> f64 {
    let envelope = (-2.0 * 2f64.ln() * ((x - 0.08) / 0.854).powi(2)).exp();
    envelope * (5.0 * PI * (x.powf(0.75) - 0.05)).sin().powi(6)
}

pub fn himmelblau(x: f64, y: f64) -> f64 {
    200.0 - (x * x + y - 11.0).powi(2) - (x + y * y - 7.0).powi(2)
}

pub fn six_hump_camel_back(x: f64, y: f64) -> f64 {
    let x2 = x * x;
    let y2 = y * y;
    -((4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (4.0 * y2 - 4.0) * y2)
}

pub fn shubert(x: &[f64]) -> f64 {
    -x.iter()
        .map(|&xi| {
            (1..=5)
                .map(|j| {
                    let j = j as f64;
                    j * ((j + 1.0) * xi + j).cos()
                })
                .sum::<f64>()
        })
        .product::<f64>()
}

pub fn vincent(x: &[f64]) -> f64 {
    x.iter().map(|&xi| (10.0 * xi.ln()).sin()).sum::<f64>() / x.len() as f64
}

pub fn modified_rastrigin(x: &[f64]) -> f64 {
    const K: [f64; 2] = [3.0, 4.0];
    -x.iter()
        .zip(K)
        .map(|(&xi, k)| 10.0 + 9.0 * (2.0 * PI * k * xi).cos())
        .sum::<f64>()
}
