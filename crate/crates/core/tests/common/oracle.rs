#![allow(dead_code)]
//! Dense-grid + compass-polish enumeration of global maxima.
//!
//! Independent of the optimizer: it only needs a pure fitness function and
//! the box bounds.

pub struct Enumerated {
    pub best: f64,
    pub maxima: Vec<(Vec<f64>, f64)>,
}

/// Scans a grid with `n` points per dimension, polishes every grid-local
/// maximum, then keeps the polished points within `keep_tol` of the best.
pub fn enumerate_maxima(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    n: usize,
    keep_tol: f64,
    dedup_dist: f64,
) -> Enumerated {
    let dim = lower.len();
    let h: Vec<f64> = (0..dim)
        .map(|d| (upper[d] - lower[d]) / (n - 1) as f64)
        .collect();
    let total = n.pow(dim as u32);
    let point = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for d in 0..dim {
            let i = idx % n;
            idx /= n;
            x[d] = if i == n - 1 {
                upper[d]
            } else {
                lower[d] + i as f64 * h[d]
            };
        }
        x
    };
    let values: Vec<f64> = (0..total).map(|i| f(&point(i))).collect();

    let mut candidates = Vec::new();
    let mut offsets = vec![Vec::<isize>::new()];
    for _ in 0..dim {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                [-1isize, 0, 1].into_iter().map(move |s| {
                    let mut o = o.clone();
                    o.push(s);
                    o
                })
            })
            .collect();
    }
    offsets.retain(|o| o.iter().any(|&s| s != 0));
    let mut coords = vec![0isize; dim];
    for i in 0..total {
        let mut r = i;
        for c in coords.iter_mut() {
            *c = (r % n) as isize;
            r /= n;
        }
        let v = values[i];
        let is_max = offsets.iter().all(|o| {
            let mut j = 0usize;
            let mut stride = 1usize;
            for d in 0..dim {
                let c = coords[d] + o[d];
                if c < 0 || c >= n as isize {
                    return true;
                }
                j += c as usize * stride;
                stride *= n;
            }
            values[j] <= v
        });
        if is_max {
            candidates.push(point(i));
        }
    }

    let mut polished: Vec<(Vec<f64>, f64)> = candidates
        .into_iter()
        .map(|x| polish(f, x, &h, lower, upper))
        .collect();
    let best = polished
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    polished.retain(|p| p.1 >= best - keep_tol);
    polished.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut maxima: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in polished {
        if maxima.iter().all(|q| dist(&q.0, &p.0) > dedup_dist) {
            maxima.push(p);
        }
    }
    maxima.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Enumerated { best, maxima }
}

/// Coordinate-wise compass search with step halving down to ~1e-15 relative.
pub fn polish(
    f: &dyn Fn(&[f64]) -> f64,
    mut x: Vec<f64>,
    h: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    let mut step: Vec<f64> = h.to_vec();
    let floor: Vec<f64> = (0..x.len())
        .map(|d| (upper[d] - lower[d]) * 1e-16)
        .collect();
    while step.iter().zip(&floor).any(|(s, fl)| s > fl) {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * step[d]).clamp(lower[d], upper[d]);
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    (x, fx)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
