//! Runs a few seeds on selected functions and prints PR/SR and event counters.
//! Usage: probe F6 [runs] [key=value ...]

use std::time::Instant;

use lade::bench::{BenchmarkFunction, FunctionId};
use lade::engine::{run, RunConfig};
use lade::metrics::summarize;
use rayon::prelude::*;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ids: Vec<FunctionId> = args[0]
        .split(',')
        .map(|s| s.parse().expect("function id"))
        .collect();
    let runs: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    for id in ids {
        let t = Instant::now();
        let reports: Vec<_> = (0..runs)
            .into_par_iter()
            .map(|seed| {
                let mut cfg = RunConfig::new(id, seed);
                for kv in args.iter().skip(2) {
                    let (k, v) = kv.split_once('=').expect("key=value");
                    if k == "budget" {
                        cfg.budget = Some(v.parse().unwrap());
                    } else {
                        cfg.settings.set(k, v).unwrap();
                    }
                }
                run(&cfg).unwrap()
            })
            .collect();
        let nkp = BenchmarkFunction::get(id).nkp;
        for eps in [1e-3, 1e-4, 1e-5] {
            let s = summarize(id, eps, &reports);
            println!(
                "{id} eps={eps:e} PR={:.3} SR={:.3} npf={:?}/{nkp} rates={:?}",
                s.pr,
                s.sr,
                s.npf,
                s.rates.map(|r| (r.ar, r.tnr, r.fpr, r.total))
            );
        }
        let c = &reports[0].counters;
        println!(
            "  seed0: gp={} p={} {:?}  [{:.1}s]",
            reports[0].found.len(),
            reports[0].peaks.len(),
            c,
            t.elapsed().as_secs_f64()
        );
    }
}
