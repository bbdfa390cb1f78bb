//! Regenerates `data/optima.tsv` from the dense-grid oracle.
//!
//! cargo run --release --example gen_optima > crates/core/data/optima.tsv

#[path = "../tests/common/oracle.rs"]
mod oracle;

use lade::bench::{BenchmarkFunction, FunctionId};

fn main() {
    println!("# id\tx1\tx2\t...  (raw coordinates of every global peak)");
    for id in FunctionId::ALL {
        let bf = BenchmarkFunction::get(id);
        let n = match bf.dim() {
            1 => 1_000_001,
            2 => 4001,
            _ => 241,
        };
        let f = |x: &[f64]| bf.evaluate_raw(x);
        let e = oracle::enumerate_maxima(&f, bf.space.lower(), bf.space.upper(), n, 1e-6, 1e-3);
        eprintln!(
            "{id}: oracle max = {:.17} (manifest {:.17}, diff {:.3e}), peaks = {} (nkp {})",
            e.best,
            bf.global_fitness,
            e.best - bf.global_fitness,
            e.maxima.len(),
            bf.nkp
        );
        for (x, _) in &e.maxima {
            let cols: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            println!("{id}\t{}", cols.join("\t"));
        }
    }
}
