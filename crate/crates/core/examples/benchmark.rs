//! Run a slice of the simulation study and print the rank table.
//!
//!     cargo run --release --example benchmark [replicates] [n_train] [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use khaos::bench::{rank_table, run_benchmark, write_bench_outputs, BenchConfig};

fn main() -> khaos::Result<()> {
    let mut args = std::env::args().skip(1);
    let replicates: usize = args.next().map_or(2, |s| s.parse().expect("replicates"));
    let n_train: usize = args.next().map_or(1000, |s| s.parse().expect("n_train"));
    let out = args.next().map(PathBuf::from);

    let cfg = BenchConfig { replicates, n_train, n_test: n_train, ..BenchConfig::default() };
    let start = Instant::now();
    let results = run_benchmark(&cfg)?;
    println!("{} cells in {:.0}s", results.len(), start.elapsed().as_secs_f64());
    for r in &results {
        if let Some(e) = &r.error {
            println!("failed: {} {} rep {}: {e}", r.method, r.function, r.replicate);
        }
    }
    println!("{:<14} {:<14} {:>4} {:>12} {:>8} {:>5}", "method", "function", "nsr", "avg crps", "secs", "rank");
    for row in rank_table(&results) {
        println!(
            "{:<14} {:<14} {:>4} {:>12.5} {:>8.2} {:>5}",
            row.method.name(),
            row.function.name(),
            row.nsr,
            row.avg_crps,
            row.avg_seconds,
            row.rank
        );
    }
    if let Some(dir) = out {
        write_bench_outputs(&dir, &results, &[("seed".into(), cfg.seed.to_string())])?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
