//! Greedy sparse PCE on Ishigami: shows how enrichment grows the candidate
//! space and compares the two selection criteria.
//!
//!     cargo run --release --example sparse_pce [n]

use khaos::bench::{maximin_lhs, TestFunction};
use khaos::sparse::{fit_sparse, sparse_predict, Criterion, SparseConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> khaos::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("n"));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = maximin_lhs(n, 3, &mut rng, 1)?;
    let y = TestFunction::Ishigami.eval_rows(&x);
    let x_test = DMatrix::from_fn(2000, 3, |_, _| rng.random::<f64>());
    let f_test = TestFunction::Ishigami.eval_rows(&x_test);
    let mean = f_test.iter().sum::<f64>() / f_test.len() as f64;
    let ss_tot: f64 = f_test.iter().map(|v| (v - mean).powi(2)).sum();

    for criterion in [Criterion::BayesFactor, Criterion::Kic] {
        let fit = fit_sparse(&x, &y, &SparseConfig { criterion, ..SparseConfig::default() })?;
        let pred = sparse_predict(&fit, &x_test)?;
        let ss_res: f64 = f_test.iter().zip(&pred.mean).map(|(a, b)| (a - b).powi(2)).sum();
        println!("{criterion:?}: {} terms, test R^2 {:.5}", fit.m_star(), 1.0 - ss_res / ss_tot);
        for (stage, (d, q)) in fit.enrichment_history.iter().enumerate() {
            println!("  stage {stage}: d_max {d}, q_max {q}, best score {:.2}", fit.stage_scores[stage]);
        }
        for (mi, b) in fit.selected.iter().zip(&fit.beta_hat[1..]) {
            println!("  {:?} {b:+.4}", mi.as_slice());
        }
    }
    Ok(())
}
