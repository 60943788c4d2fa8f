//! Ordinal responses through a latent Gaussian: `y = k` when the latent
//! `z ~ N(f(x), 1)` falls in `(c_{k-1}, c_k]`. The sampler alternates
//! truncated-normal latent draws, one KHAOS sweep on the latent response
//! with unit noise, and uniform cutpoint updates. `c_1` is pinned at 0.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{KhaosError, Result};
use crate::linear::PriorSpec;
use crate::sampler::{predict, PosteriorDraws, Sampler, SamplerConfig};

/// Posterior draws of the latent model plus, per stored draw, the finite
/// cutpoints `c_1 = 0 < c_2 < ... < c_{K-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinalFit {
    pub k: usize,
    pub latent: PosteriorDraws,
    pub cutpoints: Vec<Vec<f64>>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Draws `N(mean, 1)` restricted to `(lo, hi]` by inversion, working in
/// whichever tail keeps the CDF values away from 1.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let nd = std_normal();
    let (a, b) = (lo - mean, hi - mean);
    let z = if a > 0.0 {
        // upper tail: reflect so both bounds are negative
        let (pa, pb) = (nd.cdf(-b), nd.cdf(-a));
        let u = pa + (pb - pa) * rng.random::<f64>();
        -nd.inverse_cdf(u)
    } else {
        let (pa, pb) = (nd.cdf(a), nd.cdf(b));
        let u = pa + (pb - pa) * rng.random::<f64>();
        nd.inverse_cdf(u)
    };
    let z = if z.is_finite() { z } else if a.is_finite() { a } else { b };
    (mean + z).clamp(lo, hi)
}

fn check_labels(y: &[usize]) -> Result<usize> {
    let k = y.iter().copied().max().unwrap_or(0);
    if k < 2 {
        return Err(KhaosError::InvalidArgument(
            "ordinal response needs at least two categories".into(),
        ));
    }
    let mut seen = vec![false; k];
    for (i, &v) in y.iter().enumerate() {
        if v == 0 {
            return Err(KhaosError::InvalidArgument(format!(
                "row {i}: categories are numbered from 1"
            )));
        }
        seen[v - 1] = true;
    }
    if let Some(miss) = seen.iter().position(|s| !s) {
        return Err(KhaosError::InvalidArgument(format!(
            "category {} is never observed",
            miss + 1
        )));
    }
    Ok(k)
}

/// Interval `(c_{y-1}, c_y]` for label `y` given finite cutpoints `c`.
fn bounds(c: &[f64], label: usize) -> (f64, f64) {
    let lo = if label == 1 { f64::NEG_INFINITY } else { c[label - 2] };
    let hi = if label == c.len() + 1 { f64::INFINITY } else { c[label - 1] };
    (lo, hi)
}

/// Fits the latent-Gaussian ordinal model. Labels run over `1..=K`.
pub fn fit_ordinal(
    x: &DMatrix<f64>,
    y: &[usize],
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<OrdinalFit> {
    let k = check_labels(y)?;
    if x.nrows() != y.len() {
        return Err(KhaosError::InvalidArgument(format!(
            "X has {} rows but y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    let mut c: Vec<f64> = (0..k - 1).map(|j| j as f64).collect();
    let z0: Vec<f64> = y
        .iter()
        .map(|&l| {
            let (lo, hi) = bounds(&c, l);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (false, _) => hi - 0.5,
                (_, false) => lo + 0.5,
            }
        })
        .collect();
    let mut sampler = Sampler::with_fixed_sigma2(x, &z0, prior, cfg, 1.0)?;
    let mut z = z0;
    let mut stored = Vec::with_capacity(cfg.n_draws());
    let mut cut_draws = Vec::with_capacity(cfg.n_draws());
    for iter in 0..cfg.n_iter {
        let f = sampler.fitted();
        {
            let rng = sampler.rng_mut();
            for i in 0..z.len() {
                let (lo, hi) = bounds(&c, y[i]);
                z[i] = truncated_normal(f[i], lo, hi, rng);
            }
        }
        sampler.set_response(&z)?;
        sampler.step(iter)?;
        for j in 1..k - 1 {
            // c[j] separates categories j+1 and j+2
            let lo = z
                .iter()
                .zip(y)
                .filter(|(_, &l)| l == j + 1)
                .map(|(v, _)| *v)
                .fold(c[j - 1], f64::max);
            let hi_bound = if j + 1 < k - 1 { c[j + 1] } else { f64::INFINITY };
            let hi = z
                .iter()
                .zip(y)
                .filter(|(_, &l)| l == j + 2)
                .map(|(v, _)| *v)
                .fold(hi_bound, f64::min);
            if hi > lo {
                let u: f64 = sampler.rng_mut().random();
                c[j] = lo + (hi - lo) * u;
            }
        }
        if sampler.is_recorded(iter) {
            stored.push(sampler.current_draw());
            cut_draws.push(c.clone());
        }
    }
    let latent = PosteriorDraws {
        p: x.ncols(),
        draws: stored,
        provenance: sampler.provenance(),
        stats: sampler.state().move_stats.clone(),
    };
    Ok(OrdinalFit {
        k,
        latent,
        cutpoints: cut_draws,
    })
}

/// Category probabilities for one latent value and cutpoint vector.
pub fn category_probs(f: f64, cutpoints: &[f64]) -> Vec<f64> {
    let nd = std_normal();
    let k = cutpoints.len() + 1;
    let mut cdf: Vec<f64> = cutpoints.iter().map(|c| nd.cdf(c - f)).collect();
    cdf.push(1.0);
    let mut out = Vec::with_capacity(k);
    let mut prev = 0.0;
    for v in cdf {
        out.push((v - prev).max(0.0));
        prev = v;
    }
    out
}

/// `n x K` matrix of predicted category probabilities averaged over draws.
pub fn predict_ordinal(fit: &OrdinalFit, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let latent = predict(&fit.latent, x_new, false, 0)?;
    let nd = latent.samples.nrows();
    let n = x_new.nrows();
    let mut out = DMatrix::zeros(n, fit.k);
    for d in 0..nd {
        for i in 0..n {
            let probs = category_probs(latent.samples[(d, i)], &fit.cutpoints[d]);
            for (j, pr) in probs.into_iter().enumerate() {
                out[(i, j)] += pr;
            }
        }
    }
    if nd > 0 {
        out /= nd as f64;
    }
    Ok(out)
}
