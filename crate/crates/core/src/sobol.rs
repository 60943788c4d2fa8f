//! Variance decomposition of a PCE into Sobol indices. With an orthonormal
//! basis and independent uniform inputs each subset's variance is the sum
//! of squared coefficients of the terms active on exactly that subset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::MultiIndex;
use crate::error::{KhaosError, Result};
use crate::sampler::{quantile, PosteriorDraws};

/// Per-subset variances `V_u` (only subsets with `V_u > 0`) and their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceDecomposition {
    pub partial: BTreeMap<Vec<usize>, f64>,
    pub variance: f64,
}

impl VarianceDecomposition {
    /// `S_u = V_u / Var(f)`; empty when the variance is zero.
    pub fn partial_indices(&self) -> BTreeMap<Vec<usize>, f64> {
        if self.variance <= 0.0 {
            return BTreeMap::new();
        }
        self.partial
            .iter()
            .map(|(u, v)| (u.clone(), v / self.variance))
            .collect()
    }

    /// `T_i`, the sum of `S_u` over subsets containing input `i`.
    pub fn total_indices(&self, p: usize) -> Vec<f64> {
        let mut t = vec![0.0; p];
        for (u, s) in self.partial_indices() {
            for &i in &u {
                t[i] += s;
            }
        }
        t
    }
}

/// Groups the non-intercept terms by active set and sums squared
/// coefficients.
pub fn sobol_from_coefficients(indices: &[MultiIndex], beta: &[f64]) -> Result<VarianceDecomposition> {
    if indices.len() != beta.len() {
        return Err(KhaosError::InvalidArgument(format!(
            "{} terms but {} coefficients",
            indices.len(),
            beta.len()
        )));
    }
    let mut partial: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (mi, b) in indices.iter().zip(beta) {
        if mi.is_intercept() || *b == 0.0 {
            continue;
        }
        *partial.entry(mi.active_set()).or_insert(0.0) += b * b;
    }
    let variance = partial.values().sum();
    Ok(VarianceDecomposition { partial, variance })
}

/// Mean and the 5%, 50% and 95% quantiles of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Aggregate {
    pub fn of(samples: &[f64]) -> Self {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        Aggregate {
            mean,
            q05: quantile(samples, 0.05),
            q50: quantile(samples, 0.5),
            q95: quantile(samples, 0.95),
        }
    }
}

/// Sobol indices over a set of draws. `partial[k][d]` is `S_u` for
/// `subsets[k]` in draw `d` (zero where the draw has no such term).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolSummary {
    pub p: usize,
    pub subsets: Vec<Vec<usize>>,
    pub partial: Vec<Vec<f64>>,
    /// `total[i][d]` is `T_i` in draw `d`.
    pub total: Vec<Vec<f64>>,
    /// `sigma^2 / (Var(f) + sigma^2)` per draw.
    pub noise_share: Vec<f64>,
}

impl SobolSummary {
    pub fn n_draws(&self) -> usize {
        self.noise_share.len()
    }

    pub fn total_aggregates(&self) -> Vec<Aggregate> {
        self.total.iter().map(|t| Aggregate::of(t)).collect()
    }

    pub fn partial_aggregates(&self) -> Vec<(Vec<usize>, Aggregate)> {
        self.subsets
            .iter()
            .cloned()
            .zip(self.partial.iter().map(|s| Aggregate::of(s)))
            .collect()
    }

    pub fn noise_aggregate(&self) -> Aggregate {
        Aggregate::of(&self.noise_share)
    }

    pub fn total_means(&self) -> Vec<f64> {
        self.total_aggregates().iter().map(|a| a.mean).collect()
    }
}

/// Builds the summary from `(indices, beta, sigma2)` triples.
pub fn sobol_summary<'a, I>(p: usize, draws: I) -> Result<SobolSummary>
where
    I: IntoIterator<Item = (&'a [MultiIndex], &'a [f64], f64)>,
{
    let mut decomps = Vec::new();
    let mut sigmas = Vec::new();
    for (idx, beta, s2) in draws {
        decomps.push(sobol_from_coefficients(idx, beta)?);
        sigmas.push(s2);
    }
    if decomps.is_empty() {
        return Err(KhaosError::InvalidArgument("no draws".into()));
    }
    let mut keys: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for d in &decomps {
        for u in d.partial.keys() {
            let next = keys.len();
            keys.entry(u.clone()).or_insert(next);
        }
    }
    let subsets: Vec<Vec<usize>> = keys.keys().cloned().collect();
    let pos: BTreeMap<&Vec<usize>, usize> = subsets.iter().enumerate().map(|(k, u)| (u, k)).collect();
    let nd = decomps.len();
    let mut partial = vec![vec![0.0; nd]; subsets.len()];
    let mut total = vec![vec![0.0; nd]; p];
    let mut noise_share = Vec::with_capacity(nd);
    for (d, (dec, s2)) in decomps.iter().zip(&sigmas).enumerate() {
        for (u, s) in dec.partial_indices() {
            partial[pos[&u]][d] = s;
            for &i in &u {
                if i >= p {
                    return Err(KhaosError::InvalidArgument(format!(
                        "term uses input {i} beyond dimension {p}"
                    )));
                }
                total[i][d] += s;
            }
        }
        let denom = dec.variance + s2;
        noise_share.push(if denom > 0.0 { s2 / denom } else { 0.0 });
    }
    Ok(SobolSummary {
        p,
        subsets,
        partial,
        total,
        noise_share,
    })
}

/// Sobol summary over the posterior draws of a KHAOS fit.
pub fn sobol_posterior(draws: &PosteriorDraws) -> Result<SobolSummary> {
    sobol_summary(
        draws.p,
        draws
            .draws
            .iter()
            .map(|d| (d.indices.as_slice(), d.beta.as_slice(), d.sigma2)),
    )
}
