//! Proposal distributions for the transdimensional moves.
//!
//! A birth proposes a new multi-index in four stages: an expected order
//! `q0 ~ q0^-s_q`, independent coin flips `chi_j ~ Bern(eta_j(q0))` retried
//! until `1 <= sum chi <= q_max` (at most `cap` tries), a total degree
//! `d ~ d^-s_d` on `{q, ..., d_max}`, and a uniform composition of `d` over
//! the active variables. [`log_birth_mass`] returns the exact probability of
//! the resulting index, marginalised over `q0`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::{ln_binomial, sample_composition, MultiIndex};

/// Lower/upper clipping margin for the inclusion probabilities.
pub const ETA_EPS: f64 = 1e-6;
/// Baseline pseudo-count added to every inclusion count.
pub const ETA_DELTA: f64 = 1.0;
/// Above this dimension the validity probability uses a normal approximation.
pub const EXACT_PB_MAX_P: usize = 500;

/// Static parameters of the proposal kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    pub p: usize,
    pub d_max: usize,
    pub q_max: usize,
    pub s_q: f64,
    pub s_d: f64,
    pub p_birth: f64,
    pub p_death: f64,
    pub dr_cap: usize,
}

/// Inclusion probabilities for a birth with expected order `q0`:
/// `eta_j = q0 (u_j + delta) / sum_k (u_k + delta)`, clipped to
/// `[eps, 1 - eps]` with the clipped mass redistributed over the rest.
pub fn eta_weights(q0: usize, counts: &[u32]) -> Vec<f64> {
    eta_weights_with(q0, counts, ETA_DELTA, ETA_EPS)
}

pub fn eta_weights_with(q0: usize, counts: &[u32], delta: f64, eps: f64) -> Vec<f64> {
    let p = counts.len();
    let target = q0 as f64;
    let hi = 1.0 - eps;
    if target >= p as f64 * hi {
        return vec![target / p as f64; p];
    }
    let w: Vec<f64> = counts.iter().map(|&u| u as f64 + delta).collect();
    let mut eta = vec![0.0; p];
    let mut fixed = vec![false; p];
    loop {
        let fixed_mass: f64 = (0..p).filter(|&j| fixed[j]).map(|j| eta[j]).sum();
        let free_w: f64 = (0..p).filter(|&j| !fixed[j]).map(|j| w[j]).sum();
        let free_mass = target - fixed_mass;
        let mut changed = false;
        for j in 0..p {
            if !fixed[j] {
                eta[j] = free_mass * w[j] / free_w;
            }
        }
        for j in 0..p {
            if fixed[j] {
                continue;
            }
            if eta[j] > hi {
                eta[j] = hi;
                fixed[j] = true;
                changed = true;
            } else if eta[j] < eps {
                eta[j] = eps;
                fixed[j] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    eta
}

/// `P(S = k)` for `k = 0..=k_max`, where `S` is a sum of independent
/// Bernoulli(`eta_j`) variables.
pub fn poisson_binomial_pmf(eta: &[f64], k_max: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; k_max + 1];
    pmf[0] = 1.0;
    for (step, &e) in eta.iter().enumerate() {
        let top = (step + 1).min(k_max);
        for k in (1..=top).rev() {
            pmf[k] = pmf[k] * (1.0 - e) + pmf[k - 1] * e;
        }
        pmf[0] *= 1.0 - e;
    }
    pmf
}

/// `P(1 <= S <= q_max)`.
pub fn validity_prob(eta: &[f64], q_max: usize) -> f64 {
    if eta.len() <= EXACT_PB_MAX_P {
        poisson_binomial_pmf(eta, q_max)[1..].iter().sum()
    } else {
        let mean: f64 = eta.iter().sum();
        let var: f64 = eta.iter().map(|e| e * (1.0 - e)).sum();
        let normal = Normal::new(mean, var.sqrt().max(1e-12)).expect("valid normal");
        (normal.cdf(q_max as f64 + 0.5) - normal.cdf(0.5)).max(0.0)
    }
}

/// Probability that the retry loop delivers a given valid flip pattern,
/// divided by that pattern's one-shot probability:
/// `(1 - (1 - P_v)^cap) / P_v`.
pub fn retry_factor(valid: f64, cap: usize) -> f64 {
    if valid <= 0.0 {
        return cap as f64;
    }
    let miss_all = (cap as f64 * (-valid).ln_1p()).exp_m1();
    -miss_all / valid
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalised weights `w(k) proportional to k^-s` on `lo..=hi`.
pub fn power_weights(lo: usize, hi: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (lo..=hi).map(|k| (k as f64).powf(-s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Total degree in `{q, ..., d_max}` drawn with weights `d^-s_d`.
pub fn sample_degree<R: Rng + ?Sized>(q: usize, d_max: usize, s_d: f64, rng: &mut R) -> u32 {
    let w = power_weights(q, d_max, s_d);
    (q + sample_index(&w, rng)) as u32
}

fn log_degree_mass(q: usize, d: usize, d_max: usize, s_d: f64) -> f64 {
    let c_d: f64 = (q..=d_max).map(|k| (k as f64).powf(-s_d)).sum();
    -s_d * (d as f64).ln() - c_d.ln()
}

/// Draws a birth candidate. `None` when every retry of the coin flips
/// produced an invalid order.
pub fn sample_birth<R: Rng + ?Sized>(
    cfg: &ProposalConfig,
    counts: &[u32],
    rng: &mut R,
) -> Option<MultiIndex> {
    let qw = power_weights(1, cfg.q_max, cfg.s_q);
    let q0 = 1 + sample_index(&qw, rng);
    let eta = eta_weights(q0, counts);
    let mut active = Vec::new();
    for _ in 0..cfg.dr_cap.max(1) {
        active.clear();
        for (j, &e) in eta.iter().enumerate() {
            if rng.random::<f64>() < e {
                active.push(j);
            }
        }
        if !active.is_empty() && active.len() <= cfg.q_max {
            break;
        }
    }
    if active.is_empty() || active.len() > cfg.q_max {
        return None;
    }
    let q = active.len();
    let d = sample_degree(q, cfg.d_max, cfg.s_d, rng);
    let parts = sample_composition(d, q as u32, rng).expect("d >= q");
    let mut alpha = vec![0u32; cfg.p];
    for (j, a) in active.iter().zip(parts) {
        alpha[*j] = a;
    }
    Some(MultiIndex::new(alpha))
}

/// Log probability that one birth attempt against `counts` yields `alpha`.
pub fn log_birth_mass(cfg: &ProposalConfig, counts: &[u32], alpha: &MultiIndex) -> f64 {
    let q = alpha.order() as usize;
    let d = alpha.degree() as usize;
    if q == 0 || q > cfg.q_max || d > cfg.d_max {
        return f64::NEG_INFINITY;
    }
    let qw = power_weights(1, cfg.q_max, cfg.s_q);
    let terms: Vec<f64> = (1..=cfg.q_max)
        .map(|q0| {
            let eta = eta_weights(q0, counts);
            let mut log_flip = 0.0;
            for (j, &e) in eta.iter().enumerate() {
                log_flip += if alpha.is_active(j) {
                    e.ln()
                } else {
                    (1.0 - e).ln()
                };
            }
            let valid = validity_prob(&eta, cfg.q_max);
            qw[q0 - 1].ln() + log_flip + retry_factor(valid, cfg.dr_cap.max(1)).ln()
        })
        .collect();
    log_sum_exp(&terms) + log_degree_mass(q, d, cfg.d_max, cfg.s_d)
        - ln_binomial((d - 1) as u64, (q - 1) as u64)
}

/// Draws a birth candidate and its log proposal ratio `log A_Birth`.
pub fn propose_birth<R: Rng + ?Sized>(
    cfg: &ProposalConfig,
    counts: &[u32],
    rng: &mut R,
) -> Option<(MultiIndex, f64)> {
    let alpha = sample_birth(cfg, counts, rng)?;
    let log_a = log_birth_ratio(cfg, counts, &alpha);
    Some((alpha, log_a))
}

/// `log A_Birth` for adding `alpha` to a model whose inclusion counts are
/// `counts`: reverse (death) mass over forward (birth) mass. The `1/(M+1)`
/// victim-selection factor lives in the prior ratio.
pub fn log_birth_ratio(cfg: &ProposalConfig, counts: &[u32], alpha: &MultiIndex) -> f64 {
    cfg.p_death.ln() - cfg.p_birth.ln() - log_birth_mass(cfg, counts, alpha)
}

/// `log A_Death` for removing `alpha`; `counts_after` are the inclusion
/// counts once `alpha` is gone (the context the reverse birth sees).
pub fn log_death_ratio(cfg: &ProposalConfig, counts_after: &[u32], alpha: &MultiIndex) -> f64 {
    -log_birth_ratio(cfg, counts_after, alpha)
}

/// `log A_Mutate1` for moving a term of order `q` from degree `d_curr` to
/// `d_cand`.
pub fn log_mutate_degree_ratio(q: u32, d_curr: u32, d_cand: u32, s_d: f64) -> f64 {
    let part = |d: u32| s_d * (d as f64).ln() + ln_binomial((d - 1) as u64, (q - 1) as u64);
    part(d_cand) - part(d_curr)
}

/// Swap-in probabilities over the variables inactive in `alpha`,
/// proportional to `counts + delta`. Returned as `(variable, prob)`.
pub fn swap_distribution(counts: &[u32], alpha: &MultiIndex) -> Vec<(usize, f64)> {
    let inactive: Vec<usize> = (0..alpha.dim()).filter(|&j| !alpha.is_active(j)).collect();
    let total: f64 = inactive.iter().map(|&j| counts[j] as f64 + ETA_DELTA).sum();
    inactive
        .into_iter()
        .map(|j| (j, (counts[j] as f64 + ETA_DELTA) / total))
        .collect()
}

/// `alpha` with variable `old` switched off and `new` carrying its degree.
pub fn swap_variable(alpha: &MultiIndex, old: usize, new: usize) -> MultiIndex {
    let mut a = alpha.as_slice().to_vec();
    a[new] = a[old];
    a[old] = 0;
    MultiIndex::new(a)
}

/// `log A_Mutate2 = log pi_rev(old) - log pi_fwd(new)`; the reverse
/// probability uses the post-swap inclusion counts.
pub fn log_mutate_variable_ratio(counts: &[u32], alpha: &MultiIndex, old: usize, new: usize) -> f64 {
    let fwd = swap_distribution(counts, alpha)
        .into_iter()
        .find(|(j, _)| *j == new)
        .map(|(_, p)| p)
        .expect("new variable is inactive");
    let mut after = counts.to_vec();
    after[old] -= 1;
    after[new] += 1;
    let swapped = swap_variable(alpha, old, new);
    let rev = swap_distribution(&after, &swapped)
        .into_iter()
        .find(|(j, _)| *j == old)
        .map(|(_, p)| p)
        .expect("old variable is inactive after swap");
    rev.ln() - fwd.ln()
}

/// Mutation-type weights proportional to the two acceptance rates,
/// clipped to `[0.1, 0.9]`. Equal weights when both rates are zero.
pub fn adapt_mutation_weights(rates: [f64; 2]) -> [f64; 2] {
    let total = rates[0] + rates[1];
    if total <= 0.0 {
        return [0.5, 0.5];
    }
    let w0 = (rates[0] / total).clamp(0.1, 0.9);
    [w0, 1.0 - w0]
}
