//! The adaptive Bayesian PCE sampler.
//!
//! Each iteration makes one transdimensional move (birth, death, or one of
//! two mutations), then Gibbs-updates `(beta, sigma^2)` and `lambda`, and,
//! under the g-prior families, a Metropolis-Hastings update of `g0^2`.
//! Model moves are scored with `beta` and `sigma^2` integrated out.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{
    cardinality, sample_composition, BasisSet, CandidateSpace, MultiIndex, UnivariateTable,
};
use crate::error::{KhaosError, Result};
use crate::linear::{
    conditional_posterior_with, gibbs_beta_sigma, gibbs_lambda, mh_update_g0,
    prior_cov_inverse, ConditionalPosterior, LaplaceMode, PriorSpec,
};
use crate::proposal::{
    adapt_mutation_weights, log_death_ratio, log_mutate_degree_ratio,
    log_mutate_variable_ratio, propose_birth, sample_degree, swap_distribution, swap_variable,
    ProposalConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub n_thin: usize,
    pub p_birth: f64,
    pub p_death: f64,
    pub m_max: usize,
    pub delayed_rejection_cap: usize,
    pub seed: u64,
    pub laplace: LaplaceMode,
    /// Mutation weights are re-estimated every `adapt_every` burn-in iterations.
    pub adapt_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_iter: 10_000,
            n_burn: 5_000,
            n_thin: 10,
            p_birth: 1.0 / 3.0,
            p_death: 1.0 / 3.0,
            m_max: 200,
            delayed_rejection_cap: 10,
            seed: 0,
            laplace: LaplaceMode::Orthogonal,
            adapt_every: 100,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_birth > 0.0 && self.p_death > 0.0 && self.p_birth + self.p_death < 1.0) {
            return Err(KhaosError::InvalidArgument(format!(
                "need P_B, P_D > 0 and P_B + P_D < 1, got {} and {}",
                self.p_birth, self.p_death
            )));
        }
        if self.n_burn >= self.n_iter {
            return Err(KhaosError::InvalidArgument(format!(
                "n_burn ({}) must be below n_iter ({})",
                self.n_burn, self.n_iter
            )));
        }
        if self.n_thin == 0 || self.m_max == 0 || self.adapt_every == 0 {
            return Err(KhaosError::InvalidArgument(
                "n_thin, m_max and adapt_every must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of stored draws, `floor((n_iter - n_burn) / n_thin)`.
    pub fn n_draws(&self) -> usize {
        (self.n_iter - self.n_burn) / self.n_thin
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Birth,
    Death,
    MutateDegree,
    MutateVariable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveCounter {
    pub attempted: u64,
    pub accepted: u64,
    /// Proposals dropped before scoring (duplicates, failed coin flips,
    /// impossible moves).
    pub abandoned: u64,
    /// Candidates whose posterior could not be factorised.
    pub rank_failures: u64,
}

impl MoveCounter {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub birth: MoveCounter,
    pub death: MoveCounter,
    pub mutate_degree: MoveCounter,
    pub mutate_variable: MoveCounter,
    pub g0: MoveCounter,
}

impl MoveStats {
    pub fn counter_mut(&mut self, kind: MoveKind) -> &mut MoveCounter {
        match kind {
            MoveKind::Birth => &mut self.birth,
            MoveKind::Death => &mut self.death,
            MoveKind::MutateDegree => &mut self.mutate_degree,
            MoveKind::MutateVariable => &mut self.mutate_variable,
        }
    }

    pub fn mutation_rates(&self) -> [f64; 2] {
        [
            self.mutate_degree.acceptance_rate(),
            self.mutate_variable.acceptance_rate(),
        ]
    }
}

/// Current state of one chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub basis: BasisSet,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub g0sq: f64,
    pub lambda: f64,
    /// Number of non-intercept terms in which each input is active.
    pub inclusion_counts: Vec<u32>,
    /// Probabilities of (degree mutation, variable mutation).
    pub mutate_weights: [f64; 2],
    pub move_stats: MoveStats,
    pub posterior: ConditionalPosterior,
}

impl ChainState {
    pub fn n_terms(&self) -> usize {
        self.basis.n_terms()
    }

    /// Inclusion counts recomputed from the basis.
    pub fn recount(&self) -> Vec<u32> {
        let p = self.inclusion_counts.len();
        let mut counts = vec![0u32; p];
        for mi in &self.basis.indices()[1..] {
            for (j, _) in mi.active() {
                counts[j] += 1;
            }
        }
        counts
    }
}

/// One stored posterior draw. `indices[0]` is the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub indices: Vec<MultiIndex>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub g0sq: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

/// Thinned post-burn-in draws of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub p: usize,
    pub draws: Vec<Draw>,
    pub provenance: Provenance,
    pub stats: MoveStats,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn model_sizes(&self) -> Vec<usize> {
        self.draws.iter().map(|d| d.indices.len() - 1).collect()
    }
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_xy(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(KhaosError::InvalidArgument(format!(
            "X has {} rows but y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < 2 || x.ncols() == 0 {
        return Err(KhaosError::InvalidArgument(
            "need at least two rows and one input column".into(),
        ));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(KhaosError::InvalidArgument(format!(
            "response is not finite at row {i}"
        )));
    }
    Ok(())
}

/// A running chain over one dataset.
pub struct Sampler {
    table: UnivariateTable,
    y: Vec<f64>,
    prior: PriorSpec,
    b_g: f64,
    cfg: SamplerConfig,
    proposal: ProposalConfig,
    log_card: f64,
    fixed_sigma2: Option<f64>,
    state: ChainState,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(x: &DMatrix<f64>, y: &[f64], prior: &PriorSpec, cfg: &SamplerConfig) -> Result<Self> {
        Self::build(x, y, prior, cfg, None)
    }

    /// A chain whose noise variance is held at `sigma2` (used by the
    /// ordinal wrapper, where the latent noise is fixed at 1).
    pub fn with_fixed_sigma2(
        x: &DMatrix<f64>,
        y: &[f64],
        prior: &PriorSpec,
        cfg: &SamplerConfig,
        sigma2: f64,
    ) -> Result<Self> {
        Self::build(x, y, prior, cfg, Some(sigma2))
    }

    fn build(
        x: &DMatrix<f64>,
        y: &[f64],
        prior: &PriorSpec,
        cfg: &SamplerConfig,
        fixed_sigma2: Option<f64>,
    ) -> Result<Self> {
        prior.validate()?;
        cfg.validate()?;
        check_xy(x, y)?;
        let p = x.ncols();
        let n = x.nrows();
        let q_max = prior.q_max.min(p).min(prior.d_max);
        let space = CandidateSpace::new(p, prior.d_max, q_max)?;
        let table = UnivariateTable::new(x, prior.d_max)?;
        let proposal = ProposalConfig {
            p,
            d_max: prior.d_max,
            q_max,
            s_q: prior.s_q,
            s_d: prior.s_d,
            p_birth: cfg.p_birth,
            p_death: cfg.p_death,
            dr_cap: cfg.delayed_rejection_cap,
        };
        let b_g = prior.effective_b_g(n);
        let g0sq = b_g / (prior.a_g + 1.0);
        let basis = BasisSet::intercept_only(n, p);
        let precision = prior_cov_inverse(&basis, prior, g0sq);
        let posterior = conditional_posterior_with(&basis, y, prior, &precision)?;
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sigma2 = fixed_sigma2.unwrap_or(if var > 0.0 { var } else { 1.0 });
        let mutate_weights = if p >= 2 { [0.5, 0.5] } else { [1.0, 0.0] };
        let state = ChainState {
            basis,
            beta: vec![mean],
            sigma2,
            g0sq,
            lambda: 1.0,
            inclusion_counts: vec![0; p],
            mutate_weights,
            move_stats: MoveStats::default(),
            posterior,
        };
        Ok(Sampler {
            table,
            y: y.to_vec(),
            prior: PriorSpec {
                q_max,
                ..prior.clone()
            },
            b_g,
            cfg: cfg.clone(),
            proposal,
            log_card: (cardinality(&space) as f64).ln(),
            fixed_sigma2,
            state,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn proposal_config(&self) -> &ProposalConfig {
        &self.proposal
    }

    /// Replaces the response (same rows) and refreshes the cached posterior.
    pub fn set_response(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(KhaosError::InvalidArgument("response length changed".into()));
        }
        self.y.copy_from_slice(y);
        self.state.posterior = self.posterior_for(&self.state.basis, self.state.g0sq)?;
        Ok(())
    }

    /// Current fitted values `Psi beta`.
    pub fn fitted(&self) -> Vec<f64> {
        self.state.basis.fitted(&self.state.beta)
    }

    fn posterior_for(&self, basis: &BasisSet, g0sq: f64) -> Result<ConditionalPosterior> {
        let precision = prior_cov_inverse(basis, &self.prior, g0sq);
        conditional_posterior_with(basis, &self.y, &self.prior, &precision)
    }

    fn log_ml(&self, cp: &ConditionalPosterior) -> f64 {
        match self.fixed_sigma2 {
            Some(s2) => cp.log_marginal_known_sigma(s2),
            None => cp.log_marginal,
        }
    }

    /// Scores `cand` against the current state; on acceptance installs it.
    fn try_accept(&mut self, kind: MoveKind, cand: BasisSet, log_extra: f64) -> Result<bool> {
        let cp = match self.posterior_for(&cand, self.state.g0sq) {
            Ok(cp) => cp,
            Err(KhaosError::NumericalRank(_)) => {
                self.state.move_stats.counter_mut(kind).rank_failures += 1;
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        let log_alpha = self.log_ml(&cp) - self.log_ml(&self.state.posterior) + log_extra;
        let u: f64 = self.rng.random();
        if u.ln() < log_alpha {
            self.state.basis = cand;
            self.state.posterior = cp;
            self.state.move_stats.counter_mut(kind).accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn abandon(&mut self, kind: MoveKind) -> Result<bool> {
        self.state.move_stats.counter_mut(kind).abandoned += 1;
        Ok(false)
    }

    /// Log prior ratio for a birth from a model with `m` terms.
    pub fn log_prior_birth(&self, m: usize) -> f64 {
        let m = m as f64;
        (m + self.prior.a_m).ln() - (m + 1.0).ln() - (self.prior.b_m + 1.0).ln() - self.log_card
    }

    /// Log prior ratio for a death from a model with `m` terms.
    pub fn log_prior_death(&self, m: usize) -> f64 {
        -self.log_prior_birth(m - 1)
    }

    pub fn birth_step(&mut self) -> Result<bool> {
        let kind = MoveKind::Birth;
        self.state.move_stats.birth.attempted += 1;
        let m = self.state.n_terms();
        if m >= self.cfg.m_max {
            return self.abandon(kind);
        }
        let Some((alpha, log_a)) =
            propose_birth(&self.proposal, &self.state.inclusion_counts, &mut self.rng)
        else {
            return self.abandon(kind);
        };
        if self.state.basis.contains(&alpha) {
            return self.abandon(kind);
        }
        let column = self.table.column(&alpha);
        let cand = self.state.basis.with_added(alpha.clone(), column);
        let log_extra = self.log_prior_birth(m) + log_a;
        let accepted = self.try_accept(kind, cand, log_extra)?;
        if accepted {
            for (j, _) in alpha.active() {
                self.state.inclusion_counts[j] += 1;
            }
            self.state.beta.push(0.0);
        }
        Ok(accepted)
    }

    pub fn death_step(&mut self) -> Result<bool> {
        let kind = MoveKind::Death;
        self.state.move_stats.death.attempted += 1;
        let m = self.state.n_terms();
        if m == 0 {
            return self.abandon(kind);
        }
        let k = self.rng.random_range(1..=m);
        let alpha = self.state.basis.indices()[k].clone();
        let mut counts_after = self.state.inclusion_counts.clone();
        for (j, _) in alpha.active() {
            counts_after[j] -= 1;
        }
        let log_a = log_death_ratio(&self.proposal, &counts_after, &alpha);
        let cand = self.state.basis.with_removed(k);
        let log_extra = self.log_prior_death(m) + log_a;
        let accepted = self.try_accept(kind, cand, log_extra)?;
        if accepted {
            self.state.inclusion_counts = counts_after;
            self.state.beta.remove(k);
        }
        Ok(accepted)
    }

    pub fn mutate_degree_step(&mut self) -> Result<bool> {
        let kind = MoveKind::MutateDegree;
        self.state.move_stats.mutate_degree.attempted += 1;
        let m = self.state.n_terms();
        if m == 0 {
            return self.abandon(kind);
        }
        let k = self.rng.random_range(1..=m);
        let alpha = self.state.basis.indices()[k].clone();
        let q = alpha.order();
        let d_curr = alpha.degree();
        let d_cand = sample_degree(q as usize, self.prior.d_max, self.prior.s_d, &mut self.rng);
        let parts = sample_composition(d_cand, q, &mut self.rng)?;
        let mut new = vec![0u32; alpha.dim()];
        for ((j, _), a) in alpha.active().zip(parts) {
            new[j] = a;
        }
        let new = MultiIndex::new(new);
        if new == alpha || self.state.basis.contains(&new) {
            return self.abandon(kind);
        }
        let log_a = log_mutate_degree_ratio(q, d_curr, d_cand, self.prior.s_d);
        let column = self.table.column(&new);
        let cand = self.state.basis.with_replaced(k, new, column);
        self.try_accept(kind, cand, log_a)
    }

    pub fn mutate_variable_step(&mut self) -> Result<bool> {
        let kind = MoveKind::MutateVariable;
        self.state.move_stats.mutate_variable.attempted += 1;
        let m = self.state.n_terms();
        if m == 0 {
            return self.abandon(kind);
        }
        let k = self.rng.random_range(1..=m);
        let alpha = self.state.basis.indices()[k].clone();
        let active = alpha.active_set();
        if active.len() >= alpha.dim() {
            return self.abandon(kind);
        }
        let old = active[self.rng.random_range(0..active.len())];
        let dist = swap_distribution(&self.state.inclusion_counts, &alpha);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut new = dist.last().expect("nonempty").0;
        for (j, prob) in &dist {
            acc += prob;
            if u < acc {
                new = *j;
                break;
            }
        }
        let swapped = swap_variable(&alpha, old, new);
        if self.state.basis.contains(&swapped) {
            return self.abandon(kind);
        }
        let log_a = log_mutate_variable_ratio(&self.state.inclusion_counts, &alpha, old, new);
        let column = self.table.column(&swapped);
        let cand = self.state.basis.with_replaced(k, swapped, column);
        let accepted = self.try_accept(kind, cand, log_a)?;
        if accepted {
            self.state.inclusion_counts[old] -= 1;
            self.state.inclusion_counts[new] += 1;
        }
        Ok(accepted)
    }

    /// One transdimensional move chosen by `(P_B, P_D, P_M)`.
    pub fn model_step(&mut self) -> Result<(MoveKind, bool)> {
        let u: f64 = self.rng.random();
        if u < self.cfg.p_birth {
            Ok((MoveKind::Birth, self.birth_step()?))
        } else if u < self.cfg.p_birth + self.cfg.p_death {
            Ok((MoveKind::Death, self.death_step()?))
        } else {
            let v: f64 = self.rng.random();
            if v < self.state.mutate_weights[0] {
                Ok((MoveKind::MutateDegree, self.mutate_degree_step()?))
            } else {
                Ok((MoveKind::MutateVariable, self.mutate_variable_step()?))
            }
        }
    }

    /// Gibbs updates of `(beta, sigma^2)`, `lambda`, and the `g0^2` MH step.
    pub fn parameter_step(&mut self) -> Result<()> {
        let precision = prior_cov_inverse(&self.state.basis, &self.prior, self.state.g0sq);
        match self.fixed_sigma2 {
            Some(s2) => {
                self.state.beta = self.state.posterior.sample_beta(s2, &mut self.rng);
            }
            None => {
                let (beta, sigma2) = gibbs_beta_sigma(
                    &self.state.posterior,
                    &self.state.basis,
                    &self.y,
                    &self.prior,
                    &precision,
                    &self.state.beta,
                    &mut self.rng,
                );
                self.state.beta = beta;
                self.state.sigma2 = sigma2;
            }
        }
        self.state.lambda = gibbs_lambda(self.state.n_terms(), &self.prior, &mut self.rng);
        if self.prior.uses_g0() {
            self.state.move_stats.g0.attempted += 1;
            let (g0sq, accepted) = mh_update_g0(
                self.state.g0sq,
                &self.state.basis,
                &self.prior,
                self.b_g,
                self.cfg.laplace,
                &mut self.rng,
            )?;
            if accepted {
                match self.posterior_for(&self.state.basis, g0sq) {
                    Ok(cp) => {
                        self.state.g0sq = g0sq;
                        self.state.posterior = cp;
                        self.state.move_stats.g0.accepted += 1;
                    }
                    Err(KhaosError::NumericalRank(_)) => {
                        self.state.move_stats.g0.rank_failures += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(())
    }

    /// One full iteration; `iter` drives burn-in adaptation.
    pub fn step(&mut self, iter: usize) -> Result<()> {
        self.model_step()?;
        self.parameter_step()?;
        if iter < self.cfg.n_burn
            && (iter + 1) % self.cfg.adapt_every == 0
            && self.state.inclusion_counts.len() >= 2
        {
            self.state.mutate_weights =
                adapt_mutation_weights(self.state.move_stats.mutation_rates());
        }
        Ok(())
    }

    pub fn current_draw(&self) -> Draw {
        Draw {
            indices: self.state.basis.indices().to_vec(),
            beta: self.state.beta.clone(),
            sigma2: self.state.sigma2,
            g0sq: self.state.g0sq,
            lambda: self.state.lambda,
        }
    }

    pub fn is_recorded(&self, iter: usize) -> bool {
        iter >= self.cfg.n_burn && (iter - self.cfg.n_burn + 1) % self.cfg.n_thin == 0
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.cfg.seed,
            config_hash: config_hash(&(&self.prior, &self.cfg)),
        }
    }

    /// Runs the configured number of iterations.
    pub fn run(mut self) -> Result<PosteriorDraws> {
        let mut draws = Vec::with_capacity(self.cfg.n_draws());
        for iter in 0..self.cfg.n_iter {
            self.step(iter)?;
            if self.is_recorded(iter) {
                draws.push(self.current_draw());
            }
        }
        Ok(PosteriorDraws {
            p: self.table.dim(),
            draws,
            provenance: self.provenance(),
            stats: self.state.move_stats.clone(),
        })
    }
}

/// Fits the adaptive PCE to `x` (rows in `[0,1]^p`) and `y`.
pub fn run_chain(
    x: &DMatrix<f64>,
    y: &[f64],
    prior: &PriorSpec,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws> {
    Sampler::new(x, y, prior, cfg)?.run()
}

/// Predictive samples, one row per draw and one column per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictive {
    pub samples: DMatrix<f64>,
}

impl Predictive {
    pub fn n_points(&self) -> usize {
        self.samples.ncols()
    }

    pub fn point_samples(&self, j: usize) -> Vec<f64> {
        self.samples.column(j).iter().copied().collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.n_points())
            .map(|j| self.samples.column(j).mean())
            .collect()
    }

    pub fn sd(&self) -> Vec<f64> {
        let m = self.samples.nrows() as f64;
        (0..self.n_points())
            .map(|j| {
                let col = self.samples.column(j);
                let mu = col.mean();
                if m < 2.0 {
                    return 0.0;
                }
                (col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (m - 1.0)).sqrt()
            })
            .collect()
    }

    /// Per-point empirical quantile (linear interpolation between order
    /// statistics).
    pub fn quantile(&self, q: f64) -> Vec<f64> {
        (0..self.n_points())
            .map(|j| quantile(&self.point_samples(j), q))
            .collect()
    }
}

/// Empirical quantile with linear interpolation.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Posterior predictive samples at `x_new`. With `include_noise` each draw
/// adds `N(0, sigma^2)` noise using an RNG seeded by `seed`.
pub fn predict(
    draws: &PosteriorDraws,
    x_new: &DMatrix<f64>,
    include_noise: bool,
    seed: u64,
) -> Result<Predictive> {
    if x_new.ncols() != draws.p {
        return Err(KhaosError::InvalidArgument(format!(
            "model has {} inputs, new data has {}",
            draws.p,
            x_new.ncols()
        )));
    }
    let max_deg = draws
        .draws
        .iter()
        .flat_map(|d| d.indices.iter().map(|m| m.degree() as usize))
        .max()
        .unwrap_or(0);
    let table = UnivariateTable::new(x_new, max_deg)?;
    let n = x_new.nrows();
    let mut cache: HashMap<&MultiIndex, Vec<f64>> = HashMap::new();
    let mut samples = DMatrix::zeros(draws.len(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (r, draw) in draws.draws.iter().enumerate() {
        let mut row = vec![0.0; n];
        for (mi, &b) in draw.indices.iter().zip(&draw.beta) {
            let col = cache.entry(mi).or_insert_with(|| table.column(mi));
            for (o, &v) in row.iter_mut().zip(col.iter()) {
                *o += b * v;
            }
        }
        if include_noise {
            let normal = Normal::new(0.0, draw.sigma2.sqrt()).expect("finite variance");
            for o in row.iter_mut() {
                *o += normal.sample(&mut rng);
            }
        }
        for (j, v) in row.into_iter().enumerate() {
            samples[(r, j)] = v;
        }
    }
    Ok(Predictive { samples })
}
