//! Greedy sparse Bayesian PCE: candidates are ordered by marginal and then
//! partial correlation with the response, the nested path is cut where the
//! selection score stops improving, and the candidate space is enriched
//! while the chosen model touches its degree or order limit.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_candidates, BasisSet, CandidateSpace, MultiIndex, UnivariateTable};
use crate::error::{KhaosError, Result};
use crate::linear::{conditional_posterior, PriorFamily, PriorSpec};

/// Relative residual norm below which a candidate counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Log evidence under the modified g-prior with `g0^2 = n`.
    BayesFactor,
    /// Laplace evidence approximation at the least-squares fit.
    Kic,
}

impl FromStr for Criterion {
    type Err = KhaosError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayes-factor" | "bf" => Ok(Criterion::BayesFactor),
            "kic" => Ok(Criterion::Kic),
            other => Err(KhaosError::InvalidArgument(format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Enrichment {
    FullRebuildEarlyStop,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseConfig {
    pub d_max: usize,
    pub q_max: usize,
    pub criterion: Criterion,
    pub enrichment: Enrichment,
    /// Maximum number of enrichment stages after the first.
    pub budget: usize,
    /// Largest candidate set a stage may build.
    pub candidate_cap: u64,
    /// Hyperparameters for the evidence; `family`, `zeta`, the sigma prior
    /// and `tau2` are used.
    pub prior: PriorSpec,
}

impl Default for SparseConfig {
    fn default() -> Self {
        SparseConfig {
            d_max: 2,
            q_max: 2,
            criterion: Criterion::BayesFactor,
            enrichment: Enrichment::FullRebuildEarlyStop,
            budget: 10,
            candidate_cap: 20_000,
            prior: PriorSpec {
                family: PriorFamily::ModifiedGprior,
                zeta: 1.0,
                ..PriorSpec::default()
            },
        }
    }
}

/// Result of a sparse fit. `beta_hat[0]` is the intercept; `selected`
/// holds the non-intercept terms in path order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseFit {
    pub p: usize,
    pub selected: Vec<MultiIndex>,
    pub beta_hat: Vec<f64>,
    /// Scores of the nested models evaluated at the final stage, `m = 0, 1, ...`.
    pub score_path: Vec<f64>,
    /// Best score reached at each stage.
    pub stage_scores: Vec<f64>,
    /// `(d_max, q_max)` of each stage that was run.
    pub enrichment_history: Vec<(usize, usize)>,
    /// Posterior mean of the noise variance at the selected model.
    pub sigma2_hat: f64,
    /// Row-major `Cov(beta | y)` at `sigma2_hat`.
    pub beta_cov: Vec<f64>,
}

impl SparseFit {
    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::intercept(self.p)];
        out.extend(self.selected.iter().cloned());
        out
    }

    pub fn m_star(&self) -> usize {
        self.selected.len()
    }
}

fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let c: Vec<f64> = v.iter().map(|a| a - mean).collect();
    let ss = c.iter().map(|a| a * a).sum::<f64>();
    (c, ss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared sample correlation of each column with `y` (0 for constant
/// columns) and the ordering by decreasing value, ties broken by the
/// multi-index order.
pub fn rank_by_correlation(
    candidates: &[MultiIndex],
    columns: &[Vec<f64>],
    y: &[f64],
) -> (Vec<usize>, Vec<f64>) {
    let (yc, syy) = centered(y);
    let r2: Vec<f64> = columns
        .par_iter()
        .map(|col| {
            let (cc, scc) = centered(col);
            if scc <= 0.0 || syy <= 0.0 {
                return 0.0;
            }
            let sxy = dot(&cc, &yc);
            sxy * sxy / (scc * syy)
        })
        .collect();
    let mut order: Vec<usize> = (0..columns.len()).collect();
    order.sort_by(|&a, &b| {
        r2[b]
            .total_cmp(&r2[a])
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    (order, r2)
}

/// Greedy partial-correlation ordering by sequential residualisation.
///
/// Each call to `next` places the remaining candidate whose residual is
/// most correlated with the residual response, then projects that
/// direction out of the response and all remaining candidates. The
/// intercept is projected out at construction.
pub struct PartialCorrelationPath {
    q: Vec<Vec<f64>>,
    ry: Vec<f64>,
    residuals: Vec<Vec<f64>>,
    norms: Vec<f64>,
    remaining: Vec<usize>,
}

impl PartialCorrelationPath {
    /// `order` lists candidate positions; ties in partial correlation keep
    /// this order.
    pub fn new(columns: &[Vec<f64>], y: &[f64], order: &[usize]) -> Self {
        let (ry, _) = centered(y);
        let n = y.len();
        let e = vec![1.0 / (n as f64).sqrt(); n];
        let residuals: Vec<Vec<f64>> = columns.par_iter().map(|c| centered(c).0).collect();
        let norms = columns.iter().map(|c| dot(c, c).sqrt().max(1.0)).collect();
        PartialCorrelationPath {
            q: vec![e],
            ry,
            residuals,
            norms,
            remaining: order.to_vec(),
        }
    }

    fn partial_r2(&self, k: usize, ryy: f64) -> f64 {
        let r = &self.residuals[k];
        let rr = dot(r, r);
        if rr.sqrt() <= COLLINEAR_TOL * self.norms[k] || ryy <= 0.0 {
            return 0.0;
        }
        let ry = dot(r, &self.ry);
        (ry * ry / (rr * ryy)).min(1.0)
    }

    fn project_out(v: &mut [f64], q: &[f64]) {
        let c = dot(v, q);
        for (a, b) in v.iter_mut().zip(q) {
            *a -= c * b;
        }
    }
}

impl Iterator for PartialCorrelationPath {
    /// `(candidate position, squared partial correlation)`.
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        if self.remaining.is_empty() {
            return None;
        }
        let ryy = dot(&self.ry, &self.ry);
        let scores: Vec<f64> = self
            .remaining
            .par_iter()
            .map(|&k| self.partial_r2(k, ryy))
            .collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        let k = self.remaining.remove(best);
        let rho2 = scores[best];
        let mut v = std::mem::take(&mut self.residuals[k]);
        if rho2 > 0.0 || dot(&v, &v).sqrt() > COLLINEAR_TOL * self.norms[k] {
            // one reorthogonalisation pass against the accepted directions
            for q in &self.q {
                Self::project_out(&mut v, q);
            }
            let nv = dot(&v, &v).sqrt();
            if nv > COLLINEAR_TOL * self.norms[k] {
                for a in v.iter_mut() {
                    *a /= nv;
                }
                Self::project_out(&mut self.ry, &v);
                // placed candidates hold empty residuals, which project to nothing
                self.residuals
                    .par_iter_mut()
                    .filter(|r| !r.is_empty())
                    .for_each(|r| Self::project_out(r, &v));
                self.q.push(v);
            }
        }
        Some((k, rho2))
    }
}

/// Full greedy partial-correlation ordering with each candidate's squared
/// partial correlation given the ones placed before it.
pub fn rank_by_partial_correlation(
    columns: &[Vec<f64>],
    y: &[f64],
    order: &[usize],
) -> Vec<(usize, f64)> {
    PartialCorrelationPath::new(columns, y, order).collect()
}

/// Scores nested models built by appending one term at a time.
pub struct NestedScorer<'a> {
    basis: BasisSet,
    y: &'a [f64],
    criterion: Criterion,
    prior: PriorSpec,
}

impl<'a> NestedScorer<'a> {
    pub fn new(y: &'a [f64], p: usize, criterion: Criterion, prior: &PriorSpec) -> Self {
        NestedScorer {
            basis: BasisSet::intercept_only(y.len(), p),
            y,
            criterion,
            prior: prior.clone(),
        }
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn push(&mut self, mi: MultiIndex, column: Vec<f64>) {
        self.basis = self.basis.with_added(mi, column);
    }

    pub fn pop(&mut self) {
        let k = self.basis.len() - 1;
        self.basis = self.basis.with_removed(k);
    }

    /// Score of the current nested model; larger is better.
    pub fn score(&self) -> f64 {
        let s = match self.criterion {
            Criterion::BayesFactor => bayes_factor_score(&self.basis, self.y, &self.prior),
            Criterion::Kic => kic_score(&self.basis, self.y, &self.prior),
        };
        s.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Log evidence with `g0^2` fixed at `n`.
pub fn bayes_factor_score(basis: &BasisSet, y: &[f64], prior: &PriorSpec) -> Result<f64> {
    let g0sq = y.len() as f64;
    Ok(conditional_posterior(basis, y, prior, g0sq)?.log_marginal)
}

/// Laplace evidence approximation `-KIC / 2` at the least-squares fit, with
/// a `N(0, tau^2 I)` coefficient prior and plug-in noise variance.
pub fn kic_score(basis: &BasisSet, y: &[f64], prior: &PriorSpec) -> Result<f64> {
    let gram = basis.gram().clone();
    let k = gram.nrows() as f64;
    let n = y.len() as f64;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| KhaosError::NumericalRank("singular design".into()))?;
    let beta = chol.solve(&DVector::from_vec(basis.xt_vec(y)));
    let fitted = basis.fitted(beta.as_slice());
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let s2 = (rss / n).max(f64::MIN_POSITIVE);
    let two_pi = 2.0 * std::f64::consts::PI;
    let log_lik = -0.5 * n * (two_pi * s2).ln() - 0.5 * n;
    let log_prior = -0.5 * k * (two_pi * prior.tau2).ln() - 0.5 * beta.norm_squared() / prior.tau2;
    let log_det_gram = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let log_det_fisher = log_det_gram - k * s2.ln();
    Ok(log_lik + log_prior + 0.5 * k * two_pi.ln() - 0.5 * log_det_fisher)
}

/// Walks the nested path `M_0, M_1, ...` and stops at the first `m` whose
/// successor does not score higher. Returns `(m*, scores evaluated)`.
pub fn select_model_size(
    ordered: &[MultiIndex],
    x: &DMatrix<f64>,
    y: &[f64],
    criterion: Criterion,
    prior: &PriorSpec,
) -> Result<(usize, Vec<f64>)> {
    if ordered.is_empty() {
        return Err(KhaosError::InvalidArgument("no ordered candidates".into()));
    }
    let d = ordered.iter().map(|m| m.degree() as usize).max().unwrap_or(0);
    let table = UnivariateTable::new(x, d)?;
    let mut scorer = NestedScorer::new(y, x.ncols(), criterion, prior);
    let mut path = vec![scorer.score()];
    for (m, mi) in ordered.iter().enumerate() {
        scorer.push(mi.clone(), table.column(mi));
        let s = scorer.score();
        path.push(s);
        if s <= path[m] {
            return Ok((m, path));
        }
    }
    Ok((ordered.len(), path))
}

struct Stage {
    selected: Vec<MultiIndex>,
    path: Vec<f64>,
    best: f64,
}

fn run_stage(
    table: &UnivariateTable,
    y: &[f64],
    space: &CandidateSpace,
    cfg: &SparseConfig,
) -> Result<Stage> {
    let candidates = enumerate_candidates(space, u128::from(cfg.candidate_cap))?;
    let columns: Vec<Vec<f64>> = candidates.par_iter().map(|mi| table.column(mi)).collect();
    let (order, _) = rank_by_correlation(&candidates, &columns, y);
    let mut scorer = NestedScorer::new(y, space.p, cfg.criterion, &cfg.prior);
    let mut path = vec![scorer.score()];
    let mut selected = Vec::new();
    for (k, rho2) in PartialCorrelationPath::new(&columns, y, &order) {
        if rho2 <= 0.0 {
            break;
        }
        scorer.push(candidates[k].clone(), columns[k].clone());
        let s = scorer.score();
        let prev = *path.last().expect("nonempty");
        path.push(s);
        if s <= prev {
            break;
        }
        selected.push(candidates[k].clone());
    }
    let best = path[selected.len()];
    Ok(Stage {
        selected,
        path,
        best,
    })
}

fn finish(p: usize, table: &UnivariateTable, y: &[f64], cfg: &SparseConfig, stage: Stage, stage_scores: Vec<f64>, history: Vec<(usize, usize)>) -> Result<SparseFit> {
    let mut indices = vec![MultiIndex::intercept(p)];
    indices.extend(stage.selected.iter().cloned());
    let basis = BasisSet::from_table(table, &indices)?;
    let prior = match cfg.criterion {
        Criterion::BayesFactor => cfg.prior.clone(),
        Criterion::Kic => PriorSpec {
            family: PriorFamily::Ridge,
            ..cfg.prior.clone()
        },
    };
    let cp = conditional_posterior(&basis, y, &prior, y.len() as f64)?;
    let n = y.len() as f64;
    let shape = prior.a_sigma + 0.5 * n;
    let rate = prior.b_sigma + 0.5 * cp.penalized_rss;
    let sigma2_hat = rate / (shape - 1.0);
    let cov = cp.sigma_n() * sigma2_hat;
    let k = cov.nrows();
    let beta_cov = (0..k * k).map(|i| cov[(i / k, i % k)]).collect();
    Ok(SparseFit {
        p,
        selected: stage.selected,
        beta_hat: cp.mu_n.iter().copied().collect(),
        score_path: stage.path,
        stage_scores,
        enrichment_history: history,
        sigma2_hat,
        beta_cov,
    })
}

/// Runs the greedy selection with optional full-rebuild enrichment.
pub fn fit_sparse(x: &DMatrix<f64>, y: &[f64], cfg: &SparseConfig) -> Result<SparseFit> {
    if x.nrows() != y.len() || x.nrows() < 2 {
        return Err(KhaosError::InvalidArgument(format!(
            "X has {} rows, y has {}",
            x.nrows(),
            y.len()
        )));
    }
    let p = x.ncols();
    let mut d_max = cfg.d_max;
    let mut q_max = cfg.q_max.min(p).min(d_max);
    let max_degree = cfg.d_max + cfg.budget;
    let table = UnivariateTable::new(x, max_degree)?;

    let space = CandidateSpace::new(p, d_max, q_max)?;
    let mut best = run_stage(&table, y, &space, cfg)?;
    let mut history = vec![(d_max, q_max)];
    let mut stage_scores = vec![best.best];

    if cfg.enrichment == Enrichment::FullRebuildEarlyStop {
        for _ in 0..cfg.budget {
            let hits_d = best.selected.iter().any(|m| m.degree() as usize == d_max);
            let hits_q = best.selected.iter().any(|m| m.order() as usize == q_max) && q_max < p;
            if !hits_d && !hits_q {
                break;
            }
            if hits_d {
                d_max += 1;
            }
            if hits_q {
                q_max += 1;
            }
            if q_max > d_max {
                d_max = q_max;
            }
            let space = CandidateSpace::new(p, d_max, q_max)?;
            let stage = match run_stage(&table, y, &space, cfg) {
                Ok(s) => s,
                Err(KhaosError::Capacity { .. }) => break,
                Err(e) => return Err(e),
            };
            history.push((d_max, q_max));
            stage_scores.push(stage.best);
            if stage.best <= best.best {
                break;
            }
            best = stage;
        }
    }
    finish(p, &table, y, cfg, best, stage_scores, history)
}

/// Gaussian predictive at new points.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePrediction {
    pub mean: Vec<f64>,
    /// Standard deviation of the mean function.
    pub sd_mean: Vec<f64>,
    /// Standard deviation of a new observation.
    pub sd: Vec<f64>,
}

pub fn sparse_predict(fit: &SparseFit, x_new: &DMatrix<f64>) -> Result<SparsePrediction> {
    if x_new.ncols() != fit.p {
        return Err(KhaosError::InvalidArgument(format!(
            "model has {} inputs, new data has {}",
            fit.p,
            x_new.ncols()
        )));
    }
    let indices = fit.indices();
    let d = indices.iter().map(|m| m.degree() as usize).max().unwrap_or(0);
    let table = UnivariateTable::new(x_new, d)?;
    let cols: Vec<Vec<f64>> = indices.iter().map(|m| table.column(m)).collect();
    let k = cols.len();
    let n = x_new.nrows();
    let mut mean = vec![0.0; n];
    let mut sd_mean = vec![0.0; n];
    let mut sd = vec![0.0; n];
    let mut psi = vec![0.0; k];
    for i in 0..n {
        for (j, c) in cols.iter().enumerate() {
            psi[j] = c[i];
        }
        mean[i] = dot(&psi, &fit.beta_hat);
        let mut v = 0.0;
        for a in 0..k {
            for b in 0..k {
                v += psi[a] * fit.beta_cov[a * k + b] * psi[b];
            }
        }
        let v = v.max(0.0);
        sd_mean[i] = v.sqrt();
        sd[i] = (v + fit.sigma2_hat).sqrt();
    }
    Ok(SparsePrediction { mean, sd_mean, sd })
}
