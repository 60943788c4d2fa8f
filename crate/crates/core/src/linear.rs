//! Conjugate Bayesian linear model on a PCE basis.
//!
//! `y = Psi beta + eps`, `eps ~ N(0, sigma^2 I)`, `beta | sigma^2 ~ N(0, sigma^2 S0)`,
//! `sigma^2 ~ Inv-Gamma(a_sigma, b_sigma)`. Three structures for `S0` are
//! supported: a vague ridge `tau^2 I`, Zellner's g-prior and the
//! complexity-weighted g-prior where term `m` has prior covariance scaled
//! by `g0^2 g_m g_l`.
//!
//! Under both g-prior families the intercept carries a fixed vague
//! `N(0, sigma^2 tau^2)` prior and only the non-intercept block is scaled by
//! `g0^2`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::basis::{BasisSet, MultiIndex};
use crate::error::{KhaosError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    Ridge,
    Gprior,
    ModifiedGprior,
}

impl std::str::FromStr for PriorFamily {
    type Err = KhaosError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(PriorFamily::Ridge),
            "gprior" | "g-prior" => Ok(PriorFamily::Gprior),
            "modified-gprior" => Ok(PriorFamily::ModifiedGprior),
            other => Err(KhaosError::InvalidArgument(format!(
                "unknown prior family '{other}'"
            ))),
        }
    }
}

/// Hyperparameters of the full hierarchical model.
///
/// Defaults: `a_M = b_M = 1`, `a_sigma = b_sigma = 0.01`, `tau^2 = 1e5`,
/// `zeta = 1`, `s_q = s_d = 1`. The `g0^2` prior defaults to the
/// Zellner-Siow choice `Inv-Gamma(1/2, n/2)`: `b_g` is multiplied by `n` at
/// fit time while `scale_b_g_by_n` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub a_m: f64,
    pub b_m: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub a_g: f64,
    pub b_g: f64,
    pub scale_b_g_by_n: bool,
    pub zeta: f64,
    pub tau2: f64,
    pub d_max: usize,
    pub q_max: usize,
    pub s_q: f64,
    pub s_d: f64,
    /// Use the exact full conditional for `sigma^2` (includes the prior
    /// quadratic form) instead of the likelihood-only update.
    pub exact_sigma_conditional: bool,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            family: PriorFamily::ModifiedGprior,
            a_m: 1.0,
            b_m: 1.0,
            a_sigma: 0.01,
            b_sigma: 0.01,
            a_g: 0.5,
            b_g: 0.5,
            scale_b_g_by_n: true,
            zeta: 1.0,
            tau2: 1e5,
            d_max: 16,
            q_max: 3,
            s_q: 1.0,
            s_d: 1.0,
            exact_sigma_conditional: false,
        }
    }
}

impl PriorSpec {
    pub fn ridge() -> Self {
        PriorSpec {
            family: PriorFamily::Ridge,
            ..PriorSpec::default()
        }
    }

    pub fn modified_gprior() -> Self {
        PriorSpec::default()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_M", self.a_m),
            ("b_M", self.b_m),
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
            ("a_g", self.a_g),
            ("b_g", self.b_g),
            ("tau2", self.tau2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KhaosError::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.zeta >= 0.0) {
            return Err(KhaosError::InvalidArgument(format!(
                "zeta must be >= 0, got {}",
                self.zeta
            )));
        }
        if self.s_q < 0.0 || self.s_d < 0.0 {
            return Err(KhaosError::InvalidArgument(
                "proposal exponents s_q, s_d must be >= 0".into(),
            ));
        }
        if self.d_max == 0 || self.q_max == 0 || self.q_max > self.d_max {
            return Err(KhaosError::InvalidArgument(format!(
                "need 1 <= q_max <= d_max, got d_max={}, q_max={}",
                self.d_max, self.q_max
            )));
        }
        Ok(())
    }

    pub fn uses_g0(&self) -> bool {
        self.family != PriorFamily::Ridge
    }

    /// Rate of the `g0^2` prior for a dataset of `n` rows.
    pub fn effective_b_g(&self, n: usize) -> f64 {
        if self.scale_b_g_by_n {
            self.b_g * n as f64
        } else {
            self.b_g
        }
    }
}

/// Complexity weight `g_m = (1 / (1 + q (d + q - 2)))^(zeta/2)`.
pub fn shrink_weight(mi: &MultiIndex, zeta: f64) -> f64 {
    let q = mi.order() as f64;
    let d = mi.degree() as f64;
    if q == 0.0 {
        return 1.0;
    }
    (1.0 / (1.0 + q * (d + q - 2.0))).powf(zeta / 2.0)
}

/// Weights of the non-intercept terms of `basis` under `prior`.
pub fn term_weights(basis: &BasisSet, prior: &PriorSpec) -> Vec<f64> {
    basis.indices()[1..]
        .iter()
        .map(|mi| match prior.family {
            PriorFamily::ModifiedGprior => shrink_weight(mi, prior.zeta),
            _ => 1.0,
        })
        .collect()
}

/// The elementwise factor `G[m,l] = (g0^2 g_m g_l + 1) / (g0^2 g_m g_l)`, so
/// that `G .* (Psi'Psi) = Psi'Psi + S0^-1` with
/// `S0 = g0^2 D(g) (Psi'Psi)^-1 D(g)`.
pub fn g_matrix(weights: &[f64], g0sq: f64) -> DMatrix<f64> {
    let k = weights.len();
    DMatrix::from_fn(k, k, |m, l| {
        let s = g0sq * weights[m] * weights[l];
        (s + 1.0) / s
    })
}

/// Structure of the prior precision `S0^-1` for one basis.
#[derive(Clone, Debug)]
pub enum PriorPrecision {
    /// `S0 = tau^2 I`.
    Ridge { tau2: f64 },
    /// Intercept `tau^2`, non-intercept block `g0^2 D(g) (Psi1'Psi1)^-1 D(g)`.
    GBlock {
        tau2: f64,
        g0sq: f64,
        weights: Vec<f64>,
    },
}

/// Builds the prior precision structure for `basis`.
pub fn prior_cov_inverse(basis: &BasisSet, prior: &PriorSpec, g0sq: f64) -> PriorPrecision {
    match prior.family {
        PriorFamily::Ridge => PriorPrecision::Ridge { tau2: prior.tau2 },
        _ => PriorPrecision::GBlock {
            tau2: prior.tau2,
            g0sq,
            weights: term_weights(basis, prior),
        },
    }
}

impl PriorPrecision {
    /// `Psi'Psi + S0^-1`.
    pub fn posterior_precision(&self, gram: &DMatrix<f64>) -> DMatrix<f64> {
        let k = gram.nrows();
        match self {
            PriorPrecision::Ridge { tau2 } => {
                let mut p = gram.clone();
                for i in 0..k {
                    p[(i, i)] += 1.0 / tau2;
                }
                p
            }
            PriorPrecision::GBlock {
                tau2,
                g0sq,
                weights,
            } => {
                let mut p = gram.clone();
                p[(0, 0)] += 1.0 / tau2;
                for m in 1..k {
                    for l in 1..k {
                        let s = g0sq * weights[m - 1] * weights[l - 1];
                        p[(m, l)] *= (s + 1.0) / s;
                    }
                }
                p
            }
        }
    }

    /// The matrix `S0^-1` itself.
    pub fn dense(&self, gram: &DMatrix<f64>) -> DMatrix<f64> {
        let mut p = self.posterior_precision(gram);
        p -= gram;
        p
    }

    /// `log |S0|`.
    pub fn log_det_prior_cov(&self, gram: &DMatrix<f64>) -> Result<f64> {
        let k = gram.nrows();
        match self {
            PriorPrecision::Ridge { tau2 } => Ok(k as f64 * tau2.ln()),
            PriorPrecision::GBlock {
                tau2,
                g0sq,
                weights,
            } => {
                let m = k - 1;
                let mut out = tau2.ln();
                if m == 0 {
                    return Ok(out);
                }
                let block = gram.view((1, 1), (m, m)).clone_owned();
                let chol = Cholesky::new(block).ok_or_else(|| {
                    KhaosError::NumericalRank("Gram matrix of basis terms is singular".into())
                })?;
                let log_det_gram = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                out += m as f64 * g0sq.ln();
                out += 2.0 * weights.iter().map(|w| w.ln()).sum::<f64>();
                out -= log_det_gram;
                Ok(out)
            }
        }
    }

    /// `beta' S0^-1 beta`.
    pub fn quad_form(&self, beta: &[f64], gram: &DMatrix<f64>) -> f64 {
        match self {
            PriorPrecision::Ridge { tau2 } => beta.iter().map(|b| b * b).sum::<f64>() / tau2,
            PriorPrecision::GBlock {
                tau2,
                g0sq,
                weights,
            } => {
                let k = beta.len();
                let mut acc = 0.0;
                for m in 1..k {
                    let bm = beta[m] / weights[m - 1];
                    for l in 1..k {
                        acc += bm * gram[(m, l)] * beta[l] / weights[l - 1];
                    }
                }
                beta[0] * beta[0] / tau2 + acc / g0sq
            }
        }
    }
}

/// Conditional posterior of `beta` given the basis (and `g0^2`).
#[derive(Clone, Debug)]
pub struct ConditionalPosterior {
    /// Lower Cholesky factor of the posterior precision `Sigma_n^-1`.
    pub chol: Cholesky<f64, Dyn>,
    pub mu_n: DVector<f64>,
    pub log_det_sigma_n: f64,
    pub log_det_prior_cov: f64,
    /// `||y - Psi mu_n||^2 + mu_n' S0^-1 mu_n`, equal to `y'y - mu_n' Sigma_n^-1 mu_n`.
    pub penalized_rss: f64,
    pub n: usize,
    /// Log marginal likelihood with `beta` and `sigma^2` integrated out.
    pub log_marginal: f64,
}

impl ConditionalPosterior {
    pub fn dim(&self) -> usize {
        self.mu_n.len()
    }

    /// Explicit `Sigma_n`.
    pub fn sigma_n(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Log marginal likelihood with `beta` integrated and `sigma^2` known.
    pub fn log_marginal_known_sigma(&self, sigma2: f64) -> f64 {
        let n = self.n as f64;
        -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * self.log_det_prior_cov
            + 0.5 * self.log_det_sigma_n
            - 0.5 * self.penalized_rss / sigma2
    }

    /// One draw of `beta ~ N(mu_n, sigma2 Sigma_n)`.
    pub fn sample_beta<R: Rng + ?Sized>(&self, sigma2: f64, rng: &mut R) -> Vec<f64> {
        let k = self.dim();
        let z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // L' w = z  =>  Cov(w) = (L L')^-1
        let w = self
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("triangular factor is nonsingular");
        (0..k).map(|i| self.mu_n[i] + sigma2.sqrt() * w[i]).collect()
    }
}

/// Conditional posterior and closed-form log marginal likelihood.
pub fn conditional_posterior(
    basis: &BasisSet,
    y: &[f64],
    prior: &PriorSpec,
    g0sq: f64,
) -> Result<ConditionalPosterior> {
    let precision = prior_cov_inverse(basis, prior, g0sq);
    conditional_posterior_with(basis, y, prior, &precision)
}

pub(crate) fn conditional_posterior_with(
    basis: &BasisSet,
    y: &[f64],
    prior: &PriorSpec,
    precision: &PriorPrecision,
) -> Result<ConditionalPosterior> {
    if y.len() != basis.nrows() {
        return Err(KhaosError::InvalidArgument(format!(
            "y has length {}, basis has {} rows",
            y.len(),
            basis.nrows()
        )));
    }
    let gram = basis.gram();
    let p = precision.posterior_precision(gram);
    let chol = Cholesky::new(p)
        .ok_or_else(|| KhaosError::NumericalRank("posterior precision not positive definite".into()))?;
    let log_det_precision = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    if !log_det_precision.is_finite() {
        return Err(KhaosError::NumericalRank("posterior precision is singular".into()));
    }
    let xty = DVector::from_vec(basis.xt_vec(y));
    let mu_n = chol.solve(&xty);
    let log_det_prior_cov = precision.log_det_prior_cov(gram)?;
    let fitted = basis.fitted(mu_n.as_slice());
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let penalized_rss = rss + precision.quad_form(mu_n.as_slice(), gram);

    let n = y.len();
    let nf = n as f64;
    let a = prior.a_sigma;
    let b = prior.b_sigma;
    let log_marginal = -0.5 * nf * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det_prior_cov
        - 0.5 * log_det_precision
        + a * b.ln()
        - (a + 0.5 * nf) * (b + 0.5 * penalized_rss).ln()
        + ln_gamma(a + 0.5 * nf)
        - ln_gamma(a);
    Ok(ConditionalPosterior {
        chol,
        mu_n,
        log_det_sigma_n: -log_det_precision,
        log_det_prior_cov,
        penalized_rss,
        n,
        log_marginal,
    })
}

/// Draws from `Inv-Gamma(shape, rate)`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
    1.0 / g.sample(rng)
}

/// Log density of `Inv-Gamma(shape, rate)` at `x`.
pub fn inv_gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x
}

/// Gibbs draw of `sigma^2` then `beta`.
///
/// `sigma^2` uses the residuals at `prev_beta` (same length as the basis);
/// `beta` is then drawn from `N(mu_n, sigma^2 Sigma_n)`.
pub fn gibbs_beta_sigma<R: Rng + ?Sized>(
    cp: &ConditionalPosterior,
    basis: &BasisSet,
    y: &[f64],
    prior: &PriorSpec,
    precision: &PriorPrecision,
    prev_beta: &[f64],
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let fitted = basis.fitted(prev_beta);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let n = y.len() as f64;
    let (shape, rate) = if prior.exact_sigma_conditional {
        let k = prev_beta.len() as f64;
        (
            prior.a_sigma + 0.5 * (n + k),
            prior.b_sigma + 0.5 * (rss + precision.quad_form(prev_beta, basis.gram())),
        )
    } else {
        (prior.a_sigma + 0.5 * n, prior.b_sigma + 0.5 * rss)
    };
    let sigma2 = sample_inv_gamma(shape, rate, rng);
    let beta = cp.sample_beta(sigma2, rng);
    (beta, sigma2)
}

/// Gibbs draw of the Poisson rate: `Gamma(a_M + M, b_M + 1)` (shape, rate).
pub fn gibbs_lambda<R: Rng + ?Sized>(m: usize, prior: &PriorSpec, rng: &mut R) -> f64 {
    let g = Gamma::new(prior.a_m + m as f64, 1.0 / (prior.b_m + 1.0)).expect("valid gamma");
    g.sample(rng)
}

/// Inverse-gamma fit to the conditional posterior of `g0^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceFit {
    pub mode: f64,
    pub var: f64,
    pub shape: f64,
    pub rate: f64,
    pub iterations: usize,
}

impl LaplaceFit {
    fn from_mode(mode: f64, second_derivative: f64, iterations: usize) -> Self {
        let var = -1.0 / second_derivative;
        let shape = 2.0 + mode * mode / var;
        LaplaceFit {
            mode,
            var,
            shape,
            rate: mode * shape,
            iterations,
        }
    }
}

/// Shape exponent of the `g0^2` target: the `Inv-Gamma(a_g, b_g)` prior
/// contributes `theta^-(a_g+1)`.
fn target_shape(a_g: f64) -> f64 {
    a_g + 1.0
}

/// Log density (up to a constant) of `g0^2` under an orthogonal design:
/// `-(a_g+1) log t - b_g / t - 1/2 sum log(1 + t g_m^2)`.
pub fn log_g0_density_orthogonal(theta: f64, weights: &[f64], a_g: f64, b_g: f64) -> f64 {
    -target_shape(a_g) * theta.ln()
        - b_g / theta
        - 0.5 * weights.iter().map(|g| (1.0 + theta * g * g).ln()).sum::<f64>()
}

fn orthogonal_second_derivative(theta: f64, weights: &[f64], a_g: f64, b_g: f64) -> f64 {
    let a = target_shape(a_g);
    a / (theta * theta) - 2.0 * b_g / theta.powi(3)
        + 0.5
            * weights
                .iter()
                .map(|g| {
                    let g2 = g * g;
                    g2 * g2 / (1.0 + theta * g2).powi(2)
                })
                .sum::<f64>()
}

/// Fixed-point mode of the orthogonal-design `g0^2` density and its
/// inverse-gamma moment fit. Also returns the iterate sequence.
pub fn laplace_g0_orthogonal_trace(
    weights: &[f64],
    a_g: f64,
    b_g: f64,
) -> Result<(LaplaceFit, Vec<f64>)> {
    const MAX_ITER: usize = 200;
    let a = target_shape(a_g);
    let mut theta = b_g / a;
    let mut trace = vec![theta];
    if weights.is_empty() {
        let fit = LaplaceFit::from_mode(theta, orthogonal_second_derivative(theta, weights, a_g, b_g), 0);
        return Ok((fit, trace));
    }
    for k in 1..=MAX_ITER {
        let g_sum = 0.5
            * weights
                .iter()
                .map(|g| g * g / (1.0 + theta * g * g))
                .sum::<f64>();
        let next = (-a + (a * a + 4.0 * b_g * g_sum).sqrt()) / (2.0 * g_sum);
        trace.push(next);
        let done = (next - theta).abs() < 1e-10 * next;
        theta = next;
        if done {
            let d2 = orthogonal_second_derivative(theta, weights, a_g, b_g);
            return Ok((LaplaceFit::from_mode(theta, d2, k), trace));
        }
    }
    Err(KhaosError::Convergence {
        iterations: MAX_ITER,
        last: theta,
    })
}

pub fn laplace_g0_orthogonal(weights: &[f64], a_g: f64, b_g: f64) -> Result<LaplaceFit> {
    laplace_g0_orthogonal_trace(weights, a_g, b_g).map(|(fit, _)| fit)
}

/// Log of the exact conditional target of `g0^2` (up to a constant):
/// `-(a_g + 1 + M/2) log t - b_g/t + 1/2 log |Sigma_n(t)|`.
pub fn log_g0_target(
    theta: f64,
    basis: &BasisSet,
    prior: &PriorSpec,
    b_g: f64,
) -> Result<f64> {
    let m = basis.n_terms() as f64;
    let precision = prior_cov_inverse(basis, prior, theta);
    let p = precision.posterior_precision(basis.gram());
    let chol = Cholesky::new(p)
        .ok_or_else(|| KhaosError::NumericalRank("posterior precision not positive definite".into()))?;
    let log_det_sigma = -2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-(target_shape(prior.a_g) + 0.5 * m) * theta.ln() - b_g / theta + 0.5 * log_det_sigma)
}

/// First and second derivatives of [`log_g0_target`] in `theta`.
fn g0_target_derivatives(
    theta: f64,
    basis: &BasisSet,
    prior: &PriorSpec,
    b_g: f64,
) -> Result<(f64, f64)> {
    let k = basis.len();
    let m = k - 1;
    let weights = term_weights(basis, prior);
    let precision = prior_cov_inverse(basis, prior, theta);
    let p = precision.posterior_precision(basis.gram());
    let chol = Cholesky::new(p)
        .ok_or_else(|| KhaosError::NumericalRank("posterior precision not positive definite".into()))?;
    let sigma = chol.inverse();
    // d(Sigma_n^-1)/dtheta = -B / theta^2, B = blockdiag(0, D^-1 Psi1'Psi1 D^-1)
    let gram = basis.gram();
    let b = DMatrix::from_fn(k, k, |i, j| {
        if i == 0 || j == 0 {
            0.0
        } else {
            gram[(i, j)] / (weights[i - 1] * weights[j - 1])
        }
    });
    let sb = &sigma * &b;
    let tr1 = sb.trace();
    let tr2 = (&sb * &sb).trace();
    let a = target_shape(prior.a_g) + 0.5 * m as f64;
    let t2 = theta * theta;
    let d1 = -a / theta + b_g / t2 + 0.5 * tr1 / t2;
    let d2 = a / t2 - 2.0 * b_g / (t2 * theta) + 0.5 * (-2.0 * tr1 / (t2 * theta) + tr2 / (t2 * t2));
    Ok((d1, d2))
}

/// Laplace fit to the exact `g0^2` target by Newton-Raphson in `log theta`,
/// started at the orthogonal-design mode, with step halving.
pub fn laplace_g0_exact(basis: &BasisSet, prior: &PriorSpec, b_g: f64) -> Result<LaplaceFit> {
    const MAX_ITER: usize = 100;
    let weights = term_weights(basis, prior);
    let start = laplace_g0_orthogonal(&weights, prior.a_g, b_g)?;
    let mut phi = start.mode.ln();
    let mut f = log_g0_target(phi.exp(), basis, prior, b_g)?;
    for it in 1..=MAX_ITER {
        let theta = phi.exp();
        let (d1, d2) = g0_target_derivatives(theta, basis, prior, b_g)?;
        let g = theta * d1;
        let h = theta * theta * d2 + theta * d1;
        let mut step = if h < 0.0 { -g / h } else { g.signum() * 0.5 };
        let mut accepted = false;
        for _ in 0..50 {
            let cand = phi + step;
            let fc = log_g0_target(cand.exp(), basis, prior, b_g)?;
            if fc >= f - 1e-12 {
                phi = cand;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-10 {
            let theta = phi.exp();
            let (_, d2) = g0_target_derivatives(theta, basis, prior, b_g)?;
            if d2 >= 0.0 {
                return Err(KhaosError::Convergence {
                    iterations: it,
                    last: theta,
                });
            }
            return Ok(LaplaceFit::from_mode(theta, d2, it));
        }
    }
    Err(KhaosError::Convergence {
        iterations: MAX_ITER,
        last: phi.exp(),
    })
}

/// Which Laplace approximation drives the `g0^2` proposal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplaceMode {
    Orthogonal,
    Exact,
}

/// Laplace fit in the requested mode.
pub fn laplace_g0(
    basis: &BasisSet,
    prior: &PriorSpec,
    b_g: f64,
    mode: LaplaceMode,
) -> Result<LaplaceFit> {
    match mode {
        LaplaceMode::Orthogonal => laplace_g0_orthogonal(&term_weights(basis, prior), prior.a_g, b_g),
        LaplaceMode::Exact => laplace_g0_exact(basis, prior, b_g),
    }
}

/// Metropolis-Hastings update of `g0^2` with an inverse-gamma Laplace
/// proposal. Returns the new value and whether the proposal was accepted.
pub fn mh_update_g0<R: Rng + ?Sized>(
    current: f64,
    basis: &BasisSet,
    prior: &PriorSpec,
    b_g: f64,
    mode: LaplaceMode,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let fit = laplace_g0(basis, prior, b_g, mode)?;
    let cand = sample_inv_gamma(fit.shape, fit.rate, rng);
    if !(cand.is_finite() && cand > 0.0) {
        return Ok((current, false));
    }
    let target_cand = match log_g0_target(cand, basis, prior, b_g) {
        Ok(v) => v,
        Err(KhaosError::NumericalRank(_)) => return Ok((current, false)),
        Err(e) => return Err(e),
    };
    let target_curr = log_g0_target(current, basis, prior, b_g)?;
    let log_ratio = target_cand - target_curr + inv_gamma_ln_pdf(current, fit.shape, fit.rate)
        - inv_gamma_ln_pdf(cand, fit.shape, fit.rate);
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        Ok((cand, true))
    } else {
        Ok((current, false))
    }
}
