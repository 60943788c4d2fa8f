//! Simulation-study harness: test functions on `[0,1]^p`, maximin Latin
//! hypercube designs, CRPS scoring and ranked result tables.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{KhaosError, Result};
use crate::linear::PriorSpec;
use crate::sampler::{predict, run_chain, SamplerConfig};
use crate::sparse::{fit_sparse, sparse_predict, SparseConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    Banana,
    Ishigami,
    Rabbits,
    PollutantUni,
    Friedman20,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] = [
        TestFunction::Banana,
        TestFunction::Ishigami,
        TestFunction::Rabbits,
        TestFunction::PollutantUni,
        TestFunction::Friedman20,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Banana => "banana",
            TestFunction::Ishigami => "ishigami",
            TestFunction::Rabbits => "rabbits",
            TestFunction::PollutantUni => "pollutant_uni",
            TestFunction::Friedman20 => "friedman20",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            TestFunction::Banana => 2,
            TestFunction::Ishigami | TestFunction::Rabbits => 3,
            TestFunction::PollutantUni => 4,
            TestFunction::Friedman20 => 20,
        }
    }

    /// How unit-cube inputs map to the function's native domain.
    pub fn scaling(self) -> &'static str {
        match self {
            TestFunction::Banana => "100(x2-x1^2)^2+(1-x1)^2; x1 in [-2,2], x2 in [-1,3]",
            TestFunction::Ishigami => "sin x1 + 7 sin^2 x2 + 0.1 x3^4 sin x1; x in [-pi,pi]^3",
            TestFunction::Rabbits => "K N0 e^(rt)/(K+N0(e^(rt)-1)), K=100; N0 in [1,10], r in [0.1,3], t in [0,5]",
            TestFunction::PollutantUni => {
                "two-spill diffusion at s=2.5, t=40; M in [7,13], D in [0.02,0.12], L in [0.01,3], tau in [30.01,30.295]"
            }
            TestFunction::Friedman20 => "10 sin(pi x1 x2)+20(x3-0.5)^2+10 x4+5 x5; x in [0,1]^20, x6..x20 inert",
        }
    }

    /// Evaluates at a point of `[0,1]^p`.
    pub fn eval(self, u: &[f64]) -> f64 {
        use std::f64::consts::PI;
        let lerp = |v: f64, lo: f64, hi: f64| lo + (hi - lo) * v;
        match self {
            TestFunction::Banana => {
                let x1 = lerp(u[0], -2.0, 2.0);
                let x2 = lerp(u[1], -1.0, 3.0);
                100.0 * (x2 - x1 * x1).powi(2) + (1.0 - x1).powi(2)
            }
            TestFunction::Ishigami => {
                let x: Vec<f64> = u.iter().map(|&v| lerp(v, -PI, PI)).collect();
                x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
            }
            TestFunction::Rabbits => {
                let k = 100.0;
                let n0 = lerp(u[0], 1.0, 10.0);
                let r = lerp(u[1], 0.1, 3.0);
                let t = lerp(u[2], 0.0, 5.0);
                let e = (r * t).exp();
                k * n0 * e / (k + n0 * (e - 1.0))
            }
            TestFunction::PollutantUni => {
                let (s, t) = (2.5, 40.0);
                let m = lerp(u[0], 7.0, 13.0);
                let d = lerp(u[1], 0.02, 0.12);
                let l = lerp(u[2], 0.01, 3.0);
                let tau = lerp(u[3], 30.01, 30.295);
                let first = m / (4.0 * PI * d * t).sqrt() * (-s * s / (4.0 * d * t)).exp();
                let second = if t > tau {
                    let dt = t - tau;
                    m / (4.0 * PI * d * dt).sqrt() * (-(s - l).powi(2) / (4.0 * d * dt)).exp()
                } else {
                    0.0
                };
                first + second
            }
            TestFunction::Friedman20 => {
                10.0 * (PI * u[0] * u[1]).sin()
                    + 20.0 * (u[2] - 0.5).powi(2)
                    + 10.0 * u[3]
                    + 5.0 * u[4]
            }
        }
    }

    pub fn eval_rows(self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.eval(&row)
            })
            .collect()
    }

    /// Monte Carlo variance of the function under uniform inputs.
    pub fn variance_mc(self, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.dim();
        let mut u = vec![0.0; p];
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in 0..n {
            for v in u.iter_mut() {
                *v = rng.random();
            }
            let f = self.eval(&u);
            let delta = f - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (f - mean);
        }
        m2 / (n - 1) as f64
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = KhaosError;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| KhaosError::InvalidArgument(format!("unknown test function '{s}'")))
    }
}

/// Squared distance between rows `i` and `j`.
fn dist2(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (0..x.ncols()).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum()
}

/// Smallest pairwise Euclidean distance between rows.
pub fn min_distance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(dist2(x, i, j));
        }
    }
    best.sqrt()
}

/// A random Latin hypercube: each column places one point uniformly inside
/// each of the `n` strata.
pub fn random_lhs<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..p {
        perm.shuffle(rng);
        for i in 0..n {
            x[(i, k)] = (perm[i] as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    x
}

/// Nearest-neighbour bookkeeping for the swap ascent.
struct Neighbours {
    dist: Vec<f64>,
    idx: Vec<usize>,
}

impl Neighbours {
    fn of(x: &DMatrix<f64>) -> Self {
        let n = x.nrows();
        let mut nb = Neighbours {
            dist: vec![f64::INFINITY; n],
            idx: vec![0; n],
        };
        for i in 0..n {
            nb.refresh(x, i);
        }
        nb
    }

    fn refresh(&mut self, x: &DMatrix<f64>, i: usize) {
        self.dist[i] = f64::INFINITY;
        for j in 0..x.nrows() {
            if j != i {
                let d = dist2(x, i, j);
                if d < self.dist[i] {
                    self.dist[i] = d;
                    self.idx[i] = j;
                }
            }
        }
    }

    fn worst(&self) -> (usize, f64) {
        let mut w = 0;
        for i in 1..self.dist.len() {
            if self.dist[i] < self.dist[w] {
                w = i;
            }
        }
        (w, self.dist[w])
    }

    /// Updates after rows `a` and `b` moved.
    fn moved(&mut self, x: &DMatrix<f64>, a: usize, b: usize) {
        self.refresh(x, a);
        self.refresh(x, b);
        for s in 0..x.nrows() {
            if s == a || s == b {
                continue;
            }
            if self.idx[s] == a || self.idx[s] == b {
                self.refresh(x, s);
                continue;
            }
            for t in [a, b] {
                let d = dist2(x, s, t);
                if d < self.dist[s] {
                    self.dist[s] = d;
                    self.idx[s] = t;
                }
            }
        }
    }
}

/// Proposals per point in the swap ascent.
pub const LHS_SWEEPS: usize = 5;

/// Improves the minimum inter-point distance by swapping one coordinate of
/// a closest-pair point with another point, keeping only non-worsening
/// swaps. Column-wise swaps preserve the Latin property.
pub fn improve_maximin<R: Rng + ?Sized>(x: &mut DMatrix<f64>, proposals: usize, rng: &mut R) {
    let n = x.nrows();
    if n < 3 {
        return;
    }
    let p = x.ncols();
    let mut nb = Neighbours::of(x);
    for _ in 0..proposals {
        let (i, before) = nb.worst();
        let a = if rng.random::<bool>() { i } else { nb.idx[i] };
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let k = rng.random_range(0..p);
        let saved = (nb.dist.clone(), nb.idx.clone());
        x.swap((a, k), (b, k));
        nb.moved(x, a, b);
        if nb.worst().1 < before {
            x.swap((a, k), (b, k));
            nb.dist = saved.0;
            nb.idx = saved.1;
        }
    }
}

/// Maximin Latin hypercube: best of `n_restarts` optimised random designs.
pub fn maximin_lhs<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R, n_restarts: usize) -> Result<DMatrix<f64>> {
    if n < 2 || p == 0 {
        return Err(KhaosError::InvalidArgument("maximin LHS needs n >= 2 and p >= 1".into()));
    }
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for _ in 0..n_restarts.max(1) {
        let mut x = random_lhs(n, p, rng);
        improve_maximin(&mut x, LHS_SWEEPS * n, rng);
        let d = min_distance(&x);
        if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
            best = Some((d, x));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Plug-in CRPS of an ensemble: `mean|Y - y| - mean|Y - Y'| / 2`.
pub fn crps_from_samples(samples: &[f64], y: f64) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Err(KhaosError::InvalidArgument(format!("CRPS needs at least 2 samples, got {m}")));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let mf = m as f64;
    let first = s.iter().map(|v| (v - y).abs()).sum::<f64>() / mf;
    // sum_{i,j} |s_i - s_j| = 2 sum_i (2i - m + 1) s_(i)
    let spread: f64 = s
        .iter()
        .enumerate()
        .map(|(i, v)| (2.0 * i as f64 - mf + 1.0) * v)
        .sum();
    Ok((first - spread / (mf * mf)).max(0.0))
}

/// Closed-form CRPS of `N(mu, sigma^2)` at `y`.
pub fn crps_gaussian(mu: f64, sigma: f64, y: f64) -> f64 {
    if sigma <= 0.0 {
        return (y - mu).abs();
    }
    let nd = StatNormal::new(0.0, 1.0).expect("standard normal");
    let z = (y - mu) / sigma;
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    sigma * (z * (2.0 * nd.cdf(z) - 1.0) + 2.0 * pdf - 1.0 / std::f64::consts::PI.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KhaosRidge,
    KhaosGprior,
    SparsePce,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::KhaosRidge, Method::KhaosGprior, Method::SparsePce];

    pub fn name(self) -> &'static str {
        match self {
            Method::KhaosRidge => "khaos-ridge",
            Method::KhaosGprior => "khaos-gprior",
            Method::SparsePce => "sparse-pce",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = KhaosError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| KhaosError::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub functions: Vec<TestFunction>,
    pub nsr: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub replicates: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub lhs_restarts: usize,
    /// Monte Carlo points for each function's variance.
    pub variance_points: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: Method::ALL.to_vec(),
            functions: TestFunction::ALL.to_vec(),
            nsr: vec![0.0, 0.5],
            n_train: 1000,
            n_test: 1000,
            replicates: 10,
            seed: 0,
            sampler: SamplerConfig::default(),
            lhs_restarts: 5,
            variance_points: 1_000_000,
        }
    }
}

/// One fitted-and-scored cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    pub function: TestFunction,
    pub replicate: usize,
    pub nsr: f64,
    /// Average CRPS over the test set; NaN for failed cells.
    pub crps: f64,
    pub seconds: f64,
    pub within_1pct: bool,
    pub error: Option<String>,
}

/// Seed for one cell: the first eight bytes (little endian) of the SHA-256
/// of `"{seed}/{stream}/{function}/{replicate}/{nsr}"`.
pub fn split_seed(seed: u64, stream: &str, function: TestFunction, replicate: usize, nsr: f64) -> u64 {
    let key = format!("{seed}/{stream}/{}/{replicate}/{nsr}", function.name());
    let digest = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

/// Training and test data for one replicate.
pub struct Dataset {
    pub x_train: DMatrix<f64>,
    pub y_train: Vec<f64>,
    pub x_test: DMatrix<f64>,
    /// Noise-free test responses.
    pub f_test: Vec<f64>,
}

pub fn make_dataset(
    function: TestFunction,
    n_train: usize,
    n_test: usize,
    noise_sd: f64,
    restarts: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = function.dim();
    let x_train = maximin_lhs(n_train, p, &mut rng, restarts)?;
    let x_test = maximin_lhs(n_test, p, &mut rng, restarts)?;
    let mut y_train = function.eval_rows(&x_train);
    if noise_sd > 0.0 {
        let noise = Normal::new(0.0, noise_sd).expect("finite sd");
        for v in y_train.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    let f_test = function.eval_rows(&x_test);
    Ok(Dataset {
        x_train,
        y_train,
        x_test,
        f_test,
    })
}

/// Fits `method` and returns the average CRPS of the mean-function
/// predictive against the noise-free test responses.
pub fn score_method(method: Method, data: &Dataset, sampler: &SamplerConfig, seed: u64) -> Result<f64> {
    let n = data.f_test.len() as f64;
    match method {
        Method::KhaosRidge | Method::KhaosGprior => {
            let prior = if method == Method::KhaosRidge {
                PriorSpec::ridge()
            } else {
                PriorSpec::modified_gprior()
            };
            let cfg = SamplerConfig {
                seed,
                ..sampler.clone()
            };
            let draws = run_chain(&data.x_train, &data.y_train, &prior, &cfg)?;
            let pred = predict(&draws, &data.x_test, false, seed)?;
            let mut total = 0.0;
            for (j, f) in data.f_test.iter().enumerate() {
                total += crps_from_samples(&pred.point_samples(j), *f)?;
            }
            Ok(total / n)
        }
        Method::SparsePce => {
            let fit = fit_sparse(&data.x_train, &data.y_train, &SparseConfig::default())?;
            let pred = sparse_predict(&fit, &data.x_test)?;
            Ok(data
                .f_test
                .iter()
                .enumerate()
                .map(|(j, f)| crps_gaussian(pred.mean[j], pred.sd_mean[j], *f))
                .sum::<f64>()
                / n)
        }
    }
}

/// Runs every (function, NSR, replicate, method) cell. Designs and noise
/// are shared by the methods within a replicate so comparisons are paired.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    if cfg.methods.is_empty() || cfg.functions.is_empty() || cfg.nsr.is_empty() {
        return Err(KhaosError::InvalidArgument(
            "benchmark needs at least one method, function and NSR".into(),
        ));
    }
    if let Some(bad) = cfg.nsr.iter().find(|v| !(**v >= 0.0)) {
        return Err(KhaosError::InvalidArgument(format!("NSR must be >= 0, got {bad}")));
    }
    let variances: Vec<f64> = cfg
        .functions
        .par_iter()
        .map(|f| f.variance_mc(cfg.variance_points, 0))
        .collect();
    let mut groups = Vec::new();
    for (fi, &function) in cfg.functions.iter().enumerate() {
        for &nsr in &cfg.nsr {
            for replicate in 0..cfg.replicates {
                groups.push((function, variances[fi], nsr, replicate));
            }
        }
    }
    let mut results: Vec<BenchResult> = groups
        .par_iter()
        .flat_map_iter(|&(function, var_f, nsr, replicate)| {
            let data_seed = split_seed(cfg.seed, "data", function, replicate, nsr);
            let data = make_dataset(
                function,
                cfg.n_train,
                cfg.n_test,
                (nsr * var_f).sqrt(),
                cfg.lhs_restarts,
                data_seed,
            );
            let mut rows: Vec<BenchResult> = cfg
                .methods
                .iter()
                .map(|&method| {
                    let start = Instant::now();
                    let outcome = data.as_ref().map_err(|e| e.to_string()).and_then(|d| {
                        let seed = split_seed(cfg.seed, method.name(), function, replicate, nsr);
                        score_method(method, d, &cfg.sampler, seed).map_err(|e| e.to_string())
                    });
                    let seconds = start.elapsed().as_secs_f64();
                    let (crps, error) = match outcome {
                        Ok(v) => (v, None),
                        Err(e) => (f64::NAN, Some(e)),
                    };
                    BenchResult {
                        method,
                        function,
                        replicate,
                        nsr,
                        crps,
                        seconds,
                        within_1pct: false,
                        error,
                    }
                })
                .collect();
            let best = rows
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.crps)
                .fold(f64::INFINITY, f64::min);
            for r in rows.iter_mut() {
                r.within_1pct = r.error.is_none() && r.crps <= 1.01 * best;
            }
            rows.into_iter()
        })
        .collect();
    results.sort_by(|a, b| {
        a.function
            .cmp(&b.function)
            .then(a.nsr.total_cmp(&b.nsr))
            .then(a.replicate.cmp(&b.replicate))
            .then(a.method.cmp(&b.method))
    });
    Ok(results)
}

/// Average CRPS and rank of one method on one (function, NSR) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub method: Method,
    pub function: TestFunction,
    pub nsr: f64,
    pub avg_crps: f64,
    pub avg_seconds: f64,
    pub within_1pct_rate: f64,
    pub rank: f64,
    pub failures: usize,
}

/// Ranks of `values` (1 = smallest) with ties sharing the mean rank.
pub fn mean_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Aggregates results per (function, NSR), ranking methods by average CRPS
/// over their successful replicates.
pub fn rank_table(results: &[BenchResult]) -> Vec<RankRow> {
    let mut keys: Vec<(TestFunction, f64)> = Vec::new();
    for r in results {
        if !keys.iter().any(|(f, v)| *f == r.function && *v == r.nsr) {
            keys.push((r.function, r.nsr));
        }
    }
    let mut out = Vec::new();
    for (function, nsr) in keys {
        let mut methods: Vec<Method> = results
            .iter()
            .filter(|r| r.function == function && r.nsr == nsr)
            .map(|r| r.method)
            .collect();
        methods.sort();
        methods.dedup();
        let mut rows: Vec<RankRow> = methods
            .iter()
            .map(|&method| {
                let cell: Vec<&BenchResult> = results
                    .iter()
                    .filter(|r| r.function == function && r.nsr == nsr && r.method == method)
                    .collect();
                let ok: Vec<&&BenchResult> = cell.iter().filter(|r| r.error.is_none()).collect();
                let k = ok.len().max(1) as f64;
                RankRow {
                    method,
                    function,
                    nsr,
                    avg_crps: if ok.is_empty() {
                        f64::INFINITY
                    } else {
                        ok.iter().map(|r| r.crps).sum::<f64>() / k
                    },
                    avg_seconds: cell.iter().map(|r| r.seconds).sum::<f64>() / cell.len() as f64,
                    within_1pct_rate: cell.iter().filter(|r| r.within_1pct).count() as f64
                        / cell.len() as f64,
                    rank: 0.0,
                    failures: cell.len() - ok.len(),
                }
            })
            .collect();
        let ranks = mean_ranks(&rows.iter().map(|r| r.avg_crps).collect::<Vec<_>>());
        for (r, rank) in rows.iter_mut().zip(ranks) {
            r.rank = rank;
        }
        out.extend(rows);
    }
    out
}

/// Writes `# key=value` metadata lines followed by a CSV body.
pub fn write_with_header<T: Serialize>(path: &Path, meta: &[(String, String)], rows: &[T]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for (k, v) in meta {
        writeln!(file, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    method: &'a str,
    function: &'a str,
    replicate: usize,
    nsr: f64,
    crps: f64,
    seconds: f64,
    within_1pct: bool,
    error: &'a str,
}

#[derive(Serialize)]
struct RankRecord<'a> {
    method: &'a str,
    function: &'a str,
    nsr: f64,
    avg_crps: f64,
    avg_seconds: f64,
    within_1pct_rate: f64,
    rank: f64,
    failures: usize,
}

/// Writes `results.csv` and `ranks.csv` into `dir`.
pub fn write_bench_outputs(dir: &Path, results: &[BenchResult], meta: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut meta = meta.to_vec();
    for f in TestFunction::ALL {
        meta.push((format!("scaling.{}", f.name()), f.scaling().to_string()));
    }
    let rows: Vec<ResultRecord> = results
        .iter()
        .map(|r| ResultRecord {
            method: r.method.name(),
            function: r.function.name(),
            replicate: r.replicate,
            nsr: r.nsr,
            crps: r.crps,
            seconds: r.seconds,
            within_1pct: r.within_1pct,
            error: r.error.as_deref().unwrap_or(""),
        })
        .collect();
    write_with_header(&dir.join("results.csv"), &meta, &rows)?;
    let ranks = rank_table(results);
    let rows: Vec<RankRecord> = ranks
        .iter()
        .map(|r| RankRecord {
            method: r.method.name(),
            function: r.function.name(),
            nsr: r.nsr,
            avg_crps: r.avg_crps,
            avg_seconds: r.avg_seconds,
            within_1pct_rate: r.within_1pct_rate,
            rank: r.rank,
            failures: r.failures,
        })
        .collect();
    write_with_header(&dir.join("ranks.csv"), &meta, &rows)
}
