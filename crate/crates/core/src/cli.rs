//! Command-line front end: `fit`, `predict`, `sobol` and `bench`.
//!
//! Settings resolve in three layers: method defaults, then an optional JSON
//! config file (a serialized [`RunConfig`]), then explicit flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::archive::{read_table, ArchivedModel, DrawPayload, ModelArchive, Scaling, FORMAT_VERSION};
use crate::bench::{rank_table, run_benchmark, write_bench_outputs, BenchConfig, Method, TestFunction};
use crate::error::{KhaosError, Result};
use crate::linear::{PriorFamily, PriorSpec};
use crate::ordinal::{fit_ordinal, predict_ordinal, OrdinalFit};
use crate::sampler::{config_hash, predict, run_chain, PosteriorDraws, Provenance, SamplerConfig};
use crate::sobol::{sobol_posterior, sobol_summary, Aggregate, SobolSummary};
use crate::sparse::{fit_sparse, sparse_predict, SparseConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    KhaosRidge,
    KhaosGprior,
    SparsePce,
    Ordinal,
}

impl FitMethod {
    pub fn name(self) -> &'static str {
        match self {
            FitMethod::KhaosRidge => "khaos-ridge",
            FitMethod::KhaosGprior => "khaos-gprior",
            FitMethod::SparsePce => "sparse-pce",
            FitMethod::Ordinal => "ordinal",
        }
    }
}

/// Everything a run needs besides the data itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub method: FitMethod,
    /// Response column; the last column when absent.
    pub response: Option<String>,
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    pub sparse: SparseConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_method(FitMethod::KhaosGprior)
    }
}

impl RunConfig {
    pub fn for_method(method: FitMethod) -> Self {
        let prior = match method {
            FitMethod::KhaosRidge => PriorSpec::ridge(),
            _ => PriorSpec::modified_gprior(),
        };
        RunConfig {
            method,
            response: None,
            data: None,
            output: None,
            prior,
            sampler: SamplerConfig::default(),
            sparse: SparseConfig::default(),
            bench: BenchConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

#[derive(Debug, Parser)]
#[command(name = "khaos", version, about = "Bayesian adaptive polynomial chaos expansions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a CSV and write an archive.
    Fit(FitArgs),
    /// Predict at new inputs from an archive.
    Predict(PredictArgs),
    /// Sobol indices of an archived model.
    Sobol(SobolArgs),
    /// Run the benchmark study.
    Bench(BenchArgs),
}

/// Flags shared by commands that run a sampler.
#[derive(Debug, Default, Clone, Args)]
pub struct ChainArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ridge, gprior or modified-gprior.
    #[arg(long)]
    pub prior: Option<PriorFamily>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long)]
    pub qmax: Option<usize>,
}

impl ChainArgs {
    fn apply(&self, rc: &mut RunConfig) {
        let s = &mut rc.sampler;
        if let Some(v) = self.iters {
            s.n_iter = v;
            if self.burn.is_none() && s.n_burn >= v {
                s.n_burn = v / 2;
            }
        }
        if let Some(v) = self.burn {
            s.n_burn = v;
        }
        if let Some(v) = self.thin {
            s.n_thin = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
            rc.bench.seed = v;
        }
        if let Some(v) = self.prior {
            rc.prior.family = v;
            rc.sparse.prior.family = v;
        }
        if let Some(v) = self.zeta {
            rc.prior.zeta = v;
            rc.sparse.prior.zeta = v;
        }
        if let Some(v) = self.dmax {
            rc.prior.d_max = v;
            rc.sparse.d_max = v;
        }
        if let Some(v) = self.qmax {
            rc.prior.q_max = v;
            rc.sparse.q_max = v;
        }
        rc.bench.sampler = rc.sampler.clone();
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Training CSV with a header row.
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<FitMethod>,
    /// Response column (default: last column).
    #[arg(long)]
    pub response: Option<String>,
    /// Archive path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write the summary to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write the resolved configuration here.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    pub archive: PathBuf,
    pub data: PathBuf,
    #[arg(long, short, default_value = "predictions.csv")]
    pub out: PathBuf,
    /// Comma separated probabilities.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.95])]
    pub quantiles: Vec<f64>,
    /// Predict a new observation rather than the mean function.
    #[arg(long)]
    pub noise: bool,
    /// Seed for the observation noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SobolArgs {
    pub archive: PathBuf,
    #[arg(long, short, default_value = "sobol.csv")]
    pub out: PathBuf,
    /// Number of partial indices to report.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    pub functions: Option<Vec<TestFunction>>,
    #[arg(long, value_delimiter = ',')]
    pub nsr: Option<Vec<f64>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Monte Carlo points for each function's variance.
    #[arg(long)]
    pub variance_points: Option<usize>,
    #[arg(long, short, default_value = "bench-out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub chain: ChainArgs,
}

/// Resolves the configuration of a `fit` invocation.
pub fn resolve_fit_config(args: &FitArgs) -> Result<RunConfig> {
    let mut rc = match &args.chain.config {
        Some(path) => {
            let mut rc = RunConfig::load(path)?;
            if let Some(m) = args.method {
                rc.method = m;
            }
            rc
        }
        None => RunConfig::for_method(args.method.unwrap_or(FitMethod::KhaosGprior)),
    };
    if args.response.is_some() {
        rc.response = args.response.clone();
    }
    if args.data.is_some() {
        rc.data = args.data.clone();
    }
    if args.out.is_some() {
        rc.output = args.out.clone();
    }
    args.chain.apply(&mut rc);
    rc.prior.validate()?;
    rc.sampler.validate()?;
    Ok(rc)
}

fn meta_lines(hash: &str, seed: u64) -> Vec<(String, String)> {
    vec![
        ("config_hash".to_string(), hash.to_string()),
        ("seed".to_string(), seed.to_string()),
    ]
}

fn ordinal_labels(y: &[f64]) -> Result<Vec<usize>> {
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.fract() != 0.0 || v < 1.0 {
                Err(KhaosError::InvalidArgument(format!(
                    "row {}: ordinal response must be an integer >= 1, got {v}",
                    i + 1
                )))
            } else {
                Ok(v as usize)
            }
        })
        .collect()
}

fn summarize_draws(out: &mut String, draws: &PosteriorDraws) {
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for m in draws.model_sizes() {
        *sizes.entry(m).or_insert(0) += 1;
    }
    let n = draws.len().max(1) as f64;
    let _ = writeln!(out, "model size M (non-intercept terms):");
    for (m, c) in &sizes {
        let _ = writeln!(out, "  M={m:<4} {:.3}", *c as f64 / n);
    }
    let s2: Vec<f64> = draws.draws.iter().map(|d| d.sigma2).collect();
    if !s2.is_empty() {
        let a = Aggregate::of(&s2);
        let _ = writeln!(
            out,
            "sigma^2: mean {:.6e}  5% {:.6e}  50% {:.6e}  95% {:.6e}",
            a.mean, a.q05, a.q50, a.q95
        );
        let g: Vec<f64> = draws.draws.iter().map(|d| d.g0sq).collect();
        let _ = writeln!(out, "g0^2: mean {:.4e}", g.iter().sum::<f64>() / g.len() as f64);
    }
    let st = &draws.stats;
    let _ = writeln!(out, "acceptance rates:");
    for (name, c) in [
        ("birth", &st.birth),
        ("death", &st.death),
        ("mutate-degree", &st.mutate_degree),
        ("mutate-variable", &st.mutate_variable),
        ("g0", &st.g0),
    ] {
        let _ = writeln!(
            out,
            "  {name:<16} {:.3}  ({} of {})",
            c.acceptance_rate(),
            c.accepted,
            c.attempted
        );
    }
}

/// Runs `fit`; returns the archive and the text summary.
pub fn cmd_fit(args: &FitArgs) -> Result<(ModelArchive, String)> {
    let rc = resolve_fit_config(args)?;
    let data = rc
        .data
        .clone()
        .ok_or_else(|| KhaosError::InvalidArgument("no training data given".into()))?;
    let table = read_table(&data)?;
    let response = match &rc.response {
        Some(r) => r.clone(),
        None => table.headers.last().cloned().expect("non-empty header"),
    };
    let ycol = table
        .column_index(&response)
        .ok_or_else(|| KhaosError::Data(format!("response column '{response}' not found")))?;
    let covariates: Vec<String> = table.headers.iter().filter(|h| **h != response).cloned().collect();
    if covariates.is_empty() {
        return Err(KhaosError::Data("no covariate columns".into()));
    }
    let y = table.column(ycol);
    let scaling = Scaling::fit(&covariates, &table.select(&covariates)?)?;
    let (x, _) = scaling.apply(&table.select(&covariates)?);
    let hash = rc.hash();
    let provenance = Provenance {
        seed: rc.sampler.seed,
        config_hash: hash.clone(),
    };

    let mut summary = String::new();
    let _ = writeln!(summary, "# config_hash={hash}");
    let _ = writeln!(summary, "# seed={}", rc.sampler.seed);
    let _ = writeln!(summary, "method: {}", rc.method.name());
    let _ = writeln!(summary, "rows: {}  inputs: {}", x.nrows(), x.ncols());

    let model = match rc.method {
        FitMethod::KhaosRidge | FitMethod::KhaosGprior => {
            let draws = run_chain(&x, &y, &rc.prior, &rc.sampler)?;
            let _ = writeln!(summary, "draws: {}", draws.len());
            summarize_draws(&mut summary, &draws);
            ArchivedModel::Khaos {
                prior: rc.prior.clone(),
                sampler: rc.sampler.clone(),
                draws: DrawPayload::pack(&draws),
                stats: draws.stats.clone(),
            }
        }
        FitMethod::Ordinal => {
            let labels = ordinal_labels(&y)?;
            let fit = fit_ordinal(&x, &labels, &rc.prior, &rc.sampler)?;
            let _ = writeln!(summary, "categories: {}", fit.k);
            let _ = writeln!(summary, "draws: {}", fit.latent.len());
            summarize_draws(&mut summary, &fit.latent);
            ArchivedModel::Ordinal {
                prior: rc.prior.clone(),
                sampler: rc.sampler.clone(),
                categories: fit.k,
                cutpoints: fit.cutpoints,
                draws: DrawPayload::pack(&fit.latent),
                stats: fit.latent.stats.clone(),
            }
        }
        FitMethod::SparsePce => {
            let fit = fit_sparse(&x, &y, &rc.sparse)?;
            let _ = writeln!(summary, "draws: 1 (point estimate)");
            let _ = writeln!(summary, "selected terms m*: {}", fit.m_star());
            let _ = writeln!(summary, "sigma^2 estimate: {:.6e}", fit.sigma2_hat);
            let _ = writeln!(summary, "enrichment stages (d_max, q_max): {:?}", fit.enrichment_history);
            ArchivedModel::Sparse {
                config: rc.sparse.clone(),
                fit,
            }
        }
    };
    let archive = ModelArchive {
        format_version: FORMAT_VERSION,
        build_version: env!("CARGO_PKG_VERSION").to_string(),
        method: rc.method.name().to_string(),
        response,
        scaling,
        provenance,
        model,
    };
    let out = rc.output.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    archive.save(&out)?;
    let _ = writeln!(summary, "archive: {}", out.display());
    if let Some(path) = &args.summary {
        std::fs::write(path, &summary)?;
    }
    if let Some(path) = &args.save_config {
        rc.save(path)?;
    }
    Ok((archive, summary))
}

/// Column names and values of a prediction table.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
    pub clamped: usize,
}

fn quantile_label(q: f64) -> String {
    format!("q{q}")
}

/// Predictions for raw (unscaled) covariates.
pub fn predict_archive(
    archive: &ModelArchive,
    x_raw: &DMatrix<f64>,
    quantiles: &[f64],
    noise: bool,
    seed: u64,
) -> Result<PredictionTable> {
    if let Some(q) = quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(KhaosError::InvalidArgument(format!("quantile {q} outside [0,1]")));
    }
    let (x, clamped) = archive.scaling.apply(x_raw);
    let n = x.nrows();
    let mut columns = vec!["mean".to_string(), "sd".to_string()];
    columns.extend(quantiles.iter().map(|&q| quantile_label(q)));
    let values = match &archive.model {
        ArchivedModel::Khaos { .. } => {
            let draws = archive.posterior_draws()?.expect("khaos draws");
            let pred = predict(&draws, &x, noise, seed)?;
            let mut cols = vec![pred.mean(), pred.sd()];
            for &q in quantiles {
                cols.push(pred.quantile(q));
            }
            DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
        }
        ArchivedModel::Sparse { fit, .. } => {
            let pred = sparse_predict(fit, &x)?;
            let sd = if noise { &pred.sd } else { &pred.sd_mean };
            let nd = Normal::new(0.0, 1.0).expect("standard normal");
            DMatrix::from_fn(n, 2 + quantiles.len(), |i, j| match j {
                0 => pred.mean[i],
                1 => sd[i],
                _ => {
                    let q = quantiles[j - 2];
                    if sd[i] > 0.0 {
                        pred.mean[i] + sd[i] * nd.inverse_cdf(q)
                    } else {
                        pred.mean[i]
                    }
                }
            })
        }
        ArchivedModel::Ordinal { categories, cutpoints, .. } => {
            let latent = archive.posterior_draws()?.expect("ordinal draws");
            let fit = OrdinalFit {
                k: *categories,
                latent,
                cutpoints: cutpoints.clone(),
            };
            let probs = predict_ordinal(&fit, &x)?;
            columns = (1..=fit.k).map(|k| format!("p{k}")).collect();
            columns.push("expected".to_string());
            columns.push("mode".to_string());
            DMatrix::from_fn(n, fit.k + 2, |i, j| {
                if j < fit.k {
                    probs[(i, j)]
                } else if j == fit.k {
                    (0..fit.k).map(|c| (c + 1) as f64 * probs[(i, c)]).sum()
                } else {
                    let row = probs.row(i);
                    (row.iter().enumerate().fold((0, f64::MIN), |b, (c, &v)| if v > b.1 { (c, v) } else { b }).0 + 1) as f64
                }
            })
        }
    };
    Ok(PredictionTable { columns, values, clamped })
}

fn write_matrix(path: &Path, meta: &[(String, String)], columns: &[String], values: &DMatrix<f64>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for (k, v) in meta {
        writeln!(file, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(columns)?;
    for i in 0..values.nrows() {
        w.write_record(values.row(i).iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `predict`; returns the table written to disk.
pub fn cmd_predict(args: &PredictArgs) -> Result<PredictionTable> {
    let archive = ModelArchive::load(&args.archive)?;
    let table = read_table(&args.data)?;
    let x_raw = archive.scaling.extract(&table, &[archive.response.as_str()])?;
    let pred = predict_archive(&archive, &x_raw, &args.quantiles, args.noise, args.seed)?;
    let mut meta = meta_lines(&archive.provenance.config_hash, archive.provenance.seed);
    meta.push(("clamped_values".to_string(), pred.clamped.to_string()));
    meta.push(("noise".to_string(), args.noise.to_string()));
    write_matrix(&args.out, &meta, &pred.columns, &pred.values)?;
    Ok(pred)
}

/// Sobol summary of any archived model. Sparse fits give a single draw.
pub fn archive_sobol(archive: &ModelArchive) -> Result<SobolSummary> {
    match &archive.model {
        ArchivedModel::Sparse { fit, .. } => {
            let idx = fit.indices();
            sobol_summary(fit.p, [(idx.as_slice(), fit.beta_hat.as_slice(), fit.sigma2_hat)])
        }
        _ => sobol_posterior(&archive.posterior_draws()?.expect("posterior draws")),
    }
}

#[derive(Serialize)]
struct SobolRow {
    kind: &'static str,
    inputs: String,
    mean: f64,
    q05: f64,
    q50: f64,
    q95: f64,
}

/// Runs `sobol`: totals per input, the `top` partial indices by posterior
/// mean, and the noise share.
pub fn cmd_sobol(args: &SobolArgs) -> Result<SobolSummary> {
    let archive = ModelArchive::load(&args.archive)?;
    let summary = archive_sobol(&archive)?;
    let names = &archive.scaling.columns;
    let row = |kind, inputs: String, a: Aggregate| SobolRow {
        kind,
        inputs,
        mean: a.mean,
        q05: a.q05,
        q50: a.q50,
        q95: a.q95,
    };
    let mut rows: Vec<SobolRow> = summary
        .total_aggregates()
        .into_iter()
        .enumerate()
        .map(|(i, a)| row("total", names[i].clone(), a))
        .collect();
    let mut partial = summary.partial_aggregates();
    partial.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean).then_with(|| a.0.cmp(&b.0)));
    for (u, a) in partial.into_iter().take(args.top) {
        let label = u.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(":");
        rows.push(row("partial", label, a));
    }
    rows.push(row("noise", String::new(), summary.noise_aggregate()));
    let meta = meta_lines(&archive.provenance.config_hash, archive.provenance.seed);
    crate::bench::write_with_header(&args.out, &meta, &rows)?;
    Ok(summary)
}

/// Resolves the configuration of a `bench` invocation.
pub fn resolve_bench_config(args: &BenchArgs) -> Result<RunConfig> {
    let mut rc = match &args.chain.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    args.chain.apply(&mut rc);
    let b = &mut rc.bench;
    if let Some(v) = &args.functions {
        b.functions = v.clone();
    }
    if let Some(v) = &args.nsr {
        b.nsr = v.clone();
    }
    if let Some(v) = args.replicates {
        b.replicates = v;
    }
    if let Some(v) = &args.methods {
        b.methods = v.clone();
    }
    if let Some(v) = args.n_train {
        b.n_train = v;
    }
    if let Some(v) = args.n_test {
        b.n_test = v;
    }
    if let Some(v) = args.variance_points {
        b.variance_points = v;
    }
    b.sampler.validate()?;
    Ok(rc)
}

/// Runs `bench`; writes `results.csv` and `ranks.csv` and returns a text
/// rank table.
pub fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let rc = resolve_bench_config(args)?;
    let results = run_benchmark(&rc.bench)?;
    let hash = config_hash(&rc.bench);
    write_bench_outputs(&args.out_dir, &results, &meta_lines(&hash, rc.bench.seed))?;
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>4} {:<13} {:>12} {:>5} {:>9}", "function", "nsr", "method", "avg_crps", "rank", "seconds");
    for r in rank_table(&results) {
        let _ = writeln!(
            out,
            "{:<14} {:>4} {:<13} {:>12.5} {:>5.1} {:>9.2}",
            r.function.name(),
            r.nsr,
            r.method.name(),
            r.avg_crps,
            r.rank,
            r.avg_seconds
        );
    }
    Ok(out)
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a).map(|(_, s)| print!("{s}")),
        Command::Predict(a) => cmd_predict(a).map(|p| {
            if p.clamped > 0 {
                eprintln!("warning: {} input values fell outside the training range and were clamped", p.clamped);
            }
            println!("wrote {} predictions to {}", p.values.nrows(), a.out.display());
        }),
        Command::Sobol(a) => cmd_sobol(a).map(|s| {
            println!("wrote Sobol indices over {} draws to {}", s.n_draws(), a.out.display());
        }),
        Command::Bench(a) => cmd_bench(a).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trips() {
        let mut rc = RunConfig::for_method(FitMethod::Ordinal);
        rc.response = Some("grade".into());
        rc.prior.zeta = 0.37;
        rc.sampler.seed = u64::MAX;
        rc.bench.nsr = vec![0.1, 1.0 / 3.0];
        let text = serde_json::to_string(&rc).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rc);
        assert_eq!(back.hash(), rc.hash());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let rc: RunConfig = serde_json::from_str(r#"{"method":"sparse-pce"}"#).unwrap();
        assert_eq!(rc.method, FitMethod::SparsePce);
        assert_eq!(rc.sampler, SamplerConfig::default());
    }

    #[test]
    fn flags_override_method_defaults() {
        let cli = Cli::try_parse_from([
            "khaos", "fit", "d.csv", "--method", "khaos-ridge", "--iters", "400", "--prior", "gprior", "--dmax", "5",
        ])
        .unwrap();
        let Command::Fit(args) = cli.command else { panic!() };
        let rc = resolve_fit_config(&args).unwrap();
        assert_eq!(rc.prior.family, PriorFamily::Gprior);
        assert_eq!(rc.sampler.n_iter, 400);
        assert_eq!(rc.sampler.n_burn, 200);
        assert_eq!(rc.prior.d_max, 5);
        let ridge = Cli::try_parse_from(["khaos", "fit", "d.csv", "--method", "khaos-ridge"]).unwrap();
        let Command::Fit(args) = ridge.command else { panic!() };
        assert_eq!(resolve_fit_config(&args).unwrap().prior.family, PriorFamily::Ridge);
    }

    #[test]
    fn ordinal_labels_validated() {
        assert_eq!(ordinal_labels(&[1.0, 3.0, 2.0]).unwrap(), vec![1, 3, 2]);
        assert!(ordinal_labels(&[1.0, 2.5]).is_err());
        assert!(ordinal_labels(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn bench_flags_parse_lists() {
        let cli = Cli::try_parse_from([
            "khaos", "bench", "--functions", "banana,ishigami", "--nsr", "0,0.5", "--methods", "sparse-pce", "--replicates", "2",
        ])
        .unwrap();
        let Command::Bench(args) = cli.command else { panic!() };
        let rc = resolve_bench_config(&args).unwrap();
        assert_eq!(rc.bench.functions, vec![TestFunction::Banana, TestFunction::Ishigami]);
        assert_eq!(rc.bench.nsr, vec![0.0, 0.5]);
        assert_eq!(rc.bench.methods, vec![Method::SparsePce]);
        assert_eq!(rc.bench.replicates, 2);
    }
}
