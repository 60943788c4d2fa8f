//! CSV input, covariate scaling and the JSON model archive.
//!
//! Posterior draws are stored as a little-endian binary block, base64
//! encoded inside the JSON envelope, so floats round-trip bit for bit.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::MultiIndex;
use crate::error::{KhaosError, Result};
use crate::linear::PriorSpec;
use crate::sampler::{Draw, MoveStats, PosteriorDraws, Provenance, SamplerConfig};
use crate::sparse::{SparseConfig, SparseFit};

pub const FORMAT_VERSION: u32 = 1;

/// A numeric table read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub data: DMatrix<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    /// The columns named in `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| KhaosError::Data(format!("missing column '{n}'")))
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(self.data.nrows(), idx.len(), |i, k| self.data[(i, idx[k])]))
    }
}

/// Reads a headed CSV of numbers. Lines starting with `#` are skipped.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(KhaosError::Data(format!("{}: no header row", path.display())));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(KhaosError::Data(format!(
                "row {}: expected {} fields, found {}",
                r + 1,
                headers.len(),
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                KhaosError::Data(format!(
                    "row {}, column '{}': '{}' is not a number",
                    r + 1,
                    headers[c],
                    field
                ))
            })?;
            if !v.is_finite() {
                return Err(KhaosError::Data(format!(
                    "row {}, column '{}': value is not finite",
                    r + 1,
                    headers[c]
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(KhaosError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Table {
        data: DMatrix::from_row_slice(rows, headers.len(), &values),
        headers,
    })
}

/// Per-column affine map from raw covariates onto `[0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaling {
    pub fn fit(columns: &[String], x: &DMatrix<f64>) -> Result<Self> {
        let mut min = Vec::with_capacity(x.ncols());
        let mut max = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let col = x.column(j);
            let lo = col.min();
            let hi = col.max();
            if hi <= lo {
                return Err(KhaosError::Data(format!(
                    "covariate '{}' is constant",
                    columns[j]
                )));
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Scaling {
            columns: columns.to_vec(),
            min,
            max,
        })
    }

    /// Scales `x` (columns in training order), clamping to `[0,1]`.
    /// Returns the scaled matrix and the number of clamped values.
    pub fn apply(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
        let mut clamped = 0;
        let out = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let v = (x[(i, j)] - self.min[j]) / (self.max[j] - self.min[j]);
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            v.clamp(0.0, 1.0)
        });
        (out, clamped)
    }

    /// Columns of `table` matching the training schema. `allowed` names may
    /// be present without being covariates (e.g. the response).
    pub fn extract(&self, table: &Table, allowed: &[&str]) -> Result<DMatrix<f64>> {
        let missing: Vec<String> = self
            .columns
            .iter()
            .filter(|c| table.column_index(c).is_none())
            .cloned()
            .collect();
        let extra: Vec<String> = table
            .headers
            .iter()
            .filter(|h| !self.columns.contains(h) && !allowed.contains(&h.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(KhaosError::Schema { missing, extra });
        }
        table.select(&self.columns)
    }
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(KhaosError::Data("draw payload is truncated".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Binary layout: `p`, draw count, then per draw the term count, each
/// term's `p` degrees, the coefficients, `sigma2`, `g0sq`, `lambda`.
pub fn encode_draws(draws: &[Draw], p: usize) -> Vec<u8> {
    let mut buf = Vec::new();
    push_u32(&mut buf, p as u32);
    push_u32(&mut buf, draws.len() as u32);
    for d in draws {
        push_u32(&mut buf, d.indices.len() as u32);
        for mi in &d.indices {
            for &a in mi.as_slice() {
                push_u32(&mut buf, a);
            }
        }
        for &b in &d.beta {
            push_f64(&mut buf, b);
        }
        push_f64(&mut buf, d.sigma2);
        push_f64(&mut buf, d.g0sq);
        push_f64(&mut buf, d.lambda);
    }
    buf
}

pub fn decode_draws(bytes: &[u8]) -> Result<(usize, Vec<Draw>)> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let p = c.u32()? as usize;
    let n = c.u32()? as usize;
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let k = c.u32()? as usize;
        let mut indices = Vec::with_capacity(k);
        for _ in 0..k {
            let alpha = (0..p).map(|_| c.u32()).collect::<Result<Vec<u32>>>()?;
            indices.push(MultiIndex::new(alpha));
        }
        let beta = (0..k).map(|_| c.f64()).collect::<Result<Vec<f64>>>()?;
        draws.push(Draw {
            indices,
            beta,
            sigma2: c.f64()?,
            g0sq: c.f64()?,
            lambda: c.f64()?,
        });
    }
    if c.pos != bytes.len() {
        return Err(KhaosError::Data("trailing bytes in draw payload".into()));
    }
    Ok((p, draws))
}

/// Base64 draw block with its SHA-256.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawPayload {
    pub encoding: String,
    pub sha256: String,
    pub data: String,
}

impl DrawPayload {
    pub fn pack(draws: &PosteriorDraws) -> Self {
        let bytes = encode_draws(&draws.draws, draws.p);
        let digest = Sha256::digest(&bytes);
        DrawPayload {
            encoding: "khaos-draws-le-v1".into(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            data: STANDARD.encode(&bytes),
        }
    }

    pub fn unpack(&self) -> Result<(usize, Vec<Draw>)> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| KhaosError::Data(format!("draw payload is not base64: {e}")))?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        if digest != self.sha256 {
            return Err(KhaosError::Data("draw payload checksum mismatch".into()));
        }
        decode_draws(&bytes)
    }
}

/// The fitted model inside an archive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArchivedModel {
    Khaos {
        prior: PriorSpec,
        sampler: SamplerConfig,
        draws: DrawPayload,
        stats: MoveStats,
    },
    Ordinal {
        prior: PriorSpec,
        sampler: SamplerConfig,
        categories: usize,
        cutpoints: Vec<Vec<f64>>,
        draws: DrawPayload,
        stats: MoveStats,
    },
    Sparse {
        config: SparseConfig,
        fit: SparseFit,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub build_version: String,
    pub method: String,
    pub response: String,
    pub scaling: Scaling,
    pub provenance: Provenance,
    pub model: ArchivedModel,
}

impl ModelArchive {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let archive: ModelArchive = serde_json::from_str(&text)?;
        if archive.format_version != FORMAT_VERSION {
            return Err(KhaosError::Data(format!(
                "archive format {} is not supported (expected {FORMAT_VERSION})",
                archive.format_version
            )));
        }
        Ok(archive)
    }

    /// Rebuilds the posterior draws of a KHAOS or ordinal archive.
    pub fn posterior_draws(&self) -> Result<Option<PosteriorDraws>> {
        let (payload, stats) = match &self.model {
            ArchivedModel::Khaos { draws, stats, .. } | ArchivedModel::Ordinal { draws, stats, .. } => {
                (draws, stats)
            }
            ArchivedModel::Sparse { .. } => return Ok(None),
        };
        let (p, draws) = payload.unpack()?;
        Ok(Some(PosteriorDraws {
            p,
            draws,
            provenance: self.provenance.clone(),
            stats: stats.clone(),
        }))
    }
}
