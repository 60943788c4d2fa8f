//! Shifted Legendre polynomials, multi-index algebra and design matrices.
//!
//! Inputs live on `[0,1]`. The univariate basis is
//! `psi_k(x) = sqrt(2k+1) * P_k(2x - 1)`, orthonormal under the uniform
//! measure, and a multi-index `alpha` defines the tensor product
//! `prod_j psi_{alpha_j}(x_j)`.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KhaosError, Result};

/// Largest polynomial degree accepted by [`legendre_shifted`].
pub const DEFAULT_MAX_DEGREE: usize = 50;

/// Default cap on the number of enumerated candidates.
pub const DEFAULT_CANDIDATE_CAP: u128 = 1_000_000;

/// Standardized shifted Legendre polynomial of the given degree at `x`.
pub fn legendre_shifted(degree: usize, x: f64) -> Result<f64> {
    if degree > DEFAULT_MAX_DEGREE {
        return Err(KhaosError::InvalidArgument(format!(
            "degree {degree} exceeds maximum {DEFAULT_MAX_DEGREE}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(KhaosError::InvalidArgument(format!(
            "x = {x} outside [0,1]"
        )));
    }
    Ok(shifted_unchecked(degree, x))
}

fn shifted_unchecked(degree: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let mut p_prev = 1.0;
    if degree == 0 {
        return 1.0;
    }
    let mut p = t;
    for k in 1..degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    (2.0 * degree as f64 + 1.0).sqrt() * p
}

/// Fills `out[k] = psi_k(x)` for `k = 0..out.len()`.
pub fn legendre_shifted_all(x: f64, out: &mut [f64]) {
    let t = 2.0 * x - 1.0;
    let mut p_prev = 1.0;
    let mut p = t;
    for (k, slot) in out.iter_mut().enumerate() {
        let raw = match k {
            0 => 1.0,
            1 => t,
            _ => {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
                p_prev = p;
                p = next;
                next
            }
        };
        *slot = (2.0 * k as f64 + 1.0).sqrt() * raw;
    }
}

/// Per-input polynomial degrees of one tensor-product basis function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Self {
        MultiIndex(alpha)
    }

    /// The all-zero index of dimension `p`.
    pub fn intercept(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Total degree, the sum of entries.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Interaction order, the number of positive entries.
    pub fn order(&self) -> u32 {
        self.0.iter().filter(|&&a| a > 0).count() as u32
    }

    pub fn is_intercept(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `(variable, degree)` pairs for the positive entries.
    pub fn active(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(j, &a)| (j, a))
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.0[j] > 0
    }

    /// Sorted list of active variables.
    pub fn active_set(&self) -> Vec<usize> {
        self.active().map(|(j, _)| j).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Evaluates the tensor-product basis function `mi` at the point `x`.
pub fn evaluate_basis(mi: &MultiIndex, x: &[f64]) -> Result<f64> {
    if mi.dim() != x.len() {
        return Err(KhaosError::InvalidArgument(format!(
            "multi-index has dimension {} but x has {}",
            mi.dim(),
            x.len()
        )));
    }
    let mut value = 1.0;
    for (j, a) in mi.active() {
        value *= legendre_shifted(a as usize, x[j])?;
    }
    Ok(value)
}

/// The admissible set of multi-indices with bounded degree and order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpace {
    pub p: usize,
    pub d_max: usize,
    pub q_max: usize,
}

impl CandidateSpace {
    pub fn new(p: usize, d_max: usize, q_max: usize) -> Result<Self> {
        if p == 0 || d_max == 0 || q_max == 0 || q_max > p.min(d_max) {
            return Err(KhaosError::InvalidArgument(format!(
                "need 1 <= q_max <= min(p, d_max); got p={p}, d_max={d_max}, q_max={q_max}"
            )));
        }
        Ok(CandidateSpace { p, d_max, q_max })
    }

    pub fn contains(&self, mi: &MultiIndex) -> bool {
        mi.dim() == self.p
            && !mi.is_intercept()
            && mi.degree() as usize <= self.d_max
            && mi.order() as usize <= self.q_max
    }
}

/// Binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Natural log of the binomial coefficient, usable for large arguments.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Number of non-intercept terms in the candidate space.
pub fn cardinality(space: &CandidateSpace) -> u128 {
    let mut total: u128 = 0;
    for i in 1..=space.q_max as u64 {
        let choose_vars = binomial(space.p as u64, i);
        for j in 1..=space.d_max as u64 {
            if j < i {
                continue;
            }
            total = total.saturating_add(choose_vars.saturating_mul(binomial(j - 1, i - 1)));
        }
    }
    total
}

/// Lists every candidate in lexicographic order of the degree vector.
pub fn enumerate_candidates(space: &CandidateSpace, cap: u128) -> Result<Vec<MultiIndex>> {
    let card = cardinality(space);
    if card > cap {
        return Err(KhaosError::Capacity {
            cardinality: card,
            cap,
        });
    }
    let mut out = Vec::with_capacity(card as usize);
    let mut alpha = vec![0u32; space.p];
    fill_candidates(space, 0, space.d_max as u32, space.q_max as u32, &mut alpha, &mut out);
    Ok(out)
}

fn fill_candidates(
    space: &CandidateSpace,
    pos: usize,
    deg_left: u32,
    ord_left: u32,
    alpha: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    if pos == space.p {
        if alpha.iter().any(|&a| a > 0) {
            out.push(MultiIndex(alpha.clone()));
        }
        return;
    }
    alpha[pos] = 0;
    fill_candidates(space, pos + 1, deg_left, ord_left, alpha, out);
    if ord_left > 0 {
        for a in 1..=deg_left {
            alpha[pos] = a;
            fill_candidates(space, pos + 1, deg_left - a, ord_left - 1, alpha, out);
        }
    }
    alpha[pos] = 0;
}

/// Number of ways to write `d` as an ordered sum of `q` positive parts.
pub fn count_compositions(d: u32, q: u32) -> Result<u128> {
    if q == 0 || d < q {
        return Err(KhaosError::InvalidArgument(format!(
            "composition needs d >= q >= 1, got d={d}, q={q}"
        )));
    }
    Ok(binomial((d - 1) as u64, (q - 1) as u64))
}

/// Draws a composition of `d` into `q` positive parts uniformly at random
/// (stars and bars: `q-1` distinct cut points among the `d-1` gaps).
pub fn sample_composition<R: Rng + ?Sized>(d: u32, q: u32, rng: &mut R) -> Result<Vec<u32>> {
    count_compositions(d, q)?;
    let mut cuts: Vec<u32> = rand::seq::index::sample(rng, (d - 1) as usize, (q - 1) as usize)
        .into_iter()
        .map(|c| c as u32 + 1)
        .collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(q as usize);
    let mut prev = 0;
    for c in cuts {
        parts.push(c - prev);
        prev = c;
    }
    parts.push(d - prev);
    Ok(parts)
}

/// Checks every entry of `x` lies in `[0,1]`.
pub fn check_unit_cube(x: &DMatrix<f64>) -> Result<()> {
    for col in 0..x.ncols() {
        for row in 0..x.nrows() {
            let v = x[(row, col)];
            if !(0.0..=1.0).contains(&v) {
                return Err(KhaosError::Domain { row, col, value: v });
            }
        }
    }
    Ok(())
}

/// Cached `psi_k(x_ij)` values for one dataset, one row-vector per
/// `(variable, degree)` pair.
#[derive(Clone, Debug)]
pub struct UnivariateTable {
    n: usize,
    max_degree: usize,
    // values[j][k][i]
    values: Vec<Vec<Vec<f64>>>,
}

impl UnivariateTable {
    pub fn new(x: &DMatrix<f64>, max_degree: usize) -> Result<Self> {
        check_unit_cube(x)?;
        if max_degree > DEFAULT_MAX_DEGREE {
            return Err(KhaosError::InvalidArgument(format!(
                "degree {max_degree} exceeds maximum {DEFAULT_MAX_DEGREE}"
            )));
        }
        let n = x.nrows();
        let mut values = Vec::with_capacity(x.ncols());
        let mut buf = vec![0.0; max_degree + 1];
        for j in 0..x.ncols() {
            let mut per_degree = vec![vec![0.0; n]; max_degree + 1];
            for i in 0..n {
                legendre_shifted_all(x[(i, j)], &mut buf);
                for (k, v) in buf.iter().enumerate() {
                    per_degree[k][i] = *v;
                }
            }
            values.push(per_degree);
        }
        Ok(UnivariateTable {
            n,
            max_degree,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Basis column for `mi` over all rows.
    pub fn column(&self, mi: &MultiIndex) -> Vec<f64> {
        let mut col = vec![1.0; self.n];
        for (j, a) in mi.active() {
            let v = &self.values[j][a as usize];
            for (c, &vi) in col.iter_mut().zip(v) {
                *c *= vi;
            }
        }
        col
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An ordered list of basis functions with their evaluated columns and
/// Gram matrix on one dataset. Position 0 is always the intercept.
#[derive(Clone, Debug)]
pub struct BasisSet {
    indices: Vec<MultiIndex>,
    columns: Vec<Vec<f64>>,
    gram: DMatrix<f64>,
}

impl BasisSet {
    /// Intercept-only basis for `n` rows in dimension `p`.
    pub fn intercept_only(n: usize, p: usize) -> Self {
        BasisSet {
            indices: vec![MultiIndex::intercept(p)],
            columns: vec![vec![1.0; n]],
            gram: DMatrix::from_element(1, 1, n as f64),
        }
    }

    pub fn from_table(table: &UnivariateTable, indices: &[MultiIndex]) -> Result<Self> {
        let p = table.dim();
        let mut set = BasisSet::intercept_only(table.nrows(), p);
        for mi in indices {
            if mi.dim() != p {
                return Err(KhaosError::InvalidArgument(format!(
                    "multi-index {mi} has dimension {}, data has {p}",
                    mi.dim()
                )));
            }
            if mi.is_intercept() {
                continue;
            }
            if mi.degree() as usize > table.max_degree() {
                return Err(KhaosError::InvalidArgument(format!(
                    "multi-index {mi} exceeds tabulated degree {}",
                    table.max_degree()
                )));
            }
            if set.contains(mi) {
                return Err(KhaosError::InvalidArgument(format!(
                    "duplicate multi-index {mi}"
                )));
            }
            set = set.with_added(mi.clone(), table.column(mi));
        }
        Ok(set)
    }

    pub fn nrows(&self) -> usize {
        self.columns[0].len()
    }

    /// Number of columns, `M + 1`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of non-intercept terms `M`.
    pub fn n_terms(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn contains(&self, mi: &MultiIndex) -> bool {
        self.indices.iter().any(|m| m == mi)
    }

    /// Dense `n x (M+1)` design matrix.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.len(), |i, k| self.columns[k][i])
    }

    pub fn xt_vec(&self, y: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, y)).collect()
    }

    /// `Psi * beta`.
    pub fn fitted(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        for (c, &b) in self.columns.iter().zip(beta) {
            if b == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(c) {
                *o += b * v;
            }
        }
        out
    }

    /// Copy with one more column appended.
    pub fn with_added(&self, mi: MultiIndex, column: Vec<f64>) -> Self {
        let k = self.len();
        let cross: Vec<f64> = self.columns.iter().map(|c| dot(c, &column)).collect();
        let diag = dot(&column, &column);
        let mut gram = self.gram.clone().resize(k + 1, k + 1, 0.0);
        for (m, v) in cross.iter().enumerate() {
            gram[(m, k)] = *v;
            gram[(k, m)] = *v;
        }
        gram[(k, k)] = diag;
        let mut indices = self.indices.clone();
        indices.push(mi);
        let mut columns = self.columns.clone();
        columns.push(column);
        BasisSet {
            indices,
            columns,
            gram,
        }
    }

    /// Copy with column `k` (never the intercept) removed.
    pub fn with_removed(&self, k: usize) -> Self {
        assert!(k > 0 && k < self.len(), "cannot remove column {k}");
        let mut indices = self.indices.clone();
        indices.remove(k);
        let mut columns = self.columns.clone();
        columns.remove(k);
        let gram = self.gram.clone().remove_row(k).remove_column(k);
        BasisSet {
            indices,
            columns,
            gram,
        }
    }

    /// Copy with column `k` replaced.
    pub fn with_replaced(&self, k: usize, mi: MultiIndex, column: Vec<f64>) -> Self {
        assert!(k > 0 && k < self.len(), "cannot replace column {k}");
        let mut gram = self.gram.clone();
        for m in 0..self.len() {
            let v = if m == k {
                dot(&column, &column)
            } else {
                dot(&self.columns[m], &column)
            };
            gram[(m, k)] = v;
            gram[(k, m)] = v;
        }
        let mut indices = self.indices.clone();
        indices[k] = mi;
        let mut columns = self.columns.clone();
        columns[k] = column;
        BasisSet {
            indices,
            columns,
            gram,
        }
    }
}

/// Builds the design for `indices` on `x` (rows are observations, entries
/// in `[0,1]`). The intercept is prepended when absent.
pub fn build_design(indices: &[MultiIndex], x: &DMatrix<f64>) -> Result<BasisSet> {
    let max_deg = indices.iter().map(|m| m.degree() as usize).max().unwrap_or(0);
    let table = UnivariateTable::new(x, max_deg)?;
    BasisSet::from_table(&table, indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn legendre_spot_values() {
        assert_eq!(legendre_shifted(0, 0.73).unwrap(), 1.0);
        assert!(legendre_shifted(1, 0.5).unwrap().abs() < 1e-15);
        assert!((legendre_shifted(2, 1.0).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!(legendre_shifted(51, 0.5).is_err());
        assert!(legendre_shifted(2, 1.5).is_err());
    }

    #[test]
    fn table_matches_scalar_recurrence() {
        let mut buf = vec![0.0; 12];
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            legendre_shifted_all(x, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                assert!((v - legendre_shifted(k, x).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn basis_spot_values() {
        let mi = MultiIndex::new(vec![0, 0]);
        assert_eq!(evaluate_basis(&mi, &[0.3, 0.9]).unwrap(), 1.0);
        let mi = MultiIndex::new(vec![1, 1]);
        assert!(evaluate_basis(&mi, &[0.5, 0.5]).unwrap().abs() < 1e-15);
        let mi = MultiIndex::new(vec![2, 1]);
        let expected = 5f64.sqrt() * 3f64.sqrt();
        assert!((evaluate_basis(&mi, &[1.0, 1.0]).unwrap() - expected).abs() < 1e-12);
        assert!(evaluate_basis(&mi, &[1.0]).is_err());
    }

    #[test]
    fn degree_and_order() {
        let mi = MultiIndex::new(vec![3, 0, 1]);
        assert_eq!(mi.degree(), 4);
        assert_eq!(mi.order(), 2);
        assert_eq!(mi.active_set(), vec![0, 2]);
        assert!(MultiIndex::intercept(3).is_intercept());
    }

    #[test]
    fn cardinality_spot_values() {
        let c = |p, d, q| cardinality(&CandidateSpace::new(p, d, q).unwrap());
        assert_eq!(c(2, 2, 2), 5);
        assert_eq!(c(1, 3, 1), 3);
        assert_eq!(c(3, 1, 1), 3);
    }

    #[test]
    fn candidate_space_rejects_bad_order() {
        assert!(CandidateSpace::new(2, 3, 3).is_err());
        assert!(CandidateSpace::new(3, 1, 2).is_err());
        assert!(CandidateSpace::new(3, 2, 0).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let list = enumerate_candidates(&CandidateSpace::new(2, 2, 2).unwrap(), 100).unwrap();
        let expected: Vec<MultiIndex> = [[0, 1], [0, 2], [1, 0], [1, 1], [2, 0]]
            .iter()
            .map(|a| MultiIndex::new(a.to_vec()))
            .collect();
        assert_eq!(list, expected);
        let list = enumerate_candidates(&CandidateSpace::new(1, 1, 1).unwrap(), 100).unwrap();
        assert_eq!(list, vec![MultiIndex::new(vec![1])]);
        let list = enumerate_candidates(&CandidateSpace::new(2, 1, 1).unwrap(), 100).unwrap();
        assert_eq!(list.len(), 2);
        assert!(list.contains(&MultiIndex::new(vec![1, 0])));
        assert!(list.contains(&MultiIndex::new(vec![0, 1])));
    }

    #[test]
    fn enumeration_cap() {
        let space = CandidateSpace::new(10, 6, 4).unwrap();
        match enumerate_candidates(&space, 10) {
            Err(KhaosError::Capacity { cardinality: c, cap }) => {
                assert_eq!(c, cardinality(&space));
                assert_eq!(cap, 10);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn compositions() {
        assert_eq!(count_compositions(4, 2).unwrap(), 3);
        assert_eq!(count_compositions(3, 3).unwrap(), 1);
        assert_eq!(count_compositions(5, 1).unwrap(), 1);
        assert!(count_compositions(2, 3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_composition(2, 2, &mut rng).unwrap(), vec![1, 1]);
        assert_eq!(sample_composition(3, 1, &mut rng).unwrap(), vec![3]);
        for _ in 0..200 {
            let parts = sample_composition(9, 4, &mut rng).unwrap();
            assert_eq!(parts.len(), 4);
            assert_eq!(parts.iter().sum::<u32>(), 9);
            assert!(parts.iter().all(|&v| v > 0));
        }
    }

    #[test]
    fn design_has_intercept_and_gram() {
        let x = DMatrix::from_row_slice(4, 2, &[0.1, 0.2, 0.4, 0.9, 0.7, 0.3, 1.0, 0.0]);
        let idx = vec![MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![1, 2])];
        let basis = build_design(&idx, &x).unwrap();
        assert_eq!(basis.len(), 3);
        assert!(basis.indices()[0].is_intercept());
        assert!(basis.column(0).iter().all(|&v| v == 1.0));
        let psi = basis.design_matrix();
        let gram = psi.transpose() * &psi;
        assert!((gram - basis.gram()).abs().max() < 1e-10);

        let dup = vec![MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![1, 0])];
        assert!(build_design(&dup, &x).is_err());
    }

    #[test]
    fn design_domain_error_reports_position() {
        let x = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.4, 1.2]);
        match build_design(&[MultiIndex::new(vec![1, 0])], &x) {
            Err(KhaosError::Domain { row, col, .. }) => assert_eq!((row, col), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn incremental_gram_updates() {
        let x = DMatrix::from_fn(30, 3, |i, j| ((i * 7 + j * 3) % 30) as f64 / 29.0);
        let table = UnivariateTable::new(&x, 5).unwrap();
        let a = MultiIndex::new(vec![1, 0, 0]);
        let b = MultiIndex::new(vec![0, 2, 1]);
        let c = MultiIndex::new(vec![3, 0, 1]);
        let set = BasisSet::from_table(&table, &[a.clone(), b.clone()]).unwrap();
        let set = set.with_replaced(1, c.clone(), table.column(&c));
        let set = set.with_added(a.clone(), table.column(&a));
        let set = set.with_removed(2);
        let direct = BasisSet::from_table(&table, &[c, a]).unwrap();
        assert_eq!(set.indices(), direct.indices());
        assert!((set.gram() - direct.gram()).abs().max() < 1e-9);
    }
}
