//! Dataset representation, binarization, standardization and synthetic
//! instance generation.
//!
//! Covariates live in [0, 1] and are stored column-sparse: zeros are never
//! stored, so interaction features can be built by index intersection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// One sparse column: strictly increasing instance indices with values in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<F> {
    pub(crate) indices: Vec<u32>,
    pub(crate) values: Vec<F>,
}

impl<F: Scalar> SparseVec<F> {
    pub fn new(indices: Vec<u32>, values: Vec<F>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SparseVec { indices, values }
    }

    pub fn empty() -> Self {
        SparseVec { indices: Vec::new(), values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, F)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Densifies into a length-n vector.
    pub fn to_dense(&self, n: usize) -> Vec<F> {
        let mut out = vec![F::zero(); n];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// The n×d original covariate matrix Z, column-sparse, values in (0, 1].
#[derive(Debug, Clone)]
pub struct CovariateMatrix<F> {
    n: usize,
    d: usize,
    columns: Vec<SparseVec<F>>,
    is_binary: bool,
}

impl<F: Scalar> CovariateMatrix<F> {
    /// Builds a matrix from sparse columns, validating the type invariants:
    /// strictly increasing indices in [0, n) and values in (0, 1].
    pub fn from_columns(n: usize, columns: Vec<SparseVec<F>>) -> Result<Self> {
        let one = F::one();
        let mut is_binary = true;
        for (j, col) in columns.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for (i, v) in col.iter() {
                if (i as usize) >= n {
                    return Err(Error::Config(format!(
                        "column {j}: instance index {i} out of range (n={n})"
                    )));
                }
                if let Some(p) = prev {
                    if i <= p {
                        return Err(Error::Config(format!(
                            "column {j}: instance indices must strictly increase"
                        )));
                    }
                }
                prev = Some(i);
                if !(v > F::zero() && v <= one) {
                    return Err(Error::Config(format!(
                        "column {j}, instance {i}: value {v} outside (0, 1]"
                    )));
                }
                if v != one {
                    is_binary = false;
                }
            }
        }
        let d = columns.len();
        Ok(CovariateMatrix { n, d, columns, is_binary })
    }

    /// Builds from dense rows; zeros are dropped. Convenience for tests.
    pub fn from_dense_rows(rows: &[Vec<F>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let mut columns = vec![SparseVec::empty(); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config("ragged rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != F::zero() {
                    columns[j].indices.push(i as u32);
                    columns[j].values.push(v);
                }
            }
        }
        Self::from_columns(n, columns)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_binary(&self) -> bool {
        self.is_binary
    }

    pub fn column(&self, j: usize) -> &SparseVec<F> {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVec<F>] {
        &self.columns
    }

    /// Total stored entries.
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseVec::len).sum()
    }
}

/// Length-n response vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector<F>(Vec<F>);

impl<F: Scalar> ResponseVector<F> {
    pub fn new(y: Vec<F>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("response contains non-finite values".into()));
        }
        Ok(ResponseVector(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<F> {
        self.0
    }
}

impl<F> std::ops::Deref for ResponseVector<F> {
    type Target = [F];
    fn deref(&self) -> &[F] {
        &self.0
    }
}

/// Screening mode for the path runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreenMode {
    /// Safe feature pruning over the itemset tree.
    Sfp,
    /// No screening: enumerate every nonzero feature through the tree.
    None,
}

/// Which definition of the screening vector c to use; see
/// [`crate::screening`] for the discrepancy the two forms resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CVariant {
    /// c = (1/λt + 1/λt−1)·y − a. Consistent with the per-feature screen;
    /// the node-bound domination proof goes through for this form.
    #[default]
    Proposition,
    /// c = (1/λt + 1/λt−1)·y − (λt−1/λt)·a, as printed in the pruning theorem.
    Theorem,
}

/// Path and solver configuration.
#[derive(Debug, Clone)]
pub struct ProblemConfig<F> {
    /// Maximum interaction order r ≥ 1.
    pub r: usize,
    /// Binarization threshold for continuous inputs (None = data already in [0,1]).
    pub delta: Option<F>,
    /// λ decay coefficient: λt = (1 − decay/√t)·λt−1.
    pub lambda_decay: F,
    /// Stop once λ/λ_max drops below this ratio.
    pub lambda_min_ratio: F,
    /// Relative duality-gap tolerance.
    pub tol: F,
    pub screen_mode: ScreenMode,
    /// Tighter binary-covariate case selection in the pruning bounds (experimental).
    pub binary_refinement: bool,
    /// Screening c-vector form.
    pub c_variant: CVariant,
    /// Coordinate-descent sweep cap; None = 100·|features|.
    pub max_sweeps: Option<usize>,
}

impl<F: Scalar> ProblemConfig<F> {
    pub fn new(r: usize) -> Self {
        ProblemConfig {
            r,
            delta: None,
            lambda_decay: F::c(0.1),
            lambda_min_ratio: F::c(0.01),
            tol: F::c(1e-6),
            screen_mode: ScreenMode::Sfp,
            binary_refinement: false,
            c_variant: CVariant::Proposition,
            max_sweeps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 1 {
            return Err(Error::Config("r must be >= 1".into()));
        }
        if !(self.lambda_min_ratio > F::zero() && self.lambda_min_ratio < F::one()) {
            return Err(Error::Config("lambda_min_ratio must be in (0, 1)".into()));
        }
        if !(self.lambda_decay > F::zero() && self.lambda_decay < F::one()) {
            return Err(Error::Config("lambda_decay must be in (0, 1)".into()));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Raw matrix as read from disk before range validation or binarization:
/// sparse columns with arbitrary finite values.
#[derive(Debug, Clone)]
pub struct RawMatrix<F> {
    pub n: usize,
    pub d: usize,
    pub columns: Vec<SparseVec<F>>,
}

impl<F: Scalar> RawMatrix<F> {
    pub fn from_dense_rows(rows: &[Vec<F>]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let mut columns = vec![SparseVec::empty(); d];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != F::zero() {
                    columns[j].indices.push(i as u32);
                    columns[j].values.push(v);
                }
            }
        }
        RawMatrix { n, d, columns }
    }

    /// Validates values into (0, 1] and produces a covariate matrix.
    /// Explicitly stored zeros are dropped.
    pub fn into_covariates(self) -> Result<CovariateMatrix<F>> {
        let one = F::one();
        let mut columns = Vec::with_capacity(self.d);
        for (j, col) in self.columns.into_iter().enumerate() {
            let mut out = SparseVec::empty();
            for (i, v) in col.iter() {
                if v == F::zero() {
                    continue;
                }
                if !(v >= F::zero() && v <= one) {
                    return Err(Error::Config(format!(
                        "column {}: value {} outside [0, 1]; pass a binarization threshold for continuous data",
                        j + 1,
                        v
                    )));
                }
                out.indices.push(i);
                out.values.push(v);
            }
            columns.push(out);
        }
        CovariateMatrix::from_columns(self.n, columns)
    }
}

/// Standardizes each raw covariate to mean 0 / variance 1 (divisor n), then
/// maps it to two binary columns: (value > δ) and (value < −δ). Constant
/// columns map to two all-zero columns. Output column count is 2·d.
pub fn binarize<F: Scalar>(raw: &RawMatrix<F>, delta: F) -> Result<CovariateMatrix<F>> {
    if !(delta > F::zero()) {
        return Err(Error::Config("delta must be positive".into()));
    }
    let n = raw.n;
    let nf = F::from_usize(n).unwrap();
    let mut columns = Vec::with_capacity(2 * raw.d);
    for col in &raw.columns {
        for v in col.values() {
            if !v.is_finite() {
                return Err(Error::Config("non-finite covariate value".into()));
            }
        }
        let sum: F = col.values().iter().copied().sum();
        let sum_sq: F = col.values().iter().map(|v| *v * *v).sum();
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(F::zero());
        if var == F::zero() {
            columns.push(SparseVec::empty());
            columns.push(SparseVec::empty());
            continue;
        }
        let sd = var.sqrt();
        let hi_cut = mean + delta * sd; // raw value v maps to 1 in the "high" column iff v > hi_cut
        let lo_cut = mean - delta * sd; // and to 1 in the "low" column iff v < lo_cut
        let zero_hi = F::zero() > hi_cut;
        let zero_lo = F::zero() < lo_cut;

        let mut hi = SparseVec::empty();
        let mut lo = SparseVec::empty();
        let mut stored = col.iter().peekable();
        for i in 0..n as u32 {
            let v = match stored.peek() {
                Some(&(si, sv)) if si == i => {
                    stored.next();
                    Some(sv)
                }
                _ => None,
            };
            let (h, l) = match v {
                Some(v) => (v > hi_cut, v < lo_cut),
                None => (zero_hi, zero_lo),
            };
            if h {
                hi.indices.push(i);
                hi.values.push(F::one());
            }
            if l {
                lo.indices.push(i);
                lo.values.push(F::one());
            }
        }
        columns.push(hi);
        columns.push(lo);
    }
    CovariateMatrix::from_columns(n, columns)
}

/// Centers and scales y to sample mean 0 and variance 1 (divisor n).
pub fn standardize_response<F: Scalar>(y: &[F]) -> Result<ResponseVector<F>> {
    if y.len() < 2 {
        return Err(Error::Config("need at least two responses".into()));
    }
    let nf = F::from_usize(y.len()).unwrap();
    let mean = y.iter().copied().sum::<F>() / nf;
    let var = y.iter().map(|v| (*v - mean) * (*v - mean)).sum::<F>() / nf;
    if var == F::zero() {
        return Err(Error::DegenerateResponse);
    }
    let sd = var.sqrt();
    ResponseVector::new(y.iter().map(|v| (*v - mean) / sd).collect())
}

/// Generates a random binary covariate matrix with entry sparsity η (fraction
/// of zeros) and a pure-noise response y = ε, ε ~ N(0, σ²I).
///
/// Deterministic given the seed: a ChaCha8 stream drives column-major
/// Bernoulli draws for Z first, then n standard-normal draws for y.
pub fn synth_generate<F: Scalar>(
    n: usize,
    d: usize,
    sparsity: f64,
    sigma: f64,
    seed: u64,
) -> Result<(CovariateMatrix<F>, ResponseVector<F>)> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::Config("sparsity must be in [0, 1]".into()));
    }
    if sigma < 0.0 {
        return Err(Error::Config("sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_one = 1.0 - sparsity;
    let mut columns = Vec::with_capacity(d);
    for _ in 0..d {
        let mut col = SparseVec::empty();
        for i in 0..n as u32 {
            if rng.random::<f64>() < p_one {
                col.indices.push(i);
                col.values.push(F::one());
            }
        }
        columns.push(col);
    }
    let y: Vec<F> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            F::c(z * sigma)
        })
        .collect();
    let matrix = CovariateMatrix::from_columns(n, columns)?;
    Ok((matrix, ResponseVector::new(y)?))
}
