//! Cyclic coordinate-descent ("shooting") LASSO solver over an explicit
//! reduced feature set, with duality-gap certification.
//!
//! The solver minimizes ½‖y − Xβ‖² + λ‖β‖₁ with soft-threshold updates in
//! lexicographic itemset order and maintains the residual incrementally.
//! Convergence is certified through the duality gap at the rescaled-residual
//! dual point; the full-feature-space certificate (which searches the whole
//! itemset tree) lives in [`certify_gap`].

use std::collections::BTreeMap;
use std::collections::HashSet;

use crate::data::CovariateMatrix;
use crate::num::{norm_sq, Scalar};
use crate::tree::{feature_vector, tree_max_abs_inner, Itemset, SearchStats, SparseFeature};

/// Sparse solution at one λ: itemset → nonzero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution<F> {
    lambda: F,
    /// Certified relative duality gap for this solve.
    gap: F,
    coefficients: BTreeMap<Itemset, F>,
}

impl<F: Scalar> SparseSolution<F> {
    pub fn empty(lambda: F) -> Self {
        SparseSolution { lambda, gap: F::zero(), coefficients: BTreeMap::new() }
    }

    pub fn from_parts(lambda: F, gap: F, coefficients: BTreeMap<Itemset, F>) -> Self {
        debug_assert!(coefficients.values().all(|c| *c != F::zero()));
        SparseSolution { lambda, gap, coefficients }
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn gap(&self) -> F {
        self.gap
    }

    pub(crate) fn set_gap(&mut self, gap: F) {
        self.gap = gap;
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn get(&self, itemset: &Itemset) -> F {
        self.coefficients.get(itemset).copied().unwrap_or_else(F::zero)
    }

    /// Entries in lexicographic itemset order.
    pub fn iter(&self) -> impl Iterator<Item = (&Itemset, F)> + '_ {
        self.coefficients.iter().map(|(k, v)| (k, *v))
    }

    pub fn itemsets(&self) -> impl Iterator<Item = &Itemset> + '_ {
        self.coefficients.keys()
    }

    /// Count of active features per interaction order 1..=r.
    pub fn active_by_order(&self, r: usize) -> Vec<usize> {
        let mut counts = vec![0usize; r];
        for its in self.coefficients.keys() {
            if its.order() <= r {
                counts[its.order() - 1] += 1;
            }
        }
        counts
    }
}

/// The soft-threshold kernel: sign(z)·max(|z| − λ, 0).
pub fn soft_threshold<F: Scalar>(z: F, lambda: F) -> F {
    debug_assert!(lambda >= F::zero());
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        F::zero()
    }
}

/// Solver options; `max_sweeps = None` defaults to 100·|features|.
#[derive(Debug, Clone, Copy)]
pub struct CdOptions<F> {
    pub tol: F,
    pub max_sweeps: Option<usize>,
    /// Gap evaluation cadence; a cheap max-coefficient-change pre-filter may
    /// trigger it earlier.
    pub gap_check_every: usize,
}

impl<F: Scalar> CdOptions<F> {
    pub fn new(tol: F) -> Self {
        CdOptions { tol, max_sweeps: None, gap_check_every: 10 }
    }
}

/// Successful solve: the solution plus per-run diagnostics.
#[derive(Debug, Clone)]
pub struct CdOutcome<F> {
    pub solution: SparseSolution<F>,
    pub sweeps: usize,
    /// Final residual y − Xβ.
    pub residual: Vec<F>,
    /// Primal objective after each sweep (non-increasing).
    pub objective_trace: Vec<F>,
}

/// Sweep cap exceeded; carries the best iterate reached.
#[derive(Debug, Clone)]
pub struct NonConvergence<F> {
    pub best: SparseSolution<F>,
    pub sweeps: usize,
    pub rel_gap: F,
}

impl<F: Scalar> std::fmt::Display for NonConvergence<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "coordinate descent did not converge after {} sweeps (relative gap {:.3e})",
            self.sweeps,
            self.rel_gap.f64()
        )
    }
}

impl<F: Scalar> std::error::Error for NonConvergence<F> {}

/// Solves the reduced LASSO over `features` (lexicographically sorted,
/// all nonzero) warm-started from `warm`, stopping when the reduced-problem
/// relative duality gap drops to `opts.tol`.
pub fn cd_solve<F: Scalar>(
    features: &[SparseFeature<F>],
    y: &[F],
    lambda: F,
    warm: Option<&SparseSolution<F>>,
    opts: &CdOptions<F>,
) -> Result<CdOutcome<F>, NonConvergence<F>> {
    assert!(lambda > F::zero());
    debug_assert!(features.windows(2).all(|w| w[0].itemset < w[1].itemset));

    let m = features.len();
    let norms_sq: Vec<F> = features
        .iter()
        .map(|f| {
            let nsq = norm_sq(f.column.values());
            assert!(nsq > F::zero(), "zero-norm feature reached the solver: {}", f.itemset);
            nsq
        })
        .collect();

    let mut beta: Vec<F> = features
        .iter()
        .map(|f| warm.map_or_else(F::zero, |w| w.get(&f.itemset)))
        .collect();
    let mut residual: Vec<F> = y.to_vec();
    for (f, &b) in features.iter().zip(&beta) {
        if b != F::zero() {
            for (i, x) in f.column.iter() {
                residual[i as usize] -= x * b;
            }
        }
    }

    let max_sweeps = opts.max_sweeps.unwrap_or_else(|| 100 * m.max(1));
    let prefilter = opts.tol * F::c(1e-2);
    let mut objective_trace = Vec::new();
    let mut sweeps = 0usize;

    let finish = |beta: &[F], residual: &[F], rel_gap: F, sweeps: usize, trace: Vec<F>| {
        let mut coefficients = BTreeMap::new();
        for (f, &b) in features.iter().zip(beta) {
            if b != F::zero() {
                coefficients.insert(f.itemset.clone(), b);
            }
        }
        CdOutcome {
            solution: SparseSolution { lambda, gap: rel_gap, coefficients },
            sweeps,
            residual: residual.to_vec(),
            objective_trace: trace,
        }
    };

    // Empty reduced problem: β = 0 is optimal by construction.
    if m == 0 {
        return Ok(finish(&beta, &residual, F::zero(), 0, objective_trace));
    }

    loop {
        if sweeps >= max_sweeps {
            let cert = reduced_certificate(features, &beta, &residual, lambda);
            let out = finish(&beta, &residual, cert.rel_gap, sweeps, objective_trace);
            return Err(NonConvergence { best: out.solution, sweeps, rel_gap: cert.rel_gap });
        }
        sweeps += 1;

        let mut max_delta = F::zero();
        for j in 0..m {
            let f = &features[j];
            let corr = f.dot_dense(&residual) + norms_sq[j] * beta[j];
            let next = soft_threshold(corr, lambda) / norms_sq[j];
            let delta = next - beta[j];
            if delta != F::zero() {
                for (i, x) in f.column.iter() {
                    residual[i as usize] -= x * delta;
                }
                beta[j] = next;
                max_delta = max_delta.max(delta.abs());
            }
        }
        objective_trace.push(primal_objective(&beta, &residual, lambda));

        if sweeps % opts.gap_check_every == 0 || max_delta < prefilter {
            let cert = reduced_certificate(features, &beta, &residual, lambda);
            if cert.converged(opts.tol) {
                return Ok(finish(&beta, &residual, cert.rel_gap, sweeps, objective_trace));
            }
        }
    }
}

/// Stopping certificate for the reduced problem: the duality gap plus the
/// KKT residuals the gap alone does not bound.
struct ReducedCert<F> {
    rel_gap: F,
    /// max |x_jᵀρ| / λ over the reduced set.
    max_corr_ratio: F,
    /// max |x_jᵀρ − λ·sign(β_j)| / λ over active coordinates.
    active_kkt_ratio: F,
}

impl<F: Scalar> ReducedCert<F> {
    fn converged(&self, tol: F) -> bool {
        let ten = F::c(10.0);
        self.rel_gap <= tol
            && self.max_corr_ratio <= F::one() + ten * tol
            && self.active_kkt_ratio <= ten * tol
    }
}

fn primal_objective<F: Scalar>(beta: &[F], residual: &[F], lambda: F) -> F {
    let l1: F = beta.iter().map(|b| b.abs()).sum();
    F::c(0.5) * norm_sq(residual) + lambda * l1
}

fn reduced_certificate<F: Scalar>(
    features: &[SparseFeature<F>],
    beta: &[F],
    residual: &[F],
    lambda: F,
) -> ReducedCert<F> {
    let mut max_corr = F::zero();
    let mut corr_xb = F::zero();
    let mut kkt = F::zero();
    for (f, &b) in features.iter().zip(beta) {
        let corr = f.dot_dense(residual);
        max_corr = max_corr.max(corr.abs());
        corr_xb += corr * b;
        if b != F::zero() {
            kkt = kkt.max((corr - lambda * b.signum()).abs());
        }
    }
    let m = max_corr / lambda;
    let l1: F = beta.iter().map(|b| b.abs()).sum();
    let gap = gap_from_parts(norm_sq(residual), l1, corr_xb, lambda, m);
    let primal = F::c(0.5) * norm_sq(residual) + lambda * l1;
    ReducedCert {
        rel_gap: relative(gap, primal),
        max_corr_ratio: m,
        active_kkt_ratio: kkt / lambda,
    }
}

/// gap = ½‖ρ‖²(1 − 1/m̄)² + λ‖β‖₁ − ρᵀXβ/m̄ with m̄ = max(1, m); exactly
/// P(β) − D(ρ/(λ·m̄)) but free of large-term cancellation near the optimum.
fn gap_from_parts<F: Scalar>(rho_sq: F, l1: F, corr_xb: F, lambda: F, m: F) -> F {
    let m_bar = m.max(F::one());
    let shrink = F::one() - F::one() / m_bar;
    (F::c(0.5) * rho_sq * shrink * shrink + lambda * l1 - corr_xb / m_bar).max(F::zero())
}

fn relative<F: Scalar>(gap: F, primal: F) -> F {
    if primal > F::zero() {
        gap / primal
    } else {
        gap
    }
}

/// Full-feature-space optimality certificate for a solution.
#[derive(Debug, Clone)]
pub struct GapCertificate<F> {
    /// Absolute duality gap P(β) − D(θ).
    pub gap: F,
    pub primal: F,
    pub rel_gap: F,
    /// max over every itemset of |x_jᵀρ|/λ.
    pub max_abs_corr: F,
    /// Itemset attaining the max (None when the residual is orthogonal to all).
    pub argmax: Option<Itemset>,
    pub stats: SearchStats,
}

/// Certifies a solution against the entire feature space: the dual point is
/// the residual rescaled into feasibility via a pruned tree search over all
/// itemsets of size ≤ r.
pub fn certify_gap<F: Scalar>(
    solution: &SparseSolution<F>,
    z: &CovariateMatrix<F>,
    y: &[F],
    r: usize,
) -> GapCertificate<F> {
    let lambda = solution.lambda;
    let mut residual = y.to_vec();
    let mut active: Vec<(SparseFeature<F>, F)> = Vec::with_capacity(solution.len());
    for (itemset, coef) in solution.iter() {
        let feat = feature_vector(itemset, z);
        for (i, x) in feat.column.iter() {
            residual[i as usize] -= x * coef;
        }
        active.push((feat, coef));
    }

    let v: Vec<F> = residual.iter().map(|r| *r / lambda).collect();
    let search = tree_max_abs_inner(z, &v, r, &HashSet::new());

    let mut corr_xb = F::zero();
    let mut l1 = F::zero();
    for (feat, coef) in &active {
        corr_xb += feat.dot_dense(&residual) * *coef;
        l1 += coef.abs();
    }
    let gap = gap_from_parts(norm_sq(&residual), l1, corr_xb, lambda, search.value);
    let primal = F::c(0.5) * norm_sq(&residual) + lambda * l1;
    GapCertificate {
        gap,
        primal,
        rel_gap: relative(gap, primal),
        max_abs_corr: search.value,
        argmax: search.itemset,
        stats: search.stats,
    }
}

/// Absolute full-space duality gap P(β) − D(θ) of a solution.
pub fn duality_gap<F: Scalar>(
    solution: &SparseSolution<F>,
    z: &CovariateMatrix<F>,
    y: &[F],
    r: usize,
) -> F {
    certify_gap(solution, z, y, r).gap
}
