//! The λ-path driver: screening, warm-started solving and full-space
//! certification chained along a decreasing regularization schedule.

use std::time::Instant;

use crate::data::{CovariateMatrix, ProblemConfig};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::screening::{build_context, build_superset};
use crate::solver::{cd_solve, certify_gap, CdOptions, SparseSolution};
use crate::tree::{feature_vector, tree_max_abs_inner, Itemset, SearchStats, SparseFeature};

/// Per-step diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepMetrics {
    /// Tree nodes materialized during this step (screening traversal plus
    /// every full-space certification search).
    pub traversed_nodes: u64,
    /// Subtrees cut by the screening traversal (bound or empty-feature).
    pub pruned_subtrees: u64,
    /// Itemsets contained in those subtrees, counted combinatorially; the
    /// pruning-rate numerator (denominator: total itemset count D).
    pub pruned_equiv: u64,
    /// Features eliminated individually by the per-feature screen.
    pub leaf_screened: u64,
    pub superset_size: usize,
    /// Active features per interaction order 1..=r.
    pub active_count_by_order: Vec<usize>,
    pub solver_sweeps: usize,
    /// Coordinate-descent invocations (IB re-solves; 1 + corrections for SFP).
    pub lasso_solves: u32,
    /// Certified full-space relative duality gap.
    pub gap: f64,
    pub wall_ms: f64,
    /// Times certification surfaced a violating feature outside the superset.
    pub screening_incidents: u32,
}

/// One step of the regularization path.
#[derive(Debug, Clone)]
pub struct PathStep<F> {
    pub lambda: F,
    pub solution: SparseSolution<F>,
    /// The handed-off superset (empty at step 0; the working set for IB).
    pub superset: Vec<Itemset>,
    pub metrics: StepMetrics,
}

/// A computed regularization path.
#[derive(Debug, Clone)]
pub struct PathResult<F> {
    pub lambda_max: F,
    /// Itemset attaining λ_max.
    pub lambda_max_itemset: Itemset,
    pub steps: Vec<PathStep<F>>,
}

impl<F: Scalar> PathResult<F> {
    /// Fraction of the feature space covered by pruned subtrees, averaged
    /// over steps t ≥ 1.
    pub fn mean_pruning_rate(&self, d: usize, r: usize) -> f64 {
        let total = crate::tree::total_itemsets(d, r) as f64;
        let rates: Vec<f64> = self
            .steps
            .iter()
            .skip(1)
            .map(|s| s.metrics.pruned_equiv as f64 / total)
            .collect();
        if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        }
    }
}

/// λ₀ = λ_max, λ_t = (1 − decay/√t)·λ_{t−1}, stopping before the first value
/// with λ_t/λ_max < min_ratio.
pub fn lambda_schedule<F: Scalar>(lambda_max: F, decay: F, min_ratio: F) -> Vec<F> {
    assert!(decay > F::zero() && decay < F::one());
    assert!(min_ratio > F::zero() && min_ratio < F::one());
    let mut out = vec![lambda_max];
    let mut lambda = lambda_max;
    let mut t = 1usize;
    loop {
        let next = (F::one() - decay / F::from_usize(t).unwrap().sqrt()) * lambda;
        if next / lambda_max < min_ratio {
            return out;
        }
        out.push(next);
        lambda = next;
        t += 1;
    }
}

/// λ_max = max_j |x_jᵀ y| over all itemsets of size ≤ r, found by pruned
/// tree search, with its argmax itemset.
pub fn compute_lambda_max<F: Scalar>(
    z: &CovariateMatrix<F>,
    y: &[F],
    r: usize,
) -> Result<(F, Itemset, SearchStats)> {
    let search = tree_max_abs_inner(z, y, r, &Default::default());
    match search.itemset {
        Some(itemset) => Ok((search.value, itemset, search.stats)),
        None => Err(Error::LambdaMaxUndefined),
    }
}

/// Certification retries before declaring a step non-convergent.
const MAX_CERT_ROUNDS: usize = 25;

/// Runs Algorithm-1-style path computation: per step, screen with the
/// previous solution, solve the reduced problem warm-started, then certify
/// the full feature space. If certification ever finds a violating feature
/// outside the superset (it never should), the feature is added, the step is
/// re-solved, and the incident is counted rather than silently absorbed.
pub fn run_path<F: Scalar>(
    config: &ProblemConfig<F>,
    z: &CovariateMatrix<F>,
    y: &[F],
) -> Result<PathResult<F>> {
    config.validate()?;
    assert_eq!(y.len(), z.n());

    let (lambda_max, lambda_max_itemset, lm_stats) = compute_lambda_max(z, y, config.r)?;
    let schedule = lambda_schedule(lambda_max, config.lambda_decay, config.lambda_min_ratio);

    let mut steps: Vec<PathStep<F>> = Vec::with_capacity(schedule.len());
    steps.push(PathStep {
        lambda: lambda_max,
        solution: SparseSolution::empty(lambda_max),
        superset: Vec::new(),
        metrics: StepMetrics {
            traversed_nodes: lm_stats.visited,
            active_count_by_order: vec![0; config.r],
            ..Default::default()
        },
    });

    for (t, &lambda) in schedule.iter().enumerate().skip(1) {
        let start = Instant::now();
        let prev = &steps[t - 1];
        let ctx = build_context(&prev.solution, prev.lambda, lambda, z, y, config)?;
        let superset = build_superset(&ctx, z, config);

        let mut metrics = StepMetrics {
            traversed_nodes: superset.stats.traversed,
            pruned_subtrees: superset.stats.pruned_subtrees,
            pruned_equiv: superset.stats.pruned_equiv,
            leaf_screened: superset.stats.leaf_screened,
            superset_size: superset.len(),
            ..Default::default()
        };

        let mut features = superset.into_features();
        let warm = prev.solution.clone();
        let mut tol = config.tol;
        let mut solution;

        let mut rounds = 0usize;
        loop {
            rounds += 1;
            let mut opts = CdOptions::new(tol);
            opts.max_sweeps = config.max_sweeps;
            let outcome = cd_solve(&features, y, lambda, Some(&warm), &opts).map_err(|nc| {
                Error::SolverNonConvergence {
                    step: t,
                    lambda: lambda.f64(),
                    sweeps: nc.sweeps,
                    rel_gap: nc.rel_gap.f64(),
                }
            })?;
            metrics.solver_sweeps += outcome.sweeps;
            metrics.lasso_solves += 1;
            solution = outcome.solution;

            let cert = certify_gap(&solution, z, y, config.r);
            metrics.traversed_nodes += cert.stats.visited;
            let ten_tol = F::c(10.0) * config.tol;
            if cert.rel_gap <= config.tol && cert.max_abs_corr <= F::one() + ten_tol {
                solution.set_gap(cert.rel_gap);
                metrics.gap = cert.rel_gap.f64();
                break;
            }
            if rounds >= MAX_CERT_ROUNDS {
                return Err(Error::SolverNonConvergence {
                    step: t,
                    lambda: lambda.f64(),
                    sweeps: metrics.solver_sweeps,
                    rel_gap: cert.rel_gap.f64(),
                });
            }
            // A feature outside the superset violates dual feasibility:
            // screening should have kept it. Add it and re-solve loudly.
            if cert.max_abs_corr > F::one() {
                if let Some(violator) = cert.argmax {
                    let missing = features
                        .binary_search_by(|f| f.itemset.cmp(&violator))
                        .is_err();
                    if missing {
                        metrics.screening_incidents += 1;
                        let feat = feature_vector(&violator, z);
                        let pos = features
                            .binary_search_by(|f: &SparseFeature<F>| f.itemset.cmp(&feat.itemset))
                            .unwrap_err();
                        features.insert(pos, feat);
                        continue;
                    }
                }
            }
            // Certified max came in under the reduced certificate: the solve
            // itself needs to be tighter.
            tol = tol * F::c(0.25);
        }

        metrics.active_count_by_order = solution.active_by_order(config.r);
        metrics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        steps.push(PathStep {
            lambda,
            solution,
            superset: steps_superset(&features),
            metrics,
        });
    }

    Ok(PathResult { lambda_max, lambda_max_itemset, steps })
}

fn steps_superset<F: Scalar>(features: &[SparseFeature<F>]) -> Vec<Itemset> {
    features.iter().map(|f| f.itemset.clone()).collect()
}
