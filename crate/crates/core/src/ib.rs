//! Itemset-boosting (IB) working-set baseline: repeatedly solve the reduced
//! LASSO on the working set, find the feature that most violates dual
//! feasibility by tree search, add it, and repeat until no violator remains.

use std::collections::HashSet;
use std::time::Instant;

use crate::data::{CovariateMatrix, ProblemConfig};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::path::{compute_lambda_max, lambda_schedule, PathResult, PathStep, StepMetrics};
use crate::solver::{cd_solve, certify_gap, CdOptions, SparseSolution};
use crate::tree::{feature_vector, tree_max_abs_inner, Itemset, SparseFeature};

/// The features currently in the reduced problem; grows monotonically.
#[derive(Debug, Clone, Default)]
pub struct WorkingSet {
    set: HashSet<Itemset>,
    /// Insertion log across the whole run.
    add_history: Vec<Itemset>,
}

impl WorkingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, itemset: &Itemset) -> bool {
        self.set.contains(itemset)
    }

    pub fn add_history(&self) -> &[Itemset] {
        &self.add_history
    }

    fn insert(&mut self, itemset: Itemset) -> bool {
        if self.set.insert(itemset.clone()) {
            self.add_history.push(itemset);
            true
        } else {
            false
        }
    }
}

/// Per-call diagnostics for one IB solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct IbMetrics {
    /// Reduced-LASSO solves (≥ 1 + features added).
    pub lasso_solves: u32,
    /// Tree searches, including the final full certification.
    pub tree_searches: u32,
    /// Nodes materialized across those searches.
    pub traversed_nodes: u64,
    pub solver_sweeps: usize,
    pub features_added: u32,
}

/// Solves one λ by working-set iteration, warm-started from `warm`. Features
/// are added one at a time: the most violating itemset found by tree search
/// outside the working set. Terminates when no remaining feature violates
/// dual feasibility beyond 1 + 10·tol, then certifies the full space.
pub fn ib_solve<F: Scalar>(
    z: &CovariateMatrix<F>,
    y: &[F],
    lambda: F,
    warm: (WorkingSet, SparseSolution<F>),
    r: usize,
    tol: F,
) -> Result<(WorkingSet, SparseSolution<F>, IbMetrics)> {
    ib_solve_with(z, y, lambda, warm, r, &CdOptions::new(tol))
}

/// [`ib_solve`] with explicit solver options (sweep cap etc.).
pub fn ib_solve_with<F: Scalar>(
    z: &CovariateMatrix<F>,
    y: &[F],
    lambda: F,
    warm: (WorkingSet, SparseSolution<F>),
    r: usize,
    opts: &CdOptions<F>,
) -> Result<(WorkingSet, SparseSolution<F>, IbMetrics)> {
    let (mut ws, warm_solution) = warm;
    let mut metrics = IbMetrics::default();
    let mut features: Vec<SparseFeature<F>> = {
        let mut f: Vec<_> = ws.set.iter().map(|its| feature_vector(its, z)).collect();
        f.sort_by(|a, b| a.itemset.cmp(&b.itemset));
        f.retain(|f| !f.is_zero());
        f
    };

    let violation_cut = F::one() + opts.tol * F::c(10.0);
    let mut solution;
    loop {
        let outcome = cd_solve(&features, y, lambda, Some(&warm_solution), opts)
            .map_err(|nc| Error::SolverNonConvergence {
                step: 0,
                lambda: lambda.f64(),
                sweeps: nc.sweeps,
                rel_gap: nc.rel_gap.f64(),
            })?;
        metrics.lasso_solves += 1;
        metrics.solver_sweeps += outcome.sweeps;
        solution = outcome.solution;

        let v: Vec<F> = outcome.residual.iter().map(|x| *x / lambda).collect();
        let search = tree_max_abs_inner(z, &v, r, &ws.set);
        metrics.tree_searches += 1;
        metrics.traversed_nodes += search.stats.visited;

        match search.itemset {
            Some(violator) if search.value > violation_cut => {
                let feat = feature_vector(&violator, z);
                debug_assert!(!feat.is_zero());
                if ws.insert(violator) {
                    metrics.features_added += 1;
                    let pos = features
                        .binary_search_by(|f| f.itemset.cmp(&feat.itemset))
                        .unwrap_err();
                    features.insert(pos, feat);
                } else {
                    // excluded sets never return members; defensive stop
                    break;
                }
            }
            _ => break,
        }
    }

    // Full-space certificate (working set included) for the recorded gap.
    let cert = certify_gap(&solution, z, y, r);
    metrics.tree_searches += 1;
    metrics.traversed_nodes += cert.stats.visited;
    solution.set_gap(cert.rel_gap);
    Ok((ws, solution, metrics))
}

/// Runs the λ path with the IB engine: same schedule as the screening path;
/// the working set and solution persist across steps.
pub fn ib_run_path<F: Scalar>(
    config: &ProblemConfig<F>,
    z: &CovariateMatrix<F>,
    y: &[F],
) -> Result<PathResult<F>> {
    config.validate()?;
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

    let mut ws = WorkingSet::new();
    for (t, &lambda) in schedule.iter().enumerate().skip(1) {
        let start = Instant::now();
        let warm_solution = steps[t - 1].solution.clone();
        let mut opts = CdOptions::new(config.tol);
        opts.max_sweeps = config.max_sweeps;
        let (next_ws, solution, ib) = ib_solve_with(z, y, lambda, (ws, warm_solution), config.r, &opts)
            .map_err(|e| match e {
                Error::SolverNonConvergence { lambda, sweeps, rel_gap, .. } => {
                    Error::SolverNonConvergence { step: t, lambda, sweeps, rel_gap }
                }
                other => other,
            })?;
        ws = next_ws;

        let mut superset: Vec<Itemset> = ws.set.iter().cloned().collect();
        superset.sort();
        let metrics = StepMetrics {
            traversed_nodes: ib.traversed_nodes,
            superset_size: ws.len(),
            active_count_by_order: solution.active_by_order(config.r),
            solver_sweeps: ib.solver_sweeps,
            lasso_solves: ib.lasso_solves,
            gap: solution.gap().f64(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            ..Default::default()
        };
        steps.push(PathStep { lambda, solution, superset, metrics });
    }

    Ok(PathResult { lambda_max, lambda_max_itemset, steps })
}
