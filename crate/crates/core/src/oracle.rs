//! Brute-force ground truth for desk-scale instances: explicit design-matrix
//! expansion, an independent dense reference solver, and the validation
//! battery used to check screening safety and bound domination.
//!
//! The reference solver shares nothing with [`crate::solver`] beyond the
//! scalar soft-threshold kernel, and the expansion builds columns by dense
//! row products rather than sparse intersection, so agreement between the
//! two routes is evidence, not tautology.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::data::{CovariateMatrix, ProblemConfig};
use crate::error::{Error, Result};
use crate::num::{norm_sq, Scalar};
use crate::path::{PathResult, PathStep, StepMetrics};
use crate::screening::{feature_screen_bounds, node_prune_bounds, ScreeningContext};
use crate::solver::{soft_threshold, SparseSolution};
use crate::tree::{total_itemsets, Itemset};

/// Default cap on the number of enumerated itemsets.
pub const DEFAULT_ENUMERATION_CAP: u64 = 200_000;

/// Coefficients below this magnitude are treated as inactive when comparing
/// active sets.
pub const ACTIVE_THRESHOLD: f64 = 1e-8;

/// The explicit n×D design matrix: every itemset of size ≤ r with its dense
/// product column, in lexicographic order.
#[derive(Debug, Clone)]
pub struct ExpandedDesign<F> {
    pub n: usize,
    pub columns: Vec<(Itemset, Vec<F>)>,
}

impl<F: Scalar> ExpandedDesign<F> {
    pub fn d_total(&self) -> usize {
        self.columns.len()
    }
}

/// Enumerates the full design, refusing above `cap` itemsets.
pub fn enumerate_all<F: Scalar>(
    z: &CovariateMatrix<F>,
    r: usize,
    cap: u64,
) -> Result<ExpandedDesign<F>> {
    let d_total = total_itemsets(z.d(), r);
    if d_total > cap {
        return Err(Error::CapExceeded { d_total, cap });
    }
    // Dense rows of Z: the independent route to feature values.
    let mut rows = vec![vec![F::zero(); z.d()]; z.n()];
    for j in 0..z.d() {
        for (i, v) in z.column(j).iter() {
            rows[i as usize][j] = v;
        }
    }

    let mut columns = Vec::with_capacity(d_total as usize);
    let mut stack: Vec<u32> = Vec::new();
    fn recurse<F: Scalar>(
        rows: &[Vec<F>],
        d: usize,
        r: usize,
        stack: &mut Vec<u32>,
        columns: &mut Vec<(Itemset, Vec<F>)>,
    ) {
        let start = stack.last().map_or(0, |m| m + 1);
        for k in start..d as u32 {
            stack.push(k);
            let column: Vec<F> = rows
                .iter()
                .map(|row| {
                    let mut prod = F::one();
                    for &j in stack.iter() {
                        prod = prod * row[j as usize];
                    }
                    prod
                })
                .collect();
            columns.push((Itemset::new(stack.clone()), column));
            if stack.len() < r {
                recurse(rows, d, r, stack, columns);
            }
            stack.pop();
        }
    }
    recurse(&rows, z.d(), r, &mut stack, &mut columns);
    debug_assert_eq!(columns.len() as u64, d_total);
    Ok(ExpandedDesign { n: z.n(), columns })
}

/// Dense cyclic coordinate descent over the full expansion, run until the
/// duality gap (certified by a dense scan over every column) falls below
/// `tol`. Independent of the sparse solver by construction.
fn dense_cd<F: Scalar>(
    design: &ExpandedDesign<F>,
    y: &[F],
    lambda: F,
    beta: &mut [F],
    tol: F,
    max_sweeps: usize,
) -> Result<(F, usize)> {
    let m = design.columns.len();
    let norms_sq: Vec<F> = design.columns.iter().map(|(_, col)| norm_sq(col)).collect();
    let mut residual: Vec<F> = y.to_vec();
    for (j, (_, col)) in design.columns.iter().enumerate() {
        if beta[j] != F::zero() {
            for (ri, &x) in residual.iter_mut().zip(col) {
                *ri -= x * beta[j];
            }
        }
    }

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        for j in 0..m {
            if norms_sq[j] == F::zero() {
                continue; // zero column: coefficient pinned at zero
            }
            let col = &design.columns[j].1;
            let mut corr = F::zero();
            for (ri, &x) in residual.iter().zip(col) {
                corr += *ri * x;
            }
            let next = soft_threshold(corr + norms_sq[j] * beta[j], lambda) / norms_sq[j];
            let delta = next - beta[j];
            if delta != F::zero() {
                for (ri, &x) in residual.iter_mut().zip(col) {
                    *ri -= x * delta;
                }
                beta[j] = next;
            }
        }

        // Dense full-space certificate: duality gap plus KKT residuals.
        let mut max_corr = F::zero();
        let mut corr_xb = F::zero();
        let mut kkt = F::zero();
        for (j, (_, col)) in design.columns.iter().enumerate() {
            let mut corr = F::zero();
            for (ri, &x) in residual.iter().zip(col) {
                corr += *ri * x;
            }
            max_corr = max_corr.max(corr.abs());
            corr_xb += corr * beta[j];
            if beta[j] != F::zero() {
                kkt = kkt.max((corr - lambda * beta[j].signum()).abs());
            }
        }
        let m_bar = (max_corr / lambda).max(F::one());
        let shrink = F::one() - F::one() / m_bar;
        let l1: F = beta.iter().map(|b| b.abs()).sum();
        let gap = (F::c(0.5) * norm_sq(&residual) * shrink * shrink + lambda * l1
            - corr_xb / m_bar)
            .max(F::zero());
        let primal = F::c(0.5) * norm_sq(&residual) + lambda * l1;
        let rel = if primal > F::zero() { gap / primal } else { gap };
        let ten_tol = F::c(10.0) * tol;
        if rel <= tol && max_corr / lambda <= F::one() + ten_tol && kkt / lambda <= ten_tol {
            return Ok((rel, sweeps));
        }
        if sweeps >= max_sweeps {
            return Err(Error::SolverNonConvergence {
                step: 0,
                lambda: lambda.f64(),
                sweeps,
                rel_gap: rel.f64(),
            });
        }
    }
}

/// Reference path over the explicit expansion: same λ schedule as
/// [`crate::path::run_path`], solved to a 10× tighter gap.
pub fn oracle_path<F: Scalar>(
    z: &CovariateMatrix<F>,
    y: &[F],
    config: &ProblemConfig<F>,
) -> Result<PathResult<F>> {
    oracle_path_capped(z, y, config, DEFAULT_ENUMERATION_CAP)
}

pub fn oracle_path_capped<F: Scalar>(
    z: &CovariateMatrix<F>,
    y: &[F],
    config: &ProblemConfig<F>,
    cap: u64,
) -> Result<PathResult<F>> {
    config.validate()?;
    let design = enumerate_all(z, config.r, cap)?;

    // Dense lambda_max.
    let mut lambda_max = F::zero();
    let mut argmax: Option<Itemset> = None;
    for (its, col) in &design.columns {
        let corr = col.iter().zip(y).map(|(&x, &yi)| x * yi).sum::<F>().abs();
        if corr > lambda_max {
            lambda_max = corr;
            argmax = Some(its.clone());
        }
    }
    let lambda_max_itemset = argmax.ok_or(Error::LambdaMaxUndefined)?;

    let schedule = crate::path::lambda_schedule(lambda_max, config.lambda_decay, config.lambda_min_ratio);
    let tol = config.tol / F::c(10.0);
    let mut beta = vec![F::zero(); design.d_total()];

    let mut steps = Vec::with_capacity(schedule.len());
    steps.push(PathStep {
        lambda: lambda_max,
        solution: SparseSolution::empty(lambda_max),
        superset: Vec::new(),
        metrics: StepMetrics { active_count_by_order: vec![0; config.r], ..Default::default() },
    });
    for &lambda in schedule.iter().skip(1) {
        let default_cap = 200 * design.d_total().max(1);
        let cap = config.max_sweeps.map_or(default_cap, |c| c.max(default_cap));
        let (rel_gap, sweeps) = dense_cd(&design, y, lambda, &mut beta, tol, cap)?;
        let mut coefficients = BTreeMap::new();
        for (j, (its, _)) in design.columns.iter().enumerate() {
            if beta[j] != F::zero() {
                coefficients.insert(its.clone(), beta[j]);
            }
        }
        let solution = SparseSolution::from_parts(lambda, rel_gap, coefficients);
        let metrics = StepMetrics {
            active_count_by_order: solution.active_by_order(config.r),
            solver_sweeps: sweeps,
            gap: rel_gap.f64(),
            ..Default::default()
        };
        steps.push(PathStep { lambda, solution, superset: Vec::new(), metrics });
    }

    Ok(PathResult { lambda_max, lambda_max_itemset, steps })
}

/// A feature the oracle says is active but the screening superset dropped.
#[derive(Debug, Clone, Serialize)]
pub struct SafetyViolation {
    pub step: usize,
    pub lambda: f64,
    /// 1-based covariate indices.
    pub itemset: Vec<u32>,
    pub oracle_coef: f64,
}

/// Per-path screening-safety report; empty = pass.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SafetyReport {
    pub violations: Vec<SafetyViolation>,
}

impl SafetyReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, step by step, that every oracle-active itemset (|β| above
/// [`ACTIVE_THRESHOLD`]) appears in the screening superset the solver was
/// handed. Step 0 and `ScreenMode::None` paths are vacuously safe.
pub fn validate_safety<F: Scalar>(
    sfp_path: &PathResult<F>,
    oracle_path: &PathResult<F>,
) -> SafetyReport {
    let mut report = SafetyReport::default();
    for (t, (sfp, ora)) in sfp_path.steps.iter().zip(&oracle_path.steps).enumerate().skip(1) {
        let superset: std::collections::BTreeSet<&Itemset> = sfp.superset.iter().collect();
        for (its, coef) in ora.solution.iter() {
            if coef.abs().f64() > ACTIVE_THRESHOLD && !superset.contains(its) {
                report.violations.push(SafetyViolation {
                    step: t,
                    lambda: ora.lambda.f64(),
                    itemset: its.to_one_based(),
                    oracle_coef: coef.f64(),
                });
            }
        }
    }
    report
}

/// A node whose pruning bound fails to dominate a descendant's screen bound.
#[derive(Debug, Clone, Serialize)]
pub struct DominationViolation {
    /// 1-based covariate indices.
    pub node: Vec<u32>,
    pub descendant: Vec<u32>,
    pub node_bound_plus: f64,
    pub node_bound_minus: f64,
    pub feature_bound_plus: f64,
    pub feature_bound_minus: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DominationReport {
    pub violations: Vec<DominationViolation>,
}

impl DominationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks U_j⁺ ≥ u_{j′}⁺ and U_j⁻ ≥ u_{j′}⁻ (slack 1e-12)
/// for every node j and every descendant j′ of size ≤ r.
pub fn validate_bound_domination<F: Scalar>(
    ctx: &ScreeningContext<F>,
    z: &CovariateMatrix<F>,
    r: usize,
) -> Result<DominationReport> {
    let design = enumerate_all(z, r, DEFAULT_ENUMERATION_CAP)?;
    let mut report = DominationReport::default();
    let slack = 1e-12_f64;

    // Screen bounds for every itemset, via the sparse feature route.
    let mut screen: BTreeMap<Itemset, (f64, f64)> = BTreeMap::new();
    for (its, _) in &design.columns {
        let feat = crate::tree::feature_vector(its, z);
        let (up, um) = feature_screen_bounds(ctx, &feat);
        screen.insert(its.clone(), (up.f64(), um.f64()));
    }

    for (its, _) in &design.columns {
        if its.order() >= r {
            continue;
        }
        let feat = crate::tree::feature_vector(its, z);
        if feat.is_zero() {
            continue; // descendants are zero features; vacuous
        }
        let (up, um) = node_prune_bounds(ctx, &feat);
        let (up, um) = (up.f64(), um.f64());
        for (desc, &(fp, fm)) in screen.range(its.clone()..) {
            if !is_descendant(its, desc) {
                continue;
            }
            if up < fp - slack || um < fm - slack {
                report.violations.push(DominationViolation {
                    node: its.to_one_based(),
                    descendant: desc.to_one_based(),
                    node_bound_plus: up,
                    node_bound_minus: um,
                    feature_bound_plus: fp,
                    feature_bound_minus: fm,
                });
            }
        }
    }
    Ok(report)
}

fn is_descendant(node: &Itemset, candidate: &Itemset) -> bool {
    candidate.order() > node.order()
        && candidate.indices()[..node.order()] == *node.indices()
}

/// One coefficient disagreement between two paths.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceViolation {
    pub step: usize,
    pub lambda: f64,
    pub itemset: Vec<u32>,
    pub lhs_coef: f64,
    pub rhs_coef: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EquivalenceReport {
    pub violations: Vec<EquivalenceViolation>,
}

impl EquivalenceReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares two paths step by step: coefficients within `coef_tol` and
/// identical active sets under [`ACTIVE_THRESHOLD`].
pub fn validate_equivalence<F: Scalar>(
    lhs: &PathResult<F>,
    rhs: &PathResult<F>,
    coef_tol: f64,
) -> EquivalenceReport {
    let mut report = EquivalenceReport::default();
    for (t, (a, b)) in lhs.steps.iter().zip(&rhs.steps).enumerate() {
        let keys: std::collections::BTreeSet<&Itemset> =
            a.solution.itemsets().chain(b.solution.itemsets()).collect();
        for its in keys {
            let ca = a.solution.get(its).f64();
            let cb = b.solution.get(its).f64();
            let diff_active = (ca.abs() > ACTIVE_THRESHOLD) != (cb.abs() > ACTIVE_THRESHOLD);
            if (ca - cb).abs() > coef_tol || diff_active {
                report.violations.push(EquivalenceViolation {
                    step: t,
                    lambda: a.lambda.f64(),
                    itemset: its.to_one_based(),
                    lhs_coef: ca,
                    rhs_coef: cb,
                });
            }
        }
    }
    if lhs.steps.len() != rhs.steps.len() {
        report.violations.push(EquivalenceViolation {
            step: lhs.steps.len().min(rhs.steps.len()),
            lambda: f64::NAN,
            itemset: vec![],
            lhs_coef: lhs.steps.len() as f64,
            rhs_coef: rhs.steps.len() as f64,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_generate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn enumeration_counts() {
        let z = CovariateMatrix::<f64>::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(enumerate_all(&z, 2, 1000).unwrap().d_total(), 3);

        let (z, _) = synth_generate::<f64>(5, 10, 0.5, 0.1, 1).unwrap();
        assert_eq!(enumerate_all(&z, 3, 1000).unwrap().d_total(), 175);

        let (z, _) = synth_generate::<f64>(5, 4, 0.5, 0.1, 1).unwrap();
        assert_eq!(enumerate_all(&z, 3, 1000).unwrap().d_total(), 14);
    }

    #[test]
    fn enumeration_cap_refuses() {
        let (z, _) = synth_generate::<f64>(5, 100, 0.5, 0.1, 1).unwrap();
        assert!(matches!(
            enumerate_all(&z, 3, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn expansion_matches_sparse_feature_route() {
        let (z, _) = synth_generate::<f64>(12, 6, 0.4, 0.1, 3).unwrap();
        let design = enumerate_all(&z, 3, 10_000).unwrap();
        for (its, col) in &design.columns {
            let feat = crate::tree::feature_vector(its, &z);
            assert_eq!(&feat.column.to_dense(z.n()), col, "itemset {its}");
        }
    }

    #[test]
    fn oracle_dual_feasible_at_optimum() {
        let (z, y) = synth_generate::<f64>(20, 5, 0.5, 0.5, 11).unwrap();
        let mut cfg = ProblemConfig::<f64>::new(2);
        cfg.lambda_min_ratio = 0.2;
        let path = oracle_path(&z, &y, &cfg).unwrap();
        assert!(path.steps[0].solution.is_empty());
        let design = enumerate_all(&z, 2, 1000).unwrap();
        for step in path.steps.iter().skip(1) {
            // theta* = (y - X beta*)/lambda must satisfy |x_j' theta| <= 1 + tol
            let mut residual: Vec<f64> = y.to_vec();
            for (its, coef) in step.solution.iter() {
                let feat = crate::tree::feature_vector(its, &z);
                for (i, x) in feat.column.iter() {
                    residual[i as usize] -= x * coef;
                }
            }
            for (_, col) in &design.columns {
                let corr: f64 = col.iter().zip(&residual).map(|(&x, &r)| x * r).sum();
                assert!(corr.abs() / step.lambda <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn dense_and_tree_max_agree() {
        let (z, y) = synth_generate::<f64>(15, 8, 0.6, 0.3, 5).unwrap();
        let design = enumerate_all(&z, 3, 10_000).unwrap();
        let mut best = 0.0f64;
        for (_, col) in &design.columns {
            let corr: f64 = col.iter().zip(y.as_slice()).map(|(&x, &yi)| x * yi).sum();
            best = best.max(corr.abs());
        }
        let tree = crate::tree::tree_max_abs_inner(&z, &y, 3, &Default::default());
        assert_abs_diff_eq!(tree.value, best, epsilon = 1e-12);
    }
}
