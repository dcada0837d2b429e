//! Randomized validation battery: screening safety, bound domination, path
//! equivalence and λ_max correctness on desk-scale synthetic instances, all
//! checked against the brute-force oracle.

use serde::Serialize;

use crate::data::{synth_generate, CVariant, CovariateMatrix, ProblemConfig, ScreenMode};
use crate::error::Result;
use crate::oracle::{
    oracle_path, validate_bound_domination, validate_equivalence, validate_safety,
    DominationReport, EquivalenceReport, SafetyReport,
};
use crate::path::{compute_lambda_max, run_path};
use crate::screening::build_context;
use crate::solver::{cd_solve, CdOptions};

/// Battery parameters.
#[derive(Debug, Clone)]
pub struct BatteryConfig {
    /// Number of random instances; seeds are 0..seeds.
    pub seeds: u64,
    pub max_n: usize,
    pub max_d: usize,
    pub r: usize,
    /// Entry sparsities cycled across instances.
    pub etas: Vec<f64>,
    pub sigma: f64,
    /// Path solve tolerance (the oracle uses tol/10).
    pub tol: f64,
    pub lambda_min_ratio: f64,
    /// Coefficient agreement tolerance for equivalence checks.
    pub coef_tol: f64,
    /// Also screen with the Theorem c-variant and record its violation
    /// counts (roughly doubles the per-instance cost).
    pub compare_variants: bool,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            seeds: 20,
            max_n: 30,
            max_d: 8,
            r: 3,
            etas: vec![0.5, 0.8, 0.95],
            sigma: 0.3,
            tol: 1e-9,
            lambda_min_ratio: 0.01,
            coef_tol: 1e-6,
            compare_variants: true,
        }
    }
}

/// λ_max mismatch between tree search and dense enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaMaxViolation {
    pub seed: u64,
    pub tree_value: f64,
    pub dense_value: f64,
    pub tree_itemset: Vec<u32>,
    pub dense_itemset: Vec<u32>,
}

/// Aggregate battery outcome. `ok()` covers the checks run with the default
/// (Proposition) screening variant; the Theorem-variant counters are
/// informational, recorded so the two c-forms can be compared.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BatteryReport {
    pub instances: usize,
    pub safety: SafetyReport,
    pub domination: DominationReport,
    pub equivalence: EquivalenceReport,
    pub lambda_max: Vec<LambdaMaxViolation>,
    pub contexts_checked: usize,
    pub contexts_at_lambda_max: usize,
    /// Safety violations when screening with the Theorem c-variant.
    pub theorem_variant_safety_violations: usize,
    /// Domination violations for the Theorem c-variant.
    pub theorem_variant_domination_violations: usize,
    pub warnings: Vec<String>,
}

impl BatteryReport {
    pub fn ok(&self) -> bool {
        self.safety.is_empty()
            && self.domination.is_empty()
            && self.equivalence.is_empty()
            && self.lambda_max.is_empty()
    }
}

fn instance_dims(cfg: &BatteryConfig, seed: u64) -> (usize, usize, f64) {
    // Deterministic spread over sizes and sparsities.
    let n = 10 + (seed as usize * 7) % cfg.max_n.saturating_sub(9).max(1);
    let d = 4 + (seed as usize * 3) % cfg.max_d.saturating_sub(3).max(1);
    let eta = cfg.etas[(seed as usize) % cfg.etas.len()];
    (n.min(cfg.max_n), d.min(cfg.max_d), eta)
}

/// Runs the full battery. Instances whose response is so small that
/// λ_max = 0 (all-zero correlations) are skipped with a warning.
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryReport> {
    let mut report = BatteryReport::default();
    if cfg.seeds == 0 {
        report.warnings.push("seeds = 0: battery vacuously passes".into());
        return Ok(report);
    }

    for seed in 0..cfg.seeds {
        let (n, d, eta) = instance_dims(cfg, seed);
        let (z, y) = synth_generate::<f64>(n, d, eta, cfg.sigma, seed)?;
        if compute_lambda_max(&z, &y, cfg.r).is_err() {
            report.warnings.push(format!("seed {seed}: lambda_max undefined, skipped"));
            continue;
        }
        report.instances += 1;

        let mut pcfg = ProblemConfig::<f64>::new(cfg.r);
        pcfg.tol = cfg.tol;
        pcfg.lambda_min_ratio = cfg.lambda_min_ratio;
        pcfg.max_sweeps = Some(500_000);

        // Oracle path (full enumeration) and SFP path.
        let ora = oracle_path(&z, &y, &pcfg)?;
        let sfp = run_path(&pcfg, &z, &y)?;

        // lambda_max: tree vs dense.
        check_lambda_max(seed, &z, &y, cfg.r, &ora, &sfp, &mut report);

        // Path equivalence and screening safety.
        let eq = validate_equivalence(&sfp, &ora, cfg.coef_tol);
        report.equivalence.violations.extend(eq.violations);
        let safety = validate_safety(&sfp, &ora);
        report.safety.violations.extend(safety.violations);

        // cd_solve just above lambda_max over the full enumeration is empty.
        check_empty_at_lambda_max(&z, &y, cfg.r, sfp.lambda_max, &mut report);

        // Bound domination on a lambda_max context and a mid-path context,
        // for both c-variants.
        collect_domination(&sfp, &z, &y, &pcfg, cfg.compare_variants, &mut report)?;

        // Theorem-variant screening safety (informational).
        if cfg.compare_variants {
            let mut tcfg = pcfg.clone();
            tcfg.c_variant = CVariant::Theorem;
            let sfp_theorem = run_path(&tcfg, &z, &y)?;
            report.theorem_variant_safety_violations +=
                validate_safety(&sfp_theorem, &ora).violations.len();
        }
    }
    Ok(report)
}

fn check_lambda_max(
    seed: u64,
    z: &CovariateMatrix<f64>,
    y: &[f64],
    r: usize,
    ora: &crate::path::PathResult<f64>,
    sfp: &crate::path::PathResult<f64>,
    report: &mut BatteryReport,
) {
    let same_itemset = sfp.lambda_max_itemset == ora.lambda_max_itemset;
    let close = (sfp.lambda_max - ora.lambda_max).abs() <= 1e-12;
    if !(same_itemset && close) {
        report.lambda_max.push(LambdaMaxViolation {
            seed,
            tree_value: sfp.lambda_max,
            dense_value: ora.lambda_max,
            tree_itemset: sfp.lambda_max_itemset.to_one_based(),
            dense_itemset: ora.lambda_max_itemset.to_one_based(),
        });
    }
    let _ = (z, y, r);
}

fn check_empty_at_lambda_max(
    z: &CovariateMatrix<f64>,
    y: &[f64],
    r: usize,
    lambda_max: f64,
    report: &mut BatteryReport,
) {
    let all = crate::screening::enumerate_nonzero(z, r);
    let lambda = lambda_max * (1.0 + 1e-9);
    match cd_solve(all.features(), y, lambda, None, &CdOptions::new(1e-12)) {
        Ok(out) => {
            if !out.solution.is_empty() {
                report
                    .warnings
                    .push(format!("nonempty solution at lambda_max*(1+1e-9): {} entries", out.solution.len()));
                report.lambda_max.push(LambdaMaxViolation {
                    seed: u64::MAX,
                    tree_value: lambda,
                    dense_value: lambda_max,
                    tree_itemset: vec![],
                    dense_itemset: vec![],
                });
            }
        }
        Err(e) => report.warnings.push(format!("solver stalled above lambda_max: {e}")),
    }
}

fn collect_domination(
    sfp: &crate::path::PathResult<f64>,
    z: &CovariateMatrix<f64>,
    y: &[f64],
    pcfg: &ProblemConfig<f64>,
    compare_variants: bool,
    report: &mut BatteryReport,
) -> Result<()> {
    // Step 1 context has a = 0; the first step with a nonempty previous
    // solution exercises the projected bounds.
    let mut picks: Vec<usize> = vec![1];
    if let Some(t) = (2..sfp.steps.len()).find(|&t| !sfp.steps[t - 1].solution.is_empty()) {
        picks.push(t);
    }
    for t in picks {
        if t >= sfp.steps.len() {
            continue;
        }
        let prev = &sfp.steps[t - 1];
        let ctx = build_context(&prev.solution, prev.lambda, sfp.steps[t].lambda, z, y, pcfg)?;
        report.contexts_checked += 1;
        if ctx.at_lambda_max() {
            report.contexts_at_lambda_max += 1;
        }
        let dom = validate_bound_domination(&ctx, z, pcfg.r)?;
        report.domination.violations.extend(dom.violations);

        if compare_variants {
            let mut tcfg = pcfg.clone();
            tcfg.c_variant = CVariant::Theorem;
            let tctx = build_context(&prev.solution, prev.lambda, sfp.steps[t].lambda, z, y, &tcfg)?;
            report.theorem_variant_domination_violations +=
                validate_bound_domination(&tctx, z, pcfg.r)?.violations.len();
        }
    }
    Ok(())
}

/// Pruning-rate comparison used by the sparsity-direction check: mean pruning
/// rate over ≥ `seeds` synthetic instances at the given sparsity.
pub fn mean_pruning_rate_at(
    n: usize,
    d: usize,
    r: usize,
    eta: f64,
    sigma: f64,
    seeds: u64,
    tol: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut count = 0usize;
    for seed in 0..seeds {
        let (z, y) = synth_generate::<f64>(n, d, eta, sigma, 1000 + seed)?;
        let mut cfg = ProblemConfig::<f64>::new(r);
        cfg.tol = tol;
        let path = run_path(&cfg, &z, &y)?;
        acc += path.mean_pruning_rate(d, r);
        count += 1;
    }
    Ok(acc / count as f64)
}

/// Full-enumeration active supersets for `ScreenMode::None` equivalence runs
/// double as a vacuous safety fixture in tests.
pub fn none_mode_config(r: usize, tol: f64) -> ProblemConfig<f64> {
    let mut cfg = ProblemConfig::new(r);
    cfg.tol = tol;
    cfg.screen_mode = ScreenMode::None;
    cfg
}
