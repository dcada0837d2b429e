//! Acceptance suite: one test (and one printed pass/fail line) per criterion.
//! Criterion 8 (byte-level CLI determinism) lives in the CLI crate's
//! acceptance target; everything else runs here against the library.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.


use std::sync::OnceLock;
use std::time::Instant;

use treelasso::data::{synth_generate, ProblemConfig};
use treelasso::ib::ib_run_path;
use treelasso::oracle::validate_equivalence;
use treelasso::path::run_path;
use treelasso::screening::{build_context, build_superset};
use treelasso::solver::{cd_solve, certify_gap, CdOptions};
use treelasso::tree::{feature_vector, total_itemsets};
use treelasso::validation::{mean_pruning_rate_at, run_battery, BatteryConfig, BatteryReport};

struct SharedBattery {
    report: BatteryReport,
    elapsed_s: f64,
}

/// Criteria 1, 2, 3 and 4 share one randomized battery: ≥100 instances,
/// n ≤ 50, d ≤ 10, r ≤ 3, binary, η ∈ {0.5, 0.8, 0.95}.
fn battery() -> &'static SharedBattery {
    static CELL: OnceLock<SharedBattery> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = BatteryConfig {
            seeds: 112,
            max_n: 50,
            max_d: 10,
            r: 3,
            etas: vec![0.5, 0.8, 0.95],
            sigma: 0.3,
            tol: 1e-9,
            lambda_min_ratio: 0.01,
            coef_tol: 1e-6,
            compare_variants: false,
        };
        let start = Instant::now();
        let report = run_battery(&cfg).expect("battery runs");
        SharedBattery { report, elapsed_s: start.elapsed().as_secs_f64() }
    })
}

fn verdict(criterion: usize, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_oracle_path_equivalence() {
    let b = battery();
    let pass = b.report.instances >= 100 && b.report.equivalence.is_empty();
    verdict(
        1,
        pass,
        &format!(
            "SFP vs full-enumeration oracle paths agree (≤1e-6 coefs, active sets at 1e-8) on {} instances, {} disagreements, battery {:.1}s (< 120s: {})",
            b.report.instances,
            b.report.equivalence.violations.len(),
            b.elapsed_s,
            b.elapsed_s < 120.0,
        ),
    );
    assert!(b.elapsed_s < 120.0, "equivalence battery exceeded 2 minutes");
}

#[test]
fn criterion_2_screening_safety() {
    let b = battery();
    let pass = b.report.instances >= 100 && b.report.safety.is_empty();
    verdict(
        2,
        pass,
        &format!(
            "zero pruned-or-screened oracle-active features across {} instances ({} violations)",
            b.report.instances,
            b.report.safety.violations.len()
        ),
    );
}

#[test]
fn criterion_3_bound_domination() {
    let b = battery();
    let mixed = b.report.contexts_at_lambda_max >= 10
        && b.report.contexts_checked - b.report.contexts_at_lambda_max >= 10;
    let pass = b.report.contexts_checked >= 20 && mixed && b.report.domination.is_empty();
    verdict(
        3,
        pass,
        &format!(
            "node/descendant bound domination at 1e-12 slack on {} contexts ({} with a = 0, {} with a ≠ 0), {} violations",
            b.report.contexts_checked,
            b.report.contexts_at_lambda_max,
            b.report.contexts_checked - b.report.contexts_at_lambda_max,
            b.report.domination.violations.len()
        ),
    );
}

#[test]
fn criterion_4_lambda_max_correctness() {
    let b = battery();
    // The battery compares tree vs dense lambda_max (value 1e-12, same
    // itemset) and checks cd_solve at lambda_max·(1+1e-9) over the full
    // enumeration returns empty. Extend the count to d = 12 with a direct
    // sweep over extra instances.
    let mut extra_bad = 0usize;
    let mut extra = 0usize;
    for seed in 500..530u64 {
        let (z, y) = synth_generate::<f64>(30, 12, 0.7, 0.3, seed).unwrap();
        let Ok((value, itemset, _)) = treelasso::path::compute_lambda_max(&z, &y, 3) else {
            continue;
        };
        extra += 1;
        let design = treelasso::oracle::enumerate_all(&z, 3, 100_000).unwrap();
        let mut best = 0.0f64;
        let mut best_its = None;
        for (its, col) in &design.columns {
            let corr: f64 = col.iter().zip(y.as_slice()).map(|(&x, &yi)| x * yi).sum();
            if corr.abs() > best {
                best = corr.abs();
                best_its = Some(its.clone());
            }
        }
        if (value - best).abs() > 1e-12 || Some(itemset) != best_its {
            extra_bad += 1;
        }
    }
    let pass = b.report.instances + extra >= 100 && b.report.lambda_max.is_empty() && extra_bad == 0;
    verdict(
        4,
        pass,
        &format!(
            "tree λ_max equals brute force (value ≤1e-12, same argmax) on {} instances incl. d=12; empty solve just above λ_max verified; {} violations",
            b.report.instances + extra,
            b.report.lambda_max.len() + extra_bad
        ),
    );
}

#[test]
fn criterion_5_solver_certification() {
    // Default-tolerance paths: every step's full-space relative gap ≤ 1e-6,
    // KKT residuals within the stated bounds, and warm-start path equals a
    // cold-restart of each step within 1e-6.
    let tol = 1e-6f64;
    let mut steps_checked = 0usize;
    for seed in [3u64, 17, 42] {
        let (z, y) = synth_generate::<f64>(40, 9, 0.8, 0.3, seed).unwrap();
        let cfg = ProblemConfig::<f64>::new(3);
        let path = run_path(&cfg, &z, &y).unwrap();
        for (t, step) in path.steps.iter().enumerate() {
            let cert = certify_gap(&step.solution, &z, &y, cfg.r);
            assert!(
                cert.rel_gap <= tol,
                "step {t}: full-space relative gap {} > {tol}",
                cert.rel_gap
            );
            assert!(
                cert.max_abs_corr <= 1.0 + 10.0 * tol,
                "step {t}: |x'rho|/lambda = {} beyond 1 + 10·tol",
                cert.max_abs_corr
            );
            // Active-coordinate KKT residuals.
            let mut residual: Vec<f64> = y.to_vec();
            for (its, coef) in step.solution.iter() {
                let feat = feature_vector(its, &z);
                for (i, x) in feat.column.iter() {
                    residual[i as usize] -= x * coef;
                }
            }
            for (its, coef) in step.solution.iter() {
                let feat = feature_vector(its, &z);
                let corr = feat.dot_dense(&residual);
                let kkt = (corr - step.lambda * coef.signum()).abs();
                assert!(
                    kkt <= step.lambda * tol * 10.0,
                    "step {t}: active KKT residual {kkt} > lambda·tol·10"
                );
            }
            steps_checked += 1;
        }
    }

    // Warm-start invariance, checked where it is well-posed: the solve tight
    // enough that both runs sit within 1e-6 of an optimum, and per-coefficient
    // comparison only when no two active features share an identical column
    // (exact duplicates make the optimal split non-unique; the fit Xβ and the
    // objective are unique regardless and are always compared).
    let mut cold_checked = 0usize;
    let mut coef_checked = 0usize;
    for seed in [3u64, 17] {
        let (z, y) = synth_generate::<f64>(40, 9, 0.8, 0.3, seed).unwrap();
        let mut cfg = ProblemConfig::<f64>::new(3);
        cfg.tol = 1e-10;
        cfg.max_sweeps = Some(500_000);
        let path = run_path(&cfg, &z, &y).unwrap();
        for (t, step) in path.steps.iter().enumerate().skip(1) {
            if step.superset.is_empty() {
                continue;
            }
            let prev = &path.steps[t - 1];
            let ctx =
                build_context(&prev.solution, prev.lambda, step.lambda, &z, &y, &cfg).unwrap();
            let superset = build_superset(&ctx, &z, &cfg);
            let mut opts = CdOptions::new(cfg.tol);
            opts.max_sweeps = cfg.max_sweeps;
            let cold = cd_solve(superset.features(), &y, step.lambda, None, &opts).unwrap();

            let fit = |sol: &treelasso::SparseSolution64| -> (Vec<f64>, f64) {
                let mut xb = vec![0.0; z.n()];
                let mut l1 = 0.0;
                for (its, coef) in sol.iter() {
                    let feat = feature_vector(its, &z);
                    for (i, x) in feat.column.iter() {
                        xb[i as usize] += x * coef;
                    }
                    l1 += coef.abs();
                }
                let obj = 0.5
                    * y.iter().zip(&xb).map(|(yi, f)| (yi - f) * (yi - f)).sum::<f64>()
                    + step.lambda * l1;
                (xb, obj)
            };
            let (fit_w, obj_w) = fit(&step.solution);
            let (fit_c, obj_c) = fit(&cold.solution);
            for (a, b) in fit_w.iter().zip(&fit_c) {
                assert!((a - b).abs() <= 1e-6, "step {t}: fits differ {a} vs {b}");
            }
            assert!((obj_w - obj_c).abs() <= 1e-9 * obj_w.max(1.0), "step {t}: objectives differ");

            let actives: Vec<_> =
                step.solution.itemsets().chain(cold.solution.itemsets()).collect();
            let mut has_dup = false;
            for (i, a) in actives.iter().enumerate() {
                let fa = feature_vector(a, &z);
                for b in actives.iter().skip(i + 1) {
                    if *a != *b && feature_vector(b, &z).column == fa.column {
                        has_dup = true;
                    }
                }
            }
            if !has_dup {
                for its in step.solution.itemsets().chain(cold.solution.itemsets()) {
                    let a = step.solution.get(its);
                    let b = cold.solution.get(its);
                    assert!(
                        (a - b).abs() <= 1e-6,
                        "step {t}: warm {a} vs cold {b} differ at {its}"
                    );
                }
                coef_checked += 1;
            }
            cold_checked += 1;
        }
    }
    verdict(
        5,
        true,
        &format!("full-space gap ≤ 1e-6 and KKT residual bounds on {steps_checked} default-tolerance steps; warm/cold fits agree on {cold_checked} tight steps (coefficients on {coef_checked} duplicate-free)"),
    );
}

#[test]
fn criterion_6_ib_equivalence_and_measurement() {
    let mut directional_hit = false;
    let mut checked = 0usize;
    for seed in [2u64, 9, 21, 33] {
        // dense-active: moderate sparsity, relatively many instances
        let (z, y) = synth_generate::<f64>(40, 9, 0.6, 0.5, seed).unwrap();
        let mut cfg = ProblemConfig::<f64>::new(3);
        cfg.tol = 1e-9;
        cfg.max_sweeps = Some(500_000);
        let sfp = run_path(&cfg, &z, &y).unwrap();
        let ib = ib_run_path(&cfg, &z, &y).unwrap();
        let eq = validate_equivalence(&sfp, &ib, 1e-6);
        assert!(eq.is_empty(), "IB vs SFP coefficient mismatch: {:?}", eq.violations.first());
        assert!(
            ib.steps.iter().skip(1).all(|s| s.metrics.lasso_solves >= 1),
            "IB step without a LASSO solve"
        );
        checked += 1;

        let ib_last = ib.steps.last().unwrap().metrics.traversed_nodes;
        let sfp_last = sfp.steps.last().unwrap().metrics.traversed_nodes;
        if ib_last > sfp_last {
            directional_hit = true;
        }
    }
    verdict(
        6,
        directional_hit,
        &format!(
            "IB agrees with SFP within 1e-6 on {checked} instances; per-step lasso_solves ≥ 1; IB tree-search nodes at smallest λ exceeded SFP's on at least one dense-active instance: {directional_hit}"
        ),
    );
}

#[test]
fn criterion_7_pruning_sparsity_direction() {
    let start = Instant::now();
    let sparse = mean_pruning_rate_at(200, 200, 3, 0.95, 0.1, 5, 1e-6).unwrap();
    let dense = mean_pruning_rate_at(200, 200, 3, 0.80, 0.1, 5, 1e-6).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = sparse > dense && elapsed < 300.0;
    verdict(
        7,
        pass,
        &format!(
            "mean pruning rate at η=0.95 ({sparse:.4}) exceeds η=0.80 ({dense:.4}) over 5 seeds each, {elapsed:.1}s (< 300s)"
        ),
    );
}

#[test]
fn criterion_9_scale_smoke() {
    // The §4.2-sized configuration: n = d = 1000, η = 0.95, r = 3, so
    // D ≈ 1.7e8 itemsets. The run must finish without enumerating D and well
    // under the (deliberately loose) 30-minute bound.
    let start = Instant::now();
    let (z, y) = synth_generate::<f64>(1000, 1000, 0.95, 0.1, 424242).unwrap();
    let cfg = ProblemConfig::<f64>::new(3);
    let d_total = total_itemsets(1000, 3);
    assert!(d_total > 160_000_000);

    let path = run_path(&cfg, &z, &y).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let max_step_nodes = path
        .steps
        .iter()
        .map(|s| s.metrics.traversed_nodes)
        .max()
        .unwrap();
    let total_nodes: u64 = path.steps.iter().map(|s| s.metrics.traversed_nodes).sum();
    let max_superset = path.steps.iter().map(|s| s.metrics.superset_size).max().unwrap();
    // Memory scales with traversed nodes / superset, never with D: the
    // whole run must touch a vanishing fraction of the itemset space.
    let pass = elapsed < 1800.0
        && max_step_nodes < d_total / 100
        && (max_superset as u64) < d_total / 1000;
    verdict(
        9,
        pass,
        &format!(
            "full path over D={d_total} itemsets in {elapsed:.0}s (<1800s), {} steps, max {} nodes/step ({}x under D), total {} node visits, max superset {}",
            path.steps.len(),
            max_step_nodes,
            d_total / max_step_nodes.max(1),
            total_nodes,
            max_superset
        ),
    );
    let incidents: u32 = path.steps.iter().map(|s| s.metrics.screening_incidents).sum();
    assert_eq!(incidents, 0, "screening incidents at scale");
}
