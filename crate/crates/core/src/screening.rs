//! Safe feature pruning over tree nodes plus per-feature safe screening.
//!
//! Given the optimal solution at the previous regularization value, the node
//! rule certifies that *every descendant* of a tree node is non-active at the
//! next value, so its whole subtree can be skipped; the per-feature rule then
//! decides whether the node itself survives into the active superset. Both
//! rules are conservative: a surviving feature may still be non-active, but a
//! screened feature is guaranteed zero at the optimum.
//!
//! Two forms of the screening vector c are in circulation; they differ in the
//! coefficient on the solution term a (1 vs λ_prev/λ_next). The form with
//! coefficient 1 is the one the per-feature screen is derived from and the
//! one whose node-bound domination proof goes through; the other is kept
//! selectable so the two can be compared empirically (see `CVariant`).

use rayon::prelude::*;

use crate::data::{CVariant, CovariateMatrix, ProblemConfig, ScreenMode};
use crate::error::{Error, Result};
use crate::num::{dot, norm_sq, Scalar};
use crate::solver::SparseSolution;
use crate::tree::{descendant_count, feature_vector, singleton_feature, Itemset, SparseFeature};

/// Slack inside the strict "< 1" screening tests: floating-point error must
/// err toward keeping features.
pub const EPS_GUARD: f64 = 1e-9;

/// Frozen screening state for one (λ_prev, λ_next) pair.
#[derive(Debug, Clone)]
pub struct ScreeningContext<F> {
    lambda_prev: F,
    lambda_next: F,
    a: Vec<F>,
    b: Vec<F>,
    c: Vec<F>,
    /// c projected off a; only defined when a ≠ 0.
    d: Option<Vec<F>>,
    norm_a: F,
    norm_b: F,
    dot_ab: F,
    /// ‖b − (aᵀb/‖a‖²)a‖; only defined when a ≠ 0.
    b_perp_norm: Option<F>,
    at_lambda_max: bool,
    c_variant: CVariant,
    /// Binary-covariate case refinement enabled (requires binary data).
    refine_binary: bool,
}

impl<F: Scalar> ScreeningContext<F> {
    pub fn lambda_prev(&self) -> F {
        self.lambda_prev
    }

    pub fn lambda_next(&self) -> F {
        self.lambda_next
    }

    pub fn at_lambda_max(&self) -> bool {
        self.at_lambda_max
    }

    pub fn a(&self) -> &[F] {
        &self.a
    }

    pub fn b(&self) -> &[F] {
        &self.b
    }

    pub fn c(&self) -> &[F] {
        &self.c
    }

    pub fn norm_b(&self) -> F {
        self.norm_b
    }

    pub fn c_variant(&self) -> CVariant {
        self.c_variant
    }
}

/// Builds the screening context from the previous path solution.
///
/// a = Xβ*(λ_prev)/λ_prev, b = (1/λ_next − 1/λ_prev)y + a, and c per the
/// selected variant; the projected quantities d and ‖b_⊥‖ are computed only
/// when a ≠ 0 (i.e. the previous solution is nonempty).
pub fn build_context<F: Scalar>(
    prev_solution: &SparseSolution<F>,
    lambda_prev: F,
    lambda_next: F,
    z: &CovariateMatrix<F>,
    y: &[F],
    config: &ProblemConfig<F>,
) -> Result<ScreeningContext<F>> {
    if !(lambda_next > F::zero() && lambda_next < lambda_prev) {
        return Err(Error::Config(format!(
            "need 0 < lambda_next < lambda_prev, got {lambda_next} >= {lambda_prev}"
        )));
    }
    let n = z.n();
    assert_eq!(y.len(), n);

    let at_lambda_max = prev_solution.is_empty();
    let mut a = vec![F::zero(); n];
    if !at_lambda_max {
        for (itemset, coef) in prev_solution.iter() {
            let feat = feature_vector(itemset, z);
            let scale = coef / lambda_prev;
            for (i, x) in feat.column.iter() {
                a[i as usize] += scale * x;
            }
        }
    }

    let inv_prev = F::one() / lambda_prev;
    let inv_next = F::one() / lambda_next;
    let b: Vec<F> = y
        .iter()
        .zip(&a)
        .map(|(&yi, &ai)| (inv_next - inv_prev) * yi + ai)
        .collect();
    let a_coef = match config.c_variant {
        CVariant::Proposition => F::one(),
        CVariant::Theorem => lambda_prev / lambda_next,
    };
    let c: Vec<F> = y
        .iter()
        .zip(&a)
        .map(|(&yi, &ai)| (inv_next + inv_prev) * yi - a_coef * ai)
        .collect();

    let norm_b = norm_sq(&b).sqrt();
    let (norm_a, dot_ab, d, b_perp_norm) = if at_lambda_max {
        (F::zero(), F::zero(), None, None)
    } else {
        let norm_a_sq = norm_sq(&a);
        let norm_a = norm_a_sq.sqrt();
        let dot_ab = dot(&a, &b);
        let proj = dot_ab / norm_a_sq;
        let d: Vec<F> = c.iter().zip(&a).map(|(&ci, &ai)| ci - proj * ai).collect();
        let mut perp_sq = F::zero();
        for (&bi, &ai) in b.iter().zip(&a) {
            let t = bi - proj * ai;
            perp_sq += t * t;
        }
        (norm_a, dot_ab, Some(d), Some(perp_sq.sqrt()))
    };

    Ok(ScreeningContext {
        lambda_prev,
        lambda_next,
        a,
        b,
        c,
        d,
        norm_a,
        norm_b,
        dot_ab,
        b_perp_norm,
        at_lambda_max,
        c_variant: config.c_variant,
        refine_binary: config.binary_refinement && z.is_binary() && !at_lambda_max,
    })
}

/// Per-support accumulations a node needs for its bounds, gathered in one pass.
struct NodeSums<F> {
    norm_x: F,
    pos_c: F,
    neg_c: F,
    pos_d: F,
    neg_d: F,
    pos_a: F,
    neg_a: F,
}

fn node_sums<F: Scalar>(ctx: &ScreeningContext<F>, feat: &SparseFeature<F>) -> NodeSums<F> {
    let mut norm_x_sq = F::zero();
    let mut pos_c = F::zero();
    let mut neg_c = F::zero();
    let mut pos_d = F::zero();
    let mut neg_d = F::zero();
    let mut pos_a = F::zero();
    let mut neg_a = F::zero();
    let d = ctx.d.as_deref();
    for (i, x) in feat.column.iter() {
        let i = i as usize;
        norm_x_sq += x * x;
        let cw = ctx.c[i] * x;
        if cw > F::zero() {
            pos_c += cw;
        } else {
            neg_c -= cw;
        }
        if let Some(d) = d {
            let dw = d[i] * x;
            if dw > F::zero() {
                pos_d += dw;
            } else {
                neg_d -= dw;
            }
            let aw = ctx.a[i] * x;
            if aw > F::zero() {
                pos_a += aw;
            } else {
                neg_a -= aw;
            }
        }
    }
    NodeSums { norm_x: norm_x_sq.sqrt(), pos_c, neg_c, pos_d, neg_d, pos_a, neg_a }
}

/// Subtree pruning bounds (U⁺, U⁻) for a nonzero node feature:
/// max{U⁺, U⁻} < 1 certifies every strict descendant non-active at λ_next.
pub fn node_prune_bounds<F: Scalar>(ctx: &ScreeningContext<F>, feat: &SparseFeature<F>) -> (F, F) {
    assert!(!feat.is_zero(), "zero features must be pruned directly by the caller");
    let s = node_sums(ctx, feat);
    node_bounds_from_sums(ctx, &s)
}

fn node_bounds_from_sums<F: Scalar>(ctx: &ScreeningContext<F>, s: &NodeSums<F>) -> (F, F) {
    let half = F::c(0.5);
    let p1 = half * (s.norm_x * ctx.norm_b + s.pos_c);
    let m1 = half * (s.norm_x * ctx.norm_b + s.neg_c);
    if ctx.at_lambda_max {
        return (p1, m1);
    }
    let b_perp = ctx.b_perp_norm.unwrap();
    let p2 = half * (s.norm_x * b_perp + s.pos_d);
    let m2 = half * (s.norm_x * b_perp + s.neg_d);
    let (gen_plus, gen_minus) = (p1.max(p2), m1.max(m2));
    if !ctx.refine_binary {
        return (gen_plus, gen_minus);
    }
    let cut = ctx.dot_ab / (ctx.norm_b * ctx.norm_b);
    let u_plus = if s.neg_a < cut { p2 } else { gen_plus };
    let u_minus = if s.pos_a < cut { m2 } else { gen_minus };
    debug_assert!(u_plus <= gen_plus && u_minus <= gen_minus);
    (u_plus, u_minus)
}

/// Per-feature safe screening bounds (u⁺, u⁻):
/// max{u⁺, u⁻} < 1 certifies the feature itself non-active at λ_next.
pub fn feature_screen_bounds<F: Scalar>(
    ctx: &ScreeningContext<F>,
    feat: &SparseFeature<F>,
) -> (F, F) {
    if feat.is_zero() {
        return (F::zero(), F::zero());
    }
    let half = F::c(0.5);
    let norm_x = feat.norm();
    let dot_c = feat.dot_dense(&ctx.c);
    if ctx.at_lambda_max {
        let term = norm_x * ctx.norm_b;
        return (half * (dot_c + term), half * (-dot_c + term));
    }
    let dot_a = feat.dot_dense(&ctx.a);
    let b_perp = ctx.b_perp_norm.unwrap();
    // ‖x − (xᵀa/‖a‖²)a‖ via the Pythagorean identity.
    let perp_x = (norm_x * norm_x - (dot_a / ctx.norm_a) * (dot_a / ctx.norm_a))
        .max(F::zero())
        .sqrt();
    let lhs = if ctx.norm_b > F::zero() {
        ctx.dot_ab / ctx.norm_b
    } else {
        F::zero()
    };
    let cross = (ctx.dot_ab / ctx.norm_a) * (dot_a / ctx.norm_a);

    let u_plus = if lhs <= -dot_a / norm_x {
        half * (dot_c + norm_x * ctx.norm_b)
    } else {
        half * (dot_c + perp_x * b_perp - cross)
    };
    let u_minus = if lhs <= dot_a / norm_x {
        half * (-dot_c + norm_x * ctx.norm_b)
    } else {
        half * (-dot_c + perp_x * b_perp + cross)
    };
    (u_plus, u_minus)
}

/// Counters from one screening traversal. `traversed + pruned_equiv` equals
/// the total itemset count D exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraversalStats {
    pub traversed: u64,
    pub pruned_subtrees: u64,
    pub pruned_equiv: u64,
    pub leaf_screened: u64,
}

impl TraversalStats {
    fn merge(&mut self, o: &TraversalStats) {
        self.traversed += o.traversed;
        self.pruned_subtrees += o.pruned_subtrees;
        self.pruned_equiv += o.pruned_equiv;
        self.leaf_screened += o.leaf_screened;
    }
}

/// The surviving feature set A(λ_next) ⊇ A*(λ_next), in lexicographic order.
#[derive(Debug, Clone)]
pub struct ActiveSuperset<F> {
    members: Vec<SparseFeature<F>>,
    pub stats: TraversalStats,
}

impl<F: Scalar> ActiveSuperset<F> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn features(&self) -> &[SparseFeature<F>] {
        &self.members
    }

    pub fn into_features(self) -> Vec<SparseFeature<F>> {
        self.members
    }

    pub fn itemsets(&self) -> Vec<Itemset> {
        self.members.iter().map(|f| f.itemset.clone()).collect()
    }

    pub fn contains(&self, itemset: &Itemset) -> bool {
        self.members
            .binary_search_by(|f| f.itemset.cmp(itemset))
            .is_ok()
    }
}

struct Traverser<'a, F> {
    ctx: Option<&'a ScreeningContext<F>>, // None = enumerate every nonzero feature
    z: &'a CovariateMatrix<F>,
    r: usize,
    guard: F,
}

impl<F: Scalar> Traverser<'_, F> {
    fn visit(&self, feat: SparseFeature<F>, out: &mut Vec<SparseFeature<F>>, stats: &mut TraversalStats) {
        debug_assert!(!feat.is_zero());
        let can_descend =
            feat.itemset.order() < self.r && (feat.itemset.max_index() as usize) + 1 < self.z.d();

        let survives = match self.ctx {
            None => true,
            Some(ctx) => {
                let (u_plus, u_minus) = feature_screen_bounds(ctx, &feat);
                u_plus.max(u_minus) >= self.guard
            }
        };
        if !survives {
            stats.leaf_screened += 1;
        }

        if can_descend {
            let prune = match self.ctx {
                None => false,
                Some(ctx) => {
                    let (up, um) = node_prune_bounds(ctx, &feat);
                    up.max(um) < self.guard
                }
            };
            if prune {
                stats.pruned_subtrees += 1;
                stats.pruned_equiv += descendant_count(&feat.itemset, self.z.d(), self.r);
            } else {
                for k in (feat.itemset.max_index() + 1)..self.z.d() as u32 {
                    let child = feat.intersect(k, self.z.column(k as usize));
                    stats.traversed += 1;
                    if child.is_zero() {
                        let below = descendant_count(&child.itemset, self.z.d(), self.r);
                        if below > 0 {
                            stats.pruned_subtrees += 1;
                            stats.pruned_equiv += below;
                        }
                        continue;
                    }
                    self.visit(child, out, stats);
                }
            }
        }

        if survives {
            out.push(feat);
        }
    }

    fn run(&self) -> ActiveSuperset<F> {
        let per_root: Vec<(Vec<SparseFeature<F>>, TraversalStats)> = (0..self.z.d() as u32)
            .into_par_iter()
            .map(|j| {
                let mut out = Vec::new();
                let mut stats = TraversalStats { traversed: 1, ..Default::default() };
                let feat = singleton_feature(self.z, j);
                if feat.is_zero() {
                    let below = descendant_count(&feat.itemset, self.z.d(), self.r);
                    if below > 0 {
                        stats.pruned_subtrees += 1;
                        stats.pruned_equiv += below;
                    }
                } else {
                    self.visit(feat, &mut out, &mut stats);
                }
                (out, stats)
            })
            .collect();

        let mut members = Vec::new();
        let mut stats = TraversalStats::default();
        for (out, st) in per_root {
            members.extend(out);
            stats.merge(&st);
        }
        members.sort_by(|x, y| x.itemset.cmp(&y.itemset));
        ActiveSuperset { members, stats }
    }
}

/// Depth-first screening traversal: prunes subtrees by the node rule, screens
/// individual features by the per-feature rule, and returns the survivors.
pub fn sfp_traverse<F: Scalar>(
    ctx: &ScreeningContext<F>,
    z: &CovariateMatrix<F>,
    r: usize,
) -> ActiveSuperset<F> {
    Traverser {
        ctx: Some(ctx),
        z,
        r,
        guard: F::one() - F::c(EPS_GUARD),
    }
    .run()
}

/// Enumerates every nonzero feature of order ≤ r through the tree (no
/// screening); used by `ScreenMode::None` so the equivalence test never
/// allocates the dense design matrix.
pub fn enumerate_nonzero<F: Scalar>(z: &CovariateMatrix<F>, r: usize) -> ActiveSuperset<F> {
    Traverser { ctx: None, z, r, guard: F::one() }.run()
}

/// Convenience dispatch on the configured screening mode.
pub fn build_superset<F: Scalar>(
    ctx: &ScreeningContext<F>,
    z: &CovariateMatrix<F>,
    config: &ProblemConfig<F>,
) -> ActiveSuperset<F> {
    match config.screen_mode {
        ScreenMode::Sfp => sfp_traverse(ctx, z, config.r),
        ScreenMode::None => enumerate_nonzero(z, config.r),
    }
}
