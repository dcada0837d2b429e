//! Implicit lexicographic itemset tree over covariates.
//!
//! A node is a sorted index set {i1 < … < ik}; its feature column is the
//! elementwise product of the member covariate columns. Children extend the
//! set by a strictly larger index, so the tree is never materialized: it
//! exists only as recursion state, and a child feature is built by
//! intersecting its parent's feature with one covariate column.
//!
//! Because covariates live in [0, 1], features shrink monotonically along
//! every root-to-leaf path; that anti-monotonicity powers all subtree bounds.

use rayon::prelude::*;
use smallvec::SmallVec;
use std::collections::HashSet;

use crate::data::{CovariateMatrix, SparseVec};
use crate::num::Scalar;

/// Sorted, unique, nonempty covariate indices (0-based), max length r.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(SmallVec<[u32; 4]>);

impl Itemset {
    /// Builds from indices, which must be strictly increasing and nonempty.
    pub fn new(indices: impl Into<SmallVec<[u32; 4]>>) -> Self {
        let indices = indices.into();
        assert!(!indices.is_empty(), "itemset must be nonempty");
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "itemset indices must strictly increase"
        );
        Itemset(indices)
    }

    pub fn singleton(index: u32) -> Self {
        Itemset(SmallVec::from_slice(&[index]))
    }

    /// The child obtained by appending a strictly larger index.
    pub fn extend_with(&self, index: u32) -> Self {
        debug_assert!(index > self.max_index());
        let mut v = self.0.clone();
        v.push(index);
        Itemset(v)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn max_index(&self) -> u32 {
        *self.0.last().unwrap()
    }

    /// 1-based indices for external interfaces.
    pub fn to_one_based(&self) -> Vec<u32> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl std::fmt::Display for Itemset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// An interaction feature: the itemset naming it plus its sparse column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeature<F> {
    pub itemset: Itemset,
    pub column: SparseVec<F>,
}

impl<F: Scalar> SparseFeature<F> {
    pub fn support(&self) -> usize {
        self.column.len()
    }

    pub fn is_zero(&self) -> bool {
        self.column.is_empty()
    }

    pub fn norm(&self) -> F {
        self.column.values().iter().map(|v| *v * *v).sum::<F>().sqrt()
    }

    /// Sparse dot with a dense vector, accumulated in increasing instance order.
    pub fn dot_dense(&self, v: &[F]) -> F {
        let mut acc = F::zero();
        for (i, x) in self.column.iter() {
            acc += v[i as usize] * x;
        }
        acc
    }

    /// Child feature: intersect this feature with covariate column `k`.
    /// Cost is proportional to the smaller of the two supports.
    pub fn intersect(&self, k: u32, col: &SparseVec<F>) -> SparseFeature<F> {
        let (ai, av) = (self.column.indices(), self.column.values());
        let (bi, bv) = (col.indices(), col.values());
        let mut indices = Vec::with_capacity(ai.len().min(bi.len()));
        let mut values = Vec::with_capacity(ai.len().min(bi.len()));
        let (mut p, mut q) = (0usize, 0usize);
        while p < ai.len() && q < bi.len() {
            match ai[p].cmp(&bi[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    indices.push(ai[p]);
                    values.push(av[p] * bv[q]);
                    p += 1;
                    q += 1;
                }
            }
        }
        SparseFeature {
            itemset: self.itemset.extend_with(k),
            column: SparseVec::new(indices, values),
        }
    }
}

/// The feature of a singleton node: the covariate column itself.
pub fn singleton_feature<F: Scalar>(z: &CovariateMatrix<F>, j: u32) -> SparseFeature<F> {
    SparseFeature {
        itemset: Itemset::singleton(j),
        column: z.column(j as usize).clone(),
    }
}

/// Lexicographic children of a node: extensions by every larger index ≤ d.
pub fn children(itemset: &Itemset, d: usize) -> Vec<Itemset> {
    ((itemset.max_index() + 1)..d as u32)
        .map(|k| itemset.extend_with(k))
        .collect()
}

/// Builds the interaction column for an arbitrary itemset by successive
/// intersection from its first member.
pub fn feature_vector<F: Scalar>(itemset: &Itemset, z: &CovariateMatrix<F>) -> SparseFeature<F> {
    let idx = itemset.indices();
    let mut feat = singleton_feature(z, idx[0]);
    for &k in &idx[1..] {
        feat = feat.intersect(k, z.column(k as usize));
    }
    feat
}

/// Positive/negative weighted support sums of a feature against a dense
/// vector v: (Σ_{v_i>0} v_i·x_i, −Σ_{v_i<0} v_i·x_i). Both are nonnegative,
/// and max(pos, neg) bounds |x'ᵀv| for every descendant feature x'.
pub fn weighted_bounds<F: Scalar>(feature: &SparseFeature<F>, v: &[F]) -> (F, F) {
    let mut pos = F::zero();
    let mut neg = F::zero();
    for (i, x) in feature.column.iter() {
        let w = v[i as usize];
        if w > F::zero() {
            pos += w * x;
        } else {
            neg -= w * x;
        }
    }
    (pos, neg)
}

/// Traversal counters for one tree search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Nodes whose feature column was materialized.
    pub visited: u64,
    /// Subtrees cut by the weighted bound or by an empty feature.
    pub pruned_subtrees: u64,
    /// Itemsets contained in those cut subtrees, counted combinatorially.
    pub pruned_equiv: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.visited += other.visited;
        self.pruned_subtrees += other.pruned_subtrees;
        self.pruned_equiv += other.pruned_equiv;
    }
}

/// Result of a pruned max-|inner-product| search.
#[derive(Debug, Clone)]
pub struct TreeMax<F> {
    /// Argmax itemset; None when every candidate value is zero.
    pub itemset: Option<Itemset>,
    /// max |x_jᵀ v| over all itemsets of size ≤ r not excluded.
    pub value: F,
    pub stats: SearchStats,
}

/// Number of strict descendants of a node in the size-≤-r tree over d
/// covariates: extensions by nonempty subsets of (max_index, d).
pub fn descendant_count(itemset: &Itemset, d: usize, r: usize) -> u64 {
    let avail = d as u64 - (itemset.max_index() as u64 + 1);
    let depth_left = r.saturating_sub(itemset.order());
    (1..=depth_left as u64).map(|k| binomial(avail, k)).sum()
}

/// Total itemset count D = Σ_{κ=1..r} C(d, κ).
pub fn total_itemsets(d: usize, r: usize) -> u64 {
    (1..=r as u64).map(|k| binomial(d as u64, k)).sum()
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

struct MaxSearch<'a, F> {
    z: &'a CovariateMatrix<F>,
    v: &'a [F],
    r: usize,
    exclude: &'a HashSet<Itemset>,
}

/// Candidate ordering: larger value wins; on exact ties the lexicographically
/// smaller itemset wins. Order-independent, so parallel subtree reductions
/// give the same result as a sequential preorder scan.
fn better<F: Scalar>(value: F, itemset: &Itemset, best: &(Option<Itemset>, F)) -> bool {
    if value > best.1 {
        return value > F::zero();
    }
    if value < best.1 || value == F::zero() {
        return false;
    }
    match &best.0 {
        None => false,
        Some(cur) => itemset < cur,
    }
}

impl<F: Scalar> MaxSearch<'_, F> {
    /// Can any strict descendant of `node` (bounded by `bound`) displace the
    /// incumbent? The lexicographically smallest descendant is the first
    /// child, so equal-valued subtrees are only entered when they could win
    /// the tie-break.
    fn should_descend(&self, node: &SparseFeature<F>, bound: F, best: &(Option<Itemset>, F)) -> bool {
        if node.itemset.order() >= self.r || node.itemset.max_index() as usize + 1 >= self.z.d() {
            return false;
        }
        if bound > best.1 {
            return true;
        }
        if bound < best.1 || bound == F::zero() {
            return false;
        }
        match &best.0 {
            None => false,
            Some(cur) => {
                let first_child = node.itemset.extend_with(node.itemset.max_index() + 1);
                first_child < *cur
            }
        }
    }

    fn visit_candidate(&self, feat: &SparseFeature<F>, pos: F, neg: F, best: &mut (Option<Itemset>, F)) {
        let value = (pos - neg).abs();
        if !self.exclude.is_empty() && self.exclude.contains(&feat.itemset) {
            return;
        }
        if better(value, &feat.itemset, best) {
            *best = (Some(feat.itemset.clone()), value);
        }
    }

    /// Depth-first search below `node`; `pos`/`neg` are its weighted bounds.
    fn descend(
        &self,
        node: &SparseFeature<F>,
        best: &mut (Option<Itemset>, F),
        stats: &mut SearchStats,
    ) {
        for k in (node.itemset.max_index() + 1)..self.z.d() as u32 {
            let child = node.intersect(k, self.z.column(k as usize));
            stats.visited += 1;
            if child.is_zero() {
                let below = descendant_count(&child.itemset, self.z.d(), self.r);
                if below > 0 {
                    stats.pruned_subtrees += 1;
                    stats.pruned_equiv += below;
                }
                continue;
            }
            let (pos, neg) = weighted_bounds(&child, self.v);
            self.visit_candidate(&child, pos, neg, best);
            let bound = pos.max(neg);
            if self.should_descend(&child, bound, best) {
                self.descend(&child, best, stats);
            } else {
                let below = descendant_count(&child.itemset, self.z.d(), self.r);
                if below > 0 {
                    stats.pruned_subtrees += 1;
                    stats.pruned_equiv += below;
                }
            }
        }
    }
}

/// Finds max |x_jᵀv| (and its argmax) over all itemsets of size ≤ r not in
/// `exclude`, by depth-first search with subtree bounds. Sibling subtrees are
/// searched in parallel; each is seeded with the best singleton incumbent, so
/// traversal counts and results are independent of thread count.
pub fn tree_max_abs_inner<F: Scalar>(
    z: &CovariateMatrix<F>,
    v: &[F],
    r: usize,
    exclude: &HashSet<Itemset>,
) -> TreeMax<F> {
    assert_eq!(v.len(), z.n(), "weight vector length must equal n");
    assert!(r >= 1);
    let search = MaxSearch { z, v, r, exclude };

    // Singleton pre-pass: evaluates all depth-1 nodes sequentially and seeds
    // every subtree with the same incumbent.
    let mut roots: Vec<(SparseFeature<F>, F)> = Vec::with_capacity(z.d());
    let mut seed: (Option<Itemset>, F) = (None, F::zero());
    let mut stats = SearchStats::default();
    for j in 0..z.d() as u32 {
        let feat = singleton_feature(z, j);
        stats.visited += 1;
        if feat.is_zero() {
            let below = descendant_count(&feat.itemset, z.d(), r);
            if below > 0 {
                stats.pruned_subtrees += 1;
                stats.pruned_equiv += below;
            }
            continue;
        }
        let (pos, neg) = weighted_bounds(&feat, v);
        search.visit_candidate(&feat, pos, neg, &mut seed);
        roots.push((feat, pos.max(neg)));
    }

    let subtree_results: Vec<((Option<Itemset>, F), SearchStats)> = roots
        .par_iter()
        .map(|(feat, bound)| {
            let mut best = seed.clone();
            let mut st = SearchStats::default();
            if search.should_descend(feat, *bound, &best) {
                search.descend(feat, &mut best, &mut st);
            } else {
                let below = descendant_count(&feat.itemset, z.d(), r);
                if below > 0 {
                    st.pruned_subtrees += 1;
                    st.pruned_equiv += below;
                }
            }
            (best, st)
        })
        .collect();

    let mut best = seed;
    for (sub_best, st) in &subtree_results {
        stats.merge(st);
        if let (Some(its), val) = (&sub_best.0, sub_best.1) {
            if better(val, its, &best) {
                best = (Some(its.clone()), val);
            }
        }
    }

    TreeMax { itemset: best.0, value: best.1, stats }
}
