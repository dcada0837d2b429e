//! LASSO regularization paths over all interaction features up to order r of
//! d covariates, without ever materializing the exponentially wide design
//! matrix.
//!
//! Interaction features form a lexicographic itemset tree; because covariates
//! live in [0, 1], features shrink monotonically down the tree, which yields
//! subtree bounds for both the max-inner-product search (λ_max, duality-gap
//! certification) and safe feature pruning: a per-node test that certifies
//! every descendant non-active at the next regularization value, so whole
//! subtrees are skipped before the solver ever sees them. Surviving features
//! go through a per-feature safe screen, and the reduced problem is solved by
//! cyclic coordinate descent with warm starts along the λ path. Every step is
//! certified over the full feature space by a pruned tree search.
//!
//! All numeric kernels are generic over the scalar ([`Scalar`]: f32 or f64);
//! the `*64` aliases below fix f64, which the CLI and the oracle use.

pub mod data;
pub mod error;
pub mod ib;
pub mod libsvm;
pub mod num;
pub mod oracle;
pub mod path;
pub mod screening;
pub mod solver;
pub mod tree;
pub mod validation;

pub use data::{
    binarize, standardize_response, synth_generate, CVariant, CovariateMatrix, ProblemConfig,
    RawMatrix, ResponseVector, ScreenMode, SparseVec,
};
pub use error::{Error, Result};
pub use num::Scalar;
pub use screening::EPS_GUARD;
pub use tree::Itemset;

/// f64 concrete types, the precision used end to end by the CLI.
pub type CovariateMatrix64 = data::CovariateMatrix<f64>;
pub type ResponseVector64 = data::ResponseVector<f64>;
pub type ProblemConfig64 = data::ProblemConfig<f64>;
pub type SparseFeature64 = tree::SparseFeature<f64>;
pub type SparseSolution64 = solver::SparseSolution<f64>;
pub type PathResult64 = path::PathResult<f64>;
pub type ScreeningContext64 = screening::ScreeningContext<f64>;

/// f32 variants for memory-bound experimentation.
pub type CovariateMatrix32 = data::CovariateMatrix<f32>;
pub type SparseSolution32 = solver::SparseSolution<f32>;
pub type PathResult32 = path::PathResult<f32>;
