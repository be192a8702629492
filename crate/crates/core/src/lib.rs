//! Fair principal component analysis.
//!
//! Classical PCA keeps the top eigenvectors of the covariance `XᵀX/n` and
//! can leave one sensitive group much worse reconstructed than the other.
//! This crate blends the covariance with the difference of the two group
//! covariances, takes the top eigenvectors of the blend, and searches the
//! blend weight with a golden-section search:
//!
//! * [`fairpca::FairPca::unconstrained`] minimizes the squared gap between
//!   the groups' average reconstruction errors;
//! * [`fairpca::FairPca::constrained`] does the same while keeping both
//!   groups no worse off than the harmed group was under classical PCA.
//!
//! Parallel loops (Gram accumulation, rank sweeps, weight profiles) run on
//! rayon when the default `parallel` feature is on and sequentially
//! otherwise; both paths give bit-identical results.

pub mod dataset;
pub mod error;
pub mod exec;
pub mod fairpca;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod sweep;
pub mod synth;

pub use dataset::{balance, center_and_split, load_table, prepare, Group, GroupedData, RawTable};
pub use error::{Error, ErrorKind, Result};
pub use exec::Exec;
pub use fairpca::{
    c_fpca, classical_pca, fair_projection, golden_section, u_fpca, weighted_covariance,
    FairFitResult, FairPca, GoldenOutcome, Method, SearchConfig, TradeoffWeight, GOLDEN_RATIO,
};
pub use linalg::{frobenius_norm_sq, matmul, scaled_gram, sym_eig, sym_eig_top_r, EigenPairs, Matrix};
pub use metrics::{
    avg_reconstruction_error, disparity, fairness_measure, identify_privileged, GroupMetrics,
    Moments, Roles,
};
pub use report::{PlotData, SweepReport, SweepRow};
pub use sweep::{run_sweep, SweepConfig};
