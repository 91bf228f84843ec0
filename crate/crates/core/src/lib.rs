//! Independent component analysis for multivariate functional data.
//!
//! The pipeline turns discretely observed vector-valued curves into
//! statistically independent component scores:
//!
//! 1. [`basis`] — project each observed curve onto a finite function basis
//!    (orthonormal Fourier by default), giving an n x pK coefficient matrix.
//! 2. [`fpca`] — functional principal component analysis in the geometry
//!    induced by the basis Gram matrix: reduce to d leading directions and
//!    whiten the scores.
//! 3. [`ica`] — estimate an orthogonal rotation of the whitened scores with
//!    fourth-moment methods (kurtosis-based eigendecomposition, or joint
//!    diagonalization of fourth-cumulant matrices), yielding an unmixing
//!    functional applicable to new curves.
//! 4. [`eval`] — compare an estimated unmixing against a known mixing via a
//!    permutation-invariant distance on the gain matrix.
//! 5. [`sim`] — a seeded, reproducible Monte Carlo harness for benchmarking
//!    the estimators on synthetic mixtures.
//!
//! [`matalg`] supplies the shared deterministic matrix kernels (symmetric
//! eigendecomposition with fixed ordering and sign conventions, inverse
//! square roots, approximate joint diagonalization).

pub mod basis;
pub mod error;
pub mod eval;
pub mod fpca;
pub mod ica;
pub mod matalg;
pub mod sim;

pub use basis::{
    center_coefficients, eval_basis, fit_coefficients, fit_coefficients_ridge, fourier_basis,
    gram_matrix, read_coefficients_csv, read_curves_csv, write_coefficients_csv, BasisKind,
    BasisSpec, CoefMatrix, CurveCell, SampledCurveSet,
};
pub use error::{Error, ErrorKind, Result};
pub use eval::{
    block_collapse, fourth_moment_rank, gain_summary, minimum_distance_index, GainSummary,
};
pub use fpca::{
    coefficient_covariance, fpca_reduce, read_basis_json, read_fpca_json, whiten, write_basis_json,
    write_fpca_json, FpcaModel, WhitenedScores,
};
pub use ica::{
    component_scores, fit_fobi, fit_jade, fit_pca, fobi_matrix, jade_cumulant,
    read_unmixing_json, unmixing_loadings, write_scores_csv, write_unmixing_json, CumulantMatrix,
    IcaMethod, JadeDiagnostics, ScoreMatrix, UnmixingModel,
};
pub use matalg::{
    joint_diagonalize, offdiag_objective, sym_eig, sym_inv_sqrt, EigenDecomp, JointDiagResult,
};
pub use sim::{
    expand_study_config, gen_mixing, gen_sources, replication_seed, run_replication, run_study,
    summarize, write_results_csv, write_summary_csv, MixingSpec, ReplicationRecord, Setting,
    SimConfig, SplitMix64, StudyFailure, StudyResult, SummaryRow,
};
