//! Positive link prediction in dynamic networks of stationary processes.
//!
//! Spectra live on a uniform grid over `[0, π]`; the inverse spectrum of the
//! prior is updated by a sparse matrix pseudo-polynomial found by solving a
//! regularized Itakura-Saito dual, then new edges are read off
//! partial-coherence scores.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the
//! unsuffixed aliases below fix it to `f64`.

pub mod covariance;
pub mod error;
pub mod estimation;
pub mod grid;
pub mod linalg;
pub mod objective;
pub mod poly;
pub mod recursive;
pub mod samples;
pub mod scalar;
pub mod scoring;
pub mod simulate;
pub mod solver;
pub mod support;

pub use covariance::CovarianceSequence;
pub use error::{Error, Result};
pub use estimation::{
    exact_gaussian_neglik, sample_covariances, trace_pairing, truncated_periodogram, whittle_loglik,
    TimeSeries,
};
pub use grid::{FrequencyGrid, DEFAULT_GRID_SIZE};
pub use objective::{
    itakura_saito, penalty, project_l1_ball, prox_linf, prox_penalty, smooth_gradient, smooth_objective,
    PenaltyGroups, RegularizedProblem,
};
pub use poly::MatrixPseudoPolynomial;
pub use recursive::{flatten, step, RecursiveState, WindowRecord};
pub use samples::SpectralDensitySamples;
pub use scalar::{Complex, Real};
pub use scoring::{
    common_neighbors, partial_coherence, roc_auc, roc_curve, score_against_truth, score_matrix, threshold,
    Metrics, RocPoint, ScoreMatrix,
};
pub use simulate::{
    arma_replica, build_scenario, nested_scenario, random_sparse_model, sample_path, GroundTruthModel,
    InverseSpectrum, NestedScenarioConfig, Scenario, ScenarioSpec, WindowSpec,
};
pub use solver::{
    check_kkt, check_moments, recover_primal, solve_regularized, stopping_kkt_tol, KktReport, MomentReport, SolverConfig,
    SolverReport,
};
pub use support::Support;

pub type Grid = FrequencyGrid<f64>;
pub type PseudoPoly = MatrixPseudoPolynomial<f64>;
pub type Spectrum = SpectralDensitySamples<f64>;
pub type Lags = CovarianceSequence<f64>;
pub type Series = TimeSeries<f64>;
pub type Problem = RegularizedProblem<f64>;
pub type Model = GroundTruthModel<f64>;
pub type State = RecursiveState<f64>;

pub type GridF32 = FrequencyGrid<f32>;
pub type PseudoPolyF32 = MatrixPseudoPolynomial<f32>;
pub type SpectrumF32 = SpectralDensitySamples<f32>;
pub type LagsF32 = CovarianceSequence<f32>;
pub type SeriesF32 = TimeSeries<f32>;
pub type ProblemF32 = RegularizedProblem<f32>;
