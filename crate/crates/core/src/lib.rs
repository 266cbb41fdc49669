//! Simulation library for test-time computing in in-context linear
//! regression: a one-layer linear-attention model that performs gradient
//! descent on the prompt, stochastic decoders over its iterates, path
//! aggregation (averaging, Best-of-N, majority vote), exact Markov-chain
//! analysis of the discrete sampler, closed-form risk and recovery bounds,
//! and scaling-curve fits that extrapolate cheap measurements to expensive
//! compute budgets.
//!
//! Everything is deterministic given a master seed; parallel sweeps derive
//! per-unit seeds up front so thread count never changes results.

pub mod aggregate;
pub mod bounds;
pub mod decode;
pub mod error;
pub mod fit;
pub mod markov;
pub mod rng;
pub mod task;
pub mod transformer;

pub use aggregate::{
    aggregate_avg, aggregate_bon, aggregate_mv, run_trials, AggregateMethod, AggregateResult,
    RewardKind, TrialMethod, TrialRow, TrialTable,
};
pub use bounds::{
    ensemble_bound_terms, gd_risk_bound, hoeffding_mv_bound, sufficient_n_gap_bound,
    EnsembleBoundReport, GdBoundReport, SufficientNReport,
};
pub use decode::{
    clip_norm, expected_path_linear_nft, greedy_top_k, roll_batch, roll_path,
    sample_k_without_replacement, sample_step, PathBatch, ReasoningPath, RollMode, SamplerKind,
};
pub use error::{Error, Result};
pub use fit::{
    fit_affine_in_gap, fit_exp_curve, fit_fixed_t_row, low_to_high_predict, AccCell,
    AccSurfaceParams, ExpCurveParams, FixedTRowFit, PredictionReport, SurfaceContext,
};
pub use markov::{
    build_chain, decay_rate, delta_gap, enumerate_states, evolve, greedy_trajectory, stationary,
    transition_row, GapReport, MarkovChain, StateSpace, TrajectoryReport,
};
pub use rng::{derive, rng_from};
pub use task::{
    build_covariance, excess_risk, recovered, risk_report, sample_task, CoefficientPrior,
    CovarianceKind, CovarianceSpec, InContextDataset, RiskReport, TaskConfig,
};
pub use transformer::{
    build_gd_params, closed_form_gd, extract_coefficient, forward, gd_step, PromptEmbedding,
    TransformerParams,
};
