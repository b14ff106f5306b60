//! Measuring and testing tail equivalence between copulas.
//!
//! Two copulas are compared through the diagonal tails of their joint lower
//! tails: the tail order `κ` and tail order parameter `λ` in
//! `C(u,…,u) ~ λ u^κ`. The measure `ξ_w ∈ [−1, 1]` combines the difference in
//! tail orders with the log-ratio of tail probabilities, and is zero exactly
//! when the two tails are equivalent. Upper tails are handled by passing
//! survival copulas.
//!
//! * [`tail_theory`]: closed-form limits, classification, schedules.
//! * [`finite`]: estimation and tests at fixed thresholds.
//! * [`limit`]: Hill-based estimation and tests of the limit.
//! * [`copulas`]: samplers for the FGM, skew-normal and skew-t families.
//! * [`garch`]: volatility filtering of return series.
//! * [`experiments`]: simulation and empirical study drivers.

pub mod auxfun;
pub mod copulas;
pub mod error;
pub mod experiments;
pub mod finite;
pub mod garch;
pub mod inference;
pub mod io;
pub mod limit;
pub mod numeric;
pub mod optimize;
pub mod rng;
pub mod stats;
pub mod tail_theory;

pub use auxfun::{AuxFunction, AuxKind};
pub use copulas::{fgm_conditional_inverse, pseudo_observations, sample, survival_transform, CopulaModel, PairedSample, Pairing, RhoConvention};
pub use error::{Error, ErrorKind, Result};
pub use finite::{alpha_hat, covariance_matrix, empirical_cdfs, finite_test, sigma2_hat, xi_hat, EmpiricalTails, VarianceEstimate};
pub use garch::{fit_garch11, garch_simulate, neg_log_returns, standardized_residuals, GarchFit, GarchOptions, Innovation, InnovationFamily, ReturnSeries};
pub use inference::{Alternative, TestResult};
pub use limit::{draisma_variance, hill, limit_test, rank_maxima, split_sample, xi_limit_hat, DraismaForm, HillEstimate, LimitEstimate, LimitOptions, SeRegime, SplitStrategy};
pub use tail_theory::{classify, fgm_tail_expansion, hill_k_schedule, threshold_schedule, xi_limit, AffineExponent, TailExpansion, TailQuantities, TailRelation, ThresholdSchedule, XiConfig};
