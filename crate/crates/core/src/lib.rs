//! Total variation bounds between integer-valued random variables and the
//! discretized normal distribution, built from Stein couplings.
//!
//! The crate has three layers:
//!
//! - **Exact mass machinery** ([`pmf`], [`normal`]): finite-support integer
//!   pmfs, the discretized normal `N^d(mu, sigma^2)` whose mass at `z` is
//!   `P(z - 1/2 <= Z < z + 1/2)`, and the distances between them (total
//!   variation, shift-TV `d_TV(L(V), L(V+1))`, Kolmogorov).
//! - **Couplings and estimators** ([`coupling`], [`estimators`]): Stein
//!   couplings `(S, S', G)` with `E[G f(S') - G f(S)] = E[(S - mu) f(S)]`,
//!   exchangeable pairs, the Mineka coupling, and exact/Monte-Carlo
//!   estimators for every moment and conditional quantity the bounds need.
//! - **Bound evaluators and models** ([`bounds`], [`models`]): the main
//!   coupling bound and its local-dependence / exchangeable-pair /
//!   size-bias corollaries, evaluated term by term on the shipped
//!   application models (2-runs, Erdos-Renyi degree counts, multinomial
//!   occupancy, a binomial reference model).
//!
//! The mass/distance layer is generic over the scalar type through the
//! [`Real`] trait (`f32` or `f64`); the Monte-Carlo layer is `f64` because
//! the deterministic random streams produce `f64`. Concrete aliases for the
//! common case live at the crate root ([`Pmf`], [`Normal`]).
//!
//! All randomness flows through counter-based [`rng::Stream`]s keyed by
//! `(master seed, domain, draw index)`, so any partition of draw indices
//! across workers produces bit-identical results.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod coupling;
pub mod estimators;
pub mod models;
pub mod normal;
pub mod numeric;
pub mod pmf;
pub mod real;
pub mod rng;
pub mod stein_eq;

pub use real::Real;

/// Finite-support integer pmf over `f64`, the working scalar type.
pub type Pmf = pmf::IntegerPmf<f64>;

/// Normal parameters `(mu, sigma^2)` over `f64`.
pub type Normal = normal::NormalParams<f64>;

use thiserror::Error;

/// Errors for distribution, coupling, estimator and bound computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("truncation eps {eps} not reachable within support radius {radius}")]
    EpsTooSmall { eps: f64, radius: i64 },

    #[error("dynamic-programming budget exceeded ({0}); use the Monte-Carlo mode")]
    DpBudgetExceeded(String),

    #[error("no unit up-steps observed; the exchangeable pair is inapplicable")]
    NoUnitSteps,

    #[error("missing bound ingredient: {0}")]
    MissingIngredient(&'static str),

    #[error("pair is not certified unit-step; corollary hypothesis |S-S'| <= 1 fails")]
    NotUnitStep,

    #[error("size bias undefined: model mean is not positive")]
    ZeroMean,

    #[error("all marginals have shift-TV 1; bound is infinite")]
    DegenerateShift,

    #[error("test function is not a 0/1-valued integer step function: {0}")]
    StepFunction(String),

    #[error("conditional shift-TV evaluation failed: {0}")]
    ContextEval(String),
}

pub type Result<T> = std::result::Result<T, Error>;
