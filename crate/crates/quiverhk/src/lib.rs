//! Numerical model of the full-flag quiver description of the universal
//! SU(n) hyperkahler implosion.
//!
//! The crate covers the moment-map equations on full-flag quivers, gradient
//! balancing of the real equation inside a complex gauge orbit, the induced
//! map from the nilpotent cone to `su(n)`, the embedding of quivers into
//! spaces of degree-weighted polynomial sections, and the stratum
//! classification by torus moment values and Jordan data.
//!
//! Module map:
//! - [`matrix`]: dense complex kernel (decompositions, Jordan form, wedges).
//! - [`quiver`]: the quiver data model, moment residuals, group actions.
//! - [`balance`]: Kempf-Ness gradient flow on the gauge orbit.
//! - [`nilcone`]: the nilpotent-cone moment map and its closed forms.
//! - [`sigma`]: polynomial sections, evaluation, wedge and reality identities.
//! - [`strata`]: stratum labels, eigenspace decomposition, hypertoric family.
//! - [`verify`]: seeded residual suites shared with the CLI.

pub mod balance;
pub mod matrix;
pub mod nilcone;
pub mod quiver;
pub mod rng;
pub mod sigma;
pub mod strata;
pub mod verify;

pub use matrix::CMatrix;
pub use quiver::{MomentScalars, Quiver};

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("matrix is not nilpotent at tolerance {tol:e} (defect {defect:e})")]
    NotNilpotent { defect: f64, tol: f64 },

    #[error("rank staircase is not monotone; tolerance {tol:e} is unusable here")]
    RankStaircase { tol: f64 },

    #[error("diagonal entry {index} is not a positive real (required for the triangular square root)")]
    NonPositiveDiagonal { index: usize },

    #[error("(u, v) must satisfy |u|^2 + |v|^2 = 1, got {norm}")]
    NonUnitParameter { norm: f64 },

    #[error("gauge element {index} is singular")]
    SingularGauge { index: usize },

    #[error("index k = {k} out of range 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("precondition violated: {context} (residual {residual:e} > {tol:e})")]
    Precondition {
        context: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("balancing did not reach tolerance within {iterations} iterations (best residual {residual:e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        report: Box<balance::BalanceReport>,
    },

    #[error("complex moment residual drifted to {residual:e} during balancing")]
    ComplexDrift { residual: f64 },

    #[error("{what} exceeded its iteration budget")]
    IterationLimit { what: &'static str },

    #[error("Newton stagnated with residual {residual:e}")]
    NewtonStagnation { residual: f64 },

    #[error("degenerate input: {context}")]
    Degenerate { context: String },

    #[error("section interpolation residual {residual:e} exceeds {tol:e}; normalise the input")]
    Interpolation { residual: f64, tol: f64 },

    #[error("section component {j} vanishes at the evaluation point")]
    ZeroComponent { j: usize },

    #[error("eigenspace leakage {leak:e} exceeds tolerance {tol:e}")]
    EigenspaceLeakage { leak: f64, tol: f64 },

    #[error("no rotation in the sample lands the quiver in the moment-generic locus")]
    QCircleUnattainable,
}

impl Error {
    fn shape(context: impl Into<String>) -> Error {
        Error::ShapeMismatch {
            context: context.into(),
        }
    }
}
