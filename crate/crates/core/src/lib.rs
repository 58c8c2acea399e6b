//! Momentum gradient flow (MGF) for least squares and its relation to ridge
//! regression and plain gradient flow (GF).
//!
//! The crate provides the exact estimator paths, the discrete heavy-ball
//! iteration they approximate, closed-form risks with Monte Carlo
//! cross-checks, numerical verification of the MGF/ridge relative-risk
//! bounds, and Marchenko-Pastur limits of the Bayes risks.

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod risk;
pub mod shrinkage;
pub mod spectral;

pub use asymptotics::{AsymptoticPrior, MpLaw};
pub use nalgebra::{DMatrix, DVector};
pub use bounds::BoundReport;
pub use error::{Error, Result};
pub use estimators::{Family, Shrink, Tuning};
pub use risk::{RiskCurve, RiskKind, RiskProblem};
pub use shrinkage::{Calibration, MomentumSpec, MuRule};
pub use spectral::{CovarianceSpec, Dataset, PriorSpec, SpectralDecomposition};
