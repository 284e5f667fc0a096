//! Estimation of covariate effects on distributional statistics (variance,
//! quantiles, Gini, polarization) by regressing per-observation influence
//! values on covariates.
//!
//! Influence values come from three interchangeable routes:
//!
//! * `AnalyticRif`: the textbook recentered influence function, available for
//!   the mean, quantiles, variance and Gini;
//! * `LooRsc`: the recentered sensitivity curve, a leave-one-out finite-sample
//!   stand-in that needs no analytic form and therefore also covers the
//!   Duclos-Esteban-Ray polarization index;
//! * `SplineRsc`: the sensitivity curve computed exactly on a random subsample
//!   and carried to the full sample by a restricted cubic spline, trading a
//!   little accuracy for a large cut in computation time.

pub mod error;
pub mod functionals;
pub mod influence;
pub mod montecarlo;
pub mod regression;
pub mod rng;
pub mod sample;
pub mod spline;

pub use error::{Error, Result};
pub use functionals::{Functional, KdeConfig};
pub use influence::{InfluenceMethod, InfluenceVector, Strategy};
pub use montecarlo::{McConfig, McReport};
pub use regression::{EffectReport, ModelSpec};
pub use sample::{Dataset, DgpKind, DgpModel, LeaveOneOutView, Observations, Sample};
pub use spline::{KnotSet, SplineModel};
