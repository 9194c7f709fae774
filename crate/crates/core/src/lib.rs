//! Metric tensors, privileged time orientations and volume forms for
//! Lorentz-Finsler Lagrangians `L(x, y)` given as expressions.
//!
//! The pipeline is: parse a Lagrangian ([`expr`]), differentiate it in the
//! direction variables ([`autodiff`]), build the direction-dependent metric
//! ([`finsler`]), find a privileged time orientation ([`orientation`]) and
//! integrate volume densities over ellipsoids ([`quadrature`], [`volume`],
//! [`action`]). Built-in metrics live in [`catalog`].

pub mod action;
pub mod autodiff;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod expr;
pub mod finsler;
pub mod metric_spec;
pub mod orientation;
pub mod quadrature;
pub mod validate;
pub mod volume;

mod linalg;

pub use error::{Error, Result};
pub use expr::Expr;
pub use metric_spec::MetricSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
