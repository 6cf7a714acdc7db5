//! Simulation and numerics for mean-field reversible coagulation-fragmentation
//! models: exact finite-volume sampling, large-deviation rate functions,
//! condensation statistics, and the associated kinetic equations.
//!
//! The crate is organized bottom-up:
//!
//! - [`series`]: certified power-series evaluation;
//! - [`pmf`]: probability tables and the Panjer recursion;
//! - [`weights`]: weight sequences `(Q_r)` and their generating functions;
//! - [`stats`]: test statistics (Kolmogorov-Smirnov, chi-square, total variation);
//! - [`oracle`]: brute-force enumeration and exact conditional laws;
//! - [`rates`]: large-deviation rate functions;
//! - [`sampler`]: exact samplers for the invariant measure;
//! - [`dynamics`]: stochastic kinetics and the truncated kinetic ODE;
//! - [`analysis`]: condensation experiments and statistical verdicts.

pub mod error;
pub mod pmf;
pub mod series;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
