//! Transient pulse-response kinetics toolkit.
//!
//! The crate covers the full inference chain for thin-zone pulse experiments:
//!
//! * [`reactor`] simulates one-dimensional diffusion-driven pulse responses
//!   through inert/catalyst/inert zones coupled to surface-species kinetics.
//! * [`features`] turns simulator state or ingested measurement tables into
//!   transient kinetic features: reaction rate, thin-zone gas concentration,
//!   surface uptake, and rate-concentration dependency series.
//! * [`regress`] builds the rate-reactivity design matrix and fits it with
//!   OLS, LASSO, or SCAD, including k-fold cross-validation and selection
//!   scoring against known coefficients.
//! * [`mechanism`] computes the rate-concentration dependency correlation
//!   (RCDC) structure, sweeps rate-constant grids, and classifies
//!   Eley-Rideal vs. Langmuir-Hinshelwood behaviour from correlation signs.

pub mod features;
pub mod grid;
pub mod mechanism;
pub mod reactor;
pub mod regress;

pub use grid::UniformGrid;
