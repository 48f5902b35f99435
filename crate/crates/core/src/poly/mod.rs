//! Polynomial containers used across the laboratory.

mod bivariate;
mod trivariate;
pub mod univariate;

pub use bivariate::BivariatePoly;
pub use trivariate::{ScaleBox, TrivariatePoly};
