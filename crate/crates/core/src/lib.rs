//! Numerical laboratory for the P3P danger cylinder and its companion surface.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – control triangles on the unit circle, viewpoints, subtended
//!   angles, trilateration and the danger-cylinder predicate.
//! * [`solver`] – exact solution of the law-of-cosines system through a
//!   Grunert quartic, with multiplicity and P3P classification.
//! * [`rieck`] – Rieck's entities and the diagnostic pipeline built on them.
//! * [`surface`] – geometric construction of the companion surface, membership,
//!   implicit polynomial fitting and the large-height limit.
//! * [`partition`] – solution-count jumps across the surface, the rank of the
//!   cosine Jacobian on the cylinder and the square-root fold law.
//! * [`config`] – JSON experiment configuration shared with the CLI.

pub mod config;
pub mod dd;
pub mod error;
pub mod geometry;
pub mod partition;
pub mod poly;
pub mod rieck;
pub mod solver;
pub mod stats;
pub mod surface;
pub mod tolerance;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use geometry::{AngleTriple, ControlTriangle, Viewpoint};
pub use tolerance::Tolerances;
