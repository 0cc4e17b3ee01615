//! Tangent-category kernel on Euclidean spaces.
//!
//! Smooth maps are evaluated on a tower of nested first-order jets, so the
//! tangent functor and every structural map are exact. Flows are obtained
//! from closed forms, matrix exponentials or a jet-aware Runge–Kutta
//! integrator, and the law suites check the resulting structures on seeded
//! samples.

pub mod dsl;
pub mod dynamics;
pub mod error;
pub mod jet;
pub mod kernel;
pub mod report;
pub mod rig;
pub mod sampling;
pub mod suites;
pub mod vector_fields;

pub use error::{Error, Result};
pub use jet::Jet;
pub use kernel::{SmoothMap, Space, TrivialBundle};
