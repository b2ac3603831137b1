//! Sharp-interface grain envelope model (GEM) for diffusive dendritic growth.
//!
//! The liquid around a growing grain is discretized with scattered nodes and
//! the diffusion equation is solved by strong-form collocation with weights
//! obtained from a local monomial basis. The envelope itself is an explicitly
//! tracked closed spline that is advected by stagnant-film tip kinetics and
//! rebuilt every step. A conventional diffuse-interface solver on a fixed
//! grid serves as the cross-validation baseline.

pub mod config;
pub mod diffuse_ref;
pub mod diffusion;
pub mod driver;
pub mod envelope;
pub mod error;
pub mod geometry;
pub mod kinetics;
pub mod nodegen;
pub mod nodes;
pub mod operators;
pub mod pu;
pub mod report;
pub mod spline;

pub use error::{Error, Result};
