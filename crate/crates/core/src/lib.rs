pub mod cli;
pub mod config;
pub mod curvature;
pub mod density;
pub mod error;
pub mod extrapolate;
pub mod geometry;
pub mod grid;
pub mod oracle;
pub mod output;
pub mod potential;
pub mod quad;
pub mod special;
pub mod verify;

pub use density::{build_density, BumpSpec, CurvatureDensity, DensitySpec, Profile};
pub use error::{Error, Result};
pub use potential::{build_field, DerivativeStack, PotentialField, QuadConfig};
