#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geom;
pub mod quad;
pub mod measures;
pub mod potential;
pub mod qcmaps;
pub mod mbeta;
pub mod weights;
pub mod isoperimetry;
pub mod presets;
pub mod decompose;
pub mod verify;
pub mod io;

pub use decompose::{decompose, DecomposeOptions, Decomposition, DecompositionReport};
pub use error::{Error, Result};
pub use geom::{Ball, Dim, Point};
pub use measures::{Atom, GridSpec, PlanarDensity, RadialDensity, SignedMeasure};
pub use potential::{Basepoint, ConformalFactor};
pub use presets::Scenario;
pub use qcmaps::RadialProfile;
pub use weights::WeightField;
