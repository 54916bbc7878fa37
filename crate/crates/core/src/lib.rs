//! Arbitrary-precision spectra of clustered-node Vandermonde and prolate
//! matrices, the bounds that bracket them, and property checks for the
//! exponential-sum inequalities behind those bounds.

pub mod bound_models;
pub mod error;
pub mod expsum;
pub mod hp_numeric;
pub mod matrix_builders;
pub mod node_geometry;
pub mod quadrature;
pub mod spectral_core;
pub mod suites;

pub use rug;

pub use error::{LabError, Result, Violation};
pub use hp_numeric::{HpComplex, HpReal, Precision, PrecisionPolicy};
pub use matrix_builders::{HpMatrix, VandermondeSpec};
pub use node_geometry::{ClusterSpec, Domain, Layout, NodeSet, PartitionResult};
pub use spectral_core::{SpectrumKind, SpectrumResult};
