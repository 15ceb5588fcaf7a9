//! Beam parameter optimization for powder-bed-fusion melting.
//!
//! The crate evaluates temperatures of a half-space heated by a moving
//! Gaussian beam along a preset piecewise-linear path, measures how well the
//! resulting maximum temperatures track reference values along the beam path
//! and a sub-surface secondary path, and optimizes per-segment spot size and
//! speed with greedy receding-window algorithms.

// `!(x > 0.0)` guards also reject NaN; quadrature nodes are kept at full
// published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod objective;
pub mod optimize;
pub mod oracle;
pub mod quadrature;
pub mod scanpath;
pub mod scenario;
pub mod thermal;

pub use scanpath::{OffsetMode, PathGenerator, Point3, ScanPath, ScanTiming, SecondaryPath};
pub use thermal::{BeamParameters, Material, MaxMethod, ThermalModel, TimeSampling};
