//! Numerical twistor construction of surfaces in Lie sphere geometry.
//!
//! Potentials `(p, q, V, W)` define a linear system for a vector `ψ ∈ C⁴`;
//! its moving frame carries a pseudo-Hermitian form of signature (2, 2), and
//! wedge squares of the frame give real curvature-sphere vectors in
//! hexaspherical coordinates, from which the surface is recovered as an
//! envelope.

pub mod algebra;
pub mod error;
pub mod euclid;
pub mod grid;
pub mod jet;
pub mod frame;
pub mod potentials;
pub mod spectral;
pub mod surface;
pub mod wilczynski;

pub use algebra::{Bivector6, TwistorVector, C64};
pub use error::{Error, Result};
pub use grid::{Axis, Grid2, Rect};
pub use jet::Jet;
pub use potentials::{DerivedCoeffs, FamilyParams, GaugeMap, PotentialField};
