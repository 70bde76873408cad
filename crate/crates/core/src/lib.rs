//! Minimizing measures of mechanical Lagrangians on the two-torus.
//!
//! The crate works with Lagrangians of the form
//!
//! ```text
//! L(x, y, u, v) = (u² + v²)/2 − (p₀u + q₀v) + f(x, y) + c
//! ```
//!
//! where `(p₀, q₀)` is a unit vector of quadratic-irrational slope and `f` is a
//! real trigonometric polynomial. It provides:
//!
//! - [`torus`]: potentials, directions, orbits and Lagrangians, with exact
//!   evaluation and differentiation of trigonometric polynomials;
//! - [`diophantine`]: continued fractions and certified irrationality constants;
//! - [`averaging`]: the average of a potential along a closed straight-line orbit
//!   as a function of the transverse shift, its periodicities and derivative bounds;
//! - [`measures`]: actions of orbit measures, the necessary condition for a
//!   periodic orbit to be minimizing (and the resulting C⁴ obstruction), and a
//!   discretized linear program over closed measures;
//! - [`dynamics`] and [`weak_kam`]: Euler–Lagrange integration, monodromy,
//!   penalty potentials, a discrete Lax–Oleinik solver, Aubry set estimates and
//!   a homoclinic-excursion margin.

pub mod averaging;
pub mod diophantine;
pub mod dynamics;
mod error;
pub mod lp;
pub mod measures;
pub mod potential_file;
pub mod torus;
pub mod weak_kam;

pub use error::{Error, Result};

pub use averaging::{average_gap, cascade_lower_bound, derivative_sup, OrbitAverage};
pub use diophantine::{certified_c0, convergents, velocity_gap_bound, DiophantineCertificate};
pub use measures::{necessary_condition, ObstructionCertificate, Verdict};
pub use torus::{
    DirectionSpec, FourierPotential, LagrangianSpec, QuadraticIrrational, RationalOrbit,
};
