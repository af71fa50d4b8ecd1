//! Verification laboratory for the two explicit blowup families of the 3D
//! incompressible Navier–Stokes equations.
//!
//! * [`fields`]: closed-form velocity, gradient, stream function, vorticity
//!   and pressure in Cartesian and cylindrical frames.
//! * [`symbolic`]: a small exact computer-algebra core used to certify the
//!   solutions with exactly-zero residuals.
//! * [`checks`]: floating-point residual battery, energy quadrature and
//!   blowup-rate fitting.
//! * [`solver`]: finite-difference solver for the transformed axisymmetric
//!   system, driven as a manufactured-solution convergence harness.
//! * [`harness`]: the orchestration behind the `blowlab` command line tool.

pub mod checks;
pub mod fields;
pub mod harness;
pub mod solver;
pub mod symbolic;
pub mod table;

pub use fields::{CartPoint, CylPoint, Family, FieldSample, Frame, SolutionParams};
