//! Numerical geometry kernel for cmc 1/2 horizontal catenoids in H^2 x R.
//!
//! The crate is organised bottom-up: ambient geometry of H^2 x R
//! ([`geometry`]), the horizontal catenoid family ([`catenoid`]), normal
//! graphs and Fermi coordinates ([`fermi`]), the cross-section spectral
//! theory of the stability operator ([`spectral`]), the linear and
//! nonlinear solvers on a truncated end ([`end_solver`]), and the Dirichlet
//! problem for horizontal cmc graphs ([`graph`]).

pub mod catenoid;
pub mod end_solver;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod fermi;
pub mod numerics;
pub mod spectral;

pub use error::{HcatError, Result};
pub use geometry::{BallPoint, Isometry, TangentVector, UhpPoint};
