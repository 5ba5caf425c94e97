//! Numerical toolkit for extremal domains of the first Dirichlet eigenvalue
//! on surfaces of revolution: eigenvalues, shape derivatives, second
//! variation and Morse index.

pub mod banded;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracles;
pub mod quadrature;
pub mod radial_eig;
pub mod solver2d;
pub mod stability;
pub mod tridiag;
pub mod variation;

pub use error::{Error, Result};
pub use geometry::{BoundaryCircle, ChartKind, DomainKind, RadialDomain, SurfaceName, WarpedSurface};
pub use radial_eig::{solve_lambda1, EigenSolution, Mesh1D};
