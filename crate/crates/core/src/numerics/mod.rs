//! Uniform grids, sampled fields, interpolation, and the linear algebra and
//! ODE integration shared by the other modules.

mod field;
mod grid;
pub mod ode;
mod tridiag;

pub use field::Field;
pub(crate) use field::{radial_faces, radial_volumes};
pub use grid::{Axis, GeometryMode, Grid, Point};
pub use tridiag::{solve_tridiagonal, Tridiagonal, TridiagonalLu};
