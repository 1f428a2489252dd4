//! Phase theory of semi-sectorial matrices.
//!
//! * [`numerics`]: dense complex kernels and the shared tolerance policy.
//! * [`sectorial`]: classification and phase extraction.
//! * [`calculus`]: pseudoinverse, cone, compression, Schur complement and
//!   product phase relations, and the small phase test.
//! * [`essential`]: essential phases by diagonal scaling and bisection.
//! * [`graphs`]: digraph Laplacians and their essential phase.
//! * [`cli`]: the `phasekit` binary.
//! * [`verify`]: seeded property suites over [`random`] instances.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod essential;
pub mod graphs;
pub mod matrix_io;
pub mod numerics;
pub mod random;
pub mod sectorial;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Tolerances};
