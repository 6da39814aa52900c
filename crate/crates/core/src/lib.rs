//! Numerical laboratory for Dirac-type Lax operators of the focusing matrix
//! nonlinear Schrodinger hierarchy.
//!
//! The crate provides sampled potentials and spinor fields on uniform grids,
//! the Dirac-type expressions M(Q) and N(Q) with their factorization,
//! conjugation-symmetry, and positivity diagnostics, the unitary gauge
//! family that flattens N(Q) to i d/dx, dense and shooting spectra of the
//! associated operators, the Lax / zero-curvature apparatus of the AKNS
//! system, and a structure-preserving split-step integrator for the matrix
//! NLS flow together with an isospectrality experiment.

pub mod deriv;
pub mod error;
pub mod expm;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod lax;
pub mod nls;
pub mod operators;
pub mod potential;
pub mod solutions;
pub mod spectral;
pub mod spinor;

pub use deriv::DerivativeBackend;
pub use error::{Error, Result};
pub use grid::Grid;
pub use potential::{MatrixPotential, PotentialSpec, ScalarShape};
pub use spinor::{apply_conjugation_j, inner_product, BlockInvolutions, SpinorField};
