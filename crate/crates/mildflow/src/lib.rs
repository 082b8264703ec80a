//! mildflow: a pseudo-spectral solver for the simplified Ericksen-Leslie
//! liquid-crystal system on the periodic torus, built around the mild
//! (Duhamel) formulation, plus the blow-up diagnostics attached to it.
//!
//! The system couples the incompressible Navier-Stokes equations with a
//! transported harmonic-map heat flow for the unit director d:
//!
//! ```text
//! u_t + (u.grad) u - Lap u + grad p = -div(grad d (.) grad d),  div u = 0,
//! d_t + (u.grad) d = Lap d + |grad d|^2 d.
//! ```
//!
//! Rather than time-stepping the differential form, the solver iterates the
//! Duhamel integral identities to their fixed point on short windows and
//! marches by restarts; every linear operator (heat semigroup, Leray
//! projection, derivatives) is an exact Fourier multiplier.

// the numeric kernels index several arrays in lockstep, and the negated
// float comparisons in parameter guards reject NaN
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_is_multiple_of
)]

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod nonlinearity;
pub mod phi;
pub mod rescale;
pub mod run;
pub mod scenario;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldRole, StatePair, VectorField};
pub use grid::{make_grid, SpectralGrid};
pub use solver::{
    duhamel_map, existence_time_estimate, march, picard_solve, MarchOutcome, PicardRecord,
    SolverConfig, SolverConstants, Trajectory,
};
