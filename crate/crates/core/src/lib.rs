//! Numerical solver and verification harness for the simplified
//! Ericksen-Leslie system: incompressible Navier-Stokes flow coupled to the
//! harmonic-map heat flow of a unit director field, on a box with Dirichlet
//! data.
//!
//! Solutions are constructed by global-in-time Picard sweeps: every sweep
//! freezes the nonlinear terms at the previous iterate and solves one linear
//! Stokes problem (projection method) and one linear heat problem (with
//! harmonic lifting of the director's boundary data). Contraction of the
//! sweeps is monitored through discrete surrogates of the trajectory norms.

pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod nonlinear;
pub mod norms;
pub mod ops;
pub mod parabolic;
pub mod picard;
pub mod runner;
pub mod scenario;
pub mod stokes;

pub use error::{Error, Result};
pub use field::{GridSpec, ScalarField, StateSnapshot, VectorField};
pub use linalg::EllipticSolveOptions;
pub use norms::{NormConfig, NormReport};
pub use picard::{PicardTrace, SolveConfig, SolveMode, Trajectory};
