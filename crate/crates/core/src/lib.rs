//! Spectral-gap certification for spin-3/2 AKLT models on hexagonal-chain
//! subsystems: projectors, lattices, magnetization sectors, sparse
//! eigensolvers and the finite-size criterion arithmetic.

pub mod basis;
pub mod criterion;
pub mod eigensolve;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod lattice;
pub mod spin;

pub use error::{Error, Result};

/// Total spin of the AKLT edge projector for spin 3/2.
pub const AKLT_TOTAL_SPIN: u32 = 3;
