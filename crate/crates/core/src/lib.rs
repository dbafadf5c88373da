//! Exact-state simulator for the lattice Schwinger model with an
//! information-lattice toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: magnetization-sector bases, state vectors, Pauli strings and
//!   reduced density matrices of contiguous windows.
//! * [`sparse`]: compressed sparse Hermitian operators.
//! * [`schwinger`]: the spin-chain Hamiltonian, external charges and
//!   model observables.
//! * [`spectral`]: Lanczos eigensolver, deflation and state classification.
//! * [`dynamics`]: Krylov propagation under piecewise-constant Hamiltonians.
//! * [`info_lattice`]: local information `i(n, l)` and its scale profiles.
//! * [`protocols`]: meson scattering and electric-string quench runs.
//! * [`io`]: configuration files, CSV tables, state snapshots and manifests.
//!
//! Sites are labelled `1..=N` in every public API. Configurations are stored
//! as bit strings with site 1 in the most significant bit; a set bit is a
//! spin up (`sigma^z = +1`).

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod hilbert;
pub mod info_lattice;
pub mod io;
pub mod protocols;
pub mod schwinger;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;

/// Complex scalar used for all amplitudes and operator entries.
pub type C64 = num_complex::Complex64;
