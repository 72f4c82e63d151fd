//! Spin-projector dynamics for massless and massive spin-1/2 particles on the
//! time-diagonal hypercubic lattice whose faces are null hyperplanes.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: tetrahedral step directions, step 4-vectors, lattice
//!   addressing by step counts, null face normals and the volume per point.
//! * [`spin`]: 2-spinors, 2×2 complex matrices, spin projectors, tetrahedral
//!   eigenspinors and charge conjugation.
//! * [`spectral`]: the amplification matrix `A(θ)`, its eigenstructure, the
//!   norm-bound determinant `Φ`, spectrum scans and the dispersion relation.
//! * [`evolution`]: one-step evolution of Weyl, Dirac and Majorana fields.
//! * [`paths`]: exact path enumeration and the bend-counting amplitude rule.
//! * [`propagator`]: the retarded lattice kernel by dynamic programming, path
//!   sums and Fourier extraction, plus continuum-limit studies.
//! * [`cli`]: the `checkerboard` command-line front end.
//!
//! Grid sweeps and lattice steps run on rayon when the `parallel` feature is
//! enabled (the default); every parallel routine also has a sequential path
//! selected through [`Execution`], and both produce identical results.

pub mod cli;
pub mod error;
pub mod evolution;
mod exec;
pub mod geometry;
pub mod paths;
pub mod propagator;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64 as C64;
