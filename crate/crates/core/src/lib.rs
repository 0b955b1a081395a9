//! Evaluation library for the Green tensor of the nonstationary Stokes
//! system in the half-space: closed-form scalar kernels, the Oseen and
//! Golovkin tensors, the Green tensor and its pressure tensor, restricted
//! variants, the Helmholtz projection, pointwise-estimate envelopes with
//! empirical-constant sweeps, desk-scale Stokes/Navier-Stokes evolution,
//! and an independent finite-difference oracle.

pub mod error;
pub mod special;
pub mod rng;
pub mod quadrature;
pub mod scalar_kernels;
pub mod free_space_tensors;
pub mod boundary_layers;
pub(crate) mod interp;

pub use error::{Error, Result};
