//! Hybrid quantum-classical binary classifiers on an exact statevector
//! simulator.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: dense statevector simulation and a Kronecker-product oracle
//! - [`circuit`]: parameterised circuit IR, preset builders, text format
//! - [`gradients`]: parameter-shift Jacobians and a finite-difference oracle
//! - [`neuralnet`]: small dense networks with backpropagation
//! - [`model`]: the five classifier kinds behind one predict/gradient API
//! - [`data`]: synthetic data, CSV loading, scaling and splitting
//! - [`trainer`]: Adam and the epoch loop

pub mod circuit;
pub mod data;
pub mod error;
pub mod gradients;
pub mod model;
pub mod neuralnet;
pub mod qsim;
pub mod trainer;

pub use error::{Error, Result};
