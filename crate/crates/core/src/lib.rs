//! Numerical engine for the generalized Schrödinger-Langevin equation in one
//! dimension.
//!
//! The crate propagates a wavefunction under friction and noise potentials
//! built from a (possibly nonlinear) system-bath coupling `f(x)`, generates
//! the bath noise that drives it, analyses the result in the Bohmian
//! (polar) picture and provides a classical Langevin / generalized Langevin
//! ensemble used as an independent oracle.
//!
//! Everything here is pure computation on owned buffers: no IO, no threads.
//! The crate builds without `std` (it needs `alloc`); disable the default
//! `std` feature to get libm-backed float math.
#![cfg_attr(not(feature = "std"), no_std)]
#![cfg_attr(not(feature = "std"), allow(unused_imports))]

extern crate alloc;

pub mod bath;
pub mod bohmian;
pub mod classical;
pub mod coupling;
pub mod error;
pub mod evolver;
pub mod fft;
pub mod field;
pub mod potentials;
pub mod rng;
pub mod spline;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid, ObservableSet, PhysicalParams, RealField, WaveFunction};
pub use num_complex::Complex64;
