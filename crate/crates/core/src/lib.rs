//! Numerical toolkit for quantum walk search on reversible Markov chains.
//!
//! The crate builds chains and marked sets ([`chain`], [`graphs`]), forms
//! interpolated walks ([`interpolate`]), computes hitting times and their
//! extended counterparts ([`spectra`]), evaluates walk evolutions
//! ([`evolve`]) and runs the classical trajectory experiments
//! ([`trajectories`]). The [`cli`] module drives all of it from CSV-emitting
//! experiment configurations.

pub mod chain;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod graphs;
pub mod interpolate;
pub mod linalg;
pub mod rng;
pub mod spectra;
pub mod trajectories;

pub use error::{Error, Result};
