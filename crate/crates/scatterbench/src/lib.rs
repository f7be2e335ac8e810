//! A deterministic digital twin of a self-referenced free-space
//! scattering-optics bench, together with the protocols that run on it:
//! interferometric transmission-matrix measurement with phase-conjugate
//! focusing, majorization-ordered coherence transport intervals, and
//! channel-wise optical bilinear (Complex-B) pair features with
//! classification benchmarks.
//!
//! The bench is a wide complex matrix with a signal/reference column
//! split, a square-law camera and a configurable noise chain; every
//! protocol is built from phase-stepped captures of that one physical
//! map. Everything is seeded and reproducible: identical configuration
//! and seed give byte-identical artifacts.
//!
//! Start with [`bench::ScatteringBench`], or run a whole configured
//! study through [`runner::run_experiment`]. The `book/` directory of
//! the repository walks through the concepts chapter by chapter.

pub mod artifacts;
pub mod bench;
pub mod bilinear;
pub mod coherence;
pub mod config;
pub mod error;
pub mod linalg;
pub mod probe;
pub mod rng;
pub mod runner;
pub mod tm;
pub mod trace;

pub use error::{Error, Result};
