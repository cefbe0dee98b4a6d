//! Pseudospectral toolkit for the N-coupled focusing cubic nonlinear
//! Schrödinger system on a periodic 2D box: ground states, sharp
//! Gagliardo-Nirenberg constants, linearized spectra, symmetry transforms,
//! split-step time evolution, and modulation-parameter tracking of
//! near-soliton and blowup trajectories.
//!
//! Start with the runnable examples (`cargo run --release --example
//! ground_state`, `gn_sweep`, `spectrum`, ...); each one exercises a major
//! capability end to end. The `nlss` binary wraps the same scenarios behind
//! a config file for scripted runs.

pub mod cutoff;
pub mod error;
pub mod field;
pub mod grid;
pub mod linop;
pub mod diagnostics;
pub mod dynamics;
pub mod modulation;
pub mod functionals;
pub mod ground;
pub mod nonlin;
pub mod oracle;
pub mod scenario;
pub mod snapshot;
pub mod symmetry;

pub use error::{NlssError, Result};
