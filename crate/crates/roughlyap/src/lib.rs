//! Rough-path numerics for strong Lyapunov functions.
//!
//! The crate builds, measures and integrates against discrete rough paths
//! (fractional Brownian drivers with their canonical level-2 lifts), certifies
//! strong Lyapunov conditions for concrete systems, estimates random pullback
//! attractors, and trains Lyapunov networks against the same condition.
//!
//! The narrative guide lives in `book/`; its chapters are compiled as doctests
//! through the [`guide`] module, so the examples there are checked on every
//! test run.

pub mod attractor;
pub mod domain;
pub mod error;
pub mod fbm;
pub mod greedy;
pub mod grid;
pub mod guide;
pub mod io;
pub mod lyapnet;
pub mod lyapunov;
pub mod models;
pub mod norms;
pub mod rough;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, PathSample};
pub use norms::NormParams;
pub use rough::RoughPathGrid;
