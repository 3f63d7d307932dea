//! Physics-informed neural networks trained on collocation points that are
//! redistributed by a recovery-type (gradient reconstruction) a-posteriori
//! error estimator evaluated on a background triangulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: second-order input jets and a reverse-mode tape.
//! - [`network`]: the tanh MLP, its batched jet/backprop engine and checkpoints.
//! - [`mesh`]: regular diagonal triangulations of rectangles.
//! - [`recovery`]: gradient recovery operators and the element estimator.
//! - [`sampling`]: Sobol, RecAD, residual-PDF and boundary point generators.
//! - [`problems`]: the benchmark PDEs and the Burgers reference grid.
//! - [`training`]: losses, L-BFGS/Adam, the adaptive training loop and metrics.
//! - [`config`]: the JSON run specification consumed by the `rpinn` binary.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod mesh;
pub mod network;
pub mod problems;
pub mod recovery;
pub mod sampling;
pub mod training;

pub use error::{Error, Result};
