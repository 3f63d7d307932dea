//! Scalar differentiation engine.
//!
//! Two pieces compose here:
//!
//! * [`Jet2`] is a forward-mode number carrying a value, its gradient and its
//!   Hessian with respect to up to [`MAX_DIM`] input coordinates.
//! * [`Var`] is a reverse-mode variable recorded on a [`Tape`].
//!
//! Both implement [`Real`], so `Jet2<Var>` gives input Hessians whose entries
//! can themselves be differentiated with respect to network parameters. That
//! nesting is what [`grad_params`] relies on.
//!
//! The batched network engine in [`crate::network::batch`] is a hand-derived
//! fast path for the same quantities; the generic route here is the reference
//! it is tested against.

mod jet;
mod real;
mod tape;

pub use jet::{channel_count, eval_jet, packed_index, Jet2, MAX_DIM};
pub use real::{tanh, Real};
pub use tape::{grad_params, Adjoints, Tape, Var};

use thiserror::Error;

/// Primitive operations supported inside a differentiated function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Exp,
    Sin,
    Cos,
    Cosh,
    Sinh,
    Powi,
}

/// First failure observed while evaluating a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    DivisionByZero,
    NonFinite(Primitive),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("division by zero inside differentiated function")]
    DivisionByZero,
    #[error("non-finite value produced by {0:?}")]
    NonFinite(Primitive),
    #[error("non-finite derivative in evaluated jet")]
    NonFiniteDerivative,
    #[error("input dimension {0} not supported (1..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("loss is not finite ({0})")]
    NonFiniteLoss(f64),
    #[error("gradient entry {index} is not finite ({value})")]
    NonFiniteGradient { index: usize, value: f64 },
}

impl From<Fault> for AdError {
    fn from(f: Fault) -> Self {
        match f {
            Fault::DivisionByZero => AdError::DivisionByZero,
            Fault::NonFinite(p) => AdError::NonFinite(p),
        }
    }
}
