//! Bounded stochastic policy heads.
//!
//! Beta heads sample through the inverse CDF of the regularized incomplete
//! beta function and differentiate the draw implicitly; the squashed Gaussian
//! is the `tanh` alternative behind the same batched interface.

mod heads;
mod policy;
pub mod special;

pub use heads::{
    beta_draw, ActionBox, BetaDraw, BetaHead, GaussianDraw, SquashedGaussianHead, CDF_FD_STEP,
    LOG_STD_MAX, LOG_STD_MIN, U_CLAMP,
};
pub use policy::{HeadKind, HeadSample, PolicyHead};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DistError {
    #[error("action {value} lies outside the box [-{bound}, {bound}]")]
    OutsideBox { value: f64, bound: f64 },
    #[error("expected {expected} columns, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
}
