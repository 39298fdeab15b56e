//! Dense tensors, feed-forward networks with hand-written reverse passes,
//! the Adam optimizer, and a central-difference gradient oracle.

mod adam;
mod mlp;
mod tensor;

pub use adam::AdamState;
pub use mlp::{Activation, Layer, LayerGrad, Mlp, MlpCache, MlpGrads};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("{context}: expected shape {expected:?}, got {got:?}")]
    Shape {
        context: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("layer {layer} {what}: expected {expected:?}, got {got:?}")]
    Layer {
        layer: usize,
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("forward cache is stale (cached generation {cached}, network at {current})")]
    StaleCache { cached: u64, current: u64 },
    #[error("forward cache was produced by a network of a different shape")]
    CacheMismatch,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("network has no layers")]
    Empty,
}

/// Central-difference gradient `(f(x+eps) − f(x−eps)) / 2eps` per coordinate.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], eps: f64) -> Result<Vec<f64>, DiffError>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(eps > 0.0, "finite difference step must be positive");
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let up = f(&probe);
        probe[i] = orig - eps;
        let down = f(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(DiffError::NonFinite(format!("finite difference at coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Relative error `|a−b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
