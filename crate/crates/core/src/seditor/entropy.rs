use super::AgentError;

/// Dual temperature control for the two policies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyTuner {
    pub log_alpha_um: f64,
    pub log_alpha_se: f64,
    /// Targets in nats for the whole action, i.e. per-dimension target × M.
    pub target_um: f64,
    pub target_se: f64,
    pub lr: f64,
}

impl EntropyTuner {
    pub fn new(init_log_alpha: f64, target_per_dim: (f64, f64), act_dim: usize, lr: f64) -> Self {
        let m = act_dim as f64;
        Self {
            log_alpha_um: init_log_alpha,
            log_alpha_se: init_log_alpha,
            target_um: target_per_dim.0 * m,
            target_se: target_per_dim.1 * m,
            lr,
        }
    }

    pub fn alpha_um(&self) -> f64 {
        self.log_alpha_um.exp()
    }

    pub fn alpha_se(&self) -> f64 {
        self.log_alpha_se.exp()
    }

    /// `∂L/∂log α` for `L = log α · (H − target)`.
    pub fn gradient(entropy: f64, target: f64) -> f64 {
        entropy - target
    }

    /// One dual step per policy from entropy estimates `−mean log π`.
    pub fn step(&mut self, entropy_um: f64, entropy_se: Option<f64>) -> Result<(), AgentError> {
        if !entropy_um.is_finite() || entropy_se.is_some_and(|e| !e.is_finite()) {
            return Err(AgentError::NonFinite("entropy estimate".into()));
        }
        self.log_alpha_um -= self.lr * Self::gradient(entropy_um, self.target_um);
        if let Some(e) = entropy_se {
            self.log_alpha_se -= self.lr * Self::gradient(e, self.target_se);
        }
        Ok(())
    }
}

/// `−mean log π` over a batch of fresh samples.
pub fn entropy_estimate(log_probs: &[f64]) -> f64 {
    -log_probs.iter().sum::<f64>() / log_probs.len() as f64
}
