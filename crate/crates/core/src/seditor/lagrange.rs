use crate::dists::special::{sigmoid, softplus, softplus_inv};

use super::AgentError;

/// Which update the multiplier logit follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaRule {
    /// `λ₀ ← λ₀ − lr·σ(λ₀)·Λ̂`, the gradient of `softplus(λ₀)·Λ̂`.
    Exact,
    /// `λ₀ ← λ₀ − lr·Λ̂`.
    Simplified,
}

impl std::str::FromStr for LambdaRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(LambdaRule::Exact),
            "simplified" => Ok(LambdaRule::Simplified),
            o => Err(format!("unknown lambda rule `{o}` (exact | simplified)")),
        }
    }
}

impl LambdaRule {
    pub fn name(self) -> &'static str {
        match self {
            LambdaRule::Exact => "exact",
            LambdaRule::Simplified => "simplified",
        }
    }
}

/// Per-step violation budget and discount.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetSpec {
    pub c: f64,
    pub gamma: f64,
}

impl BudgetSpec {
    pub fn new(c: f64, gamma: f64) -> Result<Self, String> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(format!("budget c must be finite and >= 0, got {c}"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(format!("gamma must lie in [0, 1), got {gamma}"));
        }
        Ok(Self { c, gamma })
    }

    /// Discounted budget `C = c / (1 − γ)`.
    pub fn discounted(&self) -> f64 {
        self.c / (1.0 - self.gamma)
    }
}

/// The multiplier `λ = softplus(λ₀)`. A disabled state reads as `λ = 0`
/// and ignores steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagrangeState {
    pub lambda0: f64,
    pub lr: f64,
    pub rule: LambdaRule,
    pub enabled: bool,
}

impl LagrangeState {
    pub fn new(initial_lambda: f64, lr: f64, rule: LambdaRule) -> Self {
        Self {
            lambda0: softplus_inv(initial_lambda),
            lr,
            rule,
            enabled: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            lambda0: 0.0,
            lr: 0.0,
            rule: LambdaRule::Exact,
            enabled: false,
        }
    }

    pub fn lambda(&self) -> f64 {
        if self.enabled {
            softplus(self.lambda0)
        } else {
            0.0
        }
    }

    /// `∂(softplus(λ₀)·Λ̂)/∂λ₀` under the configured rule.
    pub fn gradient(&self, estimate: f64) -> f64 {
        match self.rule {
            LambdaRule::Exact => sigmoid(self.lambda0) * estimate,
            LambdaRule::Simplified => estimate,
        }
    }

    pub fn step(&mut self, estimate: f64) -> Result<(), AgentError> {
        if !estimate.is_finite() {
            return Err(AgentError::NonFinite("lambda estimate".into()));
        }
        if self.enabled {
            self.lambda0 -= self.lr * self.gradient(estimate);
        }
        Ok(())
    }
}

/// `Λ̂ = mean(r_c) + c` over a rollout batch of raw constraint rewards.
pub fn lambda_estimate(rc_raw: &[f64], c: f64) -> Result<f64, AgentError> {
    if rc_raw.is_empty() {
        return Err(AgentError::EmptyBatch("lambda estimate"));
    }
    Ok(rc_raw.iter().sum::<f64>() / rc_raw.len() as f64 + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_examples() {
        let e = lambda_estimate(&[-1.0, 0.0, 0.0, 0.0], 5e-4).unwrap();
        assert!((e + 0.2495).abs() < 1e-15);
        assert_eq!(lambda_estimate(&[0.0; 8], 5e-4).unwrap(), 5e-4);
        assert_eq!(lambda_estimate(&[0.0; 8], 0.0).unwrap(), 0.0);
        assert!(matches!(lambda_estimate(&[], 0.1), Err(AgentError::EmptyBatch(_))));
    }

    #[test]
    fn step_examples() {
        let mut l = LagrangeState::new(1.0, 0.01, LambdaRule::Exact);
        assert!((l.lambda0 - 0.541_324_854_612_918_1).abs() < 1e-12);
        assert!((l.lambda() - 1.0).abs() < 1e-12);
        l.lambda0 = 0.0;
        l.step(-0.2495).unwrap();
        assert!((l.lambda0 - 0.0012475).abs() < 1e-15);
        let before = l.lambda0;
        l.step(0.0).unwrap();
        assert_eq!(l.lambda0, before);
        assert!(l.step(f64::NAN).is_err());
    }

    #[test]
    fn simplified_rule_drops_chain_factor() {
        let mut l = LagrangeState::new(1.0, 0.01, LambdaRule::Simplified);
        l.lambda0 = 0.0;
        l.step(-0.2495).unwrap();
        assert!((l.lambda0 - 0.002495).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        for &l0 in &[-3.0, -0.2, 0.0, 0.54, 2.5] {
            let l = LagrangeState {
                lambda0: l0,
                ..LagrangeState::new(1.0, 0.01, LambdaRule::Exact)
            };
            let est = -0.37;
            let h = 1e-6;
            let num = (softplus(l0 + h) * est - softplus(l0 - h) * est) / (2.0 * h);
            assert!(((l.gradient(est) - num) / num).abs() < 1e-8);
        }
    }

    #[test]
    fn disabled_state_is_inert() {
        let mut l = LagrangeState::disabled();
        l.step(-1.0).unwrap();
        assert_eq!(l.lambda(), 0.0);
        assert_eq!(l.lambda0, 0.0);
    }

    #[test]
    fn budget() {
        let b = BudgetSpec::new(5e-3, 0.99).unwrap();
        assert!((b.discounted() - 0.5).abs() < 1e-12);
        assert!(BudgetSpec::new(-1.0, 0.9).is_err());
        assert!(BudgetSpec::new(0.1, 1.0).is_err());
    }
}
