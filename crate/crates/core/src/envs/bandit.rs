use super::{clip_action, CmdpEnv, EnvError, EnvSpec, StepResult};

/// Actions above this level violate the constraint; the safe set is closed.
pub const UNSAFE_ABOVE: f64 = 0.5;

/// Single-step constrained bandit: `r = a`, `r_c = −1[a > 0.5]`.
///
/// The constrained optimum under a small violation budget sits at the
/// boundary action `a = 0.5`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BanditEnv {
    steps: u64,
}

impl BanditEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

impl CmdpEnv for BanditEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            obs_dim: 1,
            act_dim: 1,
            action_bound: 1.0,
            horizon: 1,
        }
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        vec![0.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        let a = clip_action(action, 1, 1.0)?[0];
        self.steps += 1;
        Ok(StepResult {
            obs: vec![0.0],
            r: a,
            r_c: if a > UNSAFE_ABOVE { -1.0 } else { 0.0 },
            terminal: true,
            timeout: false,
            success: false,
        })
    }

    fn observe(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn save_state(&self) -> Vec<f64> {
        vec![self.steps as f64]
    }

    fn load_state(&mut self, state: &[f64]) -> Result<(), EnvError> {
        match state {
            [s] if *s >= 0.0 => {
                self.steps = *s as u64;
                Ok(())
            }
            _ => Err(EnvError::BadState("bandit expects one step counter".into())),
        }
    }
}
