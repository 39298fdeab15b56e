//! Constrained MDP environments with a utility reward `r` and a constraint
//! reward `r_c ≤ 0`, plus batched stepping with automatic resets.

mod bandit;
mod batch;
mod pointnav;

pub use bandit::BanditEnv;
pub use batch::BatchedEnv;
pub use pointnav::{Hazard, PointNavEnv, PointNavParams, PointNavState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_bound: f64,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    /// Observation after the step (the terminal observation when the episode ended).
    pub obs: Vec<f64>,
    pub r: f64,
    pub r_c: f64,
    pub terminal: bool,
    pub timeout: bool,
    pub success: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminal || self.timeout
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("expected an action of dimension {expected}, got {got}")]
    ActionDim { expected: usize, got: usize },
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("non-finite action component")]
    NonFiniteAction,
    #[error("saved environment state is malformed: {0}")]
    BadState(String),
    #[error("invalid environment parameter: {0}")]
    InvalidParameter(String),
}

/// The environment contract.
pub trait CmdpEnv {
    fn spec(&self) -> EnvSpec;
    /// Deterministic in `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError>;
    fn observe(&self) -> Vec<f64>;
    /// Flat snapshot of the dynamic state, for checkpoints.
    fn save_state(&self) -> Vec<f64>;
    fn load_state(&mut self, state: &[f64]) -> Result<(), EnvError>;
}

/// Either of the built-in environments.
#[derive(Clone, Debug, PartialEq)]
pub enum Env {
    Bandit(BanditEnv),
    PointNav(PointNavEnv),
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvConfig {
    Bandit,
    PointNav(PointNavParams),
}

impl EnvConfig {
    pub fn build(&self) -> Env {
        match self {
            EnvConfig::Bandit => Env::Bandit(BanditEnv::new()),
            EnvConfig::PointNav(p) => Env::PointNav(PointNavEnv::new(p.clone())),
        }
    }

    pub fn spec(&self) -> EnvSpec {
        self.build().spec()
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::Bandit => "bandit",
            EnvConfig::PointNav(_) => "pointnav",
        }
    }
}

impl CmdpEnv for Env {
    fn spec(&self) -> EnvSpec {
        match self {
            Env::Bandit(e) => e.spec(),
            Env::PointNav(e) => e.spec(),
        }
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        match self {
            Env::Bandit(e) => e.reset(seed),
            Env::PointNav(e) => e.reset(seed),
        }
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        match self {
            Env::Bandit(e) => e.step(action),
            Env::PointNav(e) => e.step(action),
        }
    }

    fn observe(&self) -> Vec<f64> {
        match self {
            Env::Bandit(e) => e.observe(),
            Env::PointNav(e) => e.observe(),
        }
    }

    fn save_state(&self) -> Vec<f64> {
        match self {
            Env::Bandit(e) => e.save_state(),
            Env::PointNav(e) => e.save_state(),
        }
    }

    fn load_state(&mut self, state: &[f64]) -> Result<(), EnvError> {
        match self {
            Env::Bandit(e) => e.load_state(state),
            Env::PointNav(e) => e.load_state(state),
        }
    }
}

/// Validates dimension and finiteness, then clips into `[−bound, bound]`.
pub(crate) fn clip_action(action: &[f64], dims: usize, bound: f64) -> Result<Vec<f64>, EnvError> {
    if action.len() != dims {
        return Err(EnvError::ActionDim {
            expected: dims,
            got: action.len(),
        });
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(EnvError::NonFiniteAction);
    }
    Ok(action.iter().map(|a| a.clamp(-bound, bound)).collect())
}
