//! The two-policy agent.
//!
//! A utility maximizer proposes `â`, a safety editor conditioned on `s ⊕ â`
//! emits `Δa`, and the executed action is `a = h(â, Δa)`. Critics learn the
//! utility and constraint values by one-step TD; the editor trades the
//! constraint value (weighted by the multiplier `λ`) against its distance from
//! the proposal.

mod actor;
mod agent;
mod critics;
mod edit;
mod entropy;
mod lagrange;

pub use actor::{Actor, ActorPass};
pub use agent::{Objective, SEditorAgent};
pub use critics::{td_target, CriticBatch, CriticLosses, Critics, QEnsemble};
pub use edit::{apply_edit, h, DistanceMode, EditMode, Edited};
pub use entropy::{entropy_estimate, EntropyTuner};
pub use lagrange::{lambda_estimate, BudgetSpec, LagrangeState, LambdaRule};

use crate::diffcore::{Activation, DiffError, Tensor};
use crate::dists::{ActionBox, DistError, HeadKind, PolicyHead};
use crate::envs::EnvSpec;
use crate::rng::Stream;
use crate::state::{Persist, StateDict, StateError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty batch for {0}")]
    EmptyBatch(&'static str),
}

/// Network and optimizer settings shared by every agent kind.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: HeadKind,
    pub lr: f64,
    pub tau: f64,
    pub twin_q: bool,
    pub initial_lambda: f64,
    pub lr_lambda: f64,
    pub lambda_rule: LambdaRule,
    pub init_log_alpha: f64,
    pub entropy_target: (f64, f64),
    pub lr_alpha: f64,
    pub edit_mode: EditMode,
    pub distance_mode: DistanceMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            head: HeadKind::Beta {
                min_concentration: 1.0,
            },
            lr: 3e-4,
            tau: 5e-3,
            twin_q: false,
            initial_lambda: 1.0,
            lr_lambda: 0.01,
            lambda_rule: LambdaRule::Exact,
            init_log_alpha: 0.0,
            entropy_target: (-1.609, -1.609),
            lr_alpha: 3e-4,
            edit_mode: EditMode::Additive,
            distance_mode: DistanceMode::Hinge,
        }
    }
}

impl AgentConfig {
    pub fn policy_head(&self, spec: &EnvSpec) -> Result<PolicyHead, AgentError> {
        Ok(PolicyHead::new(
            self.head,
            ActionBox::new(spec.action_bound, spec.act_dim)?,
        ))
    }
}

/// A training mini-batch with rewards already normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainBatch {
    pub obs: Tensor,
    pub actions: Tensor,
    pub next_obs: Tensor,
    pub r: Vec<f64>,
    pub r_c: Vec<f64>,
    /// Bootstrap factor: `γ^n`, or `0` when the window ends in a true terminal.
    pub discount: Vec<f64>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// The ordered sub-steps of one agent update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Lambda,
    Critic,
    UtilityActor,
    SafetyActor,
    Actor,
    Entropy,
    TargetSync,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub critic: CriticLosses,
    pub um_objective: f64,
    pub se_objective: f64,
    pub entropy_um: f64,
    pub entropy_se: f64,
    pub stages: Vec<Stage>,
}

/// What the training loop needs from an agent.
pub trait Agent: Persist + Clone {
    /// Actions for a batch of observations; `explore = false` takes the mode.
    fn act(&self, obs: &Tensor, rng: &mut Stream, explore: bool) -> Result<Tensor, AgentError>;
    /// One critic, actor, temperature and target step on `batch`.
    fn update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<UpdateStats, AgentError>;
    fn lagrange(&self) -> &LagrangeState;
    fn lagrange_mut(&mut self) -> &mut LagrangeState;
    /// `(α_um, α_se)`; single-policy agents report their one temperature first and 0.
    fn alphas(&self) -> (f64, f64);
}

impl Persist for LagrangeState {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        out.put_scalar(format!("{prefix}.lambda0"), self.lambda0);
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        let v = src.get_scalar(&format!("{prefix}.lambda0"))?;
        if !v.is_finite() {
            return Err(StateError::Invalid(format!("{prefix}.lambda0")));
        }
        self.lambda0 = v;
        Ok(())
    }
}

impl Persist for EntropyTuner {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        out.put_vec(
            format!("{prefix}.log_alpha"),
            vec![self.log_alpha_um, self.log_alpha_se],
        );
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        let v = src.get_vec(&format!("{prefix}.log_alpha"), 2)?;
        self.log_alpha_um = v[0];
        self.log_alpha_se = v[1];
        Ok(())
    }
}
