//! The training loop and everything around it: rollouts into a replay
//! buffer, reward normalization, multiplier scheduling, metrics, evaluation
//! and checkpoints.

mod buffer;
mod checkpoint;
mod config;
mod eval;
mod metrics;
mod normalizer;
mod trainer;

pub use buffer::{ReplayBuffer, Transition};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{AgentKind, ConfigError, TrainerConfig, UtilityMetric};
pub use eval::{evaluate, EpisodeRecord, EvalReport, EVAL_HEADER};
pub use metrics::{
    compute_swu, read_metrics, MetricsRow, MetricsWriter, WindowStats, METRICS_HEADER,
};
pub use normalizer::{RewardNormalizer, STD_FLOOR};
pub use trainer::{IterationReport, Summary, Trainer};

use crate::baselines::SacAgent;
use crate::diffcore::Tensor;
use crate::envs::{EnvError, EnvSpec};
use crate::rng::Stream;
use crate::seditor::{
    Agent, AgentConfig, AgentError, LagrangeState, SEditorAgent, TrainBatch, UpdateStats,
};
use crate::state::{Persist, StateDict, StateError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint blob holds {found} bytes, manifest requires {expected}")]
    TruncatedBlob { found: u64, expected: u64 },
    #[error("metrics schema: {0}")]
    Schema(String),
    #[error("swu: {0}")]
    Swu(String),
    #[error("{0} iterations aborted on non-finite values (limit {1})")]
    TooManyAborts(u64, u64),
}

/// Any agent the config can name.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyAgent {
    Sac(SacAgent),
    SEditor(SEditorAgent),
}

impl AnyAgent {
    pub fn build<R: rand::Rng + ?Sized>(
        kind: AgentKind,
        spec: &EnvSpec,
        cfg: &AgentConfig,
        actor_width: usize,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        Ok(match kind {
            AgentKind::Sac => AnyAgent::Sac(SacAgent::new(spec, cfg, false, actor_width, rng)?),
            AgentKind::SacLag => AnyAgent::Sac(SacAgent::new(spec, cfg, true, actor_width, rng)?),
            AgentKind::SEditor => AnyAgent::SEditor(SEditorAgent::new(spec, cfg, rng)?),
        })
    }
}

impl Agent for AnyAgent {
    fn act(&self, obs: &Tensor, rng: &mut Stream, explore: bool) -> Result<Tensor, AgentError> {
        match self {
            AnyAgent::Sac(a) => a.act(obs, rng, explore),
            AnyAgent::SEditor(a) => a.act(obs, rng, explore),
        }
    }

    fn update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<UpdateStats, AgentError> {
        match self {
            AnyAgent::Sac(a) => a.update(batch, rng),
            AnyAgent::SEditor(a) => a.update(batch, rng),
        }
    }

    fn lagrange(&self) -> &LagrangeState {
        match self {
            AnyAgent::Sac(a) => a.lagrange(),
            AnyAgent::SEditor(a) => a.lagrange(),
        }
    }

    fn lagrange_mut(&mut self) -> &mut LagrangeState {
        match self {
            AnyAgent::Sac(a) => a.lagrange_mut(),
            AnyAgent::SEditor(a) => a.lagrange_mut(),
        }
    }

    fn alphas(&self) -> (f64, f64) {
        match self {
            AnyAgent::Sac(a) => a.alphas(),
            AnyAgent::SEditor(a) => a.alphas(),
        }
    }
}

impl Persist for AnyAgent {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        match self {
            AnyAgent::Sac(a) => a.save(prefix, out),
            AnyAgent::SEditor(a) => a.save(prefix, out),
        }
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        match self {
            AnyAgent::Sac(a) => a.load(prefix, src),
            AnyAgent::SEditor(a) => a.load(prefix, src),
        }
    }
}
