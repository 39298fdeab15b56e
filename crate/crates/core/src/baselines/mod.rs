//! Single-policy baselines on the shared critics: SAC and SAC with a
//! Lagrangian multiplier on the constraint value.

use crate::diffcore::{MlpGrads, Tensor};
use crate::envs::EnvSpec;
use crate::rng::Stream;
use crate::seditor::{
    entropy_estimate, Actor, Agent, AgentConfig, AgentError, CriticBatch, CriticLosses, Critics,
    EntropyTuner, LagrangeState, Objective, Stage, TrainBatch, UpdateStats,
};
use crate::state::{Persist, StateDict, StateError};

/// One actor maximizing `Q + λ Q_c + α H`; with `lagrangian = false`, `λ ≡ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SacAgent {
    pub actor: Actor,
    pub critics: Critics,
    pub lagrange: LagrangeState,
    pub tuner: EntropyTuner,
    pub width_multiplier: usize,
    pub lr: f64,
}

impl SacAgent {
    pub fn new<R: rand::Rng + ?Sized>(
        spec: &EnvSpec,
        cfg: &AgentConfig,
        lagrangian: bool,
        width_multiplier: usize,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        assert!(width_multiplier >= 1, "actor width multiplier must be positive");
        let head = cfg.policy_head(spec)?;
        let (o, m) = (spec.obs_dim, spec.act_dim);
        let actor_hidden: Vec<usize> = cfg.hidden.iter().map(|h| h * width_multiplier).collect();
        let actor = Actor::new(o, &actor_hidden, cfg.activation, head, rng);
        let critics = Critics::new(o, m, &cfg.hidden, cfg.activation, cfg.twin_q, cfg.tau, rng);
        let lagrange = if lagrangian {
            LagrangeState::new(cfg.initial_lambda, cfg.lr_lambda, cfg.lambda_rule)
        } else {
            LagrangeState::disabled()
        };
        Ok(Self {
            actor,
            critics,
            lagrange,
            tuner: EntropyTuner::new(cfg.init_log_alpha, cfg.entropy_target, m, cfg.lr_alpha),
            width_multiplier,
            lr: cfg.lr,
        })
    }

    pub fn lagrangian(&self) -> bool {
        self.lagrange.enabled
    }

    /// `E[Q(s,a) + λ Q_c(s,a) + α H(π)]` and its gradient in the actor parameters.
    pub fn actor_gradient(&self, obs: &Tensor, noise: &Tensor) -> Result<(Objective, MlpGrads), AgentError> {
        let b = obs.rows();
        let inv_b = 1.0 / b as f64;
        let pass = self.actor.forward(obs, noise)?;
        let a = pass.action();
        let (q, mut d_a) = self.critics.q.value_and_action_grad(obs, a, &vec![inv_b; b])?;
        let lambda = self.lagrange.lambda();
        let mut value = mean(&q);
        if self.lagrange.enabled {
            let (qc, dqc) = self
                .critics
                .qc
                .value_and_action_grad(obs, a, &vec![lambda * inv_b; b])?;
            d_a.add_assign(&dqc)?;
            value += lambda * mean(&qc);
        }
        let alpha = self.tuner.alpha_um();
        let (ent, d_ent) = self.actor.entropy(&pass)?;
        let d_ent = d_ent.scale(alpha * inv_b);
        let (grads, _) = self.actor.backward(&pass, &d_a, Some(&d_ent))?;
        value += alpha * mean(&ent);
        Ok((
            Objective {
                value,
                entropy_estimate: entropy_estimate(&pass.sample.log_prob),
            },
            grads,
        ))
    }

    pub fn actor_update(&mut self, obs: &Tensor, rng: &mut Stream) -> Result<Objective, AgentError> {
        let noise = self.actor.head.noise(rng, obs.rows());
        let (obj, grads) = self.actor_gradient(obs, &noise)?;
        if !obj.value.is_finite() || !obj.entropy_estimate.is_finite() || !grads.is_finite() {
            return Err(AgentError::NonFinite("actor objective".into()));
        }
        self.actor.ascend(&grads, self.lr)?;
        Ok(obj)
    }

    pub fn critic_update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<CriticLosses, AgentError> {
        let noise = self.actor.head.noise(rng, batch.len());
        let next_act = self.actor.sample(&batch.next_obs, &noise)?.action;
        self.critics.update(
            &CriticBatch {
                obs: &batch.obs,
                act: &batch.actions,
                next_obs: &batch.next_obs,
                next_act: &next_act,
                r: &batch.r,
                r_c: &batch.r_c,
                discount: &batch.discount,
            },
            self.lr,
        )
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl Agent for SacAgent {
    fn act(&self, obs: &Tensor, rng: &mut Stream, explore: bool) -> Result<Tensor, AgentError> {
        if explore {
            let noise = self.actor.head.noise(rng, obs.rows());
            Ok(self.actor.sample(obs, &noise)?.action)
        } else {
            self.actor.mode(obs)
        }
    }

    fn update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<UpdateStats, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch("agent update"));
        }
        let critic = self.critic_update(batch, rng)?;
        let obj = self.actor_update(&batch.obs, rng)?;
        self.tuner.step(obj.entropy_estimate, None)?;
        self.critics.sync_targets();
        Ok(UpdateStats {
            critic,
            um_objective: obj.value,
            se_objective: 0.0,
            entropy_um: obj.entropy_estimate,
            entropy_se: 0.0,
            stages: vec![Stage::Critic, Stage::Actor, Stage::Entropy, Stage::TargetSync],
        })
    }

    fn lagrange(&self) -> &LagrangeState {
        &self.lagrange
    }

    fn lagrange_mut(&mut self) -> &mut LagrangeState {
        &mut self.lagrange
    }

    fn alphas(&self) -> (f64, f64) {
        (self.tuner.alpha_um(), 0.0)
    }
}

impl Persist for SacAgent {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        self.actor.save(&format!("{prefix}.actor"), out);
        self.critics.save(&format!("{prefix}.critics"), out);
        self.lagrange.save(&format!("{prefix}.lagrange"), out);
        self.tuner.save(&format!("{prefix}.tuner"), out);
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        self.actor.load(&format!("{prefix}.actor"), src)?;
        self.critics.load(&format!("{prefix}.critics"), src)?;
        self.lagrange.load(&format!("{prefix}.lagrange"), src)?;
        self.tuner.load(&format!("{prefix}.tuner"), src)
    }
}
