use crate::diffcore::{MlpGrads, Tensor};
use crate::envs::EnvSpec;
use crate::rng::Stream;
use crate::state::{Persist, StateDict, StateError};

use super::{
    apply_edit, entropy_estimate, Actor, ActorPass, Agent, AgentConfig, AgentError, CriticBatch,
    Critics, DistanceMode, EditMode, Edited, EntropyTuner, LagrangeState, Stage, TrainBatch,
    UpdateStats,
};

/// Value of a policy objective at one batch, and the entropy estimate
/// `−mean log π` of the draws it used.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub entropy_estimate: f64,
}

/// Utility maximizer, safety editor, shared critics, multiplier and temperatures.
#[derive(Clone, Debug, PartialEq)]
pub struct SEditorAgent {
    pub um: Actor,
    pub se: Actor,
    pub critics: Critics,
    pub lagrange: LagrangeState,
    pub tuner: EntropyTuner,
    pub edit_mode: EditMode,
    pub distance_mode: DistanceMode,
    pub lr: f64,
    obs_dim: usize,
    bound: f64,
}

impl SEditorAgent {
    pub fn new<R: rand::Rng + ?Sized>(
        spec: &EnvSpec,
        cfg: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let head = cfg.policy_head(spec)?;
        let (o, m) = (spec.obs_dim, spec.act_dim);
        let um = Actor::new(o, &cfg.hidden, cfg.activation, head, rng);
        let se = Actor::new(o + m, &cfg.hidden, cfg.activation, head, rng);
        let critics = Critics::new(o, m, &cfg.hidden, cfg.activation, cfg.twin_q, cfg.tau, rng);
        Ok(Self {
            um,
            se,
            critics,
            lagrange: LagrangeState::new(cfg.initial_lambda, cfg.lr_lambda, cfg.lambda_rule),
            tuner: EntropyTuner::new(cfg.init_log_alpha, cfg.entropy_target, m, cfg.lr_alpha),
            edit_mode: cfg.edit_mode,
            distance_mode: cfg.distance_mode,
            lr: cfg.lr,
            obs_dim: o,
            bound: spec.action_bound,
        })
    }

    fn se_input(obs: &Tensor, proposal: &Tensor) -> Result<Tensor, AgentError> {
        Ok(Tensor::hcat(&[obs, proposal])?)
    }

    /// Reparameterized proposal `â`.
    pub fn propose(&self, obs: &Tensor, noise: &Tensor) -> Result<ActorPass, AgentError> {
        self.um.forward(obs, noise)
    }

    /// Editor draw `Δa` for `(s, â)` and the resulting action.
    pub fn edit(
        &self,
        obs: &Tensor,
        proposal: &Tensor,
        noise: &Tensor,
    ) -> Result<(ActorPass, Edited), AgentError> {
        let pass = self.se.forward(&Self::se_input(obs, proposal)?, noise)?;
        let edited = apply_edit(self.edit_mode, proposal, pass.action(), self.bound);
        Ok((pass, edited))
    }

    /// Executed action for explicit proposal and editor noise.
    pub fn compose(&self, obs: &Tensor, noise_um: &Tensor, noise_se: &Tensor) -> Result<Tensor, AgentError> {
        let proposal = self.um.sample(obs, noise_um)?.action;
        let delta = self.se.sample(&Self::se_input(obs, &proposal)?, noise_se)?.action;
        Ok(apply_edit(self.edit_mode, &proposal, &delta, self.bound).action)
    }

    fn draw_noise(&self, rng: &mut Stream, batch: usize) -> (Tensor, Tensor) {
        let nu = self.um.head.noise(rng, batch);
        let ns = self.se.head.noise(rng, batch);
        (nu, ns)
    }

    /// `E[Q(s, h(â, Δa)) + α_um H(π_φ)]` and its gradient in φ, with the
    /// editor and critic held fixed. The gradient reaches φ both through `â`
    /// inside `h` and through the editor's input.
    pub fn um_gradient(
        &self,
        obs: &Tensor,
        noise_um: &Tensor,
        noise_se: &Tensor,
    ) -> Result<(Objective, MlpGrads), AgentError> {
        let b = obs.rows();
        let m = self.um.head.dims();
        let um_pass = self.propose(obs, noise_um)?;
        let proposal = um_pass.action().clone();
        let (se_pass, edited) = self.edit(obs, &proposal, noise_se)?;

        let w = vec![1.0 / b as f64; b];
        let (q, dq_da) = self.critics.q.value_and_action_grad(obs, &edited.action, &w)?;
        let d_delta = dq_da.hadamard(&edited.d_delta)?;
        let through_se = self.se.backward_input(&se_pass, &d_delta)?;
        let mut d_proposal = dq_da.hadamard(&edited.d_proposal)?;
        d_proposal.add_assign(&through_se.slice_cols(self.obs_dim, self.obs_dim + m))?;

        let alpha = self.tuner.alpha_um();
        let (ent, d_ent) = self.um.entropy(&um_pass)?;
        let d_ent = d_ent.scale(alpha / b as f64);
        let (grads, _) = self.um.backward(&um_pass, &d_proposal, Some(&d_ent))?;

        let value = mean(&q) + alpha * mean(&ent);
        Ok((
            Objective {
                value,
                entropy_estimate: entropy_estimate(&um_pass.sample.log_prob),
            },
            grads,
        ))
    }

    /// `E[−d(a, â) + λ Q_c(s, a) + α_se H(π_ψ)]` and its gradient in ψ for a
    /// fixed proposal batch. In hinge mode `Q(s, â)` is a constant.
    pub fn se_gradient(
        &self,
        obs: &Tensor,
        proposal: &Tensor,
        noise_se: &Tensor,
    ) -> Result<(Objective, MlpGrads), AgentError> {
        let b = obs.rows();
        let inv_b = 1.0 / b as f64;
        let (se_pass, edited) = self.edit(obs, proposal, noise_se)?;
        let a = &edited.action;
        let lambda = self.lagrange.lambda();

        let (qc, mut d_a) = self
            .critics
            .qc
            .value_and_action_grad(obs, a, &vec![lambda * inv_b; b])?;
        let mut dist_sum = 0.0;
        match self.distance_mode {
            DistanceMode::Hinge => {
                let q_hat = self.critics.q.value(obs, proposal)?;
                let q_a = self.critics.q.value(obs, a)?;
                let active: Vec<f64> = (0..b)
                    .map(|i| {
                        let gap = q_hat[i] - q_a[i];
                        if gap > 0.0 {
                            dist_sum += gap;
                            inv_b
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if active.iter().any(|w| *w != 0.0) {
                    let (_, dq) = self.critics.q.value_and_action_grad(obs, a, &active)?;
                    d_a.add_assign(&dq)?;
                }
            }
            DistanceMode::L2 => {
                for i in 0..b {
                    for j in 0..a.cols() {
                        let diff = a.get(i, j) - proposal.get(i, j);
                        dist_sum += diff * diff;
                        let g = d_a.get(i, j) - 2.0 * diff * inv_b;
                        d_a.set(i, j, g);
                    }
                }
            }
        }
        let d_delta = d_a.hadamard(&edited.d_delta)?;

        let alpha = self.tuner.alpha_se();
        let (ent, d_ent) = self.se.entropy(&se_pass)?;
        let d_ent = d_ent.scale(alpha * inv_b);
        let (grads, _) = self.se.backward(&se_pass, &d_delta, Some(&d_ent))?;

        let value = -dist_sum * inv_b + lambda * mean(&qc) + alpha * mean(&ent);
        Ok((
            Objective {
                value,
                entropy_estimate: entropy_estimate(&se_pass.sample.log_prob),
            },
            grads,
        ))
    }

    fn check(obj: &Objective, grads: &MlpGrads, what: &str) -> Result<(), AgentError> {
        if obj.value.is_finite() && obj.entropy_estimate.is_finite() && grads.is_finite() {
            Ok(())
        } else {
            Err(AgentError::NonFinite(what.to_string()))
        }
    }

    pub fn um_update(&mut self, obs: &Tensor, rng: &mut Stream) -> Result<Objective, AgentError> {
        let (nu, ns) = self.draw_noise(rng, obs.rows());
        let (obj, grads) = self.um_gradient(obs, &nu, &ns)?;
        Self::check(&obj, &grads, "utility actor objective")?;
        self.um.ascend(&grads, self.lr)?;
        Ok(obj)
    }

    pub fn se_update(&mut self, obs: &Tensor, rng: &mut Stream) -> Result<Objective, AgentError> {
        let (nu, ns) = self.draw_noise(rng, obs.rows());
        let proposal = self.um.sample(obs, &nu)?.action;
        let (obj, grads) = self.se_gradient(obs, &proposal, &ns)?;
        Self::check(&obj, &grads, "safety actor objective")?;
        self.se.ascend(&grads, self.lr)?;
        Ok(obj)
    }

    pub fn critic_update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<super::CriticLosses, AgentError> {
        let (nu, ns) = self.draw_noise(rng, batch.len());
        let next_act = self.compose(&batch.next_obs, &nu, &ns)?;
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

impl Agent for SEditorAgent {
    fn act(&self, obs: &Tensor, rng: &mut Stream, explore: bool) -> Result<Tensor, AgentError> {
        if explore {
            let (nu, ns) = self.draw_noise(rng, obs.rows());
            self.compose(obs, &nu, &ns)
        } else {
            let proposal = self.um.mode(obs)?;
            let delta = self.se.mode(&Self::se_input(obs, &proposal)?)?;
            Ok(apply_edit(self.edit_mode, &proposal, &delta, self.bound).action)
        }
    }

    fn update(&mut self, batch: &TrainBatch, rng: &mut Stream) -> Result<UpdateStats, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch("agent update"));
        }
        let critic = self.critic_update(batch, rng)?;
        let um = self.um_update(&batch.obs, rng)?;
        let se = self.se_update(&batch.obs, rng)?;
        self.tuner.step(um.entropy_estimate, Some(se.entropy_estimate))?;
        self.critics.sync_targets();
        Ok(UpdateStats {
            critic,
            um_objective: um.value,
            se_objective: se.value,
            entropy_um: um.entropy_estimate,
            entropy_se: se.entropy_estimate,
            stages: vec![
                Stage::Critic,
                Stage::UtilityActor,
                Stage::SafetyActor,
                Stage::Entropy,
                Stage::TargetSync,
            ],
        })
    }

    fn lagrange(&self) -> &LagrangeState {
        &self.lagrange
    }

    fn lagrange_mut(&mut self) -> &mut LagrangeState {
        &mut self.lagrange
    }

    fn alphas(&self) -> (f64, f64) {
        (self.tuner.alpha_um(), self.tuner.alpha_se())
    }
}

impl Persist for SEditorAgent {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        self.um.save(&format!("{prefix}.um"), out);
        self.se.save(&format!("{prefix}.se"), out);
        self.critics.save(&format!("{prefix}.critics"), out);
        self.lagrange.save(&format!("{prefix}.lagrange"), out);
        self.tuner.save(&format!("{prefix}.tuner"), out);
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        self.um.load(&format!("{prefix}.um"), src)?;
        self.se.load(&format!("{prefix}.se"), src)?;
        self.critics.load(&format!("{prefix}.critics"), src)?;
        self.lagrange.load(&format!("{prefix}.lagrange"), src)?;
        self.tuner.load(&format!("{prefix}.tuner"), src)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{finite_diff_grad, relative_error};
    use crate::dists::HeadKind;
    use crate::rng::stream_from_seed;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn micro(edit: EditMode, dist: DistanceMode, head: HeadKind, act_dim: usize) -> SEditorAgent {
        let spec = EnvSpec {
            obs_dim: 2,
            act_dim,
            action_bound: 1.0,
            horizon: 10,
        };
        let cfg = AgentConfig {
            hidden: vec![6],
            head,
            edit_mode: edit,
            distance_mode: dist,
            init_log_alpha: -1.0,
            ..AgentConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut agent = SEditorAgent::new(&spec, &cfg, &mut rng).unwrap();
        // Small weights keep composed actions away from the clip boundary.
        for actor in [&mut agent.um, &mut agent.se] {
            let flat: Vec<f64> = actor.net.flatten().iter().map(|w| w * 0.5).collect();
            actor.net.set_flat(&flat).unwrap();
        }
        agent.lagrange.lambda0 = 0.3;
        agent
    }

    fn obs() -> Tensor {
        Tensor::from_rows(&[[0.2, -0.5], [0.9, 0.1], [-0.4, 0.6]]).unwrap()
    }

    const BETA: HeadKind = HeadKind::Beta {
        min_concentration: 1.0,
    };

    /// Independent evaluation of the utility objective from forward values only.
    fn um_value(agent: &SEditorAgent, obs: &Tensor, nu: &Tensor, ns: &Tensor) -> f64 {
        let raw = agent.um.net.predict(obs).unwrap();
        let prop = agent.um.head.rsample(&raw, nu).unwrap();
        let se_in = Tensor::hcat(&[obs, &prop.action]).unwrap();
        let delta = agent.se.sample(&se_in, ns).unwrap().action;
        let mut total = 0.0;
        let b = obs.rows();
        let (ent, _) = agent.um.head.entropy(&raw, &prop).unwrap();
        for i in 0..b {
            let a: Vec<f64> = (0..delta.cols())
                .map(|j| match agent.edit_mode {
                    EditMode::Additive => super::super::h(prop.action.get(i, j), delta.get(i, j), 1.0),
                    EditMode::Overwrite => delta.get(i, j),
                })
                .collect();
            let q = agent
                .critics
                .q
                .value(&Tensor::row_vector(obs.row(i)), &Tensor::row_vector(&a))
                .unwrap()[0];
            total += q + agent.tuner.alpha_um() * ent[i];
        }
        total / b as f64
    }

    fn se_value(agent: &SEditorAgent, obs: &Tensor, prop: &Tensor, ns: &Tensor) -> f64 {
        let se_in = Tensor::hcat(&[obs, prop]).unwrap();
        let raw = agent.se.net.predict(&se_in).unwrap();
        let s = agent.se.head.rsample(&raw, ns).unwrap();
        let (ent, _) = agent.se.head.entropy(&raw, &s).unwrap();
        let lambda = agent.lagrange.lambda();
        let b = obs.rows();
        let mut total = 0.0;
        for i in 0..b {
            let p = prop.row(i);
            let a: Vec<f64> = (0..p.len())
                .map(|j| match agent.edit_mode {
                    EditMode::Additive => super::super::h(p[j], s.action.get(i, j), 1.0),
                    EditMode::Overwrite => s.action.get(i, j),
                })
                .collect();
            let o = Tensor::row_vector(obs.row(i));
            let at = Tensor::row_vector(&a);
            let d = match agent.distance_mode {
                DistanceMode::Hinge => {
                    // Q(s, â) is a constant here, so its value is fine to evaluate.
                    let qh = agent.critics.q.value(&o, &Tensor::row_vector(p)).unwrap()[0];
                    let qa = agent.critics.q.value(&o, &at).unwrap()[0];
                    (qh - qa).max(0.0)
                }
                DistanceMode::L2 => a.iter().zip(p).map(|(x, y)| (x - y).powi(2)).sum(),
            };
            let qc = agent.critics.qc.value(&o, &at).unwrap()[0];
            total += -d + lambda * qc + agent.tuner.alpha_se() * ent[i];
        }
        total / b as f64
    }

    fn assert_close(analytic: &[f64], numeric: &[f64]) {
        for (k, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            assert!(relative_error(*a, *n, 1e-6) < 1e-4, "param {k}: {a} vs {n}");
        }
    }

    fn check_um(agent: &SEditorAgent) {
        let o = obs();
        let mut rng = stream_from_seed(3);
        let (nu, ns) = agent.draw_noise(&mut rng, o.rows());
        let (obj, grads) = agent.um_gradient(&o, &nu, &ns).unwrap();
        assert!((obj.value - um_value(agent, &o, &nu, &ns)).abs() < 1e-12);
        let numeric = finite_diff_grad(
            |p| {
                let mut a = agent.clone();
                a.um.net.set_flat(p).unwrap();
                um_value(&a, &o, &nu, &ns)
            },
            &agent.um.net.flatten(),
            1e-6,
        )
        .unwrap();
        assert_close(&grads.flatten(), &numeric);
    }

    fn check_se(agent: &SEditorAgent) {
        let o = obs();
        let mut rng = stream_from_seed(5);
        let (nu, ns) = agent.draw_noise(&mut rng, o.rows());
        let prop = agent.um.sample(&o, &nu).unwrap().action;
        let (obj, grads) = agent.se_gradient(&o, &prop, &ns).unwrap();
        assert!((obj.value - se_value(agent, &o, &prop, &ns)).abs() < 1e-12);
        let numeric = finite_diff_grad(
            |p| {
                let mut a = agent.clone();
                a.se.net.set_flat(p).unwrap();
                se_value(&a, &o, &prop, &ns)
            },
            &agent.se.net.flatten(),
            1e-6,
        )
        .unwrap();
        assert_close(&grads.flatten(), &numeric);
    }

    #[test]
    fn um_gradient_matches_finite_differences() {
        check_um(&micro(EditMode::Additive, DistanceMode::Hinge, BETA, 1));
        check_um(&micro(EditMode::Additive, DistanceMode::Hinge, BETA, 2));
        check_um(&micro(EditMode::Overwrite, DistanceMode::Hinge, BETA, 2));
        check_um(&micro(EditMode::Additive, DistanceMode::Hinge, HeadKind::SquashedGaussian, 2));
    }

    #[test]
    fn se_gradient_matches_finite_differences() {
        for dist in [DistanceMode::Hinge, DistanceMode::L2] {
            check_se(&micro(EditMode::Additive, dist, BETA, 1));
            check_se(&micro(EditMode::Additive, dist, BETA, 2));
            check_se(&micro(EditMode::Overwrite, dist, BETA, 2));
        }
        check_se(&micro(EditMode::Additive, DistanceMode::L2, HeadKind::SquashedGaussian, 2));
    }

    fn flatten_q(agent: &mut SEditorAgent) {
        for net in agent.critics.q.nets.iter_mut() {
            let last = net.layers().len() - 1;
            let skip: usize = net.layers()[..last]
                .iter()
                .map(|l| l.weight.len() + l.bias.len())
                .sum();
            let w_len = net.layers()[last].weight.len();
            let mut flat = net.flatten();
            for v in &mut flat[skip..skip + w_len] {
                *v = 0.0;
            }
            net.set_flat(&flat).unwrap();
        }
    }

    #[test]
    fn constant_q_leaves_only_entropy_gradient() {
        let mut agent = micro(EditMode::Additive, DistanceMode::Hinge, BETA, 2);
        flatten_q(&mut agent);
        let o = obs();
        let mut rng = stream_from_seed(1);
        let (nu, ns) = agent.draw_noise(&mut rng, 3);
        let (_, g) = agent.um_gradient(&o, &nu, &ns).unwrap();
        let pass = agent.um.forward(&o, &nu).unwrap();
        let (_, d_ent) = agent.um.entropy(&pass).unwrap();
        let d_ent = d_ent.scale(agent.tuner.alpha_um() / 3.0);
        let (expected, _) = agent
            .um
            .backward(&pass, &Tensor::zeros(3, 2), Some(&d_ent))
            .unwrap();
        assert_eq!(g.flatten(), expected.flatten());
    }

    #[test]
    fn zero_lambda_and_zero_hinge_leave_only_entropy() {
        let mut agent = micro(EditMode::Additive, DistanceMode::Hinge, BETA, 1);
        agent.lagrange.lambda0 = -1000.0;
        assert_eq!(agent.lagrange.lambda(), 0.0);
        flatten_q(&mut agent);
        let o = obs();
        let mut rng = stream_from_seed(2);
        let (nu, ns) = agent.draw_noise(&mut rng, 3);
        let prop = agent.um.sample(&o, &nu).unwrap().action;
        let (_, g) = agent.se_gradient(&o, &prop, &ns).unwrap();
        let pass = agent.se.forward(&Tensor::hcat(&[&o, &prop]).unwrap(), &ns).unwrap();
        let (_, d_ent) = agent.se.entropy(&pass).unwrap();
        let d_ent = d_ent.scale(agent.tuner.alpha_se() / 3.0);
        let (entropy_only, _) = agent
            .se
            .backward(&pass, &Tensor::zeros(3, 1), Some(&d_ent))
            .unwrap();
        let diff: f64 = g
            .flatten()
            .iter()
            .zip(entropy_only.flatten())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff < 1e-15, "{diff}");
    }

    #[test]
    fn updates_touch_only_their_own_parameters() {
        let mut agent = micro(EditMode::Additive, DistanceMode::Hinge, BETA, 2);
        let o = obs();
        let mut rng = stream_from_seed(9);
        let before = agent.clone();
        agent.um_update(&o, &mut rng).unwrap();
        assert_ne!(agent.um.net.flatten(), before.um.net.flatten());
        assert_eq!(agent.se, before.se);
        assert_eq!(agent.critics, before.critics);

        let before = agent.clone();
        agent.se_update(&o, &mut rng).unwrap();
        assert_ne!(agent.se.net.flatten(), before.se.net.flatten());
        assert_eq!(agent.um, before.um);
        assert_eq!(agent.critics, before.critics);
    }

    #[test]
    fn overwrite_and_identity_edits() {
        let agent = micro(EditMode::Overwrite, DistanceMode::Hinge, BETA, 2);
        let o = obs();
        let mut rng = stream_from_seed(4);
        let (nu, ns) = agent.draw_noise(&mut rng, 3);
        let prop = agent.propose(&o, &nu).unwrap();
        let (pass, edited) = agent.edit(&o, prop.action(), &ns).unwrap();
        assert_eq!(&edited.action, pass.action());
    }

    #[test]
    fn proposals_are_deterministic_and_in_box() {
        let agent = micro(EditMode::Additive, DistanceMode::Hinge, BETA, 2);
        let mut rng = stream_from_seed(0);
        let o = Tensor::filled(5000, 2, 0.3);
        let nu = agent.um.head.noise(&mut rng, 5000);
        let a = agent.propose(&o, &nu).unwrap();
        let b = agent.propose(&o, &nu).unwrap();
        assert_eq!(a.action(), b.action());
        assert!(a.action().data().iter().all(|x| x.abs() < 1.0));
        let mode = agent.act(&o, &mut rng, false).unwrap();
        assert!(mode.data().iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn update_order_and_persistence() {
        let mut agent = micro(EditMode::Additive, DistanceMode::L2, BETA, 2);
        let o = obs();
        let batch = TrainBatch {
            obs: o.clone(),
            actions: Tensor::from_rows(&[[0.1, 0.2], [-0.3, 0.0], [0.5, -0.5]]).unwrap(),
            next_obs: o.clone(),
            r: vec![0.1, 0.2, -0.1],
            r_c: vec![0.0, -1.0, 0.0],
            discount: vec![0.99, 0.0, 0.99],
        };
        let mut rng = stream_from_seed(6);
        let stats = agent.update(&batch, &mut rng).unwrap();
        assert_eq!(
            stats.stages,
            vec![
                Stage::Critic,
                Stage::UtilityActor,
                Stage::SafetyActor,
                Stage::Entropy,
                Stage::TargetSync
            ]
        );
        let mut dict = StateDict::new();
        agent.save("agent", &mut dict);
        let mut fresh = micro(EditMode::Additive, DistanceMode::L2, BETA, 2);
        fresh.load("agent", &dict).unwrap();
        assert_eq!(fresh.um.net.flatten(), agent.um.net.flatten());
        assert_eq!(fresh.critics.qc.targets[0].flatten(), agent.critics.qc.targets[0].flatten());
        assert_eq!(fresh.critics.q.adams, agent.critics.q.adams);
        assert_eq!(fresh.tuner, agent.tuner);
    }
}
