use std::time::Instant;

use super::{
    compute_swu, AnyAgent, Checkpoint, HarnessError, MetricsRow, ReplayBuffer, RewardNormalizer,
    TrainerConfig, Transition, UtilityMetric, WindowStats,
};
use crate::diffcore::Tensor;
use crate::envs::{BatchedEnv, CmdpEnv};
use crate::rng::{self, Stream};
use crate::seditor::{lambda_estimate, Agent, AgentError, Stage, TrainBatch};
use crate::state::{Persist, StateDict};

// Sub-stream ids under the master seed, far from the per-instance ids the
// batched environment uses.
const AGENT_INIT: u64 = u64::MAX;
const ENV_MASTER: u64 = u64::MAX - 1;
const ACT: u64 = u64::MAX - 2;
const SAMPLE: u64 = u64::MAX - 3;
const UPDATE: u64 = u64::MAX - 4;

/// What one call to [`Trainer::iterate`] did.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub row: Option<MetricsRow>,
    /// Sub-steps in execution order; empty before the initial rollout completes.
    pub stages: Vec<Stage>,
    pub aborted: bool,
}

/// Final-window aggregates written to `summary.txt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub env_steps: u64,
    pub episodes: u64,
    pub window_steps: u64,
    pub violation_rate: f64,
    pub success_rate: f64,
    pub mean_episode_return: f64,
    pub lambda: f64,
    pub swu: f64,
    pub aborts: u64,
}

impl Summary {
    pub fn to_text(&self) -> String {
        format!(
            "env_steps = {}\nepisodes = {}\nfinal_window_steps = {}\nviolation_rate = {:?}\nsuccess_rate = {:?}\nmean_episode_return = {:?}\nlambda = {:?}\nswu = {:?}\naborted_iterations = {}\n",
            self.env_steps,
            self.episodes,
            self.window_steps,
            self.violation_rate,
            self.success_rate,
            self.mean_episode_return,
            self.lambda,
            self.swu,
            self.aborts
        )
    }
}

/// All mutable training state, owned by one thread.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainerConfig,
    pub agent: AnyAgent,
    pub envs: BatchedEnv,
    pub buffer: ReplayBuffer,
    pub normalizer: RewardNormalizer,
    act_rng: Stream,
    sample_rng: Stream,
    update_rng: Stream,
    pub iteration: u64,
    pub env_steps: u64,
    pub episodes: u64,
    pub gradient_steps: u64,
    pub aborts: u64,
    episode_returns: Vec<f64>,
    window: WindowStats,
    final_window: WindowStats,
    started: Instant,
}

impl Trainer {
    pub fn new(config: TrainerConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let seed = config.seed;
        let spec = config.env.spec();
        let mut init = rng::substream(seed, AGENT_INIT);
        let agent = AnyAgent::build(config.agent_kind, &spec, &config.agent, config.actor_width, &mut init)?;
        let env_seed: u64 = rand::Rng::random(&mut rng::substream(seed, ENV_MASTER));
        let envs = BatchedEnv::new(&config.env, config.parallel_envs, env_seed);
        Ok(Self {
            agent,
            envs,
            buffer: ReplayBuffer::new(config.buffer_size),
            normalizer: RewardNormalizer::new(2, config.normalizer_decay, config.reward_clip),
            act_rng: rng::substream(seed, ACT),
            sample_rng: rng::substream(seed, SAMPLE),
            update_rng: rng::substream(seed, UPDATE),
            iteration: 0,
            env_steps: 0,
            episodes: 0,
            gradient_steps: 0,
            aborts: 0,
            episode_returns: vec![0.0; config.parallel_envs],
            window: WindowStats::default(),
            final_window: WindowStats::default(),
            started: Instant::now(),
            config,
        })
    }

    /// Whether the step with 1-based global index `k` falls in the final tenth.
    fn in_final_window(&self, k: u64) -> bool {
        let total = self.config.total_steps;
        k > total - total / 10
    }

    pub fn training_started(&self) -> bool {
        self.env_steps >= self.config.initial_rollout
    }

    /// Collects `train_interval` steps from every instance with exploration on.
    fn rollout(&mut self) -> Result<Vec<f64>, HarnessError> {
        let p = self.envs.len();
        let mut rc_batch = Vec::with_capacity(p * self.config.train_interval);
        for _ in 0..self.config.train_interval {
            let obs_rows: Vec<Vec<f64>> = self.envs.observations().to_vec();
            let obs = Tensor::from_rows(&obs_rows).map_err(AgentError::from)?;
            let actions = self.agent.act(&obs, &mut self.act_rng, true)?;
            let acts: Vec<Vec<f64>> = actions.iter_rows().map(|r| r.to_vec()).collect();
            let results = self.envs.step(&acts)?;
            for (i, (res, (o, a))) in results.into_iter().zip(obs_rows.into_iter().zip(acts)).enumerate() {
                self.env_steps += 1;
                self.window.record_step(res.r_c);
                if self.in_final_window(self.env_steps) {
                    self.final_window.record_step(res.r_c);
                }
                self.normalizer.update(&[res.r, res.r_c]);
                self.episode_returns[i] += res.r;
                if res.done() {
                    let ret = std::mem::take(&mut self.episode_returns[i]);
                    self.episodes += 1;
                    self.window.record_episode(ret, res.success);
                    if self.in_final_window(self.env_steps) {
                        self.final_window.record_episode(ret, res.success);
                    }
                }
                rc_batch.push(res.r_c);
                self.buffer.push(Transition {
                    obs: o,
                    action: a,
                    next_obs: res.obs,
                    r: res.r,
                    r_c: res.r_c,
                    terminal: res.terminal,
                    timeout: res.timeout,
                });
            }
        }
        Ok(rc_batch)
    }

    /// Draws a training batch with normalized, optionally `n`-step, rewards.
    pub fn sample_batch(&mut self) -> Result<TrainBatch, HarnessError> {
        let n = self.config.batch_size;
        let idx = self.buffer.sample_indices(n, &mut self.sample_rng)?;
        let stride = self.config.parallel_envs as u64;
        let gamma = self.config.gamma;
        let first = self.buffer.by_logical(idx[0]).expect("sampled");
        let (od, ad) = (first.obs.len(), first.action.len());
        let mut obs = Vec::with_capacity(n * od);
        let mut act = Vec::with_capacity(n * ad);
        let mut next = Vec::with_capacity(n * od);
        let (mut r, mut rc, mut disc) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &l in &idx {
            let t0 = self.buffer.by_logical(l).expect("sampled");
            obs.extend_from_slice(&t0.obs);
            act.extend_from_slice(&t0.action);
            let (mut sr, mut src, mut g) = (0.0, 0.0, 1.0);
            let mut last = t0;
            let mut bootstrap = true;
            for k in 0..self.config.n_step as u64 {
                let Some(t) = self.buffer.by_logical(l + k * stride) else {
                    break;
                };
                let norm = self.normalizer.apply(&[t.r, t.r_c]);
                sr += g * norm[0];
                src += g * norm[1];
                g *= gamma;
                last = t;
                if t.terminal {
                    bootstrap = false;
                }
                if t.done() {
                    break;
                }
            }
            next.extend_from_slice(&last.next_obs);
            r.push(sr);
            rc.push(src);
            disc.push(if bootstrap { g } else { 0.0 });
        }
        Ok(TrainBatch {
            obs: Tensor::new(n, od, obs).map_err(AgentError::from)?,
            actions: Tensor::new(n, ad, act).map_err(AgentError::from)?,
            next_obs: Tensor::new(n, od, next).map_err(AgentError::from)?,
            r,
            r_c: rc,
            discount: disc,
        })
    }

    /// Multiplier step on the rollout batch, then one agent update on a
    /// replay batch.
    fn train_step(&mut self, rollout_rc: &[f64]) -> Result<Vec<Stage>, HarnessError> {
        let est = lambda_estimate(rollout_rc, self.config.c)?;
        self.agent.lagrange_mut().step(est)?;
        let batch = self.sample_batch()?;
        let stats = self.agent.update(&batch, &mut self.update_rng)?;
        let mut stages = vec![Stage::Lambda];
        stages.extend(stats.stages);
        Ok(stages)
    }

    pub fn iterate(&mut self) -> Result<IterationReport, HarnessError> {
        let rollout_rc = self.rollout()?;
        let mut stages = Vec::new();
        let mut aborted = false;
        if self.training_started() {
            let snapshot = (self.agent.clone(), self.sample_rng.clone(), self.update_rng.clone());
            match self.train_step(&rollout_rc) {
                Ok(s) => {
                    self.gradient_steps += 1;
                    stages = s;
                }
                Err(HarnessError::Agent(AgentError::NonFinite(what))) => {
                    (self.agent, self.sample_rng, self.update_rng) = snapshot;
                    self.aborts += 1;
                    aborted = true;
                    log::warn!(
                        "iteration {} aborted: non-finite value in {what}; state rolled back",
                        self.iteration
                    );
                    if self.aborts > self.config.max_aborts {
                        return Err(HarnessError::TooManyAborts(self.aborts, self.config.max_aborts));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        self.iteration += 1;
        let row = if self.iteration.is_multiple_of(self.config.log_interval) {
            Some(self.take_row())
        } else {
            None
        };
        Ok(IterationReport { row, stages, aborted })
    }

    fn utility(&self, w: &WindowStats) -> f64 {
        match self.config.utility_metric {
            UtilityMetric::Return => w.mean_return(),
            UtilityMetric::Success => w.success_rate(),
        }
    }

    fn swu(&self, w: &WindowStats) -> f64 {
        let (Some(base), u, v) = (self.config.swu_base, self.utility(w), w.violation_rate()) else {
            return f64::NAN;
        };
        if !u.is_finite() || !v.is_finite() {
            return f64::NAN;
        }
        compute_swu(self.config.c, v, u, base).unwrap_or(f64::NAN)
    }

    fn take_row(&mut self) -> MetricsRow {
        let w = std::mem::take(&mut self.window);
        let (alpha_um, alpha_se) = self.agent.alphas();
        MetricsRow {
            env_steps: self.env_steps,
            episodes: self.episodes,
            success_rate: w.success_rate(),
            mean_episode_return: w.mean_return(),
            violation_rate: w.violation_rate(),
            lambda: self.agent.lagrange().lambda(),
            alpha_um,
            alpha_se,
            swu: self.swu(&w),
            wall_time: if self.config.wall_clock {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        }
    }

    pub fn finished(&self) -> bool {
        self.env_steps >= self.config.total_steps
    }

    /// Iterates until `total_steps`, handing every emitted row to `sink`.
    pub fn run<F>(&mut self, mut sink: F) -> Result<(), HarnessError>
    where
        F: FnMut(&Trainer, &MetricsRow) -> Result<(), HarnessError>,
    {
        while !self.finished() {
            if let Some(row) = self.iterate()?.row {
                sink(self, &row)?;
            }
        }
        Ok(())
    }

    pub fn final_window(&self) -> WindowStats {
        self.final_window
    }

    pub fn summary(&self) -> Summary {
        let w = &self.final_window;
        Summary {
            env_steps: self.env_steps,
            episodes: self.episodes,
            window_steps: w.steps,
            violation_rate: w.violation_rate(),
            success_rate: w.success_rate(),
            mean_episode_return: w.mean_return(),
            lambda: self.agent.lagrange().lambda(),
            swu: self.swu(w),
            aborts: self.aborts,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut d = StateDict::new();
        self.agent.save("agent", &mut d);
        d.put_vec("normalizer.m1", self.normalizer.m1.clone());
        d.put_vec("normalizer.m2", self.normalizer.m2.clone());
        d.put_scalar("normalizer.decay_pow", self.normalizer.decay_pow);
        d.put_vec(
            "trainer.counters",
            vec![
                self.iteration as f64,
                self.env_steps as f64,
                self.episodes as f64,
                self.gradient_steps as f64,
                self.aborts as f64,
            ],
        );
        d.put_vec("trainer.episode_returns", self.episode_returns.clone());
        d.put_vec("trainer.window", self.window.to_vec());
        d.put_vec("trainer.final_window", self.final_window.to_vec());
        for (i, env) in self.envs.envs().iter().enumerate() {
            d.put_vec(format!("env.{i}.state"), env.save_state());
        }

        let items: Vec<&Transition> = self.buffer.iter_ordered().collect();
        let n = items.len();
        let (od, ad) = items.first().map_or((0, 0), |t| (t.obs.len(), t.action.len()));
        let flat = |f: &dyn Fn(&Transition) -> Vec<f64>| items.iter().flat_map(|t| f(t)).collect::<Vec<f64>>();
        d.put_vec("buffer.meta", vec![self.buffer.capacity() as f64, self.buffer.pushed() as f64]);
        d.put("buffer.obs", n, od, flat(&|t| t.obs.clone()));
        d.put("buffer.action", n, ad, flat(&|t| t.action.clone()));
        d.put("buffer.next_obs", n, od, flat(&|t| t.next_obs.clone()));
        d.put(
            "buffer.scalars",
            n,
            4,
            flat(&|t| vec![t.r, t.r_c, t.terminal as u8 as f64, t.timeout as u8 as f64]),
        );

        let mut streams = vec![
            ("act".to_string(), self.act_rng.clone()),
            ("sample".to_string(), self.sample_rng.clone()),
            ("update".to_string(), self.update_rng.clone()),
        ];
        for (i, s) in self.envs.streams().iter().enumerate() {
            streams.push((format!("env.{i}"), s.clone()));
        }
        Checkpoint {
            config_text: self.config.to_text(),
            arrays: d,
            streams,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, HarnessError> {
        let config = TrainerConfig::parse(&ck.config_text)?;
        let mut t = Trainer::new(config)?;
        let d = &ck.arrays;
        t.agent.load("agent", d)?;
        let dims = t.normalizer.dims();
        t.normalizer.m1 = d.get_vec("normalizer.m1", dims)?.to_vec();
        t.normalizer.m2 = d.get_vec("normalizer.m2", dims)?.to_vec();
        t.normalizer.decay_pow = d.get_scalar("normalizer.decay_pow")?;
        let c = d.get_vec("trainer.counters", 5)?;
        t.iteration = c[0] as u64;
        t.env_steps = c[1] as u64;
        t.episodes = c[2] as u64;
        t.gradient_steps = c[3] as u64;
        t.aborts = c[4] as u64;
        let p = t.envs.len();
        t.episode_returns = d.get_vec("trainer.episode_returns", p)?.to_vec();
        t.window = WindowStats::from_slice(d.get_vec("trainer.window", 5)?);
        t.final_window = WindowStats::from_slice(d.get_vec("trainer.final_window", 5)?);

        let mut states = Vec::with_capacity(p);
        let mut streams = Vec::with_capacity(p);
        for i in 0..p {
            states.push(d.get(&format!("env.{i}.state"))?.data.clone());
            streams.push(ck.stream(&format!("env.{i}"))?);
        }
        t.envs.restore(&states, streams)?;

        let meta = d.get_vec("buffer.meta", 2)?;
        if meta[0] as usize != t.config.buffer_size {
            return Err(HarnessError::Checkpoint("buffer capacity differs from config".into()));
        }
        let scalars = d.get("buffer.scalars")?;
        let n = scalars.rows;
        let spec = t.config.env.spec();
        let (od, ad) = if n == 0 { (0, 0) } else { (spec.obs_dim, spec.act_dim) };
        let obs = d.get_shaped("buffer.obs", n, od)?;
        let act = d.get_shaped("buffer.action", n, ad)?;
        let next = d.get_shaped("buffer.next_obs", n, od)?;
        let sc = d.get_shaped("buffer.scalars", n, 4)?;
        let items: Vec<Transition> = (0..n)
            .map(|k| Transition {
                obs: obs[k * od..(k + 1) * od].to_vec(),
                action: act[k * ad..(k + 1) * ad].to_vec(),
                next_obs: next[k * od..(k + 1) * od].to_vec(),
                r: sc[4 * k],
                r_c: sc[4 * k + 1],
                terminal: sc[4 * k + 2] != 0.0,
                timeout: sc[4 * k + 3] != 0.0,
            })
            .collect();
        t.buffer = ReplayBuffer::from_ordered(t.config.buffer_size, items, meta[1] as u64)?;

        t.act_rng = ck.stream("act")?;
        t.sample_rng = ck.stream("sample")?;
        t.update_rng = ck.stream("update")?;
        Ok(t)
    }
}
