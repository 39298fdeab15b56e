use rand::Rng;

use super::{CmdpEnv, Env, EnvConfig, EnvError, EnvSpec, StepResult};
use crate::rng::{self, Stream};

/// Parallel environment instances stepped in lockstep.
///
/// Each instance owns a seeded sub-stream from which it draws a fresh reset
/// seed whenever its episode ends, so a batched trajectory is a pure function
/// of the master seed and the actions.
#[derive(Clone, Debug)]
pub struct BatchedEnv {
    envs: Vec<Env>,
    streams: Vec<Stream>,
    obs: Vec<Vec<f64>>,
}

impl BatchedEnv {
    pub fn new(config: &EnvConfig, instances: usize, master_seed: u64) -> Self {
        let mut envs = Vec::with_capacity(instances);
        let mut streams = Vec::with_capacity(instances);
        let mut obs = Vec::with_capacity(instances);
        for i in 0..instances {
            let mut stream = rng::substream(master_seed, i as u64);
            let mut env = config.build();
            obs.push(env.reset(stream.random()));
            envs.push(env);
            streams.push(stream);
        }
        Self { envs, streams, obs }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn spec(&self) -> EnvSpec {
        self.envs[0].spec()
    }

    /// Current observation of every instance, in instance order.
    pub fn observations(&self) -> &[Vec<f64>] {
        &self.obs
    }

    /// Steps every instance; finished instances are reset before returning,
    /// and their `StepResult::obs` keeps the terminal observation.
    pub fn step(&mut self, actions: &[Vec<f64>]) -> Result<Vec<StepResult>, EnvError> {
        if actions.len() != self.envs.len() {
            return Err(EnvError::ActionCount {
                expected: self.envs.len(),
                got: actions.len(),
            });
        }
        let mut results = Vec::with_capacity(self.envs.len());
        for (i, (env, action)) in self.envs.iter_mut().zip(actions).enumerate() {
            let res = env.step(action)?;
            self.obs[i] = if res.done() {
                env.reset(self.streams[i].random())
            } else {
                res.obs.clone()
            };
            results.push(res);
        }
        Ok(results)
    }

    pub fn envs(&self) -> &[Env] {
        &self.envs
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    /// Restores instance states and reset streams saved from a batch of the
    /// same configuration.
    pub fn restore(&mut self, states: &[Vec<f64>], streams: Vec<Stream>) -> Result<(), EnvError> {
        if states.len() != self.envs.len() || streams.len() != self.envs.len() {
            return Err(EnvError::BadState(format!(
                "expected {} instances, got {} states and {} streams",
                self.envs.len(),
                states.len(),
                streams.len()
            )));
        }
        for (i, (env, s)) in self.envs.iter_mut().zip(states).enumerate() {
            env.load_state(s)?;
            self.obs[i] = env.observe();
        }
        self.streams = streams;
        Ok(())
    }
}
