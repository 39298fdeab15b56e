use rand::Rng;

use super::HarnessError;
use crate::diffcore::Tensor;
use crate::envs::{CmdpEnv, EnvConfig};
use crate::rng::stream_from_seed;
use crate::seditor::Agent;

pub const EVAL_HEADER: &str = "episode,steps,return,success,violations,violation_rate";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub steps: u64,
    pub ret: f64,
    pub success: bool,
    /// `−Σ r_c` over the episode.
    pub violations: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeRecord>,
}

impl EvalReport {
    pub fn steps(&self) -> u64 {
        self.episodes.iter().map(|e| e.steps).sum()
    }

    pub fn success_rate(&self) -> f64 {
        self.episodes.iter().filter(|e| e.success).count() as f64 / self.episodes.len() as f64
    }

    pub fn mean_return(&self) -> f64 {
        self.episodes.iter().map(|e| e.ret).sum::<f64>() / self.episodes.len() as f64
    }

    /// `−mean r_c` over every evaluation step.
    pub fn violation_rate(&self) -> f64 {
        self.episodes.iter().map(|e| e.violations).sum::<f64>() / self.steps() as f64
    }

    /// Mean utility reward per step.
    pub fn mean_step_utility(&self) -> f64 {
        self.episodes.iter().map(|e| e.ret).sum::<f64>() / self.steps() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{EVAL_HEADER}\n");
        for (k, e) in self.episodes.iter().enumerate() {
            s.push_str(&format!(
                "{k},{},{:?},{},{:?},{:?}\n",
                e.steps,
                e.ret,
                e.success as u8,
                e.violations,
                e.violations / e.steps as f64
            ));
        }
        s
    }

    pub fn summary_line(&self) -> String {
        format!(
            "episodes={} steps={} success_rate={:?} mean_return={:?} violation_rate={:?}",
            self.episodes.len(),
            self.steps(),
            self.success_rate(),
            self.mean_return(),
            self.violation_rate()
        )
    }
}

/// Runs full episodes with the deterministic policy; episode `k` resets from
/// the `k`-th draw of a stream seeded by `seed`.
pub fn evaluate<A: Agent>(agent: &A, env: &EnvConfig, episodes: usize, seed: u64) -> Result<EvalReport, HarnessError> {
    let mut seeds = stream_from_seed(seed);
    // Unused by a deterministic policy, but the agent contract takes a stream.
    let mut noise = stream_from_seed(seed ^ 0x5eed);
    let mut env = env.build();
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(seeds.random());
        let mut rec = EpisodeRecord {
            steps: 0,
            ret: 0.0,
            success: false,
            violations: 0.0,
        };
        loop {
            let a = agent.act(&Tensor::row_vector(&obs), &mut noise, false)?;
            let res = env.step(a.row(0))?;
            rec.steps += 1;
            rec.ret += res.r;
            rec.violations += -res.r_c;
            rec.success |= res.success;
            obs = res.obs.clone();
            if res.done() {
                break;
            }
        }
        out.push(rec);
    }
    Ok(EvalReport { episodes: out })
}
