use rand::Rng;

use super::{clip_action, CmdpEnv, EnvError, EnvSpec, StepResult};
use crate::rng::stream_from_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct PointNavParams {
    pub hazards: usize,
    pub horizon: usize,
    pub lidar_bins: usize,
    /// Half-width of the square world `[−w, w]²`.
    pub world_half: f64,
    pub hazard_radius: f64,
    pub agent_radius: f64,
    pub goal_radius: f64,
    pub step_scale: f64,
    pub lidar_range: f64,
    pub success_bonus: f64,
}

impl Default for PointNavParams {
    fn default() -> Self {
        Self {
            hazards: 4,
            horizon: 200,
            lidar_bins: 16,
            world_half: 2.0,
            hazard_radius: 0.3,
            agent_radius: 0.1,
            goal_radius: 0.3,
            step_scale: 0.1,
            lidar_range: 3.0,
            success_bonus: 1.0,
        }
    }
}

impl PointNavParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidParameter(m.into()));
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.lidar_bins == 0 {
            return bad("lidar_bins must be at least 1");
        }
        if self.hazards > 16 {
            return bad("at most 16 hazards fit the world");
        }
        if !(self.world_half > 0.0 && self.lidar_range > 0.0 && self.step_scale > 0.0) {
            return bad("world size, lidar range and step scale must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hazard {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointNavState {
    pub agent_pos: [f64; 2],
    pub goal_pos: [f64; 2],
    pub hazards: Vec<Hazard>,
    pub t: usize,
}

/// Point robot navigating to a goal among penetrable circular hazard zones.
///
/// Observation: agent position, goal offset, then one proximity reading per
/// lidar bin.
#[derive(Clone, Debug, PartialEq)]
pub struct PointNavEnv {
    params: PointNavParams,
    state: PointNavState,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn wrap_angle(mut x: f64) -> f64 {
    use std::f64::consts::PI;
    while x > PI {
        x -= 2.0 * PI;
    }
    while x < -PI {
        x += 2.0 * PI;
    }
    x
}

/// Hazard proximity per bin. Bins are centred on `k·2π/n` counter-clockwise
/// from east; a hazard fills every bin its angular extent overlaps.
pub fn lidar(agent: [f64; 2], hazards: &[Hazard], bins: usize, range: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let width = 2.0 * PI / bins as f64;
    let mut out = vec![0.0_f64; bins];
    for h in hazards {
        let d = dist(agent, h.center);
        if d <= h.radius {
            out.iter_mut().for_each(|v| *v = 1.0);
            continue;
        }
        let surface = d - h.radius;
        let value = ((range - surface) / range).max(0.0);
        if value == 0.0 {
            continue;
        }
        let theta = (h.center[1] - agent[1]).atan2(h.center[0] - agent[0]);
        let half = (h.radius / d).min(1.0).asin();
        for (k, slot) in out.iter_mut().enumerate() {
            let centre = k as f64 * width;
            if wrap_angle(theta - centre).abs() <= half + 0.5 * width {
                *slot = slot.max(value);
            }
        }
    }
    out
}

impl PointNavEnv {
    pub fn new(params: PointNavParams) -> Self {
        let mut env = Self {
            params,
            state: PointNavState {
                agent_pos: [0.0, 0.0],
                goal_pos: [1.0, 1.0],
                hazards: Vec::new(),
                t: 0,
            },
        };
        env.reset(0);
        env
    }

    pub fn params(&self) -> &PointNavParams {
        &self.params
    }

    pub fn state(&self) -> &PointNavState {
        &self.state
    }

    pub fn set_state(&mut self, state: PointNavState) {
        self.state = state;
    }

    fn in_hazard(&self, pos: [f64; 2]) -> bool {
        let reach = self.params.agent_radius;
        self.state
            .hazards
            .iter()
            .any(|h| dist(pos, h.center) < reach + h.radius)
    }
}

impl CmdpEnv for PointNavEnv {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            obs_dim: 4 + self.params.lidar_bins,
            act_dim: 2,
            action_bound: 1.0,
            horizon: self.params.horizon,
        }
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let p = &self.params;
        let mut rng = stream_from_seed(seed);
        let mut point = |margin: f64| {
            let lim = p.world_half - margin;
            [rng.random_range(-lim..=lim), rng.random_range(-lim..=lim)]
        };
        // Rejection sampling; the layout constraints are loose enough that a
        // valid layout is found within a handful of tries.
        loop {
            let mut hazards: Vec<Hazard> = Vec::with_capacity(p.hazards);
            let mut tries = 0;
            while hazards.len() < p.hazards && tries < 1000 {
                tries += 1;
                let c = point(p.hazard_radius);
                if hazards.iter().all(|h| dist(h.center, c) > 2.0 * p.hazard_radius) {
                    hazards.push(Hazard {
                        center: c,
                        radius: p.hazard_radius,
                    });
                }
            }
            let clear = |q: [f64; 2], gap: f64, hazards: &[Hazard]| {
                hazards.iter().all(|h| dist(q, h.center) > h.radius + gap)
            };
            let goal = (0..1000)
                .map(|_| point(p.goal_radius))
                .find(|&g| clear(g, p.goal_radius, &hazards));
            let Some(goal) = goal else { continue };
            let agent = (0..1000).map(|_| point(p.agent_radius)).find(|&a| {
                clear(a, p.agent_radius, &hazards) && dist(a, goal) > p.goal_radius + 1.0
            });
            let Some(agent) = agent else { continue };
            self.state = PointNavState {
                agent_pos: agent,
                goal_pos: goal,
                hazards,
                t: 0,
            };
            break;
        }
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        let a = clip_action(action, 2, 1.0)?;
        let p = &self.params;
        let old = self.state.agent_pos;
        let w = p.world_half;
        let new = [
            (old[0] + p.step_scale * a[0]).clamp(-w, w),
            (old[1] + p.step_scale * a[1]).clamp(-w, w),
        ];
        let goal = self.state.goal_pos;
        let d_old = dist(old, goal);
        let d_new = dist(new, goal);
        self.state.agent_pos = new;
        self.state.t += 1;

        let success = d_new < p.goal_radius;
        let mut r = d_old - d_new;
        if success {
            r += p.success_bonus;
        }
        let r_c = if self.in_hazard(new) { -1.0 } else { 0.0 };
        let timeout = !success && self.state.t >= p.horizon;
        Ok(StepResult {
            obs: self.observe(),
            r,
            r_c,
            terminal: success,
            timeout,
            success,
        })
    }

    fn observe(&self) -> Vec<f64> {
        let s = &self.state;
        let mut obs = Vec::with_capacity(4 + self.params.lidar_bins);
        obs.extend_from_slice(&s.agent_pos);
        obs.push(s.goal_pos[0] - s.agent_pos[0]);
        obs.push(s.goal_pos[1] - s.agent_pos[1]);
        obs.extend(lidar(
            s.agent_pos,
            &s.hazards,
            self.params.lidar_bins,
            self.params.lidar_range,
        ));
        obs
    }

    fn save_state(&self) -> Vec<f64> {
        let s = &self.state;
        let mut out = vec![
            s.t as f64,
            s.agent_pos[0],
            s.agent_pos[1],
            s.goal_pos[0],
            s.goal_pos[1],
            s.hazards.len() as f64,
        ];
        for h in &s.hazards {
            out.extend_from_slice(&[h.center[0], h.center[1], h.radius]);
        }
        out
    }

    fn load_state(&mut self, state: &[f64]) -> Result<(), EnvError> {
        if state.len() < 6 {
            return Err(EnvError::BadState("pointnav state too short".into()));
        }
        let n = state[5] as usize;
        if state.len() != 6 + 3 * n {
            return Err(EnvError::BadState(format!(
                "pointnav state has {} values for {n} hazards",
                state.len()
            )));
        }
        self.state = PointNavState {
            t: state[0] as usize,
            agent_pos: [state[1], state[2]],
            goal_pos: [state[3], state[4]],
            hazards: state[6..]
                .chunks_exact(3)
                .map(|c| Hazard {
                    center: [c[0], c[1]],
                    radius: c[2],
                })
                .collect(),
        };
        Ok(())
    }
}
