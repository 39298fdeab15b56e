use std::collections::BTreeMap;
use std::str::FromStr;

use crate::diffcore::Activation;
use crate::dists::HeadKind;
use crate::envs::{EnvConfig, PointNavParams};
use crate::seditor::{AgentConfig, DistanceMode, EditMode, LambdaRule};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required config key `{0}`")]
    MissingKey(&'static str),
    #[error("config key `{0}` given twice")]
    DuplicateKey(String),
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentKind {
    Sac,
    SacLag,
    SEditor,
}

impl FromStr for AgentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sac" => Ok(AgentKind::Sac),
            "sac_lag" => Ok(AgentKind::SacLag),
            "seditor" => Ok(AgentKind::SEditor),
            o => Err(format!("unknown agent `{o}` (sac | sac_lag | seditor)")),
        }
    }
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Sac => "sac",
            AgentKind::SacLag => "sac_lag",
            AgentKind::SEditor => "seditor",
        }
    }
}

/// Which episode statistic counts as utility in the SWU score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UtilityMetric {
    Return,
    Success,
}

impl FromStr for UtilityMetric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "return" => Ok(UtilityMetric::Return),
            "success" => Ok(UtilityMetric::Success),
            o => Err(format!("unknown utility metric `{o}` (return | success)")),
        }
    }
}

impl UtilityMetric {
    pub fn name(self) -> &'static str {
        match self {
            UtilityMetric::Return => "return",
            UtilityMetric::Success => "success",
        }
    }
}

/// Every training hyperparameter, loaded from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub env: EnvConfig,
    pub agent_kind: AgentKind,
    pub agent: AgentConfig,
    pub actor_width: usize,
    pub seed: u64,
    pub total_steps: u64,
    pub gamma: f64,
    pub c: f64,
    pub batch_size: usize,
    pub parallel_envs: usize,
    pub train_interval: usize,
    pub initial_rollout: u64,
    pub buffer_size: usize,
    pub n_step: usize,
    pub reward_clip: f64,
    pub normalizer_decay: f64,
    pub log_interval: u64,
    pub checkpoint_interval: u64,
    pub max_aborts: u64,
    pub swu_base: Option<f64>,
    pub utility_metric: UtilityMetric,
    pub wall_clock: bool,
    pub profile: String,
}

const KEYS: &[&str] = &[
    "env",
    "agent",
    "profile",
    "seed",
    "total_steps",
    "gamma",
    "c",
    "lr",
    "lr_lambda",
    "tau",
    "batch_size",
    "parallel_envs",
    "train_interval",
    "initial_rollout",
    "buffer_size",
    "n_step",
    "reward_clip",
    "normalizer_decay",
    "hidden",
    "activation",
    "head",
    "min_concentration",
    "twin_q",
    "initial_lambda",
    "lambda_rule",
    "init_log_alpha",
    "entropy_target_um",
    "entropy_target_se",
    "lr_alpha",
    "edit_mode",
    "distance_mode",
    "actor_width",
    "log_interval",
    "checkpoint_interval",
    "max_aborts",
    "swu_base",
    "utility_metric",
    "wall_clock",
    "pointnav.hazards",
    "pointnav.horizon",
    "pointnav.lidar_bins",
    "pointnav.world_half",
    "pointnav.hazard_radius",
    "pointnav.agent_radius",
    "pointnav.goal_radius",
    "pointnav.step_scale",
    "pointnav.lidar_range",
    "pointnav.success_bonus",
];

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
    }
    Ok(out)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| ConfigError::Invalid {
                key: key.to_string(),
                message: format!("cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_hidden(v: &str) -> Result<Vec<usize>, ConfigError> {
    let sizes: Result<Vec<usize>, _> = v.split(',').map(|s| s.trim().parse::<usize>()).collect();
    match sizes {
        Ok(s) if !s.is_empty() && s.iter().all(|&n| n > 0) => Ok(s),
        _ => Err(invalid("hidden", format!("expected comma-separated positive sizes, got `{v}`"))),
    }
}

impl TrainerConfig {
    fn defaults(env: EnvConfig, agent_kind: AgentKind, c: f64) -> Self {
        Self {
            env,
            agent_kind,
            agent: AgentConfig::default(),
            actor_width: 1,
            seed: 0,
            total_steps: 100_000,
            gamma: 0.99,
            c,
            batch_size: 256,
            parallel_envs: 8,
            train_interval: 5,
            initial_rollout: 2000,
            buffer_size: 200_000,
            n_step: 1,
            reward_clip: 10.0,
            normalizer_decay: 0.999,
            log_interval: 10,
            checkpoint_interval: 0,
            max_aborts: 10,
            swu_base: None,
            utility_metric: UtilityMetric::Return,
            wall_clock: false,
            profile: "desk".into(),
        }
    }

    fn apply_large_profile(&mut self) {
        self.batch_size = 1024;
        self.parallel_envs = 32;
        self.initial_rollout = 10_000;
        self.buffer_size = 1_600_000;
        self.agent.hidden = vec![256, 256, 256];
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let f = Fields(parse_lines(text)?);
        let env_name: String = f.get("env")?.ok_or(ConfigError::MissingKey("env"))?;
        let agent_kind: AgentKind = f.get("agent")?.ok_or(ConfigError::MissingKey("agent"))?;
        let c: f64 = f.get("c")?.ok_or(ConfigError::MissingKey("c"))?;

        let env = match env_name.as_str() {
            "bandit" => {
                if f.0.keys().any(|k| k.starts_with("pointnav.")) {
                    return Err(invalid("env", "pointnav.* keys need env = pointnav"));
                }
                EnvConfig::Bandit
            }
            "pointnav" => {
                let mut p = PointNavParams::default();
                f.set("pointnav.hazards", &mut p.hazards)?;
                f.set("pointnav.horizon", &mut p.horizon)?;
                f.set("pointnav.lidar_bins", &mut p.lidar_bins)?;
                f.set("pointnav.world_half", &mut p.world_half)?;
                f.set("pointnav.hazard_radius", &mut p.hazard_radius)?;
                f.set("pointnav.agent_radius", &mut p.agent_radius)?;
                f.set("pointnav.goal_radius", &mut p.goal_radius)?;
                f.set("pointnav.step_scale", &mut p.step_scale)?;
                f.set("pointnav.lidar_range", &mut p.lidar_range)?;
                f.set("pointnav.success_bonus", &mut p.success_bonus)?;
                p.validate().map_err(|e| invalid("pointnav", e.to_string()))?;
                EnvConfig::PointNav(p)
            }
            o => return Err(invalid("env", format!("unknown environment `{o}` (bandit | pointnav)"))),
        };

        let mut cfg = Self::defaults(env, agent_kind, c);
        if let Some(p) = f.get::<String>("profile")? {
            match p.as_str() {
                "desk" => {}
                "large" => cfg.apply_large_profile(),
                o => return Err(invalid("profile", format!("unknown profile `{o}` (desk | large)"))),
            }
            cfg.profile = p;
        }

        f.set("seed", &mut cfg.seed)?;
        f.set("total_steps", &mut cfg.total_steps)?;
        f.set("gamma", &mut cfg.gamma)?;
        f.set("batch_size", &mut cfg.batch_size)?;
        f.set("parallel_envs", &mut cfg.parallel_envs)?;
        f.set("train_interval", &mut cfg.train_interval)?;
        f.set("initial_rollout", &mut cfg.initial_rollout)?;
        f.set("buffer_size", &mut cfg.buffer_size)?;
        f.set("n_step", &mut cfg.n_step)?;
        f.set("reward_clip", &mut cfg.reward_clip)?;
        f.set("normalizer_decay", &mut cfg.normalizer_decay)?;
        f.set("actor_width", &mut cfg.actor_width)?;
        f.set("log_interval", &mut cfg.log_interval)?;
        f.set("checkpoint_interval", &mut cfg.checkpoint_interval)?;
        f.set("max_aborts", &mut cfg.max_aborts)?;
        f.set("wall_clock", &mut cfg.wall_clock)?;
        cfg.swu_base = f.get("swu_base")?;
        if let Some(m) = f.get::<String>("utility_metric")? {
            cfg.utility_metric = m.parse().map_err(|e: String| invalid("utility_metric", e))?;
        }

        let a = &mut cfg.agent;
        f.set("lr", &mut a.lr)?;
        f.set("lr_lambda", &mut a.lr_lambda)?;
        f.set("tau", &mut a.tau)?;
        f.set("twin_q", &mut a.twin_q)?;
        f.set("initial_lambda", &mut a.initial_lambda)?;
        f.set("init_log_alpha", &mut a.init_log_alpha)?;
        f.set("entropy_target_um", &mut a.entropy_target.0)?;
        f.set("entropy_target_se", &mut a.entropy_target.1)?;
        f.set("lr_alpha", &mut a.lr_alpha)?;
        if let Some(v) = f.get::<String>("hidden")? {
            a.hidden = parse_hidden(&v)?;
        }
        if let Some(v) = f.get::<String>("activation")? {
            a.activation = v.parse::<Activation>().map_err(|e| invalid("activation", e.to_string()))?;
        }
        if let Some(v) = f.get::<String>("edit_mode")? {
            a.edit_mode = v.parse::<EditMode>().map_err(|e| invalid("edit_mode", e))?;
        }
        if let Some(v) = f.get::<String>("distance_mode")? {
            a.distance_mode = v.parse::<DistanceMode>().map_err(|e| invalid("distance_mode", e))?;
        }
        if let Some(v) = f.get::<String>("lambda_rule")? {
            a.lambda_rule = v.parse::<LambdaRule>().map_err(|e| invalid("lambda_rule", e))?;
        }
        let min_conc: Option<f64> = f.get("min_concentration")?;
        match f.get::<String>("head")?.as_deref() {
            None | Some("beta") => {
                a.head = HeadKind::Beta {
                    min_concentration: min_conc.unwrap_or(1.0),
                }
            }
            Some("gaussian") => {
                if min_conc.is_some() {
                    return Err(invalid("min_concentration", "only applies to head = beta"));
                }
                a.head = HeadKind::SquashedGaussian;
            }
            Some(o) => return Err(invalid("head", format!("unknown head `{o}` (beta | gaussian)"))),
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.agent;
        let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(invalid(key, msg)) };
        check(self.c >= 0.0 && self.c.is_finite(), "c", "must be finite and >= 0")?;
        check((0.0..1.0).contains(&self.gamma), "gamma", "must lie in [0, 1)")?;
        check(a.lr > 0.0 && a.lr.is_finite(), "lr", "must be positive")?;
        check(a.lr_lambda >= 0.0 && a.lr_lambda.is_finite(), "lr_lambda", "must be >= 0")?;
        check(a.lr_alpha >= 0.0 && a.lr_alpha.is_finite(), "lr_alpha", "must be >= 0")?;
        check(a.tau > 0.0 && a.tau <= 1.0, "tau", "must lie in (0, 1]")?;
        check(a.initial_lambda > 0.0 && a.initial_lambda.is_finite(), "initial_lambda", "must be positive")?;
        check(a.init_log_alpha.is_finite(), "init_log_alpha", "must be finite")?;
        check(a.entropy_target.0.is_finite(), "entropy_target_um", "must be finite")?;
        check(a.entropy_target.1.is_finite(), "entropy_target_se", "must be finite")?;
        if let HeadKind::Beta { min_concentration } = a.head {
            check(
                min_concentration > 0.0 && min_concentration.is_finite(),
                "min_concentration",
                "must be positive",
            )?;
        }
        check(self.batch_size > 0, "batch_size", "must be positive")?;
        check(self.parallel_envs > 0, "parallel_envs", "must be positive")?;
        check(self.train_interval > 0, "train_interval", "must be positive")?;
        check(self.buffer_size > 0, "buffer_size", "must be positive")?;
        check(self.n_step >= 1, "n_step", "must be at least 1")?;
        check(self.reward_clip > 0.0, "reward_clip", "must be positive")?;
        check(
            (0.0..1.0).contains(&self.normalizer_decay),
            "normalizer_decay",
            "must lie in [0, 1)",
        )?;
        check(self.actor_width == 1 || self.actor_width == 2, "actor_width", "must be 1 or 2")?;
        check(self.log_interval > 0, "log_interval", "must be positive")?;
        if let Some(b) = self.swu_base {
            check(b > 0.0 && b.is_finite(), "swu_base", "must be positive")?;
        }
        let bad_agent_key = self.agent_kind != AgentKind::SEditor
            && (a.edit_mode != EditMode::Additive || a.distance_mode != DistanceMode::Hinge);
        check(!bad_agent_key, "edit_mode", "edit and distance modes apply to agent = seditor only")?;
        Ok(())
    }

    /// Environment steps taken per training iteration.
    pub fn steps_per_iteration(&self) -> u64 {
        (self.parallel_envs * self.train_interval) as u64
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let a = &self.agent;
        let mut lines: Vec<String> = vec![];
        let mut kv = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        match &self.env {
            EnvConfig::Bandit => kv("env", "bandit".into()),
            EnvConfig::PointNav(p) => {
                kv("env", "pointnav".into());
                kv("pointnav.hazards", p.hazards.to_string());
                kv("pointnav.horizon", p.horizon.to_string());
                kv("pointnav.lidar_bins", p.lidar_bins.to_string());
                kv("pointnav.world_half", format!("{:?}", p.world_half));
                kv("pointnav.hazard_radius", format!("{:?}", p.hazard_radius));
                kv("pointnav.agent_radius", format!("{:?}", p.agent_radius));
                kv("pointnav.goal_radius", format!("{:?}", p.goal_radius));
                kv("pointnav.step_scale", format!("{:?}", p.step_scale));
                kv("pointnav.lidar_range", format!("{:?}", p.lidar_range));
                kv("pointnav.success_bonus", format!("{:?}", p.success_bonus));
            }
        }
        kv("agent", self.agent_kind.name().into());
        kv("profile", self.profile.clone());
        kv("seed", self.seed.to_string());
        kv("total_steps", self.total_steps.to_string());
        kv("gamma", format!("{:?}", self.gamma));
        kv("c", format!("{:?}", self.c));
        kv("lr", format!("{:?}", a.lr));
        kv("lr_lambda", format!("{:?}", a.lr_lambda));
        kv("tau", format!("{:?}", a.tau));
        kv("batch_size", self.batch_size.to_string());
        kv("parallel_envs", self.parallel_envs.to_string());
        kv("train_interval", self.train_interval.to_string());
        kv("initial_rollout", self.initial_rollout.to_string());
        kv("buffer_size", self.buffer_size.to_string());
        kv("n_step", self.n_step.to_string());
        kv("reward_clip", format!("{:?}", self.reward_clip));
        kv("normalizer_decay", format!("{:?}", self.normalizer_decay));
        kv(
            "hidden",
            a.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
        );
        kv("activation", a.activation.name().into());
        match a.head {
            HeadKind::Beta { min_concentration } => {
                kv("head", "beta".into());
                kv("min_concentration", format!("{min_concentration:?}"));
            }
            HeadKind::SquashedGaussian => kv("head", "gaussian".into()),
        }
        kv("twin_q", a.twin_q.to_string());
        kv("initial_lambda", format!("{:?}", a.initial_lambda));
        kv("lambda_rule", a.lambda_rule.name().into());
        kv("init_log_alpha", format!("{:?}", a.init_log_alpha));
        kv("entropy_target_um", format!("{:?}", a.entropy_target.0));
        kv("entropy_target_se", format!("{:?}", a.entropy_target.1));
        kv("lr_alpha", format!("{:?}", a.lr_alpha));
        kv("edit_mode", a.edit_mode.name().into());
        kv("distance_mode", a.distance_mode.name().into());
        kv("actor_width", self.actor_width.to_string());
        kv("log_interval", self.log_interval.to_string());
        kv("checkpoint_interval", self.checkpoint_interval.to_string());
        kv("max_aborts", self.max_aborts.to_string());
        if let Some(b) = self.swu_base {
            kv("swu_base", format!("{b:?}"));
        }
        kv("utility_metric", self.utility_metric.name().into());
        kv("wall_clock", self.wall_clock.to_string());
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}
