//! Run configuration: one JSON document per experiment.
//!
//! Unknown keys are rejected and every error names the offending field.
//! Omitted keys take the defaults below; learning hyperparameters follow
//! the usual TD3/SAC settings, the protocol fields are sized to finish in
//! minutes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rpeper_core::agents::{AgentConfig, Algorithm, LoopConfig, SacParams, SamplerKind, SquashedGaussian, Td3Params};
use rpeper_core::emcn::{IsWeighting, LossWeights, RpeMode};
use rpeper_core::envs::ENV_NAMES;
use rpeper_core::replay::{BetaSchedule, BufferConfig, PriorityForm};

use crate::{Error, Result};

/// Overrides the directory that relative `output_dir` values resolve against.
pub const OUTPUT_ROOT_ENV: &str = "RPEPER_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Td3,
    Sac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Uniform,
    TdPer,
    RpePer,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::Uniform => "uniform",
            Sampler::TdPer => "td_per",
            Sampler::RpePer => "rpe_per",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityFormName {
    AddEpsilon,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpeModeName {
    Squared,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsWeightingName {
    AllTerms,
    QOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Section {
    pub policy_delay: u64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub exploration_noise: f64,
}

impl Default for Td3Section {
    fn default() -> Self {
        let d = Td3Params::default();
        Self {
            policy_delay: d.policy_delay,
            target_noise: d.target_noise,
            target_noise_clip: d.target_noise_clip,
            exploration_noise: d.exploration_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacSection {
    pub initial_temperature: f64,
    pub auto_temperature: bool,
    /// `null` means `-action_dim`.
    pub target_entropy: Option<f64>,
    pub temperature_lr: f64,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl Default for SacSection {
    fn default() -> Self {
        let d = SacParams::default();
        Self {
            initial_temperature: d.initial_temperature,
            auto_temperature: d.auto_temperature,
            target_entropy: d.target_entropy,
            temperature_lr: d.temperature_lr,
            log_std_min: d.policy.log_std_min,
            log_std_max: d.policy.log_std_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Label used for file names; defaults to `<env>_<agent>_<sampler>`.
    pub name: Option<String>,
    pub env: String,
    pub agent: AgentKind,
    pub sampler: Sampler,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    /// `null` keeps every transition of the run.
    pub buffer_capacity: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    /// Final value of the linearly annealed IS exponent; `null` keeps
    /// `beta` fixed.
    pub beta_end: Option<f64>,
    pub epsilon: f64,
    pub priority_form: PriorityFormName,
    /// Loss weights `[xi_q, xi_reward, xi_transition]`.
    pub xi: [f64; 3],
    pub rpe_mode: RpeModeName,
    pub is_weighting: IsWeightingName,
    pub td3: Td3Section,
    pub sac: SacSection,
    pub learning_starts: u64,
    pub train_ratio: f64,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Window of the trailing average applied to evaluation curves.
    pub smoothing_window: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: None,
            env: "pendulum".into(),
            agent: AgentKind::Td3,
            sampler: Sampler::RpePer,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            hidden: vec![256, 256],
            buffer_capacity: None,
            alpha: 0.7,
            beta: 0.4,
            beta_end: Some(1.0),
            epsilon: 1e-6,
            priority_form: PriorityFormName::AddEpsilon,
            xi: [1.0, 1.0, 1.0],
            rpe_mode: RpeModeName::Squared,
            is_weighting: IsWeightingName::AllTerms,
            td3: Td3Section::default(),
            sac: SacSection::default(),
            learning_starts: 1000,
            train_ratio: 1.0,
            seeds: vec![0, 1, 2, 3, 4],
            total_steps: 100_000,
            eval_every: 2_000,
            eval_episodes: 10,
            smoothing_window: 10,
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn check(ok: bool, path: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

fn finite_positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let agent = match self.agent {
                AgentKind::Td3 => "td3",
                AgentKind::Sac => "sac",
            };
            format!("{}_{}_{}", self.env, agent, self.sampler.name())
        })
    }

    pub fn validate(&self) -> Result<()> {
        check(ENV_NAMES.contains(&self.env.as_str()), "env", &format!("unknown env; expected one of {ENV_NAMES:?}"))?;
        if let Some(name) = &self.name {
            let ok = !name.is_empty()
                && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
                && !name.starts_with('.');
            check(ok, "name", "must be a non-empty file-name-safe label")?;
        }
        check((0.0..1.0).contains(&self.gamma), "gamma", "must lie in [0, 1)")?;
        check(self.tau > 0.0 && self.tau <= 1.0, "tau", "must lie in (0, 1]")?;
        check(self.batch_size >= 1, "batch_size", "must be at least 1")?;
        check(finite_positive(self.actor_lr), "actor_lr", "must be positive")?;
        check(finite_positive(self.critic_lr), "critic_lr", "must be positive")?;
        check(!self.hidden.is_empty(), "hidden", "needs at least one layer")?;
        for (i, &h) in self.hidden.iter().enumerate() {
            check(h >= 1, &format!("hidden[{i}]"), "widths must be positive")?;
        }
        if let Some(cap) = self.buffer_capacity {
            check(cap >= self.batch_size, "buffer_capacity", "must hold at least one batch")?;
        }
        check((0.0..=1.0).contains(&self.alpha), "alpha", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.beta), "beta", "must lie in [0, 1]")?;
        if let Some(end) = self.beta_end {
            check((0.0..=1.0).contains(&end), "beta_end", "must lie in [0, 1]")?;
        }
        check(self.epsilon.is_finite() && self.epsilon >= 0.0, "epsilon", "must be finite and non-negative")?;
        check(
            self.priority_form == PriorityFormName::Literal || self.epsilon > 0.0,
            "epsilon",
            "must be positive with the add_epsilon priority form",
        )?;
        for (i, &w) in self.xi.iter().enumerate() {
            check(w.is_finite() && w >= 0.0, &format!("xi[{i}]"), "must be finite and non-negative")?;
        }
        check(self.xi.iter().any(|&w| w > 0.0), "xi", "at least one loss weight must be positive")?;
        let t = &self.td3;
        check(t.policy_delay >= 1, "td3.policy_delay", "must be at least 1")?;
        for (field, v) in [
            ("td3.target_noise", t.target_noise),
            ("td3.target_noise_clip", t.target_noise_clip),
            ("td3.exploration_noise", t.exploration_noise),
        ] {
            check(v.is_finite() && v >= 0.0, field, "must be finite and non-negative")?;
        }
        let s = &self.sac;
        check(
            s.initial_temperature.is_finite() && s.initial_temperature >= 0.0,
            "sac.initial_temperature",
            "must be finite and non-negative",
        )?;
        check(
            !s.auto_temperature || s.initial_temperature > 0.0,
            "sac.initial_temperature",
            "automatic tuning needs a positive start",
        )?;
        if let Some(h) = s.target_entropy {
            check(h.is_finite(), "sac.target_entropy", "must be finite")?;
        }
        check(finite_positive(s.temperature_lr), "sac.temperature_lr", "must be positive")?;
        check(
            s.log_std_min.is_finite() && s.log_std_max.is_finite() && s.log_std_min < s.log_std_max,
            "sac.log_std_min",
            "must be finite and below log_std_max",
        )?;
        check(self.train_ratio.is_finite() && self.train_ratio >= 0.0, "train_ratio", "must be finite and non-negative")?;
        check(!self.seeds.is_empty(), "seeds", "must not be empty")?;
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        check(sorted.len() == self.seeds.len(), "seeds", "must be distinct")?;
        check(self.eval_every >= 1, "eval_every", "must be at least 1")?;
        check(self.eval_episodes >= 1, "eval_episodes", "must be at least 1")?;
        check(self.smoothing_window >= 1, "smoothing_window", "must be at least 1")?;
        check(!self.output_dir.as_os_str().is_empty(), "output_dir", "must not be empty")?;
        Ok(())
    }

    /// `output_dir`, resolved against `RPEPER_OUTPUT_ROOT` when it is
    /// relative and the variable is set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// Evaluation steps `0, eval_every, 2 * eval_every, ...`, always ending
    /// at `total_steps`.
    pub fn eval_grid(&self) -> Vec<u64> {
        let mut grid: Vec<u64> = (0..=self.total_steps).step_by(self.eval_every as usize).collect();
        if grid.last() != Some(&self.total_steps) {
            grid.push(self.total_steps);
        }
        grid
    }

    pub fn agent_config(&self) -> Result<AgentConfig> {
        let algorithm = match self.agent {
            AgentKind::Td3 => Algorithm::Td3,
            AgentKind::Sac => Algorithm::Sac,
        };
        let sampler = match self.sampler {
            Sampler::Uniform => SamplerKind::Uniform,
            Sampler::TdPer => SamplerKind::TdPer,
            Sampler::RpePer => SamplerKind::RpePer,
        };
        let mut cfg = AgentConfig::new(algorithm, sampler);
        cfg.gamma = self.gamma;
        cfg.tau = self.tau;
        cfg.batch_size = self.batch_size;
        cfg.actor_lr = self.actor_lr;
        cfg.critic_lr = self.critic_lr;
        cfg.hidden = self.hidden.clone();
        cfg.loss_weights = LossWeights::new(self.xi[0], self.xi[1], self.xi[2])?;
        cfg.rpe_mode = match self.rpe_mode {
            RpeModeName::Squared => RpeMode::Squared,
            RpeModeName::Absolute => RpeMode::Absolute,
        };
        cfg.is_weighting = match self.is_weighting {
            IsWeightingName::AllTerms => IsWeighting::AllTerms,
            IsWeightingName::QOnly => IsWeighting::QOnly,
        };
        cfg.td3 = Td3Params {
            policy_delay: self.td3.policy_delay,
            target_noise: self.td3.target_noise,
            target_noise_clip: self.td3.target_noise_clip,
            exploration_noise: self.td3.exploration_noise,
        };
        cfg.sac = SacParams {
            initial_temperature: self.sac.initial_temperature,
            auto_temperature: self.sac.auto_temperature,
            target_entropy: self.sac.target_entropy,
            temperature_lr: self.sac.temperature_lr,
            policy: SquashedGaussian {
                log_std_min: self.sac.log_std_min,
                log_std_max: self.sac.log_std_max,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn buffer_config(&self, state_dim: usize, action_dim: usize) -> BufferConfig {
        let capacity = self
            .buffer_capacity
            .unwrap_or_else(|| (self.total_steps as usize).max(self.batch_size));
        let mut cfg = BufferConfig::new(capacity, state_dim, action_dim);
        cfg.alpha = self.alpha;
        cfg.beta = self.beta;
        cfg.epsilon = self.epsilon;
        cfg.priority_form = match self.priority_form {
            PriorityFormName::AddEpsilon => PriorityForm::AddEpsilon,
            PriorityFormName::Literal => PriorityForm::Literal,
        };
        cfg
    }

    /// Loop settings for one seed. Each seed draws its episode starts from a
    /// disjoint block of reset seeds.
    pub fn loop_config(&self, seed: u64) -> LoopConfig {
        let beta = match self.beta_end {
            Some(end) => BetaSchedule {
                start: self.beta,
                end,
                steps: self.total_steps,
            },
            None => BetaSchedule::constant(self.beta),
        };
        let mut cfg = LoopConfig::new(self.learning_starts, beta, seed.wrapping_mul(1 << 32));
        cfg.train_ratio = self.train_ratio;
        cfg
    }
}
