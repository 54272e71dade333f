//! TD3 and SAC agents whose replay priorities come from a pluggable scorer.
//!
//! One [`Agent::train_step`] samples a prioritised batch, updates both
//! critics with the combined three-head loss, updates the actor on its
//! cadence, blends the target networks and finally rewrites the sampled
//! slots' priorities using the post-update parameters.

mod policy;
mod runner;

pub use policy::{
    deterministic_actor_objective, entropy_actor_objective, ActionScale, EntropyObjective,
    SquashedGaussian, SquashedSample,
};
pub use runner::{evaluate_policy, EpisodeLoop, LoopConfig, LoopEvent};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::emcn::{
    bellman_target, CriticBatch, CriticLoss, EmcnCritic, IsWeighting, LossWeights, RpeMode,
};
use crate::envs::EnvSpec;
use crate::nn::{polyak_update, Activation, Adam, AdamConfig, DenseNet, Matrix, Parameters};
use crate::replay::{PrioritizedBuffer, SampledBatch, Transition};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Td3,
    Sac,
}

/// Where replay priorities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// All transitions share one priority.
    Uniform,
    /// `|r + gamma * min_k Q_k'(s', a') - Q_1(s, a)|`.
    TdPer,
    /// Reward prediction error of the first critic's reward head.
    RpePer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Params {
    pub policy_delay: u64,
    /// Target smoothing noise std, as a fraction of the action half-range.
    pub target_noise: f64,
    pub target_noise_clip: f64,
    /// Exploration noise std, as a fraction of the action half-range.
    pub exploration_noise: f64,
}

impl Default for Td3Params {
    fn default() -> Self {
        Self {
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            exploration_noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacParams {
    pub initial_temperature: f64,
    /// Tune the temperature toward `target_entropy`; otherwise it stays at
    /// `initial_temperature` (which may be 0).
    pub auto_temperature: bool,
    /// `None` means `-action_dim`.
    pub target_entropy: Option<f64>,
    pub temperature_lr: f64,
    pub policy: SquashedGaussian,
}

impl Default for SacParams {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            auto_temperature: true,
            target_entropy: None,
            temperature_lr: 3e-4,
            policy: SquashedGaussian::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub sampler: SamplerKind,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    pub loss_weights: LossWeights,
    pub rpe_mode: RpeMode,
    pub is_weighting: IsWeighting,
    pub td3: Td3Params,
    pub sac: SacParams,
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm, sampler: SamplerKind) -> Self {
        Self {
            algorithm,
            sampler,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            hidden: vec![256, 256],
            loss_weights: LossWeights::default(),
            rpe_mode: RpeMode::Squared,
            is_weighting: IsWeighting::AllTerms,
            td3: Td3Params::default(),
            sac: SacParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid("tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        for (field, lr) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::invalid("hidden", "needs at least one positive width"));
        }
        self.loss_weights.validate()?;
        if self.td3.policy_delay == 0 {
            return Err(Error::invalid("policy_delay", "must be at least 1"));
        }
        let noise = [
            self.td3.target_noise,
            self.td3.target_noise_clip,
            self.td3.exploration_noise,
        ];
        if noise.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("td3 noise", "must be finite and non-negative"));
        }
        if !(self.sac.initial_temperature.is_finite() && self.sac.initial_temperature >= 0.0) {
            return Err(Error::invalid("initial_temperature", "must be non-negative"));
        }
        if self.sac.auto_temperature && self.sac.initial_temperature == 0.0 {
            return Err(Error::invalid("initial_temperature", "auto tuning needs a positive start"));
        }
        if self.sac.policy.log_std_min >= self.sac.policy.log_std_max {
            return Err(Error::invalid("log_std bounds", "min must be below max"));
        }
        Ok(())
    }
}

/// Summary of one gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainDiagnostics {
    pub grad_step: u64,
    /// Loss of the first critic.
    pub critic_loss: CriticLoss,
    pub actor_loss: Option<f64>,
    /// Mean Q of the first critic on the batch before the update.
    pub mean_q: f64,
    /// Mean reward prediction error on the batch after the update.
    pub mean_rpe: f64,
    pub temperature: Option<f64>,
    pub stale_updates: usize,
}

/// Batch rows as matrices.
struct BatchMatrices {
    states: Matrix,
    actions: Matrix,
    rewards: Vec<f64>,
    next_states: Matrix,
    terminals: Vec<bool>,
}

impl BatchMatrices {
    fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let rows = |f: fn(&Transition) -> &[f64]| {
            Matrix::from_rows(&ts.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            states: rows(|t| &t.state)?,
            actions: rows(|t| &t.action)?,
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: rows(|t| &t.next_state)?,
            terminals: ts.iter().map(|t| t.terminal).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    state_dim: usize,
    scale: ActionScale,
    actor: DenseNet,
    /// TD3 only.
    actor_target: Option<DenseNet>,
    critics: [EmcnCritic; 2],
    critic_targets: [EmcnCritic; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    log_temperature: f64,
    temperature_opt: Option<Adam>,
    env_steps: u64,
    grad_steps: u64,
    actor_updates: u64,
}

fn normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized above")
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, spec: &EnvSpec, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let scale = ActionScale::new(&spec.action_low, &spec.action_high)?;
        let (s, a) = (spec.state_dim, spec.action_dim);
        let actor = match config.algorithm {
            Algorithm::Td3 => DenseNet::mlp(s, &config.hidden, a, Activation::Relu, Activation::Tanh, rng)?,
            Algorithm::Sac => {
                DenseNet::mlp(s, &config.hidden, 2 * a, Activation::Relu, Activation::Identity, rng)?
            }
        };
        let critics = [
            EmcnCritic::new(s, a, &config.hidden, rng)?,
            EmcnCritic::new(s, a, &config.hidden, rng)?,
        ];
        let critic_lr = AdamConfig::with_lr(config.critic_lr);
        let critic_opts = [
            Adam::for_params(critic_lr, &critics[0]),
            Adam::for_params(critic_lr, &critics[1]),
        ];
        let actor_opt = Adam::for_params(AdamConfig::with_lr(config.actor_lr), &actor);
        let (actor_target, temperature_opt) = match config.algorithm {
            Algorithm::Td3 => (Some(actor.clone()), None),
            Algorithm::Sac => (
                None,
                config
                    .sac
                    .auto_temperature
                    .then(|| Adam::new(AdamConfig::with_lr(config.sac.temperature_lr), 1)),
            ),
        };
        Ok(Self {
            log_temperature: libm::log(config.sac.initial_temperature),
            state_dim: s,
            scale,
            actor_target,
            critic_targets: critics.clone(),
            critics,
            actor,
            actor_opt,
            critic_opts,
            temperature_opt,
            env_steps: 0,
            grad_steps: 0,
            actor_updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn action_scale(&self) -> &ActionScale {
        &self.scale
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut DenseNet {
        &mut self.actor
    }

    pub fn actor_target(&self) -> Option<&DenseNet> {
        self.actor_target.as_ref()
    }

    pub fn critics(&self) -> &[EmcnCritic; 2] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [EmcnCritic; 2] {
        &mut self.critics
    }

    pub fn critic_targets(&self) -> &[EmcnCritic; 2] {
        &self.critic_targets
    }

    pub fn critic_targets_mut(&mut self) -> &mut [EmcnCritic; 2] {
        &mut self.critic_targets
    }

    /// SAC entropy temperature.
    pub fn temperature(&self) -> f64 {
        libm::exp(self.log_temperature)
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    pub(crate) fn record_env_step(&mut self) {
        self.env_steps += 1;
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        explore: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        Error::check_dim("state", self.state_dim, state.len())?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("state", "must be finite"));
        }
        let x = Matrix::from_vec(1, state.len(), state.to_vec())?;
        let out = self.actor.forward_batch(&x)?;
        let n = self.scale.dim();
        let mut action = match self.config.algorithm {
            Algorithm::Td3 => {
                let mut a = self.scale.scale_rows(&out).into_vec();
                if explore {
                    for (j, v) in a.iter_mut().enumerate() {
                        let z: f64 = StandardNormal.sample(rng);
                        *v += z * self.config.td3.exploration_noise * self.scale.half_range[j];
                    }
                }
                a
            }
            Algorithm::Sac => {
                let policy = &self.config.sac.policy;
                if explore {
                    let noise = normal_matrix(1, n, 1.0, rng);
                    policy.sample(&out, &noise, &self.scale)?.actions.into_vec()
                } else {
                    policy.mean_actions(&out, &self.scale)?.into_vec()
                }
            }
        };
        check_finite(&action)?;
        self.scale.clip(&mut action);
        Ok(action)
    }

    /// Uniform random action inside the bounds.
    pub fn random_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.scale.dim())
            .map(|j| rng.random_range(self.scale.low(j)..=self.scale.high(j)))
            .collect()
    }

    /// Deterministic actions used for TD-error scoring at insertion time:
    /// the target actor for TD3, the policy mean for SAC.
    fn greedy_next_actions(&self, next_states: &Matrix) -> Result<Matrix> {
        match self.config.algorithm {
            Algorithm::Td3 => {
                let actor = self.actor_target.as_ref().expect("td3 has an actor target");
                Ok(self.scale.scale_rows(&actor.forward_batch(next_states)?))
            }
            Algorithm::Sac => {
                let head = self.actor.forward_batch(next_states)?;
                self.config.sac.policy.mean_actions(&head, &self.scale)
            }
        }
    }

    /// TD3 smoothed target actions `clip(pi'(s') + clip(noise), low, high)`.
    pub fn td3_target_actions<R: Rng + ?Sized>(&self, next_states: &Matrix, rng: &mut R) -> Result<Matrix> {
        let actor = self
            .actor_target
            .as_ref()
            .ok_or(Error::Usage("target actions require a TD3 agent"))?;
        let mut actions = self.scale.scale_rows(&actor.forward_batch(next_states)?);
        let p = self.config.td3;
        for r in 0..actions.rows() {
            let row = actions.row_mut(r);
            for (j, v) in row.iter_mut().enumerate() {
                let h = self.scale.half_range[j];
                let z: f64 = StandardNormal.sample(rng);
                let clip = p.target_noise_clip * h;
                *v += (z * p.target_noise * h).clamp(-clip, clip);
            }
            self.scale.clip(row);
        }
        Ok(actions)
    }

    /// SAC next actions sampled from the current policy, with their
    /// log-probabilities.
    pub fn sac_next_actions<R: Rng + ?Sized>(
        &self,
        next_states: &Matrix,
        rng: &mut R,
    ) -> Result<(Matrix, Vec<f64>)> {
        if self.config.algorithm != Algorithm::Sac {
            return Err(Error::Usage("policy sampling requires a SAC agent"));
        }
        let head = self.actor.forward_batch(next_states)?;
        let noise = normal_matrix(next_states.rows(), self.scale.dim(), 1.0, rng);
        let sample = self.config.sac.policy.sample(&head, &noise, &self.scale)?;
        Ok((sample.actions, sample.log_probs))
    }

    fn min_target_q(&self, next_states: &Matrix, next_actions: &Matrix) -> Result<Vec<f64>> {
        let q1 = self.critic_targets[0].q_values(next_states, next_actions)?;
        let q2 = self.critic_targets[1].q_values(next_states, next_actions)?;
        Ok(q1.iter().zip(&q2).map(|(a, b)| a.min(*b)).collect())
    }

    /// Bellman targets for a batch, built from the actual rewards.
    pub fn bellman_targets<R: Rng + ?Sized>(&self, transitions: &[Transition], rng: &mut R) -> Result<Vec<f64>> {
        let b = BatchMatrices::from_transitions(transitions)?;
        self.targets_for(&b, rng)
    }

    fn targets_for<R: Rng + ?Sized>(&self, b: &BatchMatrices, rng: &mut R) -> Result<Vec<f64>> {
        let next_values = match self.config.algorithm {
            Algorithm::Td3 => {
                let a = self.td3_target_actions(&b.next_states, rng)?;
                self.min_target_q(&b.next_states, &a)?
            }
            Algorithm::Sac => {
                let (a, log_probs) = self.sac_next_actions(&b.next_states, rng)?;
                let temp = self.temperature();
                let q = self.min_target_q(&b.next_states, &a)?;
                q.iter()
                    .zip(&log_probs)
                    .map(|(q, lp)| if temp == 0.0 { *q } else { q - temp * lp })
                    .collect()
            }
        };
        Ok(b.rewards
            .iter()
            .zip(&b.terminals)
            .zip(&next_values)
            .map(|((&r, &d), &v)| bellman_target(r, self.config.gamma, d, v))
            .collect())
    }

    /// Priority score for a fresh transition under the current parameters;
    /// `None` for the uniform sampler.
    pub fn score(&self, t: &Transition) -> Result<Option<f64>> {
        let score = match self.config.sampler {
            SamplerKind::Uniform => None,
            SamplerKind::RpePer => Some(self.critics[0].rpe(t, self.config.rpe_mode)?),
            SamplerKind::TdPer => {
                let b = BatchMatrices::from_transitions(core::slice::from_ref(t))?;
                let next_a = self.greedy_next_actions(&b.next_states)?;
                let v = self.min_target_q(&b.next_states, &next_a)?[0];
                let y = bellman_target(t.reward, self.config.gamma, t.terminal, v);
                let q = self.critics[0].q_values(&b.states, &b.actions)?[0];
                Some(libm::fabs(y - q))
            }
        };
        if let Some(v) = score {
            check_finite(&[v])?;
        }
        Ok(score)
    }

    /// Scores `t` with the current parameters and inserts it. The uniform
    /// sampler stores every transition with the same score.
    pub fn observe(&self, buffer: &mut PrioritizedBuffer, t: Transition) -> Result<usize> {
        let score = self.score(&t)?.unwrap_or(0.0);
        buffer.insert(t, Some(score))
    }

    /// Inserts `t` with the buffer's running maximum priority instead of a
    /// score (uniform sampler: the shared constant score).
    pub fn observe_unscored(&self, buffer: &mut PrioritizedBuffer, t: Transition) -> Result<usize> {
        match self.config.sampler {
            SamplerKind::Uniform => buffer.insert(t, Some(0.0)),
            _ => buffer.insert(t, None),
        }
    }

    /// One gradient step on a batch drawn from `buffer`.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &mut PrioritizedBuffer,
        rng: &mut R,
    ) -> Result<TrainDiagnostics> {
        if buffer.len() < self.config.batch_size {
            return Err(Error::Usage("replay buffer holds fewer transitions than one batch"));
        }
        let sampled = buffer.sample(self.config.batch_size, rng)?;
        let diag = self.train_on_batch(&sampled, rng)?;
        let stale = self.refresh_priorities(buffer, &sampled, &diag.1)?;
        let mut diag = diag.0;
        diag.stale_updates = stale;
        Ok(diag)
    }

    /// Updates every network on `batch`; returns diagnostics and the Bellman
    /// targets used.
    fn train_on_batch<R: Rng + ?Sized>(
        &mut self,
        batch: &SampledBatch,
        rng: &mut R,
    ) -> Result<(TrainDiagnostics, Vec<f64>)> {
        let b = BatchMatrices::from_transitions(&batch.transitions)?;
        let targets = self.targets_for(&b, rng)?;
        let critic_batch = CriticBatch {
            states: &b.states,
            actions: &b.actions,
            rewards: &b.rewards,
            next_states: &b.next_states,
            targets: &targets,
            is_weights: &batch.is_weights,
        };
        let mean_q = {
            let q = self.critics[0].q_values(&b.states, &b.actions)?;
            q.iter().sum::<f64>() / q.len() as f64
        };

        let mut first_loss = CriticLoss::default();
        for k in 0..2 {
            let (loss, grads) = self.critics[k].combined_loss_and_grads(
                &critic_batch,
                self.config.loss_weights,
                self.config.is_weighting,
            )?;
            self.critic_opts[k].step(&mut self.critics[k], &grads)?;
            if k == 0 {
                first_loss = loss;
            }
        }
        self.grad_steps += 1;

        let actor_loss = match self.config.algorithm {
            Algorithm::Td3 => {
                if self.grad_steps % self.config.td3.policy_delay == 0 {
                    let (loss, grads) =
                        deterministic_actor_objective(&self.actor, &self.critics[0], &b.states, &self.scale)?;
                    self.actor_opt.step(&mut self.actor, &grads)?;
                    self.actor_updates += 1;
                    Some(loss)
                } else {
                    None
                }
            }
            Algorithm::Sac => {
                let noise = normal_matrix(b.states.rows(), self.scale.dim(), 1.0, rng);
                let obj = entropy_actor_objective(
                    &self.actor,
                    &self.critics,
                    &b.states,
                    &noise,
                    self.temperature(),
                    &self.config.sac.policy,
                    &self.scale,
                )?;
                self.actor_opt.step(&mut self.actor, &obj.grads)?;
                self.actor_updates += 1;
                if let Some(opt) = self.temperature_opt.as_mut() {
                    let target = self
                        .config
                        .sac
                        .target_entropy
                        .unwrap_or(-(self.scale.dim() as f64));
                    let mean = obj.log_probs.iter().map(|lp| lp + target).sum::<f64>()
                        / obj.log_probs.len() as f64;
                    let mut log_temp = vec![self.log_temperature];
                    opt.step(&mut log_temp, &vec![-mean])?;
                    self.log_temperature = log_temp[0];
                }
                Some(obj.loss)
            }
        };

        let tau = self.config.tau;
        for k in 0..2 {
            polyak_update(&mut self.critic_targets[k], &self.critics[k], tau)?;
        }
        if let Some(target) = self.actor_target.as_mut() {
            polyak_update(target, &self.actor, tau)?;
        }

        let rewards_pred = self.critics[0].predicted_rewards(&b.states, &b.actions)?;
        let mean_rpe = rewards_pred
            .iter()
            .zip(&b.rewards)
            .map(|(p, r)| self.config.rpe_mode.score(p - r))
            .sum::<f64>()
            / b.rewards.len() as f64;
        let temperature = (self.config.algorithm == Algorithm::Sac).then(|| self.temperature());
        Ok((
            TrainDiagnostics {
                grad_step: self.grad_steps,
                critic_loss: first_loss,
                actor_loss,
                mean_q,
                mean_rpe,
                temperature,
                stale_updates: 0,
            },
            targets,
        ))
    }

    /// Rewrites the sampled slots' priorities from the post-update
    /// parameters. TD-error scores reuse the step's Bellman targets.
    fn refresh_priorities(
        &self,
        buffer: &mut PrioritizedBuffer,
        batch: &SampledBatch,
        targets: &[f64],
    ) -> Result<usize> {
        let scores = match self.config.sampler {
            SamplerKind::Uniform => return Ok(0),
            SamplerKind::RpePer => self.batch_rpe(&batch.transitions)?,
            SamplerKind::TdPer => {
                let b = BatchMatrices::from_transitions(&batch.transitions)?;
                let q = self.critics[0].q_values(&b.states, &b.actions)?;
                q.iter().zip(targets).map(|(q, y)| libm::fabs(y - q)).collect()
            }
        };
        check_finite(&scores)?;
        Ok(buffer.update_priorities(&batch.slots, &scores)?.stale)
    }

    /// Reward prediction errors of the first critic on `ts`.
    pub fn batch_rpe(&self, ts: &[Transition]) -> Result<Vec<f64>> {
        let b = BatchMatrices::from_transitions(ts)?;
        self.critics[0].rpe_batch(&b.states, &b.actions, &b.rewards, self.config.rpe_mode)
    }

    /// Total number of trainable parameters across all online networks.
    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.critics.iter().map(|c| c.param_count()).sum::<usize>()
    }
}

/// Non-finite network outputs mean the parameters have blown up.
fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::Divergence { index }),
        None => Ok(()),
    }
}
