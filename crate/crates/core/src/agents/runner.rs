//! The environment interaction loop.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;

use super::{Agent, TrainDiagnostics};
use crate::envs::Env;
use crate::replay::{BetaSchedule, PrioritizedBuffer, Transition};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    /// Env steps taken with uniform random actions before any training.
    pub learning_starts: u64,
    /// Gradient steps per env step once training has started.
    pub train_ratio: f64,
    pub beta: BetaSchedule,
    /// Episode `k` is reset with seed `episode_seed + k`.
    pub episode_seed: u64,
}

impl LoopConfig {
    pub fn new(learning_starts: u64, beta: BetaSchedule, episode_seed: u64) -> Self {
        Self {
            learning_starts,
            train_ratio: 1.0,
            beta,
            episode_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio.is_finite() && self.train_ratio >= 0.0) {
            return Err(Error::invalid("train_ratio", "must be finite and non-negative"));
        }
        for (field, b) in [("beta.start", self.beta.start), ("beta.end", self.beta.end)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::invalid(field, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Gradient steps owed after `env_steps` interactions.
    pub fn grad_steps_due(&self, env_steps: u64) -> u64 {
        if env_steps <= self.learning_starts {
            return 0;
        }
        ((env_steps - self.learning_starts) as f64 * self.train_ratio) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoopEvent {
    EpisodeEnd {
        env_step: u64,
        episode_return: f64,
        length: usize,
        terminal: bool,
        truncated: bool,
    },
    Train(TrainDiagnostics),
}

/// Drives one agent against one environment and one replay buffer.
pub struct EpisodeLoop {
    env: Box<dyn Env>,
    buffer: PrioritizedBuffer,
    config: LoopConfig,
    observation: Vec<f64>,
    episodes: u64,
    episode_return: f64,
    env_steps: u64,
    grad_steps: u64,
}

impl EpisodeLoop {
    pub fn new(mut env: Box<dyn Env>, buffer: PrioritizedBuffer, config: LoopConfig) -> Result<Self> {
        config.validate()?;
        let spec = env.spec();
        Error::check_dim("buffer state_dim", spec.state_dim, buffer.config().state_dim)?;
        Error::check_dim("buffer action_dim", spec.action_dim, buffer.config().action_dim)?;
        let observation = env.reset(config.episode_seed);
        Ok(Self {
            env,
            buffer,
            config,
            observation,
            episodes: 0,
            episode_return: 0.0,
            env_steps: 0,
            grad_steps: 0,
        })
    }

    pub fn env(&self) -> &dyn Env {
        &*self.env
    }

    pub fn buffer(&self) -> &PrioritizedBuffer {
        &self.buffer
    }

    pub fn buffer_mut(&mut self) -> &mut PrioritizedBuffer {
        &mut self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Takes one env step, then any gradient steps that became due. Events
    /// are passed to `on_event` in order.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        agent: &mut Agent,
        rng: &mut R,
        on_event: &mut dyn FnMut(&LoopEvent),
    ) -> Result<()> {
        let spec = self.env.spec();
        Error::check_dim("agent action_dim", spec.action_dim, agent.action_scale().dim())?;
        let warming_up = self.env_steps < self.config.learning_starts;
        let action = if warming_up {
            agent.random_action(rng)
        } else {
            agent.select_action(&self.observation, true, rng)?
        };
        let result = self.env.step(&action)?;
        self.env_steps += 1;
        agent.record_env_step();
        self.episode_return += result.reward;

        let transition = Transition {
            state: core::mem::take(&mut self.observation),
            action,
            reward: result.reward,
            next_state: result.next_state.clone(),
            terminal: result.terminal,
        };
        if warming_up {
            agent.observe_unscored(&mut self.buffer, transition)?;
        } else {
            agent.observe(&mut self.buffer, transition)?;
        }

        if result.terminal || result.truncated {
            on_event(&LoopEvent::EpisodeEnd {
                env_step: self.env_steps,
                episode_return: self.episode_return,
                length: self.env.steps(),
                terminal: result.terminal,
                truncated: result.truncated,
            });
            self.episodes += 1;
            self.episode_return = 0.0;
            self.observation = self.env.reset(self.config.episode_seed.wrapping_add(self.episodes));
        } else {
            self.observation = result.next_state;
        }

        self.buffer.set_beta(self.config.beta.value(self.env_steps))?;
        let due = self.config.grad_steps_due(self.env_steps);
        let batch = agent.config().batch_size;
        while self.grad_steps < due && self.buffer.len() >= batch {
            let diag = agent.train_step(&mut self.buffer, rng)?;
            self.grad_steps += 1;
            on_event(&LoopEvent::Train(diag));
        }
        Ok(())
    }

    /// Runs `n` env steps.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        agent: &mut Agent,
        n: u64,
        rng: &mut R,
        on_event: &mut dyn FnMut(&LoopEvent),
    ) -> Result<()> {
        for _ in 0..n {
            self.step(agent, rng, on_event)?;
        }
        Ok(())
    }
}

/// Undiscounted returns of one episode per seed under `policy`.
pub fn evaluate_policy(
    env: &mut dyn Env,
    seeds: &[u64],
    policy: &mut dyn FnMut(&dyn Env, &[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let mut returns = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut obs = env.reset(seed);
        let mut total = 0.0;
        loop {
            let action = policy(env, &obs)?;
            let r = env.step(&action)?;
            total += r.reward;
            if r.terminal || r.truncated {
                break;
            }
            obs = r.next_state;
        }
        returns.push(total);
    }
    Ok(returns)
}
