use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, EpisodeClock, StepResult};
use crate::Result;

const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const DT: f64 = 0.05;
const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const PI: f64 = core::f64::consts::PI;

/// Torque-limited pendulum swing-up. The angle is measured from upright,
/// the observation is `(cos(theta), sin(theta), theta_dot)` and the reward
/// is `-(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)` with `theta` wrapped to
/// `[-pi, pi)`, so the upright rest state earns the maximum reward 0.
///
/// Semi-implicit Euler: the velocity is updated first (and clipped to
/// `[-8, 8]`), then the angle uses the new velocity.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    clock: EpisodeClock,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = libm::fmod(theta + PI, two_pi);
    if t < 0.0 {
        t += two_pi;
    }
    t - PI
}

impl Pendulum {
    pub fn new() -> Self {
        let worst = PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE;
        Self {
            spec: EnvSpec {
                name: "pendulum",
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                horizon: 200,
                reward_range: (-worst, 0.0),
                dt: DT,
            },
            theta: 0.0,
            theta_dot: 0.0,
            clock: EpisodeClock::default(),
        }
    }

    /// Sets the physical state directly and starts a new episode.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) -> Vec<f64> {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.clock.reset();
        self.observation()
    }

    pub fn physical_state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    fn observation(&self) -> Vec<f64> {
        vec![libm::cos(self.theta), libm::sin(self.theta), self.theta_dot]
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// `theta ~ U[-pi, pi]`, `theta_dot ~ U[-1, 1]`.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.random_range(-PI..=PI);
        let theta_dot = rng.random_range(-1.0..=1.0);
        self.set_state(theta, theta_dot)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.clock.begin_step(&self.spec, action)?[0];
        let th = wrap_angle(self.theta);
        let cost = th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u;
        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * libm::sin(self.theta)
            + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        let truncated = self.clock.end_step(&self.spec);
        Ok(StepResult {
            next_state: self.observation(),
            reward: -cost,
            terminal: false,
            truncated,
        })
    }

    fn steps(&self) -> usize {
        self.clock.steps()
    }

    fn clipped_actions(&self) -> u64 {
        self.clock.clipped()
    }

    /// Energy pumping far from upright, PD stabilisation within 0.5 rad of
    /// it.
    fn scripted_action(&self, observation: &[f64]) -> Vec<f64> {
        let theta = libm::atan2(observation[1], observation[0]);
        let theta_dot = observation[2];
        let u = if libm::cos(theta) > libm::cos(0.5) {
            -(20.0 * theta + 5.0 * theta_dot)
        } else {
            let target = 3.0 * GRAVITY / (2.0 * LENGTH);
            let energy = 0.5 * theta_dot * theta_dot + target * libm::cos(theta);
            let direction = if theta_dot >= 0.0 { 1.0 } else { -1.0 };
            (target - energy) * direction
        };
        vec![u.clamp(-MAX_TORQUE, MAX_TORQUE)]
    }
}
