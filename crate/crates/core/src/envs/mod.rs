//! Deterministic toy continuous-control environments.
//!
//! | name             | state | action | horizon | dt   | reward range          |
//! |------------------|-------|--------|---------|------|-----------------------|
//! | `pendulum`       | 3     | 1      | 200     | 0.05 | `[-16.2736, 0]`       |
//! | `pointmass2d`    | 4     | 2      | 150     | 0.1  | `[-2*sqrt(2), 0]`     |
//! | `lqr2`           | 2     | 2      | 100     | -    | `[-204, 0]`           |
//! | `sparse_reacher` | 4     | 2      | 150     | 0.1  | `[0, 1]`              |
//!
//! Dynamics are deterministic; randomness only enters through the seed
//! passed to [`Env::reset`]. None of the environments has a genuine
//! terminal state, so episodes end by time-limit truncation only.

mod lqr;
mod pendulum;
mod pointmass;

pub use lqr::{riccati_gain, Lqr2, RiccatiSolution};
pub use pendulum::Pendulum;
pub use pointmass::{PointMass, PointMassReward};

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const ENV_NAMES: [&str; 4] = ["pendulum", "pointmass2d", "lqr2", "sparse_reacher"];

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub horizon: usize,
    pub reward_range: (f64, f64),
    /// Integration step; zero for discrete-time systems.
    pub dt: f64,
}

impl EnvSpec {
    pub fn action_center(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn action_half_range(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    pub truncated: bool,
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode; the initial state depends only on `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step. Actions outside the bounds are clipped and
    /// counted in [`Env::clipped_actions`].
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;

    /// Number of steps so far in the current episode.
    fn steps(&self) -> usize;

    fn clipped_actions(&self) -> u64;

    /// Hand-written reference controller for the current observation.
    fn scripted_action(&self, observation: &[f64]) -> Vec<f64>;
}

pub fn make_env(name: &str) -> Option<Box<dyn Env>> {
    match name {
        "pendulum" => Some(Box::new(Pendulum::new())),
        "pointmass2d" => Some(Box::new(PointMass::new(PointMassReward::Distance))),
        "lqr2" => Some(Box::new(Lqr2::new())),
        "sparse_reacher" => Some(Box::new(PointMass::new(PointMassReward::SparseGoal))),
        _ => None,
    }
}

/// Bookkeeping shared by all environments: step counter, episode status and
/// the clipped-action counter.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpisodeClock {
    steps: usize,
    active: bool,
    clipped: u64,
}

impl EpisodeClock {
    pub(crate) fn reset(&mut self) {
        self.steps = 0;
        self.active = true;
    }

    pub(crate) fn steps(&self) -> usize {
        self.steps
    }

    pub(crate) fn clipped(&self) -> u64 {
        self.clipped
    }

    /// Validates and clips `action`, returning the clipped copy.
    pub(crate) fn begin_step(&mut self, spec: &EnvSpec, action: &[f64]) -> Result<Vec<f64>> {
        if !self.active {
            return Err(Error::Usage("step called on a finished episode; call reset first"));
        }
        Error::check_dim("action", spec.action_dim, action.len())?;
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("action", "must be finite"));
        }
        let mut clipped = false;
        let out = action
            .iter()
            .zip(spec.action_low.iter().zip(&spec.action_high))
            .map(|(&a, (&lo, &hi))| {
                if a < lo || a > hi {
                    clipped = true;
                }
                a.clamp(lo, hi)
            })
            .collect();
        if clipped {
            self.clipped += 1;
        }
        Ok(out)
    }

    /// Advances the counter and reports truncation.
    pub(crate) fn end_step(&mut self, spec: &EnvSpec) -> bool {
        self.steps += 1;
        let truncated = self.steps >= spec.horizon;
        if truncated {
            self.active = false;
        }
        truncated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn registry_knows_every_env() {
        for name in ENV_NAMES {
            let env = make_env(name).unwrap();
            assert_eq!(env.spec().name, name);
            let s = env.spec();
            assert!(s.horizon >= 1);
            assert!(s.action_low.iter().zip(&s.action_high).all(|(l, h)| l < h));
            assert!(s.reward_range.0 <= s.reward_range.1);
        }
        assert!(make_env("hopper").is_none());
    }

    #[test]
    fn horizon_truncates_and_blocks_further_steps() {
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            env.reset(3);
            let horizon = env.spec().horizon;
            let zero = vec![0.0; env.spec().action_dim];
            for k in 1..=horizon {
                let r = env.step(&zero).unwrap();
                assert!(!r.terminal);
                assert_eq!(r.truncated, k == horizon);
            }
            assert!(matches!(env.step(&zero), Err(Error::Usage(_))));
            env.reset(4);
            assert!(env.step(&zero).is_ok());
        }
    }

    #[test]
    fn step_before_reset_is_a_usage_error() {
        let mut env = make_env("pendulum").unwrap();
        assert!(matches!(env.step(&[0.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn out_of_bounds_actions_are_clipped_and_counted() {
        let mut a = make_env("pointmass2d").unwrap();
        let mut b = make_env("pointmass2d").unwrap();
        a.reset(1);
        b.reset(1);
        let ra = a.step(&[5.0, -7.0]).unwrap();
        let rb = b.step(&[1.0, -1.0]).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.clipped_actions(), 1);
        assert_eq!(b.clipped_actions(), 0);
    }

    #[test]
    fn wrong_action_dim_is_rejected() {
        let mut env = make_env("lqr2").unwrap();
        env.reset(0);
        assert!(env.step(&[0.0]).is_err());
    }

    #[test]
    fn rewards_stay_in_range_under_random_actions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            let (lo, hi) = env.spec().reward_range;
            for ep in 0..5 {
                env.reset(ep);
                loop {
                    let a: Vec<f64> = (0..env.spec().action_dim)
                        .map(|_| rng.random_range(-3.0..3.0))
                        .collect();
                    let r = env.step(&a).unwrap();
                    assert!(r.reward >= lo && r.reward <= hi, "{name}: {}", r.reward);
                    assert!(r.next_state.iter().all(|v| v.is_finite()));
                    if r.truncated {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        for name in ENV_NAMES {
            let mut a = make_env(name).unwrap();
            let mut b = make_env(name).unwrap();
            assert_eq!(a.reset(17), b.reset(17));
            for k in 0..50 {
                let act: Vec<f64> = (0..a.spec().action_dim)
                    .map(|j| libm::sin((k * 7 + j) as f64))
                    .collect();
                let ra = a.step(&act).unwrap();
                let rb = b.step(&act).unwrap();
                assert_eq!(ra, rb);
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        for name in ENV_NAMES {
            let mut env = make_env(name).unwrap();
            let a = env.reset(1);
            let b = env.reset(2);
            assert_ne!(a, b, "{name}");
        }
    }
}
