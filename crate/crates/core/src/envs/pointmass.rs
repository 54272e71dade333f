use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, EpisodeClock, StepResult};
use crate::Result;

const DT: f64 = 0.1;
const DAMPING: f64 = 0.5;
const MAX_POS: f64 = 2.0;
const MAX_VEL: f64 = 2.0;
const START_RANGE: f64 = 1.2;
const GOAL_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMassReward {
    /// `-|p|`, the negative distance to the goal at the origin.
    Distance,
    /// 1 inside the goal radius, 0 elsewhere.
    SparseGoal,
}

/// Unit mass on a plane with linear damping, pushed by a bounded force
/// toward a goal at the origin. State `(x, y, vx, vy)`, action `(fx, fy)` in
/// `[-1, 1]^2`.
///
/// Semi-implicit Euler with `dt = 0.1`: `v += dt (f - 0.5 v)` clipped to
/// `[-2, 2]`, then `p += dt v`; a position leaving `[-2, 2]` is clamped and
/// the matching velocity component zeroed.
#[derive(Debug, Clone)]
pub struct PointMass {
    spec: EnvSpec,
    reward: PointMassReward,
    state: [f64; 4],
    clock: EpisodeClock,
}

impl PointMass {
    pub fn new(reward: PointMassReward) -> Self {
        let (name, reward_range) = match reward {
            PointMassReward::Distance => ("pointmass2d", (-MAX_POS * libm::sqrt(2.0), 0.0)),
            PointMassReward::SparseGoal => ("sparse_reacher", (0.0, 1.0)),
        };
        Self {
            spec: EnvSpec {
                name,
                state_dim: 4,
                action_dim: 2,
                action_low: vec![-1.0, -1.0],
                action_high: vec![1.0, 1.0],
                horizon: 150,
                reward_range,
                dt: DT,
            },
            reward,
            state: [0.0; 4],
            clock: EpisodeClock::default(),
        }
    }

    pub fn goal_radius() -> f64 {
        GOAL_RADIUS
    }

    pub fn set_state(&mut self, state: [f64; 4]) -> Vec<f64> {
        self.state = state;
        self.clock.reset();
        self.state.to_vec()
    }

    fn reward_at(&self, x: f64, y: f64) -> f64 {
        let dist = libm::hypot(x, y);
        match self.reward {
            PointMassReward::Distance => -dist,
            PointMassReward::SparseGoal => {
                if dist < GOAL_RADIUS {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl Env for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Position uniform in `[-1.2, 1.2]^2`, at rest.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.random_range(-START_RANGE..=START_RANGE);
        let y = rng.random_range(-START_RANGE..=START_RANGE);
        self.set_state([x, y, 0.0, 0.0])
    }

    /// The reward is evaluated at the post-step position.
    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let f = self.clock.begin_step(&self.spec, action)?;
        for axis in 0..2 {
            let v = self.state[2 + axis] + DT * (f[axis] - DAMPING * self.state[2 + axis]);
            let v = v.clamp(-MAX_VEL, MAX_VEL);
            let p = self.state[axis] + DT * v;
            if p.abs() > MAX_POS {
                self.state[axis] = p.clamp(-MAX_POS, MAX_POS);
                self.state[2 + axis] = 0.0;
            } else {
                self.state[axis] = p;
                self.state[2 + axis] = v;
            }
        }
        let reward = self.reward_at(self.state[0], self.state[1]);
        let truncated = self.clock.end_step(&self.spec);
        Ok(StepResult {
            next_state: self.state.to_vec(),
            reward,
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

    /// PD controller toward the origin.
    fn scripted_action(&self, observation: &[f64]) -> Vec<f64> {
        (0..2)
            .map(|axis| (-2.0 * observation[axis] - 2.0 * observation[2 + axis]).clamp(-1.0, 1.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_reward_is_negative_norm() {
        let mut env = PointMass::new(PointMassReward::Distance);
        env.set_state([0.3, -0.4, 0.0, 0.0]);
        let r = env.step(&[0.0, 0.0]).unwrap();
        assert!((r.reward + 0.5).abs() < 1e-12);
    }

    #[test]
    fn sparse_reward_pays_inside_goal_only() {
        let mut env = PointMass::new(PointMassReward::SparseGoal);
        env.set_state([0.1, 0.0, 0.0, 0.0]);
        assert_eq!(env.step(&[0.0, 0.0]).unwrap().reward, 1.0);
        env.set_state([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(env.step(&[0.0, 0.0]).unwrap().reward, 0.0);
    }

    #[test]
    fn initial_states_within_bounds() {
        let mut env = PointMass::new(PointMassReward::Distance);
        for seed in 0..1000 {
            let s = env.reset(seed);
            assert!(s[0].abs() <= START_RANGE && s[1].abs() <= START_RANGE);
            assert_eq!(&s[2..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn walls_clamp_position_and_stop_motion() {
        let mut env = PointMass::new(PointMassReward::Distance);
        env.set_state([1.99, 0.0, 2.0, 0.0]);
        let r = env.step(&[1.0, 0.0]).unwrap();
        assert_eq!(r.next_state[0], 2.0);
        assert_eq!(r.next_state[2], 0.0);
    }

    #[test]
    fn rollout_matches_independent_dynamics() {
        let mut env = PointMass::new(PointMassReward::Distance);
        let start = env.reset(8);
        let (mut p, mut v) = ([start[0], start[1]], [0.0f64, 0.0f64]);
        for k in 0..100 {
            let a = [libm::cos(k as f64 * 0.2), -0.8 * libm::sin(k as f64 * 0.1)];
            let r = env.step(&a).unwrap();
            for i in 0..2 {
                let nv = (v[i] + 0.1 * (a[i] - 0.5 * v[i])).max(-2.0).min(2.0);
                let np = p[i] + 0.1 * nv;
                if np > 2.0 || np < -2.0 {
                    p[i] = np.max(-2.0).min(2.0);
                    v[i] = 0.0;
                } else {
                    p[i] = np;
                    v[i] = nv;
                }
            }
            let expected = [p[0], p[1], v[0], v[1]];
            for (got, want) in r.next_state.iter().zip(expected) {
                assert!((got - want).abs() <= 1e-10);
            }
            assert!((r.reward + (p[0] * p[0] + p[1] * p[1]).sqrt()).abs() <= 1e-10);
        }
    }

    #[test]
    fn scripted_controller_reaches_goal() {
        let mut env = PointMass::new(PointMassReward::SparseGoal);
        let mut obs = env.reset(1);
        let mut total = 0.0;
        loop {
            let a = env.scripted_action(&obs);
            let r = env.step(&a).unwrap();
            total += r.reward;
            obs = r.next_state;
            if r.truncated {
                break;
            }
        }
        assert!(total > 100.0, "{total}");
    }
}
