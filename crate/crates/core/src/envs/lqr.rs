use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, EpisodeClock, StepResult};
use crate::{Error, Result};

type Mat2 = [[f64; 2]; 2];

/// `x' = A x + B u`
pub const LQR_A: Mat2 = [[1.05, 0.05], [0.0, 1.05]];
pub const LQR_B: Mat2 = [[0.2, 0.0], [0.0, 0.2]];
/// Stage cost `x^T Q x + u^T R u`.
pub const LQR_Q: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const LQR_R: Mat2 = [[0.5, 0.0], [0.0, 0.5]];
const MAX_STATE: f64 = 10.0;
const MAX_ACTION: f64 = 2.0;

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

fn inverse(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn quad(m: &Mat2, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += x[i] * m[i][j] * x[j];
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiSolution {
    /// Cost-to-go matrix `P`.
    pub cost_to_go: Mat2,
    /// Feedback gain `K` of the optimal law `u = -K x`.
    pub gain: Mat2,
    pub iterations: usize,
}

/// Fixed-point iteration of the discrete algebraic Riccati equation
/// `P = Q + A^T P A - A^T P B (R + B^T P B)^-1 B^T P A`.
pub fn riccati_gain(a: &Mat2, b: &Mat2, q: &Mat2, r: &Mat2) -> Result<RiccatiSolution> {
    let at = transpose(a);
    let bt = transpose(b);
    let mut p = *q;
    for iter in 1..=100_000 {
        let btp = mul(&bt, &p);
        let s = add(r, &mul(&btp, b));
        let s_inv = inverse(&s).ok_or(Error::invalid("riccati", "singular R + B^T P B"))?;
        let gain = mul(&s_inv, &mul(&btp, a));
        let atp = mul(&at, &p);
        let next = add(q, &sub(&mul(&atp, a), &mul(&mul(&atp, b), &gain)));
        let delta = (0..4).map(|k| (next[k / 2][k % 2] - p[k / 2][k % 2]).abs()).fold(0.0, f64::max);
        p = next;
        if delta < 1e-13 {
            let btp = mul(&bt, &p);
            let s_inv = inverse(&add(r, &mul(&btp, b))).expect("checked above");
            return Ok(RiccatiSolution {
                cost_to_go: p,
                gain: mul(&s_inv, &mul(&btp, a)),
                iterations: iter,
            });
        }
    }
    Err(Error::invalid("riccati", "iteration did not converge"))
}

/// Two-dimensional unstable linear system with quadratic cost; its optimal
/// stationary controller follows from the Riccati equation.
///
/// Reward `-(x^T Q x + u^T R u)` is charged on the pre-step state. States
/// are clamped to `[-10, 10]` so rewards stay bounded under any policy.
#[derive(Debug, Clone)]
pub struct Lqr2 {
    spec: EnvSpec,
    state: [f64; 2],
    gain: Mat2,
    clock: EpisodeClock,
}

impl Default for Lqr2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Lqr2 {
    pub fn new() -> Self {
        let worst = 2.0 * MAX_STATE * MAX_STATE + 0.5 * 2.0 * MAX_ACTION * MAX_ACTION;
        let gain = riccati_gain(&LQR_A, &LQR_B, &LQR_Q, &LQR_R)
            .expect("constant system is stabilisable")
            .gain;
        Self {
            spec: EnvSpec {
                name: "lqr2",
                state_dim: 2,
                action_dim: 2,
                action_low: vec![-MAX_ACTION; 2],
                action_high: vec![MAX_ACTION; 2],
                horizon: 100,
                reward_range: (-worst, 0.0),
                dt: 0.0,
            },
            state: [0.0; 2],
            gain,
            clock: EpisodeClock::default(),
        }
    }

    pub fn set_state(&mut self, state: [f64; 2]) -> Vec<f64> {
        self.state = state;
        self.clock.reset();
        state.to_vec()
    }
}

impl Env for Lqr2 {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// `x ~ U[-1, 1]^2`.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        self.set_state(x)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.clock.begin_step(&self.spec, action)?;
        let cost = quad(&LQR_Q, &self.state) + quad(&LQR_R, &u);
        let x = self.state;
        let mut next = [0.0; 2];
        for (i, n) in next.iter_mut().enumerate() {
            let v = LQR_A[i][0] * x[0] + LQR_A[i][1] * x[1] + LQR_B[i][0] * u[0] + LQR_B[i][1] * u[1];
            *n = v.clamp(-MAX_STATE, MAX_STATE);
        }
        self.state = next;
        let truncated = self.clock.end_step(&self.spec);
        Ok(StepResult {
            next_state: next.to_vec(),
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

    /// Riccati-optimal stationary feedback `u = -K x`, clipped to bounds.
    fn scripted_action(&self, observation: &[f64]) -> Vec<f64> {
        (0..2)
            .map(|i| {
                let u = -(self.gain[i][0] * observation[0] + self.gain[i][1] * observation[1]);
                u.clamp(-MAX_ACTION, MAX_ACTION)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_is_the_quadratic_form() {
        let mut env = Lqr2::new();
        env.set_state([0.5, -1.0]);
        let r = env.step(&[1.0, 0.5]).unwrap();
        // x^T Q x = 0.25 + 1.0, u^T R u = 0.5 * (1.0 + 0.25)
        assert!((r.reward + 1.875).abs() < 1e-15);
        let expected = [1.05 * 0.5 - 0.05 + 0.2, -1.05 + 0.1];
        for (got, want) in r.next_state.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn riccati_solution_is_a_fixed_point() {
        let sol = riccati_gain(&LQR_A, &LQR_B, &LQR_Q, &LQR_R).unwrap();
        let p = sol.cost_to_go;
        let at = transpose(&LQR_A);
        let bt = transpose(&LQR_B);
        let s = add(&LQR_R, &mul(&mul(&bt, &p), &LQR_B));
        let k = mul(&inverse(&s).unwrap(), &mul(&mul(&bt, &p), &LQR_A));
        let rhs = add(&LQR_Q, &sub(&mul(&mul(&at, &p), &LQR_A), &mul(&mul(&mul(&at, &p), &LQR_B), &k)));
        for i in 0..2 {
            for j in 0..2 {
                assert!((rhs[i][j] - p[i][j]).abs() < 1e-10);
            }
        }
        // closed loop A - B K must be stable
        let cl = sub(&LQR_A, &mul(&LQR_B, &sol.gain));
        let tr = cl[0][0] + cl[1][1];
        let det = cl[0][0] * cl[1][1] - cl[0][1] * cl[1][0];
        assert!(det.abs() < 1.0 && tr.abs() < 1.0 + det);
    }

    #[test]
    fn optimal_cost_matches_quadratic_value_function() {
        // Over a long horizon the optimal return approaches -x0^T P x0.
        let sol = riccati_gain(&LQR_A, &LQR_B, &LQR_Q, &LQR_R).unwrap();
        let mut env = Lqr2::new();
        let x0 = [0.3, -0.6];
        let mut obs = env.set_state(x0);
        let mut total = 0.0;
        for _ in 0..100 {
            let a = env.scripted_action(&obs);
            let r = env.step(&a).unwrap();
            total += r.reward;
            obs = r.next_state;
        }
        assert!((total + quad(&sol.cost_to_go, &x0)).abs() < 1e-8, "{total}");
    }

    #[test]
    fn initial_states_within_bounds() {
        let mut env = Lqr2::new();
        for seed in 0..1000 {
            let s = env.reset(seed);
            assert!(s.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn rollout_matches_independent_dynamics() {
        let mut env = Lqr2::new();
        let s = env.reset(12);
        let mut x = [s[0], s[1]];
        for k in 0..100 {
            let u = [0.3 * libm::sin(k as f64), -0.2];
            let r = env.step(&u).unwrap();
            let cost = x[0] * x[0] + x[1] * x[1] + 0.5 * (u[0] * u[0] + u[1] * u[1]);
            let nx = [
                (1.05 * x[0] + 0.05 * x[1] + 0.2 * u[0]).max(-10.0).min(10.0),
                (1.05 * x[1] + 0.2 * u[1]).max(-10.0).min(10.0),
            ];
            assert!((r.reward + cost).abs() <= 1e-10);
            assert!((r.next_state[0] - nx[0]).abs() <= 1e-10);
            assert!((r.next_state[1] - nx[1]).abs() <= 1e-10);
            x = nx;
        }
    }
}
