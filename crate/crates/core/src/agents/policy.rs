//! Actor-side math shared by TD3 and SAC: action squashing, the
//! reparameterised squashed-Gaussian policy and the two actor objectives.

use alloc::vec::Vec;

use crate::emcn::EmcnCritic;
use crate::nn::{DenseNet, Matrix, NetGrads};
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
const LN_2: f64 = core::f64::consts::LN_2;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-libm::fabs(x)))
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub(crate) fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// Affine map from `[-1, 1]^n` onto the action box.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionScale {
    pub center: Vec<f64>,
    pub half_range: Vec<f64>,
}

impl ActionScale {
    pub fn new(low: &[f64], high: &[f64]) -> Result<Self> {
        Error::check_dim("action bounds", low.len(), high.len())?;
        if low.iter().zip(high).any(|(l, h)| !(l < h)) {
            return Err(Error::invalid("action bounds", "low must be below high"));
        }
        Ok(Self {
            center: low.iter().zip(high).map(|(l, h)| 0.5 * (l + h)).collect(),
            half_range: low.iter().zip(high).map(|(l, h)| 0.5 * (h - l)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn low(&self, j: usize) -> f64 {
        self.center[j] - self.half_range[j]
    }

    pub fn high(&self, j: usize) -> f64 {
        self.center[j] + self.half_range[j]
    }

    /// Maps unit-box values row by row.
    pub fn scale_rows(&self, unit: &Matrix) -> Matrix {
        let mut out = unit.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.center[j] + self.half_range[j] * *v;
            }
        }
        out
    }

    pub fn clip(&self, action: &mut [f64]) {
        for (j, a) in action.iter_mut().enumerate() {
            *a = a.clamp(self.low(j), self.high(j));
        }
    }
}

/// Tanh-squashed diagonal Gaussian. The actor emits `2n` values per row:
/// means followed by unconstrained log-std parameters, which are mapped
/// smoothly into `[log_std_min, log_std_max]` by a rescaled tanh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquashedGaussian {
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl Default for SquashedGaussian {
    fn default() -> Self {
        Self {
            log_std_min: -5.0,
            log_std_max: 2.0,
        }
    }
}

/// Reparameterised draw: `u = mu + sigma * noise`, `a = c + h tanh(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub actions: Matrix,
    pub log_probs: Vec<f64>,
    squashed: Matrix,
    sigma: Matrix,
    raw_tanh: Matrix,
    noise: Matrix,
}

impl SquashedGaussian {
    fn log_std(&self, raw: f64) -> (f64, f64) {
        let t = libm::tanh(raw);
        (
            self.log_std_min + 0.5 * (self.log_std_max - self.log_std_min) * (t + 1.0),
            t,
        )
    }

    /// Deterministic action `c + h tanh(mu)`.
    pub fn mean_actions(&self, head: &Matrix, scale: &ActionScale) -> Result<Matrix> {
        let n = scale.dim();
        Error::check_dim("policy head", 2 * n, head.cols())?;
        let mut out = Matrix::zeros(head.rows(), n);
        for r in 0..head.rows() {
            for j in 0..n {
                out.set(r, j, scale.center[j] + scale.half_range[j] * libm::tanh(head.get(r, j)));
            }
        }
        Ok(out)
    }

    pub fn sample(&self, head: &Matrix, noise: &Matrix, scale: &ActionScale) -> Result<SquashedSample> {
        let n = scale.dim();
        Error::check_dim("policy head", 2 * n, head.cols())?;
        Error::check_dim("policy noise", n, noise.cols())?;
        Error::check_dim("policy noise rows", head.rows(), noise.rows())?;
        let rows = head.rows();
        let mut actions = Matrix::zeros(rows, n);
        let mut squashed = Matrix::zeros(rows, n);
        let mut sigma = Matrix::zeros(rows, n);
        let mut raw_tanh = Matrix::zeros(rows, n);
        let mut log_probs = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut lp = 0.0;
            for j in 0..n {
                let mu = head.get(r, j);
                let (log_std, rt) = self.log_std(head.get(r, n + j));
                let s = libm::exp(log_std);
                let eps = noise.get(r, j);
                let u = mu + s * eps;
                let t = libm::tanh(u);
                actions.set(r, j, scale.center[j] + scale.half_range[j] * t);
                squashed.set(r, j, t);
                sigma.set(r, j, s);
                raw_tanh.set(r, j, rt);
                lp += -0.5 * eps * eps - log_std - HALF_LN_2PI
                    - libm::log(scale.half_range[j])
                    - log_one_minus_tanh_sq(u);
            }
            log_probs.push(lp);
        }
        Ok(SquashedSample {
            actions,
            log_probs,
            squashed,
            sigma,
            raw_tanh,
            noise: noise.clone(),
        })
    }

    /// Gradient with respect to the policy head given upstream gradients on
    /// the actions and on the log-probabilities (noise held fixed).
    pub fn backward(
        &self,
        sample: &SquashedSample,
        scale: &ActionScale,
        d_actions: &Matrix,
        d_log_probs: &[f64],
    ) -> Result<Matrix> {
        let n = scale.dim();
        let rows = sample.actions.rows();
        Error::check_dim("action gradient", n, d_actions.cols())?;
        Error::check_dim("action gradient rows", rows, d_actions.rows())?;
        Error::check_dim("log-prob gradient", rows, d_log_probs.len())?;
        let half_span = 0.5 * (self.log_std_max - self.log_std_min);
        let mut d_head = Matrix::zeros(rows, 2 * n);
        for r in 0..rows {
            let dlp = d_log_probs[r];
            for j in 0..n {
                let t = sample.squashed.get(r, j);
                let s = sample.sigma.get(r, j);
                let eps = sample.noise.get(r, j);
                let da_du = scale.half_range[j] * (1.0 - t * t);
                let du = d_actions.get(r, j) * da_du + dlp * 2.0 * t;
                // u = mu + exp(log_std) eps; log-prob also has -log_std.
                let d_log_std = du * s * eps - dlp;
                let rt = sample.raw_tanh.get(r, j);
                d_head.set(r, j, du);
                d_head.set(r, n + j, d_log_std * half_span * (1.0 - rt * rt));
            }
        }
        Ok(d_head)
    }
}

/// Deterministic policy objective `-mean_i Q(s_i, pi(s_i))` with `pi`
/// squashed by a tanh output layer; returns the loss and actor gradients.
pub fn deterministic_actor_objective(
    actor: &DenseNet,
    critic: &EmcnCritic,
    states: &Matrix,
    scale: &ActionScale,
) -> Result<(f64, NetGrads)> {
    let m = states.rows();
    let acts = actor.forward_cached(states.clone())?;
    let actions = scale.scale_rows(acts.output());
    let (q, dq_da) = critic.q_and_action_grad(states, &actions)?;
    let inv_m = 1.0 / m as f64;
    let loss = -q.iter().sum::<f64>() * inv_m;
    let mut upstream = dq_da;
    for r in 0..m {
        for (j, v) in upstream.row_mut(r).iter_mut().enumerate() {
            *v *= -inv_m * scale.half_range[j];
        }
    }
    let (grads, _) = actor.backward(&acts, &upstream)?;
    Ok((loss, grads))
}

/// Output of [`entropy_actor_objective`].
#[derive(Debug, Clone)]
pub struct EntropyObjective {
    pub loss: f64,
    pub grads: NetGrads,
    pub log_probs: Vec<f64>,
}

/// Entropy-regularised objective `mean_i (temp * log pi(a_i|s_i) - min_k
/// Q_k(s_i, a_i))` with `a_i` reparameterised through `noise`.
pub fn entropy_actor_objective(
    actor: &DenseNet,
    critics: &[EmcnCritic],
    states: &Matrix,
    noise: &Matrix,
    temperature: f64,
    policy: &SquashedGaussian,
    scale: &ActionScale,
) -> Result<EntropyObjective> {
    if critics.is_empty() {
        return Err(Error::Usage("entropy objective needs at least one critic"));
    }
    let m = states.rows();
    let acts = actor.forward_cached(states.clone())?;
    let sample = policy.sample(acts.output(), noise, scale)?;
    let evaluated = critics
        .iter()
        .map(|c| c.q_and_action_grad(states, &sample.actions))
        .collect::<Result<Vec<_>>>()?;
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut d_actions = Matrix::zeros(m, scale.dim());
    for r in 0..m {
        let (best, _) = evaluated
            .iter()
            .enumerate()
            .map(|(k, (q, _))| (k, q[r]))
            .fold((0, f64::INFINITY), |acc, (k, q)| if q < acc.1 { (k, q) } else { acc });
        let (q, grad) = &evaluated[best];
        loss += (temperature * sample.log_probs[r] - q[r]) * inv_m;
        for (j, d) in d_actions.row_mut(r).iter_mut().enumerate() {
            *d = -grad.get(r, j) * inv_m;
        }
    }
    let d_log_probs = alloc::vec![temperature * inv_m; m];
    let d_head = policy.backward(&sample, scale, &d_actions, &d_log_probs)?;
    let (grads, _) = actor.backward(&acts, &d_head)?;
    Ok(EntropyObjective {
        loss,
        grads,
        log_probs: sample.log_probs,
    })
}
