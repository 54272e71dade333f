//! Multi-head critic: a shared trunk over `(state, action)` feeding a
//! Q-value head, a reward head and a next-state head.
//!
//! The Q head is trained against Bellman targets built from the *actual*
//! environment reward; the reward head's residual is the reward prediction
//! error used as a replay priority.

use alloc::vec::Vec;

use rand::Rng;

use crate::nn::{Activation, Activations, Dense, DenseNet, Matrix, NetGrads, Parameters};
use crate::replay::Transition;
use crate::{Error, Result};

/// Weights of the Q, reward and transition terms in the combined loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub q: f64,
    pub reward: f64,
    pub transition: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            q: 1.0,
            reward: 1.0,
            transition: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(q: f64, reward: f64, transition: f64) -> Result<Self> {
        let w = Self {
            q,
            reward,
            transition,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.q, self.reward, self.transition];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("loss weights", "must be finite and non-negative"));
        }
        if all.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("loss weights", "at least one must be positive"));
        }
        Ok(())
    }
}

/// How the reward residual becomes a priority score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RpeMode {
    /// `(R(s, a) - r)^2`
    #[default]
    Squared,
    /// `|R(s, a) - r|`
    Absolute,
}

impl RpeMode {
    pub fn score(self, residual: f64) -> f64 {
        match self {
            RpeMode::Squared => residual * residual,
            RpeMode::Absolute => libm::fabs(residual),
        }
    }
}

/// Which loss terms the importance-sampling weights multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsWeighting {
    #[default]
    AllTerms,
    QOnly,
}

/// `r + gamma * (1 - terminal) * next_value`
pub fn bellman_target(reward: f64, gamma: f64, terminal: bool, next_value: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * next_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticOutput {
    pub q: f64,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub q: Vec<f64>,
    pub reward: Vec<f64>,
    pub next_state: Matrix,
}

/// Per-term losses (before the `LossWeights` are applied) and their
/// weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CriticLoss {
    pub total: f64,
    pub q: f64,
    pub reward: f64,
    pub transition: f64,
}

/// One batch for the critic update. `targets` are precomputed Bellman
/// targets, one per row.
#[derive(Debug, Clone, Copy)]
pub struct CriticBatch<'a> {
    pub states: &'a Matrix,
    pub actions: &'a Matrix,
    pub rewards: &'a [f64],
    pub next_states: &'a Matrix,
    pub targets: &'a [f64],
    pub is_weights: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads {
    pub trunk: NetGrads,
    pub q_head: NetGrads,
    pub reward_head: NetGrads,
    pub transition_head: NetGrads,
}

impl Parameters for CriticGrads {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.trunk.param_slices();
        v.extend(self.q_head.param_slices());
        v.extend(self.reward_head.param_slices());
        v.extend(self.transition_head.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.trunk.param_slices_mut();
        v.extend(self.q_head.param_slices_mut());
        v.extend(self.reward_head.param_slices_mut());
        v.extend(self.transition_head.param_slices_mut());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmcnCritic {
    trunk: DenseNet,
    q_head: DenseNet,
    reward_head: DenseNet,
    transition_head: DenseNet,
    state_dim: usize,
    action_dim: usize,
}

impl Parameters for EmcnCritic {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.trunk.param_slices();
        v.extend(self.q_head.param_slices());
        v.extend(self.reward_head.param_slices());
        v.extend(self.transition_head.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.trunk.param_slices_mut();
        v.extend(self.q_head.param_slices_mut());
        v.extend(self.reward_head.param_slices_mut());
        v.extend(self.transition_head.param_slices_mut());
        v
    }
}

impl EmcnCritic {
    /// Relu trunk with the given hidden widths over `concat(state, action)`,
    /// then one linear layer per head.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let (&features, inner) = hidden
            .split_last()
            .ok_or_else(|| Error::invalid("hidden", "critic needs at least one hidden layer"))?;
        let trunk = DenseNet::mlp(
            state_dim + action_dim,
            inner,
            features,
            Activation::Relu,
            Activation::Relu,
            rng,
        )?;
        let head = |out: usize, rng: &mut R| {
            DenseNet::from_layers(alloc::vec![Dense::init(features, out, Activation::Identity, rng)?])
        };
        let q_head = head(1, rng)?;
        let reward_head = head(1, rng)?;
        let transition_head = head(state_dim, rng)?;
        Self::from_parts(trunk, q_head, reward_head, transition_head, state_dim, action_dim)
    }

    pub fn from_parts(
        trunk: DenseNet,
        q_head: DenseNet,
        reward_head: DenseNet,
        transition_head: DenseNet,
        state_dim: usize,
        action_dim: usize,
    ) -> Result<Self> {
        Error::check_dim("critic trunk input", state_dim + action_dim, trunk.input_dim())?;
        let features = trunk.output_dim();
        for head in [&q_head, &reward_head, &transition_head] {
            Error::check_dim("critic head input", features, head.input_dim())?;
        }
        Error::check_dim("q head output", 1, q_head.output_dim())?;
        Error::check_dim("reward head output", 1, reward_head.output_dim())?;
        Error::check_dim("transition head output", state_dim, transition_head.output_dim())?;
        Ok(Self {
            trunk,
            q_head,
            reward_head,
            transition_head,
            state_dim,
            action_dim,
        })
    }

    pub fn trunk(&self) -> &DenseNet {
        &self.trunk
    }

    pub fn q_head(&self) -> &DenseNet {
        &self.q_head
    }

    pub fn reward_head(&self) -> &DenseNet {
        &self.reward_head
    }

    pub fn transition_head(&self) -> &DenseNet {
        &self.transition_head
    }

    /// Mutable access to the reward head only; used to train it in isolation.
    pub fn reward_head_mut(&mut self) -> &mut DenseNet {
        &mut self.reward_head
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn inputs(&self, states: &Matrix, actions: &Matrix) -> Result<Matrix> {
        Error::check_dim("critic state", self.state_dim, states.cols())?;
        Error::check_dim("critic action", self.action_dim, actions.cols())?;
        Matrix::hconcat(states, actions)
    }

    fn single(&self, state: &[f64], action: &[f64]) -> Result<(Matrix, Matrix)> {
        Ok((
            Matrix::from_vec(1, state.len(), state.to_vec())?,
            Matrix::from_vec(1, action.len(), action.to_vec())?,
        ))
    }

    pub fn evaluate(&self, state: &[f64], action: &[f64]) -> Result<CriticOutput> {
        let (s, a) = self.single(state, action)?;
        let out = self.evaluate_batch(&s, &a)?;
        Ok(CriticOutput {
            q: out.q[0],
            reward: out.reward[0],
            next_state: out.next_state.into_vec(),
        })
    }

    pub fn evaluate_batch(&self, states: &Matrix, actions: &Matrix) -> Result<BatchOutput> {
        let features = self.trunk.forward_batch(&self.inputs(states, actions)?)?;
        Ok(BatchOutput {
            q: self.q_head.forward_batch(&features)?.into_vec(),
            reward: self.reward_head.forward_batch(&features)?.into_vec(),
            next_state: self.transition_head.forward_batch(&features)?,
        })
    }

    pub fn q_values(&self, states: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        let features = self.trunk.forward_batch(&self.inputs(states, actions)?)?;
        Ok(self.q_head.forward_batch(&features)?.into_vec())
    }

    pub fn predicted_rewards(&self, states: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        let features = self.trunk.forward_batch(&self.inputs(states, actions)?)?;
        Ok(self.reward_head.forward_batch(&features)?.into_vec())
    }

    /// Q values and predicted rewards from a single trunk pass.
    pub fn q_and_reward(&self, states: &Matrix, actions: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let features = self.trunk.forward_batch(&self.inputs(states, actions)?)?;
        Ok((
            self.q_head.forward_batch(&features)?.into_vec(),
            self.reward_head.forward_batch(&features)?.into_vec(),
        ))
    }

    /// Reward prediction error of one transition.
    pub fn rpe(&self, t: &Transition, mode: RpeMode) -> Result<f64> {
        let out = self.evaluate(&t.state, &t.action)?;
        Ok(mode.score(out.reward - t.reward))
    }

    /// Reward prediction errors for a batch of rows.
    pub fn rpe_batch(
        &self,
        states: &Matrix,
        actions: &Matrix,
        rewards: &[f64],
        mode: RpeMode,
    ) -> Result<Vec<f64>> {
        Error::check_dim("rpe rewards", states.rows(), rewards.len())?;
        let predicted = self.predicted_rewards(states, actions)?;
        Ok(predicted
            .iter()
            .zip(rewards)
            .map(|(p, r)| mode.score(p - r))
            .collect())
    }

    /// `r + gamma * (1 - terminal) * Q_target(s', a') - Q(s, a)`, where `a'`
    /// is supplied by the agent's target policy.
    pub fn q_error(
        &self,
        target: &EmcnCritic,
        t: &Transition,
        next_action: &[f64],
        gamma: f64,
    ) -> Result<f64> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        let q = self.evaluate(&t.state, &t.action)?.q;
        let next_q = target.evaluate(&t.next_state, next_action)?.q;
        Ok(bellman_target(t.reward, gamma, t.terminal, next_q) - q)
    }

    /// `T(s, a) - s'`, elementwise.
    pub fn transition_error(&self, t: &Transition) -> Result<Vec<f64>> {
        Error::check_dim("transition next_state", self.state_dim, t.next_state.len())?;
        let out = self.evaluate(&t.state, &t.action)?;
        Ok(out
            .next_state
            .iter()
            .zip(&t.next_state)
            .map(|(p, s)| p - s)
            .collect())
    }

    /// Weighted sum of the three importance-weighted mean squared errors and
    /// its gradient with respect to every critic parameter. All three heads
    /// backpropagate into the shared trunk.
    pub fn combined_loss_and_grads(
        &self,
        batch: &CriticBatch<'_>,
        weights: LossWeights,
        weighting: IsWeighting,
    ) -> Result<(CriticLoss, CriticGrads)> {
        weights.validate()?;
        let m = batch.states.rows();
        if m == 0 {
            return Err(Error::invalid("batch", "must not be empty"));
        }
        Error::check_dim("batch actions", m, batch.actions.rows())?;
        Error::check_dim("batch rewards", m, batch.rewards.len())?;
        Error::check_dim("batch next_states", m, batch.next_states.rows())?;
        Error::check_dim("batch next_state dim", self.state_dim, batch.next_states.cols())?;
        Error::check_dim("batch targets", m, batch.targets.len())?;
        Error::check_dim("batch is_weights", m, batch.is_weights.len())?;

        let trunk_acts = self.trunk.forward_cached(self.inputs(batch.states, batch.actions)?)?;
        let features = trunk_acts.output().clone();
        let q_acts = self.q_head.forward_cached(features.clone())?;
        let r_acts = self.reward_head.forward_cached(features.clone())?;
        let t_acts = self.transition_head.forward_cached(features)?;

        let inv_m = 1.0 / m as f64;
        let inv_s = 1.0 / self.state_dim as f64;
        let mut d_q = Matrix::zeros(m, 1);
        let mut d_r = Matrix::zeros(m, 1);
        let mut d_t = Matrix::zeros(m, self.state_dim);
        let (mut l_q, mut l_r, mut l_t) = (0.0, 0.0, 0.0);
        for i in 0..m {
            let w = batch.is_weights[i];
            let aux_w = match weighting {
                IsWeighting::AllTerms => w,
                IsWeighting::QOnly => 1.0,
            };
            let dq = q_acts.output().get(i, 0) - batch.targets[i];
            let dr = r_acts.output().get(i, 0) - batch.rewards[i];
            let mut sq_t = 0.0;
            for (j, (p, s)) in t_acts
                .output()
                .row(i)
                .iter()
                .zip(batch.next_states.row(i))
                .enumerate()
            {
                let dt = p - s;
                sq_t += dt * dt;
                d_t.set(i, j, weights.transition * aux_w * 2.0 * dt * inv_s * inv_m);
            }
            let term = w * dq * dq + aux_w * dr * dr + aux_w * sq_t * inv_s;
            if !term.is_finite() {
                return Err(Error::Divergence { index: i });
            }
            l_q += w * dq * dq;
            l_r += aux_w * dr * dr;
            l_t += aux_w * sq_t * inv_s;
            d_q.set(i, 0, weights.q * w * 2.0 * dq * inv_m);
            d_r.set(i, 0, weights.reward * aux_w * 2.0 * dr * inv_m);
        }
        let loss = CriticLoss {
            q: l_q * inv_m,
            reward: l_r * inv_m,
            transition: l_t * inv_m,
            total: weights.q * l_q * inv_m
                + weights.reward * l_r * inv_m
                + weights.transition * l_t * inv_m,
        };

        let (q_grads, mut d_features) = self.q_head.backward(&q_acts, &d_q)?;
        let (r_grads, d_feat_r) = self.reward_head.backward(&r_acts, &d_r)?;
        let (t_grads, d_feat_t) = self.transition_head.backward(&t_acts, &d_t)?;
        for ((a, b), c) in d_features
            .data_mut()
            .iter_mut()
            .zip(d_feat_r.data())
            .zip(d_feat_t.data())
        {
            *a += b + c;
        }
        let (trunk_grads, _) = self.trunk.backward(&trunk_acts, &d_features)?;
        Ok((
            loss,
            CriticGrads {
                trunk: trunk_grads,
                q_head: q_grads,
                reward_head: r_grads,
                transition_head: t_grads,
            },
        ))
    }

    /// Gradient of the reward-head loss `mean_i (R(s_i, a_i) - r_i)^2` with
    /// respect to the reward head's parameters only.
    pub fn reward_head_loss_and_grads(
        &self,
        states: &Matrix,
        actions: &Matrix,
        rewards: &[f64],
    ) -> Result<(f64, NetGrads)> {
        let m = states.rows();
        Error::check_dim("rewards", m, rewards.len())?;
        let features = self.trunk.forward_batch(&self.inputs(states, actions)?)?;
        let acts = self.reward_head.forward_cached(features)?;
        let mut upstream = Matrix::zeros(m, 1);
        let mut loss = 0.0;
        for i in 0..m {
            let d = acts.output().get(i, 0) - rewards[i];
            loss += d * d / m as f64;
            upstream.set(i, 0, 2.0 * d / m as f64);
        }
        let (grads, _) = self.reward_head.backward(&acts, &upstream)?;
        Ok((loss, grads))
    }

    /// Q values and `dQ/da` for each row. Parameter gradients are not formed.
    pub fn q_and_action_grad(&self, states: &Matrix, actions: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        let trunk_acts = self.trunk.forward_cached(self.inputs(states, actions)?)?;
        let q_acts: Activations = self.q_head.forward_cached(trunk_acts.output().clone())?;
        let ones = Matrix::from_vec(states.rows(), 1, alloc::vec![1.0; states.rows()])?;
        let d_features = self.q_head.input_gradient(&q_acts, &ones)?;
        let d_inputs = self.trunk.input_gradient(&trunk_acts, &d_features)?;
        Ok((
            q_acts.output().data().to_vec(),
            d_inputs.columns(self.state_dim, self.action_dim),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_critic(state_dim: usize, action_dim: usize, hidden: usize) -> EmcnCritic {
        let trunk = DenseNet::from_layers(vec![
            Dense::zeros(state_dim + action_dim, hidden, Activation::Relu).unwrap(),
        ])
        .unwrap();
        let head = |o| DenseNet::from_layers(vec![Dense::zeros(hidden, o, Activation::Identity).unwrap()]).unwrap();
        EmcnCritic::from_parts(trunk, head(1), head(1), head(state_dim), state_dim, action_dim).unwrap()
    }

    fn transition(state: &[f64], action: &[f64], reward: f64, next: &[f64], terminal: bool) -> Transition {
        Transition {
            state: state.to_vec(),
            action: action.to_vec(),
            reward,
            next_state: next.to_vec(),
            terminal,
        }
    }

    /// Critic whose reward head is the constant `bias` and whose other heads
    /// are zero.
    fn reward_bias_critic(bias: f64) -> EmcnCritic {
        let mut c = zero_critic(2, 1, 4);
        c.reward_head_mut().param_slices_mut()[1][0] = bias;
        c
    }

    #[test]
    fn zero_critic_outputs_zeros() {
        let c = zero_critic(3, 2, 5);
        let out = c.evaluate(&[1.0, -2.0, 0.5], &[0.3, 0.1]).unwrap();
        assert_eq!(out.q, 0.0);
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.next_state, vec![0.0; 3]);
    }

    #[test]
    fn evaluate_composes_forward_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = EmcnCritic::new(3, 2, &[6, 5], &mut rng).unwrap();
        let (s, a) = ([0.2, -0.4, 0.9], [0.5, -0.1]);
        let mut x = s.to_vec();
        x.extend_from_slice(&a);
        let f = c.trunk().forward(&x).unwrap();
        let out = c.evaluate(&s, &a).unwrap();
        assert!((out.q - c.q_head().forward(&f).unwrap()[0]).abs() < 1e-12);
        assert!((out.reward - c.reward_head().forward(&f).unwrap()[0]).abs() < 1e-12);
        for (p, q) in out.next_state.iter().zip(c.transition_head().forward(&f).unwrap()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_eq!(c.evaluate(&s, &a).unwrap(), out);
    }

    #[test]
    fn evaluate_rejects_wrong_dims() {
        let c = zero_critic(3, 2, 4);
        assert!(c.evaluate(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(c.evaluate(&[1.0, 2.0, 3.0], &[0.0]).is_err());
    }

    #[test]
    fn rpe_examples() {
        let exact = reward_bias_critic(0.5);
        let t = transition(&[0.0, 0.0], &[0.0], 0.5, &[0.0, 0.0], false);
        assert_eq!(exact.rpe(&t, RpeMode::Squared).unwrap(), 0.0);

        let off = reward_bias_critic(1.0);
        assert_eq!(off.rpe(&t, RpeMode::Squared).unwrap(), 0.25);
        assert_eq!(off.rpe(&t, RpeMode::Absolute).unwrap(), 0.5);
    }

    #[test]
    fn rpe_is_square_of_reward_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = EmcnCritic::new(2, 1, &[8, 8], &mut rng).unwrap();
        for k in 0..20 {
            let x = k as f64 * 0.1;
            let t = transition(&[x, -x], &[0.5 - x], x * x - 0.3, &[x, 1.0], false);
            let residual = c.evaluate(&t.state, &t.action).unwrap().reward - t.reward;
            let rpe = c.rpe(&t, RpeMode::Squared).unwrap();
            assert!(rpe >= 0.0);
            assert!((rpe - residual * residual).abs() <= 1e-15);
        }
    }

    #[test]
    fn rpe_batch_matches_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let c = EmcnCritic::new(2, 1, &[8], &mut rng).unwrap();
        let states = Matrix::from_rows(&[[0.1, 0.2], [0.3, -0.4], [1.0, 0.0]]).unwrap();
        let actions = Matrix::from_rows(&[[0.5], [-0.5], [0.0]]).unwrap();
        let rewards = [1.0, -0.2, 0.0];
        let batch = c.rpe_batch(&states, &actions, &rewards, RpeMode::Squared).unwrap();
        for i in 0..3 {
            let t = transition(states.row(i), actions.row(i), rewards[i], &[0.0, 0.0], false);
            assert!((batch[i] - c.rpe(&t, RpeMode::Squared).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn q_error_masks_bootstrap_on_terminal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let target = EmcnCritic::new(2, 1, &[4], &mut rng).unwrap();
        let c = zero_critic(2, 1, 4);
        let t = transition(&[0.1, 0.2], &[0.3], 1.5, &[0.4, 0.5], true);
        assert_eq!(c.q_error(&target, &t, &[0.0], 0.99).unwrap(), 1.5);
    }

    #[test]
    fn q_error_without_discount() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = EmcnCritic::new(2, 1, &[4], &mut rng).unwrap();
        let target = EmcnCritic::new(2, 1, &[4], &mut rng).unwrap();
        let t = transition(&[0.1, 0.2], &[0.3], 1.5, &[0.4, 0.5], false);
        let q = c.evaluate(&t.state, &t.action).unwrap().q;
        assert_eq!(c.q_error(&target, &t, &[0.7], 0.0).unwrap(), 1.5 - q);
        assert!(c.q_error(&target, &t, &[0.7], 1.0).is_err());
    }

    #[test]
    fn q_error_matches_hand_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let c = EmcnCritic::new(2, 1, &[5, 3], &mut rng).unwrap();
        let target = EmcnCritic::new(2, 1, &[5, 3], &mut rng).unwrap();
        let t = transition(&[0.1, -0.2], &[0.3], 0.25, &[0.4, 0.5], false);
        let next_a = [-0.6];
        let q = c.evaluate(&t.state, &t.action).unwrap().q;
        let next_q = target.evaluate(&t.next_state, &next_a).unwrap().q;
        let expected = 0.25 + 0.9 * next_q - q;
        assert!((c.q_error(&target, &t, &next_a, 0.9).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn transition_error_examples() {
        let c = zero_critic(2, 1, 4);
        let t = transition(&[0.0, 0.0], &[0.0], 0.0, &[0.0, 0.0], false);
        assert_eq!(c.transition_error(&t).unwrap(), vec![0.0, 0.0]);

        // transition head bias = s' + [1, 0]
        let mut c = zero_critic(2, 1, 4);
        let next = [0.3, -0.7];
        let mut slices = c.param_slices_mut();
        let n = slices.len();
        slices[n - 1].copy_from_slice(&[next[0] + 1.0, next[1]]);
        let t = transition(&[1.0, 1.0], &[0.0], 0.0, &next, false);
        let err = c.transition_error(&t).unwrap();
        assert!((err[0] - 1.0).abs() < 1e-15 && err[1].abs() < 1e-15);
    }

    fn random_batch(rng: &mut ChaCha8Rng, m: usize, sd: usize, ad: usize) -> (Matrix, Matrix, Vec<f64>, Matrix, Vec<f64>, Vec<f64>) {
        let mut mat = |rows: usize, cols: usize| {
            let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            Matrix::from_vec(rows, cols, data).unwrap()
        };
        let s = mat(m, sd);
        let a = mat(m, ad);
        let ns = mat(m, sd);
        let r = mat(m, 1).into_vec();
        let y = mat(m, 1).into_vec();
        let w = mat(m, 1).into_vec().iter().map(|v| 0.5 + 0.5 * v.abs()).collect();
        (s, a, r, ns, y, w)
    }

    #[test]
    fn q_only_weights_reduce_to_plain_critic_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let c = EmcnCritic::new(3, 2, &[6, 6], &mut rng).unwrap();
        let (s, a, r, ns, y, _) = random_batch(&mut rng, 5, 3, 2);
        let ones = vec![1.0; 5];
        let batch = CriticBatch {
            states: &s,
            actions: &a,
            rewards: &r,
            next_states: &ns,
            targets: &y,
            is_weights: &ones,
        };
        let (loss, grads) = c
            .combined_loss_and_grads(&batch, LossWeights::new(1.0, 0.0, 0.0).unwrap(), IsWeighting::AllTerms)
            .unwrap();
        let q = c.q_values(&s, &a).unwrap();
        let mse = q.iter().zip(&y).map(|(q, y)| (q - y) * (q - y)).sum::<f64>() / 5.0;
        assert!((loss.total - mse).abs() <= 1e-12);
        assert!(grads.reward_head.all_finite());
        assert!(grads.reward_head.flatten().iter().all(|&g| g == 0.0));
        assert!(grads.transition_head.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_errors_give_zero_loss_and_grads() {
        let c = zero_critic(2, 1, 4);
        let s = Matrix::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap();
        let a = Matrix::from_rows(&[[0.5], [0.6]]).unwrap();
        let ns = Matrix::zeros(2, 2);
        let zeros = [0.0, 0.0];
        let w = [1.0, 0.5];
        let batch = CriticBatch {
            states: &s,
            actions: &a,
            rewards: &zeros,
            next_states: &ns,
            targets: &zeros,
            is_weights: &w,
        };
        let (loss, grads) = c
            .combined_loss_and_grads(&batch, LossWeights::default(), IsWeighting::AllTerms)
            .unwrap();
        assert_eq!(loss.total, 0.0);
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn loss_is_affine_in_reward_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let c = EmcnCritic::new(2, 2, &[5], &mut rng).unwrap();
        let (s, a, r, ns, y, w) = random_batch(&mut rng, 6, 2, 2);
        let batch = CriticBatch {
            states: &s,
            actions: &a,
            rewards: &r,
            next_states: &ns,
            targets: &y,
            is_weights: &w,
        };
        let loss_at = |xi2: f64| {
            c.combined_loss_and_grads(&batch, LossWeights::new(1.0, xi2, 0.5).unwrap(), IsWeighting::AllTerms)
                .unwrap()
                .0
        };
        let base = loss_at(0.0);
        for xi2 in [0.5, 1.0, 3.0] {
            let l = loss_at(xi2);
            assert!((l.total - (base.total + xi2 * base.reward)).abs() <= 1e-12);
        }
    }

    #[test]
    fn q_only_weighting_leaves_auxiliary_terms_unweighted() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let c = EmcnCritic::new(2, 1, &[5], &mut rng).unwrap();
        let (s, a, r, ns, y, w) = random_batch(&mut rng, 4, 2, 1);
        let ones = vec![1.0; 4];
        let lw = LossWeights::default();
        let loss_with = |weights: &[f64]| {
            let batch = CriticBatch {
                states: &s,
                actions: &a,
                rewards: &r,
                next_states: &ns,
                targets: &y,
                is_weights: weights,
            };
            c.combined_loss_and_grads(&batch, lw, IsWeighting::QOnly).unwrap().0
        };
        let weighted = loss_with(&w);
        let plain = loss_with(&ones);
        assert_eq!(weighted.reward, plain.reward);
        assert_eq!(weighted.transition, plain.transition);
        assert!(weighted.q != plain.q);
    }

    #[test]
    fn non_finite_target_reports_divergence() {
        let c = zero_critic(2, 1, 4);
        let s = Matrix::zeros(3, 2);
        let a = Matrix::zeros(3, 1);
        let ns = Matrix::zeros(3, 2);
        let r = [0.0; 3];
        let y = [0.0, f64::NAN, 0.0];
        let w = [1.0; 3];
        let batch = CriticBatch {
            states: &s,
            actions: &a,
            rewards: &r,
            next_states: &ns,
            targets: &y,
            is_weights: &w,
        };
        assert_eq!(
            c.combined_loss_and_grads(&batch, LossWeights::default(), IsWeighting::AllTerms)
                .unwrap_err(),
            Error::Divergence { index: 1 }
        );
    }

    #[test]
    fn loss_weights_validation() {
        assert!(LossWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(LossWeights::new(-1.0, 1.0, 1.0).is_err());
        assert!(LossWeights::new(0.0, 1.0, 0.0).is_ok());
    }
}
