use alloc::vec::Vec;

use rand::Rng;

use super::SumTree;
use crate::{Error, Result};

/// One experience tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Genuine terminal state: the bootstrap term is masked. Time-limit
    /// truncation must leave this `false`.
    pub terminal: bool,
}

impl Transition {
    pub fn validate(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        Error::check_dim("transition state", state_dim, self.state.len())?;
        Error::check_dim("transition next_state", state_dim, self.next_state.len())?;
        Error::check_dim("transition action", action_dim, self.action.len())?;
        let finite = self
            .state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .all(|v| v.is_finite())
            && self.reward.is_finite();
        if !finite {
            return Err(Error::invalid("transition", "all components must be finite"));
        }
        Ok(())
    }
}

/// How a raw score becomes the priority that is raised to `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorityForm {
    /// `p = score + epsilon`; every stored transition keeps a non-zero
    /// sampling probability.
    #[default]
    AddEpsilon,
    /// `p = score` with no floor. A zero score yields a zero sampling
    /// probability.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferConfig {
    pub capacity: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub priority_form: PriorityForm,
}

impl BufferConfig {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        Self {
            capacity,
            state_dim,
            action_dim,
            alpha: 0.7,
            beta: 0.4,
            epsilon: 1e-6,
            priority_form: PriorityForm::AddEpsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::invalid("capacity", "must be at least 1"));
        }
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::invalid("dims", "state and action dims must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", "must lie in [0, 1]"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Handle to a slot at the time it was sampled. The generation changes
/// whenever the slot is overwritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRef {
    pub index: usize,
    pub generation: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub slots: Vec<SlotRef>,
    pub transitions: Vec<Transition>,
    /// Sampling probability of each drawn slot at draw time.
    pub probabilities: Vec<f64>,
    /// `(size * P(i))^-beta`, normalised so the batch maximum is 1.
    pub is_weights: Vec<f64>,
}

impl SampledBatch {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateReport {
    pub applied: usize,
    /// Updates dropped because the slot was overwritten after sampling.
    pub stale: usize,
}

/// Linear annealing of the importance exponent from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

impl BetaSchedule {
    pub fn constant(beta: f64) -> Self {
        Self {
            start: beta,
            end: beta,
            steps: 0,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if self.steps == 0 || step >= self.steps {
            return if self.steps == 0 { self.start } else { self.end };
        }
        let frac = step as f64 / self.steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Ring buffer of transitions whose sampling law is proportional to the
/// stored priorities raised to `alpha`.
#[derive(Debug, Clone)]
pub struct PrioritizedBuffer {
    config: BufferConfig,
    storage: Vec<Transition>,
    generations: Vec<u64>,
    tree: SumTree,
    cursor: usize,
    next_generation: u64,
    max_priority_seen: f64,
    stale_updates: u64,
}

impl PrioritizedBuffer {
    pub fn new(config: BufferConfig) -> Result<Self> {
        config.validate()?;
        let tree = SumTree::new(config.capacity)?;
        Ok(Self {
            storage: Vec::with_capacity(config.capacity.min(1 << 20)),
            generations: Vec::with_capacity(config.capacity.min(1 << 20)),
            tree,
            cursor: 0,
            next_generation: 0,
            max_priority_seen: 1.0,
            stale_updates: 0,
            config,
        })
    }

    /// Rebuilds a buffer from its persisted parts. `transitions[i]` and
    /// `leaves[i]` describe physical slot `i`.
    pub fn restore(
        config: BufferConfig,
        transitions: Vec<Transition>,
        leaves: Vec<f64>,
        cursor: usize,
        max_priority_seen: f64,
    ) -> Result<Self> {
        let mut buffer = Self::new(config)?;
        if transitions.len() != leaves.len() {
            return Err(Error::invalid("snapshot", "transition and priority counts differ"));
        }
        if transitions.len() > buffer.config.capacity {
            return Err(Error::invalid("snapshot", "more transitions than capacity"));
        }
        let full = transitions.len() == buffer.config.capacity;
        if (full && cursor >= buffer.config.capacity) || (!full && cursor != transitions.len()) {
            return Err(Error::invalid("snapshot", "write cursor inconsistent with size"));
        }
        if !(max_priority_seen.is_finite() && max_priority_seen > 0.0) {
            return Err(Error::invalid("snapshot", "max priority must be positive"));
        }
        for (slot, (t, leaf)) in transitions.into_iter().zip(leaves).enumerate() {
            t.validate(buffer.config.state_dim, buffer.config.action_dim)?;
            if !(leaf.is_finite() && leaf >= 0.0) {
                return Err(Error::invalid("snapshot", "leaf priorities must be finite and >= 0"));
            }
            buffer.storage.push(t);
            buffer.generations.push(buffer.next_generation);
            buffer.next_generation += 1;
            buffer.tree.set(slot, leaf);
        }
        buffer.cursor = cursor;
        buffer.max_priority_seen = max_priority_seen;
        Ok(buffer)
    }

    pub fn config(&self) -> &BufferConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid("beta", "must lie in [0, 1]"));
        }
        self.config.beta = beta;
        Ok(())
    }

    /// Slot that the next insert writes to.
    pub fn write_cursor(&self) -> usize {
        self.cursor
    }

    pub fn max_priority_seen(&self) -> f64 {
        self.max_priority_seen
    }

    pub fn stale_update_count(&self) -> u64 {
        self.stale_updates
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.storage.get(slot)
    }

    pub fn slot_ref(&self, slot: usize) -> Option<SlotRef> {
        self.generations.get(slot).map(|&generation| SlotRef {
            index: slot,
            generation,
        })
    }

    /// Stored leaf value `p^alpha` for an occupied slot.
    pub fn leaf_priority(&self, slot: usize) -> Option<f64> {
        (slot < self.len()).then(|| self.tree.get(slot))
    }

    /// Occupied slots from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Transition> + '_ {
        let start = if self.len() == self.capacity() { self.cursor } else { 0 };
        (0..self.len()).map(move |k| &self.storage[(start + k) % self.len()])
    }

    /// Priority before exponentiation for a raw non-negative score.
    pub fn priority_of(&self, score: f64) -> f64 {
        match self.config.priority_form {
            PriorityForm::AddEpsilon => score + self.config.epsilon,
            PriorityForm::Literal => score,
        }
    }

    fn leaf_value(&self, priority: f64) -> f64 {
        libm::pow(priority, self.config.alpha)
    }

    fn check_score(score: f64) -> Result<()> {
        if score.is_finite() && score >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("priority", "scores must be finite and non-negative"))
        }
    }

    /// Stores `t` at the write cursor, overwriting the oldest transition once
    /// the buffer is full. `score = None` uses the largest priority seen so
    /// far, so fresh transitions are sampled at least once with high odds.
    pub fn insert(&mut self, t: Transition, score: Option<f64>) -> Result<usize> {
        t.validate(self.config.state_dim, self.config.action_dim)?;
        let priority = match score {
            Some(s) => {
                Self::check_score(s)?;
                let p = self.priority_of(s);
                self.max_priority_seen = self.max_priority_seen.max(p);
                p
            }
            None => self.max_priority_seen,
        };
        let slot = self.cursor;
        let generation = self.next_generation;
        self.next_generation += 1;
        if slot == self.storage.len() {
            self.storage.push(t);
            self.generations.push(generation);
        } else {
            self.storage[slot] = t;
            self.generations[slot] = generation;
        }
        let leaf = self.leaf_value(priority);
        self.tree.set(slot, leaf);
        self.cursor = (self.cursor + 1) % self.config.capacity;
        Ok(slot)
    }

    /// Draws `batch` slots by stratified proportional sampling: `[0, total)`
    /// is cut into `batch` equal strata with one uniform draw in each.
    /// Duplicates across strata are kept.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<SampledBatch> {
        if batch == 0 {
            return Err(Error::invalid("batch", "must be at least 1"));
        }
        if batch > self.len() {
            return Err(Error::Underfilled {
                size: self.len(),
                requested: batch,
            });
        }
        let total = self.tree.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("priorities", "total priority mass is zero"));
        }
        let stratum = total / batch as f64;
        let size = self.len() as f64;
        let beta = self.config.beta;

        let mut slots = Vec::with_capacity(batch);
        let mut transitions = Vec::with_capacity(batch);
        let mut probabilities = Vec::with_capacity(batch);
        let mut is_weights = Vec::with_capacity(batch);
        for k in 0..batch {
            let u: f64 = rng.random();
            let mass = (k as f64 + u) * stratum;
            let slot = self.tree.find_prefix(mass).min(self.len() - 1);
            let prob = self.tree.get(slot) / total;
            slots.push(SlotRef {
                index: slot,
                generation: self.generations[slot],
            });
            transitions.push(self.storage[slot].clone());
            probabilities.push(prob);
            is_weights.push(libm::pow(size * prob, -beta));
        }
        let max_w = is_weights.iter().cloned().fold(0.0f64, f64::max);
        if max_w > 0.0 && max_w.is_finite() {
            for w in &mut is_weights {
                *w /= max_w;
            }
        }
        Ok(SampledBatch {
            slots,
            transitions,
            probabilities,
            is_weights,
        })
    }

    /// Rewrites the priorities of previously sampled slots. Slots that were
    /// overwritten since sampling are skipped and counted as stale.
    pub fn update_priorities(&mut self, slots: &[SlotRef], scores: &[f64]) -> Result<UpdateReport> {
        if slots.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                context: "update_priorities scores",
                expected: slots.len(),
                actual: scores.len(),
            });
        }
        for (slot, &score) in slots.iter().zip(scores) {
            Self::check_score(score)?;
            if slot.index >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: slot.index,
                    size: self.len(),
                });
            }
        }
        let mut report = UpdateReport::default();
        for (slot, &score) in slots.iter().zip(scores) {
            if self.generations[slot.index] != slot.generation {
                report.stale += 1;
                self.stale_updates += 1;
                continue;
            }
            let p = self.priority_of(score);
            self.max_priority_seen = self.max_priority_seen.max(p);
            let leaf = self.leaf_value(p);
            self.tree.set(slot.index, leaf);
            report.applied += 1;
        }
        Ok(report)
    }

    /// Exact sampling distribution over occupied slots in slot order.
    pub fn sampling_probabilities(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::invalid("buffer", "no transitions stored"));
        }
        let leaves = &self.tree.leaves()[..self.len()];
        let total: f64 = leaves.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("priorities", "total priority mass is zero"));
        }
        Ok(leaves.iter().map(|&p| p / total).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: vec![0.0],
            reward: tag,
            next_state: vec![tag + 1.0],
            terminal: false,
        }
    }

    fn buffer(capacity: usize, alpha: f64, epsilon: f64) -> PrioritizedBuffer {
        let mut cfg = BufferConfig::new(capacity, 1, 1);
        cfg.alpha = alpha;
        cfg.epsilon = epsilon;
        PrioritizedBuffer::new(cfg).unwrap()
    }

    #[test]
    fn zero_priority_insert_gets_epsilon_floor() {
        let mut b = buffer(4, 0.7, 1e-6);
        assert_eq!(b.insert(t(0.0), Some(0.0)).unwrap(), 0);
        let expected = 6.309573444801932e-5;
        assert!((b.leaf_priority(0).unwrap() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn insert_priority_three_alpha_point_seven() {
        let mut b = buffer(4, 0.7, 1e-6);
        b.insert(t(0.0), Some(3.0)).unwrap();
        let leaf = b.leaf_priority(0).unwrap();
        assert!((leaf - 2.157_669_783_430_733).abs() < 1e-12, "{leaf}");
    }

    #[test]
    fn fifth_insert_overwrites_slot_zero() {
        let mut b = buffer(4, 0.7, 1e-6);
        for i in 0..4 {
            assert_eq!(b.insert(t(i as f64), None).unwrap(), i);
        }
        assert_eq!(b.insert(t(4.0), None).unwrap(), 0);
        assert_eq!(b.len(), 4);
        assert_eq!(b.get(0).unwrap().reward, 4.0);
        let order: Vec<f64> = b.iter_chronological().map(|t| t.reward).collect();
        assert_eq!(order, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn non_finite_or_negative_priority_is_rejected() {
        let mut b = buffer(4, 0.7, 1e-6);
        assert!(b.insert(t(0.0), Some(f64::NAN)).is_err());
        assert!(b.insert(t(0.0), Some(-1.0)).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn malformed_transition_is_rejected() {
        let mut b = buffer(4, 0.7, 1e-6);
        let mut bad = t(0.0);
        bad.next_state.push(1.0);
        assert!(matches!(b.insert(bad, None), Err(Error::DimensionMismatch { .. })));
        let mut nan = t(0.0);
        nan.reward = f64::INFINITY;
        assert!(b.insert(nan, None).is_err());
    }

    #[test]
    fn probabilities_follow_priority_ratio() {
        let mut b = buffer(4, 1.0, 0.0);
        b.insert(t(0.0), Some(3.0)).unwrap();
        b.insert(t(1.0), Some(1.0)).unwrap();
        assert_eq!(b.sampling_probabilities().unwrap(), vec![0.75, 0.25]);

        let mut b = buffer(4, 0.7, 0.0);
        b.insert(t(0.0), Some(3.0)).unwrap();
        b.insert(t(1.0), Some(1.0)).unwrap();
        let p = b.sampling_probabilities().unwrap();
        assert!((p[0] - 0.683_310_723_405_446).abs() < 1e-12);
        assert!((p[1] - 0.316_689_276_594_554).abs() < 1e-12);

        let mut b = buffer(4, 0.3, 1e-6);
        b.insert(t(0.0), Some(1.0)).unwrap();
        b.insert(t(1.0), Some(1.0)).unwrap();
        assert_eq!(b.sampling_probabilities().unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn four_slot_arithmetic_distribution() {
        let mut b = buffer(8, 1.0, 0.0);
        for p in [1.0, 2.0, 3.0, 4.0] {
            b.insert(t(p), Some(p)).unwrap();
        }
        let probs = b.sampling_probabilities().unwrap();
        for (got, want) in probs.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_slot_has_probability_one() {
        let mut b = buffer(8, 0.7, 1e-6);
        b.insert(t(0.0), Some(5.0)).unwrap();
        assert_eq!(b.sampling_probabilities().unwrap(), vec![1.0]);
    }

    #[test]
    fn empty_buffer_has_no_distribution() {
        assert!(buffer(8, 0.7, 1e-6).sampling_probabilities().is_err());
    }

    #[test]
    fn beta_zero_gives_unit_weights() {
        let mut b = buffer(16, 0.7, 1e-6);
        b.set_beta(0.0).unwrap();
        for i in 0..16 {
            b.insert(t(i as f64), Some(i as f64 * 3.0)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = b.sample(8, &mut rng).unwrap();
        assert!(batch.is_weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn uniform_priorities_with_beta_one_give_unit_weights() {
        let mut b = buffer(16, 0.7, 1e-6);
        b.set_beta(1.0).unwrap();
        for i in 0..16 {
            b.insert(t(i as f64), Some(2.0)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = b.sample(8, &mut rng).unwrap();
        for w in batch.is_weights {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_decrease_with_probability() {
        let mut b = buffer(8, 1.0, 0.0);
        b.set_beta(0.5).unwrap();
        for p in [1.0, 2.0, 4.0, 8.0] {
            b.insert(t(p), Some(p)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = b.sample(4, &mut rng).unwrap();
        let mut pairs: Vec<(f64, f64)> = batch
            .probabilities
            .iter()
            .cloned()
            .zip(batch.is_weights.iter().cloned())
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 {
                assert!(w[1].1 < w[0].1);
            }
        }
        let max = batch.is_weights.iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn sample_rejects_bad_batch_sizes() {
        let mut b = buffer(8, 0.7, 1e-6);
        b.insert(t(0.0), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(b.sample(0, &mut rng), Err(Error::Validation { .. })));
        assert!(matches!(
            b.sample(2, &mut rng),
            Err(Error::Underfilled { size: 1, requested: 2 })
        ));
    }

    #[test]
    fn update_to_zero_drops_to_floor() {
        let mut b = buffer(4, 0.7, 1e-6);
        b.insert(t(0.0), Some(1.0)).unwrap();
        b.insert(t(1.0), Some(1.0)).unwrap();
        let before = b.tree().total();
        let slot = b.slot_ref(0).unwrap();
        b.update_priorities(&[slot], &[0.0]).unwrap();
        let floor = libm::pow(1e-6, 0.7);
        assert_eq!(b.leaf_priority(0).unwrap(), floor);
        assert!(b.tree().total() < before);
    }

    #[test]
    fn update_with_same_score_leaves_total_unchanged() {
        let mut b = buffer(4, 0.7, 1e-6);
        b.insert(t(0.0), Some(2.5)).unwrap();
        b.insert(t(1.0), Some(0.5)).unwrap();
        let before = b.tree().total();
        let slot = b.slot_ref(1).unwrap();
        b.update_priorities(&[slot], &[0.5]).unwrap();
        assert!((b.tree().total() - before).abs() / before <= 1e-9);
    }

    #[test]
    fn stale_generation_updates_are_skipped() {
        let mut b = buffer(2, 1.0, 0.0);
        b.insert(t(0.0), Some(1.0)).unwrap();
        b.insert(t(1.0), Some(1.0)).unwrap();
        let old = b.slot_ref(0).unwrap();
        b.insert(t(2.0), Some(1.0)).unwrap();
        let report = b.update_priorities(&[old], &[50.0]).unwrap();
        assert_eq!(report, UpdateReport { applied: 0, stale: 1 });
        assert_eq!(b.stale_update_count(), 1);
        assert_eq!(b.leaf_priority(0).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_update_is_an_error() {
        let mut b = buffer(4, 1.0, 0.0);
        b.insert(t(0.0), Some(1.0)).unwrap();
        let bogus = SlotRef { index: 3, generation: 0 };
        assert!(matches!(
            b.update_priorities(&[bogus], &[1.0]),
            Err(Error::IndexOutOfRange { index: 3, size: 1 })
        ));
        let ok = b.slot_ref(0).unwrap();
        assert!(b.update_priorities(&[ok], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn max_priority_tracks_updates() {
        let mut b = buffer(4, 1.0, 0.5);
        assert_eq!(b.max_priority_seen(), 1.0);
        b.insert(t(0.0), Some(4.0)).unwrap();
        assert_eq!(b.max_priority_seen(), 4.5);
        b.insert(t(1.0), None).unwrap();
        assert_eq!(b.leaf_priority(1).unwrap(), 4.5);
    }

    #[test]
    fn literal_form_omits_the_floor() {
        let mut cfg = BufferConfig::new(4, 1, 1);
        cfg.alpha = 0.5;
        cfg.priority_form = PriorityForm::Literal;
        let mut b = PrioritizedBuffer::new(cfg).unwrap();
        b.insert(t(0.0), Some(0.0)).unwrap();
        b.insert(t(1.0), Some(4.0)).unwrap();
        assert_eq!(b.sampling_probabilities().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn beta_schedule_anneals_linearly() {
        let s = BetaSchedule {
            start: 0.4,
            end: 1.0,
            steps: 100,
        };
        assert_eq!(s.value(0), 0.4);
        assert!((s.value(50) - 0.7).abs() < 1e-15);
        assert_eq!(s.value(100), 1.0);
        assert_eq!(s.value(1000), 1.0);
        assert_eq!(BetaSchedule::constant(0.4).value(10), 0.4);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = BufferConfig::new(4, 1, 1);
        cfg.alpha = 1.5;
        assert!(PrioritizedBuffer::new(cfg.clone()).is_err());
        cfg.alpha = 0.7;
        cfg.capacity = 0;
        assert!(PrioritizedBuffer::new(cfg).is_err());
    }
}
