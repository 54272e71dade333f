use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Complete binary tree of partial sums over `capacity` non-negative leaves.
///
/// Nodes are stored 1-based: node 1 is the root, node `k` has children `2k`
/// and `2k + 1`, and leaf `i` lives at node `width + i` where `width` is
/// `capacity` rounded up to a power of two. Padding leaves stay at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    capacity: usize,
    width: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("capacity", "must be at least 1"));
        }
        let width = capacity.next_power_of_two();
        Ok(Self {
            capacity,
            width,
            nodes: vec![0.0; 2 * width],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Sum of all leaves.
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.width + leaf]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.nodes[self.width..self.width + self.capacity]
    }

    /// Raw node array (index 0 unused). Exposed for consistency checks.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of internal nodes; internal nodes are `1..internal_len()`.
    pub fn internal_len(&self) -> usize {
        self.width
    }

    /// Sets a leaf and recomputes every ancestor from its two children, so
    /// each internal node is always exactly the float sum of its children.
    pub fn set(&mut self, leaf: usize, value: f64) {
        assert!(leaf < self.capacity, "leaf {leaf} out of range");
        debug_assert!(value >= 0.0 && value.is_finite());
        let mut node = self.width + leaf;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Index of the leaf whose cumulative range `[prefix_i, prefix_i + leaf_i)`
    /// contains `mass`.
    ///
    /// `mass` is expected in `[0, total)`. Rounding in the subtractions can
    /// push the descent onto a zero leaf at the right edge of a subtree; in
    /// that case the nearest non-zero leaf to the left is returned.
    pub fn find_prefix(&self, mass: f64) -> usize {
        let mut node = 1;
        let mut mass = mass;
        while node < self.width {
            let left = 2 * node;
            if mass < self.nodes[left] {
                node = left;
            } else {
                mass -= self.nodes[left];
                node = left + 1;
            }
        }
        let mut leaf = (node - self.width).min(self.capacity - 1);
        while leaf > 0 && self.get(leaf) <= 0.0 {
            leaf -= 1;
        }
        leaf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_scan(leaves: &[f64], mass: f64) -> usize {
        let mut acc = 0.0;
        for (i, &p) in leaves.iter().enumerate() {
            acc += p;
            if mass < acc {
                return i;
            }
        }
        leaves.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    fn assert_consistent(tree: &SumTree) {
        let nodes = tree.nodes();
        for k in 1..tree.internal_len() {
            let sum = nodes[2 * k] + nodes[2 * k + 1];
            let scale = sum.abs().max(1e-300);
            assert!((nodes[k] - sum).abs() / scale <= 1e-9, "node {k}");
        }
    }

    #[test]
    fn non_power_of_two_capacity_pads_with_zeros() {
        let mut tree = SumTree::new(5).unwrap();
        for i in 0..5 {
            tree.set(i, (i + 1) as f64);
        }
        assert_eq!(tree.internal_len(), 8);
        assert_eq!(tree.total(), 15.0);
        assert_eq!(tree.leaves(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(tree.find_prefix(0.0), 0);
        assert_eq!(tree.find_prefix(0.999), 0);
        assert_eq!(tree.find_prefix(1.0), 1);
        assert_eq!(tree.find_prefix(14.999), 4);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        assert!(SumTree::new(0).is_err());
    }

    #[test]
    fn rounding_past_total_lands_on_last_nonzero_leaf() {
        let mut tree = SumTree::new(8).unwrap();
        tree.set(0, 1.0);
        tree.set(2, 2.0);
        assert_eq!(tree.find_prefix(3.0), 2);
        assert_eq!(tree.find_prefix(100.0), 2);
    }

    #[test]
    fn zero_leaves_are_skipped() {
        let mut tree = SumTree::new(4).unwrap();
        tree.set(1, 1.0);
        tree.set(3, 1.0);
        assert_eq!(tree.find_prefix(0.0), 1);
        assert_eq!(tree.find_prefix(0.5), 1);
        assert_eq!(tree.find_prefix(1.0), 3);
    }

    #[test]
    fn random_updates_keep_partial_sums_consistent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut tree = SumTree::new(64).unwrap();
        for _ in 0..1000 {
            let leaf = rng.random_range(0..64);
            let value = rng.random::<f64>() * 10.0;
            tree.set(leaf, value);
            assert_consistent(&tree);
        }
        let naive: f64 = tree.leaves().iter().sum();
        assert!((tree.total() - naive).abs() / naive <= 1e-9);
    }

    proptest! {
        #[test]
        fn descent_matches_linear_scan(
            leaves in proptest::collection::vec(0.0f64..10.0, 1..70),
            frac in 0.0f64..1.0,
        ) {
            let mut tree = SumTree::new(leaves.len()).unwrap();
            for (i, &p) in leaves.iter().enumerate() {
                tree.set(i, p);
            }
            prop_assume!(tree.total() > 0.0);
            let mass = frac * tree.total();
            prop_assert_eq!(tree.find_prefix(mass), linear_scan(&leaves, mass));
        }
    }
}
