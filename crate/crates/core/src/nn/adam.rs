use alloc::vec;
use alloc::vec::Vec;

use super::Parameters;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Bias-corrected adaptive moment estimation over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    pub fn new(config: AdamConfig, param_count: usize) -> Self {
        Self {
            config,
            step: 0,
            first: vec![0.0; param_count],
            second: vec![0.0; param_count],
        }
    }

    pub fn for_params<P: Parameters + ?Sized>(config: AdamConfig, params: &P) -> Self {
        Self::new(config, params.param_count())
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.first, &self.second)
    }

    /// One update. A non-finite gradient aborts the call before anything is
    /// modified, including the step counter.
    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        if !params.same_shape(grads) || params.param_count() != self.first.len() {
            return Err(Error::ArchitectureMismatch("adam parameters and gradients"));
        }
        if !grads.all_finite() {
            return Err(Error::NonFiniteGradient("adam step"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(beta1, t);
        let bc2 = 1.0 - libm::pow(beta2, t);
        let mut offset = 0;
        for (p, g) in params.param_slices_mut().into_iter().zip(grads.param_slices()) {
            let m = &mut self.first[offset..offset + p.len()];
            let v = &mut self.second[offset..offset + p.len()];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
            offset += p.len();
        }
        Ok(())
    }
}

impl Parameters for Vec<f64> {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut adam = Adam::for_params(AdamConfig::default(), &p);
        adam.step(&mut p, &vec![0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let lr = 1e-3;
        let g = [0.5, -4.0, 1e-3];
        let mut p = vec![0.0; 3];
        let mut adam = Adam::for_params(AdamConfig::with_lr(lr), &p);
        adam.step(&mut p, &g.to_vec()).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            // hand-computed: m_hat = g, v_hat = g^2
            let expected = -lr * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
            assert!((pi.abs() - lr).abs() < 1e-7);
        }
    }

    #[test]
    fn second_step_matches_hand_computation() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut p = vec![1.0];
        let mut adam = Adam::for_params(cfg, &p);
        adam.step(&mut p, &vec![2.0]).unwrap();
        adam.step(&mut p, &vec![-1.0]).unwrap();
        let m: f64 = 0.9 * 0.2 + 0.1 * -1.0;
        let v: f64 = 0.999 * 0.004 + 0.001 * 1.0;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64 * 0.999);
        let after_first = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
        let expected = after_first - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_aborts_without_side_effects() {
        let mut p = vec![1.0, 2.0];
        let mut adam = Adam::for_params(AdamConfig::default(), &p);
        let err = adam.step(&mut p, &vec![f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient(_)));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(adam.step_count(), 0);
        assert!(adam.moments().0.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![1.0, 2.0];
        let mut adam = Adam::for_params(AdamConfig::default(), &p);
        assert!(adam.step(&mut p, &vec![1.0]).is_err());
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let run = || {
            let mut p = vec![0.3, -0.7];
            let mut adam = Adam::for_params(AdamConfig::default(), &p);
            for k in 0..50 {
                let g = vec![libm::sin(k as f64), libm::cos(k as f64 * 0.3)];
                adam.step(&mut p, &g).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }
}
