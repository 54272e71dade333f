//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Everything is `f64`. Batches are row-major [`Matrix`] values with one
//! sample per row.

mod adam;
mod dense;
mod matrix;

pub use adam::{Adam, AdamConfig};
pub use dense::{Activation, Activations, Dense, DenseGrad, DenseNet, NetGrads};
pub use matrix::Matrix;

use alloc::vec::Vec;

use crate::{Error, Result};

/// Anything that exposes its trainable parameters as a fixed sequence of
/// flat slices. Two values with the same slice lengths in the same order
/// share an architecture.
pub trait Parameters {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn same_shape<P: Parameters + ?Sized>(&self, other: &P) -> bool {
        let a = self.param_slices();
        let b = other.param_slices();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }

    fn all_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }
}

/// `target <- (1 - tau) * target + tau * online`, elementwise.
pub fn polyak_update<P: Parameters>(target: &mut P, online: &P, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid("tau", "must lie in (0, 1]"));
    }
    if !target.same_shape(online) {
        return Err(Error::ArchitectureMismatch("polyak target and online differ"));
    }
    let keep = 1.0 - tau;
    for (t, o) in target.param_slices_mut().into_iter().zip(online.param_slices()) {
        for (tv, &ov) in t.iter_mut().zip(o) {
            *tv = keep * *tv + tau * ov;
        }
    }
    Ok(())
}

/// Central finite-difference gradient of `loss` with respect to every
/// parameter of `params`, in [`Parameters::flatten`] order. Parameters are
/// restored exactly after each probe.
pub fn finite_difference<P: Parameters>(params: &mut P, h: f64, mut loss: impl FnMut(&P) -> f64) -> Vec<f64> {
    let n_slices = params.param_slices().len();
    let mut out = Vec::with_capacity(params.param_count());
    for s in 0..n_slices {
        let len = params.param_slices()[s].len();
        for i in 0..len {
            let orig = params.param_slices()[s][i];
            params.param_slices_mut()[s][i] = orig + h;
            let plus = loss(params);
            params.param_slices_mut()[s][i] = orig - h;
            let minus = loss(params);
            params.param_slices_mut()[s][i] = orig;
            out.push((plus - minus) / (2.0 * h));
        }
    }
    out
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient lengths differ");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
