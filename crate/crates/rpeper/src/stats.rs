//! Summary statistics across seeds.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Two-sided Student-t quantile `t_{1 - (1 - level) / 2, dof}`.
pub fn t_quantile(level: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// Half-width of the 95% Student-t interval; `None` below two samples.
    pub half_width: Option<f64>,
}

impl Interval {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let std = sample_std(xs);
        let half_width = (n >= 2).then(|| t_quantile(0.95, (n - 1) as f64) * std / (n as f64).sqrt());
        Self {
            mean: if n == 0 { f64::NAN } else { mean(xs) },
            std,
            n,
            half_width,
        }
    }

    pub fn low(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean - h)
    }

    pub fn high(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean + h)
    }
}
