use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::matrix::{axpy, dot};
use super::{Matrix, Parameters};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => libm::tanh(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored row-major as
/// `output_dim x input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    weights: Vec<f64>,
    bias: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
}

impl Dense {
    pub fn new(
        weights: Vec<f64>,
        bias: Vec<f64>,
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::invalid("layer", "dimensions must be positive"));
        }
        Error::check_dim("layer weights", input_dim * output_dim, weights.len())?;
        Error::check_dim("layer bias", output_dim, bias.len())?;
        if !weights.iter().chain(&bias).all(|v| v.is_finite()) {
            return Err(Error::invalid("layer", "parameters must be finite"));
        }
        Ok(Self {
            weights,
            bias,
            input_dim,
            output_dim,
            activation,
        })
    }

    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Result<Self> {
        Self::new(
            vec![0.0; input_dim * output_dim],
            vec![0.0; output_dim],
            input_dim,
            output_dim,
            activation,
        )
    }

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = 1.0 / libm::sqrt(input_dim as f64);
        let weights = (0..input_dim * output_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Self::new(weights, vec![0.0; output_dim], input_dim, output_dim, activation)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward_into(&self, x: &Matrix, out: &mut Matrix) {
        for r in 0..x.rows() {
            let xr = x.row(r);
            let yr = out.row_mut(r);
            for (j, y) in yr.iter_mut().enumerate() {
                let w = &self.weights[j * self.input_dim..(j + 1) * self.input_dim];
                *y = self.activation.apply(self.bias[j] + dot(w, xr));
            }
        }
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Dense>,
}

/// Inputs and post-activation outputs of every layer from one batched
/// forward pass; `values[0]` is the input and `values[l + 1]` the output of
/// layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    values: Vec<Matrix>,
}

impl Activations {
    pub fn input(&self) -> &Matrix {
        &self.values[0]
    }

    pub fn output(&self) -> &Matrix {
        self.values.last().expect("activations are never empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients laid out like the parameters of a [`DenseNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub layers: Vec<DenseGrad>,
}

impl NetGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.param_slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &NetGrads) {
        for (a, b) in self.param_slices_mut().into_iter().zip(other.param_slices()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

impl Parameters for NetGrads {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl Parameters for DenseNet {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

impl DenseNet {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network", "needs at least one layer"));
        }
        for pair in layers.windows(2) {
            Error::check_dim("layer chain", pair[0].output_dim, pair[1].input_dim)?;
        }
        Ok(Self { layers })
    }

    /// Multi-layer perceptron with `hidden` widths, `hidden_act` on hidden
    /// layers and `output_act` on the last layer.
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output_act } else { hidden_act };
                Dense::init(dims[i], dims[i + 1], act, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Layers with mutable parameters; shapes stay fixed.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.forward_batch(&batch)?.into_vec())
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        Error::check_dim("network input", self.input_dim(), x.cols())?;
        let mut current: Option<Matrix> = None;
        for layer in &self.layers {
            let input = current.as_ref().unwrap_or(x);
            let mut out = Matrix::zeros(x.rows(), layer.output_dim);
            layer.forward_into(input, &mut out);
            current = Some(out);
        }
        Ok(current.expect("at least one layer"))
    }

    /// Forward pass that keeps every intermediate output for [`Self::backward`].
    pub fn forward_cached(&self, x: Matrix) -> Result<Activations> {
        Error::check_dim("network input", self.input_dim(), x.cols())?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x);
        for layer in &self.layers {
            let input = values.last().expect("non-empty");
            let mut out = Matrix::zeros(input.rows(), layer.output_dim);
            layer.forward_into(input, &mut out);
            values.push(out);
        }
        Ok(Activations { values })
    }

    /// Reverse-mode gradients of `sum_rows <upstream_row, output_row>` with
    /// respect to every parameter (summed over the batch) and to the input.
    pub fn backward(&self, acts: &Activations, upstream: &Matrix) -> Result<(NetGrads, Matrix)> {
        let mut grads = NetGrads::zeros_like(self);
        let input_grad = self.backward_accumulate(acts, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Self::backward`] but adds into existing gradients.
    pub fn backward_accumulate(
        &self,
        acts: &Activations,
        upstream: &Matrix,
        grads: &mut NetGrads,
    ) -> Result<Matrix> {
        self.backward_impl(acts, upstream, Some(grads))
    }

    /// Gradient with respect to the input only; parameter gradients are not
    /// formed.
    pub fn input_gradient(&self, acts: &Activations, upstream: &Matrix) -> Result<Matrix> {
        self.backward_impl(acts, upstream, None)
    }

    fn backward_impl(
        &self,
        acts: &Activations,
        upstream: &Matrix,
        mut grads: Option<&mut NetGrads>,
    ) -> Result<Matrix> {
        if acts.values.len() != self.layers.len() + 1
            || acts
                .values
                .iter()
                .skip(1)
                .zip(&self.layers)
                .any(|(v, l)| v.cols() != l.output_dim)
            || acts.values[0].cols() != self.input_dim()
        {
            return Err(Error::Usage("activations were not produced by this network"));
        }
        if grads.as_ref().is_some_and(|g| g.layers.len() != self.layers.len()) {
            return Err(Error::ArchitectureMismatch("gradient buffer"));
        }
        Error::check_dim("upstream gradient", self.output_dim(), upstream.cols())?;
        Error::check_dim("upstream batch", acts.values[0].rows(), upstream.rows())?;

        let rows = upstream.rows();
        let mut delta = upstream.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts.values[l];
            let output = &acts.values[l + 1];
            for (d, &y) in delta.data_mut().iter_mut().zip(output.data()) {
                *d *= layer.activation.derivative_from_output(y);
            }
            let mut next = Matrix::zeros(rows, layer.input_dim);
            for r in 0..rows {
                let dz = delta.row(r);
                let xr = input.row(r);
                let dx = next.row_mut(r);
                for (j, &dzj) in dz.iter().enumerate() {
                    if dzj == 0.0 {
                        continue;
                    }
                    let span = j * layer.input_dim..(j + 1) * layer.input_dim;
                    if let Some(g) = grads.as_deref_mut() {
                        let g = &mut g.layers[l];
                        axpy(dzj, xr, &mut g.weights[span.clone()]);
                        g.bias[j] += dzj;
                    }
                    axpy(dzj, &layer.weights[span], dx);
                }
            }
            delta = next;
        }
        Ok(delta)
    }
}
