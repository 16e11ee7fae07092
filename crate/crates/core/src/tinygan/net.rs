//! Dense feed-forward networks with hand-written backpropagation.
//!
//! Batches are `(examples, features)` matrices. Weights are stored
//! `(inputs, outputs)` so a layer is `x·W + b`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// Leaky ReLU with the given negative slope (must be in `[0, 1]`).
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::LeakyRelu(a) => z.mapv_inplace(|v| if v > 0.0 { v } else { a * v }),
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiply `grad` by the derivative, given pre-activation `z` and output `a`.
    fn backprop(self, grad: &mut Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(z).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::LeakyRelu(s) => Zip::from(grad).and(z).for_each(|g, &z| {
                if z <= 0.0 {
                    *g *= s
                }
            }),
            Activation::Sigmoid => Zip::from(grad).and(a).for_each(|g, &a| *g *= a * (1.0 - a)),
            Activation::Tanh => Zip::from(grad).and(a).for_each(|g, &a| *g *= 1.0 - a * a),
        }
    }

    /// Global Lipschitz constant of the scalar map.
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Identity | Activation::Relu | Activation::Tanh => 1.0,
            Activation::LeakyRelu(a) => a.abs().max(1.0),
            Activation::Sigmoid => 0.25,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `inputs[k]` feeds layer `k`; `inputs[0]` is the batch itself.
    pub inputs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

/// Parameter gradients, laid out like [`DenseNet::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weight.iter().chain(l.bias.iter()).map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weight *= k;
            l.bias *= k;
        }
    }
}

impl DenseNet {
    /// He-style Gaussian initialization, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output width");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let std = (2.0 / w[0] as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        let g: f64 = StandardNormal.sample(rng);
                        std * g
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        DenseNet { layers, hidden, output }
    }

    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        let layers = sizes
            .windows(2)
            .map(|w| Dense { weight: Array2::zeros((w[0], w[1])), bias: Array1::zeros(w[1]) })
            .collect();
        DenseNet { layers, hidden, output }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_width()).chain(self.layers.iter().map(Dense::outputs)).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn activation_of(&self, k: usize) -> Activation {
        if k + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Forward pass keeping every intermediate for [`DenseNet::backward`].
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Activations> {
        if batch.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch { expected: self.input_width(), got: batch.ncols() });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = batch.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weight);
            z += &layer.bias;
            let mut a = z.clone();
            self.activation_of(k).apply(&mut a);
            inputs.push(x);
            pre.push(z);
            x = a;
        }
        Ok(Activations { inputs, pre, output: x })
    }

    /// Output only.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.run(batch, true)
    }

    /// Output before the final activation.
    pub fn predict_pre_output(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.run(batch, false)
    }

    fn run(&self, batch: ArrayView2<f64>, squash: bool) -> Result<Array2<f64>> {
        if batch.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch { expected: self.input_width(), got: batch.ncols() });
        }
        let last = self.layers.len() - 1;
        let mut x = batch.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weight);
            z += &layer.bias;
            if k < last || squash {
                self.activation_of(k).apply(&mut z);
            }
            x = z;
        }
        Ok(x)
    }

    /// Backpropagate `grad_output` (∂loss/∂output, same shape as the output).
    ///
    /// Returns parameter gradients when `want_params` is set, and always the
    /// gradient with respect to the input batch.
    pub fn backward(
        &self,
        acts: &Activations,
        grad_output: &Array2<f64>,
        want_params: bool,
    ) -> (Option<Gradients>, Array2<f64>) {
        let mut grads = want_params.then(|| Vec::with_capacity(self.layers.len()));
        let mut g = grad_output.clone();
        let next_input = |k: usize| if k + 1 < acts.inputs.len() { &acts.inputs[k + 1] } else { &acts.output };
        for k in (0..self.layers.len()).rev() {
            self.activation_of(k).backprop(&mut g, &acts.pre[k], next_input(k));
            if let Some(gs) = grads.as_mut() {
                let weight = acts.inputs[k].t().dot(&g).as_standard_layout().into_owned();
                gs.push(Dense { weight, bias: g.sum_axis(Axis(0)) });
            }
            g = g.dot(&self.layers[k].weight.t());
        }
        let grads = grads.map(|mut gs| {
            gs.reverse();
            Gradients { layers: gs }
        });
        (grads, g)
    }

    /// Visit every parameter tensor with its matching gradient, flattened.
    pub(crate) fn for_each_param_mut(&mut self, grads: &Gradients, mut f: impl FnMut(usize, &mut [f64], &[f64])) {
        let mut slot = 0;
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            f(slot, l.weight.as_slice_mut().expect("standard layout"), g.weight.as_slice().expect("standard layout"));
            f(slot + 1, l.bias.as_slice_mut().expect("standard layout"), g.bias.as_slice().expect("standard layout"));
            slot += 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(&[4, 3, 2], Activation::Relu, Activation::Identity);
        let out = net.predict(Array2::from_elem((5, 4), 0.7).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_is_a_matrix_product() {
        let mut net = DenseNet::zeros(&[2, 2], Activation::Relu, Activation::Identity);
        net.layers[0].weight = array![[1.0, 2.0], [3.0, 4.0]];
        net.layers[0].bias = array![0.5, -0.5];
        let x = array![[1.0, -1.0], [2.0, 0.0]];
        let out = net.predict(x.view()).unwrap();
        assert_eq!(out, x.dot(&net.layers[0].weight) + &net.layers[0].bias);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = DenseNet::zeros(&[4, 1], Activation::Relu, Activation::Identity);
        assert!(matches!(net.forward(Array2::zeros((1, 3)).view()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn forward_and_predict_agree() {
        let mut r = rng::stream(3, 0);
        let net = DenseNet::new(&[5, 7, 3], Activation::LeakyRelu(0.2), Activation::Sigmoid, &mut r);
        let x = Array2::from_shape_fn((4, 5), |(i, j)| (i as f64 - j as f64) * 0.3);
        assert_eq!(net.forward(x.view()).unwrap().output, net.predict(x.view()).unwrap());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + 2f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }
}
