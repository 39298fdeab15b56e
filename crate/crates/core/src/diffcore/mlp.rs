use rand::Rng;

use super::{DiffError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// A dense layer computing `act(x · Wᵀ + b)` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Feed-forward network parameters.
///
/// Every mutation bumps an internal generation counter so that a forward
/// cache taken before an optimizer step cannot be replayed afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    generation: u64,
}

/// Activation record of one forward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    generation: u64,
    shapes: Vec<(usize, usize)>,
    inputs: Vec<Tensor>,
    outputs: Vec<Tensor>,
}

impl MlpCache {
    pub fn output(&self) -> &Tensor {
        self.outputs.last().expect("cache of a network with no layers")
    }

    pub fn input(&self) -> &Tensor {
        &self.inputs[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Gradients laid out exactly like the parameters of the network they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data(), l.bias.data()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weight.data_mut().iter_mut().for_each(|v| *v *= k);
            l.bias.data_mut().iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.is_finite())
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `hidden_act` is used on every
    /// hidden layer; `output_act` on the last.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Layer {
                    weight: Tensor::new(fan_out, fan_in, data).expect("sized above"),
                    bias: Tensor::zeros(1, fan_out),
                    activation: if i + 1 == n { output_act } else { hidden_act },
                }
            })
            .collect();
        Self {
            layers,
            generation: 0,
        }
    }

    /// Builds a network from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, DiffError> {
        if layers.is_empty() {
            return Err(DiffError::Empty);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.shape() != (1, l.out_dim()) {
                return Err(DiffError::Layer {
                    layer: i,
                    what: "bias",
                    expected: (1, l.out_dim()),
                    got: l.bias.shape(),
                });
            }
            if i > 0 && layers[i - 1].out_dim() != l.in_dim() {
                return Err(DiffError::Layer {
                    layer: i,
                    what: "weight",
                    expected: (l.out_dim(), layers[i - 1].out_dim()),
                    got: l.weight.shape(),
                });
            }
            if !l.weight.is_finite() || !l.bias.is_finite() {
                return Err(DiffError::NonFinite(format!("layer {i} parameters")));
            }
        }
        Ok(Self {
            layers,
            generation: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weight.shape()).collect()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.data(), l.bias.data()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.data_mut(), l.bias.data_mut()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), DiffError> {
        if flat.len() != self.num_params() {
            return Err(DiffError::Shape {
                context: "Mlp::set_flat".into(),
                expected: (self.num_params(), 1),
                got: (flat.len(), 1),
            });
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// Polyak averaging `self ← (1−τ)·self + τ·source`.
    pub fn polyak_toward(&mut self, source: &Mlp, tau: f64) {
        assert_eq!(self.shapes(), source.shapes(), "polyak between unlike nets");
        let src = source.param_slices();
        for (dst, src) in self.param_slices_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (1.0 - tau) * *d + tau * s;
            }
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, MlpCache), DiffError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if x.cols() != layer.in_dim() {
                return Err(DiffError::Layer {
                    layer: i,
                    what: "input",
                    expected: (x.rows(), layer.in_dim()),
                    got: x.shape(),
                });
            }
            let mut y = x.matmul_nt(&layer.weight)?;
            let bias = layer.bias.data();
            let act = layer.activation;
            for r in 0..y.rows() {
                for (v, b) in y.row_mut(r).iter_mut().zip(bias) {
                    *v = act.apply(*v + b);
                }
            }
            inputs.push(x);
            x = y.clone();
            outputs.push(y);
        }
        if !x.is_finite() {
            return Err(DiffError::NonFinite("mlp forward output".into()));
        }
        let cache = MlpCache {
            generation: self.generation,
            shapes: self.shapes(),
            inputs,
            outputs,
        };
        Ok((x, cache))
    }

    /// Forward without keeping the activation record.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor, DiffError> {
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if x.cols() != layer.in_dim() {
                return Err(DiffError::Layer {
                    layer: i,
                    what: "input",
                    expected: (x.rows(), layer.in_dim()),
                    got: x.shape(),
                });
            }
            let mut y = x.matmul_nt(&layer.weight)?;
            let bias = layer.bias.data();
            for r in 0..y.rows() {
                for (v, b) in y.row_mut(r).iter_mut().zip(bias) {
                    *v = layer.activation.apply(*v + b);
                }
            }
            x = y;
        }
        if !x.is_finite() {
            return Err(DiffError::NonFinite("mlp forward output".into()));
        }
        Ok(x)
    }

    fn check_cache(&self, cache: &MlpCache, output_grad: &Tensor) -> Result<(), DiffError> {
        if cache.generation != self.generation {
            return Err(DiffError::StaleCache {
                cached: cache.generation,
                current: self.generation,
            });
        }
        if cache.shapes != self.shapes() {
            return Err(DiffError::CacheMismatch);
        }
        let out = cache.output();
        if out.shape() != output_grad.shape() {
            return Err(DiffError::Shape {
                context: "mlp backward output gradient".into(),
                expected: out.shape(),
                got: output_grad.shape(),
            });
        }
        Ok(())
    }

    /// Reverse pass: parameter gradients and the gradient w.r.t. the input.
    pub fn backward(
        &self,
        cache: &MlpCache,
        output_grad: &Tensor,
    ) -> Result<(MlpGrads, Tensor), DiffError> {
        let (grads, input_grad) = self.backward_impl(cache, output_grad, true)?;
        Ok((grads.expect("requested"), input_grad))
    }

    /// Reverse pass that only propagates to the input; used where this
    /// network's parameters are detached.
    pub fn backward_input(&self, cache: &MlpCache, output_grad: &Tensor) -> Result<Tensor, DiffError> {
        Ok(self.backward_impl(cache, output_grad, false)?.1)
    }

    fn backward_impl(
        &self,
        cache: &MlpCache,
        output_grad: &Tensor,
        want_params: bool,
    ) -> Result<(Option<MlpGrads>, Tensor), DiffError> {
        self.check_cache(cache, output_grad)?;
        let n = self.layers.len();
        let mut layer_grads = Vec::with_capacity(if want_params { n } else { 0 });
        let mut grad = output_grad.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let y = &cache.outputs[i];
            for (g, &yv) in grad.data_mut().iter_mut().zip(y.data()) {
                *g *= layer.activation.derivative_from_output(yv);
            }
            if want_params {
                let dw = grad.matmul_tn(&cache.inputs[i])?;
                let db = grad.sum_rows();
                layer_grads.push(LayerGrad {
                    weight: dw,
                    bias: db,
                });
            }
            grad = grad.matmul(&layer.weight)?;
        }
        if !grad.is_finite() {
            return Err(DiffError::NonFinite("mlp backward input gradient".into()));
        }
        let grads = want_params.then(|| {
            layer_grads.reverse();
            MlpGrads {
                layers: layer_grads,
            }
        });
        Ok((grads, grad))
    }
}
