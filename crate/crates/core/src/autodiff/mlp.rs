use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Gradients, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor};

/// Weight initialization scheme. Biases always start at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Uniform on `±sqrt(6 / (fan_in + fan_out))`.
    #[default]
    Glorot,
    /// All weights zero. Hidden units stay identical, so such a net cannot
    /// break symmetry; kept for auditing the literal zero setting.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `[fan_in, fan_out]`
    pub weight: Tensor,
    /// `[fan_out]`
    pub bias: Tensor,
    pub activation: Activation,
}

/// Which value the last layer reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    Activated,
    /// Skip the last activation. Discriminator losses use this to work on
    /// logits and stay finite when the sigmoid saturates.
    PreActivation,
}

/// Tape handles for one network's parameters, in `[w0, b0, w1, b1, ...]` order.
#[derive(Clone, Debug)]
pub struct NetVars {
    vars: Vec<Var>,
}

impl NetVars {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Fully connected feed-forward network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    name: String,
    layers: Vec<Layer>,
}

impl MlpNetwork {
    pub fn new<R: Rng + ?Sized>(
        name: impl Into<String>,
        input_dim: usize,
        specs: &[LayerSpec],
        init: Init,
        rng: &mut R,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::param("a network needs at least one layer"));
        }
        if input_dim == 0 || specs.iter().any(|s| s.width == 0) {
            return Err(Error::param("layer widths must be positive"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut fan_in = input_dim;
        for spec in specs {
            let fan_out = spec.width;
            let n = fan_in * fan_out;
            let data = match init {
                Init::Zero => vec![0.0; n],
                Init::Glorot => {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..n).map(|_| rng.random_range(-a..a)).collect()
                }
            };
            layers.push(Layer {
                weight: Tensor::new(vec![fan_in, fan_out], data)?,
                bias: Tensor::zeros(vec![fan_out]),
                activation: spec.activation,
            });
            fan_in = fan_out;
        }
        Ok(Self {
            name: name.into(),
            layers,
        })
    }

    pub fn from_layers(name: impl Into<String>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("a network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weight.ndim() != 2 || l.bias.shape() != [l.weight.shape()[1]] {
                return Err(Error::dim(
                    "MlpNetwork::from_layers",
                    format!("layer {i}: weight {:?}, bias {:?}", l.weight.shape(), l.bias.shape()),
                ));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].weight.shape()[1] != pair[1].weight.shape()[0] {
                return Err(Error::dim(
                    "MlpNetwork::from_layers",
                    format!(
                        "layer {i} outputs {} but layer {} takes {}",
                        pair[0].weight.shape()[1],
                        i + 1,
                        pair[1].weight.shape()[0]
                    ),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            layers,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weight.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        (0..self.layers.len())
            .flat_map(|i| {
                [
                    format!("{}.layers.{i}.weight", self.name),
                    format!("{}.layers.{i}.bias", self.name),
                ]
            })
            .collect()
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        if shape.len() != 2 || shape[1] != self.input_dim() {
            return Err(Error::dim(
                "forward",
                format!(
                    "{} expects [m, {}], got {:?}",
                    self.name,
                    self.input_dim(),
                    shape
                ),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward_with(batch, Output::Activated)
    }

    /// Tape-free evaluation; performs the same arithmetic as [`MlpNetwork::apply`].
    pub fn forward_with(&self, batch: &Tensor, output: Output) -> Result<Tensor> {
        self.check_input(batch.shape())?;
        let m = batch.rows();
        let mut h = batch.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (k, n) = (layer.weight.shape()[0], layer.weight.shape()[1]);
            let mut z = gemm(h.data(), false, layer.weight.data(), false, m, k, n);
            for row in z.chunks_mut(n) {
                for (v, b) in row.iter_mut().zip(layer.bias.data()) {
                    *v += b;
                }
            }
            if i < last || output == Output::Activated {
                let act = layer.activation;
                z.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            h = Tensor::new(vec![m, n], z)?;
        }
        Ok(h)
    }

    /// Records the parameters as gradient-carrying leaves.
    pub fn register(&self, tape: &mut Tape) -> NetVars {
        NetVars {
            vars: self.params().into_iter().map(|p| tape.param(p.clone())).collect(),
        }
    }

    /// Records the parameters as constants: gradients still flow through the
    /// network to its input, but not into its weights.
    pub fn register_frozen(&self, tape: &mut Tape) -> NetVars {
        NetVars {
            vars: self
                .params()
                .into_iter()
                .map(|p| tape.constant(p.clone()))
                .collect(),
        }
    }

    pub fn apply(&self, tape: &mut Tape, vars: &NetVars, input: Var, output: Output) -> Result<Var> {
        if vars.vars.len() != 2 * self.layers.len() {
            return Err(Error::Contract(format!(
                "{}: parameter handles belong to another network",
                self.name
            )));
        }
        self.check_input(tape.value(input).shape())?;
        let mut h = input;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = tape.matmul(h, vars.vars[2 * i])?;
            let z = tape.add_bias(z, vars.vars[2 * i + 1])?;
            h = if i < last || output == Output::Activated {
                tape.activate(z, layer.activation)?
            } else {
                z
            };
        }
        Ok(h)
    }

    /// Gradients for this network's parameters, in [`MlpNetwork::params`] order.
    pub fn collect_grads(&self, tape: &Tape, grads: &Gradients, vars: &NetVars) -> Vec<Tensor> {
        vars.vars.iter().map(|&v| grads.wrt(tape, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut eye = Tensor::zeros(vec![3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let net = MlpNetwork::from_layers(
            "id",
            vec![Layer {
                weight: eye,
                bias: Tensor::zeros(vec![3]),
                activation: Activation::Identity,
            }],
        )
        .unwrap();
        let v = Tensor::from_rows(&[vec![1.5, -2.0, 0.25]]).unwrap();
        assert_eq!(net.forward(&v).unwrap(), v);
    }

    #[test]
    fn sigmoid_on_zero_preactivation_is_half() {
        let net = MlpNetwork::new(
            "d",
            4,
            &[LayerSpec::new(1, Activation::Sigmoid)],
            Init::Zero,
            &mut rng(),
        )
        .unwrap();
        let x = Tensor::full(vec![5, 4], 3.0);
        let out = net.forward(&x).unwrap();
        assert_eq!(out.shape(), &[5, 1]);
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = MlpNetwork::new(
            "d",
            4,
            &[LayerSpec::new(2, Activation::Tanh)],
            Init::Glorot,
            &mut rng(),
        )
        .unwrap();
        assert!(matches!(
            net.forward(&Tensor::zeros(vec![3, 5])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn layer_chain_is_validated() {
        let l = |i, o| Layer {
            weight: Tensor::zeros(vec![i, o]),
            bias: Tensor::zeros(vec![o]),
            activation: Activation::Relu,
        };
        assert!(MlpNetwork::from_layers("n", vec![l(2, 3), l(3, 1)]).is_ok());
        assert!(MlpNetwork::from_layers("n", vec![l(2, 3), l(4, 1)]).is_err());
    }

    #[test]
    fn taped_and_plain_forward_agree_bitwise() {
        let net = MlpNetwork::new(
            "g",
            3,
            &[
                LayerSpec::new(8, Activation::leaky_relu()),
                LayerSpec::new(2, Activation::Tanh),
            ],
            Init::Glorot,
            &mut rng(),
        )
        .unwrap();
        let x = Tensor::new(vec![4, 3], (0..12).map(|i| (i as f64).sin()).collect()).unwrap();
        let mut tape = Tape::new();
        let vars = net.register(&mut tape);
        let xv = tape.constant(x.clone());
        for output in [Output::Activated, Output::PreActivation] {
            let y = net.apply(&mut tape, &vars, xv, output).unwrap();
            assert_eq!(tape.value(y), &net.forward_with(&x, output).unwrap());
        }
    }

    #[test]
    fn glorot_bounds_and_zero_biases() {
        let net = MlpNetwork::new(
            "n",
            10,
            &[LayerSpec::new(20, Activation::Relu)],
            Init::Glorot,
            &mut rng(),
        )
        .unwrap();
        let a = (6.0f64 / 30.0).sqrt();
        assert!(net.layers()[0].weight.data().iter().all(|w| w.abs() < a));
        assert!(net.layers()[0].bias.data().iter().all(|&b| b == 0.0));
        assert_eq!(net.param_count(), 10 * 20 + 20);
        assert_eq!(net.param_names()[1], "n.layers.0.bias");
    }
}
