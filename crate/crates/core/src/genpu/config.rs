use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, AdamConfig, Init, LayerSpec};
use crate::error::{Error, Result};

/// Whether `D_n` sees labeled positives (PU) or labeled negatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Pu,
    SemiSupervised,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// Minimize `log(1 - D(G(z)))`.
    Saturating,
    /// Minimize `-log D(G(z))`.
    #[default]
    NonSaturating,
}

/// Form of the term that pushes `G_n` away from the positive data.
///
/// Both forms drive `D_n(G_n(z))` toward zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repulsion {
    /// Minimize `+log D_n(G_n(z))`.
    #[default]
    LogD,
    /// Minimize `-log(1 - D_n(G_n(z)))`.
    LogOneMinusD,
}

/// Widths and activations of the five networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub generator_output: Activation,
    /// Hidden widths shared by `D_p` and `D_n`.
    pub disc_pn_hidden: Vec<usize>,
    pub disc_u_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub init: Init,
}

impl Architecture {
    /// Networks for 2-D toy data: generators with two hidden layers of 128,
    /// discriminators with one, latent dimension 256. Generator output is
    /// linear because the toy data is not confined to `[-1, 1]`.
    pub fn synthetic() -> Self {
        Self {
            latent_dim: 256,
            generator_hidden: vec![128, 128],
            generator_output: Activation::Identity,
            disc_pn_hidden: vec![128],
            disc_u_hidden: vec![128],
            hidden_activation: Activation::Relu,
            init: Init::Glorot,
        }
    }

    /// Networks for 28x28 digits: 100-d latent, 256-256 generators with tanh
    /// output, linear-logistic `D_p`/`D_n`, and a 256-256 `D_u`.
    pub fn mnist() -> Self {
        Self {
            latent_dim: 100,
            generator_hidden: vec![256, 256],
            generator_output: Activation::Tanh,
            disc_pn_hidden: vec![],
            disc_u_hidden: vec![256, 256],
            hidden_activation: Activation::leaky_relu(),
            init: Init::Glorot,
        }
    }

    pub fn generator_layers(&self, data_dim: usize) -> Vec<LayerSpec> {
        self.generator_hidden
            .iter()
            .map(|&w| LayerSpec::new(w, self.hidden_activation))
            .chain([LayerSpec::new(data_dim, self.generator_output)])
            .collect()
    }

    fn discriminator_layers(&self, hidden: &[usize]) -> Vec<LayerSpec> {
        hidden
            .iter()
            .map(|&w| LayerSpec::new(w, self.hidden_activation))
            .chain([LayerSpec::new(1, Activation::Sigmoid)])
            .collect()
    }

    pub fn disc_pn_layers(&self) -> Vec<LayerSpec> {
        self.discriminator_layers(&self.disc_pn_hidden)
    }

    pub fn disc_u_layers(&self) -> Vec<LayerSpec> {
        self.discriminator_layers(&self.disc_u_hidden)
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::synthetic()
    }
}

/// Game weights, network shapes and optimizer settings.
///
/// `pi_n` is always derived as `1 - pi_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenPuConfig {
    pub pi_p: f64,
    pub lambda_p: f64,
    pub lambda_u: f64,
    pub lambda_n: f64,
    /// Minibatch size drawn from `X_p` (and `X_n` in semi-supervised mode).
    pub batch_p: usize,
    pub batch_u: usize,
    /// Latent codes per generator per phase.
    pub batch_noise: usize,
    pub adam: AdamConfig,
    pub iterations: u64,
    /// Discriminator phases per generator phase.
    pub d_steps: usize,
    pub mode: Mode,
    pub generator_loss: GeneratorLoss,
    pub repulsion: Repulsion,
    pub architecture: Architecture,
    pub seed: u64,
}

impl Default for GenPuConfig {
    fn default() -> Self {
        Self {
            pi_p: 0.5,
            lambda_p: 1.0,
            lambda_u: 1.0,
            lambda_n: 1.0,
            batch_p: 50,
            batch_u: 100,
            batch_noise: 100,
            adam: AdamConfig::default(),
            iterations: 10_000,
            d_steps: 1,
            mode: Mode::Pu,
            generator_loss: GeneratorLoss::NonSaturating,
            repulsion: Repulsion::LogD,
            architecture: Architecture::synthetic(),
            seed: 0,
        }
    }
}

impl GenPuConfig {
    /// Settings for the 2-D toy sets.
    ///
    /// The optimizer differs from the digit defaults: Adam(0.5, 0.999) at
    /// lr 1e-3 with two discriminator phases per generator phase, and the
    /// saturating repulsion. With `+log D_n` the repulsion gradient does not
    /// vanish once `D_n(G_n(z))` reaches 0, and on unbounded linear outputs
    /// `G_n` drifts off without limit.
    pub fn synthetic(pi_p: f64) -> Self {
        Self {
            pi_p,
            adam: AdamConfig {
                lr: 1e-3,
                beta1: 0.5,
                ..AdamConfig::default()
            },
            d_steps: 2,
            iterations: 6000,
            repulsion: Repulsion::LogOneMinusD,
            ..Self::default()
        }
    }

    pub fn mnist(pi_p: f64) -> Self {
        Self {
            pi_p,
            architecture: Architecture::mnist(),
            ..Self::default()
        }
    }

    pub fn pi_n(&self) -> f64 {
        1.0 - self.pi_p
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pi_p) {
            return Err(Error::param(format!("pi_p = {} outside [0, 1]", self.pi_p)));
        }
        for (name, v) in [
            ("lambda_p", self.lambda_p),
            ("lambda_u", self.lambda_u),
            ("lambda_n", self.lambda_n),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(format!("{name} = {v} must be a finite value >= 0")));
            }
        }
        if self.lambda_p == 0.0 && self.lambda_u == 0.0 {
            return Err(Error::param("at least one of lambda_p, lambda_u must be > 0"));
        }
        for (name, v) in [
            ("batch_p", self.batch_p),
            ("batch_u", self.batch_u),
            ("batch_noise", self.batch_noise),
            ("d_steps", self.d_steps),
            ("architecture.latent_dim", self.architecture.latent_dim),
        ] {
            if v == 0 {
                return Err(Error::param(format!("{name} must be >= 1")));
            }
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.adam;
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(Error::param(format!("adam.lr = {lr} must be >= 0")));
        }
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
            return Err(Error::param("adam betas must lie in [0, 1) and eps must be > 0"));
        }
        Ok(())
    }
}
