//! Generative positive-unlabeled learning.
//!
//! Two generators and three discriminators recover both class-conditional
//! distributions from labeled positives and unlabeled data; a standard
//! classifier is then trained on generated samples. Alongside the game:
//!
//! * [`autodiff`]: tensors, reverse-mode tape, MLPs and Adam;
//! * [`datagen`]: toy datasets, IDX loading, PU splitting;
//! * [`oracle`]: exact optimal discriminators and equilibrium values on
//!   finite sample spaces;
//! * [`baselines`]: unbiased and non-negative PU risk classifiers and the
//!   classifier trained on generated samples.

pub mod autodiff;
pub mod baselines;
pub mod checkpoint;
pub mod datagen;
pub mod error;
pub mod genpu;
pub mod oracle;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
