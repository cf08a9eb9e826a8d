//! The two-generator, three-discriminator game.
//!
//! `D_p` separates labeled positives from `G_p`'s samples, `D_u` separates
//! unlabeled data from the prior-weighted mixture of both generators, and
//! `D_n` separates labeled positives from `G_n`'s samples. `G_p` tries to
//! fool `D_p` and `D_u`; `G_n` tries to fool `D_u` while staying where `D_n`
//! is confident its samples are not positive.

mod config;
mod losses;
mod state;

pub use config::{Architecture, GenPuConfig, GeneratorLoss, Mode, Repulsion};
pub use losses::{
    du_value, gan_value, gn_value, gp_value, loss_d_n, loss_d_p, loss_d_u, loss_g_n, loss_g_p,
    mean_log_d, mean_log_one_minus_d, Disc,
};
pub use state::{streams, Class, GenPuState, Player, Role, StateSnapshot, StepMetrics};
