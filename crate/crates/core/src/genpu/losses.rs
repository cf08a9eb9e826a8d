//! Loss builders for the five networks.
//!
//! Discriminator terms are evaluated on logits: `log D = log_sigmoid(l)` and
//! `log(1 - D) = log_sigmoid(-l)`, finite however saturated `D` becomes.
//!
//! Discriminator builders return objectives to be MAXIMIZED; generator
//! builders return losses to be MINIMIZED. Prefactors `pi * lambda` are
//! applied by the trainer, not here.

use crate::autodiff::{MlpNetwork, NetVars, Output, Tape, Var};
use crate::error::Result;

use super::config::{GeneratorLoss, Mode, Repulsion};

/// A discriminator network together with its handles on the current tape.
#[derive(Clone, Copy)]
pub struct Disc<'a> {
    pub net: &'a MlpNetwork,
    pub vars: &'a NetVars,
}

impl<'a> Disc<'a> {
    pub fn new(net: &'a MlpNetwork, vars: &'a NetVars) -> Self {
        Self { net, vars }
    }

    /// Pre-sigmoid scores for a batch.
    pub fn logits(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        self.net.apply(tape, self.vars, x, Output::PreActivation)
    }
}

/// `mean log D`
pub fn mean_log_d(tape: &mut Tape, logits: Var) -> Result<Var> {
    let l = tape.log_sigmoid(logits)?;
    tape.mean(l)
}

/// `mean log(1 - D)`
pub fn mean_log_one_minus_d(tape: &mut Tape, logits: Var) -> Result<Var> {
    let l = tape.log_one_minus_sigmoid(logits)?;
    tape.mean(l)
}

/// `sum_i w_i * term_i`, leaving out zero-weight terms entirely so no
/// gradient path exists through them.
pub(crate) fn weighted_sum(tape: &mut Tape, terms: &[(f64, Var)]) -> Result<Var> {
    let mut acc: Option<Var> = None;
    for &(w, t) in terms {
        if w == 0.0 {
            continue;
        }
        let s = if w == 1.0 { t } else { tape.scale(t, w)? };
        acc = Some(match acc {
            None => s,
            Some(a) => tape.add(a, s)?,
        });
    }
    match acc {
        Some(v) => Ok(v),
        None => Ok(tape.constant(crate::tensor::Tensor::scalar(0.0))),
    }
}

/// Standard GAN value `mean log D(real) + mean log(1 - D(fake))` from logits.
pub fn gan_value(tape: &mut Tape, real_logits: Var, fake_logits: Var) -> Result<Var> {
    let a = mean_log_d(tape, real_logits)?;
    let b = mean_log_one_minus_d(tape, fake_logits)?;
    tape.add(a, b)
}

/// `D_u`'s objective from logits:
/// `mean log D_u(x_u) + pi_p mean log(1 - D_u(G_p)) + pi_n mean log(1 - D_u(G_n))`.
pub fn du_value(
    tape: &mut Tape,
    real_logits: Var,
    fake_p_logits: Var,
    fake_n_logits: Var,
    pi_p: f64,
) -> Result<Var> {
    let real = mean_log_d(tape, real_logits)?;
    let fp = mean_log_one_minus_d(tape, fake_p_logits)?;
    let fn_ = mean_log_one_minus_d(tape, fake_n_logits)?;
    weighted_sum(tape, &[(1.0, real), (pi_p, fp), (1.0 - pi_p, fn_)])
}

/// `G_p`'s loss from the logits `D_p` and `D_u` assign to its samples.
pub fn gp_value(
    tape: &mut Tape,
    dp_fake_logits: Var,
    du_fake_logits: Var,
    lambda_p: f64,
    lambda_u: f64,
    variant: GeneratorLoss,
) -> Result<Var> {
    match variant {
        GeneratorLoss::NonSaturating => {
            let a = mean_log_d(tape, dp_fake_logits)?;
            let b = mean_log_d(tape, du_fake_logits)?;
            weighted_sum(tape, &[(-lambda_p, a), (-lambda_u, b)])
        }
        GeneratorLoss::Saturating => {
            let a = mean_log_one_minus_d(tape, dp_fake_logits)?;
            let b = mean_log_one_minus_d(tape, du_fake_logits)?;
            weighted_sum(tape, &[(lambda_p, a), (lambda_u, b)])
        }
    }
}

/// `G_n`'s loss from the logits `D_u` and `D_n` assign to its samples.
///
/// In PU mode the `D_n` term repels: it decreases as `D_n(G_n(z))` falls. In
/// semi-supervised mode `D_n` holds real negatives and `G_n` tries to fool it
/// like any generator.
#[allow(clippy::too_many_arguments)]
pub fn gn_value(
    tape: &mut Tape,
    du_fake_logits: Var,
    dn_fake_logits: Var,
    lambda_u: f64,
    lambda_n: f64,
    variant: GeneratorLoss,
    repulsion: Repulsion,
    mode: Mode,
) -> Result<Var> {
    let attraction = match variant {
        GeneratorLoss::NonSaturating => (-lambda_u, mean_log_d(tape, du_fake_logits)?),
        GeneratorLoss::Saturating => (lambda_u, mean_log_one_minus_d(tape, du_fake_logits)?),
    };
    let dn_term = match (mode, variant, repulsion) {
        (Mode::Pu, _, Repulsion::LogD) => (lambda_n, mean_log_d(tape, dn_fake_logits)?),
        (Mode::Pu, _, Repulsion::LogOneMinusD) => {
            (-lambda_n, mean_log_one_minus_d(tape, dn_fake_logits)?)
        }
        (Mode::SemiSupervised, GeneratorLoss::NonSaturating, _) => {
            (-lambda_n, mean_log_d(tape, dn_fake_logits)?)
        }
        (Mode::SemiSupervised, GeneratorLoss::Saturating, _) => {
            (lambda_n, mean_log_one_minus_d(tape, dn_fake_logits)?)
        }
    };
    weighted_sum(tape, &[attraction, dn_term])
}

/// `mean log D_p(x_p) + mean log(1 - D_p(G_p(z)))`, maximized by `D_p`.
pub fn loss_d_p(tape: &mut Tape, d_p: Disc, x_p: Var, fake_p: Var) -> Result<Var> {
    let real = d_p.logits(tape, x_p)?;
    let fake = d_p.logits(tape, fake_p)?;
    gan_value(tape, real, fake)
}

/// `mean log D_u(x_u) + pi_p mean log(1 - D_u(G_p(z))) + pi_n mean log(1 - D_u(G_n(z)))`,
/// maximized by `D_u`.
pub fn loss_d_u(tape: &mut Tape, d_u: Disc, x_u: Var, fake_p: Var, fake_n: Var, pi_p: f64) -> Result<Var> {
    let real = d_u.logits(tape, x_u)?;
    let fp = d_u.logits(tape, fake_p)?;
    let fn_ = d_u.logits(tape, fake_n)?;
    du_value(tape, real, fp, fn_, pi_p)
}

/// `mean log D_n(x_real) + mean log(1 - D_n(G_n(z)))`, maximized by `D_n`.
/// In PU mode the "real" batch is labeled POSITIVE data.
pub fn loss_d_n(tape: &mut Tape, d_n: Disc, x_real: Var, fake_n: Var) -> Result<Var> {
    let real = d_n.logits(tape, x_real)?;
    let fake = d_n.logits(tape, fake_n)?;
    gan_value(tape, real, fake)
}

/// `G_p`'s loss, minimized. Non-saturating:
/// `-lambda_p mean log D_p(G_p(z)) - lambda_u mean log D_u(G_p(z))`.
pub fn loss_g_p(
    tape: &mut Tape,
    d_p: Disc,
    d_u: Disc,
    fake_p: Var,
    lambda_p: f64,
    lambda_u: f64,
    variant: GeneratorLoss,
) -> Result<Var> {
    let lp = d_p.logits(tape, fake_p)?;
    let lu = d_u.logits(tape, fake_p)?;
    gp_value(tape, lp, lu, lambda_p, lambda_u, variant)
}

/// `G_n`'s loss, minimized. Non-saturating PU form:
/// `-lambda_u mean log D_u(G_n(z)) + lambda_n mean log D_n(G_n(z))`.
#[allow(clippy::too_many_arguments)]
pub fn loss_g_n(
    tape: &mut Tape,
    d_u: Disc,
    d_n: Disc,
    fake_n: Var,
    lambda_u: f64,
    lambda_n: f64,
    variant: GeneratorLoss,
    repulsion: Repulsion,
    mode: Mode,
) -> Result<Var> {
    let lu = d_u.logits(tape, fake_n)?;
    let ln = d_n.logits(tape, fake_n)?;
    gn_value(tape, lu, ln, lambda_u, lambda_n, variant, repulsion, mode)
}
