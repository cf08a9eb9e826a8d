use serde::{Deserialize, Serialize};

use super::config::{GenPuConfig, Mode};
use super::losses::{du_value, gan_value, gn_value, gp_value, weighted_sum, Disc};
use crate::autodiff::{sigmoid, AdamState, MlpNetwork, Output, Tape, Var};
use crate::datagen::{sample_rows, LatentPrior, PuDataset};
use crate::error::{Error, Result};
use crate::rng::{seeded, stream_rng, RngSnapshot, StreamRng};
use crate::tensor::Tensor;

/// Stream ids for [`stream_rng`]; each consumer of randomness owns one.
pub mod streams {
    /// Network `i` in [`super::Role::ALL`] order initializes from `INIT_BASE + i`.
    pub const INIT_BASE: u64 = 0;
    pub const NOISE_P: u64 = 10;
    pub const NOISE_N: u64 = 11;
    pub const BATCH_P: u64 = 20;
    pub const BATCH_U: u64 = 21;
    pub const BATCH_N: u64 = 22;
}

/// The five players of the game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    DP,
    DU,
    DN,
    GP,
    GN,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::DP, Role::DU, Role::DN, Role::GP, Role::GN];

    pub fn name(self) -> &'static str {
        match self {
            Role::DP => "d_p",
            Role::DU => "d_u",
            Role::DN => "d_n",
            Role::GP => "g_p",
            Role::GN => "g_n",
        }
    }

    fn index(self) -> u64 {
        Role::ALL.iter().position(|&r| r == self).unwrap() as u64
    }
}

/// Which generator to sample from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Positive,
    Negative,
}

/// A network and its optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub net: MlpNetwork,
    pub adam: AdamState,
}

/// Per-step losses and discriminator statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub iteration: u64,
    /// `D_p` value on the last discriminator batch.
    pub v_dp: f64,
    /// `mean log D_u(x_u) + mean log(1 - D_u(G_p(z)))`.
    pub v_du_gp: f64,
    /// `mean log D_u(x_u) + mean log(1 - D_u(G_n(z)))`.
    pub v_du_gn: f64,
    /// `D_n` value; its real batch is `X_p` in PU mode, `X_n` otherwise.
    pub v_dn: f64,
    /// `-v_dn`: the value `G_n` minimizes through `D_n`.
    pub v_gn_repulsion: f64,
    /// Weighted discriminator-side objective that was ascended.
    pub d_objective: f64,
    pub loss_g_p: f64,
    pub loss_g_n: f64,
    pub mean_dp_real: f64,
    pub mean_dp_fake: f64,
    pub mean_du_real: f64,
    pub mean_du_fake_p: f64,
    pub mean_du_fake_n: f64,
    pub mean_dn_real: f64,
    pub mean_dn_fake: f64,
}

impl StepMetrics {
    pub const CSV_HEADER: &'static str = "iteration,v_dp,v_du_gp,v_du_gn,v_dn,v_gn_repulsion,\
d_objective,loss_g_p,loss_g_n,mean_dp_real,mean_dp_fake,mean_du_real,mean_du_fake_p,\
mean_du_fake_n,mean_dn_real,mean_dn_fake";

    pub fn csv_row(&self) -> String {
        let vals = [
            self.v_dp,
            self.v_du_gp,
            self.v_du_gn,
            self.v_dn,
            self.v_gn_repulsion,
            self.d_objective,
            self.loss_g_p,
            self.loss_g_n,
            self.mean_dp_real,
            self.mean_dp_fake,
            self.mean_du_real,
            self.mean_du_fake_p,
            self.mean_du_fake_n,
            self.mean_dn_real,
            self.mean_dn_fake,
        ];
        let mut row = self.iteration.to_string();
        for v in vals {
            row.push(',');
            row.push_str(&v.to_string());
        }
        row
    }
}

#[derive(Clone, Debug)]
struct Streams {
    noise_p: StreamRng,
    noise_n: StreamRng,
    batch_p: StreamRng,
    batch_u: StreamRng,
    batch_n: StreamRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            noise_p: stream_rng(seed, streams::NOISE_P),
            noise_n: stream_rng(seed, streams::NOISE_N),
            batch_p: stream_rng(seed, streams::BATCH_P),
            batch_u: stream_rng(seed, streams::BATCH_U),
            batch_n: stream_rng(seed, streams::BATCH_N),
        }
    }
}

/// Networks, optimizer states, iteration counter and random streams.
#[derive(Clone, Debug)]
pub struct GenPuState {
    pub d_p: Player,
    pub d_u: Player,
    pub d_n: Player,
    pub g_p: Player,
    pub g_n: Player,
    iteration: u64,
    prior: LatentPrior,
    rngs: Streams,
}

struct DiscPhase {
    v_dp: f64,
    v_du_real: f64,
    v_du_fake_p: f64,
    v_du_fake_n: f64,
    v_dn: f64,
    d_objective: f64,
    means: [f64; 7],
}

fn mean_sigmoid(t: &Tensor) -> f64 {
    t.data().iter().map(|&l| sigmoid(l)).sum::<f64>() / t.len() as f64
}

fn scalar(tape: &Tape, v: Var) -> f64 {
    tape.value(v).data()[0]
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Divergence {
            iteration: None,
            what: what.to_string(),
            detail: format!("loss evaluated to {value}"),
        })
    }
}

impl GenPuState {
    /// Fresh networks for data of width `data_dim`, initialized from `cfg.seed`.
    pub fn new(cfg: &GenPuConfig, data_dim: usize) -> Result<Self> {
        cfg.validate()?;
        let arch = &cfg.architecture;
        let make = |role: Role, input: usize, layers: &[crate::autodiff::LayerSpec]| -> Result<Player> {
            let mut rng = stream_rng(cfg.seed, streams::INIT_BASE + role.index());
            let net = MlpNetwork::new(role.name(), input, layers, arch.init, &mut rng)?;
            let adam = AdamState::new(&net, cfg.adam);
            Ok(Player { net, adam })
        };
        let gen = arch.generator_layers(data_dim);
        Ok(Self {
            d_p: make(Role::DP, data_dim, &arch.disc_pn_layers())?,
            d_u: make(Role::DU, data_dim, &arch.disc_u_layers())?,
            d_n: make(Role::DN, data_dim, &arch.disc_pn_layers())?,
            g_p: make(Role::GP, arch.latent_dim, &gen)?,
            g_n: make(Role::GN, arch.latent_dim, &gen)?,
            iteration: 0,
            prior: LatentPrior::new(arch.latent_dim),
            rngs: Streams::new(cfg.seed),
        })
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn data_dim(&self) -> usize {
        self.g_p.net.output_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.prior.dim
    }

    pub fn player(&self, role: Role) -> &Player {
        match role {
            Role::DP => &self.d_p,
            Role::DU => &self.d_u,
            Role::DN => &self.d_n,
            Role::GP => &self.g_p,
            Role::GN => &self.g_n,
        }
    }

    fn check_data(&self, data: &PuDataset) -> Result<()> {
        if data.dim() != self.data_dim() {
            return Err(Error::dim(
                "train_step",
                format!("networks expect width {}, data has {}", self.data_dim(), data.dim()),
            ));
        }
        Ok(())
    }

    /// One alternation in the mode selected by `cfg.mode`.
    pub fn step(&mut self, cfg: &GenPuConfig, data: &PuDataset) -> Result<StepMetrics> {
        match cfg.mode {
            Mode::Pu => self.train_step(cfg, data),
            Mode::SemiSupervised => self.train_step_semisup(cfg, data),
        }
    }

    /// One PU alternation: `cfg.d_steps` discriminator ascents, then one
    /// generator descent on fresh noise.
    pub fn train_step(&mut self, cfg: &GenPuConfig, data: &PuDataset) -> Result<StepMetrics> {
        self.alternate(cfg, data, Mode::Pu)
    }

    /// Semi-supervised alternation: `D_n` separates labeled negatives from
    /// `G_n`'s samples, and `G_n` tries to fool it.
    pub fn train_step_semisup(&mut self, cfg: &GenPuConfig, data: &PuDataset) -> Result<StepMetrics> {
        match &data.x_n {
            Some(x) if x.rows() > 0 => self.alternate(cfg, data, Mode::SemiSupervised),
            _ => Err(Error::Mode(
                "semi-supervised training needs a non-empty labeled negative set".into(),
            )),
        }
    }

    fn alternate(&mut self, cfg: &GenPuConfig, data: &PuDataset, mode: Mode) -> Result<StepMetrics> {
        cfg.validate()?;
        self.check_data(data)?;
        let it = self.iteration;
        let mut phase = None;
        for _ in 0..cfg.d_steps {
            phase = Some(self.discriminator_phase(cfg, data, mode).map_err(|e| e.at_iteration(it))?);
        }
        let d = phase.expect("d_steps >= 1");
        let (loss_g_p, loss_g_n) = self.generator_phase(cfg, mode).map_err(|e| e.at_iteration(it))?;
        self.iteration += 1;
        let [dp_real, dp_fake, du_real, du_fake_p, du_fake_n, dn_real, dn_fake] = d.means;
        Ok(StepMetrics {
            iteration: it,
            v_dp: d.v_dp,
            v_du_gp: d.v_du_real + d.v_du_fake_p,
            v_du_gn: d.v_du_real + d.v_du_fake_n,
            v_dn: d.v_dn,
            v_gn_repulsion: -d.v_dn,
            d_objective: d.d_objective,
            loss_g_p,
            loss_g_n,
            mean_dp_real: dp_real,
            mean_dp_fake: dp_fake,
            mean_du_real: du_real,
            mean_du_fake_p: du_fake_p,
            mean_du_fake_n: du_fake_n,
            mean_dn_real: dn_real,
            mean_dn_fake: dn_fake,
        })
    }

    fn discriminator_phase(&mut self, cfg: &GenPuConfig, data: &PuDataset, mode: Mode) -> Result<DiscPhase> {
        let m = cfg.batch_noise;
        let z_p = self.prior.sample(m, &mut self.rngs.noise_p);
        let z_n = self.prior.sample(m, &mut self.rngs.noise_n);
        let x_p = sample_rows(&data.x_p, cfg.batch_p, &mut self.rngs.batch_p);
        let x_u = sample_rows(&data.x_u, cfg.batch_u, &mut self.rngs.batch_u);
        let x_dn = match mode {
            Mode::Pu => None,
            Mode::SemiSupervised => {
                let pool = data.x_n.as_ref().expect("checked by caller");
                Some(sample_rows(pool, cfg.batch_p, &mut self.rngs.batch_n))
            }
        };
        // Generator outputs enter as constants: this phase trains only the discriminators.
        let fake_p = self.g_p.net.forward(&z_p)?;
        let fake_n = self.g_n.net.forward(&z_n)?;

        let mut tape = Tape::new();
        let vp = self.d_p.net.register(&mut tape);
        let vu = self.d_u.net.register(&mut tape);
        let vn = self.d_n.net.register(&mut tape);
        let (dp, du, dn) = (
            Disc::new(&self.d_p.net, &vp),
            Disc::new(&self.d_u.net, &vu),
            Disc::new(&self.d_n.net, &vn),
        );
        let xp = tape.constant(x_p);
        let xu = tape.constant(x_u);
        let fp = tape.constant(fake_p);
        let fn_ = tape.constant(fake_n);
        let xdn = match x_dn {
            Some(x) => tape.constant(x),
            None => xp,
        };

        let dp_real = dp.logits(&mut tape, xp)?;
        let dp_fake = dp.logits(&mut tape, fp)?;
        let du_real = du.logits(&mut tape, xu)?;
        let du_fp = du.logits(&mut tape, fp)?;
        let du_fn = du.logits(&mut tape, fn_)?;
        let dn_real = dn.logits(&mut tape, xdn)?;
        let dn_fake = dn.logits(&mut tape, fn_)?;

        let l_dp = gan_value(&mut tape, dp_real, dp_fake)?;
        let l_du = du_value(&mut tape, du_real, du_fp, du_fn, cfg.pi_p)?;
        let l_dn = gan_value(&mut tape, dn_real, dn_fake)?;
        let objective = weighted_sum(
            &mut tape,
            &[
                (cfg.pi_p * cfg.lambda_p, l_dp),
                (cfg.lambda_u, l_du),
                (cfg.pi_n() * cfg.lambda_n, l_dn),
            ],
        )?;
        let to_minimize = tape.scale(objective, -1.0)?;

        let v_dp = finite(scalar(&tape, l_dp), "d_p objective")?;
        finite(scalar(&tape, l_du), "d_u objective")?;
        let v_dn = finite(scalar(&tape, l_dn), "d_n objective")?;
        let logsig_mean = |t: &Tensor, sign: f64| {
            t.data().iter().map(|&l| crate::autodiff::log_sigmoid(sign * l)).sum::<f64>() / t.len() as f64
        };
        let v_du_real = logsig_mean(tape.value(du_real), 1.0);
        let v_du_fake_p = logsig_mean(tape.value(du_fp), -1.0);
        let v_du_fake_n = logsig_mean(tape.value(du_fn), -1.0);
        let means = [dp_real, dp_fake, du_real, du_fp, du_fn, dn_real, dn_fake]
            .map(|v| mean_sigmoid(tape.value(v)));

        let grads = tape.backward(to_minimize)?;
        let g_dp = self.d_p.net.collect_grads(&tape, &grads, &vp);
        let g_du = self.d_u.net.collect_grads(&tape, &grads, &vu);
        let g_dn = self.d_n.net.collect_grads(&tape, &grads, &vn);
        let d_objective = scalar(&tape, objective);
        drop(tape);
        self.d_p.adam.step(&mut self.d_p.net, &g_dp)?;
        self.d_u.adam.step(&mut self.d_u.net, &g_du)?;
        self.d_n.adam.step(&mut self.d_n.net, &g_dn)?;
        Ok(DiscPhase {
            v_dp,
            v_du_real,
            v_du_fake_p,
            v_du_fake_n,
            v_dn,
            d_objective,
            means,
        })
    }

    fn generator_phase(&mut self, cfg: &GenPuConfig, mode: Mode) -> Result<(f64, f64)> {
        let m = cfg.batch_noise;
        let z_p = self.prior.sample(m, &mut self.rngs.noise_p);
        let z_n = self.prior.sample(m, &mut self.rngs.noise_n);

        let mut tape = Tape::new();
        let vgp = self.g_p.net.register(&mut tape);
        let vgn = self.g_n.net.register(&mut tape);
        let vp = self.d_p.net.register_frozen(&mut tape);
        let vu = self.d_u.net.register_frozen(&mut tape);
        let vn = self.d_n.net.register_frozen(&mut tape);
        let (dp, du, dn) = (
            Disc::new(&self.d_p.net, &vp),
            Disc::new(&self.d_u.net, &vu),
            Disc::new(&self.d_n.net, &vn),
        );
        let zp = tape.constant(z_p);
        let zn = tape.constant(z_n);
        let fake_p = self.g_p.net.apply(&mut tape, &vgp, zp, Output::Activated)?;
        let fake_n = self.g_n.net.apply(&mut tape, &vgn, zn, Output::Activated)?;

        let dp_fp = dp.logits(&mut tape, fake_p)?;
        let du_fp = du.logits(&mut tape, fake_p)?;
        let l_gp = gp_value(&mut tape, dp_fp, du_fp, cfg.lambda_p, cfg.lambda_u, cfg.generator_loss)?;
        let du_fn = du.logits(&mut tape, fake_n)?;
        let dn_fn = dn.logits(&mut tape, fake_n)?;
        let l_gn = gn_value(
            &mut tape,
            du_fn,
            dn_fn,
            cfg.lambda_u,
            cfg.lambda_n,
            cfg.generator_loss,
            cfg.repulsion,
            mode,
        )?;
        let total = weighted_sum(&mut tape, &[(cfg.pi_p, l_gp), (cfg.pi_n(), l_gn)])?;
        let loss_g_p = finite(scalar(&tape, l_gp), "g_p loss")?;
        let loss_g_n = finite(scalar(&tape, l_gn), "g_n loss")?;

        let grads = tape.backward(total)?;
        let g_gp = self.g_p.net.collect_grads(&tape, &grads, &vgp);
        let g_gn = self.g_n.net.collect_grads(&tape, &grads, &vgn);
        drop(tape);
        self.g_p.adam.step(&mut self.g_p.net, &g_gp)?;
        self.g_n.adam.step(&mut self.g_n.net, &g_gn)?;
        Ok((loss_g_p, loss_g_n))
    }

    /// Runs steps until `cfg.iterations` have been completed, reporting each
    /// step's metrics to `sink`.
    pub fn train<F>(&mut self, cfg: &GenPuConfig, data: &PuDataset, mut sink: F) -> Result<()>
    where
        F: FnMut(&GenPuState, &StepMetrics) -> Result<()>,
    {
        while self.iteration < cfg.iterations {
            let metrics = self.step(cfg, data)?;
            sink(self, &metrics)?;
        }
        Ok(())
    }

    /// `n` samples `G(z)` with `z` drawn from an rng seeded by `seed`.
    pub fn generate(&self, which: Class, n: usize, seed: u64) -> Result<Tensor> {
        let mut rng = seeded(seed);
        let z = self.prior.sample(n, &mut rng);
        match which {
            Class::Positive => self.g_p.net.forward(&z),
            Class::Negative => self.g_n.net.forward(&z),
        }
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            d_p: self.d_p.clone(),
            d_u: self.d_u.clone(),
            d_n: self.d_n.clone(),
            g_p: self.g_p.clone(),
            g_n: self.g_n.clone(),
            iteration: self.iteration,
            latent_dim: self.prior.dim,
            rngs: [
                &self.rngs.noise_p,
                &self.rngs.noise_n,
                &self.rngs.batch_p,
                &self.rngs.batch_u,
                &self.rngs.batch_n,
            ]
            .map(RngSnapshot::capture)
            .to_vec(),
        }
    }

    pub fn from_snapshot(s: StateSnapshot) -> Result<Self> {
        let restore = |i: usize| -> Result<StreamRng> {
            s.rngs
                .get(i)
                .ok_or_else(|| Error::param("snapshot is missing random streams"))?
                .restore()
                .map_err(|e| Error::param(format!("snapshot stream position: {e}")))
        };
        let rngs = Streams {
            noise_p: restore(0)?,
            noise_n: restore(1)?,
            batch_p: restore(2)?,
            batch_u: restore(3)?,
            batch_n: restore(4)?,
        };
        if s.g_p.net.input_dim() != s.latent_dim || s.g_n.net.input_dim() != s.latent_dim {
            return Err(Error::param("snapshot generators disagree with its latent dimension"));
        }
        Ok(Self {
            d_p: s.d_p,
            d_u: s.d_u,
            d_n: s.d_n,
            g_p: s.g_p,
            g_n: s.g_n,
            iteration: s.iteration,
            prior: LatentPrior::new(s.latent_dim),
            rngs,
        })
    }
}

/// Serializable form of [`GenPuState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub d_p: Player,
    pub d_u: Player,
    pub d_n: Player,
    pub g_p: Player,
    pub g_n: Player,
    pub iteration: u64,
    pub latent_dim: usize,
    rngs: Vec<RngSnapshot>,
}
