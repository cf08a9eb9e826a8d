#![allow(dead_code)]

use genpu::autodiff::{MlpNetwork, NetVars, Tape, Var};
use genpu::datagen::LatentPrior;
use genpu::genpu::{Architecture, GenPuConfig};
use genpu::rng::seeded;
use genpu::Tensor;
use rand::Rng;

/// Small networks so game-level tests run in milliseconds.
pub fn small_arch() -> Architecture {
    Architecture {
        latent_dim: 6,
        generator_hidden: vec![12, 12],
        disc_pn_hidden: vec![10],
        disc_u_hidden: vec![10],
        ..Architecture::synthetic()
    }
}

pub fn small_config(pi_p: f64, seed: u64) -> GenPuConfig {
    let mut cfg = GenPuConfig::default();
    cfg.pi_p = pi_p;
    cfg.architecture = small_arch();
    cfg.batch_p = 8;
    cfg.batch_u = 16;
    cfg.batch_noise = 12;
    cfg.seed = seed;
    cfg
}

pub fn uniform_batch(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = seeded(seed);
    Tensor::new(vec![rows, cols], (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

pub fn latent_batch(rows: usize, dim: usize, seed: u64) -> Tensor {
    LatentPrior::new(dim).sample(rows, &mut seeded(seed))
}

#[derive(Debug)]
pub struct FdReport {
    pub probes: usize,
    pub max_rel_err: f64,
}

/// Compares the tape gradient of a scalar loss w.r.t. `nets[target]` with
/// central differences (`h = 1e-5`) at `probes` randomly chosen parameters.
///
/// `build` receives every network registered on a fresh tape; only the
/// target is registered as trainable. The error is
/// `|analytic - numeric| / max(1, |numeric|)`.
pub fn fd_check<F>(nets: &[MlpNetwork], target: usize, probes: usize, seed: u64, build: F) -> FdReport
where
    F: Fn(&mut Tape, &[MlpNetwork], &[NetVars]) -> Var,
{
    const H: f64 = 1e-5;
    let run = |nets: &[MlpNetwork]| {
        let mut tape = Tape::new();
        let vars: Vec<NetVars> = nets
            .iter()
            .enumerate()
            .map(|(i, n)| if i == target { n.register(&mut tape) } else { n.register_frozen(&mut tape) })
            .collect();
        let loss = build(&mut tape, nets, &vars);
        (tape, vars, loss)
    };
    let (tape, vars, loss) = run(nets);
    let grads = tape.backward(loss).unwrap();
    let analytic = nets[target].collect_grads(&tape, &grads, &vars[target]);

    let sizes: Vec<usize> = nets[target].params().iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = seeded(seed);
    let mut max_rel_err = 0.0_f64;
    for _ in 0..probes {
        let mut flat = rng.random_range(0..total);
        let mut t = 0;
        while flat >= sizes[t] {
            flat -= sizes[t];
            t += 1;
        }
        let value_at = |delta: f64| {
            let mut perturbed = nets.to_vec();
            perturbed[target].params_mut()[t].data_mut()[flat] += delta;
            let (tape, _, loss) = run(&perturbed);
            tape.value(loss).data()[0]
        };
        let numeric = (value_at(H) - value_at(-H)) / (2.0 * H);
        let a = analytic[t].data()[flat];
        let err = (a - numeric).abs() / numeric.abs().max(1.0);
        max_rel_err = max_rel_err.max(err);
    }
    FdReport { probes, max_rel_err }
}

use genpu::autodiff::Output;
use genpu::baselines::{pu_risk_on_tape, BinaryClassifier, ClassifierConfig, Estimator};
use genpu::genpu::{
    loss_d_n, loss_d_p, loss_d_u, loss_g_n, loss_g_p, Disc, GeneratorLoss, Mode, Repulsion,
};
use genpu::rng::stream_rng;
use genpu::autodiff::Init;

/// The five game networks in `[d_p, d_u, d_n, g_p, g_n]` order.
pub fn game_networks(arch: &Architecture, data_dim: usize, seed: u64) -> Vec<MlpNetwork> {
    let gen = arch.generator_layers(data_dim);
    let specs = [
        ("d_p", data_dim, arch.disc_pn_layers()),
        ("d_u", data_dim, arch.disc_u_layers()),
        ("d_n", data_dim, arch.disc_pn_layers()),
        ("g_p", arch.latent_dim, gen.clone()),
        ("g_n", arch.latent_dim, gen),
    ];
    specs
        .into_iter()
        .enumerate()
        .map(|(i, (name, input, layers))| {
            MlpNetwork::new(name, input, &layers, Init::Glorot, &mut stream_rng(seed, i as u64)).unwrap()
        })
        .collect()
}

pub struct GameBatches {
    pub x_p: Tensor,
    pub x_u: Tensor,
    pub z_p: Tensor,
    pub z_n: Tensor,
}

pub fn game_batches(arch: &Architecture, data_dim: usize, seed: u64) -> GameBatches {
    GameBatches {
        x_p: uniform_batch(16, data_dim, seed),
        x_u: uniform_batch(32, data_dim, seed + 1),
        z_p: latent_batch(16, arch.latent_dim, seed + 2),
        z_n: latent_batch(16, arch.latent_dim, seed + 3),
    }
}

/// Finite-difference reports for every game loss (with the given generator
/// variant and repulsion form) and both PU risks.
pub fn gradient_suite(
    arch: &Architecture,
    probes: usize,
    seed: u64,
    variant: GeneratorLoss,
    repulsion: Repulsion,
    mode: Mode,
) -> Vec<(String, FdReport)> {
    let d = 2;
    let nets = game_networks(arch, d, seed);
    let b = game_batches(arch, d, seed + 100);
    let fake_p = nets[3].forward(&b.z_p).unwrap();
    let fake_n = nets[4].forward(&b.z_n).unwrap();
    let pi_p = 0.4;
    let (lp, lu, ln) = (0.7, 1.3, 0.9);
    let mut out = Vec::new();

    out.push((
        "loss_d_p".to_string(),
        fd_check(&nets, 0, probes, seed, |tape, nets, vars| {
            let (x, f) = (tape.constant(b.x_p.clone()), tape.constant(fake_p.clone()));
            loss_d_p(tape, Disc::new(&nets[0], &vars[0]), x, f).unwrap()
        }),
    ));
    out.push((
        "loss_d_u".to_string(),
        fd_check(&nets, 1, probes, seed + 1, |tape, nets, vars| {
            let x = tape.constant(b.x_u.clone());
            let (fp, fn_) = (tape.constant(fake_p.clone()), tape.constant(fake_n.clone()));
            loss_d_u(tape, Disc::new(&nets[1], &vars[1]), x, fp, fn_, pi_p).unwrap()
        }),
    ));
    out.push((
        "loss_d_n".to_string(),
        fd_check(&nets, 2, probes, seed + 2, |tape, nets, vars| {
            let (x, f) = (tape.constant(b.x_p.clone()), tape.constant(fake_n.clone()));
            loss_d_n(tape, Disc::new(&nets[2], &vars[2]), x, f).unwrap()
        }),
    ));
    out.push((
        "loss_g_p".to_string(),
        fd_check(&nets, 3, probes, seed + 3, |tape, nets, vars| {
            let z = tape.constant(b.z_p.clone());
            let fake = nets[3].apply(tape, &vars[3], z, Output::Activated).unwrap();
            let (dp, du) = (Disc::new(&nets[0], &vars[0]), Disc::new(&nets[1], &vars[1]));
            loss_g_p(tape, dp, du, fake, lp, lu, variant).unwrap()
        }),
    ));
    out.push((
        "loss_g_n".to_string(),
        fd_check(&nets, 4, probes, seed + 4, |tape, nets, vars| {
            let z = tape.constant(b.z_n.clone());
            let fake = nets[4].apply(tape, &vars[4], z, Output::Activated).unwrap();
            let (du, dn) = (Disc::new(&nets[1], &vars[1]), Disc::new(&nets[2], &vars[2]));
            loss_g_n(tape, du, dn, fake, lu, ln, variant, repulsion, mode).unwrap()
        }),
    ));

    let ccfg = ClassifierConfig {
        hidden: arch.disc_u_hidden.clone(),
        activation: arch.hidden_activation,
        seed,
        ..ClassifierConfig::default()
    };
    let clf = BinaryClassifier::new(d, &ccfg).unwrap();
    for kind in [Estimator::Upu, Estimator::Nnpu] {
        let nets = vec![clf.net.clone()];
        out.push((
            format!("{}_risk", kind.name()),
            fd_check(&nets, 0, probes, seed + 5, |tape, nets, vars| {
                let (p, u) = (tape.constant(b.x_p.clone()), tape.constant(b.x_u.clone()));
                pu_risk_on_tape(tape, &nets[0], &vars[0], p, u, pi_p, kind).unwrap()
            }),
        ));
    }
    out
}
