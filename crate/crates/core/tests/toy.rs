//! End-to-end checks on a one-dimensional two-cluster problem.

use genpu::autodiff::{Activation, Layer, MlpNetwork};
use genpu::baselines::{evaluate, train_pn_on_generated, ClassifierConfig};
use genpu::datagen::{make_gaussian_mixture, pu_split};
use genpu::genpu::{Architecture, Class, GenPuConfig, GenPuState};
use genpu::oracle::{optimal_discriminators, DiscreteDistribution, GameSpec};
use genpu::Tensor;

const CENTERS: [f64; 2] = [-1.0, 1.0];

fn toy_config(pi_p: f64) -> GenPuConfig {
    let mut cfg = GenPuConfig::synthetic(pi_p);
    cfg.architecture = Architecture {
        latent_dim: 8,
        generator_hidden: vec![32, 32],
        disc_pn_hidden: vec![32],
        disc_u_hidden: vec![32],
        ..Architecture::synthetic()
    };
    cfg.iterations = 1500;
    cfg.seed = 3;
    cfg
}

/// Fraction of samples nearest to each center.
fn snapped(samples: &Tensor) -> Vec<f64> {
    let mut counts = [0.0; 2];
    for r in samples.iter_rows() {
        let k = usize::from((r[0] - CENTERS[1]).abs() < (r[0] - CENTERS[0]).abs());
        counts[k] += 1.0;
    }
    let n = samples.rows() as f64;
    counts.iter().map(|c| c / n).collect()
}

fn sigmoid_at(net: &MlpNetwork, x: f64) -> f64 {
    net.forward(&Tensor::new(vec![1, 1], vec![x]).unwrap()).unwrap().data()[0]
}

#[test]
fn trained_discriminators_approach_closed_forms() {
    let data = make_gaussian_mixture(&[vec![CENTERS[0]]], &[vec![CENTERS[1]]], 0.05, 1000, 4).unwrap();
    let pu = pu_split(&data, 200, 4).unwrap();
    let cfg = toy_config(pu.true_pi_p);
    let mut st = GenPuState::new(&cfg, 1).unwrap();
    st.train(&cfg, &pu, |_, _| Ok(())).unwrap();

    let p_gp = snapped(&st.generate(Class::Positive, 2000, 1).unwrap());
    let p_gn = snapped(&st.generate(Class::Negative, 2000, 2).unwrap());
    // otherwise the comparison would only cover an unconverged game
    assert!(p_gp[0] > 0.9 && p_gn[1] > 0.9, "generators {p_gp:?} {p_gn:?}");
    let spec = GameSpec {
        p_p: DiscreteDistribution::point_mass(2, 0).unwrap(),
        p_n: DiscreteDistribution::point_mass(2, 1).unwrap(),
        p_gp: DiscreteDistribution::new(p_gp).unwrap(),
        p_gn: DiscreteDistribution::new(p_gn).unwrap(),
        pi_p: cfg.pi_p,
        lambda_p: cfg.lambda_p,
        lambda_u: cfg.lambda_u,
        lambda_n: cfg.lambda_n,
    };
    let closed = optimal_discriminators(&spec);
    let s = st.snapshot();
    let p = spec.marginal();
    let mix = spec.generated_mixture();
    let pp = spec.p_p.probs();
    for (x, &c) in CENTERS.iter().enumerate() {
        let cases = [
            ("d_p", &s.d_p.net, closed.d_p[x], pp[x] + spec.p_gp.probs()[x]),
            ("d_u", &s.d_u.net, closed.d_u[x], p[x] + mix[x]),
            ("d_n", &s.d_n.net, closed.d_n[x], pp[x] + spec.p_gn.probs()[x]),
        ];
        for (name, net, want, mass) in cases {
            if mass < 0.05 {
                continue;
            }
            let got = sigmoid_at(net, c);
            assert!((got - want).abs() <= 0.1, "{name} at {c}: trained {got:.3}, closed form {want:.3}");
        }
    }
}

/// A generator that ignores its code and always emits `value`.
fn constant_generator(latent: usize, value: f64) -> MlpNetwork {
    let layer = Layer {
        weight: Tensor::zeros(vec![latent, 1]),
        bias: Tensor::new(vec![1], vec![value]).unwrap(),
        activation: Activation::Identity,
    };
    MlpNetwork::from_layers("frozen", vec![layer]).unwrap()
}

#[test]
fn generators_at_equilibrium_give_a_perfect_classifier() {
    let cfg = toy_config(0.5);
    let st = GenPuState::new(&cfg, 1).unwrap();
    let mut snap = st.snapshot();
    let latent = cfg.architecture.latent_dim;
    snap.g_p.net = constant_generator(latent, CENTERS[0]);
    snap.g_n.net = constant_generator(latent, CENTERS[1]);
    let frozen = GenPuState::from_snapshot(snap).unwrap();
    assert!(frozen.generate(Class::Positive, 5, 0).unwrap().data().iter().all(|&v| v == CENTERS[0]));

    let held_out = make_gaussian_mixture(&[vec![CENTERS[0]]], &[vec![CENTERS[1]]], 0.05, 500, 9).unwrap();
    let ccfg = ClassifierConfig {
        hidden: vec![8],
        iterations: 300,
        ..ClassifierConfig::default()
    };
    let clf = train_pn_on_generated(&frozen, 200, &ccfg, 1).unwrap();
    assert_eq!(evaluate(&clf, &held_out).unwrap(), 1.0);
}
