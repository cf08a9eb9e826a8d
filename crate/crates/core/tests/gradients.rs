mod common;

use common::{gradient_suite, small_arch};
use genpu::genpu::{Architecture, GeneratorLoss, Mode, Repulsion};

fn assert_suite(arch: &Architecture, variant: GeneratorLoss, repulsion: Repulsion, mode: Mode) {
    for (name, report) in gradient_suite(arch, 50, 17, variant, repulsion, mode) {
        assert!(
            report.max_rel_err <= 1e-4,
            "{name} ({variant:?}, {repulsion:?}, {mode:?}): {report:?}"
        );
    }
}

#[test]
fn synthetic_networks_default_losses() {
    assert_suite(&Architecture::synthetic(), GeneratorLoss::NonSaturating, Repulsion::LogD, Mode::Pu);
}

#[test]
fn digit_networks_default_losses() {
    // 784-wide inputs would dominate the runtime without adding coverage, so
    // keep the digit activations and shapes but narrow the layers.
    let arch = Architecture {
        latent_dim: 10,
        generator_hidden: vec![16, 16],
        disc_u_hidden: vec![16, 16],
        ..Architecture::mnist()
    };
    assert_suite(&arch, GeneratorLoss::NonSaturating, Repulsion::LogD, Mode::Pu);
}

#[test]
fn every_generator_variant() {
    let arch = small_arch();
    for variant in [GeneratorLoss::NonSaturating, GeneratorLoss::Saturating] {
        for repulsion in [Repulsion::LogD, Repulsion::LogOneMinusD] {
            assert_suite(&arch, variant, repulsion, Mode::Pu);
        }
        assert_suite(&arch, variant, Repulsion::LogD, Mode::SemiSupervised);
    }
}

#[test]
fn probes_see_nonzero_gradients() {
    // guards against a checker that passes because both sides are zero
    use common::{fd_check, game_networks, latent_batch};
    use genpu::autodiff::Output;
    let arch = small_arch();
    let nets = game_networks(&arch, 2, 3);
    let z = latent_batch(8, arch.latent_dim, 4);
    let report = fd_check(&nets, 3, 20, 5, |tape, nets, vars| {
        let zv = tape.constant(z.clone());
        let out = nets[3].apply(tape, &vars[3], zv, Output::Activated).unwrap();
        let sq = tape.mul(out, out).unwrap();
        tape.sum(sq).unwrap()
    });
    assert!(report.max_rel_err <= 1e-4, "{report:?}");
    let mut tape = genpu::autodiff::Tape::new();
    let vars = nets[3].register(&mut tape);
    let zv = tape.constant(z);
    let out = nets[3].apply(&mut tape, &vars, zv, Output::Activated).unwrap();
    let sq = tape.mul(out, out).unwrap();
    let loss = tape.sum(sq).unwrap();
    let grads = tape.backward(loss).unwrap();
    let g = nets[3].collect_grads(&tape, &grads, &vars);
    assert!(g.iter().all(|t| t.data().iter().any(|&v| v != 0.0)));
}
