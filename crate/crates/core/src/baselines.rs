//! Discriminative PU classifiers and the PN classifier trained on generated
//! samples.
//!
//! All classifiers are margin-valued MLPs `g: R^d -> R` predicting
//! `sign(g(x))` (ties go to +1) and trained with the logistic loss.
//!
//! The non-negative estimator is the plain clamped form
//! `pi_p R_p^+ + max(0, R_u^- - pi_p R_p^-)`; there is no gradient-reversal
//! schedule when the clamp is active.

use serde::{Deserialize, Serialize};

use crate::autodiff::{softplus, Activation, AdamConfig, AdamState, Init, LayerSpec, MlpNetwork, NetVars, Output, Tape, Var};
use crate::datagen::{sample_rows, LabeledDataset, PuDataset};
use crate::error::{Error, Result};
use crate::genpu::{Architecture, Class, GenPuState};
use crate::rng::{seeded, stream_rng};
use crate::tensor::Tensor;

/// `softplus(-label * margin)`.
pub fn logistic_loss(margin: f64, label: f64) -> f64 {
    softplus(-label * margin)
}

/// The three empirical risks and the estimate built from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    /// Mean loss of labeling `X_p` positive.
    pub r_p_plus: f64,
    /// Mean loss of labeling `X_u` negative.
    pub r_u_minus: f64,
    /// Mean loss of labeling `X_p` negative.
    pub r_p_minus: f64,
    pub total: f64,
    /// The non-negative clamp replaced a negative unlabeled-side term.
    pub corrected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Upu,
    Nnpu,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Upu => "upu",
            Estimator::Nnpu => "nnpu",
        }
    }

    fn combine(self, r_p_plus: f64, r_u_minus: f64, r_p_minus: f64, pi_p: f64) -> RiskBreakdown {
        let unbiased = pi_p * r_p_plus + r_u_minus - pi_p * r_p_minus;
        let (total, corrected) = match self {
            Estimator::Upu => (unbiased, false),
            Estimator::Nnpu if r_u_minus - pi_p * r_p_minus >= 0.0 => (unbiased, false),
            Estimator::Nnpu => (pi_p * r_p_plus, true),
        };
        RiskBreakdown {
            r_p_plus,
            r_u_minus,
            r_p_minus,
            total,
            corrected,
        }
    }
}

/// Margin-valued MLP classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub net: MlpNetwork,
}

impl BinaryClassifier {
    pub fn new(input_dim: usize, cfg: &ClassifierConfig) -> Result<Self> {
        let layers: Vec<LayerSpec> = cfg
            .hidden
            .iter()
            .map(|&w| LayerSpec::new(w, cfg.activation))
            .chain([LayerSpec::new(1, Activation::Identity)])
            .collect();
        let mut rng = seeded(cfg.seed);
        let net = MlpNetwork::new("classifier", input_dim, &layers, cfg.init, &mut rng)?;
        Self::from_network(net)
    }

    pub fn from_network(net: MlpNetwork) -> Result<Self> {
        let last = net.layers().last().map(|l| l.activation);
        if net.output_dim() != 1 || last != Some(Activation::Identity) {
            return Err(Error::param("a classifier needs a single identity-activated output"));
        }
        Ok(Self { net })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// `g(x)` for every row.
    pub fn margins(&self, x: &Tensor) -> Result<Vec<f64>> {
        Ok(self.net.forward(x)?.into_data())
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<i8>> {
        Ok(self
            .margins(x)?
            .into_iter()
            .map(|g| if g >= 0.0 { 1 } else { -1 })
            .collect())
    }
}

/// Shape and optimization settings for a classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub init: Init,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub iterations: u64,
    /// Rows of the learning curve are written every `log_every` iterations.
    pub log_every: u64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128],
            activation: Activation::Relu,
            init: Init::Glorot,
            adam: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
            batch_size: 100,
            iterations: 2000,
            log_every: 10,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    /// Same hidden layers as the game's `D_u`.
    pub fn like_du(arch: &Architecture) -> Self {
        Self {
            hidden: arch.disc_u_hidden.clone(),
            activation: arch.hidden_activation,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("classifier batch_size must be >= 1"));
        }
        if self.log_every == 0 {
            return Err(Error::param("classifier log_every must be >= 1"));
        }
        if !(self.adam.lr.is_finite() && self.adam.lr >= 0.0) {
            return Err(Error::param(format!("classifier lr {} is invalid", self.adam.lr)));
        }
        Ok(())
    }
}

fn check_nonempty(x: &Tensor, what: &str) -> Result<()> {
    if x.rows() == 0 {
        Err(Error::param(format!("{what} is empty")))
    } else {
        Ok(())
    }
}

fn pu_risk(g: &BinaryClassifier, x_p: &Tensor, x_u: &Tensor, pi_p: f64, kind: Estimator) -> Result<RiskBreakdown> {
    check_nonempty(x_p, "X_p")?;
    check_nonempty(x_u, "X_u")?;
    let mp = g.margins(x_p)?;
    let mu = g.margins(x_u)?;
    let mean = |v: &[f64], label: f64| v.iter().map(|&m| logistic_loss(m, label)).sum::<f64>() / v.len() as f64;
    Ok(kind.combine(mean(&mp, 1.0), mean(&mu, -1.0), mean(&mp, -1.0), pi_p))
}

/// Unbiased PU risk `pi_p R_p^+ + R_u^- - pi_p R_p^-`.
pub fn upu_risk(g: &BinaryClassifier, x_p: &Tensor, x_u: &Tensor, pi_p: f64) -> Result<RiskBreakdown> {
    pu_risk(g, x_p, x_u, pi_p, Estimator::Upu)
}

/// Non-negative PU risk `pi_p R_p^+ + max(0, R_u^- - pi_p R_p^-)`.
pub fn nnpu_risk(g: &BinaryClassifier, x_p: &Tensor, x_u: &Tensor, pi_p: f64) -> Result<RiskBreakdown> {
    pu_risk(g, x_p, x_u, pi_p, Estimator::Nnpu)
}

/// Taped PU risk for a classifier already registered as `vars`.
pub fn pu_risk_on_tape(
    tape: &mut Tape,
    net: &MlpNetwork,
    vars: &NetVars,
    x_p: Var,
    x_u: Var,
    pi_p: f64,
    kind: Estimator,
) -> Result<Var> {
    let gp = net.apply(tape, vars, x_p, Output::Activated)?;
    let gu = net.apply(tape, vars, x_u, Output::Activated)?;
    // softplus(-g) for label +1, softplus(g) for label -1
    let neg_gp = tape.scale(gp, -1.0)?;
    let lp_plus = tape.softplus(neg_gp)?;
    let r_p_plus = tape.mean(lp_plus)?;
    let lp_minus = tape.softplus(gp)?;
    let r_p_minus = tape.mean(lp_minus)?;
    let lu_minus = tape.softplus(gu)?;
    let r_u_minus = tape.mean(lu_minus)?;

    let weighted_p_minus = tape.scale(r_p_minus, pi_p)?;
    let mut negative_part = tape.sub(r_u_minus, weighted_p_minus)?;
    if kind == Estimator::Nnpu {
        negative_part = tape.relu(negative_part)?;
    }
    let positive_part = tape.scale(r_p_plus, pi_p)?;
    tape.add(positive_part, negative_part)
}

/// Taped mean logistic loss on labeled rows.
pub fn pn_risk_on_tape(tape: &mut Tape, net: &MlpNetwork, vars: &NetVars, x: Var, labels: &[f64]) -> Result<Var> {
    let g = net.apply(tape, vars, x, Output::Activated)?;
    let y = Tensor::new(vec![labels.len(), 1], labels.iter().map(|l| -l).collect())?;
    let signed = tape.mul_const(g, y)?;
    let losses = tape.softplus(signed)?;
    tape.mean(losses)
}

/// One row of a learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: u64,
    /// Estimator value on the whole training set.
    pub train_risk: f64,
    /// Zero-one error on the evaluation set, if one was given.
    pub test_error: Option<f64>,
    pub estimator: String,
}

impl CurvePoint {
    pub const CSV_HEADER: &'static str = "iteration,train_risk,test_error,estimator";

    pub fn csv_row(&self) -> String {
        let err = self.test_error.map(|e| e.to_string()).unwrap_or_default();
        format!("{},{},{},{}", self.iteration, self.train_risk, err, self.estimator)
    }
}

fn adam_step(net: &mut MlpNetwork, adam: &mut AdamState, loss_of: impl FnOnce(&mut Tape, &NetVars) -> Result<Var>, it: u64) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = net.register(&mut tape);
    let loss = loss_of(&mut tape, &vars)?;
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::Divergence {
            iteration: Some(it),
            what: "classifier risk".into(),
            detail: format!("minibatch risk evaluated to {value}"),
        });
    }
    let grads = tape.backward(loss)?;
    let g = net.collect_grads(&tape, &grads, &vars);
    drop(tape);
    adam.step(net, &g).map_err(|e| e.at_iteration(it))?;
    Ok(value)
}

/// Trains a classifier by minimizing the chosen PU risk with Adam on
/// minibatches of `X_p` and `X_u`, using `data.true_pi_p` as the prior.
///
/// Returns the classifier and its learning curve; `test_error` is filled
/// when `test` is given.
pub fn train_pu_baseline(
    kind: Estimator,
    data: &PuDataset,
    cfg: &ClassifierConfig,
    test: Option<&LabeledDataset>,
) -> Result<(BinaryClassifier, Vec<CurvePoint>)> {
    cfg.validate()?;
    let pi_p = data.true_pi_p;
    let mut clf = BinaryClassifier::new(data.dim(), cfg)?;
    let mut adam = AdamState::new(&clf.net, cfg.adam);
    let mut rng_p = stream_rng(cfg.seed, 1);
    let mut rng_u = stream_rng(cfg.seed, 2);
    let mut curve = Vec::new();
    let mut record = |clf: &BinaryClassifier, iteration: u64| -> Result<()> {
        let risk = pu_risk(clf, &data.x_p, &data.x_u, pi_p, kind)?;
        let test_error = test.map(|t| evaluate(clf, t).map(|a| 1.0 - a)).transpose()?;
        curve.push(CurvePoint {
            iteration,
            train_risk: risk.total,
            test_error,
            estimator: kind.name().to_string(),
        });
        Ok(())
    };
    record(&clf, 0)?;
    for it in 0..cfg.iterations {
        let xp = sample_rows(&data.x_p, cfg.batch_size, &mut rng_p);
        let xu = sample_rows(&data.x_u, cfg.batch_size, &mut rng_u);
        let net = clf.net.clone();
        adam_step(
            &mut clf.net,
            &mut adam,
            |tape, vars| {
                let p = tape.constant(xp);
                let u = tape.constant(xu);
                pu_risk_on_tape(tape, &net, vars, p, u, pi_p, kind)
            },
            it,
        )?;
        if (it + 1) % cfg.log_every == 0 || it + 1 == cfg.iterations {
            record(&clf, it + 1)?;
        }
    }
    Ok((clf, curve))
}

/// Supervised logistic-loss classifier on fully labeled data.
pub fn train_pn(data: &LabeledDataset, cfg: &ClassifierConfig) -> Result<BinaryClassifier> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::param("cannot train on an empty labeled set"));
    }
    let mut clf = BinaryClassifier::new(data.dim(), cfg)?;
    let mut adam = AdamState::new(&clf.net, cfg.adam);
    let mut rng = stream_rng(cfg.seed, 3);
    let n = data.len();
    for it in 0..cfg.iterations {
        let idx: Vec<usize> = if n >= cfg.batch_size {
            rand::seq::index::sample(&mut rng, n, cfg.batch_size).into_vec()
        } else {
            (0..n).collect()
        };
        let x = data.points().select_rows(&idx);
        let y: Vec<f64> = idx.iter().map(|&i| f64::from(data.labels()[i])).collect();
        let net = clf.net.clone();
        adam_step(
            &mut clf.net,
            &mut adam,
            |tape, vars| {
                let xv = tape.constant(x);
                pn_risk_on_tape(tape, &net, vars, xv, &y)
            },
            it,
        )?;
    }
    Ok(clf)
}

/// Draws `n_per_class` samples from each generator (positive from `G_p`,
/// negative from `G_n`) and fits a PN classifier to them.
pub fn train_pn_on_generated(
    state: &GenPuState,
    n_per_class: usize,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<BinaryClassifier> {
    if n_per_class == 0 {
        return Err(Error::param("n_per_class must be >= 1"));
    }
    let data = generated_dataset(state, n_per_class, seed)?;
    train_pn(&data, cfg)
}

/// `n_per_class` rows from `G_p` labeled +1 followed by `n_per_class` from
/// `G_n` labeled -1.
pub fn generated_dataset(state: &GenPuState, n_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    let pos = state.generate(Class::Positive, n_per_class, seed)?;
    let neg = state.generate(Class::Negative, n_per_class, seed.wrapping_add(1))?;
    let labels = std::iter::repeat_n(1, n_per_class)
        .chain(std::iter::repeat_n(-1, n_per_class))
        .collect();
    LabeledDataset::new(pos.vstack(&neg)?, labels)
}

/// Fraction of rows where `sign(g(x))` matches the label.
pub fn evaluate(clf: &BinaryClassifier, test: &LabeledDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::param("cannot evaluate on an empty test set"));
    }
    let pred = clf.predict(test.points())?;
    let hits = pred.iter().zip(test.labels()).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Layer;
    use proptest::prelude::*;
    use rand::Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn zero_classifier(d: usize) -> BinaryClassifier {
        let layer = Layer {
            weight: Tensor::zeros(vec![d, 1]),
            bias: Tensor::zeros(vec![1]),
            activation: Activation::Identity,
        };
        BinaryClassifier::from_network(MlpNetwork::from_layers("g", vec![layer]).unwrap()).unwrap()
    }

    fn linear_classifier(w: &[f64], b: f64) -> BinaryClassifier {
        let layer = Layer {
            weight: Tensor::new(vec![w.len(), 1], w.to_vec()).unwrap(),
            bias: Tensor::new(vec![1], vec![b]).unwrap(),
            activation: Activation::Identity,
        };
        BinaryClassifier::from_network(MlpNetwork::from_layers("g", vec![layer]).unwrap()).unwrap()
    }

    fn random_points(n: usize, d: usize, seed: u64) -> Tensor {
        let mut rng = seeded(seed);
        Tensor::new(vec![n, d], (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn logistic_loss_reference_points() {
        assert!((logistic_loss(0.0, 1.0) - LN2).abs() < 1e-15);
        assert!((logistic_loss(0.0, -1.0) - LN2).abs() < 1e-15);
        assert!(logistic_loss(800.0, 1.0) < 1e-300);
        assert!((logistic_loss(-800.0, 1.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn linear_odd_identity() {
        let mut rng = seeded(5);
        for _ in 0..100 {
            let z: f64 = rng.random_range(-30.0..30.0);
            let diff = logistic_loss(z, 1.0) - logistic_loss(z, -1.0);
            assert!((diff + z).abs() < 1e-12, "z = {z}, diff = {diff}");
        }
    }

    #[test]
    fn constant_zero_classifier_risks_are_ln2() {
        let g = zero_classifier(3);
        let xp = random_points(7, 3, 1);
        let xu = random_points(20, 3, 2);
        for pi in [0.0, 0.3, 1.0] {
            let u = upu_risk(&g, &xp, &xu, pi).unwrap();
            assert!((u.total - LN2).abs() < 1e-15);
            assert!(!u.corrected);
            let nn = nnpu_risk(&g, &xp, &xu, pi).unwrap();
            assert!((nn.total - LN2).abs() < 1e-15);
            assert!(!nn.corrected);
        }
    }

    #[test]
    fn zero_prior_reduces_to_negative_risk_on_u() {
        let g = linear_classifier(&[0.7, -1.1], 0.2);
        let xp = random_points(5, 2, 3);
        let xu = random_points(30, 2, 4);
        let r = upu_risk(&g, &xp, &xu, 0.0).unwrap();
        assert_eq!(r.total, r.r_u_minus);
    }

    #[test]
    fn empty_batches_are_rejected() {
        let g = zero_classifier(2);
        let empty = Tensor::zeros(vec![0, 2]);
        let x = random_points(3, 2, 1);
        assert!(upu_risk(&g, &empty, &x, 0.5).is_err());
        assert!(nnpu_risk(&g, &x, &empty, 0.5).is_err());
    }

    #[test]
    fn upu_is_unbiased_for_the_pn_risk() {
        // P and N pools are fully known; U is a fresh pi-mixture each time.
        let pi = 0.4;
        let g = linear_classifier(&[1.3, -0.4], 0.1);
        let pool_p = random_points(400, 2, 10).map(|v| v + 0.5);
        let pool_n = random_points(400, 2, 11).map(|v| v - 0.5);
        let xp = pool_p.clone();
        let mut rng = seeded(12);
        let mut totals = Vec::new();
        let n_u = 200;
        for _ in 0..200 {
            let idx_p: Vec<usize> = (0..n_u).map(|_| rng.random_range(0..400)).collect();
            let take_p: Vec<bool> = (0..n_u).map(|_| rng.random_bool(pi)).collect();
            let rows: Vec<Vec<f64>> = (0..n_u)
                .map(|i| {
                    let src = if take_p[i] { &pool_p } else { &pool_n };
                    src.row(idx_p[i]).to_vec()
                })
                .collect();
            let xu = Tensor::from_rows(&rows).unwrap();
            totals.push(upu_risk(&g, &xp, &xu, pi).unwrap().total);
        }
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (totals.len() - 1) as f64;
        let se = (var / totals.len() as f64).sqrt();
        let m = |x: &Tensor, label: f64| {
            let v = g.margins(x).unwrap();
            v.iter().map(|&z| logistic_loss(z, label)).sum::<f64>() / v.len() as f64
        };
        let pn = pi * m(&pool_p, 1.0) + (1.0 - pi) * m(&pool_n, -1.0);
        assert!((mean - pn).abs() <= 3.0 * se, "mean {mean}, pn {pn}, se {se}");
    }

    #[test]
    fn evaluate_true_and_flipped_labelers() {
        let x = random_points(200, 2, 20);
        let labels: Vec<i8> = x.iter_rows().map(|r| if r[0] >= 0.0 { 1 } else { -1 }).collect();
        let test = LabeledDataset::new(x, labels).unwrap();
        let truth = linear_classifier(&[1.0, 0.0], 0.0);
        assert_eq!(evaluate(&truth, &test).unwrap(), 1.0);
        let other = linear_classifier(&[1.0, 1.0], 0.3);
        let flipped = linear_classifier(&[-1.0, -1.0], -0.3);
        let a = evaluate(&other, &test).unwrap();
        let b = evaluate(&flipped, &test).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_count_as_positive() {
        let g = zero_classifier(1);
        let test = LabeledDataset::new(Tensor::new(vec![2, 1], vec![0.0, 1.0]).unwrap(), vec![1, -1]).unwrap();
        assert_eq!(evaluate(&g, &test).unwrap(), 0.5);
    }

    #[test]
    fn random_guessing_is_near_half() {
        let n = 4000;
        let x = random_points(n, 3, 30);
        let mut rng = seeded(31);
        let labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let test = LabeledDataset::new(x, labels).unwrap();
        let g = linear_classifier(&[0.8, 0.2, -0.5], 0.0);
        let acc = evaluate(&g, &test).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((acc - 0.5).abs() <= 3.0 * sigma, "acc {acc}");
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let data = PuDataset::new(random_points(5, 2, 1), random_points(40, 2, 2), None, 0.5).unwrap();
        let cfg = ClassifierConfig {
            adam: AdamConfig { lr: 0.0, ..AdamConfig::default() },
            iterations: 5,
            seed: 9,
            ..ClassifierConfig::default()
        };
        let init = BinaryClassifier::new(2, &cfg).unwrap();
        let (trained, curve) = train_pu_baseline(Estimator::Upu, &data, &cfg, None).unwrap();
        assert_eq!(init, trained);
        assert_eq!(curve.len(), 2);
    }

    #[test]
    fn pn_classifier_separates_clusters() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = seeded(40);
        for i in 0..400 {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            rows.push(vec![2.0 * f64::from(y) + rng.random_range(-0.5..0.5)]);
            labels.push(y);
        }
        let data = LabeledDataset::new(Tensor::from_rows(&rows).unwrap(), labels).unwrap();
        let cfg = ClassifierConfig {
            iterations: 300,
            ..ClassifierConfig::default()
        };
        let clf = train_pn(&data, &cfg).unwrap();
        assert_eq!(evaluate(&clf, &data).unwrap(), 1.0);
    }

    #[test]
    fn taped_risks_match_plain_evaluation() {
        let g = BinaryClassifier::new(3, &ClassifierConfig::default()).unwrap();
        let xp = random_points(6, 3, 50);
        let xu = random_points(25, 3, 51);
        for kind in [Estimator::Upu, Estimator::Nnpu] {
            let mut tape = Tape::new();
            let vars = g.net.register(&mut tape);
            let p = tape.constant(xp.clone());
            let u = tape.constant(xu.clone());
            let r = pu_risk_on_tape(&mut tape, &g.net, &vars, p, u, 0.35, kind).unwrap();
            let plain = pu_risk(&g, &xp, &xu, 0.35, kind).unwrap().total;
            assert!((tape.value(r).data()[0] - plain).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn nnpu_dominates_upu(w0 in -5.0..5.0f64, w1 in -5.0..5.0f64, b in -3.0..3.0f64, pi in 0.0..1.0f64, seed in 0u64..1000) {
            let g = linear_classifier(&[w0, w1], b);
            let xp = random_points(4, 2, seed);
            let xu = random_points(12, 2, seed + 1);
            let u = upu_risk(&g, &xp, &xu, pi).unwrap();
            let nn = nnpu_risk(&g, &xp, &xu, pi).unwrap();
            prop_assert!(nn.total >= 0.0);
            prop_assert!(nn.total >= u.total);
            let clamp_inactive = u.r_u_minus - pi * u.r_p_minus >= 0.0;
            prop_assert_eq!(clamp_inactive, nn.total == u.total);
            prop_assert_eq!(u.total, pi * u.r_p_plus + u.r_u_minus - pi * u.r_p_minus);
        }
    }
}
