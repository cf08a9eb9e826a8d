//! `run`: data preparation, training, baselines and artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use genpu::baselines::{
    evaluate, generated_dataset, train_pn, train_pn_on_generated, train_pu_baseline, CurvePoint, Estimator,
};
use genpu::checkpoint::Checkpoint;
use genpu::datagen::{
    load_idx, make_concentric_circles, make_gaussian_mixture, make_two_moons, pu_split, select_digit_pair,
    semisup_split, LabeledDataset, PuDataset,
};
use genpu::genpu::{GenPuState, Mode, StepMetrics};
use serde::Serialize;

use crate::config::{DatasetKind, ExperimentConfig};

/// Training and test sets.
pub struct Prepared {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub pu: PuDataset,
}

/// Rows `[0, n)` and `[n, n + m)` of each class from a dataset laid out as
/// all positives followed by all negatives.
fn cut(data: &LabeledDataset, per_class: usize, n: usize, m: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    let pick = |from: usize, count: usize| -> Result<LabeledDataset> {
        let idx: Vec<usize> = (from..from + count).chain(per_class + from..per_class + from + count).collect();
        let labels = idx.iter().map(|&i| data.labels()[i]).collect();
        Ok(LabeledDataset::new(data.points().select_rows(&idx), labels)?)
    };
    Ok((pick(0, n)?, pick(n, m)?))
}

fn synthetic(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<LabeledDataset> {
    let d = &cfg.dataset;
    Ok(match d.kind {
        DatasetKind::TwoMoons => make_two_moons(n, d.noise_std, seed)?,
        DatasetKind::Circles => make_concentric_circles(n, d.noise_std, d.radii, seed)?,
        DatasetKind::GaussianMixture => make_gaussian_mixture(&d.centers_p, &d.centers_n, d.noise_std, n, seed)?,
        DatasetKind::Digits => unreachable!("digits are loaded from files"),
    })
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let d = &cfg.dataset;
    let (train, test) = if d.kind == DatasetKind::Digits {
        let images = d.images.as_ref().expect("validated");
        let labels = d.labels.as_ref().expect("validated");
        let digits = load_idx(images, labels).with_context(|| format!("loading {}", images.display()))?;
        match (&d.test_images, &d.test_labels) {
            (Some(ti), Some(tl)) => {
                let held = load_idx(ti, tl).with_context(|| format!("loading {}", ti.display()))?;
                (
                    select_digit_pair(&digits, d.pos_digit, d.neg_digit, d.n_per_class)?,
                    select_digit_pair(&held, d.pos_digit, d.neg_digit, d.test_per_class)?,
                )
            }
            _ => {
                let all = d.n_per_class + d.test_per_class;
                let both = select_digit_pair(&digits, d.pos_digit, d.neg_digit, all)?;
                cut(&both, all, d.n_per_class, d.test_per_class)?
            }
        }
    } else {
        (synthetic(cfg, d.n_per_class, d.seed)?, synthetic(cfg, d.test_per_class, d.seed + 1000)?)
    };
    let mut pu = match cfg.genpu.mode {
        Mode::Pu => pu_split(&train, d.n_labeled, d.seed)?,
        Mode::SemiSupervised => semisup_split(&train, d.n_labeled, d.n_labeled_negative, d.seed)?,
    };
    if let Some(p) = cfg.class_prior {
        pu.true_pi_p = p;
    }
    Ok(Prepared { train, test, pu })
}

#[derive(Debug, Serialize)]
pub struct Accuracies {
    pub genpu_pn: Option<f64>,
    pub upu: Option<f64>,
    pub nnpu: Option<f64>,
    pub oracle_pn: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub iterations: u64,
    pub class_prior: f64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub accuracy: Accuracies,
    pub final_metrics: Option<StepMetrics>,
}

pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os("GENPU_OUTPUT_ROOT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.name)))
}

fn write_samples(state: &GenPuState, n: usize, seed: u64, path: &Path) -> genpu::Result<()> {
    let data = generated_dataset(state, n, seed)?;
    data.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn write_curves(path: &Path, curves: &[Vec<CurvePoint>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", CurvePoint::CSV_HEADER)?;
    for p in curves.iter().flatten() {
        writeln!(w, "{}", p.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<Summary> {
    let Prepared { train, test, pu } = prepare(cfg)?;
    let mut game = cfg.genpu.clone();
    game.pi_p = pu.true_pi_p;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;

    let mut state = GenPuState::new(&game, pu.dim())?;
    let log = &cfg.logging;
    let samples = log.snapshot_samples;
    if samples > 0 {
        write_samples(&state, samples, game.seed, &out.join("samples_0.csv"))?;
    }
    let mut metrics = BufWriter::new(File::create(out.join("metrics.csv"))?);
    writeln!(metrics, "{}", StepMetrics::CSV_HEADER)?;
    let mut last = None;
    state.train(&game, &pu, |st, m| {
        let done = m.iteration + 1;
        if done % log.metrics_every == 0 || done == game.iterations {
            writeln!(metrics, "{}", m.csv_row())?;
        }
        if samples > 0 && done % log.snapshot_every == 0 {
            write_samples(st, samples, game.seed + done, &out.join(format!("samples_{done}.csv")))?;
        }
        if !quiet && done % 500 == 0 {
            eprintln!(
                "iteration {done}: D_p {:.3}/{:.3}  D_u {:.3}  D_n {:.3}/{:.3}",
                m.mean_dp_real, m.mean_dp_fake, m.mean_du_real, m.mean_dn_real, m.mean_dn_fake
            );
        }
        last = Some(m.clone());
        Ok(())
    })?;
    metrics.flush()?;

    let b = &cfg.baselines;
    let clf_cfg = &cfg.classifier;
    let mut acc = Accuracies {
        genpu_pn: None,
        upu: None,
        nnpu: None,
        oracle_pn: None,
    };
    let mut generated_clf = None;
    if b.genpu_pn {
        let clf = train_pn_on_generated(&state, b.generated_per_class, clf_cfg, game.seed)?;
        acc.genpu_pn = Some(evaluate(&clf, &test)?);
        generated_clf = Some(clf);
    }
    let mut curves = Vec::new();
    for (on, kind, slot) in [(b.upu, Estimator::Upu, &mut acc.upu), (b.nnpu, Estimator::Nnpu, &mut acc.nnpu)] {
        if on {
            let (clf, curve) = train_pu_baseline(kind, &pu, clf_cfg, Some(&test))?;
            *slot = Some(evaluate(&clf, &test)?);
            curves.push(curve);
        }
    }
    write_curves(&out.join("learning_curves.csv"), &curves)?;
    if b.oracle_pn {
        acc.oracle_pn = Some(evaluate(&train_pn(&train, clf_cfg)?, &test)?);
    }
    Checkpoint::new(&game, &state, generated_clf).save(out.join("checkpoint.json"))?;

    let summary = Summary {
        name: cfg.name.clone(),
        iterations: state.iteration(),
        class_prior: pu.true_pi_p,
        n_labeled: pu.x_p.rows(),
        n_unlabeled: pu.x_u.rows(),
        n_test: test.len(),
        accuracy: acc,
        final_metrics: last,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
