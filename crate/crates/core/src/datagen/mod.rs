//! Synthetic 2-D datasets, MNIST ingestion, and the positive/unlabeled split.
//!
//! Geometry used by the generators (fixed so plots are comparable):
//!
//! * two moons: class +1 on `(cos t, sin t)`, class -1 on
//!   `(1 - cos t, 0.5 - sin t)`, `t ~ U[0, pi]`;
//! * concentric circles: class +1 on radius `r_in`, class -1 on `r_out`,
//!   angle `~ U[0, 2 pi)`;
//! * Gaussian mixtures: each point picks one of its class centers uniformly.
//!
//! Noise is isotropic Gaussian with the given standard deviation.

mod idx;

pub use idx::{load_idx, select_digit_pair, DigitDataset};

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{seeded, StreamRng};
use crate::tensor::Tensor;

/// Points with labels in `{+1, -1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    points: Tensor,
    labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(points: Tensor, labels: Vec<i8>) -> Result<Self> {
        if points.ndim() != 2 || points.rows() != labels.len() {
            return Err(Error::dim(
                "LabeledDataset::new",
                format!("{:?} points, {} labels", points.shape(), labels.len()),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::param(format!("label {bad} is not +1 or -1")));
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &Tensor {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn count_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Rows carrying `label`.
    pub fn class_points(&self, label: i8) -> Tensor {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        self.points.select_rows(&idx)
    }

    /// Writes `x0,x1,...,label` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, label) in self.points.iter_rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`LabeledDataset::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(csv_err)?.clone();
        let width = headers.len();
        if width < 2 || &headers[width - 1] != "label" {
            return Err(Error::param("CSV header must be x0,...,x{d-1},label"));
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            for field in rec.iter().take(width - 1) {
                data.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::param(format!("CSV row {}: {e}", line + 1))
                })?);
            }
            let label: f64 = rec[width - 1]
                .trim()
                .parse()
                .map_err(|e| Error::param(format!("CSV row {} label: {e}", line + 1)))?;
            labels.push(if label > 0.0 { 1 } else { -1 });
        }
        let n = labels.len();
        Self::new(Tensor::new(vec![n, width - 1], data)?, labels)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::param(format!("CSV: {e}"))
}

/// Positive-labeled set, unlabeled set, and optionally labeled negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct PuDataset {
    pub x_p: Tensor,
    pub x_u: Tensor,
    pub x_n: Option<Tensor>,
    /// Fraction of positives in `x_u` at split time.
    pub true_pi_p: f64,
}

impl PuDataset {
    pub fn new(x_p: Tensor, x_u: Tensor, x_n: Option<Tensor>, true_pi_p: f64) -> Result<Self> {
        if x_p.rows() == 0 || x_u.rows() == 0 {
            return Err(Error::param("PU data needs at least one positive and one unlabeled point"));
        }
        let width = x_p.cols();
        if x_u.cols() != width || x_n.as_ref().is_some_and(|x| x.cols() != width) {
            return Err(Error::dim("PuDataset::new", "pools have different widths"));
        }
        if !(0.0..=1.0).contains(&true_pi_p) {
            return Err(Error::param(format!("class prior {true_pi_p} outside [0, 1]")));
        }
        Ok(Self {
            x_p,
            x_u,
            x_n,
            true_pi_p,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_p.cols()
    }
}

/// Standard normal latent code of fixed dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatentPrior {
    pub dim: usize,
}

impl LatentPrior {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Tensor {
        let data = (0..m * self.dim).map(|_| rng.sample(StandardNormal)).collect();
        Tensor::new(vec![m, self.dim], data).expect("shape matches data")
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    std * rng.sample::<f64, _>(StandardNormal)
}

fn check_noise(noise_std: f64) -> Result<()> {
    if noise_std.is_finite() && noise_std >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("noise_std must be >= 0, got {noise_std}")))
    }
}

fn check_count(n_per_class: usize) -> Result<()> {
    if n_per_class == 0 {
        Err(Error::param("n_per_class must be >= 1"))
    } else {
        Ok(())
    }
}

/// Two interleaving half circles; +1 is the upper moon.
pub fn make_two_moons(n_per_class: usize, noise_std: f64, seed: u64) -> Result<LabeledDataset> {
    check_count(n_per_class)?;
    check_noise(noise_std)?;
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for label in [1i8, -1] {
        for _ in 0..n_per_class {
            let t = rng.random_range(0.0..=PI);
            let (x, y) = if label == 1 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            data.push(x + gaussian(&mut rng, noise_std));
            data.push(y + gaussian(&mut rng, noise_std));
            labels.push(label);
        }
    }
    LabeledDataset::new(Tensor::new(vec![2 * n_per_class, 2], data)?, labels)
}

/// Two rings around the origin; +1 is the inner ring.
pub fn make_concentric_circles(
    n_per_class: usize,
    noise_std: f64,
    radii: (f64, f64),
    seed: u64,
) -> Result<LabeledDataset> {
    check_count(n_per_class)?;
    check_noise(noise_std)?;
    let (r_in, r_out) = radii;
    if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
        return Err(Error::param(format!(
            "radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})"
        )));
    }
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, r) in [(1i8, r_in), (-1, r_out)] {
        for _ in 0..n_per_class {
            let a = rng.random_range(0.0..2.0 * PI);
            data.push(r * a.cos() + gaussian(&mut rng, noise_std));
            data.push(r * a.sin() + gaussian(&mut rng, noise_std));
            labels.push(label);
        }
    }
    LabeledDataset::new(Tensor::new(vec![2 * n_per_class, 2], data)?, labels)
}

/// Equal-weight Gaussian mixtures, one per class.
pub fn make_gaussian_mixture(
    centers_p: &[Vec<f64>],
    centers_n: &[Vec<f64>],
    noise_std: f64,
    n_per_class: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    check_count(n_per_class)?;
    check_noise(noise_std)?;
    if centers_p.is_empty() || centers_n.is_empty() {
        return Err(Error::param("each class needs at least one center"));
    }
    let dim = centers_p[0].len();
    if dim == 0 || centers_p.iter().chain(centers_n).any(|c| c.len() != dim) {
        return Err(Error::param("all centers must share one positive dimension"));
    }
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(2 * n_per_class * dim);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, centers) in [(1i8, centers_p), (-1, centers_n)] {
        for _ in 0..n_per_class {
            let c = &centers[rng.random_range(0..centers.len())];
            for &v in c {
                data.push(v + gaussian(&mut rng, noise_std));
            }
            labels.push(label);
        }
    }
    LabeledDataset::new(Tensor::new(vec![2 * n_per_class, dim], data)?, labels)
}

/// Labels `n_labeled` positives chosen uniformly without replacement; every
/// other point becomes unlabeled.
pub fn pu_split(data: &LabeledDataset, n_labeled: usize, seed: u64) -> Result<PuDataset> {
    split(data, n_labeled, 0, seed)
}

/// Like [`pu_split`], but also labels `n_labeled_n` negatives into `x_n`.
pub fn semisup_split(
    data: &LabeledDataset,
    n_labeled_p: usize,
    n_labeled_n: usize,
    seed: u64,
) -> Result<PuDataset> {
    if n_labeled_n == 0 {
        return Err(Error::param("semi-supervised split needs n_labeled_n >= 1"));
    }
    split(data, n_labeled_p, n_labeled_n, seed)
}

fn split(data: &LabeledDataset, n_p: usize, n_n: usize, seed: u64) -> Result<PuDataset> {
    let pos: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 1).collect();
    let neg: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == -1).collect();
    if n_p == 0 || n_p > pos.len() {
        return Err(Error::param(format!(
            "n_labeled = {n_p} but the data has {} positives",
            pos.len()
        )));
    }
    if n_n > neg.len() {
        return Err(Error::param(format!(
            "n_labeled_n = {n_n} but the data has {} negatives",
            neg.len()
        )));
    }
    let mut rng = seeded(seed);
    let mut chosen_p = pos.clone();
    chosen_p.shuffle(&mut rng);
    chosen_p.truncate(n_p);
    let mut chosen_n = neg.clone();
    chosen_n.shuffle(&mut rng);
    chosen_n.truncate(n_n);

    let mut labeled = vec![false; data.len()];
    for &i in chosen_p.iter().chain(&chosen_n) {
        labeled[i] = true;
    }
    let unlabeled: Vec<usize> = (0..data.len()).filter(|&i| !labeled[i]).collect();
    if unlabeled.is_empty() {
        return Err(Error::param("split leaves no unlabeled points"));
    }
    let pos_in_u = unlabeled.iter().filter(|&&i| data.labels[i] == 1).count();
    let true_pi_p = pos_in_u as f64 / unlabeled.len() as f64;
    PuDataset::new(
        data.points.select_rows(&chosen_p),
        data.points.select_rows(&unlabeled),
        (n_n > 0).then(|| data.points.select_rows(&chosen_n)),
        true_pi_p,
    )
}

/// Draws an `m`-row minibatch: without replacement when the pool is large
/// enough, with replacement otherwise.
pub fn sample_rows(pool: &Tensor, m: usize, rng: &mut StreamRng) -> Tensor {
    let n = pool.rows();
    if n == 0 {
        return pool.select_rows(&[]);
    }
    let idx: Vec<usize> = if n >= m {
        rand::seq::index::sample(rng, n, m).into_vec()
    } else {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    };
    pool.select_rows(&idx)
}
