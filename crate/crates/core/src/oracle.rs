//! Exact game quantities on finite sample spaces.
//!
//! With every density a probability vector over `K` points, the optimal
//! discriminators, the value at those discriminators, and its JSD form can be
//! evaluated exactly. Natural logarithms throughout; `0 * log(anything)`
//! counts as 0, and `0/0` in a discriminator formula is 0.5.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

const LN4: f64 = 2.0 * std::f64::consts::LN_2;

/// Largest support accepted by [`equilibrium_search`].
pub const MAX_SEARCH_SUPPORT: usize = 6;
/// Upper bound on candidate `(p_gp, p_gn)` pairs visited by one search.
pub const MAX_SEARCH_PAIRS: u64 = 50_000_000;

/// A probability mass function over `{0, .., K-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::param("a distribution needs at least one support point"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::param(format!("probability {p} is not a finite non-negative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// All mass on point `at`.
    pub fn point_mass(support_size: usize, at: usize) -> Result<Self> {
        if at >= support_size {
            return Err(Error::param(format!("point {at} outside support of size {support_size}")));
        }
        let mut probs = vec![0.0; support_size];
        probs[at] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(support_size: usize) -> Result<Self> {
        Self::new(vec![1.0 / support_size as f64; support_size])
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `a * self + (1 - a) * other`, pointwise.
    pub fn mix(&self, a: f64, other: &Self) -> Result<Self> {
        check_support(self, other)?;
        Self::new(self.probs.iter().zip(&other.probs).map(|(p, q)| a * p + (1.0 - a) * q).collect())
    }
}

fn check_support(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<()> {
    if a.support_size() != b.support_size() {
        return Err(Error::param(format!(
            "support sizes differ: {} vs {}",
            a.support_size(),
            b.support_size()
        )));
    }
    Ok(())
}

/// Data and generator distributions plus the game weights.
///
/// The unlabeled marginal `p = pi_p p_p + pi_n p_n` is always derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub p_p: DiscreteDistribution,
    pub p_n: DiscreteDistribution,
    pub p_gp: DiscreteDistribution,
    pub p_gn: DiscreteDistribution,
    pub pi_p: f64,
    pub lambda_p: f64,
    pub lambda_u: f64,
    pub lambda_n: f64,
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        check_support(&self.p_p, &self.p_n)?;
        check_support(&self.p_p, &self.p_gp)?;
        check_support(&self.p_p, &self.p_gn)?;
        if !(0.0..=1.0).contains(&self.pi_p) {
            return Err(Error::param(format!("pi_p = {} outside [0, 1]", self.pi_p)));
        }
        for (name, l) in [("lambda_p", self.lambda_p), ("lambda_u", self.lambda_u), ("lambda_n", self.lambda_n)] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::param(format!("{name} = {l} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn support_size(&self) -> usize {
        self.p_p.support_size()
    }

    pub fn pi_n(&self) -> f64 {
        1.0 - self.pi_p
    }

    /// `p(x) = pi_p p_p(x) + pi_n p_n(x)`.
    pub fn marginal(&self) -> Vec<f64> {
        let (a, b) = (self.pi_p, self.pi_n());
        self.p_p.probs.iter().zip(&self.p_n.probs).map(|(p, n)| a * p + b * n).collect()
    }

    /// `pi_p p_gp(x) + pi_n p_gn(x)`.
    pub fn generated_mixture(&self) -> Vec<f64> {
        let (a, b) = (self.pi_p, self.pi_n());
        self.p_gp.probs.iter().zip(&self.p_gn.probs).map(|(p, n)| a * p + b * n).collect()
    }
}

/// Per-point values of the three discriminators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discriminators {
    pub d_p: Vec<f64>,
    pub d_u: Vec<f64>,
    pub d_n: Vec<f64>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.5
    } else {
        a / (a + b)
    }
}

/// The optimal discriminators against fixed generators:
/// `D_p = p_p / (p_p + p_gp)`, `D_u = p / (p + pi_p p_gp + pi_n p_gn)`,
/// `D_n = p_p / (p_p + p_gn)`.
pub fn optimal_discriminators(spec: &GameSpec) -> Discriminators {
    let p = spec.marginal();
    let mix = spec.generated_mixture();
    let pp = spec.p_p.probs();
    Discriminators {
        d_p: pp.iter().zip(spec.p_gp.probs()).map(|(&a, &b)| ratio(a, b)).collect(),
        d_u: p.iter().zip(&mix).map(|(&a, &b)| ratio(a, b)).collect(),
        d_n: pp.iter().zip(spec.p_gn.probs()).map(|(&a, &b)| ratio(a, b)).collect(),
    }
}

/// `w * log(v)` with `0 * log(anything) = 0`.
fn wlog(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v.ln()
    }
}

/// `sum_x real(x) log d(x) + fake(x) log(1 - d(x))`.
fn gan_term(real: &[f64], fake: &[f64], d: &[f64]) -> f64 {
    real.iter()
        .zip(fake)
        .zip(d)
        .map(|((&r, &f), &d)| wlog(r, d) + wlog(f, 1.0 - d))
        .sum()
}

/// `c * term`, with a zero coefficient silencing the term entirely.
fn weighted(c: f64, term: impl FnOnce() -> f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * term()
    }
}

/// The game value for arbitrary discriminators, expanded term by term:
///
/// `pi_p { l_p [E_pp log D_p + E_gp log(1-D_p)] + l_u [E_p log D_u + E_gp log(1-D_u)] }
///  + pi_n { l_u [E_p log D_u + E_gn log(1-D_u)] - l_n [E_pp log D_n + E_gn log(1-D_n)] }`
pub fn value_with(spec: &GameSpec, d: &Discriminators) -> f64 {
    let p = spec.marginal();
    let (pp, gp, gn) = (spec.p_p.probs(), spec.p_gp.probs(), spec.p_gn.probs());
    let positive = weighted(spec.pi_p, || {
        weighted(spec.lambda_p, || gan_term(pp, gp, &d.d_p)) + weighted(spec.lambda_u, || gan_term(&p, gp, &d.d_u))
    });
    let negative = weighted(spec.pi_n(), || {
        weighted(spec.lambda_u, || gan_term(&p, gn, &d.d_u)) - weighted(spec.lambda_n, || gan_term(pp, gn, &d.d_n))
    });
    positive + negative
}

/// The game value at the optimal discriminators, by direct expansion.
pub fn objective_value(spec: &GameSpec) -> f64 {
    value_with(spec, &optimal_discriminators(spec))
}

/// Jensen-Shannon divergence in nats; within `[0, ln 2]`.
pub fn jsd(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_support(p, q)?;
    Ok(jsd_slices(p.probs(), q.probs()))
}

fn jsd_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        // ordered so that swapping the arguments is bitwise symmetric
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            total += 0.5 * b * (b / m).ln();
        }
    }
    total
}

/// The game value at the optimal discriminators written with divergences:
///
/// `pi_p l_p (2 JSD(p_p||p_gp) - ln 4) + l_u (2 JSD(p||pi_p p_gp + pi_n p_gn) - ln 4)
///  - pi_n l_n (2 JSD(p_p||p_gn) - ln 4)`
pub fn objective_value_jsd(spec: &GameSpec) -> f64 {
    jsd_form(
        spec,
        spec.p_gp.probs(),
        spec.p_gn.probs(),
        &spec.marginal(),
        &spec.generated_mixture(),
    )
}

fn jsd_form(spec: &GameSpec, gp: &[f64], gn: &[f64], p: &[f64], mix: &[f64]) -> f64 {
    let pp = spec.p_p.probs();
    let term = |j: f64| 2.0 * j - LN4;
    weighted(spec.pi_p * spec.lambda_p, || term(jsd_slices(pp, gp)))
        + weighted(spec.lambda_u, || term(jsd_slices(p, mix)))
        - weighted(spec.pi_n() * spec.lambda_n, || term(jsd_slices(pp, gn)))
}

/// `-(pi_p l_p + l_u) ln 4`, the value at equilibrium for separated classes.
pub fn equilibrium_value(pi_p: f64, lambda_p: f64, lambda_u: f64) -> f64 {
    -(pi_p * lambda_p + lambda_u) * LN4
}

/// Which discriminator a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    DP,
    DU,
    DN,
}

/// Outcome of [`verify_optimality`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub passed: bool,
    /// Largest amount by which a grid point beat the candidate, per unit of
    /// probability mass at that point.
    pub max_violation: f64,
    /// Discriminator and support point of the largest violation.
    pub worst: Option<(Which, usize)>,
}

/// Checks each candidate value against a grid search of its own pointwise
/// objective `a log d + b log(1 - d)` over `d in {h, 2h, ..} < 1`.
///
/// `a` and `b` are the real and fake densities the discriminator sees at
/// that point. The violation is normalized by `a + b` so points of small
/// mass are checked as strictly as heavy ones. The candidate passes when no
/// grid point beats it by more than `grid_step` per unit mass.
pub fn verify_optimality(spec: &GameSpec, candidate: &Discriminators, grid_step: f64) -> Result<OptimalityReport> {
    spec.validate()?;
    if !(grid_step > 0.0 && grid_step < 0.5) {
        return Err(Error::param(format!("grid_step = {grid_step} must lie in (0, 0.5)")));
    }
    let k = spec.support_size();
    for v in [&candidate.d_p, &candidate.d_u, &candidate.d_n] {
        if v.len() != k {
            return Err(Error::param(format!("candidate has {} points, support has {k}", v.len())));
        }
        if let Some(d) = v.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::param(format!("candidate value {d} outside [0, 1]")));
        }
    }
    let p = spec.marginal();
    let mix = spec.generated_mixture();
    let pp = spec.p_p.probs();
    let grid: Vec<f64> = (1..)
        .map(|i| i as f64 * grid_step)
        .take_while(|&d| d < 1.0)
        .collect();

    let mut max_violation = 0.0_f64;
    let mut worst = None;
    let cases: [(Which, &[f64], &[f64], &[f64]); 3] = [
        (Which::DP, pp, spec.p_gp.probs(), &candidate.d_p),
        (Which::DU, &p, &mix, &candidate.d_u),
        (Which::DN, pp, spec.p_gn.probs(), &candidate.d_n),
    ];
    for (which, real, fake, cand) in cases {
        for x in 0..k {
            let (a, b) = (real[x], fake[x]);
            let mass = a + b;
            if mass == 0.0 {
                continue;
            }
            let f = |d: f64| (wlog(a, d) + wlog(b, 1.0 - d)) / mass;
            let at_candidate = f(cand[x]);
            let best = grid.iter().map(|&d| f(d)).fold(f64::NEG_INFINITY, f64::max);
            let violation = best - at_candidate;
            if violation > max_violation || (violation.is_nan() && !max_violation.is_nan()) {
                max_violation = violation;
                worst = Some((which, x));
            }
        }
    }
    Ok(OptimalityReport {
        passed: max_violation <= grid_step,
        max_violation,
        worst,
    })
}

/// Best generator pair found by [`equilibrium_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub p_gp: DiscreteDistribution,
    pub p_gn: DiscreteDistribution,
    pub value: f64,
    /// Candidate pairs evaluated.
    pub evaluated: u64,
}

/// Game weights for [`equilibrium_search`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub p: f64,
    pub u: f64,
    pub n: f64,
}

impl Default for Lambdas {
    fn default() -> Self {
        Self { p: 1.0, u: 1.0, n: 1.0 }
    }
}

/// All points of the simplex whose coordinates are multiples of `1/resolution`.
pub fn simplex_grid(support_size: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=left {
            prefix.push(i);
            rec(left - i, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    rec(resolution, support_size, &mut Vec::new(), &mut counts);
    let r = resolution as f64;
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|i| i as f64 / r).collect())
        .collect()
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exhaustively minimizes the value at the optimal discriminators over
/// generator pairs on a simplex grid with `resolution` steps per axis.
///
/// Ties keep the first pair in grid order, so the result is deterministic.
pub fn equilibrium_search(
    p_p: &DiscreteDistribution,
    p_n: &DiscreteDistribution,
    pi_p: f64,
    lambdas: Lambdas,
    resolution: usize,
) -> Result<EquilibriumResult> {
    check_support(p_p, p_n)?;
    let k = p_p.support_size();
    if k > MAX_SEARCH_SUPPORT {
        return Err(Error::param(format!(
            "support size {k} exceeds {MAX_SEARCH_SUPPORT} for exhaustive search"
        )));
    }
    if resolution < 1 {
        return Err(Error::param("resolution must give at least 2 grid points per axis"));
    }
    let cells = binomial((resolution + k - 1) as u64, (k - 1) as u64);
    if cells.saturating_mul(cells) > MAX_SEARCH_PAIRS {
        return Err(Error::param(format!(
            "{cells} grid points per generator is too many to search exhaustively"
        )));
    }
    let spec = GameSpec {
        p_p: p_p.clone(),
        p_n: p_n.clone(),
        p_gp: p_p.clone(),
        p_gn: p_n.clone(),
        pi_p,
        lambda_p: lambdas.p,
        lambda_u: lambdas.u,
        lambda_n: lambdas.n,
    };
    spec.validate()?;
    let grid = simplex_grid(k, resolution);
    let p = spec.marginal();
    let pi_n = spec.pi_n();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut mix = vec![0.0; k];
    for (i, gp) in grid.iter().enumerate() {
        for (j, gn) in grid.iter().enumerate() {
            for x in 0..k {
                mix[x] = pi_p * gp[x] + pi_n * gn[x];
            }
            let v = jsd_form(&spec, gp, gn, &p, &mix);
            if best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, i, j));
            }
        }
    }
    let (value, i, j) = best.expect("grid is never empty");
    Ok(EquilibriumResult {
        p_gp: DiscreteDistribution::new(grid[i].clone())?,
        p_gn: DiscreteDistribution::new(grid[j].clone())?,
        value,
        evaluated: cells * cells,
    })
}

/// A random pmf on `k` points; each point is zero with probability `sparsity`
/// (at least one point keeps mass).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize, sparsity: f64) -> DiscreteDistribution {
    random_on(rng, &(0..k).collect::<Vec<_>>(), k, sparsity)
}

fn random_on<R: Rng + ?Sized>(rng: &mut R, support: &[usize], k: usize, sparsity: f64) -> DiscreteDistribution {
    let mut w = vec![0.0; k];
    for &x in support {
        if !rng.random_bool(sparsity) {
            // exponential weights give a uniform draw on the simplex
            w[x] = -(1.0 - rng.random::<f64>()).ln();
        }
    }
    if w.iter().all(|&v| v == 0.0) {
        w[support[rng.random_range(0..support.len())]] = 1.0;
    }
    let total: f64 = w.iter().sum();
    DiscreteDistribution::new(w.into_iter().map(|v| v / total).collect()).expect("normalized weights")
}

fn random_weights<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64, f64) {
    (
        rng.random_range(0.05..0.95),
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.1..2.0),
    )
}

/// A spec with every distribution drawn independently on `k` points.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, k: usize) -> GameSpec {
    let (pi_p, lambda_p, lambda_u, lambda_n) = random_weights(rng);
    GameSpec {
        p_p: random_distribution(rng, k, 0.2),
        p_n: random_distribution(rng, k, 0.2),
        p_gp: random_distribution(rng, k, 0.2),
        p_gn: random_distribution(rng, k, 0.2),
        pi_p,
        lambda_p,
        lambda_u,
        lambda_n,
    }
}

/// A spec whose classes live on disjoint supports, with each generator
/// equal to its class distribution.
pub fn random_separated_equilibrium<R: Rng + ?Sized>(rng: &mut R, k: usize) -> GameSpec {
    assert!(k >= 2, "separation needs two support points");
    let mut points: Vec<usize> = (0..k).collect();
    rand::seq::SliceRandom::shuffle(points.as_mut_slice(), rng);
    let cut = rng.random_range(1..k);
    let p_p = random_on(rng, &points[..cut], k, 0.0);
    let p_n = random_on(rng, &points[cut..], k, 0.0);
    let (pi_p, lambda_p, lambda_u, lambda_n) = random_weights(rng);
    GameSpec {
        p_gp: p_p.clone(),
        p_gn: p_n.clone(),
        p_p,
        p_n,
        pi_p,
        lambda_p,
        lambda_u,
        lambda_n,
    }
}

/// One line of a [`run_suite`] report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, trials: usize, max_deviation: f64, tolerance: f64) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        trials,
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    }
}

fn worse(acc: f64, v: f64) -> f64 {
    if v.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

/// Runs every invariant on `trials` random specs with support sizes 2..=6.
///
/// `inject_fault` perturbs the candidate `D_p` by +0.2 before verification,
/// so the suite must fail; it exists to test the failure path.
pub fn run_suite(trials: usize, seed: u64, inject_fault: bool) -> Result<SuiteReport> {
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    let mut rng = seeded(seed);
    let mut theorem = 0.0_f64;
    let mut identity = 0.0_f64;
    let mut optimality = 0.0_f64;
    let mut symmetry = 0.0_f64;
    let mut range = 0.0_f64;
    for _ in 0..trials {
        let k = rng.random_range(2..=6);

        let eq = random_separated_equilibrium(&mut rng, k);
        let expected = equilibrium_value(eq.pi_p, eq.lambda_p, eq.lambda_u);
        theorem = worse(theorem, (objective_value(&eq) - expected).abs());

        let spec = random_spec(&mut rng, k);
        identity = worse(identity, (objective_value(&spec) - objective_value_jsd(&spec)).abs());

        let mut d = optimal_discriminators(&spec);
        if inject_fault {
            for v in &mut d.d_p {
                *v = (*v + 0.2).min(1.0 - 1e-9);
            }
        }
        optimality = worse(optimality, verify_optimality(&spec, &d, 1e-3)?.max_violation);

        let a = jsd(&spec.p_p, &spec.p_gn)?;
        let b = jsd(&spec.p_gn, &spec.p_p)?;
        symmetry = worse(symmetry, (a - b).abs());
        range = worse(range, (-a).max(a - std::f64::consts::LN_2).max(0.0));
    }
    Ok(SuiteReport {
        seed,
        checks: vec![
            check("equilibrium_value", trials, theorem, 1e-12),
            check("expansion_matches_jsd_form", trials, identity, 1e-10),
            check("closed_form_discriminators_optimal", trials, optimality, 1e-3),
            check("jsd_symmetric", trials, symmetry, 1e-15),
            check("jsd_within_0_ln2", trials, range, 0.0),
        ],
    })
}
