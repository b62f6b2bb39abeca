//! Cylinder-diameter estimation from wrapping runs.
//!
//! A sample is the reconstructed current and tendon displacement of tendon 0
//! while it wraps the chain around a cylinder. Each sample is reduced to a
//! fixed 16-entry feature vector; a ridge regressor and an RBF support vector
//! regressor are trained on standardized features, and their out-of-fold
//! predictions feed a small gradient-boosted tree ensemble.

use alloc::vec;
use alloc::vec::Vec;

use crate::control::run_scenario;
use crate::filter::{backward_difference, moving_average};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::math;
use crate::rng::Stream;
use crate::scenario::{wrap_cylinder, ScenarioConfig, ScenarioKind, WRAP_X};
use crate::{Error, Result};

pub const N_FEATURES: usize = 16;

/// Bumped whenever the feature list or its order changes.
pub const FEATURE_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "i_mean",
    "i_std",
    "i_max",
    "i_final",
    "i_t90",
    "i_abs_integral",
    "dl_final",
    "dl_dot_max",
    "dl_dot_collapse_time",
    "i_dominant_freq",
    "i_band_0_5",
    "i_band_5_50",
    "i_dl_slope",
    "i_at_collapse",
    "i_dl_dot_corr",
    "i_post_contact_mean",
];

pub type FeatureVector = [f64; N_FEATURES];

const MIN_TRACE: usize = 64;
const RATE_WINDOW: usize = 100;
const RNG_TAG: u64 = 0x5e;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    Simulated,
    External,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Simulated => "simulated",
            Provenance::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simulated" => Some(Provenance::Simulated),
            "external" => Some(Provenance::External),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WrapSample {
    pub id: usize,
    /// True cylinder diameter (m).
    pub diameter: f64,
    /// Filtered reconstructed current of the driven tendon (A).
    pub current: Vec<f64>,
    /// Driven tendon displacement (m).
    pub displacement: Vec<f64>,
    pub dt: f64,
    /// Scenario seed the sample was generated with.
    pub seed: u64,
    pub provenance: Provenance,
}

impl WrapSample {
    pub fn validate(&self) -> Result<()> {
        if self.current.len() != self.displacement.len() {
            return Err(Error::LengthMismatch { left: self.current.len(), right: self.displacement.len() });
        }
        if !(self.diameter > 0.0) {
            return Err(Error::InvalidParameter { name: "sample.diameter", reason: "must be > 0" });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "sample.dt", reason: "must be > 0" });
        }
        Ok(())
    }
}

/// Diameters 10 to 70 mm in 10 mm steps.
pub fn default_diameters() -> Vec<f64> {
    (1..=7).map(|k| k as f64 * 0.01).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<WrapSample>,
    /// Samples whose simulation failed, by id.
    pub failures: Vec<(usize, Error)>,
}

/// One planned wrap run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub id: usize,
    pub diameter: f64,
    /// Cylinder shift along the chain (m).
    pub dx: f64,
    /// Drive-rate multiplier.
    pub speed: f64,
    pub seed: u64,
}

/// Runs per diameter × rep. Each run jitters the cylinder's position along
/// the chain by up to ±10 % of its radius and the drive rate by ±10 %.
pub fn dataset_plan(diameters: &[f64], reps: usize, seed: u64) -> Result<Vec<SamplePlan>> {
    if diameters.is_empty() {
        return Err(Error::Empty("diameters"));
    }
    if diameters.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter { name: "dataset.diameters", reason: "must be > 0" });
    }
    let mut rng = Stream::new(seed, RNG_TAG);
    let mut out = Vec::with_capacity(diameters.len() * reps);
    for &d in diameters {
        for _ in 0..reps {
            let id = out.len();
            let dx = rng.range(-0.1, 0.1) * 0.5 * d;
            let speed = rng.range(0.9, 1.1);
            out.push(SamplePlan { id, diameter: d, dx, speed, seed: seed.wrapping_mul(1000).wrapping_add(id as u64) });
        }
    }
    Ok(out)
}

pub fn run_sample(base: &ScenarioConfig, plan: &SamplePlan) -> Result<WrapSample> {
    let mut cfg = base.clone();
    cfg.seed = plan.seed;
    cfg.contact.kind = wrap_cylinder(plan.diameter, WRAP_X + plan.dx);
    cfg.tendons[0].setpoint = base.tendons[0].setpoint * plan.speed;
    let log = run_scenario(&cfg)?;
    Ok(WrapSample {
        id: plan.id,
        diameter: plan.diameter,
        current: log.rows.iter().map(|r| r.i_obs_dstar_filt[0]).collect(),
        displacement: log.rows.iter().map(|r| r.dl[0]).collect(),
        dt: cfg.dt,
        seed: cfg.seed,
        provenance: Provenance::Simulated,
    })
}

/// Sequential [`dataset_plan`] + [`run_sample`]; failed runs are collected
/// and the rest continue.
pub fn generate_dataset(base: &ScenarioConfig, diameters: &[f64], reps: usize, seed: u64) -> Result<Dataset> {
    let mut out = Dataset { samples: Vec::new(), failures: Vec::new() };
    for plan in dataset_plan(diameters, reps, seed)? {
        match run_sample(base, &plan) {
            Ok(s) => out.samples.push(s),
            Err(e) => out.failures.push((plan.id, e)),
        }
    }
    Ok(out)
}

/// Default wrap scenario used by [`generate_dataset`].
pub fn default_wrap_config() -> ScenarioConfig {
    ScenarioConfig::new(ScenarioKind::WrapCylinder)
}

pub fn extract_features(sample: &WrapSample) -> Result<FeatureVector> {
    sample.validate()?;
    let i = &sample.current;
    let dl = &sample.displacement;
    let n = i.len();
    if n < MIN_TRACE {
        return Err(Error::TraceTooShort { needed: MIN_TRACE, got: n });
    }
    let dt = sample.dt;
    let rate = moving_average(&backward_difference(dl, dt), RATE_WINDOW)?;

    let i_max = i.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t90 = if i_max > 0.0 {
        i.iter().position(|&v| v >= 0.9 * i_max).unwrap_or(0) as f64 * dt
    } else {
        0.0
    };
    let abs_integral = i.iter().map(|v| math::abs(*v)).sum::<f64>() * dt;

    let rate_max = rate.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let collapse = collapse_index(&rate);
    let collapse_time = collapse.map_or(if rate_max > 0.0 { n as f64 * dt } else { 0.0 }, |k| k as f64 * dt);
    let wrap_end = collapse.unwrap_or(n);
    let post = collapse.unwrap_or(n - 1);

    let (freq, low, high) = spectrum_features(i, dt);

    Ok([
        math::mean(i),
        math::std_dev(i),
        i_max,
        i[n - 1],
        t90,
        abs_integral,
        dl[n - 1],
        rate_max,
        collapse_time,
        freq,
        low,
        high,
        regression_slope(&dl[..wrap_end], &i[..wrap_end]),
        i[post.min(n - 1)],
        math::correlation(i, &rate),
        math::mean(&i[post..]),
    ])
}

/// First sample where the smoothed rate drops below 10 % of its median,
/// after having been above it.
fn collapse_index(rate: &[f64]) -> Option<usize> {
    let level = 0.1 * math::median(rate);
    if !(level > 0.0) {
        return None;
    }
    let start = rate.iter().position(|&r| r >= level)?;
    rate[start..].iter().position(|&r| r < level).map(|k| k + start)
}

/// Least-squares slope of `y` against `x`; zero without spread in `x`.
fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let (mx, my) = (math::mean(x), math::mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Dominant frequency and 0–5 Hz / 5–50 Hz energies of the linearly
/// detrended trace, from a plain DFT. Energies are `Σ|X_k|²/N` over the
/// positive-frequency bins in each band.
fn spectrum_features(x: &[f64], dt: f64) -> (f64, f64, f64) {
    let n = x.len();
    let t: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let slope = regression_slope(&t, x);
    let mx = math::mean(x);
    let mt = math::mean(&t);
    let r: Vec<f64> = x.iter().enumerate().map(|(k, v)| v - mx - slope * (k as f64 - mt)).collect();

    let df = 1.0 / (n as f64 * dt);
    let mut best = (0.0, 0.0);
    let mut low = 0.0;
    let mut high = 0.0;
    let w = core::f64::consts::TAU / n as f64;
    for k in 1..=n / 2 {
        // rotating phasor, re-anchored every 64 samples to bound drift
        let (mut re, mut im) = (0.0, 0.0);
        let (sd, cd) = (math::sin(w * k as f64), math::cos(w * k as f64));
        let (mut c, mut s) = (1.0, 0.0);
        for (m, v) in r.iter().enumerate() {
            if m % 64 == 0 {
                let a = w * ((k * m) % n) as f64;
                c = math::cos(a);
                s = math::sin(a);
            }
            re += v * c;
            im -= v * s;
            let c2 = c * cd - s * sd;
            s = s * cd + c * sd;
            c = c2;
        }
        let p = (re * re + im * im) / n as f64;
        let f = k as f64 * df;
        if p > best.1 {
            best = (f, p);
        }
        if f <= 5.0 {
            low += p;
        } else if f <= 50.0 {
            high += p;
        }
    }
    (best.0, low, high)
}

/// Per-feature affine standardization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; a feature without spread keeps scale 1.
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, |r| r.len());
        let mut mean = vec![0.0; p];
        let mut scale = vec![1.0; p];
        for j in 0..p {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            mean[j] = math::mean(&col);
            let s = math::std_dev(&col);
            if s > 1e-12 * (1.0 + math::abs(mean[j])) {
                scale[j] = s;
            }
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ridge {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Ridge {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Exact ridge solution on centred data.
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Ridge> {
    check_xy(x, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter { name: "ridge.lambda", reason: "must be >= 0" });
    }
    let p = x[0].len();
    let xm: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / x.len() as f64).collect();
    let ym = math::mean(y);
    let mut a = SquareMatrix::zeros(p);
    let mut b = vec![0.0; p];
    for (r, &t) in x.iter().zip(y) {
        let c: Vec<f64> = r.iter().zip(&xm).map(|(v, m)| v - m).collect();
        a.add_outer(&c, 1.0);
        for j in 0..p {
            b[j] += c[j] * (t - ym);
        }
    }
    a.add_diagonal(&vec![1.0; p], lambda);
    let max_diag = (0..p).map(|j| a[(j, j)]).fold(0.0, f64::max);
    let chol = Cholesky::factor(&a).map_err(|_| Error::Singular)?;
    if chol.min_pivot() * chol.min_pivot() <= 1e-12 * max_diag {
        return Err(Error::Singular);
    }
    let weights = chol.solve(&b);
    let intercept = ym - weights.iter().zip(&xm).map(|(w, m)| w * m).sum::<f64>();
    Ok(Ridge { weights, intercept })
}

fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples { samples: x.len(), folds: 2 });
    }
    let p = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != p) {
        return Err(Error::LengthMismatch { left: r.len(), right: p });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Svr {
    /// `α_i − α_i*` per support vector.
    pub coef: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub bias: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl Svr {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.bias + self.coef.iter().zip(&self.support).map(|(a, s)| a * rbf(self.gamma, s, x)).sum::<f64>()
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    math::exp(-gamma * d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvrParams {
    pub c: f64,
    /// Tube half-width (m).
    pub epsilon: f64,
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 10.0, epsilon: 1e-3, gamma: 1.0 / 16.0, tolerance: 1e-4, max_iter: 1_000_000 }
    }
}

/// Fitted SVR together with the raw dual solution, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrFit {
    pub model: Svr,
    /// `[α; α*]`, length `2N`.
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Final maximal KKT violation `m(α) − M(α)`.
    pub violation: f64,
}

/// ε-SVR dual by SMO with maximal-violating-pair selection.
pub fn train_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrFit> {
    check_xy(x, y)?;
    if !(params.c > 0.0 && params.epsilon >= 0.0 && params.gamma > 0.0 && params.tolerance > 0.0) {
        return Err(Error::InvalidParameter { name: "svr", reason: "need C > 0, epsilon >= 0, gamma > 0, tolerance > 0" });
    }
    let l = x.len();
    let c = params.c;
    let mut k = vec![0.0; l * l];
    for a in 0..l {
        for b in a..l {
            let v = rbf(params.gamma, &x[a], &x[b]);
            k[a * l + b] = v;
            k[b * l + a] = v;
        }
    }
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * k[(s % l) * l + t % l];
    let mut alpha = vec![0.0; 2 * l];
    let mut grad: Vec<f64> =
        (0..2 * l).map(|t| if t < l { params.epsilon - y[t] } else { params.epsilon + y[t - l] }).collect();

    let mut iterations = 0;
    let violation = loop {
        let mut gmax = (f64::NEG_INFINITY, usize::MAX);
        let mut gmin = (f64::INFINITY, usize::MAX);
        for t in 0..2 * l {
            let v = -sign(t) * grad[t];
            let up = if t < l { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if t < l { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > gmax.0 {
                gmax = (v, t);
            }
            if low && v < gmin.0 {
                gmin = (v, t);
            }
        }
        let gap = gmax.0 - gmin.0;
        if gap <= params.tolerance || gmax.1 == usize::MAX || gmin.1 == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::NotConverged { iterations, violation: gap });
        }
        iterations += 1;
        let (i, j) = (gmax.1, gmin.1);
        let (ai, aj) = (alpha[i], alpha[j]);
        let qii = q(i, i);
        let qjj = q(j, j);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..2 * l {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    };

    // bias from free variables, else the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..2 * l {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };

    let mut coef = Vec::new();
    let mut support = Vec::new();
    for t in 0..l {
        let b = alpha[t] - alpha[t + l];
        if b != 0.0 {
            coef.push(b);
            support.push(x[t].clone());
        }
    }
    Ok(SvrFit {
        model: Svr { coef, support, bias: -rho, gamma: params.gamma, epsilon: params.epsilon, c },
        alpha,
        iterations,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TreeNode {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut n = 0;
        loop {
            match self.nodes[n] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split { feature, threshold, left, right } => {
                    n = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Least-squares tree of at most `depth` levels.
    pub fn fit(x: &[Vec<f64>], y: &[f64], depth: usize) -> Self {
        let mut t = Tree { nodes: Vec::new() };
        let idx: Vec<usize> = (0..y.len()).collect();
        t.grow(x, y, idx, depth);
        t
    }

    fn grow(&mut self, x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, depth: usize) -> usize {
        let me = self.nodes.len();
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len().max(1) as f64;
        self.nodes.push(TreeNode::Leaf(mean));
        if depth == 0 || idx.len() < 2 {
            return me;
        }
        let Some((feature, threshold)) = best_split(x, y, &idx) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
        let left = self.grow(x, y, l, depth - 1);
        let right = self.grow(x, y, r, depth - 1);
        self.nodes[me] = TreeNode::Split { feature, threshold, left, right };
        me
    }
}

/// Split minimizing the summed squared error of both sides, if any split
/// improves on the parent.
fn best_split(x: &[Vec<f64>], y: &[f64], idx: &[usize]) -> Option<(usize, f64)> {
    let n = idx.len() as f64;
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    let parent = total_sq - total * total / n;
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[idx[0]].len() {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut s = 0.0;
        let mut s2 = 0.0;
        for k in 0..order.len() - 1 {
            let v = y[order[k]];
            s += v;
            s2 += v * v;
            let (xa, xb) = (x[order[k]][f], x[order[k + 1]][f]);
            if xa == xb {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = n - nl;
            let sse = (s2 - s * s / nl) + ((total_sq - s2) - (total - s) * (total - s) / nr);
            if best.map_or(true, |b| sse < b.0) {
                best = Some((sse, f, 0.5 * (xa + xb)));
            }
        }
    }
    match best {
        Some((sse, f, t)) if sse < parent - 1e-15 * parent.abs() => Some((f, t)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoostParams {
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { trees: 50, depth: 2, learning_rate: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Boosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Boosting {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

/// Least-squares gradient boosting. Also returns the training loss after
/// the constant start and after each tree.
pub fn train_boosting(x: &[Vec<f64>], y: &[f64], params: &BoostParams) -> Result<(Boosting, Vec<f64>)> {
    check_xy(x, y)?;
    if params.trees == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidParameter { name: "boosting", reason: "need trees >= 1 and learning_rate > 0" });
    }
    let init = math::mean(y);
    let mut pred = vec![init; y.len()];
    let loss = |p: &[f64]| p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut losses = vec![loss(&pred)];
    let mut trees = Vec::with_capacity(params.trees);
    for _ in 0..params.trees {
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let tree = Tree::fit(x, &resid, params.depth);
        for (p, r) in pred.iter_mut().zip(x) {
            *p += params.learning_rate * tree.predict(r);
        }
        losses.push(loss(&pred));
        trees.push(tree);
    }
    Ok((Boosting { init, learning_rate: params.learning_rate, trees }, losses))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleParams {
    pub folds: usize,
    pub seed: u64,
    pub ridge_lambda: f64,
    pub svr: SvrParams,
    pub boost: BoostParams,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self { folds: 5, seed: 0, ridge_lambda: 1.0, svr: SvrParams::default(), boost: BoostParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleModel {
    pub feature_version: u32,
    pub standardizer: Standardizer,
    pub ridge: Ridge,
    pub svr: Svr,
    pub meta: Boosting,
    pub params: EnsembleParams,
}

impl EnsembleModel {
    pub fn predict_features(&self, f: &FeatureVector) -> f64 {
        let z = self.standardizer.apply(f);
        self.meta.predict(&[self.ridge.predict(&z), self.svr.predict(&z)])
    }
}

/// Fold of each sample, keyed by id. Ids are grouped by label and shuffled
/// within each group, then dealt round-robin so every fold sees every label
/// when counts allow.
pub fn assign_folds(ids: &[usize], labels: &[f64], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if ids.len() != labels.len() {
        return Err(Error::LengthMismatch { left: ids.len(), right: labels.len() });
    }
    if folds < 2 || ids.len() < folds {
        return Err(Error::TooFewSamples { samples: ids.len(), folds });
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]).then(ids[a].cmp(&ids[b])));
    let mut rng = Stream::new(seed, RNG_TAG + 1);
    let mut out = vec![0; ids.len()];
    let mut next = 0;
    let mut k = 0;
    while k < order.len() {
        let mut e = k;
        while e < order.len() && labels[order[e]] == labels[order[k]] {
            e += 1;
        }
        let group = &mut order[k..e];
        rng.shuffle(group);
        for &s in group.iter() {
            out[s] = next % folds;
            next += 1;
        }
        k = e;
    }
    Ok(out)
}

/// Stacked ensemble on precomputed features. Samples are put in id order
/// first, so the model does not depend on the input order.
pub fn train_ensemble_features(
    ids: &[usize],
    features: &[FeatureVector],
    y: &[f64],
    params: &EnsembleParams,
) -> Result<EnsembleModel> {
    if features.len() != y.len() || ids.len() != y.len() {
        return Err(Error::LengthMismatch { left: features.len(), right: y.len() });
    }
    if y.len() < params.folds || params.folds < 2 {
        return Err(Error::TooFewSamples { samples: y.len(), folds: params.folds });
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by_key(|&k| ids[k]);
    let ids: Vec<usize> = order.iter().map(|&k| ids[k]).collect();
    let raw: Vec<Vec<f64>> = order.iter().map(|&k| features[k].to_vec()).collect();
    let y: Vec<f64> = order.iter().map(|&k| y[k]).collect();

    let standardizer = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let fold = assign_folds(&ids, &y, params.folds, params.seed)?;

    let mut meta_x = vec![vec![0.0; 2]; y.len()];
    for f in 0..params.folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&k| fold[k] != f);
        let xt: Vec<Vec<f64>> = train.iter().map(|&k| x[k].clone()).collect();
        let yt: Vec<f64> = train.iter().map(|&k| y[k]).collect();
        let ridge = train_ridge(&xt, &yt, params.ridge_lambda)?;
        let svr = train_svr(&xt, &yt, &params.svr)?.model;
        for &k in &test {
            meta_x[k] = vec![ridge.predict(&x[k]), svr.predict(&x[k])];
        }
    }
    let (meta, _) = train_boosting(&meta_x, &y, &params.boost)?;
    let ridge = train_ridge(&x, &y, params.ridge_lambda)?;
    let svr = train_svr(&x, &y, &params.svr)?.model;
    Ok(EnsembleModel { feature_version: FEATURE_VERSION, standardizer, ridge, svr, meta, params: *params })
}

pub fn train_ensemble(samples: &[WrapSample], params: &EnsembleParams) -> Result<EnsembleModel> {
    let features = samples.iter().map(extract_features).collect::<Result<Vec<_>>>()?;
    let ids: Vec<usize> = samples.iter().map(|s| s.id).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.diameter).collect();
    train_ensemble_features(&ids, &features, &y, params)
}

/// Estimated diameter (m).
pub fn predict(model: &EnsembleModel, sample: &WrapSample) -> Result<f64> {
    Ok(model.predict_features(&extract_features(sample)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub mae: f64,
    pub r2: f64,
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.len() < 2 {
        return Err(Error::TooFewSamples { samples: y_true.len(), folds: 2 });
    }
    let n = y_true.len() as f64;
    let mae = y_true.iter().zip(y_pred).map(|(a, b)| math::abs(a - b)).sum::<f64>() / n;
    let m = math::mean(y_true);
    let ss_tot: f64 = y_true.iter().map(|a| (a - m) * (a - m)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedR2);
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(Metrics { mae, r2: 1.0 - ss_res / ss_tot })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutReport {
    /// Ids, labels and predictions of the held-out fold.
    pub ids: Vec<usize>,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub metrics: Metrics,
    /// Label and mean cross-validated prediction for every distinct label,
    /// ascending; each fold is held out in turn.
    pub per_label: Vec<(f64, f64)>,
}

/// Hold out `fold` for metrics, and rotate the hold-out through all folds
/// for the per-label means.
pub fn holdout_evaluation(samples: &[WrapSample], params: &EnsembleParams, fold: usize) -> Result<HoldoutReport> {
    let features = samples.iter().map(extract_features).collect::<Result<Vec<_>>>()?;
    let ids: Vec<usize> = samples.iter().map(|s| s.id).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.diameter).collect();
    let assignment = assign_folds(&ids, &y, params.folds, params.seed)?;
    let mut cv = vec![0.0; y.len()];
    for f in 0..params.folds {
        let train: Vec<usize> = (0..y.len()).filter(|&k| assignment[k] != f).collect();
        let pick = |v: &[f64]| train.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let model = train_ensemble_features(
            &train.iter().map(|&k| ids[k]).collect::<Vec<_>>(),
            &train.iter().map(|&k| features[k]).collect::<Vec<_>>(),
            &pick(&y),
            params,
        )?;
        for k in (0..y.len()).filter(|&k| assignment[k] == f) {
            cv[k] = model.predict_features(&features[k]);
        }
    }
    let held: Vec<usize> = (0..y.len()).filter(|&k| assignment[k] == fold % params.folds).collect();
    let y_true: Vec<f64> = held.iter().map(|&k| y[k]).collect();
    let y_pred: Vec<f64> = held.iter().map(|&k| cv[k]).collect();
    let metrics = metrics(&y_true, &y_pred)?;

    let mut labels = y.clone();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    let per_label = labels
        .iter()
        .map(|&d| {
            let p: Vec<f64> = (0..y.len()).filter(|&k| y[k] == d).map(|k| cv[k]).collect();
            (d, math::mean(&p))
        })
        .collect();
    Ok(HoldoutReport { ids: held.iter().map(|&k| ids[k]).collect(), y_true, y_pred, metrics, per_label })
}
