//! Fitting the drive parameters `[η, b_m, J_m]` to a measured current trace.
//!
//! The objective replays the full coupled loop for each candidate and compares
//! the reconstructed current sample by sample. A multistart Nelder–Mead
//! simplex searches in `(η, ln b_m, ln J_m)` with every vertex projected back
//! into the feasible box.

use alloc::vec::Vec;

use crate::control::run_scenario;
use crate::math;
use crate::rng::Stream;
use crate::scenario::{ChannelConfig, FeedbackMode, ScenarioConfig, ScenarioKind};
use crate::{Error, Result};

/// Parameter triple in the order `[η, b_m, J_m]`.
pub type Params = [f64; 3];

const RNG_TAG: u64 = 0x1d;

/// Feasible box. Lower bounds are exclusive, as are the upper bounds of
/// `b_m` and `J_m`; `η` may reach its upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub eta: (f64, f64),
    pub b_m: (f64, f64),
    pub j_m: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self { eta: (0.6, 1.0), b_m: (1e-5, 1e-3), j_m: (5e-6, 5e-4) }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.eta) || self.eta.0 < 0.0 || self.eta.1 > 1.0 {
            return Err(Error::InvalidParameter { name: "ident.bounds.eta", reason: "need 0 <= lo < hi <= 1" });
        }
        if !ok(self.b_m) || self.b_m.0 <= 0.0 {
            return Err(Error::InvalidParameter { name: "ident.bounds.b_m", reason: "need 0 < lo < hi" });
        }
        if !ok(self.j_m) || self.j_m.0 <= 0.0 {
            return Err(Error::InvalidParameter { name: "ident.bounds.j_m", reason: "need 0 < lo < hi" });
        }
        Ok(())
    }

    pub fn contains(&self, p: &Params) -> bool {
        p[0] > self.eta.0
            && p[0] <= self.eta.1
            && p[1] > self.b_m.0
            && p[1] < self.b_m.1
            && p[2] > self.j_m.0
            && p[2] < self.j_m.1
    }

    fn lo(&self) -> [f64; 3] {
        [self.eta.0, math::ln(self.b_m.0), math::ln(self.j_m.0)]
    }

    fn hi(&self) -> [f64; 3] {
        [self.eta.1, math::ln(self.b_m.1), math::ln(self.j_m.1)]
    }

    /// Clamp search coordinates onto the box, keeping open ends open.
    fn project(&self, x: &mut [f64; 3]) {
        let (lo, hi) = (self.lo(), self.hi());
        for d in 0..3 {
            let margin = 1e-9 * (hi[d] - lo[d]);
            let top = if d == 0 { hi[d] } else { hi[d] - margin };
            x[d] = x[d].clamp(lo[d] + margin, top);
        }
    }
}

#[cfg(test)]
fn to_search(p: &Params) -> [f64; 3] {
    [p[0], math::ln(p[1]), math::ln(p[2])]
}

fn from_search(x: &[f64; 3]) -> Params {
    [x[0], math::exp(x[1]), math::exp(x[2])]
}

/// Robust penalty `ρ`; the loss sums `ρ(r)²` over samples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RobustLoss {
    /// `ρ(r)² = 2·huber_δ(r)`: `r²` inside `|r| ≤ δ`, linear growth outside.
    Huber { delta: f64 },
    Squared,
}

impl Default for RobustLoss {
    fn default() -> Self {
        RobustLoss::Huber { delta: 0.5 }
    }
}

impl RobustLoss {
    pub fn rho(&self, r: f64) -> f64 {
        math::sqrt(self.rho_sq(r))
    }

    pub fn rho_sq(&self, r: f64) -> f64 {
        match *self {
            RobustLoss::Squared => r * r,
            RobustLoss::Huber { delta } => {
                let a = math::abs(r);
                if a <= delta {
                    r * r
                } else {
                    2.0 * delta * a - delta * delta
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentProblem {
    /// Sample times of the reference (s). Only their count is used for
    /// alignment; samples are matched by index.
    pub times: Vec<f64>,
    /// Measured current (A).
    pub reference: Vec<f64>,
    /// Runs whose tendon-0 reconstructed currents, concatenated, model the
    /// reference.
    pub excitation: Vec<ScenarioConfig>,
    pub bounds: Bounds,
    pub loss: RobustLoss,
    pub max_evals: usize,
    pub starts: usize,
    pub seed: u64,
}

impl IdentProblem {
    /// Problem with the default excitation built around `base`.
    pub fn new(times: Vec<f64>, reference: Vec<f64>, base: &ScenarioConfig) -> Self {
        Self {
            times,
            reference,
            excitation: default_excitation(base),
            bounds: Bounds::default(),
            loss: RobustLoss::default(),
            max_evals: 2000,
            starts: 8,
            seed: base.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference.is_empty() {
            return Err(Error::Empty("reference trace"));
        }
        if self.times.len() != self.reference.len() {
            return Err(Error::LengthMismatch { left: self.times.len(), right: self.reference.len() });
        }
        if self.excitation.is_empty() {
            return Err(Error::Empty("excitation"));
        }
        let n = excitation_len(&self.excitation);
        if n != self.reference.len() {
            return Err(Error::LengthMismatch { left: n, right: self.reference.len() });
        }
        if let RobustLoss::Huber { delta } = self.loss {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidParameter { name: "ident.huber_delta", reason: "must be > 0" });
            }
        }
        if self.starts == 0 || self.max_evals < 4 * self.starts {
            return Err(Error::InvalidParameter { name: "ident.max_evals", reason: "need at least 4 evaluations per start" });
        }
        self.bounds.validate()
    }
}

/// A force step followed by a constant-rate pull, both on tendon 0.
pub fn default_excitation(base: &ScenarioConfig) -> Vec<ScenarioConfig> {
    let mut step = ScenarioConfig::new(ScenarioKind::ForceStep);
    step.seed = base.seed;
    step.motor = base.motor;
    step.gains = base.gains;
    step.transmission = base.transmission;
    step.baseline = false;
    step.duration = 0.25;
    step.substeps = 5;
    step.electrical_dt = 1e-5;
    let mut pull = step.clone();
    pull.tendons[0] = ChannelConfig::with_mode(FeedbackMode::Velocity, 0.005);
    alloc::vec![step, pull]
}

fn excitation_len(ex: &[ScenarioConfig]) -> usize {
    ex.iter().map(|c| c.steps() + 1).sum()
}

/// Concatenated tendon-0 `i_obs**` of the excitation runs at `p`.
pub fn simulate_trace(p: &Params, excitation: &[ScenarioConfig]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(excitation_len(excitation));
    for cfg in excitation {
        let mut cfg = cfg.clone();
        cfg.transmission.eta = p[0];
        cfg.transmission.b_m = p[1];
        cfg.transmission.j_m = p[2];
        let log = run_scenario(&cfg)?;
        out.extend(log.rows.iter().map(|r| r.i_obs_dstar[0]));
    }
    Ok(out)
}

/// Robust mismatch at `p`. A failed simulation scores `+∞`.
pub fn objective(p: &Params, prob: &IdentProblem) -> Result<f64> {
    if !prob.bounds.contains(p) {
        return Err(Error::InvalidParameter { name: "ident.p", reason: "outside the feasible box" });
    }
    Ok(mismatch(p, prob))
}

fn mismatch(p: &Params, prob: &IdentProblem) -> f64 {
    match simulate_trace(p, &prob.excitation) {
        Ok(sim) if sim.len() == prob.reference.len() => {
            let s: f64 = sim.iter().zip(&prob.reference).map(|(a, b)| prob.loss.rho_sq(a - b)).sum();
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StartTrace {
    pub start: Params,
    pub best: Params,
    pub best_value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentResult {
    pub p_star: Params,
    pub objective: f64,
    pub evaluations: usize,
    pub starts: Vec<StartTrace>,
    /// Best objective seen after each evaluation, across all starts.
    pub best_so_far: Vec<f64>,
}

/// Simplex diameter (search coordinates) below which a start stops.
const X_TOL: f64 = 1e-3;

/// Multistart Nelder–Mead over the box. The first start is the box centre,
/// the rest are seeded uniform draws.
pub fn identify(prob: &IdentProblem) -> Result<IdentResult> {
    prob.validate()?;
    minimize(prob, |p| mismatch(p, prob))
}

fn minimize(prob: &IdentProblem, mut f: impl FnMut(&Params) -> f64) -> Result<IdentResult> {
    let b = prob.bounds;
    let (lo, hi) = (b.lo(), b.hi());
    let mut rng = Stream::new(prob.seed, RNG_TAG);
    let per_start = prob.max_evals / prob.starts;
    let mut best_so_far = Vec::with_capacity(prob.max_evals);
    let mut best = (f64::INFINITY, [0.0; 3]);
    let mut starts = Vec::with_capacity(prob.starts);

    for s in 0..prob.starts {
        let mut x0 = [0.0; 3];
        for d in 0..3 {
            x0[d] = if s == 0 { 0.5 * (lo[d] + hi[d]) } else { rng.range(lo[d], hi[d]) };
        }
        b.project(&mut x0);
        let mut evals = 0usize;
        let mut eval = |x: &[f64; 3], evals: &mut usize| {
            let v = f(&from_search(x));
            *evals += 1;
            if v < best.0 {
                best = (v, *x);
            }
            best_so_far.push(best.0);
            v
        };

        let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
        simplex.push((x0, eval(&x0, &mut evals)));
        for d in 0..3 {
            let step = 0.1 * (hi[d] - lo[d]);
            let mut x = x0;
            x[d] += if x0[d] + step < hi[d] { step } else { -step };
            b.project(&mut x);
            simplex.push((x, eval(&x, &mut evals)));
        }

        while evals + 2 <= per_start {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if diameter(&simplex) < X_TOL {
                break;
            }
            let mut c = [0.0; 3];
            for v in &simplex[..3] {
                for d in 0..3 {
                    c[d] += v.0[d] / 3.0;
                }
            }
            let worst = simplex[3];
            let along = |t: f64| {
                let mut x = [0.0; 3];
                for d in 0..3 {
                    x[d] = c[d] + t * (worst.0[d] - c[d]);
                }
                b.project(&mut x);
                x
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[2].1 {
                simplex[3] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst.1 {
                    let x = along(-0.5);
                    (x, eval(&x, &mut evals))
                } else {
                    let x = along(0.5);
                    (x, eval(&x, &mut evals))
                };
                if fc < worst.1.min(fr) {
                    simplex[3] = (xc, fc);
                } else if evals + 3 <= per_start {
                    let x_best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        for d in 0..3 {
                            v.0[d] = x_best[d] + 0.5 * (v.0[d] - x_best[d]);
                        }
                        v.1 = eval(&v.0, &mut evals);
                    }
                } else {
                    break;
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        starts.push(StartTrace {
            start: from_search(&x0),
            best: from_search(&simplex[0].0),
            best_value: simplex[0].1,
            evaluations: evals,
        });
    }

    if !best.0.is_finite() {
        return Err(Error::NoFeasibleEvaluation);
    }
    Ok(IdentResult {
        p_star: from_search(&best.1),
        objective: best.0,
        evaluations: best_so_far.len(),
        starts,
        best_so_far,
    })
}

fn diameter(simplex: &[([f64; 3], f64)]) -> f64 {
    let mut m: f64 = 0.0;
    for v in &simplex[1..] {
        for d in 0..3 {
            m = m.max(math::abs(v.0[d] - simplex[0].0[d]));
        }
    }
    m
}
