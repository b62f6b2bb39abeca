//! Planar pseudo-rigid-body chain driven by two antagonistic tendons.
//!
//! Joint `j` sits at `o_j`; link `j` runs from `o_j` to `p_j = o_{j+1}` and
//! carries its point mass at `p_j`. Positive joint angles curl the chain
//! towards +y and shorten tendon 0 (its displacement `Δℓ_0` grows).

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Cholesky, SquareMatrix};
use crate::{electrical::positive, math, Error, Result};

pub const N_JOINTS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuumModel {
    pub link_lengths: Vec<f64>,
    pub link_masses: Vec<f64>,
    pub joint_stiffness: Vec<f64>,
    pub joint_damping: Vec<f64>,
    pub moment_arms: Vec<f64>,
    /// Curl limit `θ_lim` (rad), applied symmetrically.
    pub joint_limit: f64,
    /// Penalty stiffness past the limit (N·m/rad).
    pub limit_stiffness: f64,
    /// Penalty damping past the limit (N·m·s/rad).
    pub limit_damping: f64,
    /// m/s²
    pub gravity: [f64; 2],
}

/// Geometric taper generating the default chain.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Taper {
    pub ratio: f64,
    pub base_length: f64,
    pub base_mass: f64,
    pub base_stiffness: f64,
    pub base_moment_arm: f64,
    /// Joint damping as a multiple of joint stiffness (s).
    pub damping_per_stiffness: f64,
}

impl Default for Taper {
    fn default() -> Self {
        Self {
            ratio: 0.93,
            base_length: 0.02,
            base_mass: 0.01,
            base_stiffness: 0.05,
            base_moment_arm: 0.006,
            damping_per_stiffness: 0.1,
        }
    }
}

impl Default for ContinuumModel {
    fn default() -> Self {
        Self::tapered(&Taper::default())
    }
}

impl ContinuumModel {
    /// Lengths and moment arms scale with `λ^j`, masses with `λ^{3j}`,
    /// stiffness with `λ^{4j}`.
    pub fn tapered(t: &Taper) -> Self {
        let pow = |e: usize| -> Vec<f64> {
            (0..N_JOINTS).map(|j| libm::pow(t.ratio, (e * j) as f64)).collect()
        };
        let lin = pow(1);
        let link_lengths: Vec<f64> = lin.iter().map(|s| t.base_length * s).collect();
        let moment_arms = lin.iter().map(|s| t.base_moment_arm * s).collect();
        let link_masses = pow(3).iter().map(|s| t.base_mass * s).collect();
        let joint_stiffness: Vec<f64> = pow(4).iter().map(|s| t.base_stiffness * s).collect();
        let joint_damping = joint_stiffness.iter().map(|k| t.damping_per_stiffness * k).collect();
        Self {
            link_lengths,
            link_masses,
            joint_stiffness,
            joint_damping,
            moment_arms,
            joint_limit: 0.35,
            limit_stiffness: 200.0,
            limit_damping: 0.05,
            gravity: [0.0, 0.0],
        }
    }

    pub fn n(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn validate(&self) -> Result<()> {
        let seqs: [(&'static str, &Vec<f64>); 5] = [
            ("robot.link_lengths", &self.link_lengths),
            ("robot.link_masses", &self.link_masses),
            ("robot.joint_stiffness", &self.joint_stiffness),
            ("robot.joint_damping", &self.joint_damping),
            ("robot.moment_arms", &self.moment_arms),
        ];
        for (name, s) in seqs {
            if s.len() != N_JOINTS {
                return Err(Error::InvalidParameter { name, reason: "must have 24 entries" });
            }
            for &v in s.iter() {
                positive(name, v)?;
            }
        }
        for (name, s) in [seqs[0], seqs[1], seqs[2], seqs[4]] {
            if s.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidParameter { name, reason: "must be non-increasing base to tip" });
            }
        }
        positive("robot.joint_limit", self.joint_limit)?;
        positive("robot.limit_stiffness", self.limit_stiffness)?;
        if !(self.limit_damping >= 0.0) {
            return Err(Error::InvalidParameter { name: "robot.limit_damping", reason: "must be >= 0" });
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidParameter { name: "robot.gravity", reason: "must be finite" });
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.link_masses.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContinuumState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

impl ContinuumState {
    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n], qdot: vec![0.0; n] }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qdot).all(|v| v.is_finite())
    }
}

/// Joint origins, link tips, link directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub origins: Vec<[f64; 2]>,
    pub tips: Vec<[f64; 2]>,
    pub dirs: Vec<[f64; 2]>,
}

pub fn forward_kinematics(q: &[f64], model: &ContinuumModel) -> Kinematics {
    let n = q.len();
    let mut origins = Vec::with_capacity(n);
    let mut tips = Vec::with_capacity(n);
    let mut dirs = Vec::with_capacity(n);
    let mut phi = 0.0;
    let mut o = [0.0, 0.0];
    for j in 0..n {
        phi += q[j];
        let u = [math::cos(phi), math::sin(phi)];
        let p = [o[0] + model.link_lengths[j] * u[0], o[1] + model.link_lengths[j] * u[1]];
        origins.push(o);
        tips.push(p);
        dirs.push(u);
        o = p;
    }
    Kinematics { origins, tips, dirs }
}

pub fn tip_position(q: &[f64], model: &ContinuumModel) -> [f64; 2] {
    *forward_kinematics(q, model).tips.last().unwrap_or(&[0.0, 0.0])
}

#[inline]
fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Tendon displacements `(Δℓ_0, Δℓ_1)` from the undeformed pose.
pub fn tendon_lengths(q: &[f64], model: &ContinuumModel) -> [f64; 2] {
    let l0: f64 = q.iter().zip(&model.moment_arms).map(|(q, d)| d * q).sum();
    [l0, -l0]
}

/// `∂ℓ/∂q`, one row per tendon.
pub fn tendon_jacobian(_q: &[f64], model: &ContinuumModel) -> [Vec<f64>; 2] {
    let row0 = model.moment_arms.clone();
    let row1 = row0.iter().map(|d| -d).collect();
    [row0, row1]
}

pub fn tendon_rates(qdot: &[f64], model: &ContinuumModel) -> [f64; 2] {
    tendon_lengths(qdot, model)
}

/// Terms of `M q̈ + c + d + k + g = τ`.
#[derive(Debug, Clone)]
pub struct DynamicsTerms {
    pub mass: SquareMatrix,
    pub coriolis: Vec<f64>,
    pub damping: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub gravity: Vec<f64>,
}

/// Mass matrix of the point-mass chain.
///
/// For `a ≤ b`, `M_ab = Σ_{k≥b} m_k (p_k − o_a)·(p_k − o_b)`, evaluated from
/// per-joint moment sums so the assembly is O(n²).
pub fn mass_matrix(kin: &Kinematics, model: &ContinuumModel) -> SquareMatrix {
    let n = kin.tips.len();
    let mut m = SquareMatrix::zeros(n);
    // t0[b] = Σ m_k |p_k − o_b|², t1[b] = Σ m_k (p_k − o_b)
    let mut t0 = vec![0.0; n];
    let mut t1 = vec![[0.0; 2]; n];
    for b in 0..n {
        for k in b..n {
            let r = sub(kin.tips[k], kin.origins[b]);
            let mk = model.link_masses[k];
            t0[b] += mk * dot(r, r);
            t1[b][0] += mk * r[0];
            t1[b][1] += mk * r[1];
        }
    }
    for a in 0..n {
        for b in a..n {
            let v = t0[b] + dot(sub(kin.origins[b], kin.origins[a]), t1[b]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// Velocity-product terms `c(q, q̇)`.
pub fn coriolis(kin: &Kinematics, qdot: &[f64], model: &ContinuumModel) -> Vec<f64> {
    let n = qdot.len();
    // centripetal acceleration of each mass point
    let mut bias = vec![[0.0; 2]; n];
    let mut omega = 0.0;
    let mut acc = [0.0, 0.0];
    for k in 0..n {
        omega += qdot[k];
        let s = model.link_lengths[k] * omega * omega;
        acc[0] -= s * kin.dirs[k][0];
        acc[1] -= s * kin.dirs[k][1];
        bias[k] = acc;
    }
    // c_a = Σ_{k≥a} m_k perp(p_k − o_a)·bias_k = Σ_{k≥a} m_k cross(p_k − o_a, bias_k)
    // split as Σ m_k cross(p_k, bias_k) − cross(o_a, Σ m_k bias_k)
    let mut c = vec![0.0; n];
    let mut s_cross = 0.0;
    let mut s_force = [0.0, 0.0];
    for a in (0..n).rev() {
        let mk = model.link_masses[a];
        s_cross += mk * cross(kin.tips[a], bias[a]);
        s_force[0] += mk * bias[a][0];
        s_force[1] += mk * bias[a][1];
        c[a] = s_cross - cross(kin.origins[a], s_force);
    }
    c
}

/// Generalized force of point forces `f_k` applied at the link tips.
pub fn point_forces_to_torques(kin: &Kinematics, forces: &[(usize, [f64; 2])]) -> Vec<f64> {
    let n = kin.tips.len();
    let mut tau = vec![0.0; n];
    for &(k, f) in forces {
        let x = kin.tips[k];
        for a in 0..=k {
            tau[a] += cross(sub(x, kin.origins[a]), f);
        }
    }
    tau
}

fn gravity_torques(kin: &Kinematics, model: &ContinuumModel) -> Vec<f64> {
    let g = model.gravity;
    if g == [0.0, 0.0] {
        return vec![0.0; kin.tips.len()];
    }
    let forces: Vec<(usize, [f64; 2])> = (0..kin.tips.len())
        .map(|k| (k, [model.link_masses[k] * g[0], model.link_masses[k] * g[1]]))
        .collect();
    point_forces_to_torques(kin, &forces).into_iter().map(|t| -t).collect()
}

pub fn dynamics_terms(state: &ContinuumState, model: &ContinuumModel) -> DynamicsTerms {
    let kin = forward_kinematics(&state.q, model);
    DynamicsTerms {
        mass: mass_matrix(&kin, model),
        coriolis: coriolis(&kin, &state.qdot, model),
        damping: state.qdot.iter().zip(&model.joint_damping).map(|(v, c)| c * v).collect(),
        stiffness: state.q.iter().zip(&model.joint_stiffness).map(|(q, k)| k * q).collect(),
        gravity: gravity_torques(&kin, model),
    }
}

/// Kinetic + elastic + limit + gravitational energy.
pub fn energy(state: &ContinuumState, model: &ContinuumModel) -> f64 {
    let kin = forward_kinematics(&state.q, model);
    let m = mass_matrix(&kin, model);
    let mv = m.mul_vec(&state.qdot);
    let kinetic = 0.5 * dot_n(&state.qdot, &mv);
    let mut elastic = 0.0;
    for (j, &q) in state.q.iter().enumerate() {
        elastic += 0.5 * model.joint_stiffness[j] * q * q;
        let over = math::abs(q) - model.joint_limit;
        if over > 0.0 {
            elastic += 0.5 * model.limit_stiffness * over * over;
        }
    }
    let grav: f64 =
        (0..kin.tips.len()).map(|k| -model.link_masses[k] * dot(model.gravity, kin.tips[k])).sum();
    kinetic + elastic + grav
}

fn dot_n(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ContactKind {
    None,
    /// Impulse `J` (N·s) along the link normal, spread over `width` seconds.
    PointImpulse { link: usize, impulse: f64, onset: f64, width: f64 },
    /// Normal force `magnitude` (N) during the first half of each period
    /// `2π/ω`, starting at `onset`.
    RotatingPusher { link: usize, magnitude: f64, omega: f64, onset: f64 },
    /// Rigid circle; every link tip inside it is pushed out.
    Cylinder { center: [f64; 2], diameter: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContactSpec {
    pub kind: ContactKind,
    /// Penalty stiffness (N/m).
    pub stiffness: f64,
    /// Penalty damping as a fraction of critical for the touching point mass.
    pub damping_ratio: f64,
}

impl Default for ContactSpec {
    fn default() -> Self {
        Self { kind: ContactKind::None, stiffness: 2000.0, damping_ratio: 1.0 }
    }
}

impl ContactSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ContactKind::None => {}
            ContactKind::PointImpulse { link, width, .. } => {
                check_link(link)?;
                positive("contact.width", width)?;
            }
            ContactKind::RotatingPusher { link, omega, .. } => {
                check_link(link)?;
                positive("contact.omega", omega)?;
            }
            ContactKind::Cylinder { diameter, center } => {
                positive("contact.diameter", diameter)?;
                if !(center[0].is_finite() && center[1].is_finite()) {
                    return Err(Error::InvalidParameter { name: "contact.center", reason: "must be finite" });
                }
            }
        }
        positive("contact.stiffness", self.stiffness)?;
        if !(self.damping_ratio >= 0.0) {
            return Err(Error::InvalidParameter { name: "contact.damping_ratio", reason: "must be >= 0" });
        }
        Ok(())
    }
}

fn check_link(link: usize) -> Result<()> {
    if link < N_JOINTS {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "contact.link", reason: "must be < 24" })
    }
}

/// Penetration of one link tip into a cylinder.
#[derive(Debug, Clone, Copy)]
struct Penetration {
    link: usize,
    depth: f64,
    normal: [f64; 2],
}

fn cylinder_penetrations(kin: &Kinematics, center: [f64; 2], diameter: f64) -> Vec<Penetration> {
    let radius = 0.5 * diameter;
    let mut out = Vec::new();
    for (k, &p) in kin.tips.iter().enumerate() {
        let r = sub(p, center);
        let dist = math::hypot(r[0], r[1]);
        if dist < radius && dist > 0.0 {
            out.push(Penetration { link: k, depth: radius - dist, normal: [r[0] / dist, r[1] / dist] });
        }
    }
    out
}

/// Point velocity of link tip `k`.
fn tip_velocity(kin: &Kinematics, qdot: &[f64], k: usize) -> [f64; 2] {
    let mut v = [0.0, 0.0];
    for a in 0..=k {
        let r = sub(kin.tips[k], kin.origins[a]);
        v[0] -= r[1] * qdot[a];
        v[1] += r[0] * qdot[a];
    }
    v
}

/// `J_cᵀ n` for a unit direction at link tip `k`.
fn normal_column(kin: &Kinematics, k: usize, n: [f64; 2]) -> Vec<f64> {
    let mut w = vec![0.0; kin.tips.len()];
    for (a, wa) in w.iter_mut().enumerate().take(k + 1) {
        *wa = cross(sub(kin.tips[k], kin.origins[a]), n);
    }
    w
}

fn critical_damping(spec: &ContactSpec, mass: f64) -> f64 {
    spec.damping_ratio * 2.0 * math::sqrt(spec.stiffness * mass)
}

/// Prescribed (state-independent) external point force at time `t`.
fn prescribed_force(kin: &Kinematics, spec: &ContactSpec, t: f64) -> Option<(usize, [f64; 2])> {
    let (link, magnitude) = match spec.kind {
        ContactKind::PointImpulse { link, impulse, onset, width } => {
            if t >= onset && t < onset + width {
                (link, impulse / width)
            } else {
                return None;
            }
        }
        ContactKind::RotatingPusher { link, magnitude, omega, onset } => {
            if t < onset {
                return None;
            }
            let period = 2.0 * core::f64::consts::PI / omega;
            let phase = math::fmod(t - onset, period);
            if phase < 0.5 * period {
                (link, magnitude)
            } else {
                return None;
            }
        }
        _ => return None,
    };
    let u = kin.dirs[link];
    Some((link, [-u[1] * magnitude, u[0] * magnitude]))
}

/// External generalized forces from the contact and the joint limits.
pub fn contact_forces(state: &ContinuumState, spec: &ContactSpec, t: f64, model: &ContinuumModel) -> Vec<f64> {
    let kin = forward_kinematics(&state.q, model);
    let mut tau = external_point_torques(&kin, &state.qdot, spec, t, model);
    let lim = limit_torques(&state.q, &state.qdot, model);
    for (a, b) in tau.iter_mut().zip(lim) {
        *a += b;
    }
    tau
}

fn external_point_torques(
    kin: &Kinematics,
    qdot: &[f64],
    spec: &ContactSpec,
    t: f64,
    model: &ContinuumModel,
) -> Vec<f64> {
    let mut forces = Vec::new();
    if let Some(f) = prescribed_force(kin, spec, t) {
        forces.push(f);
    }
    if let ContactKind::Cylinder { center, diameter } = spec.kind {
        for p in cylinder_penetrations(kin, center, diameter) {
            let vn = dot(tip_velocity(kin, qdot, p.link), p.normal);
            let c = critical_damping(spec, model.link_masses[p.link]);
            let mag = (spec.stiffness * p.depth - c * vn).max(0.0);
            forces.push((p.link, [mag * p.normal[0], mag * p.normal[1]]));
        }
    }
    point_forces_to_torques(kin, &forces)
}

fn limit_torques(q: &[f64], qdot: &[f64], model: &ContinuumModel) -> Vec<f64> {
    q.iter()
        .zip(qdot)
        .map(|(&q, &v)| {
            let lim = model.joint_limit;
            if q > lim {
                -model.limit_stiffness * (q - lim) - model.limit_damping * v
            } else if q < -lim {
                -model.limit_stiffness * (q + lim) - model.limit_damping * v
            } else {
                0.0
            }
        })
        .collect()
}

/// Whether any link tip is inside the cylinder.
pub fn in_contact(q: &[f64], spec: &ContactSpec, model: &ContinuumModel) -> bool {
    match spec.kind {
        ContactKind::Cylinder { center, diameter } => {
            !cylinder_penetrations(&forward_kinematics(q, model), center, diameter).is_empty()
        }
        _ => false,
    }
}

/// Impact speed of a spring-launched projectile, `√(k_s/m)·Δx`.
pub fn spring_gun_velocity(k_s: f64, m_eff: f64, delta_x: f64) -> Result<f64> {
    positive("spring_gun.k_s", k_s)?;
    positive("spring_gun.m_eff", m_eff)?;
    if !(delta_x >= 0.0 && delta_x.is_finite()) {
        return Err(Error::InvalidParameter { name: "spring_gun.delta_x", reason: "must be >= 0" });
    }
    Ok(math::sqrt(k_s / m_eff) * delta_x)
}

/// First-order lag of the observed tendon force towards the command.
pub fn tendon_force_tracker(f_cmd: [f64; 2], f_prev: [f64; 2], dt: f64, tau_f: f64) -> [f64; 2] {
    let a = dt / tau_f;
    [0, 1].map(|i| (f_prev[i] + a * (f_cmd[i] - f_prev[i])).max(0.0))
}

/// Winch seen from the tendon, with its force tracker.
///
/// Each substep the tendon force moves a fraction `β = h/τ_F` towards
/// `F_d − M_w ℓ̈ − B_w ℓ̇`, where `F_d` is the static motor-side pull and
/// `M_w = J_eq/r²`, `B_w = b_eq/r²` are the reflected rotor mass and damping.
/// The rotor terms are taken at the end of the substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendonDrive {
    pub desired: [f64; 2],
    pub winch_mass: f64,
    pub winch_damping: f64,
    pub tau_f: f64,
}

/// Outcome of one substep.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: ContinuumState,
    /// Tendon forces acting over the substep (N).
    pub forces: [f64; 2],
}

/// One linearly-implicit substep.
///
/// Solves `A q̇' = M q̇ + h τ` with
/// `A = M + h(D + D_c) + h²(K + K_L + K_c) + Σ β(M_w + h B_w) J_iᵀJ_i`:
/// stiffness, damping, joint-limit and contact penalties and the winch load
/// are evaluated at the end of the step, inertia and velocity products at the
/// start. `q' = q + h q̇'`.
fn implicit_step(
    state: &ContinuumState,
    tendon: Option<&TendonDrive>,
    f_prev: [f64; 2],
    spec: &ContactSpec,
    t: f64,
    h: f64,
    model: &ContinuumModel,
) -> Result<StepOutput> {
    let n = state.q.len();
    let kin = forward_kinematics(&state.q, model);
    let mass = mass_matrix(&kin, model);
    let c = coriolis(&kin, &state.qdot, model);
    let g = gravity_torques(&kin, model);
    let [j0, j1] = tendon_jacobian(&state.q, model);
    let jac = [&j0, &j1];

    let mut base = mass.clone();
    let rhs = mass.mul_vec(&state.qdot);
    let mut diag = vec![0.0; n];
    let mut force = vec![0.0; n];
    for j in 0..n {
        let q = state.q[j];
        let mut k_eff = model.joint_stiffness[j];
        let mut d_eff = model.joint_damping[j];
        let mut f = -model.joint_stiffness[j] * q - c[j] - g[j];
        let lim = model.joint_limit;
        if q > lim || q < -lim {
            let over = if q > lim { q - lim } else { q + lim };
            k_eff += model.limit_stiffness;
            d_eff += model.limit_damping;
            f -= model.limit_stiffness * over;
        }
        diag[j] = h * d_eff + h * h * k_eff;
        force[j] = f;
    }
    base.add_diagonal(&diag, 1.0);

    // Cylinder penalties: spring force at the current pose, stiffness and
    // damping implicit along the contact normal.
    if let ContactKind::Cylinder { center, diameter } = spec.kind {
        for p in cylinder_penetrations(&kin, center, diameter) {
            let w = normal_column(&kin, p.link, p.normal);
            let cd = critical_damping(spec, model.link_masses[p.link]);
            base.add_outer(&w, h * cd + h * h * spec.stiffness);
            for (fa, wa) in force.iter_mut().zip(&w) {
                *fa += spec.stiffness * p.depth * wa;
            }
        }
    }
    if let Some((link, f)) = prescribed_force(&kin, spec, t) {
        for (fa, ta) in force.iter_mut().zip(point_forces_to_torques(&kin, &[(link, f)])) {
            *fa += ta;
        }
    }

    let rates = [dot_n(&j0, &state.qdot), dot_n(&j1, &state.qdot)];
    let mut active = [true, true];
    loop {
        let mut a = base.clone();
        let mut r = rhs.clone();
        let mut explicit = [0.0; 2];
        let mut gain = [0.0; 2];
        for i in 0..2 {
            if !active[i] {
                continue;
            }
            match tendon {
                Some(d) => {
                    let beta = (h / d.tau_f).min(1.0);
                    explicit[i] = (1.0 - beta) * f_prev[i]
                        + beta * d.desired[i]
                        + beta * d.winch_mass / h * rates[i];
                    gain[i] = beta * (d.winch_mass / h + d.winch_damping);
                    a.add_outer(jac[i], h * gain[i]);
                }
                None => explicit[i] = f_prev[i],
            }
        }
        for a_ in 0..n {
            let pull = j0[a_] * explicit[0] + j1[a_] * explicit[1];
            r[a_] += h * (force[a_] + pull);
        }
        let chol = Cholesky::factor(&a)?;
        chol.solve_in_place(&mut r);
        let qdot = r;
        let mut forces = [0.0; 2];
        let mut changed = false;
        for i in 0..2 {
            if active[i] {
                forces[i] = explicit[i] - gain[i] * dot_n(jac[i], &qdot);
                if forces[i] < 0.0 {
                    active[i] = false;
                    changed = true;
                }
            }
        }
        if changed {
            continue;
        }
        let q = state.q.iter().zip(&qdot).map(|(q, v)| q + h * v).collect();
        return Ok(StepOutput { state: ContinuumState { q, qdot }, forces });
    }
}

/// Advances the chain by `dt` with the tendon forces held at `f_obs`.
pub fn step_dynamics(
    state: &ContinuumState,
    f_obs: [f64; 2],
    spec: &ContactSpec,
    t: f64,
    dt: f64,
    model: &ContinuumModel,
) -> Result<ContinuumState> {
    let f = [f_obs[0].max(0.0), f_obs[1].max(0.0)];
    Ok(implicit_step(state, None, f, spec, t, dt, model)?.state)
}

/// Advances the chain by `h` with the tendons coupled to their winches.
pub fn step_coupled(
    state: &ContinuumState,
    drive: &TendonDrive,
    f_prev: [f64; 2],
    spec: &ContactSpec,
    t: f64,
    h: f64,
    model: &ContinuumModel,
) -> Result<StepOutput> {
    implicit_step(state, Some(drive), f_prev, spec, t, h, model)
}
