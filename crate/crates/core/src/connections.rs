//! Connections between Lyapunov orbits: asymptotic foot-points, phase
//! shifts and channels continued in the anchor abscissa x*.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{field_ch4bp, j4, ModelParams, PhaseState};
use crate::error::{Error, Result};
use crate::integrator::{propagate, propagate_end, Ch4bp, IntegratorConfig, Trajectory};
use crate::manifolds::{
    find_symmetric_connection, globalize_to_cut, seed_manifold, BranchSign, ConnectionCandidate, ConnectionType,
    ManifoldKind, Section,
};
use crate::numerics::brent_fallible;
use crate::orbits::{orbit_at, LyapunovOrbit};

/// Knobs for the connection search and the foot-point computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionConfig {
    pub n_seeds: usize,
    pub displacement: f64,
    /// Legs stop once the trajectory is this close to the orbit.
    pub approach_tol: f64,
    /// Maximum leg length, in periods.
    pub max_periods: f64,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        Self { n_seeds: 2000, displacement: 1e-6, approach_tol: 3e-4, max_periods: 12.0 }
    }
}

/// Linearized asymptotics of one end of a connection: beyond the leg the
/// orbit is k₀ plus a multiple of the decaying Floquet mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    /// Signed time at which the leg ends.
    pub t_end: f64,
    /// Orbit phase matched at the leg end (in [0, 1)).
    pub theta_end: f64,
    /// Coefficient along the normalized fiber direction.
    pub coeff: f64,
    /// Leftover component along the expanding direction (diagnostic).
    pub residual: f64,
    pub multiplier: f64,
    pub eigvec: [f64; 4],
}

impl Asymptote {
    /// Asymptotic phase: θ_end − t_end/T.
    pub fn phase(&self, period: f64) -> f64 {
        self.theta_end - self.t_end / period
    }
}

/// Foot-points and phase shift of a connection point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionPoint {
    pub z: PhaseState,
    pub kind: ConnectionType,
    pub x_star: f64,
    pub period: f64,
    /// Backward asymptotic phase on the source orbit, in [0, 1).
    pub theta_minus: f64,
    /// Forward asymptotic phase on the target orbit, in [0, 1).
    pub theta_plus: f64,
    /// Foot-points k₀(θ±).
    pub z_minus: PhaseState,
    pub z_plus: PhaseState,
    /// Returns of the connection to the anchors' neighbourhood (the orbit
    /// at phase 0 plus the decaying residue).
    pub z_minus_return: PhaseState,
    pub z_plus_return: PhaseState,
    /// θ⁺ − θ⁻ with θ⁺ lifted to (−1, 0], and its reduction to [0, 1).
    pub delta: f64,
    pub delta_mod: f64,
}

impl ConnectionPoint {
    pub fn csv_header() -> &'static [&'static str] {
        &[
            "x_star", "theta_minus", "theta_plus", "delta", "delta_mod", "x", "y", "xdot", "ydot", "zm_x", "zm_y",
            "zm_xdot", "zm_ydot", "zp_x", "zp_y", "zp_xdot", "zp_ydot",
        ]
    }

    pub fn csv_values(&self) -> Vec<f64> {
        let mut v = vec![self.x_star, self.theta_minus, self.theta_plus, self.delta, self.delta_mod];
        v.extend(self.z.velocity_form());
        v.extend(self.z_minus_return.velocity_form());
        v.extend(self.z_plus_return.velocity_form());
        v
    }
}

/// A connection with everything needed to evaluate it for all times.
#[derive(Debug, Clone)]
pub struct Connection {
    pub point: ConnectionPoint,
    pub candidate: ConnectionCandidate,
    pub source: Arc<LyapunovOrbit>,
    pub target: Arc<LyapunovOrbit>,
    forward: Trajectory<4>,
    backward: Trajectory<4>,
    pub fwd: Asymptote,
    pub bwd: Asymptote,
}

impl Connection {
    /// Φ^τ(z) for any real τ.
    pub fn state(&self, tau: f64) -> PhaseState {
        if tau >= 0.0 {
            if tau <= self.fwd.t_end {
                self.forward.state(tau)
            } else {
                tail(&self.target, &self.fwd, tau)
            }
        } else if tau >= self.bwd.t_end {
            self.backward.state(tau)
        } else {
            tail(&self.source, &self.bwd, tau)
        }
    }

    /// Times where the evaluation switches between leg and tail.
    pub fn breakpoints(&self) -> [f64; 3] {
        [self.bwd.t_end, 0.0, self.fwd.t_end]
    }

    /// Orbit point that Φ^τ(z) shadows as τ → −∞ (source) or +∞ (target).
    pub fn shadow_minus(&self, tau: f64) -> PhaseState {
        self.source.k0(self.point.theta_minus + tau / self.source.period())
    }

    /// θ⁺ in (−1, 0], the representative paired with θ⁻ ∈ [0, 1).
    pub fn theta_plus_lifted(&self) -> f64 {
        self.point.theta_minus + self.point.delta
    }

    pub fn shadow_plus(&self, tau: f64) -> PhaseState {
        self.target.k0(self.point.theta_plus + tau / self.target.period())
    }
}

fn tail(orbit: &LyapunovOrbit, a: &Asymptote, tau: f64) -> PhaseState {
    let period = orbit.period();
    let t0 = a.theta_end * period;
    let t = t0 + (tau - a.t_end);
    let n = (t / period).floor();
    let r = t - n * period;
    let v = Vector4::from(a.eigvec);
    let norm = (orbit.stm_local(t0) * v).norm();
    let disp = orbit.stm_local(r) * v * (a.coeff * a.multiplier.powi(n as i32) / norm);
    orbit.state_at(t) + PhaseState::from_vector(&disp)
}

/// Coefficients of w − k₀(θ) in the basis {fiber, other, flow, ∇H}.
fn fiber_coords(orbit: &LyapunovOrbit, fiber: &Vector4<f64>, other: &Vector4<f64>, w: &PhaseState, theta: f64) -> Result<Vector4<f64>> {
    let t = theta.rem_euclid(1.0) * orbit.period();
    let phi = orbit.stm_local(t);
    let (e1, e2) = (phi * fiber, phi * other);
    let k = orbit.state_at(t);
    let f = field_ch4bp(&k, &orbit.params)?.to_vector();
    let g = -j4() * f;
    let b = Matrix4::from_columns(&[e1 / e1.norm(), e2 / e2.norm(), f, g]);
    let rhs = (*w - k).to_vector();
    b.lu().solve(&rhs).ok_or_else(|| Error::Footpoint("singular Floquet basis".into()))
}

/// Integrates z in the direction of `sign` until it is within `approach_tol`
/// of `orbit`, then projects the end point on the orbit along the fiber
/// (stable fiber forwards, unstable fiber backwards).
fn asymptote(
    z: &PhaseState,
    orbit: &LyapunovOrbit,
    sign: f64,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<(Trajectory<4>, Asymptote)> {
    let period = orbit.period();
    let sys = Ch4bp(orbit.params);
    let chunk = 0.1 * period;
    let mut t = 0.0;
    let mut w = *z;
    loop {
        let (d, _) = orbit.distance(&w);
        if d < ccfg.approach_tol {
            break;
        }
        if t >= ccfg.max_periods * period {
            return Err(Error::Footpoint(format!("still {d:.2e} away from the orbit after {} periods", ccfg.max_periods)));
        }
        w = PhaseState::from_slice(&propagate_end(&sys, w.to_array(), sign * t, sign * (t + chunk), cfg)?);
        t += chunk;
    }
    let leg = propagate(&sys, z.to_array(), 0.0, sign * t, cfg)?;
    let w = if t > 0.0 { PhaseState::from_slice(&leg.end()) } else { *z };
    let (_, th0) = orbit.distance(&w);
    let (lu, vu, ls, vs) = orbit.hyperbolic_pair()?;
    let (mult, fiber, other) = if sign > 0.0 { (ls, vs, vu) } else { (lu, vu, vs) };
    let cf = |th: f64| -> Result<f64> { Ok(fiber_coords(orbit, &fiber, &other, &w, th)?[2]) };
    let th = brent_fallible(cf, th0 - 0.02, th0 + 0.02, 1e-15, 200)
        .map_err(|e| Error::Footpoint(format!("phase projection: {e}")))?;
    let c = fiber_coords(orbit, &fiber, &other, &w, th)?;
    Ok((
        leg,
        Asymptote {
            t_end: sign * t,
            theta_end: th.rem_euclid(1.0),
            coeff: c[0],
            residual: c[1],
            multiplier: mult,
            eigvec: [fiber[0], fiber[1], fiber[2], fiber[3]],
        },
    ))
}

/// Foot-points of a connection point z whose α-limit is `source` and
/// ω-limit is `target`.
pub fn compute_footpoints(
    candidate: &ConnectionCandidate,
    source: Arc<LyapunovOrbit>,
    target: Arc<LyapunovOrbit>,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<Connection> {
    let z = candidate.state;
    let (fw, bw) = rayon::join(
        || asymptote(&z, &target, 1.0, cfg, ccfg),
        || asymptote(&z, &source, -1.0, cfg, ccfg),
    );
    let (forward, fwd) = fw?;
    let (backward, bwd) = bw?;
    let theta_minus = bwd.phase(source.period()).rem_euclid(1.0);
    let theta_plus = fwd.phase(target.period()).rem_euclid(1.0);
    let lifted = if theta_plus > 0.0 { theta_plus - 1.0 } else { theta_plus };
    let delta = lifted - theta_minus;
    let mut conn = Connection {
        point: ConnectionPoint {
            z,
            kind: candidate.kind,
            x_star: target.orbit.x_star.abs(),
            period: target.period(),
            theta_minus,
            theta_plus,
            z_minus: source.k0(theta_minus),
            z_plus: target.k0(theta_plus),
            z_minus_return: z,
            z_plus_return: z,
            delta,
            delta_mod: delta.rem_euclid(1.0),
        },
        candidate: *candidate,
        source,
        target,
        forward,
        backward,
        fwd,
        bwd,
    };
    // First time beyond one period past the leg where the shadow is at the anchor.
    let tp = conn.target.period();
    let kp = (conn.fwd.t_end / tp + theta_plus + 1.0).ceil();
    conn.point.z_plus_return = conn.state((kp - theta_plus) * tp);
    let tm = conn.source.period();
    let km = (conn.bwd.t_end / tm + theta_minus - 1.0).floor();
    conn.point.z_minus_return = conn.state((km - theta_minus) * tm);
    Ok(conn)
}

/// Phase shift θ⁺ − θ⁻ of a connection.
pub fn phase_shift(conn: &Connection) -> f64 {
    conn.point.delta
}

/// The four channels used for diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelLabel {
    HomZ1,
    HomZ2,
    HetZ1,
    HetZ2,
}

impl ChannelLabel {
    pub const ALL: [ChannelLabel; 4] = [Self::HomZ1, Self::HomZ2, Self::HetZ1, Self::HetZ2];

    pub fn kind(self) -> ConnectionType {
        match self {
            Self::HomZ1 | Self::HomZ2 => ConnectionType::Homoclinic,
            Self::HetZ1 | Self::HetZ2 => ConnectionType::Heteroclinic,
        }
    }

    /// Index among the symmetric points sorted by the section's position coordinate.
    pub fn index(self) -> usize {
        match self {
            Self::HomZ1 | Self::HetZ1 => 0,
            Self::HomZ2 | Self::HetZ2 => 1,
        }
    }

    /// θ-window on which the channel's scattering map is defined.
    pub fn window(self) -> (f64, f64) {
        match self {
            Self::HomZ1 | Self::HetZ1 => (-1.0, 0.0),
            Self::HomZ2 | Self::HetZ2 => (-0.6, 0.4),
        }
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HomZ1 => "hom-z1",
            Self::HomZ2 => "hom-z2",
            Self::HetZ1 => "het-z1",
            Self::HetZ2 => "het-z2",
        })
    }
}

impl FromStr for ChannelLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown channel '{s}' (hom-z1, hom-z2, het-z1, het-z2)")))
    }
}

/// (source, target) orbits of the connections of one type at anchor x*.
pub fn connection_orbits(
    x_star: f64,
    kind: ConnectionType,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<(Arc<LyapunovOrbit>, Arc<LyapunovOrbit>)> {
    let l1 = Arc::new(orbit_at(x_star, params, cfg)?);
    Ok(match kind {
        ConnectionType::Homoclinic => (l1.clone(), l1),
        ConnectionType::Heteroclinic => (Arc::new(l1.mirror(cfg)?), l1),
    })
}

/// Section and cut index on which symmetric points of `kind` are sought.
pub fn search_section(kind: ConnectionType) -> (Section, usize) {
    match kind {
        ConnectionType::Homoclinic => (Section::Sx, 1),
        ConnectionType::Heteroclinic => (Section::Sy, 2),
    }
}

/// Symmetric points on the inner unstable branch of `source`, sorted by
/// position along the section.
pub fn symmetric_points_of(
    source: &LyapunovOrbit,
    kind: ConnectionType,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<Vec<ConnectionCandidate>> {
    let (section, cut_index) = search_section(kind);
    let branch = seed_manifold(source, ManifoldKind::Unstable, BranchSign::Inner, ccfg.displacement, ccfg.n_seeds)?;
    let cut = globalize_to_cut(&branch, section, cut_index, cfg)?;
    find_symmetric_connection(&branch, &cut, cfg)
}

/// Symmetric connection points of one type for the orbit with anchor x*.
/// Returns (source, target, candidates).
pub fn symmetric_points(
    x_star: f64,
    kind: ConnectionType,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<(Arc<LyapunovOrbit>, Arc<LyapunovOrbit>, Vec<ConnectionCandidate>)> {
    let (source, target) = connection_orbits(x_star, kind, params, cfg)?;
    let cands = symmetric_points_of(&source, kind, cfg, ccfg)?;
    Ok((source, target, cands))
}

/// Picks the channel's point among sorted candidates and computes its foot-points.
pub fn connection_from_candidates(
    label: ChannelLabel,
    cands: &[ConnectionCandidate],
    source: Arc<LyapunovOrbit>,
    target: Arc<LyapunovOrbit>,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<Connection> {
    if cands.len() != 2 {
        return Err(Error::Connection(format!(
            "expected two symmetric points at x* = {}, found {}",
            target.orbit.x_star,
            cands.len()
        )));
    }
    compute_footpoints(&cands[label.index()], source, target, cfg, ccfg)
}

/// One channel connection at x*.
pub fn channel_connection(
    x_star: f64,
    label: ChannelLabel,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<Connection> {
    let (source, target, cands) = symmetric_points(x_star, label.kind(), params, cfg, ccfg)?;
    connection_from_candidates(label, &cands, source, target, cfg, ccfg)
}

/// A family of connections continued in x*.
#[derive(Debug, Clone)]
pub struct Channel {
    pub label: ChannelLabel,
    pub window: (f64, f64),
    pub connections: Vec<Connection>,
}

impl Channel {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self.connections.iter().map(|c| c.point.csv_values()).collect();
        crate::io::csv(ConnectionPoint::csv_header(), &rows)
    }
}

/// Builds a channel over the given anchors (in parallel); phase shifts
/// must vary continuously along it.
pub fn build_channel(
    x_values: &[f64],
    label: ChannelLabel,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    ccfg: &ConnectionConfig,
) -> Result<Channel> {
    let conns: Result<Vec<Connection>> =
        x_values.par_iter().map(|&x| channel_connection(x, label, params, cfg, ccfg)).collect();
    assemble_channel(label, conns?)
}

/// Orders connections by x* and checks the phase shift for branch jumps.
pub fn assemble_channel(label: ChannelLabel, mut connections: Vec<Connection>) -> Result<Channel> {
    connections.sort_by(|a, b| a.point.x_star.total_cmp(&b.point.x_star));
    for w in connections.windows(2) {
        let jump = (w[1].point.delta - w[0].point.delta).abs();
        if jump > 0.2 {
            return Err(Error::Continuation(format!(
                "phase shift jumps by {jump:.3} between x* = {} and {}",
                w[0].point.x_star, w[1].point.x_star
            )));
        }
    }
    Ok(Channel { label, window: label.window(), connections })
}
