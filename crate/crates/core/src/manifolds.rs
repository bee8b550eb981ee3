//! Stable/unstable manifolds of Lyapunov orbits, their Poincaré cuts and
//! symmetric intersection points.

use nalgebra::Vector4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_ch4bp, omega_eff, ModelParams, PhaseState, Symmetry};
use crate::error::{Error, Result};
use crate::integrator::{flow_to_section, Ch4bp, Crossing, IntegratorConfig, SectionSpec};
use crate::numerics::brent_fallible;
use crate::orbits::{LyapunovOrbit, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

/// Side of the orbit the branch leaves from: `Inner` points towards the
/// small body at the origin, `Outer` away from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchSign {
    Inner,
    Outer,
}

/// The two sections used for connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    /// {y = 0, p_y < 0}, coordinates (x, ẋ).
    Sx,
    /// {x = 0, pₓ > 0}, coordinates (y, ẏ).
    Sy,
}

impl Section {
    pub fn spec(self) -> SectionSpec {
        match self {
            Section::Sx => SectionSpec::sx(),
            Section::Sy => SectionSpec::sy(),
        }
    }

    /// In-section (position, velocity) coordinates.
    pub fn coords(self, z: &PhaseState) -> (f64, f64) {
        match self {
            Section::Sx => (z.x, z.xdot()),
            Section::Sy => (z.y, z.ydot()),
        }
    }

    /// The velocity component that vanishes at symmetric connections.
    pub fn symmetric_coordinate(self, z: &PhaseState) -> f64 {
        self.coords(z).1
    }

    /// Reversor that fixes the section's symmetric points.
    pub fn reversor(self) -> Symmetry {
        match self {
            Section::Sx => Symmetry::S,
            Section::Sy => Symmetry::SPrime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSeed {
    pub theta: f64,
    pub state: PhaseState,
    /// Energy offset from the orbit, O(displacement²).
    pub energy_error: f64,
}

/// Linear approximation of one manifold branch.
#[derive(Debug, Clone)]
pub struct ManifoldBranch<'a> {
    pub orbit: &'a LyapunovOrbit,
    pub kind: ManifoldKind,
    pub sign: BranchSign,
    pub displacement: f64,
    /// Oriented eigenvector at the anchor.
    pub eigvec: Vector4<f64>,
    pub multiplier: f64,
    pub seeds: Vec<ManifoldSeed>,
}

impl<'a> ManifoldBranch<'a> {
    /// Seed at an arbitrary phase (used for refinement).
    pub fn seed_at(&self, theta: f64) -> PhaseState {
        let t = theta.rem_euclid(1.0) * self.orbit.period();
        let v = self.orbit.stm_local(t) * self.eigvec;
        let base = self.orbit.state_at(t);
        base + PhaseState::from_vector(&(v * (self.displacement / v.norm())))
    }

    fn time_sign(&self) -> f64 {
        match self.kind {
            ManifoldKind::Unstable => 1.0,
            ManifoldKind::Stable => -1.0,
        }
    }

    /// Globalizes the seed at `theta` to the n-th crossing of `section`.
    pub fn flow_seed(&self, theta: f64, section: Section, n: usize, cfg: &IntegratorConfig) -> Result<Crossing<4>> {
        let z = self.seed_at(theta);
        flow_to_section(
            &Ch4bp(self.orbit.params),
            z.to_array(),
            0.0,
            &section.spec(),
            n,
            self.time_sign() * cfg.max_time,
            cfg,
        )
    }
}

/// Seeds `n_seeds` points uniformly in phase along the chosen eigen-direction.
pub fn seed_manifold<'a>(
    orbit: &'a LyapunovOrbit,
    kind: ManifoldKind,
    sign: BranchSign,
    displacement: f64,
    n_seeds: usize,
) -> Result<ManifoldBranch<'a>> {
    if n_seeds == 0 {
        return Err(Error::Seeding("n_seeds must be positive".into()));
    }
    let (lu, vu, ls, vs) = orbit.hyperbolic_pair()?;
    let (mult, mut v) = match kind {
        ManifoldKind::Unstable => (lu, vu),
        ManifoldKind::Stable => (ls, vs),
    };
    // Inner: x-component points from the anchor towards the origin.
    let towards_origin = -orbit.anchor().x.signum();
    let want = match sign {
        BranchSign::Inner => towards_origin,
        BranchSign::Outer => -towards_origin,
    };
    if v[0].signum() != want {
        v = -v;
    }
    let mut branch =
        ManifoldBranch { orbit, kind, sign, displacement, eigvec: v, multiplier: mult, seeds: Vec::with_capacity(n_seeds) };
    let h0 = orbit.orbit.energy;
    for i in 0..n_seeds {
        let theta = i as f64 / n_seeds as f64;
        let state = branch.seed_at(theta);
        let energy_error = energy_ch4bp(&state, &orbit.params)? - h0;
        branch.seeds.push(ManifoldSeed { theta, state, energy_error });
    }
    Ok(branch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPoint {
    pub theta_seed: f64,
    pub state: PhaseState,
    /// Signed flight time from the seed.
    pub time: f64,
}

impl CutPoint {
    pub fn coords(&self, section: Section) -> (f64, f64) {
        section.coords(&self.state)
    }
}

/// Intersection of a branch with a section, ordered by seed phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionCut {
    pub section: Section,
    pub cut_index: usize,
    pub points: Vec<CutPoint>,
    /// Seeds that failed (collision, no crossing), with the reason.
    pub dropped: Vec<(f64, String)>,
}

impl SectionCut {
    /// Image under the section's reversor (maps unstable cuts to stable ones).
    pub fn mirrored(&self) -> SectionCut {
        let r = self.section.reversor();
        SectionCut {
            section: self.section,
            cut_index: self.cut_index,
            points: self
                .points
                .iter()
                .map(|p| CutPoint { theta_seed: p.theta_seed, state: r.apply(&p.state), time: -p.time })
                .collect(),
            dropped: self.dropped.clone(),
        }
    }

    /// CSV: theta_seed, time, x, y, px, py, u, v (section coordinates).
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| {
                let (u, v) = p.coords(self.section);
                vec![p.theta_seed, p.time, p.state.x, p.state.y, p.state.px, p.state.py, u, v]
            })
            .collect();
        crate::io::csv(&["theta_seed", "time", "x", "y", "px", "py", "u", "v"], &rows)
    }
}

/// Propagates every seed to its `cut_index`-th crossing (in parallel).
pub fn globalize_to_cut(
    branch: &ManifoldBranch<'_>,
    section: Section,
    cut_index: usize,
    cfg: &IntegratorConfig,
) -> Result<SectionCut> {
    let results: Vec<(f64, Result<Crossing<4>>)> =
        branch.seeds.par_iter().map(|s| (s.theta, branch.flow_seed(s.theta, section, cut_index, cfg))).collect();
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (theta, r) in results {
        match r {
            Ok(c) => points.push(CutPoint { theta_seed: theta, state: c.state(), time: c.t }),
            Err(e) => dropped.push((theta, e.to_string())),
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCut);
    }
    Ok(SectionCut { section, cut_index, points, dropped })
}

/// On-section locus of tangential crossings at energy h, sampled over the
/// position coordinate: returns (position, ±velocity) pairs.
pub fn tangency_curve(h: f64, section: Section, params: &ModelParams, n: usize, range: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..n {
        let u = range.0 + (range.1 - range.0) * i as f64 / (n.max(2) - 1) as f64;
        let (x, y) = match section {
            Section::Sx => (u, 0.0),
            Section::Sy => (0.0, u),
        };
        if x.hypot(y) < 1e-6 {
            continue;
        }
        let w = 2.0 * (h + omega_eff(x, y, params)?);
        if w >= 0.0 {
            let v = w.sqrt();
            out.push((u, v));
            out.push((u, -v));
        }
    }
    Ok(out)
}

/// Phase-space state of a tangency-curve sample.
pub fn tangency_state(section: Section, u: f64, v: f64) -> PhaseState {
    match section {
        // ẏ = 0 on y = 0.
        Section::Sx => PhaseState::from_velocity(u, 0.0, v, 0.0),
        // ẋ = 0 on x = 0.
        Section::Sy => PhaseState::from_velocity(0.0, u, 0.0, v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConnectionType {
    Homoclinic,
    Heteroclinic,
}

/// A symmetric point of an unstable cut, hence a connection by reversibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCandidate {
    pub state: PhaseState,
    pub kind: ConnectionType,
    pub source: Side,
    pub target: Side,
    pub symmetric: bool,
    pub section: Section,
    pub cut_index: usize,
    /// Seed phase and flight time of the generating trajectory.
    pub seed_theta: f64,
    pub flight_time: f64,
}

const SYM_TOL: f64 = 1e-9;

/// Brackets sign changes of the symmetric coordinate along the cut and
/// refines each by re-integrating from interpolated seeds. Candidates are
/// sorted by the in-section position coordinate.
pub fn find_symmetric_connection(
    branch: &ManifoldBranch<'_>,
    cut: &SectionCut,
    cfg: &IntegratorConfig,
) -> Result<Vec<ConnectionCandidate>> {
    let section = cut.section;
    let pts = &cut.points;
    let n = pts.len();
    let period = branch.orbit.period();
    let dtheta = 1.0 / branch.seeds.len().max(1) as f64;
    let mut brackets = Vec::new();
    for i in 0..n {
        let a = &pts[i];
        let b = &pts[(i + 1) % n];
        let mut tb = b.theta_seed;
        if i + 1 == n {
            tb += 1.0;
        }
        // Only adjacent seeds on a continuous piece of the cut.
        if (tb - a.theta_seed) > 1.5 * dtheta || (a.time - b.time).abs() > 0.5 * period {
            continue;
        }
        let (ga, gb) = (section.symmetric_coordinate(&a.state), section.symmetric_coordinate(&b.state));
        if ga.signum() != gb.signum() {
            brackets.push((a.theta_seed, tb));
        }
    }
    let found: Vec<Option<ConnectionCandidate>> = brackets
        .par_iter()
        .map(|&(ta, tb)| refine_candidate(branch, section, cut.cut_index, ta, tb, cfg).ok())
        .collect();
    let mut out: Vec<ConnectionCandidate> = found.into_iter().flatten().collect();
    out.sort_by(|a, b| section.coords(&a.state).0.total_cmp(&section.coords(&b.state).0));
    Ok(out)
}

fn refine_candidate(
    branch: &ManifoldBranch<'_>,
    section: Section,
    cut_index: usize,
    ta: f64,
    tb: f64,
    cfg: &IntegratorConfig,
) -> Result<ConnectionCandidate> {
    let g = |th: f64| -> Result<f64> {
        Ok(section.symmetric_coordinate(&branch.flow_seed(th, section, cut_index, cfg)?.state()))
    };
    let th = brent_fallible(g, ta, tb, 1e-15, 200)?;
    let c = branch.flow_seed(th, section, cut_index, cfg)?;
    let z = c.state();
    if section.symmetric_coordinate(&z).abs() > SYM_TOL {
        return Err(Error::Connection(format!("bracket at θ = {th} is a discontinuity, not a root")));
    }
    let (kind, target) = match (branch.orbit.orbit.side, section) {
        (s, Section::Sx) => (ConnectionType::Homoclinic, s),
        (Side::L1, Section::Sy) => (ConnectionType::Heteroclinic, Side::L2),
        (Side::L2, Section::Sy) => (ConnectionType::Heteroclinic, Side::L1),
    };
    Ok(ConnectionCandidate {
        state: z,
        kind,
        source: branch.orbit.orbit.side,
        target,
        symmetric: true,
        section,
        cut_index,
        seed_theta: th.rem_euclid(1.0),
        flight_time: c.t,
    })
}

/// Acute angle (radians) between two cuts at a candidate, from chord
/// tangents of the cut samples nearest to it.
pub fn transversality_angle(cut_u: &SectionCut, cut_s: &SectionCut, candidate: &ConnectionCandidate) -> Result<f64> {
    let t_u = cut_tangent(cut_u, candidate)?;
    let t_s = cut_tangent(cut_s, candidate)?;
    let cross = t_u.0 * t_s.1 - t_u.1 * t_s.0;
    let dot = t_u.0 * t_s.0 + t_u.1 * t_s.1;
    let ang = cross.abs().atan2(dot.abs());
    Ok(ang)
}

fn cut_tangent(cut: &SectionCut, c: &ConnectionCandidate) -> Result<(f64, f64)> {
    let (u0, v0) = cut.section.coords(&c.state);
    let pts = &cut.points;
    if pts.len() < 3 {
        return Err(Error::Resolution("cut has fewer than three points".into()));
    }
    let (i, d) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (u, v) = p.coords(cut.section);
            (i, (u - u0).hypot(v - v0))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let n = pts.len();
    let (a, b) = (&pts[(i + n - 1) % n], &pts[(i + 1) % n]);
    let (ua, va) = a.coords(cut.section);
    let (ub, vb) = b.coords(cut.section);
    let chord = (ub - ua).hypot(vb - va);
    if d > 0.05 || chord > 0.1 || chord == 0.0 {
        return Err(Error::Resolution(format!("cut not resolved near the candidate (gap {d:.2e}, chord {chord:.2e})")));
    }
    Ok(((ub - ua) / chord, (vb - va) / chord))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangency_points_satisfy_defining_equations() {
        let p = ModelParams::default();
        let h = -2.15;
        for (u, v) in tangency_curve(h, Section::Sx, &p, 50, (-1.2, 1.2)).unwrap() {
            let z = tangency_state(Section::Sx, u, v);
            assert!(z.y == 0.0 && z.ydot().abs() < 1e-15);
            assert!((energy_ch4bp(&z, &p).unwrap() - h).abs() < 1e-10);
        }
    }
}
