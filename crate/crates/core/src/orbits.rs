//! Equilibria, Hill regions and the planar Lyapunov families around L₁/L₂.

use nalgebra::{Complex, Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_ch4bp, jacobian, omega_eff, ModelParams, PhaseState, Symmetry, VariationalState};
use crate::error::{Error, Result};
use crate::integrator::{
    propagate, propagate_end, propagate_to_section, IntegratorConfig, SectionSpec, Trajectory, Variational,
    WithAction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumLabel {
    L1,
    L2,
    L3,
    L4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    CenterSaddle,
    CenterCenter,
    ComplexSaddle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub label: EquilibriumLabel,
    pub position: (f64, f64),
    pub energy: f64,
    pub stability: Stability,
    /// (re, im) pairs of the linearization spectrum.
    pub eigenvalues: Vec<(f64, f64)>,
}

impl EquilibriumPoint {
    /// Phase state at rest in the rotating frame: pₓ = −y, p_y = x.
    pub fn state(&self) -> PhaseState {
        let (x, y) = self.position;
        PhaseState::new(x, y, -y, x)
    }
}

fn eigen_pairs(m: &Matrix4<f64>) -> Vec<(f64, f64)> {
    let mut ev: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|c: &Complex<f64>| (c.re, c.im)).collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    ev
}

fn classify(ev: &[(f64, f64)]) -> Stability {
    let tol = 1e-9;
    let real = ev.iter().filter(|(re, im)| im.abs() < tol && re.abs() > tol).count();
    let imag = ev.iter().filter(|(re, im)| re.abs() < tol && im.abs() > tol).count();
    match (real, imag) {
        (2, 2) => Stability::CenterSaddle,
        (0, 4) => Stability::CenterCenter,
        _ => Stability::ComplexSaddle,
    }
}

/// L₁ = (λ₂^{−1/3}, 0), L₂ = −L₁, L₃ = (0, λ₁^{−1/3}), L₄ = −L₃.
pub fn lagrange_points(params: &ModelParams) -> Result<[EquilibriumPoint; 4]> {
    let xe = params.lambda2.powf(-1.0 / 3.0);
    let ye = params.lambda1.powf(-1.0 / 3.0);
    let make = |label, x: f64, y: f64| -> Result<EquilibriumPoint> {
        let z = PhaseState::new(x, y, -y, x);
        let ev = eigen_pairs(&jacobian(&z, params)?);
        Ok(EquilibriumPoint {
            label,
            position: (x, y),
            energy: energy_ch4bp(&z, params)?,
            stability: classify(&ev),
            eigenvalues: ev,
        })
    };
    Ok([
        make(EquilibriumLabel::L1, xe, 0.0)?,
        make(EquilibriumLabel::L2, -xe, 0.0)?,
        make(EquilibriumLabel::L3, 0.0, ye)?,
        make(EquilibriumLabel::L4, 0.0, -ye)?,
    ])
}

/// Whether (x, y) lies in the Hill region {Ω_eff ≥ −h}.
pub fn hill_region_contains(x: f64, y: f64, h: f64, params: &ModelParams) -> Result<bool> {
    Ok(omega_eff(x, y, params)? >= -h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L1,
    L2,
}

/// Summary of a symmetric Lyapunov orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub side: Side,
    /// Abscissa of the anchor crossing of the x-axis.
    pub x_star: f64,
    /// Momentum p_y at the anchor.
    pub py_star: f64,
    pub period: f64,
    pub energy: f64,
    /// ∮ p dq over one period.
    pub action: f64,
    /// Monodromy multipliers as (re, im).
    pub monodromy_spectrum: Vec<(f64, f64)>,
    /// |p_x| at the half-period crossing after correction.
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn anchor(&self) -> PhaseState {
        PhaseState::new(self.x_star, 0.0, 0.0, self.py_star)
    }

    /// ẏ at the anchor (the tabulated velocity form).
    pub fn ydot_star(&self) -> f64 {
        self.py_star - self.x_star
    }

    /// Largest real multiplier.
    pub fn lambda(&self) -> f64 {
        self.monodromy_spectrum.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A corrected orbit together with its dense state/STM solution over one period.
#[derive(Debug, Clone)]
pub struct LyapunovOrbit {
    pub orbit: PeriodicOrbit,
    pub params: ModelParams,
    pub monodromy: Matrix4<f64>,
    traj: Trajectory<20>,
}

impl LyapunovOrbit {
    fn build(params: &ModelParams, side: Side, anchor: PhaseState, residual: f64, period: f64, cfg: &IntegratorConfig) -> Result<Self> {
        let traj = propagate(&Variational(*params), VariationalState::identity(anchor).to_array(), 0.0, period, cfg)?;
        let monodromy = VariationalState::from_slice(&traj.end()).stm;
        let mut y0 = [0.0; 5];
        y0[..4].copy_from_slice(&anchor.to_array());
        let action = propagate_end(&WithAction(*params), y0, 0.0, period, cfg)?[4];
        let orbit = PeriodicOrbit {
            side,
            x_star: anchor.x,
            py_star: anchor.py,
            period,
            energy: energy_ch4bp(&anchor, params)?,
            action,
            monodromy_spectrum: eigen_pairs(&monodromy),
            residual,
        };
        Ok(Self { orbit, params: *params, monodromy, traj })
    }

    pub fn period(&self) -> f64 {
        self.orbit.period
    }

    pub fn anchor(&self) -> PhaseState {
        self.orbit.anchor()
    }

    fn local(&self, t: f64) -> (f64, i64) {
        let t_per = self.orbit.period;
        let n = (t / t_per).floor();
        let mut r = t - n * t_per;
        if r >= t_per {
            r -= t_per;
        }
        (r.max(0.0), n as i64)
    }

    /// k₀(θ) = Φ^{θT}(q*), θ taken mod 1.
    pub fn k0(&self, theta: f64) -> PhaseState {
        self.state_at(theta * self.orbit.period)
    }

    /// Point of the orbit at time t from the anchor (any real t).
    pub fn state_at(&self, t: f64) -> PhaseState {
        let (r, _) = self.local(t);
        PhaseState::from_slice(&self.traj.eval(r))
    }

    /// STM from the anchor over time r ∈ [0, T].
    pub fn stm_local(&self, r: f64) -> Matrix4<f64> {
        VariationalState::from_slice(&self.traj.eval(r.clamp(0.0, self.orbit.period))).stm
    }

    /// Φ(t) = Φ(r)·Mⁿ for t = nT + r.
    pub fn stm_at(&self, t: f64) -> Matrix4<f64> {
        let (r, n) = self.local(t);
        let m = if n >= 0 {
            self.monodromy.pow(n as u32)
        } else {
            self.monodromy.try_inverse().expect("monodromy is invertible").pow((-n) as u32)
        };
        self.stm_local(r) * m
    }

    /// Points sampled uniformly in phase.
    pub fn sample(&self, n: usize) -> Vec<PhaseState> {
        (0..n).map(|i| self.k0(i as f64 / n as f64)).collect()
    }

    /// Distance from z to the orbit and the minimizing phase.
    pub fn distance(&self, z: &PhaseState) -> (f64, f64) {
        let n = 400;
        let d = |th: f64| self.k0(th).dist(z);
        let (mut best, mut bd) = (0.0, f64::INFINITY);
        for i in 0..n {
            let th = i as f64 / n as f64;
            let v = d(th);
            if v < bd {
                bd = v;
                best = th;
            }
        }
        // Golden-section refinement around the coarse minimum.
        let (mut a, mut b) = (best - 1.0 / n as f64, best + 1.0 / n as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let e = a + g * (b - a);
            if d(c) < d(e) {
                b = e;
            } else {
                a = c;
            }
        }
        let th = 0.5 * (a + b);
        (d(th), th.rem_euclid(1.0))
    }

    /// The S′-mirror orbit (L₂ side), anchored at S′(q*).
    pub fn mirror(&self, cfg: &IntegratorConfig) -> Result<Self> {
        let side = match self.orbit.side {
            Side::L1 => Side::L2,
            Side::L2 => Side::L1,
        };
        let anchor = Symmetry::SPrime.apply(&self.anchor());
        Self::build(&self.params, side, anchor, self.orbit.residual, self.orbit.period, cfg)
    }

    /// Real multiplier pair and eigenvectors: (λᵘ, vᵘ, λˢ, vˢ) with λᵘ > 1.
    pub fn hyperbolic_pair(&self) -> Result<(f64, Vector4<f64>, f64, Vector4<f64>)> {
        let lu = self.orbit.lambda();
        if !(lu > 1.0 + 1e-6) {
            return Err(Error::Seeding(format!("monodromy is not hyperbolic (max multiplier {lu})")));
        }
        let ls = self
            .orbit
            .monodromy_spectrum
            .iter()
            .filter(|c| c.1.abs() < 1e-9 && c.0 > 0.0)
            .map(|c| c.0)
            .fold(f64::INFINITY, f64::min);
        Ok((lu, null_vector(&self.monodromy, lu), ls, null_vector(&self.monodromy, ls)))
    }
}

/// Unit vector spanning ker(M − λI), from the smallest singular value.
fn null_vector(m: &Matrix4<f64>, lambda: f64) -> Vector4<f64> {
    let a = m - Matrix4::identity() * lambda;
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let i = svd.singular_values.imin();
    let v: Vector4<f64> = v_t.row(i).transpose();
    v / v.norm()
}

/// Newton correction of p_y with x* fixed, so that the orbit meets y = 0
/// perpendicularly after half a period.
pub fn correct_symmetric_orbit(
    x_star: f64,
    py_guess: f64,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<LyapunovOrbit> {
    let (py, t_half, residual) = correct_py(x_star, py_guess, params, cfg)?;
    LyapunovOrbit::build(params, Side::L1, PhaseState::new(x_star, 0.0, 0.0, py), residual, 2.0 * t_half, cfg)
}

const NEWTON_TOL: f64 = 1e-13;

fn correct_py(x_star: f64, py_guess: f64, params: &ModelParams, cfg: &IntegratorConfig) -> Result<(f64, f64, f64)> {
    let sec = SectionSpec::y_axis_decreasing();
    let mut py = py_guess;
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let q = PhaseState::new(x_star, 0.0, 0.0, py);
        let (c, _) = propagate_to_section(
            &Variational(*params),
            VariationalState::identity(q).to_array(),
            0.0,
            &sec,
            1,
            cfg.max_time.min(50.0),
            cfg,
        )
        .map_err(|e| match e {
            Error::NoCrossing(_) | Error::Collision { .. } => Error::Family(format!("x* = {x_star}: {e}")),
            other => other,
        })?;
        let v = VariationalState::from_slice(&c.y);
        let z = v.state;
        let f = crate::dynamics::field_ch4bp(&z, params)?;
        let r = z.px;
        if r.abs() < NEWTON_TOL || (r.abs() < 1e-11 && r.abs() >= last) {
            return Ok((py, c.t, r.abs()));
        }
        // dpx/dpy at the crossing, moving the crossing time with y = 0.
        let dpx = v.stm[(2, 3)] - f.px / f.y * v.stm[(1, 3)];
        if !dpx.is_finite() || dpx == 0.0 {
            return Err(Error::Correction(format!("singular Newton derivative at x* = {x_star}")));
        }
        py -= r / dpx;
        last = r.abs();
    }
    Err(Error::Correction(format!("no convergence at x* = {x_star} (residual {last:e})")))
}

/// Linear-theory estimate of p_y* for an orbit anchored near L₁.
fn linear_guess(x_star: f64, params: &ModelParams) -> Result<f64> {
    let xe = params.lambda2.powf(-1.0 / 3.0);
    let a = jacobian(&PhaseState::new(xe, 0.0, 0.0, xe), params)?;
    let eig = a.complex_eigenvalues();
    let omega = eig.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let ac = a.map(|v| Complex::new(v, 0.0)) - Matrix4::identity() * Complex::new(0.0, omega);
    let svd = ac.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let i = svd.singular_values.imin();
    let v = v_t.row(i).transpose();
    let v = v.map(|c| c / v[0]);
    Ok(xe + v[3].re * (x_star - xe))
}

/// Anchor momentum by natural continuation from small orbits near L₁.
pub fn guess_py(x_star: f64, params: &ModelParams, cfg: &IntegratorConfig) -> Result<f64> {
    let xe = params.lambda2.powf(-1.0 / 3.0);
    if x_star >= xe {
        return Err(Error::Family(format!("anchor x* = {x_star} must lie left of L1 ({xe})")));
    }
    let step = 0.005;
    let mut x = xe - step;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    loop {
        let x_next = if x <= x_star { x_star } else { x };
        let guess = match pts.len() {
            0 => linear_guess(x_next, params)?,
            1 => linear_guess(x_next, params)? + (pts[0].1 - linear_guess(pts[0].0, params)?),
            n => {
                let (x0, p0) = pts[n - 2];
                let (x1, p1) = pts[n - 1];
                p1 + (p1 - p0) / (x1 - x0) * (x_next - x1)
            }
        };
        let (py, _, _) = correct_py(x_next, guess, params, cfg)?;
        if x_next == x_star {
            return Ok(py);
        }
        pts.push((x_next, py));
        x -= step;
    }
}

/// Orbit of the L₁ family with anchor x* (initial guess by continuation).
pub fn orbit_at(x_star: f64, params: &ModelParams, cfg: &IntegratorConfig) -> Result<LyapunovOrbit> {
    let py = guess_py(x_star, params, cfg)?;
    correct_symmetric_orbit(x_star, py, params, cfg)
}

/// Orbit of the requested family with energy h (secant iteration on x*).
pub fn orbit_for_energy(h: f64, side: Side, params: &ModelParams, cfg: &IntegratorConfig) -> Result<LyapunovOrbit> {
    let xe = params.lambda2.powf(-1.0 / 3.0);
    let h_l1 = lagrange_points(params)?[0].energy;
    if h <= h_l1 {
        return Err(Error::Range { h, lo: h_l1, hi: f64::INFINITY });
    }
    let energy = |x: f64, guess: f64| -> Result<(f64, f64)> {
        let (py, _, _) = correct_py(x, guess, params, cfg)?;
        Ok((energy_ch4bp(&PhaseState::new(x, 0.0, 0.0, py), params)? - h, py))
    };
    // Bracket by continuation away from L₁ until the energy exceeds h.
    let step = 0.005;
    let mut x0 = xe - step;
    let mut p0 = guess_py(x0, params, cfg)?;
    let (mut f0, _) = energy(x0, p0)?;
    if f0 > 0.0 {
        x0 = xe - 1e-3;
        p0 = guess_py(x0, params, cfg)?;
        f0 = energy(x0, p0)?.0;
    }
    let (mut x1, mut p1, mut f1) = (x0, p0, f0);
    let mut prev = (x0, p0);
    while f1 < 0.0 {
        let xn = x1 - step;
        if xn <= 0.3 {
            return Err(Error::Range { h, lo: h_l1, hi: h_l1 + f1 + h });
        }
        let guess = if prev.0 == x1 { p1 } else { p1 + (p1 - prev.1) / (x1 - prev.0) * (xn - x1) };
        prev = (x1, p1);
        let (fe, pe) = energy(xn, guess)?;
        x0 = x1;
        p0 = p1;
        f0 = f1;
        x1 = xn;
        p1 = pe;
        f1 = fe;
    }
    // Secant with the bracket maintained (regula falsi / Illinois).
    let (mut xa, mut fa, mut pa) = (x0, f0, p0);
    let (mut xb, mut fb, mut pb) = (x1, f1, p1);
    let mut side_flag = 0;
    for _ in 0..60 {
        let xn = (xa * fb - xb * fa) / (fb - fa);
        let pg = pa + (pb - pa) * (xn - xa) / (xb - xa);
        let (fnv, pn) = energy(xn, pg)?;
        if fnv.abs() < 1e-12 || (xb - xa).abs() < 1e-15 {
            let orbit = correct_symmetric_orbit(xn, pn, params, cfg)?;
            return match side {
                Side::L1 => Ok(orbit),
                Side::L2 => orbit.mirror(cfg),
            };
        }
        if fnv.signum() == fa.signum() {
            xa = xn;
            fa = fnv;
            pa = pn;
            if side_flag == -1 {
                fb *= 0.5;
            }
            side_flag = -1;
        } else {
            xb = xn;
            fb = fnv;
            pb = pn;
            if side_flag == 1 {
                fa *= 0.5;
            }
            side_flag = 1;
        }
    }
    Err(Error::Correction(format!("energy h = {h} not matched")))
}

/// Family of Lyapunov orbits over an x* grid.
#[derive(Debug, Clone)]
pub struct OrbitFamily {
    pub side: Side,
    pub orbits: Vec<LyapunovOrbit>,
    /// Grid points at which correction failed, with the reason.
    pub failures: Vec<(f64, String)>,
}

impl OrbitFamily {
    pub fn summaries(&self) -> Vec<PeriodicOrbit> {
        self.orbits.iter().map(|o| o.orbit.clone()).collect()
    }

    /// CSV: h, x_star, py_star, ydot_star, T, I, lambda.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .orbits
            .iter()
            .map(|o| {
                let p = &o.orbit;
                vec![p.energy, p.x_star, p.py_star, p.ydot_star(), p.period, p.action, p.lambda()]
            })
            .collect();
        crate::io::csv(&["h", "x_star", "py_star", "ydot_star", "T", "I", "lambda"], &rows)
    }

    /// Orbit whose anchor is closest to x*.
    pub fn nearest(&self, x_star: f64) -> Option<&LyapunovOrbit> {
        self.orbits
            .iter()
            .min_by(|a, b| (a.orbit.x_star.abs() - x_star.abs()).abs().total_cmp(&(b.orbit.x_star.abs() - x_star.abs()).abs()))
    }
}

/// Grid a, a+step, …, b (inclusive within a tolerance), in either direction.
pub fn grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if a == b {
        return Ok(vec![a]);
    }
    if !(step > 0.0) {
        return Err(Error::Parameter("grid step must be positive".into()));
    }
    let n = ((b - a).abs() / step + 1e-9).floor() as usize;
    let s = if b > a { step } else { -step };
    let mut v: Vec<f64> = (0..=n).map(|i| a + s * i as f64).collect();
    if (v[n] - b).abs() > 1e-9 * step {
        v.push(b);
    } else {
        v[n] = b;
    }
    Ok(v)
}

/// Natural-parameter continuation in x* (L₁ side); the L₂ family is the S′ mirror.
pub fn continue_family(
    x_range: (f64, f64),
    step: f64,
    side: Side,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<OrbitFamily> {
    let xs = grid(x_range.0.abs(), x_range.1.abs(), step)?;
    let mut anchors: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut failures = Vec::new();
    for &x in &xs {
        let guess = match anchors.len() {
            0 => guess_py(x, params, cfg),
            1 => Ok(anchors[0].1),
            n => {
                let (x0, p0, ..) = anchors[n - 2];
                let (x1, p1, ..) = anchors[n - 1];
                Ok(p1 + (p1 - p0) / (x1 - x0) * (x - x1))
            }
        };
        match guess.and_then(|g| correct_py(x, g, params, cfg)) {
            Ok((py, th, res)) => anchors.push((x, py, th, res)),
            Err(e) => {
                failures.push((x, e.to_string()));
                break;
            }
        }
    }
    let orbits: Result<Vec<LyapunovOrbit>> = anchors
        .par_iter()
        .map(|&(x, py, th, res)| {
            let o = LyapunovOrbit::build(params, Side::L1, PhaseState::new(x, 0.0, 0.0, py), res, 2.0 * th, cfg)?;
            match side {
                Side::L1 => Ok(o),
                Side::L2 => o.mirror(cfg),
            }
        })
        .collect();
    Ok(OrbitFamily { side, orbits: orbits?, failures })
}
