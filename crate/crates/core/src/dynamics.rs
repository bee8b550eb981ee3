//! Circular and elliptic Hill four-body problem: parameters, Hamiltonians,
//! vector fields, variational equations and reversing symmetries.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solar and Jovian masses (kg) used for the default mass ratio.
pub const SUN_MASS: f64 = 1.989e30;
pub const JUPITER_MASS: f64 = 1.898e27;

/// Default mass ratio m₂/(m₁+m₂) of the Sun–Jupiter pair.
pub const DEFAULT_MU: f64 = JUPITER_MASS / (SUN_MASS + JUPITER_MASS);

/// Radius below which a potential evaluation is treated as a collision.
pub const R_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub eps: f64,
    pub d: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Parameter(format!("mu = {mu} not in (0, 1)")));
        }
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Parameter(format!("eps = {eps} not in [0, 1)")));
        }
        let d = (1.0 - 3.0 * mu + 3.0 * mu * mu).sqrt();
        let lambda1 = 1.5 * (1.0 - d);
        let lambda2 = 1.5 * (1.0 + d);
        Ok(Self {
            mu,
            eps,
            d,
            lambda1,
            lambda2,
            a: 0.5 * (1.0 - lambda2),
            b: 0.5 * (1.0 - lambda1),
        })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.mu, eps)
    }

    /// Plain `key = value` text with keys `mu` and `eps`.
    pub fn to_config(&self) -> String {
        format!("mu = {:.17e}\neps = {:.17e}\n", self.mu, self.eps)
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let mut mu = DEFAULT_MU;
        let mut eps = 0.0;
        for (key, value) in parse_key_values(text)? {
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("bad number for {key}: {value}")))?;
            match key.as_str() {
                "mu" => mu = v,
                "eps" => eps = v,
                _ => {}
            }
        }
        Self::new(mu, eps)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(DEFAULT_MU, 0.0).expect("default parameters are valid")
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A point (x, y, pₓ, p_y) of the planar phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseState {
    pub const fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py }
    }

    /// Builds a state from positions and velocities (x, y, ẋ, ẏ).
    pub fn from_velocity(x: f64, y: f64, xdot: f64, ydot: f64) -> Self {
        Self::new(x, y, xdot - y, ydot + x)
    }

    pub fn xdot(&self) -> f64 {
        self.px + self.y
    }

    pub fn ydot(&self) -> f64 {
        self.py - self.x
    }

    /// (x, y, ẋ, ẏ).
    pub fn velocity_form(&self) -> [f64; 4] {
        [self.x, self.y, self.xdot(), self.ydot()]
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.px, self.py)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn dist(&self, other: &PhaseState) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

impl std::ops::Add for PhaseState {
    type Output = PhaseState;
    fn add(self, o: PhaseState) -> PhaseState {
        PhaseState::new(self.x + o.x, self.y + o.y, self.px + o.px, self.py + o.py)
    }
}

impl std::ops::Sub for PhaseState {
    type Output = PhaseState;
    fn sub(self, o: PhaseState) -> PhaseState {
        PhaseState::new(self.x - o.x, self.y - o.y, self.px - o.px, self.py - o.py)
    }
}

impl std::ops::Mul<f64> for PhaseState {
    type Output = PhaseState;
    fn mul(self, k: f64) -> PhaseState {
        PhaseState::new(self.x * k, self.y * k, self.px * k, self.py * k)
    }
}

/// State of the non-autonomous system with the forcing phase s ∈ [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtendedState {
    pub state: PhaseState,
    pub s: f64,
}

impl ExtendedState {
    pub fn new(state: PhaseState, s: f64) -> Self {
        Self { state, s: s.rem_euclid(TAU) }
    }
}

/// State together with its 4×4 state-transition matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalState {
    pub state: PhaseState,
    pub stm: Matrix4<f64>,
}

impl VariationalState {
    pub fn identity(state: PhaseState) -> Self {
        Self { state, stm: Matrix4::identity() }
    }

    pub fn to_array(&self) -> [f64; 20] {
        let mut y = [0.0; 20];
        y[..4].copy_from_slice(&self.state.to_array());
        for i in 0..4 {
            for j in 0..4 {
                y[4 + 4 * i + j] = self.stm[(i, j)];
            }
        }
        y
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self { state: PhaseState::from_slice(y), stm: stm_from_slice(&y[4..20]) }
    }
}

pub(crate) fn stm_from_slice(y: &[f64]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| y[4 * i + j])
}

/// Canonical symplectic matrix J₄ = [[0, I], [−I, 0]].
pub fn j4() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(0, 2)] = 1.0;
    j[(1, 3)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(3, 1)] = -1.0;
    j
}

/// ‖MᵀJM − J‖∞.
pub fn symplectic_defect(m: &Matrix4<f64>) -> f64 {
    let j = j4();
    (m.transpose() * j * m - j).abs().max()
}

fn radius(x: f64, y: f64) -> Result<f64> {
    let r = x.hypot(y);
    if r < R_MIN || !r.is_finite() {
        return Err(Error::Collision { t: f64::NAN, r });
    }
    Ok(r)
}

/// U_rot = −a x² − b y² + 1/r.
pub fn u_rot(x: f64, y: f64, p: &ModelParams) -> Result<f64> {
    let r = radius(x, y)?;
    Ok(-p.a * x * x - p.b * y * y + 1.0 / r)
}

/// Energy of the circular problem, H₀.
pub fn energy_ch4bp(z: &PhaseState, p: &ModelParams) -> Result<f64> {
    let u = u_rot(z.x, z.y, p)?;
    Ok(0.5 * (z.px * z.px + z.py * z.py) + z.y * z.px - z.x * z.py - u)
}

/// First-order perturbation H₁ = ½(x²+y²) + U_rot, equal to Ω_eff.
pub fn h1_perturbation(x: f64, y: f64, p: &ModelParams) -> Result<f64> {
    Ok(0.5 * (x * x + y * y) + u_rot(x, y, p)?)
}

/// Ω_eff = ½(λ₂x² + λ₁y²) + 1/r.
pub fn omega_eff(x: f64, y: f64, p: &ModelParams) -> Result<f64> {
    let r = radius(x, y)?;
    Ok(0.5 * (p.lambda2 * x * x + p.lambda1 * y * y) + 1.0 / r)
}

/// ∇H₁.
pub fn grad_h1(x: f64, y: f64, p: &ModelParams) -> Result<(f64, f64)> {
    let r = radius(x, y)?;
    let r3 = r * r * r;
    Ok((x - 2.0 * p.a * x - x / r3, y - 2.0 * p.b * y - y / r3))
}

fn field_raw(z: &PhaseState, p: &ModelParams) -> Result<[f64; 4]> {
    let r = radius(z.x, z.y)?;
    let r3 = r * r * r;
    Ok([
        z.px + z.y,
        z.py - z.x,
        z.py - 2.0 * p.a * z.x - z.x / r3,
        -z.px - 2.0 * p.b * z.y - z.y / r3,
    ])
}

pub(crate) fn field_raw_slice(y: &[f64; 4], p: &ModelParams) -> Result<[f64; 4]> {
    field_raw(&PhaseState::from_slice(y), p)
}

/// Hamiltonian vector field of the circular problem.
pub fn field_ch4bp(z: &PhaseState, p: &ModelParams) -> Result<PhaseState> {
    field_raw(z, p).map(|f| PhaseState::from_slice(&f))
}

/// Field of H₀ + ε cos(s) H₁ in the extended phase space.
pub fn field_eh4bp(e: &ExtendedState, p: &ModelParams) -> Result<ExtendedState> {
    let mut f = field_ch4bp(&e.state, p)?;
    if p.eps != 0.0 {
        let (gx, gy) = grad_h1(e.state.x, e.state.y, p)?;
        let c = p.eps * e.s.cos();
        f.px -= c * gx;
        f.py -= c * gy;
    }
    // ṡ = 1; the derivative is not reduced mod 2π.
    Ok(ExtendedState { state: f, s: 1.0 })
}

/// Analytic Jacobian of `field_ch4bp`.
pub fn jacobian(z: &PhaseState, p: &ModelParams) -> Result<Matrix4<f64>> {
    let r = radius(z.x, z.y)?;
    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let uxx = -2.0 * p.a - 1.0 / r3 + 3.0 * z.x * z.x / r5;
    let uyy = -2.0 * p.b - 1.0 / r3 + 3.0 * z.y * z.y / r5;
    let uxy = 3.0 * z.x * z.y / r5;
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0, 1.0, 1.0, 0.0,
        -1.0, 0.0, 0.0, 1.0,
        uxx, uxy, 0.0, 1.0,
        uxy, uyy, -1.0, 0.0,
    );
    Ok(m)
}

/// Derivative of (state, STM): (f(state), A(state)·STM).
pub fn field_variational(v: &VariationalState, p: &ModelParams) -> Result<VariationalState> {
    let f = field_ch4bp(&v.state, p)?;
    let a = jacobian(&v.state, p)?;
    Ok(VariationalState { state: f, stm: a * v.stm })
}

/// Reversing symmetries of the circular problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    /// Reflection in the x-axis, with time reversal.
    S,
    /// Reflection in the y-axis, with time reversal.
    SPrime,
    /// Rotation by π; preserves time.
    SDoublePrime,
}

impl Symmetry {
    pub fn reverses_time(self) -> bool {
        !matches!(self, Symmetry::SDoublePrime)
    }

    /// Action in momentum coordinates.
    pub fn apply(self, z: &PhaseState) -> PhaseState {
        match self {
            Symmetry::S => PhaseState::new(z.x, -z.y, -z.px, z.py),
            Symmetry::SPrime => PhaseState::new(-z.x, z.y, z.px, -z.py),
            Symmetry::SDoublePrime => PhaseState::new(-z.x, -z.y, -z.px, -z.py),
        }
    }

    /// Action in velocity coordinates (x, y, ẋ, ẏ).
    pub fn apply_velocity(self, v: [f64; 4]) -> [f64; 4] {
        let [x, y, xd, yd] = v;
        match self {
            Symmetry::S => [x, -y, -xd, yd],
            Symmetry::SPrime => [-x, y, xd, -yd],
            Symmetry::SDoublePrime => [-x, -y, -xd, -yd],
        }
    }

    /// Linear part as a matrix (the symmetries are linear maps).
    pub fn matrix(self) -> Matrix4<f64> {
        let d = match self {
            Symmetry::S => [1.0, -1.0, -1.0, 1.0],
            Symmetry::SPrime => [-1.0, 1.0, 1.0, -1.0],
            Symmetry::SDoublePrime => [-1.0, -1.0, -1.0, -1.0],
        };
        Matrix4::from_diagonal(&Vector4::from(d))
    }
}

pub fn apply_symmetry(z: &PhaseState, which: Symmetry) -> PhaseState {
    which.apply(z)
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::S => "S",
            Symmetry::SPrime => "S'",
            Symmetry::SDoublePrime => "S''",
        })
    }
}

impl FromStr for Symmetry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Symmetry::S),
            "S'" | "Sp" => Ok(Symmetry::SPrime),
            "S''" | "Spp" => Ok(Symmetry::SDoublePrime),
            _ => Err(Error::Parameter(format!("unknown symmetry {s}"))),
        }
    }
}
