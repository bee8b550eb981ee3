//! Melnikov integrals for the scattering map of the elliptic problem:
//! the generating function S(x*, θ), the composed derivative
//! (d/dθ)S∘σ₀, charts over (x*, θ) and the first-order scattering map.
//!
//! Integrands compare H₁ along the connection with H₁ along the orbit it
//! shadows; the forcing is taken on the section s = −π/2, which turns the
//! cos(s + t) factor into sin t (for S) and cos t (for its θ-derivative).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connections::{Channel, ChannelLabel, Connection};
use crate::dynamics::{h1_perturbation, PhaseState};
use crate::error::{Error, Result};
use crate::numerics::{integrate_pieces, sorted_breaks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelnikovConfig {
    /// Integrand magnitude below which the tails are dropped.
    pub tail_cut: f64,
    pub quad_tol: f64,
    /// Cap on |τ| in periods.
    pub max_horizon: f64,
}

impl Default for MelnikovConfig {
    fn default() -> Self {
        Self { tail_cut: 1e-12, quad_tol: 1e-9, max_horizon: 40.0 }
    }
}

impl MelnikovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_cut > 0.0 && self.tail_cut < self.quad_tol && self.max_horizon > 0.0) {
            return Err(Error::Parameter(format!("need 0 < tail_cut < quad_tol and max_horizon > 0, got {self:?}")));
        }
        Ok(())
    }
}

fn h1(z: &PhaseState, conn: &Connection) -> f64 {
    // Connections and orbits stay away from the origin.
    h1_perturbation(z.x, z.y, &conn.target.params).unwrap_or(f64::NAN)
}

/// Melnikov evaluator for one connection, with its truncation horizon.
#[derive(Debug, Clone)]
pub struct Melnikov<'a> {
    pub conn: &'a Connection,
    pub mcfg: MelnikovConfig,
    pub period: f64,
    /// τ-range outside which both differences are below `tail_cut`.
    pub tau_lo: f64,
    pub tau_hi: f64,
}

impl<'a> Melnikov<'a> {
    pub fn new(conn: &'a Connection, mcfg: MelnikovConfig) -> Result<Self> {
        mcfg.validate()?;
        let period = conn.target.period();
        let mut m = Self { conn, mcfg, period, tau_lo: conn.bwd.t_end, tau_hi: conn.fwd.t_end };
        m.tau_hi = m.horizon(1.0)?;
        m.tau_lo = m.horizon(-1.0)?;
        Ok(m)
    }

    /// H₁(Φ^τ z) − H₁ of the backward shadow.
    pub fn diff_bwd(&self, tau: f64) -> f64 {
        h1(&self.conn.state(tau), self.conn) - h1(&self.conn.shadow_minus(tau), self.conn)
    }

    /// H₁(Φ^τ z) − H₁ of the forward shadow.
    pub fn diff_fwd(&self, tau: f64) -> f64 {
        h1(&self.conn.state(tau), self.conn) - h1(&self.conn.shadow_plus(tau), self.conn)
    }

    /// Walks out from the leg end in quarter periods until a full period of
    /// the difference stays below `tail_cut`.
    fn horizon(&self, sign: f64) -> Result<f64> {
        let start = if sign > 0.0 { self.conn.fwd.t_end } else { self.conn.bwd.t_end };
        let cap = self.mcfg.max_horizon * self.period;
        let mut tau = start;
        loop {
            let peak = (0..=16)
                .map(|k| {
                    let t = tau + sign * self.period * k as f64 / 16.0;
                    if sign > 0.0 { self.diff_fwd(t) } else { self.diff_bwd(t) }.abs()
                })
                .fold(0.0, f64::max);
            if !peak.is_finite() {
                return Err(Error::Decay(format!("non-finite integrand at τ = {tau}")));
            }
            if peak < self.mcfg.tail_cut {
                return Ok(tau);
            }
            tau += sign * 0.25 * self.period;
            if tau.abs() > cap {
                return Err(Error::Decay(format!("difference still {peak:.2e} at |τ| = {} periods", self.mcfg.max_horizon)));
            }
        }
    }

    /// ∫_{−∞}^0 w(t)·diff_bwd(t+o) dt + ∫_0^∞ w(t)·diff_fwd(t+o) dt.
    fn two_sided(&self, weight: fn(f64) -> f64, o: f64) -> Result<f64> {
        let tol = self.mcfg.quad_tol;
        let cuts: Vec<f64> = self.conn.breakpoints().iter().map(|b| b - o).collect();
        let pieces = |a: f64, b: f64| -> Vec<f64> {
            if b <= a {
                return vec![];
            }
            // Chunks of ~π keep the oscillatory factor resolved.
            let n = ((b - a) / std::f64::consts::PI).ceil().max(1.0) as usize;
            let mut v: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
            v.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
            sorted_breaks(v)
        };
        let lo = self.tau_lo - o;
        let hi = self.tau_hi - o;
        let mut total = 0.0;
        let b1 = pieces(lo, 0.0);
        if b1.len() >= 2 {
            total += integrate_pieces(|t| Ok(weight(t) * self.diff_bwd(t + o)), &b1, 0.5 * tol, 0.0)?;
        }
        let b2 = pieces(0.0, hi);
        if b2.len() >= 2 {
            total += integrate_pieces(|t| Ok(weight(t) * self.diff_fwd(t + o)), &b2, 0.5 * tol, 0.0)?;
        }
        if !total.is_finite() {
            return Err(Error::Decay("non-finite Melnikov integral".into()));
        }
        Ok(total)
    }

    /// S(θ), with the connection placed at offset (θ − θ⁺)T.
    pub fn s(&self, theta: f64) -> Result<f64> {
        let o = (theta - self.conn.theta_plus_lifted()) * self.period;
        self.two_sided(f64::sin, o)
    }

    /// (d/dθ) S(σ₀(θ)) = (d/dθ)S evaluated at θ + Δ.
    pub fn ds_composed(&self, theta: f64) -> Result<f64> {
        let o = (theta - self.conn.point.theta_minus) * self.period;
        Ok(-self.period * self.two_sided(f64::cos, o)?)
    }

    /// |integrand| samples (τ, |diff|) along both legs, for decay diagnostics.
    pub fn decay_profile(&self, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = self.tau_hi * k as f64 / n as f64;
            out.push((t, self.diff_fwd(t).abs()));
            let t = self.tau_lo * k as f64 / n as f64;
            out.push((t, self.diff_bwd(t).abs()));
        }
        out
    }
}

/// S(θ) for one connection.
pub fn melnikov_s(conn: &Connection, theta: f64, mcfg: &MelnikovConfig) -> Result<f64> {
    Melnikov::new(conn, *mcfg)?.s(theta)
}

/// (d/dθ)S∘σ₀(θ) for one connection.
pub fn melnikov_ds_dtheta_composed(conn: &Connection, theta: f64, mcfg: &MelnikovConfig) -> Result<f64> {
    Melnikov::new(conn, *mcfg)?.ds_composed(theta)
}

/// S and −(d/dθ)S∘σ₀ on an (x*, θ) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringChart {
    pub label: ChannelLabel,
    pub window: (f64, f64),
    pub x_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub delta: Vec<f64>,
    /// Indexed [x][θ]; NaN marks a failed point.
    pub s_values: Vec<Vec<f64>>,
    pub minus_ds_composed: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize, String)>,
    pub mcfg: MelnikovConfig,
}

impl ScatteringChart {
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for (i, x) in self.x_grid.iter().enumerate() {
            for (j, th) in self.theta_grid.iter().enumerate() {
                rows.push(vec![*x, *th, self.s_values[i][j], self.minus_ds_composed[i][j]]);
            }
        }
        crate::io::csv(&["x_star", "theta", "S", "minus_dS_composed"], &rows)
    }

    /// gnuplot `nonuniform matrix` text of one field (rows are x*).
    pub fn to_gnuplot_matrix(&self, composed: bool) -> String {
        let field = if composed { &self.minus_ds_composed } else { &self.s_values };
        let mut s = format!("{}", self.theta_grid.len());
        for th in &self.theta_grid {
            s.push(' ');
            s.push_str(&crate::io::fmt17(*th));
        }
        s.push('\n');
        for (x, row) in self.x_grid.iter().zip(field) {
            s.push_str(&crate::io::fmt17(*x));
            for v in row {
                s.push(' ');
                s.push_str(&crate::io::fmt17(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Row index of an anchor abscissa present in the grid.
    pub fn row(&self, x_star: f64) -> Option<usize> {
        self.x_grid.iter().position(|x| (x - x_star).abs() < 1e-12)
    }
}

/// Evaluates the chart at every grid node (in parallel, deterministic order).
/// Fails if more than 1% of the points fail.
pub fn build_chart(channel: &Channel, theta_grid: &[f64], mcfg: &MelnikovConfig) -> Result<ScatteringChart> {
    let evals: Vec<Melnikov<'_>> =
        channel.connections.iter().map(|c| Melnikov::new(c, *mcfg)).collect::<Result<_>>()?;
    let nth = theta_grid.len();
    let cells: Vec<(usize, usize, Result<(f64, f64)>)> = (0..evals.len() * nth)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nth, k % nth);
            let th = theta_grid[j];
            let r = evals[i].s(th).and_then(|s| Ok((s, -evals[i].ds_composed(th)?)));
            (i, j, r)
        })
        .collect();
    let mut s_values = vec![vec![f64::NAN; nth]; evals.len()];
    let mut minus_ds = s_values.clone();
    let mut failures = Vec::new();
    for (i, j, r) in cells {
        match r {
            Ok((s, d)) => {
                s_values[i][j] = s;
                minus_ds[i][j] = d;
            }
            Err(e) => failures.push((i, j, e.to_string())),
        }
    }
    let total = (evals.len() * nth).max(1);
    if failures.len() * 100 > total {
        return Err(Error::Resolution(format!("{} of {total} chart points failed: {}", failures.len(), failures[0].2)));
    }
    Ok(ScatteringChart {
        label: channel.label,
        window: channel.window,
        x_grid: channel.connections.iter().map(|c| c.point.x_star).collect(),
        theta_grid: theta_grid.to_vec(),
        theta_minus: channel.connections.iter().map(|c| c.point.theta_minus).collect(),
        delta: channel.connections.iter().map(|c| c.point.delta).collect(),
        s_values,
        minus_ds_composed: minus_ds,
        failures,
        mcfg: *mcfg,
    })
}

/// Uniform grid of n points over [a, b] (inclusive).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// One application of a first-order scattering map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterStep {
    pub x_star: f64,
    pub action: f64,
    pub theta: f64,
    /// ε·(−∂S/∂θ∘σ₀).
    pub delta_action: f64,
}

/// A channel's scattering map evaluated directly from the Melnikov
/// integrals at the channel nodes, interpolated linearly in x*.
#[derive(Debug, Clone)]
pub struct ScatteringMap<'a> {
    pub label: ChannelLabel,
    pub window: (f64, f64),
    evals: Vec<Melnikov<'a>>,
    /// Sorted by x*.
    xs: Vec<f64>,
    actions: Vec<f64>,
    energies: Vec<f64>,
    periods: Vec<f64>,
    deltas: Vec<f64>,
}

impl<'a> ScatteringMap<'a> {
    pub fn new(channel: &'a Channel, mcfg: &MelnikovConfig) -> Result<Self> {
        let mut conns: Vec<&Connection> = channel.connections.iter().collect();
        if conns.len() < 2 {
            return Err(Error::Domain("a scattering map needs at least two channel nodes".into()));
        }
        conns.sort_by(|a, b| a.point.x_star.total_cmp(&b.point.x_star));
        Ok(Self {
            label: channel.label,
            window: channel.window,
            evals: conns.iter().map(|c| Melnikov::new(c, *mcfg)).collect::<Result<_>>()?,
            xs: conns.iter().map(|c| c.point.x_star).collect(),
            actions: conns.iter().map(|c| c.target.orbit.action).collect(),
            energies: conns.iter().map(|c| c.target.orbit.energy).collect(),
            periods: conns.iter().map(|c| c.target.period()).collect(),
            deltas: conns.iter().map(|c| c.point.delta).collect(),
        })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Bracketing node index and weight for x*.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.x_range();
        if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
            return Err(Error::Domain(format!("x* = {x} (channel covers [{lo}, {hi}])")));
        }
        let i = self.xs.partition_point(|v| *v <= x).clamp(1, self.xs.len() - 1) - 1;
        Ok((i, ((x - self.xs[i]) / (self.xs[i + 1] - self.xs[i])).clamp(0.0, 1.0)))
    }

    fn lerp(&self, v: &[f64], x: f64) -> Result<f64> {
        let (i, w) = self.locate(x)?;
        Ok(v[i] + w * (v[i + 1] - v[i]))
    }

    /// θ reduced into the channel window; the window's left edge (the
    /// excluded curve) is rejected.
    pub fn reduce(&self, theta: f64) -> Result<f64> {
        let (lo, _) = self.window;
        let r = lo + (theta - lo).rem_euclid(1.0);
        if (r - lo).abs() < 1e-12 || (r - lo - 1.0).abs() < 1e-12 {
            return Err(Error::Domain(format!("θ = {theta} lies on the channel boundary")));
        }
        Ok(r)
    }

    pub fn action(&self, x: f64) -> Result<f64> {
        self.lerp(&self.actions, x)
    }

    /// Inverse of `action` (actions are monotone along the family).
    pub fn x_of_action(&self, i_val: f64) -> Result<f64> {
        for k in 0..self.xs.len() - 1 {
            let (a, b) = (self.actions[k], self.actions[k + 1]);
            if (i_val - a) * (i_val - b) <= 0.0 {
                return Ok(self.xs[k] + (i_val - a) / (b - a) * (self.xs[k + 1] - self.xs[k]));
            }
        }
        Err(Error::Domain(format!("action {i_val} outside the channel range")))
    }

    pub fn delta(&self, x: f64) -> Result<f64> {
        self.lerp(&self.deltas, x)
    }

    /// −(d/dθ)S∘σ₀ at (x*, θ), θ taken in the channel window.
    pub fn minus_ds(&self, x: f64, theta: f64) -> Result<f64> {
        let th = self.reduce(theta)?;
        let (i, w) = self.locate(x)?;
        let a = -self.evals[i].ds_composed(th)?;
        let b = if w > 0.0 { -self.evals[i + 1].ds_composed(th)? } else { a };
        Ok(a + w * (b - a))
    }

    /// ∂S/∂I at (x*, θ) from node differences in x*, with
    /// dI/dx* = T·dh/dx*.
    pub fn ds_di(&self, x: f64, theta: f64) -> Result<f64> {
        let (i, _) = self.locate(x)?;
        let ds = self.evals[i + 1].s(theta)? - self.evals[i].s(theta)?;
        let dh = self.energies[i + 1] - self.energies[i];
        let t_mid = 0.5 * (self.periods[i] + self.periods[i + 1]);
        Ok(ds / (t_mid * dh))
    }

    /// σ_ε(I, θ) = (I, θ + Δ) + ε(−∂S/∂θ, ∂S/∂I)∘σ₀, to first order.
    pub fn apply(&self, x: f64, action: f64, theta: f64, eps: f64) -> Result<ScatterStep> {
        let th = self.reduce(theta)?;
        let delta = self.delta(x)?;
        let (da, dth) = if eps == 0.0 {
            (0.0, 0.0)
        } else {
            (eps * self.minus_ds(x, th)?, eps * self.ds_di(x, th + delta)?)
        };
        let new_action = action + da;
        let new_x = if eps == 0.0 { x } else { self.x_of_action(new_action)? };
        Ok(ScatterStep { x_star: new_x, action: new_action, theta: th + delta + dth, delta_action: da })
    }
}

/// First-order scattering map at (x*, θ) of a channel.
pub fn scattering_map_first_order(map: &ScatteringMap<'_>, x_star: f64, theta: f64, eps: f64) -> Result<ScatterStep> {
    map.apply(x_star, map.action(x_star)?, theta, eps)
}
