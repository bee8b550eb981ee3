//! Adaptive DOP853 propagation with 7th-order dense output and
//! Poincaré-section event location.

mod tableau;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    energy_ch4bp, field_eh4bp, field_raw_slice, jacobian, ExtendedState, ModelParams, PhaseState,
};
use crate::error::{Error, Result};
use crate::numerics::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Time tolerance of section crossings.
    pub event_tol: f64,
    /// Largest |t| an open-ended search (section, foot-point) may reach.
    pub max_time: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_step: f64::INFINITY, event_tol: 1e-13, max_time: 200.0 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.event_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Parameter("integrator tolerances must be positive".into()));
        }
        if self.event_tol > self.abs_tol * 1e3 {
            return Err(Error::Parameter("event_tol must not exceed 1000·abs_tol".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }
}

/// Right-hand side of an N-dimensional autonomous or time-dependent system.
pub trait OdeSystem<const N: usize>: Sync {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]) -> Result<()>;
}

/// Circular problem, state (x, y, pₓ, p_y).
#[derive(Debug, Clone, Copy)]
pub struct Ch4bp(pub ModelParams);

impl OdeSystem<4> for Ch4bp {
    fn rhs(&self, _t: f64, y: &[f64; 4], dy: &mut [f64; 4]) -> Result<()> {
        *dy = field_raw_slice(y, &self.0)?;
        Ok(())
    }
}

/// Elliptic problem in the extended phase space, state (x, y, pₓ, p_y, s).
#[derive(Debug, Clone, Copy)]
pub struct Eh4bp(pub ModelParams);

impl OdeSystem<5> for Eh4bp {
    fn rhs(&self, _t: f64, y: &[f64; 5], dy: &mut [f64; 5]) -> Result<()> {
        let e = ExtendedState { state: PhaseState::from_slice(y), s: y[4] };
        let f = field_eh4bp(&e, &self.0)?;
        dy[..4].copy_from_slice(&f.state.to_array());
        dy[4] = f.s;
        Ok(())
    }
}

/// State plus row-major 4×4 state-transition matrix.
#[derive(Debug, Clone, Copy)]
pub struct Variational(pub ModelParams);

impl OdeSystem<20> for Variational {
    fn rhs(&self, _t: f64, y: &[f64; 20], dy: &mut [f64; 20]) -> Result<()> {
        let f = field_raw_slice(&[y[0], y[1], y[2], y[3]], &self.0)?;
        dy[..4].copy_from_slice(&f);
        let a = jacobian(&PhaseState::from_slice(y), &self.0)?;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[(i, k)] * y[4 + 4 * k + j];
                }
                dy[4 + 4 * i + j] = s;
            }
        }
        Ok(())
    }
}

/// Circular problem with the action integrand pₓẋ + p_yẏ appended.
#[derive(Debug, Clone, Copy)]
pub struct WithAction(pub ModelParams);

impl OdeSystem<5> for WithAction {
    fn rhs(&self, _t: f64, y: &[f64; 5], dy: &mut [f64; 5]) -> Result<()> {
        let f = field_raw_slice(&[y[0], y[1], y[2], y[3]], &self.0)?;
        dy[..4].copy_from_slice(&f);
        dy[4] = y[2] * f[0] + y[3] * f[1];
        Ok(())
    }
}

/// Adapter for closures.
pub struct FnSystem<F>(pub F);

impl<const N: usize, F> OdeSystem<N> for FnSystem<F>
where
    F: Fn(f64, &[f64; N], &mut [f64; N]) -> Result<()> + Sync,
{
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]) -> Result<()> {
        (self.0)(t, y, dy)
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    y_old: [f64; N],
    y_new: [f64; N],
    coef: [[f64; N]; 7],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t_new - self.t_old;
        let x = if h == 0.0 { 0.0 } else { (t - self.t_old) / h };
        let mut y = [0.0; N];
        for (i, f) in self.coef.iter().rev().enumerate() {
            let m = if i % 2 == 0 { x } else { 1.0 - x };
            for k in 0..N {
                y[k] = (y[k] + f[k]) * m;
            }
        }
        for k in 0..N {
            y[k] += self.y_old[k];
        }
        y
    }

    pub fn y_old(&self) -> &[f64; N] {
        &self.y_old
    }

    pub fn y_new(&self) -> &[f64; N] {
        &self.y_new
    }

    fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t_new >= self.t_old { (self.t_old, self.t_new) } else { (self.t_new, self.t_old) };
        t >= lo && t <= hi
    }
}

/// Dense solution over a time interval.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    t0: f64,
    y0: [f64; N],
    steps: Vec<DenseStep<N>>,
}

impl<const N: usize> Trajectory<N> {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(self.t0, |s| s.t_new)
    }

    pub fn start(&self) -> [f64; N] {
        self.y0
    }

    pub fn end(&self) -> [f64; N] {
        self.steps.last().map_or(self.y0, |s| s.y_new)
    }

    pub fn steps(&self) -> &[DenseStep<N>] {
        &self.steps
    }

    /// Node times and states, starting with the initial node.
    pub fn nodes(&self) -> Vec<(f64, [f64; N])> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push((self.t0, self.y0));
        out.extend(self.steps.iter().map(|s| (s.t_new, s.y_new)));
        out
    }

    /// Evaluates the dense output; times outside the span are clamped.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() {
            return self.y0;
        }
        let forward = self.t_end() >= self.t0;
        // Steps are ordered along the integration direction.
        let idx = self.steps.partition_point(|s| if forward { s.t_new < t } else { s.t_new > t });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        if !step.contains(t) {
            let t = if forward { t.clamp(self.t0, self.t_end()) } else { t.clamp(self.t_end(), self.t0) };
            return self.eval_in(t);
        }
        step.eval(t)
    }

    fn eval_in(&self, t: f64) -> [f64; N] {
        let forward = self.t_end() >= self.t0;
        let idx = self.steps.partition_point(|s| if forward { s.t_new < t } else { s.t_new > t });
        self.steps[idx.min(self.steps.len() - 1)].eval(t)
    }
}

impl Trajectory<4> {
    pub fn state(&self, t: f64) -> PhaseState {
        PhaseState::from_slice(&self.eval(t))
    }

    /// CSV with columns t, x, y, px, py, xdot, ydot, h.
    pub fn to_csv(&self, params: &ModelParams) -> String {
        let mut s = String::from("t,x,y,px,py,xdot,ydot,h\n");
        for (t, y) in self.nodes() {
            let z = PhaseState::from_slice(&y);
            let h = energy_ch4bp(&z, params).unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                crate::io::fmt17(t),
                crate::io::fmt17(z.x),
                crate::io::fmt17(z.y),
                crate::io::fmt17(z.px),
                crate::io::fmt17(z.py),
                crate::io::fmt17(z.xdot()),
                crate::io::fmt17(z.ydot()),
                crate::io::fmt17(h)
            );
        }
        s
    }
}

fn rms<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for k in 0..N {
        let q = v[k] / scale[k];
        s += q * q;
    }
    (s / N as f64).sqrt()
}

fn with_time<T>(r: Result<T>, t: f64) -> Result<T> {
    r.map_err(|e| match e {
        Error::Collision { r, .. } => Error::Collision { t, r },
        other => other,
    })
}

struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    cfg: IntegratorConfig,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h_abs: f64,
    dir: f64,
    k: [[f64; N]; 16],
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    fn new(sys: &'a S, y0: [f64; N], t0: f64, t1: f64, cfg: IntegratorConfig) -> Result<Self> {
        let mut f = [0.0; N];
        with_time(sys.rhs(t0, &y0, &mut f), t0)?;
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut st = Self { sys, cfg, t: t0, y: y0, f, h_abs: 0.0, dir, k: [[0.0; N]; 16] };
        st.h_abs = st.initial_step(t1)?;
        Ok(st)
    }

    fn scale(&self, y: &[f64; N], y2: &[f64; N]) -> [f64; N] {
        let mut s = [0.0; N];
        for k in 0..N {
            s[k] = self.cfg.abs_tol + y[k].abs().max(y2[k].abs()) * self.cfg.rel_tol;
        }
        s
    }

    fn initial_step(&self, t1: f64) -> Result<f64> {
        let span = (t1 - self.t).abs();
        if span == 0.0 {
            return Ok(0.0);
        }
        let scale = self.scale(&self.y, &self.y);
        let d0 = rms(&self.y, &scale);
        let d1 = rms(&self.f, &scale);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
        let mut y1 = self.y;
        for k in 0..N {
            y1[k] += h0 * self.dir * self.f[k];
        }
        let mut f1 = [0.0; N];
        with_time(self.sys.rhs(self.t + h0 * self.dir, &y1, &mut f1), self.t)?;
        let mut diff = [0.0; N];
        for k in 0..N {
            diff[k] = f1[k] - self.f[k];
        }
        let d2 = rms(&diff, &scale) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        Ok((100.0 * h0).min(h1).min(span).min(self.cfg.max_step))
    }

    fn stages(&mut self, h: f64) -> Result<[f64; N]> {
        use tableau::{A, B, C};
        self.k[0] = self.f;
        for s in 1..12 {
            let mut ys = self.y;
            for k in 0..N {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][k];
                }
                ys[k] += h * acc;
            }
            let mut out = [0.0; N];
            with_time(self.sys.rhs(self.t + C[s] * h, &ys, &mut out), self.t)?;
            self.k[s] = out;
        }
        let mut y_new = self.y;
        for k in 0..N {
            let mut acc = 0.0;
            for j in 0..12 {
                acc += B[j] * self.k[j][k];
            }
            y_new[k] += h * acc;
        }
        Ok(y_new)
    }

    fn error_norm(&self, h: f64, scale: &[f64; N]) -> f64 {
        use tableau::{E3, E5};
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for k in 0..N {
            let mut a5 = 0.0;
            let mut a3 = 0.0;
            for j in 0..13 {
                a5 += E5[j] * self.k[j][k];
                a3 += E3[j] * self.k[j][k];
            }
            e5 += (a5 / scale[k]).powi(2);
            e3 += (a3 / scale[k]).powi(2);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
    }

    /// Takes one accepted step not passing `t1`; returns the dense step.
    fn step(&mut self, t1: f64) -> Result<DenseStep<N>> {
        let min_step = 10.0 * ((self.t.abs() + 1.0) * f64::EPSILON);
        let mut h_abs = self.h_abs.min(self.cfg.max_step);
        if h_abs < min_step {
            h_abs = min_step;
        }
        loop {
            if h_abs < min_step {
                return Err(Error::StepUnderflow(self.t));
            }
            let mut h = h_abs * self.dir;
            let mut t_new = self.t + h;
            if self.dir * (t_new - t1) > 0.0 {
                t_new = t1;
            }
            h = t_new - self.t;
            h_abs = h.abs();
            let y_new = self.stages(h)?;
            let mut f_new = [0.0; N];
            with_time(self.sys.rhs(t_new, &y_new, &mut f_new), t_new)?;
            self.k[12] = f_new;
            let scale = self.scale(&self.y, &y_new);
            let err = self.error_norm(h, &scale);
            if err < 1.0 {
                let factor = if err == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * err.powf(-1.0 / 8.0)) };
                let dense = self.dense(h, t_new, &y_new, &f_new)?;
                self.t = t_new;
                self.y = y_new;
                self.f = f_new;
                self.h_abs = h_abs * factor;
                return Ok(dense);
            }
            h_abs *= MIN_FACTOR.max(SAFETY * err.powf(-1.0 / 8.0));
        }
    }

    fn dense(&mut self, h: f64, t_new: f64, y_new: &[f64; N], f_new: &[f64; N]) -> Result<DenseStep<N>> {
        use tableau::{A, C, D};
        for s in 13..16 {
            let mut ys = self.y;
            for k in 0..N {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * self.k[j][k];
                }
                ys[k] += h * acc;
            }
            let mut out = [0.0; N];
            with_time(self.sys.rhs(self.t + C[s] * h, &ys, &mut out), self.t)?;
            self.k[s] = out;
        }
        let mut coef = [[0.0; N]; 7];
        for k in 0..N {
            let dy = y_new[k] - self.y[k];
            coef[0][k] = dy;
            coef[1][k] = h * self.f[k] - dy;
            coef[2][k] = 2.0 * dy - h * (f_new[k] + self.f[k]);
            for (r, drow) in D.iter().enumerate() {
                let mut acc = 0.0;
                for j in 0..16 {
                    acc += drow[j] * self.k[j][k];
                }
                coef[3 + r][k] = h * acc;
            }
        }
        Ok(DenseStep { t_old: self.t, t_new, y_old: self.y, y_new: *y_new, coef })
    }
}

/// Propagates from `t0` to `t1` keeping dense output.
pub fn propagate<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<N>> {
    let mut traj = Trajectory { t0, y0, steps: Vec::new() };
    if t1 == t0 {
        return Ok(traj);
    }
    let mut st = Stepper::new(sys, y0, t0, t1, *cfg)?;
    while st.t != t1 {
        traj.steps.push(st.step(t1)?);
    }
    Ok(traj)
}

/// Propagates from `t0` to `t1`, returning only the final state.
pub fn propagate_end<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<[f64; N]> {
    if t1 == t0 {
        return Ok(y0);
    }
    let mut st = Stepper::new(sys, y0, t0, t1, *cfg)?;
    while st.t != t1 {
        st.step(t1)?;
    }
    Ok(st.y)
}

/// Joint propagation of a state and its state-transition matrix.
pub fn propagate_with_stm(
    params: &ModelParams,
    start: &PhaseState,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(PhaseState, nalgebra::Matrix4<f64>)> {
    let v = crate::dynamics::VariationalState::identity(*start);
    let y = propagate_end(&Variational(*params), v.to_array(), t0, t1, cfg)?;
    let v = crate::dynamics::VariationalState::from_slice(&y);
    Ok((v.state, v.stm))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

/// Scalar function of the phase state.
pub type Scalar = fn(&PhaseState) -> f64;

/// A section {event = 0} crossed in `direction` (physical time) where the guard holds.
#[derive(Debug, Clone, Copy)]
pub struct SectionSpec {
    pub event: Scalar,
    pub direction: Direction,
    pub guard: Option<(Scalar, Sign)>,
}

impl SectionSpec {
    /// 𝒮ₓ = {y = 0, p_y < 0}.
    pub fn sx() -> Self {
        Self { event: |z| z.y, direction: Direction::Either, guard: Some((|z| z.py, Sign::Negative)) }
    }

    /// 𝒮_y = {x = 0, pₓ > 0}.
    pub fn sy() -> Self {
        Self { event: |z| z.x, direction: Direction::Either, guard: Some((|z| z.px, Sign::Positive)) }
    }

    /// {y = 0} crossed with y decreasing.
    pub fn y_axis_decreasing() -> Self {
        Self { event: |z| z.y, direction: Direction::Decreasing, guard: None }
    }

    pub fn y_axis() -> Self {
        Self { event: |z| z.y, direction: Direction::Either, guard: None }
    }

    fn value<const N: usize>(&self, y: &[f64; N]) -> f64 {
        (self.event)(&PhaseState::from_slice(y))
    }

    fn accepts<const N: usize>(&self, y: &[f64; N], rising: bool) -> bool {
        let dir_ok = match self.direction {
            Direction::Increasing => rising,
            Direction::Decreasing => !rising,
            Direction::Either => true,
        };
        let guard_ok = match self.guard {
            None => true,
            Some((g, Sign::Positive)) => g(&PhaseState::from_slice(y)) > 0.0,
            Some((g, Sign::Negative)) => g(&PhaseState::from_slice(y)) < 0.0,
        };
        dir_ok && guard_ok
    }
}

/// A located section crossing.
#[derive(Debug, Clone, Copy)]
pub struct Crossing<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

impl<const N: usize> Crossing<N> {
    pub fn state(&self) -> PhaseState {
        PhaseState::from_slice(&self.y)
    }
}

/// Slopes of the event below this are reported as tangencies.
const TANGENCY_SLOPE: f64 = 1e-10;

fn scan_step<const N: usize>(
    section: &SectionSpec,
    step: &DenseStep<N>,
    g_old: f64,
    g_new: f64,
    cfg: &IntegratorConfig,
) -> Result<Option<Crossing<N>>> {
    if g_old == 0.0 || g_old.signum() == g_new.signum() {
        return Ok(None);
    }
    let forward = step.t_new > step.t_old;
    // Rising in physical time.
    let rising = if forward { g_new > g_old } else { g_old > g_new };
    let (a, b) = (step.t_old, step.t_new);
    let f = |t: f64| section.value(&step.eval(t));
    let tc = brent(f, a, b, cfg.event_tol.min(1e-14 * (1.0 + a.abs())), 200)
        .map_err(|_| Error::NoCrossing(b))?;
    let y = step.eval(tc);
    if !section.accepts(&y, rising) {
        return Ok(None);
    }
    let dt = 1e-6 * (b - a).abs().max(1e-9);
    let slope = (f((tc + dt).min(a.max(b))) - f((tc - dt).max(a.min(b)))) / (2.0 * dt);
    if slope.abs() < TANGENCY_SLOPE {
        return Err(Error::Tangency(tc));
    }
    Ok(Some(Crossing { t: tc, y }))
}

/// Shared engine: integrates until the `n`-th accepted crossing or `t_max`.
fn run_to_section<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    y0: [f64; N],
    t0: f64,
    section: &SectionSpec,
    n: usize,
    t_max: f64,
    cfg: &IntegratorConfig,
    keep: bool,
) -> Result<(Crossing<N>, Vec<DenseStep<N>>)> {
    if n == 0 {
        return Err(Error::Parameter("n_crossings must be at least 1".into()));
    }
    let mut st = Stepper::new(sys, y0, t0, t_max, *cfg)?;
    let mut kept = Vec::new();
    let mut count = 0;
    // The start itself never counts: a zero start value takes its sign from the first step.
    let mut g_prev = section.value(&y0);
    while st.t != t_max {
        let step = st.step(t_max)?;
        let g_new = section.value(&step.y_new);
        let hit = if g_prev == 0.0 { None } else { scan_step(section, &step, g_prev, g_new, cfg)? };
        g_prev = g_new;
        if let Some(c) = hit {
            count += 1;
            if count == n {
                if keep {
                    // Close the leg exactly at the crossing time.
                    let sub = propagate(sys, *step.y_old(), step.t_old, c.t, cfg)?;
                    kept.extend(sub.steps);
                }
                return Ok((c, kept));
            }
        }
        if keep {
            kept.push(step);
        }
    }
    Err(Error::NoCrossing(t_max))
}

/// n-th crossing of `section` starting from `start` at time `t0`, searching
/// towards `t_max` (which may lie in the past).
pub fn flow_to_section<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    start: [f64; N],
    t0: f64,
    section: &SectionSpec,
    n: usize,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<Crossing<N>> {
    run_to_section(sys, start, t0, section, n, t_max, cfg, false).map(|(c, _)| c)
}

/// As [`flow_to_section`], also returning the dense trajectory up to the crossing.
pub fn propagate_to_section<S: OdeSystem<N>, const N: usize>(
    sys: &S,
    start: [f64; N],
    t0: f64,
    section: &SectionSpec,
    n: usize,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(Crossing<N>, Trajectory<N>)> {
    let (c, steps) = run_to_section(sys, start, t0, section, n, t_max, cfg, true)?;
    Ok((c, Trajectory { t0, y0: start, steps }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let sys = FnSystem(|_t: f64, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        });
        let cfg = IntegratorConfig::default();
        let tr = propagate(&sys, [1.0, 0.0], 0.0, 10.0, &cfg).unwrap();
        let e = tr.end();
        assert!((e[0] - 10f64.cos()).abs() < 1e-11);
        for k in 0..50 {
            let t = 0.2 * k as f64 + 0.013;
            let y = tr.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
        }
        let back = propagate(&sys, [1.0, 0.0], 0.0, -3.0, &cfg).unwrap();
        assert!((back.eval(-1.5)[0] - 1.5f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn zero_span_is_identity() {
        let sys = Ch4bp(ModelParams::default());
        let tr = propagate(&sys, [0.6, 0.0, 0.0, 1.0], 0.0, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.nodes().len(), 1);
        assert_eq!(tr.end(), [0.6, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn section_on_oscillator() {
        let sys = FnSystem(|_t: f64, y: &[f64; 4], dy: &mut [f64; 4]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            dy[2] = 0.0;
            dy[3] = 0.0;
            Ok(())
        });
        // x = cos t; y = -sin t.  y = 0 again at t = π (start excluded).
        let sec = SectionSpec::y_axis();
        let c = flow_to_section(&sys, [1.0, 0.0, 0.0, 0.0], 0.0, &sec, 1, 10.0, &IntegratorConfig::default())
            .unwrap();
        assert!((c.t - std::f64::consts::PI).abs() < 1e-11);
        let dec = SectionSpec::y_axis_decreasing();
        let c = flow_to_section(&sys, [1.0, 0.0, 0.0, 0.0], 0.0, &dec, 1, 10.0, &IntegratorConfig::default())
            .unwrap();
        assert!((c.t - 2.0 * std::f64::consts::PI).abs() < 1e-11);
        let (c2, tr) =
            propagate_to_section(&sys, [1.0, 0.0, 0.0, 0.0], 0.0, &sec, 2, 10.0, &IntegratorConfig::default())
                .unwrap();
        assert!((c2.t - 2.0 * std::f64::consts::PI).abs() < 1e-11);
        assert!((tr.t_end() - c2.t).abs() < 1e-14);
    }
}
