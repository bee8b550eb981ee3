//! Diffusion mechanisms: the single-map Birkhoff-sum criterion, the
//! two-map pointwise criterion, and pseudo-orbits of the first-order maps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::scattering::{ScatteringChart, ScatteringMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    SingleMapBirkhoff,
    TwoMap,
}

/// A θ-window assigned to one of the maps of a two-map scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapWindow {
    pub lo: f64,
    pub hi: f64,
    /// Index into the chart pair (0 → z₁ channel, 1 → z₂ channel).
    pub map: usize,
}

/// Two-map windows and threshold for the homoclinic channels.
pub const HOM_TWO_MAP: ([MapWindow; 2], f64) =
    ([MapWindow { lo: -0.885, hi: -0.4, map: 0 }, MapWindow { lo: -0.4, hi: 0.115, map: 1 }], 1.8);
/// Two-map windows and threshold for the heteroclinic channels.
pub const HET_TWO_MAP: ([MapWindow; 2], f64) =
    ([MapWindow { lo: -0.78, hi: -0.34, map: 0 }, MapWindow { lo: -0.34, hi: 0.22, map: 1 }], 7.0);

/// Single-map bounds: minimum Birkhoff integral over the channel.
pub const HOM_SINGLE_BOUND: f64 = 4.50;
pub const HET_SINGLE_BOUND: f64 = 6.18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub x_star: f64,
    pub channel: String,
    /// θ-window for two-map entries.
    pub window: Option<(f64, f64)>,
    /// Birkhoff integral, or window minimum of −∂S/∂θ∘σ₀.
    pub value: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub mechanism: Mechanism,
    pub channels: Vec<String>,
    pub x_range: (f64, f64),
    pub entries: Vec<ReportEntry>,
    pub threshold: f64,
    /// (x*-range length)·(min integral), single-map only.
    pub c1: Option<f64>,
    /// Sign of the integrals (−1 when diffusion runs towards decreasing action).
    pub direction: i8,
    /// Smallest value minus threshold (in the direction of the criterion).
    pub margin: f64,
    pub verdict: bool,
}

impl DiffusionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mechanism: {:?}   channels: {}", self.mechanism, self.channels.join(", "));
        let _ = writeln!(s, "{:>10}  {:>8}  {:>18}  {:>24}  pass", "x*", "channel", "window", "value");
        for e in &self.entries {
            let w = e.window.map(|(a, b)| format!("[{a:.3}, {b:.3}]")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "{:>10.6}  {:>8}  {:>18}  {:>24}  {}", e.x_star, e.channel, w, crate::io::fmt17(e.value), e.passes);
        }
        let _ = writeln!(s, "threshold: {}   margin: {:.6}   direction: {}", self.threshold, self.margin, self.direction);
        if let Some(c1) = self.c1 {
            let _ = writeln!(s, "C1: {c1:.6}");
        }
        let _ = writeln!(s, "verdict: {}", self.verdict);
        s
    }
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Resolution("θ grid needs at least three points".into()));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::Resolution("θ grid must be uniform".into()));
    }
    Ok(h)
}

/// ∫ −∂S/∂θ∘σ₀ dθ over the chart's unit θ-range at x*, by Simpson's rule,
/// cross-checked against the rule on every other node.
pub fn birkhoff_integral(chart: &ScatteringChart, x_star: f64) -> Result<f64> {
    let i = chart.row(x_star).ok_or_else(|| Error::Domain(format!("x* = {x_star} is not a chart row")))?;
    let h = uniform_step(&chart.theta_grid)?;
    let span = chart.theta_grid[chart.theta_grid.len() - 1] - chart.theta_grid[0];
    if (span - 1.0).abs() > 1e-9 {
        return Err(Error::Resolution(format!("θ grid must span one unit, spans {span}")));
    }
    let row = &chart.minus_ds_composed[i];
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Resolution(format!("chart row at x* = {x_star} has failed points")));
    }
    let n = row.len();
    if (n - 1) % 4 != 0 {
        return Err(Error::Resolution(format!("need 4k+1 θ nodes for the Richardson check, got {n}")));
    }
    let fine = simpson(row, h)?;
    let coarse_vals: Vec<f64> = row.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse_vals, 2.0 * h)?;
    if (fine - coarse).abs() > 1e-3 {
        return Err(Error::Resolution(format!("Simpson estimates disagree: {fine} vs {coarse}")));
    }
    Ok(fine)
}

/// Checks |Birkhoff integral| > bound at every chart row, all with one sign.
pub fn verify_single_map(chart: &ScatteringChart, bound: f64) -> Result<DiffusionReport> {
    let mut entries = Vec::new();
    let mut vals = Vec::new();
    for &x in &chart.x_grid {
        let v = birkhoff_integral(chart, x)?;
        vals.push(v);
        entries.push(ReportEntry { x_star: x, channel: chart.label.to_string(), window: None, value: v, passes: false });
    }
    let direction: i8 = if vals.iter().all(|v| *v < 0.0) { -1 } else { 1 };
    for e in &mut entries {
        e.passes = f64::from(direction) * e.value > bound;
    }
    let min_abs = vals.iter().map(|v| f64::from(direction) * v).fold(f64::INFINITY, f64::min);
    let (lo, hi) = x_range(&chart.x_grid);
    Ok(DiffusionReport {
        mechanism: Mechanism::SingleMapBirkhoff,
        channels: vec![chart.label.to_string()],
        x_range: (lo, hi),
        verdict: entries.iter().all(|e| e.passes),
        entries,
        threshold: bound,
        c1: Some((hi - lo) * min_abs),
        direction,
        margin: min_abs - bound,
    })
}

fn x_range(xs: &[f64]) -> (f64, f64) {
    (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Checks that on each window the designated map has −∂S/∂θ∘σ₀ > c at every
/// grid node (at least 40 nodes per window) and every x*.
pub fn verify_two_map(charts: [&ScatteringChart; 2], windows: &[MapWindow], c: f64) -> Result<DiffusionReport> {
    if charts[0].x_grid != charts[1].x_grid {
        return Err(Error::Domain("the two charts must share the x* grid".into()));
    }
    let mut entries = Vec::new();
    for (i, &x) in charts[0].x_grid.iter().enumerate() {
        for w in windows {
            let ch = charts.get(w.map).ok_or_else(|| Error::Domain(format!("no map {}", w.map)))?;
            let vals: Vec<f64> = ch
                .theta_grid
                .iter()
                .zip(&ch.minus_ds_composed[i])
                .filter(|(th, _)| **th >= w.lo - 1e-12 && **th <= w.hi + 1e-12)
                .map(|(_, v)| *v)
                .collect();
            if vals.len() < 40 {
                return Err(Error::Resolution(format!(
                    "window [{}, {}] has {} θ nodes, need ≥ 40",
                    w.lo,
                    w.hi,
                    vals.len()
                )));
            }
            let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
            entries.push(ReportEntry { x_star: x, channel: ch.label.to_string(), window: Some((w.lo, w.hi)), value: m, passes: m > c });
        }
    }
    let min = entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    Ok(DiffusionReport {
        mechanism: Mechanism::TwoMap,
        channels: charts.iter().map(|c| c.label.to_string()).collect(),
        x_range: x_range(&charts[0].x_grid),
        verdict: entries.iter().all(|e| e.passes),
        entries,
        threshold: c,
        c1: None,
        direction: 1,
        margin: min - c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    Single,
    GreedyTwoMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoStep {
    pub x_star: f64,
    pub action: f64,
    pub theta: f64,
    /// Map applied to reach the next point (None for the last point).
    pub map: Option<usize>,
    pub delta_action: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub eps: f64,
    pub policy: Policy,
    pub points: Vec<PseudoStep>,
    /// True when the orbit stopped by leaving the channels' domain.
    pub exited: bool,
    pub exit_reason: Option<String>,
}

impl PseudoOrbit {
    pub fn net_action(&self) -> f64 {
        self.points.last().map(|p| p.action).unwrap_or(0.0) - self.points.first().map(|p| p.action).unwrap_or(0.0)
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(|p| p.map.is_some()).map(|p| p.delta_action)
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| vec![p.x_star, p.action, p.theta, p.map.map(|m| m as f64).unwrap_or(-1.0), p.delta_action])
            .collect();
        crate::io::csv(&["x_star", "action", "theta", "map", "delta_action"], &rows)
    }
}

/// Iterates first-order scattering maps from (x*, θ). `Single` always uses
/// the first map; `GreedyTwoMap` uses the one with the larger −∂S/∂θ∘σ₀
/// (ties go to the first).
pub fn pseudo_orbit(
    maps: &[&ScatteringMap<'_>],
    policy: Policy,
    start: (f64, f64),
    eps: f64,
    n_steps: usize,
) -> Result<PseudoOrbit> {
    if maps.is_empty() {
        return Err(Error::Parameter("no scattering maps given".into()));
    }
    if !(0.0..=0.01).contains(&eps) {
        return Err(Error::Parameter(format!("eps = {eps} outside [0, 0.01]")));
    }
    let (mut x, mut th) = start;
    let mut action = maps[0].action(x)?;
    let mut points = Vec::new();
    let mut exit_reason = None;
    for _ in 0..n_steps {
        let choice = match policy {
            Policy::Single => Ok(0),
            Policy::GreedyTwoMap => {
                let mut best = (0, f64::NEG_INFINITY);
                let mut err = None;
                for (k, m) in maps.iter().enumerate() {
                    match m.minus_ds(x, th) {
                        Ok(v) if v > best.1 => best = (k, v),
                        Ok(_) => {}
                        Err(e) => err = Some(e),
                    }
                }
                if best.1.is_finite() {
                    Ok(best.0)
                } else {
                    Err(err.unwrap_or_else(|| Error::Domain("no map applies".into())))
                }
            }
        };
        let step = choice.and_then(|k| Ok((k, maps[k].apply(x, action, th, eps)?)));
        match step {
            Ok((k, s)) => {
                points.push(PseudoStep { x_star: x, action, theta: th, map: Some(k), delta_action: s.delta_action });
                x = s.x_star;
                action = s.action;
                th = s.theta;
            }
            Err(e @ Error::Domain(_)) => {
                exit_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    points.push(PseudoStep { x_star: x, action, theta: th, map: None, delta_action: 0.0 });
    Ok(PseudoOrbit { eps, policy, points, exited: exit_reason.is_some(), exit_reason })
}
