//! Acceptance suite against the published benchmark values.
//!
//! Prints one PASS/FAIL line per criterion, followed by indented detail.
//! Criteria that the published numbers do not support are reported as
//! FAIL rather than loosened; the process still exits 0 so that the
//! workspace test run reflects the unit and property tests. Set
//! `H4BP_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::time::{Duration, Instant};

use h4bp::connections::{build_channel, compute_footpoints, Channel, ChannelLabel, ConnectionConfig};
use h4bp::diffusion::{
    birkhoff_integral, pseudo_orbit, verify_single_map, verify_two_map, Policy, HET_SINGLE_BOUND, HET_TWO_MAP,
    HOM_SINGLE_BOUND, HOM_TWO_MAP,
};
use h4bp::dynamics::{energy_ch4bp, symplectic_defect};
use h4bp::integrator::{propagate, propagate_end, Ch4bp};
use h4bp::numerics::simpson;
use h4bp::orbits::{continue_family, lagrange_points};
use h4bp::scattering::{build_chart, linspace, Melnikov, MelnikovConfig, ScatteringChart, ScatteringMap};
use h4bp::{IntegratorConfig, ModelParams, PhaseState, Side, Symmetry};

// Published values, in the tables' own (x, y, ẋ, ẏ) convention.

const XS: [f64; 4] = [0.615, 0.62, 0.625, 0.63];
const H_L1: f64 = -2.16286;
/// (h, ẏ*, T).
const TABLE_ORBITS: [[f64; 3]; 4] = [
    [-2.07715457, 0.48123483, 3.05967299],
    [-2.08671819, 0.45248801, 3.05678890],
    [-2.09582648, 0.42353750, 3.05406407],
    [-2.10446079, 0.39437305, 3.05150060],
];
/// Homoclinic points (x, 0, 0, ẏ).
const TABLE_HOM: [[[f64; 4]; 4]; 2] = [
    [
        [-0.14646739, 0.0, 0.0, -3.09272039],
        [-0.13707337, 0.0, 0.0, -3.23629663],
        [-0.12723761, 0.0, 0.0, -3.40227909],
        [-0.11666113, 0.0, 0.0, -3.60215892],
    ],
    [
        [-0.02675921, 0.0, 0.0, -8.40169252],
        [-0.03085457, 0.0, 0.0, -7.78778643],
        [-0.03563430, 0.0, 0.0, -7.20679133],
        [-0.04141244, 0.0, 0.0, -6.64009686],
    ],
];
/// Heteroclinic points z (upper signs); ẑ takes the lower signs.
const TABLE_HET: [[[f64; 4]; 4]; 2] = [
    [
        [0.0, -0.32513154, 1.41324947, 0.0],
        [0.0, -0.31736214, 1.45901631, 0.0],
        [0.0, -0.30951753, 1.50672557, 0.0],
        [0.0, -0.30157444, 1.55664227, 0.0],
    ],
    [
        [0.0, -0.13480207, 3.26837828, 0.0],
        [0.0, -0.13957356, 3.18684274, 0.0],
        [0.0, -0.14460595, 3.10468687, 0.0],
        [0.0, -0.14991892, 3.02186543, 0.0],
    ],
];
/// Foot-point rows (upper signs) and |θ±|, per channel hom z₁, hom z₂, het z₁, het z₂.
const TABLE_FOOT: [[([f64; 4], f64); 4]; 4] = [
    [
        ([0.61500027, -0.00000005, -0.00000100, 0.48123436], 0.27849625),
        ([0.62000004, -0.00000011, -0.00000028, 0.45248794], 0.28369125),
        ([0.62500023, -0.00000006, -0.00000083, 0.42353712], 0.29106293),
        ([0.63000040, -0.00000000, 0.00000132, 0.39437240], 0.30161988),
    ],
    [
        ([0.61499366, 0.00000076, 0.00001982, 0.48124537], 0.49677491),
        ([0.61999254, 0.00000079, 0.00002317, 0.45250024], 0.48835256),
        ([0.62499943, -0.00000216, 0.0000008, 0.42353842], 0.47799047),
        ([0.63000023, 0.00000018, 0.0000008, 0.39437267], 0.46465922),
    ],
    [
        ([0.61500108, 0.00000001, 0.00000360, 0.48123302], 0.56696772),
        ([0.62000004, 0.00000010, 0.00000045, 0.45248793], 0.55400246),
        ([0.62500059, 0.00000015, 0.00000215, 0.42353653], 0.54075381),
        ([-0.63000045, 0.00000009, 0.00000163, -0.39437232], 0.52702772),
    ],
    [
        ([0.61499894, -0.00000004, 0.00000329, 0.48123659], 0.04588521),
        ([0.61999901, -0.00000003, 0.00000316, 0.45248962], 0.05160310),
        ([0.62499909, -0.00000000, 0.00000300, 0.42353896], 0.05811547),
        ([0.62999918, -0.00000002, 0.00000285, 0.39437436], 0.06560153),
    ],
];
const BIRKHOFF_HOM: [f64; 4] = [4.504268, 4.522975, 4.530207, 4.546613];
const BIRKHOFF_HET: [f64; 4] = [6.185283, 6.375516, 6.551537, 6.713776];
const C1_HOM: f64 = 0.0675;
const C1_HET: f64 = 0.0927;
/// θ nodes per chart row (4k+1 for the Simpson cross-check).
const CHART_NODES: usize = 161;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    /// Records a check; a failed check fails the criterion.
    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(format!("     {what}"));
    }

    fn runtime(&mut self, t: Duration, limit: Duration, what: &str) {
        self.check(t <= limit, format!("{what} runtime {:.2?} (limit {:.0?})", t, limit));
    }
}

struct Context {
    params: ModelParams,
    icfg: IntegratorConfig,
    mcfg: MelnikovConfig,
    channels: Vec<Channel>,
    hom_time: Duration,
    het_time: Duration,
    charts: Vec<ScatteringChart>,
    chart_time: Duration,
}

impl Context {
    fn channel(&self, l: ChannelLabel) -> &Channel {
        &self.channels[l as usize]
    }

    fn chart(&self, l: ChannelLabel) -> &ScatteringChart {
        &self.charts[l as usize]
    }
}

fn build_context() -> Result<Context, String> {
    let params = ModelParams::default();
    let icfg = IntegratorConfig::default();
    let ccfg = ConnectionConfig::default();
    let mcfg = MelnikovConfig::default();
    let mut channels = Vec::new();
    let (mut hom_time, mut het_time) = (Duration::ZERO, Duration::ZERO);
    for l in ChannelLabel::ALL {
        let t = Instant::now();
        channels.push(build_channel(&XS, l, &params, &icfg, &ccfg).map_err(|e| format!("{l}: {e}"))?);
        match l {
            ChannelLabel::HomZ1 | ChannelLabel::HomZ2 => hom_time += t.elapsed(),
            _ => het_time += t.elapsed(),
        }
    }
    let t = Instant::now();
    let mut charts = Vec::new();
    for ch in &channels {
        let (lo, hi) = ch.window;
        charts.push(build_chart(ch, &linspace(lo, hi, CHART_NODES), &mcfg).map_err(|e| format!("{}: {e}", ch.label))?);
    }
    Ok(Context { params, icfg, mcfg, channels, hom_time, het_time, charts, chart_time: t.elapsed() })
}

fn c1_equilibria() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    match lagrange_points(&ModelParams::default()) {
        Ok(eq) => {
            let h = eq[0].energy;
            o.check((h - H_L1).abs() < 1e-5, format!("h_L1 = {h:.10} (published {H_L1}, Δ {:.2e})", h - H_L1));
        }
        Err(e) => o.check(false, format!("error: {e}")),
    }
    o.runtime(t.elapsed(), Duration::from_secs(1), "equilibria");
    o
}

fn c2_orbits() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    match continue_family((0.615, 0.63), 0.005, Side::L1, &ModelParams::default(), &IntegratorConfig::default()) {
        Ok(f) => {
            o.check(f.orbits.len() == 4, format!("{} orbits corrected", f.orbits.len()));
            for (lo, r) in f.orbits.iter().zip(TABLE_ORBITS) {
                let p = &lo.orbit;
                for (name, c, w) in [("h", p.energy, r[0]), ("ẏ*", p.ydot_star(), r[1]), ("T", p.period, r[2])] {
                    o.check((c - w).abs() < 1e-6, format!("x* = {:.3} {name} = {c:.9} (Δ {:.2e})", p.x_star, c - w));
                }
            }
        }
        Err(e) => o.check(false, format!("error: {e}")),
    }
    o.runtime(t.elapsed(), Duration::from_secs(10), "family");
    o
}

fn compare4(o: &mut Outcome, what: String, c: [f64; 4], w: [f64; 4], tol: f64) {
    let worst = (0..4).map(|k| (c[k] - w[k]).abs()).fold(0.0, f64::max);
    o.check(worst < tol, format!("{what}: max |Δ| {worst:.2e}"));
}

fn c3_homoclinic(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (k, l) in [ChannelLabel::HomZ1, ChannelLabel::HomZ2].into_iter().enumerate() {
        for (i, c) in ctx.channel(l).connections.iter().enumerate() {
            compare4(&mut o, format!("{l} x* = {}", XS[i]), c.point.z.velocity_form(), TABLE_HOM[k][i], 1e-4);
        }
    }
    o.runtime(ctx.hom_time, Duration::from_secs(180), "homoclinic search");
    o
}

fn c4_heteroclinic(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (k, l) in [ChannelLabel::HetZ1, ChannelLabel::HetZ2].into_iter().enumerate() {
        for (i, c) in ctx.channel(l).connections.iter().enumerate() {
            let z = c.point.z;
            compare4(&mut o, format!("{l} z x* = {}", XS[i]), z.velocity_form(), TABLE_HET[k][i], 1e-4);
            let lower = TABLE_HET[k][i].map(|v| -v);
            compare4(&mut o, format!("{l} ẑ x* = {}", XS[i]), Symmetry::S.apply(&z).velocity_form(), lower, 1e-4);
        }
    }
    o.runtime(ctx.het_time, Duration::from_secs(180), "heteroclinic search");
    o
}

fn c5_footpoints(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (k, l) in ChannelLabel::ALL.into_iter().enumerate() {
        for (i, c) in ctx.channel(l).connections.iter().enumerate() {
            let (row, theta) = TABLE_FOOT[k][i];
            let p = &c.point;
            let tm = p.theta_minus;
            let tp = -c.theta_plus_lifted();
            o.check(
                (tm - theta).abs() < 1e-4 && (tp - theta).abs() < 1e-4,
                format!("{l} x* = {}: θ⁻ = {tm:.8}, −θ⁺ = {tp:.8} (published {theta})", XS[i]),
            );
            // The tabulated foot-point lies on the orbit with the same sign of x.
            let ret = if p.z_plus_return.x.signum() == row[0].signum() { p.z_plus_return } else { p.z_minus_return };
            compare4(&mut o, format!("{l} x* = {} foot-point coordinates", XS[i]), ret.velocity_form(), row, 1e-5);
        }
    }
    o
}

fn birkhoff(ctx: &Context, l: ChannelLabel) -> Result<Vec<f64>, String> {
    let ch = ctx.chart(l);
    ch.x_grid.iter().map(|&x| birkhoff_integral(ch, x).map_err(|e| e.to_string())).collect()
}

fn c6_birkhoff(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (l, table) in [(ChannelLabel::HomZ1, BIRKHOFF_HOM), (ChannelLabel::HetZ1, BIRKHOFF_HET)] {
        match birkhoff(ctx, l) {
            Ok(v) => {
                for (i, (c, w)) in v.iter().zip(table).enumerate() {
                    o.check((c - w).abs() < 1e-3, format!("{l} x* = {}: {c:.6} vs {w} (Δ {:.3e})", XS[i], c - w));
                }
            }
            Err(e) => o.check(false, format!("{l}: {e}")),
        }
    }
    o.runtime(ctx.chart_time, Duration::from_secs(600), "charts");
    o
}

fn c7_single(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (l, bound, c1) in [(ChannelLabel::HomZ1, HOM_SINGLE_BOUND, C1_HOM), (ChannelLabel::HetZ1, HET_SINGLE_BOUND, C1_HET)] {
        match verify_single_map(ctx.chart(l), bound) {
            Ok(r) => {
                let min = r.entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
                o.check(min > bound, format!("{l}: min integral {min:.6} > {bound}"));
                let c = r.c1.unwrap_or(f64::NAN);
                o.check(r.verdict && c >= c1, format!("{l}: verdict {} C₁ = {c:.5} (need ≥ {c1}), direction {}", r.verdict, r.direction));
            }
            Err(e) => o.check(false, format!("{l}: {e}")),
        }
    }
    o
}

fn c8_two_map(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    for (pair, (windows, c)) in [
        ([ChannelLabel::HomZ1, ChannelLabel::HomZ2], HOM_TWO_MAP),
        ([ChannelLabel::HetZ1, ChannelLabel::HetZ2], HET_TWO_MAP),
    ] {
        match verify_two_map([ctx.chart(pair[0]), ctx.chart(pair[1])], &windows, c) {
            Ok(r) => {
                for e in &r.entries {
                    let (lo, hi) = e.window.unwrap_or((f64::NAN, f64::NAN));
                    o.check(e.passes, format!("{} x* = {} on [{lo}, {hi}]: min {:.5} > {c}", e.channel, e.x_star, e.value));
                }
            }
            Err(e) => o.check(false, format!("{}/{}: {e}", pair[0], pair[1])),
        }
    }
    o
}

fn c9_properties(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    let sys = Ch4bp(ctx.params);
    let hom = ctx.channel(ChannelLabel::HomZ1);
    let orbits: Vec<_> = hom.connections.iter().map(|c| c.target.clone()).collect();

    // Energy drift over 10T near each orbit.
    let mut drift = 0.0f64;
    for lo in &orbits {
        let z = lo.k0(0.3) + PhaseState::new(1e-4, 0.0, 0.0, 0.0);
        let h0 = energy_ch4bp(&z, &ctx.params).unwrap_or(f64::NAN);
        match propagate(&sys, z.to_array(), 0.0, 10.0 * lo.period(), &ctx.icfg) {
            Ok(tr) => {
                for (_, y) in tr.nodes() {
                    let h = energy_ch4bp(&PhaseState::from_slice(&y), &ctx.params).unwrap_or(f64::NAN);
                    drift = drift.max((h - h0).abs());
                }
            }
            Err(_) => drift = f64::NAN,
        }
    }
    o.check(drift < 1e-10, format!("energy drift over 10T: {drift:.2e}"));

    let defect = orbits.iter().map(|lo| symplectic_defect(&lo.monodromy)).fold(0.0, f64::max);
    o.check(defect < 1e-8, format!("monodromy symplectic defect: {defect:.2e}"));

    // Reversibility on three trajectories per symmetry.
    let mut rev = 0.0f64;
    for s in [Symmetry::S, Symmetry::SPrime] {
        for (k, th) in [0.1, 0.4, 0.7].into_iter().enumerate() {
            let z = orbits[k].k0(th) + PhaseState::new(2e-3, -1e-3, 0.0, 1e-3);
            let t = 2.0;
            let a = propagate_end(&sys, s.apply(&z).to_array(), 0.0, t, &ctx.icfg);
            let b = propagate_end(&sys, z.to_array(), 0.0, -t, &ctx.icfg);
            rev = match (a, b) {
                (Ok(a), Ok(b)) => rev.max(PhaseState::from_slice(&a).dist(&s.apply(&PhaseState::from_slice(&b)))),
                _ => f64::NAN,
            };
        }
    }
    o.check(rev < 1e-9, format!("reversibility residual: {rev:.2e}"));

    // Differentiation consistency: FD of S(θ + Δ) against the composed derivative.
    let thetas_of = |l: ChannelLabel| {
        let (lo, hi) = l.window();
        linspace(lo + 0.0125, hi - 0.0125, 21)
    };
    let mut worst = 0.0f64;
    for l in ChannelLabel::ALL {
        let chart = ctx.chart(l);
        let scale = chart.minus_ds_composed.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for c in &ctx.channel(l).connections {
            let Ok(m) = Melnikov::new(c, ctx.mcfg) else {
                worst = f64::NAN;
                continue;
            };
            for th in thetas_of(l) {
                let h = 1e-4;
                let s = |d: f64| m.s(th + c.point.delta + d);
                let r = match (s(h), s(-h), m.ds_composed(th)) {
                    (Ok(a), Ok(b), Ok(d)) => ((a - b) / (2.0 * h) - d).abs() / scale,
                    _ => f64::NAN,
                };
                worst = worst.max(r);
            }
        }
    }
    o.check(worst < 1e-4, format!("differentiation consistency (relative): {worst:.2e}"));

    // Δ invariance along one connection orbit per channel.
    let mut dworst = 0.0f64;
    for l in ChannelLabel::ALL {
        let c = &ctx.channel(l).connections[1];
        for s in [-0.8, -0.4, 0.2, 0.5, 0.9] {
            let mut cand = c.candidate;
            cand.state = c.state(s * c.source.period());
            let d = match compute_footpoints(&cand, c.source.clone(), c.target.clone(), &ctx.icfg, &ConnectionConfig::default()) {
                Ok(d) => (d.point.delta - c.point.delta).rem_euclid(1.0),
                Err(_) => f64::NAN,
            };
            dworst = dworst.max(d.min(1.0 - d));
        }
    }
    o.check(dworst < 1e-6, format!("Δ invariance along connection orbits: {dworst:.2e}"));

    // Doubling the truncation horizon.
    let mut hworst = 0.0f64;
    for l in [ChannelLabel::HomZ1, ChannelLabel::HetZ1] {
        let chart = ctx.chart(l);
        let h = chart.theta_grid[1] - chart.theta_grid[0];
        for (i, c) in ctx.channel(l).connections.iter().enumerate() {
            let Ok(mut m) = Melnikov::new(c, ctx.mcfg) else {
                hworst = f64::NAN;
                continue;
            };
            m.tau_lo *= 2.0;
            m.tau_hi *= 2.0;
            let vals: Result<Vec<f64>, _> = chart.theta_grid.iter().map(|&t| m.ds_composed(t).map(|v| -v)).collect();
            let doubled = vals.ok().and_then(|v| simpson(&v, h).ok()).unwrap_or(f64::NAN);
            let base = birkhoff_integral(chart, chart.x_grid[i]).unwrap_or(f64::NAN);
            hworst = hworst.max((doubled - base).abs());
        }
    }
    o.check(hworst < 1e-6, format!("horizon doubling changes Birkhoff integrals by {hworst:.2e}"));
    o
}

fn c10_pseudo(ctx: &Context) -> Outcome {
    let mut o = Outcome::new();
    let eps = 1e-3;
    let c_het = HET_TWO_MAP.1;
    let maps = match (
        ScatteringMap::new(ctx.channel(ChannelLabel::HetZ1), &ctx.mcfg),
        ScatteringMap::new(ctx.channel(ChannelLabel::HetZ2), &ctx.mcfg),
    ) {
        (Ok(a), Ok(b)) => [a, b],
        (Err(e), _) | (_, Err(e)) => {
            o.check(false, format!("scattering maps: {e}"));
            return o;
        }
    };
    let (xa, xb) = maps[0].x_range();
    let i_range = match (maps[0].action(xa), maps[0].action(xb)) {
        (Ok(a), Ok(b)) => (b - a).abs(),
        _ => f64::NAN,
    };
    let max_steps = (2.0 * i_range / (c_het * eps)).ceil() as usize;
    o.note(format!("action range {i_range:.5}, step budget {max_steps}"));
    match pseudo_orbit(&[&maps[0], &maps[1]], Policy::GreedyTwoMap, (0.628, 0.0), eps, max_steps) {
        Ok(po) => {
            let start = po.points[0].x_star;
            let end = po.points[po.points.len() - 1].x_star;
            let steps = po.points.len() - 1;
            let dx = (end - start).abs();
            o.check(
                dx >= 0.01 && steps <= max_steps,
                format!("net Δx* = {dx:.5} in {steps} steps (ΔI = {:.5}, exit: {})", po.net_action(), po.exit_reason.as_deref().unwrap_or("none")),
            );
            let floor = c_het * eps * 0.95;
            let incs: Vec<f64> = po.increments().collect();
            let below = incs.iter().filter(|d| **d < floor).count();
            let min = incs.iter().copied().fold(f64::INFINITY, f64::min);
            o.check(below == 0, format!("per-step gain ≥ {floor:.2e}: {below} of {} steps below, min {min:.3e}", incs.len()));
        }
        Err(e) => o.check(false, format!("pseudo-orbit: {e}")),
    }
    o
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "equilibria", c1_equilibria()));
    results.push((2, "Lyapunov orbit table", c2_orbits()));
    match build_context() {
        Ok(ctx) => {
            results.push((3, "homoclinic points", c3_homoclinic(&ctx)));
            results.push((4, "heteroclinic points", c4_heteroclinic(&ctx)));
            results.push((5, "foot-points and phases", c5_footpoints(&ctx)));
            results.push((6, "Birkhoff integrals", c6_birkhoff(&ctx)));
            results.push((7, "single-map verdicts", c7_single(&ctx)));
            results.push((8, "two-map verdicts", c8_two_map(&ctx)));
            results.push((9, "property suite", c9_properties(&ctx)));
            results.push((10, "pseudo-orbit demonstration", c10_pseudo(&ctx)));
        }
        Err(e) => {
            for (i, name) in [
                (3, "homoclinic points"),
                (4, "heteroclinic points"),
                (5, "foot-points and phases"),
                (6, "Birkhoff integrals"),
                (7, "single-map verdicts"),
                (8, "two-map verdicts"),
                (9, "property suite"),
                (10, "pseudo-orbit demonstration"),
            ] {
                let mut o = Outcome::new();
                o.check(false, format!("pipeline failed: {e}"));
                results.push((i, name, o));
            }
        }
    }
    let mut failed = 0;
    for (i, name, o) in &results {
        println!("{} criterion {i:>2}: {name}", if o.pass { "PASS" } else { "FAIL" });
        for l in &o.lines {
            println!("      {l}");
        }
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed in {:.1?}", results.len() - failed, started.elapsed());
    if failed > 0 && std::env::var("H4BP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
