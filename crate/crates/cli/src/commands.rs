use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use h4bp::connections::{
    assemble_channel, connection_from_candidates, connection_orbits, symmetric_points_of, Channel, ChannelLabel,
};
use h4bp::diffusion::{
    birkhoff_integral, pseudo_orbit, verify_single_map, verify_two_map, DiffusionReport, Policy, HET_SINGLE_BOUND,
    HET_TWO_MAP, HOM_SINGLE_BOUND, HOM_TWO_MAP,
};
use h4bp::io::{csv, fmt17};
use h4bp::manifolds::{
    globalize_to_cut, seed_manifold, tangency_curve, BranchSign, ConnectionCandidate, ConnectionType, ManifoldKind,
};
use h4bp::orbits::{continue_family, lagrange_points, orbit_at, Side};
use h4bp::scattering::{build_chart, linspace, ScatteringChart, ScatteringMap};
use serde_json::json;

use crate::cache::{write_atomic, Cache, CacheLock};
use crate::config::{MechanismChoice, RunConfig};
use crate::output::json17;
use crate::reference as refv;
use crate::CliError;

type Written = Vec<PathBuf>;

fn emit(cfg: &RunConfig, name: &str, text: &str, written: &mut Written) -> Result<(), CliError> {
    let p = cfg.out.join(name);
    write_atomic(&p, text)?;
    written.push(p);
    Ok(())
}

fn tag(kind: ConnectionType) -> &'static str {
    match kind {
        ConnectionType::Homoclinic => "hom",
        ConnectionType::Heteroclinic => "het",
    }
}

fn pair(label: ChannelLabel) -> [ChannelLabel; 2] {
    match label.kind() {
        ConnectionType::Homoclinic => [ChannelLabel::HomZ1, ChannelLabel::HomZ2],
        ConnectionType::Heteroclinic => [ChannelLabel::HetZ1, ChannelLabel::HetZ2],
    }
}

pub fn equilibria(cfg: &RunConfig) -> Result<Written, CliError> {
    let params = cfg.params()?;
    let eq = lagrange_points(&params)?;
    let mut w = Vec::new();
    emit(cfg, "equilibria.json", &json17(&serde_json::to_value(eq.as_slice())?), &mut w)?;
    let mut t = format!("{:<4} {:>25} {:>25} {:>25}  stability\n", "", "x", "y", "h");
    for e in &eq {
        let _ = writeln!(
            t,
            "{:<4} {:>25} {:>25} {:>25}  {:?}",
            format!("{:?}", e.label),
            fmt17(e.position.0),
            fmt17(e.position.1),
            fmt17(e.energy),
            e.stability
        );
    }
    emit(cfg, "equilibria.txt", &t, &mut w)?;
    Ok(w)
}

pub fn family(cfg: &RunConfig) -> Result<Written, CliError> {
    let params = cfg.params()?;
    let (a, b, s) = cfg.range;
    let fam = continue_family((a, b), s, Side::L1, &params, &cfg.integrator())?;
    let mut w = Vec::new();
    emit(cfg, "family.csv", &fam.to_csv(), &mut w)?;
    let mut rows = Vec::new();
    for o in &fam.orbits {
        if let Some(i) = refv::row(o.orbit.x_star) {
            let (h, yd, t) = refv::ORBITS[i];
            for (q, c, r) in [("h", o.orbit.energy, h), ("ydot", o.orbit.ydot_star(), yd), ("T", o.orbit.period, t)] {
                rows.push((o.orbit.x_star, q.to_string(), c, r));
            }
        }
    }
    emit(cfg, "family_reference.csv", &comparison_csv("orbits", &rows), &mut w)?;
    if !fam.failures.is_empty() {
        let t: String = fam.failures.iter().map(|(x, e)| format!("{x}: {e}\n")).collect();
        emit(cfg, "family_failures.txt", &t, &mut w)?;
    }
    Ok(w)
}

fn comparison_csv(table: &str, rows: &[(f64, String, f64, f64)]) -> String {
    let mut s = String::from("table,x_star,quantity,computed,reference,delta\n");
    for (x, q, c, r) in rows {
        let _ = writeln!(s, "{table},{},{q},{},{},{}", fmt17(*x), fmt17(*c), fmt17(*r), fmt17(c - r));
    }
    s
}

/// Candidates for (kind, x*) from the cache, or computed and stored.
fn candidates(
    cfg: &RunConfig,
    cache: &Cache,
    kind: ConnectionType,
    x: f64,
) -> Result<Vec<ConnectionCandidate>, CliError> {
    if let Some(c) = cache.load(kind, x)? {
        return Ok(c);
    }
    let params = cfg.params()?;
    let (source, _) = connection_orbits(x, kind, &params, &cfg.integrator())?;
    let c = symmetric_points_of(&source, kind, &cfg.integrator(), &cfg.connection())?;
    cache.store(kind, x, &c)?;
    Ok(c)
}

/// Builds a channel from cached symmetric points; with `require`, missing
/// entries are an error pointing at the `connections` stage.
fn channel(cfg: &RunConfig, label: ChannelLabel, xs: &[f64], require: bool) -> Result<Channel, CliError> {
    let params = cfg.params()?;
    let icfg = cfg.integrator();
    let cache = Cache::open(cfg)?;
    let mut conns = Vec::new();
    for &x in xs {
        let cands = if require {
            cache.load(label.kind(), x)?.ok_or_else(|| CliError::Missing {
                artifact: format!("{} connection points at x* = {x}", tag(label.kind())),
                command: "connections",
            })?
        } else {
            let _lock = CacheLock::acquire(&cfg.out)?;
            candidates(cfg, &cache, label.kind(), x)?
        };
        let (source, target) = connection_orbits(x, label.kind(), &params, &icfg)?;
        conns.push(connection_from_candidates(label, &cands, source, target, &icfg, &cfg.connection())?);
    }
    Ok(assemble_channel(label, conns)?)
}

pub fn manifolds(cfg: &RunConfig) -> Result<Written, CliError> {
    let params = cfg.params()?;
    let icfg = cfg.integrator();
    let kind = cfg.channel.kind();
    let cache = Cache::open(cfg)?;
    let _lock = CacheLock::acquire(&cfg.out)?;
    let mut w = Vec::new();
    for x in cfg.x_values()? {
        let (source, _) = connection_orbits(x, kind, &params, &icfg)?;
        let (section, n) = h4bp::connections::search_section(kind);
        let branch = seed_manifold(&source, ManifoldKind::Unstable, BranchSign::Inner, cfg.displacement, cfg.seed_count)?;
        let cut = globalize_to_cut(&branch, section, n, &icfg)?;
        let stem = format!("manifolds/{}-x{x:.6}", tag(kind));
        emit(cfg, &format!("{stem}-unstable.csv"), &cut.to_csv(), &mut w)?;
        emit(cfg, &format!("{stem}-stable.csv"), &cut.mirrored().to_csv(), &mut w)?;
        let tc = tangency_curve(source.orbit.energy, section, &params, 801, (-1.2, 1.2))?;
        let rows: Vec<Vec<f64>> = tc.iter().map(|(u, v)| vec![*u, *v]).collect();
        emit(cfg, &format!("{stem}-tangency.csv"), &csv(&["u", "v"], &rows), &mut w)?;
        if cache.load(kind, x)?.is_none() {
            let c = h4bp::manifolds::find_symmetric_connection(&branch, &cut, &icfg)?;
            cache.store(kind, x, &c)?;
        }
    }
    Ok(w)
}

pub fn connections(cfg: &RunConfig) -> Result<Written, CliError> {
    let ch = channel(cfg, cfg.channel, &cfg.x_values()?, false)?;
    let mut w = Vec::new();
    emit(cfg, &format!("connections-{}.csv", cfg.channel), &ch.to_csv(), &mut w)?;
    let pts: Vec<_> = ch.connections.iter().map(|c| c.point).collect();
    emit(cfg, &format!("connections-{}.json", cfg.channel), &json17(&serde_json::to_value(pts)?), &mut w)?;
    Ok(w)
}

fn chart_rows(cfg: &RunConfig) -> Vec<f64> {
    let (a, b, _) = cfg.range;
    linspace(a, b, cfg.grid.0)
}

fn make_chart(cfg: &RunConfig, label: ChannelLabel, require: bool) -> Result<ScatteringChart, CliError> {
    let ch = channel(cfg, label, &chart_rows(cfg), require)?;
    let (lo, hi) = ch.window;
    Ok(build_chart(&ch, &linspace(lo, hi, cfg.grid.1), &cfg.melnikov())?)
}

pub fn chart(cfg: &RunConfig) -> Result<Written, CliError> {
    let c = make_chart(cfg, cfg.channel, true)?;
    let mut w = Vec::new();
    let stem = format!("chart-{}", cfg.channel);
    emit(cfg, &format!("{stem}.csv"), &c.to_csv(), &mut w)?;
    emit(cfg, &format!("{stem}.json"), &json17(&serde_json::to_value(&c)?), &mut w)?;
    emit(cfg, &format!("{stem}-S.gnuplot"), &c.to_gnuplot_matrix(false), &mut w)?;
    emit(cfg, &format!("{stem}-dS.gnuplot"), &c.to_gnuplot_matrix(true), &mut w)?;
    Ok(w)
}

fn load_chart(cfg: &RunConfig, label: ChannelLabel) -> Result<ScatteringChart, CliError> {
    let p = cfg.out.join(format!("chart-{label}.json"));
    if !p.exists() {
        return Err(CliError::Missing { artifact: p.display().to_string(), command: "chart" });
    }
    Ok(serde_json::from_str(&fs::read_to_string(p)?)?)
}

fn report_files(cfg: &RunConfig, stem: &str, r: &DiffusionReport, w: &mut Written) -> Result<(), CliError> {
    emit(cfg, &format!("{stem}.json"), &json17(&serde_json::to_value(r)?), w)?;
    emit(cfg, &format!("{stem}.txt"), &r.to_text(), w)
}

pub fn verify(cfg: &RunConfig, tables: bool) -> Result<Written, CliError> {
    if tables {
        return self::tables(cfg);
    }
    let mut w = Vec::new();
    match cfg.mechanism {
        MechanismChoice::Single => {
            let c = load_chart(cfg, cfg.channel)?;
            let bound = match cfg.channel.kind() {
                ConnectionType::Homoclinic => HOM_SINGLE_BOUND,
                ConnectionType::Heteroclinic => HET_SINGLE_BOUND,
            };
            let r = verify_single_map(&c, bound)?;
            report_files(cfg, &format!("verify-single-{}", cfg.channel), &r, &mut w)?;
        }
        MechanismChoice::TwoMap => {
            let [l1, l2] = pair(cfg.channel);
            let (c1, c2) = (load_chart(cfg, l1)?, load_chart(cfg, l2)?);
            let (windows, c) = match cfg.channel.kind() {
                ConnectionType::Homoclinic => HOM_TWO_MAP,
                ConnectionType::Heteroclinic => HET_TWO_MAP,
            };
            let r = verify_two_map([&c1, &c2], &windows, c)?;
            report_files(cfg, &format!("verify-two-map-{}", tag(cfg.channel.kind())), &r, &mut w)?;
        }
    }
    Ok(w)
}

pub fn pseudo(cfg: &RunConfig) -> Result<Written, CliError> {
    let xs = cfg.x_values()?;
    let labels: Vec<ChannelLabel> = match cfg.mechanism {
        MechanismChoice::Single => vec![cfg.channel],
        MechanismChoice::TwoMap => pair(cfg.channel).to_vec(),
    };
    let channels: Vec<Channel> = labels.iter().map(|l| channel(cfg, *l, &xs, true)).collect::<Result<_, _>>()?;
    let maps: Vec<ScatteringMap<'_>> =
        channels.iter().map(|c| ScatteringMap::new(c, &cfg.melnikov())).collect::<Result<_, _>>()?;
    let refs: Vec<&ScatteringMap<'_>> = maps.iter().collect();
    let policy = match cfg.mechanism {
        MechanismChoice::Single => Policy::Single,
        MechanismChoice::TwoMap => Policy::GreedyTwoMap,
    };
    let po = pseudo_orbit(&refs, policy, (cfg.start_x, cfg.start_theta), cfg.eps, cfg.steps)?;
    let mut w = Vec::new();
    let stem = format!("pseudo-{}-{}", tag(cfg.channel.kind()), if policy == Policy::Single { "single" } else { "two-map" });
    emit(cfg, &format!("{stem}.csv"), &po.to_csv(), &mut w)?;
    let last = po.points.last().expect("orbit has a start point");
    let summary = json!({
        "eps": po.eps,
        "maps": labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "steps": po.points.len() - 1,
        "exited": po.exited,
        "exit_reason": po.exit_reason,
        "net_action": po.net_action(),
        "start_x_star": po.points[0].x_star,
        "end_x_star": last.x_star,
    });
    emit(cfg, &format!("{stem}.json"), &json17(&summary), &mut w)?;
    Ok(w)
}

/// Regenerates the benchmark tables next to the published values.
pub fn tables(cfg: &RunConfig) -> Result<Written, CliError> {
    let params = cfg.params()?;
    let icfg = cfg.integrator();
    let xs = refv::X_STAR.to_vec();
    let mut rows: Vec<(String, f64, String, f64, f64)> = Vec::new();
    let mut add = |t: &str, x: f64, q: &str, c: f64, r: f64| rows.push((t.to_string(), x, q.to_string(), c, r));

    let eq = lagrange_points(&params)?;
    add("equilibria", 0.0, "h_L1", eq[0].energy, refv::H_L1);
    for (i, &x) in xs.iter().enumerate() {
        let o = orbit_at(x, &params, &icfg)?;
        let (h, yd, t) = refv::ORBITS[i];
        add("orbits", x, "h", o.orbit.energy, h);
        add("orbits", x, "ydot", o.orbit.ydot_star(), yd);
        add("orbits", x, "T", o.orbit.period, t);
    }
    let mut chans = Vec::new();
    for label in ChannelLabel::ALL {
        chans.push(channel(cfg, label, &xs, false)?);
    }
    for (ch, table) in chans.iter().zip(["hom-z1", "hom-z2", "het-z1", "het-z2"]) {
        for (i, c) in ch.connections.iter().enumerate() {
            let x = xs[i];
            let z = c.point.z;
            match ch.label {
                ChannelLabel::HomZ1 | ChannelLabel::HomZ2 => {
                    let r = if ch.label == ChannelLabel::HomZ1 { refv::HOM_Z1[i] } else { refv::HOM_Z2[i] };
                    add(&format!("{table} point"), x, "x", z.x, r.0);
                    add(&format!("{table} point"), x, "ydot", z.ydot(), r.1);
                }
                _ => {
                    let r = if ch.label == ChannelLabel::HetZ1 { refv::HET_Z1[i] } else { refv::HET_Z2[i] };
                    add(&format!("{table} point"), x, "y", z.y, r.0);
                    add(&format!("{table} point"), x, "xdot", z.xdot(), r.1);
                }
            }
            let (fz, theta) = match ch.label {
                ChannelLabel::HomZ1 => refv::HOM_FOOT_Z1[i],
                ChannelLabel::HomZ2 => refv::HOM_FOOT_Z2[i],
                ChannelLabel::HetZ1 => refv::HET_FOOT_Z1[i],
                ChannelLabel::HetZ2 => refv::HET_FOOT_Z2[i],
            };
            let p = &c.point;
            add(&format!("{table} footpoints"), x, "|theta-|", p.theta_minus, theta);
            add(&format!("{table} footpoints"), x, "|theta+|", -c.theta_plus_lifted(), theta);
            // The tabulated return sits on whichever orbit has the same sign of x.
            let ret = if p.z_plus_return.x.signum() == fz[0].signum() { p.z_plus_return } else { p.z_minus_return };
            for (k, q) in ["x", "y", "xdot", "ydot"].iter().enumerate() {
                add(&format!("{table} footpoints"), x, q, ret.velocity_form()[k], fz[k]);
            }
        }
    }
    let n = if (cfg.grid.1 - 1) % 4 == 0 { cfg.grid.1 } else { 161 };
    for (ch, reference, table) in
        [(&chans[0], refv::BIRKHOFF_HOM, "hom birkhoff"), (&chans[2], refv::BIRKHOFF_HET, "het birkhoff")]
    {
        let (lo, hi) = ch.window;
        let chart = build_chart(ch, &linspace(lo, hi, n), &cfg.melnikov())?;
        for (i, &x) in chart.x_grid.iter().enumerate() {
            add(table, x, "integral", birkhoff_integral(&chart, x)?, reference[i]);
        }
    }
    let mut text = format!(
        "{:<20} {:>6} {:>10} {:>25} {:>25} {:>12}\n",
        "table", "x*", "quantity", "computed", "reference", "delta"
    );
    let mut csv = String::from("table,x_star,quantity,computed,reference,delta\n");
    for (t, x, q, c, r) in &rows {
        let _ = writeln!(text, "{t:<20} {x:>6.3} {q:>10} {:>25} {:>25} {:>12.3e}", fmt17(*c), fmt17(*r), c - r);
        let _ = writeln!(csv, "{t},{},{q},{},{},{}", fmt17(*x), fmt17(*c), fmt17(*r), fmt17(c - r));
    }
    let mut w = Vec::new();
    emit(cfg, "tables.txt", &text, &mut w)?;
    emit(cfg, "tables.csv", &csv, &mut w)?;
    Ok(w)
}
