//! Manifold cuts, symmetric connections and foot-points.

use std::sync::{Arc, OnceLock};

use h4bp::connections::{
    compute_footpoints, connection_from_candidates, connection_orbits, search_section, ChannelLabel, Connection,
    ConnectionConfig,
};
use h4bp::dynamics::energy_ch4bp;
use h4bp::manifolds::{
    find_symmetric_connection, globalize_to_cut, seed_manifold, transversality_angle, BranchSign, ConnectionCandidate,
    ConnectionType, ManifoldKind, SectionCut,
};
use h4bp::{IntegratorConfig, LyapunovOrbit, ModelParams};

struct Fixture {
    source: Arc<LyapunovOrbit>,
    target: Arc<LyapunovOrbit>,
    cut: SectionCut,
    cands: Vec<ConnectionCandidate>,
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn fixture(kind: ConnectionType) -> &'static Fixture {
    static HOM: OnceLock<Fixture> = OnceLock::new();
    static HET: OnceLock<Fixture> = OnceLock::new();
    let cell = match kind {
        ConnectionType::Homoclinic => &HOM,
        ConnectionType::Heteroclinic => &HET,
    };
    cell.get_or_init(|| {
        let (source, target) = connection_orbits(0.63, kind, &ModelParams::default(), &cfg()).unwrap();
        let cc = ConnectionConfig::default();
        let branch = seed_manifold(&source, ManifoldKind::Unstable, BranchSign::Inner, cc.displacement, cc.n_seeds).unwrap();
        let (section, n) = search_section(kind);
        let cut = globalize_to_cut(&branch, section, n, &cfg()).unwrap();
        let cands = find_symmetric_connection(&branch, &cut, &cfg()).unwrap();
        Fixture { source, target, cut, cands }
    })
}

fn connection(label: ChannelLabel) -> &'static Connection {
    static C: OnceLock<Vec<Connection>> = OnceLock::new();
    let all = C.get_or_init(|| {
        ChannelLabel::ALL
            .iter()
            .map(|&l| {
                let f = fixture(l.kind());
                connection_from_candidates(l, &f.cands, f.source.clone(), f.target.clone(), &cfg(), &ConnectionConfig::default())
                    .unwrap()
            })
            .collect()
    });
    &all[label as usize]
}

#[test]
fn two_symmetric_points_of_each_type() {
    for kind in [ConnectionType::Homoclinic, ConnectionType::Heteroclinic] {
        let f = fixture(kind);
        assert_eq!(f.cands.len(), 2, "{kind:?}");
        for c in &f.cands {
            assert!(c.symmetric);
            assert!(f.cut.section.symmetric_coordinate(&c.state).abs() < 1e-9);
        }
    }
}

/// Published homoclinic points at x* = 0.63, in (x, ẏ).
#[test]
fn homoclinic_points_at_063() {
    let f = fixture(ConnectionType::Homoclinic);
    let want = [(-0.11666113, -3.60215892), (-0.04141244, -6.64009686)];
    for (c, (x, yd)) in f.cands.iter().zip(want) {
        assert!((c.state.x - x).abs() < 1e-4, "x = {}", c.state.x);
        assert!((c.state.ydot() - yd).abs() < 1e-4, "ẏ = {}", c.state.ydot());
        assert!(c.state.y.abs() < 1e-12 && c.state.xdot().abs() < 1e-9);
    }
}

/// Published heteroclinic points at x* = 0.63, in (y, ẋ).
#[test]
fn heteroclinic_points_at_063() {
    let f = fixture(ConnectionType::Heteroclinic);
    let want = [(-0.30157444, 1.55664227), (-0.14991892, 3.02186543)];
    for (c, (y, xd)) in f.cands.iter().zip(want) {
        assert!((c.state.y - y).abs() < 1e-4, "y = {}", c.state.y);
        assert!((c.state.xdot() - xd).abs() < 1e-4, "ẋ = {}", c.state.xdot());
    }
}

#[test]
fn cut_points_lie_on_the_energy_level() {
    for kind in [ConnectionType::Homoclinic, ConnectionType::Heteroclinic] {
        let f = fixture(kind);
        let h = f.source.orbit.energy;
        for p in &f.cut.points {
            assert!((energy_ch4bp(&p.state, &f.source.params).unwrap() - h).abs() < 1e-8);
        }
    }
}

#[test]
fn seeds_have_small_energy_error() {
    let f = fixture(ConnectionType::Homoclinic);
    let b = seed_manifold(&f.source, ManifoldKind::Unstable, BranchSign::Inner, 1e-6, 100).unwrap();
    assert!(b.seeds.iter().all(|s| s.energy_error.abs() < 1e-10));
}

#[test]
fn transversality() {
    let f = fixture(ConnectionType::Homoclinic);
    let z1 = &f.cands[0];
    let stable = f.cut.mirrored();
    let a = transversality_angle(&f.cut, &stable, z1).unwrap();
    assert!(a > 1e-3, "angle {a}");
    assert!(transversality_angle(&f.cut, &f.cut, z1).unwrap() < 1e-12);
}

#[test]
fn published_footpoint_phases_at_063() {
    // |θ±| for hom z₁, hom z₂, het z₁, het z₂.
    let want = [0.30161988, 0.46465922, 0.52702772, 0.06560153];
    for (l, w) in ChannelLabel::ALL.into_iter().zip(want) {
        let p = &connection(l).point;
        assert!((p.theta_minus - w).abs() < 1e-4 || (1.0 - p.theta_minus - w).abs() < 1e-4, "{l}: θ⁻ = {}", p.theta_minus);
    }
}

/// Symmetric connections have θ⁺ = −θ⁻ (mod 1); the two phases are
/// computed independently from the forward and backward legs.
#[test]
fn symmetric_phases_cancel() {
    for l in ChannelLabel::ALL {
        let p = &connection(l).point;
        let s = (p.theta_plus + p.theta_minus).rem_euclid(1.0);
        assert!(s.min(1.0 - s) < 1e-8, "{l}: θ⁺ + θ⁻ = {s}");
    }
}

#[test]
fn asymptotic_to_the_foot_orbits() {
    for l in ChannelLabel::ALL {
        let c = connection(l);
        let t = c.target.period();
        for k in [8.0, -8.0] {
            let z = c.state(k * t);
            let shadow = if k > 0.0 { c.shadow_plus(k * t) } else { c.shadow_minus(k * t) };
            assert!(z.dist(&shadow) < 1e-6, "{l} at {k}T: {}", z.dist(&shadow));
            let orbit = if k > 0.0 { &c.target } else { &c.source };
            assert!(orbit.distance(&z).0 < 1e-6);
        }
        assert!(c.source.distance(&c.point.z_minus).0 < 1e-8);
        assert!(c.target.distance(&c.point.z_plus).0 < 1e-8);
    }
}

/// Δ is a property of the connection orbit, not of the point chosen on it.
#[test]
fn phase_shift_is_invariant_along_the_orbit() {
    for l in [ChannelLabel::HomZ1, ChannelLabel::HetZ2] {
        let c = connection(l);
        let t = c.source.period();
        for s in [-0.7, -0.3, 0.3, 0.5, 0.9] {
            let mut cand = c.candidate;
            cand.state = c.state(s * t);
            let d = compute_footpoints(&cand, c.source.clone(), c.target.clone(), &cfg(), &ConnectionConfig::default()).unwrap();
            let dd = (d.point.delta - c.point.delta).rem_euclid(1.0);
            assert!(dd.min(1.0 - dd) < 1e-6, "{l} shifted by {s}T: ΔΔ = {dd}");
            let dt = (d.point.theta_minus - c.point.theta_minus - s).rem_euclid(1.0);
            assert!(dt.min(1.0 - dt) < 1e-6);
        }
    }
}

#[test]
fn channel_label_round_trip() {
    for l in ChannelLabel::ALL {
        assert_eq!(l.to_string().parse::<ChannelLabel>().unwrap(), l);
        let (a, b) = l.window();
        assert!((b - a - 1.0).abs() < 1e-15);
    }
    assert!("hom-z3".parse::<ChannelLabel>().is_err());
}
