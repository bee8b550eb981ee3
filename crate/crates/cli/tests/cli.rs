use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn h4bp(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h4bp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn l1_energy(dir: &Path) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("equilibria.json")).unwrap()).unwrap();
    v[0]["energy"].as_f64().unwrap()
}

#[test]
fn equilibria_are_deterministic_and_match_h_l1() {
    let d = tempfile::tempdir().unwrap();
    ok(&h4bp(d.path(), &["equilibria"]));
    let first = fs::read(d.path().join("equilibria.json")).unwrap();
    ok(&h4bp(d.path(), &["equilibria"]));
    assert_eq!(first, fs::read(d.path().join("equilibria.json")).unwrap());
    assert!((l1_energy(d.path()) - -2.16286).abs() < 1e-5);
}

#[test]
fn mu_override_changes_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&h4bp(a.path(), &["equilibria"]));
    ok(&h4bp(b.path(), &["equilibria", "--mu", "0.01"]));
    assert!((l1_energy(a.path()) - l1_energy(b.path())).abs() > 1e-3);
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "# comment\nmu = 0.01\neps = 0.002\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(&h4bp(&d.path().join("a"), &["equilibria", "--config", c]));
    ok(&h4bp(&d.path().join("b"), &["equilibria", "--mu", "0.01"]));
    assert_eq!(fs::read(d.path().join("a/equilibria.json")).unwrap(), fs::read(d.path().join("b/equilibria.json")).unwrap());
    // Flags override the file.
    ok(&h4bp(&d.path().join("c"), &["equilibria", "--config", c, "--mu", "0.02"]));
    assert!((l1_energy(&d.path().join("a")) - l1_energy(&d.path().join("c"))).abs() > 1e-4);

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = h4bp(&d.path().join("e"), &["equilibria", "--config", c]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn invalid_flags_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["equilibria", "--range", "0.6:abc:0.005"][..],
        &["equilibria", "--range", "0.6"],
        &["equilibria", "--grid", "4"],
        &["equilibria", "--channel", "hom-z3"],
        &["equilibria", "--mechanism", "three-map"],
        &["equilibria", "--mu", "1.5"],
    ] {
        let o = h4bp(d.path(), args);
        assert!(!o.status.success(), "{args:?} accepted");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn missing_upstream_stage_names_the_command() {
    let d = tempfile::tempdir().unwrap();
    let o = h4bp(d.path(), &["chart", "--range", "0.63:0.63:0.005", "--channel", "het-z1"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("h4bp connections"), "{err}");

    let o = h4bp(d.path(), &["verify", "--mechanism", "single", "--channel", "het-z1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("h4bp chart"));
}

#[test]
fn family_matches_the_published_orbits() {
    let d = tempfile::tempdir().unwrap();
    ok(&h4bp(d.path(), &["family"]));
    let text = fs::read_to_string(d.path().join("family_reference.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let delta: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(delta.abs() < 1e-6, "{r}");
    }
}

#[test]
fn staged_pipeline_on_one_orbit() {
    let d = tempfile::tempdir().unwrap();
    let base = ["--range", "0.63:0.63:0.005", "--channel", "hom-z1", "--grid", "1x1", "--seed-count", "1000"];
    let run = |cmd: &str| {
        let mut a = vec![cmd];
        a.extend(base);
        h4bp(d.path(), &a)
    };
    ok(&run("connections"));
    let conn = fs::read(d.path().join("connections-hom-z1.csv")).unwrap();
    // Rerunning a stage reuses the cache and reproduces its outputs byte for byte.
    ok(&run("connections"));
    assert_eq!(conn, fs::read(d.path().join("connections-hom-z1.csv")).unwrap());

    ok(&run("chart"));
    let csv = fs::read_to_string(d.path().join("chart-hom-z1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    // Every float is written with 17 significant digits.
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields.len(), 4);
    for f in fields {
        let mantissa = f.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{f}");
    }
    assert!(!d.path().join("cache/.lock").exists());
}
