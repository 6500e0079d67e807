use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergohorizon::cli::svg::render_svg;
use ergohorizon::cli::HorizonDoc;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergohorizon"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    bin().arg(sub).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

const CANONICAL: &str = r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": 0.3 } }"#;

#[test]
fn ergosphere_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    let out = run("ergosphere", &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/ergo.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,r"));
    let model = ergohorizon::ModelParams::new(-2.0, 0.3).unwrap();
    let mut n = 0;
    for line in lines {
        let (t, r) = line.split_once(',').unwrap();
        let (t, r): (f64, f64) = (t.parse().unwrap(), r.parse().unwrap());
        assert_eq!(r, model.ergosphere_radius(t).unwrap());
        n += 1;
    }
    assert_eq!(n, 720);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "ergosphere");
    assert_eq!(manifest["config"]["model"]["eps"], 0.3);
}

#[test]
fn horizon_output_is_deterministic_and_redrawable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    for o in ["a", "b"] {
        let out = run("horizon", &cfg, &dir.path().join(o));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let svg_a = fs::read(dir.path().join("a/horizon.svg")).unwrap();
    let svg_b = fs::read(dir.path().join("b/horizon.svg")).unwrap();
    assert_eq!(svg_a, svg_b);
    assert_eq!(fs::read(dir.path().join("a/horizon.json")).unwrap(), fs::read(dir.path().join("b/horizon.json")).unwrap());

    let doc: HorizonDoc = serde_json::from_str(&fs::read_to_string(dir.path().join("a/horizon.json")).unwrap()).unwrap();
    assert_eq!(render_svg(&doc.scene()).as_bytes(), &svg_a[..]);
    let svg = String::from_utf8(svg_a).unwrap();
    assert_eq!(svg.matches("class=\"separatrix\"").count(), 2);
    assert_eq!(svg.matches("class=\"corner\"").count(), 1);
    assert_eq!(svg.matches("class=\"horizon\"").count(), 1);
}

#[test]
fn tangential_and_portrait_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    let o = dir.path().join("o");
    assert_eq!(run("tangential", &cfg, &o).status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("tangential.json")).unwrap()).unwrap();
    let points = doc["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0]["kind"], "saddle");
    assert_eq!(points[1]["kind"], "unstable_spiral");

    assert_eq!(run("portrait", &cfg, &o).status.code(), Some(0));
    for f in ["portrait_plus.csv", "portrait_minus.csv", "portrait.svg"] {
        assert!(o.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(o.join("portrait_plus.csv")).unwrap();
    assert!(csv.starts_with("family,x0,r,theta,rho\n"));
}

#[test]
fn verify_passes_then_fails_when_tightened() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CANONICAL);
    let ok = run("verify", &cfg, &dir.path().join("ok"));
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let tight = write_config(
        dir.path(),
        r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": 0.3 },
             "verify": { "tolerances": { "no_escape_max": -1.0 } } }"#,
    );
    let fail = run("verify", &tight, &dir.path().join("bad"));
    // negative tolerances are rejected as configuration errors
    assert_eq!(fail.status.code(), Some(2));

    let tight = write_config(
        dir.path(),
        r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": 0.3 },
             "verify": { "tolerances": { "horizon_closed_gap": 0.0, "rho_identity": 0.0 } } }"#,
    );
    let fail = run("verify", &tight, &dir.path().join("bad"));
    assert_eq!(fail.status.code(), Some(1), "{}", String::from_utf8_lossy(&fail.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bad/verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn config_errors_exit_two_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let cfg = write_config(dir.path(), r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": "x" } }"#);
    let out = run("horizon", &cfg, &o);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.eps"));

    let cfg = write_config(dir.path(), r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": 0.3, "bogus": 1 } }"#);
    let out = run("horizon", &cfg, &o);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let cfg = write_config(dir.path(), r#"{ "model": { "kind": "acoustic_log_vortex", "A0": -2.0, "eps": 0.0 } }"#);
    assert_eq!(run("horizon", &cfg, &o).status.code(), Some(2));

    let out = bin().arg("horizon").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("nonsense").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = run("horizon", &dir.path().join("missing.json"), &o);
    assert_eq!(out.status.code(), Some(2));
}
