use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fbcsf(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbcsf")).current_dir(cwd).args(args).output().expect("binary runs")
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            walk(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn spectrum_of_flat_diameter_matches_dispersion_roots() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["spectrum", "--surface", "flat-disk", "--geodesic", "diameter", "-k", "3", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(tmp.path().join("run/report.json"));
    let lam: Vec<f64> = r["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let mu1 = bisect(|m| m * m.tanh() - 1.0, 0.5, 2.0);
    let mu3 = bisect(|m| m * m.tan() + 1.0, 1.6, 3.1);
    assert!((lam[0] + mu1 * mu1).abs() < 1e-4, "{lam:?}");
    assert!(lam[1].abs() < 1e-6);
    assert!((lam[2] - mu3 * mu3).abs() < 1e-2);
    assert_eq!((r["index"].as_u64(), r["nullity"].as_u64()), (Some(1), Some(1)));
    let csv = std::fs::read_to_string(tmp.path().join("run/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn identical_runs_have_identical_manifests() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["flow", "--surface", "conformal-aniso", "--curve", "random", "--seed", "11", "--segments", "48", "--out", "run"];
    for dir in [&a, &b] {
        let o = fbcsf(dir.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = std::fs::read(a.path().join("run/manifest.json")).unwrap();
    let mb = std::fs::read(b.path().join("run/manifest.json")).unwrap();
    assert_eq!(ma, mb);
    // a different seed changes the payload
    let c = tempfile::tempdir().unwrap();
    let mut other = args;
    other[6] = "12";
    assert!(fbcsf(c.path(), &other).status.success());
    assert_ne!(ma, std::fs::read(c.path().join("run/manifest.json")).unwrap());
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["oracle", "--out", "run"]);
    assert!(o.status.success());
    let root = tmp.path().join("run");
    let m = read_json(root.join("manifest.json"));
    let listed: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    let mut present = Vec::new();
    walk(&root, &root, &mut present);
    present.retain(|p| p != "manifest.json");
    present.sort();
    assert_eq!(listed, present);
    for f in m["files"].as_array().unwrap() {
        let bytes = std::fs::read(root.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex(&Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    let golden = read_json(root.join("robin_flat_diameter.json"));
    assert!((golden["eigenvalues"][0].as_f64().unwrap() + 1.43923).abs() < 1e-5);
}

#[test]
fn unknown_config_key_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "task = \"spectrum\"\n[surface]\npreset = \"flat-disk\"\n[spectrum]\nk = 3\nkk = 4\n").unwrap();
    let o = fbcsf(tmp.path(), &["spectrum", "--config", "bad.toml", "--out", "run"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(err["key"], "kk");
    assert_eq!(err["error"], "config");
    let written = read_json(tmp.path().join("run/error.json"));
    assert_eq!(written, err);
    assert!(tmp.path().join("run/manifest.json").exists());
}

#[test]
fn nonpositive_tolerance_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "task = \"flow\"\n[surface]\npreset = \"flat-disk\"\n[numerics]\ndt_factor = -1.0\n").unwrap();
    let o = fbcsf(tmp.path(), &["flow", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerics.dt_factor"));
}

#[test]
fn flags_override_config_and_written_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "task = \"spectrum\"\n[surface]\npreset = \"flat-disk\"\n[spectrum]\nk = 2\n").unwrap();
    let o = fbcsf(tmp.path(), &["spectrum", "--config", "c.toml", "-k", "4", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(tmp.path().join("run/report.json"));
    assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 4);
    // the written config reproduces the run byte for byte
    let written = std::fs::read_to_string(tmp.path().join("run/config.toml")).unwrap();
    let o = fbcsf(tmp.path(), &["spectrum", "--config", "run/config.toml", "--out", "again"]);
    assert!(o.status.success());
    assert_eq!(written, std::fs::read_to_string(tmp.path().join("again/config.toml")).unwrap().replace("\"again\"", "\"run\""));
    assert_eq!(std::fs::read(tmp.path().join("run/spectrum.csv")).unwrap(), std::fs::read(tmp.path().join("again/spectrum.csv")).unwrap());
}

#[test]
fn unknown_preset_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["flow", "--surface", "torus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn minmax_on_the_ellipse_finds_the_minor_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["minmax", "--surface", "flat-ellipse", "--a", "2", "--b", "1", "--dim", "1", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(tmp.path().join("run/report.json"));
    let w = &r["widths"][0];
    assert!((w["omega"].as_f64().unwrap() - 2.0).abs() < 1e-3, "{w}");
    assert_eq!(w["stages"].as_array().unwrap().len(), 2);
    let index = std::fs::read_to_string(tmp.path().join("run/index.csv")).unwrap();
    assert_eq!(index.lines().count(), 2, "{index}");
    assert!(tmp.path().join("run/critical/dim1_0.csv").exists());
}

#[test]
fn verify_reports_slack_per_grid_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["verify", "--theorem", "4.3", "--eps", "0.1", "--max-times", "8", "--out", "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(tmp.path().join("run/report.json"));
    assert_eq!(r["holds"], true);
    let lines = std::fs::read_to_string(tmp.path().join("run/slack.jsonl")).unwrap();
    assert_eq!(lines.lines().count() as u64, r["grid_points"].as_u64().unwrap());
    for line in lines.lines() {
        let row: Value = serde_json::from_str(line).unwrap();
        let (psi, bound, slack) = (row["psi"].as_f64().unwrap(), row["bound"].as_f64().unwrap(), row["slack"].as_f64().unwrap());
        assert!((psi - bound - slack).abs() <= 1e-15 * psi.abs().max(1e-300) + 1e-18);
    }
}

#[test]
fn explicit_c0_above_threshold_is_rejected_before_auditing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fbcsf(tmp.path(), &["verify", "--theorem", "4.3", "--eps", "0.1", "--c0", "5.0", "--max-times", "4", "--out", "run"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let err = read_json(tmp.path().join("run/error.json"));
    assert_eq!(err["error"], "precondition");
    assert!(err["message"].as_str().unwrap().contains("admissible"));
}
