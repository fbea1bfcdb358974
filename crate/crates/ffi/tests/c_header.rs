//! Compiles a C program against the generated header and links it with the
//! static library built alongside this test.

use std::path::{Path, PathBuf};
use std::process::Command;

fn static_lib() -> PathBuf {
    // the test binary lives in <target>/<profile>/deps
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let profile = deps.parent().unwrap();
    for dir in [profile, deps.as_path()] {
        let p = dir.join("libfbcsf_ffi.a");
        if p.exists() {
            return p;
        }
    }
    panic!("libfbcsf_ffi.a not found next to {}", deps.display());
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

#[test]
fn header_compiles_and_links() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(static_lib())
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "exit {:?}\n{stdout}\n{}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("version "));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fbcsf.h")).unwrap();
    for name in [
        "fbcsf_version",
        "fbcsf_last_error",
        "fbcsf_surface_preset",
        "fbcsf_surface_free",
        "fbcsf_surface_gaussian_curvature",
        "fbcsf_chord_line",
        "fbcsf_chord_from_points",
        "fbcsf_chord_free",
        "fbcsf_chord_length",
        "fbcsf_chord_samples",
        "fbcsf_robin_spectrum",
        "fbcsf_flow",
        "fbcsf_run_config",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(header.contains("typedef struct FbcsfSurface FbcsfSurface;"));
}
