//! Experiment runner: builds the surface and curve named by a config, runs
//! one task and writes its artifacts plus a hashed manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::chordarc::{compute_profile, profile_critical_c0, verify_noncollapsing, NoncollapsingOptions, ProfileFunction};
use crate::config::{CurveSpec, ExperimentConfig, Task, Theorem};
use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::flow::{blowup_profile, evolve_classify, FlowOutcome, FlowRun};
use crate::minmax::{index_attribution, ls_equal_width_probe, perturbed_copies, squeeze_audit, width, WidthReport};
use crate::numerics::bisect;
use crate::stability::{build_foliation, morse_index, robin_spectrum, select_perturbation, harnack_constant};
use crate::surface::DiskSurface;

pub const MANIFEST: &str = "manifest.json";

/// Snapshots shorter than this fraction of the initial length enter the
/// blow-up comparison.
const BLOWUP_WINDOW: f64 = 0.5;

/// Outcome of a completed run. Audit violations still write every artifact
/// and are reported through `exit_code`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub task: Task,
    pub exit_code: i32,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Files written into one run directory.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }

    /// One compact JSON document per line.
    pub fn jsonl<T: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut text = String::new();
        for row in rows {
            text.push_str(&serde_json::to_string(&row).map_err(|e| Error::Io(e.to_string()))?);
            text.push('\n');
        }
        self.write(name, text)
    }

    /// Hashes every file under the directory except the manifest itself and
    /// writes the manifest.
    pub fn finish(&self, task: Task, exit_code: i32) -> Result<Vec<ManifestEntry>> {
        let mut files = Vec::new();
        collect_files(&self.dir, &self.dir, &mut files)?;
        files.retain(|p| p != MANIFEST);
        files.sort();
        let mut entries = Vec::with_capacity(files.len());
        for rel in files {
            let bytes = std::fs::read(self.dir.join(&rel))?;
            entries.push(ManifestEntry { path: rel, bytes: bytes.len() as u64, sha256: hex(&Sha256::digest(&bytes)) });
        }
        self.json(MANIFEST, &json!({ "task": task.name(), "exit_code": exit_code, "files": entries }))?;
        Ok(entries)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).map_err(|e| Error::Io(e.to_string()))?;
            let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            out.push(parts.join("/"));
        }
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Structured description of an error, as written to `error.json`.
pub fn error_json(err: &Error) -> Value {
    let mut v = json!({ "error": err.kind(), "message": err.to_string(), "exit_code": err.exit_code() });
    if let Some(key) = crate::config::unknown_key(err) {
        v["key"] = json!(key);
    }
    if let Error::Numeric { residual, .. } = err {
        v["residual"] = json!(residual);
    }
    v
}

/// Records a failed run in its output directory, manifest included.
pub fn write_failure(dir: impl AsRef<Path>, task: Task, err: &Error) -> Result<()> {
    let out = Artifacts::create(dir)?;
    out.json("error.json", &error_json(err))?;
    out.finish(task, err.exit_code())?;
    Ok(())
}

/// Caps the global rayon pool at `FBCSF_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var("FBCSF_THREADS") else { return Ok(()) };
    let n: usize = text.trim().parse().map_err(|_| Error::Config(format!("FBCSF_THREADS must be a positive integer, got `{text}`")))?;
    if n == 0 {
        return Err(Error::Config("FBCSF_THREADS must be positive".into()));
    }
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// The starting curve used when none is configured.
pub fn default_curve(task: Task, theorem: Theorem) -> CurveSpec {
    match (task, theorem) {
        // small enough to satisfy the shrinking hypothesis on the unit disk
        (Task::Verify, Theorem::Shrinking) => CurveSpec::OrthogonalArc { angle: 0.0, radius: 1.2e-4 },
        (Task::Verify, Theorem::PositiveLength) => CurveSpec::SCurve { amplitude: 0.05 },
        (Task::Flow | Task::Profile, _) => CurveSpec::OrthogonalArc { angle: 0.0, radius: 0.3 },
        _ => CurveSpec::Diameter { angle: 0.0 },
    }
}

/// Runs the configured task and writes its artifacts under `cfg.output`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = Artifacts::create(&cfg.output)?;
    out.write("config.toml", cfg.to_toml()?)?;
    let exit_code = match cfg.task {
        Task::Oracle => run_oracle(cfg, &out)?,
        task => {
            let surface = cfg.surface.build()?;
            let chord = cfg.curve.build(&surface, cfg.numerics.samples, cfg.seed)?;
            out.write("curve.csv", chord.to_csv())?;
            match task {
                Task::Flow => run_flow(cfg, &out, &surface, &chord)?,
                Task::Profile => run_profile(cfg, &out, &surface, &chord)?,
                Task::Verify => run_verify(cfg, &out, &surface, &chord)?,
                Task::Spectrum => run_spectrum(cfg, &out, &surface, &chord)?,
                Task::Foliate => run_foliate(cfg, &out, &surface, &chord)?,
                Task::Minmax => run_minmax(cfg, &out, &surface)?,
                Task::Squeeze => run_squeeze(cfg, &out, &surface, &chord)?,
                Task::Oracle => unreachable!(),
            }
        }
    };
    let files = out.finish(cfg.task, exit_code)?;
    Ok(RunSummary { task: cfg.task, exit_code, files })
}

fn e16(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(values: &[f64]) -> String {
    let mut line = values.iter().map(|v| e16(*v)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn points_csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&csv_row(&r));
    }
    text
}

fn outcome_json(surface: &DiskSurface, run: &FlowRun) -> Value {
    let last = run.snapshots.last();
    let mut v = json!({
        "outcome": run.outcome.label(),
        "initial_length": run.initial_length,
        "final_length": last.map(|s| s.length),
        "steps": run.final_state.steps,
        "snapshots": run.snapshots.len(),
    });
    match &run.outcome {
        FlowOutcome::Geodesic { chord, t, max_curvature } => {
            v["t"] = json!(t);
            v["geodesic_length"] = json!(chord.length());
            v["max_curvature"] = json!(max_curvature);
        }
        FlowOutcome::HalfPoint { point, param, extinction_time, t } => {
            v["t"] = json!(t);
            v["point"] = json!([point.x, point.y]);
            v["boundary_param"] = json!(param);
            v["extinction_time"] = json!(extinction_time);
            match blowup_profile(surface, run, BLOWUP_WINDOW) {
                Ok(b) => {
                    v["blowup"] = json!({
                        "last_deviation": b.last_deviation(),
                        "deviations": b.deviations.iter().map(|(t, d)| json!({"t": t, "deviation": d})).collect::<Vec<_>>(),
                    })
                }
                Err(e) => v["blowup"] = error_json(&e),
            }
        }
        FlowOutcome::Timeout { t } => v["t"] = json!(t),
    }
    v
}

fn run_flow(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let run = evolve_classify(surface, chord, &cfg.numerics.flow())?;
    out.write(
        "history.csv",
        points_csv(
            "t,length,max_curvature,defect_start,defect_end",
            run.history.iter().map(|h| vec![h.t, h.length, h.max_curvature, h.defect.0, h.defect.1]),
        ),
    )?;
    out.write(
        "snapshots.csv",
        points_csv(
            "snapshot,t,tau,length,u1,u2",
            run.snapshots.iter().enumerate().flat_map(|(i, s)| s.points.iter().map(move |p| vec![i as f64, s.t, s.tau, s.length, p.x, p.y])),
        ),
    )?;
    if let FlowOutcome::Geodesic { chord, .. } = &run.outcome {
        out.write("geodesic.csv", chord.to_csv())?;
    }
    let mut report = outcome_json(surface, &run);
    report["task"] = json!("flow");
    out.json("report.json", &report)?;
    // a run that neither converges nor shrinks away is an anomaly
    Ok(if matches!(run.outcome, FlowOutcome::Timeout { .. }) { 1 } else { 0 })
}

fn profile_shape(cfg: &ExperimentConfig, surface: &DiskSurface) -> ProfileFunction {
    let k0 = surface.constants().k0;
    match cfg.verify.theorem {
        Theorem::Shrinking => ProfileFunction::sine_eps(1.0, cfg.verify.eps, k0),
        Theorem::PositiveLength => ProfileFunction::pure_sine(1.0, k0),
    }
}

fn run_profile(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let profile = compute_profile(surface, chord, &cfg.numerics.profile())?;
    out.write(
        "profile.csv",
        points_csv(
            "delta,psi_classical,psi_reflected,psi_completed",
            (0..profile.len()).map(|i| vec![profile.deltas[i], profile.psi_classical[i], profile.psi_reflected[i], profile.psi_completed[i]]),
        ),
    )?;
    let ratio = |psi: &[f64]| profile.deltas.iter().zip(psi).map(|(d, p)| p / d).fold(f64::INFINITY, f64::min);
    let shape = profile_shape(cfg, surface);
    out.json(
        "report.json",
        &json!({
            "task": "profile",
            "length": profile.length,
            "min_classical_ratio": ratio(&profile.psi_classical),
            "min_completed_ratio": ratio(&profile.psi_completed),
            "critical_c0": profile_critical_c0(&profile, &shape),
            "theorem": cfg.verify.theorem,
        }),
    )?;
    Ok(0)
}

fn run_verify(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let run = evolve_classify(surface, chord, &cfg.numerics.flow())?;
    let opts = NoncollapsingOptions {
        mode: cfg.verify.theorem.mode(),
        eps: cfg.verify.eps,
        c0: cfg.verify.c0,
        eps0: cfg.verify.eps0,
        profile: cfg.numerics.profile(),
        max_times: cfg.numerics.max_times,
        tol_factor: cfg.numerics.tol_factor,
        ..NoncollapsingOptions::default()
    };
    let report = verify_noncollapsing(surface, &run, &opts)?;
    out.jsonl("slack.jsonl", report.rows.iter())?;
    let worst = report.worst().copied();
    out.json(
        "report.json",
        &json!({
            "task": "verify",
            "theorem": cfg.verify.theorem,
            "mode": report.mode,
            "flow": outcome_json(surface, &run),
            "eps": report.phi.eps,
            "c0": report.phi.c0,
            "k0": report.phi.k0,
            "threshold": report.threshold,
            "eps1": report.eps1,
            "hypothesis": report.hypothesis.map(|h| json!({"lhs": h.lhs, "rhs": h.rhs, "holds": h.holds()})),
            "tolerance": report.tolerance,
            "grid_points": report.rows.len(),
            "min_slack": report.min_slack,
            "initial_min_slack": report.initial_min_slack,
            "stated_min_slack": report.stated_min_slack,
            "worst": worst,
            "holds": report.holds,
        }),
    )?;
    Ok(if report.holds { 0 } else { 3 })
}

fn run_spectrum(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let k = cfg.spectrum.k;
    let spec = robin_spectrum(surface, chord, k)?;
    let mi = morse_index(surface, chord)?;
    let mut text = String::from("i,lambda,lambda_matrix,ode_residual,robin_residual\n");
    for i in 0..k {
        let m = spec.matrix_eigenvalues.get(i).copied().unwrap_or(f64::NAN);
        text.push_str(&format!("{},{}", i + 1, csv_row(&[spec.eigenvalues[i], m, spec.ode_residual(i), spec.robin_residual(i)])));
    }
    out.write("spectrum.csv", text)?;
    let header = std::iter::once("s".to_string()).chain((1..=k).map(|i| format!("phi{i}"))).collect::<Vec<_>>().join(",");
    out.write(
        "eigenfunctions.csv",
        points_csv(&header, spec.s.iter().enumerate().map(|(j, s)| std::iter::once(*s).chain(spec.eigenfunctions.iter().map(|f| f[j])).collect())),
    )?;
    let harnack = if spec.eigenvalues[0] > 0.0 { harnack_constant(&spec).ok() } else { None };
    out.json(
        "report.json",
        &json!({
            "task": "spectrum",
            "length": spec.length,
            "boundary_curvature": [spec.boundary_curvature.0, spec.boundary_curvature.1],
            "eigenvalues": spec.eigenvalues,
            "matrix_eigenvalues": spec.matrix_eigenvalues,
            "index": mi.index,
            "nullity": mi.nullity,
            "degenerate": mi.degenerate,
            "orthogonality_defect": spec.orthogonality_defect(),
            "harnack": harnack,
        }),
    )?;
    Ok(0)
}

/// The surface and geodesic to foliate: the given pair when the geodesic is
/// strictly stable, otherwise the tube-perturbed pair when allowed.
fn stable_pair(cfg: &ExperimentConfig, surface: &DiskSurface, chord: &Chord) -> Result<(DiskSurface, Chord, Value)> {
    let spec = robin_spectrum(surface, chord, 1)?;
    if spec.eigenvalues[0] > spec.tol_null || !cfg.foliate.perturb {
        return Ok((surface.clone(), chord.clone(), json!({ "applied": false, "lambda1": spec.eigenvalues[0] })));
    }
    let p = select_perturbation(surface, chord)?;
    let info = json!({
        "applied": true,
        "lambda1_before": spec.eigenvalues[0],
        "m": p.m,
        "beta": p.beta,
        "lambda1": p.lambda1,
        "max_strip_curvature": p.max_strip_curvature,
        "convexity_warning": p.convexity_warning.as_ref().map(|w| format!("{w:?}")),
    });
    Ok((p.surface, p.geodesic, info))
}

fn run_foliate(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let (surface, geodesic, perturbation) = stable_pair(cfg, surface, chord)?;
    let fol = build_foliation(&surface, &geodesic, &cfg.foliate.options())?;
    out.write(
        "leaves.csv",
        points_csv(
            "leaf,t,u1,u2,curvature",
            fol.leaves.iter().enumerate().flat_map(|(i, l)| {
                l.chord.samples().iter().zip(&l.curvature).map(move |(p, k)| vec![i as f64, l.t, p.x, p.y, *k]).collect::<Vec<_>>()
            }),
        ),
    )?;
    let leaves: Vec<Value> = fol
        .leaves
        .iter()
        .map(|l| {
            json!({
                "t": l.t,
                "length": l.chord.length(),
                "c_t": if l.c_t.is_finite() { Some(l.c_t) } else { None },
                "orthogonality": l.orthogonality,
                "linearization_error": l.linearization_error,
                "max_gauss": l.max_gauss,
            })
        })
        .collect();
    let ok = fol.mean_convex() && fol.harnack_margin >= 0.0 && fol.disjoint && fol.monotone;
    out.json(
        "report.json",
        &json!({
            "task": "foliate",
            "perturbation": perturbation,
            "eps": fol.eps,
            "lambda1": fol.lambda1,
            "harnack": fol.harnack,
            "max_c_t": fol.max_c_t,
            "harnack_margin": fol.harnack_margin,
            "identity_error": fol.identity_error,
            "mean_convex": fol.mean_convex(),
            "disjoint": fol.disjoint,
            "monotone": fol.monotone,
            "halvings": fol.halvings,
            "leaves": leaves,
            "holds": ok,
        }),
    )?;
    Ok(if ok { 0 } else { 3 })
}

fn run_minmax(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface) -> Result<i32> {
    let stages = cfg.minmax.stages()?;
    let opts = cfg.minmax.options();
    let dims: Vec<usize> = if cfg.minmax.dim == 0 { vec![1, 2] } else { vec![cfg.minmax.dim] };
    let reports: Vec<WidthReport> = dims.iter().map(|&d| width(surface, d, &stages, &opts)).collect::<Result<_>>()?;
    let mut index = String::from("dim,geodesic,length,index,nullity,lambda1,lambda2,lambda3\n");
    for r in &reports {
        for (i, g) in r.critical.geodesics.iter().enumerate() {
            out.write(&format!("critical/dim{}_{i}.csv", r.dimension), g.chord.to_csv())?;
            let lam = |j: usize| g.eigenvalues.get(j).copied().unwrap_or(f64::NAN);
            let _ = write!(index, "{},{i},{},{},{},", r.dimension, e16(g.length), g.index, g.nullity);
            index.push_str(&csv_row(&[lam(0), lam(1), lam(2)]));
        }
    }
    out.write("index.csv", index)?;
    let mut report = json!({ "task": "minmax", "schedule": cfg.minmax.schedule, "widths": reports, "separation": "surrogate" });
    if reports.len() == 2 {
        report["probe"] = json!(ls_equal_width_probe(surface, &reports[0], &reports[1], &opts)?);
        report["attribution"] = json!(index_attribution(&[&reports[0], &reports[1]]));
    }
    out.json("report.json", &report)?;
    Ok(0)
}

fn run_squeeze(cfg: &ExperimentConfig, out: &Artifacts, surface: &DiskSurface, chord: &Chord) -> Result<i32> {
    let (surface, geodesic, perturbation) = stable_pair(cfg, surface, chord)?;
    let opts = cfg.squeeze.options(&cfg.foliate);
    let mut reports = Vec::new();
    for &eps in &cfg.squeeze.eps {
        let family = perturbed_copies(&surface, &geodesic, eps, &opts)?;
        reports.push(squeeze_audit(&surface, &geodesic, &family, eps, &opts)?);
    }
    out.jsonl("audits.jsonl", reports.iter())?;
    let scaling = (reports.len() >= 2).then(|| {
        json!({
            "distance_ratio": reports[0].max_distance / reports[1].max_distance,
            "sqrt_eps_ratio": (reports[0].eps / reports[1].eps).sqrt(),
        })
    });
    let holds = reports.iter().all(|r| r.holds);
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| json!({"eps": r.eps, "eps0": r.eps0, "max_length": r.max_length, "length_bound": r.geodesic_length + r.eps, "max_distance": r.max_distance, "c_audit": r.c_audit, "holds": r.holds}))
        .collect();
    out.json("report.json", &json!({ "task": "squeeze", "perturbation": perturbation, "audits": summary, "scaling": scaling, "holds": holds }))?;
    Ok(if holds { 0 } else { 3 })
}

/// Robin eigenvalues of the unit flat diameter from the closed-form
/// dispersion relations `μ tanh μ = 1` and `μ tan μ = −1`.
pub fn flat_diameter_robin_oracle() -> [f64; 3] {
    use std::f64::consts::PI;
    let mu1 = bisect(|m| m * m.tanh() - 1.0, 0.5, 2.0, 1e-15).expect("bracketed root");
    let mu3 = bisect(|m| m * m.tan() + 1.0, PI / 2.0 + 1e-9, PI - 1e-9, 1e-15).expect("bracketed root");
    [-mu1 * mu1, 0.0, mu3 * mu3]
}

/// Brute-force chord extremes of the flat ellipse `x²/a² + y²/b² < 1`: for
/// each of `angles` directions, the longest chord among `offsets` parallel
/// lines; returns the least and greatest of those maxima.
pub fn ellipse_chord_oracle(a: f64, b: f64, angles: usize, offsets: usize) -> (f64, f64) {
    let domain = crate::surface::ChartDomain::Ellipse { a, b };
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..angles {
        let angle = std::f64::consts::PI * i as f64 / angles as f64;
        let h = domain.support(angle);
        let best = (0..=offsets)
            .filter_map(|j| domain.line_chord(angle, h * (2.0 * j as f64 / offsets as f64 - 1.0)))
            .map(|(p, q)| (q - p).norm())
            .fold(0.0f64, f64::max);
        lo = lo.min(best);
        hi = hi.max(best);
    }
    (lo, hi)
}

fn run_oracle(cfg: &ExperimentConfig, out: &Artifacts) -> Result<i32> {
    let [l1, l2, l3] = flat_diameter_robin_oracle();
    out.json("robin_flat_diameter.json", &json!({ "length": 2.0, "boundary_curvature": 1.0, "eigenvalues": [l1, l2, l3], "index": 1, "nullity": 1 }))?;
    let (a, b) = match cfg.surface.preset {
        crate::config::Preset::FlatEllipse => (cfg.surface.a.unwrap_or(2.0), cfg.surface.b.unwrap_or(1.0)),
        _ => (2.0, 1.0),
    };
    let (lo, hi) = ellipse_chord_oracle(a, b, 720, 2000);
    out.json(
        "ellipse_chords.json",
        &json!({ "a": a, "b": b, "min_over_directions": lo, "max_over_directions": hi, "minor_axis": 2.0 * a.min(b), "major_axis": 2.0 * a.max(b) }),
    )?;
    // unit half circle meeting the line {x·n = 0} orthogonally, n = (0, 1)
    out.write(
        "semicircle.csv",
        points_csv("u1,u2", (0..=256).map(|k| {
            let t = std::f64::consts::PI * k as f64 / 256.0;
            vec![t.cos(), t.sin()]
        })),
    )?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values_match_known_roots() {
        let [l1, l2, l3] = flat_diameter_robin_oracle();
        assert!((l1 + 1.43923).abs() < 1e-5 && l2 == 0.0 && (l3 - 7.8308).abs() < 1e-3);
    }

    #[test]
    fn ellipse_brute_force_brackets_the_axes() {
        let (lo, hi) = ellipse_chord_oracle(2.0, 1.0, 360, 400);
        assert!((lo - 2.0).abs() < 1e-9, "{lo}");
        assert!((hi - 4.0).abs() < 1e-9, "{hi}");
    }

    #[test]
    fn error_json_names_the_key() {
        let err = ExperimentConfig::from_toml("task = \"flow\"\nspeed = 2\n[surface]\npreset = \"flat-disk\"\n").unwrap_err();
        let v = error_json(&err);
        assert_eq!(v["key"], "speed");
        assert_eq!(v["exit_code"], 2);
    }
}
