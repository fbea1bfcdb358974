//! Experiment configuration: a TOML document with one section per concern.
//! Unknown keys are rejected and a parsed config serialises back to the
//! same bytes it would produce from its own output.

use serde::{Deserialize, Serialize};

use crate::chordarc::{NoncollapsingMode, NoncollapsingOptions, ProfileOptions};
use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::minmax::{parse_schedule, MinmaxOptions, SqueezeOptions, Stage};
use crate::stability::FoliationOptions;
use crate::surface::{ChartDomain, ConformalFactor, DiskSurface};
use crate::types::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Flow,
    Profile,
    Verify,
    Spectrum,
    Foliate,
    Minmax,
    Squeeze,
    Oracle,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Flow => "flow",
            Task::Profile => "profile",
            Task::Verify => "verify",
            Task::Spectrum => "spectrum",
            Task::Foliate => "foliate",
            Task::Minmax => "minmax",
            Task::Squeeze => "squeeze",
            Task::Oracle => "oracle",
        }
    }
}

/// Named surfaces. `a` and `b` are the chart semi-axes where they apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    FlatDisk,
    FlatEllipse,
    /// Disk with the conformal factor given in `[surface.phi]`.
    Conformal,
    /// `0.3 |u|²` on the unit disk.
    ConformalIso,
    /// `0.2 x² + 0.05 y²` on the unit disk.
    ConformalAniso,
    /// Round sphere metric over the chart disk of radius `a` (default 0.8).
    SphericalCap,
    /// Flat disk of radius 100: locally a half-plane near its boundary.
    HalfPlane,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        let all = [
            Preset::FlatDisk,
            Preset::FlatEllipse,
            Preset::Conformal,
            Preset::ConformalIso,
            Preset::ConformalAniso,
            Preset::SphericalCap,
            Preset::HalfPlane,
        ];
        all.into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown surface preset `{name}`")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::FlatDisk => "flat-disk",
            Preset::FlatEllipse => "flat-ellipse",
            Preset::Conformal => "conformal",
            Preset::ConformalIso => "conformal-iso",
            Preset::ConformalAniso => "conformal-aniso",
            Preset::SphericalCap => "spherical-cap",
            Preset::HalfPlane => "half-plane",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    Quadratic {
        cx: f64,
        cy: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    SphericalCap,
    CutoffQuadratic {
        amplitude: f64,
        r_in: f64,
        r_out: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

impl PhiSpec {
    fn factor(&self) -> ConformalFactor {
        match *self {
            PhiSpec::Quadratic { cx, cy, center } => ConformalFactor::Quadratic { cx, cy, center: Point::new(center[0], center[1]) },
            PhiSpec::SphericalCap => ConformalFactor::SphericalCap,
            PhiSpec::CutoffQuadratic { amplitude, r_in, r_out, center } => {
                ConformalFactor::CutoffQuadratic { amplitude, center: Point::new(center[0], center[1]), r_in, r_out }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
}

impl SurfaceConfig {
    pub fn preset(preset: Preset) -> Self {
        Self { preset, a: None, b: None, phi: None }
    }

    pub fn build(&self) -> Result<DiskSurface> {
        let a = self.a;
        let b = self.b;
        for v in [a, b].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("surface semi-axis {v} must be positive")));
            }
        }
        let disk = |d: f64| ChartDomain::Disk { radius: a.unwrap_or(d) };
        let no_phi = |s: DiskSurface| -> Result<DiskSurface> {
            match self.phi {
                Some(_) => Err(Error::Config(format!("surface.phi is only read by the `conformal` preset, not `{}`", self.preset.name()))),
                None => Ok(s),
            }
        };
        match self.preset {
            Preset::FlatDisk => no_phi(DiskSurface::flat_disk(a.unwrap_or(1.0))),
            Preset::HalfPlane => no_phi(DiskSurface::flat_disk(a.unwrap_or(100.0))),
            Preset::FlatEllipse => no_phi(DiskSurface::flat_ellipse(a.unwrap_or(2.0), b.unwrap_or(1.0))),
            Preset::ConformalIso => no_phi(DiskSurface::conformal(disk(1.0), ConformalFactor::isotropic(0.3))),
            Preset::ConformalAniso => no_phi(DiskSurface::conformal(
                disk(1.0),
                ConformalFactor::Quadratic { cx: 0.2, cy: 0.05, center: Point::zeros() },
            )),
            Preset::SphericalCap => no_phi(DiskSurface::conformal(disk(0.8), ConformalFactor::SphericalCap)),
            Preset::Conformal => {
                let phi = self.phi.as_ref().ok_or_else(|| Error::Config("the `conformal` preset needs surface.phi".into()))?;
                let domain = match (a, b) {
                    (Some(a), Some(b)) if a != b => ChartDomain::Ellipse { a, b },
                    _ => disk(1.0),
                };
                Ok(DiskSurface::conformal(domain, phi.factor()))
            }
        }
    }
}

/// The chord a task starts from, or the geodesic it analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    /// Chart diameter at `angle`.
    Diameter {
        #[serde(default)]
        angle: f64,
    },
    /// Chart line with unit normal at `normal_angle` and signed offset.
    Line { normal_angle: f64, offset: f64 },
    /// The ellipse's minor (`y`) or major (`x`) axis.
    MinorAxis,
    MajorAxis,
    /// Circle arc meeting a round chart disk orthogonally.
    OrthogonalArc {
        #[serde(default)]
        angle: f64,
        radius: f64,
    },
    /// `y = amplitude sin(π x / a)` across the x-axis.
    SCurve { amplitude: f64 },
    /// A chart line bent by a sine bump, drawn from the run seed.
    Random,
    /// Samples `s,u1,u2` from a CSV file.
    Csv { path: String },
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec::Diameter { angle: 0.0 }
    }
}

impl CurveSpec {
    /// Parses the command-line shorthand: a keyword or a CSV path.
    pub fn parse(text: &str) -> Self {
        match text {
            "diameter" => CurveSpec::Diameter { angle: 0.0 },
            "minor-axis" => CurveSpec::MinorAxis,
            "major-axis" => CurveSpec::MajorAxis,
            "random" => CurveSpec::Random,
            path => CurveSpec::Csv { path: path.to_string() },
        }
    }

    pub fn build(&self, surface: &DiskSurface, samples: usize, seed: u64) -> Result<Chord> {
        use std::f64::consts::FRAC_PI_2;
        let (a, b) = surface.domain.semi_axes();
        match self {
            CurveSpec::Diameter { angle } => Chord::diameter(surface, *angle, samples),
            CurveSpec::Line { normal_angle, offset } => Chord::line(surface, *normal_angle, *offset, samples),
            // the shorter semi-axis is spanned by the longer-direction normal
            CurveSpec::MinorAxis => Chord::line(surface, if a >= b { 0.0 } else { FRAC_PI_2 }, 0.0, samples),
            CurveSpec::MajorAxis => Chord::line(surface, if a >= b { FRAC_PI_2 } else { 0.0 }, 0.0, samples),
            CurveSpec::OrthogonalArc { angle, radius } => Chord::orthogonal_arc(surface, *angle, *radius, samples),
            CurveSpec::SCurve { amplitude } => Chord::s_curve(surface, *amplitude, samples),
            CurveSpec::Random => random_chord(surface, seed, samples),
            CurveSpec::Csv { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("curve file `{path}`: {e}")))?;
                Chord::from_csv(surface, &text)
            }
        }
    }
}

/// A chart line at a random angle and offset, bent by a random multiple of
/// a sine bump that vanishes at both ends. Deterministic in `seed`.
pub fn random_chord(surface: &DiskSurface, seed: u64, samples: usize) -> Result<Chord> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let support = surface.domain.support(angle);
        let offset = support * rng.random_range(-0.9..0.9);
        let bend = rng.random_range(-0.25..0.25);
        let Some((p, q)) = surface.domain.line_chord(angle, offset) else { continue };
        let n = Point::new(angle.cos(), angle.sin());
        let span = (q - p).norm();
        let chord = Chord::from_fn(
            surface,
            |u| p + (q - p) * u + n * (bend * span * (std::f64::consts::PI * u).sin()),
            samples,
        );
        match chord {
            Ok(c) if c.is_embedded() => return Ok(c),
            _ => continue,
        }
    }
    Err(Error::Degenerate(format!("no admissible random chord for seed {seed}")))
}

/// Numerical resolution and tolerances shared by the tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Samples of the initial curve.
    pub samples: usize,
    /// Flow polygon segments.
    pub segments: usize,
    pub dt_factor: f64,
    pub eps_geo: f64,
    pub eps_len_factor: f64,
    pub t_max: f64,
    pub snapshot_dt: f64,
    pub n_delta: usize,
    pub n_pairs: usize,
    pub max_times: usize,
    pub tol_factor: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let f = FlowConfig::default();
        let p = ProfileOptions::default();
        let n = NoncollapsingOptions::default();
        Self {
            samples: 256,
            segments: f.segments,
            dt_factor: f.dt_factor,
            eps_geo: f.eps_geo,
            eps_len_factor: f.eps_len_factor,
            t_max: f.t_max,
            snapshot_dt: f.snapshot_dt,
            n_delta: p.n_delta,
            n_pairs: p.n_pairs,
            max_times: n.max_times,
            tol_factor: n.tol_factor,
        }
    }
}

impl Numerics {
    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            segments: self.segments,
            dt_factor: self.dt_factor,
            eps_geo: self.eps_geo,
            eps_len_factor: self.eps_len_factor,
            t_max: self.t_max,
            snapshot_dt: self.snapshot_dt,
            ..FlowConfig::default()
        }
    }

    pub fn profile(&self) -> ProfileOptions {
        ProfileOptions { n_delta: self.n_delta, n_pairs: self.n_pairs, ..ProfileOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Shrinking runs: the `ε` profile bound.
    #[serde(rename = "4.3")]
    Shrinking,
    /// Positive-length runs: the sine profile bound.
    #[serde(rename = "4.4")]
    PositiveLength,
}

impl Theorem {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "4.3" | "shrinking" => Ok(Theorem::Shrinking),
            "4.4" | "positive-length" => Ok(Theorem::PositiveLength),
            other => Err(Error::Config(format!("unknown theorem `{other}`, expected 4.3 or 4.4"))),
        }
    }

    pub fn mode(self) -> NoncollapsingMode {
        match self {
            Theorem::Shrinking => NoncollapsingMode::Shrinking,
            Theorem::PositiveLength => NoncollapsingMode::PositiveLength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub theorem: Theorem,
    pub eps: f64,
    pub eps0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { theorem: Theorem::Shrinking, eps: 0.1, eps0: 0.1, c0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub k: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FoliateConfig {
    pub eps_fol: f64,
    pub leaves_per_side: usize,
    /// Apply the stabilising tube perturbation when the geodesic is not
    /// strictly stable.
    pub perturb: bool,
}

impl Default for FoliateConfig {
    fn default() -> Self {
        let f = FoliationOptions::default();
        Self { eps_fol: f.eps_fol, leaves_per_side: f.leaves_per_side, perturb: true }
    }
}

impl FoliateConfig {
    pub fn options(&self) -> FoliationOptions {
        FoliationOptions { eps_fol: self.eps_fol, leaves_per_side: self.leaves_per_side, ..FoliationOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinmaxConfig {
    /// `1`, `2`, or `0` for both dimensions with the equal-width probe.
    pub dim: usize,
    pub schedule: String,
    pub separation: f64,
    pub tol_eq: f64,
    pub probe_angles: usize,
}

impl Default for MinmaxConfig {
    fn default() -> Self {
        let m = MinmaxOptions::default();
        Self { dim: 1, schedule: "16:0.02,32:0.05".into(), separation: m.separation, tol_eq: m.tol_eq, probe_angles: m.probe_angles }
    }
}

impl MinmaxConfig {
    pub fn stages(&self) -> Result<Vec<Stage>> {
        parse_schedule(&self.schedule)
    }

    pub fn options(&self) -> MinmaxOptions {
        MinmaxOptions {
            separation: self.separation,
            tol_eq: self.tol_eq,
            probe_angles: self.probe_angles,
            ..MinmaxOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqueezeConfig {
    /// Audited tube parameters; the `√ε` ratio uses the first two.
    pub eps: Vec<f64>,
    pub eta: f64,
    pub flow_time: f64,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        let s = SqueezeOptions::default();
        Self { eps: vec![4e-6, 1e-6], eta: s.eta, flow_time: s.flow_time }
    }
}

impl SqueezeConfig {
    pub fn options(&self, foliate: &FoliateConfig) -> SqueezeOptions {
        SqueezeOptions { eta: self.eta, flow_time: self.flow_time, foliation_eps: foliate.eps_fol, ..SqueezeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub foliate: FoliateConfig,
    #[serde(default)]
    pub minmax: MinmaxConfig,
    #[serde(default)]
    pub squeeze: SqueezeConfig,
}

fn default_output() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn new(task: Task, surface: SurfaceConfig) -> Self {
        Self {
            task,
            seed: 0,
            output: default_output(),
            surface,
            curve: CurveSpec::default(),
            numerics: Numerics::default(),
            verify: VerifyConfig::default(),
            spectrum: SpectrumConfig::default(),
            foliate: FoliateConfig::default(),
            minmax: MinmaxConfig::default(),
            squeeze: SqueezeConfig::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Positivity of every tolerance and size, and a parsable schedule.
    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let positive = [
            ("numerics.dt_factor", n.dt_factor),
            ("numerics.eps_geo", n.eps_geo),
            ("numerics.eps_len_factor", n.eps_len_factor),
            ("numerics.t_max", n.t_max),
            ("numerics.snapshot_dt", n.snapshot_dt),
            ("numerics.tol_factor", n.tol_factor),
            ("verify.eps", self.verify.eps),
            ("verify.eps0", self.verify.eps0),
            ("foliate.eps_fol", self.foliate.eps_fol),
            ("minmax.separation", self.minmax.separation),
            ("minmax.tol_eq", self.minmax.tol_eq),
            ("squeeze.eta", self.squeeze.eta),
            ("squeeze.flow_time", self.squeeze.flow_time),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{key}` must be positive, got {v}")));
            }
        }
        if let Some(c0) = self.verify.c0 {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(Error::Config(format!("`verify.c0` must be positive, got {c0}")));
            }
        }
        if self.squeeze.eps.is_empty() || self.squeeze.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("`squeeze.eps` must be a non-empty list of positive values".into()));
        }
        let sizes = [
            ("numerics.samples", n.samples, 8),
            ("numerics.segments", n.segments, 8),
            ("numerics.n_delta", n.n_delta, 2),
            ("numerics.n_pairs", n.n_pairs, 2),
            ("numerics.max_times", n.max_times, 2),
            ("spectrum.k", self.spectrum.k, 1),
            ("foliate.leaves_per_side", self.foliate.leaves_per_side, 1),
            ("minmax.probe_angles", self.minmax.probe_angles, 1),
        ];
        for (key, v, min) in sizes {
            if v < min {
                return Err(Error::Config(format!("`{key}` must be at least {min}, got {v}")));
            }
        }
        if self.minmax.dim > 2 {
            return Err(Error::Config(format!("`minmax.dim` must be 1, 2 or 0 (both), got {}", self.minmax.dim)));
        }
        self.minmax.stages()?;
        Ok(())
    }
}

/// Maps a TOML error to a config error, naming the offending key.
fn config_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .map(str::to_string);
    match key {
        Some(k) => Error::Config(format!("unknown key `{k}`: {msg}")),
        None => Error::Config(msg),
    }
}

/// The unknown key named by a config error, if any.
pub fn unknown_key(err: &Error) -> Option<String> {
    match err {
        Error::Config(msg) => msg.strip_prefix("unknown key `").and_then(|r| r.split('`').next()).map(str::to_string),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Task::Minmax, SurfaceConfig { preset: Preset::FlatEllipse, a: Some(2.0), b: Some(1.0), phi: None });
        c.seed = 7;
        c.curve = CurveSpec::Line { normal_angle: 0.3, offset: 0.1 };
        c.verify.c0 = Some(0.123456789012345678);
        c
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = sample().to_toml().unwrap();
        let parsed = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(parsed.to_toml().unwrap(), text);
    }

    #[test]
    fn conformal_phi_round_trips() {
        let mut c = ExperimentConfig::new(Task::Spectrum, SurfaceConfig::preset(Preset::Conformal));
        c.surface.phi = Some(PhiSpec::Quadratic { cx: 0.2, cy: 0.05, center: [0.0, 0.0] });
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        c.surface.build().unwrap();
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let c = ExperimentConfig::from_toml("task = \"flow\"\n[surface]\npreset = \"flat-disk\"\n").unwrap();
        assert_eq!(c.numerics, Numerics::default());
        assert_eq!(c.output, "out");
    }

    #[test]
    fn unknown_keys_are_named() {
        for (doc, key) in [
            ("task = \"flow\"\nbogus = 1\n[surface]\npreset = \"flat-disk\"\n", "bogus"),
            ("task = \"flow\"\n[surface]\npreset = \"flat-disk\"\n[numerics]\ndtt = 0.1\n", "dtt"),
            ("task = \"flow\"\n[surface]\npreset = \"conformal\"\n[surface.phi]\ntype = \"quadratic\"\ncx = 1.0\ncy = 1.0\ncz = 1.0\n", "cz"),
        ] {
            let err = ExperimentConfig::from_toml(doc).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert_eq!(unknown_key(&err).as_deref(), Some(key), "{err}");
        }
    }

    #[test]
    fn nonpositive_tolerances_are_rejected() {
        let doc = "task = \"flow\"\n[surface]\npreset = \"flat-disk\"\n[numerics]\neps_geo = 0.0\n";
        let err = ExperimentConfig::from_toml(doc).unwrap_err();
        assert!(err.to_string().contains("numerics.eps_geo"), "{err}");
    }

    #[test]
    fn random_chords_are_deterministic_in_the_seed() {
        let s = DiskSurface::flat_disk(1.0);
        let a = random_chord(&s, 3, 64).unwrap();
        let b = random_chord(&s, 3, 64).unwrap();
        let c = random_chord(&s, 4, 64).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn axes_follow_the_semi_axes() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        assert!((CurveSpec::MinorAxis.build(&s, 64, 0).unwrap().length() - 2.0).abs() < 1e-9);
        assert!((CurveSpec::MajorAxis.build(&s, 64, 0).unwrap().length() - 4.0).abs() < 1e-9);
    }
}
