use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fbcsf::cli::{configure_threads, default_curve, error_json, run, write_failure};
use fbcsf::config::{CurveSpec, ExperimentConfig, Preset, SurfaceConfig, Task, Theorem};
use fbcsf::{Error, Result};

#[derive(Parser)]
#[command(name = "fbcsf", version, about = "Free boundary curve shortening flow experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a chord until it becomes a geodesic or shrinks to a boundary point.
    Flow(Common),
    /// Chord-arc profiles of a curve.
    Profile(ProfileArgs),
    /// Audit the noncollapsing bound along a flow.
    Verify(VerifyArgs),
    /// Robin eigenvalues of the stability operator of a geodesic.
    Spectrum(SpectrumArgs),
    /// Mean convex foliation around a strictly stable geodesic.
    Foliate(FoliateArgs),
    /// Min-max widths and their critical geodesics.
    Minmax(MinmaxArgs),
    /// Squeezing audit near a strictly stable geodesic.
    Squeeze(SqueezeArgs),
    /// Write golden values from closed forms and brute force.
    Oracle(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface preset: flat-disk, flat-ellipse, conformal, conformal-iso,
    /// conformal-aniso, spherical-cap, half-plane.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// diameter, minor-axis, major-axis, random, or a CSV file of samples.
    #[arg(long, visible_alias = "geodesic")]
    curve: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    theorem: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// shrinking or positive-length (aliases 4.3 and 4.4).
    #[arg(long)]
    theorem: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    max_times: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short)]
    k: Option<usize>,
}

#[derive(Args)]
struct FoliateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    eps_fol: Option<f64>,
    #[arg(long)]
    leaves: Option<usize>,
    /// Fail instead of perturbing an unstable geodesic.
    #[arg(long)]
    no_perturb: bool,
}

#[derive(Args)]
struct MinmaxArgs {
    #[command(flatten)]
    common: Common,
    /// 1, 2, or both.
    #[arg(long)]
    dim: Option<String>,
    /// Stages `resolution:budget`, comma separated.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Args)]
struct SqueezeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    eps_fol: Option<f64>,
    #[arg(long)]
    no_perturb: bool,
}

fn base_config(task: Task, common: &Common) -> Result<(ExperimentConfig, bool)> {
    let (mut cfg, from_file) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            (ExperimentConfig::from_toml(&text)?, true)
        }
        None => (ExperimentConfig::new(task, SurfaceConfig::preset(Preset::FlatDisk)), false),
    };
    cfg.task = task;
    if let Some(name) = &common.surface {
        cfg.surface = SurfaceConfig::preset(Preset::parse(name)?);
    }
    if common.a.is_some() {
        cfg.surface.a = common.a;
    }
    if common.b.is_some() {
        cfg.surface.b = common.b;
    }
    if let Some(c) = &common.curve {
        cfg.curve = CurveSpec::parse(c);
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.samples {
        cfg.numerics.samples = n;
    }
    if let Some(n) = common.segments {
        cfg.numerics.segments = n;
    }
    if let Some(t) = common.tmax {
        cfg.numerics.t_max = t;
    }
    Ok((cfg, from_file || common.curve.is_some()))
}

fn build(cmd: &Cmd) -> Result<ExperimentConfig> {
    let (task, common) = match cmd {
        Cmd::Flow(c) => (Task::Flow, c),
        Cmd::Profile(a) => (Task::Profile, &a.common),
        Cmd::Verify(a) => (Task::Verify, &a.common),
        Cmd::Spectrum(a) => (Task::Spectrum, &a.common),
        Cmd::Foliate(a) => (Task::Foliate, &a.common),
        Cmd::Minmax(a) => (Task::Minmax, &a.common),
        Cmd::Squeeze(a) => (Task::Squeeze, &a.common),
        Cmd::Oracle(c) => (Task::Oracle, c),
    };
    let (mut cfg, curve_set) = base_config(task, common)?;
    match cmd {
        Cmd::Profile(a) => {
            if let Some(t) = &a.theorem {
                cfg.verify.theorem = Theorem::parse(t)?;
            }
            if let Some(e) = a.eps {
                cfg.verify.eps = e;
            }
        }
        Cmd::Verify(a) => {
            if let Some(t) = &a.theorem {
                cfg.verify.theorem = Theorem::parse(t)?;
            }
            if let Some(e) = a.eps {
                cfg.verify.eps = e;
            }
            if a.c0.is_some() {
                cfg.verify.c0 = a.c0;
            }
            if let Some(n) = a.max_times {
                cfg.numerics.max_times = n;
            }
        }
        Cmd::Spectrum(a) => {
            if let Some(k) = a.k {
                cfg.spectrum.k = k;
            }
        }
        Cmd::Foliate(a) => {
            if let Some(e) = a.eps_fol {
                cfg.foliate.eps_fol = e;
            }
            if let Some(n) = a.leaves {
                cfg.foliate.leaves_per_side = n;
            }
            if a.no_perturb {
                cfg.foliate.perturb = false;
            }
        }
        Cmd::Minmax(a) => {
            if let Some(d) = &a.dim {
                cfg.minmax.dim = match d.as_str() {
                    "1" => 1,
                    "2" => 2,
                    "both" | "0" => 0,
                    other => return Err(Error::Config(format!("--dim must be 1, 2 or both, got `{other}`"))),
                };
            }
            if let Some(s) = &a.schedule {
                cfg.minmax.schedule = s.clone();
            }
        }
        Cmd::Squeeze(a) => {
            if let Some(e) = &a.eps {
                cfg.squeeze.eps = e.clone();
            }
            if let Some(e) = a.eps_fol {
                cfg.foliate.eps_fol = e;
            }
            if a.no_perturb {
                cfg.foliate.perturb = false;
            }
        }
        Cmd::Flow(_) | Cmd::Oracle(_) => {}
    }
    if !curve_set {
        cfg.curve = default_curve(task, cfg.verify.theorem);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_hint(cmd: &Cmd) -> Option<String> {
    let common = match cmd {
        Cmd::Flow(c) | Cmd::Oracle(c) => c,
        Cmd::Profile(a) => &a.common,
        Cmd::Verify(a) => &a.common,
        Cmd::Spectrum(a) => &a.common,
        Cmd::Foliate(a) => &a.common,
        Cmd::Minmax(a) => &a.common,
        Cmd::Squeeze(a) => &a.common,
    };
    common.out.clone()
}

fn task_of(cmd: &Cmd) -> Task {
    match cmd {
        Cmd::Flow(_) => Task::Flow,
        Cmd::Profile(_) => Task::Profile,
        Cmd::Verify(_) => Task::Verify,
        Cmd::Spectrum(_) => Task::Spectrum,
        Cmd::Foliate(_) => Task::Foliate,
        Cmd::Minmax(_) => Task::Minmax,
        Cmd::Squeeze(_) => Task::Squeeze,
        Cmd::Oracle(_) => Task::Oracle,
    }
}

fn fail(dir: Option<String>, task: Task, err: &Error) -> ExitCode {
    eprintln!("{}", error_json(err));
    if let Some(dir) = dir {
        if let Err(e) = write_failure(&dir, task, err) {
            eprintln!("{}", error_json(&e));
        }
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let task = task_of(&cli.cmd);
    if let Err(e) = configure_threads() {
        return fail(output_hint(&cli.cmd), task, &e);
    }
    let cfg = match build(&cli.cmd) {
        Ok(cfg) => cfg,
        Err(e) => return fail(output_hint(&cli.cmd), task, &e),
    };
    match run(&cfg) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::json!({ "task": task.name(), "exit_code": summary.exit_code, "output": cfg.output, "files": summary.files.len() })
            );
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => fail(Some(cfg.output.clone()), task, &e),
    }
}
