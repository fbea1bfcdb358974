//! Noncollapsing verification along flow runs and the evolution inequality
//! for `Z` at zero minima.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use super::certificate::{evaluate_certificate, TOL_CERT, TOL_ZERO};
use super::pairs::{compute_profile, minimize_z, CompletedPair, CompletedProfile, PairClass, PairDistance, ProfileOptions};
use super::profile_fn::{admissible_c0, epsilon_one, shrinking_hypothesis, Clock, Hypothesis, ProfileFunction};
use crate::curve::{Chord, CompletedPoint};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowRun, FlowState, Snapshot};
use crate::geodesy;
use crate::surface::DiskSurface;

/// Which lower bound is audited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoncollapsingMode {
    /// `ψ(δ, t) >= L φ_ε(δ/L) e^{−K₀t}` for runs shrinking to a half-point.
    Shrinking,
    /// `ψ(δ, t) >= c₀ L e^{−4π²τ − K₀t} sin(πδ/L)`, `τ = ∫ dt/L²`.
    PositiveLength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncollapsingOptions {
    pub mode: NoncollapsingMode,
    pub eps: f64,
    /// Defaults to 0.9 of the admissible (shrinking) or initial critical
    /// (positive length) amplitude.
    pub c0: Option<f64>,
    pub eps0: f64,
    pub profile: ProfileOptions,
    /// Snapshots audited, evenly subsampled; first and last always kept.
    pub max_times: usize,
    /// Violation threshold in units of the initial chord length.
    pub tol_factor: f64,
    /// Reject shrinking runs whose initial length is not small; when off the
    /// hypothesis is still reported.
    pub require_hypothesis: bool,
}

impl Default for NoncollapsingOptions {
    fn default() -> Self {
        Self {
            mode: NoncollapsingMode::Shrinking,
            eps: 0.1,
            c0: None,
            eps0: 0.1,
            profile: ProfileOptions::default(),
            max_times: 32,
            tol_factor: 1e-6,
            require_hypothesis: true,
        }
    }
}

/// One `(δ, t)` grid point; `δ` is completed arclength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackRow {
    pub t: f64,
    pub tau: f64,
    pub delta: f64,
    pub psi: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoncollapsingReport {
    pub mode: NoncollapsingMode,
    pub phi: ProfileFunction,
    /// Admissible amplitude (shrinking) or initial critical amplitude.
    pub threshold: f64,
    pub eps1: Option<f64>,
    pub hypothesis: Option<Hypothesis>,
    pub tolerance: f64,
    pub rows: Vec<SlackRow>,
    pub min_slack: f64,
    pub initial_min_slack: f64,
    /// Slack against `c₀ L e^{(−4π²/L_T² − K₀)t} sin(πδ/L)`, `L_T` the final
    /// completed length; positive length mode only.
    pub stated_min_slack: Option<f64>,
    pub holds: bool,
}

impl NoncollapsingReport {
    /// The grid point of least slack.
    pub fn worst(&self) -> Option<&SlackRow> {
        self.rows.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }
}

/// `min ψ(δ)/(L φ₁(δ/L))` over the profile grid and the diagonal limit
/// `1/φ₁'(0)`, with `φ₁` the unit amplitude time-zero shape.
pub fn profile_critical_c0(profile: &CompletedProfile, shape: &ProfileFunction) -> f64 {
    let unit = shape.with_c0(1.0);
    let big_l = 2.0 * profile.length;
    let diagonal = 1.0 / unit.spatial(0.0).d1;
    profile
        .deltas
        .iter()
        .zip(&profile.psi_completed)
        .filter_map(|(d, psi)| {
            let w = big_l * unit.spatial(d / big_l).value;
            (w > 0.0).then(|| psi / w)
        })
        .fold(diagonal, f64::min)
}

fn subsample(snaps: &[Snapshot], max: usize) -> Vec<&Snapshot> {
    let n = snaps.len();
    if n <= max.max(2) {
        return snaps.iter().collect();
    }
    let m = max.max(2);
    let mut idx: Vec<usize> = (0..m).map(|k| (k * (n - 1) + (m - 1) / 2) / (m - 1)).collect();
    idx.dedup();
    idx.into_iter().map(|i| &snaps[i]).collect()
}

fn snapshot_profile(surface: &DiskSurface, snap: &Snapshot, opts: &ProfileOptions) -> Result<CompletedProfile> {
    let chord = Chord::from_points(surface, snap.points.clone())?;
    compute_profile(surface, &chord, opts)
}

fn slack_rows(profile: &CompletedProfile, phi: &ProfileFunction, snap: &Snapshot) -> Vec<SlackRow> {
    let big_l = 2.0 * profile.length;
    let clock = Clock::new(snap.t, snap.tau);
    profile
        .deltas
        .iter()
        .zip(&profile.psi_completed)
        .map(|(&delta, &psi)| {
            let bound = big_l * phi.value(delta / big_l, clock);
            SlackRow { t: snap.t, tau: snap.tau, delta, psi, bound, slack: psi - bound }
        })
        .collect()
}

fn min_slack(rows: &[SlackRow]) -> f64 {
    rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min)
}

/// Audits the noncollapsing bound on a `(δ, t)` grid over a flow run.
///
/// Shrinking mode first gates on `ε ∈ (0, ε₁]` and on the smallness of the
/// initial length; an amplitude above the admissible one or a bound that
/// already fails at `t = 0` is a precondition error rather than a
/// counterexample.
pub fn verify_noncollapsing(surface: &DiskSurface, run: &FlowRun, opts: &NoncollapsingOptions) -> Result<NoncollapsingReport> {
    let first = run.snapshots.first().ok_or_else(|| Error::Precondition("the run has no snapshots".into()))?;
    let k0 = surface.constants().k0;
    let initial = snapshot_profile(surface, first, &opts.profile)?;
    let (phi, threshold, eps1, hypothesis) = match opts.mode {
        NoncollapsingMode::Shrinking => {
            let eps1 = epsilon_one(surface, opts.eps0);
            if !(opts.eps > 0.0 && opts.eps <= eps1) {
                return Err(Error::Precondition(format!("ε = {} outside (0, ε₁] with ε₁ = {eps1}", opts.eps)));
            }
            let hyp = shrinking_hypothesis(surface, first.length, opts.eps);
            if opts.require_hypothesis && !hyp.holds() {
                return Err(Error::Precondition(format!("L(0)(1 + C) = {:e} exceeds {:e}", hyp.lhs, hyp.rhs)));
            }
            let admissible = admissible_c0(opts.eps)?;
            let c0 = opts.c0.unwrap_or(0.9 * admissible);
            if !(c0 > 0.0 && c0 < admissible) {
                return Err(Error::Precondition(format!("c₀ = {c0} not below the admissible amplitude {admissible}")));
            }
            (ProfileFunction::sine_eps(c0, opts.eps, k0), admissible, Some(eps1), Some(hyp))
        }
        NoncollapsingMode::PositiveLength => {
            let shape = ProfileFunction::pure_sine(1.0, k0);
            let critical = profile_critical_c0(&initial, &shape);
            let c0 = opts.c0.unwrap_or(0.9 * critical);
            if !(c0 > 0.0) {
                return Err(Error::Precondition(format!("c₀ = {c0} is not positive")));
            }
            (shape.with_c0(c0), critical, None, None)
        }
    };
    let tolerance = opts.tol_factor * first.length;
    let initial_rows = slack_rows(&initial, &phi, first);
    let initial_min_slack = min_slack(&initial_rows);
    if initial_min_slack < -tolerance {
        return Err(Error::Precondition(format!("the bound fails at t = 0 with slack {initial_min_slack:e}")));
    }
    let snaps = subsample(&run.snapshots, opts.max_times);
    let later = snaps[1..]
        .par_iter()
        .map(|s| snapshot_profile(surface, s, &opts.profile).map(|p| slack_rows(&p, &phi, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = initial_rows;
    rows.extend(later.into_iter().flatten());
    let min = min_slack(&rows);
    let stated_min_slack = match opts.mode {
        NoncollapsingMode::PositiveLength => {
            let big_lt = 2.0 * run.snapshots.last().map_or(first.length, |s| s.length);
            let rate = 4.0 * PI * PI / (big_lt * big_lt) + k0;
            let mut worst = f64::INFINITY;
            for r in &rows {
                let big_l = rows_length(r, &snaps);
                let bound = phi.c0 * big_l * (-rate * r.t).exp() * (PI * r.delta / big_l).sin();
                worst = worst.min(r.psi - bound);
            }
            Some(worst)
        }
        NoncollapsingMode::Shrinking => None,
    };
    Ok(NoncollapsingReport {
        mode: opts.mode,
        phi,
        threshold,
        eps1,
        hypothesis,
        tolerance,
        rows,
        min_slack: min,
        initial_min_slack,
        stated_min_slack,
        holds: min >= -tolerance,
    })
}

fn rows_length(row: &SlackRow, snaps: &[&Snapshot]) -> f64 {
    let s = snaps.iter().find(|s| s.t == row.t).expect("row time comes from a snapshot");
    2.0 * s.length
}

/// `4φ''/L − K₀Lφ − L∂_tφ` for the positive length profile at each
/// snapshot, with `τ'(t) = 1/L²`; vanishes identically.
pub fn time_identity_residual(phi: &ProfileFunction, run: &FlowRun, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for s in &run.snapshots {
        let big_l = 2.0 * s.length;
        let clock = Clock::new(s.t, s.tau);
        for k in 0..=samples {
            let zeta = k as f64 / samples as f64;
            let j = phi.jet(zeta, clock);
            let dt = phi.time_derivative(zeta, clock, big_l);
            let r = 4.0 * j.d2 / big_l - phi.k0 * big_l * j.value - big_l * dt;
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Terms of the evolution inequality
/// `0 >= 4φ''/L + (1 − φ'²)∫_α K + 2(φ − φ' l/L)∫κ² + φ'∫_{[x:y]}κ² − L∂_tφ
///       + 2(1 − φ'²) κ^∂/sin θ₀`, the last for reflected pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvolutionTerms {
    pub profile: f64,
    pub gauss: f64,
    pub dissipation: f64,
    pub arc: f64,
    pub time: f64,
    pub boundary: f64,
}

impl EvolutionTerms {
    pub fn sum(&self) -> f64 {
        self.profile + self.gauss + self.dissipation + self.arc + self.time + self.boundary
    }

    pub fn max_abs(&self) -> f64 {
        [self.profile, self.gauss, self.dissipation, self.arc, self.time, self.boundary].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRow {
    pub t: f64,
    pub pair: CompletedPair,
    pub z_min: f64,
    pub terms: EvolutionTerms,
    /// The left side `E` of the inequality.
    pub e: f64,
    /// `∂_t Z` at the pair by Richardson-extrapolated forward differences
    /// along the discrete flow.
    pub dz_dt: f64,
    /// `∂_t Z` from the first variation; exceeds `E` by the certificate.
    pub dz_dt_analytic: f64,
    pub certificate_rhs: f64,
    pub tolerance: f64,
    /// `E <= ∂_t Z + tol`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionReport {
    pub rows: Vec<EvolutionRow>,
    /// Requested times at which `min Z` was not zero.
    pub skipped: Vec<f64>,
    /// `min (φ − φ'ζ)` on `(0, ½]`, nonnegative for concave symmetric `φ`.
    pub dissipation_weight: f64,
    pub holds: bool,
}

impl EvolutionReport {
    /// No zero-minimum time was found, so the audit holds vacuously.
    pub fn vacuous(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    pub profile: ProfileOptions,
    pub tol_zero: f64,
    pub rel_tol: f64,
    /// Flow steps in the first finite difference.
    pub fd_steps: usize,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { profile: ProfileOptions::default(), tol_zero: TOL_ZERO, rel_tol: 1e-3, fd_steps: 2 }
    }
}

/// `∫ κ²` over the shorter completed arc between the pair.
fn arc_squared_curvature(surface: &DiskSurface, chord: &Chord, pair: &CompletedPair) -> Result<f64> {
    let sq = |k: f64| k * k;
    let len = chord.length();
    let (x, y) = (pair.x.s, pair.y.s);
    match pair.class {
        PairClass::Classical => chord.curvature_integral_between(surface, x, y, sq),
        PairClass::ThroughStart => Ok(chord.curvature_integral_between(surface, 0.0, x, sq)? + chord.curvature_integral_between(surface, 0.0, y, sq)?),
        PairClass::ThroughEnd => Ok(chord.curvature_integral_between(surface, x, len, sq)? + chord.curvature_integral_between(surface, y, len, sq)?),
    }
}

/// `Z` at the pair with the same arclength fractions on a later chord.
fn transported_z(surface: &DiskSurface, chord: &Chord, pair: &CompletedPair, old_len: f64, phi: &ProfileFunction, clock: Clock) -> Result<f64> {
    let len = chord.length();
    let r = len / old_len;
    let x = CompletedPoint::new(pair.x.s * r, pair.x.sign, len);
    let y = CompletedPoint::new(pair.y.s * r, pair.y.sign, len);
    let big_l = 2.0 * len;
    let d = geodesy::completed_distance(surface, x, y, chord)?;
    Ok(d - big_l * phi.value(pair.l * r / big_l, clock))
}

/// Audits the evolution inequality at the current state, or returns `None`
/// when `min Z` is not zero there.
pub fn evolution_audit_at(
    surface: &DiskSurface,
    state: &FlowState,
    phi: &ProfileFunction,
    cfg: &FlowConfig,
    opts: &EvolutionOptions,
) -> Result<Option<EvolutionRow>> {
    let chord = state.chord(surface)?;
    let len = chord.length();
    let big_l = 2.0 * len;
    let clock = Clock::new(state.t, state.tau);
    let pd = PairDistance::new(surface, &chord, opts.profile.table_size)?;
    let min = minimize_z(&pd, phi, clock, &opts.profile)?;
    if min.at_smallest_separation || min.value.abs() > opts.tol_zero * len {
        return Ok(None);
    }
    let cert = evaluate_certificate(surface, &chord, &min.pair, phi, clock, TOL_CERT * len)?;
    let pair = cert.pair;
    let zeta = pair.l / big_l;
    let j = cert.jet;
    let total_sq = chord.squared_curvature_integral(surface)?;
    let terms = EvolutionTerms {
        profile: -cert.terms.profile,
        gauss: -cert.terms.gauss,
        dissipation: 2.0 * (j.value - j.d1 * zeta) * total_sq,
        arc: j.d1 * arc_squared_curvature(surface, &chord, &pair)?,
        time: -big_l * phi.time_derivative(zeta, clock, big_l),
        boundary: -cert.terms.boundary,
    };
    let e = terms.sum();
    let dz_dt_analytic = cert.terms.curvature_x + cert.terms.curvature_y + terms.dissipation + terms.arc + terms.time;

    let z0 = transported_z(surface, &chord, &pair, len, phi, clock)?;
    let mut probe = state.clone();
    let mut samples = Vec::with_capacity(2);
    for _ in 0..2 {
        for _ in 0..opts.fd_steps.max(1) {
            flow::step(surface, &mut probe, cfg)?;
        }
        let c = probe.chord(surface)?;
        let z = transported_z(surface, &c, &pair, len, phi, Clock::new(probe.t, probe.tau))?;
        samples.push((probe.t - state.t, z - z0));
    }
    let (h1, a1) = samples[0];
    let (h2, a2) = samples[1];
    // forward differences are first order; eliminate the h term
    let dz_dt = (a1 * h2 * h2 - a2 * h1 * h1) / (h1 * h2 * (h2 - h1));
    let tolerance = opts.rel_tol * terms.max_abs().max(dz_dt.abs());
    Ok(Some(EvolutionRow {
        t: state.t,
        pair,
        z_min: min.value,
        terms,
        e,
        dz_dt,
        dz_dt_analytic,
        certificate_rhs: cert.rhs,
        tolerance,
        holds: e <= dz_dt + tolerance,
    }))
}

/// Runs the flow from `chord` and audits the evolution inequality at each
/// requested time (the first state at or after it).
pub fn evolution_inequality_audit(
    surface: &DiskSurface,
    chord: &Chord,
    phi: &ProfileFunction,
    cfg: &FlowConfig,
    times: &[f64],
    opts: &EvolutionOptions,
) -> Result<EvolutionReport> {
    let mut times = times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut state = FlowState::new(surface, chord, cfg)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &t in &times {
        while state.t < t {
            flow::step(surface, &mut state, cfg)?;
        }
        match evolution_audit_at(surface, &state, phi, cfg, opts)? {
            Some(row) => rows.push(row),
            None => skipped.push(t),
        }
    }
    let dissipation_weight = super::profile_fn::min_dissipation_weight(phi, 4096);
    let holds = rows.iter().all(|r| r.holds) && dissipation_weight >= -1e-12;
    Ok(EvolutionReport { rows, skipped, dissipation_weight, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::evolve_classify;
    use crate::types::Point;
    use approx::assert_abs_diff_eq;

    /// Arc of the circle of radius `r` centred at `(√(1+r²), 0)`, which
    /// meets the unit circle orthogonally.
    fn orthogonal_arc(s: &DiskSurface, r: f64, n: usize) -> Chord {
        Chord::orthogonal_arc(s, 0.0, r, n).unwrap()
    }

    fn u_chord(s: &DiskSurface) -> Chord {
        let f = |u: f64| {
            let th = 0.5 + (2.0 * PI - 1.0) * (3.0 * u * u - 2.0 * u * u * u);
            let r = 1.0 - 0.7 * (PI * u).sin();
            Point::new(r * th.cos(), r * th.sin())
        };
        Chord::from_fn(s, f, 256).unwrap()
    }

    fn quick() -> ProfileOptions {
        ProfileOptions { n_delta: 32, n_pairs: 64, ..Default::default() }
    }

    #[test]
    fn stationary_diameter_keeps_its_initial_slack() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = Chord::diameter(&s, 0.4, 128).unwrap();
        let run = evolve_classify(&s, &chord, &FlowConfig::default()).unwrap();
        let opts = NoncollapsingOptions { profile: quick(), require_hypothesis: false, ..Default::default() };
        let rep = verify_noncollapsing(&s, &run, &opts).unwrap();
        assert!(!rep.hypothesis.unwrap().holds());
        assert!(rep.holds);
        assert!(rep.min_slack >= rep.initial_min_slack - 1e-9, "{} {}", rep.min_slack, rep.initial_min_slack);
        // ψ(δ) = δ on a diameter, and the profile is time independent
        let c0 = 0.9 * admissible_c0(0.1).unwrap();
        let phi = ProfileFunction::sine_eps(c0, 0.1, 0.0);
        for r in &rep.rows {
            let big_l = 4.0;
            assert_abs_diff_eq!(r.psi, r.delta, epsilon = 1e-9);
            assert_abs_diff_eq!(r.slack, r.delta - big_l * phi.spatial(r.delta / big_l).value, epsilon = 1e-9);
        }
    }

    #[test]
    fn shrinking_near_boundary_arc_stays_noncollapsed() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = orthogonal_arc(&s, 1.2e-4, 128);
        assert!(chord.length() < 5e-4);
        let run = evolve_classify(&s, &chord, &FlowConfig::default()).unwrap();
        assert_eq!(run.outcome.label(), "half_point");
        let opts = NoncollapsingOptions { profile: quick(), max_times: 12, ..Default::default() };
        let rep = verify_noncollapsing(&s, &run, &opts).unwrap();
        assert!(rep.hypothesis.unwrap().holds());
        assert!(rep.holds, "min slack {:e}", rep.min_slack);
        assert!(rep.min_slack >= -1e-6 * chord.length());
    }

    #[test]
    fn epsilon_outside_range_is_rejected() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = orthogonal_arc(&s, 1.2e-4, 64);
        let run = evolve_classify(&s, &chord, &FlowConfig { t_max: 0.0, ..Default::default() }).unwrap();
        for eps in [0.0, 0.2, -0.1] {
            let opts = NoncollapsingOptions { eps, profile: quick(), ..Default::default() };
            assert!(matches!(verify_noncollapsing(&s, &run, &opts), Err(Error::Precondition(_))));
        }
        let big = orthogonal_arc(&s, 0.5, 64);
        let run = evolve_classify(&s, &big, &FlowConfig { t_max: 0.0, ..Default::default() }).unwrap();
        let opts = NoncollapsingOptions { profile: quick(), ..Default::default() };
        assert!(matches!(verify_noncollapsing(&s, &run, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn pure_sine_time_identity_holds_along_a_run() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = orthogonal_arc(&s, 0.6, 64);
        let run = evolve_classify(&s, &chord, &FlowConfig::default()).unwrap();
        let phi = ProfileFunction::pure_sine(0.2, 0.3);
        assert!(time_identity_residual(&phi, &run, 200) < 1e-8);
    }

    #[test]
    fn evolution_inequality_at_an_engineered_zero_minimum() {
        let s = DiskSurface::flat_disk(1.0);
        let cfg = FlowConfig::default();
        let state = FlowState::new(&s, &u_chord(&s), &cfg).unwrap();
        let chord = state.chord(&s).unwrap();
        let opts = EvolutionOptions::default();
        let pd = PairDistance::new(&s, &chord, opts.profile.table_size).unwrap();
        let (phi, _) = super::super::certificate::engineer_zero_minimum(&pd, &ProfileFunction::pure_sine(1.0, 0.0), &opts.profile).unwrap();
        let rep = evolution_inequality_audit(&s, &chord, &phi, &cfg, &[0.0], &opts).unwrap();
        assert_eq!(rep.rows.len(), 1, "skipped {:?}", rep.skipped);
        let row = &rep.rows[0];
        assert!(row.holds, "{row:?}");
        assert!(row.certificate_rhs > 0.0);
        assert_abs_diff_eq!(row.dz_dt_analytic - row.e, row.certificate_rhs, epsilon = 1e-9);
        assert!((row.dz_dt - row.dz_dt_analytic).abs() < 0.05 * row.terms.max_abs(), "{row:?}");
        assert!(rep.dissipation_weight >= 0.0);
    }

    #[test]
    fn positive_z_makes_the_audit_vacuous() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = orthogonal_arc(&s, 0.6, 64);
        let phi = ProfileFunction::pure_sine(0.05, 0.0);
        let cfg = FlowConfig::default();
        let rep = evolution_inequality_audit(&s, &chord, &phi, &cfg, &[0.0, 0.01], &EvolutionOptions { profile: quick(), ..Default::default() }).unwrap();
        assert!(rep.vacuous());
        assert!(rep.holds);
        assert_eq!(rep.skipped.len(), 2);
    }
}
