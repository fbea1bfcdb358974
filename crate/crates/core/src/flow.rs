//! Free boundary curve shortening flow.
//!
//! The chord is carried as `N + 1` samples. Interior samples follow the
//! semi-discrete equation `x_t = (x_uu + Γ(x_u, x_u)) / |x_u|²_g`, whose normal
//! part is `κν` and whose tangential part keeps the samples evenly spread.
//! Endpoints are not evolved: at every stage they are placed on the boundary
//! so that the one-sided endpoint tangent is orthogonal to it. Time stepping
//! is Heun's method.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use crate::curve::{endpoint_derivative, Chord};
use crate::error::{Error, Result};
use crate::surface::{DiskSurface, Metric};
use crate::types::{Point, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Number of segments.
    pub segments: usize,
    /// `dt <= dt_factor * h_min²`.
    pub dt_factor: f64,
    /// Steps are refused when `max|κ| dt` exceeds this.
    pub curvature_step: f64,
    /// Overrides the stability bound when smaller.
    pub fixed_dt: Option<f64>,
    pub eps_geo: f64,
    /// Half-point threshold as a fraction of the initial length.
    pub eps_len_factor: f64,
    /// Radius of the boundary ball in units of the half-point threshold.
    pub ball_factor: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Classification is checked every this many steps.
    pub check_every: usize,
    /// A snapshot is stored each time the length drops by this factor.
    pub snapshot_ratio: f64,
    /// ... and at least this often in time.
    pub snapshot_dt: f64,
    pub history_capacity: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            segments: 128,
            dt_factor: 0.4,
            curvature_step: 0.2,
            fixed_dt: None,
            eps_geo: 1e-6,
            eps_len_factor: 1e-3,
            ball_factor: 5.0,
            t_max: 50.0,
            max_steps: 5_000_000,
            check_every: 16,
            snapshot_ratio: 0.9,
            snapshot_dt: 0.25,
            history_capacity: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub t: f64,
    pub length: f64,
    pub max_curvature: f64,
    pub defect: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// `∫ dt / (2L)²` up to `t`.
    pub tau: f64,
    pub length: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub tau: f64,
    pub dt: f64,
    pub steps: usize,
    pub points: Vec<Point>,
    /// Boundary parameters of the two endpoints.
    pub theta: (f64, f64),
    pub history: VecDeque<HistoryRow>,
    capacity: usize,
}

/// Metric length of the sample polyline.
pub fn polyline_length(surface: &DiskSurface, pts: &[Point]) -> f64 {
    pts.windows(2).map(|w| surface.segment_length(w[0], w[1])).sum()
}

fn spacing(surface: &DiskSurface, pts: &[Point]) -> (f64, f64) {
    pts.windows(2).map(|w| surface.segment_length(w[0], w[1])).fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// Interior velocities; the first and last entries are zero. The second
/// vector holds the normal components, i.e. the discrete curvature.
pub fn velocity(surface: &DiskSurface, pts: &[Point]) -> (Vec<Point>, Vec<f64>) {
    let n = pts.len();
    let mut v = vec![Point::zeros(); n];
    let mut kappa = vec![0.0; n];
    let flat = surface.is_flat();
    for i in 1..n - 1 {
        let d = (pts[i + 1] - pts[i - 1]) * 0.5;
        let mut acc = pts[i + 1] - pts[i] * 2.0 + pts[i - 1];
        if !flat {
            acc += surface.christoffel(pts[i]).contract(d, d);
        }
        let g = surface.metric_unchecked(pts[i]);
        let speed2 = d.dot(&(g * d));
        let vi = acc / speed2;
        v[i] = vi;
        // ν = -J T
        let nu = -surface.rotate(pts[i], d) / speed2.sqrt();
        kappa[i] = vi.dot(&(g * nu));
    }
    (v, kappa)
}

/// Places an endpoint on the boundary so that the one-sided tangent built
/// from it and the two next samples is orthogonal to the boundary.
fn solve_endpoint(surface: &DiskSurface, guess: f64, x1: Point, x2: Point) -> Result<f64> {
    let residual = |theta: f64| {
        let z = surface.domain.boundary_point(theta);
        let d = endpoint_derivative(surface, z, x1, x2);
        let tau = surface.boundary_tangent(theta);
        surface.inner(z, d, tau) / surface.norm(z, d).max(1e-300)
    };
    // rounding floor of the residual: chart coordinates of size R against
    // a sample spacing h
    let (a, b) = surface.domain.semi_axes();
    let h = (x1 - x2).norm().max(1e-300);
    let floor = 1e-13f64.max(64.0 * f64::EPSILON * a.max(b) / h);
    let mut theta = guess;
    let mut r = residual(theta);
    for _ in 0..40 {
        if r.abs() < floor {
            return Ok(theta.rem_euclid(TAU));
        }
        // difference step well below the sample spacing
        let dh = (1e-3 * h / a.max(b)).min(1e-7);
        let slope = (residual(theta + dh) - residual(theta - dh)) / (2.0 * dh);
        if !(slope.abs() > 1e-300) || !slope.is_finite() {
            break;
        }
        let mut step = -r / slope;
        // damp wild steps; the endpoint only moves a fraction of a sample
        let cap = 0.25;
        if step.abs() > cap {
            step = cap * step.signum();
        }
        let mut accepted = false;
        for _ in 0..30 {
            let cand = theta + step;
            let rc = residual(cand);
            if rc.abs() < r.abs() || rc.abs() < floor {
                theta = cand;
                r = rc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.abs() < 1e-10f64.max(4.0 * floor) {
        return Ok(theta.rem_euclid(TAU));
    }
    Err(Error::numeric("endpoint orthogonality solve failed", r.abs()))
}

fn place_endpoints(surface: &DiskSurface, pts: &mut [Point], guess: (f64, f64)) -> Result<(f64, f64)> {
    let n = pts.len();
    let t0 = solve_endpoint(surface, guess.0, pts[1], pts[2])?;
    let t1 = solve_endpoint(surface, guess.1, pts[n - 2], pts[n - 3])?;
    pts[0] = surface.domain.boundary_point(t0);
    pts[n - 1] = surface.domain.boundary_point(t1);
    Ok((t0, t1))
}

fn unwrap_near(theta: f64, reference: f64) -> f64 {
    theta + TAU * ((reference - theta) / TAU).round()
}

/// Replaces the ends of `chord` inside a window of arclength
/// `min(0.05 L, 0.1)` by cubic Hermite arcs leaving the boundary along the
/// inward normal.
pub fn weak_start(surface: &DiskSurface, chord: &Chord) -> Result<Chord> {
    let l = chord.length();
    let mut w = (0.05 * l).min(0.1);
    for _ in 0..8 {
        match weak_start_window(surface, chord, w) {
            Ok(c) => return Ok(c),
            Err(_) => w *= 0.5,
        }
    }
    Err(Error::Geometry("weak start could not bend the endpoints inward".into()))
}

fn weak_start_window(surface: &DiskSurface, chord: &Chord, w: f64) -> Result<Chord> {
    let l = chord.length();
    let (a, b) = chord.endpoints();
    let na = surface.boundary_inward_normal(surface.domain.parameter_of(a));
    let nb = surface.boundary_inward_normal(surface.domain.parameter_of(b));
    let hermite = |p0: Point, m0: Point, p1: Point, m1: Point, u: f64| {
        let (u2, u3) = (u * u, u * u * u);
        p0 * (2.0 * u3 - 3.0 * u2 + 1.0) + m0 * (u3 - 2.0 * u2 + u) + p1 * (-2.0 * u3 + 3.0 * u2) + m1 * (u3 - u2)
    };
    let m = 32;
    let mut pts = Vec::new();
    let pa = chord.point(w);
    let ta = chord.tangent(surface, w)? * w;
    for k in 0..m {
        pts.push(hermite(a, na * w, pa, ta, k as f64 / m as f64));
    }
    let inner = chord.len().max(64);
    for k in 0..=inner {
        let s = w + (l - 2.0 * w) * k as f64 / inner as f64;
        pts.push(chord.point(s));
    }
    let pb = chord.point(l - w);
    let tb = chord.tangent(surface, l - w)? * w;
    for k in 1..=m {
        pts.push(hermite(pb, tb, b, -nb * w, k as f64 / m as f64));
    }
    pts.dedup_by(|x, y| (*x - *y).norm() < 1e-15);
    Chord::from_points(surface, pts)
}

impl FlowState {
    /// Samples `chord` uniformly and makes it orthogonal at the boundary,
    /// through a weak start when the ends are visibly oblique.
    pub fn new(surface: &DiskSurface, chord: &Chord, cfg: &FlowConfig) -> Result<Self> {
        let (s0, s1) = chord.endpoint_sines(surface)?;
        let chord = if s0.abs().max(s1.abs()) > 1e-3 { weak_start(surface, chord)? } else { chord.clone() };
        let resampled = chord.resample(surface, cfg.segments.max(8))?;
        let mut points = resampled.samples().to_vec();
        let n = points.len();
        let guess = (surface.domain.parameter_of(points[0]), surface.domain.parameter_of(points[n - 1]));
        let theta = place_endpoints(surface, &mut points, guess)?;
        let mut state =
            Self { t: 0.0, tau: 0.0, dt: 0.0, steps: 0, points, theta, history: VecDeque::new(), capacity: cfg.history_capacity.max(16) };
        state.record(surface);
        Ok(state)
    }

    pub fn length(&self, surface: &DiskSurface) -> f64 {
        polyline_length(surface, &self.points)
    }

    pub fn chord(&self, surface: &DiskSurface) -> Result<Chord> {
        Chord::from_points(surface, self.points.clone())
    }

    /// Discrete curvature at the interior samples.
    pub fn curvatures(&self, surface: &DiskSurface) -> Vec<f64> {
        let (_, k) = velocity(surface, &self.points);
        k[1..k.len() - 1].to_vec()
    }

    pub fn max_curvature(&self, surface: &DiskSurface) -> f64 {
        self.curvatures(surface).iter().fold(0.0f64, |m, k| m.max(k.abs()))
    }

    /// Orthogonality defects `asin|⟨T, τ⟩|` at both endpoints.
    pub fn defects(&self, surface: &DiskSurface) -> (f64, f64) {
        let n = self.points.len();
        let p = &self.points;
        let d = |a, b, c| crate::curve::endpoint_sine(surface, a, b, c).map(|s| s.abs().asin()).unwrap_or(f64::INFINITY);
        (d(p[0], p[1], p[2]), d(p[n - 1], p[n - 2], p[n - 3]))
    }

    fn record(&mut self, surface: &DiskSurface) {
        let row = HistoryRow { t: self.t, length: self.length(surface), max_curvature: self.max_curvature(surface), defect: self.defects(surface) };
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(row);
    }

    fn redistribute(&mut self, surface: &DiskSurface, segments: usize) -> Result<()> {
        let chord = self.chord(surface)?.resample(surface, segments)?;
        self.points = chord.samples().to_vec();
        self.theta = place_endpoints(surface, &mut self.points, self.theta)?;
        Ok(())
    }
}

fn heun(surface: &DiskSurface, state: &FlowState, dt: f64) -> Result<(Vec<Point>, (f64, f64), f64)> {
    let n = state.points.len();
    let (k1, kappa) = velocity(surface, &state.points);
    let kmax = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let mut mid = state.points.clone();
    for i in 1..n - 1 {
        mid[i] += k1[i] * dt;
    }
    check_inside(surface, &mid)?;
    let th = place_endpoints(surface, &mut mid, state.theta)?;
    let (k2, _) = velocity(surface, &mid);
    let mut next = state.points.clone();
    for i in 1..n - 1 {
        next[i] += (k1[i] + k2[i]) * (0.5 * dt);
    }
    check_inside(surface, &next)?;
    let th = place_endpoints(surface, &mut next, th)?;
    Ok((next, (unwrap_near(th.0, state.theta.0), unwrap_near(th.1, state.theta.1)), kmax))
}

fn check_inside(surface: &DiskSurface, pts: &[Point]) -> Result<()> {
    if pts[1..pts.len() - 1].iter().all(|p| surface.domain.level(*p) < 0.0 && p.x.is_finite() && p.y.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration("a sample left the disk".into()))
    }
}

/// Advances one accepted step, halving `dt` on rejection. Returns the
/// accepted `dt`.
pub fn step(surface: &DiskSurface, state: &mut FlowState, cfg: &FlowConfig) -> Result<f64> {
    let (hmin, hmax) = spacing(surface, &state.points);
    if hmax > 3.0 * hmin {
        state.redistribute(surface, cfg.segments.max(8))?;
    }
    let (hmin, _) = spacing(surface, &state.points);
    let mut dt = cfg.dt_factor * hmin * hmin;
    if let Some(f) = cfg.fixed_dt {
        dt = dt.min(f);
    }
    let floor = 1e-9 * hmin * hmin;
    let l_before = state.length(surface);
    // length noise from chart coordinates of size R
    let (a, b) = surface.domain.semi_axes();
    let g = surface.metric_unchecked(state.points[0]);
    let rounding = state.points.len() as f64 * 16.0 * f64::EPSILON * a.max(b) * g.norm().sqrt();
    loop {
        if dt < floor {
            return Err(Error::Integration(format!("time step underflow at t = {}", state.t)));
        }
        match heun(surface, state, dt) {
            Ok((next, theta, kmax)) if kmax * dt <= cfg.curvature_step => {
                let l_after = polyline_length(surface, &next);
                if l_after > l_before + 1e-10 * dt * l_before + rounding {
                    dt *= 0.5;
                    continue;
                }
                let big_l0 = 2.0 * l_before;
                let big_l1 = 2.0 * l_after;
                state.tau += 0.5 * dt * (1.0 / (big_l0 * big_l0) + 1.0 / (big_l1 * big_l1));
                state.points = next;
                state.theta = theta;
                state.t += dt;
                state.dt = dt;
                state.steps += 1;
                state.record(surface);
                return Ok(dt);
            }
            _ => dt *= 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowOutcome {
    /// Converged to a free boundary geodesic.
    Geodesic { chord: Chord, t: f64, max_curvature: f64 },
    /// Shrank into a boundary point.
    HalfPoint { point: Point, param: f64, extinction_time: f64, t: f64 },
    Timeout { t: f64 },
}

impl FlowOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            FlowOutcome::Geodesic { .. } => "geodesic",
            FlowOutcome::HalfPoint { .. } => "half_point",
            FlowOutcome::Timeout { .. } => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub outcome: FlowOutcome,
    pub initial_length: f64,
    pub snapshots: Vec<Snapshot>,
    pub history: Vec<HistoryRow>,
    pub final_state: FlowState,
}

fn snapshot(state: &FlowState, surface: &DiskSurface) -> Snapshot {
    Snapshot { t: state.t, tau: state.tau, length: state.length(surface), points: state.points.clone() }
}

/// Least squares fit of `L² = b (T - t)` over the rows; returns `T`.
pub fn fit_extinction_time(rows: &[(f64, f64)]) -> Option<f64> {
    // only the final stretch, where the law is closest to linear
    let last = rows.last()?.1;
    let start = rows.iter().position(|r| r.1 <= 4.0 * last).unwrap_or(0);
    let rows = &rows[start.min(rows.len().saturating_sub(8))..];
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let (st, sy) = rows.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + t, b + l * l));
    let (mt, my) = (st / n, sy / n);
    let (sxx, sxy) = rows.iter().fold((0.0, 0.0), |(a, b), (t, l)| (a + (t - mt).powi(2), b + (t - mt) * (l * l - my)));
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return None;
    }
    Some(mt - my / slope)
}

fn in_boundary_ball(surface: &DiskSurface, pts: &[Point], radius: f64) -> Option<(Point, f64)> {
    let n = pts.len();
    let a = surface.domain.parameter_of(pts[0]);
    let b = unwrap_near(surface.domain.parameter_of(pts[n - 1]), a);
    let param = (0.5 * (a + b)).rem_euclid(TAU);
    let z = surface.domain.boundary_point(param);
    if pts.iter().all(|p| surface.segment_length(z, *p) <= radius) {
        Some((z, param))
    } else {
        None
    }
}

/// Flows `chord` until it converges to a geodesic, shrinks to a boundary
/// point or runs out of time. A singularity away from the boundary is
/// reported as an error.
pub fn evolve_classify(surface: &DiskSurface, chord: &Chord, cfg: &FlowConfig) -> Result<FlowRun> {
    let mut state = FlowState::new(surface, chord, cfg)?;
    let l0 = state.length(surface);
    let eps_len = cfg.eps_len_factor * l0;
    let mut snapshots = vec![snapshot(&state, surface)];
    let mut next_len = l0 * cfg.snapshot_ratio;
    let mut next_time = cfg.snapshot_dt;
    let mut tail: Vec<(f64, f64)> = Vec::new();
    let finish = |state: FlowState, outcome: FlowOutcome, mut snapshots: Vec<Snapshot>| {
        if snapshots.last().map(|s| s.t) != Some(state.t) {
            snapshots.push(snapshot(&state, surface));
        }
        FlowRun { outcome, initial_length: l0, snapshots, history: state.history.iter().copied().collect(), final_state: state }
    };
    loop {
        if state.t >= cfg.t_max || state.steps >= cfg.max_steps {
            let t = state.t;
            return Ok(finish(state, FlowOutcome::Timeout { t }, snapshots));
        }
        if let Err(e) = step(surface, &mut state, cfg) {
            let l = state.length(surface);
            if l < 50.0 * eps_len {
                if let Some((z, param)) = in_boundary_ball(surface, &state.points, cfg.ball_factor * l.max(eps_len)) {
                    let t = state.t;
                    let extinction_time = fit_extinction_time(&tail).unwrap_or(t);
                    return Ok(finish(state, FlowOutcome::HalfPoint { point: z, param, extinction_time, t }, snapshots));
                }
            }
            return Err(Error::Numeric { message: format!("singularity away from the boundary: {e}"), residual: l });
        }
        let l = state.length(surface);
        if l < 20.0 * eps_len {
            tail.push((state.t, l));
        }
        if l <= next_len || state.t >= next_time {
            snapshots.push(snapshot(&state, surface));
            while next_len >= l {
                next_len *= cfg.snapshot_ratio;
            }
            while next_time <= state.t {
                next_time += cfg.snapshot_dt;
            }
        }
        if state.steps % cfg.check_every.max(1) != 0 {
            continue;
        }
        if l < eps_len {
            if let Some((z, param)) = in_boundary_ball(surface, &state.points, cfg.ball_factor * eps_len) {
                let t = state.t;
                let extinction_time = fit_extinction_time(&tail).unwrap_or(t);
                return Ok(finish(state, FlowOutcome::HalfPoint { point: z, param, extinction_time, t }, snapshots));
            }
        }
        let kmax = state.max_curvature(surface);
        let (d0, d1) = state.defects(surface);
        if kmax < cfg.eps_geo && d0.max(d1) < cfg.eps_geo {
            let chord = state.chord(surface)?;
            let t = state.t;
            return Ok(finish(state, FlowOutcome::Geodesic { chord, t, max_curvature: kmax }, snapshots));
        }
    }
}

/// Linear map from chart offsets at `z` to orthonormal coordinates.
fn normal_frame(surface: &DiskSurface, z: Point) -> Tensor {
    match &surface.metric {
        Metric::Flat => Tensor::identity(),
        Metric::Conformal(phi) => Tensor::identity() * phi.value(z).exp(),
        Metric::General(_) => {
            let g = surface.metric_unchecked(z);
            let eig = g.symmetric_eigen();
            let d = Tensor::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
            eig.eigenvectors * d * eig.eigenvectors.transpose()
        }
    }
}

/// Hausdorff distance between the polyline `pts` and the unit half circle
/// `{|u| = 1, ⟨u, n⟩ >= 0}`.
pub fn semicircle_deviation(pts: &[Point], n: Point) -> f64 {
    let n = n / n.norm();
    let tau = Point::new(-n.y, n.x);
    let to_arc = |p: Point| {
        if p.dot(&n) >= 0.0 {
            (p.norm() - 1.0).abs()
        } else {
            (p - tau).norm().min((p + tau).norm())
        }
    };
    let mut d = pts.iter().map(|p| to_arc(*p)).fold(0.0f64, f64::max);
    let m = 512;
    for k in 0..=m {
        let a = PI * k as f64 / m as f64;
        let q = tau * a.cos() + n * a.sin();
        let near = pts.windows(2).map(|w| point_segment(q, w[0], w[1])).fold(f64::INFINITY, f64::min);
        d = d.max(near);
    }
    d
}

fn point_segment(q: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((q - a).dot(&ab) / ab.norm_squared().max(1e-300)).clamp(0.0, 1.0);
    (q - a - ab * t).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub extinction_time: f64,
    pub point: Point,
    /// `(t, deviation)` per snapshot, in time order.
    pub deviations: Vec<(f64, f64)>,
}

impl BlowupReport {
    pub fn last_deviation(&self) -> f64 {
        self.deviations.last().map(|d| d.1).unwrap_or(f64::INFINITY)
    }
}

/// Rescales the snapshots of a half-point run by `1/√(2(T - t))` about the
/// extinction point and measures their distance from the unit half circle.
/// Only snapshots shorter than `window` times the initial length are used.
pub fn blowup_profile(surface: &DiskSurface, run: &FlowRun, window: f64) -> Result<BlowupReport> {
    let (z, param, big_t) = match run.outcome {
        FlowOutcome::HalfPoint { point, param, extinction_time, .. } => (point, param, extinction_time),
        _ => return Err(Error::Precondition("blow-up needs a half-point run".into())),
    };
    let frame = normal_frame(surface, z);
    let normal = frame * surface.boundary_inward_normal(param);
    let chosen: Vec<&Snapshot> =
        run.snapshots.iter().filter(|s| s.length < window * run.initial_length && s.t < big_t).collect();
    if chosen.len() < 3 {
        return Err(Error::Resolution(format!("{} snapshots in the blow-up window", chosen.len())));
    }
    let deviations = chosen
        .iter()
        .map(|s| {
            let scale = 1.0 / (2.0 * (big_t - s.t)).sqrt();
            let pts: Vec<Point> = s.points.iter().map(|p| frame * (p - z) * scale).collect();
            (s.t, semicircle_deviation(&pts, normal))
        })
        .collect();
    Ok(BlowupReport { extinction_time: big_t, point: z, deviations })
}

/// Distance to the boundary of a sample, chart-exact for flat metrics and
/// by geodesic rays otherwise.
fn boundary_distance(surface: &DiskSurface, p: Point) -> Result<f64> {
    if surface.is_flat() {
        if let crate::surface::ChartDomain::Disk { radius } = surface.domain {
            return Ok(radius - p.norm());
        }
    }
    crate::geodesy::distance_to_boundary(surface, p).map(|(d, _)| d)
}

/// `min` over snapshots of the distance to the boundary of the samples
/// whose arclength to the nearer endpoint exceeds `delta`.
pub fn boundary_avoidance_audit(surface: &DiskSurface, run: &FlowRun, delta: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in &run.snapshots {
        let mut acc = vec![0.0];
        for w in s.points.windows(2) {
            acc.push(acc.last().unwrap() + surface.segment_length(w[0], w[1]));
        }
        let l = *acc.last().unwrap();
        for (p, a) in s.points.iter().zip(&acc) {
            if a.min(l - a) > delta {
                best = best.min(boundary_distance(surface, *p)?);
            }
        }
    }
    Ok(best)
}

/// Compares the decay of the length with `∫κ² ds` over `steps` steps from
/// `state`: returns `(ΔL/Δt, -mean ∫κ²)`.
pub fn dissipation_check(surface: &DiskSurface, state: &FlowState, cfg: &FlowConfig, steps: usize) -> Result<(f64, f64)> {
    let mut s = state.clone();
    let l0 = s.length(surface);
    let t0 = s.t;
    let e0 = s.chord(surface)?.squared_curvature_integral(surface)?;
    for _ in 0..steps {
        step(surface, &mut s, cfg)?;
    }
    let e1 = s.chord(surface)?.squared_curvature_integral(surface)?;
    let rate = (s.length(surface) - l0) / (s.t - t0);
    Ok((rate, -0.5 * (e0 + e1)))
}
