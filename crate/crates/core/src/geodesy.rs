//! Geodesics, intrinsic distances, reflected distances and parallel
//! transport on a [`DiskSurface`].

use std::f64::consts::TAU;

use crate::curve::{Chord, CompletedPoint};
use crate::eikonal;
use crate::error::{Error, Result};
use crate::numerics::{golden_section, rk4_step};
use crate::surface::DiskSurface;
use crate::types::Point;

/// RK4 steps per unit length for reported geodesics.
pub const STEPS_PER_UNIT: f64 = 512.0;
/// RK4 steps per unit length for boundary fans.
const FAN_STEPS_PER_UNIT: f64 = 128.0;
/// Uniform boundary samples used by the reflected distance scan.
pub const BOUNDARY_SCAN: usize = 1024;

/// Angle data at the break point of a reflected geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenPoint {
    pub point: Point,
    /// Boundary parameter of the break point.
    pub param: f64,
    /// Unit boundary tangent, oriented along the direction of travel.
    pub boundary_tangent: Point,
    pub inward_normal: Point,
    /// Unit tangent of the first leg on arrival.
    pub incoming: Point,
    /// Unit tangent of the second leg on departure.
    pub outgoing: Point,
    pub cos_in: f64,
    pub cos_out: f64,
    /// Angle between the legs and the boundary.
    pub theta0: f64,
}

impl BrokenPoint {
    /// `|cos θ_in − cos θ_out|`: vanishes when the equal-angle law holds.
    pub fn reflection_defect(&self) -> f64 {
        (self.cos_in - self.cos_out).abs()
    }
}

/// A geodesic (or a broken geodesic with one boundary reflection),
/// sampled by metric arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub samples: Vec<Point>,
    /// Unit metric tangents at the samples.
    pub tangents: Vec<Point>,
    /// Metric arclength at the samples.
    pub arclength: Vec<f64>,
    /// Parametrisation speed on `[0, 1]`, i.e. the length.
    pub speed: f64,
    pub endpoints: (Point, Point),
    /// Set when integration stopped on the boundary.
    pub hit_boundary: bool,
    pub broken_at: Option<BrokenPoint>,
    /// Sample index of the break point (first leg ends there).
    pub break_index: Option<usize>,
}

impl GeodesicPath {
    pub fn length(&self) -> f64 {
        self.speed
    }

    pub fn start_direction(&self) -> Point {
        self.tangents[0]
    }

    pub fn end_direction(&self) -> Point {
        *self.tangents.last().expect("non-empty path")
    }

    pub fn end_point(&self) -> Point {
        *self.samples.last().expect("non-empty path")
    }

    /// Sum of metric lengths of the chart segments between samples.
    pub fn polyline_length(&self, surface: &DiskSurface) -> f64 {
        self.samples.windows(2).map(|w| surface.segment_length(w[0], w[1])).sum()
    }

    /// Largest `|∇_T T|_g` over interior samples away from the break point.
    pub fn geodesic_residual(&self, surface: &DiskSurface) -> f64 {
        let n = self.samples.len();
        let mut worst: f64 = 0.0;
        for i in 1..n.saturating_sub(1) {
            if let Some(b) = self.break_index {
                if i + 1 >= b && i <= b + 2 {
                    continue;
                }
            }
            let ds = self.arclength[i + 1] - self.arclength[i - 1];
            if ds <= 0.0 {
                continue;
            }
            let d = (self.tangents[i + 1] - self.tangents[i - 1]) / ds;
            let acc = surface.covariant_acceleration(self.samples[i], self.tangents[i], d);
            worst = worst.max(surface.norm(self.samples[i], acc));
        }
        worst
    }

    /// Position and tangent at arclength `s` (cubic Hermite between samples).
    pub fn point_at(&self, s: f64) -> (Point, Point) {
        let n = self.samples.len();
        if n == 1 || s <= 0.0 {
            return (self.samples[0], self.tangents[0]);
        }
        let i = match self.arclength.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        hermite(
            self.samples[i],
            self.tangents[i],
            self.samples[i + 1],
            self.tangents[i + 1],
            self.arclength[i],
            self.arclength[i + 1],
            s,
        )
    }
}

fn hermite(p0: Point, t0: Point, p1: Point, t1: Point, s0: f64, s1: f64, s: f64) -> (Point, Point) {
    let h = s1 - s0;
    if h <= 0.0 {
        return (p1, t1);
    }
    let u = ((s - s0) / h).clamp(0.0, 1.0);
    let (u2, u3) = (u * u, u * u * u);
    let pos = p0 * (2.0 * u3 - 3.0 * u2 + 1.0) + t0 * (h * (u3 - 2.0 * u2 + u)) + p1 * (-2.0 * u3 + 3.0 * u2) + t1 * (h * (u3 - u2));
    let vel = p0 * ((6.0 * u2 - 6.0 * u) / h) + t0 * (3.0 * u2 - 4.0 * u + 1.0) + p1 * ((-6.0 * u2 + 6.0 * u) / h) + t1 * (3.0 * u2 - 2.0 * u);
    (pos, vel)
}

fn geodesic_rhs(surface: &DiskSurface) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |_, y| {
        let x = Point::new(y[0], y[1]);
        let v = Point::new(y[2], y[3]);
        let a = surface.christoffel(x).contract(v, v);
        [v.x, v.y, -a.x, -a.y]
    }
}

/// Raw RK4 integration of the geodesic equation with `n` uniform steps over
/// length `length`. With `clip`, integration stops at the first boundary
/// crossing, located to 1e-14 in the level function.
fn integrate(surface: &DiskSurface, p: Point, v: Point, length: f64, n: usize, clip: bool) -> Result<GeodesicPath> {
    let n = n.max(1);
    let h = length / n as f64;
    let mut samples = vec![p];
    let mut tangents = vec![v];
    let mut arclength = vec![0.0];
    let mut hit = false;
    if surface.is_flat() {
        let exit = if clip { surface.domain.ray_exit(p, v / v.norm()) / v.norm() } else { f64::INFINITY };
        let stop = length.min(exit);
        hit = clip && exit <= length;
        let m = ((stop / h).ceil() as usize).max(1);
        for k in 1..=m {
            let s = stop * k as f64 / m as f64;
            samples.push(p + v * s);
            tangents.push(v);
            arclength.push(s);
        }
    } else {
        let f = geodesic_rhs(surface);
        let mut y = [p.x, p.y, v.x, v.y];
        let mut s = 0.0;
        for _ in 0..n {
            let next = rk4_step(&f, s, &y, h);
            if clip && surface.domain.level(Point::new(next[0], next[1])) > 0.0 {
                let (mut lo, mut hi) = (0.0, h);
                let mut best = y;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let trial = rk4_step(&f, s, &y, mid);
                    let lv = surface.domain.level(Point::new(trial[0], trial[1]));
                    if lv > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        best = trial;
                        if lv > -1e-14 {
                            break;
                        }
                    }
                    if hi - lo < 1e-300 {
                        return Err(Error::Integration("step size underflow at boundary event".into()));
                    }
                }
                y = best;
                s += lo;
                hit = true;
                samples.push(Point::new(y[0], y[1]));
                tangents.push(Point::new(y[2], y[3]));
                arclength.push(s);
                break;
            }
            y = next;
            s += h;
            samples.push(Point::new(y[0], y[1]));
            tangents.push(Point::new(y[2], y[3]));
            arclength.push(s);
        }
    }
    let len = *arclength.last().unwrap();
    let end = *samples.last().unwrap();
    Ok(GeodesicPath {
        samples,
        tangents,
        arclength,
        speed: len,
        endpoints: (p, end),
        hit_boundary: hit,
        broken_at: None,
        break_index: None,
    })
}

fn steps_for(length: f64, per_unit: f64) -> usize {
    ((length * per_unit).ceil() as usize).max(64)
}

/// Shoots the geodesic from `p` with unit initial velocity `v` for metric
/// length `length`, stopping on the boundary.
pub fn geodesic_shoot(surface: &DiskSurface, p: Point, v: Point, length: f64) -> Result<GeodesicPath> {
    geodesic_shoot_steps(surface, p, v, length, steps_for(length, STEPS_PER_UNIT))
}

/// [`geodesic_shoot`] with an explicit number of RK4 steps.
pub fn geodesic_shoot_steps(surface: &DiskSurface, p: Point, v: Point, length: f64, steps: usize) -> Result<GeodesicPath> {
    surface.check_domain(p)?;
    let speed = surface.norm(p, v);
    if (speed - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("initial velocity has metric norm {speed}, expected 1")));
    }
    if !(length >= 0.0) {
        return Err(Error::Precondition(format!("negative length {length}")));
    }
    integrate(surface, p, v, length, steps, true)
}

/// `exp_p(w)` without clipping at the boundary; points slightly outside
/// the disk are allowed since the metric presets extend past it.
pub fn exponential(surface: &DiskSurface, p: Point, w: Point) -> Point {
    let r = surface.norm(p, w);
    if r == 0.0 {
        return p;
    }
    if surface.is_flat() {
        return p + w;
    }
    let steps = ((r * STEPS_PER_UNIT).ceil() as usize).max(8);
    match integrate(surface, p, w / r, r, steps, false) {
        Ok(path) => path.end_point(),
        Err(_) => p + w,
    }
}

/// Metric-orthonormal frame `(e1, e2)` at `p` with `e1` along the chart x-axis.
pub fn orthonormal_frame(surface: &DiskSurface, p: Point) -> (Point, Point) {
    let e = Point::new(1.0, 0.0);
    let e1 = e / surface.norm(p, e);
    (e1, surface.rotate(p, e1))
}

/// The geodesic joining `p` to `q`, by Newton shooting on the initial angle
/// and length. Fails if the geodesic leaves the domain or Newton stalls.
pub fn geodesic_between(surface: &DiskSurface, p: Point, q: Point) -> Result<GeodesicPath> {
    surface.check_domain(p)?;
    surface.check_domain(q)?;
    let chart = q - p;
    if chart.norm() < 1e-15 {
        return Ok(GeodesicPath {
            samples: vec![p],
            tangents: vec![orthonormal_frame(surface, p).0],
            arclength: vec![0.0],
            speed: 0.0,
            endpoints: (p, q),
            hit_boundary: false,
            broken_at: None,
            break_index: None,
        });
    }
    if surface.is_flat() {
        let len = chart.norm();
        return integrate(surface, p, chart / len, len, steps_for(len, STEPS_PER_UNIT), false);
    }
    let (e1, e2) = orthonormal_frame(surface, p);
    let v0 = chart / surface.norm(p, chart);
    let mut omega = surface.inner(p, v0, e2).atan2(surface.inner(p, v0, e1));
    let mut length = surface.segment_length(p, q);
    let shoot_end = |omega: f64, length: f64| -> Result<Point> {
        let v = e1 * omega.cos() + e2 * omega.sin();
        Ok(integrate(surface, p, v, length, steps_for(length, STEPS_PER_UNIT), false)?.end_point())
    };
    let scale = 1.0 + length;
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let r = shoot_end(omega, length)? - q;
        residual = r.norm();
        if residual < 1e-12 * scale {
            break;
        }
        let dw = 1e-7;
        let dl = 1e-7 * scale;
        let jw = (shoot_end(omega + dw, length)? - q - r) / dw;
        let jl = (shoot_end(omega, length + dl)? - q - r) / dl;
        let det = jw.x * jl.y - jw.y * jl.x;
        if det.abs() < 1e-300 {
            return Err(Error::numeric("singular shooting Jacobian", residual));
        }
        let d_omega = -(jl.y * r.x - jl.x * r.y) / det;
        let d_len = -(-jw.y * r.x + jw.x * r.y) / det;
        let damp = if d_len.abs() > 0.5 * length { 0.5 * length / d_len.abs() } else { 1.0 };
        omega += damp * d_omega;
        length = (length + damp * d_len).max(1e-12);
    }
    if residual >= 1e-9 * scale {
        return Err(Error::numeric("geodesic shooting did not converge", residual));
    }
    let v = e1 * omega.cos() + e2 * omega.sin();
    let mut path = integrate(surface, p, v, length, steps_for(length, STEPS_PER_UNIT), false)?;
    if path.samples.iter().any(|x| surface.domain.level(*x) > 1e-9) {
        return Err(Error::Geometry("connecting geodesic leaves the domain".into()));
    }
    *path.samples.last_mut().unwrap() = q;
    path.endpoints = (p, q);
    Ok(path)
}

/// Intrinsic distance between two points of the closed disk.
pub fn distance(surface: &DiskSurface, p: Point, q: Point) -> Result<f64> {
    surface.check_domain(p)?;
    surface.check_domain(q)?;
    if surface.is_flat() {
        return Ok((p - q).norm());
    }
    match geodesic_between(surface, p, q) {
        Ok(path) => Ok(path.length()),
        Err(Error::Domain(..)) => unreachable!("endpoints checked"),
        Err(_) => {
            let field = eikonal::solve(surface, p, eikonal::DEFAULT_GRID)?;
            Ok(field.value_at(surface, q))
        }
    }
}

/// `θ ↦ d(p, z(θ))` sampled on a uniform grid of boundary parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    pub origin: Point,
    pub values: Vec<f64>,
}

impl BoundaryProfile {
    /// Builds the profile from exact distances (flat metrics) or from a fan
    /// of geodesic rays shot from `p` to the boundary.
    pub fn new(surface: &DiskSurface, p: Point, samples: usize) -> Result<Self> {
        surface.check_domain(p)?;
        let m = samples.max(16);
        let values = if surface.is_flat() {
            (0..m).map(|i| (p - surface.domain.boundary_point(TAU * i as f64 / m as f64)).norm()).collect()
        } else {
            fan_profile(surface, p, m)?
        };
        Ok(Self { origin: p, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn param(&self, i: usize) -> f64 {
        TAU * i as f64 / self.values.len() as f64
    }

    /// Periodic cubic interpolation at parameter `theta`.
    pub fn value(&self, theta: f64) -> f64 {
        let m = self.values.len();
        let x = theta.rem_euclid(TAU) / TAU * m as f64;
        let i = x.floor() as isize;
        let t = x - i as f64;
        let at = |k: isize| self.values[k.rem_euclid(m as isize) as usize];
        let (y0, y1, y2, y3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Lagrange cubic through the four neighbours.
        y0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + y1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0)
            + y2 * (-(t + 1.0) * t * (t - 2.0) / 2.0)
            + y3 * ((t + 1.0) * t * (t - 1.0) / 6.0)
    }
}

fn fan_profile(surface: &DiskSurface, p: Point, m: usize) -> Result<Vec<f64>> {
    let (e1, e2) = orthonormal_frame(surface, p);
    let max_len = surface.constants().boundary_length;
    let on_boundary = surface.domain.level(p) > -1e-10;
    let (w0, w1) = if on_boundary {
        let theta = surface.domain.parameter_of(p);
        let n = surface.boundary_inward_normal(theta);
        let c = n.dot(&(surface.metric_unchecked(p) * e2)).atan2(n.dot(&(surface.metric_unchecked(p) * e1)));
        (c - 0.5 * TAU / 2.0 + 1e-9, c + 0.5 * TAU / 2.0 - 1e-9)
    } else {
        (0.0, TAU)
    };
    let ray = |w: f64| -> Result<Option<(f64, f64)>> {
        let v = e1 * w.cos() + e2 * w.sin();
        let path = integrate(surface, p, v, max_len, steps_for(max_len, FAN_STEPS_PER_UNIT), true)?;
        Ok(path.hit_boundary.then(|| (surface.domain.parameter_of(path.end_point()), path.length())))
    };
    let initial = 256usize;
    let mut rays: Vec<(f64, Option<(f64, f64)>)> = Vec::new();
    for k in 0..=initial {
        if !on_boundary && k == initial {
            break;
        }
        let w = w0 + (w1 - w0) * k as f64 / initial as f64;
        rays.push((w, ray(w)?));
    }
    // Refine directions whose boundary hits are far apart.
    let gap = 0.5 * TAU / m as f64;
    for _ in 0..10 {
        let mut inserted = Vec::new();
        let count = rays.len();
        let pairs = if on_boundary { count - 1 } else { count };
        for i in 0..pairs {
            let (wa, ha) = rays[i];
            let (wb, hb) = rays[(i + 1) % count];
            let wb = if wb < wa { wb + TAU } else { wb };
            if let (Some(a), Some(b)) = (ha, hb) {
                let d = (b.0 - a.0).rem_euclid(TAU).min((a.0 - b.0).rem_euclid(TAU));
                if d > gap {
                    inserted.push(0.5 * (wa + wb));
                }
            }
        }
        if inserted.is_empty() || rays.len() > 8192 {
            break;
        }
        for w in inserted {
            rays.push((w, ray(w)?));
        }
        rays.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let mut hits: Vec<(f64, f64)> = rays.iter().filter_map(|r| r.1).collect();
    if on_boundary {
        hits.push((surface.domain.parameter_of(p), 0.0));
    }
    if hits.len() < 8 {
        return Err(Error::numeric("boundary fan produced too few hits", hits.len() as f64));
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    hits.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-13);
    let k = hits.len();
    let mut out = Vec::with_capacity(m);
    let mut j = 0;
    for i in 0..m {
        let theta = TAU * i as f64 / m as f64;
        while j < k && hits[j].0 <= theta {
            j += 1;
        }
        // four neighbours around theta, periodic
        let idx = |o: isize| -> (f64, f64) {
            let r = (j as isize - 2 + o).rem_euclid(k as isize) as usize;
            let wraps = (j as isize - 2 + o).div_euclid(k as isize) as f64;
            (hits[r].0 + wraps * TAU, hits[r].1)
        };
        let pts = [idx(0), idx(1), idx(2), idx(3)];
        out.push(lagrange4(&pts, theta));
    }
    Ok(out)
}

fn lagrange4(pts: &[(f64, f64); 4], x: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                let d = pts[i].0 - pts[j].0;
                if d.abs() < 1e-15 {
                    continue;
                }
                w *= (x - pts[j].0) / d;
            }
        }
        total += w * pts[i].1;
    }
    total
}

/// How the argmin of a reflected distance is polished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refine {
    /// Golden-section search on the interpolated profiles.
    Interpolated,
    /// Golden-section search with exact point-to-boundary distances.
    Exact,
}

/// Value and minimiser of `d(p, z) + d(q, z)` over boundary points `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub value: f64,
    pub param: f64,
    pub point: Point,
    /// Parameter of a competing local minimum within 1e-6 relative, if any.
    pub near_tie: Option<f64>,
}

/// Reflected distance `min_z d(p, z) + d(q, z)`.
pub fn reflected_distance(surface: &DiskSurface, p: Point, q: Point) -> Result<Reflection> {
    let pp = BoundaryProfile::new(surface, p, BOUNDARY_SCAN)?;
    let qp = if p == q { pp.clone() } else { BoundaryProfile::new(surface, q, BOUNDARY_SCAN)? };
    reflected_from_profiles(surface, &pp, &qp, Refine::Exact)
}

/// Reflected distance from precomputed boundary profiles on a common grid.
pub fn reflected_from_profiles(surface: &DiskSurface, pp: &BoundaryProfile, qp: &BoundaryProfile, refine: Refine) -> Result<Reflection> {
    let m = pp.len();
    if qp.len() != m {
        return Err(Error::Precondition("boundary profiles on different grids".into()));
    }
    let sums: Vec<f64> = (0..m).map(|i| pp.values[i] + qp.values[i]).collect();
    let vmin = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let tie_tol = 1e-12 * (1.0 + vmin);
    // local minima of the scan, in increasing parameter order
    let minima: Vec<usize> = (0..m)
        .filter(|&i| sums[i] <= sums[(i + m - 1) % m] && sums[i] <= sums[(i + 1) % m])
        .collect();
    let h = TAU / m as f64;
    let objective = |theta: f64| -> f64 {
        match refine {
            Refine::Interpolated => pp.value(theta) + qp.value(theta),
            Refine::Exact => {
                let z = surface.domain.boundary_point(theta);
                let a = distance(surface, pp.origin, z).unwrap_or(f64::INFINITY);
                let b = if pp.origin == qp.origin { a } else { distance(surface, qp.origin, z).unwrap_or(f64::INFINITY) };
                a + b
            }
        }
    };
    let polish = |i: usize| -> (f64, f64) {
        let c = pp.param(i);
        if surface.is_flat() && refine == Refine::Interpolated {
            return golden_section(|t| {
                let z = surface.domain.boundary_point(t);
                (pp.origin - z).norm() + (qp.origin - z).norm()
            }, c - h, c + h, 1e-12);
        }
        golden_section(objective, c - h, c + h, 1e-10)
    };
    let mut candidates: Vec<(f64, f64)> = minima
        .iter()
        .filter(|&&i| sums[i] <= vmin + 1e-6 * (1.0 + vmin) + 4.0 * h * h * (1.0 + vmin))
        .map(|&i| {
            let (t, v) = polish(i);
            (t.rem_euclid(TAU), v)
        })
        .collect();
    if candidates.is_empty() {
        let i = (0..m).min_by(|&a, &b| sums[a].total_cmp(&sums[b])).unwrap();
        let (t, v) = polish(i);
        candidates.push((t.rem_euclid(TAU), v));
    }
    for c in candidates.iter_mut() {
        if c.0 > TAU - 1e-9 {
            c.0 = 0.0;
        }
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let mut within: Vec<(f64, f64)> = candidates.iter().cloned().filter(|c| c.1 <= best + tie_tol.max(1e-9 * (1.0 + best))).collect();
    within.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (param, value) = within[0];
    let near_tie = candidates
        .iter()
        .filter(|c| (c.0 - param).abs() > 2.0 * h && c.1 <= value + 1e-6 * (1.0 + value))
        .map(|c| c.0)
        .next();
    Ok(Reflection { value, param, point: surface.domain.boundary_point(param), near_tie })
}

/// The broken geodesic `p → z → q` through the reflection point.
pub fn reflected_path(surface: &DiskSurface, p: Point, q: Point, reflection: &Reflection) -> Result<GeodesicPath> {
    let z = reflection.point;
    let first = geodesic_between(surface, p, z)?;
    let second = geodesic_between(surface, z, q)?;
    let incoming = first.end_direction();
    let outgoing = second.start_direction();
    let mut tangent = surface.boundary_tangent(reflection.param);
    if surface.inner(z, tangent, incoming) < 0.0 {
        tangent = -tangent;
    }
    let normal = surface.boundary_inward_normal(reflection.param);
    let cos_in = surface.inner(z, tangent, incoming);
    let cos_out = surface.inner(z, tangent, outgoing);
    let sin0 = 0.5 * surface.inner(z, outgoing - incoming, normal);
    let theta0 = sin0.atan2(0.5 * (cos_in + cos_out));
    let offset = first.length();
    let break_index = first.samples.len() - 1;
    let mut samples = first.samples;
    let mut tangents = first.tangents;
    let mut arclength = first.arclength;
    samples.extend(second.samples.iter().skip(1));
    tangents.extend(second.tangents.iter().skip(1));
    arclength.extend(second.arclength.iter().skip(1).map(|s| s + offset));
    // keep the departing tangent at the break sample for Hermite interpolation
    let len = offset + second.speed;
    Ok(GeodesicPath {
        samples,
        tangents,
        arclength,
        speed: len,
        endpoints: (p, q),
        hit_boundary: true,
        broken_at: Some(BrokenPoint {
            point: z,
            param: reflection.param,
            boundary_tangent: tangent,
            inward_normal: normal,
            incoming,
            outgoing,
            cos_in,
            cos_out,
            theta0,
        }),
        break_index: Some(break_index),
    })
}

/// `d(p, ∂N)` and the boundary parameter realising it. The minimising
/// geodesic leaves `p` as a ray, so this minimises the first boundary hit
/// over initial directions.
pub fn distance_to_boundary(surface: &DiskSurface, p: Point) -> Result<(f64, f64)> {
    surface.check_domain(p)?;
    if surface.domain.level(p) >= 0.0 {
        return Ok((0.0, surface.domain.parameter_of(p)));
    }
    let (e1, e2) = orthonormal_frame(surface, p);
    let max_len = surface.constants().boundary_length;
    let hit = |w: f64| -> (f64, f64) {
        let v = e1 * w.cos() + e2 * w.sin();
        if surface.is_flat() {
            let t = surface.domain.ray_exit(p, v);
            return (t, surface.domain.parameter_of(p + v * t));
        }
        match integrate(surface, p, v, max_len, steps_for(max_len, FAN_STEPS_PER_UNIT), true) {
            Ok(path) if path.hit_boundary => (path.length(), surface.domain.parameter_of(path.end_point())),
            _ => (f64::INFINITY, 0.0),
        }
    };
    let m = 64;
    let h = TAU / m as f64;
    let best = (0..m).map(|k| (k as f64 * h, hit(k as f64 * h).0)).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let (w, _) = golden_section(|w| hit(w).0, best.0 - h, best.0 + h, 1e-10);
    let (d, theta) = hit(w);
    if !d.is_finite() {
        return Err(Error::numeric("no geodesic ray reached the boundary", d));
    }
    Ok((d, theta.rem_euclid(TAU)))
}

/// Completed distance between two points of the formal double of `chord`:
/// the intrinsic distance for points on the same copy, the reflected
/// distance otherwise.
pub fn completed_distance(surface: &DiskSurface, x: CompletedPoint, y: CompletedPoint, chord: &Chord) -> Result<f64> {
    let l = chord.length();
    let x = CompletedPoint::new(x.s, x.sign, l);
    let y = CompletedPoint::new(y.s, y.sign, l);
    let (p, q) = (chord.point(x.s), chord.point(y.s));
    if x.sign == y.sign {
        if x.s == y.s {
            return Ok(0.0);
        }
        distance(surface, p, q)
    } else {
        Ok(reflected_distance(surface, p, q)?.value)
    }
}

/// Parallel transport of `v0` along `path`; one vector per path sample.
pub fn parallel_transport(surface: &DiskSurface, path: &GeodesicPath, v0: Point) -> Vec<Point> {
    let mut out = vec![v0];
    if surface.is_flat() {
        out.resize(path.samples.len(), v0);
        return out;
    }
    let mut v = v0;
    for i in 0..path.samples.len() - 1 {
        let (s0, s1) = (path.arclength[i], path.arclength[i + 1]);
        if s1 - s0 > 0.0 {
            let seg = |s: f64| hermite(path.samples[i], path.tangents[i], path.samples[i + 1], path.tangents[i + 1], s0, s1, s);
            let f = |s: f64, y: &[f64; 2]| {
                let (x, t) = seg(s);
                let a = surface.christoffel(x).contract(t, Point::new(y[0], y[1]));
                [-a.x, -a.y]
            };
            let y = rk4_step(&f, s0, &[v.x, v.y], s1 - s0);
            v = Point::new(y[0], y[1]);
        }
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{ChartDomain, ConformalFactor};
    use approx::assert_abs_diff_eq;

    fn quad() -> DiskSurface {
        DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.1))
    }

    #[test]
    fn flat_shoot_examples() {
        let s = DiskSurface::flat_disk(1.0);
        let a = geodesic_shoot(&s, Point::zeros(), Point::new(1.0, 0.0), 0.5).unwrap();
        assert_abs_diff_eq!(a.end_point(), Point::new(0.5, 0.0), epsilon = 1e-15);
        assert!(!a.hit_boundary);
        let b = geodesic_shoot(&s, Point::new(0.9, 0.0), Point::new(1.0, 0.0), 0.5).unwrap();
        assert!(b.hit_boundary);
        assert_abs_diff_eq!(b.end_point(), Point::new(1.0, 0.0), epsilon = 1e-14);
        assert_abs_diff_eq!(b.length(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn curved_shoot_matches_refined_integration() {
        let s = quad();
        let v = Point::new(1.0, 0.0) / s.norm(Point::zeros(), Point::new(1.0, 0.0));
        let a = geodesic_shoot(&s, Point::zeros(), v, 0.5).unwrap();
        let n = a.samples.len() - 1;
        let r = geodesic_shoot_steps(&s, Point::zeros(), v, 0.5, 16 * n).unwrap();
        assert!((a.end_point() - r.end_point()).norm() < 1e-7);
        let rel = (a.polyline_length(&s) - a.length()).abs() / a.length();
        assert!(rel < 1e-8, "{rel}");
        assert!(a.geodesic_residual(&s) < 1e-6);
    }

    #[test]
    fn shoot_rejects_non_unit_velocity() {
        let s = DiskSurface::flat_disk(1.0);
        assert!(matches!(geodesic_shoot(&s, Point::zeros(), Point::new(2.0, 0.0), 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn flat_distances() {
        let s = DiskSurface::flat_disk(1.0);
        assert_abs_diff_eq!(distance(&s, Point::new(0.5, 0.0), Point::new(-0.5, 0.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(distance(&s, Point::new(0.9, 0.4), Point::new(0.9, -0.4)).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn curved_distance_agrees_with_eikonal() {
        let s = quad();
        let (p, q) = (Point::new(0.5, 0.0), Point::new(-0.2, 0.6));
        let d = distance(&s, p, q).unwrap();
        let f = eikonal::solve(&s, p, 513).unwrap();
        assert!((f.value_at(&s, q) - d).abs() < 1e-2);
        assert!(d < s.segment_length(p, q) + 1e-12);
    }

    #[test]
    fn reflected_distance_examples() {
        let s = DiskSurface::flat_disk(1.0);
        let r = reflected_distance(&s, Point::new(0.5, 0.0), Point::new(-0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.point, Point::new(1.0, 0.0), epsilon = 1e-5);
        assert!(r.near_tie.is_some());
        let c = reflected_distance(&s, Point::new(0.5, 0.0), Point::new(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.point, Point::new(1.0, 0.0), epsilon = 1e-5);
        let e = DiskSurface::flat_ellipse(2.0, 1.0);
        let r = reflected_distance(&e, Point::new(0.0, 0.5), Point::new(0.0, -0.5)).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.point, Point::new(0.0, 1.0), epsilon = 1e-5);
    }

    #[test]
    fn reflection_obeys_equal_angles() {
        for s in [DiskSurface::flat_disk(1.0), quad()] {
            let (p, q) = (Point::new(0.3, 0.2), Point::new(-0.1, 0.5));
            let r = reflected_distance(&s, p, q).unwrap();
            let path = reflected_path(&s, p, q, &r).unwrap();
            let b = path.broken_at.unwrap();
            assert!(b.reflection_defect() < 1e-6, "{}", b.reflection_defect());
            assert!(b.theta0 > 0.0 && b.theta0 < std::f64::consts::FRAC_PI_2 + 1e-9);
            assert_abs_diff_eq!(path.length(), r.value, epsilon = 1e-8);
        }
    }

    #[test]
    fn fan_profile_matches_exact_distances() {
        let s = quad();
        for p in [Point::new(0.2, -0.3), Point::new(0.6, 0.8)] {
            let prof = BoundaryProfile::new(&s, p, 256).unwrap();
            for i in [0, 40, 100, 200] {
                let z = s.domain.boundary_point(prof.param(i));
                let d = distance(&s, p, z).unwrap();
                assert!((prof.values[i] - d).abs() < 1e-6, "{p:?} {i} {} {d}", prof.values[i]);
            }
        }
    }

    #[test]
    fn transport_preserves_norm_and_inverts() {
        let s = quad();
        let path = geodesic_between(&s, Point::new(-0.4, 0.1), Point::new(0.5, 0.3)).unwrap();
        let v0 = Point::new(0.3, 0.8);
        let field = parallel_transport(&s, &path, v0);
        let n0 = s.norm(path.samples[0], v0);
        for (x, v) in path.samples.iter().zip(&field) {
            assert!((s.norm(*x, *v) - n0).abs() < 1e-8 * n0);
        }
        let back = geodesic_between(&s, Point::new(0.5, 0.3), Point::new(-0.4, 0.1)).unwrap();
        let w = *parallel_transport(&s, &back, *field.last().unwrap()).last().unwrap();
        assert!((w - v0).norm() < 1e-8);
    }

    #[test]
    fn holonomy_equals_enclosed_curvature() {
        let s = quad();
        let verts = [Point::new(-0.3, -0.2), Point::new(0.4, -0.1), Point::new(0.0, 0.5)];
        let mut v = Point::new(1.0, 0.0);
        let mut poly = Vec::new();
        for k in 0..3 {
            let path = geodesic_between(&s, verts[k], verts[(k + 1) % 3]).unwrap();
            v = *parallel_transport(&s, &path, v).last().unwrap();
            poly.extend(path.samples.iter().take(path.samples.len() - 1));
        }
        let p = verts[0];
        let v0 = Point::new(1.0, 0.0);
        let angle = s.inner(p, s.rotate(p, v0), v).atan2(s.inner(p, v0, v));
        assert_abs_diff_eq!(angle, s.curvature_integral(&poly), epsilon = 1e-4);
    }

    #[test]
    fn boundary_distance_examples() {
        let e = DiskSurface::flat_ellipse(2.0, 1.0);
        let (d, t) = distance_to_boundary(&e, Point::new(0.0, 0.5)).unwrap();
        assert!((d - 0.5).abs() < 1e-9 && (t - std::f64::consts::FRAC_PI_2).abs() < 1e-4, "{d} {t}");
        // radial symmetry: the distance is the radial integral of e^φ
        let s = quad();
        let (d, _) = distance_to_boundary(&s, Point::new(0.0, 0.0)).unwrap();
        let exact = crate::numerics::integrate(|r| (0.1 * r * r).exp(), 0.0, 1.0, 64);
        assert!((d - exact).abs() < 1e-7, "{d} {exact}");
    }

    #[test]
    fn completed_distance_examples() {
        let s = DiskSurface::flat_disk(1.0);
        let c = Chord::diameter(&s, 0.0, 64).unwrap();
        let p = |s, sign| CompletedPoint { s, sign };
        assert_abs_diff_eq!(completed_distance(&s, p(0.5, 1), p(1.5, 1), &c).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(completed_distance(&s, p(0.5, 1), p(0.5, -1), &c).unwrap(), 1.0, epsilon = 1e-10);
        assert_eq!(completed_distance(&s, p(0.8, -1), p(0.8, -1), &c).unwrap(), 0.0);
    }
}
