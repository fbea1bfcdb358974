//! Chords: embedded curves with both endpoints on the boundary.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{CubicSpline, GL4_NODES, GL4_WEIGHTS};
use crate::surface::DiskSurface;
use crate::types::{cross, Point};

pub const DEFAULT_SAMPLES: usize = 256;
/// Chart distance allowed between an endpoint and the boundary.
pub const ENDPOINT_TOL: f64 = 1e-8;
const MIN_SAMPLES: usize = 8;

/// An embedded chord sampled along its metric arclength.
///
/// The normal is fixed by `γ'/|γ'| = Jν`, `J` the metric rotation by +π/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Chord {
    samples: Vec<Point>,
    arclength: Vec<f64>,
    sx: CubicSpline,
    sy: CubicSpline,
}

/// Chart distance from `p` to the boundary, to first order.
pub fn boundary_gap(surface: &DiskSurface, p: Point) -> f64 {
    let (a, b) = surface.domain.semi_axes();
    let grad = Point::new(2.0 * p.x / (a * a), 2.0 * p.y / (b * b));
    surface.domain.level(p).abs() / grad.norm().max(1e-300)
}

impl Chord {
    /// Builds a chord through `points`, which must start and end on the
    /// boundary and stay strictly inside in between.
    pub fn from_points(surface: &DiskSurface, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        if n < MIN_SAMPLES {
            return Err(Error::Resolution(format!("{n} samples, need at least {MIN_SAMPLES}")));
        }
        for end in [points[0], points[n - 1]] {
            let gap = boundary_gap(surface, end);
            if gap > ENDPOINT_TOL || !end.x.is_finite() || !end.y.is_finite() {
                return Err(Error::Geometry(format!("endpoint ({}, {}) is {gap:e} off the boundary", end.x, end.y)));
            }
        }
        if let Some(p) = points[1..n - 1].iter().find(|p| !(surface.domain.level(**p) < 0.0)) {
            return Err(Error::Geometry(format!("interior sample ({}, {}) is not inside the disk", p.x, p.y)));
        }
        // First pass: polyline metric length as spline parameter.
        let mut t = Vec::with_capacity(n);
        t.push(0.0);
        for w in points.windows(2) {
            let d = surface.segment_length(w[0], w[1]);
            if !(d > 0.0) {
                return Err(Error::Degenerate("repeated consecutive samples".into()));
            }
            t.push(t.last().unwrap() + d);
        }
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        let px = CubicSpline::new(&t, &xs);
        let py = CubicSpline::new(&t, &ys);
        // Second pass: metric arclength of the spline.
        let mut s = Vec::with_capacity(n);
        s.push(0.0);
        for i in 0..n - 1 {
            let (a, b) = (t[i], t[i + 1]);
            let mut seg = 0.0;
            for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let u = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let (cx, dx, _) = px.eval_all(u);
                let (cy, dy, _) = py.eval_all(u);
                seg += w * surface.norm(Point::new(cx, cy), Point::new(dx, dy));
            }
            s.push(s[i] + 0.5 * (b - a) * seg);
        }
        let sx = CubicSpline::new(&s, &xs);
        let sy = CubicSpline::new(&s, &ys);
        Ok(Self { samples: points, arclength: s, sx, sy })
    }

    /// Samples `f` on `[0, 1]` and resamples to uniform arclength.
    pub fn from_fn(surface: &DiskSurface, f: impl Fn(f64) -> Point, n: usize) -> Result<Self> {
        let m = (4 * n).max(MIN_SAMPLES);
        let pts: Vec<Point> = (0..=m).map(|i| f(i as f64 / m as f64)).collect();
        Self::from_points(surface, pts)?.resample(surface, n)
    }

    /// The straight chart segment from `a` to `b`.
    pub fn segment(surface: &DiskSurface, a: Point, b: Point, n: usize) -> Result<Self> {
        Self::from_fn(surface, |t| a + (b - a) * t, n)
    }

    /// The chart line `{x·n = offset}`, `n` at angle `normal_angle`,
    /// oriented along `rot90(n)`.
    pub fn line(surface: &DiskSurface, normal_angle: f64, offset: f64, n: usize) -> Result<Self> {
        let (a, b) = surface
            .domain
            .line_chord(normal_angle, offset)
            .ok_or_else(|| Error::Degenerate(format!("line at offset {offset} misses the disk")))?;
        Self::segment(surface, a, b, n)
    }

    /// Chart diameter through the origin in direction `angle`.
    pub fn diameter(surface: &DiskSurface, angle: f64, n: usize) -> Result<Self> {
        Self::line(surface, angle + std::f64::consts::FRAC_PI_2, 0.0, n)
    }

    /// Arc of the Euclidean circle of radius `r` meeting a round chart disk
    /// orthogonally, centred on the ray at angle `angle`. Short arcs of this
    /// kind hug the boundary point at that angle.
    pub fn orthogonal_arc(surface: &DiskSurface, angle: f64, r: f64, n: usize) -> Result<Self> {
        let radius = match surface.domain {
            crate::surface::ChartDomain::Disk { radius } => radius,
            _ => return Err(Error::Precondition("orthogonal arcs need a round chart disk".into())),
        };
        if !(r > 0.0) {
            return Err(Error::Precondition(format!("arc radius {r} must be positive")));
        }
        let c = (radius * radius + r * r).sqrt();
        let half = (radius / r).atan();
        let (sa, ca) = angle.sin_cos();
        Self::from_fn(
            surface,
            |u| {
                let a = angle + std::f64::consts::PI - half + 2.0 * half * u;
                Point::new(c * ca + r * a.cos(), c * sa + r * a.sin())
            },
            n,
        )
    }

    /// `y = amplitude · sin(π x / a)` across the chart's x-axis, `a` the
    /// x semi-axis. Symmetric under the half turn about the origin.
    pub fn s_curve(surface: &DiskSurface, amplitude: f64, n: usize) -> Result<Self> {
        let (a, _) = surface.domain.semi_axes();
        Self::from_fn(
            surface,
            |u| {
                let x = a * (2.0 * u - 1.0);
                Point::new(x, amplitude * (std::f64::consts::PI * x / a).sin())
            },
            n,
        )
    }

    /// Resamples to `n + 1` points uniformly spaced in arclength.
    pub fn resample(&self, surface: &DiskSurface, n: usize) -> Result<Self> {
        let l = self.length();
        let pts: Vec<Point> = (0..=n)
            .map(|k| if k == 0 { self.samples[0] } else if k == n { *self.samples.last().unwrap() } else { self.point(l * k as f64 / n as f64) })
            .collect();
        Self::from_points(surface, pts)
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Metric length `L`.
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    pub fn endpoints(&self) -> (Point, Point) {
        (self.samples[0], *self.samples.last().unwrap())
    }

    pub fn point(&self, s: f64) -> Point {
        Point::new(self.sx.eval(s), self.sy.eval(s))
    }

    /// Chart position, velocity and acceleration at arclength `s`.
    pub fn derivatives(&self, s: f64) -> (Point, Point, Point) {
        let (x, dx, ddx) = self.sx.eval_all(s);
        let (y, dy, ddy) = self.sy.eval_all(s);
        (Point::new(x, y), Point::new(dx, dy), Point::new(ddx, ddy))
    }

    /// Unit metric tangent at `s`.
    pub fn tangent(&self, surface: &DiskSurface, s: f64) -> Result<Point> {
        let (c, d, _) = self.derivatives(s);
        let speed = surface.norm(c, d);
        if !(speed > 1e-14) {
            return Err(Error::Geometry(format!("degenerate tangent at s = {s}")));
        }
        Ok(d / speed)
    }

    /// Unit normal `ν = −J T`.
    pub fn normal(&self, surface: &DiskSurface, s: f64) -> Result<Point> {
        let t = self.tangent(surface, s)?;
        Ok(-surface.rotate(self.point(s), t))
    }

    /// Geodesic curvature `κ = ⟨∇_T T, ν⟩` at `s`.
    pub fn curvature(&self, surface: &DiskSurface, s: f64) -> Result<f64> {
        if self.len() < MIN_SAMPLES {
            return Err(Error::Resolution("too few samples for curvature".into()));
        }
        let (c, d, dd) = self.derivatives(s);
        let speed = surface.norm(c, d);
        if !(speed > 1e-14) {
            return Err(Error::Geometry(format!("degenerate tangent at s = {s}")));
        }
        let acc = surface.covariant_acceleration(c, d, dd);
        let nu = -surface.rotate(c, d / speed);
        Ok(surface.inner(c, acc, nu) / (speed * speed))
    }

    /// Curvature at every sample.
    pub fn curvatures(&self, surface: &DiskSurface) -> Result<Vec<f64>> {
        self.arclength.iter().map(|&s| self.curvature(surface, s)).collect()
    }

    /// `∫ κ² ds` by Gauss–Legendre on every sample interval.
    pub fn squared_curvature_integral(&self, surface: &DiskSurface) -> Result<f64> {
        self.curvature_integral_between(surface, 0.0, self.length(), |k| k * k)
    }

    /// `∫_a^b g(κ) ds` with Gauss–Legendre on the sample intervals.
    pub fn curvature_integral_between(&self, surface: &DiskSurface, a: f64, b: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mut total = 0.0;
        for w in self.arclength.windows(2) {
            let (lo, hi) = (w[0].max(a), w[1].min(b));
            if hi <= lo {
                continue;
            }
            for (x, wt) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                total += 0.5 * (hi - lo) * wt * g(self.curvature(surface, s)?);
            }
        }
        Ok(total)
    }

    /// Signed endpoint defects `⟨T, τ⟩` with `τ` the unit boundary tangent
    /// (counterclockwise). Both vanish exactly when the chord meets the
    /// boundary orthogonally. The endpoint tangent is the one-sided
    /// three-point difference on the samples.
    pub fn endpoint_sines(&self, surface: &DiskSurface) -> Result<(f64, f64)> {
        let n = self.samples.len();
        let p = &self.samples;
        let left = endpoint_sine(surface, p[0], p[1], p[2])?;
        let right = endpoint_sine(surface, p[n - 1], p[n - 2], p[n - 3])?;
        Ok((left, right))
    }

    /// Angles between the chord and the boundary normal line at each endpoint.
    pub fn orthogonality_defect(&self, surface: &DiskSurface) -> Result<(f64, f64)> {
        let (a, b) = self.endpoint_sines(surface)?;
        Ok((a.abs().asin(), b.abs().asin()))
    }

    /// First pair of non-adjacent polyline segments that cross, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let p = &self.samples;
        let n = p.len();
        let boxes: Vec<(Point, Point)> = (0..n - 1)
            .map(|i| (Point::new(p[i].x.min(p[i + 1].x), p[i].y.min(p[i + 1].y)), Point::new(p[i].x.max(p[i + 1].x), p[i].y.max(p[i + 1].y))))
            .collect();
        for i in 0..n - 1 {
            for j in i + 2..n - 1 {
                let (a, b) = (boxes[i], boxes[j]);
                if a.1.x < b.0.x || b.1.x < a.0.x || a.1.y < b.0.y || b.1.y < a.0.y {
                    continue;
                }
                if segments_cross(p[i], p[i + 1], p[j], p[j + 1]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_embedded(&self) -> bool {
        self.self_intersection().is_none()
    }

    pub fn reversed(&self, surface: &DiskSurface) -> Result<Self> {
        let mut pts = self.samples.clone();
        pts.reverse();
        Self::from_points(surface, pts)
    }

    /// CSV rows `s,u1,u2` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,u1,u2\n");
        for (s, p) in self.arclength.iter().zip(&self.samples) {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", s, p.x, p.y);
        }
        out
    }

    pub fn from_csv(surface: &DiskSurface, text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with('s')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Config(format!("line {}: expected 3 fields", k + 1)));
            }
            let parse = |f: &str| f.trim().parse::<f64>().map_err(|e| Error::Config(format!("line {}: {e}", k + 1)));
            pts.push(Point::new(parse(fields[1])?, parse(fields[2])?));
        }
        Self::from_points(surface, pts)
    }
}

/// One-sided three-point derivative at `x0` from samples `x0, x1, x2`
/// spaced by their metric segment lengths. Points into the curve.
pub fn endpoint_derivative(surface: &DiskSurface, x0: Point, x1: Point, x2: Point) -> Point {
    let h1 = surface.segment_length(x0, x1);
    let h2 = surface.segment_length(x1, x2);
    let a0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
    let a1 = (h1 + h2) / (h1 * h2);
    let a2 = -h1 / (h2 * (h1 + h2));
    x0 * a0 + x1 * a1 + x2 * a2
}

/// `⟨T, τ⟩_g` at a boundary point `x0` with the tangent from
/// [`endpoint_derivative`].
pub fn endpoint_sine(surface: &DiskSurface, x0: Point, x1: Point, x2: Point) -> Result<f64> {
    let d = endpoint_derivative(surface, x0, x1, x2);
    let speed = surface.norm(x0, d);
    if !(speed > 1e-14) {
        return Err(Error::Geometry("degenerate endpoint tangent".into()));
    }
    let tau = surface.boundary_tangent(surface.domain.parameter_of(x0));
    Ok((surface.inner(x0, d, tau) / speed).clamp(-1.0, 1.0))
}

pub(crate) fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        cross(q - p, r - p) == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

/// A point of the formal double: arclength and copy label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletedPoint {
    pub s: f64,
    pub sign: i8,
}

impl CompletedPoint {
    /// Endpoints are identified across the two copies and stored with sign +1.
    pub fn new(s: f64, sign: i8, length: f64) -> Self {
        let sign = if s <= 0.0 || s >= length { 1 } else if sign < 0 { -1 } else { 1 };
        Self { s: s.clamp(0.0, length), sign }
    }
}

/// Completed arclength on the formal double of a chord of length `length`.
pub fn completed_arclength_for(length: f64, x: CompletedPoint, y: CompletedPoint) -> f64 {
    let x = CompletedPoint::new(x.s, x.sign, length);
    let y = CompletedPoint::new(y.s, y.sign, length);
    if x.sign == y.sign {
        (x.s - y.s).abs()
    } else {
        (x.s + y.s).min(2.0 * length - x.s - y.s)
    }
}

pub fn completed_arclength(chord: &Chord, x: CompletedPoint, y: CompletedPoint) -> f64 {
    completed_arclength_for(chord.length(), x, y)
}

/// Arclength from `s` to the nearer endpoint.
pub fn nearer_endpoint_arclength(chord: &Chord, s: f64) -> f64 {
    s.min(chord.length() - s)
}
