//! Riemannian disks on a single planar chart.
//!
//! A [`DiskSurface`] couples a convex chart domain (a disk or an ellipse)
//! with a metric: flat, conformal `e^{2φ}δ`, or a general symmetric tensor
//! field. All pointwise geometry (Christoffel symbols, Gaussian curvature,
//! boundary geodesic curvature) is computed here, together with the
//! conservative global constants used by the noncollapsing checks.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_triangle, GL4_NODES, GL4_WEIGHTS};
use crate::types::{Point, Tensor};

/// Inflation factor applied to sampled suprema.
pub const SUP_INFLATION: f64 = 1.05;

/// Closed convex chart region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartDomain {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
}

impl ChartDomain {
    pub fn semi_axes(&self) -> (f64, f64) {
        match *self {
            ChartDomain::Disk { radius } => (radius, radius),
            ChartDomain::Ellipse { a, b } => (a, b),
        }
    }

    /// Negative inside, zero on the boundary.
    pub fn level(&self, p: Point) -> f64 {
        let (a, b) = self.semi_axes();
        (p.x / a).powi(2) + (p.y / b).powi(2) - 1.0
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.level(p) <= tol
    }

    /// Boundary point at parameter `theta` (counterclockwise).
    pub fn boundary_point(&self, theta: f64) -> Point {
        let (a, b) = self.semi_axes();
        Point::new(a * theta.cos(), b * theta.sin())
    }

    /// First and second derivative of the boundary parametrisation.
    pub fn boundary_derivatives(&self, theta: f64) -> (Point, Point) {
        let (a, b) = self.semi_axes();
        let (s, c) = theta.sin_cos();
        (Point::new(-a * s, b * c), Point::new(-a * c, -b * s))
    }

    /// Parameter of the boundary point closest in angle to `p`.
    pub fn parameter_of(&self, p: Point) -> f64 {
        let (a, b) = self.semi_axes();
        (p.y / b).atan2(p.x / a).rem_euclid(TAU)
    }

    /// Radial projection onto the boundary in the normalised chart.
    pub fn project(&self, p: Point) -> Point {
        self.boundary_point(self.parameter_of(p))
    }

    /// Euclidean outward normal (unit) at parameter `theta`.
    pub fn outward_normal(&self, theta: f64) -> Point {
        let (a, b) = self.semi_axes();
        let n = Point::new(theta.cos() / a, theta.sin() / b);
        n / n.norm()
    }

    /// Largest `t >= 0` with `p + t dir` in the closed domain (`p` inside).
    pub fn ray_exit(&self, p: Point, dir: Point) -> f64 {
        let (a, b) = self.semi_axes();
        let qa = (dir.x / a).powi(2) + (dir.y / b).powi(2);
        let qb = 2.0 * (p.x * dir.x / (a * a) + p.y * dir.y / (b * b));
        let qc = self.level(p);
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
        (-qb + disc.sqrt()) / (2.0 * qa)
    }

    /// Endpoints of the chord cut by the line `{x : x·n = offset}` with unit
    /// normal at angle `normal_angle`, ordered along `rot90(n)`.
    pub fn line_chord(&self, normal_angle: f64, offset: f64) -> Option<(Point, Point)> {
        let n = Point::new(normal_angle.cos(), normal_angle.sin());
        let dir = Point::new(-n.y, n.x);
        // the point of the line deepest inside the domain
        let (a, b) = self.semi_axes();
        let foot = n * offset;
        let qa = (dir.x / a).powi(2) + (dir.y / b).powi(2);
        let qb = 2.0 * (foot.x * dir.x / (a * a) + foot.y * dir.y / (b * b));
        let base = foot - dir * (qb / (2.0 * qa));
        if self.level(base) >= 0.0 {
            return None;
        }
        let fwd = self.ray_exit(base, dir);
        let back = self.ray_exit(base, -dir);
        Some((base - dir * back, base + dir * fwd))
    }

    /// Support function `max_{x in domain} x·n` for unit `n`.
    pub fn support(&self, normal_angle: f64) -> f64 {
        let (a, b) = self.semi_axes();
        ((a * normal_angle.cos()).powi(2) + (b * normal_angle.sin()).powi(2)).sqrt()
    }
}

/// Analytic conformal factors `φ` with value, gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactor {
    /// `cx (x-x0)^2 + cy (y-y0)^2`.
    Quadratic { cx: f64, cy: f64, center: Point },
    /// `ln(2 / (1 + |u|^2))`: the round unit sphere under stereographic projection.
    SphericalCap,
    /// `amplitude · χ(|u|) · |u - center|^2` with a C² cutoff `χ` equal to one
    /// on `|u| <= r_in` and vanishing for `|u| >= r_out`.
    CutoffQuadratic { amplitude: f64, center: Point, r_in: f64, r_out: f64 },
    /// `(m/2) ρ² χ(|ρ|)` with `ρ = ⟨u − origin, normal⟩` the signed distance
    /// to a chart line and `χ` the C² cutoff equal to one on `|ρ| <= width/2`
    /// and vanishing for `|ρ| >= width`. Its gradient vanishes on the line.
    Tube { amplitude: f64, width: f64, origin: Point, normal: Point },
    Sum(Vec<ConformalFactor>),
}

impl ConformalFactor {
    pub fn isotropic(c: f64) -> Self {
        ConformalFactor::Quadratic { cx: c, cy: c, center: Point::zeros() }
    }

    /// `(φ, ∇φ, ∇²φ)` at `p`.
    pub fn jet(&self, p: Point) -> (f64, Point, Tensor) {
        match self {
            ConformalFactor::Quadratic { cx, cy, center } => {
                let d = p - center;
                (
                    cx * d.x * d.x + cy * d.y * d.y,
                    Point::new(2.0 * cx * d.x, 2.0 * cy * d.y),
                    Tensor::new(2.0 * cx, 0.0, 0.0, 2.0 * cy),
                )
            }
            ConformalFactor::SphericalCap => {
                let r2 = p.norm_squared();
                let q = 1.0 + r2;
                let grad = -2.0 * p / q;
                let h = Tensor::new(
                    -2.0 / q + 4.0 * p.x * p.x / (q * q),
                    4.0 * p.x * p.y / (q * q),
                    4.0 * p.x * p.y / (q * q),
                    -2.0 / q + 4.0 * p.y * p.y / (q * q),
                );
                ((2.0 / q).ln(), grad, h)
            }
            ConformalFactor::CutoffQuadratic { amplitude, center, r_in, r_out } => {
                let d = p - center;
                let q = d.norm_squared();
                let gq = 2.0 * d;
                let hq = Tensor::identity() * 2.0;
                let r = p.norm();
                let (chi, dchi, ddchi) = smooth_cutoff(r, *r_in, *r_out);
                let (gchi, hchi) = if dchi == 0.0 && ddchi == 0.0 || r == 0.0 {
                    (Point::zeros(), Tensor::zeros())
                } else {
                    let e = p / r;
                    let ee = e * e.transpose();
                    (e * dchi, ee * ddchi + (Tensor::identity() - ee) * (dchi / r))
                };
                let val = chi * q;
                let grad = gchi * q + gq * chi;
                let hess = hchi * q + gchi * gq.transpose() + gq * gchi.transpose() + hq * chi;
                (amplitude * val, grad * *amplitude, hess * *amplitude)
            }
            ConformalFactor::Tube { amplitude, width, origin, normal } => {
                let m = *amplitude;
                let rho = (p - origin).dot(normal);
                let r = rho.abs();
                let (chi, dchi, ddchi) = smooth_cutoff(r, 0.5 * width, *width);
                let u = 0.5 * m * rho * rho * chi;
                let du = m * rho * chi + 0.5 * m * rho * r * dchi;
                let ddu = m * chi + 2.0 * m * r * dchi + 0.5 * m * rho * rho * ddchi;
                (u, normal * du, normal * normal.transpose() * ddu)
            }
            ConformalFactor::Sum(parts) => parts.iter().fold((0.0, Point::zeros(), Tensor::zeros()), |acc, f| {
                let (v, g, h) = f.jet(p);
                (acc.0 + v, acc.1 + g, acc.2 + h)
            }),
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        self.jet(p).0
    }
}

/// Quintic smoothstep cutoff: 1 below `r_in`, 0 above `r_out`, C² in between.
/// Returns `(χ, χ', χ'')`.
fn smooth_cutoff(r: f64, r_in: f64, r_out: f64) -> (f64, f64, f64) {
    if r <= r_in {
        return (1.0, 0.0, 0.0);
    }
    if r >= r_out {
        return (0.0, 0.0, 0.0);
    }
    let w = r_out - r_in;
    let x = (r - r_in) / w;
    let s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (1.0 - s, -ds / w, -dds / (w * w))
}

/// A general symmetric metric tensor field on the chart.
#[derive(Clone)]
pub struct MetricField {
    pub name: String,
    field: Arc<dyn Fn(Point) -> Tensor + Send + Sync>,
}

impl MetricField {
    pub fn new(name: impl Into<String>, field: impl Fn(Point) -> Tensor + Send + Sync + 'static) -> Self {
        Self { name: name.into(), field: Arc::new(field) }
    }

    pub fn at(&self, p: Point) -> Tensor {
        (self.field)(p)
    }
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum Metric {
    Flat,
    Conformal(ConformalFactor),
    General(MetricField),
}

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    pub fn zero() -> Self {
        Self { gamma: [[[0.0; 2]; 2]; 2] }
    }

    /// `Γ^k_ij v^i w^j`.
    pub fn contract(&self, v: Point, w: Point) -> Point {
        let mut out = Point::zeros();
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += self.gamma[k][i][j] * v[i] * w[j];
                }
            }
            out[k] = s;
        }
        out
    }
}

/// Grid sizes for the sampled global constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceNumerics {
    pub sup_grid: usize,
    pub boundary_samples: usize,
}

impl Default for SurfaceNumerics {
    fn default() -> Self {
        Self { sup_grid: 256, boundary_samples: 4096 }
    }
}

/// Conservative global constants of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConstants {
    /// `sup |K|`, inflated.
    pub k0: f64,
    /// `sup κ^∂N`, inflated.
    pub boundary_curvature_sup: f64,
    /// Isoperimetric constant `C'` with `C'|A| <= |∂A|^2`.
    pub isoperimetric: f64,
    /// Length scale below which the isoperimetric inequality is asserted.
    pub isoperimetric_length: f64,
    /// Metric length of the boundary.
    pub boundary_length: f64,
}

/// A Riemannian 2-disk on a planar chart.
#[derive(Debug, Clone)]
pub struct DiskSurface {
    pub domain: ChartDomain,
    pub metric: Metric,
    numerics: SurfaceNumerics,
    // cumulative boundary arclength at theta_i = 2π i / n
    boundary_table: Arc<Vec<f64>>,
    constants: SurfaceConstants,
}

/// Record produced when a deformation leaves the boundary non-convex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityWarning {
    pub min_boundary_curvature: f64,
    pub at_parameter: f64,
}

const DOMAIN_TOL: f64 = 1e-9;

impl DiskSurface {
    pub fn new(domain: ChartDomain, metric: Metric) -> Self {
        Self::with_numerics(domain, metric, SurfaceNumerics::default())
    }

    pub fn with_numerics(domain: ChartDomain, metric: Metric, numerics: SurfaceNumerics) -> Self {
        let mut s = Self {
            domain,
            metric,
            numerics,
            boundary_table: Arc::new(Vec::new()),
            constants: SurfaceConstants {
                k0: 0.0,
                boundary_curvature_sup: 0.0,
                isoperimetric: 4.0 * PI,
                isoperimetric_length: f64::INFINITY,
                boundary_length: 0.0,
            },
        };
        s.boundary_table = Arc::new(s.build_boundary_table());
        s.constants = s.compute_constants();
        s
    }

    pub fn flat_disk(radius: f64) -> Self {
        Self::new(ChartDomain::Disk { radius }, Metric::Flat)
    }

    pub fn flat_ellipse(a: f64, b: f64) -> Self {
        Self::new(ChartDomain::Ellipse { a, b }, Metric::Flat)
    }

    pub fn conformal(domain: ChartDomain, phi: ConformalFactor) -> Self {
        Self::new(domain, Metric::Conformal(phi))
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.metric, Metric::Flat)
    }

    pub fn numerics(&self) -> SurfaceNumerics {
        self.numerics
    }

    pub fn constants(&self) -> SurfaceConstants {
        self.constants
    }

    pub fn check_domain(&self, p: Point) -> Result<()> {
        if self.domain.contains(p, DOMAIN_TOL) && p.x.is_finite() && p.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(p.x, p.y))
        }
    }

    /// Metric tensor `g_ij(p)`.
    pub fn metric_at(&self, p: Point) -> Result<Tensor> {
        self.check_domain(p)?;
        Ok(self.metric_unchecked(p))
    }

    /// Metric tensor without the domain check; the metric presets are
    /// defined on the whole plane.
    pub fn metric_unchecked(&self, p: Point) -> Tensor {
        match &self.metric {
            Metric::Flat => Tensor::identity(),
            Metric::Conformal(phi) => Tensor::identity() * (2.0 * phi.value(p)).exp(),
            Metric::General(field) => field.at(p),
        }
    }

    pub fn inner(&self, p: Point, v: Point, w: Point) -> f64 {
        match &self.metric {
            Metric::Flat => v.dot(&w),
            _ => v.dot(&(self.metric_unchecked(p) * w)),
        }
    }

    pub fn norm(&self, p: Point, v: Point) -> f64 {
        self.inner(p, v, v).max(0.0).sqrt()
    }

    /// Metric rotation by +π/2: `J v = R g v / sqrt(det g)`.
    pub fn rotate(&self, p: Point, v: Point) -> Point {
        match &self.metric {
            Metric::Flat => Point::new(-v.y, v.x),
            _ => {
                let g = self.metric_unchecked(p);
                let gv = g * v;
                Point::new(-gv.y, gv.x) / g.determinant().sqrt()
            }
        }
    }

    /// Metric length of the chart segment `[p, q]` (4-point Gauss rule).
    pub fn segment_length(&self, p: Point, q: Point) -> f64 {
        let d = q - p;
        if self.is_flat() {
            return d.norm();
        }
        let mut total = 0.0;
        for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            let m = p + d * (0.5 * (x + 1.0));
            total += w * self.norm(m, d);
        }
        0.5 * total
    }

    pub fn christoffel(&self, p: Point) -> Christoffel {
        match &self.metric {
            Metric::Flat => Christoffel::zero(),
            Metric::Conformal(phi) => {
                let (_, g, _) = phi.jet(p);
                let mut out = Christoffel::zero();
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let dik = if i == k { 1.0 } else { 0.0 };
                            let djk = if j == k { 1.0 } else { 0.0 };
                            let dij = if i == j { 1.0 } else { 0.0 };
                            out.gamma[k][i][j] = dik * g[j] + djk * g[i] - dij * g[k];
                        }
                    }
                }
                out
            }
            Metric::General(field) => {
                let (_, dx, dy) = metric_first_partials(field, p);
                let ginv = field.at(p).try_inverse().unwrap_or_else(Tensor::identity);
                let dg = [dx, dy];
                let mut out = Christoffel::zero();
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut s = 0.0;
                            for l in 0..2 {
                                s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                            }
                            out.gamma[k][i][j] = 0.5 * s;
                        }
                    }
                }
                out
            }
        }
    }

    /// Covariant acceleration `c'' + Γ(c', c')` of a chart curve.
    pub fn covariant_acceleration(&self, p: Point, vel: Point, acc: Point) -> Point {
        match &self.metric {
            Metric::Flat => acc,
            _ => acc + self.christoffel(p).contract(vel, vel),
        }
    }

    /// Gaussian curvature at `p`.
    pub fn gaussian_curvature(&self, p: Point) -> Result<f64> {
        self.check_domain(p)?;
        let k = self.gaussian_curvature_unchecked(p);
        if let Metric::General(field) = &self.metric {
            let g = field.at(p);
            if !(g.determinant() > 0.0 && g[(0, 0)] > 0.0) {
                return Err(Error::Geometry(format!("metric not positive definite at ({}, {})", p.x, p.y)));
            }
        }
        Ok(k)
    }

    pub fn gaussian_curvature_unchecked(&self, p: Point) -> f64 {
        match &self.metric {
            Metric::Flat => 0.0,
            Metric::Conformal(phi) => {
                let (v, _, h) = phi.jet(p);
                -(-2.0 * v).exp() * (h[(0, 0)] + h[(1, 1)])
            }
            Metric::General(field) => brioschi_curvature(&metric_jet(field, p)),
        }
    }

    /// Geodesic curvature of the boundary at parameter `theta`, with respect
    /// to the inward normal.
    pub fn boundary_curvature_at_param(&self, theta: f64) -> f64 {
        let p = self.domain.boundary_point(theta);
        let (d1, d2) = self.domain.boundary_derivatives(theta);
        let acc = self.covariant_acceleration(p, d1, d2);
        let speed = self.norm(p, d1);
        self.inner(p, acc, self.rotate(p, d1)) / speed.powi(3)
    }

    /// Geodesic curvature of the boundary at metric arclength `s`.
    pub fn boundary_geodesic_curvature(&self, s: f64) -> Result<f64> {
        let total = self.constants.boundary_length;
        if !(0.0..total + 1e-12).contains(&s) {
            return Err(Error::Domain(s, 0.0));
        }
        Ok(self.boundary_curvature_at_param(self.boundary_param_at_arclength(s)))
    }

    /// Metric unit inward normal of the boundary at parameter `theta`.
    pub fn boundary_inward_normal(&self, theta: f64) -> Point {
        let p = self.domain.boundary_point(theta);
        let (d1, _) = self.domain.boundary_derivatives(theta);
        let n = self.rotate(p, d1);
        n / self.norm(p, n)
    }

    /// Metric unit tangent of the boundary (counterclockwise) at `theta`.
    pub fn boundary_tangent(&self, theta: f64) -> Point {
        let p = self.domain.boundary_point(theta);
        let (d1, _) = self.domain.boundary_derivatives(theta);
        d1 / self.norm(p, d1)
    }

    pub fn boundary_speed(&self, theta: f64) -> f64 {
        let p = self.domain.boundary_point(theta);
        let (d1, _) = self.domain.boundary_derivatives(theta);
        self.norm(p, d1)
    }

    fn build_boundary_table(&self) -> Vec<f64> {
        let n = self.numerics.boundary_samples.max(64);
        let h = TAU / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..n {
            let t0 = i as f64 * h;
            acc += integrate(|t| self.boundary_speed(t), t0, t0 + h, 1);
            table.push(acc);
        }
        table
    }

    /// Metric arclength of the boundary from parameter 0 to `theta`.
    pub fn boundary_arclength_at_param(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        let n = self.boundary_table.len() - 1;
        let h = TAU / n as f64;
        let i = ((theta / h) as usize).min(n - 1);
        let t0 = i as f64 * h;
        self.boundary_table[i] + integrate(|t| self.boundary_speed(t), t0, theta, 1)
    }

    /// Inverse of [`Self::boundary_arclength_at_param`].
    pub fn boundary_param_at_arclength(&self, s: f64) -> f64 {
        let total = self.constants.boundary_length.max(self.boundary_table[self.boundary_table.len() - 1]);
        let s = s.rem_euclid(total);
        let n = self.boundary_table.len() - 1;
        let h = TAU / n as f64;
        let i = match self.boundary_table.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let mut theta = i as f64 * h + h * (s - self.boundary_table[i]) / (self.boundary_table[i + 1] - self.boundary_table[i]);
        for _ in 0..4 {
            let f = self.boundary_arclength_at_param(theta) - s;
            theta -= f / self.boundary_speed(theta);
        }
        theta
    }

    /// Integral of the boundary geodesic curvature over parameters `[t0, t1]`
    /// (counterclockwise, `t1 >= t0`).
    pub fn boundary_turning_between(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let panels = (((t1 - t0) / TAU) * 1024.0).ceil().max(4.0) as usize;
        integrate(|t| self.boundary_curvature_at_param(t) * self.boundary_speed(t), t0, t1, panels)
    }

    /// Interior chart grid points on an `n x n` lattice over the bounding box.
    pub fn interior_grid(&self, n: usize) -> Vec<Point> {
        let (a, b) = self.domain.semi_axes();
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let x = -a + 2.0 * a * (i as f64 + 0.5) / n as f64;
                let y = -b + 2.0 * b * (j as f64 + 0.5) / n as f64;
                let p = Point::new(x, y);
                if self.domain.level(p) < 0.0 {
                    pts.push(p);
                }
            }
        }
        pts
    }

    fn compute_constants(&self) -> SurfaceConstants {
        let boundary_length = *self.boundary_table.last().unwrap_or(&0.0);
        let grid = self.interior_grid(self.numerics.sup_grid);
        let nb = self.numerics.boundary_samples;
        let kmax = grid.iter().map(|p| self.gaussian_curvature_unchecked(*p).abs()).fold(0.0, f64::max);
        let cmax = (0..nb)
            .map(|i| self.boundary_curvature_at_param(TAU * i as f64 / nb as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        // Comparison with the flat isoperimetric inequality: areas grow by at
        // most sup sqrt(det g) and lengths shrink by at most inf sqrt(λ_min).
        let isoperimetric = match &self.metric {
            Metric::Flat => 4.0 * PI,
            _ => {
                let mut area_max: f64 = 0.0;
                let mut len_min = f64::INFINITY;
                for p in grid.iter().chain((0..nb).map(|i| self.domain.boundary_point(TAU * i as f64 / nb as f64)).collect::<Vec<_>>().iter()) {
                    let g = self.metric_unchecked(*p);
                    area_max = area_max.max(g.determinant().sqrt());
                    let eig = g.symmetric_eigenvalues();
                    len_min = len_min.min(eig.min());
                }
                4.0 * PI * len_min / area_max
            }
        };
        SurfaceConstants {
            k0: SUP_INFLATION * kmax,
            boundary_curvature_sup: SUP_INFLATION * cmax,
            isoperimetric,
            isoperimetric_length: f64::INFINITY,
            boundary_length,
        }
    }

    /// Minimum boundary curvature over `n` samples and where it occurs.
    pub fn convexity_audit(&self, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                (self.boundary_curvature_at_param(t), t)
            })
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    /// Smallest metric eigenvalue over `n` pseudo-random chart points.
    pub fn min_metric_eigenvalue(&self, n: usize) -> f64 {
        let (a, b) = self.domain.semi_axes();
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut min = f64::INFINITY;
        let mut found = 0;
        while found < n {
            let p = Point::new(a * (2.0 * next() - 1.0), b * (2.0 * next() - 1.0));
            if self.domain.level(p) > 0.0 {
                continue;
            }
            found += 1;
            min = min.min(self.metric_unchecked(p).symmetric_eigenvalues().min());
        }
        min
    }

    /// Metric area density `sqrt(det g)`.
    pub fn area_density(&self, p: Point) -> f64 {
        match &self.metric {
            Metric::Flat => 1.0,
            Metric::Conformal(phi) => (2.0 * phi.value(p)).exp(),
            Metric::General(field) => field.at(p).determinant().max(0.0).sqrt(),
        }
    }

    /// `∫ f dA` over a closed chart polygon (any simple polygon; the signed
    /// fan about the first vertex handles non-convex shapes). Positive for
    /// counterclockwise vertex order.
    pub fn integrate_over_polygon<F: Fn(Point) -> f64>(&self, poly: &[Point], f: F) -> f64 {
        if poly.len() < 3 {
            return 0.0;
        }
        let o = poly.iter().fold(Point::zeros(), |a, p| a + p) / poly.len() as f64;
        let n = poly.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let sign = crate::types::cross(a - o, b - o).signum();
            if sign == 0.0 {
                continue;
            }
            total += sign * integrate_triangle(|p| f(p) * self.area_density(p), o, a, b);
        }
        total
    }

    /// Total Gaussian curvature `∫ K dA` over a chart polygon.
    pub fn curvature_integral(&self, poly: &[Point]) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        self.integrate_over_polygon(poly, |p| self.gaussian_curvature_unchecked(p))
    }

    /// Conformal change `g̃ = e^{2φ} g`.
    pub fn conformal_deform(&self, phi: ConformalFactor) -> (DiskSurface, Option<ConvexityWarning>) {
        let metric = match &self.metric {
            Metric::Flat => Metric::Conformal(phi),
            Metric::Conformal(psi) => Metric::Conformal(ConformalFactor::Sum(vec![psi.clone(), phi])),
            Metric::General(field) => {
                let field = field.clone();
                let name = format!("e^(2phi) {}", field.name);
                Metric::General(MetricField::new(name, move |p| field.at(p) * (2.0 * phi.value(p)).exp()))
            }
        };
        let out = DiskSurface::with_numerics(self.domain, metric, self.numerics);
        let (min_k, at) = out.convexity_audit(1024);
        let warning = (min_k <= 0.0).then_some(ConvexityWarning { min_boundary_curvature: min_k, at_parameter: at });
        (out, warning)
    }

    /// The same surface seen through a general metric field (used to check
    /// the conformal formulas against the coordinate formulas).
    pub fn as_general(&self) -> DiskSurface {
        let this = self.clone();
        let field = MetricField::new("general view", move |p| this.metric_unchecked(p));
        DiskSurface::with_numerics(self.domain, Metric::General(field), self.numerics)
    }
}

/// Metric entries and their partials up to second order at a point.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub e_u: f64,
    pub e_v: f64,
    pub f_u: f64,
    pub f_v: f64,
    pub g_u: f64,
    pub g_v: f64,
    pub e_vv: f64,
    pub f_uv: f64,
    pub g_uu: f64,
}

const FD_STEP: f64 = 1e-2;

fn metric_first_partials(field: &MetricField, p: Point) -> (Tensor, Tensor, Tensor) {
    let h = FD_STEP;
    let d = |dir: Point| {
        let f1 = field.at(p + dir * h) - field.at(p - dir * h);
        let f2 = field.at(p + dir * (2.0 * h)) - field.at(p - dir * (2.0 * h));
        (f1 * 8.0 - f2) / (12.0 * h)
    };
    (field.at(p), d(Point::new(1.0, 0.0)), d(Point::new(0.0, 1.0)))
}

/// Metric jet by fourth-order central differences.
pub fn metric_jet(field: &MetricField, p: Point) -> MetricJet {
    let h = FD_STEP;
    let (g0, gx, gy) = metric_first_partials(field, p);
    let ex = Point::new(1.0, 0.0);
    let ey = Point::new(0.0, 1.0);
    let second = |dir: Point| {
        let f = |t: f64| field.at(p + dir * t);
        (-f(2.0 * h) + f(h) * 16.0 - g0 * 30.0 + f(-h) * 16.0 - f(-2.0 * h)) / (12.0 * h * h)
    };
    let gxx = second(ex);
    let gyy = second(ey);
    let mixed = {
        let f = |a: f64, b: f64| field.at(p + ex * a + ey * b);
        let d1 = f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h);
        let d2 = f(2.0 * h, 2.0 * h) - f(2.0 * h, -2.0 * h) - f(-2.0 * h, 2.0 * h) + f(-2.0 * h, -2.0 * h);
        (d1 * 16.0 - d2) / (48.0 * h * h)
    };
    MetricJet {
        e: g0[(0, 0)],
        f: g0[(0, 1)],
        g: g0[(1, 1)],
        e_u: gx[(0, 0)],
        e_v: gy[(0, 0)],
        f_u: gx[(0, 1)],
        f_v: gy[(0, 1)],
        g_u: gx[(1, 1)],
        g_v: gy[(1, 1)],
        e_vv: gyy[(0, 0)],
        f_uv: mixed[(0, 1)],
        g_uu: gxx[(1, 1)],
    }
}

/// Brioschi formula for the Gaussian curvature of `E du² + 2F du dv + G dv²`.
pub fn brioschi_curvature(j: &MetricJet) -> f64 {
    let m1 = nalgebra::Matrix3::new(
        -0.5 * j.e_vv + j.f_uv - 0.5 * j.g_uu,
        0.5 * j.e_u,
        j.f_u - 0.5 * j.e_v,
        j.f_v - 0.5 * j.g_u,
        j.e,
        j.f,
        0.5 * j.g_v,
        j.f,
        j.g,
    );
    let m2 = nalgebra::Matrix3::new(0.0, 0.5 * j.e_v, 0.5 * j.g_u, 0.5 * j.e_v, j.e, j.f, 0.5 * j.g_u, j.f, j.g);
    let det = j.e * j.g - j.f * j.f;
    (m1.determinant() - m2.determinant()) / (det * det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_disk() -> ChartDomain {
        ChartDomain::Disk { radius: 1.0 }
    }

    #[test]
    fn flat_metric_is_identity() {
        let s = DiskSurface::flat_disk(1.0);
        assert_eq!(s.metric_at(Point::new(0.3, 0.1)).unwrap(), Tensor::identity());
        let z = DiskSurface::conformal(unit_disk(), ConformalFactor::isotropic(0.0));
        assert_abs_diff_eq!(z.metric_at(Point::new(-0.7, 0.2)).unwrap(), Tensor::identity(), epsilon = 1e-15);
    }

    #[test]
    fn conformal_metric_value() {
        let s = DiskSurface::conformal(unit_disk(), ConformalFactor::isotropic(0.1));
        let g = s.metric_at(Point::new(0.5, 0.0)).unwrap();
        let e = 0.05f64.exp();
        assert_abs_diff_eq!(g, Tensor::new(e, 0.0, 0.0, e), epsilon = 1e-14);
    }

    #[test]
    fn metric_outside_domain_is_rejected() {
        let s = DiskSurface::flat_disk(1.0);
        assert!(matches!(s.metric_at(Point::new(0.9, 0.9)), Err(Error::Domain(..))));
    }

    #[test]
    fn curvature_of_presets() {
        let flat = DiskSurface::flat_disk(1.0);
        assert_eq!(flat.gaussian_curvature(Point::new(0.2, 0.1)).unwrap(), 0.0);
        let q = DiskSurface::conformal(unit_disk(), ConformalFactor::isotropic(0.1));
        assert_abs_diff_eq!(q.gaussian_curvature(Point::zeros()).unwrap(), -0.4, epsilon = 1e-12);
        let cap = DiskSurface::conformal(unit_disk(), ConformalFactor::SphericalCap);
        assert_abs_diff_eq!(cap.gaussian_curvature(Point::new(0.2, 0.3)).unwrap(), 1.0, epsilon = 1e-12);
        // Coordinate formula on the same metrics, by finite differences.
        for s in [&q, &cap] {
            let g = s.as_general();
            for p in [Point::zeros(), Point::new(0.2, 0.3), Point::new(-0.5, 0.4)] {
                let k = s.gaussian_curvature(p).unwrap();
                assert_abs_diff_eq!(g.gaussian_curvature(p).unwrap(), k, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn boundary_curvature_presets() {
        let flat = DiskSurface::flat_disk(1.0);
        for s in [0.0, 1.0, 3.0, 6.0] {
            assert_abs_diff_eq!(flat.boundary_geodesic_curvature(s).unwrap(), 1.0, epsilon = 1e-12);
        }
        let ell = DiskSurface::flat_ellipse(2.0, 1.0);
        // co-vertex (0, 1) sits at parameter π/2
        assert_abs_diff_eq!(ell.boundary_curvature_at_param(PI / 2.0), 0.25, epsilon = 1e-12);
        let s = ell.boundary_arclength_at_param(PI / 2.0);
        assert_abs_diff_eq!(ell.boundary_geodesic_curvature(s).unwrap(), 0.25, epsilon = 1e-9);
        // Tangent turning by finite differences at the co-vertex.
        let h = 1e-4;
        let (a, _) = ell.domain.boundary_derivatives(PI / 2.0 - h);
        let (b, _) = ell.domain.boundary_derivatives(PI / 2.0 + h);
        let dtheta = (crate::types::cross(a, b) / (a.norm() * b.norm())).asin() / (2.0 * h);
        assert_abs_diff_eq!(dtheta / ell.boundary_speed(PI / 2.0), 0.25, epsilon = 1e-6);
    }

    #[test]
    fn boundary_curvature_under_neumann_free_deformation() {
        // φ vanishes near the boundary so κ̃ = e^{-φ} κ = κ there.
        let phi = ConformalFactor::CutoffQuadratic { amplitude: 0.4, center: Point::zeros(), r_in: 0.5, r_out: 0.9 };
        let s = DiskSurface::flat_disk(1.0).conformal_deform(phi.clone()).0;
        for t in [0.0, 1.0, 2.5] {
            let p = s.domain.boundary_point(t);
            assert_abs_diff_eq!(s.boundary_curvature_at_param(t), (-phi.value(p)).exp() * 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn conformal_deform_identities() {
        let flat = DiskSurface::flat_disk(1.0);
        let (same, warn) = flat.conformal_deform(ConformalFactor::isotropic(0.0));
        assert!(warn.is_none());
        assert_abs_diff_eq!(same.gaussian_curvature(Point::new(0.1, 0.2)).unwrap(), 0.0, epsilon = 1e-15);
        // Δφ = -0.2 gives K̃(0) = 0.2
        let (d, _) = flat.conformal_deform(ConformalFactor::isotropic(-0.05));
        assert_abs_diff_eq!(d.gaussian_curvature(Point::zeros()).unwrap(), 0.2, epsilon = 1e-12);
        // inward normal derivative 0.5 on the unit circle: φ = -0.25 r²
        let (r, _) = flat.conformal_deform(ConformalFactor::isotropic(-0.25));
        for t in [0.3, 2.0] {
            let expected = (0.25f64).exp() * (1.0 - 0.5);
            assert_abs_diff_eq!(r.boundary_curvature_at_param(t), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn deformation_of_curved_surface_follows_transformation_law() {
        let base = DiskSurface::conformal(unit_disk(), ConformalFactor::isotropic(0.1));
        let phi = ConformalFactor::Quadratic { cx: 0.05, cy: -0.02, center: Point::new(0.1, 0.0) };
        let (out, _) = base.conformal_deform(phi.clone());
        for p in [Point::new(0.1, 0.2), Point::new(-0.4, 0.3)] {
            let (v, _, h) = phi.jet(p);
            let g = base.metric_unchecked(p);
            // Δ_g φ for a conformally flat g: e^{-2ψ} (φ_xx + φ_yy)
            let lap = (h[(0, 0)] + h[(1, 1)]) / g[(0, 0)];
            let expected = (-2.0 * v).exp() * (base.gaussian_curvature(p).unwrap() - lap);
            assert_abs_diff_eq!(out.gaussian_curvature(p).unwrap(), expected, epsilon = 1e-10);
        }
        let t = 0.7;
        let p = base.domain.boundary_point(t);
        let n_in = base.boundary_inward_normal(t);
        let (v, grad, _) = phi.jet(p);
        let dphi = grad.dot(&n_in);
        let expected = (-v).exp() * (base.boundary_curvature_at_param(t) - dphi);
        assert_abs_diff_eq!(out.boundary_curvature_at_param(t), expected, epsilon = 1e-10);
    }

    #[test]
    fn spherical_cap_equator_is_geodesic() {
        let cap = DiskSurface::conformal(unit_disk(), ConformalFactor::SphericalCap);
        assert_abs_diff_eq!(cap.boundary_curvature_at_param(1.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_arclength_inverse() {
        let s = DiskSurface::conformal(ChartDomain::Ellipse { a: 1.5, b: 1.0 }, ConformalFactor::isotropic(0.1));
        for t in [0.1, 1.3, 4.0, 6.2] {
            let len = s.boundary_arclength_at_param(t);
            assert_abs_diff_eq!(s.boundary_param_at_arclength(len), t, epsilon = 1e-10);
        }
    }

    #[test]
    fn constants_of_unit_disk() {
        let c = DiskSurface::flat_disk(1.0).constants();
        assert_abs_diff_eq!(c.boundary_length, TAU, epsilon = 1e-10);
        assert_abs_diff_eq!(c.boundary_curvature_sup, SUP_INFLATION, epsilon = 1e-10);
        assert_eq!(c.k0, 0.0);
    }

    #[test]
    fn polygon_integral_handles_non_convex_shapes() {
        let s = DiskSurface::flat_disk(1.0);
        let l_shape = [
            Point::new(0.0, 0.0),
            Point::new(0.6, 0.0),
            Point::new(0.6, 0.2),
            Point::new(0.2, 0.2),
            Point::new(0.2, 0.6),
            Point::new(0.0, 0.6),
        ];
        assert_abs_diff_eq!(s.integrate_over_polygon(&l_shape, |_| 1.0), 0.2, epsilon = 1e-14);
        let cap = DiskSurface::conformal(unit_disk(), ConformalFactor::SphericalCap);
        let n = 2048;
        let circle: Vec<Point> = (0..n).map(|i| cap.domain.boundary_point(TAU * i as f64 / n as f64) * 0.999_999_999).collect();
        // upper hemisphere: total curvature 2π
        assert_abs_diff_eq!(cap.curvature_integral(&circle), TAU, epsilon = 1e-4);
    }
}
