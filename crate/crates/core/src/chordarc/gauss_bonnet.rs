//! Boundary turning between chord endpoints and Gauss–Bonnet audits of
//! disk-type regions bounded by curve and boundary arcs.

use std::f64::consts::{PI, TAU};

use super::profile_fn::{turning_hypothesis, Hypothesis};
use crate::curve::segments_cross;
use crate::error::{Error, Result};
use crate::numerics::{CubicSpline, GL4_NODES, GL4_WEIGHTS};
use crate::surface::DiskSurface;
use crate::types::Point;

/// Largest residual accepted by [`gauss_bonnet_audit`].
pub const GAUSS_BONNET_TOL: f64 = 1e-3;

/// The smaller boundary portion between two boundary points, traversed
/// counterclockwise from `start` to `end` (`end >= start`, unwrapped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArc {
    pub start: f64,
    pub end: f64,
    pub length: f64,
    /// `∫ κ^∂ ds` over the arc.
    pub turning: f64,
}

fn on_boundary_param(surface: &DiskSurface, z: Point) -> Result<f64> {
    if surface.domain.level(z).abs() > 1e-8 {
        return Err(Error::Geometry(format!("({}, {}) is not on the boundary", z.x, z.y)));
    }
    Ok(surface.domain.parameter_of(z).rem_euclid(TAU))
}

/// `∫ κ^∂ ds` over the smaller boundary portion between `z0` and `z1`.
/// An exact tie between the two portions takes the one starting at the
/// smaller parameter.
pub fn boundary_arc(surface: &DiskSurface, z0: Point, z1: Point) -> Result<BoundaryArc> {
    let (t0, t1) = (on_boundary_param(surface, z0)?, on_boundary_param(surface, z1)?);
    let total = surface.constants().boundary_length;
    let arc = |a: f64, b: f64| -> f64 {
        let b = if b < a { b + TAU } else { b };
        surface.boundary_arclength_at_param(b) - surface.boundary_arclength_at_param(a) + if b >= TAU { total } else { 0.0 }
    };
    if (t1 - t0).abs() < 1e-15 {
        return Ok(BoundaryArc { start: t0, end: t0, length: 0.0, turning: 0.0 });
    }
    let forward = arc(t0, t1);
    let backward = total - forward;
    let (start, end) = if (forward - backward).abs() <= 1e-12 * total {
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        (lo, hi)
    } else if forward < backward {
        (t0, if t1 < t0 { t1 + TAU } else { t1 })
    } else {
        (t1, if t0 < t1 { t0 + TAU } else { t0 })
    };
    Ok(BoundaryArc { start, end, length: forward.min(backward), turning: surface.boundary_turning_between(start, end) })
}

pub fn boundary_turning(surface: &DiskSurface, z0: Point, z1: Point) -> Result<f64> {
    Ok(boundary_arc(surface, z0, z1)?.turning)
}

/// Boundary turning between the endpoints of a chord of length `length`
/// against the bound `2ε/5`, asserted only when the smallness hypothesis
/// holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningReport {
    pub turning: f64,
    pub bound: f64,
    pub hypothesis: Hypothesis,
    pub holds: Option<bool>,
}

pub fn turning_audit(surface: &DiskSurface, z0: Point, z1: Point, length: f64, eps: f64) -> Result<TurningReport> {
    let turning = boundary_turning(surface, z0, z1)?;
    let hypothesis = turning_hypothesis(surface, length, eps);
    let bound = 0.4 * eps;
    Ok(TurningReport { turning, bound, hypothesis, holds: hypothesis.holds().then_some(turning <= bound) })
}

/// One edge of a region, listed with the region on its left.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionEdge {
    /// A smooth curve through the chart samples; its geodesic curvature is
    /// computed from a spline.
    Curve(Vec<Point>),
    /// A geodesic through the samples: zero geodesic curvature.
    Geodesic(Vec<Point>),
    /// The boundary from parameter `from` to `to`, counterclockwise when
    /// `to > from`.
    Boundary { from: f64, to: f64 },
}

struct EdgeData {
    samples: Vec<Point>,
    start_tangent: Point,
    end_tangent: Point,
    turning: f64,
}

fn spline_edge(surface: &DiskSurface, pts: &[Point], with_curvature: bool) -> Result<EdgeData> {
    if pts.len() < 4 {
        return Err(Error::Resolution("edge needs at least four samples".into()));
    }
    let mut t = vec![0.0];
    for w in pts.windows(2) {
        let d = (w[1] - w[0]).norm();
        if !(d > 0.0) {
            return Err(Error::Degenerate("repeated edge samples".into()));
        }
        t.push(t.last().unwrap() + d);
    }
    let sx = CubicSpline::new(&t, &pts.iter().map(|p| p.x).collect::<Vec<_>>());
    let sy = CubicSpline::new(&t, &pts.iter().map(|p| p.y).collect::<Vec<_>>());
    let jet = |u: f64| {
        let (x, dx, ddx) = sx.eval_all(u);
        let (y, dy, ddy) = sy.eval_all(u);
        (Point::new(x, y), Point::new(dx, dy), Point::new(ddx, ddy))
    };
    let unit = |p: Point, v: Point| v / surface.norm(p, v);
    let mut turning = 0.0;
    if with_curvature {
        for w in t.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (x, wt) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let u = 0.5 * (a + b) + 0.5 * (b - a) * x;
                let (c, d, dd) = jet(u);
                let speed = surface.norm(c, d);
                let acc = surface.covariant_acceleration(c, d, dd);
                // κ ds with respect to the left normal J T
                turning += 0.5 * (b - a) * wt * surface.inner(c, acc, surface.rotate(c, d / speed)) / (speed * speed);
            }
        }
    }
    let (p0, d0, _) = jet(0.0);
    let (p1, d1, _) = jet(*t.last().unwrap());
    Ok(EdgeData { samples: pts.to_vec(), start_tangent: unit(p0, d0), end_tangent: unit(p1, d1), turning })
}

fn boundary_edge(surface: &DiskSurface, from: f64, to: f64) -> EdgeData {
    let n = (((to - from).abs() / TAU) * 2048.0).ceil().max(8.0) as usize;
    let samples = (0..=n).map(|k| surface.domain.boundary_point(from + (to - from) * k as f64 / n as f64)).collect();
    let sign = if to >= from { 1.0 } else { -1.0 };
    let turning = if to >= from { surface.boundary_turning_between(from, to) } else { -surface.boundary_turning_between(to, from) };
    EdgeData { samples, start_tangent: surface.boundary_tangent(from) * sign, end_tangent: surface.boundary_tangent(to) * sign, turning }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussBonnetReport {
    /// `∫ κ ds` per edge.
    pub turning: Vec<f64>,
    /// Exterior angle at the start of each edge.
    pub exterior_angles: Vec<f64>,
    pub curvature_integral: f64,
    /// `|Σ∫κ + Σ exterior angles + ∫∫K − 2π|`.
    pub residual: f64,
}

impl GaussBonnetReport {
    pub fn passes(&self) -> bool {
        self.residual < GAUSS_BONNET_TOL
    }
}

fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a0, a1) = (poly[i], poly[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a0, a1, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Gauss–Bonnet balance of a region whose boundary is the closed loop of
/// `edges`, each running from the end of the previous one with the region
/// on its left. Exterior angles come from the metric angle between
/// consecutive tangents unless interior angles are supplied, one per corner
/// at the start of each edge.
pub fn gauss_bonnet_audit(surface: &DiskSurface, edges: &[RegionEdge], interior_angles: Option<&[f64]>) -> Result<GaussBonnetReport> {
    if edges.is_empty() {
        return Err(Error::Topology("empty region".into()));
    }
    let data = edges
        .iter()
        .map(|e| match e {
            RegionEdge::Curve(p) => spline_edge(surface, p, true),
            RegionEdge::Geodesic(p) => spline_edge(surface, p, false),
            RegionEdge::Boundary { from, to } => Ok(boundary_edge(surface, *from, *to)),
        })
        .collect::<Result<Vec<_>>>()?;
    let n = data.len();
    for i in 0..n {
        let gap = (data[i].samples.last().unwrap() - data[(i + 1) % n].samples[0]).norm();
        if gap > 1e-8 {
            return Err(Error::Topology(format!("edges {i} and {} do not meet (gap {gap:e})", (i + 1) % n)));
        }
    }
    let mut poly: Vec<Point> = Vec::new();
    for d in &data {
        poly.extend_from_slice(&d.samples[..d.samples.len() - 1]);
    }
    if !is_simple(&poly) {
        return Err(Error::Topology("region boundary is not simple".into()));
    }
    if let Some(a) = interior_angles {
        if a.len() != n {
            return Err(Error::Precondition(format!("{} interior angles for {n} corners", a.len())));
        }
    }
    let exterior_angles: Vec<f64> = (0..n)
        .map(|i| match interior_angles {
            Some(a) => PI - a[i],
            None => {
                let t_in = data[(i + n - 1) % n].end_tangent;
                let t_out = data[i].start_tangent;
                let p = data[i].samples[0];
                surface.inner(p, surface.rotate(p, t_in), t_out).atan2(surface.inner(p, t_in, t_out))
            }
        })
        .collect();
    let turning: Vec<f64> = data.iter().map(|d| d.turning).collect();
    let mut curvature_integral = surface.curvature_integral(&poly);
    if poly.len() >= 3 {
        // clockwise loops integrate with a negative sign
        let area: f64 = (0..poly.len()).map(|i| crate::types::cross(poly[i], poly[(i + 1) % poly.len()])).sum();
        if area < 0.0 {
            curvature_integral = -curvature_integral;
        }
    }
    let residual = (turning.iter().sum::<f64>() + exterior_angles.iter().sum::<f64>() + curvature_integral - TAU).abs();
    Ok(GaussBonnetReport { turning, exterior_angles, curvature_integral, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::geodesic_between;
    use crate::surface::{ChartDomain, ConformalFactor};

    #[test]
    fn turning_on_the_flat_disk() {
        let s = DiskSurface::flat_disk(1.0);
        let z = |t: f64| Point::new(t.cos(), t.sin());
        assert!((boundary_turning(&s, z(1.0), z(1.2)).unwrap() - 0.2).abs() < 1e-12);
        assert!((boundary_turning(&s, z(6.2), z(0.1)).unwrap() - (0.1 + TAU - 6.2)).abs() < 1e-12);
        assert_eq!(boundary_turning(&s, z(0.7), z(0.7)).unwrap(), 0.0);
        // antipodal tie: the portion starting at the smaller parameter
        let a = boundary_arc(&s, z(3.5), z(0.5)).unwrap();
        assert!((a.start - 0.5).abs() < 1e-12 && (a.end - 3.5).abs() < 1e-12);
        assert!(boundary_turning(&s, Point::new(0.5, 0.0), z(0.0)).is_err());
    }

    #[test]
    fn ellipse_turning_is_the_tangent_angle_change() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let z = |t: f64| Point::new(2.0 * t.cos(), t.sin());
        let tangent = |t: f64| Point::new(-2.0 * t.sin(), t.cos());
        for (t0, t1) in [(1.3, 1.9), (1.5, 1.65), (-0.2, 0.3)] {
            let (a, b) = (tangent(t0), tangent(t1));
            let expected = crate::types::cross(a, b).atan2(a.dot(&b));
            let got = boundary_turning(&s, z(t0), z(t1)).unwrap();
            assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
        }
    }

    #[test]
    fn flat_half_disk() {
        let s = DiskSurface::flat_disk(1.0);
        let diameter: Vec<Point> = (0..=64).map(|k| Point::new(-1.0 + 2.0 * k as f64 / 64.0, 0.0)).collect();
        let edges = [RegionEdge::Curve(diameter), RegionEdge::Boundary { from: 0.0, to: PI }];
        let r = gauss_bonnet_audit(&s, &edges, None).unwrap();
        assert!(r.residual < 1e-9, "{r:?}");
        assert!((r.exterior_angles[0] - PI / 2.0).abs() < 1e-9 && (r.exterior_angles[1] - PI / 2.0).abs() < 1e-9);
        assert!(r.turning[0].abs() < 1e-12);
        let supplied = gauss_bonnet_audit(&s, &edges, Some(&[PI / 2.0, PI / 2.0])).unwrap();
        assert!(supplied.residual < 1e-9);
    }

    #[test]
    fn orthogonal_arc_closes_with_the_boundary() {
        let s = DiskSurface::flat_disk(1.0);
        let r: f64 = 0.6;
        let c = (1.0 + r * r).sqrt();
        let beta = r.atan();
        let a = PI - (1.0f64).atan2(r);
        // from the upper intersection down through the interior
        let arc: Vec<Point> = (0..=400).map(|k| {
            let w = a + 2.0 * (PI - a) * k as f64 / 400.0;
            Point::new(c + r * w.cos(), r * w.sin())
        }).collect();
        let mut arc = arc;
        arc[0] = Point::new(beta.cos(), beta.sin());
        *arc.last_mut().unwrap() = Point::new(beta.cos(), -beta.sin());
        let edges = [RegionEdge::Boundary { from: -beta, to: beta }, RegionEdge::Curve(arc)];
        let rep = gauss_bonnet_audit(&s, &edges, None).unwrap();
        assert!(rep.residual < 1e-3, "{rep:?}");
        // the angle swept by the arc is π minus the boundary turning
        let turning = boundary_turning(&s, Point::new(beta.cos(), -beta.sin()), Point::new(beta.cos(), beta.sin())).unwrap();
        assert!((rep.turning[1] - (PI - turning)).abs() < 1e-3);
        assert!(rep.exterior_angles.iter().all(|e| (e - PI / 2.0).abs() < 1e-3));
    }

    #[test]
    fn spherical_geodesic_triangle_has_the_spherical_excess() {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::SphericalCap);
        let v = [Point::new(0.1, -0.2), Point::new(0.5, 0.1), Point::new(-0.2, 0.4)];
        let legs: Vec<Vec<Point>> = (0..3).map(|i| geodesic_between(&s, v[i], v[(i + 1) % 3]).unwrap().samples).collect();
        let edges: Vec<RegionEdge> = legs.into_iter().map(RegionEdge::Curve).collect();
        let rep = gauss_bonnet_audit(&s, &edges, None).unwrap();
        assert!(rep.residual < 1e-3, "{rep:?}");
        // independent: excess of the spherical triangle through the inverse
        // stereographic images
        let lift = |u: Point| {
            let q = u.norm_squared();
            nalgebra::Vector3::new(2.0 * u.x, 2.0 * u.y, 1.0 - q) / (1.0 + q)
        };
        let (a, b, c) = (lift(v[0]), lift(v[1]), lift(v[2]));
        let excess = 2.0 * (a.dot(&b.cross(&c)).abs()).atan2(1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a));
        let angle_sum: f64 = rep.exterior_angles.iter().map(|e| PI - e).sum();
        assert!((angle_sum - PI - excess).abs() < 1e-3, "{} vs {excess}", angle_sum - PI);
        assert!((rep.curvature_integral - excess).abs() < 1e-3);
    }

    #[test]
    fn self_crossing_region_is_rejected() {
        let s = DiskSurface::flat_disk(1.0);
        let bow = vec![Point::new(-0.5, -0.5), Point::new(-0.2, -0.2), Point::new(0.2, 0.2), Point::new(0.5, 0.5)];
        let back = vec![Point::new(0.5, 0.5), Point::new(0.5, 0.0), Point::new(0.5, -0.2), Point::new(-0.5, 0.5)];
        let close = vec![Point::new(-0.5, 0.5), Point::new(-0.5, 0.2), Point::new(-0.5, 0.0), Point::new(-0.5, -0.5)];
        let err = gauss_bonnet_audit(&s, &[RegionEdge::Geodesic(bow), RegionEdge::Geodesic(back), RegionEdge::Geodesic(close)], None).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }
}
