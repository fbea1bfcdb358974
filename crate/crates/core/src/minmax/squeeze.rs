//! The squeezing homotopy near a strictly stable geodesic and its audit:
//! length below `|γ| + ε`, support inside the foliated neighbourhood, and
//! surrogate distance to `γ` of order `√ε`.

use rayon::prelude::*;
use serde::Serialize;

use super::varifold::{f_distance, Varifold};
use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::flow::{evolve_classify, FlowConfig};
use crate::stability::foliation::{build_leaf, orthogonalize_ends, polylines_cross};
use crate::stability::spectrum::{robin_spectrum, RobinSpectrum};
use crate::stability::{check_geodesic, normal_variation, TOL_GEODESIC};
use crate::surface::DiskSurface;
use crate::types::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeOptions {
    /// Perturbed copies sit at normal offset `η √(10ε)` times a unit shape.
    pub eta: f64,
    pub flow_time: f64,
    pub flow_checkpoints: usize,
    pub squeeze_steps: usize,
    pub samples: usize,
    /// Half-width in `t` of the foliation available around `γ`.
    pub foliation_eps: f64,
}

impl Default for SqueezeOptions {
    fn default() -> Self {
        Self { eta: 0.2, flow_time: 0.5, flow_checkpoints: 8, squeeze_steps: 8, samples: 128, foliation_eps: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberAudit {
    pub initial_length: f64,
    pub initial_distance: f64,
    /// Largest distance from the member to `γ`.
    pub tube_offset: f64,
    pub max_length: f64,
    pub max_distance: f64,
    pub contained: bool,
    pub curves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezeReport {
    pub eps: f64,
    pub geodesic_length: f64,
    /// `√(10ε)`.
    pub tube_radius: f64,
    /// Leaf parameter whose sublevel set contains the tube.
    pub z: f64,
    /// `ε₀ = h₀²/10` for the foliated radius `h₀`.
    pub eps0: f64,
    pub members: Vec<MemberAudit>,
    pub max_length: f64,
    pub length_bound_holds: bool,
    pub contained: bool,
    pub max_distance: f64,
    /// `max distance / √ε`.
    pub c_audit: f64,
    pub holds: bool,
}

/// Distance from `x` to the polyline `pts`, through the metric length of
/// the segment to the nearest chart point.
fn distance_to(surface: &DiskSurface, pts: &[Point], x: Point) -> f64 {
    let mut best = (f64::INFINITY, Point::zeros());
    for w in pts.windows(2) {
        let d = w[1] - w[0];
        let t = ((x - w[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        let q = w[0] + d * t;
        let e = (x - q).norm();
        if e < best.0 {
            best = (e, q);
        }
    }
    surface.segment_length(best.1, x)
}

fn unwrap_near(a: f64, reference: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    a - tau * ((a - reference) / tau).round()
}

/// The region between two leaves, closed by the boundary arcs joining their
/// ends.
struct Slab {
    polygon: Vec<Point>,
    lower: Vec<Point>,
    upper: Vec<Point>,
    /// Boundary parameter intervals at the start and end.
    ends: [(f64, f64); 2],
}

impl Slab {
    fn new(surface: &DiskSurface, lower: &Chord, upper: &Chord) -> Self {
        let (l, u) = (lower.samples(), upper.samples());
        let arc = |from: Point, to: Point| -> (Vec<Point>, (f64, f64)) {
            let a = surface.domain.parameter_of(from);
            let b = unwrap_near(surface.domain.parameter_of(to), a);
            let pts = (1..16).map(|k| surface.domain.boundary_point(a + (b - a) * k as f64 / 16.0)).collect();
            (pts, (a.min(b), a.max(b)))
        };
        let (arc_end, end) = arc(*l.last().unwrap(), *u.last().unwrap());
        let (arc_start, start) = arc(u[0], l[0]);
        let mut polygon = l.to_vec();
        polygon.extend(arc_end);
        polygon.extend(u.iter().rev());
        polygon.extend(arc_start);
        Self { polygon, lower: l.to_vec(), upper: u.to_vec(), ends: [start, end] }
    }

    fn inside(&self, x: Point) -> bool {
        let p = &self.polygon;
        let mut wind = false;
        for i in 0..p.len() {
            let (a, b) = (p[i], p[(i + 1) % p.len()]);
            if (a.y > x.y) != (b.y > x.y) && x.x < a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                wind = !wind;
            }
        }
        wind
    }

    fn contains(&self, surface: &DiskSurface, curve: &[Point]) -> bool {
        let n = curve.len();
        if polylines_cross(curve, &self.lower) || polylines_cross(curve, &self.upper) {
            return false;
        }
        let in_arc = |x: Point, (a, b): (f64, f64)| {
            let t = unwrap_near(surface.domain.parameter_of(x), 0.5 * (a + b));
            t >= a - 1e-12 && t <= b + 1e-12
        };
        // the curve may start at either end of γ
        let ends_ok = (in_arc(curve[0], self.ends[0]) && in_arc(curve[n - 1], self.ends[1])) || (in_arc(curve[0], self.ends[1]) && in_arc(curve[n - 1], self.ends[0]));
        ends_ok && curve[1..n - 1].iter().all(|x| self.inside(*x))
    }
}

/// Slides the ends of an interpolated polyline back onto the boundary.
fn close_ends(surface: &DiskSurface, mut pts: Vec<Point>) -> Result<Chord> {
    let n = pts.len();
    for (end, next) in [(0, 1), (n - 1, n - 2)] {
        let (e, m) = (pts[end], pts[next]);
        let dir = (e - m) / (e - m).norm();
        let base = if surface.domain.level(e) < 0.0 { e } else { m };
        pts[end] = surface.domain.project(base + dir * surface.domain.ray_exit(base, dir));
    }
    Chord::from_points(surface, pts)
}

/// Perturbed copies `exp(η√(10ε) g_i ν)` of `γ` for eight shapes mixing the
/// first two Robin eigenfunctions, each normalised to sup norm one.
pub fn perturbed_copies(surface: &DiskSurface, geodesic: &Chord, eps: f64, opts: &SqueezeOptions) -> Result<Vec<Chord>> {
    let spec = robin_spectrum(surface, geodesic, 2)?;
    let sup = |i: usize| spec.eigenfunctions[i].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (m1, m2) = (sup(0), sup(1));
    let h = opts.eta * (10.0 * eps).sqrt();
    let mix = [(1.0, 0.0), (-1.0, 0.0), (0.8, 0.15), (-0.8, 0.15), (0.6, -0.1), (-0.6, -0.1), (0.4, 0.15), (-0.4, -0.15)];
    mix.par_iter()
        .map(|&(c, d)| {
            let g = |s: f64| c * spec.eigenfunction_at(0, s) / m1 + d * spec.eigenfunction_at(1, s) / m2;
            orthogonalize_ends(surface, normal_variation(surface, geodesic, g, h, opts.samples)?)
        })
        .collect()
}

/// Runs the squeezing homotopy (free boundary flow, then the straight-line
/// squeeze of the flowed curve onto `γ` at matching arclength fractions)
/// for each member and audits length, containment and distance along it.
///
/// The gate on members is the pair of consequences of `F(Φ(x), γ) < ε`
/// that the homotopy uses: length below `|γ| + ε` and support in the
/// `√(10ε)` tube.
pub fn squeeze_audit(surface: &DiskSurface, geodesic: &Chord, family: &[Chord], eps: f64, opts: &SqueezeOptions) -> Result<SqueezeReport> {
    check_geodesic(surface, geodesic, TOL_GEODESIC)?;
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
    }
    let spec: RobinSpectrum = robin_spectrum(surface, geodesic, 1)?;
    if !(spec.eigenvalues[0] > 0.0) {
        return Err(Error::Precondition(format!("the geodesic is not strictly stable: λ₁ = {}", spec.eigenvalues[0])));
    }
    let phi_min = spec.eigenfunctions[0].iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let lg = geodesic.length();
    let tube_radius = (10.0 * eps).sqrt();
    let h0 = opts.foliation_eps * phi_min;
    let eps0 = h0 * h0 / 10.0;
    if eps >= eps0 {
        return Err(Error::Precondition(format!("ε = {eps} is not below ε₀ = {eps0} for the foliated radius {h0}")));
    }
    let z = tube_radius / phi_min;
    let dense = geodesic.resample(surface, 1024)?;
    for (i, m) in family.iter().enumerate() {
        let offset = m.samples().iter().map(|x| distance_to(surface, dense.samples(), *x)).fold(0.0, f64::max);
        if !(m.length() < lg + eps && offset < tube_radius) {
            return Err(Error::Precondition(format!("member {i} is outside the hypothesis: length {} vs {}, offset {offset} vs {tube_radius}", m.length(), lg + eps)));
        }
    }
    let n = opts.samples;
    let lower = build_leaf(surface, geodesic, &spec, -z, n)?.chord;
    let upper = build_leaf(surface, geodesic, &spec, z, n)?.chord;
    let slab = Slab::new(surface, &lower, &upper);
    let target = geodesic.resample(surface, n)?;
    let vg = Varifold::from_chord(surface, &target);
    let flow = FlowConfig { t_max: opts.flow_time, snapshot_dt: opts.flow_time / opts.flow_checkpoints.max(1) as f64, snapshot_ratio: 0.0, ..FlowConfig::default() };

    let members = family
        .par_iter()
        .map(|m| -> Result<MemberAudit> {
            let mut curves: Vec<Chord> = vec![m.clone()];
            let flowed = if check_geodesic(surface, m, TOL_GEODESIC).is_ok() {
                m.clone()
            } else {
                let run = evolve_classify(surface, m, &flow)?;
                for s in &run.snapshots[1..] {
                    curves.push(Chord::from_points(surface, s.points.clone())?);
                }
                run.final_state.chord(surface)?
            };
            let flowed = flowed.resample(surface, n)?;
            // match the orientation of γ before interpolating
            let flowed = if (flowed.samples()[0] - target.samples()[0]).norm() > (flowed.samples()[n] - target.samples()[0]).norm() { flowed.reversed(surface)? } else { flowed };
            for k in 1..=opts.squeeze_steps {
                let s = k as f64 / opts.squeeze_steps as f64;
                let pts: Vec<Point> = flowed.samples().iter().zip(target.samples()).map(|(a, b)| a * (1.0 - s) + b * s).collect();
                curves.push(if k == opts.squeeze_steps { target.clone() } else { close_ends(surface, pts)? });
            }
            // compare at a common sampling so that γ is at distance zero from itself
            let dist = curves.iter().map(|c| Ok(f_distance(&Varifold::from_chord(surface, &c.resample(surface, n)?), &vg))).collect::<Result<Vec<f64>>>()?;
            Ok(MemberAudit {
                initial_length: m.length(),
                initial_distance: dist[0],
                tube_offset: m.samples().iter().map(|x| distance_to(surface, dense.samples(), *x)).fold(0.0, f64::max),
                max_length: curves.iter().map(Chord::length).fold(0.0, f64::max),
                max_distance: dist.iter().copied().fold(0.0, f64::max),
                contained: curves.iter().all(|c| slab.contains(surface, c.samples())),
                curves: curves.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_length = members.iter().map(|m| m.max_length).fold(0.0, f64::max);
    let max_distance = members.iter().map(|m| m.max_distance).fold(0.0, f64::max);
    let length_bound_holds = max_length < lg + eps;
    let contained = members.iter().all(|m| m.contained);
    Ok(SqueezeReport {
        eps,
        geodesic_length: lg,
        tube_radius,
        z,
        eps0,
        members,
        max_length,
        length_bound_holds,
        contained,
        max_distance,
        c_audit: max_distance / eps.sqrt(),
        holds: length_bound_holds && contained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::select_perturbation;
    use crate::surface::{ChartDomain, ConformalFactor};

    fn stable() -> (DiskSurface, Chord) {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.3));
        let d = Chord::diameter(&s, 0.0, 256).unwrap();
        let p = select_perturbation(&s, &d).unwrap();
        (p.surface, p.geodesic)
    }

    #[test]
    fn constant_family_stays_put() {
        let (s, g) = stable();
        let r = squeeze_audit(&s, &g, &[g.clone()], 1e-6, &SqueezeOptions::default()).unwrap();
        assert!(r.holds && r.max_distance < 1e-12, "{r:?}");
    }

    #[test]
    fn perturbed_family_scales_like_root_eps() {
        let (s, g) = stable();
        let opts = SqueezeOptions::default();
        let run = |eps: f64| {
            let fam = perturbed_copies(&s, &g, eps, &opts).unwrap();
            squeeze_audit(&s, &g, &fam, eps, &opts).unwrap()
        };
        let (a, b) = (run(4e-6), run(1e-6));
        assert!(a.holds && b.holds, "{a:?}\n{b:?}");
        let ratio = a.max_distance / b.max_distance;
        assert!((1.5..=2.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn member_outside_the_tube_is_rejected() {
        let (s, g) = stable();
        let opts = SqueezeOptions::default();
        let far = perturbed_copies(&s, &g, 1e-4, &opts).unwrap();
        assert!(matches!(squeeze_audit(&s, &g, &far, 1e-6, &opts), Err(Error::Precondition(_))));
    }
}
