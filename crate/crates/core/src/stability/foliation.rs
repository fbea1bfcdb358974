//! Fermi neighbourhoods, the strict-stability perturbation and free
//! boundary mean convex foliations by the first Robin eigenfunction.

use rayon::prelude::*;

use super::spectrum::{harnack_constant, robin_spectrum, RobinSpectrum};
use super::{check_geodesic, normal_variation, TOL_GEODESIC};
use crate::curve::{endpoint_derivative, segments_cross, Chord};
use crate::error::{Error, Result};
use crate::geodesy;
use crate::surface::{ConformalFactor, ConvexityWarning, DiskSurface, Metric};
use crate::types::Point;

pub(crate) fn polylines_cross(a: &[Point], b: &[Point]) -> bool {
    for i in 0..a.len().saturating_sub(1) {
        let (a0, a1) = (a[i], a[i + 1]);
        for j in 0..b.len().saturating_sub(1) {
            let (b0, b1) = (b[j], b[j + 1]);
            if b0.x.max(b1.x) < a0.x.min(a1.x) || b0.x.min(b1.x) > a0.x.max(a1.x) || b0.y.max(b1.y) < a0.y.min(a1.y) || b0.y.min(b1.y) > a0.y.max(a1.y) {
                continue;
            }
            if segments_cross(a0, a1, b0, b1) {
                return true;
            }
        }
    }
    false
}

/// Largest `h ∈ {0.2, 0.1, 0.05, …}` for which the normal geodesic segments
/// of length `h` on either side of `chord` do not cross one another.
pub fn fermi_half_width(surface: &DiskSurface, chord: &Chord) -> Result<f64> {
    let l = chord.length();
    let stations = 64;
    let mut h = 0.2;
    for _ in 0..16 {
        let rays: Vec<Vec<Point>> = (1..stations)
            .map(|j| -> Result<Vec<Point>> {
                let s = l * j as f64 / stations as f64;
                let (p, nu) = (chord.point(s), chord.normal(surface, s)?);
                Ok((-8..=8)
                    .map(|k| geodesy::exponential(surface, p, nu * (h * k as f64 / 8.0)))
                    .filter(|q| surface.domain.level(*q) < 0.0)
                    .collect())
            })
            .collect::<Result<_>>()?;
        let crossing = (0..rays.len()).any(|i| (i + 1..rays.len()).any(|j| polylines_cross(&rays[i], &rays[j])));
        if !crossing {
            return Ok(h);
        }
        h *= 0.5;
    }
    Err(Error::Degenerate("normal coordinates are not injective at any tested width".into()))
}

/// A conformal change `e^{2u} g`, `u = (M/2) ρ² χ(|ρ|/β)` around a chart
/// straight geodesic, that keeps it a free boundary geodesic and makes it
/// strictly stable with negative curvature on the strip `|ρ| <= β/2`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub m: f64,
    pub beta: f64,
    pub surface: DiskSurface,
    /// The geodesic resampled in the perturbed metric.
    pub geodesic: Chord,
    pub lambda1: f64,
    /// Largest `K` sampled on the strip; negative.
    pub max_strip_curvature: f64,
    pub convexity_warning: Option<ConvexityWarning>,
}

/// Searches `β ∈ {½, ¼, …}` and, for each, the smallest
/// `M ∈ {2, 4, 8, …}·max(sup|K|, 1)` that makes the geodesic strictly stable
/// with negative curvature on the strip.
pub fn select_perturbation(surface: &DiskSurface, chord: &Chord) -> Result<Perturbation> {
    check_geodesic(surface, chord, TOL_GEODESIC)?;
    if matches!(surface.metric, Metric::General(_)) {
        return Err(Error::Precondition("the perturbation needs a flat or conformal chart metric".into()));
    }
    let (p, q) = chord.endpoints();
    let dir = (q - p) / (q - p).norm();
    let normal = Point::new(-dir.y, dir.x);
    let bow = chord.samples().iter().map(|x| (x - p).dot(&normal).abs()).fold(0.0, f64::max);
    if bow > 1e-9 * chord.length().max(1.0) {
        return Err(Error::Precondition(format!("geodesic is not straight in the chart (bow {bow:e})")));
    }
    let base = surface.constants().k0.max(1.0);
    let l = chord.length();
    let mut beta = 0.5;
    for _ in 0..6 {
        let mut m = 2.0 * base;
        for _ in 0..12 {
            let tube = ConformalFactor::Tube { amplitude: m, width: beta, origin: p, normal };
            let (deformed, warning) = surface.conformal_deform(tube);
            let strip = (0..=32)
                .flat_map(|j| [-0.5, -0.25, 0.0, 0.25, 0.5].map(|o| p + dir * ((q - p).norm() * j as f64 / 32.0) + normal * (o * beta)))
                .filter(|x| deformed.domain.level(*x) < 0.0)
                .map(|x| deformed.gaussian_curvature_unchecked(x))
                .fold(f64::NEG_INFINITY, f64::max);
            if strip < 0.0 {
                let geodesic = Chord::from_points(&deformed, chord.samples().to_vec())?.resample(&deformed, chord.len() - 1)?;
                let lambda1 = robin_spectrum(&deformed, &geodesic, 1)?.eigenvalues[0];
                if lambda1 > 0.0 {
                    return Ok(Perturbation {
                        m,
                        beta,
                        surface: deformed,
                        geodesic,
                        lambda1,
                        max_strip_curvature: strip,
                        convexity_warning: warning,
                    });
                }
            }
            m *= 2.0;
        }
        beta *= 0.5;
    }
    Err(Error::Numeric { message: format!("no perturbation makes the geodesic of length {l} strictly stable"), residual: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationOptions {
    /// Initial half-width in the leaf parameter `t`.
    pub eps_fol: f64,
    pub min_eps: f64,
    pub leaves_per_side: usize,
    pub samples: usize,
    pub orthogonality_tol: f64,
    /// Allowed relative error against `κ = λ₁φ₁|t|`.
    pub linearization_tol: f64,
}

impl Default for FoliationOptions {
    fn default() -> Self {
        Self { eps_fol: 0.05, min_eps: 1e-6, leaves_per_side: 4, samples: 256, orthogonality_tol: 1e-6, linearization_tol: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub t: f64,
    pub chord: Chord,
    /// Geodesic curvature at the leaf samples.
    pub curvature: Vec<f64>,
    /// `max d(x, γ) / min d(x, γ)`; `NaN` on the central leaf.
    pub c_t: f64,
    pub orthogonality: f64,
    /// Largest relative deviation of `κ` from `−sign(t) λ₁ φ₁ |t|` over
    /// interior samples.
    pub linearization_error: f64,
    /// Largest Gaussian curvature along the leaf.
    pub max_gauss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Foliation {
    pub eps: f64,
    pub lambda1: f64,
    /// `C_γ`.
    pub harnack: f64,
    pub leaves: Vec<Leaf>,
    pub max_c_t: f64,
    /// `2C_γ − max C_t`.
    pub harnack_margin: f64,
    /// Distance between the central leaf and the geodesic in the chart.
    pub identity_error: f64,
    pub disjoint: bool,
    /// Signed normal displacement strictly increasing in `t` at every
    /// interior station.
    pub monotone: bool,
    pub halvings: usize,
}

impl Foliation {
    /// Every leaf other than the central one has curvature pointing back to
    /// the geodesic at every interior sample.
    pub fn mean_convex(&self) -> bool {
        self.leaves.iter().filter(|l| l.t != 0.0).all(|l| interior(&l.curvature).all(|k| k * l.t.signum() < 0.0))
    }
}

/// Samples away from the two ends, where the spline curvature is pinned.
fn interior(v: &[f64]) -> impl Iterator<Item = &f64> {
    let n = v.len();
    v[2.min(n)..n.saturating_sub(2)].iter()
}

/// Bends the last stretch of each end, over an arclength `L/8`, by the cubic
/// `Δ(σ) = −c σ (1 − σ/δ)²` along the boundary tangent so the leaf meets
/// the boundary orthogonally. The end point itself does not move.
pub(crate) fn orthogonalize_ends(surface: &DiskSurface, chord: Chord) -> Result<Chord> {
    let mut chord = chord;
    for _ in 0..4 {
        let n = chord.len();
        let delta = chord.length() / 8.0;
        let s = chord.arclength().to_vec();
        let l = chord.length();
        let mut pts = chord.samples().to_vec();
        for (end, a, b, dist) in [(0, 1, 2, Box::new(|x: f64| x) as Box<dyn Fn(f64) -> f64>), (n - 1, n - 2, n - 3, Box::new(move |x: f64| l - x))] {
            let x0 = pts[end];
            let d = endpoint_derivative(surface, x0, pts[a], pts[b]);
            let tau = surface.boundary_tangent(surface.domain.parameter_of(x0));
            let c = surface.inner(x0, d, tau) / surface.inner(x0, tau, tau);
            for (j, p) in pts.iter_mut().enumerate() {
                let sigma = dist(s[j]);
                if sigma > 0.0 && sigma < delta {
                    *p -= tau * (c * sigma * (1.0 - sigma / delta).powi(2));
                }
            }
        }
        chord = Chord::from_points(surface, pts)?;
    }
    Ok(chord)
}

pub(crate) fn build_leaf(surface: &DiskSurface, chord: &Chord, spec: &RobinSpectrum, t: f64, n: usize) -> Result<Leaf> {
    let phi = |s: f64| spec.eigenfunction_at(0, s);
    let leaf = orthogonalize_ends(surface, normal_variation(surface, chord, phi, t, n)?)?;
    let curvature = leaf.curvatures(surface)?;
    let l = chord.length();
    let lambda1 = spec.eigenvalues[0];
    let mut lin: f64 = 0.0;
    if t != 0.0 {
        for j in 2..n - 1 {
            let expected = lambda1 * phi(l * j as f64 / n as f64) * t.abs();
            lin = lin.max(((-t.signum()) * curvature[j] - expected).abs() / expected);
        }
    }
    let c_t = if t == 0.0 {
        f64::NAN
    } else {
        // interior samples sit at Fermi distance |t| φ₁; the ends were slid
        // along the boundary and are measured directly
        let mut d: Vec<f64> = (1..n).map(|j| t.abs() * phi(l * j as f64 / n as f64)).collect();
        let pts = leaf.samples();
        let g = chord.samples();
        for (end, range) in [(pts[0], 0..8usize), (pts[pts.len() - 1], g.len() - 8..g.len())] {
            d.push(g[range].iter().map(|x| surface.segment_length(end, *x)).fold(f64::INFINITY, f64::min));
        }
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        hi / lo
    };
    let (a, b) = leaf.orthogonality_defect(surface)?;
    let max_gauss = leaf.samples().iter().map(|x| surface.gaussian_curvature_unchecked(*x)).fold(f64::NEG_INFINITY, f64::max);
    Ok(Leaf { t, chord: leaf, curvature, c_t, orthogonality: a.max(b), linearization_error: lin, max_gauss })
}

/// Builds `{γ_t}`, `γ_t = exp(t φ₁ ν)` with the ends slid onto the boundary,
/// halving the half-width until every leaf is mean convex towards `γ`,
/// orthogonal to the boundary, within the Harnack bound `C_t <= 2C_γ`,
/// close to the linearisation and disjoint from its neighbours.
pub fn build_foliation(surface: &DiskSurface, chord: &Chord, opts: &FoliationOptions) -> Result<Foliation> {
    check_geodesic(surface, chord, TOL_GEODESIC)?;
    let spec = robin_spectrum(surface, chord, 1)?;
    let lambda1 = spec.eigenvalues[0];
    if !(lambda1 > 0.0) {
        return Err(Error::Precondition(format!("the geodesic is not strictly stable: λ₁ = {lambda1}")));
    }
    let k_on = chord.samples().iter().map(|x| surface.gaussian_curvature_unchecked(*x)).fold(f64::NEG_INFINITY, f64::max);
    if !(k_on < 0.0) {
        return Err(Error::Precondition(format!("ambient curvature reaches {k_on} on the geodesic")));
    }
    let harnack = harnack_constant(&spec)?;
    let phi_max = spec.eigenfunctions[0].iter().fold(0.0f64, |m, v| m.max(*v));
    let width = fermi_half_width(surface, chord)?;
    let (_, base_defect) = {
        let (a, b) = chord.orthogonality_defect(surface)?;
        (0.0, a.max(b))
    };
    let n = opts.samples.max(16);
    let m = opts.leaves_per_side.max(1);
    let mut eps = opts.eps_fol.min(width / phi_max);
    let mut halvings = 0;
    let mut last_failure = format!("the Fermi width {width} caps ε below {}", opts.min_eps);
    while eps >= opts.min_eps {
        let ts: Vec<f64> = (-(m as i64)..=m as i64).map(|k| eps * k as f64 / m as f64).collect();
        let leaves = ts.par_iter().map(|&t| build_leaf(surface, chord, &spec, t, n)).collect::<Result<Vec<_>>>();
        match leaves {
            Ok(leaves) => {
                let centre = &leaves[m];
                let identity_error = centre.chord.samples().iter().zip(chord.resample(surface, n)?.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                let disjoint = leaves.windows(2).all(|w| !polylines_cross(w[0].chord.samples(), w[1].chord.samples()));
                let normals = (1..n).map(|j| {
                    let sj = chord.length() * j as f64 / n as f64;
                    Ok((chord.point(sj), chord.normal(surface, sj)?))
                }).collect::<Result<Vec<_>>>()?;
                let monotone = normals.iter().enumerate().all(|(i, (p, nu))| {
                    let d: Vec<f64> = leaves.iter().map(|l| surface.inner(*p, l.chord.samples()[i + 1] - p, *nu)).collect();
                    d.windows(2).all(|w| w[1] > w[0])
                });
                let max_c_t = leaves.iter().filter(|l| l.t != 0.0).map(|l| l.c_t).fold(0.0, f64::max);
                let fol = Foliation {
                    eps,
                    lambda1,
                    harnack,
                    max_c_t,
                    harnack_margin: 2.0 * harnack - max_c_t,
                    identity_error,
                    disjoint,
                    monotone,
                    halvings,
                    leaves,
                };
                let orthogonal = fol.leaves.iter().all(|l| l.orthogonality <= opts.orthogonality_tol + base_defect);
                let linear = fol.leaves.iter().all(|l| l.linearization_error < opts.linearization_tol);
                let negative = fol.leaves.iter().all(|l| l.max_gauss < 0.0);
                let checks = [
                    (fol.mean_convex(), "mean convexity"),
                    (fol.harnack_margin >= 0.0, "Harnack bound"),
                    (orthogonal, "orthogonality"),
                    (linear, "linearisation"),
                    (negative, "negative curvature"),
                    (fol.disjoint, "disjointness"),
                    (fol.monotone, "monotone sweep"),
                    (fol.identity_error < 1e-10, "central leaf"),
                ];
                match checks.iter().find(|c| !c.0) {
                    None => return Ok(fol),
                    Some((_, what)) => last_failure = format!("{what} fails at ε = {eps:e}"),
                }
            }
            Err(e) => last_failure = e.to_string(),
        }
        eps *= 0.5;
        halvings += 1;
    }
    Err(Error::Numeric { message: format!("foliation invariants unachievable: {last_failure}"), residual: eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::ChartDomain;

    fn isotropic_diameter() -> (DiskSurface, Chord) {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.3));
        let d = Chord::diameter(&s, 0.0, 256).unwrap();
        (s, d)
    }

    #[test]
    fn unstable_diameter_is_refused() {
        let (s, d) = isotropic_diameter();
        assert!(robin_spectrum(&s, &d, 1).unwrap().eigenvalues[0] < 0.0);
        assert!(matches!(build_foliation(&s, &d, &FoliationOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn perturbation_keeps_geodesic_and_stabilises() {
        let (s, d) = isotropic_diameter();
        let p = select_perturbation(&s, &d).unwrap();
        check_geodesic(&p.surface, &p.geodesic, TOL_GEODESIC).unwrap();
        assert!(p.lambda1 > 0.0 && p.max_strip_curvature < 0.0);
        // the perturbed curvature on the line is K − M e^{−2φ}
        for x in [0.0, 0.4, -0.7] {
            let u = Point::new(x, 0.0);
            let expected = s.gaussian_curvature_unchecked(u) - p.m * (-2.0 * 0.3 * x * x).exp();
            assert!((p.surface.gaussian_curvature_unchecked(u) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn foliation_invariants() {
        let (s, d) = isotropic_diameter();
        let p = select_perturbation(&s, &d).unwrap();
        let f = build_foliation(&p.surface, &p.geodesic, &FoliationOptions::default()).unwrap();
        assert!(f.identity_error < 1e-10);
        assert!(f.mean_convex() && f.disjoint && f.monotone);
        assert!(f.max_c_t <= 2.0 * f.harnack && f.harnack_margin >= 0.0);
        assert_eq!(f.leaves.len(), 9);
        // leaves on opposite sides lie on opposite sides of the x axis
        let side = |l: &Leaf| l.chord.point(0.5 * l.chord.length()).y.signum();
        assert!(side(&f.leaves[0]) * side(&f.leaves[8]) < 0.0);
    }

    #[test]
    fn fermi_width_of_flat_diameter() {
        let s = DiskSurface::flat_disk(1.0);
        let d = Chord::diameter(&s, 0.0, 128).unwrap();
        assert_eq!(fermi_half_width(&s, &d).unwrap(), 0.2);
    }

    #[test]
    fn curved_chord_is_not_perturbed() {
        let s = DiskSurface::flat_disk(1.0);
        let c = Chord::line(&s, 0.0, 0.3, 64).unwrap();
        assert!(select_perturbation(&s, &c).is_err());
    }
}
