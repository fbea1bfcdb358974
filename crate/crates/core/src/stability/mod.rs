//! Second variation of free boundary geodesics, the Robin spectrum of the
//! stability operator, Morse index, Harnack constant and mean convex
//! foliations.

pub mod foliation;
pub mod spectrum;

pub use foliation::{build_foliation, fermi_half_width, select_perturbation, Foliation, FoliationOptions, Leaf, Perturbation};
pub use spectrum::{harnack_constant, morse_index, robin_spectrum, MorseIndex, RobinSpectrum};

use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::geodesy;
use crate::numerics::simpson_uniform;
use crate::surface::DiskSurface;
use crate::types::Point;

/// Geodesic tolerance on curvature and endpoint orthogonality.
pub const TOL_GEODESIC: f64 = 1e-6;

/// Fails unless `chord` is a free boundary geodesic within `tol`.
pub fn check_geodesic(surface: &DiskSurface, chord: &Chord, tol: f64) -> Result<()> {
    let kmax = chord.curvatures(surface)?.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let (a, b) = chord.orthogonality_defect(surface)?;
    if !(kmax < tol && a.max(b) < tol) {
        return Err(Error::Precondition(format!("not a free boundary geodesic: max|κ| = {kmax:e}, defect = {:e}", a.max(b))));
    }
    Ok(())
}

/// Data of the stability operator along a geodesic: `K` on a uniform
/// half-step grid and the boundary curvature at both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityData {
    pub length: f64,
    /// Number of full steps; `gauss` has `2 steps + 1` entries.
    pub steps: usize,
    pub gauss: Vec<f64>,
    /// `κ^∂N` at `γ(0)` and `γ(L)`.
    pub boundary_curvature: (f64, f64),
}

impl StabilityData {
    pub fn new(surface: &DiskSurface, chord: &Chord, steps: usize) -> Self {
        let length = chord.length();
        let steps = steps.max(8) & !1;
        let m = 2 * steps;
        let gauss = (0..=m).map(|j| surface.gaussian_curvature_unchecked(chord.point(length * j as f64 / m as f64))).collect();
        let (p, q) = chord.endpoints();
        let kp = surface.boundary_curvature_at_param(surface.domain.parameter_of(p));
        let kq = surface.boundary_curvature_at_param(surface.domain.parameter_of(q));
        Self { length, steps, gauss, boundary_curvature: (kp, kq) }
    }

    pub fn step(&self) -> f64 {
        self.length / self.steps as f64
    }

    /// `K` at full grid node `j`.
    pub fn gauss_at_node(&self, j: usize) -> f64 {
        self.gauss[2 * j]
    }

    /// `Q(f, f)` from values and derivatives at the full grid nodes.
    pub fn quadratic_form(&self, f: &[f64], df: &[f64]) -> f64 {
        let h = self.step();
        let integrand: Vec<f64> = (0..=self.steps).map(|j| df[j] * df[j] - self.gauss_at_node(j) * f[j] * f[j]).collect();
        let n = self.steps;
        simpson_uniform(h, &integrand) - self.boundary_curvature.0 * f[0] * f[0] - self.boundary_curvature.1 * f[n] * f[n]
    }
}

/// `Q(f, f) = ∫(|f'|² − K f²) ds − κ(p₁)f(p₁)² − κ(p₂)f(p₂)²` for a normal
/// field `f ν` given as a function of arclength.
pub fn second_variation(surface: &DiskSurface, chord: &Chord, f: impl Fn(f64) -> f64) -> Result<f64> {
    check_geodesic(surface, chord, TOL_GEODESIC)?;
    let data = StabilityData::new(surface, chord, 2000);
    let l = data.length;
    let e = 1e-5 * l;
    let nodes: Vec<f64> = (0..=data.steps).map(|j| data.step() * j as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
    let ders: Vec<f64> = nodes
        .iter()
        .map(|&s| {
            if s < e {
                (-3.0 * f(s) + 4.0 * f(s + e) - f(s + 2.0 * e)) / (2.0 * e)
            } else if s > l - e {
                (3.0 * f(s) - 4.0 * f(s - e) + f(s - 2.0 * e)) / (2.0 * e)
            } else {
                (f(s + e) - f(s - e)) / (2.0 * e)
            }
        })
        .collect();
    Ok(data.quadratic_form(&vals, &ders))
}

/// Where the chart segment from `inside` towards `outside` meets the boundary.
fn boundary_crossing(surface: &DiskSurface, inside: Point, outside: Point) -> Point {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if surface.domain.level(inside + (outside - inside) * mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    surface.domain.project(inside + (outside - inside) * lo)
}

/// Moves the end sample `pts[end]` onto the boundary: trimmed back along
/// the end segment when outside, extended along it when inside.
fn slide_end(surface: &DiskSurface, pts: &mut [Point], end: usize, next: usize) {
    let (e, n) = (pts[end], pts[next]);
    let level = surface.domain.level(e);
    if level.abs() < 1e-15 {
        pts[end] = surface.domain.project(e);
    } else if level > 0.0 {
        pts[end] = boundary_crossing(surface, n, e);
    } else {
        let dir = (e - n) / (e - n).norm();
        let far = e + dir * surface.domain.ray_exit(e, dir);
        pts[end] = surface.domain.project(far);
    }
}

/// The chord `s ↦ exp(r f(s) ν(s))` sampled at `n + 1` uniform stations,
/// with both ends slid back onto the boundary.
pub fn normal_variation(surface: &DiskSurface, chord: &Chord, f: impl Fn(f64) -> f64, r: f64, n: usize) -> Result<Chord> {
    let l = chord.length();
    let mut pts = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let s = l * j as f64 / n as f64;
        let p = chord.point(s);
        let w = chord.normal(surface, s)? * (r * f(s));
        pts.push(geodesy::exponential(surface, p, w));
    }
    slide_end(surface, &mut pts, 0, 1);
    slide_end(surface, &mut pts, n, n - 1);
    Chord::from_points(surface, pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diameter_second_variation_oracles() {
        let s = DiskSurface::flat_disk(1.0);
        let d = Chord::diameter(&s, 0.3, 128).unwrap();
        assert_abs_diff_eq!(second_variation(&s, &d, |_| 1.0).unwrap(), -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(second_variation(&s, &d, |x| x - 1.0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ellipse_minor_axis_constant_field() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let minor = Chord::diameter(&s, std::f64::consts::FRAC_PI_2, 128).unwrap();
        assert_abs_diff_eq!(minor.length(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(second_variation(&s, &minor, |_| 1.0).unwrap(), -0.5, epsilon = 1e-9);
    }

    #[test]
    fn curved_chord_is_rejected() {
        let s = DiskSurface::flat_disk(1.0);
        let c = Chord::line(&s, 0.0, 0.3, 64).unwrap();
        assert!(matches!(second_variation(&s, &c, |_| 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn second_variation_matches_length_differences() {
        let s = DiskSurface::flat_disk(1.0);
        let d = Chord::diameter(&s, 0.0, 256).unwrap();
        let f = |x: f64| 1.0 + 0.3 * x - 0.2 * x * x;
        let q = second_variation(&s, &d, f).unwrap();
        let mut errs = Vec::new();
        for r in [1e-2, 5e-3] {
            let lp = normal_variation(&s, &d, f, r, 512).unwrap().length();
            let lm = normal_variation(&s, &d, f, -r, 512).unwrap().length();
            errs.push(((lp + lm - 2.0 * d.length()) / (r * r) - q).abs());
        }
        assert!(errs[0] < 0.05 && errs[1] < 0.5 * errs[0] + 1e-4, "{errs:?}");
    }
}
