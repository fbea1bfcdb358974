//! Newton refinement of near-critical chords to free boundary geodesics.

use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::geodesy::{geodesic_between, GeodesicPath};
use crate::surface::DiskSurface;

/// Residual target on the two endpoint sines.
pub const POLISH_TOL: f64 = 1e-12;

fn connect(surface: &DiskSurface, a: f64, b: f64) -> Result<GeodesicPath> {
    let p = surface.domain.boundary_point(a);
    let q = surface.domain.boundary_point(b);
    geodesic_between(surface, p, q)
}

/// `⟨T, τ⟩_g` at both ends of the geodesic joining the boundary points at
/// parameters `a` and `b`.
fn residual(surface: &DiskSurface, a: f64, b: f64) -> Result<[f64; 2]> {
    let path = connect(surface, a, b)?;
    let (p, q) = path.endpoints;
    let (ta, tb) = (surface.boundary_tangent(a), surface.boundary_tangent(b));
    Ok([surface.inner(p, path.start_direction(), ta), surface.inner(q, path.end_direction(), tb)])
}

/// Moves the endpoints of `chord` along the boundary until the connecting
/// geodesic meets it orthogonally at both ends. Returns the geodesic
/// resampled to `n` segments.
pub fn polish_geodesic(surface: &DiskSurface, chord: &Chord, n: usize) -> Result<Chord> {
    let (p, q) = chord.endpoints();
    let mut a = surface.domain.parameter_of(p);
    let mut b = surface.domain.parameter_of(q);
    let mut r = residual(surface, a, b)?;
    let h = 1e-7;
    for _ in 0..60 {
        if r[0].abs().max(r[1].abs()) < POLISH_TOL {
            let path = connect(surface, a, b)?;
            return Chord::from_points(surface, path.samples)?.resample(surface, n);
        }
        let ra = residual(surface, a + h, b)?;
        let rb = residual(surface, a, b + h)?;
        let j = nalgebra::Matrix2::new((ra[0] - r[0]) / h, (rb[0] - r[0]) / h, (ra[1] - r[1]) / h, (rb[1] - r[1]) / h);
        // minimum-norm step: along a degenerate family of geodesics the
        // Jacobian has rank one
        let scale = j.abs().max();
        let pinv = j.pseudo_inverse(1e-8 * scale).map_err(|e| Error::numeric(e, r[0].abs().max(r[1].abs())))?;
        let d = -(pinv * nalgebra::Vector2::new(r[0], r[1]));
        let (da, db) = (d[0], d[1]);
        let step = da.abs().max(db.abs());
        let damp = if step > 0.2 { 0.2 / step } else { 1.0 };
        a += damp * da;
        b += damp * db;
        r = residual(surface, a, b)?;
    }
    Err(Error::numeric("geodesic polish did not converge", r[0].abs().max(r[1].abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{check_geodesic, TOL_GEODESIC};
    use crate::surface::{ChartDomain, ConformalFactor};

    #[test]
    fn nearby_line_polishes_to_ellipse_axis() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let c = Chord::line(&s, std::f64::consts::FRAC_PI_2 + 0.05, 0.03, 128).unwrap();
        let g = polish_geodesic(&s, &c, 256).unwrap();
        assert!((g.length() - 4.0).abs() < 1e-9);
        check_geodesic(&s, &g, TOL_GEODESIC).unwrap();
    }

    #[test]
    fn degenerate_disk_family_polishes_to_a_diameter() {
        let s = DiskSurface::flat_disk(1.0);
        let c = Chord::line(&s, 0.3, 0.05, 128).unwrap();
        let g = polish_geodesic(&s, &c, 256).unwrap();
        assert!((g.length() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn conformal_axis_is_a_fixed_point() {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::Quadratic { cx: 0.2, cy: 0.05, center: crate::types::Point::zeros() });
        let c = Chord::line(&s, std::f64::consts::FRAC_PI_2 + 0.02, 0.01, 128).unwrap();
        let g = polish_geodesic(&s, &c, 256).unwrap();
        let (p, q) = g.endpoints();
        assert!(p.y.abs() < 1e-9 && q.y.abs() < 1e-9, "{p:?} {q:?}");
        check_geodesic(&s, &g, TOL_GEODESIC).unwrap();
    }
}
