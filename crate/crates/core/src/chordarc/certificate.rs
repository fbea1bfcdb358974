//! Second-variation certificates at zero minima of `Z`.
//!
//! At a zero minimum the realising (possibly broken) geodesic `α` from
//! `γ(x)` to `γ(y)` satisfies, with `u₀ = α'(0)/d`, `u₁ = α'(1)/d`,
//! `ν = −JT` and `κ = ⟨∇_T T, ν⟩`,
//!
//! ```text
//! 0 <= −4φ''/L − κ(x)⟨u₀, ν(x)⟩ + κ(y)⟨u₁, ν(y)⟩ − (1 − φ'²) ∫_α K
//!      − 2(1 − φ'²) κ^∂(z) / sin θ₀          (reflected pairs only)
//! ```
//!
//! where `sin θ₀ = ½⟨α'₊ − α'₋, N⟩/d` at the reflection point `z`. Both
//! curvature products are invariant under reversing the chord, so copy
//! labels never change them.

use super::pairs::{critical_c0, minimize_z, CompletedPair, PairClass, PairDistance, ProfileOptions};
use super::profile_fn::{Clock, ProfileFunction, ProfileJet};
use crate::curve::{segments_cross, Chord};
use crate::error::{Error, Result};
use crate::geodesy::{self, BrokenPoint, GeodesicPath};
use crate::surface::DiskSurface;
use crate::types::Point;

/// Relative zero tolerance for `min Z`.
pub const TOL_ZERO: f64 = 1e-6;
/// Relative certificate tolerance.
pub const TOL_CERT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CertificateTerms {
    /// `−4φ''/L`.
    pub profile: f64,
    /// `−κ(x)⟨u₀, ν(x)⟩`.
    pub curvature_x: f64,
    /// `κ(y)⟨u₁, ν(y)⟩`.
    pub curvature_y: f64,
    /// `−(1 − φ'²) ∫_α K`.
    pub gauss: f64,
    /// `−2(1 − φ'²) κ^∂(z)/sin θ₀`; zero for classical pairs.
    pub boundary: f64,
}

impl CertificateTerms {
    pub fn sum(&self) -> f64 {
        self.profile + self.curvature_x + self.curvature_y + self.gauss + self.boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub pair: CompletedPair,
    /// Completed length `L = 2|γ|`.
    pub big_l: f64,
    /// Length of the realising path.
    pub d: f64,
    pub z_value: f64,
    pub jet: ProfileJet,
    pub terms: CertificateTerms,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
    /// `(⟨T̄(x), u₀⟩ − φ', ⟨T̄(y), u₁⟩ − φ')`, `T̄` the completed tangent.
    /// Both vanish at a critical pair.
    pub first_order: (f64, f64),
    pub gauss_integral: f64,
    pub reflection: Option<BrokenPoint>,
    /// An interior crossing between `α` and the completed arc.
    pub intersects: bool,
}

impl Certificate {
    pub fn reflection_defect(&self) -> Option<f64> {
        self.reflection.as_ref().map(|b| b.reflection_defect())
    }

    pub fn theta0(&self) -> Option<f64> {
        self.reflection.as_ref().map(|b| b.theta0)
    }

    /// `−κ^∂/sin θ₀`, the boundary term with the factor `2(1 − φ'²)` dropped.
    pub fn boundary_term_without_factor(&self) -> f64 {
        let w = 2.0 * (1.0 - self.jet.d1 * self.jet.d1);
        if w == 0.0 { 0.0 } else { self.terms.boundary / w }
    }
}

/// `∫ K ds` along path samples by the trapezoid rule, leg by leg.
pub fn path_curvature_integral(surface: &DiskSurface, path: &GeodesicPath) -> f64 {
    if surface.is_flat() || path.samples.len() < 2 {
        return 0.0;
    }
    let n = path.samples.len();
    let k: Vec<f64> = path.samples.iter().map(|p| surface.gaussian_curvature_unchecked(*p)).collect();
    let leg = |a: usize, b: usize| -> f64 { (a..b).map(|i| 0.5 * (k[i] + k[i + 1]) * (path.arclength[i + 1] - path.arclength[i])).sum() };
    match path.break_index {
        Some(b) => leg(0, b) + leg(b, n - 1),
        None => leg(0, n - 1),
    }
}

fn chord_polyline(chord: &Chord, a: f64, b: f64) -> Vec<Point> {
    let n = ((chord.len() as f64 * (b - a).abs() / chord.length()).ceil() as usize).max(16) * 2;
    (0..=n).map(|k| chord.point(a + (b - a) * k as f64 / n as f64)).collect()
}

/// Interior crossings between polylines `a` and `b`, ignoring segment pairs
/// that share an endpoint in `shared` or that both touch the boundary.
fn polylines_cross(surface: &DiskSurface, a: &[Point], b: &[Point], shared: &[Point]) -> bool {
    let near = |p: Point| shared.iter().any(|s| (p - s).norm() < 1e-12);
    let on_boundary = |p: Point| surface.domain.level(p) > -1e-9;
    for i in 0..a.len().saturating_sub(1) {
        let (a0, a1) = (a[i], a[i + 1]);
        let (lo, hi) = (Point::new(a0.x.min(a1.x), a0.y.min(a1.y)), Point::new(a0.x.max(a1.x), a0.y.max(a1.y)));
        for j in 0..b.len().saturating_sub(1) {
            let (b0, b1) = (b[j], b[j + 1]);
            if b0.x.max(b1.x) < lo.x || b0.x.min(b1.x) > hi.x || b0.y.max(b1.y) < lo.y || b0.y.min(b1.y) > hi.y {
                continue;
            }
            let share = (near(a0) || near(a1)) && (near(b0) || near(b1));
            let touch = (on_boundary(a0) || on_boundary(a1)) && (on_boundary(b0) || on_boundary(b1));
            if share || touch {
                continue;
            }
            if segments_cross(a0, a1, b0, b1) {
                return true;
            }
        }
    }
    false
}

/// The path realising the completed distance of `pair`.
pub fn realising_path(surface: &DiskSurface, chord: &Chord, pair: &CompletedPair) -> Result<GeodesicPath> {
    let (p, q) = (chord.point(pair.x.s), chord.point(pair.y.s));
    if pair.x.sign == pair.y.sign {
        return geodesy::geodesic_between(surface, p, q);
    }
    let refl = geodesy::reflected_distance(surface, p, q)?;
    geodesy::reflected_path(surface, p, q, &refl)
}

/// Evaluates every term of the certificate inequality at `pair`, whether or
/// not `Z` vanishes there.
pub fn evaluate_certificate(
    surface: &DiskSurface,
    chord: &Chord,
    pair: &CompletedPair,
    phi: &ProfileFunction,
    clock: Clock,
    tolerance: f64,
) -> Result<Certificate> {
    let len = chord.length();
    let big_l = 2.0 * len;
    let (x, y) = (pair.x, pair.y);
    let (p, q) = (chord.point(x.s), chord.point(y.s));
    let reflected = x.sign != y.sign;
    if reflected && (x.s <= 0.0 || x.s >= len || y.s <= 0.0 || y.s >= len) {
        return Err(Error::Degenerate("reflected pair with an endpoint of the chord".into()));
    }
    let path = realising_path(surface, chord, pair)?;
    let d = path.length();
    let jet = phi.jet(pair.l / big_l, clock);
    let u0 = path.start_direction();
    let u1 = path.end_direction();
    let tx = chord.tangent(surface, x.s)? * x.sign as f64;
    let ty = chord.tangent(surface, y.s)? * y.sign as f64;
    let first_order = (surface.inner(p, tx, u0) - jet.d1, surface.inner(q, ty, u1) - jet.d1);
    let kx = chord.curvature(surface, x.s)?;
    let ky = chord.curvature(surface, y.s)?;
    let nx = chord.normal(surface, x.s)?;
    let ny = chord.normal(surface, y.s)?;
    let gauss_integral = path_curvature_integral(surface, &path);
    let slack = 1.0 - jet.d1 * jet.d1;
    let boundary = match &path.broken_at {
        Some(b) => {
            let sin0 = 0.5 * surface.inner(b.point, b.outgoing - b.incoming, b.inward_normal);
            if !(sin0 > 0.0) {
                return Err(Error::Degenerate(format!("reflection angle sin θ₀ = {sin0}")));
            }
            -2.0 * slack * surface.boundary_curvature_at_param(b.param) / sin0
        }
        None => 0.0,
    };
    let terms = CertificateTerms {
        profile: -4.0 * jet.d2 / big_l,
        curvature_x: -kx * surface.inner(p, u0, nx),
        curvature_y: ky * surface.inner(q, u1, ny),
        gauss: -slack * gauss_integral,
        boundary,
    };
    let rhs = terms.sum();
    let intersects = match (pair.class, path.break_index) {
        (PairClass::Classical, _) | (_, None) => polylines_cross(surface, &path.samples, &chord_polyline(chord, x.s, y.s), &[p, q]),
        (PairClass::ThroughStart, Some(k)) => {
            polylines_cross(surface, &path.samples[..=k], &chord_polyline(chord, x.s, 0.0), &[p])
                || polylines_cross(surface, &path.samples[k..], &chord_polyline(chord, 0.0, y.s), &[q])
        }
        (PairClass::ThroughEnd, Some(k)) => {
            polylines_cross(surface, &path.samples[..=k], &chord_polyline(chord, x.s, len), &[p])
                || polylines_cross(surface, &path.samples[k..], &chord_polyline(chord, len, y.s), &[q])
        }
    };
    Ok(Certificate {
        pair: CompletedPair { d, ..*pair },
        big_l,
        d,
        z_value: d - big_l * jet.value,
        jet,
        terms,
        rhs,
        tolerance,
        holds: rhs >= -tolerance,
        first_order,
        gauss_integral,
        reflection: path.broken_at,
        intersects,
    })
}

/// Locates the minimiser of `Z`, checks that the minimum is zero and
/// evaluates the certificate there.
pub fn certify_minimizer(surface: &DiskSurface, chord: &Chord, phi: &ProfileFunction, clock: Clock, opts: &ProfileOptions) -> Result<Certificate> {
    let len = chord.length();
    let pd = PairDistance::new(surface, chord, opts.table_size)?;
    let min = minimize_z(&pd, phi, clock, opts)?;
    if min.at_smallest_separation {
        return Err(Error::Degenerate("the minimum of Z sits at the diagonal".into()));
    }
    if min.value.abs() > TOL_ZERO * len {
        return Err(Error::Precondition(format!("min Z = {:e} is not zero within {:e}", min.value, TOL_ZERO * len)));
    }
    evaluate_certificate(surface, chord, &min.pair, phi, clock, TOL_CERT * len)
}

/// The critical amplitude of `shape` on `chord`, recomputed with the exact
/// realising path so that `Z` vanishes at the returned pair.
pub fn engineer_zero_minimum(pd: &PairDistance, shape: &ProfileFunction, opts: &ProfileOptions) -> Result<(ProfileFunction, CompletedPair)> {
    let crit = critical_c0(pd, shape, opts)?;
    let path = realising_path(pd.surface(), pd.chord(), &crit.pair)?;
    let big_l = 2.0 * pd.chord().length();
    let w = big_l * shape.with_c0(1.0).spatial(crit.pair.l / big_l).value;
    let c0 = path.length() / w;
    Ok((shape.with_c0(c0), CompletedPair { d: path.length(), ..crit.pair }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CompletedPoint;
    use crate::surface::{ChartDomain, ConformalFactor};
    use std::f64::consts::PI;

    fn u_chord(s: &DiskSurface) -> Chord {
        let f = |u: f64| {
            let th = 0.5 + (2.0 * PI - 1.0) * (3.0 * u * u - 2.0 * u * u * u);
            let r = 1.0 - 0.7 * (PI * u).sin();
            Point::new(r * th.cos(), r * th.sin())
        };
        Chord::from_fn(s, f, 256).unwrap()
    }

    fn arch_chord(s: &DiskSurface) -> Chord {
        let f = |u: f64| {
            let th = -0.8 + 1.6 * (3.0 * u * u - 2.0 * u * u * u);
            let r = 1.0 - 0.1 * (PI * u).sin();
            Point::new(r * th.cos(), r * th.sin())
        };
        Chord::from_fn(s, f, 256).unwrap()
    }

    #[test]
    fn circular_arc_matches_the_closed_form() {
        // Arc of the circle orthogonal to the unit circle, centred at
        // (sqrt(1 + r²), 0) with radius r.
        let s = DiskSurface::flat_disk(1.0);
        let r: f64 = 0.8;
        let c = (1.0 + r * r).sqrt();
        let a = PI - (1.0f64).atan2(r);
        let arc = |u: f64| {
            let w = a + (2.0 * (PI - a)) * u;
            Point::new(c + r * w.cos(), r * w.sin())
        };
        let chord = Chord::from_fn(&s, arc, 512).unwrap();
        let len = chord.length();
        assert!((len - 2.0 * r * (PI - a)).abs() < 1e-8);
        let big_l = 2.0 * len;
        let l = 0.6 * len;
        let x = CompletedPoint::new(0.2 * len, 1, len);
        let y = CompletedPoint::new(0.8 * len, 1, len);
        let zeta = l / big_l;
        // amplitude making the first-order conditions hold
        let c0 = (l / (2.0 * r)).cos() / (PI * (PI * zeta).cos());
        let phi = ProfileFunction::pure_sine(c0, 0.0);
        let pair = CompletedPair { class: PairClass::Classical, t: 0.0, x, y, l, d: 0.0 };
        let cert = evaluate_certificate(&s, &chord, &pair, &phi, Clock::default(), 1e-6).unwrap();
        let expected = 4.0 * c0 * PI * PI * (PI * zeta).sin() / big_l - 2.0 * (l / (2.0 * r)).sin() / r;
        assert!((cert.rhs - expected).abs() < 1e-6, "{} vs {expected}", cert.rhs);
        assert!(cert.first_order.0.abs() < 1e-7 && cert.first_order.1.abs() < 1e-7);
        assert!((cert.d - 2.0 * r * (l / (2.0 * r)).sin()).abs() < 1e-10);
        assert!(!cert.intersects);
    }

    #[test]
    fn straight_chord_certificate_is_the_profile_term() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = Chord::diameter(&s, 0.2, 128).unwrap();
        let phi = ProfileFunction::pure_sine(0.05, 0.0);
        let pair = CompletedPair { class: PairClass::Classical, t: 0.0, x: CompletedPoint::new(0.5, 1, 2.0), y: CompletedPoint::new(1.5, 1, 2.0), l: 1.0, d: 0.0 };
        let cert = evaluate_certificate(&s, &chord, &pair, &phi, Clock::default(), 1e-6).unwrap();
        assert!(cert.terms.curvature_x.abs() < 1e-8 && cert.terms.curvature_y.abs() < 1e-8);
        assert!((cert.rhs + 4.0 * phi.spatial(0.25).d2 / 4.0).abs() < 1e-8);
        assert!(cert.rhs > 0.0);
    }

    #[test]
    fn classical_zero_minimum_is_certified() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = u_chord(&s);
        let opts = ProfileOptions { n_delta: 64, n_pairs: 64, ..Default::default() };
        let pd = PairDistance::new(&s, &chord, 0).unwrap();
        let (phi, pair) = engineer_zero_minimum(&pd, &ProfileFunction::pure_sine(1.0, 0.0), &opts).unwrap();
        assert!(!pair.reflected());
        let cert = certify_minimizer(&s, &chord, &phi, Clock::default(), &opts).unwrap();
        assert!(cert.holds, "{cert:?}");
        assert!(!cert.intersects);
        assert!(cert.first_order.0.abs() < 1e-4 && cert.first_order.1.abs() < 1e-4, "{:?}", cert.first_order);
    }

    #[test]
    fn reflected_zero_minimum_obeys_the_reflection_law() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = arch_chord(&s);
        let opts = ProfileOptions { n_delta: 64, n_pairs: 64, ..Default::default() };
        let pd = PairDistance::new(&s, &chord, 0).unwrap();
        let (phi, pair) = engineer_zero_minimum(&pd, &ProfileFunction::pure_sine(1.0, 0.0), &opts).unwrap();
        assert!(pair.reflected());
        let cert = certify_minimizer(&s, &chord, &phi, Clock::default(), &opts).unwrap();
        assert!(cert.holds, "{cert:?}");
        assert!(cert.reflection_defect().unwrap() < 1e-6);
        assert!(!cert.intersects);
        assert!(cert.terms.boundary < 0.0);
    }

    #[test]
    fn conformal_zero_minimum_is_certified() {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.1));
        let chord = u_chord(&s);
        let opts = ProfileOptions { n_delta: 16, n_pairs: 16, refine: true, table_size: 16 };
        let pd = PairDistance::new(&s, &chord, opts.table_size).unwrap();
        let (phi, pair) = engineer_zero_minimum(&pd, &ProfileFunction::pure_sine(1.0, 0.0), &opts).unwrap();
        let cert = evaluate_certificate(&s, &chord, &pair, &phi, Clock::default(), TOL_CERT * chord.length()).unwrap();
        assert!(cert.z_value.abs() < 1e-12);
        assert!(cert.gauss_integral < 0.0);
        assert!(cert.holds, "{cert:?}");
        assert!(!cert.intersects);
    }

    #[test]
    fn positive_minimum_is_rejected() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = u_chord(&s);
        let opts = ProfileOptions { n_delta: 32, n_pairs: 32, ..Default::default() };
        let err = certify_minimizer(&s, &chord, &ProfileFunction::pure_sine(0.01, 0.0), Clock::default(), &opts).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_) | Error::Precondition(_)));
    }
}
