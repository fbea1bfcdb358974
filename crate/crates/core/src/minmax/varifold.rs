//! A computable stand-in for the varifold F-metric: the supremum of
//! `|∫f dV − ∫f dW|` over a fixed dictionary of bounded Lipschitz functions
//! on position × unoriented direction. It is a pseudo-metric and a lower
//! bound for the true distance on the dictionary's span, nothing more.

use serde::Serialize;

use crate::curve::Chord;
use crate::surface::DiskSurface;
use crate::types::Point;

/// Direction angles in the dictionary.
pub const DIRECTIONS: usize = 16;
/// Position profiles in the dictionary.
pub const PROFILES: usize = 4;
/// Dictionary size.
pub const DICTIONARY_SIZE: usize = DIRECTIONS * PROFILES;

/// Minimum samples for a curve entering the surrogate.
pub const MIN_SAMPLES: usize = 128;

/// The moments `∫ p_m(x) (cos 2θ, sin 2θ) dV` that determine every
/// dictionary integral, `p ∈ {1, x/R, y/R, |x|²/R² − ½}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Varifold {
    pub moments: [[f64; 2]; PROFILES],
    pub mass: f64,
    /// Chart position of a point curve; `None` for curves of positive length.
    pub point: Option<[f64; 2]>,
}

impl Varifold {
    /// The zero varifold of a point curve, tagged with its position.
    pub fn point_curve(p: Point) -> Self {
        Self { moments: [[0.0; 2]; PROFILES], mass: 0.0, point: Some([p.x, p.y]) }
    }

    /// Sums over the segments of the polyline, each segment weighted by its
    /// metric length and evaluated at its chart midpoint. The sum runs in a
    /// canonical orientation so that a reversed curve gives identical bits.
    pub fn from_points(surface: &DiskSurface, pts: &[Point]) -> Self {
        let n = pts.len();
        if n < 2 {
            return Self::point_curve(pts.first().copied().unwrap_or_else(Point::zeros));
        }
        let forward = (pts[0].x, pts[0].y) <= (pts[n - 1].x, pts[n - 1].y);
        let r = scale(surface);
        let mut moments = [[0.0; 2]; PROFILES];
        let mut mass = 0.0;
        for k in 0..n - 1 {
            let (a, b) = if forward { (pts[k], pts[k + 1]) } else { (pts[n - 1 - k], pts[n - 2 - k]) };
            let d = b - a;
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let w = surface.segment_length(a, b);
            let (ux, uy) = (d.x / len, d.y / len);
            let (c2, s2) = (ux * ux - uy * uy, 2.0 * ux * uy);
            let m = (a + b) * 0.5;
            for (p, mom) in profiles(m, r).iter().zip(moments.iter_mut()) {
                mom[0] += w * p * c2;
                mom[1] += w * p * s2;
            }
            mass += w;
        }
        Self { moments, mass, point: None }
    }

    pub fn from_chord(surface: &DiskSurface, chord: &Chord) -> Self {
        Self::from_points(surface, chord.samples())
    }

    /// `∫ f_k dV` for dictionary entry `k = direction · PROFILES + profile`.
    pub fn integral(&self, k: usize) -> f64 {
        let (j, m) = (k / PROFILES, k % PROFILES);
        let theta = std::f64::consts::PI * j as f64 / DIRECTIONS as f64;
        let (s, c) = (2.0 * theta).sin_cos();
        0.5 * (self.moments[m][0] * c + self.moments[m][1] * s)
    }
}

fn scale(surface: &DiskSurface) -> f64 {
    let (a, b) = surface.domain.semi_axes();
    a.max(b)
}

fn profiles(x: Point, r: f64) -> [f64; PROFILES] {
    let (u, v) = (x.x / r, x.y / r);
    [1.0, u, v, u * u + v * v - 0.5]
}

/// `sup_k |∫f_k dV − ∫f_k dW|` over the dictionary.
pub fn f_distance(v: &Varifold, w: &Varifold) -> f64 {
    (0..DICTIONARY_SIZE).map(|k| (v.integral(k) - w.integral(k)).abs()).fold(0.0, f64::max)
}

/// [`f_distance`] between two chords.
pub fn chord_distance(surface: &DiskSurface, a: &Chord, b: &Chord) -> f64 {
    f_distance(&Varifold::from_chord(surface, a), &Varifold::from_chord(surface, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disk() -> DiskSurface {
        DiskSurface::flat_disk(1.0)
    }

    #[test]
    fn identical_and_reversed_curves_are_at_distance_zero() {
        let s = disk();
        let d = Chord::diameter(&s, 0.4, 256).unwrap();
        assert_eq!(chord_distance(&s, &d, &d), 0.0);
        assert_eq!(chord_distance(&s, &d, &d.reversed(&s).unwrap()), 0.0);
    }

    #[test]
    fn rotated_diameters_move_apart_monotonically() {
        let s = disk();
        let d0 = Chord::diameter(&s, 0.0, 256).unwrap();
        let dist: Vec<f64> = (1..=16)
            .map(|k| {
                let a = std::f64::consts::FRAC_PI_2 * k as f64 / 16.0;
                chord_distance(&s, &d0, &Chord::diameter(&s, a, 256).unwrap())
            })
            .collect();
        assert!(chord_distance(&s, &d0, &Chord::diameter(&s, 0.1, 256).unwrap()) > 0.0);
        assert!(dist.windows(2).all(|w| w[1] > w[0]), "{dist:?}");
    }

    #[test]
    fn point_curves_are_zero_varifolds() {
        let s = disk();
        let p = Varifold::point_curve(Point::new(1.0, 0.0));
        let q = Varifold::point_curve(Point::new(0.0, 1.0));
        assert_eq!(f_distance(&p, &q), 0.0);
        let d = Varifold::from_chord(&s, &Chord::diameter(&s, 0.0, 256).unwrap());
        // the direction-only entries recover half the mass of a straight chord
        assert!((f_distance(&p, &d) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pseudo_metric_axioms(o1 in -0.9f64..0.9, o2 in -0.9f64..0.9, o3 in -0.9f64..0.9, a1 in 0.0f64..3.14, a2 in 0.0f64..3.14, a3 in 0.0f64..3.14) {
            let s = disk();
            let v: Vec<Varifold> = [(a1, o1), (a2, o2), (a3, o3)]
                .iter()
                .map(|&(a, o)| Varifold::from_chord(&s, &Chord::line(&s, a, o, 128).unwrap()))
                .collect();
            let d = |i: usize, j: usize| f_distance(&v[i], &v[j]);
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert_eq!(d(0, 0), 0.0);
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        }
    }
}
