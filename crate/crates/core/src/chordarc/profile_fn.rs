//! Profile functions `φ(ζ, t)` for the auxiliary function and the
//! feasibility conditions on their amplitude.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::surface::DiskSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `c₀{sin((π−ε)ζ + ε/2) + 64(ζ−¼)³ sin(ε/2)} e^{−K₀t}` on `[0, ¼]`,
    /// without the cubic on `[¼, ½]`, mirrored about `½`.
    SineEps,
    /// `c₀ e^{−4π²τ − K₀t} sin(πζ)`.
    PureSine,
}

/// Time coordinates: `t` and `τ = ∫ dt / L²` with `L` twice the length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Clock {
    pub t: f64,
    pub tau: f64,
}

impl Clock {
    pub fn new(t: f64, tau: f64) -> Self {
        Self { t, tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileFunction {
    pub kind: ProfileKind,
    pub c0: f64,
    pub eps: f64,
    pub k0: f64,
}

impl ProfileFunction {
    pub fn sine_eps(c0: f64, eps: f64, k0: f64) -> Self {
        Self { kind: ProfileKind::SineEps, c0, eps, k0 }
    }

    pub fn pure_sine(c0: f64, k0: f64) -> Self {
        Self { kind: ProfileKind::PureSine, c0, eps: 0.0, k0 }
    }

    pub fn with_c0(&self, c0: f64) -> Self {
        Self { c0, ..*self }
    }

    /// The identically vanishing profile.
    pub fn zero() -> Self {
        Self::pure_sine(0.0, 0.0)
    }

    /// Spatial part with amplitude `c₀`, at time zero.
    pub fn spatial(&self, zeta: f64) -> ProfileJet {
        let (z, sign) = if zeta > 0.5 { (1.0 - zeta, -1.0) } else { (zeta, 1.0) };
        let c = self.c0;
        let (v, d1, d2) = match self.kind {
            ProfileKind::PureSine => ((PI * z).sin(), PI * (PI * z).cos(), -PI * PI * (PI * z).sin()),
            ProfileKind::SineEps => {
                let w = PI - self.eps;
                let arg = w * z + 0.5 * self.eps;
                let (s, co) = arg.sin_cos();
                let mut v = s;
                let mut d1 = w * co;
                let mut d2 = -w * w * s;
                if z < 0.25 {
                    let q = z - 0.25;
                    let se = (0.5 * self.eps).sin();
                    v += 64.0 * q * q * q * se;
                    d1 += 192.0 * q * q * se;
                    d2 += 384.0 * q * se;
                }
                (v, d1, d2)
            }
        };
        ProfileJet { value: c * v, d1: sign * c * d1, d2: c * d2 }
    }

    pub fn time_factor(&self, clock: Clock) -> f64 {
        match self.kind {
            ProfileKind::SineEps => (-self.k0 * clock.t).exp(),
            ProfileKind::PureSine => (-4.0 * PI * PI * clock.tau - self.k0 * clock.t).exp(),
        }
    }

    pub fn jet(&self, zeta: f64, clock: Clock) -> ProfileJet {
        let j = self.spatial(zeta);
        let f = self.time_factor(clock);
        ProfileJet { value: j.value * f, d1: j.d1 * f, d2: j.d2 * f }
    }

    pub fn value(&self, zeta: f64, clock: Clock) -> f64 {
        self.jet(zeta, clock).value
    }

    /// `∂_t φ` given the current doubled length `big_l` (which fixes
    /// `τ'(t) = 1/L²`).
    pub fn time_derivative(&self, zeta: f64, clock: Clock, big_l: f64) -> f64 {
        let v = self.value(zeta, clock);
        match self.kind {
            ProfileKind::SineEps => -self.k0 * v,
            ProfileKind::PureSine => -(4.0 * PI * PI / (big_l * big_l) + self.k0) * v,
        }
    }

    /// `c₀{(π−ε) + 12 sin(ε/2)}`, an upper bound for `|∂_ζ φ|`.
    pub fn derivative_bound(&self) -> f64 {
        match self.kind {
            ProfileKind::SineEps => self.c0 * ((PI - self.eps) + 12.0 * (0.5 * self.eps).sin()),
            ProfileKind::PureSine => self.c0 * PI,
        }
    }
}

/// Dense-sampling audit of the shape conditions: symmetry defect, maximal
/// `|φ'|`, maximal `φ''` (negative for strict concavity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeAudit {
    pub symmetry_defect: f64,
    pub max_slope: f64,
    pub max_second: f64,
}

pub fn shape_audit(phi: &ProfileFunction, samples: usize) -> ShapeAudit {
    let clock = Clock::default();
    let mut out = ShapeAudit { symmetry_defect: 0.0, max_slope: 0.0, max_second: f64::NEG_INFINITY };
    for k in 1..samples {
        let z = k as f64 / samples as f64;
        let j = phi.jet(z, clock);
        out.symmetry_defect = out.symmetry_defect.max((j.value - phi.value(1.0 - z, clock)).abs());
        out.max_slope = out.max_slope.max(j.d1.abs());
        out.max_second = out.max_second.max(j.d2);
    }
    out
}

/// `min_{ζ ∈ (0, ½]} (φ − φ'ζ)`, the weight of `∫κ²` in the evolution
/// inequality. Nonnegative for concave profiles vanishing at zero.
pub fn min_dissipation_weight(phi: &ProfileFunction, samples: usize) -> f64 {
    (1..=samples)
        .map(|k| {
            let z = 0.5 * k as f64 / samples as f64;
            let j = phi.spatial(z);
            j.value - j.d1 * z
        })
        .fold(f64::INFINITY, f64::min)
}

/// `(π−ε) cos((π−ε)/4 + ε/2) > 12 sin(ε/2)`.
pub fn slope_condition(eps: f64) -> bool {
    (PI - eps) * ((PI - eps) / 4.0 + 0.5 * eps).cos() > 12.0 * (0.5 * eps).sin()
}

/// `min_{ζ ∈ [0, ¼]} (cos⁻¹φ' − ε/2)² − (π−ε)²ζ²` and
/// `min_{ζ ∈ [0, ¼]} cos⁻¹φ' − ε/2` at time zero.
pub fn angle_margins(phi: &ProfileFunction, samples: usize) -> (f64, f64) {
    let w = PI - phi.eps;
    let mut margin = f64::INFINITY;
    let mut angle = f64::INFINITY;
    for k in 0..=samples {
        let z = 0.25 * k as f64 / samples as f64;
        let d1 = phi.spatial(z).d1;
        if d1.abs() >= 1.0 {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let beta = d1.acos() - 0.5 * phi.eps;
        angle = angle.min(beta);
        margin = margin.min(beta * beta - w * w * z * z);
    }
    (margin, angle)
}

fn feasible(eps: f64, c0: f64) -> bool {
    let phi = ProfileFunction::sine_eps(c0, eps, 0.0);
    let (margin, angle) = angle_margins(&phi, 2048);
    margin >= 1.0 && angle >= 0.0
}

/// Largest amplitude for which the sine-ε profile meets both angle
/// conditions on `[0, ¼]`: halving from 1 until feasible, then bisection.
pub fn admissible_c0(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < PI / 20.0) {
        return Err(Error::Precondition(format!("ε = {eps} outside (0, π/20)")));
    }
    let mut lo = 1.0;
    while !feasible(eps, lo) {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::Precondition(format!("no admissible amplitude for ε = {eps}")));
        }
    }
    let mut hi = 2.0 * lo;
    if feasible(eps, hi) {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(eps, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `ε₁ = min(ε₀, L₀, 2/(C′K₀), π/20)`; the `K₀ = 0` term is infinite.
pub fn epsilon_one(surface: &DiskSurface, eps0: f64) -> f64 {
    let c = surface.constants();
    let curvature_term = if c.k0 > 0.0 { 2.0 / (c.isoperimetric * c.k0) } else { f64::INFINITY };
    eps0.min(c.isoperimetric_length).min(curvature_term).min(PI / 20.0)
}

/// A smallness hypothesis `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub lhs: f64,
    pub rhs: f64,
}

impl Hypothesis {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// `L(1 + C) <= min(ε/100, L₀/3)` with `C` the boundary curvature supremum.
pub fn shrinking_hypothesis(surface: &DiskSurface, length: f64, eps: f64) -> Hypothesis {
    let c = surface.constants();
    Hypothesis { lhs: length * (1.0 + c.boundary_curvature_sup), rhs: (eps / 100.0).min(c.isoperimetric_length / 3.0) }
}

/// `L(1 + C) <= min(ε/100, |∂N|/8)`, the hypothesis of the boundary turning
/// bound. The global supremum of the boundary curvature stands in for the
/// local one, which only makes the test stricter.
pub fn turning_hypothesis(surface: &DiskSurface, length: f64, eps: f64) -> Hypothesis {
    let c = surface.constants();
    Hypothesis { lhs: length * (1.0 + c.boundary_curvature_sup), rhs: (eps / 100.0).min(c.boundary_length / 8.0) }
}
