//! Robin eigenvalue problem `−(φ'' + Kφ) = λφ`, `−φ'(0) = κ₀φ(0)`,
//! `φ'(L) = κ_L φ(L)` along a free boundary geodesic.
//!
//! Eigenvalues come from shooting on the Prüfer angle `θ` (`φ = r sin θ`,
//! `φ' = r cos θ`), which obeys `θ' = cos²θ + (K + λ) sin²θ` and increases in
//! `λ`; the `n`-th eigenvalue is where `θ(L)` reaches `arccot κ_L + nπ`. A
//! finite-difference matrix eigensolve with Richardson extrapolation seeds the
//! brackets and cross-checks the result.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

use super::{check_geodesic, StabilityData, TOL_GEODESIC};
use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::numerics::simpson_uniform;
use crate::surface::DiskSurface;

/// Relative disagreement allowed between shooting and the matrix solve.
pub const SOLVER_AGREEMENT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct RobinSpectrum {
    pub length: f64,
    pub boundary_curvature: (f64, f64),
    /// Arclength nodes of the eigenfunction samples.
    pub s: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// `L²`-normalised; the first is positive, the others start positive.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    /// Extrapolated finite-difference eigenvalues.
    pub matrix_eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub tol_null: f64,
    data: StabilityData,
}

impl RobinSpectrum {
    fn step(&self) -> f64 {
        self.length / (self.s.len() - 1) as f64
    }

    /// Cubic Hermite interpolation of eigenfunction `i` at `s`.
    pub fn eigenfunction_at(&self, i: usize, s: f64) -> f64 {
        let h = self.step();
        let n = self.s.len() - 1;
        let x = (s / h).clamp(0.0, n as f64);
        let j = (x.floor() as usize).min(n - 1);
        let u = x - j as f64;
        let (f0, f1) = (self.eigenfunctions[i][j], self.eigenfunctions[i][j + 1]);
        let (d0, d1) = (self.derivatives[i][j] * h, self.derivatives[i][j + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        f0 * (2.0 * u3 - 3.0 * u2 + 1.0) + d0 * (u3 - 2.0 * u2 + u) + f1 * (-2.0 * u3 + 3.0 * u2) + d1 * (u3 - u2)
    }

    /// `sup |φᵢ'' + (K + λᵢ) φᵢ|` with a five-point second difference.
    pub fn ode_residual(&self, i: usize) -> f64 {
        let h = self.step();
        let f = &self.eigenfunctions[i];
        let n = f.len() - 1;
        (2..=n - 2)
            .map(|j| {
                let d2 = (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / (12.0 * h * h);
                (d2 + (self.data.gauss_at_node(j) + self.eigenvalues[i]) * f[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest of `|∂φ/∂η − κφ|` at the two endpoints.
    pub fn robin_residual(&self, i: usize) -> f64 {
        let (f, d) = (&self.eigenfunctions[i], &self.derivatives[i]);
        let n = f.len() - 1;
        let (k0, k1) = self.boundary_curvature;
        (-d[0] - k0 * f[0]).abs().max((d[n] - k1 * f[n]).abs())
    }

    /// Largest `|∫φᵢφⱼ − δᵢⱼ|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let h = self.step();
        let m = self.eigenvalues.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in i..m {
                let prod: Vec<f64> = self.eigenfunctions[i].iter().zip(&self.eigenfunctions[j]).map(|(a, b)| a * b).collect();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((simpson_uniform(h, &prod) - target).abs());
            }
        }
        worst
    }

    /// `Q(φᵢ, φᵢ)`, equal to `λᵢ` for a normalised eigenfunction.
    pub fn rayleigh(&self, i: usize) -> f64 {
        self.data.quadratic_form(&self.eigenfunctions[i], &self.derivatives[i])
    }
}

/// Finite-difference eigenvalues with ghost-point Robin rows, symmetrised by
/// halving the boundary rows.
fn matrix_eigenvalues(surface: &DiskSurface, chord: &Chord, kappa: (f64, f64), n: usize) -> Vec<f64> {
    let l = chord.length();
    let h = l / n as f64;
    let k: Vec<f64> = (0..=n).map(|j| surface.gaussian_curvature_unchecked(chord.point(h * j as f64))).collect();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let ih2 = 1.0 / (h * h);
    for j in 1..n {
        a[(j, j)] = 2.0 * ih2 - k[j];
        a[(j, j - 1)] = -ih2;
        a[(j, j + 1)] = -ih2;
    }
    a[(0, 0)] = ih2 - kappa.0 / h - 0.5 * k[0];
    a[(0, 1)] = -ih2;
    a[(n, n)] = ih2 - kappa.1 / h - 0.5 * k[n];
    a[(n, n - 1)] = -ih2;
    // B = diag(½, 1, …, 1, ½); solve B^{-1/2} A B^{-1/2}
    let w: Vec<f64> = (0..=n).map(|j| if j == 0 || j == n { 2f64.sqrt() } else { 1.0 }).collect();
    for i in 0..=n {
        for j in 0..=n {
            a[(i, j)] *= w[i] * w[j];
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Richardson-extrapolated finite-difference eigenvalues.
fn extrapolated_eigenvalues(surface: &DiskSurface, chord: &Chord, kappa: (f64, f64), k: usize) -> Vec<f64> {
    let n = 200.max(16 * k);
    let coarse = matrix_eigenvalues(surface, chord, kappa, n);
    let fine = matrix_eigenvalues(surface, chord, kappa, 2 * n);
    (0..k).map(|i| (4.0 * fine[i] - coarse[i]) / 3.0).collect()
}

/// `θ(L)` for spectral parameter `lambda`.
fn prufer_end(data: &StabilityData, lambda: f64) -> f64 {
    let h = data.step();
    let (k0, _) = data.boundary_curvature;
    let rhs = |theta: f64, k: f64| {
        let (s, c) = theta.sin_cos();
        c * c + (k + lambda) * s * s
    };
    let mut theta = 1f64.atan2(-k0);
    for j in 0..data.steps {
        let (ka, km, kb) = (data.gauss[2 * j], data.gauss[2 * j + 1], data.gauss[2 * j + 2]);
        let a = rhs(theta, ka);
        let b = rhs(theta + 0.5 * h * a, km);
        let c = rhs(theta + 0.5 * h * b, km);
        let d = rhs(theta + h * c, kb);
        theta += h * (a + 2.0 * b + 2.0 * c + d) / 6.0;
    }
    theta
}

/// `(φ, φ')` at the full nodes for spectral parameter `lambda`.
fn integrate_eigenfunction(data: &StabilityData, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let h = data.step();
    let (k0, _) = data.boundary_curvature;
    let theta0 = 1f64.atan2(-k0);
    let rhs = |y: [f64; 2], k: f64| [y[1], -(k + lambda) * y[0]];
    let mut y = [theta0.sin(), theta0.cos()];
    let mut f = vec![y[0]];
    let mut d = vec![y[1]];
    for j in 0..data.steps {
        let (ka, km, kb) = (data.gauss[2 * j], data.gauss[2 * j + 1], data.gauss[2 * j + 2]);
        let a = rhs(y, ka);
        let b = rhs([y[0] + 0.5 * h * a[0], y[1] + 0.5 * h * a[1]], km);
        let c = rhs([y[0] + 0.5 * h * b[0], y[1] + 0.5 * h * b[1]], km);
        let e = rhs([y[0] + h * c[0], y[1] + h * c[1]], kb);
        for i in 0..2 {
            y[i] += h * (a[i] + 2.0 * b[i] + 2.0 * c[i] + e[i]) / 6.0;
        }
        f.push(y[0]);
        d.push(y[1]);
    }
    (f, d)
}

fn shoot(data: &StabilityData, n: usize, seed: f64) -> Result<f64> {
    let target = 1f64.atan2(data.boundary_curvature.1) + n as f64 * PI;
    let g = |lambda: f64| prufer_end(data, lambda) - target;
    let mut width = 1e-3 * (1.0 + seed.abs());
    let (mut lo, mut hi) = (seed - width, seed + width);
    for _ in 0..60 {
        if g(lo) < 0.0 {
            break;
        }
        width *= 2.0;
        lo = seed - width;
    }
    width = 1e-3 * (1.0 + seed.abs());
    for _ in 0..60 {
        if g(hi) > 0.0 {
            break;
        }
        width *= 2.0;
        hi = seed + width;
    }
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::numeric(format!("no Prüfer bracket for eigenvalue {}", n + 1), seed));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The first `k` Robin eigenpairs along the geodesic `chord`.
pub fn robin_spectrum(surface: &DiskSurface, chord: &Chord, k: usize) -> Result<RobinSpectrum> {
    check_geodesic(surface, chord, TOL_GEODESIC)?;
    let k = k.max(1);
    let probe = StabilityData::new(surface, chord, 8);
    let kappa = probe.boundary_curvature;
    let seeds = extrapolated_eigenvalues(surface, chord, kappa, k);
    let kmax = probe.gauss.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let q = kmax + seeds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let steps = 2000.max((40.0 * chord.length() * q.sqrt()).ceil() as usize);
    let data = StabilityData::new(surface, chord, steps);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    let mut derivatives = Vec::with_capacity(k);
    let h = data.step();
    for (i, &seed) in seeds.iter().enumerate() {
        let lambda = shoot(&data, i, seed)?;
        if (lambda - seed).abs() > SOLVER_AGREEMENT * lambda.abs().max(1.0) {
            return Err(Error::numeric(format!("eigenvalue {}: shooting {lambda} against matrix {seed}", i + 1), (lambda - seed).abs()));
        }
        let (mut f, mut d) = integrate_eigenfunction(&data, lambda);
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        let norm = simpson_uniform(h, &sq).sqrt();
        // fix the sign by the first sample; the first eigenfunction is then positive
        let sign = if f[0] < 0.0 { -1.0 } else { 1.0 };
        for v in f.iter_mut().chain(d.iter_mut()) {
            *v *= sign / norm;
        }
        eigenvalues.push(lambda);
        eigenfunctions.push(f);
        derivatives.push(d);
    }
    let tol_null = 1e-6 * (1.0 + eigenvalues[0].abs());
    let index = eigenvalues.iter().filter(|&&l| l < -tol_null).count();
    let nullity = eigenvalues.iter().filter(|&&l| l.abs() <= tol_null).count();
    Ok(RobinSpectrum {
        length: data.length,
        boundary_curvature: kappa,
        s: (0..=data.steps).map(|j| h * j as f64).collect(),
        eigenvalues,
        eigenfunctions,
        derivatives,
        matrix_eigenvalues: seeds,
        index,
        nullity,
        tol_null,
        data,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseIndex {
    pub index: usize,
    pub nullity: usize,
    pub eigenvalues: Vec<f64>,
    /// Some eigenvalue lies within `10 tol_null` of zero: the metric is not
    /// bumpy at this geodesic.
    pub degenerate: bool,
    /// `Q(φᵢ, φᵢ)` for every negative direction.
    pub rayleigh: Vec<f64>,
}

/// Index and nullity of a free boundary geodesic, with every negative
/// direction confirmed by its Rayleigh quotient.
pub fn morse_index(surface: &DiskSurface, chord: &Chord) -> Result<MorseIndex> {
    let mut k = 4;
    let spec = loop {
        let spec = robin_spectrum(surface, chord, k)?;
        let last = *spec.eigenvalues.last().expect("k >= 1");
        if last > 10.0 * spec.tol_null || k >= 64 {
            break spec;
        }
        k *= 2;
    };
    let rayleigh: Vec<f64> = (0..spec.index).map(|i| spec.rayleigh(i)).collect();
    if let Some(q) = rayleigh.iter().find(|&&q| !(q < 0.0)) {
        return Err(Error::numeric("a negative eigenfunction has nonnegative second variation", *q));
    }
    let degenerate = spec.eigenvalues.iter().any(|l| l.abs() < 10.0 * spec.tol_null);
    Ok(MorseIndex { index: spec.index, nullity: spec.nullity, eigenvalues: spec.eigenvalues, degenerate, rayleigh })
}

/// `C_γ = max φ₁ / min φ₁`.
pub fn harnack_constant(spec: &RobinSpectrum) -> Result<f64> {
    let f = spec.eigenfunctions.first().ok_or_else(|| Error::Precondition("empty spectrum".into()))?;
    let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(lo > 0.0) {
        return Err(Error::numeric("first eigenfunction is not positive", lo));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bisect;
    use crate::surface::{ChartDomain, ConformalFactor};
    use approx::assert_abs_diff_eq;

    fn unit_disk() -> ChartDomain {
        DiskSurface::flat_disk(1.0).domain
    }

    #[test]
    fn flat_diameter_spectrum_oracles() {
        let s = DiskSurface::flat_disk(1.0);
        let d = Chord::diameter(&s, 0.7, 128).unwrap();
        let spec = robin_spectrum(&s, &d, 5).unwrap();
        // λ₁ = −μ², μ tanh μ = 1
        let mu1 = bisect(|m| m * m.tanh() - 1.0, 0.5, 2.0, 1e-15).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], -mu1 * mu1, epsilon = 1e-9);
        assert_abs_diff_eq!(spec.eigenvalues[1], 0.0, epsilon = 1e-9);
        // λ₃ = μ², μ tan μ = −1 on (π/2, π)
        let mu3 = bisect(|m| m * m.tan() + 1.0, PI / 2.0 + 1e-9, PI - 1e-9, 1e-15).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[2], mu3 * mu3, epsilon = 1e-8);
        for i in 0..5 {
            assert!(spec.ode_residual(i) < 1e-6, "ode {i}: {}", spec.ode_residual(i));
            assert!(spec.robin_residual(i) < 1e-6, "robin {i}: {}", spec.robin_residual(i));
            let rel = (spec.eigenvalues[i] - spec.matrix_eigenvalues[i]).abs() / spec.eigenvalues[i].abs().max(1.0);
            assert!(rel < 1e-5, "solver agreement {i}: {rel}");
        }
        assert!(spec.orthogonality_defect() < 1e-7);
        // second eigenfunction ∝ s − 1
        for (j, &x) in spec.s.iter().enumerate().step_by(97) {
            assert_abs_diff_eq!(spec.eigenfunctions[1][j], (x - 1.0) * (1.5f64).sqrt() * -1.0, epsilon = 1e-8);
        }
        assert_eq!((spec.index, spec.nullity), (1, 1));
        // φ₁ ∝ cosh(μ(s − 1))
        assert_abs_diff_eq!(harnack_constant(&spec).unwrap(), mu1.cosh(), epsilon = 1e-9);
    }

    #[test]
    fn ellipse_axes_have_index_one_and_two() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let minor = Chord::diameter(&s, PI / 2.0, 128).unwrap();
        let major = Chord::diameter(&s, 0.0, 128).unwrap();
        let a = morse_index(&s, &minor).unwrap();
        let b = morse_index(&s, &major).unwrap();
        assert_eq!((a.index, a.nullity), (1, 0));
        assert_eq!((b.index, b.nullity), (2, 0));
        assert!(!a.degenerate && !b.degenerate);
        assert!(a.rayleigh.iter().chain(&b.rayleigh).all(|q| *q < 0.0));
        for (q, l) in b.rayleigh.iter().zip(&b.eigenvalues) {
            assert_abs_diff_eq!(q, l, epsilon = 1e-5);
        }
    }

    #[test]
    fn diameter_is_flagged_degenerate() {
        let s = DiskSurface::flat_disk(1.0);
        let d = Chord::diameter(&s, 0.0, 128).unwrap();
        let m = morse_index(&s, &d).unwrap();
        assert_eq!((m.index, m.nullity), (1, 1));
        assert!(m.degenerate);
    }

    #[test]
    fn negatively_curved_preset_has_finite_harnack_constant() {
        let s = DiskSurface::conformal(unit_disk(), ConformalFactor::isotropic(0.3));
        let d = Chord::diameter(&s, 0.0, 256).unwrap();
        let spec = robin_spectrum(&s, &d, 4).unwrap();
        let c = harnack_constant(&spec).unwrap();
        assert!(c >= 1.0 && c.is_finite());
        for i in 0..4 {
            let rel = (spec.eigenvalues[i] - spec.matrix_eigenvalues[i]).abs() / spec.eigenvalues[i].abs().max(1.0);
            assert!(rel < 1e-5, "{i}: {rel}");
            assert!(spec.ode_residual(i) < 1e-6 && spec.robin_residual(i) < 1e-6);
        }
    }
}
