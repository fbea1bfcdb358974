//! Completed pairs on the formal double of a chord, their distances, the
//! completed chord-arc profile and the auxiliary function `Z`.

use rayon::prelude::*;

use super::profile_fn::{Clock, ProfileFunction};
use crate::curve::{completed_arclength_for, Chord, CompletedPoint};
use crate::error::{Error, Result};
use crate::geodesy::{self, BoundaryProfile, Reflection, Refine, BOUNDARY_SCAN};
use crate::numerics::golden_section;
use crate::surface::DiskSurface;

/// Which part of the double a pair of separation `δ` lives on.
///
/// Pairs are parametrised by `t` and `δ`:
/// classical `x = t(L−δ)`, `y = x + δ` on the same copy;
/// through the start `x = tδ` on copy −, `y = δ − x` on copy +;
/// through the end `x = L − tδ` on copy +, `y = L − (1−t)δ` on copy −.
/// In every case `x` precedes `y` along the completed orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    Classical,
    ThroughStart,
    ThroughEnd,
}

impl PairClass {
    pub const ALL: [PairClass; 3] = [PairClass::Classical, PairClass::ThroughStart, PairClass::ThroughEnd];

    pub fn is_reflected(self) -> bool {
        self != PairClass::Classical
    }

    /// Upper end of the `t` range; reflected pairs are symmetric in `t ↔ 1−t`.
    pub fn t_max(self) -> f64 {
        if self.is_reflected() { 0.5 } else { 1.0 }
    }

    /// Arclength positions and copy labels of the pair.
    pub fn points(self, t: f64, delta: f64, length: f64) -> (CompletedPoint, CompletedPoint) {
        let l = length;
        match self {
            PairClass::Classical => {
                let x = t * (l - delta);
                (CompletedPoint::new(x, 1, l), CompletedPoint::new(x + delta, 1, l))
            }
            PairClass::ThroughStart => {
                let x = t * delta;
                (CompletedPoint::new(x, -1, l), CompletedPoint::new(delta - x, 1, l))
            }
            PairClass::ThroughEnd => {
                (CompletedPoint::new(l - t * delta, 1, l), CompletedPoint::new(l - (1.0 - t) * delta, -1, l))
            }
        }
    }
}

/// A pair of completed points with its completed arclength and distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletedPair {
    pub class: PairClass,
    pub t: f64,
    pub x: CompletedPoint,
    pub y: CompletedPoint,
    /// Completed arclength `l`.
    pub l: f64,
    /// Completed distance `d`.
    pub d: f64,
}

impl CompletedPair {
    pub fn reflected(&self) -> bool {
        self.class.is_reflected()
    }
}

/// Boundary distance profiles at uniformly spaced chord samples,
/// interpolated along the chord.
struct ReflectionTable {
    step: f64,
    rows: Vec<BoundaryProfile>,
}

impl ReflectionTable {
    fn new(surface: &DiskSurface, chord: &Chord, size: usize) -> Result<Self> {
        let m = size.max(4);
        let step = chord.length() / m as f64;
        let rows = (0..=m)
            .into_par_iter()
            .map(|k| BoundaryProfile::new(surface, chord.point(step * k as f64), BOUNDARY_SCAN))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, rows })
    }

    fn profile(&self, chord: &Chord, s: f64) -> BoundaryProfile {
        let m = self.rows.len() - 1;
        let x = (s / self.step).clamp(0.0, m as f64);
        let i = (x.floor() as usize).clamp(1, m - 2) - 1;
        let nodes: Vec<f64> = (i..i + 4).map(|k| k as f64).collect();
        let weights: Vec<f64> = (0..4)
            .map(|a| (0..4).filter(|&b| b != a).map(|b| (x - nodes[b]) / (nodes[a] - nodes[b])).product())
            .collect();
        let len = self.rows[0].len();
        let values = (0..len).map(|j| (0..4).map(|a| weights[a] * self.rows[i + a].values[j]).sum()).collect();
        BoundaryProfile { origin: chord.point(s), values }
    }
}

/// Distances between points of a fixed chord.
pub struct PairDistance<'a> {
    surface: &'a DiskSurface,
    chord: &'a Chord,
    table: Option<ReflectionTable>,
}

impl<'a> PairDistance<'a> {
    /// Curved metrics precompute `table_size + 1` boundary profiles.
    pub fn new(surface: &'a DiskSurface, chord: &'a Chord, table_size: usize) -> Result<Self> {
        let table = if surface.is_flat() { None } else { Some(ReflectionTable::new(surface, chord, table_size)?) };
        Ok(Self { surface, chord, table })
    }

    pub fn surface(&self) -> &DiskSurface {
        self.surface
    }

    pub fn chord(&self) -> &Chord {
        self.chord
    }

    pub fn classical(&self, s1: f64, s2: f64) -> Result<f64> {
        if s1 == s2 {
            return Ok(0.0);
        }
        let (p, q) = (self.chord.point(s1), self.chord.point(s2));
        if self.surface.is_flat() {
            return Ok((p - q).norm());
        }
        geodesy::distance(self.surface, p, q)
    }

    pub fn reflected(&self, s1: f64, s2: f64) -> Result<Reflection> {
        match &self.table {
            None => geodesy::reflected_distance(self.surface, self.chord.point(s1), self.chord.point(s2)),
            Some(table) => {
                let pp = table.profile(self.chord, s1);
                let qp = table.profile(self.chord, s2);
                geodesy::reflected_from_profiles(self.surface, &pp, &qp, Refine::Interpolated)
            }
        }
    }

    pub fn between(&self, x: CompletedPoint, y: CompletedPoint) -> Result<f64> {
        let l = self.chord.length();
        let (x, y) = (CompletedPoint::new(x.s, x.sign, l), CompletedPoint::new(y.s, y.sign, l));
        if x.sign == y.sign {
            self.classical(x.s, y.s)
        } else {
            Ok(self.reflected(x.s, y.s)?.value)
        }
    }

    pub fn pair(&self, class: PairClass, t: f64, delta: f64) -> Result<CompletedPair> {
        let l = self.chord.length();
        let t = t.clamp(0.0, class.t_max());
        let (x, y) = class.points(t, delta, l);
        let d = if class.is_reflected() { self.reflected(x.s, y.s)?.value } else { self.classical(x.s, y.s)? };
        Ok(CompletedPair { class, t, x, y, l: completed_arclength_for(l, x, y), d })
    }

    fn d_or_inf(&self, class: PairClass, t: f64, delta: f64) -> f64 {
        self.pair(class, t, delta).map(|p| p.d).unwrap_or(f64::INFINITY)
    }

    /// `min_t d` over one class at fixed `δ`: grid scan, then golden
    /// refinement around the best cell.
    pub fn class_minimum(&self, class: PairClass, delta: f64, n: usize, refine: bool) -> Result<CompletedPair> {
        let n = n.max(2);
        let tm = class.t_max();
        let h = tm / n as f64;
        let mut best = self.pair(class, 0.0, delta)?;
        for k in 1..=n {
            let p = self.pair(class, h * k as f64, delta)?;
            if p.d < best.d {
                best = p;
            }
        }
        if refine {
            let (t, d) = golden_section(|t| self.d_or_inf(class, t, delta), (best.t - h).max(0.0), (best.t + h).min(tm), 1e-11);
            if d < best.d {
                best = self.pair(class, t, delta)?;
            }
        }
        Ok(best)
    }
}

/// Resolution of the completed profile scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub n_delta: usize,
    pub n_pairs: usize,
    pub refine: bool,
    /// Boundary profiles tabulated along the chord on curved metrics.
    pub table_size: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { n_delta: 64, n_pairs: 128, refine: true, table_size: 32 }
    }
}

/// Classical, reflected and completed chord-arc profiles on
/// `δ ∈ (0, L]`, `L` the chord length (half the completed length).
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedProfile {
    pub length: f64,
    pub deltas: Vec<f64>,
    pub psi_classical: Vec<f64>,
    pub psi_reflected: Vec<f64>,
    pub psi_completed: Vec<f64>,
    pub argmin_pairs: Vec<CompletedPair>,
}

impl CompletedProfile {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

pub fn profile_with(pd: &PairDistance, opts: &ProfileOptions) -> Result<CompletedProfile> {
    let l = pd.chord().length();
    let n = opts.n_delta.max(1);
    let deltas: Vec<f64> = (1..=n).map(|k| l * k as f64 / n as f64).collect();
    let rows = deltas
        .par_iter()
        .map(|&delta| -> Result<(f64, CompletedPair, CompletedPair)> {
            let c = pd.class_minimum(PairClass::Classical, delta, opts.n_pairs, opts.refine)?;
            let a = pd.class_minimum(PairClass::ThroughStart, delta, opts.n_pairs / 2, opts.refine)?;
            let b = pd.class_minimum(PairClass::ThroughEnd, delta, opts.n_pairs / 2, opts.refine)?;
            let r = if b.d < a.d { b } else { a };
            Ok((delta, c, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CompletedProfile {
        length: l,
        deltas,
        psi_classical: Vec::with_capacity(n),
        psi_reflected: Vec::with_capacity(n),
        psi_completed: Vec::with_capacity(n),
        argmin_pairs: Vec::with_capacity(n),
    };
    for (_, c, r) in rows {
        out.psi_classical.push(c.d);
        out.psi_reflected.push(r.d);
        out.psi_completed.push(c.d.min(r.d));
        out.argmin_pairs.push(if r.d < c.d { r } else { c });
    }
    Ok(out)
}

pub fn compute_profile(surface: &DiskSurface, chord: &Chord, opts: &ProfileOptions) -> Result<CompletedProfile> {
    if !chord.is_embedded() {
        return Err(Error::Topology("chord is not embedded".into()));
    }
    let pd = PairDistance::new(surface, chord, opts.table_size)?;
    profile_with(&pd, opts)
}

/// `Z(x, y) = d(x, y) − L φ(l(x, y)/L, t)` with `L` the completed length.
pub fn auxiliary_z(surface: &DiskSurface, chord: &Chord, x: CompletedPoint, y: CompletedPoint, phi: &ProfileFunction, clock: Clock) -> Result<f64> {
    let big_l = 2.0 * chord.length();
    let l = completed_arclength_for(chord.length(), x, y);
    let d = geodesy::completed_distance(surface, x, y, chord)?;
    Ok(d - big_l * phi.value(l / big_l, clock))
}

/// `min Z` over the profile grid, from a computed profile.
pub fn min_z_from_profile(profile: &CompletedProfile, phi: &ProfileFunction, clock: Clock) -> (f64, usize) {
    let big_l = 2.0 * profile.length;
    profile
        .deltas
        .iter()
        .zip(&profile.psi_completed)
        .map(|(d, psi)| psi - big_l * phi.value(d / big_l, clock))
        .enumerate()
        .map(|(i, z)| (z, i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Minimiser of `objective` over completed pairs of separation in
/// `(0, L]`: grid scan over every class, then alternating golden refinement
/// in `t` and `δ`. Also reports whether the grid minimum sat at the
/// smallest separation, where the pair degenerates to the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMinimum {
    pub value: f64,
    pub pair: CompletedPair,
    pub at_smallest_separation: bool,
}

pub fn minimize_pairs<F>(pd: &PairDistance, opts: &ProfileOptions, objective: F) -> Result<PairMinimum>
where
    F: Fn(&CompletedPair) -> f64 + Sync,
{
    let l = pd.chord().length();
    let eval = |class: PairClass, t: f64, delta: f64| -> f64 {
        if !(delta > 0.0 && delta <= l) {
            return f64::INFINITY;
        }
        match pd.pair(class, t, delta) {
            Ok(p) => {
                let v = objective(&p);
                if v.is_nan() { f64::INFINITY } else { v }
            }
            Err(_) => f64::INFINITY,
        }
    };
    let n = opts.n_delta.max(4);
    let m = opts.n_pairs.max(2);
    let hd = l / n as f64;
    let cells: Vec<(PairClass, usize, usize)> = PairClass::ALL
        .iter()
        .flat_map(|&c| (1..=n).flat_map(move |i| (0..=m).map(move |k| (c, i, k))))
        .collect();
    let (best, class, i, k) = cells
        .par_iter()
        .map(|&(c, i, k)| (eval(c, c.t_max() * k as f64 / m as f64, hd * i as f64), c, i, k))
        .reduce(|| (f64::INFINITY, PairClass::Classical, 0, 0), |a, b| if b.0 < a.0 { b } else { a });
    if !best.is_finite() {
        return Err(Error::numeric("objective is not finite on any pair", best));
    }
    let ht = class.t_max() / m as f64;
    let mut t = ht * k as f64;
    let mut delta = hd * i as f64;
    let mut value = best;
    if opts.refine && i > 1 {
        for _ in 0..12 {
            let (t1, v1) = golden_section(|x| eval(class, x, delta), (t - ht).max(0.0), (t + ht).min(class.t_max()), 1e-12);
            if v1 < value {
                t = t1;
                value = v1;
            }
            let (d1, v2) = golden_section(|x| eval(class, t, x), (delta - hd).max(0.5 * hd), (delta + hd).min(l), 1e-12);
            if v2 < value {
                delta = d1;
                value = v2;
            }
        }
    }
    Ok(PairMinimum { value, pair: pd.pair(class, t, delta)?, at_smallest_separation: i == 1 })
}

/// The amplitude at which `min Z` first reaches zero, with its pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalAmplitude {
    pub c0: f64,
    pub pair: CompletedPair,
}

/// `c₀* = min d / (L φ₁(l/L))` over completed pairs, `φ₁` the time-zero
/// profile of unit amplitude. With `c₀ = c₀*` the auxiliary function has
/// minimum exactly zero at the returned pair.
pub fn critical_c0(pd: &PairDistance, shape: &ProfileFunction, opts: &ProfileOptions) -> Result<CriticalAmplitude> {
    let big_l = 2.0 * pd.chord().length();
    let unit = shape.with_c0(1.0);
    let min = minimize_pairs(pd, opts, |p| {
        let w = big_l * unit.spatial(p.l / big_l).value;
        if w > 0.0 { p.d / w } else { f64::INFINITY }
    })?;
    if min.at_smallest_separation {
        return Err(Error::Degenerate("the distance ratio is minimised at the smallest separation".into()));
    }
    Ok(CriticalAmplitude { c0: min.value, pair: min.pair })
}

/// `min Z` over completed pairs at time `clock`.
pub fn minimize_z(pd: &PairDistance, phi: &ProfileFunction, clock: Clock, opts: &ProfileOptions) -> Result<PairMinimum> {
    let big_l = 2.0 * pd.chord().length();
    minimize_pairs(pd, opts, |p| p.d - big_l * phi.value(p.l / big_l, clock))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{ChartDomain, ConformalFactor};
    use crate::types::Point;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn flat_diameter_profile_is_the_identity() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = Chord::diameter(&s, 0.3, 128).unwrap();
        let p = compute_profile(&s, &chord, &ProfileOptions::default()).unwrap();
        for i in 0..p.len() {
            let d = p.deltas[i];
            assert!((p.psi_completed[i] - d).abs() < 1e-9, "δ = {d}: {}", p.psi_completed[i]);
            assert!((p.psi_classical[i] - d).abs() < 1e-9);
            assert!(p.psi_completed[i] <= p.psi_classical[i] && p.psi_completed[i] <= p.psi_reflected[i]);
        }
        let pd = PairDistance::new(&s, &chord, 0).unwrap();
        for k in 0..10 {
            let pair = pd.pair(PairClass::Classical, k as f64 / 10.0, 1.0).unwrap();
            assert!((pair.d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_minor_axis_matches_brute_force() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let chord = Chord::diameter(&s, FRAC_PI_2, 128).unwrap();
        let l = chord.length();
        let pd = PairDistance::new(&s, &chord, 0).unwrap();
        let opts = ProfileOptions { n_delta: 64, n_pairs: 64, ..Default::default() };
        let c = pd.class_minimum(PairClass::Classical, 1.0, opts.n_pairs, true).unwrap();
        let a = pd.class_minimum(PairClass::ThroughStart, 1.0, opts.n_pairs / 2, true).unwrap();
        let b = pd.class_minimum(PairClass::ThroughEnd, 1.0, opts.n_pairs / 2, true).unwrap();
        let psi = c.d.min(a.d).min(b.d);
        // brute force over 2048 completed points u and u + 1, reflected
        // distances by a dense boundary scan
        let m = 2048;
        let boundary: Vec<Point> = (0..20000).map(|k| Point::new(2.0 * (PI * k as f64 / 10000.0).cos(), (PI * k as f64 / 10000.0).sin())).collect();
        let at = |u: f64| -> (f64, i8) { if u <= l { (u, 1) } else { (2.0 * l - u, -1) } };
        let mut brute = f64::INFINITY;
        for i in 0..m {
            let u = 2.0 * l * i as f64 / m as f64;
            let (sa, ca) = at(u);
            let (sb, cb) = at((u + 1.0).rem_euclid(2.0 * l));
            let (p, q) = (chord.point(sa), chord.point(sb));
            let d = if ca == cb || sa == 0.0 || sa == l || sb == 0.0 || sb == l {
                (p - q).norm()
            } else {
                boundary.iter().map(|z| (p - z).norm() + (q - z).norm()).fold(f64::INFINITY, f64::min)
            };
            brute = brute.min(d);
        }
        assert!((psi - brute).abs() < 1e-3, "{psi} vs {brute}");
    }

    #[test]
    fn refining_the_grid_never_increases_the_profile() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = Chord::line(&s, 0.4, 0.5, 128).unwrap();
        let coarse = compute_profile(&s, &chord, &ProfileOptions { n_delta: 64, n_pairs: 64, refine: false, table_size: 0 }).unwrap();
        let fine = compute_profile(&s, &chord, &ProfileOptions { n_delta: 64, n_pairs: 128, refine: false, table_size: 0 }).unwrap();
        for i in 0..64 {
            assert!(fine.psi_completed[i] <= coarse.psi_completed[i] + 1e-15);
            assert!(fine.psi_completed[i] <= fine.deltas[i] + 1e-12);
        }
    }

    #[test]
    fn auxiliary_function_on_the_diameter() {
        let s = DiskSurface::flat_disk(1.0);
        let chord = Chord::diameter(&s, 0.0, 128).unwrap();
        let zero = ProfileFunction::zero();
        let phi = ProfileFunction::pure_sine(1.0 / PI, 0.0);
        let strong = ProfileFunction::pure_sine(1.0, 0.0);
        for k in 1..=20 {
            let delta = 0.1 * k as f64;
            let x = CompletedPoint::new(0.2 * (2.0 - delta) , 1, 2.0);
            let y = CompletedPoint::new(x.s + delta, 1, 2.0);
            let z0 = auxiliary_z(&s, &chord, x, y, &zero, Clock::default()).unwrap();
            assert!((z0 - delta).abs() < 1e-9);
            let z = auxiliary_z(&s, &chord, x, y, &phi, Clock::default()).unwrap();
            let expected = delta - 4.0 / PI * (PI * delta / 4.0).sin();
            assert!((z - expected).abs() < 1e-9 && z > 0.0);
            let zs = auxiliary_z(&s, &chord, x, y, &strong, Clock::default()).unwrap();
            assert!((zs - (delta - 4.0 * (PI * delta / 4.0).sin())).abs() < 1e-9);
        }
    }

    #[test]
    fn critical_amplitude_makes_the_minimum_zero() {
        let s = DiskSurface::flat_disk(1.0);
        let arch = |u: f64| {
            let th = -0.8 + 1.6 * (3.0 * u * u - 2.0 * u * u * u);
            let r = 1.0 - 0.1 * (PI * u).sin();
            Point::new(r * th.cos(), r * th.sin())
        };
        let chord = Chord::from_fn(&s, arch, 256).unwrap();
        let pd = PairDistance::new(&s, &chord, 0).unwrap();
        let shape = ProfileFunction::pure_sine(1.0, 0.0);
        let opts = ProfileOptions { n_delta: 64, n_pairs: 64, ..Default::default() };
        let crit = critical_c0(&pd, &shape, &opts).unwrap();
        assert!(crit.pair.reflected());
        let phi = shape.with_c0(crit.c0);
        let profile = profile_with(&pd, &opts).unwrap();
        let (zmin, _) = min_z_from_profile(&profile, &phi, Clock::default());
        assert!(zmin > -1e-9, "{zmin}");
        let big_l = 2.0 * chord.length();
        let z = crit.pair.d - big_l * phi.value(crit.pair.l / big_l, Clock::default());
        assert!(z.abs() < 1e-12);
    }

    #[test]
    fn curved_metric_profile_stays_below_arclength() {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.1));
        let chord = Chord::line(&s, 0.0, 0.3, 64).unwrap();
        let opts = ProfileOptions { n_delta: 8, n_pairs: 16, refine: true, table_size: 16 };
        let p = compute_profile(&s, &chord, &opts).unwrap();
        for i in 0..p.len() {
            assert!(p.psi_completed[i] <= p.deltas[i] * (1.0 + 1e-6), "{} > {}", p.psi_completed[i], p.deltas[i]);
            assert!(p.psi_completed[i] > 0.0);
        }
    }
}
