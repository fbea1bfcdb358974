//! Sweepout families of chords, widths by flow tightening, critical sets,
//! the equal-width probe and index attribution.
//!
//! The families are the canonical ones (level sets of a height function,
//! and all lines); whether they detect the relevant cohomology classes is
//! assumed, not computed. Distances between curves use the surrogate in
//! [`varifold`].

pub mod polish;
pub mod squeeze;
pub mod varifold;

pub use polish::polish_geodesic;
pub use squeeze::{perturbed_copies, squeeze_audit, SqueezeOptions, SqueezeReport};
pub use varifold::{chord_distance, f_distance, Varifold};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::Chord;
use crate::error::{Error, Result};
use crate::flow::{evolve_classify, FlowConfig, FlowOutcome};
use crate::stability::morse_index;
use crate::surface::DiskSurface;
use crate::types::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Curve(Chord),
    /// A point curve, kept as a zero-length marker at a chart point.
    Point(Point),
}

impl Member {
    pub fn length(&self) -> f64 {
        match self {
            Member::Curve(c) => c.length(),
            Member::Point(_) => 0.0,
        }
    }

    pub fn varifold(&self, surface: &DiskSurface) -> Varifold {
        match self {
            Member::Curve(c) => Varifold::from_chord(surface, c),
            Member::Point(p) => Varifold::point_curve(*p),
        }
    }
}

/// A discretised map from a parameter complex to chords. Parameters sit on
/// a `rows × cols` grid: one row `t ∈ [0, 1]` for a one-parameter family,
/// `(angle, offset)` rows for the family of lines. Adjacent grid entries,
/// including the identification `(π, s) ~ (0, −s)`, are neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepoutFamily {
    pub dimension: usize,
    pub rows: usize,
    pub cols: usize,
    pub params: Vec<[f64; 2]>,
    pub members: Vec<Member>,
    /// Whether the last row wraps onto the first with reversed columns.
    pub wraps: bool,
}

impl SweepoutFamily {
    /// A one-row family from explicit members.
    pub fn from_members(members: Vec<Member>) -> Self {
        let n = members.len();
        let params = (0..n).map(|i| [i as f64 / (n.max(2) - 1) as f64, 0.0]).collect();
        Self { dimension: 1, rows: 1, cols: n, params, members, wraps: false }
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.members.iter().map(Member::length).collect()
    }

    pub fn max_length(&self) -> f64 {
        self.lengths().into_iter().fold(0.0, f64::max)
    }

    fn neighbours(&self) -> Vec<(usize, usize)> {
        let (r, c) = (self.rows, self.cols);
        let mut out = Vec::new();
        for i in 0..r {
            for j in 0..c {
                if j + 1 < c {
                    out.push((i * c + j, i * c + j + 1));
                }
                if i + 1 < r {
                    out.push((i * c + j, (i + 1) * c + j));
                } else if self.wraps && r > 1 {
                    out.push((i * c + j, c - 1 - j));
                }
            }
        }
        out
    }

    /// Largest surrogate distance between neighbouring members.
    pub fn continuity(&self, surface: &DiskSurface) -> f64 {
        let v: Vec<Varifold> = self.members.par_iter().map(|m| m.varifold(surface)).collect();
        self.neighbours().into_iter().map(|(a, b)| f_distance(&v[a], &v[b])).fold(0.0, f64::max)
    }

    /// Whether the members at the parameter boundary are point curves.
    pub fn degenerates_at_boundary(&self) -> bool {
        (0..self.rows).all(|i| {
            matches!(self.members[i * self.cols], Member::Point(_)) && matches!(self.members[i * self.cols + self.cols - 1], Member::Point(_))
        })
    }
}

fn line_member(surface: &DiskSurface, normal_angle: f64, s: f64, samples: usize) -> Result<Member> {
    let h = surface.domain.support(normal_angle);
    let n = Point::new(normal_angle.cos(), normal_angle.sin());
    if s.abs() >= 1.0 {
        return Ok(Member::Point(surface.domain.project(n * (s.signum() * h))));
    }
    Ok(Member::Curve(Chord::line(surface, normal_angle, s * h, samples)?))
}

/// Level sets `{x·n = offset}` of the height along the unit vector at
/// `normal_angle`, from one supporting line to the other.
pub fn height_sweepout(surface: &DiskSurface, normal_angle: f64, resolution: usize, samples: usize) -> Result<SweepoutFamily> {
    let res = resolution.max(2) & !1;
    let params: Vec<[f64; 2]> = (0..=res).map(|k| [k as f64 / res as f64, 0.0]).collect();
    let members = params.iter().map(|p| line_member(surface, normal_angle, 2.0 * p[0] - 1.0, samples)).collect::<Result<_>>()?;
    Ok(SweepoutFamily { dimension: 1, rows: 1, cols: res + 1, params, members, wraps: false })
}

/// The canonical families: for `dimension = 1` the level sets of the first
/// chart coordinate, for `dimension = 2` all chords cut by oriented lines,
/// `angle ∈ [0, π)` and relative offset in `[−1, 1]`.
pub fn canonical_sweepout(surface: &DiskSurface, dimension: usize, resolution: usize) -> Result<SweepoutFamily> {
    canonical_sweepout_with(surface, dimension, resolution, 128)
}

pub fn canonical_sweepout_with(surface: &DiskSurface, dimension: usize, resolution: usize, samples: usize) -> Result<SweepoutFamily> {
    match dimension {
        1 => height_sweepout(surface, 0.0, resolution, samples),
        2 => {
            let res = resolution.max(2) & !1;
            let mut params = Vec::with_capacity(res * (res + 1));
            for i in 0..res {
                for k in 0..=res {
                    params.push([PI * i as f64 / res as f64, 2.0 * k as f64 / res as f64 - 1.0]);
                }
            }
            let members = params.par_iter().map(|p| line_member(surface, p[0], p[1], samples)).collect::<Result<_>>()?;
            Ok(SweepoutFamily { dimension: 2, rows: res, cols: res + 1, params, members, wraps: true })
        }
        d => Err(Error::Config(format!("sweepout dimension must be 1 or 2, got {d}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinmaxOptions {
    /// Flow settings for tightening; `t_max` is replaced by the budget.
    pub flow: FlowConfig,
    pub samples: usize,
    /// Largest allowed surrogate distance between neighbouring members.
    pub continuity_modulus: f64,
    /// Members within this relative distance of the maximum seed the
    /// critical set.
    pub near_max: f64,
    pub max_candidates: usize,
    /// Surrogate distance below which two geodesics are the same.
    pub separation: f64,
    /// Relative tolerance for a critical geodesic to realise the width.
    pub level_tol: f64,
    /// Relative tolerance on `|ω₁ − ω₂|` for equal widths.
    pub tol_eq: f64,
    /// Relative oscillation between the last two stages that makes the
    /// estimate inconclusive.
    pub tol_converge: f64,
    /// Angles tried by the equal-width probe.
    pub probe_angles: usize,
}

impl Default for MinmaxOptions {
    fn default() -> Self {
        Self {
            flow: FlowConfig { segments: 64, ..FlowConfig::default() },
            samples: 128,
            continuity_modulus: 0.5,
            near_max: 1e-2,
            max_candidates: 48,
            separation: 1e-2,
            level_tol: 1e-3,
            tol_eq: 1e-3,
            tol_converge: 1e-3,
            probe_angles: 16,
        }
    }
}

/// `resolution × budget` stages of a width computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub resolution: usize,
    pub budget: f64,
}

/// Parses `"16:0.02,32:0.05"`.
pub fn parse_schedule(text: &str) -> Result<Vec<Stage>> {
    text.split(',')
        .map(|item| {
            let (r, b) = item.trim().split_once(':').ok_or_else(|| Error::Config(format!("schedule stage {item:?} is not resolution:budget")))?;
            let resolution = r.trim().parse().map_err(|_| Error::Config(format!("bad resolution {r:?}")))?;
            let budget: f64 = b.trim().parse().map_err(|_| Error::Config(format!("bad budget {b:?}")))?;
            if !(budget >= 0.0) || resolution < 2 {
                return Err(Error::Config(format!("invalid schedule stage {item:?}")));
            }
            Ok(Stage { resolution, budget })
        })
        .collect()
}

pub fn default_schedule() -> Vec<Stage> {
    vec![Stage { resolution: 16, budget: 0.02 }, Stage { resolution: 32, budget: 0.05 }]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightenReport {
    pub budget: f64,
    pub budget_used: f64,
    pub halvings: usize,
    pub continuity_before: f64,
    pub continuity_after: f64,
    pub max_length_before: f64,
    pub max_length_after: f64,
    pub point_curves: usize,
    pub converged: usize,
}

fn flow_member(surface: &DiskSurface, member: &Member, cfg: &FlowConfig) -> Result<(Member, bool)> {
    let Member::Curve(chord) = member else { return Ok((member.clone(), false)) };
    if cfg.t_max <= 0.0 {
        return Ok((member.clone(), false));
    }
    let run = evolve_classify(surface, chord, cfg)?;
    Ok(match run.outcome {
        FlowOutcome::HalfPoint { point, .. } => (Member::Point(point), false),
        FlowOutcome::Geodesic { chord, .. } => (Member::Curve(chord), true),
        FlowOutcome::Timeout { .. } => (Member::Curve(run.final_state.chord(surface)?), false),
    })
}

/// Flows every member for a common time; members that shrink to a boundary
/// point become point curves. The budget is halved while neighbouring
/// members end up further apart than the continuity modulus.
pub fn tighten(surface: &DiskSurface, family: &SweepoutFamily, budget: f64, opts: &MinmaxOptions) -> Result<(SweepoutFamily, TightenReport)> {
    let continuity_before = family.continuity(surface);
    let max_length_before = family.max_length();
    let mut used = budget;
    let mut halvings = 0;
    loop {
        let cfg = FlowConfig { t_max: used, ..opts.flow.clone() };
        let out = family.members.par_iter().map(|m| flow_member(surface, m, &cfg)).collect::<Result<Vec<_>>>()?;
        let converged = out.iter().filter(|o| o.1).count();
        let members: Vec<Member> = out.into_iter().map(|o| o.0).collect();
        let tightened = SweepoutFamily { members, ..family.clone() };
        let continuity_after = tightened.continuity(surface);
        if continuity_after < opts.continuity_modulus.max(continuity_before) || halvings >= 8 {
            if continuity_after >= opts.continuity_modulus.max(continuity_before) {
                return Err(Error::numeric("tightening breaks parameter continuity at every budget", continuity_after));
            }
            let report = TightenReport {
                budget,
                budget_used: used,
                halvings,
                continuity_before,
                continuity_after,
                max_length_before,
                max_length_after: tightened.max_length(),
                point_curves: tightened.members.iter().filter(|m| matches!(m, Member::Point(_))).count(),
                converged,
            };
            return Ok((tightened, report));
        }
        used *= 0.5;
        halvings += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalGeodesic {
    #[serde(skip)]
    pub chord: Chord,
    pub length: f64,
    pub index: usize,
    pub nullity: usize,
    pub multiplicity: usize,
    pub eigenvalues: Vec<f64>,
    pub max_curvature: f64,
    pub orthogonality_defect: f64,
    pub endpoints: [[f64; 2]; 2],
}

impl CriticalGeodesic {
    pub fn new(surface: &DiskSurface, chord: Chord) -> Result<Self> {
        let mi = morse_index(surface, &chord)?;
        let max_curvature = chord.curvatures(surface)?.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let (a, b) = chord.orthogonality_defect(surface)?;
        let (p, q) = chord.endpoints();
        Ok(Self {
            length: chord.length(),
            index: mi.index,
            nullity: mi.nullity,
            multiplicity: 1,
            eigenvalues: mi.eigenvalues,
            max_curvature,
            orthogonality_defect: a.max(b),
            endpoints: [[p.x, p.y], [q.x, q.y]],
            chord,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSet {
    pub level: f64,
    pub geodesics: Vec<CriticalGeodesic>,
    /// Smallest surrogate distance between distinct members; infinite with
    /// fewer than two.
    pub min_separation: f64,
    pub candidates: usize,
    pub polish_failures: usize,
}

/// Polishes `candidates` to free boundary geodesics, merges those closer
/// than the separation threshold and keeps the ones realising `level`.
pub fn extract_critical_set(surface: &DiskSurface, candidates: &[Chord], level: f64, opts: &MinmaxOptions) -> Result<CriticalSet> {
    let polished: Vec<Result<Chord>> = candidates.par_iter().map(|c| polish_geodesic(surface, c, 2 * opts.samples)).collect();
    let polish_failures = polished.iter().filter(|p| p.is_err()).count();
    let mut kept: Vec<(Chord, Varifold)> = Vec::new();
    for chord in polished.into_iter().flatten() {
        if (chord.length() - level).abs() >= opts.level_tol * level {
            continue;
        }
        let v = Varifold::from_chord(surface, &chord);
        if kept.iter().all(|(_, w)| f_distance(&v, w) >= opts.separation) {
            kept.push((chord, v));
        }
    }
    let mut min_separation = f64::INFINITY;
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            min_separation = min_separation.min(f_distance(&kept[i].1, &kept[j].1));
        }
    }
    let geodesics = kept.into_par_iter().map(|(c, _)| CriticalGeodesic::new(surface, c)).collect::<Result<Vec<_>>>()?;
    Ok(CriticalSet { level, geodesics, min_separation, candidates: candidates.len(), polish_failures })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub tighten: TightenReport,
    /// Tightened maximum at this stage.
    pub max_length: f64,
    /// Infimum over the stages so far.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthReport {
    pub dimension: usize,
    pub omega: f64,
    pub stages: Vec<StageReport>,
    /// Set when the last two stage maxima differ by more than the tolerance.
    pub inconclusive: bool,
    /// Parameters of the last family whose tightened length is near `ω`.
    pub sequence: Vec<[f64; 2]>,
    pub critical: CriticalSet,
    #[serde(skip)]
    pub family: SweepoutFamily,
}

/// Estimates `ω_i` as the infimum over the schedule of the tightened
/// maximal length of the canonical `i`-parameter family.
pub fn width(surface: &DiskSurface, dimension: usize, schedule: &[Stage], opts: &MinmaxOptions) -> Result<WidthReport> {
    if schedule.is_empty() {
        return Err(Error::Config("empty width schedule".into()));
    }
    let mut stages: Vec<StageReport> = Vec::new();
    let mut best: Option<SweepoutFamily> = None;
    let mut estimate = f64::INFINITY;
    for &stage in schedule {
        let family = canonical_sweepout_with(surface, dimension, stage.resolution, opts.samples)?;
        let (tight, tighten) = tighten(surface, &family, stage.budget, opts)?;
        let max_length = tight.max_length();
        if max_length <= estimate {
            estimate = max_length;
            best = Some(tight);
        }
        stages.push(StageReport { stage, tighten, max_length, estimate });
    }
    let family = best.expect("at least one stage");
    let inconclusive = stages.len() >= 2 && {
        let (a, b) = (stages[stages.len() - 2].max_length, stages[stages.len() - 1].max_length);
        (a - b).abs() > opts.tol_converge * estimate
    };
    let threshold = (1.0 - opts.near_max) * estimate;
    let mut near: Vec<usize> = (0..family.members.len()).filter(|&i| family.members[i].length() >= threshold).collect();
    near.sort_by(|&a, &b| family.members[b].length().total_cmp(&family.members[a].length()));
    near.truncate(opts.max_candidates);
    let sequence = near.iter().map(|&i| family.params[i]).collect();
    let candidates: Vec<Chord> = near
        .iter()
        .filter_map(|&i| match &family.members[i] {
            Member::Curve(c) => Some(c.clone()),
            Member::Point(_) => None,
        })
        .collect();
    let critical = extract_critical_set(surface, &candidates, estimate, opts)?;
    Ok(WidthReport { dimension, omega: estimate, stages, inconclusive, sequence, critical, family })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub omega: (f64, f64),
    pub tol_eq: f64,
    pub triggered: bool,
    /// Pairwise separated geodesics found at the common level.
    pub geodesics: Vec<CriticalGeodesic>,
    pub min_separation: f64,
}

impl ProbeReport {
    pub fn count(&self) -> usize {
        self.geodesics.len()
    }
}

/// When the two widths agree, polishes the central line at each of
/// `probe_angles` directions and counts the distinct geodesics found at the
/// common level.
pub fn ls_equal_width_probe(surface: &DiskSurface, w1: &WidthReport, w2: &WidthReport, opts: &MinmaxOptions) -> Result<ProbeReport> {
    let (a, b) = (w1.omega, w2.omega);
    let tol_eq = opts.tol_eq * a;
    let mut report = ProbeReport { omega: (a, b), tol_eq, triggered: false, geodesics: Vec::new(), min_separation: f64::INFINITY };
    if (a - b).abs() >= tol_eq {
        return Ok(report);
    }
    report.triggered = true;
    let m = opts.probe_angles.max(1);
    let seeds = (0..m)
        .map(|k| Chord::line(surface, PI * k as f64 / m as f64, 0.0, opts.samples))
        .collect::<Result<Vec<_>>>()?;
    let level = 0.5 * (a + b);
    let set = extract_critical_set(surface, &seeds, level, opts)?;
    report.min_separation = set.min_separation;
    report.geodesics = set.geodesics;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelAttribution {
    pub level: usize,
    pub omega: f64,
    /// Some member has index at most the level.
    pub upper_bound: bool,
    /// All members are nondegenerate.
    pub bumpy: bool,
    /// Some member has index exactly the level (checked when bumpy).
    pub exact: Option<bool>,
    /// Some member has `index <= level <= index + nullity`.
    pub band: bool,
    pub members: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionReport {
    pub levels: Vec<LevelAttribution>,
    /// `|γ₁| < |γ₂|` for the index-attributed geodesics when both levels
    /// are bumpy.
    pub strictly_ordered: Option<bool>,
    pub failures: Vec<String>,
}

impl AttributionReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Matches each width level `i` with a critical geodesic of index at most
/// `i`, exactly `i` on bumpy levels, and otherwise within the band
/// `index <= i <= index + nullity`.
pub fn index_attribution(widths: &[&WidthReport]) -> AttributionReport {
    let mut levels = Vec::new();
    let mut failures = Vec::new();
    for w in widths {
        let i = w.dimension;
        let g = &w.critical.geodesics;
        let members: Vec<(usize, usize, f64)> = g.iter().map(|c| (c.index, c.nullity, c.length)).collect();
        let upper_bound = g.iter().any(|c| c.index <= i);
        let bumpy = !g.is_empty() && g.iter().all(|c| c.nullity == 0);
        let exact = bumpy.then(|| g.iter().any(|c| c.index == i));
        let band = g.iter().any(|c| c.index <= i && i <= c.index + c.nullity);
        if g.is_empty() {
            failures.push(format!("level {i}: empty critical set"));
        } else if !upper_bound {
            failures.push(format!("level {i}: no member of index at most {i}"));
        } else if exact == Some(false) {
            failures.push(format!("level {i}: no member of index exactly {i}"));
        } else if !band {
            failures.push(format!("level {i}: no member with index <= {i} <= index + nullity"));
        }
        levels.push(LevelAttribution { level: i, omega: w.omega, upper_bound, bumpy, exact, band, members });
    }
    let pick = |w: &WidthReport| w.critical.geodesics.iter().find(|c| c.index == w.dimension).map(|c| c.length);
    let strictly_ordered = match widths {
        [a, b] if levels.iter().all(|l| l.bumpy) => match (pick(a), pick(b)) {
            (Some(x), Some(y)) => Some(x < y),
            _ => None,
        },
        _ => None,
    };
    if strictly_ordered == Some(false) {
        failures.push("the index-one geodesic is not shorter than the index-two geodesic".into());
    }
    AttributionReport { levels, strictly_ordered, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_family_maxima() {
        let disk = DiskSurface::flat_disk(1.0);
        let f1 = canonical_sweepout(&disk, 1, 16).unwrap();
        let f2 = canonical_sweepout(&disk, 2, 16).unwrap();
        assert!((f1.max_length() - 2.0).abs() < 1e-12 && (f2.max_length() - 2.0).abs() < 1e-12);
        assert!(f1.degenerates_at_boundary() && f2.degenerates_at_boundary());
        let ellipse = DiskSurface::flat_ellipse(2.0, 1.0);
        // vertical chords x = c have length 2 b sqrt(1 − c²/a²)
        let f = canonical_sweepout(&ellipse, 1, 16).unwrap();
        for (p, m) in f.params.iter().zip(&f.members) {
            let c = 2.0 * (2.0 * p[0] - 1.0);
            let expected = 2.0 * (1.0 - c * c / 4.0).max(0.0).sqrt();
            assert!((m.length() - expected).abs() < 1e-12);
        }
        assert!((canonical_sweepout(&ellipse, 2, 16).unwrap().max_length() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn geodesics_are_fixed_by_tightening() {
        let s = DiskSurface::flat_disk(1.0);
        let members: Vec<Member> = (0..4).map(|k| Member::Curve(Chord::diameter(&s, 0.2 * k as f64, 64).unwrap())).collect();
        let family = SweepoutFamily::from_members(members);
        let (tight, report) = tighten(&s, &family, 0.05, &MinmaxOptions::default()).unwrap();
        assert_eq!(report.halvings, 0);
        for (a, b) in family.members.iter().zip(&tight.members) {
            assert!((a.length() - b.length()).abs() < 1e-9);
        }
    }

    #[test]
    fn tightening_does_not_lengthen() {
        let s = DiskSurface::flat_ellipse(2.0, 1.0);
        let family = canonical_sweepout(&s, 1, 8).unwrap();
        let (tight, report) = tighten(&s, &family, 0.05, &MinmaxOptions::default()).unwrap();
        assert!(report.max_length_after <= report.max_length_before + 1e-12);
        for (a, b) in family.members.iter().zip(&tight.members) {
            assert!(b.length() <= a.length() + 1e-12);
        }
        assert!(tight.degenerates_at_boundary());
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!(parse_schedule("8:0.1, 16:0.2").unwrap(), vec![Stage { resolution: 8, budget: 0.1 }, Stage { resolution: 16, budget: 0.2 }]);
        assert!(parse_schedule("8").is_err());
        assert!(parse_schedule("8:-1").is_err());
    }

    #[test]
    fn empty_critical_set_fails_attribution() {
        let s = DiskSurface::flat_disk(1.0);
        let family = canonical_sweepout(&s, 1, 4).unwrap();
        let w = WidthReport {
            dimension: 1,
            omega: 2.0,
            stages: vec![],
            inconclusive: false,
            sequence: vec![],
            critical: CriticalSet { level: 2.0, geodesics: vec![], min_separation: f64::INFINITY, candidates: 0, polish_failures: 0 },
            family,
        };
        let r = index_attribution(&[&w]);
        assert!(!r.ok());
    }
}
