//! Grid distance fields: first-order fast marching for isotropic metrics and
//! a 16-neighbour graph search for general ones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::surface::{DiskSurface, Metric};
use crate::types::Point;

/// Grid used by [`solve`] unless the caller asks otherwise.
pub const DEFAULT_GRID: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance from a seed point sampled on a uniform chart grid.
#[derive(Debug, Clone)]
pub struct EikonalField {
    pub n: usize,
    pub origin: Point,
    pub hx: f64,
    pub hy: f64,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

impl EikonalField {
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.origin.x + i as f64 * self.hx, self.origin.y + j as f64 * self.hy)
    }

    /// Distance at an arbitrary chart point: one relaxation step from the
    /// surrounding interior nodes.
    pub fn value_at(&self, surface: &DiskSurface, q: Point) -> f64 {
        let fi = ((q.x - self.origin.x) / self.hx).round() as isize;
        let fj = ((q.y - self.origin.y) / self.hy).round() as isize;
        let mut best = f64::INFINITY;
        for di in -2..=2 {
            for dj in -2..=2 {
                let (i, j) = (fi + di, fj + dj);
                if i < 0 || j < 0 || i >= self.n as isize || j >= self.n as isize {
                    continue;
                }
                let k = j as usize * self.n + i as usize;
                if self.inside[k] && self.values[k].is_finite() {
                    best = best.min(self.values[k] + surface.segment_length(self.node(i as usize, j as usize), q));
                }
            }
        }
        best
    }
}

fn grid_for(surface: &DiskSurface, n: usize) -> (Point, f64, f64, Vec<bool>) {
    let (a, b) = surface.domain.semi_axes();
    let origin = Point::new(-a, -b);
    let hx = 2.0 * a / (n - 1) as f64;
    let hy = 2.0 * b / (n - 1) as f64;
    let mut inside = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let p = Point::new(origin.x + i as f64 * hx, origin.y + j as f64 * hy);
            inside[j * n + i] = surface.domain.level(p) <= 0.0;
        }
    }
    (origin, hx, hy, inside)
}

/// Distance field from `seed`, confined to the chart domain.
pub fn solve(surface: &DiskSurface, seed: Point, n: usize) -> Result<EikonalField> {
    surface.check_domain(seed)?;
    let n = n.max(9);
    let (origin, hx, hy, inside) = grid_for(surface, n);
    let mut field = EikonalField { n, origin, hx, hy, values: vec![f64::INFINITY; n * n], inside };
    let mut frozen = vec![false; n * n];
    let mut heap = BinaryHeap::new();

    // Exact values in a small neighbourhood of the seed.
    let si = ((seed.x - origin.x) / hx).round() as isize;
    let sj = ((seed.y - origin.y) / hy).round() as isize;
    for dj in -2..=2 {
        for di in -2..=2 {
            let (i, j) = (si + di, sj + dj);
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                continue;
            }
            let k = j as usize * n + i as usize;
            if field.inside[k] {
                field.values[k] = surface.segment_length(seed, field.node(i as usize, j as usize));
                heap.push(Entry { value: field.values[k], index: k });
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::numeric("seed has no interior grid neighbours", f64::INFINITY));
    }

    let isotropic = !matches!(surface.metric, Metric::General(_));
    let speed = |p: Point| match &surface.metric {
        Metric::Flat => 1.0,
        Metric::Conformal(phi) => phi.value(p).exp(),
        Metric::General(_) => 1.0,
    };

    while let Some(Entry { value, index }) = heap.pop() {
        if frozen[index] || value > field.values[index] {
            continue;
        }
        frozen[index] = true;
        let (i, j) = ((index % n) as isize, (index / n) as isize);
        let stencil: &[(isize, isize)] = if isotropic {
            &[(1, 0), (-1, 0), (0, 1), (0, -1)]
        } else {
            &[
                (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
                (2, 1), (2, -1), (-2, 1), (-2, -1), (1, 2), (1, -2), (-1, 2), (-1, -2),
            ]
        };
        for &(di, dj) in stencil {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= n as isize || nj >= n as isize {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let k = nj * n + ni;
            if frozen[k] || !field.inside[k] {
                continue;
            }
            let candidate = if isotropic {
                upwind_update(&field, &frozen, ni, nj, speed(field.node(ni, nj)))
            } else {
                value + surface.segment_length(field.node(i as usize, j as usize), field.node(ni, nj))
            };
            if candidate < field.values[k] {
                field.values[k] = candidate;
                heap.push(Entry { value: candidate, index: k });
            }
        }
    }

    let total = field.inside.iter().filter(|b| **b).count();
    let missing = field.inside.iter().zip(&frozen).filter(|(i, f)| **i && !**f).count();
    if missing > 0 {
        return Err(Error::numeric("fast marching left interior nodes unreached", missing as f64 / total as f64));
    }
    Ok(field)
}

fn upwind_update(field: &EikonalField, frozen: &[bool], i: usize, j: usize, f: f64) -> f64 {
    let n = field.n;
    let get = |ii: isize, jj: isize| {
        if ii < 0 || jj < 0 || ii >= n as isize || jj >= n as isize {
            return f64::INFINITY;
        }
        let k = jj as usize * n + ii as usize;
        if frozen[k] {
            field.values[k]
        } else {
            f64::INFINITY
        }
    };
    let (i, j) = (i as isize, j as isize);
    let tx = get(i - 1, j).min(get(i + 1, j));
    let ty = get(i, j - 1).min(get(i, j + 1));
    let (hx, hy) = (field.hx, field.hy);
    let one_sided = (tx + hx * f).min(ty + hy * f);
    if !tx.is_finite() || !ty.is_finite() {
        return one_sided;
    }
    // ((T - tx)/hx)^2 + ((T - ty)/hy)^2 = f^2
    let a = 1.0 / (hx * hx) + 1.0 / (hy * hy);
    let b = -2.0 * (tx / (hx * hx) + ty / (hy * hy));
    let c = tx * tx / (hx * hx) + ty * ty / (hy * hy) - f * f;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return one_sided;
    }
    let t = (-b + disc.sqrt()) / (2.0 * a);
    if t >= tx.max(ty) {
        t
    } else {
        one_sided
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::ConformalFactor;
    use crate::surface::ChartDomain;

    #[test]
    fn flat_distance_is_close_to_euclidean() {
        let s = DiskSurface::flat_disk(1.0);
        let f = solve(&s, Point::new(0.3, -0.1), 257).unwrap();
        for q in [Point::new(-0.5, 0.2), Point::new(0.0, 0.9), Point::new(0.31, -0.12)] {
            let exact = (q - Point::new(0.3, -0.1)).norm();
            assert!((f.value_at(&s, q) - exact).abs() < 1.5e-2, "{q:?}");
        }
    }

    #[test]
    fn general_metric_graph_search_runs() {
        let s = DiskSurface::conformal(ChartDomain::Disk { radius: 1.0 }, ConformalFactor::isotropic(0.1)).as_general();
        let f = solve(&s, Point::new(0.5, 0.0), 129).unwrap();
        let v = f.value_at(&s, Point::new(-0.5, 0.0));
        assert!(v > 1.0 && v < 1.06, "{v}");
    }
}
