//! Small numerical kernels shared across the crate: Gauss–Legendre
//! quadrature, golden-section search, bracketed root finding, cubic splines
//! and a fixed-step RK4 integrator.

use crate::types::Point;

/// 4-point Gauss–Legendre nodes on [-1, 1].
pub const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
/// Matching weights.
pub const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite 4-point Gauss–Legendre rule on `[a, b]` with `panels` panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// Integrates `f` over the triangle `(a, b, c)` in the chart with the
/// collapsed (Duffy) tensor Gauss–Legendre rule, 4×4 points.
pub fn integrate_triangle<F: FnMut(Point) -> f64>(mut f: F, a: Point, b: Point, c: Point) -> f64 {
    let area2 = ((b - a).x * (c - a).y - (b - a).y * (c - a).x).abs();
    let mut total = 0.0;
    for (xi, wi) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
        let u = 0.5 * (xi + 1.0);
        for (xj, wj) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            let v = 0.5 * (xj + 1.0);
            // (u, v) in the unit square -> (u, (1-u) v) in the reference triangle.
            let r = u;
            let s = (1.0 - u) * v;
            let p = a + (b - a) * r + (c - a) * s;
            total += wi * wj * 0.25 * (1.0 - u) * f(p);
        }
    }
    total * area2
}

/// Golden-section minimisation on `[a, b]`. Returns `(argmin, min)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection on a sign change of `f` in `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < tol {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Secant iteration with a bisection safeguard once a bracket is known.
pub fn secant<F: FnMut(f64) -> f64>(mut f: F, x0: f64, x1: f64, tol: f64, max_iter: usize) -> Option<f64> {
    let (mut xa, mut xb) = (x0, x1);
    let (mut fa, mut fb) = (f(xa), f(xb));
    for _ in 0..max_iter {
        if fb.abs() < tol {
            return Some(xb);
        }
        let denom = fb - fa;
        if denom == 0.0 {
            return None;
        }
        let xn = xb - fb * (xb - xa) / denom;
        if !xn.is_finite() {
            return None;
        }
        xa = xb;
        fa = fb;
        xb = xn;
        fb = f(xb);
        if (xb - xa).abs() < tol * 1e-3 && fb.abs() < tol.sqrt() {
            return Some(xb);
        }
    }
    if fb.abs() < tol {
        Some(xb)
    } else {
        None
    }
}

/// Cubic interpolating spline with not-a-knot end conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    /// `xs` must be strictly increasing with at least two entries.
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        assert!(n >= 2, "spline needs two knots");
        if n < 4 {
            // too few knots for not-a-knot: fall back to the natural spline
            return Self::natural(xs, ys);
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        // Tridiagonal system for the interior second derivatives m_1..m_{n-2};
        // the not-a-knot conditions express m_0 and m_{n-1} through their
        // neighbours and are folded into the first and last rows.
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        // m_0 = ((h0 + h1) m_1 - h0 m_2) / h1
        diag[0] += h0 * (h0 + h1) / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        // m_{n-1} = ((ha + hb) m_{n-2} - hb m_{n-3}) / ha
        diag[k - 1] += hb * (ha + hb) / ha;
        sub[k - 1] -= hb * hb / ha;
        let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = ((h0 + h1) * m[1] - h0 * m[2]) / h1;
        m[n - 1] = ((ha + hb) * m[n - 2] - hb * m[n - 3]) / ha;
        Self { xs: xs.to_vec(), ys: ys.to_vec(), m }
    }

    pub fn natural(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n.saturating_sub(1) {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        Self { xs: xs.to_vec(), ys: ys.to_vec(), m }
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value, first and second derivative at `x` (extrapolates with the end cubic).
    pub fn eval_all(&self, x: f64) -> (f64, f64, f64) {
        let i = self.locate(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let a = x1 - x;
        let b = x - x0;
        let y = m0 * a.powi(3) / (6.0 * h) + m1 * b.powi(3) / (6.0 * h) + (y0 / h - m0 * h / 6.0) * a + (y1 / h - m1 * h / 6.0) * b;
        let dy = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (y0 / h - m0 * h / 6.0) + (y1 / h - m1 * h / 6.0);
        let ddy = m0 * a / h + m1 * b / h;
        (y, dy, ddy)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_all(x).0
    }
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` (`off[i]` couples `i` and `i+1`).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (1.0 + off[i - 1].abs()) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix by
/// Sturm bisection inside the Gershgorin interval.
pub fn tridiagonal_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// One classical RK4 step for an autonomous-in-form system `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let y2 = axpy(y, &k1, 0.5 * h);
    let k2 = f(t + 0.5 * h, &y2);
    let y3 = axpy(y, &k2, 0.5 * h);
    let k3 = f(t + 0.5 * h, &y3);
    let y4 = axpy(y, &k3, h);
    let k4 = f(t + h, &y4);
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], k: &[f64; N], a: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Trapezoid rule on samples with possibly non-uniform abscissae.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Composite Simpson on uniformly spaced samples (falls back to trapezoid on
/// the last panel when the sample count is even).
pub fn simpson_uniform(h: f64, ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 3 {
        return if n == 2 { 0.5 * h * (ys[0] + ys[1]) } else { 0.0 };
    }
    let panels = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let mut s = ys[0] + ys[panels];
    for (i, y) in ys.iter().enumerate().take(panels).skip(1) {
        s += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
    }
    let mut total = s * h / 3.0;
    if panels < n - 1 {
        total += 0.5 * h * (ys[n - 2] + ys[n - 1]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_is_exact_for_degree_seven() {
        let v = integrate(|x| x.powi(7) + 3.0 * x.powi(6), -1.0, 2.0, 1);
        let exact = (2f64.powi(8) - 1.0) / 8.0 + 3.0 * (2f64.powi(7) + 1.0) / 7.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-10);
    }

    #[test]
    fn triangle_rule_integrates_quadratics() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.0, 1.0);
        // integral of x^2 over the unit simplex is 1/12
        assert_abs_diff_eq!(integrate_triangle(|p| p.x * p.x, a, b, c), 1.0 / 12.0, epsilon = 1e-13);
        assert_abs_diff_eq!(integrate_triangle(|_| 1.0, a, c, b), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn spline_reproduces_cubics() {
        let xs: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).powf(1.2)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
        let s = CubicSpline::new(&xs, &ys);
        for x in [0.05, 0.8, 1.9, 2.5] {
            let (y, dy, ddy) = s.eval_all(x);
            assert_abs_diff_eq!(y, x * x * x - 2.0 * x + 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(dy, 3.0 * x * x - 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(ddy, 6.0 * x, epsilon = 1e-8);
        }
    }

    #[test]
    fn spline_on_uniform_knots() {
        for n in [4usize, 5, 33] {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x * x - x * x).collect();
            let s = CubicSpline::new(&xs, &ys);
            for x in [0.0, 0.13, 0.5, 0.97, 1.0] {
                let (y, dy, ddy) = s.eval_all(x);
                assert_abs_diff_eq!(y, 2.0 * x * x * x - x * x, epsilon = 1e-12);
                assert_abs_diff_eq!(dy, 6.0 * x * x - 2.0 * x, epsilon = 1e-11);
                assert_abs_diff_eq!(ddy, 12.0 * x - 2.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sturm_bisection_matches_closed_form() {
        // -u'' Dirichlet on n interior points: 2 - 2 cos(k pi/(n+1))
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        for k in 0..5 {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert_abs_diff_eq!(tridiagonal_eigenvalue(&diag, &off, k), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section(|x| (x - 0.3) * (x - 0.3) + 1.0, -1.0, 2.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 1.0, epsilon = 1e-12);
    }
}
