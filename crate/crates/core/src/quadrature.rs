//! Numerical integration helpers: Gauss–Legendre rules, composite tensor
//! rules on boxes, and adaptive Simpson on an interval.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `n` points.
///
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` split into `panels` equal pieces.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * width * x);
            ws.push(0.5 * width * w);
        }
    }
    (xs, ws)
}

/// Tensor-product integration of `f` over the box `prod [lo_i, hi_i]`, using
/// a per-axis composite Gauss–Legendre rule.
pub fn tensor_integrate<F>(lo: &[f64], hi: &[f64], panels: usize, order: usize, mut f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let d = lo.len();
    assert_eq!(d, hi.len());
    let rules: Vec<_> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| composite_rule(a, b, panels, order))
        .collect();
    let per_axis = panels * order;
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for k in 0..d {
            point[k] = rules[k].0[idx[k]];
            w *= rules[k].1[idx[k]];
        }
        total += w * f(&point);
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < per_axis {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    total
}

/// Adaptive Simpson integration of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
