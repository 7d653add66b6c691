//! Compactly supported polynomial kernels with vanishing moments and the
//! anisotropic product kernel `K_h(v) = prod_l K(v_l / h_l) / h_l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// A polynomial kernel on `[-1, 1]`, zero outside, whose moments of order
/// `1..=order` vanish and whose integral is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    order: usize,
    /// Monomial coefficients, lowest degree first.
    coefficients: Vec<f64>,
}

impl KernelSpec {
    /// Legendre projection of the delta at zero: `K(u) = sum_{j<=M} phi_j(0) phi_j(u)`
    /// with `phi_j` the orthonormal Legendre polynomials on `[-1, 1]`.
    pub fn build(order: usize) -> Self {
        let mut coefficients = vec![0.0; order + 1];
        let legendre = legendre_coefficients(order);
        for (j, p) in legendre.iter().enumerate() {
            // phi_j(0) phi_j(u) = (2j+1)/2 * P_j(0) * P_j(u)
            let at_zero = p[0];
            if at_zero == 0.0 {
                continue;
            }
            let scale = (2 * j + 1) as f64 / 2.0 * at_zero;
            for (c, pc) in coefficients.iter_mut().zip(p) {
                *c += scale * pc;
            }
        }
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Self { order, coefficients }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Polynomial value on the support, exactly zero outside.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// `int_{-1}^{1} K(u) u^l du`, exact up to rounding.
    pub fn moment(&self, l: usize) -> f64 {
        let degree = self.coefficients.len() - 1 + l;
        let nodes = (self.order + 2).max(degree / 2 + 1);
        let (x, w) = gauss_legendre(nodes);
        x.iter()
            .zip(&w)
            .map(|(&u, &wt)| wt * self.eval(u) * u.powi(l as i32))
            .sum()
    }

    /// Supremum norm on the support (attained on a fine scan plus endpoints).
    pub fn sup_norm(&self) -> f64 {
        (0..=2000)
            .map(|i| self.eval(-1.0 + i as f64 / 1000.0).abs())
            .fold(0.0, f64::max)
    }

    /// Product kernel `prod_l (1/h_l) K(v_l / h_l)`; zero as soon as any
    /// `|v_l| > h_l`.
    #[inline]
    pub fn product(&self, h: &BandwidthVector, v: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), v.len());
        let mut acc = 1.0;
        for (vl, hl) in v.iter().zip(h.as_slice()) {
            let u = vl / hl;
            if !(-1.0..=1.0).contains(&u) {
                return 0.0;
            }
            acc *= self.eval(u) / hl;
        }
        acc
    }

    /// One-dimensional scaled kernel `(1/h) K((x - y) / h)`.
    #[inline]
    pub fn scaled(&self, x: f64, y: f64, h: f64) -> f64 {
        self.eval((x - y) / h) / h
    }
}

/// Monomial coefficients of `P_0..=P_m`.
fn legendre_coefficients(m: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut c = vec![0.0; m + 1];
        match j {
            0 => c[0] = 1.0,
            1 => c[1] = 1.0,
            _ => {
                let jf = j as f64;
                // j P_j = (2j-1) u P_{j-1} - (j-1) P_{j-2}
                for k in 0..m {
                    c[k + 1] += (2.0 * jf - 1.0) / jf * out[j - 1][k];
                }
                for k in 0..=m {
                    c[k] -= (jf - 1.0) / jf * out[j - 2][k];
                }
            }
        }
        out.push(c);
    }
    out
}

pub fn build_kernel(order: usize) -> KernelSpec {
    KernelSpec::build(order)
}

pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

pub fn kernel_moment(spec: &KernelSpec, l: usize) -> f64 {
    spec.moment(l)
}

pub fn product_kernel(spec: &KernelSpec, h: &BandwidthVector, v: &[f64]) -> f64 {
    spec.product(h, v)
}

/// Per-coordinate bandwidths, each strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BandwidthVector(Vec<f64>);

impl BandwidthVector {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Parameter("empty bandwidth vector".into()));
        }
        if let Some(bad) = h.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Parameter(format!("bandwidth {bad} outside (0, 1)")));
        }
        Ok(Self(h))
    }

    pub fn uniform(h: f64, d: usize) -> Result<Self> {
        Self::new(vec![h; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn product(&self) -> f64 {
        self.0.iter().product()
    }
}

impl TryFrom<Vec<f64>> for BandwidthVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BandwidthVector> for Vec<f64> {
    fn from(h: BandwidthVector) -> Self {
        h.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_uniform() {
        let k = build_kernel(1);
        assert_eq!(k.coefficients(), &[0.5]);
        assert_eq!(kernel_eval(&k, -0.3), 0.5);
    }

    #[test]
    fn order_two_and_three_coincide() {
        let k2 = build_kernel(2);
        let k3 = build_kernel(3);
        assert!((k2.coefficients()[0] - 9.0 / 8.0).abs() < 1e-15);
        assert!((k2.coefficients()[2] + 15.0 / 8.0).abs() < 1e-15);
        assert_eq!(k2.coefficients(), k3.coefficients());
        assert!(k3.moment(3).abs() < 1e-15);
    }

    #[test]
    fn evaluation_and_support() {
        let k = build_kernel(2);
        assert_eq!(kernel_eval(&k, 0.0), 9.0 / 8.0);
        assert_eq!(kernel_eval(&k, 1.0001), 0.0);
        assert_eq!(kernel_eval(&k, -1.0001), 0.0);
    }

    #[test]
    fn moments_small_orders() {
        let k2 = build_kernel(2);
        assert!((kernel_moment(&k2, 0) - 1.0).abs() < 1e-12);
        assert!(kernel_moment(&k2, 2).abs() < 1e-12);
        let k1 = build_kernel(1);
        assert!((kernel_moment(&k1, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moments_up_to_order_eight() {
        for m in 0..=8 {
            let k = build_kernel(m);
            assert!((k.moment(0) - 1.0).abs() < 1e-10, "M={m}");
            for l in 1..=m {
                assert!(k.moment(l).abs() < 1e-10, "M={m} l={l}: {}", k.moment(l));
            }
            assert!(k.sup_norm().is_finite());
        }
    }

    #[test]
    fn product_kernel_examples() {
        let h = BandwidthVector::new(vec![0.5, 0.5]).unwrap();
        assert!((product_kernel(&build_kernel(1), &h, &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(product_kernel(&build_kernel(2), &h, &[0.51, 0.0]), 0.0);
        let v = product_kernel(&build_kernel(2), &h, &[0.25, 0.0]);
        assert!((v - 189.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn bandwidth_validation() {
        assert!(BandwidthVector::new(vec![0.5, 1.0]).is_err());
        assert!(BandwidthVector::new(vec![0.0, 0.5]).is_err());
        assert!(BandwidthVector::new(vec![]).is_err());
        let h: BandwidthVector = serde_json::from_str("[0.1,0.2]").unwrap();
        assert_eq!(h.as_slice(), &[0.1, 0.2]);
        assert!(serde_json::from_str::<BandwidthVector>("[1.5]").is_err());
    }
}
