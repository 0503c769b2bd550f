//! Gauss rules on the unit segment and collapsed (Duffy) Gauss rules on the
//! reference triangle `(0,0), (1,0), (0,1)`.

use crate::scalar::{Point, Real};

#[derive(Debug, Clone)]
pub struct SegmentRule<T> {
    /// Abscissae in `[0, 1]`.
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct TriangleRule<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton's method
/// on the three-term recurrence.
fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); m];
    let mut w = vec![T::zero(); m];
    let one = T::one();
    let two = T::lit(2.0);
    let mf = T::from_usize_lossy(m);
    for i in 0..m.div_ceil(2) {
        let mut z = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (mf + T::lit(0.5))).cos();
        let mut dp = one;
        for _ in 0..100 {
            let (mut p0, mut p1) = (one, z);
            for j in 2..=m {
                let jf = T::from_usize_lossy(j);
                let p2 = ((two * jf - one) * z * p1 - (jf - one) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { one } else { p0 };
            dp = mf * (z * pm - pm1) / (z * z - one);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (one, z);
        for j in 2..=m {
            let jf = T::from_usize_lossy(j);
            let p2 = ((two * jf - one) * z * p1 - (jf - one) * p0) / jf;
            p0 = p1;
            p1 = p2;
        }
        if m > 1 {
            dp = mf * (z * p1 - p0) / (z * z - one);
        }
        let wi = two / ((one - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = T::zero();
    }
    (x, w)
}

impl<T: Real> SegmentRule<T> {
    /// Rule exact for polynomials of degree `degree` on `[0, 1]`.
    pub fn new(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (x, w) = gauss_legendre::<T>(m);
        let half = T::lit(0.5);
        Self {
            points: x.iter().map(|&xi| half * (xi + T::one())).collect(),
            weights: w.iter().map(|&wi| half * wi).collect(),
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl<T: Real> TriangleRule<T> {
    /// Collapsed tensor Gauss rule exact for total degree `degree`.
    pub fn new(degree: usize) -> Self {
        // the Duffy jacobian (1 - u) raises the degree in u by one
        let outer = SegmentRule::<T>::new(degree + 1);
        let inner = SegmentRule::<T>::new(degree);
        let mut points = Vec::with_capacity(outer.len() * inner.len());
        let mut weights = Vec::with_capacity(outer.len() * inner.len());
        for (&u, &wu) in outer.points.iter().zip(&outer.weights) {
            for (&v, &wv) in inner.points.iter().zip(&inner.weights) {
                points.push([u, v * (T::one() - u)]);
                weights.push(wu * wv * (T::one() - u));
            }
        }
        Self { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn segment_weights_and_monomials() {
        for degree in 0..20 {
            let rule = SegmentRule::<f64>::new(degree);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=degree as i32 {
                let q: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(a)).sum();
                assert!((q - 1.0 / f64::from(a + 1)).abs() < 1e-12, "degree {degree} monomial {a}");
            }
        }
    }

    #[test]
    fn triangle_weights_and_monomials() {
        for degree in 0..18 {
            let rule = TriangleRule::<f64>::new(degree);
            assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((q - exact).abs() < 1e-12, "degree {degree}: ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn points_inside_reference_triangle() {
        let rule = TriangleRule::<f64>::new(9);
        for p in &rule.points {
            assert!(p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0);
        }
    }

    #[test]
    fn single_precision_rule() {
        let rule = TriangleRule::<f32>::new(6);
        assert!((rule.weights.iter().sum::<f32>() - 0.5).abs() < 1e-6);
    }
}
