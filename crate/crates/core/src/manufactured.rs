//! Smooth benchmark solution `u(x, y) = sin²(2πx) sin²(2πy)` with clamped
//! boundary data and the forcing obtained by applying the strong operator.

use std::marker::PhantomData;

use crate::scalar::{Mat2, Point, Real};

/// `a(t) = sin²(2πt)` and its first four derivatives.
fn profile<T: Real>(t: T) -> [T; 5] {
    let pi = T::PI();
    let four_pi_t = T::lit(4.0) * pi * t;
    let (s4, c4) = four_pi_t.sin_cos();
    let s2 = (T::lit(2.0) * pi * t).sin();
    [
        s2 * s2,
        T::lit(2.0) * pi * s4,
        T::lit(8.0) * pi * pi * c4,
        -T::lit(32.0) * pi.powi(3) * s4,
        -T::lit(128.0) * pi.powi(4) * c4,
    ]
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkSolution<T>(PhantomData<T>);

impl<T: Real> BenchmarkSolution<T> {
    pub const fn new() -> Self {
        Self(PhantomData)
    }

    pub fn u(&self, x: Point<T>) -> T {
        profile(x[0])[0] * profile(x[1])[0]
    }

    pub fn grad(&self, x: Point<T>) -> [T; 2] {
        let (a, b) = (profile(x[0]), profile(x[1]));
        [a[1] * b[0], a[0] * b[1]]
    }

    pub fn hessian(&self, x: Point<T>) -> Mat2<T> {
        let (a, b) = (profile(x[0]), profile(x[1]));
        let xy = a[1] * b[1];
        [[a[2] * b[0], xy], [xy, a[0] * b[2]]]
    }

    pub fn laplacian(&self, x: Point<T>) -> T {
        let (a, b) = (profile(x[0]), profile(x[1]));
        a[2] * b[0] + a[0] * b[2]
    }

    pub fn grad_laplacian(&self, x: Point<T>) -> [T; 2] {
        let (a, b) = (profile(x[0]), profile(x[1]));
        [a[3] * b[0] + a[1] * b[2], a[2] * b[1] + a[0] * b[3]]
    }

    pub fn bilaplacian(&self, x: Point<T>) -> T {
        let (a, b) = (profile(x[0]), profile(x[1]));
        a[4] * b[0] + T::lit(2.0) * a[2] * b[2] + a[0] * b[4]
    }

    /// `f = Δ(|w|^{p-2} w)` with `w = Δu`, expanded by the chain rule as
    /// `(p-1)|w|^{p-2} Δw + (p-1)(p-2)|w|^{p-3} sign(w) |∇w|²`.
    ///
    /// The second term is dropped at `p = 2`. For `p = 3` it jumps across the
    /// zero set of `w`; `sign(0)` is taken as `+1` there (a null set).
    pub fn forcing(&self, x: Point<T>, p: T) -> T {
        let w = self.laplacian(x);
        let lap_w = self.bilaplacian(x);
        let pm1 = p - T::one();
        let pm2 = p - T::lit(2.0);
        let first = pm1 * w.abs().powf(pm2) * lap_w;
        if pm2 == T::zero() {
            return first;
        }
        let gw = self.grad_laplacian(x);
        let grad_sq = gw[0] * gw[0] + gw[1] * gw[1];
        let sign = if w < T::zero() { -T::one() } else { T::one() };
        first + pm1 * pm2 * w.abs().powf(p - T::lit(3.0)) * sign * grad_sq
    }

    /// `q = ∇(|Δu|^{p-2} Δu) = (p-1)|Δu|^{p-2} ∇Δu`, so that `f = ∇·q`.
    ///
    /// For `p > 2` the forcing jumps across `{Δu = 0}` while `q` stays
    /// continuous, which makes `q` the better-behaved quantity to integrate.
    pub fn forcing_flux(&self, x: Point<T>, p: T) -> [T; 2] {
        let w = self.laplacian(x);
        let gw = self.grad_laplacian(x);
        let s = (p - T::one()) * w.abs().powf(p - T::lit(2.0));
        [s * gw[0], s * gw[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const U: BenchmarkSolution<f64> = BenchmarkSolution::new();

    #[test]
    fn forcing_is_divergence_of_flux() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let h = 1e-5;
        for p in [2.0, 3.0, 4.0, 5.0] {
            for _ in 0..20 {
                let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
                if U.laplacian(x).abs() < 1.0 {
                    continue;
                }
                let div = (U.forcing_flux([x[0] + h, x[1]], p)[0] - U.forcing_flux([x[0] - h, x[1]], p)[0]
                    + U.forcing_flux([x[0], x[1] + h], p)[1]
                    - U.forcing_flux([x[0], x[1] - h], p)[1])
                    / (2.0 * h);
                let f = U.forcing(x, p);
                assert!((div - f).abs() < 1e-5 * f.abs().max(1.0), "p={p} x={x:?}: {div} vs {f}");
            }
        }
    }

    /// Five-point Laplacian with Richardson extrapolation (h, h/2).
    fn fd_laplacian(g: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> f64 {
        let lap = |h: f64| {
            (g([x[0] + h, x[1]]) + g([x[0] - h, x[1]]) + g([x[0], x[1] + h]) + g([x[0], x[1] - h]) - 4.0 * g(x)) / (h * h)
        };
        (4.0 * lap(h / 2.0) - lap(h)) / 3.0
    }

    #[test]
    fn peak_value_and_clamped_boundary() {
        assert!((U.u([0.25, 0.25]) - 1.0).abs() < 1e-15);
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for x in [[0.0, t], [t, 0.0], [1.0, t], [t, 1.0]] {
                assert!(U.u(x).abs() < 1e-14);
                let g = U.grad(x);
                assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_at_peak() {
        assert!((U.laplacian([0.25, 0.25]) + 16.0 * PI * PI).abs() < 1e-11);
        let fd = fd_laplacian(&|x| U.u(x), [0.25, 0.25], 1e-3);
        assert!((fd + 16.0 * PI * PI).abs() < 1e-5 * 16.0 * PI * PI);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-5;
        for _ in 0..20 {
            let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            let g = U.grad(x);
            let fd = [
                (U.u([x[0] + h, x[1]]) - U.u([x[0] - h, x[1]])) / (2.0 * h),
                (U.u([x[0], x[1] + h]) - U.u([x[0], x[1] - h])) / (2.0 * h),
            ];
            for i in 0..2 {
                assert!((g[i] - fd[i]).abs() < 1e-7 * 10.0);
            }
            let hs = U.hessian(x);
            assert!((hs[0][0] + hs[1][1] - U.laplacian(x)).abs() < 1e-10);
            let gl = U.grad_laplacian(x);
            let fdl = [
                (U.laplacian([x[0] + h, x[1]]) - U.laplacian([x[0] - h, x[1]])) / (2.0 * h),
                (U.laplacian([x[0], x[1] + h]) - U.laplacian([x[0], x[1] - h])) / (2.0 * h),
            ];
            for i in 0..2 {
                assert!((gl[i] - fdl[i]).abs() < 1e-5 * gl[i].abs().max(100.0));
            }
        }
    }

    #[test]
    fn biharmonic_forcing_matches_nested_differences() {
        let x = [0.25, 0.25];
        let fd = fd_laplacian(&|y| fd_laplacian(&|z| U.u(z), y, 2e-3), x, 2e-3);
        let f = U.forcing(x, 2.0);
        assert!((f - U.bilaplacian(x)).abs() < 1e-9 * f.abs());
        assert!((fd - f).abs() < 1e-5 * f.abs(), "{fd} vs {f}");
    }

    #[test]
    fn p3_forcing_matches_finite_differences_where_laplacian_positive() {
        // Δu > 0 near (0.05, 0.3): check f = Δ(|w| w) by differencing g = |Δu| Δu
        let x = [0.05, 0.3];
        assert!(U.laplacian(x) > 0.0);
        let g = |y: [f64; 2]| {
            let w = U.laplacian(y);
            w.abs() * w
        };
        let fd = fd_laplacian(&g, x, 1e-3);
        let w = U.laplacian(x);
        let gw = U.grad_laplacian(x);
        let closed = 2.0 * w * U.bilaplacian(x) + 2.0 * (gw[0] * gw[0] + gw[1] * gw[1]);
        let f = U.forcing(x, 3.0);
        assert!((closed - f).abs() < 1e-10 * f.abs());
        assert!((fd - f).abs() < 1e-5 * f.abs(), "{fd} vs {f}");
    }

    #[test]
    fn forcing_matches_strong_operator_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for p in [2.0, 3.0, 4.0, 5.0] {
            let mut checked = 0;
            while checked < 20 {
                let x = [rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98)];
                // keep the stencil away from the zero set of Δu where |w|^{p-2}w is not C²
                if p == 3.0 && U.laplacian(x).abs() < 20.0 {
                    continue;
                }
                let g = |y: [f64; 2]| {
                    let w = U.laplacian(y);
                    w.abs().powf(p - 2.0) * w
                };
                let fd = fd_laplacian(&g, x, 1e-3);
                let f = U.forcing(x, p);
                let scale = f.abs().max(1.0);
                assert!((fd - f).abs() < 1e-4 * scale, "p={p} x={x:?}: {fd} vs {f}");
                checked += 1;
            }
        }
    }

    #[test]
    fn forcing_is_bounded() {
        for p in [2.0, 3.0, 4.0, 5.0] {
            let mut max = 0.0f64;
            for i in 0..=50 {
                for j in 0..=50 {
                    max = max.max(U.forcing([i as f64 / 50.0, j as f64 / 50.0], p).abs());
                }
            }
            assert!(max.is_finite());
        }
    }
}
