//! Norms, error measurement against exact fields, and convergence orders.

use crate::dg_space::{combine, BasisSample, DgFunction, DgSpace};
use crate::error::{Error, Result};
use crate::manufactured::BenchmarkSolution;
use crate::scalar::{dot, Point, Real};

/// A field that can be sampled elementwise (value, gradient, Hessian), possibly
/// discontinuous across facets.
pub trait BrokenField<T: Real> {
    fn sample(&self, element: usize, x: Point<T>) -> BasisSample<T>;
}

impl<T: Real> BrokenField<T> for DgFunction<'_, T> {
    fn sample(&self, element: usize, x: Point<T>) -> BasisSample<T> {
        combine(self.element_coeffs(element), &self.space().basis_at_physical(element, x))
    }
}

impl<T: Real> BrokenField<T> for BenchmarkSolution<T> {
    fn sample(&self, _element: usize, x: Point<T>) -> BasisSample<T> {
        BasisSample { value: self.u(x), grad: self.grad(x), hess: self.hessian(x) }
    }
}

/// `a - b`.
pub struct Difference<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<T: Real, A: BrokenField<T> + ?Sized, B: BrokenField<T> + ?Sized> BrokenField<T> for Difference<'_, A, B> {
    fn sample(&self, element: usize, x: Point<T>) -> BasisSample<T> {
        let (a, b) = (self.0.sample(element, x), self.1.sample(element, x));
        let mut out = BasisSample { value: a.value - b.value, ..Default::default() };
        for i in 0..2 {
            out.grad[i] = a.grad[i] - b.grad[i];
            for j in 0..2 {
                out.hess[i][j] = a.hess[i][j] - b.hess[i][j];
            }
        }
        out
    }
}

/// `(Σ_K ∫_K |g|^p)^{1/p}` with a volume rule of exactness `degree`.
pub fn lp_norm<T: Real, F: Fn(usize, Point<T>) -> T>(space: &DgSpace<T>, p: T, degree: usize, g: F) -> T {
    lp_norm_pow(space, p, degree, g).powf(T::one() / p)
}

/// `Σ_K ∫_K |g|^p`.
pub fn lp_norm_pow<T: Real, F: Fn(usize, Point<T>) -> T>(space: &DgSpace<T>, p: T, degree: usize, g: F) -> T {
    space.integrate_volume(degree, |k, x| g(k, x).abs().powf(p))
}

/// The three `p`-th power contributions to the dG norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgNormParts<T> {
    /// `‖Δ_h v‖^p_{L^p(Ω)}`
    pub laplacian: T,
    /// `Σ_{e∈E} h_e^{1-p} ‖[∇_h v]‖^p_{L^p(e)}`
    pub grad_jump: T,
    /// `Σ_{e∈E} h_e^{1-2p} ‖[v]‖^p_{L^p(e)}`
    pub value_jump: T,
}

impl<T: Real> DgNormParts<T> {
    pub fn total_pow(&self) -> T {
        self.laplacian + self.grad_jump + self.value_jump
    }

    pub fn norm(&self, p: T) -> T {
        self.total_pow().powf(T::one() / p)
    }
}

/// dG norm contributions of a broken field; jumps are taken over interior
/// facets only and weighted with the facet length.
pub fn dg_norm_parts<T: Real, F: BrokenField<T> + ?Sized>(field: &F, space: &DgSpace<T>, p: T, degree: usize) -> DgNormParts<T> {
    let mesh = space.mesh();
    let laplacian = space.integrate_volume(degree, |k, x| field.sample(k, x).laplacian().abs().powf(p));
    let interior = mesh.skeleton().interior;
    let mut grad_jump = T::zero();
    let mut value_jump = T::zero();
    let rule = crate::quadrature::SegmentRule::<T>::new(degree);
    for fi in interior {
        let f = &mesh.facets[fi];
        let k2 = f.neighbor.expect("interior facet");
        let (a, b) = (mesh.vertices[f.vertices[0]], mesh.vertices[f.vertices[1]]);
        let (mut gj, mut vj) = (T::zero(), T::zero());
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let (s1, s2) = (field.sample(f.owner, x), field.sample(k2, x));
            let jg = dot(s1.grad, f.normal) - dot(s2.grad, f.normal);
            gj += w * jg.abs().powf(p);
            vj += w * (s1.value - s2.value).abs().powf(p);
        }
        grad_jump += gj * f.length * f.length.powf(T::one() - p);
        value_jump += vj * f.length * f.length.powf(T::one() - T::lit(2.0) * p);
    }
    DgNormParts { laplacian, grad_jump, value_jump }
}

/// `|||v|||_p` of a discrete function.
pub fn dg_norm<T: Real>(v: &DgFunction<'_, T>, p: T) -> T {
    let space = v.space();
    dg_norm_parts(v, space, p, space.quadrature_degree()).norm(p)
}

/// `‖v‖_{L^p}` of a discrete function on the space's assembly rule.
pub fn lp_norm_of<T: Real>(v: &DgFunction<'_, T>, p: T) -> T {
    let space = v.space();
    let vq = space.default_volume_quadrature();
    let nb = space.dofs_per_element();
    let mut total = T::zero();
    for k in 0..space.mesh().num_elements() {
        let s = space.element_samples(k, &vq);
        let c = v.element_coeffs(k);
        for (q, &w) in s.weights.iter().enumerate() {
            let val: T = c.iter().zip(&s.basis[q * nb..(q + 1) * nb]).map(|(&ci, b)| ci * b.value).sum();
            total += w * val.abs().powf(p);
        }
    }
    total.powf(T::one() / p)
}

/// Estimated order of convergence `log(e1/e2) / log(h1/h2)`.
pub fn eoc<T: Real>(e1: T, e2: T, h1: T, h2: T) -> Result<T> {
    if !(e1 > T::zero() && e2 > T::zero()) {
        return Err(Error::InvalidArgument(format!("errors must be positive, got {e1} and {e2}")));
    }
    if !(h1 > T::zero() && h2 > T::zero()) || h1 == h2 {
        return Err(Error::InvalidArgument(format!("meshsizes must be positive and distinct, got {h1} and {h2}")));
    }
    Ok((e1 / e2).ln() / (h1 / h2).ln())
}

/// Errors of one mesh level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord<T> {
    pub n: usize,
    pub h: T,
    /// `‖u - u_h‖_{L^p}`
    pub err_u: T,
    /// `‖Δu - D[u_h]‖_{L^p}`
    pub err_d: T,
    /// dG-norm contributions of `u - u_h`.
    pub dg_parts: DgNormParts<T>,
    pub err_dg: T,
    pub eoc_u: Option<T>,
    pub eoc_d: Option<T>,
    pub eoc_dg: Option<T>,
    pub iterations: usize,
}

impl<T: Real> ErrorRecord<T> {
    /// Fills the EOC columns against the previous level.
    pub fn with_rates_from(mut self, prev: Option<&Self>) -> Self {
        if let Some(prev) = prev {
            self.eoc_u = eoc(prev.err_u, self.err_u, prev.h, self.h).ok();
            self.eoc_d = eoc(prev.err_d, self.err_d, prev.h, self.h).ok();
            self.eoc_dg = eoc(prev.err_dg, self.err_dg, prev.h, self.h).ok();
        }
        self
    }
}

/// Measures `u - u_h` and `Δu - d_h` for the benchmark solution with a rule
/// of exactness `degree`.
pub fn benchmark_errors<T: Real>(
    u_h: &DgFunction<'_, T>,
    d_h: &DgFunction<'_, T>,
    p: T,
    degree: usize,
) -> (T, T, DgNormParts<T>) {
    let space = u_h.space();
    let exact = BenchmarkSolution::<T>::new();
    let vq = space.volume_quadrature(degree);
    let nb = space.dofs_per_element();
    let (mut eu, mut ed) = (T::zero(), T::zero());
    for k in 0..space.mesh().num_elements() {
        let s = space.element_samples(k, &vq);
        let (cu, cd) = (u_h.element_coeffs(k), d_h.element_coeffs(k));
        for (q, (x, &w)) in s.points.iter().zip(&s.weights).enumerate() {
            let b = &s.basis[q * nb..(q + 1) * nb];
            let uh: T = cu.iter().zip(b).map(|(&c, bs)| c * bs.value).sum();
            let dh: T = cd.iter().zip(b).map(|(&c, bs)| c * bs.value).sum();
            eu += w * (exact.u(*x) - uh).abs().powf(p);
            ed += w * (exact.laplacian(*x) - dh).abs().powf(p);
        }
    }
    let parts = dg_norm_parts(&Difference(&exact, u_h), space, p, degree);
    (eu.powf(T::one() / p), ed.powf(T::one() / p), parts)
}
