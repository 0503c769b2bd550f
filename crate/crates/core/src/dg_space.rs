//! Broken polynomial spaces `P_k(T)` with an elementwise L²-orthonormal basis.
//!
//! The basis is built once on the reference triangle by orthonormalising
//! centred monomials against an exact quadrature rule; on a physical element
//! `K` it is pulled back through the affine map and scaled by `|det J|^{-1/2}`,
//! so every element mass matrix is the identity.

use crate::error::{Error, Result};
use crate::mesh::{Facet, Mesh};
use crate::quadrature::{SegmentRule, TriangleRule};
use crate::scalar::{Mat2, Point, Real};

/// Value, gradient and Hessian of one basis function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BasisSample<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: Mat2<T>,
}

impl<T: Real> BasisSample<T> {
    pub fn laplacian(&self) -> T {
        self.hess[0][0] + self.hess[1][1]
    }
}

#[derive(Debug, Clone)]
pub struct DgSpace<T> {
    mesh: Mesh<T>,
    degree: usize,
    quad_degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row `i` holds the monomial coefficients of reference basis function `i`.
    coeffs: Vec<Vec<T>>,
}

/// A volume rule together with reference-basis samples at its points.
#[derive(Debug, Clone)]
pub struct VolumeQuadrature<T> {
    pub rule: TriangleRule<T>,
    reference: Vec<BasisSample<T>>,
}

/// Physical quadrature data on one element.
#[derive(Debug, Clone)]
pub struct ElementSamples<T> {
    pub element: usize,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    /// `basis[q * nb + i]` is basis function `i` at point `q`.
    pub basis: Vec<BasisSample<T>>,
}

/// Physical quadrature data on one facet, with basis traces from both sides
/// evaluated at the same physical points.
#[derive(Debug, Clone)]
pub struct FacetSamples<T> {
    pub facet: usize,
    pub normal: Point<T>,
    pub length: T,
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub owner_basis: Vec<BasisSample<T>>,
    pub neighbor_basis: Option<Vec<BasisSample<T>>>,
}

impl<T: Real> DgSpace<T> {
    pub fn new(mesh: Mesh<T>, degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidArgument(format!("polynomial degree must be >= 2, got {degree}")));
        }
        let exponents: Vec<(i32, i32)> = (0..=degree as i32)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let nb = exponents.len();

        // Gram matrix of centred monomials, exact for degree 2k
        let rule = TriangleRule::<T>::new(2 * degree);
        let mut gram = vec![vec![T::zero(); nb]; nb];
        let mut m = vec![T::zero(); nb];
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            for (mi, &(a, b)) in m.iter_mut().zip(&exponents) {
                *mi = monomial(a, b, *p).0;
            }
            for i in 0..nb {
                for j in 0..=i {
                    gram[i][j] += w * m[i] * m[j];
                }
            }
        }
        // G = L Lᵀ; reference basis ψ = L⁻¹ m
        let mut l = vec![vec![T::zero(); nb]; nb];
        for i in 0..nb {
            for j in 0..=i {
                let mut s = gram[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let mut coeffs = vec![vec![T::zero(); nb]; nb];
        for col in 0..nb {
            // forward substitution for column `col` of L⁻¹
            for i in 0..nb {
                let mut s = if i == col { T::one() } else { T::zero() };
                for k in 0..i {
                    s -= l[i][k] * coeffs[k][col];
                }
                coeffs[i][col] = s / l[i][i];
            }
        }

        Ok(Self { mesh, degree, quad_degree: 2 * degree + 2, exponents, coeffs })
    }

    /// Overrides the default volume/facet quadrature exactness (`2k + 2`).
    pub fn with_quadrature_degree(mut self, degree: usize) -> Self {
        self.quad_degree = degree.max(2 * self.degree);
        self
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn quadrature_degree(&self) -> usize {
        self.quad_degree
    }

    pub fn dofs_per_element(&self) -> usize {
        self.exponents.len()
    }

    pub fn total_dofs(&self) -> usize {
        self.dofs_per_element() * self.mesh.num_elements()
    }

    pub fn element_dofs(&self, element: usize) -> std::ops::Range<usize> {
        let nb = self.dofs_per_element();
        element * nb..(element + 1) * nb
    }

    /// Reference basis samples (orthonormal on the reference triangle).
    pub fn reference_basis(&self, xi: Point<T>, out: &mut [BasisSample<T>]) {
        let mono: Vec<(T, [T; 2], Mat2<T>)> = self.exponents.iter().map(|&(a, b)| monomial(a, b, xi)).collect();
        for (row, o) in self.coeffs.iter().zip(out.iter_mut()) {
            let mut s = BasisSample::default();
            for (&c, (v, g, h)) in row.iter().zip(&mono) {
                if c == T::zero() {
                    continue;
                }
                s.value += c * *v;
                s.grad[0] += c * g[0];
                s.grad[1] += c * g[1];
                for r in 0..2 {
                    for q in 0..2 {
                        s.hess[r][q] += c * h[r][q];
                    }
                }
            }
            *o = s;
        }
    }

    fn push_forward(&self, element: usize, s: &BasisSample<T>) -> BasisSample<T> {
        let map = self.mesh.map(element);
        let m = &map.inverse;
        let scale = T::one() / map.det.abs().sqrt();
        let mut out = BasisSample { value: s.value * scale, ..Default::default() };
        for i in 0..2 {
            out.grad[i] = (s.grad[0] * m[0][i] + s.grad[1] * m[1][i]) * scale;
            for j in 0..2 {
                let mut h = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        h += m[a][i] * s.hess[a][b] * m[b][j];
                    }
                }
                out.hess[i][j] = h * scale;
            }
        }
        out
    }

    /// Physical basis samples of `element` at reference point `xi`.
    pub fn basis_at_reference(&self, element: usize, xi: Point<T>) -> Vec<BasisSample<T>> {
        let mut out = vec![BasisSample::default(); self.dofs_per_element()];
        self.reference_basis(xi, &mut out);
        out.iter().map(|s| self.push_forward(element, s)).collect()
    }

    /// Physical basis samples of `element` at physical point `x` (which may lie
    /// on or outside the element boundary; the polynomial is simply extended).
    pub fn basis_at_physical(&self, element: usize, x: Point<T>) -> Vec<BasisSample<T>> {
        self.basis_at_reference(element, self.mesh.map(element).to_reference(x))
    }

    pub fn volume_quadrature(&self, degree: usize) -> VolumeQuadrature<T> {
        let rule = TriangleRule::new(degree);
        let nb = self.dofs_per_element();
        let mut reference = vec![BasisSample::default(); rule.len() * nb];
        for (q, p) in rule.points.iter().enumerate() {
            self.reference_basis(*p, &mut reference[q * nb..(q + 1) * nb]);
        }
        VolumeQuadrature { rule, reference }
    }

    /// Volume quadrature at the space's assembly exactness.
    pub fn default_volume_quadrature(&self) -> VolumeQuadrature<T> {
        self.volume_quadrature(self.quad_degree)
    }

    pub fn default_facet_rule(&self) -> SegmentRule<T> {
        SegmentRule::new(self.quad_degree)
    }

    pub fn element_samples(&self, element: usize, vq: &VolumeQuadrature<T>) -> ElementSamples<T> {
        let map = self.mesh.map(element);
        let det = map.det.abs();
        ElementSamples {
            element,
            points: vq.rule.points.iter().map(|&p| map.to_physical(p)).collect(),
            weights: vq.rule.weights.iter().map(|&w| w * det).collect(),
            basis: vq.reference.iter().map(|s| self.push_forward(element, s)).collect(),
        }
    }

    /// Facet quadrature points are generated on the physical segment; both
    /// sides are evaluated at those same points through their inverse maps.
    pub fn facet_samples(&self, facet: usize, rule: &SegmentRule<T>) -> FacetSamples<T> {
        let f = &self.mesh.facets[facet];
        let (a, b) = (self.mesh.vertices[f.vertices[0]], self.mesh.vertices[f.vertices[1]]);
        let points: Vec<Point<T>> =
            rule.points.iter().map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]).collect();
        let side = |k: usize| -> Vec<BasisSample<T>> { points.iter().flat_map(|&x| self.basis_at_physical(k, x)).collect() };
        FacetSamples {
            facet,
            normal: f.normal,
            length: f.length,
            owner: f.owner,
            neighbor: f.neighbor,
            weights: rule.weights.iter().map(|&w| w * f.length).collect(),
            owner_basis: side(f.owner),
            neighbor_basis: f.neighbor.map(side),
            points,
        }
    }

    /// `Σ_K ∫_K g(K, x) dx`, accumulated in ascending element order.
    pub fn integrate_volume<F: FnMut(usize, Point<T>) -> T>(&self, degree: usize, mut g: F) -> T {
        let rule = TriangleRule::<T>::new(degree);
        let mut total = T::zero();
        for k in 0..self.mesh.num_elements() {
            let map = self.mesh.map(k);
            let det = map.det.abs();
            let mut local = T::zero();
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                local += w * g(k, map.to_physical(*p));
            }
            total += local * det;
        }
        total
    }

    /// `Σ_e ∫_e g(e, x) ds` over the listed facets, in the given order.
    pub fn integrate_facets<F: FnMut(&Facet<T>, Point<T>) -> T>(&self, facets: &[usize], degree: usize, mut g: F) -> T {
        let rule = SegmentRule::<T>::new(degree);
        let mut total = T::zero();
        for &fi in facets {
            let f = &self.mesh.facets[fi];
            let (a, b) = (self.mesh.vertices[f.vertices[0]], self.mesh.vertices[f.vertices[1]]);
            let mut local = T::zero();
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                local += w * g(f, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
            total += local * f.length;
        }
        total
    }

    /// Elementwise L² projection of a pointwise field.
    pub fn l2_project<F: Fn(Point<T>) -> T>(&self, g: F) -> DgFunction<'_, T> {
        let vq = self.default_volume_quadrature();
        self.l2_project_with(&vq, |_, x| g(x))
    }

    /// L² projection of an element-aware field `g(K, x)`, e.g. another broken function.
    pub fn l2_project_with<F: Fn(usize, Point<T>) -> T>(&self, vq: &VolumeQuadrature<T>, g: F) -> DgFunction<'_, T> {
        let nb = self.dofs_per_element();
        let mut coeffs = vec![T::zero(); self.total_dofs()];
        for k in 0..self.mesh.num_elements() {
            let s = self.element_samples(k, vq);
            let c = &mut coeffs[k * nb..(k + 1) * nb];
            for (q, (x, &w)) in s.points.iter().zip(&s.weights).enumerate() {
                let gw = g(k, *x) * w;
                for (ci, b) in c.iter_mut().zip(&s.basis[q * nb..(q + 1) * nb]) {
                    *ci += gw * b.value;
                }
            }
        }
        DgFunction { space: self, coeffs }
    }

    pub fn zero_function(&self) -> DgFunction<'_, T> {
        DgFunction { space: self, coeffs: vec![T::zero(); self.total_dofs()] }
    }

    pub fn function(&self, coeffs: Vec<T>) -> Result<DgFunction<'_, T>> {
        if coeffs.len() != self.total_dofs() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, space has {} dofs",
                coeffs.len(),
                self.total_dofs()
            )));
        }
        Ok(DgFunction { space: self, coeffs })
    }
}

/// `(ξ-⅓)^a (η-⅓)^b` with its gradient and Hessian.
fn monomial<T: Real>(a: i32, b: i32, xi: Point<T>) -> (T, [T; 2], Mat2<T>) {
    let third = T::one() / T::lit(3.0);
    let (x, y) = (xi[0] - third, xi[1] - third);
    let pw = |base: T, e: i32| if e < 0 { T::zero() } else { base.powi(e) };
    let (af, bf) = (T::lit(a as f64), T::lit(b as f64));
    let v = pw(x, a) * pw(y, b);
    let gx = af * pw(x, a - 1) * pw(y, b);
    let gy = bf * pw(x, a) * pw(y, b - 1);
    let hxx = af * (af - T::one()) * pw(x, a - 2) * pw(y, b);
    let hxy = af * bf * pw(x, a - 1) * pw(y, b - 1);
    let hyy = bf * (bf - T::one()) * pw(x, a) * pw(y, b - 2);
    (v, [gx, gy], [[hxx, hxy], [hxy, hyy]])
}

/// Coefficient vector over a [`DgSpace`]; elementwise polynomial, no
/// continuity across facets.
#[derive(Debug, Clone)]
pub struct DgFunction<'s, T> {
    space: &'s DgSpace<T>,
    pub coeffs: Vec<T>,
}

impl<'s, T: Real> DgFunction<'s, T> {
    pub fn space(&self) -> &'s DgSpace<T> {
        self.space
    }

    pub fn element_coeffs(&self, element: usize) -> &[T] {
        &self.coeffs[self.space.element_dofs(element)]
    }

    /// Value, gradient and Hessian on `element` at reference point `xi`.
    pub fn evaluate(&self, element: usize, xi: Point<T>) -> Result<(T, [T; 2], Mat2<T>)> {
        let count = self.space.mesh.num_elements();
        if element >= count {
            return Err(Error::ElementOutOfRange { index: element, count });
        }
        let basis = self.space.basis_at_reference(element, xi);
        Ok(combine(self.element_coeffs(element), &basis).into())
    }

    /// As [`evaluate`](Self::evaluate) with a physical point.
    pub fn evaluate_physical(&self, element: usize, x: Point<T>) -> Result<(T, [T; 2], Mat2<T>)> {
        let count = self.space.mesh.num_elements();
        if element >= count {
            return Err(Error::ElementOutOfRange { index: element, count });
        }
        self.evaluate(element, self.space.mesh.map(element).to_reference(x))
    }

    pub fn value_physical(&self, element: usize, x: Point<T>) -> T {
        let basis = self.space.basis_at_physical(element, x);
        self.element_coeffs(element).iter().zip(&basis).map(|(&c, b)| c * b.value).sum()
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self { space: self.space, coeffs: self.coeffs.iter().map(|&c| alpha * c).collect() }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        Self { space: self.space, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + alpha * b).collect() }
    }

    /// L²(Ω) norm; exact because the basis is orthonormal.
    pub fn l2_norm(&self) -> T {
        self.coeffs.iter().map(|&c| c * c).sum::<T>().sqrt()
    }
}

/// Linear combination of basis samples.
pub fn combine<T: Real>(coeffs: &[T], basis: &[BasisSample<T>]) -> BasisSample<T> {
    let mut out = BasisSample::default();
    for (&c, b) in coeffs.iter().zip(basis) {
        out.value += c * b.value;
        out.grad[0] += c * b.grad[0];
        out.grad[1] += c * b.grad[1];
        for i in 0..2 {
            for j in 0..2 {
                out.hess[i][j] += c * b.hess[i][j];
            }
        }
    }
    out
}

impl<T> From<BasisSample<T>> for (T, [T; 2], Mat2<T>) {
    fn from(s: BasisSample<T>) -> Self {
        (s.value, s.grad, s.hess)
    }
}
