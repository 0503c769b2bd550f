//! Average, jump and tensor-jump operators on the mesh skeleton.
//!
//! On an interior facet with owner `K1`, neighbor `K2` and normal `n` (from
//! `K1` to `K2`, so `n_{K2} = -n`):
//!
//! * `{v} = (v1 + v2)/2`, `[v] = v1 n_{K1} + v2 n_{K2} = (v1 - v2) n`
//! * `{q} = (q1 + q2)/2`, `[q] = q1·n_{K1} + q2·n_{K2}`
//! * `[[q]] = q1 ⊗ n_{K1} + q2 ⊗ n_{K2}`
//!
//! On boundary facets the average is the one-sided trace and the jumps use the
//! outward normal, with no exterior state.

use crate::dg_space::{combine, DgFunction, FacetSamples};
use crate::mesh::Mesh;
use crate::quadrature::SegmentRule;
use crate::scalar::{dot, Mat2, Point, Real};

/// Two-sided pointwise traces on one facet. `neighbor` is `None` on ∂Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T, V> {
    pub normal: Point<T>,
    pub owner: Vec<V>,
    pub neighbor: Option<Vec<V>>,
}

impl<T: Real, V: Clone> Trace<T, V> {
    /// The same trace with the roles of the two elements exchanged.
    /// Boundary traces are returned unchanged.
    pub fn swapped(&self) -> Self {
        match &self.neighbor {
            Some(nb) => Self {
                normal: [-self.normal[0], -self.normal[1]],
                owner: nb.clone(),
                neighbor: Some(self.owner.clone()),
            },
            None => self.clone(),
        }
    }
}

/// Value and gradient traces of a scalar broken field at the quadrature points
/// of one facet.
#[derive(Debug, Clone)]
pub struct FacetTracePair<T> {
    pub facet: usize,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub value: Trace<T, T>,
    pub gradient: Trace<T, [T; 2]>,
}

impl<T: Real> FacetTracePair<T> {
    pub fn new(v: &DgFunction<'_, T>, samples: &FacetSamples<T>) -> Self {
        let nb = v.space().dofs_per_element();
        let side = |k: usize, basis: &[crate::dg_space::BasisSample<T>]| -> (Vec<T>, Vec<[T; 2]>) {
            let c = v.element_coeffs(k);
            (0..samples.points.len())
                .map(|q| {
                    let s = combine(c, &basis[q * nb..(q + 1) * nb]);
                    (s.value, s.grad)
                })
                .unzip()
        };
        let (v1, g1) = side(samples.owner, &samples.owner_basis);
        let (v2, g2) = match (samples.neighbor, &samples.neighbor_basis) {
            (Some(k), Some(b)) => {
                let (v, g) = side(k, b);
                (Some(v), Some(g))
            }
            _ => (None, None),
        };
        Self {
            facet: samples.facet,
            points: samples.points.clone(),
            weights: samples.weights.clone(),
            value: Trace { normal: samples.normal, owner: v1, neighbor: v2 },
            gradient: Trace { normal: samples.normal, owner: g1, neighbor: g2 },
        }
    }
}

pub fn avg_scalar<T: Real>(tr: &Trace<T, T>) -> Vec<T> {
    let half = T::lit(0.5);
    match &tr.neighbor {
        Some(nb) => tr.owner.iter().zip(nb).map(|(&a, &b)| half * (a + b)).collect(),
        None => tr.owner.clone(),
    }
}

pub fn jump_scalar<T: Real>(tr: &Trace<T, T>) -> Vec<Point<T>> {
    let n = tr.normal;
    let diff: Vec<T> = match &tr.neighbor {
        Some(nb) => tr.owner.iter().zip(nb).map(|(&a, &b)| a - b).collect(),
        None => tr.owner.clone(),
    };
    diff.into_iter().map(|d| [d * n[0], d * n[1]]).collect()
}

pub fn avg_vector<T: Real>(tr: &Trace<T, [T; 2]>) -> Vec<[T; 2]> {
    let half = T::lit(0.5);
    match &tr.neighbor {
        Some(nb) => tr.owner.iter().zip(nb).map(|(a, b)| [half * (a[0] + b[0]), half * (a[1] + b[1])]).collect(),
        None => tr.owner.clone(),
    }
}

pub fn jump_vector<T: Real>(tr: &Trace<T, [T; 2]>) -> Vec<T> {
    let n = tr.normal;
    match &tr.neighbor {
        Some(nb) => tr.owner.iter().zip(nb).map(|(a, b)| dot(*a, n) - dot(*b, n)).collect(),
        None => tr.owner.iter().map(|a| dot(*a, n)).collect(),
    }
}

pub fn tensor_jump<T: Real>(tr: &Trace<T, [T; 2]>) -> Vec<Mat2<T>> {
    let n = tr.normal;
    let outer = |q: [T; 2]| [[q[0] * n[0], q[0] * n[1]], [q[1] * n[0], q[1] * n[1]]];
    match &tr.neighbor {
        Some(nb) => tr.owner.iter().zip(nb).map(|(a, b)| outer([a[0] - b[0], a[1] - b[1]])).collect(),
        None => tr.owner.iter().map(|a| outer(*a)).collect(),
    }
}

/// Residuals of the elementwise integration identities
/// `Σ_K ∫_{∂K} φ q·n_K = ∫_E [q]{φ} + ∫_{E∪∂Ω} [φ]·{q}` and its tensor form
/// `Σ_K ∫_{∂K} φ q⊗n_K = ∫_E [[q]]{φ} + ∫_{E∪∂Ω} {q}⊗[φ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResidual<T> {
    pub scalar: T,
    pub tensor: T,
    /// Sum of absolute element-boundary contributions; residuals are judged relative to it.
    pub scale: T,
}

impl<T: Real> IntegrationResidual<T> {
    pub fn relative(&self) -> (T, T) {
        let s = self.scale.max(T::min_positive_value());
        (self.scalar / s, self.tensor / s)
    }
}

/// Evaluates both sides of the elementwise integration identities for a scalar
/// field `phi` and a vector field `q = (q[0], q[1])` in a common space.
///
/// The left side is integrated element by element along each element's own
/// edges; the right side facet by facet through the trace operators.
pub fn check_elementwise_integration<T: Real>(
    phi: &DgFunction<'_, T>,
    q: [&DgFunction<'_, T>; 2],
) -> IntegrationResidual<T> {
    let space = phi.space();
    let mesh: &Mesh<T> = space.mesh();
    let rule = SegmentRule::<T>::new(2 * space.degree() + 1);

    let mut lhs_scalar = T::zero();
    let mut lhs_tensor = [[T::zero(); 2]; 2];
    let mut scale = T::zero();
    for k in 0..mesh.num_elements() {
        for f in mesh.element_facets(k) {
            let facet = &mesh.facets[f];
            let n = mesh.outward_normal(k, f);
            let (a, b) = (mesh.vertices[facet.vertices[0]], mesh.vertices[facet.vertices[1]]);
            let mut contrib = T::zero();
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let wl = w * facet.length;
                let ph = phi.value_physical(k, x);
                let qv = [q[0].value_physical(k, x), q[1].value_physical(k, x)];
                contrib += wl * ph * dot(qv, n);
                for i in 0..2 {
                    for j in 0..2 {
                        lhs_tensor[i][j] += wl * ph * qv[i] * n[j];
                    }
                }
            }
            lhs_scalar += contrib;
            scale += contrib.abs();
        }
    }

    let mut rhs_scalar = T::zero();
    let mut rhs_tensor = [[T::zero(); 2]; 2];
    for f in 0..mesh.num_facets() {
        let samples = space.facet_samples(f, &rule);
        let tp = FacetTracePair::new(phi, &samples);
        let q0 = FacetTracePair::new(q[0], &samples);
        let q1 = FacetTracePair::new(q[1], &samples);
        let zip = |a: &Vec<T>, b: &Vec<T>| a.iter().zip(b).map(|(&x, &y)| [x, y]).collect::<Vec<_>>();
        let qtrace = Trace {
            normal: samples.normal,
            owner: zip(&q0.value.owner, &q1.value.owner),
            neighbor: q0.value.neighbor.as_ref().zip(q1.value.neighbor.as_ref()).map(|(a, b)| zip(a, b)),
        };
        let avg_phi = avg_scalar(&tp.value);
        let jump_phi = jump_scalar(&tp.value);
        let avg_q = avg_vector(&qtrace);
        let jump_q = jump_vector(&qtrace);
        let tjump_q = tensor_jump(&qtrace);
        let interior = samples.neighbor.is_some();
        for (qp, &w) in samples.weights.iter().enumerate() {
            if interior {
                rhs_scalar += w * jump_q[qp] * avg_phi[qp];
            }
            rhs_scalar += w * dot(jump_phi[qp], avg_q[qp]);
            for i in 0..2 {
                for j in 0..2 {
                    if interior {
                        rhs_tensor[i][j] += w * tjump_q[qp][i][j] * avg_phi[qp];
                    }
                    rhs_tensor[i][j] += w * avg_q[qp][i] * jump_phi[qp][j];
                }
            }
        }
    }

    let tensor = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (lhs_tensor[i][j] - rhs_tensor[i][j]).abs())
        .fold(T::zero(), T::max);
    IntegrationResidual { scalar: (lhs_scalar - rhs_scalar).abs(), tensor, scale }
}
