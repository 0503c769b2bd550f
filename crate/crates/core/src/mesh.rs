//! Conforming triangulations of the unit square with facet connectivity.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::{dot, Point, Real};

/// An edge of the triangulation.
///
/// `owner` is always the element with the smaller index and `normal` points
/// out of the owner, i.e. towards `neighbor` (or out of the domain).
#[derive(Debug, Clone, PartialEq)]
pub struct Facet<T> {
    pub vertices: [usize; 2],
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub normal: Point<T>,
    pub length: T,
    pub boundary: bool,
}

impl<T: Real> Facet<T> {
    pub fn is_interior(&self) -> bool {
        self.neighbor.is_some()
    }
}

/// Affine map `x = origin + jacobian · ξ` from the unit reference triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap<T> {
    pub origin: Point<T>,
    pub jacobian: [[T; 2]; 2],
    pub inverse: [[T; 2]; 2],
    pub det: T,
}

impl<T: Real> AffineMap<T> {
    pub fn new(a: Point<T>, b: Point<T>, c: Point<T>) -> Self {
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inverse = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Self { origin: a, jacobian: j, inverse, det }
    }

    #[inline]
    pub fn to_physical(&self, xi: Point<T>) -> Point<T> {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    #[inline]
    pub fn to_reference(&self, x: Point<T>) -> Point<T> {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }
}

/// Simplicial triangulation of a polygonal domain. Immutable once built.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub vertices: Vec<Point<T>>,
    pub elements: Vec<[usize; 3]>,
    pub facets: Vec<Facet<T>>,
    /// Longest edge of each element (`h_K`).
    pub element_diameters: Vec<T>,
    /// Radius of the inscribed circle of each element (`ρ_K`).
    pub inradii: Vec<T>,
    element_facets: Vec<[usize; 3]>,
    maps: Vec<AffineMap<T>>,
}

/// Interior and boundary facet indices, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl<T: Real> Mesh<T> {
    /// Uniform `n × n` grid of the unit square, every cell cut along the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn build_structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("structured mesh needs n >= 1".into()));
        }
        let nf = T::from_usize_lossy(n);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf]);
            }
        }
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }
        Self::from_triangles(vertices, elements)
    }

    /// Builds the facet structure for an arbitrary conforming triangle list.
    /// Clockwise triangles are reoriented.
    pub fn from_triangles(vertices: Vec<Point<T>>, mut elements: Vec<[usize; 3]>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("mesh has no elements".into()));
        }
        let mut maps = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter_mut().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("element {k} references a missing vertex")));
            }
            let mut map = AffineMap::new(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
            if map.det < T::zero() {
                el.swap(1, 2);
                map = AffineMap::new(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
            }
            if !(map.det > T::zero()) {
                return Err(Error::InvalidArgument(format!("element {k} is degenerate")));
            }
            maps.push(map);
        }

        let mut edge_owners: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (k, el) in elements.iter().enumerate() {
            for local in 0..3 {
                let (a, b) = (el[(local + 1) % 3], el[(local + 2) % 3]);
                edge_owners.entry((a.min(b), a.max(b))).or_default().push((k, local));
            }
        }

        let mut facets = Vec::with_capacity(edge_owners.len());
        let mut element_facets = vec![[usize::MAX; 3]; elements.len()];
        for (&(a, b), owners) in &edge_owners {
            if owners.len() > 2 {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) shared by more than two elements")));
            }
            // owners are pushed in ascending element order
            let (owner, owner_local) = owners[0];
            let neighbor = owners.get(1).map(|&(k, _)| k);
            let (pa, pb) = (vertices[a], vertices[b]);
            let t = [pb[0] - pa[0], pb[1] - pa[1]];
            let length = dot(t, t).sqrt();
            let mut normal = [t[1] / length, -t[0] / length];
            let opposite = vertices[elements[owner][owner_local]];
            if dot(normal, [opposite[0] - pa[0], opposite[1] - pa[1]]) > T::zero() {
                normal = [-normal[0], -normal[1]];
            }
            let idx = facets.len();
            for &(k, local) in owners {
                element_facets[k][local] = idx;
            }
            facets.push(Facet { vertices: [a, b], owner, neighbor, normal, length, boundary: neighbor.is_none() });
        }

        let mut element_diameters = Vec::with_capacity(elements.len());
        let mut inradii = Vec::with_capacity(elements.len());
        for (el, map) in elements.iter().zip(&maps) {
            let lens: Vec<T> = (0..3)
                .map(|i| {
                    let (p, q) = (vertices[el[i]], vertices[el[(i + 1) % 3]]);
                    ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
                })
                .collect();
            let perimeter = lens[0] + lens[1] + lens[2];
            element_diameters.push(lens[0].max(lens[1]).max(lens[2]));
            // ρ = 2|K| / perimeter and |K| = det/2
            inradii.push(map.det / perimeter);
        }

        Ok(Self { vertices, elements, facets, element_diameters, inradii, element_facets, maps })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn map(&self, element: usize) -> &AffineMap<T> {
        &self.maps[element]
    }

    pub fn area(&self, element: usize) -> T {
        self.maps[element].det / T::lit(2.0)
    }

    /// Facet indices of `element`; entry `i` is the edge opposite local vertex `i`.
    pub fn element_facets(&self, element: usize) -> [usize; 3] {
        self.element_facets[element]
    }

    /// Outward unit normal of `element` on facet `facet`.
    pub fn outward_normal(&self, element: usize, facet: usize) -> Point<T> {
        let f = &self.facets[facet];
        if f.owner == element {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    pub fn skeleton(&self) -> Skeleton {
        let (interior, boundary) = (0..self.facets.len()).partition(|&i| self.facets[i].is_interior());
        Skeleton { interior, boundary }
    }

    /// `min_K ρ_K / h_K`.
    pub fn shape_regularity(&self) -> T {
        self.inradii
            .iter()
            .zip(&self.element_diameters)
            .map(|(&r, &h)| r / h)
            .fold(T::infinity(), T::min)
    }

    pub fn meshsize(&self) -> T {
        self.element_diameters.iter().copied().fold(T::zero(), T::max)
    }

    pub fn total_area(&self) -> T {
        (0..self.num_elements()).map(|k| self.area(k)).sum()
    }
}
