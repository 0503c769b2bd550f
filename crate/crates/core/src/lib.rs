//! Discontinuous Galerkin discretisation of the p-biharmonic problem
//! `Δ(|Δu|^{p-2} Δu) = f` on the unit square with clamped boundary data.
//!
//! The discrete Laplacian is the trace of an interior-penalty finite element
//! Hessian, assembled once as a sparse operator against an elementwise
//! orthonormal basis. The nonlinear Euler-Lagrange system is solved by a
//! damped Newton method with continuation in `p`.
//!
//! All numerical types are generic over [`Real`]; `f64` aliases are exported
//! at the crate root for everyday use.

pub mod analysis;
pub mod dg_space;
pub mod error;
pub mod fe_hessian;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod pbiharm;
pub mod quadrature;
pub mod scalar;
pub mod skeleton;
pub mod study;
pub mod vtk;

pub use error::{Error, Result};
pub use scalar::{Mat2, Point, Real};

pub type Mesh = mesh::Mesh<f64>;
pub type Facet = mesh::Facet<f64>;
pub type DgSpace = dg_space::DgSpace<f64>;
pub type DgFunction<'s> = dg_space::DgFunction<'s, f64>;
pub type HessianOperator<'s> = fe_hessian::HessianOperator<'s, f64>;
pub type SolveConfig = pbiharm::SolveConfig<f64>;
pub type SolveReport = pbiharm::SolveReport<f64>;
pub type ErrorRecord = analysis::ErrorRecord<f64>;

pub type Mesh32 = mesh::Mesh<f32>;
pub type DgSpace32 = dg_space::DgSpace<f32>;
