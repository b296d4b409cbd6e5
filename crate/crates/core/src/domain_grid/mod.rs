//! Domains, disk meshes, P1 calculus and quadrature shared by every other module.

mod calculus;
mod geometry;
mod io;
mod mesh;
pub mod pairs;
pub mod quadrature;
mod sum;

pub use calculus::{
    gradient, holder_seminorm_estimate, integrate, integrate_singular, node_holder_seminorm,
    CellVector, Field, GridFunction,
};
pub use geometry::{dist, norm, Domain, DomainKind, Point};
pub use io::{read_field_csv, read_mesh_json, write_field_csv, write_mesh_json, MeshFile};
pub use mesh::{build_disk_mesh, build_mesh, CellGeom, Mesh};
pub use quadrature::{
    adaptive_gauss_kronrod, gauss_legendre, spherical_quadrature, QuadOptions, QuadResult,
    QuadratureRule, SingularSpec, SphericalRegion,
};
pub use sum::{ordered_sum, NeumaierSum};
