//! Cell and domain triangulations.

mod cdt;
mod cell;
mod domain;
mod io;
mod locate;
mod mesh;
mod shapes;

pub use cell::{build_unit_cell_mesh, CellMesh};
pub use domain::{
    boundary_distance, build_domain_mesh, build_domain_mesh_with_cell, build_plain_domain_mesh, enumerate_lattice,
    DomainMesh,
};
pub use io::{EdgeKind, MeshFile};
pub use locate::{Location, Locator};
pub use mesh::{BoundaryEdge, InterfaceEdge, Phase, TriMesh};
pub use shapes::{DomainShape, InclusionShape, ShapeKind, CELL_MARGIN};

pub(crate) use locate::barycentric;
