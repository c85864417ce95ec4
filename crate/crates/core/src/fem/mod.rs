//! Taylor–Hood discretization: P2 displacements, P1 fluid pressures.

mod assemble;
mod constraints;
mod field_io;
mod material;
mod norms;
pub mod quadrature;
mod space;
mod sparse;

pub use assemble::{
    assemble_a, assemble_b, assemble_h1_gram, assemble_mass, assemble_neumann_load, assemble_scalar_load,
    assemble_stress_load, assemble_tensor_form, boundary_moments, boundary_rigid_rows, integrate, lame_tensor,
    mean_rows, Tensor4,
};
pub use constraints::{constrain, project_zero_mean, rigid_coefficients, rigid_motion_basis, ConstraintRows};
pub use field_io::{read_field, read_raw, write_field};
pub use material::MaterialParams;
pub use norms::{grad_at_quadpoints, h1_norm, h1_seminorm, l2_norm};
pub use space::{p2_grads, p2_values, ConstraintKind, ElemGeom, FEField, FESpace, Family, P2_EDGES};
pub use sparse::SparseOperator;
