use serde::{Deserialize, Serialize};

use crate::fem::boundary_moments;
use crate::geometry::BoundaryEdge;
use crate::{Error, Result};

/// Catalog of analytic boundary tractions g(x, N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NeumannData {
    /// g = S·N for a constant symmetric S.
    EquilibratedLinear { s: [[f64; 2]; 2] },
    /// g = σ·N for the Airy stress of φ = a·x²y²: σ = a(2x², −4xy; −4xy, 2y²),
    /// divergence-free, hence free of net force and torque.
    TorqueFreePoly { a: f64 },
    /// A constant traction; carries a net force unless t = 0.
    ConstantTraction { t: [f64; 2] },
}

impl NeumannData {
    pub fn equilibrated_linear(s: [[f64; 2]; 2]) -> Self {
        Self::EquilibratedLinear { s }
    }

    pub fn zero() -> Self {
        Self::EquilibratedLinear { s: [[0.0; 2]; 2] }
    }

    pub fn catalog_id(&self) -> &'static str {
        match self {
            Self::EquilibratedLinear { .. } => "equilibrated_linear",
            Self::TorqueFreePoly { .. } => "torque_free_poly",
            Self::ConstantTraction { .. } => "constant_traction",
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match *self {
            Self::EquilibratedLinear { s } => Self::EquilibratedLinear { s: s.map(|r| r.map(|v| c * v)) },
            Self::TorqueFreePoly { a } => Self::TorqueFreePoly { a: c * a },
            Self::ConstantTraction { t } => Self::ConstantTraction { t: t.map(|v| c * v) },
        }
    }

    /// The stress whose normal component is the traction, where one exists.
    pub fn stress(&self, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        match *self {
            Self::EquilibratedLinear { s } => Some(s),
            Self::TorqueFreePoly { a } => {
                let (x, y) = (x[0], x[1]);
                Some([[2.0 * a * x * x, -4.0 * a * x * y], [-4.0 * a * x * y, 2.0 * a * y * y]])
            }
            Self::ConstantTraction { .. } => None,
        }
    }

    pub fn eval(&self, x: [f64; 2], n: [f64; 2]) -> [f64; 2] {
        match (self, self.stress(x)) {
            (_, Some(s)) => [s[0][0] * n[0] + s[0][1] * n[1], s[1][0] * n[0] + s[1][1] * n[1]],
            (Self::ConstantTraction { t }, None) => *t,
            _ => unreachable!(),
        }
    }

    /// ∫_{∂Ω} g·r_k for the three rigid motions.
    pub fn rigid_moments(&self, edges: &[BoundaryEdge], vertices: &[[f64; 2]]) -> [f64; 3] {
        boundary_moments(edges, vertices, |x, n| self.eval(x, n))
    }

    /// Rejects data with a net force or torque (tolerance 1e-10).
    pub fn validate(&self, edges: &[BoundaryEdge], vertices: &[[f64; 2]]) -> Result<()> {
        if let Self::EquilibratedLinear { s } = self {
            if (s[0][1] - s[1][0]).abs() > 1e-14 * (s[0][1].abs() + s[1][0].abs())
                || s.iter().flatten().any(|v| !v.is_finite())
            {
                return Err(Error::IncompatibleData(format!("stress {s:?} is not symmetric")));
            }
        }
        let m = self.rigid_moments(edges, vertices);
        let worst = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(worst <= 1e-10) {
            return Err(Error::IncompatibleData(format!("traction is not orthogonal to rigid motions: moments {m:?}")));
        }
        Ok(())
    }
}
