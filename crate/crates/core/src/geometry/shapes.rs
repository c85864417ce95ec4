use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Minimum gap kept between the inclusion and the cell boundary.
pub const CELL_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Disk,
    Square,
}

/// The inclusion ω inside the unit cell Y = (-1/2, 1/2)².
///
/// `size` is the radius of a disk or the half-width of an axis-aligned square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionShape {
    pub kind: ShapeKind,
    #[serde(default)]
    pub center: [f64; 2],
    pub size: f64,
}

impl InclusionShape {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Self { kind: ShapeKind::Disk, center, size: radius }
    }

    pub fn square(center: [f64; 2], half_width: f64) -> Self {
        Self { kind: ShapeKind::Square, center, size: half_width }
    }

    /// Checks that the closure of ω keeps at least [`CELL_MARGIN`] away from ∂Y.
    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0) || !self.size.is_finite() {
            return Err(Error::InvalidShape(format!("size must be positive, got {}", self.size)));
        }
        let lim = 0.5 - CELL_MARGIN;
        for c in self.center {
            if !c.is_finite() || c - self.size < -lim || c + self.size > lim {
                return Err(Error::InvalidShape(format!(
                    "{:?} of size {} at {:?} comes within {} of the cell boundary",
                    self.kind, self.size, self.center, CELL_MARGIN
                )));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk => PI * self.size * self.size,
            ShapeKind::Square => 4.0 * self.size * self.size,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk => 2.0 * PI * self.size,
            ShapeKind::Square => 8.0 * self.size,
        }
    }

    pub fn contains(&self, y: [f64; 2]) -> bool {
        let dx = y[0] - self.center[0];
        let dy = y[1] - self.center[1];
        match self.kind {
            ShapeKind::Disk => dx * dx + dy * dy < self.size * self.size,
            ShapeKind::Square => dx.abs() < self.size && dy.abs() < self.size,
        }
    }

    /// Counter-clockwise boundary polygon with chords no longer than `h`.
    ///
    /// Disk vertex counts are rounded up to a multiple of four so the polygon
    /// keeps the reflection symmetries of the cell.
    pub fn boundary_polygon(&self, h: f64) -> Vec<[f64; 2]> {
        let [cx, cy] = self.center;
        match self.kind {
            ShapeKind::Disk => {
                let r = self.size;
                let mut n = ((2.0 * PI * r / h).ceil() as usize).max(8);
                n = n.div_ceil(4) * 4;
                // chord = 2 r sin(pi/n) <= 2 pi r / n <= h
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        [cx + r * t.cos(), cy + r * t.sin()]
                    })
                    .collect()
            }
            ShapeKind::Square => {
                let a = self.size;
                let per_side = ((2.0 * a / h).ceil() as usize).max(1);
                square_loop([cx, cy], a, per_side)
            }
        }
    }
}

/// Points on the boundary of an axis-aligned square, counter-clockwise from
/// the lower-left corner, `per_side` segments per side.
pub(crate) fn square_loop(center: [f64; 2], a: f64, per_side: usize) -> Vec<[f64; 2]> {
    let [cx, cy] = center;
    let t = |k: usize| -a + 2.0 * a * k as f64 / per_side as f64;
    let mut pts = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        pts.push([cx + t(k), cy - a]);
    }
    for k in 0..per_side {
        pts.push([cx + a, cy + t(k)]);
    }
    for k in 0..per_side {
        pts.push([cx - t(k), cy + a]);
    }
    for k in 0..per_side {
        pts.push([cx - a, cy - t(k)]);
    }
    pts
}

/// The macroscopic domain Ω, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainShape {
    pub kind: ShapeKind,
    /// Radius of a disk or half-width of a square (physical length).
    pub size: f64,
}

impl DomainShape {
    pub fn disk(radius: f64) -> Self {
        Self { kind: ShapeKind::Disk, size: radius }
    }

    pub fn square(half_width: f64) -> Self {
        Self { kind: ShapeKind::Square, size: half_width }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0) || !self.size.is_finite() {
            return Err(Error::Config(format!("domain size must be positive, got {}", self.size)));
        }
        Ok(())
    }

    /// Squares violate the smooth-boundary assumption of the theory.
    pub fn is_conforming(&self) -> bool {
        self.kind == ShapeKind::Disk
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk => PI * self.size * self.size,
            ShapeKind::Square => 4.0 * self.size * self.size,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk => 2.0 * PI * self.size,
            ShapeKind::Square => 8.0 * self.size,
        }
    }

    /// Strict interior test.
    pub fn contains_strict(&self, x: [f64; 2]) -> bool {
        match self.kind {
            ShapeKind::Disk => x[0] * x[0] + x[1] * x[1] < self.size * self.size,
            ShapeKind::Square => x[0].abs() < self.size && x[1].abs() < self.size,
        }
    }

    /// Exact Euclidean distance from `x` to ∂Ω.
    pub fn distance_to_boundary(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            ShapeKind::Disk => (self.size - x[0].hypot(x[1])).abs(),
            ShapeKind::Square => {
                let a = self.size;
                let (ax, ay) = (x[0].abs(), x[1].abs());
                if ax <= a && ay <= a {
                    (a - ax).min(a - ay)
                } else {
                    let dx = (ax - a).max(0.0);
                    let dy = (ay - a).max(0.0);
                    dx.hypot(dy)
                }
            }
        }
    }

    /// Gradient of `distance_to_boundary` inside Ω (zero where it is not
    /// differentiable: the centre of the disk, the diagonals of the square).
    pub fn distance_gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match self.kind {
            ShapeKind::Disk => {
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    [0.0, 0.0]
                } else {
                    [-x[0] / r, -x[1] / r]
                }
            }
            ShapeKind::Square => {
                let (ax, ay) = (x[0].abs(), x[1].abs());
                if ax > ay {
                    [-x[0].signum(), 0.0]
                } else if ay > ax {
                    [0.0, -x[1].signum()]
                } else {
                    [0.0, 0.0]
                }
            }
        }
    }

    /// Counter-clockwise boundary polygon with vertices on ∂Ω.
    pub fn boundary_polygon(&self, h: f64) -> Vec<[f64; 2]> {
        match self.kind {
            ShapeKind::Disk => {
                let r = self.size;
                let n = ((2.0 * PI * r / h).ceil() as usize).max(16).div_ceil(4) * 4;
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        [r * t.cos(), r * t.sin()]
                    })
                    .collect()
            }
            ShapeKind::Square => {
                let per_side = ((2.0 * self.size / h).ceil() as usize).max(1);
                square_loop([0.0, 0.0], self.size, per_side)
            }
        }
    }
}
