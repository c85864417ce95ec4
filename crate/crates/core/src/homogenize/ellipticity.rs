use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::tensor::HomogenizedTensor;
use crate::fem::MaterialParams;

/// Grid resolution per angle of the rank-one minimization.
pub const ANGLE_GRID: usize = 720;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub min_value: f64,
    pub bound: f64,
    pub pass: bool,
    /// Minimizing angles (θ, φ) of ξ = (cos θ, sin θ), η = (cos φ, sin φ).
    pub argmin: [f64; 2],
}

fn form(t: &HomogenizedTensor, th: f64, ph: f64) -> f64 {
    t.rank_one([th.cos(), th.sin()], [ph.cos(), ph.sin()])
}

/// k-th point of the Halton sequence in base `b`.
fn halton(mut k: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while k > 0 {
        f /= b as f64;
        r += f * (k % b) as f64;
        k /= b;
    }
    r
}

/// Minimum of the rank-one form over unit ξ, η: a full angle grid, local
/// polishing of the best grid point, and `n_samples` quasi-random pairs
/// starting at index `seed`.
pub fn check_ellipticity(
    t: &HomogenizedTensor,
    params: &MaterialParams,
    n_samples: usize,
    seed: u64,
) -> EllipticityReport {
    // The form is even in ξ and in η, so angles in [0, π) cover all pairs.
    let step = PI / ANGLE_GRID as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for a in 0..ANGLE_GRID {
        for b in 0..ANGLE_GRID {
            let (th, ph) = (a as f64 * step, b as f64 * step);
            let v = form(t, th, ph);
            if v < best.0 {
                best = (v, th, ph);
            }
        }
    }
    // compass search from the grid minimizer
    let mut h = step;
    while h > 1e-12 {
        let mut moved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = form(t, best.1 + dt, best.2 + dp);
            if v < best.0 {
                best = (v, best.1 + dt, best.2 + dp);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    for k in 0..n_samples as u64 {
        let (th, ph) = (PI * halton(seed + k + 1, 2), PI * halton(seed + k + 1, 3));
        let v = form(t, th, ph);
        if v < best.0 {
            best = (v, th, ph);
        }
    }
    let bound = params.ellipticity_bound();
    EllipticityReport {
        min_value: best.0,
        bound,
        pass: best.0 >= bound - 1e-9 * bound.abs(),
        argmin: [best.1.rem_euclid(PI), best.2.rem_euclid(PI)],
    }
}
