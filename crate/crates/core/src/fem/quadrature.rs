//! Triangle and line quadrature rules.
#![allow(clippy::excessive_precision)]

/// Six-point symmetric rule on triangles, exact for polynomials of degree 4.
/// Points are barycentric; weights sum to one (multiply by the area).
pub const TRI6_BARY: [[f64; 3]; 6] = {
    const A1: f64 = 0.445_948_490_915_964_886;
    const B1: f64 = 1.0 - 2.0 * A1;
    const A2: f64 = 0.091_576_213_509_770_743;
    const B2: f64 = 1.0 - 2.0 * A2;
    [[A1, A1, B1], [A1, B1, A1], [B1, A1, A1], [A2, A2, B2], [A2, B2, A2], [B2, A2, A2]]
};

pub const TRI6_WEIGHTS: [f64; 6] = {
    const W1: f64 = 0.223_381_589_678_011_466;
    const W2: f64 = 0.109_951_743_655_321_868;
    [W1, W1, W1, W2, W2, W2]
};

/// Four-point Gauss–Legendre rule on [0, 1] (exact to degree 7).
pub const GAUSS4_POINTS: [f64; 4] = [
    0.5 - 0.5 * 0.861_136_311_594_052_6,
    0.5 - 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.339_981_043_584_856_3,
    0.5 + 0.5 * 0.861_136_311_594_052_6,
];

pub const GAUSS4_WEIGHTS: [f64; 4] = [
    0.5 * 0.347_854_845_137_453_86,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.652_145_154_862_546_1,
    0.5 * 0.347_854_845_137_453_86,
];

/// Maps barycentric coordinates to a point of the triangle.
#[inline]
pub fn bary_point(c: &[[f64; 2]; 3], l: [f64; 3]) -> [f64; 2] {
    [l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0], l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
    fn exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn triangle_rule_exact_to_degree_four() {
        let c = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..=4 {
            for b in 0..=(4 - a) {
                let q: f64 = TRI6_BARY
                    .iter()
                    .zip(TRI6_WEIGHTS)
                    .map(|(l, w)| {
                        let p = bary_point(&c, *l);
                        w * 0.5 * p[0].powi(a as i32) * p[1].powi(b as i32)
                    })
                    .sum();
                assert!((q - exact(a, b)).abs() < 1e-15, "x^{a} y^{b}: {q} vs {}", exact(a, b));
            }
        }
    }

    #[test]
    fn x2y2_over_unit_cell() {
        // Y split into two triangles; ∫ x²y² over (-1/2, 1/2)² = 1/144.
        let tris = [[[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5]], [[-0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]];
        let q: f64 = tris
            .iter()
            .flat_map(|c| {
                TRI6_BARY.iter().zip(TRI6_WEIGHTS).map(move |(l, w)| {
                    let p = bary_point(c, *l);
                    w * 0.5 * p[0] * p[0] * p[1] * p[1]
                })
            })
            .sum();
        assert!((q - 1.0 / 144.0).abs() < 1e-16);
    }

    #[test]
    fn gauss_line_exact_to_degree_seven() {
        for k in 0..=7 {
            let q: f64 = GAUSS4_POINTS.iter().zip(GAUSS4_WEIGHTS).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
