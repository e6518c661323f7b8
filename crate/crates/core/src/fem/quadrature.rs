//! Quadrature rules on the reference triangle and on edges.

/// Symmetric rule with barycentric points; weights sum to one and are
/// multiplied by the triangle area by the caller.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    pub degree: usize,
}

const A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
const B1: f64 = 0.108_103_018_168_070_227_363_341_492_234;
const A2: f64 = 0.091_576_213_509_770_743_459_571_463_402;
const B2: f64 = 0.816_847_572_980_458_513_080_857_073_196;
const W1: f64 = 0.223_381_589_678_011_465_944_640_566_660;
const W2: f64 = 0.109_951_743_655_321_867_388_692_766_673;

/// Six-point rule, exact for polynomials of total degree 4.
pub const DEGREE_4: TriangleRule = TriangleRule {
    points: &[
        [A1, A1, B1],
        [A1, B1, A1],
        [B1, A1, A1],
        [A2, A2, B2],
        [A2, B2, A2],
        [B2, A2, A2],
    ],
    weights: &[W1, W1, W1, W2, W2, W2],
    degree: 4,
};

/// Three-point Gauss–Legendre on `[0, 1]`, exact to degree 5.
pub const EDGE_GAUSS_3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn degree_four_rule_is_exact_on_monomials() {
        // On the reference triangle (0,0),(1,0),(0,1):
        // int x^a y^b = a! b! / (a + b + 2)!, area 1/2.
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let q: f64 = DEGREE_4
                    .points
                    .iter()
                    .zip(DEGREE_4.weights)
                    .map(|(p, w)| w * 0.5 * p[1].powi(a as i32) * p[2].powi(b as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-15, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_five() {
        for k in 0..=5 {
            let q: f64 = EDGE_GAUSS_3.iter().map(|(s, w)| w * s.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
