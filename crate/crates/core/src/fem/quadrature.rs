use crate::error::{Error, Result};

use super::mesh::Point;

/// Symmetric quadrature rule on a triangle in barycentric coordinates.
/// Weights are relative to the triangle area and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleQuadrature {
    order: usize,
    barycentric: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl TriangleQuadrature {
    /// Supported polynomial degrees of exactness: 1 (centroid), 2 (edge
    /// midpoints), and 3 to 5 (seven-point Radon rule).
    pub fn with_order(order: usize) -> Result<Self> {
        let (barycentric, weights) = match order {
            1 => (vec![[1.0 / 3.0; 3]], vec![1.0]),
            2 => (
                vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
                vec![1.0 / 3.0; 3],
            ),
            3..=5 => {
                let sq15 = 15f64.sqrt();
                let a = (6.0 - sq15) / 21.0;
                let b = (6.0 + sq15) / 21.0;
                let wa = (155.0 - sq15) / 1200.0;
                let wb = (155.0 + sq15) / 1200.0;
                (
                    vec![
                        [1.0 / 3.0; 3],
                        [a, a, 1.0 - 2.0 * a],
                        [a, 1.0 - 2.0 * a, a],
                        [1.0 - 2.0 * a, a, a],
                        [b, b, 1.0 - 2.0 * b],
                        [b, 1.0 - 2.0 * b, b],
                        [1.0 - 2.0 * b, b, b],
                    ],
                    vec![9.0 / 40.0, wa, wa, wa, wb, wb, wb],
                )
            }
            _ => {
                return Err(Error::invalid(format!(
                    "no triangle quadrature of order {order} (supported: 1 to 5)"
                )))
            }
        };
        Ok(Self {
            order,
            barycentric,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn barycentric(&self) -> &[[f64; 3]] {
        &self.barycentric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map_point(&self, q: usize, tri: &[Point; 3]) -> Point {
        let l = self.barycentric[q];
        [
            l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
            l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
        ]
    }

    /// Integral over `tri` of `f`.
    pub fn integrate(&self, tri: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        let area = 0.5
            * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
                - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
                .abs();
        let sum: f64 = (0..self.len())
            .map(|q| self.weights[q] * f(self.map_point(q, tri)))
            .sum();
        area * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    // ∫_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn weights_sum_to_one() {
        for order in 1..=5 {
            let rule = TriangleQuadrature::with_order(order).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn polynomial_exactness() {
        for (order, degree) in [(1, 1), (2, 2), (5, 5)] {
            let rule = TriangleQuadrature::with_order(order).unwrap();
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let got = rule.integrate(&REF, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let want = monomial_exact(a, b);
                    assert!(
                        (got - want).abs() < 1e-14,
                        "order {order} x^{a} y^{b}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn unsupported_order() {
        assert!(TriangleQuadrature::with_order(0).is_err());
        assert!(TriangleQuadrature::with_order(6).is_err());
    }
}
