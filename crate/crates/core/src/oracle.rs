//! Brute-force reference for the truncation error of a scalar model
//! `g(y) = 1 / (a₀ + Σ_j b_j ξ(y_j))`, integrated with tensor-product
//! Gauss–Legendre quadrature over `[-1/2, 1/2]^{s'}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Transform;
use crate::lattice::TruncationModel;
use crate::theory::TheoryParams;

/// Largest reference dimension accepted by the tensor oracle.
pub const MAX_ORACLE_DIM: usize = 8;

/// Largest number of tensor-grid points evaluated (2^28).
pub const GRID_BUDGET: u64 = 1 << 28;

/// q-point Gauss–Legendre rule on `[-1/2, 1/2]` for the uniform
/// probability measure (weights sum to one). Nodes ascend.
pub fn gauss_legendre_rule(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=32).contains(&q) {
        return Err(Error::invalid(format!(
            "Gauss-Legendre order {q} outside [1, 32]"
        )));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_q
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [-1/2, 1/2]; halving the weights gives the uniform
        // probability measure
        nodes[i] = -0.5 * x;
        nodes[q - 1 - i] = 0.5 * x;
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, prev) = if q == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = if q == 0 {
        0.0
    } else {
        q as f64 * (x * p - prev) / (x * x - 1.0)
    };
    (p, d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarModelSpec {
    pub a0: f64,
    pub b: Vec<f64>,
    pub transform: Transform,
}

impl ScalarModelSpec {
    pub fn new(a0: f64, b: Vec<f64>, transform: Transform) -> Result<Self> {
        if b.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "oracle b entries must be finite and nonnegative",
            ));
        }
        if b.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("oracle b must be nonincreasing"));
        }
        let spread = transform.sup_abs() * b.iter().sum::<f64>();
        if !(a0 - spread > 0.0) {
            return Err(Error::Coercivity(format!(
                "a0 - sup|xi| * sum b = {a0} - {spread} <= 0"
            )));
        }
        Ok(Self { a0, b, transform })
    }

    /// `b_j = scale · j^{-decay}` for `j = 1..=dim`.
    pub fn power_law(
        a0: f64,
        scale: f64,
        decay: f64,
        dim: usize,
        transform: Transform,
    ) -> Result<Self> {
        Self::new(
            a0,
            (1..=dim).map(|j| scale * (j as f64).powf(-decay)).collect(),
            transform,
        )
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let arg: f64 = self.a0
            + y.iter()
                .zip(&self.b)
                .map(|(&yj, &bj)| bj * self.transform.eval(yj))
                .sum::<f64>();
        1.0 / arg
    }

    /// Regularity constants of `w ↦ 1/(a₀ + Σ b_j w_j)` on `[-1/2, 1/2]^{s'}`:
    /// `|∂^ν g| ≤ |ν|!/a_lo · (b/a_lo)^ν` with `a_lo = a₀ − Σ b_j / 2`.
    pub fn certified_params(&self, p: f64) -> Result<TheoryParams> {
        let a_lo = self.a0 - 0.5 * self.b.iter().sum::<f64>();
        if !(a_lo > 0.0) {
            return Err(Error::Coercivity(format!(
                "a0 - sum b / 2 = {a_lo} <= 0, no uniform regularity bound on the parameter box"
            )));
        }
        let k = crate::theory::taylor_order(p)?;
        let theta = TheoryParams::affine_theta(1.0 / a_lo, k + 2);
        let b = self.b.iter().map(|v| v / a_lo).collect();
        TheoryParams::new(theta, b, p, 1.0 / 12.0, self.transform.moment_constant())
    }
}

pub fn scalar_model(spec: &ScalarModelSpec, y: &[f64]) -> f64 {
    spec.value(y)
}

impl TruncationModel for ScalarModelSpec {
    fn squared_differences(&self, y: &[f64], dims: &[usize], out: &mut [f64]) -> Result<()> {
        let terms: Vec<f64> = y
            .iter()
            .zip(&self.b)
            .map(|(&yj, &bj)| bj * self.transform.eval(yj))
            .collect();
        let full = 1.0 / (self.a0 + terms.iter().sum::<f64>());
        for (o, &s) in out.iter_mut().zip(dims) {
            let trunc = 1.0 / (self.a0 + terms[..s.min(terms.len())].iter().sum::<f64>());
            *o = (full - trunc) * (full - trunc);
        }
        Ok(())
    }
}

/// `sqrt(∫ (g(y) − g(truncate(y, s)))² dy)` by q-point tensor Gauss–Legendre.
pub fn exact_l2_truncation_error(spec: &ScalarModelSpec, s: usize, q: usize) -> Result<f64> {
    let dim = spec.dim();
    if dim > MAX_ORACLE_DIM {
        return Err(Error::invalid(format!(
            "oracle dimension {dim} exceeds the tensor-grid cap of {MAX_ORACLE_DIM}"
        )));
    }
    if s > dim {
        return Err(Error::invalid(format!(
            "truncation {s} exceeds the model dimension {dim}"
        )));
    }
    if q < 8 {
        return Err(Error::invalid(format!(
            "oracle needs at least 8 points per dimension, got {q}"
        )));
    }
    let points = (q as f64).powi(dim as i32);
    if points > GRID_BUDGET as f64 {
        return Err(Error::GridBudget {
            points,
            budget: GRID_BUDGET as f64,
        });
    }
    if s == dim || dim == 0 {
        return Ok(0.0);
    }

    let (nodes, weights) = gauss_legendre_rule(q)?;
    // terms[j][i] = b_j ξ(node_i)
    let terms: Vec<Vec<f64>> = spec
        .b
        .iter()
        .map(|&bj| nodes.iter().map(|&y| bj * spec.transform.eval(y)).collect())
        .collect();

    let grid = TensorGrid {
        terms: &terms,
        weights: &weights,
        s,
    };
    let a0 = spec.a0;
    // parallel over the leading coordinate, summed in node order
    let leading: Vec<f64> = (0..q)
        .into_par_iter()
        .map(|i| {
            let t = terms[0][i];
            let trunc = if s >= 1 { a0 + t } else { a0 };
            weights[i] * grid.integrate(1, a0 + t, trunc)
        })
        .collect();
    Ok(leading.iter().sum::<f64>().sqrt())
}

struct TensorGrid<'a> {
    terms: &'a [Vec<f64>],
    weights: &'a [f64],
    s: usize,
}

impl TensorGrid<'_> {
    fn integrate(&self, dim: usize, full: f64, trunc: f64) -> f64 {
        if dim == self.terms.len() {
            let d = 1.0 / full - 1.0 / trunc;
            return d * d;
        }
        let in_head = dim < self.s;
        self.terms[dim]
            .iter()
            .zip(self.weights)
            .map(|(&t, &w)| {
                let next_trunc = if in_head { trunc + t } else { trunc };
                w * self.integrate(dim + 1, full + t, next_trunc)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules() {
        let (x, w) = gauss_legendre_rule(1).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre_rule(2).unwrap();
        let node = 1.0 / (2.0 * 3f64.sqrt());
        assert!((x[0] + node).abs() < 1e-15 && (x[1] - node).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let second: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((second - 1.0 / 12.0).abs() < 1e-15);
        assert!(gauss_legendre_rule(0).is_err());
        assert!(gauss_legendre_rule(33).is_err());
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        // ∫_{-1/2}^{1/2} y^m dy = (1/2)^m / (m + 1) for even m
        for q in 1..=32 {
            let (x, w) = gauss_legendre_rule(q).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14, "q = {q}");
            for m in (0..2 * q).step_by(2) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(m as i32)).sum();
                let want = 0.5f64.powi(m as i32) / (m as f64 + 1.0);
                assert!((got - want).abs() < 1e-15, "q = {q}, m = {m}");
            }
            // odd moments cancel by symmetry
            let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
            assert!(odd.abs() <= 1e-16);
        }
    }

    #[test]
    fn scalar_model_examples() {
        let spec = ScalarModelSpec::new(1.5, vec![0.4], Transform::Identity).unwrap();
        assert_eq!(spec.value(&[0.0]), 1.0 / 1.5);
        assert!((spec.value(&[0.5]) - 1.0 / (1.5 + 0.2)).abs() < 1e-15);
        let spec = ScalarModelSpec::power_law(1.5, 0.3, 2.0, 6, Transform::Periodic).unwrap();
        let spread = spec.transform.sup_abs() * spec.b.iter().sum::<f64>();
        for y in [[0.1; 6], [-0.5; 6], [0.25, -0.25, 0.4, 0.0, -0.1, 0.5]] {
            let v = spec.value(&y);
            assert!(1.0 / (1.5 + spread) <= v && v <= 1.0 / (1.5 - spread));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ScalarModelSpec::new(0.5, vec![1.0, 1.0], Transform::Identity).is_err());
        assert!(ScalarModelSpec::new(1.5, vec![0.1, 0.2], Transform::Identity).is_err());
    }

    #[test]
    fn trivial_errors_vanish() {
        let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 4, Transform::Identity).unwrap();
        assert_eq!(exact_l2_truncation_error(&spec, 4, 8).unwrap(), 0.0);
        let zero = ScalarModelSpec::new(1.5, vec![0.0; 4], Transform::Periodic).unwrap();
        for s in 0..=4 {
            assert_eq!(exact_l2_truncation_error(&zero, s, 8).unwrap(), 0.0);
        }
    }

    #[test]
    fn size_guards() {
        let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 9, Transform::Identity).unwrap();
        assert!(exact_l2_truncation_error(&spec, 3, 8).is_err());
        let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 8, Transform::Identity).unwrap();
        assert!(matches!(
            exact_l2_truncation_error(&spec, 3, 16),
            Err(Error::GridBudget { .. })
        ));
        assert!(exact_l2_truncation_error(&spec, 3, 4).is_err());
    }

    #[test]
    fn one_dimensional_closed_form() {
        // s' = 1, s = 0: ∫ (1/(a + b y) − 1/a)² dy has a closed form
        let (a, b) = (1.5, 0.8);
        let spec = ScalarModelSpec::new(a, vec![b], Transform::Identity).unwrap();
        let got = exact_l2_truncation_error(&spec, 0, 32).unwrap();
        let lo = a - b / 2.0;
        let hi = a + b / 2.0;
        // ∫ (1/u − 1/a)² du / b over [lo, hi]
        let anti = |u: f64| -1.0 / u - 2.0 * u.ln() / a + u / (a * a);
        let want = ((anti(hi) - anti(lo)) / b).sqrt();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn error_nonincreasing_in_s() {
        for t in [Transform::Identity, Transform::Periodic] {
            let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 6, t).unwrap();
            let errs: Vec<f64> = (0..=6)
                .map(|s| exact_l2_truncation_error(&spec, s, 8).unwrap())
                .collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
        }
    }

    #[test]
    fn certified_params_shape() {
        let spec = ScalarModelSpec::power_law(1.5, 0.1, 2.0, 6, Transform::Identity).unwrap();
        let params = spec.certified_params(0.501).unwrap();
        assert_eq!(params.k, 3);
        assert_eq!(params.theta_seq.len(), 5);
        assert!((params.c_mu - 1.0 / 12.0).abs() < 1e-16);
    }
}
