use crate::error::{Error, Result};

use super::assembly::{CsrMatrix, LinearSystem};
use super::solution::FemSolution;

pub const DEFAULT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// ‖b − A x‖ / ‖b‖ of the returned iterate (true residual, not recursive).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Stops once the true residual satisfies `‖r‖ ≤ rtol ‖b‖`. When the
/// recursively updated residual claims convergence but the true one
/// disagrees, the residual is recomputed and iteration continues.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "rhs length {} for a {n}x{n} matrix",
            b.len()
        )));
    }
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = rtol * b_norm;

    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: dot(&r, &r).sqrt() / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }

        let mut r_norm = dot(&r, &r).sqrt();
        if r_norm <= target {
            true_residual(a, b, &x, &mut r);
            r_norm = dot(&r, &r).sqrt();
            if r_norm <= target {
                return Ok(CgOutcome {
                    x,
                    iterations: it,
                    relative_residual: r_norm / b_norm,
                });
            }
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    true_residual(a, b, &x, &mut r);
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / b_norm,
    })
}

/// Solve with the default tolerance and an iteration cap of ten times the
/// number of unknowns.
pub fn solve<'m>(system: &LinearSystem<'m>) -> Result<FemSolution<'m>> {
    let n = system.matrix.dim();
    let cap = (10 * n).max(10);
    let outcome = conjugate_gradient(&system.matrix, &system.rhs, DEFAULT_RTOL, cap)?;
    Ok(FemSolution::from_interior(system.mesh, &outcome.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_system, TriangularMesh};

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let mesh = TriangularMesh::unit_square(6).unwrap();
        let sys = assemble_system(&mesh, |_| 1.0, |_| 0.0, 2).unwrap();
        let u = solve(&sys).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_meets_tolerance() {
        let mesh = TriangularMesh::unit_square(12).unwrap();
        let sys = assemble_system(&mesh, |p| 1.0 + p[0] * p[1], |p| p[0], 2).unwrap();
        let out = conjugate_gradient(&sys.matrix, &sys.rhs, DEFAULT_RTOL, 10_000).unwrap();
        let ax = sys.matrix.mul_vec(&out.x);
        let res: f64 = ax
            .iter()
            .zip(&sys.rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let b: f64 = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * b);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let mesh = TriangularMesh::unit_square(16).unwrap();
        let sys = assemble_system(&mesh, |_| 1.0, |_| 1.0, 2).unwrap();
        match conjugate_gradient(&sys.matrix, &sys.rhs, DEFAULT_RTOL, 2) {
            Err(Error::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-10 && residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
