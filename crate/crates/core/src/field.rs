//! Parametric diffusion coefficient
//! `a(x, y) = a₀ + Σ_j ξ(y_j) j^{-ϑ} sin(jπx₁) sin(jπx₂)`
//! with an optional periodic reparameterization ξ of each variable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    /// ξ(y) = y (affine model)
    Identity,
    /// ξ(y) = sin(2πy)/√6 (periodic model)
    Periodic,
}

impl Transform {
    #[inline]
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Transform::Identity => y,
            Transform::Periodic => (2.0 * PI * y).sin() / 6f64.sqrt(),
        }
    }

    /// sup over [-1/2, 1/2] of |ξ|.
    pub fn sup_abs(self) -> f64 {
        match self {
            Transform::Identity => 0.5,
            Transform::Periodic => 1.0 / 6f64.sqrt(),
        }
    }

    /// Bound on ∫|ξ(y)|^k dy over the uniform measure for all k ≥ 2; the
    /// maximum is attained at k = 2 and equals 1/12 for both transforms.
    pub fn moment_constant(self) -> f64 {
        match self {
            // ∫ y² dy = 1/12
            Transform::Identity => 1.0 / 12.0,
            // (1/6) ∫ sin²(2πy) dy = 1/12
            Transform::Periodic => 1.0 / 12.0,
        }
    }

    pub fn apply(self, y: &[f64]) -> Result<Vec<f64>> {
        if let Some((j, v)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 0.5)) {
            return Err(Error::invalid(format!(
                "parameter y_{} = {v} lies outside [-1/2, 1/2]",
                j + 1
            )));
        }
        Ok(y.iter().map(|&v| self.eval(v)).collect())
    }
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Transform::Identity => "identity",
            Transform::Periodic => "periodic",
        })
    }
}

/// Keep the first `s` components of `y`, zero the rest.
pub fn truncate(y: &[f64], s: usize) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(j, &v)| if j < s { v } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityBounds {
    pub a_min: f64,
    pub a_max: f64,
    /// a_min computed with the full series Σ_{j≥1} j^{-ϑ} instead of the
    /// capped sum. Reported only.
    pub a_min_infinite: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionFieldSpec {
    pub a0: f64,
    pub decay: f64,
    pub transform: Transform,
    pub max_modes: usize,
}

impl DiffusionFieldSpec {
    /// Validated spec; fails when the coefficient can reach zero.
    pub fn new(a0: f64, decay: f64, transform: Transform, max_modes: usize) -> Result<Self> {
        let spec = Self {
            a0,
            decay,
            transform,
            max_modes,
        };
        spec.coercivity_bounds()?;
        Ok(spec)
    }

    #[inline]
    pub fn mode_amplitude(&self, j: usize) -> f64 {
        (j as f64).powf(-self.decay)
    }

    /// ψ_j(x) = j^{-ϑ} sin(jπx₁) sin(jπx₂), 1-based `j`.
    #[inline]
    pub fn mode(&self, j: usize, x: Point) -> f64 {
        let jf = j as f64;
        self.mode_amplitude(j) * (jf * PI * x[0]).sin() * (jf * PI * x[1]).sin()
    }

    /// Coefficient at `x` for the parameters `y` (untransformed, length ≤
    /// `max_modes`).
    pub fn eval_coefficient(&self, y: &[f64], x: Point) -> Result<f64> {
        if y.len() > self.max_modes {
            return Err(Error::invalid(format!(
                "{} parameters exceed the mode cap {}",
                y.len(),
                self.max_modes
            )));
        }
        let xi = self.transform.apply(y)?;
        Ok(self.a0
            + xi.iter()
                .enumerate()
                .map(|(j, &v)| v * self.mode(j + 1, x))
                .sum::<f64>())
    }

    pub fn coercivity_bounds(&self) -> Result<CoercivityBounds> {
        if !(self.decay > 1.0) {
            return Err(Error::invalid(format!(
                "decay {} must exceed 1 for a summable expansion",
                self.decay
            )));
        }
        let sum: f64 = (1..=self.max_modes).map(|j| self.mode_amplitude(j)).sum();
        let spread = self.transform.sup_abs() * sum;
        let a_min = self.a0 - spread;
        if !(a_min > 0.0) {
            return Err(Error::Coercivity(format!(
                "a0 - sup|xi| * sum_(j<={}) j^-{} = {} - {} * {} <= 0",
                self.max_modes,
                self.decay,
                self.a0,
                self.transform.sup_abs(),
                sum
            )));
        }
        Ok(CoercivityBounds {
            a_min,
            a_max: self.a0 + spread,
            a_min_infinite: self.a0 - self.transform.sup_abs() * zeta(self.decay),
        })
    }

    /// b_j = ‖ψ_j‖_∞ / a_min = j^{-ϑ} / a_min for j = 1..=count.
    pub fn b_sequence(&self, count: usize) -> Result<Vec<f64>> {
        let a_min = self.coercivity_bounds()?.a_min;
        Ok((1..=count)
            .map(|j| self.mode_amplitude(j) / a_min)
            .collect())
    }
}

/// Riemann zeta for real `s > 1`: direct sum plus an Euler–Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    const N: usize = 64;
    let head: f64 = (1..N).map(|j| (j as f64).powf(-s)).sum();
    let n = N as f64;
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
}

/// Mode values ψ_j tabulated at a fixed point set, mode-major.
#[derive(Debug, Clone)]
pub struct ModeTable {
    modes: usize,
    points: usize,
    values: Vec<f64>,
}

impl ModeTable {
    pub fn new(spec: &DiffusionFieldSpec, points: &[Point]) -> Self {
        let modes = spec.max_modes;
        let mut values = Vec::with_capacity(modes * points.len());
        for j in 1..=modes {
            values.extend(points.iter().map(|&p| spec.mode(j, p)));
        }
        Self {
            modes,
            points: points.len(),
            values,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `acc[q] += Σ_{from ≤ j < to} xi[j] ψ_{j+1}(point_q)` (0-based `j`),
    /// summed in increasing `j`.
    pub fn accumulate(&self, xi: &[f64], from: usize, to: usize, acc: &mut [f64]) {
        debug_assert_eq!(acc.len(), self.points);
        for (j, &c) in xi.iter().enumerate().take(to).skip(from) {
            if c == 0.0 {
                continue;
            }
            let row = &self.values[j * self.points..(j + 1) * self.points];
            for (a, &psi) in acc.iter_mut().zip(row) {
                *a += c * psi;
            }
        }
    }
}
