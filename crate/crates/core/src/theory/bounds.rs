use crate::error::{Error, Result};

/// Offset added to `1/ϑ` when choosing the summability exponent: a sequence
/// decaying like `j^{-ϑ}` is p-summable only for `p > 1/ϑ`.
pub const SUMMABILITY_MARGIN: f64 = 1e-3;

/// Predicted log-log slope `1/2 − ϑ` of the L² truncation error when the
/// expansion decays like `j^{-ϑ}`.
pub fn expected_rate(theta: f64) -> Result<f64> {
    if !(theta > 1.0) || !theta.is_finite() {
        return Err(Error::invalid(format!(
            "decay {theta} <= 1: b_j ~ j^-decay is not l^p-summable for any p < 1"
        )));
    }
    Ok(0.5 - theta)
}

/// Summability exponent used for decay `theta`: `1/ϑ + 10⁻³`.
pub fn summability_exponent(theta: f64) -> Result<f64> {
    expected_rate(theta)?;
    let p = 1.0 / theta + SUMMABILITY_MARGIN;
    if p >= 1.0 {
        return Err(Error::invalid(format!(
            "decay {theta} too close to 1: exponent {p} leaves (0, 1)"
        )));
    }
    Ok(p)
}

/// `k = ⌈1/(1 − p)⌉`.
pub fn taylor_order(p: f64) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "summability exponent {p} outside (0, 1)"
        )));
    }
    // relative slack of 1e-12 against rounding in 1/(1 − p)
    let r = 1.0 / (1.0 - p);
    Ok((r * (1.0 - 1e-12)).ceil() as usize)
}

/// `(Σ b_j^p)^{1/p}`.
pub fn lp_quasi_norm(b: &[f64], p: f64) -> f64 {
    b.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
}

fn check_sequence(b: &[f64]) -> Result<()> {
    if let Some(v) = b.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!(
            "sequence entry {v} is not a finite nonnegative number"
        )));
    }
    if let Some(j) = b.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::invalid(format!(
            "sequence increases at j = {}: {} < {}",
            j + 2,
            b[j],
            b[j + 1]
        )));
    }
    Ok(())
}

/// Bound `s^{1−1/p} ‖b‖_p` on the tail `Σ_{j>s} b_j` of a nonincreasing
/// nonnegative sequence.
pub fn stechkin_tail_bound(b: &[f64], s: usize, p: f64) -> Result<f64> {
    check_sequence(b)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "summability exponent {p} outside (0, 1)"
        )));
    }
    if s == 0 {
        return Err(Error::invalid("tail bound needs s >= 1"));
    }
    Ok((s as f64).powf(1.0 - 1.0 / p) * lp_quasi_norm(b, p))
}

/// Exact `Σ_{j>s} b_j^power` over the stored entries, smallest terms first.
pub fn tail_sum(b: &[f64], s: usize, power: f64) -> f64 {
    b.iter().skip(s).rev().map(|v| v.powf(power)).sum()
}

/// Constants of a regularity assumption `‖∂^ν g‖ ≤ Θ_{|ν|} b^ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    /// Θ_ℓ for ℓ = 0, 1, ...
    pub theta_seq: Vec<f64>,
    pub b: Vec<f64>,
    pub p: f64,
    /// Bound on the absolute moments of the parameter distribution.
    pub c_mu: f64,
    /// Bound on the absolute moments of the transformed parameters.
    pub c_xi: f64,
    pub k: usize,
}

impl TheoryParams {
    pub fn new(theta_seq: Vec<f64>, b: Vec<f64>, p: f64, c_mu: f64, c_xi: f64) -> Result<Self> {
        let k = taylor_order(p)?;
        check_sequence(&b)?;
        if theta_seq.is_empty() || theta_seq.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::invalid(
                "theta sequence must be nonempty, finite and nonnegative",
            ));
        }
        if !(c_mu >= 0.0) || !(c_xi >= 0.0) {
            return Err(Error::invalid("moment constants must be nonnegative"));
        }
        let norm = lp_quasi_norm(&b, p);
        if !norm.is_finite() {
            return Err(Error::Range(format!("l^{p} quasi-norm of b overflows")));
        }
        Ok(Self {
            theta_seq,
            b,
            p,
            c_mu,
            c_xi,
            k,
        })
    }

    /// Θ_ℓ = ℓ! C for ℓ = 0..=len−1: the regularity of the affine diffusion
    /// problem with `C = ‖f‖_{X'} / a_min`.
    pub fn affine_theta(c: f64, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut fact = 1.0;
        for l in 0..len {
            if l > 0 {
                fact *= l as f64;
            }
            out.push(fact * c);
        }
        out
    }

    pub fn lp_norm(&self) -> f64 {
        lp_quasi_norm(&self.b, self.p)
    }

    // ln max_{ℓ ≤ top} 2Θ_ℓ/ℓ!
    fn ln_max_scaled_theta(&self, top: usize) -> Result<f64> {
        if top >= self.theta_seq.len() {
            return Err(Error::invalid(format!(
                "theta sequence has {} entries, order {top} needs {}",
                self.theta_seq.len(),
                top + 1
            )));
        }
        Ok((0..=top)
            .map(|l| std::f64::consts::LN_2 + self.theta_seq[l].ln() - ln_factorial(l))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

// ln(e^x − 1) without overflow
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Upper bound `(max_{ℓ≤|ν|} 2Θ_ℓ/ℓ!)² (|ν|+1)! b^ν` on the ν-th derivative
/// of `‖g − g_s‖²`. `nu[j]` is the order in variable `j + 1`.
pub fn regularity_bound(params: &TheoryParams, nu: &[usize]) -> Result<f64> {
    let order: usize = nu.iter().sum();
    if order > params.k + 1 {
        return Err(Error::invalid(format!(
            "|nu| = {order} exceeds k + 1 = {}",
            params.k + 1
        )));
    }
    let mut ln_b_pow = 0.0;
    for (j, &nj) in nu.iter().enumerate() {
        if nj == 0 {
            continue;
        }
        let bj = *params.b.get(j).ok_or_else(|| {
            Error::invalid(format!(
                "nu has support at j = {} beyond the stored b",
                j + 1
            ))
        })?;
        ln_b_pow += nj as f64 * bj.ln();
    }
    let ln = 2.0 * params.ln_max_scaled_theta(order)? + ln_factorial(order + 1) + ln_b_pow;
    finite_exp(ln, "regularity bound")
}

fn finite_exp(ln: f64, what: &str) -> Result<f64> {
    if ln > f64::MAX.ln() {
        return Err(Error::Range(format!(
            "{what} is e^{ln:.1}, beyond f64 range"
        )));
    }
    Ok(ln.exp())
}

/// The two pieces of the squared-error bound: the Taylor polynomial part
/// and the integral remainder part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub polynomial: f64,
    pub remainder: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.polynomial + self.remainder
    }
}

/// Natural logarithms of the two terms of the squared truncation-error
/// bound with moment constant `moment`:
///
/// ```text
/// C^k     (max_{ℓ≤k}   2Θ_ℓ/ℓ!)² (k+1)! s^{1−2/p} (exp(β_k ‖b‖_p²) − 1)
/// C^{k+1} (max_{ℓ≤k+1} 2Θ_ℓ/ℓ!)² (k+2)! (s^{1−1/p} ‖b‖_p)^{k+1}
/// ```
///
/// with `β_k = Σ_{ℓ=0}^{k−2} b₁^ℓ`. A vanishing term has logarithm −∞.
pub fn ln_bound_terms(params: &TheoryParams, s: usize, moment: f64) -> Result<BoundTerms> {
    if s == 0 {
        return Err(Error::invalid("bound needs s >= 1"));
    }
    let k = params.k;
    let p = params.p;
    let norm = params.lp_norm();
    let ln_s = (s as f64).ln();
    let ln_c = moment.ln();

    let b1 = params.b.first().copied().unwrap_or(0.0);
    let beta: f64 = (0..=k.saturating_sub(2)).map(|l| b1.powi(l as i32)).sum();

    let ln_poly = k as f64 * ln_c
        + 2.0 * params.ln_max_scaled_theta(k)?
        + ln_factorial(k + 1)
        + (1.0 - 2.0 / p) * ln_s
        + ln_expm1(beta * norm * norm);
    let ln_rem = (k + 1) as f64 * ln_c
        + 2.0 * params.ln_max_scaled_theta(k + 1)?
        + ln_factorial(k + 2)
        + (k + 1) as f64 * ((1.0 - 1.0 / p) * ln_s + norm.ln());
    // 0 · (−∞) counts as a vanishing term
    let clean = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    Ok(BoundTerms {
        polynomial: clean(ln_poly),
        remainder: clean(ln_rem),
    })
}

/// The two terms of [`ln_bound_terms`], exponentiated. Fails with a range
/// error when either term exceeds `f64::MAX`.
pub fn bound_terms(params: &TheoryParams, s: usize, moment: f64) -> Result<BoundTerms> {
    let logs = ln_bound_terms(params, s, moment)?;
    let polynomial = finite_exp(logs.polynomial, "polynomial term")?;
    let remainder = finite_exp(logs.remainder, "remainder term")?;
    if !(polynomial + remainder).is_finite() {
        return Err(Error::Range("truncation bound overflows".into()));
    }
    Ok(BoundTerms {
        polynomial,
        remainder,
    })
}

/// Bound on `‖g − g_s‖²_{L²}` using the parameter moment constant `c_mu`.
pub fn truncation_upper_bound(params: &TheoryParams, s: usize) -> Result<f64> {
    Ok(bound_terms(params, s, params.c_mu)?.total())
}

/// The same bound for the transformed model, with `c_xi` in place of `c_mu`.
pub fn transformed_truncation_upper_bound(params: &TheoryParams, s: usize) -> Result<f64> {
    Ok(bound_terms(params, s, params.c_xi)?.total())
}
