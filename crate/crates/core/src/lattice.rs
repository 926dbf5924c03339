//! Randomly shifted rank-1 lattice rules on `[-1/2, 1/2]^s` and the
//! truncation-error estimator built on them.
//!
//! Node `i` of a rule with `n` points, generating vector `z` and shift `Δ`
//! has components `frac(i z_j / n + Δ_j) - 1/2`. The product `i z_j` is
//! reduced modulo `n` in 128-bit integer arithmetic before the division.
//!
//! Generating vectors from embedded lattice sequences stay good lattices
//! for every power of two up to their design size, so using `n_used < n`
//! points means using the rule with modulus `n_used`, which is the same
//! point set as the first `n_used` points in radical-inverse order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest supported node count.
pub const MAX_POINTS: u64 = 1 << 20;

/// Indices per reduction block. Fixed so the summation tree never depends
/// on the number of worker threads.
const BLOCK: usize = 1024;

const VENDORED: &str = include_str!("../data/lattice-1024-1048576.3600.txt");

/// The bundled embedded lattice generating vector: 3600 dimensions, good
/// for 2^10 to 2^20 points.
pub fn vendored_generating_vector() -> Vec<u64> {
    parse_generating_vector(VENDORED).expect("bundled generating vector parses")
}

/// Parse a generating vector from one integer per line, or from two
/// columns `j z_j` with a strictly increasing index column. Blank lines
/// and `#` comments are skipped.
pub fn parse_generating_vector(text: &str) -> Result<Vec<u64>> {
    let mut z = Vec::new();
    let mut columns = None;
    let mut last_index: Option<u64> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = *columns.get_or_insert(fields.len());
        if fields.len() != expected || !(1..=2).contains(&fields.len()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "expected {expected} column(s) (1 or 2), found {}",
                    fields.len()
                ),
            });
        }
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("'{s}' is not a nonnegative integer: {e}"),
            })
        };
        if fields.len() == 2 {
            let j = parse(fields[0])?;
            if let Some(prev) = last_index {
                if j <= prev {
                    return Err(Error::Format(format!(
                        "line {line_no}: index {j} does not increase past {prev}"
                    )));
                }
            }
            last_index = Some(j);
            z.push(parse(fields[1])?);
        } else {
            z.push(parse(fields[0])?);
        }
    }
    if z.is_empty() {
        return Err(Error::Format(
            "generating vector file contains no entries".into(),
        ));
    }
    Ok(z)
}

/// Uniform shift in `[0, 1)^s` from ChaCha20 seeded with `seed`.
pub fn draw_shift(seed: u64, s: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..s).map(|_| rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    n: u64,
    z: Vec<u64>,
    shift: Vec<f64>,
    seed: u64,
}

impl LatticeRule {
    /// Rule with `n` points and a shift drawn from `seed`. `n` must be a
    /// power of two in `[2, 2^20]`.
    pub fn new(n: u64, z: &[u64], seed: u64) -> Result<Self> {
        let shift = draw_shift(seed, z.len());
        Self::with_shift(n, z, shift, seed)
    }

    pub fn with_shift(n: u64, z: &[u64], shift: Vec<f64>, seed: u64) -> Result<Self> {
        if !n.is_power_of_two() || !(2..=MAX_POINTS).contains(&n) {
            return Err(Error::invalid(format!(
                "lattice size {n} is not a power of two in [2, 2^20]"
            )));
        }
        if z.is_empty() {
            return Err(Error::invalid("empty generating vector"));
        }
        if shift.len() != z.len() {
            return Err(Error::invalid(format!(
                "shift has {} components for a {}-dimensional vector",
                shift.len(),
                z.len()
            )));
        }
        if let Some(d) = shift.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return Err(Error::invalid(format!(
                "shift component {d} outside [0, 1)"
            )));
        }
        if z[0] != 1 {
            log::warn!("generating vector starts with {} rather than 1", z[0]);
        }
        let reduced: Vec<u64> = z.iter().map(|&v| v % n).collect();
        if let Some(j) = reduced.iter().position(|&v| v == 0) {
            return Err(Error::invalid(format!(
                "z_{} = {} is divisible by n = {n}",
                j + 1,
                z[j]
            )));
        }
        Ok(Self {
            n,
            z: reduced,
            shift,
            seed,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.z
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The embedded rule with `n_used` points and the same shift.
    pub fn embedded(&self, n_used: u64) -> Result<Self> {
        if n_used > self.n {
            return Err(Error::invalid(format!(
                "{n_used} points requested from a rule with {}",
                self.n
            )));
        }
        Self::with_shift(n_used, &self.z, self.shift.clone(), self.seed)
    }

    /// Writes node `i` (taken modulo `n`) in dimension `out.len()`.
    pub fn node_into(&self, i: u64, out: &mut [f64]) -> Result<()> {
        if out.len() > self.z.len() {
            return Err(Error::invalid(format!(
                "dimension {} exceeds the generating vector length {}",
                out.len(),
                self.z.len()
            )));
        }
        let n = self.n as u128;
        let i = i as u128 % n;
        let inv_n = 1.0 / self.n as f64;
        for ((o, &zj), &dj) in out.iter_mut().zip(&self.z).zip(&self.shift) {
            let k = (i * zj as u128 % n) as u64;
            let mut t = k as f64 * inv_n + dj;
            if t >= 1.0 {
                t -= 1.0;
            }
            *o = t - 0.5;
        }
        Ok(())
    }

    pub fn generate_node(&self, i: u64, s: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; s];
        self.node_into(i, &mut out)?;
        Ok(out)
    }
}

/// Pairwise summation with a fixed split, so the result depends only on the
/// order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Column sums of `width` quantities evaluated at every node of `rule`.
///
/// Blocks of `BLOCK` consecutive indices run in parallel; each block and
/// then the list of block sums are reduced pairwise in index order, so the
/// result is bit-identical for any thread count.
pub fn node_sums<F>(rule: &LatticeRule, s: usize, width: usize, eval: F) -> Result<Vec<f64>>
where
    F: Fn(u64, &[f64], &mut [f64]) -> Result<()> + Sync,
{
    if s > rule.dim() {
        return Err(Error::invalid(format!(
            "dimension {s} exceeds the generating vector length {}",
            rule.dim()
        )));
    }
    let n = rule.n() as usize;
    let blocks = n.div_ceil(BLOCK);
    let block_sums: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Vec<f64>> {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            let len = hi - lo;
            let mut y = vec![0.0; s];
            let mut row = vec![0.0; width];
            // column-major: one contiguous run per quantity
            let mut cols = vec![0.0; width * len];
            for i in lo..hi {
                rule.node_into(i as u64, &mut y)?;
                eval(i as u64, &y, &mut row)?;
                for (c, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite { index: i, value: v });
                    }
                    cols[c * len + (i - lo)] = v;
                }
            }
            Ok(cols.chunks(len).map(pairwise_sum).collect())
        })
        .collect::<Result<_>>()?;

    let mut totals = Vec::with_capacity(width);
    let mut column = vec![0.0; blocks];
    for c in 0..width {
        for (slot, sums) in column.iter_mut().zip(&block_sums) {
            *slot = sums[c];
        }
        totals.push(pairwise_sum(&column));
    }
    Ok(totals)
}

/// Equal-weight average of `f` over the first `n_used` lattice points
/// (the embedded rule of that size).
pub fn qmc_mean<F>(f: F, rule: &LatticeRule, s: usize, n_used: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sub = rule.embedded(n_used)?;
    let sums = node_sums(&sub, s, 1, |_, y, out| {
        out[0] = f(y);
        Ok(())
    })?;
    Ok(sums[0] / n_used as f64)
}

/// A parametric model whose truncation error is estimated by lattice
/// cubature. One reference evaluation per node is shared by all
/// truncation dimensions.
pub trait TruncationModel: Sync {
    /// Independent error quantities produced per node.
    fn channels(&self) -> usize {
        1
    }

    /// For parameters `y` (length `s_ref`), write the squared distance
    /// between the model at `y` and at `truncate(y, s)` for every `s` in
    /// `dims` (ascending). Layout: `out[channel * dims.len() + k]`.
    fn squared_differences(&self, y: &[f64], dims: &[usize], out: &mut [f64]) -> Result<()>;
}

/// Vector-valued model `y ↦ g(y) ∈ R^d` measured in the Euclidean norm.
pub struct VectorModel<F> {
    f: F,
}

impl<F> VectorModel<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> TruncationModel for VectorModel<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fn squared_differences(&self, y: &[f64], dims: &[usize], out: &mut [f64]) -> Result<()> {
        let reference = (self.f)(y)?;
        let mut truncated = y.to_vec();
        let mut zeroed_from = y.len();
        for (k, &s) in dims.iter().enumerate().rev() {
            if s >= y.len() {
                out[k] = 0.0;
                continue;
            }
            for v in &mut truncated[s..zeroed_from] {
                *v = 0.0;
            }
            zeroed_from = s;
            let g = (self.f)(&truncated)?;
            out[k] = reference
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
        Ok(())
    }
}

fn check_dims(dims: &[usize], s_ref: usize, rule: &LatticeRule) -> Result<()> {
    if s_ref > rule.dim() {
        return Err(Error::invalid(format!(
            "reference dimension {s_ref} exceeds the generating vector length {}",
            rule.dim()
        )));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "truncation dimensions must be strictly increasing",
        ));
    }
    if let Some(&s) = dims.iter().find(|&&s| s > s_ref) {
        return Err(Error::invalid(format!(
            "truncation dimension {s} exceeds the reference dimension {s_ref}"
        )));
    }
    Ok(())
}

/// `sqrt(mean_i ‖g(y_i) − g(truncate(y_i, s))‖²)` for each `s` in `dims`,
/// per channel: `result[channel][k]`.
pub fn estimate_truncation_errors<M: TruncationModel>(
    model: &M,
    dims: &[usize],
    s_ref: usize,
    rule: &LatticeRule,
    n_used: u64,
) -> Result<Vec<Vec<f64>>> {
    let means = mean_squared_differences(model, dims, s_ref, rule, n_used)?;
    Ok(means
        .into_iter()
        .map(|ch| ch.into_iter().map(f64::sqrt).collect())
        .collect())
}

fn mean_squared_differences<M: TruncationModel>(
    model: &M,
    dims: &[usize],
    s_ref: usize,
    rule: &LatticeRule,
    n_used: u64,
) -> Result<Vec<Vec<f64>>> {
    check_dims(dims, s_ref, rule)?;
    let sub = rule.embedded(n_used)?;
    let channels = model.channels();
    let width = channels * dims.len();
    let sums = node_sums(&sub, s_ref, width, |i, y, out| {
        model
            .squared_differences(y, dims, out)
            .map_err(|e| Error::Node {
                index: i as usize,
                context: format!("model evaluation failed at node {i}: {e}"),
                source: Box::new(e),
            })
    })?;
    let n = n_used as f64;
    Ok(sums
        .chunks(dims.len().max(1))
        .take(channels)
        .map(|ch| ch.iter().map(|v| v / n).collect())
        .collect())
}

/// Single-dimension convenience wrapper over [`estimate_truncation_errors`].
pub fn estimate_truncation_error<M: TruncationModel>(
    model: &M,
    s: usize,
    s_ref: usize,
    rule: &LatticeRule,
    n_used: u64,
) -> Result<f64> {
    Ok(estimate_truncation_errors(model, &[s], s_ref, rule, n_used)?[0][0])
}

/// Estimates from several independent shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiShiftEstimate {
    /// sqrt of the shift-averaged mean squared difference, `[channel][k]`.
    pub rms: Vec<Vec<f64>>,
    /// Standard error of `rms` from the spread over shifts (delta method).
    pub std_error: Vec<Vec<f64>>,
    /// Per-shift estimates, `[shift][channel][k]`.
    pub per_shift: Vec<Vec<Vec<f64>>>,
}

/// Repeat the estimate with one shift per seed. Diagnostic only.
pub fn estimate_multi_shift<M: TruncationModel>(
    model: &M,
    dims: &[usize],
    s_ref: usize,
    z: &[u64],
    n_used: u64,
    seeds: &[u64],
) -> Result<MultiShiftEstimate> {
    if seeds.len() < 2 {
        return Err(Error::invalid(
            "multi-shift estimation needs at least two seeds",
        ));
    }
    let mut means = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let rule = LatticeRule::new(n_used, z, seed)?;
        means.push(mean_squared_differences(model, dims, s_ref, &rule, n_used)?);
    }
    let r = seeds.len() as f64;
    let channels = means[0].len();
    let mut rms = vec![vec![0.0; dims.len()]; channels];
    let mut std_error = vec![vec![0.0; dims.len()]; channels];
    for c in 0..channels {
        for k in 0..dims.len() {
            let vals: Vec<f64> = means.iter().map(|m| m[c][k]).collect();
            let mean = vals.iter().sum::<f64>() / r;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
            let e = mean.sqrt();
            rms[c][k] = e;
            std_error[c][k] = if e > 0.0 {
                (var / r).sqrt() / (2.0 * e)
            } else {
                0.0
            };
        }
    }
    let per_shift = means
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|ch| ch.into_iter().map(f64::sqrt).collect())
                .collect()
        })
        .collect();
    Ok(MultiShiftEstimate {
        rms,
        std_error,
        per_shift,
    })
}
