//! Experiment configuration and the drivers behind the command-line tool:
//! theory predictions, PDE truncation sweeps, rate fits and the scalar
//! oracle check.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Assembler, FemSolution, Norm, TriangularMesh};
use crate::field::{CoercivityBounds, DiffusionFieldSpec, ModeTable, Transform};
use crate::lattice::{
    estimate_truncation_errors, parse_generating_vector, vendored_generating_vector, LatticeRule,
    TruncationModel, MAX_POINTS,
};
use crate::oracle::{exact_l2_truncation_error, ScalarModelSpec, MAX_ORACLE_DIM};
use crate::theory::{
    expected_rate, fit_rate, ln_bound_terms, summability_exponent, ErrorRow, ErrorTable, RateFit,
    TableMetadata, TheoryParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// The PDE solution itself, measured in the configured norm.
    FullSolution,
    /// `G_nl(u) = ‖∇u‖²_{L²}`.
    QoiNl,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::FullSolution => "full_solution",
            Quantity::QoiNl => "qoi_nl",
        })
    }
}

/// Which quantities a run reports. Both come from the same solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantitySelection {
    FullSolution,
    QoiNl,
    Both,
}

impl QuantitySelection {
    pub fn quantities(self) -> Vec<Quantity> {
        match self {
            QuantitySelection::FullSolution => vec![Quantity::FullSolution],
            QuantitySelection::QoiNl => vec![Quantity::QoiNl],
            QuantitySelection::Both => vec![Quantity::FullSolution, Quantity::QoiNl],
        }
    }
}

/// JSON experiment description. Missing fields take the desk-scale
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta_list: Vec<f64>,
    pub s_list: Vec<usize>,
    pub s_ref: usize,
    pub mesh_m: usize,
    pub n_nodes: u64,
    pub seed: u64,
    pub transform: Transform,
    pub quantity: QuantitySelection,
    pub norm: Norm,
    /// Generating vector file; the bundled vector when absent.
    pub lattice_file: Option<PathBuf>,
    pub a0: f64,
    pub quad_order: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta_list: vec![1.5, 2.0, 3.0],
            s_list: (2..=8).map(|k| 1usize << k).collect(),
            s_ref: 512,
            mesh_m: 16,
            n_nodes: 1 << 13,
            seed: 1,
            transform: Transform::Periodic,
            quantity: QuantitySelection::Both,
            norm: Norm::L2,
            lattice_file: None,
            a0: 1.5,
            quad_order: 2,
        }
    }
}

impl ExperimentConfig {
    /// Mesh size 2⁻⁵, 2²⁰ nodes, reference dimension 2¹¹, s = 2..512.
    pub fn full_scale() -> Self {
        Self {
            s_list: (1..=9).map(|k| 1usize << k).collect(),
            s_ref: 2048,
            mesh_m: 32,
            n_nodes: MAX_POINTS,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.theta_list.is_empty() {
            return bad("theta_list is empty".into());
        }
        for &theta in &self.theta_list {
            summability_exponent(theta).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.s_list.is_empty() {
            return bad("s_list is empty".into());
        }
        if self.s_list[0] == 0 {
            return bad("s_list entries must be at least 1".into());
        }
        if self.s_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("s_list must be strictly increasing".into());
        }
        let s_max = *self.s_list.last().unwrap();
        if s_max > self.s_ref {
            return bad(format!(
                "max(s_list) = {s_max} exceeds s_ref = {}",
                self.s_ref
            ));
        }
        if self.mesh_m == 0 {
            return bad("mesh_m must be positive".into());
        }
        if !self.n_nodes.is_power_of_two() || !(2..=MAX_POINTS).contains(&self.n_nodes) {
            return bad(format!(
                "n_nodes = {} is not a power of two in [2, 2^20]",
                self.n_nodes
            ));
        }
        if !(self.a0 > 0.0) || !self.a0.is_finite() {
            return bad(format!("a0 = {} must be positive", self.a0));
        }
        if !(1..=5).contains(&self.quad_order) {
            return bad(format!("quad_order = {} outside 1..=5", self.quad_order));
        }
        Ok(())
    }

    /// The configured generating vector, checked against `s_ref`.
    pub fn generating_vector(&self) -> Result<Vec<u64>> {
        let z = load_generating_vector(self.lattice_file.as_deref())?;
        if z.len() < self.s_ref {
            return Err(Error::Config(format!(
                "generating vector has {} entries, s_ref = {} needs more",
                z.len(),
                self.s_ref
            )));
        }
        Ok(z)
    }
}

fn load_generating_vector(path: Option<&Path>) -> Result<Vec<u64>> {
    match path {
        None => Ok(vendored_generating_vector()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_generating_vector(&text)
        }
    }
}

/// `‖f‖_{H⁻¹}` bound for the source `f(x) = x₁`: `‖f‖_{L²}/√λ₁` with the
/// first Dirichlet eigenvalue `λ₁ = 2π²` of the unit square.
pub fn source_dual_norm_bound() -> f64 {
    (1.0 / 3f64.sqrt()) / (2f64.sqrt() * std::f64::consts::PI)
}

fn source(x: [f64; 2]) -> f64 {
    x[0]
}

/// The P1 solution map `y ↦ u_h(·, y)` for one coefficient field, with
/// two error channels: the squared solution difference in `norm`, and the
/// squared difference of `G_nl`.
pub struct PdeTruncationModel<'m> {
    field: DiffusionFieldSpec,
    assembler: Assembler<'m>,
    modes: ModeTable,
    rhs: Vec<f64>,
    norm: Norm,
}

impl<'m> PdeTruncationModel<'m> {
    pub fn new(
        field: DiffusionFieldSpec,
        mesh: &'m TriangularMesh,
        quad_order: usize,
        norm: Norm,
    ) -> Result<Self> {
        let assembler = Assembler::new(mesh, quad_order)?;
        let modes = ModeTable::new(&field, assembler.quadrature_points());
        let rhs = assembler.load(source);
        Ok(Self {
            field,
            assembler,
            modes,
            rhs,
            norm,
        })
    }

    pub fn field(&self) -> &DiffusionFieldSpec {
        &self.field
    }

    fn solve_with(&self, coeff: &[f64]) -> Result<FemSolution<'m>> {
        let system = self.assembler.system(coeff, self.rhs.clone())?;
        crate::fem::solve(&system)
    }

    /// The solution at the first `s` transformed parameters of `y`.
    pub fn solve_truncated(&self, y: &[f64], s: usize) -> Result<FemSolution<'m>> {
        let xi = self.field.transform.apply(y)?;
        let mut coeff = vec![self.field.a0; self.assembler.quadrature_points().len()];
        self.modes.accumulate(&xi, 0, s.min(xi.len()), &mut coeff);
        self.solve_with(&coeff)
    }
}

impl TruncationModel for PdeTruncationModel<'_> {
    fn channels(&self) -> usize {
        2
    }

    fn squared_differences(&self, y: &[f64], dims: &[usize], out: &mut [f64]) -> Result<()> {
        let s_ref = y.len();
        if s_ref > self.modes.modes() {
            return Err(Error::invalid(format!(
                "{s_ref} parameters exceed the mode cap {}",
                self.modes.modes()
            )));
        }
        let xi = self.field.transform.apply(y)?;
        // coefficient partial sums, accumulated in increasing j
        let mut coeff = vec![self.field.a0; self.assembler.quadrature_points().len()];
        let mut done = 0;
        let mut truncated = Vec::with_capacity(dims.len());
        for &s in dims {
            let s = s.min(s_ref);
            self.modes.accumulate(&xi, done, s, &mut coeff);
            done = s;
            truncated.push(if s < s_ref {
                Some(self.solve_with(&coeff)?)
            } else {
                None
            });
        }
        self.modes.accumulate(&xi, done, s_ref, &mut coeff);
        let reference = self.solve_with(&coeff)?;
        let g_ref = reference.qoi_nl();
        let k = dims.len();
        for (i, u) in truncated.iter().enumerate() {
            match u {
                Some(u) => {
                    out[i] = reference.diff_norm_sq(u, self.norm)?;
                    out[k + i] = (g_ref - u.qoi_nl()).powi(2);
                }
                None => {
                    out[i] = 0.0;
                    out[k + i] = 0.0;
                }
            }
        }
        Ok(())
    }
}

/// One table of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub quantity: Quantity,
    pub theta: f64,
    pub table: ErrorTable,
}

impl RunResult {
    pub fn file_name(&self, transform: Transform) -> String {
        format!("{}_{}_theta{:.1}.csv", self.quantity, transform, self.theta)
    }
}

/// Truncation-error sweep for every decay in `theta_list`, all with the
/// same lattice shift.
pub fn run(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    let z = config.generating_vector()?;
    let rule = LatticeRule::new(config.n_nodes, &z, config.seed)?;
    let mesh = TriangularMesh::unit_square(config.mesh_m)?;
    let mut results = Vec::new();
    for &theta in &config.theta_list {
        let field = DiffusionFieldSpec::new(config.a0, theta, config.transform, config.s_ref)?;
        let model = PdeTruncationModel::new(field, &mesh, config.quad_order, config.norm)?;
        log::info!(
            "theta = {theta}: {} nodes, s_ref = {}, m = {}",
            config.n_nodes,
            config.s_ref,
            config.mesh_m
        );
        let errors = estimate_truncation_errors(
            &model,
            &config.s_list,
            config.s_ref,
            &rule,
            config.n_nodes,
        )?;
        for quantity in config.quantity.quantities() {
            let channel = match quantity {
                Quantity::FullSolution => &errors[0],
                Quantity::QoiNl => &errors[1],
            };
            let rows = config
                .s_list
                .iter()
                .zip(channel)
                .map(|(&s, &error)| ErrorRow { s, error })
                .collect();
            let metadata = TableMetadata {
                quantity: Some(quantity.to_string()),
                norm: match quantity {
                    Quantity::FullSolution => Some(config.norm.to_string()),
                    Quantity::QoiNl => None,
                },
                theta: Some(theta),
                transform: Some(config.transform.to_string()),
                n: Some(config.n_nodes),
                s_ref: Some(config.s_ref),
                h: Some(mesh.h()),
                seed: Some(config.seed),
                extra: BTreeMap::from([("a0".to_string(), config.a0.to_string())]),
            };
            results.push(RunResult {
                quantity,
                theta,
                table: ErrorTable::new(rows, metadata)?,
            });
        }
    }
    Ok(results)
}

/// Write each table to `out_dir`, creating it if needed. Returns the paths.
pub fn write_tables(
    results: &[RunResult],
    transform: Transform,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    results
        .iter()
        .map(|r| {
            let path = out_dir.join(r.file_name(transform));
            r.table.write(&path)?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub s: usize,
    /// log₁₀ of the squared-error bound and of its two terms.
    pub log10_bound: f64,
    pub log10_polynomial: f64,
    pub log10_remainder: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPrediction {
    pub theta: f64,
    pub expected_rate: f64,
    pub p: f64,
    pub k: usize,
    pub coercivity: CoercivityBounds,
    pub moment_constant: f64,
    pub lp_norm: f64,
    pub bounds: Vec<BoundRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub transform: Transform,
    pub s_ref: usize,
    pub entries: Vec<ThetaPrediction>,
}

impl PredictionReport {
    pub fn rates(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.expected_rate).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "theta,expected_rate,p,k,a_min,a_max,s,log10_bound,log10_polynomial,log10_remainder\n",
        );
        for e in &self.entries {
            for r in &e.bounds {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    e.theta,
                    e.expected_rate,
                    e.p,
                    e.k,
                    e.coercivity.a_min,
                    e.coercivity.a_max,
                    r.s,
                    r.log10_bound,
                    r.log10_polynomial,
                    r.log10_remainder
                ));
            }
        }
        out
    }
}

impl fmt::Display for PredictionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "transform: {}, s_ref = {}", self.transform, self.s_ref)?;
        for e in &self.entries {
            writeln!(f)?;
            writeln!(f, "theta = {}", e.theta)?;
            writeln!(f, "  expected rate   {:.4}", e.expected_rate)?;
            writeln!(f, "  p               {:.6}", e.p)?;
            writeln!(f, "  k               {}", e.k)?;
            writeln!(
                f,
                "  a_min, a_max    {:.6}, {:.6} (a_min over all modes {:.6})",
                e.coercivity.a_min, e.coercivity.a_max, e.coercivity.a_min_infinite
            )?;
            writeln!(f, "  moment constant {:.6}", e.moment_constant)?;
            writeln!(f, "  ||b||_p         {:.6e}", e.lp_norm)?;
            writeln!(
                f,
                "  {:>8}  {:>14}  {:>14}  {:>14}",
                "s", "log10 bound", "polynomial", "remainder"
            )?;
            for r in &e.bounds {
                writeln!(
                    f,
                    "  {:>8}  {:>14.4}  {:>14.4}  {:>14.4}",
                    r.s, r.log10_bound, r.log10_polynomial, r.log10_remainder
                )?;
            }
        }
        Ok(())
    }
}

/// Certified theory parameters for the PDE with decay `theta`: affine
/// regularity `Θ_ℓ = ℓ! ‖f‖_{X'}/a_min` and `b_j = j^{-ϑ}/a_min` up to
/// `s_ref`.
pub fn pde_theory_params(
    config: &ExperimentConfig,
    theta: f64,
) -> Result<(TheoryParams, CoercivityBounds)> {
    let p = summability_exponent(theta)?;
    let field = DiffusionFieldSpec::new(config.a0, theta, config.transform, config.s_ref)?;
    let bounds = field.coercivity_bounds()?;
    let k = crate::theory::taylor_order(p)?;
    let theta_seq = TheoryParams::affine_theta(source_dual_norm_bound() / bounds.a_min, k + 2);
    let params = TheoryParams::new(
        theta_seq,
        field.b_sequence(config.s_ref)?,
        p,
        1.0 / 12.0,
        config.transform.moment_constant(),
    )?;
    Ok((params, bounds))
}

/// Predicted rate, constants and the squared-error bound (in log₁₀, since
/// it exceeds the f64 range for slow decay) at every `s` of the config.
pub fn predict(config: &ExperimentConfig) -> Result<PredictionReport> {
    for &theta in &config.theta_list {
        expected_rate(theta)?;
    }
    config.validate()?;
    let mut entries = Vec::new();
    for &theta in &config.theta_list {
        let (params, coercivity) = pde_theory_params(config, theta)?;
        let bounds = config
            .s_list
            .iter()
            .map(|&s| {
                let ln = ln_bound_terms(&params, s, params.c_xi)?;
                let hi = ln.polynomial.max(ln.remainder);
                let total = if hi == f64::NEG_INFINITY {
                    hi
                } else {
                    hi + ((ln.polynomial - hi).exp() + (ln.remainder - hi).exp()).ln()
                };
                let log10 = |v: f64| v / std::f64::consts::LN_10;
                Ok(BoundRow {
                    s,
                    log10_bound: log10(total),
                    log10_polynomial: log10(ln.polynomial),
                    log10_remainder: log10(ln.remainder),
                })
            })
            .collect::<Result<_>>()?;
        entries.push(ThetaPrediction {
            theta,
            expected_rate: expected_rate(theta)?,
            p: params.p,
            k: params.k,
            coercivity,
            moment_constant: params.c_xi,
            lp_norm: params.lp_norm(),
            bounds,
        });
    }
    Ok(PredictionReport {
        transform: config.transform,
        s_ref: config.s_ref,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub fit: RateFit,
    pub expected_rate: Option<f64>,
}

impl FitReport {
    pub fn gap(&self) -> Option<f64> {
        self.expected_rate.map(|r| (self.fit.slope - r).abs())
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "slope          {:.6}", self.fit.slope)?;
        writeln!(f, "intercept      {:.6}", self.fit.intercept)?;
        writeln!(f, "residual       {:.3e}", self.fit.residual)?;
        writeln!(f, "rows used      {}", self.fit.rows_used)?;
        match (self.expected_rate, self.gap()) {
            (Some(r), Some(g)) => {
                writeln!(f, "expected rate  {r:.6}")?;
                writeln!(f, "gap            {g:.6}")
            }
            _ => writeln!(f, "expected rate  unknown (no theta in table metadata)"),
        }
    }
}

pub fn fit_table(table: &ErrorTable, s_min: Option<usize>) -> Result<FitReport> {
    let fit = fit_rate(table, s_min)?;
    let expected_rate = table.metadata.theta.map(expected_rate).transpose()?;
    Ok(FitReport { fit, expected_rate })
}

/// Scalar oracle comparison setup (JSON). `b` overrides the power law
/// `scale · j^{-decay}`, `j = 1..=dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckSpec {
    pub a0: f64,
    pub b: Option<Vec<f64>>,
    pub scale: f64,
    pub decay: f64,
    pub dim: usize,
    pub transform: Transform,
    pub q: usize,
    pub q_check: usize,
    pub n_used: u64,
    pub seed: u64,
    pub lattice_file: Option<PathBuf>,
    pub tolerance: f64,
}

impl Default for OracleCheckSpec {
    fn default() -> Self {
        Self {
            a0: 1.5,
            b: None,
            scale: 0.1,
            decay: 2.0,
            dim: 6,
            transform: Transform::Identity,
            q: 16,
            q_check: 24,
            n_used: 1 << 14,
            seed: 1,
            lattice_file: None,
            tolerance: 0.02,
        }
    }
}

/// Relative change allowed between the `q` and `q_check` oracle values.
pub const ORACLE_SELF_CONVERGENCE: f64 = 1e-10;

impl OracleCheckSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn model(&self) -> Result<ScalarModelSpec> {
        let dim = self.b.as_ref().map_or(self.dim, Vec::len);
        if dim > MAX_ORACLE_DIM {
            return Err(Error::Config(format!(
                "oracle dimension {dim} exceeds the tensor-grid cap of {MAX_ORACLE_DIM}: \
                 the grid needs q^{dim} points, beyond the evaluation budget"
            )));
        }
        if dim < 2 {
            return Err(Error::Config(format!(
                "oracle dimension {dim} leaves no truncation to test"
            )));
        }
        match &self.b {
            Some(b) => ScalarModelSpec::new(self.a0, b.clone(), self.transform),
            None => {
                ScalarModelSpec::power_law(self.a0, self.scale, self.decay, dim, self.transform)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub s: usize,
    pub exact: f64,
    pub exact_check: f64,
    pub qmc: f64,
    pub rel_gap: f64,
}

impl OracleRow {
    pub fn self_converged(&self) -> bool {
        (self.exact - self.exact_check).abs() <= ORACLE_SELF_CONVERGENCE * self.exact.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckReport {
    pub rows: Vec<OracleRow>,
    pub tolerance: f64,
    pub n_used: u64,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.self_converged() && r.rel_gap <= self.tolerance)
    }

    fn exact_zero(&self) -> bool {
        self.rows.iter().all(|r| r.exact == 0.0 && r.qmc == 0.0)
    }
}

impl fmt::Display for OracleCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "n_used = {}, tolerance = {}",
            self.n_used, self.tolerance
        )?;
        writeln!(
            f,
            "{:>3}  {:>22}  {:>22}  {:>10}  {:>9}",
            "s", "E* (tensor)", "QMC", "rel gap", "q-conv"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>3}  {:>22.15e}  {:>22.15e}  {:>10.3e}  {:>9}",
                r.s,
                r.exact,
                r.qmc,
                r.rel_gap,
                if r.self_converged() { "ok" } else { "FAIL" }
            )?;
        }
        if self.exact_zero() {
            writeln!(f, "all errors are exactly zero: PASS")
        } else if self.passed() {
            writeln!(f, "PASS")
        } else {
            writeln!(f, "FAIL")
        }
    }
}

/// Tensor Gauss–Legendre reference against the lattice estimate for every
/// `s < dim`.
pub fn oracle_check(spec: &OracleCheckSpec) -> Result<OracleCheckReport> {
    let model = spec.model()?;
    let dim = model.dim();
    let dims: Vec<usize> = (1..dim).collect();
    let z = load_generating_vector(spec.lattice_file.as_deref())?;
    if z.len() < dim {
        return Err(Error::Config(format!(
            "generating vector has {} entries, the oracle needs {dim}",
            z.len()
        )));
    }
    let rule = LatticeRule::new(spec.n_used, &z, spec.seed)?;
    let qmc = estimate_truncation_errors(&model, &dims, dim, &rule, spec.n_used)?;
    let mut rows = Vec::with_capacity(dims.len());
    for (k, &s) in dims.iter().enumerate() {
        let exact = exact_l2_truncation_error(&model, s, spec.q)?;
        let exact_check = exact_l2_truncation_error(&model, s, spec.q_check)?;
        let q = qmc[0][k];
        let rel_gap = if exact == 0.0 {
            if q == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (q - exact).abs() / exact
        };
        rows.push(OracleRow {
            s,
            exact,
            exact_check,
            qmc: q,
            rel_gap,
        });
    }
    Ok(OracleCheckReport {
        rows,
        tolerance: spec.tolerance,
        n_used: spec.n_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            theta_list: vec![2.0],
            s_list: vec![1, 2, 4],
            s_ref: 8,
            mesh_m: 4,
            n_nodes: 64,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::full_scale().validate().unwrap();
    }

    #[test]
    fn config_rejections() {
        let reject = |f: fn(&mut ExperimentConfig)| {
            let mut c = ExperimentConfig::default();
            f(&mut c);
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        };
        reject(|c| c.theta_list = vec![1.0]);
        reject(|c| c.theta_list.clear());
        reject(|c| c.s_list = vec![8, 4]);
        reject(|c| c.s_list = vec![0, 4]);
        reject(|c| c.s_list = vec![1024]);
        reject(|c| c.n_nodes = 1000);
        reject(|c| c.n_nodes = 1 << 21);
        reject(|c| c.mesh_m = 0);
        reject(|c| c.quad_order = 7);
        reject(|c| c.a0 = -1.0);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"mesh": 4}"#),
            Err(Error::Config(_))
        ));
        let c = ExperimentConfig::from_json(r#"{"mesh_m": 4, "quantity": "qoi_nl"}"#).unwrap();
        assert_eq!(c.mesh_m, 4);
        assert_eq!(c.quantity, QuantitySelection::QoiNl);
        assert_eq!(c.theta_list, vec![1.5, 2.0, 3.0]);
    }

    #[test]
    fn predicted_rates() {
        let report = predict(&ExperimentConfig::default()).unwrap();
        assert_eq!(report.rates(), vec![-1.0, -1.5, -2.5]);
        let e = &report.entries[1];
        assert!((e.p - 0.501).abs() < 1e-15);
        assert_eq!(e.k, 3);
        for w in e.bounds.windows(2) {
            assert!(w[1].log10_bound <= w[0].log10_bound);
        }
        assert_eq!(report.to_csv().lines().count(), 1 + 3 * 7);
    }

    #[test]
    fn predict_rejects_non_summable_decay() {
        let c = ExperimentConfig {
            theta_list: vec![1.0],
            ..ExperimentConfig::default()
        };
        let msg = predict(&c).unwrap_err().to_string();
        assert!(msg.contains("l^p"), "{msg}");
    }

    #[test]
    fn reference_dimension_gives_zero_row() {
        let c = ExperimentConfig {
            s_list: vec![8],
            quantity: QuantitySelection::FullSolution,
            ..tiny_config()
        };
        let out = run(&c).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].table.rows(), &[ErrorRow { s: 8, error: 0.0 }]);
    }

    #[test]
    fn tiny_run_is_positive_and_decreasing() {
        let out = run(&tiny_config()).unwrap();
        assert_eq!(out.len(), 2);
        for r in &out {
            let e: Vec<f64> = r.table.rows().iter().map(|r| r.error).collect();
            assert!(e.iter().all(|&v| v > 0.0), "{e:?}");
            assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
        }
        assert_eq!(
            out[0].file_name(Transform::Periodic),
            "full_solution_periodic_theta2.0.csv"
        );
        assert_eq!(out[1].table.metadata.quantity.as_deref(), Some("qoi_nl"));
    }

    #[test]
    fn sweep_matches_individual_truncations() {
        let c = tiny_config();
        let all = run(&c).unwrap();
        for (k, &s) in c.s_list.iter().enumerate() {
            let single = run(&ExperimentConfig {
                s_list: vec![s],
                ..c.clone()
            })
            .unwrap();
            for (a, b) in all.iter().zip(&single) {
                assert_eq!(a.table.rows()[k], b.table.rows()[0]);
            }
        }
    }

    #[test]
    fn model_matches_direct_solves() {
        let mesh = TriangularMesh::unit_square(4).unwrap();
        let field = DiffusionFieldSpec::new(1.5, 2.0, Transform::Periodic, 6).unwrap();
        let model = PdeTruncationModel::new(field, &mesh, 2, Norm::H10).unwrap();
        let y = [0.3, -0.1, 0.45, -0.5, 0.2, 0.05];
        let mut out = [0.0; 4];
        model.squared_differences(&y, &[1, 3], &mut out).unwrap();
        let full = model.solve_truncated(&y, 6).unwrap();
        let u3 = model.solve_truncated(&y, 3).unwrap();
        let direct = full.diff_norm_sq(&u3, Norm::H10).unwrap();
        assert!((out[1] - direct).abs() <= 1e-12 * direct);
        let dq = (full.qoi_nl() - u3.qoi_nl()).powi(2);
        assert!((out[3] - dq).abs() <= 1e-9 * dq);
    }

    #[test]
    fn zero_oracle_is_exact() {
        let spec = OracleCheckSpec {
            b: Some(vec![0.0; 4]),
            n_used: 256,
            ..OracleCheckSpec::default()
        };
        let report = oracle_check(&spec).unwrap();
        assert!(report.passed());
        assert!(report.rows.iter().all(|r| r.exact == 0.0 && r.qmc == 0.0));
        assert!(report.to_string().contains("exactly zero"));
    }

    #[test]
    fn oracle_dimension_cap() {
        let spec = OracleCheckSpec {
            dim: 9,
            ..OracleCheckSpec::default()
        };
        let msg = oracle_check(&spec).unwrap_err().to_string();
        assert!(msg.contains("budget"), "{msg}");
    }

    #[test]
    fn fit_report_gap() {
        let rows = (1..=6)
            .map(|k| ErrorRow {
                s: 1 << k,
                error: 3.0 * ((1 << k) as f64).powf(-2.5),
            })
            .collect();
        let meta = TableMetadata {
            theta: Some(3.0),
            ..TableMetadata::default()
        };
        let report = fit_table(&ErrorTable::new(rows, meta).unwrap(), Some(1)).unwrap();
        assert!((report.fit.slope + 2.5).abs() < 1e-9);
        assert!(report.gap().unwrap() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn config_json_round_trip(
            thetas in prop::collection::vec(1.01f64..5.0, 1..4),
            s_first in 1usize..10,
            count in 1usize..6,
            extra in 0usize..100,
            log_n in 1u32..=20,
            seed in any::<u64>(),
            periodic in any::<bool>(),
            qsel in 0u8..3,
            h10 in any::<bool>(),
            file in prop::option::of("[a-z]{1,8}\\.txt"),
        ) {
            let s_list: Vec<usize> = (0..count).map(|i| s_first << i).collect();
            let c = ExperimentConfig {
                theta_list: thetas,
                s_ref: *s_list.last().unwrap() + extra,
                s_list,
                mesh_m: 1 + extra,
                n_nodes: 1 << log_n,
                seed,
                transform: if periodic { Transform::Periodic } else { Transform::Identity },
                quantity: [QuantitySelection::FullSolution, QuantitySelection::QoiNl, QuantitySelection::Both][qsel as usize],
                norm: if h10 { Norm::H10 } else { Norm::L2 },
                lattice_file: file.map(PathBuf::from),
                a0: 1.5,
                quad_order: 2,
            };
            let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
