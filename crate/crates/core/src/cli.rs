//! Run configuration and the `solve`, `verify`, `oracle` and `variation`
//! workflows behind the `gchord` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::chord::{
    chord_integral_oracle, gaussian_volume, ChordParams, ChordQuadrature, DEFAULT_DIRECTION_NODES,
    DEFAULT_RADIAL_NODES,
};
use crate::diagnostics::{
    bounds_report, conservation_report, extremum_check, ma_residual, monotonicity_report,
    variation_ratio_survey, DiagnosticsRecord, Perturbation,
};
use crate::error::Error;
use crate::flow::{theta, Flow, FlowConfig, ProblemSpec, RunStatus};
use crate::support::{make_body, AngleGrid, Shape, SupportFunction, DEFAULT_GRID};

/// Exact header of the solve time series.
pub const SERIES_HEADER: &str = "step,t,dt,theta,I_gamma_q,Phi,residual_sup,h_min,h_max,K_min,K_max";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_STEP_UNDERFLOW: i32 = 3;
pub const EXIT_PERTURBATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Solver(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(Error::PerturbedNotConvex { .. }) => EXIT_PERTURBATION,
            CliError::Solver(Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
            CliError::Solver(Error::StepSizeUnderflow { .. }) => EXIT_STEP_UNDERFLOW,
            _ => EXIT_CONFIG,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(rename = "M_r", default = "default_radial")]
    pub radial_nodes: usize,
    #[serde(rename = "N_u", default = "default_directions")]
    pub direction_nodes: usize,
}

fn default_radial() -> usize {
    DEFAULT_RADIAL_NODES
}

fn default_directions() -> usize {
    DEFAULT_DIRECTION_NODES
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { radial_nodes: DEFAULT_RADIAL_NODES, direction_nodes: DEFAULT_DIRECTION_NODES }
    }
}

/// Step control as it appears in the config file; missing fields take the
/// library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub dt0: Option<f64>,
    pub dt_min: Option<f64>,
    pub max_steps: Option<usize>,
    pub eps_stationary: Option<f64>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    Constant,
    Fourier,
}

/// `c0 + Σ c_k cos(2kθ)`; harmonics are ignored for `constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvenFourier {
    pub kind: DensityKind,
    pub c0: f64,
    #[serde(default)]
    pub even_harmonics: Vec<(u32, f64)>,
}

impl EvenFourier {
    pub fn constant(c0: f64) -> Self {
        Self { kind: DensityKind::Constant, c0, even_harmonics: Vec::new() }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self.kind {
            DensityKind::Constant => self.c0,
            DensityKind::Fourier => {
                self.c0
                    + self
                        .even_harmonics
                        .iter()
                        .map(|(k, c)| c * (2.0 * *k as f64 * theta).cos())
                        .sum::<f64>()
            }
        }
    }

    /// Samples on the grid, rejecting non-positive values. The first half is
    /// copied onto the second so the result is exactly even.
    pub fn sample(&self, grid: &AngleGrid, field: &str) -> CliResult<Vec<f64>> {
        let half = grid.len() / 2;
        let mut v: Vec<f64> = (0..half).map(|i| self.eval(grid.theta(i))).collect();
        v.extend_from_within(..);
        if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(CliError::Config(format!(
                "field `{field}`: not positive at node {i} (θ = {:.6}, value {})",
                grid.theta(i),
                v[i]
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_series")]
    pub series_path: PathBuf,
    #[serde(default = "default_summary")]
    pub summary_path: PathBuf,
    /// Destination of verify/oracle/variation reports; defaults to
    /// `summary_path`.
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

fn default_series() -> PathBuf {
    "series.csv".into()
}

fn default_summary() -> PathBuf {
    "summary.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self { series_path: default_series(), summary_path: default_summary(), report_path: None }
    }
}

impl Outputs {
    pub fn report(&self) -> &Path {
        self.report_path.as_deref().unwrap_or(&self.summary_path)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Fixed `τ`; when absent it is re-derived as `1/θ` of the stored body.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_cell")]
    pub cell_size: f64,
}

fn default_cell() -> f64 {
    0.02
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { cell_size: default_cell() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSection {
    /// Perturbation direction; absent means dilation of each body.
    #[serde(default)]
    pub g: Option<EvenFourier>,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
    /// Defaults to `[p]`.
    #[serde(default)]
    pub p_values: Vec<f64>,
    /// Defaults to `[q]`.
    #[serde(default)]
    pub q_values: Vec<f64>,
    /// Defaults to `[init]`.
    #[serde(default)]
    pub bodies: Vec<Shape>,
}

fn default_t_step() -> f64 {
    1e-4
}

impl Default for VariationSection {
    fn default() -> Self {
        Self { g: None, t_step: default_t_step(), p_values: vec![], q_values: vec![], bodies: vec![] }
    }
}

/// Full run configuration (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "grid_N", default = "default_grid")]
    pub grid_n: usize,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub flow: FlowSection,
    pub f: EvenFourier,
    pub init: Shape,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub variation: VariationSection,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

/// A configuration with every derived object built and checked.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub grid: AngleGrid,
    pub spec: ProblemSpec,
    pub flow: FlowConfig,
    pub h0: SupportFunction,
}

impl LoadedConfig {
    pub fn chord_params(&self) -> ChordParams {
        self.flow.chord_params(self.config.q)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn flow_config(&self) -> FlowConfig {
        let d = FlowConfig::default();
        FlowConfig {
            dt0: self.flow.dt0.unwrap_or(d.dt0),
            dt_min: self.flow.dt_min.unwrap_or(d.dt_min),
            max_steps: self.flow.max_steps.unwrap_or(d.max_steps),
            eps_stationary: self.flow.eps_stationary.unwrap_or(d.eps_stationary),
            record_every: self.flow.record_every.unwrap_or(d.record_every),
            radial_nodes: self.quadrature.radial_nodes,
            direction_nodes: self.quadrature.direction_nodes,
        }
    }

    /// Validates every field and builds the solver inputs.
    pub fn load(self) -> CliResult<LoadedConfig> {
        let field = |name: &str, e: Error| CliError::Config(format!("field `{name}`: {e}"));
        let grid = AngleGrid::new(self.grid_n).map_err(|e| field("grid_N", e))?;
        let flow = self.flow_config();
        flow.validate().map_err(|e| field("flow", e))?;
        flow.chord_params(self.q).validate().map_err(|e| field("quadrature", e))?;
        let f = self.f.sample(&grid, "f")?;
        let spec = ProblemSpec::new(self.p, self.q, f).map_err(|e| field("p/q/f", e))?;
        let h0 = make_body(&self.init, &grid).map_err(|e| field("init", e))?;
        Ok(LoadedConfig { config: self, grid, spec, flow, h0 })
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    write(path, &text)
}

/// CSV rendering of a time series, header included.
pub fn series_csv(series: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.dt,
            r.theta,
            r.chord_integral,
            r.phi,
            r.residual_sup,
            r.h_min,
            r.h_max,
            r.k_min,
            r.k_max
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub status: String,
    pub steps: usize,
    pub final_theta: f64,
    pub tau: f64,
    pub residual_sup: f64,
    pub conservation_drift: f64,
    pub max_phi_increment: f64,
    pub h_final: Vec<f64>,
}

/// Runs the flow, writes the series and summary, and returns the exit code.
pub fn cmd_solve(loaded: &LoadedConfig) -> CliResult<(SolveSummary, i32)> {
    let flow = Flow::new(loaded.spec.clone(), loaded.flow)?;
    let out = flow.run(&loaded.h0)?;
    let (status, code) = match out.status {
        RunStatus::Converged => ("converged", EXIT_OK),
        RunStatus::NonConvergence => ("non_convergence", EXIT_NON_CONVERGENCE),
        RunStatus::StepSizeUnderflow => ("step_size_underflow", EXIT_STEP_UNDERFLOW),
    };
    let summary = SolveSummary {
        converged: out.converged(),
        status: status.to_owned(),
        steps: out.state.step,
        final_theta: out.state.theta,
        tau: 1.0 / out.state.theta,
        residual_sup: out.residual_sup,
        conservation_drift: conservation_report(&out.series),
        max_phi_increment: monotonicity_report(&out.series),
        h_final: out.state.h.values().to_vec(),
    };
    write(&loaded.config.outputs.series_path, &series_csv(&out.series))?;
    write_json(&loaded.config.outputs.summary_path, &summary)?;
    Ok((summary, code))
}

/// Reads a support function stored either as a bare JSON array or as a
/// solve summary with an `h_final` field.
pub fn read_support_values(path: &Path) -> CliResult<Vec<f64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Stored {
        Bare(Vec<f64>),
        Summary { h_final: Vec<f64> },
    }
    let stored: Stored = serde_json::from_str(&read(path)?).map_err(|e| {
        CliError::Config(format!("{}: expected a JSON array of support values: {e}", path.display()))
    })?;
    Ok(match stored {
        Stored::Bare(v) | Stored::Summary { h_final: v } => v,
    })
}

/// Residual certificate, extremum checks and bounds of a stored body.
pub fn cmd_verify(loaded: &LoadedConfig, h_values: Vec<f64>) -> CliResult<serde_json::Value> {
    let h = SupportFunction::new(loaded.grid.clone(), h_values)?;
    let params = loaded.chord_params();
    let (tau, tau_source) = match loaded.config.verify.tau {
        Some(t) => (t, "config"),
        None => {
            let field = ChordQuadrature::new(h.len(), params)?.v_tilde_field(&h)?;
            (1.0 / theta(&loaded.spec, &h, &field)?, "theta")
        }
    };
    let (_, residual_sup) = ma_residual(&loaded.spec, &params, &h, tau)?;
    let flow = Flow::new(loaded.spec.clone(), loaded.flow)?;
    let eval = flow.evaluate(&h)?;
    let snapshot = flow.record(
        &crate::flow::FlowState { t: 0.0, h: h.clone(), theta: eval.theta, dt: 0.0, step: 0 },
        &eval,
    )?;
    let report = json!({
        "tau": tau,
        "tau_source": tau_source,
        "residual_sup": residual_sup,
        "rhs_sup": eval.rhs_sup(),
        "extremum": extremum_check(&h)?,
        "bounds": bounds_report(&[snapshot]),
    });
    write_json(loaded.config.outputs.report(), &report)?;
    Ok(report)
}

/// Polar chord integral against the Cartesian oracle.
pub fn cmd_oracle(loaded: &LoadedConfig) -> CliResult<serde_json::Value> {
    let h = &loaded.h0;
    let q = loaded.config.q;
    let polar = ChordQuadrature::new(h.len(), loaded.chord_params())?.chord_integral(h)?;
    let volume = gaussian_volume(h)?;
    let (oracle, oracle_error) = match chord_integral_oracle(h, q, loaded.config.oracle.cell_size) {
        Ok(v) => (Some(v), None),
        Err(e @ Error::UnsupportedExponent { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "I_polar": polar,
        "I_oracle": oracle,
        "oracle_error": oracle_error,
        "rel_diff": oracle.map(|o| (polar - o).abs() / o.abs()),
        "gaussian_volume": volume,
        "q3_identity_rel_err": (q == 3.0).then(|| (polar - volume * volume).abs() / (volume * volume)),
        "cell_size": loaded.config.oracle.cell_size,
    });
    write_json(loaded.config.outputs.report(), &report)?;
    Ok(report)
}

fn shape_label(shape: &Shape) -> String {
    match shape {
        Shape::Disk { radius } => format!("disk({radius})"),
        Shape::Ellipse { a, b } => format!("ellipse({a},{b})"),
        Shape::Fourier { coeffs } => {
            let c: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
            format!("fourier([{}])", c.join(","))
        }
    }
}

/// First-variation survey over bodies and exponents.
pub fn cmd_variation(loaded: &LoadedConfig) -> CliResult<serde_json::Value> {
    let v = &loaded.config.variation;
    let shapes = if v.bodies.is_empty() { vec![loaded.config.init.clone()] } else { v.bodies.clone() };
    let bodies = shapes
        .iter()
        .map(|s| {
            make_body(s, &loaded.grid)
                .map(|h| (shape_label(s), h))
                .map_err(|e| CliError::Config(format!("field `variation.bodies`: {e}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let g = match &v.g {
        None => Perturbation::Dilation,
        Some(spec) => Perturbation::Samples(spec.sample(&loaded.grid, "variation.g")?),
    };
    let p_values = if v.p_values.is_empty() { vec![loaded.config.p] } else { v.p_values.clone() };
    let q_values = if v.q_values.is_empty() { vec![loaded.config.q] } else { v.q_values.clone() };
    let rows = variation_ratio_survey(
        &bodies,
        &g,
        &p_values,
        &q_values,
        loaded.flow.radial_nodes,
        loaded.flow.direction_nodes,
        v.t_step,
    )?;
    let report = json!({ "t_step": v.t_step, "rows": rows });
    write_json(loaded.config.outputs.report(), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Verify,
    Oracle,
    Variation,
}

/// Loads the config, dispatches and maps the outcome to an exit code.
/// Errors are printed to stderr.
pub fn run_command(command: Command, config: &Path, h_file: Option<&Path>) -> i32 {
    let outcome = RunConfig::from_path(config).and_then(RunConfig::load).and_then(|loaded| match command {
        Command::Solve => cmd_solve(&loaded).map(|(_, code)| code),
        Command::Verify => {
            let path = h_file.ok_or_else(|| CliError::Config("verify needs --h-file".into()))?;
            cmd_verify(&loaded, read_support_values(path)?).map(|_| EXIT_OK)
        }
        Command::Oracle => cmd_oracle(&loaded).map(|_| EXIT_OK),
        Command::Variation => cmd_variation(&loaded).map(|_| EXIT_OK),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "p": 1, "q": 3,
        "f": {"kind": "fourier", "c0": 1.0, "even_harmonics": [[1, 0.1]]},
        "init": {"kind": "disk", "params": {"radius": 1.0}}
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.grid_n, 256);
        assert_eq!(c.quadrature, QuadratureConfig::default());
        assert_eq!(c.flow_config(), FlowConfig::default());
        let loaded = c.load().unwrap();
        assert!((loaded.spec.density()[0] - 1.1).abs() < 1e-15);
        assert!((loaded.spec.density()[64] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_crossing_density_is_a_config_error() {
        let text = MINIMAL.replace("0.1]", "1.5]");
        let err = RunConfig::from_json(&text).unwrap().load().unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains("`f`"), "{err}");
    }

    #[test]
    fn unknown_field_reports_its_name_and_line() {
        let text = MINIMAL.replace("\"q\": 3", "\"q\": 3, \"grid\": 12");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("grid") && err.contains("line"), "{err}");
    }

    #[test]
    fn csv_header_is_exact() {
        assert_eq!(series_csv(&[]), format!("{SERIES_HEADER}\n"));
        assert_eq!(SERIES_HEADER, "step,t,dt,theta,I_gamma_q,Phi,residual_sup,h_min,h_max,K_min,K_max");
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        let perturbed = CliError::Solver(Error::PerturbedNotConvex {
            t: 0.5,
            source: Box::new(Error::QuadratureUnderflow),
        });
        assert_eq!(perturbed.exit_code(), EXIT_PERTURBATION);
        assert_eq!(CliError::Solver(Error::NonConvergence { max_steps: 3 }).exit_code(), 2);
        assert_eq!(CliError::Solver(Error::StepSizeUnderflow { t: 0.0, dt_min: 1e-9 }).exit_code(), 3);
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
    }

    #[test]
    fn labels_are_readable() {
        assert_eq!(shape_label(&Shape::Disk { radius: 0.5 }), "disk(0.5)");
        assert_eq!(shape_label(&Shape::Fourier { coeffs: vec![0.1, 0.02] }), "fourier([0.1,0.02])");
    }
}
