//! Normalized Gauss curvature flow for the support function,
//!
//! ```text
//! ∂h/∂t = −θ(t) h^p K f / V + h,      θ(t) = ∫ V h b dx / ∫ h^p f dx,
//! ```
//!
//! with `K = 1/b`, `b = h'' + h` and `V` the Gaussian chord potential at the
//! boundary point with normal `x`. The numerator of `θ` is `∫ V ρ² dξ`
//! written in the normal variable (`ρ² dξ = h b dx`), which is the form that
//! keeps the Gaussian chord integral constant along the flow. `p = 0` is the
//! logarithmic case; the same right-hand side applies with `h^p ≡ 1`.
//!
//! Time stepping is explicit Euler. A trial step is evenized and rejected
//! (with the step halved) whenever it loses positivity or convexity; the step
//! is also capped by the explicit stability limit of the curvature term.

use crate::chord::{
    ChordParams, ChordPotentialField, ChordQuadrature, DEFAULT_DIRECTION_NODES, DEFAULT_RADIAL_NODES,
};
use crate::diagnostics::{ma_residual_from_parts, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::quadrature::periodic_trapezoid;
use crate::support::{evenize, AngleGrid, BodyGeometry, SupportFunction};

/// Exponents and prescribed density.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    p: f64,
    q: f64,
    f: Vec<f64>,
}

impl ProblemSpec {
    /// Validates `p ≥ 0`, `q > 1` and a positive even density. Densities that
    /// are even only up to rounding (`1e-12` relative) are symmetrized.
    pub fn new(p: f64, q: f64, f: Vec<f64>) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidProblem(format!("p must be ≥ 0, got {p}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidProblem(format!("q must exceed 1, got {q}")));
        }
        let n = f.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidProblem(format!("density has odd or tiny length {n}")));
        }
        if let Some(i) = f.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProblem(format!("density not positive at node {i}: {}", f[i])));
        }
        let half = n / 2;
        if let Some(i) = (0..half).find(|&i| (f[i] - f[i + half]).abs() > 1e-12 * f[i].abs()) {
            return Err(Error::InvalidProblem(format!("density is not even at node {i}")));
        }
        let mut f = f;
        for i in 0..half {
            let v = 0.5 * (f[i] + f[i + half]);
            f[i] = v;
            f[i + half] = v;
        }
        if q <= 2.0 {
            log::warn!("q = {q} ≤ 2: outside the regime covered by the curvature estimates");
        }
        Ok(Self { p, q, f })
    }

    /// Constant density `c`.
    pub fn constant(p: f64, q: f64, grid: &AngleGrid, c: f64) -> Result<Self> {
        Self::new(p, q, vec![c; grid.len()])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn density(&self) -> &[f64] {
        &self.f
    }

    #[inline]
    fn h_pow(&self, h: f64) -> f64 {
        if self.p == 0.0 {
            1.0
        } else {
            h.powf(self.p)
        }
    }

    fn check_len(&self, h: &SupportFunction) -> Result<()> {
        if h.len() != self.f.len() {
            return Err(Error::ShapeMismatch { expected: self.f.len(), got: h.len() });
        }
        Ok(())
    }
}

/// Step control, stopping rule and quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub max_steps: usize,
    /// Stop once `‖∂h/∂t‖_∞` falls below this.
    pub eps_stationary: f64,
    pub record_every: usize,
    pub radial_nodes: usize,
    pub direction_nodes: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            dt_min: 1e-10,
            max_steps: 200_000,
            eps_stationary: 1e-5,
            record_every: 1000,
            radial_nodes: DEFAULT_RADIAL_NODES,
            direction_nodes: DEFAULT_DIRECTION_NODES,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt0 > self.dt_min && self.dt_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need dt0 > dt_min > 0, got dt0 = {}, dt_min = {}",
                self.dt0, self.dt_min
            )));
        }
        if !(self.eps_stationary > 0.0) {
            return Err(Error::InvalidConfig("eps_stationary must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn chord_params(&self, q: f64) -> ChordParams {
        ChordParams::with_nodes(q, self.radial_nodes, self.direction_nodes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub h: SupportFunction,
    pub theta: f64,
    /// Size of the last accepted step (`dt0` before the first step).
    pub dt: f64,
    pub step: usize,
}

/// Every field derived from one support function, evaluated consistently.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub geometry: BodyGeometry,
    pub field: ChordPotentialField,
    pub theta: f64,
    pub rhs: Vec<f64>,
}

impl Evaluation {
    pub fn rhs_sup(&self) -> f64 {
        self.rhs.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// `θ = ∫ V h b dx / ∫ h^p f dx`.
pub fn theta(spec: &ProblemSpec, h: &SupportFunction, field: &ChordPotentialField) -> Result<f64> {
    spec.check_len(h)?;
    let radius = h.check_convex()?;
    theta_from_parts(spec, h.values(), &radius, &field.values)
}

fn theta_from_parts(spec: &ProblemSpec, h: &[f64], radius: &[f64], potential: &[f64]) -> Result<f64> {
    let num: Vec<f64> = (0..h.len()).map(|i| potential[i] * h[i] * radius[i]).collect();
    let den: Vec<f64> = (0..h.len()).map(|i| spec.h_pow(h[i]) * spec.f[i]).collect();
    let den = periodic_trapezoid(&den);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok(periodic_trapezoid(&num) / den)
}

/// Flow functional: `(1/p) ∫ f h^p dx`, or `∫ f log h dx` when `p = 0`.
pub fn phi(spec: &ProblemSpec, h: &SupportFunction) -> f64 {
    let v = h.values();
    let integrand: Vec<f64> = if spec.p == 0.0 {
        (0..v.len()).map(|i| spec.f[i] * v[i].ln()).collect()
    } else {
        (0..v.len()).map(|i| spec.f[i] * v[i].powf(spec.p)).collect()
    };
    let total = periodic_trapezoid(&integrand);
    if spec.p == 0.0 {
        total
    } else {
        total / spec.p
    }
}

/// `τ = 1/θ` of a stationary state.
pub fn tau_from_theta(state: &FlowState) -> f64 {
    1.0 / state.theta
}

/// Outcome of [`Flow::run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    NonConvergence,
    StepSizeUnderflow,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: FlowState,
    pub series: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    /// `‖∂h/∂t‖_∞` at the final state.
    pub rhs_sup: f64,
    /// Monge–Ampère residual sup-norm at the final state with `τ = 1/θ`.
    pub residual_sup: f64,
}

impl RunOutput {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Maps a failed run to its error.
    pub fn into_result(self, config: &FlowConfig) -> Result<Self> {
        match self.status {
            RunStatus::Converged => Ok(self),
            RunStatus::NonConvergence => Err(Error::NonConvergence { max_steps: config.max_steps }),
            RunStatus::StepSizeUnderflow => {
                Err(Error::StepSizeUnderflow { t: self.state.t, dt_min: config.dt_min })
            }
        }
    }
}

/// Flow solver bound to one problem and configuration.
#[derive(Debug, Clone)]
pub struct Flow {
    spec: ProblemSpec,
    config: FlowConfig,
    quadrature: ChordQuadrature,
}

/// Fraction of the explicit stability limit used as a step cap.
const STABILITY_FRACTION: f64 = 1.8;
/// Largest eigenvalue magnitude of the periodic fourth-order second
/// difference, times `dx²`.
const SECOND_DIFFERENCE_SPECTRAL_RADIUS: f64 = 16.0 / 3.0;
const DT_GROWTH: f64 = 1.2;

impl Flow {
    pub fn new(spec: ProblemSpec, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        let quadrature = ChordQuadrature::new(spec.f.len(), config.chord_params(spec.q))?;
        Ok(Self { spec, config, quadrature })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn quadrature(&self) -> &ChordQuadrature {
        &self.quadrature
    }

    /// Evaluates geometry, potential, `θ` and the right-hand side from the
    /// same support function.
    pub fn evaluate(&self, h: &SupportFunction) -> Result<Evaluation> {
        self.spec.check_len(h)?;
        let geometry = BodyGeometry::new(h)?;
        let field = self.quadrature.field_at(h, &geometry.points)?;
        let hv = h.values();
        let theta = theta_from_parts(&self.spec, hv, &geometry.radius, &field.values)?;
        let rhs = (0..hv.len())
            .map(|i| {
                -theta * self.spec.h_pow(hv[i]) * geometry.curvature[i] * self.spec.f[i] / field.values[i]
                    + hv[i]
            })
            .collect();
        Ok(Evaluation { geometry, field, theta, rhs })
    }

    /// `∂h/∂t` per node.
    pub fn flow_rhs(&self, h: &SupportFunction) -> Result<Vec<f64>> {
        Ok(self.evaluate(h)?.rhs)
    }

    pub fn initial_state(&self, h0: &SupportFunction) -> Result<(FlowState, Evaluation)> {
        if !h0.is_even() {
            return Err(Error::InvalidProblem("initial support function is not even".into()));
        }
        let eval = self.evaluate(h0)?;
        let state = FlowState { t: 0.0, h: h0.clone(), theta: eval.theta, dt: self.config.dt0, step: 0 };
        Ok((state, eval))
    }

    /// Largest stable explicit step for the linearized curvature term.
    pub fn stability_limit(&self, eval: &Evaluation) -> f64 {
        let hv = eval.geometry.h.values();
        let dx = eval.geometry.h.grid().step();
        let diffusivity = (0..hv.len())
            .map(|i| {
                let k = eval.geometry.curvature[i];
                eval.theta * self.spec.h_pow(hv[i]) * self.spec.f[i] * k * k / eval.field.values[i]
            })
            .fold(0.0, f64::max);
        let lambda = diffusivity * SECOND_DIFFERENCE_SPECTRAL_RADIUS / (dx * dx);
        if lambda > 0.0 {
            STABILITY_FRACTION / lambda
        } else {
            f64::INFINITY
        }
    }

    /// One explicit Euler step with halving on loss of positivity or
    /// convexity. `eval` must belong to `state.h`; the evaluation of the new
    /// state is returned alongside it.
    pub fn step(&self, state: &FlowState, eval: &Evaluation) -> Result<(FlowState, Evaluation)> {
        let grow = if state.step == 0 { state.dt } else { state.dt * DT_GROWTH };
        let mut dt = grow.min(self.config.dt0).min(self.stability_limit(eval));
        let hv = state.h.values();
        loop {
            if dt < self.config.dt_min {
                return Err(Error::StepSizeUnderflow { t: state.t, dt_min: self.config.dt_min });
            }
            match self.try_step(&state.h, hv, &eval.rhs, dt) {
                Some((h, next)) => {
                    let new_state =
                        FlowState { t: state.t + dt, h, theta: next.theta, dt, step: state.step + 1 };
                    return Ok((new_state, next));
                }
                None => {
                    log::debug!("step {} rejected at dt = {dt:e}", state.step + 1);
                    dt *= 0.5;
                }
            }
        }
    }

    fn try_step(
        &self,
        h: &SupportFunction,
        hv: &[f64],
        rhs: &[f64],
        dt: f64,
    ) -> Option<(SupportFunction, Evaluation)> {
        let values: Vec<f64> = hv.iter().zip(rhs).map(|(h, r)| h + dt * r).collect();
        let trial = SupportFunction::new(h.grid().clone(), values).ok()?;
        let trial = evenize(&trial);
        let eval = self.evaluate(&trial).ok()?;
        Some((trial, eval))
    }

    /// Diagnostics snapshot for a state and its evaluation.
    pub fn record(&self, state: &FlowState, eval: &Evaluation) -> Result<DiagnosticsRecord> {
        let g = &eval.geometry;
        let chord = self.quadrature.chord_integral(&state.h)?;
        let (_, residual_sup) = ma_residual_from_parts(
            &self.spec,
            state.h.values(),
            &g.radius,
            &eval.field.values,
            1.0 / eval.theta,
        );
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(DiagnosticsRecord {
            step: state.step,
            t: state.t,
            dt: state.dt,
            theta: eval.theta,
            chord_integral: chord,
            phi: phi(&self.spec, &state.h),
            residual_sup,
            h_min: state.h.min(),
            h_max: state.h.max(),
            rho_min: min(&g.rho),
            rho_max: max(&g.rho),
            k_min: min(&g.curvature),
            k_max: max(&g.curvature),
            grad_max: g.max_gradient(),
        })
    }

    /// Runs until `‖∂h/∂t‖_∞ < eps_stationary`, recording diagnostics every
    /// `record_every` steps plus the first and last state.
    pub fn run(&self, h0: &SupportFunction) -> Result<RunOutput> {
        let (mut state, mut eval) = self.initial_state(h0)?;
        let mut series = vec![self.record(&state, &eval)?];
        let status = loop {
            if eval.rhs_sup() < self.config.eps_stationary {
                break RunStatus::Converged;
            }
            if state.step >= self.config.max_steps {
                break RunStatus::NonConvergence;
            }
            match self.step(&state, &eval) {
                Ok((s, e)) => {
                    state = s;
                    eval = e;
                }
                Err(Error::StepSizeUnderflow { .. }) => break RunStatus::StepSizeUnderflow,
                Err(e) => return Err(e),
            }
            if state.step % self.config.record_every == 0 {
                series.push(self.record(&state, &eval)?);
                log::info!(
                    "step {} t = {:.4} rhs = {:.3e} residual = {:.3e}",
                    state.step,
                    state.t,
                    eval.rhs_sup(),
                    series.last().map(|r| r.residual_sup).unwrap_or(f64::NAN)
                );
            }
        };
        if series.last().map(|r| r.step) != Some(state.step) {
            series.push(self.record(&state, &eval)?);
        }
        let residual_sup = series.last().map(|r| r.residual_sup).unwrap_or(f64::NAN);
        Ok(RunOutput { rhs_sup: eval.rhs_sup(), residual_sup, state, series, status })
    }
}

/// `∂h/∂t` for a one-off evaluation.
pub fn flow_rhs(spec: &ProblemSpec, config: &FlowConfig, h: &SupportFunction) -> Result<Vec<f64>> {
    Flow::new(spec.clone(), *config)?.flow_rhs(h)
}

/// Convenience wrapper around [`Flow::run`].
pub fn run(spec: &ProblemSpec, config: &FlowConfig, h0: &SupportFunction) -> Result<RunOutput> {
    Flow::new(spec.clone(), *config)?.run(h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::{make_body, Shape};

    fn grid() -> AngleGrid {
        AngleGrid::new(256).unwrap()
    }

    fn disk(r: f64) -> SupportFunction {
        make_body(&Shape::Disk { radius: r }, &grid()).unwrap()
    }

    fn flow(p: f64, q: f64, c: f64) -> Flow {
        Flow::new(ProblemSpec::constant(p, q, &grid(), c).unwrap(), FlowConfig::default()).unwrap()
    }

    #[test]
    fn theta_on_unit_disk() {
        let h = disk(1.0);
        for (p, c, expected) in [(1.0, 1.0, 2.9990), (0.0, 1.0, 2.9990), (1.0, 2.0, 1.4995)] {
            let th = flow(p, 3.0, c).evaluate(&h).unwrap().theta;
            assert!((th - expected).abs() < 1e-4, "p = {p}, c = {c}: {th}");
        }
    }

    #[test]
    fn doubling_density_doubles_tau() {
        let h = disk(1.0);
        let t1 = flow(1.0, 3.0, 1.0).evaluate(&h).unwrap().theta;
        let t2 = flow(1.0, 3.0, 2.0).evaluate(&h).unwrap().theta;
        assert!((t1 / t2 - 2.0).abs() < 1e-14);
        let state = |theta| FlowState { t: 0.0, h: h.clone(), theta, dt: 0.0, step: 0 };
        assert!((tau_from_theta(&state(2.9990)) - 0.33344).abs() < 1e-5);
        assert_eq!(tau_from_theta(&state(1.0)), 1.0);
    }

    #[test]
    fn disks_are_stationary() {
        for (p, q, r) in [(1.0, 3.0, 1.0), (0.0, 2.5, 0.5), (2.0, 4.0, 2.0)] {
            let rhs = flow(p, q, 1.0).flow_rhs(&disk(r)).unwrap();
            let sup = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(sup <= 1e-6, "p = {p}, q = {q}, R = {r}: {sup}");
        }
    }

    #[test]
    fn rhs_is_even_for_even_data() {
        let h = make_body(&Shape::Ellipse { a: 1.3, b: 0.8 }, &grid()).unwrap();
        let f = grid().sample(|t| 1.0 + 0.2 * (4.0 * t).cos());
        let flow = Flow::new(ProblemSpec::new(0.5, 3.0, f).unwrap(), FlowConfig::default()).unwrap();
        let rhs = flow.flow_rhs(&h).unwrap();
        for i in 0..128 {
            assert_eq!(rhs[i], rhs[i + 128]);
        }
    }

    #[test]
    fn phi_examples() {
        let h = disk(1.0);
        let tau = 2.0 * std::f64::consts::PI;
        let phi_of = |p| phi(&ProblemSpec::constant(p, 3.0, &grid(), 1.0).unwrap(), &h);
        assert!((phi_of(1.0) - tau).abs() < 1e-12);
        assert!((phi_of(2.0) - tau / 2.0).abs() < 1e-12);
        assert_eq!(phi_of(0.0), 0.0);
    }

    #[test]
    fn stationary_step_keeps_the_disk() {
        let flow = flow(1.0, 3.0, 1.0);
        let (state, eval) = flow.initial_state(&disk(1.0)).unwrap();
        let (next, _) = flow.step(&state, &eval).unwrap();
        assert_eq!(next.step, 1);
        assert!(next.t > 0.0 && next.t == next.dt);
        for (a, b) in next.h.values().iter().zip(state.h.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_disk_step_is_accepted_and_convex() {
        let h = make_body(&Shape::Fourier { coeffs: vec![0.05] }, &grid()).unwrap();
        let flow = flow(1.0, 3.0, 1.0);
        let (state, eval) = flow.initial_state(&h).unwrap();
        let (next, _) = flow.step(&state, &eval).unwrap();
        assert!(next.h.check_convex().is_ok());
        assert!(next.h.is_even());
        assert!(next.dt <= flow.config().dt0);
    }

    #[test]
    fn violent_update_halves_the_step() {
        let flow = flow(1.0, 3.0, 1.0);
        let (state, mut eval) = flow.initial_state(&disk(1.0)).unwrap();
        eval.rhs = (0..256).map(|i| if i % 2 == 0 { 10.0 } else { -10.0 }).collect();
        let cap = flow.stability_limit(&eval);
        let (next, _) = flow.step(&state, &eval).unwrap();
        assert!(next.dt < cap / 8.0, "{} vs {cap}", next.dt);
        assert!(next.h.check_convex().is_ok());

        let strict = FlowConfig { dt_min: 1e-4, ..FlowConfig::default() };
        let flow = Flow::new(flow.spec().clone(), strict).unwrap();
        assert!(matches!(flow.step(&state, &eval), Err(Error::StepSizeUnderflow { .. })));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let g = grid();
        assert!(matches!(ProblemSpec::constant(-0.5, 3.0, &g, 1.0), Err(Error::InvalidProblem(_))));
        assert!(matches!(ProblemSpec::constant(1.0, 1.0, &g, 1.0), Err(Error::InvalidProblem(_))));
        let odd = g.sample(|t| 1.0 + 0.1 * t.cos());
        assert!(matches!(ProblemSpec::new(1.0, 3.0, odd), Err(Error::InvalidProblem(_))));
        let bad = FlowConfig { dt0: 1e-12, ..FlowConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));

        let lopsided: Vec<f64> = g.sample(|t| 1.0 + 0.01 * t.cos());
        let h = SupportFunction::new(g, lopsided).unwrap();
        assert!(matches!(flow(1.0, 3.0, 1.0).initial_state(&h), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn short_run_conserves_and_decreases() {
        let h = make_body(&Shape::Fourier { coeffs: vec![0.05] }, &grid()).unwrap();
        let config = FlowConfig { max_steps: 40, record_every: 10, ..FlowConfig::default() };
        let out = run(&ProblemSpec::constant(1.0, 3.0, &grid(), 1.0).unwrap(), &config, &h).unwrap();
        assert_eq!(out.status, RunStatus::NonConvergence);
        assert_eq!(out.series.iter().map(|r| r.step).collect::<Vec<_>>(), vec![0, 10, 20, 30, 40]);
        let i0 = out.series[0].chord_integral;
        for w in out.series.windows(2) {
            assert!(w[1].phi <= w[0].phi + 1e-12);
            assert!(((w[1].chord_integral - i0) / i0).abs() < 1e-5);
        }
        assert!(matches!(out.into_result(&config), Err(Error::NonConvergence { max_steps: 40 })));
    }
}
