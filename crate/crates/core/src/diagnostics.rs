//! Checks that certify a flow run or a candidate solution. Nothing here
//! mutates solver state.

use serde::Serialize;

use crate::chord::{polygon_radial_function, ChordParams, ChordQuadrature};
use crate::error::{Error, Result};
use crate::flow::ProblemSpec;
use crate::quadrature::periodic_trapezoid;
use crate::support::{BodyGeometry, SupportFunction};

/// One row of the flow time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub theta: f64,
    pub chord_integral: f64,
    pub phi: f64,
    pub residual_sup: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub grad_max: f64,
}

/// Largest relative drift `|I(t) − I(0)| / I(0)` of the chord integral.
/// Series with fewer than two records report zero.
pub fn conservation_report(series: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = series.first() else { return 0.0 };
    let i0 = first.chord_integral;
    series.iter().map(|r| ((r.chord_integral - i0) / i0).abs()).fold(0.0, f64::max)
}

/// Largest increment `Φ_{k+1} − Φ_k` between consecutive records. Negative
/// when `Φ` strictly decreases; zero for fewer than two records.
pub fn monotonicity_report(series: &[DiagnosticsRecord]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    series.windows(2).map(|w| w[1].phi - w[0].phi).fold(f64::NEG_INFINITY, f64::max)
}

/// Residual of the Monge–Ampère equation
/// `τ V h^{1−p} b = f` (`τ V h b = f` when `p = 0`), normalized as
/// `τ V h^{1−p} b / f − 1`, with its sup-norm.
pub fn ma_residual(
    spec: &ProblemSpec,
    params: &ChordParams,
    h: &SupportFunction,
    tau: f64,
) -> Result<(Vec<f64>, f64)> {
    if h.len() != spec.density().len() {
        return Err(Error::ShapeMismatch { expected: spec.density().len(), got: h.len() });
    }
    let geometry = BodyGeometry::new(h)?;
    let quadrature = ChordQuadrature::new(h.len(), *params)?;
    let field = quadrature.field_at(h, &geometry.points)?;
    Ok(ma_residual_from_parts(spec, h.values(), &geometry.radius, &field.values, tau))
}

/// [`ma_residual`] from precomputed principal radii and potential.
pub fn ma_residual_from_parts(
    spec: &ProblemSpec,
    h: &[f64],
    radius: &[f64],
    potential: &[f64],
    tau: f64,
) -> (Vec<f64>, f64) {
    let f = spec.density();
    let weight = 1.0 - spec.p();
    let r: Vec<f64> = (0..h.len())
        .map(|i| {
            let hw = if spec.p() == 0.0 { h[i] } else { h[i].powf(weight) };
            tau * potential[i] * hw * radius[i] / f[i] - 1.0
        })
        .collect();
    let sup = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (r, sup)
}

/// Worst-case slacks of the extremal-value identities between support and
/// radial functions. Inequality slacks are reported as `max(lhs − rhs)`, so
/// a non-positive value means the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremumReport {
    pub h_max: f64,
    pub h_min: f64,
    pub rho_max: f64,
    pub rho_min: f64,
    /// `|max h − max ρ|`
    pub max_gap: f64,
    /// `|min h − min ρ|`
    pub min_gap: f64,
    /// `max (x·x_max) h(x_max) − h(x)` over `x·x_max > 0`.
    pub support_violation: f64,
    /// `max ρ(ξ)(ξ·ξ_min) − ρ(ξ_min)` over `ξ·ξ_min > 0`.
    pub radial_violation: f64,
}

impl ExtremumReport {
    /// Whether every identity and inequality holds at the given tolerances.
    pub fn holds(&self, extremum_tol: f64, slack: f64) -> bool {
        self.max_gap <= extremum_tol
            && self.min_gap <= extremum_tol
            && self.support_violation <= slack
            && self.radial_violation <= slack
    }
}

/// Compares support and radial extrema and checks
/// `h(x) ≥ (x·x_max) h(x_max)` and `ρ(ξ)(ξ·ξ_min) ≤ ρ(ξ_min)` on every grid
/// node. The radial function is that of the discretized body, so both
/// inequalities are exact up to rounding for any valid `h`.
pub fn extremum_check(h: &SupportFunction) -> Result<ExtremumReport> {
    h.check_convex()?;
    let grid = h.grid();
    let hv = h.values();
    let rho = &polygon_radial_function(h)?;
    let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let argmin = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b });

    let i_max = argmax(hv);
    let j_min = argmin(rho);
    let rho_max = rho[argmax(rho)];
    let (h_max, h_min, rho_min) = (hv[i_max], hv[argmin(hv)], rho[j_min]);

    let dot = |i: usize, j: usize| grid.cos()[i] * grid.cos()[j] + grid.sin()[i] * grid.sin()[j];
    let mut support_violation = f64::NEG_INFINITY;
    let mut radial_violation = f64::NEG_INFINITY;
    for i in 0..hv.len() {
        let c = dot(i, i_max);
        if c > 0.0 {
            support_violation = support_violation.max(c * h_max - hv[i]);
        }
        let c = dot(i, j_min);
        if c > 0.0 {
            radial_violation = radial_violation.max(rho[i] * c - rho_min);
        }
    }
    Ok(ExtremumReport {
        h_max,
        h_min,
        rho_max,
        rho_min,
        max_gap: (h_max - rho_max).abs(),
        min_gap: (h_min - rho_min).abs(),
        support_violation,
        radial_violation,
    })
}

/// Closed interval observed over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub min: f64,
    pub max: f64,
}

impl Bracket {
    fn empty() -> Self {
        Self { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn include(&mut self, lo: f64, hi: f64) {
        self.min = self.min.min(lo);
        self.max = self.max.max(hi);
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.min >= lo && self.max <= hi
    }
}

/// Brackets of the monitored quantities over a whole series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub h: Bracket,
    pub rho: Bracket,
    pub curvature: Bracket,
    pub theta: Bracket,
    pub grad_max: f64,
}

pub fn bounds_report(series: &[DiagnosticsRecord]) -> BoundsReport {
    let mut report = BoundsReport {
        h: Bracket::empty(),
        rho: Bracket::empty(),
        curvature: Bracket::empty(),
        theta: Bracket::empty(),
        grad_max: 0.0,
    };
    for r in series {
        report.h.include(r.h_min, r.h_max);
        report.rho.include(r.rho_min, r.rho_max);
        report.curvature.include(r.k_min, r.k_max);
        report.theta.include(r.theta, r.theta);
        report.grad_max = report.grad_max.max(r.grad_max);
    }
    report
}

/// Direction of a first-variation perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// Pure dilation of the body: `g = h` for `p > 0`, `g ≡ 1` for `p = 0`.
    Dilation,
    /// Explicit positive even samples of `g` on the grid.
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstVariation {
    /// Central difference `(I(h_t) − I(h_{−t})) / 2t`.
    pub fd_derivative: f64,
    /// `∫ g^p V h^{1−p} b dx`, or `∫ g V h b dx` when `p = 0`.
    pub measure_integral: f64,
    pub ratio: f64,
}

/// `(h^p + t g^p)^{1/p}`, or `h e^{t g}` when `p = 0`.
pub fn perturbed_body(h: &SupportFunction, g: &[f64], p: f64, t: f64) -> Result<SupportFunction> {
    let values: Vec<f64> = h
        .values()
        .iter()
        .zip(g)
        .map(|(h, g)| if p == 0.0 { h * (t * g).exp() } else { (h.powf(p) + t * g.powf(p)).powf(1.0 / p) })
        .collect();
    let wrap = |e: Error| Error::PerturbedNotConvex { t, source: Box::new(e) };
    let body = SupportFunction::new(h.grid().clone(), values).map_err(wrap)?;
    body.check_convex().map_err(wrap)?;
    Ok(body)
}

fn perturbation_samples(h: &SupportFunction, g: &Perturbation, p: f64) -> Result<Vec<f64>> {
    match g {
        Perturbation::Dilation if p == 0.0 => Ok(vec![1.0; h.len()]),
        Perturbation::Dilation => Ok(h.values().to_vec()),
        Perturbation::Samples(v) => {
            if v.len() != h.len() {
                return Err(Error::ShapeMismatch { expected: h.len(), got: v.len() });
            }
            if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidProblem(format!("perturbation not positive at node {i}")));
            }
            Ok(v.clone())
        }
    }
}

/// Finite-difference derivative of the chord integral along the `L_p`
/// perturbation path, next to the boundary integral it should match up to a
/// constant factor.
pub fn first_variation_check(
    h: &SupportFunction,
    g: &Perturbation,
    p: f64,
    params: &ChordParams,
    t_step: f64,
) -> Result<FirstVariation> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidProblem(format!("p must be ≥ 0, got {p}")));
    }
    if !(t_step > 0.0) {
        return Err(Error::InvalidConfig(format!("t_step must be positive, got {t_step}")));
    }
    let g = perturbation_samples(h, g, p)?;
    let quadrature = ChordQuadrature::new(h.len(), *params)?;

    let plus = perturbed_body(h, &g, p, t_step)?;
    let minus = perturbed_body(h, &g, p, -t_step)?;
    let fd_derivative =
        (quadrature.chord_integral(&plus)? - quadrature.chord_integral(&minus)?) / (2.0 * t_step);

    let geometry = BodyGeometry::new(h)?;
    let field = quadrature.field_at(h, &geometry.points)?;
    let hv = h.values();
    let density: Vec<f64> = (0..hv.len())
        .map(|i| {
            let base = field.values[i] * geometry.radius[i];
            if p == 0.0 {
                g[i] * base * hv[i]
            } else {
                g[i].powf(p) * base * hv[i].powf(1.0 - p)
            }
        })
        .collect();
    let measure_integral = periodic_trapezoid(&density);
    Ok(FirstVariation { fd_derivative, measure_integral, ratio: fd_derivative / measure_integral })
}

/// One row of [`variation_ratio_survey`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyRow {
    pub body: String,
    pub p: f64,
    pub q: f64,
    #[serde(flatten)]
    pub variation: FirstVariation,
}

/// First-variation ratios for every body and every `(p, q)` pair.
pub fn variation_ratio_survey(
    bodies: &[(String, SupportFunction)],
    g: &Perturbation,
    p_values: &[f64],
    q_values: &[f64],
    radial_nodes: usize,
    direction_nodes: usize,
    t_step: f64,
) -> Result<Vec<SurveyRow>> {
    let mut rows = Vec::with_capacity(bodies.len() * p_values.len() * q_values.len());
    for &q in q_values {
        let params = ChordParams::with_nodes(q, radial_nodes, direction_nodes);
        for &p in p_values {
            for (name, h) in bodies {
                let variation = first_variation_check(h, g, p, &params, t_step)?;
                rows.push(SurveyRow { body: name.clone(), p, q, variation });
            }
        }
    }
    Ok(rows)
}
