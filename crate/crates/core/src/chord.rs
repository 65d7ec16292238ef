//! Gaussian chord potential and Gaussian chord integral of a planar convex
//! body.
//!
//! The potential at a point `y` of the body is
//!
//! ```text
//! V(y) = 2 e^{-|y|²/2} ∫_K e^{-|z|²/2} |z - y|^{q-3} dz
//!      = 2 e^{-|y|²/2} ∫_{S¹} ∫_0^{s*(d)} e^{-|y + s d|²/2} s^{q-2} ds dd
//! ```
//!
//! where `s*(d)` is the chord length from `y` in direction `d`. Writing the
//! inner integral in polar coordinates about `y` removes the kernel
//! singularity for `q ≥ 2`; for `1 < q < 2` the substitution `σ = s^{q-1}`
//! turns the integrand into a bounded one. Angular integrals use the periodic
//! trapezoid rule, radial integrals composite Simpson.
//!
//! The integration domain is the discretized body: the intersection of the
//! grid half-planes `{z·x_j ≤ h_j}`. Gaussian volume, chord integral, the
//! potential and the Cartesian oracle all integrate over this same polygon.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, simpson_weights};
use crate::support::{boundary_points, containment_margin, Point, SupportFunction, INSIDE_TOL};

/// Default radial Simpson intervals.
pub const DEFAULT_RADIAL_NODES: usize = 64;
/// Default number of trapezoid directions.
pub const DEFAULT_DIRECTION_NODES: usize = 256;

/// Gauss nodes per polygon edge for the outer angular integrals.
const EDGE_GAUSS_ORDER: usize = 2;
/// Gauss nodes per polygon edge for the closed-form Gaussian volume.
const VOLUME_GAUSS_ORDER: usize = 8;

/// Exponent and quadrature resolution for chord quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordParams {
    pub q: f64,
    /// Radial Simpson intervals (even).
    pub radial_nodes: usize,
    /// Trapezoid directions on the unit circle.
    pub direction_nodes: usize,
}

impl ChordParams {
    pub fn new(q: f64) -> Self {
        Self { q, radial_nodes: DEFAULT_RADIAL_NODES, direction_nodes: DEFAULT_DIRECTION_NODES }
    }

    pub fn with_nodes(q: f64, radial_nodes: usize, direction_nodes: usize) -> Self {
        Self { q, radial_nodes, direction_nodes }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::UnsupportedExponent { q: self.q, reason: "q must exceed 1" });
        }
        if self.radial_nodes < 2 || !self.radial_nodes.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "radial_nodes must be even and ≥ 2, got {}",
                self.radial_nodes
            )));
        }
        if self.direction_nodes < 8 {
            return Err(Error::InvalidConfig(format!(
                "direction_nodes must be ≥ 8, got {}",
                self.direction_nodes
            )));
        }
        if self.q <= 2.0 {
            log::warn!("q = {} ≤ 2 lies outside the regime with curvature estimates", self.q);
        }
        Ok(())
    }
}

/// Potential values at the boundary nodes `X[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordPotentialField {
    pub values: Vec<f64>,
}

impl ChordPotentialField {
    pub fn max_over_min(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Directions for one anchor, as a contiguous cyclic window of half-planes
/// that the ray can cross.
#[derive(Debug, Clone)]
struct DirectionWindow {
    /// unit direction for anchor 0; rotated by the anchor angle at use
    dir: Point,
    start: usize,
    inv_rate: Vec<f64>,
}

/// Precomputed direction tables and radial weights for one grid size and
/// one set of [`ChordParams`]. Reusable across bodies on the same grid.
#[derive(Debug, Clone)]
pub struct ChordQuadrature {
    params: ChordParams,
    n: usize,
    windows: Vec<DirectionWindow>,
    /// Simpson weights, times `σ^{q-2}` on the uniform-s path
    radial_weights: Vec<f64>,
    /// `σ_m^{1/(q-1)}` on the substituted path
    substituted_nodes: Vec<f64>,
}

impl ChordQuadrature {
    pub fn new(grid_len: usize, params: ChordParams) -> Result<Self> {
        params.validate()?;
        let n = grid_len;
        let nu = params.direction_nodes;
        let windows = (0..nu)
            .map(|k| {
                // direction k for anchor 0 points along −x_0 rotated by 2πk/N_u
                let phi = PI + 2.0 * PI * k as f64 / nu as f64;
                let dir = [phi.cos(), phi.sin()];
                // rate at which the ray approaches half-plane m
                let rate = |m: usize| (phi - 2.0 * PI * m as f64 / n as f64).cos();
                let active = |m: usize| rate(m) > 1e-12;
                // contiguous cyclic run of approaching half-planes
                let first = (0..n).find(|&m| active(m) && !active((m + n - 1) % n)).unwrap_or(0);
                let inv_rate: Vec<f64> = (0..n)
                    .map(|t| (first + t) % n)
                    .take_while(|&m| active(m))
                    .map(|m| 1.0 / rate(m))
                    .collect();
                DirectionWindow { dir, start: first, inv_rate }
            })
            .collect();
        let mr = params.radial_nodes;
        let simpson = simpson_weights(mr);
        let q = params.q;
        let radial_weights = simpson
            .iter()
            .enumerate()
            .map(|(m, w)| {
                if q >= 2.0 {
                    let sigma = m as f64 / mr as f64;
                    if q == 2.0 {
                        *w
                    } else {
                        w * sigma.powf(q - 2.0)
                    }
                } else {
                    *w
                }
            })
            .collect();
        let substituted_nodes = if q < 2.0 {
            (0..=mr).map(|m| (m as f64 / mr as f64).powf(1.0 / (q - 1.0))).collect()
        } else {
            Vec::new()
        };
        Ok(Self { params, n, windows, radial_weights, substituted_nodes })
    }

    pub fn params(&self) -> &ChordParams {
        &self.params
    }

    fn check_grid(&self, h: &SupportFunction) -> Result<()> {
        if h.len() != self.n {
            return Err(Error::ShapeMismatch { expected: self.n, got: h.len() });
        }
        Ok(())
    }

    /// Potential at `y`, with the direction grid rotated to grid angle
    /// `anchor`. `slack` is scratch space.
    fn potential(&self, h: &SupportFunction, y: Point, anchor: usize, slack: &mut Vec<f64>) -> Result<f64> {
        let n = self.n;
        let g = h.grid();
        let hv = h.values();
        slack.clear();
        slack.resize(2 * n, 0.0);
        let mut margin = f64::NEG_INFINITY;
        for m in 0..n {
            let j = (anchor + m) % n;
            let s = hv[j] - (y[0] * g.cos()[j] + y[1] * g.sin()[j]);
            margin = margin.max(-s);
            let s = s.max(0.0);
            slack[m] = s;
            slack[m + n] = s;
        }
        if margin > INSIDE_TOL * h.max() {
            return Err(Error::PointOutsideBody { x: y[0], y: y[1], margin });
        }
        let (ca, sa) = (g.cos()[anchor], g.sin()[anchor]);
        let q = self.params.q;
        let mr = self.params.radial_nodes;
        let mut total = 0.0;
        for w in &self.windows {
            let chord = slack[w.start..w.start + w.inv_rate.len()]
                .iter()
                .zip(&w.inv_rate)
                .map(|(s, r)| s * r)
                .fold(f64::INFINITY, f64::min);
            if !(chord > 0.0) || !chord.is_finite() {
                continue;
            }
            let d = [ca * w.dir[0] - sa * w.dir[1], sa * w.dir[0] + ca * w.dir[1]];
            let yd = y[0] * d[0] + y[1] * d[1];
            total += if q >= 2.0 {
                // e^{-s yd - s²/2} by multiplicative recurrence on the uniform nodes
                let ds = chord / mr as f64;
                let step_decay = (-ds * ds).exp();
                let mut ratio = (-ds * yd - 0.5 * ds * ds).exp();
                let mut g = 1.0;
                let mut acc = 0.0;
                for wm in &self.radial_weights {
                    acc += wm * g;
                    g *= ratio;
                    ratio *= step_decay;
                }
                let scale = if q == 2.0 { 1.0 } else { chord.powf(q - 2.0) };
                acc * ds * scale
            } else {
                let sigma_max = chord.powf(q - 1.0);
                let dsig = sigma_max / mr as f64;
                let acc: f64 = self
                    .substituted_nodes
                    .iter()
                    .zip(&self.radial_weights)
                    .map(|(t, wm)| {
                        let s = t * chord;
                        wm * (-s * yd - 0.5 * s * s).exp()
                    })
                    .sum();
                acc * dsig / (q - 1.0)
            };
        }
        let r2 = y[0] * y[0] + y[1] * y[1];
        let value = 2.0 * (-r2).exp() * total * 2.0 * PI / self.windows.len() as f64;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::QuadratureUnderflow);
        }
        Ok(value)
    }

    /// Potential at an arbitrary point of the body.
    pub fn v_tilde_at(&self, h: &SupportFunction, y: Point) -> Result<f64> {
        self.check_grid(h)?;
        let anchor = nearest_node(self.n, y);
        self.potential(h, y, anchor, &mut Vec::new())
    }

    /// Potential at every boundary node. Even bodies are evaluated on one
    /// half of the grid and mirrored.
    pub fn v_tilde_field(&self, h: &SupportFunction) -> Result<ChordPotentialField> {
        self.check_grid(h)?;
        let points = boundary_points(h)?;
        self.field_at(h, &points)
    }

    pub(crate) fn field_at(&self, h: &SupportFunction, points: &[Point]) -> Result<ChordPotentialField> {
        let n = self.n;
        let even = h.is_even();
        let count = if even { n / 2 } else { n };
        let mut slack = Vec::with_capacity(2 * n);
        let mut values = vec![0.0; n];
        for i in 0..count {
            values[i] = self.potential(h, points[i], i, &mut slack)?;
        }
        if even {
            let (lo, hi) = values.split_at_mut(n / 2);
            hi.copy_from_slice(lo);
        }
        Ok(ChordPotentialField { values })
    }

    /// `I = ½ ∫_K V(y) dy`, integrated in polar coordinates over the polygon
    /// edges: Gauss nodes in angle per edge, Simpson in radius.
    pub fn chord_integral(&self, h: &SupportFunction) -> Result<f64> {
        self.check_grid(h)?;
        let polygon = Polygon::new(h)?;
        let (gx, gw) = gauss_legendre(EDGE_GAUSS_ORDER);
        let mr = self.params.radial_nodes;
        let simpson = simpson_weights(mr);
        let even = h.is_even();
        let mut slack = Vec::with_capacity(2 * self.n);
        let mut total = 0.0;
        for (e, edge) in polygon.edges.iter().enumerate() {
            // antipodal edges of an even body contribute equally
            if even && edge.line >= self.n / 2 {
                continue;
            }
            let weight = if even { 2.0 } else { 1.0 };
            let half_span = 0.5 * (edge.end - edge.start);
            let mid = 0.5 * (edge.end + edge.start);
            for (x, w) in gx.iter().zip(&gw) {
                let phi = mid + half_span * x;
                let xi = [phi.cos(), phi.sin()];
                let rho = polygon.edge_radius(e, phi);
                let anchor = nearest_node(self.n, xi);
                let dr = rho / mr as f64;
                let mut ray = 0.0;
                for (m, sw) in simpson.iter().enumerate().skip(1) {
                    let r = m as f64 * dr;
                    let v = self.potential(h, [r * xi[0], r * xi[1]], anchor, &mut slack)?;
                    ray += sw * v * r;
                }
                total += weight * w * half_span * ray * dr;
            }
        }
        Ok(0.5 * total)
    }
}

fn nearest_node(n: usize, y: Point) -> usize {
    if y[0] == 0.0 && y[1] == 0.0 {
        return 0;
    }
    let a = y[1].atan2(y[0]).rem_euclid(2.0 * PI);
    ((a / (2.0 * PI) * n as f64).round() as usize) % n
}

/// Polygon cut out by the grid half-planes.
#[derive(Debug, Clone)]
pub(crate) struct Polygon {
    h: Vec<f64>,
    normals: Vec<Point>,
    pub(crate) edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub(crate) line: usize,
    /// unwrapped polar angle of the edge's start and end vertices
    pub(crate) start: f64,
    pub(crate) end: f64,
}

impl Polygon {
    pub(crate) fn new(h: &SupportFunction) -> Result<Self> {
        let n = h.len();
        let g = h.grid();
        let normals: Vec<Point> = (0..n).map(|i| g.normal(i)).collect();
        let hv = h.values().to_vec();
        let vertex = |i: usize, j: usize| -> Point {
            let (a, b) = (normals[i], normals[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            [(hv[i] * b[1] - hv[j] * a[1]) / det, (a[0] * hv[j] - b[0] * hv[i]) / det]
        };
        // drop half-planes that do not contribute an edge
        let mut active: Vec<usize> = (0..n).collect();
        loop {
            let len = active.len();
            if len < 3 {
                return Err(Error::QuadratureUnderflow);
            }
            let keep: Vec<usize> = (0..len)
                .filter(|&k| {
                    let prev = active[(k + len - 1) % len];
                    let cur = active[k];
                    let next = active[(k + 1) % len];
                    let v0 = vertex(prev, cur);
                    let v1 = vertex(cur, next);
                    let t = [-normals[cur][1], normals[cur][0]];
                    (v1[0] - v0[0]) * t[0] + (v1[1] - v0[1]) * t[1] > 0.0
                })
                .map(|k| active[k])
                .collect();
            if keep.len() == len {
                break;
            }
            active = keep;
        }
        let len = active.len();
        let vertices: Vec<Point> = (0..len).map(|k| vertex(active[k], active[(k + 1) % len])).collect();
        let mut edges = Vec::with_capacity(len);
        let first = vertices[len - 1];
        let mut start = first[1].atan2(first[0]);
        for (k, v) in vertices.iter().enumerate() {
            let raw = v[1].atan2(v[0]);
            let end = start + (raw - start).rem_euclid(2.0 * PI);
            edges.push(Edge { line: active[k], start, end });
            start = end;
        }
        Ok(Self { h: hv, normals, edges })
    }

    /// Distance from the origin to edge `e` along polar angle `phi`.
    pub(crate) fn edge_radius(&self, e: usize, phi: f64) -> f64 {
        let line = self.edges[e].line;
        let nrm = self.normals[line];
        self.h[line] / (phi.cos() * nrm[0] + phi.sin() * nrm[1])
    }

    /// Radial function of the polygon at polar angle `phi`.
    pub(crate) fn radial(&self, phi: f64) -> f64 {
        let start = self.edges[0].start;
        let target = start + (phi - start).rem_euclid(2.0 * PI);
        let e = self.edges.partition_point(|edge| edge.end <= target).min(self.edges.len() - 1);
        self.edge_radius(e, target)
    }

    /// `∫_{S¹} (1 − e^{−ρ²/2}) dφ`, Gauss–Legendre on each edge.
    pub(crate) fn gaussian_volume(&self) -> f64 {
        let (gx, gw) = gauss_legendre(VOLUME_GAUSS_ORDER);
        self.edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let half = 0.5 * (edge.end - edge.start);
                let mid = 0.5 * (edge.end + edge.start);
                gx.iter()
                    .zip(&gw)
                    .map(|(x, w)| {
                        let rho = self.edge_radius(e, mid + half * x);
                        w * -(-0.5 * rho * rho).exp_m1()
                    })
                    .sum::<f64>()
                    * half
            })
            .sum()
    }
}

/// Potential at `y`.
pub fn v_tilde_at(h: &SupportFunction, params: &ChordParams, y: Point) -> Result<f64> {
    ChordQuadrature::new(h.len(), *params)?.v_tilde_at(h, y)
}

/// Potential at every boundary node.
pub fn v_tilde_field(h: &SupportFunction, params: &ChordParams) -> Result<ChordPotentialField> {
    ChordQuadrature::new(h.len(), *params)?.v_tilde_field(h)
}

/// Gaussian chord integral `I_{γ,q}` of the discretized body.
pub fn chord_integral(h: &SupportFunction, params: &ChordParams) -> Result<f64> {
    ChordQuadrature::new(h.len(), *params)?.chord_integral(h)
}

/// Gaussian mass `∫_K e^{−|z|²/2} dz` of the discretized body.
pub fn gaussian_volume(h: &SupportFunction) -> Result<f64> {
    Ok(Polygon::new(h)?.gaussian_volume())
}

/// Radial function of the discretized body at the grid angles.
pub fn polygon_radial_function(h: &SupportFunction) -> Result<Vec<f64>> {
    let polygon = Polygon::new(h)?;
    Ok((0..h.len()).map(|i| polygon.radial(h.grid().theta(i))).collect())
}

/// Brute-force Cartesian midpoint sum of the chord integral, for `q ≥ 3`.
///
/// Every pair of cells whose centers lie in the body contributes
/// `e^{−(|z|²+|y|²)/2} |z − y|^{q−3}` times the squared cell area. The cost
/// is quadratic in the number of cells, so this is a verification tool, not a
/// solver path. It shares nothing with the polar quadrature except the
/// membership test.
pub fn chord_integral_oracle(h: &SupportFunction, q: f64, cell_size: f64) -> Result<f64> {
    if !(q >= 3.0) {
        return Err(Error::UnsupportedExponent {
            q,
            reason: "the Cartesian oracle needs a bounded kernel (q ≥ 3)",
        });
    }
    if !(cell_size > 0.0) {
        return Err(Error::InvalidConfig(format!("cell size must be positive, got {cell_size}")));
    }
    let extent = h.max();
    let cells_per_side = (2.0 * extent / cell_size).ceil() as i64;
    let origin = -0.5 * cells_per_side as f64 * cell_size;
    let mut centers: Vec<(f64, f64, f64)> = Vec::new();
    for ix in 0..cells_per_side {
        for iy in 0..cells_per_side {
            let z = [origin + (ix as f64 + 0.5) * cell_size, origin + (iy as f64 + 0.5) * cell_size];
            if containment_margin(h, z) <= 0.0 {
                centers.push((z[0], z[1], (-0.5 * (z[0] * z[0] + z[1] * z[1])).exp()));
            }
        }
    }
    if centers.len() < 10_000 {
        log::warn!("oracle grid has only {} cells inside the body", centers.len());
    }
    let area = cell_size * cell_size;
    let power = q - 3.0;
    let mut off_diagonal = 0.0;
    let mut diagonal = 0.0;
    for (i, a) in centers.iter().enumerate() {
        if power == 0.0 {
            diagonal += a.2 * a.2;
        }
        let mut row = 0.0;
        for b in &centers[i + 1..] {
            let dist2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            let kernel = if power == 0.0 {
                1.0
            } else if power == 1.0 {
                dist2.sqrt()
            } else {
                dist2.powf(0.5 * power)
            };
            row += b.2 * kernel;
        }
        off_diagonal += a.2 * row;
    }
    Ok((2.0 * off_diagonal + diagonal) * area * area)
}
