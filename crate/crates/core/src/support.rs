//! Discrete support-function calculus for origin-symmetric planar convex
//! bodies.
//!
//! A body is represented by its support values `h[i]` on a uniform periodic
//! grid of outer normals `x_i = (cos θ_i, sin θ_i)`. Derivatives use
//! fourth-order periodic central differences; the principal radius of
//! curvature is `b = h'' + h` and the curvature is `1 / b`.
//!
//! The discretized body used for membership and chord queries is the
//! intersection of the grid half-planes `{z : z·x_i ≤ h[i]}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// Smallest grid the solver accepts.
pub const MIN_GRID: usize = 16;

/// Default number of grid nodes.
pub const DEFAULT_GRID: usize = 256;

/// Uniform periodic grid `θ_i = 2πi/N` on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl AngleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_GRID || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N must be even and at least {MIN_GRID}, got {n}")));
        }
        let step = 2.0 * PI / n as f64;
        let half = n / 2;
        let (mut cos, mut sin): (Vec<f64>, Vec<f64>) = (0..half)
            .map(|i| {
                let t = step * i as f64;
                (t.cos(), t.sin())
            })
            .unzip();
        // antipodal normals are exact negations
        for i in 0..half {
            cos.push(-cos[i]);
            sin.push(-sin[i]);
        }
        Ok(Self { n, cos, sin })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    #[inline]
    pub fn theta(&self, i: usize) -> f64 {
        self.step() * i as f64
    }

    /// Unit normal `x_i`.
    #[inline]
    pub fn normal(&self, i: usize) -> Point {
        [self.cos[i], self.sin[i]]
    }

    #[inline]
    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    #[inline]
    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    /// Index of the antipodal node.
    #[inline]
    pub fn antipode(&self, i: usize) -> usize {
        (i + self.n / 2) % self.n
    }

    /// Samples `f(θ_i)` on every node.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n).map(|i| f(self.theta(i))).collect()
    }
}

/// Support values of a convex body on an [`AngleGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    grid: AngleGrid,
    values: Vec<f64>,
}

impl SupportFunction {
    /// Wraps support values, checking length and positivity. Convexity is
    /// checked separately by [`SupportFunction::check_convex`].
    pub fn new(grid: AngleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveSupport { node, value });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Exact antipodal symmetry `h[i] == h[i + N/2]`.
    pub fn is_even(&self) -> bool {
        let half = self.len() / 2;
        (0..half).all(|i| self.values[i] == self.values[i + half])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Principal radii `h'' + h`; fails on the first non-positive node.
    pub fn check_convex(&self) -> Result<Vec<f64>> {
        let (_, d2) = eval_derivatives(self);
        let b: Vec<f64> = d2.iter().zip(&self.values).map(|(a, h)| a + h).collect();
        match b.iter().position(|r| !(*r > 0.0)) {
            Some(node) => Err(Error::ConvexityViolation { node, radius: b[node] }),
            None => Ok(b),
        }
    }
}

/// First and second derivatives by fourth-order periodic central differences.
pub fn eval_derivatives(h: &SupportFunction) -> (Vec<f64>, Vec<f64>) {
    let v = h.values();
    let n = v.len();
    let dx = h.grid().step();
    let c1 = 1.0 / (12.0 * dx);
    let c2 = 1.0 / (12.0 * dx * dx);
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let m2 = v[(i + n - 2) % n];
        let m1 = v[(i + n - 1) % n];
        let p1 = v[(i + 1) % n];
        let p2 = v[(i + 2) % n];
        d1[i] = (8.0 * (p1 - m1) - (p2 - m2)) * c1;
        d2[i] = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * v[i]) * c2;
    }
    (d1, d2)
}

/// Curvature `1 / (h'' + h)` per node.
pub fn gauss_curvature(h: &SupportFunction) -> Result<Vec<f64>> {
    Ok(h.check_convex()?.iter().map(|b| 1.0 / b).collect())
}

/// Boundary point with outer normal `x_i`: `X = h x + h' x⊥`.
pub fn boundary_points(h: &SupportFunction) -> Result<Vec<Point>> {
    h.check_convex()?;
    let (d1, _) = eval_derivatives(h);
    Ok(points_from(h, &d1))
}

fn points_from(h: &SupportFunction, d1: &[f64]) -> Vec<Point> {
    let g = h.grid();
    (0..h.len())
        .map(|i| {
            let (c, s) = (g.cos()[i], g.sin()[i]);
            [h.values()[i] * c - d1[i] * s, h.values()[i] * s + d1[i] * c]
        })
        .collect()
}

/// Radial function sampled on the same uniform grid, in the polar variable.
///
/// Each boundary point contributes its polar angle and radius; values at the
/// grid angles come from periodic linear interpolation in angle.
pub fn radial_function(h: &SupportFunction) -> Result<Vec<f64>> {
    let points = boundary_points(h)?;
    radial_from_points(h.grid(), &points)
}

fn radial_from_points(grid: &AngleGrid, points: &[Point]) -> Result<Vec<f64>> {
    let n = points.len();
    let two_pi = 2.0 * PI;
    let radius: Vec<f64> = points.iter().map(|p| p[0].hypot(p[1])).collect();
    if radius.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::QuadratureUnderflow);
    }
    // Unwrap polar angles along the boundary; they must increase by a total
    // of exactly one turn.
    let mut angle = Vec::with_capacity(n + 1);
    angle.push(points[0][1].atan2(points[0][0]));
    for i in 1..=n {
        let p = points[i % n];
        let raw = p[1].atan2(p[0]);
        let prev = angle[i - 1];
        let mut d = (raw - prev).rem_euclid(two_pi);
        if d > PI {
            d -= two_pi;
        }
        if !(d > 0.0) {
            return Err(Error::InterpolationError { node: i % n });
        }
        angle.push(prev + d);
    }
    if (angle[n] - angle[0] - two_pi).abs() > 1e-9 {
        return Err(Error::InterpolationError { node: 0 });
    }
    let start = angle[0];
    let rho = (0..grid.len())
        .map(|j| {
            let target = start + (grid.theta(j) - start).rem_euclid(two_pi);
            // first index with angle > target, in 1..=n
            let k = angle.partition_point(|a| *a <= target).clamp(1, n);
            let (a0, a1) = (angle[k - 1], angle[k]);
            let (r0, r1) = (radius[(k - 1) % n], radius[k % n]);
            let w = ((target - a0) / (a1 - a0)).clamp(0.0, 1.0);
            r0 + w * (r1 - r0)
        })
        .collect();
    Ok(rho)
}

/// Signed support test `max_i (point·x_i − h[i])`; non-positive iff the point
/// lies in the discretized body.
pub fn containment_margin(h: &SupportFunction, point: Point) -> f64 {
    let g = h.grid();
    (0..h.len())
        .map(|i| point[0] * g.cos()[i] + point[1] * g.sin()[i] - h.values()[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Membership tolerance used by chord queries, relative to the body scale.
pub const INSIDE_TOL: f64 = 1e-9;

/// Largest `s ≥ 0` with `y − s u` inside the discretized body.
///
/// The body is an intersection of half-planes, so the supremum is the
/// nearest half-plane crossing along the ray and is computed directly.
pub fn chord_from_point(h: &SupportFunction, y: Point, u: Point) -> Result<f64> {
    let margin = containment_margin(h, y);
    if margin > INSIDE_TOL * h.max() {
        return Err(Error::PointOutsideBody { x: y[0], y: y[1], margin });
    }
    let g = h.grid();
    let mut best = f64::INFINITY;
    for i in 0..h.len() {
        let (c, s) = (g.cos()[i], g.sin()[i]);
        let rate = -(u[0] * c + u[1] * s);
        if rate > 0.0 {
            let slack = (h.values()[i] - (y[0] * c + y[1] * s)).max(0.0);
            best = best.min(slack / rate);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::QuadratureUnderflow)
    }
}

/// Projection onto even support functions by antipodal averaging.
pub fn evenize(h: &SupportFunction) -> SupportFunction {
    let v = h.values();
    let n = v.len();
    let half = n / 2;
    let values = (0..n).map(|i| 0.5 * (v[i] + v[(i + half) % n])).collect();
    SupportFunction { grid: h.grid().clone(), values }
}

/// Initial-data factory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Shape {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `1 + Σ_k c_k cos(2kθ)`, `k = 1, 2, ...`.
    Fourier {
        coeffs: Vec<f64>,
    },
}

impl Shape {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Shape::Disk { radius } => *radius,
            Shape::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                (a * a * c * c + b * b * s * s).sqrt()
            }
            Shape::Fourier { coeffs } => {
                1.0 + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (2.0 * (k + 1) as f64 * theta).cos())
                    .sum::<f64>()
            }
        }
    }
}

pub fn make_body(shape: &Shape, grid: &AngleGrid) -> Result<SupportFunction> {
    match shape {
        Shape::Disk { radius } if !(*radius > 0.0 && radius.is_finite()) => {
            return Err(Error::InvalidShape(format!("disk radius must be positive, got {radius}")))
        }
        Shape::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) => {
            return Err(Error::InvalidShape(format!("ellipse semi-axes must be positive, got {a}, {b}")))
        }
        _ => {}
    }
    // every factory shape is origin-symmetric; copy the first half so the
    // evenness invariant holds bit-for-bit
    let half = grid.len() / 2;
    let mut values: Vec<f64> = (0..half).map(|i| shape.eval(grid.theta(i))).collect();
    values.extend_from_within(..);
    let h = SupportFunction::new(grid.clone(), values).map_err(|e| Error::InvalidShape(e.to_string()))?;
    h.check_convex().map_err(|e| Error::InvalidShape(e.to_string()))?;
    Ok(h)
}

/// All derived fields of a convex body.
#[derive(Debug, Clone)]
pub struct BodyGeometry {
    pub h: SupportFunction,
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
    /// Principal radius of curvature `h'' + h`.
    pub radius: Vec<f64>,
    pub curvature: Vec<f64>,
    pub points: Vec<Point>,
    /// Radial function on the grid, in the polar variable.
    pub rho: Vec<f64>,
}

impl BodyGeometry {
    pub fn new(h: &SupportFunction) -> Result<Self> {
        let radius = h.check_convex()?;
        let (dh, d2h) = eval_derivatives(h);
        let curvature = radius.iter().map(|b| 1.0 / b).collect();
        let points = points_from(h, &dh);
        let rho = radial_from_points(h.grid(), &points)?;
        Ok(Self { h: h.clone(), dh, d2h, radius, curvature, points, rho })
    }

    pub fn max_gradient(&self) -> f64 {
        self.h.values().iter().zip(&self.dh).map(|(h, d)| h.hypot(*d)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> AngleGrid {
        AngleGrid::new(n).unwrap()
    }

    fn ellipse(n: usize) -> SupportFunction {
        make_body(&Shape::Ellipse { a: 2.0, b: 1.0 }, &grid(n)).unwrap()
    }

    #[test]
    fn grid_rejects_odd_or_small() {
        assert!(AngleGrid::new(15).is_err());
        assert!(AngleGrid::new(17).is_err());
        assert!(AngleGrid::new(8).is_err());
        assert_eq!(grid(16).antipode(3), 11);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let h = make_body(&Shape::Disk { radius: 1.0 }, &grid(64)).unwrap();
        let (d1, d2) = eval_derivatives(&h);
        assert!(d1.iter().chain(&d2).all(|v| *v == 0.0));
    }

    #[test]
    fn derivatives_of_cos2() {
        let g = grid(256);
        let h = SupportFunction::new(g.clone(), g.sample(|t| 2.0 + (2.0 * t).cos())).unwrap();
        let (d1, d2) = eval_derivatives(&h);
        for i in 0..256 {
            let t = g.theta(i);
            assert!((d1[i] + 2.0 * (2.0 * t).sin()).abs() <= 1e-4);
            assert!((d2[i] + 4.0 * (2.0 * t).cos()).abs() <= 1e-4);
        }
    }

    #[test]
    fn derivative_error_shrinks_fourth_order() {
        let err = |n: usize| {
            let g = grid(n);
            let h = SupportFunction::new(g.clone(), g.sample(|t| 2.0 + (2.0 * t).cos())).unwrap();
            let (_, d2) = eval_derivatives(&h);
            (0..n).map(|i| (d2[i] + 4.0 * (2.0 * g.theta(i)).cos()).abs()).fold(0.0, f64::max)
        };
        assert!(err(64) / err(128) >= 8.0);
    }

    #[test]
    fn ellipse_derivative_vanishes_on_axis() {
        let (d1, _) = eval_derivatives(&ellipse(256));
        assert!(d1[0].abs() < 1e-14);
    }

    #[test]
    fn ellipse_curvature_at_vertices() {
        let k = gauss_curvature(&ellipse(256)).unwrap();
        assert_relative_eq!(k[0], 2.0, max_relative = 1e-5);
        assert_relative_eq!(k[64], 0.25, max_relative = 1e-5);
    }

    #[test]
    fn disk_curvature_is_exact() {
        let h = make_body(&Shape::Disk { radius: 2.0 }, &grid(128)).unwrap();
        assert!(gauss_curvature(&h).unwrap().iter().all(|k| *k == 0.5));
    }

    #[test]
    fn nonconvex_input_is_reported() {
        let g = grid(64);
        let h = SupportFunction::new(g.clone(), g.sample(|t| 1.0 + 0.5 * (2.0 * t).cos())).unwrap();
        match gauss_curvature(&h) {
            Err(Error::ConvexityViolation { node, radius }) => {
                assert_eq!(node, 0);
                assert!(radius < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn boundary_points_of_disk_and_ellipse() {
        let disk = make_body(&Shape::Disk { radius: 1.0 }, &grid(64)).unwrap();
        assert_eq!(boundary_points(&disk).unwrap()[0], [1.0, 0.0]);
        let x = boundary_points(&ellipse(256)).unwrap();
        assert!((x[0][0] - 2.0).abs() < 1e-12 && x[0][1].abs() < 1e-12);
        assert!(x[64][0].abs() < 1e-10 && (x[64][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_function_of_disk_and_ellipse() {
        let disk = make_body(&Shape::Disk { radius: 1.0 }, &grid(64)).unwrap();
        for r in radial_function(&disk).unwrap() {
            assert!((r - 1.0).abs() < 1e-12);
        }
        let e = ellipse(256);
        let rho = radial_function(&e).unwrap();
        assert!((rho[0] - 2.0).abs() < 1e-12);
        assert!((rho[64] - 1.0).abs() < 1e-9);
        let max = rho.iter().copied().fold(0.0, f64::max);
        let min = rho.iter().copied().fold(f64::MAX, f64::min);
        assert!((max - e.max()).abs() < 1e-3 && (min - e.min()).abs() < 1e-3);
    }

    #[test]
    fn radial_function_matches_ellipse_polar_form() {
        let e = ellipse(256);
        let rho = radial_function(&e).unwrap();
        for (j, r) in rho.iter().enumerate() {
            let (s, c) = e.grid().theta(j).sin_cos();
            let exact = 1.0 / ((c / 2.0).powi(2) + s * s).sqrt();
            assert!((r - exact).abs() < 1e-3, "node {j}: {r} vs {exact}");
        }
    }

    #[test]
    fn rho_squared_is_h_squared_plus_gradient() {
        let geo = BodyGeometry::new(&make_body(&Shape::Fourier { coeffs: vec![0.1] }, &grid(256)).unwrap())
            .unwrap();
        for i in 0..256 {
            let p = geo.points[i];
            let lhs = p[0] * p[0] + p[1] * p[1];
            let rhs = geo.h.values()[i].powi(2) + geo.dh[i].powi(2);
            assert!((lhs - rhs).abs() < 1e-12);
            assert!((geo.curvature[i] * geo.radius[i] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn containment_examples() {
        let disk = make_body(&Shape::Disk { radius: 1.0 }, &grid(64)).unwrap();
        assert_eq!(containment_margin(&disk, [0.0, 0.0]), -1.0);
        assert_eq!(containment_margin(&disk, [2.0, 0.0]), 1.0);
        assert_eq!(containment_margin(&disk, [1.0, 0.0]), 0.0);
    }

    /// Bracketing plus bisection on the membership test.
    fn chord_by_bisection(h: &SupportFunction, y: Point, u: Point) -> f64 {
        let inside = |s: f64| containment_margin(h, [y[0] - s * u[0], y[1] - s * u[1]]) <= 0.0;
        let diam = 2.0 * h.max();
        let mut hi = diam / h.len() as f64;
        let mut lo = 0.0;
        while inside(hi) {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-13 * diam {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn chord_examples() {
        let n = 256;
        let disk = make_body(&Shape::Disk { radius: 1.0 }, &grid(n)).unwrap();
        assert!((chord_from_point(&disk, [1.0, 0.0], [1.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        // along the tangent the ray runs over half an edge of the grid polygon
        let tangent = chord_from_point(&disk, [1.0, 0.0], [0.0, 1.0]).unwrap();
        assert!((tangent - (PI / n as f64).tan()).abs() < 1e-12);
        for k in 0..16 {
            let a = 0.3 + k as f64 * 0.4;
            let s = chord_from_point(&disk, [0.0, 0.0], [a.cos(), a.sin()]).unwrap();
            assert!((s - 1.0).abs() < 1e-4 && s >= 1.0 - 1e-12);
        }
        assert!(matches!(
            chord_from_point(&disk, [1.5, 0.0], [1.0, 0.0]),
            Err(Error::PointOutsideBody { .. })
        ));
    }

    #[test]
    fn chord_matches_bisection_and_circle() {
        let n = 256;
        let disk = make_body(&Shape::Disk { radius: 1.0 }, &grid(n)).unwrap();
        // deterministic pseudo-random pairs (y on the circle, u)
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..64 {
            let a = 2.0 * PI * next();
            let b = 2.0 * PI * next();
            let y = [a.cos(), a.sin()];
            let u = [b.cos(), b.sin()];
            let s = chord_from_point(&disk, y, u).unwrap();
            assert!((s - chord_by_bisection(&disk, y, u)).abs() <= 1e-10 * 2.0);
            let circle = 2.0 * (u[0] * y[0] + u[1] * y[1]).max(0.0);
            // circumscribed polygon: half an edge beyond the circle at most
            assert!((s - circle).abs() <= (PI / n as f64).tan() + 1e-12, "{s} vs {circle}");
        }
    }

    #[test]
    fn evenize_examples() {
        let g = grid(64);
        let odd = SupportFunction::new(g.clone(), g.sample(|t| 1.0 + 0.1 * t.cos())).unwrap();
        for v in evenize(&odd).values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let even = make_body(&Shape::Fourier { coeffs: vec![0.1] }, &g).unwrap();
        assert_eq!(evenize(&even), even);
        assert!(even.is_even());
    }

    #[test]
    fn make_body_examples() {
        let g = grid(256);
        let e = make_body(&Shape::Ellipse { a: 2.0, b: 1.0 }, &g).unwrap();
        assert_eq!(e.values()[0], 2.0);
        assert!((e.values()[64] - 1.0).abs() < 1e-15);
        let f = make_body(&Shape::Fourier { coeffs: vec![0.1] }, &g).unwrap();
        let b = f.check_convex().unwrap();
        for (i, r) in b.iter().enumerate() {
            assert!((r - (1.0 - 0.3 * (2.0 * g.theta(i)).cos())).abs() < 1e-6);
        }
        assert!(make_body(&Shape::Fourier { coeffs: vec![0.4] }, &g).is_err());
        assert!(make_body(&Shape::Disk { radius: -1.0 }, &g).is_err());
    }
}
