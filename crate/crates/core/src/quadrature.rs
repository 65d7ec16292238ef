//! Composite quadrature rules on uniform nodes.

use std::f64::consts::PI;

/// Trapezoid rule for a periodic integrand sampled at `N` uniform nodes on
/// `[0, 2π)`. For smooth periodic data this is spectrally accurate.
pub fn periodic_trapezoid(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let step = 2.0 * PI / samples.len() as f64;
    samples.iter().sum::<f64>() * step
}

/// Composite Simpson weights for `intervals` (even) subintervals of unit
/// length. Multiply by the actual step to integrate.
pub fn simpson_weights(intervals: usize) -> Vec<f64> {
    assert!(intervals >= 2 && intervals.is_multiple_of(2), "Simpson needs an even interval count");
    let mut w = vec![0.0; intervals + 1];
    for (m, wm) in w.iter_mut().enumerate() {
        *wm = if m == 0 || m == intervals {
            1.0 / 3.0
        } else if m % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        };
    }
    w
}

/// Composite Simpson on `[a, b]` with `intervals` (even) subintervals.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let step = (b - a) / intervals as f64;
    simpson_weights(intervals).iter().enumerate().map(|(m, w)| w * f(a + m as f64 * step)).sum::<f64>() * step
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 1 { x } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = order as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_on_low_harmonics() {
        let n = 32;
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                3.0 + (2.0 * t).cos() + (5.0 * t).sin()
            })
            .collect();
        assert!((periodic_trapezoid(&s) - 6.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_converges_fourth_order() {
        let exact = 1.0 - (-1.0f64).exp();
        let e1 = (simpson(|x| (-x).exp(), 0.0, 1.0, 8) - exact).abs();
        let e2 = (simpson(|x| (-x).exp(), 0.0, 1.0, 16) - exact).abs();
        assert!(e1 / e2 > 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for order in 1..=8 {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * order - 1;
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    #[should_panic]
    fn simpson_rejects_odd_intervals() {
        simpson_weights(3);
    }
}
