//! Gauss–Legendre and collapsed-Gauss triangle rules.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use super::Panel;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Triangle rule in barycentric coordinates, weights summing to one.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureRule {
    pub points: Vec<([f64; 3], f64)>,
    /// Polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    /// Collapsed (Duffy) product Gauss rule exact to at least `order`.
    pub fn triangle(order: usize) -> Self {
        let n = (order + 3) / 2;
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = x[i];
            for j in 0..n {
                let v = x[j] * (1.0 - u);
                points.push(([1.0 - u - v, u, v], 2.0 * w[i] * w[j] * (1.0 - u)));
            }
        }
        QuadratureRule {
            points,
            order: 2 * n - 2,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and area-scaled weights on a panel.
    pub fn mapped(&self, panel: &Panel) -> Vec<(Vector3<f64>, f64)> {
        self.points
            .iter()
            .map(|(b, w)| (panel.point(b), w * panel.area))
            .collect()
    }
}

/// `∫_panel kernel(r) dS` with the given rule.
pub fn panel_integral_regular<F>(panel: &Panel, kernel: F, rule: &QuadratureRule) -> Complex64
where
    F: Fn(&Vector3<f64>) -> Complex64,
{
    rule.points
        .iter()
        .map(|(b, w)| kernel(&panel.point(b)) * *w)
        .sum::<Complex64>()
        * panel.area
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_right() -> Panel {
        Panel::new([
            Vector3::zeros(),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ])
    }

    #[test]
    fn legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for d in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((s - 1.0 / (d + 1) as f64).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rule_is_exact_to_its_order() {
        // ∫_T x^a y^b = a! b! / (a+b+2)! on the unit right triangle
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        for order in 0..10 {
            let rule = QuadratureRule::triangle(order);
            assert!(rule.order >= order);
            assert!(rule.points.iter().all(|(_, w)| *w > 0.0));
            let total: f64 = rule.points.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14);
            for a in 0..=rule.order {
                for b in 0..=(rule.order - a) {
                    let s: f64 = rule
                        .points
                        .iter()
                        .map(|(bc, w)| 0.5 * w * bc[1].powi(a as i32) * bc[2].powi(b as i32))
                        .sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((s - exact).abs() < 1e-14, "order {order} x^{a} y^{b}");
                }
            }
        }
    }

    #[test]
    fn constant_and_linear_kernels() {
        let p = Panel::new([
            Vector3::new(0.2, -0.1, 0.3),
            Vector3::new(1.4, 0.5, 0.0),
            Vector3::new(-0.3, 0.9, 0.7),
        ]);
        for order in [1, 3, 6] {
            let rule = QuadratureRule::triangle(order);
            let one = panel_integral_regular(&p, |_| Complex64::new(1.0, 0.0), &rule);
            assert!((one.re - p.area).abs() < 1e-14);
            let lin = panel_integral_regular(&p, |r| Complex64::new(r.x, 0.0), &rule);
            assert!((lin.re - p.centroid.x * p.area).abs() < 1e-14);
        }
    }

    #[test]
    fn far_green_kernel_self_converges() {
        let p = unit_right();
        // k·h below 0.5
        let src = Vector3::new(4.0, 3.0, 2.0);
        let k = 0.3;
        let g = |r: &Vector3<f64>| {
            let d = (r - src).norm();
            Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * d), -k * d)
        };
        let a = panel_integral_regular(&p, g, &QuadratureRule::triangle(6));
        let b = panel_integral_regular(&p, g, &QuadratureRule::triangle(12));
        assert!((a - b).norm() / b.norm() < 1e-8);
    }
}
