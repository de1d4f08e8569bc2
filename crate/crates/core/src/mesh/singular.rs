//! Singular and near-singular panel integrals.
//!
//! The Helmholtz kernel is split into the static part `1/(4πD)`, integrated
//! analytically over the inner (source) triangle, and the bounded remainder
//! `(e^{-jkD} - 1)/(4πD)`, integrated with regular product rules. The
//! hypersingular kernel is reduced through Maue's identity to weakly
//! singular surface terms plus edge-edge line integrals; divergent
//! self-edge line integrals are replaced by their Hadamard finite parts.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::quadrature::{gauss_legendre, QuadratureRule};
use super::{Adjacency, Panel, Point};
use crate::error::{Error, Result};

const FOUR_PI: f64 = 4.0 * PI;

/// `ln((R⁺ + l⁺)/(R⁻ + l⁻))`, switching to the conjugate form when the
/// point sits on the backward extension of the segment.
fn line_log(rp: f64, lp: f64, rm: f64, lm: f64) -> f64 {
    let (num, den) = (rp + lp, rm + lm);
    let (alt_num, alt_den) = (rm - lm, rp - lp);
    if den.abs() >= alt_num.abs() * 1e-8 && den > 0.0 && num > 0.0 {
        (num / den).ln()
    } else {
        (alt_num / alt_den).ln()
    }
}

/// `Φ(p) = ∫_T dS'/|p - r'|` and its gradient with respect to `p`.
///
/// On the triangle's own plane the normal component of the gradient is the
/// principal value (zero).
pub fn triangle_potential(panel: &Panel, p: &Point) -> (f64, Point) {
    let n = panel.normal;
    let w = (p - panel.vertices[0]).dot(&n);
    let aw = w.abs();
    let scale = panel.diameter;
    let mut value = 0.0;
    let mut grad = Point::zeros();
    let mut solid = 0.0;
    for i in 0..3 {
        let rm = panel.vertices[i];
        let rp = panel.vertices[(i + 1) % 3];
        let len = (rp - rm).norm();
        let s = (rp - rm) / len;
        let m = s.cross(&n);
        let dm = rm - p;
        let dp = rp - p;
        let t0 = dm.dot(&m);
        let lm = dm.dot(&s);
        let lp = dp.dot(&s);
        let rmn = dm.norm();
        let rpn = dp.norm();
        let r0sq = t0 * t0 + w * w;
        if r0sq.sqrt() <= 1e-14 * scale {
            // on the edge line: the in-plane log term carries a zero factor
            continue;
        }
        let f = line_log(rpn, lp, rmn, lm);
        let beta = (t0 * lp).atan2(r0sq + aw * rpn) - (t0 * lm).atan2(r0sq + aw * rmn);
        value += t0 * f - aw * beta;
        grad -= m * f;
        solid += beta;
    }
    let sign = if w > 1e-14 * scale {
        1.0
    } else if w < -1e-14 * scale {
        -1.0
    } else {
        0.0
    };
    grad -= n * (sign * solid);
    (value, grad)
}

/// `∫_T ∫_T dS dS'/|r - r'|` in closed form.
pub fn coincident_static(panel: &Panel) -> f64 {
    let v = &panel.vertices;
    let side = [(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()];
    let a2 = panel.area * panel.area;
    let mut sum = 0.0;
    for i in 0..3 {
        let (a, b, c) = (side[i], side[(i + 1) % 3], side[(i + 2) % 3]);
        sum += ((( a + b) * (a + b) - c * c) / (b * b - (a - c) * (a - c))).ln() / a;
    }
    4.0 * a2 / 3.0 * sum
}

/// `∫_a^b dl/|p - x|`; when `p` lies inside the segment the Hadamard finite
/// part `ln d⁻ + ln d⁺` is returned.
pub fn segment_potential(a: &Point, b: &Point, p: &Point) -> f64 {
    let len = (b - a).norm();
    let s = (b - a) / len;
    let (da, db) = (a - p, b - p);
    let (la, lb) = (da.dot(&s), db.dot(&s));
    let (ra, rb) = (da.norm(), db.norm());
    let d = (da - s * la).norm();
    if d <= 1e-14 * len && la < 0.0 && lb > 0.0 {
        return (-la).ln() + lb.ln();
    }
    line_log(rb, lb, ra, la)
}

/// Composite Gauss rule on `[0, 1]` geometrically graded toward 0.
fn graded_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(12);
        let ratio: f64 = 0.2;
        let levels = 12;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut hi = 1.0;
        for lev in 0..=levels {
            let lo = if lev == levels { 0.0 } else { hi * ratio };
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + (hi - lo) * xi);
                weights.push((hi - lo) * wi);
            }
            hi = lo;
        }
        (nodes, weights)
    })
}

fn segment_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12))
}

/// `∫_{a0}^{a1} ∫_{b0}^{b1} dl dl'/|x - y|` (finite part for identical
/// segments).
pub fn segment_pair_static(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> f64 {
    let la = (a1 - a0).norm();
    let same = (a0 == b0 && a1 == b1) || (a0 == b1 && a1 == b0);
    if same {
        return 2.0 * la * (la.ln() - 1.0);
    }
    // start the outer parametrisation at a shared endpoint, if any
    let (start, end, shared) = if a0 == b0 || a0 == b1 {
        (a0, a1, true)
    } else if a1 == b0 || a1 == b1 {
        (a1, a0, true)
    } else {
        (a0, a1, false)
    };
    let (x, w) = if shared { graded_rule() } else { segment_rule() };
    x.iter()
        .zip(w)
        .map(|(t, wt)| wt * la * segment_potential(b0, b1, &(start + (end - start) * *t)))
        .sum()
}

/// `(e^{-jkD} - 1)/D` and its derivative in `D`, stable as `kD → 0`.
#[inline]
pub fn remainder_radial(k: f64, d: f64) -> (Complex64, Complex64) {
    let x = k * d;
    if x < 1e-3 {
        let f = Complex64::new(-k * x / 2.0 + k * x * x * x / 24.0, -k + k * x * x / 6.0);
        let fp = Complex64::new(
            -k * k / 2.0 + k * k * x * x / 8.0,
            k * k * x / 3.0 - k * k * x * x * x / 30.0,
        );
        (f, fp)
    } else {
        let e = Complex64::from_polar(1.0, -x);
        let f = (e - 1.0) / d;
        let fp = (Complex64::new(0.0, -x) * e - (e - 1.0)) / (d * d);
        (f, fp)
    }
}

/// Static parts of a near panel pair with the outer integral on `outer`:
/// `(∫∫ 1/D, ∫∫ n_outer·∇_r(1/D))`. Touching pairs subdivide the outer
/// panel twice.
pub fn near_static(outer: &Panel, inner: &Panel, adj: Adjacency) -> (f64, f64) {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    let rule = RULE.get_or_init(|| QuadratureRule::triangle(10));
    let depth = match adj {
        Adjacency::Edge | Adjacency::Vertex => 2,
        _ => 0,
    };
    let mut pot = 0.0;
    let mut normal = 0.0;
    for child in subdivide(outer, depth) {
        for (b, w) in &rule.points {
            let p = child.point(b);
            let (phi, grad) = triangle_potential(inner, &p);
            pot += w * child.area * phi;
            normal += w * child.area * grad.dot(&outer.normal);
        }
    }
    (pot, normal)
}

fn subdivide(panel: &Panel, depth: usize) -> Vec<Panel> {
    let mut out = vec![panel.clone()];
    for _ in 0..depth {
        out = out
            .iter()
            .flat_map(|p| {
                let [a, b, c] = p.vertices;
                let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
                [
                    Panel::new([a, ab, ca]),
                    Panel::new([ab, b, bc]),
                    Panel::new([ca, bc, c]),
                    Panel::new([ab, bc, ca]),
                ]
            })
            .collect();
    }
    out
}

/// `Σ_edges (t·t') ∫∫ G dl dl'` over the ccw boundaries of two panels,
/// with its wavenumber derivative.
pub fn maue_edge_term(pm: &Panel, pn: &Panel, k: f64) -> (Complex64, Complex64) {
    let (x, w) = segment_rule();
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        let (a0, a1) = (pm.vertices[i], pm.vertices[(i + 1) % 3]);
        let ta = a1 - a0;
        for j in 0..3 {
            let (b0, b1) = (pn.vertices[j], pn.vertices[(j + 1) % 3]);
            let tb = b1 - b0;
            // unit tangents' dot product times both lengths is ta·tb, so the
            // line integrals below are taken in the unit parameter
            let dot = ta.dot(&tb);
            if dot == 0.0 {
                continue;
            }
            let (la, lb) = (ta.norm(), tb.norm());
            let stat = segment_pair_static(&a0, &a1, &b0, &b1) / (la * lb);
            let mut rem = Complex64::new(0.0, 0.0);
            let mut remk = Complex64::new(0.0, 0.0);
            for (xi, wi) in x.iter().zip(w) {
                let p = a0 + ta * *xi;
                for (xj, wj) in x.iter().zip(w) {
                    let d = (p - (b0 + tb * *xj)).norm();
                    let ww = wi * wj;
                    rem += remainder_radial(k, d).0 * ww;
                    remk += Complex64::from_polar(1.0, -k * d) * ww;
                }
            }
            val += dot * (rem + stat) / FOUR_PI;
            der += dot * Complex64::new(0.0, -1.0) * remk / FOUR_PI;
        }
    }
    (val, der)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelClass {
    /// `G = e^{-jkD}/(4πD)`.
    Weak,
    /// `∂²G/∂n∂n'`.
    Hypersingular,
}

fn classify(m: &Panel, n: &Panel) -> Adjacency {
    let shared = m
        .vertices
        .iter()
        .filter(|v| n.vertices.contains(v))
        .count();
    match shared {
        3 => Adjacency::Coincident,
        2 => Adjacency::Edge,
        1 => Adjacency::Vertex,
        _ => Adjacency::Disjoint,
    }
}

/// `∫_m ∫_n K dS' dS` for touching panels, with the static/remainder split.
pub fn panel_pair_integral_singular(
    m: &Panel,
    n: &Panel,
    class: KernelClass,
    k: f64,
) -> Result<Complex64> {
    let adj = classify(m, n);
    if adj == Adjacency::Disjoint {
        return Err(Error::Quadrature {
            m: 0,
            n: 1,
            msg: "panels do not touch; use the regular rule".into(),
        });
    }
    let outer = QuadratureRule::triangle(3);
    let inner = QuadratureRule::triangle(6);
    let l = weak_pair(m, n, adj, k, &outer, &inner);
    Ok(match class {
        KernelClass::Weak => l,
        KernelClass::Hypersingular => {
            k * k * m.normal.dot(&n.normal) * l - maue_edge_term(m, n, k).0
        }
    })
}

/// `∫∫ G` for a near or touching pair.
pub fn weak_pair(
    m: &Panel,
    n: &Panel,
    adj: Adjacency,
    k: f64,
    outer: &QuadratureRule,
    inner: &QuadratureRule,
) -> Complex64 {
    let stat = if adj == Adjacency::Coincident {
        coincident_static(m)
    } else {
        near_static(m, n, adj).0
    };
    let mut rem = Complex64::new(0.0, 0.0);
    for (p, wp) in outer.mapped(m) {
        for (q, wq) in inner.mapped(n) {
            rem += remainder_radial(k, (p - q).norm()).0 * (wp * wq);
        }
    }
    (rem + stat) / FOUR_PI
}
