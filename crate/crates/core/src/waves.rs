//! Spherical waves, their gradients and wavenumber derivatives, and the
//! free-space Green's function `G = e^{-jkD}/(4πD)` with its derivatives.
//!
//! `I_p = k j^{l+1} h_l^{(1)}(kr) X_p`, `O_p = k j^{l+1} h_l^{(2)}(kr) X_p`,
//! `W_p = I_p + O_p = 2k j^{l+1} j_l(kr) X_p`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{sph_h_with_deriv, sph_j_with_deriv, HarmonicTable, ModeIndex, HANKEL_MIN_ARG};

pub type Point = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub k: f64,
    pub v: f64,
}

impl Medium {
    pub fn new(k: f64, v: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) || !(v > 0.0 && v.is_finite()) {
            return domain(format!("medium needs k > 0 and v > 0 (k = {k}, v = {v})"));
        }
        Ok(Medium { k, v })
    }

    pub fn omega(&self) -> f64 {
        self.v * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Incoming,
    Outgoing,
    Standing,
}

/// Potential, gradient and wavenumber derivative at one point for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Complex64,
    pub gradient: Option<CVec3>,
    pub kderiv: Option<Complex64>,
}

/// `j^n` for integer `n`.
#[inline]
pub fn j_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => J,
        2 => Complex64::new(-1.0, 0.0),
        _ => -J,
    }
}

#[inline]
pub fn cvec(v: &Point) -> CVec3 {
    v.map(|x| Complex64::new(x, 0.0))
}

struct Spherical {
    r: f64,
    theta: f64,
    phi: f64,
    rhat: Point,
    that: Point,
    phat: Point,
}

fn spherical(r: &Point) -> Spherical {
    let rn = r.norm();
    let theta = if rn > 0.0 { (r.z / rn).clamp(-1.0, 1.0).acos() } else { 0.0 };
    let phi = r.y.atan2(r.x);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Spherical {
        r: rn,
        theta,
        phi,
        rhat: Point::new(st * cp, st * sp, ct),
        that: Point::new(ct * cp, ct * sp, -st),
        phat: Point::new(-sp, cp, 0.0),
    }
}

/// All standing waves `W_p` (and `k`-derivatives) for `l ≤ lmax` at a point,
/// indexed by the linear mode index.
#[derive(Debug, Clone)]
pub struct StandingTable {
    pub value: Vec<Complex64>,
    pub gradient: Vec<CVec3>,
    pub kderiv: Vec<Complex64>,
    pub kderiv_gradient: Vec<CVec3>,
}

impl StandingTable {
    pub fn new(lmax: usize, k: f64, r: &Point) -> Self {
        let sp = spherical(r);
        let x = k * sp.r;
        let (jl, jd) = sph_j_with_deriv(lmax, x);
        let harm = HarmonicTable::new(lmax, sp.theta, sp.phi);
        let count = (lmax + 1) * (lmax + 1);
        let mut out = StandingTable {
            value: Vec::with_capacity(count),
            gradient: Vec::with_capacity(count),
            kderiv: Vec::with_capacity(count),
            kderiv_gradient: Vec::with_capacity(count),
        };
        for l in 0..=lmax {
            let lf = l as f64;
            // j_l(kr)/r and j_l'' with their origin limits
            let (j_over_r, jdd) = if x == 0.0 {
                let jor = if l == 1 { k / 3.0 } else { 0.0 };
                let jdd = match l {
                    0 => -1.0 / 3.0,
                    2 => 2.0 / 15.0,
                    _ => 0.0,
                };
                (jor, jdd)
            } else {
                (
                    jl[l] / sp.r,
                    -2.0 / x * jd[l] - (1.0 - lf * (lf + 1.0) / (x * x)) * jl[l],
                )
            };
            // (j_l + kr j_l')/r = k (j_l/x + j_l')
            let jk_over_r = if x == 0.0 {
                if l == 1 {
                    2.0 * k / 3.0
                } else {
                    0.0
                }
            } else {
                j_over_r + k * jd[l]
            };
            let c = 2.0 * j_pow(l + 1);
            for m in -(l as i64)..=(l as i64) {
                let i = crate::specfun::harmonic_index(l, m);
                let xv = harm.value[i];
                let angc = cvec(&sp.that) * harm.d_theta[i] + cvec(&sp.phat) * harm.d_phi_over_sin[i];
                let radial = cvec(&sp.rhat);
                out.value.push(c * k * jl[l] * xv);
                out.gradient
                    .push((radial * (xv * k * k * jd[l]) + angc * Complex64::new(k * j_over_r, 0.0)) * c);
                out.kderiv.push(c * (jl[l] + x * jd[l]) * xv);
                out.kderiv_gradient.push(
                    (radial * (xv * (2.0 * k * jd[l] + k * x * jdd)) + angc * Complex64::new(jk_over_r, 0.0)) * c,
                );
            }
        }
        out
    }
}

fn hankel_sample(kind: WaveKind, p: ModeIndex, k: f64, r: &Point) -> Result<FieldSample> {
    let sp = spherical(r);
    let x = k * sp.r;
    if x < HANKEL_MIN_ARG {
        return Err(Error::SingularPoint(format!(
            "{kind:?} wave is singular at the origin"
        )));
    }
    let (h, hd) = sph_h_with_deriv(p.l, x, kind == WaveKind::Outgoing);
    let harm = HarmonicTable::new(p.l, sp.theta, sp.phi);
    let i = crate::specfun::harmonic_index(p.l, p.m);
    let xv = harm.value[i];
    let c = k * j_pow(p.l + 1);
    let (hl, hdl) = (h[p.l], hd[p.l]);
    let ang = cvec(&sp.that) * harm.d_theta[i] + cvec(&sp.phat) * harm.d_phi_over_sin[i];
    let grad = (cvec(&sp.rhat) * (k * hdl * xv) + ang * (hl / sp.r)) * c;
    // d/dk [k h(kr)] = h + kr h'
    let kd = j_pow(p.l + 1) * (hl + x * hdl) * xv;
    Ok(FieldSample {
        value: c * hl * xv,
        gradient: Some(grad),
        kderiv: Some(kd),
    })
}

fn check_mode(p: ModeIndex) -> Result<()> {
    if p.m.unsigned_abs() as usize > p.l {
        return domain(format!("|m| = {} exceeds l = {}", p.m.abs(), p.l));
    }
    Ok(())
}

/// Potential, gradient and `k`-derivative of one spherical wave.
pub fn eval_wave_sample(kind: WaveKind, p: ModeIndex, k: f64, r: &Point) -> Result<FieldSample> {
    check_mode(p)?;
    match kind {
        WaveKind::Standing => {
            let t = StandingTable::new(p.l, k, r);
            Ok(FieldSample {
                value: t.value[p.p],
                gradient: Some(t.gradient[p.p]),
                kderiv: Some(t.kderiv[p.p]),
            })
        }
        _ => hankel_sample(kind, p, k, r),
    }
}

pub fn eval_wave(kind: WaveKind, p: ModeIndex, k: f64, r: &Point) -> Result<Complex64> {
    Ok(eval_wave_sample(kind, p, k, r)?.value)
}

/// `∂W_p/∂k` at fixed position.
pub fn eval_standing_kderiv(p: ModeIndex, k: f64, r: &Point) -> Result<Complex64> {
    check_mode(p)?;
    Ok(StandingTable::new(p.l, k, r).kderiv[p.p])
}

/// `n̂·∇` of a wave, or of its `k`-derivative when `kderiv` is set.
pub fn eval_wave_normal_deriv(
    kind: WaveKind,
    p: ModeIndex,
    k: f64,
    r: &Point,
    n: &Point,
    kderiv: bool,
) -> Result<Complex64> {
    check_mode(p)?;
    if ((n.norm() - 1.0).abs()) > 1e-9 {
        return domain("normal must be a unit vector");
    }
    let nc = n.map(|v| Complex64::new(v, 0.0));
    match (kind, kderiv) {
        (WaveKind::Standing, false) => Ok(StandingTable::new(p.l, k, r).gradient[p.p].dot(&nc)),
        (WaveKind::Standing, true) => {
            Ok(StandingTable::new(p.l, k, r).kderiv_gradient[p.p].dot(&nc))
        }
        (_, false) => Ok(hankel_sample(kind, p, k, r)?.gradient.unwrap().dot(&nc)),
        (_, true) => {
            // d/dk of the gradient by analytic differentiation of the radial part
            let sp = spherical(r);
            let x = k * sp.r;
            if x < HANKEL_MIN_ARG {
                return Err(Error::SingularPoint("wave is singular at the origin".into()));
            }
            let (h, hd) = sph_h_with_deriv(p.l, x, kind == WaveKind::Outgoing);
            let lf = p.l as f64;
            let (hl, hdl) = (h[p.l], hd[p.l]);
            let hdd = -2.0 / x * hdl - (1.0 - lf * (lf + 1.0) / (x * x)) * hl;
            let harm = HarmonicTable::new(p.l, sp.theta, sp.phi);
            let i = crate::specfun::harmonic_index(p.l, p.m);
            let c = j_pow(p.l + 1);
            let radial = (2.0 * k * hdl + k * x * hdd) * harm.value[i] * sp.rhat.dot(n);
            let ang = (hl / sp.r + k * hdl)
                * (harm.d_theta[i] * sp.that.dot(n) + harm.d_phi_over_sin[i] * sp.phat.dot(n));
            Ok(c * (radial + ang))
        }
    }
}

/// Large-`kr` form: `I_p ≈ e^{jkr}/r X_p`, `O_p ≈ (-1)^{l+1} e^{-jkr}/r X_p`.
pub fn eval_wave_far(kind: WaveKind, p: ModeIndex, k: f64, r: &Point) -> Result<Complex64> {
    check_mode(p)?;
    let sp = spherical(r);
    let xv = HarmonicTable::new(p.l, sp.theta, sp.phi).value
        [crate::specfun::harmonic_index(p.l, p.m)];
    let sign = if p.l.is_multiple_of(2) { -1.0 } else { 1.0 };
    match kind {
        WaveKind::Incoming => Ok(Complex64::from_polar(1.0 / sp.r, k * sp.r) * xv),
        WaveKind::Outgoing => Ok(Complex64::from_polar(sign / sp.r, -k * sp.r) * xv),
        WaveKind::Standing => domain("standing waves have no single far-field form"),
    }
}

/// Which derivative of the Green's function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenVariant {
    Value,
    /// `∂G/∂k = (-j/4π) e^{-jkD}`, density held fixed.
    KDeriv,
    /// `∂G/∂n` at the observation point.
    NormalObs(Point),
    /// `∂G/∂n'` at the source point.
    NormalSource(Point),
    /// `∂²G/∂n∂n'` (observation normal, source normal).
    NormalBoth(Point, Point),
    /// `∂/∂k` of `∂²G/∂n∂n'`.
    KDerivNormalBoth(Point, Point),
}

/// Radial factors of `G(D)`: `(g, g', g'')` in `D`.
#[inline]
pub fn green_radial(k: f64, d: f64) -> (Complex64, Complex64, Complex64) {
    let e = Complex64::from_polar(1.0 / (4.0 * PI * d), -k * d);
    let g1 = -e * Complex64::new(1.0, k * d) / d;
    let g2 = e * Complex64::new(2.0 - k * k * d * d, 2.0 * k * d) / (d * d);
    (e, g1, g2)
}

/// Wavenumber derivatives of the radial factors: `(∂g/∂k, ∂g'/∂k, ∂g''/∂k)`.
#[inline]
pub fn green_radial_kderiv(k: f64, d: f64) -> (Complex64, Complex64, Complex64) {
    let e = Complex64::from_polar(1.0 / (4.0 * PI), -k * d);
    (-J * e, -k * e, J * k * k * e)
}

/// `-(g'' a b + g' (n·n' - a b)/D)` with `a = R̂·n`, `b = R̂·n'`.
#[inline]
pub fn double_normal(g1: Complex64, g2: Complex64, d: f64, a: f64, b: f64, nn: f64) -> Complex64 {
    -(g2 * (a * b) + g1 * ((nn - a * b) / d))
}

pub fn green(r: &Point, rs: &Point, k: f64, variant: GreenVariant) -> Result<Complex64> {
    let diff = r - rs;
    let d = diff.norm();
    if d == 0.0 {
        return Err(Error::SingularPoint(
            "Green's function evaluated at coincident points".into(),
        ));
    }
    let rh = diff / d;
    Ok(match variant {
        GreenVariant::Value => green_radial(k, d).0,
        GreenVariant::KDeriv => green_radial_kderiv(k, d).0,
        GreenVariant::NormalObs(n) => green_radial(k, d).1 * rh.dot(&n),
        GreenVariant::NormalSource(n) => -green_radial(k, d).1 * rh.dot(&n),
        GreenVariant::NormalBoth(n, ns) => {
            let (_, g1, g2) = green_radial(k, d);
            double_normal(g1, g2, d, rh.dot(&n), rh.dot(&ns), n.dot(&ns))
        }
        GreenVariant::KDerivNormalBoth(n, ns) => {
            let (_, g1, g2) = green_radial_kderiv(k, d);
            double_normal(g1, g2, d, rh.dot(&n), rh.dot(&ns), n.dot(&ns))
        }
    })
}

/// Truncated expansion `-(j/2k) Σ_p W_p(r') I_p*(r)` of `G(r, r')`.
pub fn green_expansion_check(r: &Point, rs: &Point, k: f64, lmax: usize) -> Result<Complex64> {
    if r.norm() <= rs.norm() {
        return domain("expansion requires |r| > |r'|");
    }
    let w = StandingTable::new(lmax, k, rs);
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..(lmax + 1) * (lmax + 1) {
        let mode = ModeIndex::from_linear(p);
        sum += w.value[p] * hankel_sample(WaveKind::Incoming, mode, k, r)?.value.conj();
    }
    Ok(-J / (2.0 * k) * sum)
}

/// `G_∞(r, r') = e^{-jkr}/(4πr) e^{jk r̂·r'}`.
pub fn green_far(r: &Point, rs: &Point, k: f64) -> Complex64 {
    let rn = r.norm();
    Complex64::from_polar(1.0 / (4.0 * PI * rn), -k * rn + k * (r / rn).dot(rs))
}
