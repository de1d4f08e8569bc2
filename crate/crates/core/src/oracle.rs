//! Analytic ground truth for spheres: Mie coefficients, the resulting `S`,
//! `S'` and `Q`, and a brute-force volume-integral evaluation of `Q`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mesh::gauss_legendre;
use crate::operators::BoundaryCondition;
use crate::specfun::{sph_h_with_deriv, sph_j_with_deriv, HarmonicTable, ModeIndex, ModeSet};
use crate::waves::j_pow;
use crate::CMatrix;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MieSphere {
    pub a: f64,
    pub bc: BoundaryCondition,
    pub k: f64,
    pub l_max: usize,
}

impl MieSphere {
    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.k > 0.0) {
            return domain(format!("sphere needs a > 0 and k > 0 (a = {}, k = {})", self.a, self.k));
        }
        Ok(())
    }
}

/// Modal reflection coefficient `s_l` and its wavenumber derivative.
pub fn mie_coefficient(sphere: &MieSphere, l: usize) -> Result<(Complex64, Complex64)> {
    sphere.validate()?;
    let x = sphere.k * sphere.a;
    let (h1, d1) = sph_h_with_deriv(l, x, false);
    let (h2, d2) = sph_h_with_deriv(l, x, true);
    let lf = l as f64;
    let second = |h: Complex64, d: Complex64| -2.0 / x * d - (1.0 - lf * (lf + 1.0) / (x * x)) * h;
    let a = sphere.a;
    Ok(match sphere.bc {
        BoundaryCondition::SoundSoft => {
            let (u, v, du, dv) = (h1[l], h2[l], d1[l], d2[l]);
            assert!(v.norm() > 0.0, "h2 cannot vanish on the real axis");
            (-u / v, -a * (du * v - u * dv) / (v * v))
        }
        BoundaryCondition::SoundHard => {
            let (u, v) = (d1[l], d2[l]);
            let (du, dv) = (second(h1[l], d1[l]), second(h2[l], d2[l]));
            assert!(v.norm() > 0.0, "h2' cannot vanish on the real axis");
            (-u / v, -a * (du * v - u * dv) / (v * v))
        }
    })
}

#[derive(Debug, Clone)]
pub struct MieResult {
    /// `s_l` for `l = 0..=l_max`.
    pub s_l: Vec<Complex64>,
    pub ds_l: Vec<Complex64>,
    pub s: CMatrix,
    pub s_prime: CMatrix,
    pub q: CMatrix,
}

/// Analytic `S`, `S'` and `Q = j S† S'` in the `Ī` pattern.
pub fn mie_scattering(sphere: &MieSphere) -> Result<MieResult> {
    let modes = ModeSet::with_lmax(sphere.l_max);
    let mut s_l = Vec::with_capacity(sphere.l_max + 1);
    let mut ds_l = Vec::with_capacity(sphere.l_max + 1);
    for l in 0..=sphere.l_max {
        let (s, ds) = mie_coefficient(sphere, l)?;
        s_l.push(s);
        ds_l.push(ds);
    }
    let m = modes.len();
    let mut s = CMatrix::zeros(m, m);
    let mut sp = CMatrix::zeros(m, m);
    for p in modes.iter() {
        let t = p.hat();
        s[(t.p, p.p)] = s_l[p.l] * p.ibar_sign();
        sp[(t.p, p.p)] = ds_l[p.l] * p.ibar_sign();
    }
    let q = s.adjoint() * &sp * J;
    Ok(MieResult {
        s_l,
        ds_l,
        s,
        s_prime: sp,
        q,
    })
}

/// `l,s_re,s_im,ds_re,ds_im,delay` rows for regression baselines.
pub fn mie_table_csv(result: &MieResult) -> String {
    let mut out = String::from("l,s_re,s_im,ds_re,ds_im,delay\n");
    for (l, (s, ds)) in result.s_l.iter().zip(&result.ds_l).enumerate() {
        let delay = (J * s.conj() * ds).re;
        out.push_str(&format!("{l},{:e},{:e},{:e},{:e},{:e}\n", s.re, s.im, ds.re, ds.im, delay));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeOracleConfig {
    /// Radius of the integration ball.
    pub radius: f64,
    /// Gauss points per radial panel of length `π/(4k)`.
    pub points_per_panel: usize,
    /// Escalate validity warnings to errors.
    pub strict: bool,
}

impl Default for VolumeOracleConfig {
    fn default() -> Self {
        VolumeOracleConfig {
            radius: 80.0,
            points_per_panel: 10,
            strict: false,
        }
    }
}

fn check_validity(cfg: &VolumeOracleConfig, k: f64, a: f64) -> Result<()> {
    let mut issues = Vec::new();
    if k * cfg.radius < 20.0 {
        issues.push(format!("kR = {:.2} below 20", k * cfg.radius));
    }
    if cfg.radius < 10.0 * a {
        issues.push(format!("R = {} is not much larger than a = {a}", cfg.radius));
    }
    if cfg.radius <= a || cfg.points_per_panel == 0 {
        return domain("integration radius must exceed the sphere radius");
    }
    if issues.is_empty() {
        return Ok(());
    }
    let msg = issues.join("; ");
    if cfg.strict {
        Err(Error::Validation(msg))
    } else {
        log::warn!("volume oracle outside its validity range: {msg}");
        Ok(())
    }
}

/// Angular Gram entries `(∫ X_p X_q* dΩ, ∫ ∇_S X_p · ∇_S X_q* dΩ)` by a
/// product rule exact for the band limit.
fn angular_gram(p: ModeIndex, q: ModeIndex) -> (Complex64, Complex64) {
    let lmax = p.l.max(q.l);
    let (xs, ws) = gauss_legendre(lmax + 2);
    let nphi = 2 * lmax + 3;
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for (x, w) in xs.iter().zip(&ws) {
        let theta = (2.0 * x - 1.0).acos();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let t = HarmonicTable::new(lmax, theta, phi);
            let wt = 2.0 * w * 2.0 * PI / nphi as f64;
            a += t.value[p.p] * t.value[q.p].conj() * wt;
            b += (t.d_theta[p.p] * t.d_theta[q.p].conj()
                + t.d_phi_over_sin[p.p] * t.d_phi_over_sin[q.p].conj())
                * wt;
        }
    }
    (a, b)
}

/// Radial profile `f(r)` and `f'(r)` of the total field for one mode.
fn radial_profile(k: f64, l: usize, s: Option<Complex64>, r: f64) -> (Complex64, Complex64) {
    let x = k * r;
    let c = k * j_pow(l + 1);
    match s {
        None => {
            let (jl, jd) = sph_j_with_deriv(l, x);
            (2.0 * c * jl[l], 2.0 * c * k * jd[l])
        }
        Some(s) => {
            let (h1, d1) = sph_h_with_deriv(l, x, false);
            let (h2, d2) = sph_h_with_deriv(l, x, true);
            (c * (h1[l] + s * h2[l]), c * k * (d1[l] + s * d2[l]))
        }
    }
}

/// Weight of `e^{-jkr}/r` relative to `e^{jkr}/r` in the far field:
/// `(-1)^{l+1} s`, with `s = 1` for a standing wave.
fn outgoing_weight(l: usize, s: Option<Complex64>) -> Complex64 {
    let sign = if l.is_multiple_of(2) { -1.0 } else { 1.0 };
    s.unwrap_or(Complex64::new(1.0, 0.0)) * sign
}

fn volume_entry(
    p: ModeIndex,
    q: ModeIndex,
    k: f64,
    inner: f64,
    sp: Option<Complex64>,
    sq: Option<Complex64>,
    cfg: &VolumeOracleConfig,
) -> Complex64 {
    let (ga, gb) = angular_gram(p, q);
    let (xs, ws) = gauss_legendre(cfg.points_per_panel);
    let panel = PI / (4.0 * k);
    let count = ((cfg.radius - inner) / panel).ceil() as usize;
    let h = (cfg.radius - inner) / count as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..count {
        let r0 = inner + i as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            let r = r0 + h * x;
            let (fp, dfp) = radial_profile(k, p.l, sp, r);
            let (fq, dfq) = radial_profile(k, q.l, sq, r);
            let val = fp * fq.conj() * ga + (dfp * dfq.conj() * ga + fp * fq.conj() * gb / (r * r)) / (k * k);
            sum += val * (r * r * w * h);
        }
    }
    // far-field terms over the whole ball: the cross terms cancel between
    // the potential and its leading-order gradient
    let cp = outgoing_weight(p.l, sp);
    let cq = outgoing_weight(q.l, sq);
    0.5 * sum - ga * cfg.radius * (1.0 + cp * cq.conj())
}

/// `Q_qp` at finite radius from the volume definition with analytic Mie
/// fields; the scatterer interior contributes nothing.
pub fn volume_q_entry(
    p: ModeIndex,
    q: ModeIndex,
    sphere: &MieSphere,
    cfg: &VolumeOracleConfig,
) -> Result<Complex64> {
    sphere.validate()?;
    if p.l > sphere.l_max || q.l > sphere.l_max {
        return domain("mode outside the sphere's l_max");
    }
    check_validity(cfg, sphere.k, sphere.a)?;
    let sp = mie_coefficient(sphere, p.l)?.0;
    let sq = mie_coefficient(sphere, q.l)?.0;
    Ok(volume_entry(p, q, sphere.k, sphere.a, Some(sp), Some(sq), cfg))
}

/// Same definition with incident (standing-wave) fields only, no scatterer.
pub fn volume_q_incident(p: ModeIndex, q: ModeIndex, k: f64, cfg: &VolumeOracleConfig) -> Result<Complex64> {
    if !(k > 0.0) {
        return domain("wavenumber must be positive");
    }
    check_validity(cfg, k, cfg.radius / 10.0)?;
    Ok(volume_entry(p, q, k, 0.0, None, None, cfg))
}

/// Closed form of the incident-only diagonal entry at radius `R`:
/// `(2/k)[X³(j_l² - j_{l-1} j_{l+1}) + X² j_l j_l' - X]`, `X = kR`.
pub fn inc_inc_closed_form(l: usize, k: f64, radius: f64) -> f64 {
    let x = k * radius;
    let (j, jd) = sph_j_with_deriv(l + 1, x);
    let jm1 = if l == 0 { x.cos() / x } else { j[l - 1] };
    2.0 / k * (x.powi(3) * (j[l] * j[l] - jm1 * j[l + 1]) + x * x * j[l] * jd[l] - x)
}

/// Finite sum `Σ c_{f,n} e^{j f x} x^n` with integer frequency `f` and power
/// `n`; spherical Bessel functions are exactly of this form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaurentExp {
    pub terms: BTreeMap<(i32, i32), Complex64>,
}

impl LaurentExp {
    pub fn monomial(freq: i32, power: i32, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((freq, power), c);
        LaurentExp { terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (key, c) in &other.terms {
            *out.terms.entry(*key).or_default() += c;
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LaurentExp {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = LaurentExp::default();
        for ((f1, n1), c1) in &self.terms {
            for ((f2, n2), c2) in &other.terms {
                *out.terms.entry((f1 + f2, n1 + n2)).or_default() += c1 * c2;
            }
        }
        out
    }

    pub fn deriv(&self) -> Self {
        let mut out = LaurentExp::default();
        for ((f, n), c) in &self.terms {
            if *f != 0 {
                *out.terms.entry((*f, *n)).or_default() += c * J * *f as f64;
            }
            if *n != 0 {
                *out.terms.entry((*f, n - 1)).or_default() += c * *n as f64;
            }
        }
        out
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|((f, n), c)| c * Complex64::from_polar(x.powi(*n), *f as f64 * x))
            .sum()
    }

    /// `h_l^{(1)}(x) = (-j)^{l+1} (e^{jx}/x) Σ_k j^k (l+k)! / (k! (l-k)! (2x)^k)`.
    pub fn hankel1(l: usize) -> Self {
        let mut out = LaurentExp::default();
        let lead = j_pow(3 * (l + 1) % 4);
        for k in 0..=l {
            let mut c = 1.0;
            for i in (l - k + 1)..=(l + k) {
                c *= i as f64;
            }
            for i in 1..=k {
                c /= i as f64;
            }
            c /= 2f64.powi(k as i32);
            let term = LaurentExp::monomial(1, -1 - k as i32, lead * j_pow(k) * c);
            out = out.add(&term);
        }
        out
    }

    pub fn conj(&self) -> Self {
        LaurentExp {
            terms: self.terms.iter().map(|((f, n), c)| ((-f, *n), c.conj())).collect(),
        }
    }

    /// `j_l = (h^{(1)} + h^{(2)})/2`.
    pub fn bessel_j(l: usize) -> Self {
        let h = Self::hankel1(l);
        h.add(&h.conj()).scale(Complex64::new(0.5, 0.0))
    }

    /// Limit as `x → ∞`, or `None` if growing or oscillating terms survive.
    pub fn limit(&self, tol: f64) -> Option<Complex64> {
        let scale = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for ((f, n), c) in &self.terms {
            let survives = *n > 0 || (*n == 0 && *f != 0);
            if survives && c.norm() > tol * scale {
                return None;
            }
        }
        Some(self.terms.get(&(0, 0)).copied().unwrap_or_default())
    }
}

/// `lim_{R→∞}` of the incident-only diagonal entry, from the exact finite
/// expansion of the closed form.
pub fn inc_inc_limit(l: usize, k: f64) -> Result<f64> {
    let jl = LaurentExp::bessel_j(l);
    let jp1 = LaurentExp::bessel_j(l + 1);
    let jm1 = if l == 0 {
        // j_{-1}(x) = cos(x)/x
        LaurentExp::monomial(1, -1, Complex64::new(0.5, 0.0))
            .add(&LaurentExp::monomial(-1, -1, Complex64::new(0.5, 0.0)))
    } else {
        LaurentExp::bessel_j(l - 1)
    };
    let x = LaurentExp::monomial(0, 1, Complex64::new(1.0, 0.0));
    let x2 = x.mul(&x);
    let x3 = x2.mul(&x);
    let expr = x3
        .mul(&jl.mul(&jl).add(&jm1.mul(&jp1).scale(Complex64::new(-1.0, 0.0))))
        .add(&x2.mul(&jl.mul(&jl.deriv())))
        .add(&x.scale(Complex64::new(-1.0, 0.0)));
    let lim = expr
        .limit(1e-12)
        .ok_or_else(|| Error::Validation(format!("incident-only entry for l = {l} does not converge")))?;
    Ok(2.0 / k * lim.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft(k: f64, a: f64, l_max: usize) -> MieSphere {
        MieSphere {
            a,
            bc: BoundaryCondition::SoundSoft,
            k,
            l_max,
        }
    }

    #[test]
    fn monopole_closed_form() {
        let (k, a) = (2.0, 1.0);
        let (s, ds) = mie_coefficient(&soft(k, a, 0), 0).unwrap();
        let e = Complex64::from_polar(1.0, 2.0 * k * a);
        assert!((s - e).norm() < 1e-14);
        assert!((ds - 2.0 * J * a * e).norm() < 1e-13);
        let r = mie_scattering(&soft(k, a, 0)).unwrap();
        assert!((r.q[(0, 0)] - Complex64::new(-2.0 * a, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn coefficients_are_unimodular_and_derivatives_consistent() {
        for bc in [BoundaryCondition::SoundSoft, BoundaryCondition::SoundHard] {
            let sphere = MieSphere { a: 1.3, bc, k: 1.7, l_max: 12 };
            for l in 0..=12 {
                let (s, ds) = mie_coefficient(&sphere, l).unwrap();
                assert!((s.norm() - 1.0).abs() < 1e-13);
                let h = 1e-6;
                let up = mie_coefficient(&MieSphere { k: 1.7 + h, ..sphere }, l).unwrap().0;
                let dn = mie_coefficient(&MieSphere { k: 1.7 - h, ..sphere }, l).unwrap().0;
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - ds).norm() < 1e-6 * ds.norm().max(1.0), "{bc:?} l={l}");
            }
        }
    }

    #[test]
    fn mie_matrices_unitary_symmetric_degenerate() {
        for bc in [BoundaryCondition::SoundSoft, BoundaryCondition::SoundHard] {
            let r = mie_scattering(&MieSphere { a: 1.0, bc, k: 2.0, l_max: 6 }).unwrap();
            let m = r.s.nrows();
            let u = r.s.adjoint() * &r.s - CMatrix::identity(m, m);
            assert!(u.norm() < 1e-14);
            assert!((&r.s - r.s.transpose()).norm() < 1e-14);
            // Q is diagonal, real, and constant within each l
            for p in ModeSet::with_lmax(6).iter() {
                let expect = J * r.s_l[p.l].conj() * r.ds_l[p.l];
                assert!((r.q[(p.p, p.p)] - expect).norm() < 1e-13);
                assert!(expect.im.abs() < 1e-13);
            }
            let off: f64 = (0..m)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| r.q[(i, j)].norm())
                .fold(0.0, f64::max);
            assert!(off < 1e-14);
        }
    }

    #[test]
    fn table_lists_every_degree() {
        let csv = mie_table_csv(&mie_scattering(&soft(2.0, 1.0, 3)).unwrap());
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().ends_with(",-2e0"));
    }

    #[test]
    fn soft_sphere_delays_are_negative() {
        let r = mie_scattering(&soft(2.0, 1.0, 6)).unwrap();
        for l in 0..=6 {
            assert!((J * r.s_l[l].conj() * r.ds_l[l]).re < 0.0);
        }
    }

    #[test]
    fn volume_monopole_converges_to_delay() {
        let sphere = soft(2.0, 1.0, 0);
        let p = ModeIndex::from_lm(0, 0).unwrap();
        let vals: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&r| {
                let cfg = VolumeOracleConfig { radius: r, ..Default::default() };
                volume_q_entry(p, p, &sphere, &cfg).unwrap().re
            })
            .collect();
        assert!((vals[2] - vals[1]).abs() < 0.01 * 2.0);
        assert!((vals[1] - vals[0]).abs() < 0.01 * 2.0 * 2.0);
        assert!((vals[2] + 2.0).abs() < 0.01 * 2.0, "{vals:?}");
    }

    #[test]
    fn volume_matches_mie_for_higher_modes() {
        let sphere = soft(2.0, 1.0, 3);
        let mie = mie_scattering(&sphere).unwrap();
        let near = VolumeOracleConfig { radius: 80.0, ..Default::default() };
        let far = VolumeOracleConfig { radius: 160.0, ..Default::default() };
        for (l, m) in [(1usize, 0i64), (2, -1), (3, 2)] {
            let p = ModeIndex::from_lm(l, m).unwrap();
            // the finite-radius error is O(1/R)
            let v = 2.0 * volume_q_entry(p, p, &sphere, &far).unwrap() - volume_q_entry(p, p, &sphere, &near).unwrap();
            let e = mie.q[(p.p, p.p)];
            assert!((v - e).norm() < 0.01 * e.norm().max(0.5), "l={l}: {v} vs {e}");
        }
    }

    #[test]
    fn off_diagonal_volume_entries_vanish() {
        let sphere = soft(2.0, 1.0, 3);
        let cfg = VolumeOracleConfig { radius: 20.0, ..Default::default() };
        for ((l1, m1), (l2, m2)) in [((0, 0), (1, 0)), ((2, 1), (2, -1)), ((3, 2), (1, 1))] {
            let p = ModeIndex::from_lm(l1, m1).unwrap();
            let q = ModeIndex::from_lm(l2, m2).unwrap();
            assert!(volume_q_entry(p, q, &sphere, &cfg).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn incident_only_closed_form_matches_quadrature() {
        let k = 1.5;
        let cfg = VolumeOracleConfig { radius: 30.0, points_per_panel: 12, strict: false };
        for l in [0usize, 1, 3] {
            let p = ModeIndex::from_lm(l, 0).unwrap();
            let v = volume_q_incident(p, p, k, &cfg).unwrap();
            let c = inc_inc_closed_form(l, k, cfg.radius);
            assert!((v.re - c).abs() < 1e-9 && v.im.abs() < 1e-9, "l={l}: {v} vs {c}");
        }
    }

    #[test]
    fn laurent_bessel_matches_numeric() {
        for l in 0..8 {
            let e = LaurentExp::bessel_j(l);
            for &x in &[3.1, 17.0, 40.0] {
                let v = e.eval(x);
                let j = sph_j_with_deriv(l, x).0[l];
                assert!((v.re - j).abs() < 1e-9 && v.im.abs() < 1e-9, "l={l} x={x}");
            }
        }
    }

    #[test]
    fn incident_only_limit_vanishes() {
        for l in 0..=10 {
            assert!(inc_inc_limit(l, 2.0).unwrap().abs() < 1e-10, "l={l}");
        }
    }

    #[test]
    fn renormalization_removes_linear_growth() {
        // the subtracted far-field energy grows like (1 + |s|²) R = 2R
        let sphere = soft(2.0, 1.0, 1);
        let p = ModeIndex::from_lm(1, -1).unwrap();
        let at = |r: f64| {
            let cfg = VolumeOracleConfig { radius: r, ..Default::default() };
            volume_q_entry(p, p, &sphere, &cfg).unwrap().re
        };
        let slope = (at(160.0) - at(40.0)) / 120.0;
        assert!(slope.abs() < 1e-3 * 2.0, "{slope}");
    }

    #[test]
    fn strict_mode_rejects_small_radius() {
        let sphere = soft(2.0, 1.0, 0);
        let p = ModeIndex::from_lm(0, 0).unwrap();
        let cfg = VolumeOracleConfig { radius: 5.0, points_per_panel: 8, strict: true };
        assert!(volume_q_entry(p, p, &sphere, &cfg).is_err());
    }
}
