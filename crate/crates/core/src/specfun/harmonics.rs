//! Spherical harmonics `X_lm(θ, φ)` with the Condon-Shortley phase, so that
//! `conj(X_lm) = (-1)^m X_{l,-m}`.
//!
//! Associated Legendre values are carried in "sin-stripped" form
//! `P̄_l^m(cos θ) = sin^m θ · T_l^m(cos θ)` with `T` built from normalized
//! recurrences. That keeps `X/sin θ` finite at the poles and avoids the
//! factorial ratio entirely.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};

/// All `X_lm` for `l <= lmax` at one direction, plus the angular pieces of
/// the surface gradient.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    pub lmax: usize,
    /// `X_lm`, indexed by `l*l + l + m`.
    pub value: Vec<Complex64>,
    /// `∂X_lm/∂θ`.
    pub d_theta: Vec<Complex64>,
    /// `(1/sin θ) ∂X_lm/∂φ`.
    pub d_phi_over_sin: Vec<Complex64>,
}

impl HarmonicTable {
    pub fn new(lmax: usize, theta: f64, phi: f64) -> Self {
        let count = (lmax + 1) * (lmax + 1);
        let mut value = vec![Complex64::new(0.0, 0.0); count];
        let mut d_theta = value.clone();
        let mut d_phi_over_sin = value.clone();

        let (s, x) = theta.sin_cos();
        let s = s.max(0.0);
        // t[l], dt[l] for the current m
        let mut t = vec![0.0; lmax + 1];
        let mut dt = vec![0.0; lmax + 1];
        let mut tmm = 1.0 / (4.0 * PI).sqrt();
        let mut s_pow_m_minus_1 = 0.0; // sin^{m-1}, only used for m >= 1
        for m in 0..=lmax {
            if m > 0 {
                tmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                s_pow_m_minus_1 = if m == 1 { 1.0 } else { s_pow_m_minus_1 * s };
            }
            t[m] = tmm;
            dt[m] = 0.0;
            if m < lmax {
                let c = ((2 * m + 3) as f64).sqrt();
                t[m + 1] = c * x * tmm;
                dt[m + 1] = c * tmm;
            }
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                t[l] = a * (x * t[l - 1] - b * t[l - 2]);
                dt[l] = a * (t[l - 1] + x * dt[l - 1] - b * dt[l - 2]);
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let s_pow_m = if m == 0 { 1.0 } else { s_pow_m_minus_1 * s };
            let phase = Complex64::from_polar(1.0, m as f64 * phi);
            for l in m..=lmax {
                let val = sign * s_pow_m * t[l];
                let dth = if m == 0 {
                    -s * dt[l]
                } else {
                    sign * (m as f64 * s_pow_m_minus_1 * x * t[l] - s_pow_m * s * dt[l])
                };
                let dph = if m == 0 { 0.0 } else { sign * s_pow_m_minus_1 * t[l] };
                let base = l * l + l;
                let v = phase * val;
                let vt = phase * dth;
                let vp = phase * Complex64::new(0.0, m as f64 * dph);
                value[base + m] = v;
                d_theta[base + m] = vt;
                d_phi_over_sin[base + m] = vp;
                if m > 0 {
                    // X_{l,-m} = (-1)^m conj(X_lm)
                    value[base - m] = sign * v.conj();
                    d_theta[base - m] = sign * vt.conj();
                    d_phi_over_sin[base - m] = sign * vp.conj();
                }
            }
        }
        HarmonicTable {
            lmax,
            value,
            d_theta,
            d_phi_over_sin,
        }
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.value[idx(l, m)]
    }
}

#[inline]
pub(crate) fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Spherical harmonic `X_lm(θ, φ)`.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() as usize > l {
        return domain(format!("|m| = {} exceeds l = {l}", m.abs()));
    }
    if !(0.0..=PI).contains(&theta) {
        return domain(format!("polar angle {theta} outside [0, π]"));
    }
    Ok(HarmonicTable::new(l, theta, phi).get(l, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::quadrature::gauss_legendre;

    #[test]
    fn constant_mode() {
        for &(t, p) in &[(0.0, 0.0), (1.1, 2.0), (PI, -0.3)] {
            let v = spherical_harmonic(0, 0, t, p).unwrap();
            assert!((v.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15 && v.im == 0.0);
        }
    }

    #[test]
    fn conjugation_property() {
        let (t, p) = (1.0, 0.7);
        let x = spherical_harmonic(3, 2, t, p).unwrap();
        let xt = spherical_harmonic(3, -2, t, p).unwrap();
        assert!((x.conj() - xt).norm() < 1e-15);
        let x = spherical_harmonic(3, 1, t, p).unwrap();
        let xt = spherical_harmonic(3, -1, t, p).unwrap();
        assert!((x.conj() + xt).norm() < 1e-15);
    }

    #[test]
    fn known_low_order_values() {
        // Y_1^1 = -sqrt(3/8π) sinθ e^{iφ}, Y_2^0 = sqrt(5/16π)(3cos²θ-1)
        let (t, p) = (0.9_f64, 0.4_f64);
        let y11 = -(3.0 / (8.0 * PI)).sqrt() * t.sin() * Complex64::from_polar(1.0, p);
        assert!((spherical_harmonic(1, 1, t, p).unwrap() - y11).norm() < 1e-15);
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * t.cos().powi(2) - 1.0);
        assert!((spherical_harmonic(2, 0, t, p).unwrap().re - y20).abs() < 1e-15);
    }

    fn orthonormality_defect(lmax: usize) -> f64 {
        let n = lmax + 2;
        let (xs, ws) = gauss_legendre(n);
        let nphi = 2 * lmax + 2;
        let count = (lmax + 1) * (lmax + 1);
        let mut gram = vec![Complex64::new(0.0, 0.0); count * count];
        for (x, w) in xs.iter().zip(&ws) {
            // nodes on [0,1] mapped to cosθ in [-1,1]
            let c = 2.0 * x - 1.0;
            let wt = 2.0 * w;
            for j in 0..nphi {
                let phi = 2.0 * PI * j as f64 / nphi as f64;
                let tab = HarmonicTable::new(lmax, c.acos(), phi);
                let wq = wt * 2.0 * PI / nphi as f64;
                for a in 0..count {
                    for b in 0..count {
                        gram[a * count + b] += wq * tab.value[a] * tab.value[b].conj();
                    }
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..count {
            for b in 0..count {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[a * count + b] - target).norm());
            }
        }
        worst
    }

    #[test]
    fn orthonormal_up_to_degree_four() {
        assert!(orthonormality_defect(4) < 1e-10);
    }

    #[test]
    fn orthonormal_up_to_degree_six() {
        assert!(orthonormality_defect(6) < 1e-8);
    }

    #[test]
    fn angular_derivatives_match_finite_differences() {
        let (t, p, h) = (0.8, 1.3, 1e-6);
        let tab = HarmonicTable::new(5, t, p);
        let up = HarmonicTable::new(5, t + h, p);
        let dn = HarmonicTable::new(5, t - h, p);
        let pu = HarmonicTable::new(5, t, p + h);
        let pd = HarmonicTable::new(5, t, p - h);
        for i in 0..36 {
            let fd_t = (up.value[i] - dn.value[i]) / (2.0 * h);
            let fd_p = (pu.value[i] - pd.value[i]) / (2.0 * h) / t.sin();
            assert!((fd_t - tab.d_theta[i]).norm() < 1e-8);
            assert!((fd_p - tab.d_phi_over_sin[i]).norm() < 1e-8);
        }
    }

    #[test]
    fn pole_is_finite() {
        let tab = HarmonicTable::new(8, 0.0, 0.0);
        assert!(tab.d_phi_over_sin.iter().all(|v| v.norm().is_finite()));
        assert!(tab.d_theta.iter().all(|v| v.norm().is_finite()));
    }

    #[test]
    fn rejects_bad_order() {
        assert!(spherical_harmonic(2, 3, 0.5, 0.0).is_err());
        assert!(spherical_harmonic(2, -3, 0.5, 0.0).is_err());
    }
}
