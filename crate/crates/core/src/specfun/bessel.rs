//! Spherical Bessel and Hankel functions of real argument.
//!
//! `j_l` uses Miller's downward recurrence (normalized with the sum rule
//! `sum (2n+1) j_n^2 = 1`) whenever `x <= l`, where upward recurrence is
//! unstable; otherwise upward recurrence from the closed forms. `y_l` is always
//! recurred upward.

use num_complex::Complex64;

use crate::error::{domain, Result};

/// Hankel arguments below this are rejected as singular.
pub const HANKEL_MIN_ARG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    /// Regular spherical Bessel function `j_l`.
    J,
    /// Spherical Hankel function of the first kind, `j_l + i y_l`.
    H1,
    /// Spherical Hankel function of the second kind, `j_l - i y_l`.
    H2,
}

/// `j_0 ..= j_lmax` at `x >= 0`.
pub fn sph_j_array(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-4 {
        // leading two series terms are exact to double precision here
        let mut lead = 1.0;
        for (l, v) in out.iter_mut().enumerate() {
            if l > 0 {
                lead *= x / (2 * l + 1) as f64;
            }
            *v = lead * (1.0 - x * x / (2.0 * (2 * l + 3) as f64));
        }
        return out;
    }
    let (s, c) = x.sin_cos();
    out[0] = s / x;
    if lmax == 0 {
        return out;
    }
    if x > lmax as f64 {
        out[1] = s / (x * x) - c / x;
        for l in 1..lmax {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return out;
    }

    // Miller: start well above both l and x.
    let start = lmax + 20 + (2.0 * x.sqrt()) as usize + (x as usize);
    let mut upper = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0_f64;
    let mut trail = vec![0.0; lmax + 1];
    for n in (0..=start).rev() {
        if n <= lmax {
            trail[n] = current;
        }
        norm += (2 * n + 1) as f64 * current * current;
        if n == 0 {
            break;
        }
        let lower = (2 * n + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        if current.abs() > 1e100 {
            let f = 1e-100;
            current *= f;
            upper *= f;
            norm *= f * f;
            for t in trail.iter_mut() {
                *t *= f;
            }
        }
    }
    let inv = 1.0 / norm.sqrt();
    // sign fixed by j_0 (or j_1 when j_0 vanishes)
    let sign = if s.abs() > 1e-3 {
        (out[0] / (trail[0] * inv)).signum()
    } else {
        let j1 = s / (x * x) - c / x;
        (j1 / (trail[1] * inv)).signum()
    };
    for (o, t) in out.iter_mut().zip(trail) {
        *o = sign * t * inv;
    }
    out
}

/// `y_0 ..= y_lmax` at `x > 0`.
pub fn sph_y_array(lmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if lmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    out
}

/// Values and argument-derivatives of `j_l` for `l = 0..=lmax`.
pub fn sph_j_with_deriv(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let j = sph_j_array(lmax + 1, x);
    let mut d = vec![0.0; lmax + 1];
    d[0] = -j[1];
    for l in 1..=lmax {
        d[l] = if x == 0.0 {
            if l == 1 {
                1.0 / 3.0
            } else {
                0.0
            }
        } else {
            j[l - 1] - (l + 1) as f64 / x * j[l]
        };
    }
    let mut j = j;
    j.truncate(lmax + 1);
    (j, d)
}

/// Values and argument-derivatives of `h_l^{(1)}` (or `h_l^{(2)}` when
/// `second` is set) for `l = 0..=lmax`.
pub fn sph_h_with_deriv(lmax: usize, x: f64, second: bool) -> (Vec<Complex64>, Vec<Complex64>) {
    let (j, jd) = sph_j_with_deriv(lmax, x);
    let y = sph_y_array(lmax + 1, x);
    let sgn = if second { -1.0 } else { 1.0 };
    let mut yd = vec![0.0; lmax + 1];
    yd[0] = -y[1];
    for l in 1..=lmax {
        yd[l] = y[l - 1] - (l + 1) as f64 / x * y[l];
    }
    let h = (0..=lmax).map(|l| Complex64::new(j[l], sgn * y[l])).collect();
    let hd = (0..=lmax).map(|l| Complex64::new(jd[l], sgn * yd[l])).collect();
    (h, hd)
}

fn check_args(kind: BesselKind, z: f64) -> Result<()> {
    if !(z.is_finite()) || z < 0.0 {
        return domain(format!("spherical Bessel argument must be non-negative, got {z}"));
    }
    if kind != BesselKind::J && z < HANKEL_MIN_ARG {
        return domain(format!("spherical Hankel function is singular at z = {z}"));
    }
    Ok(())
}

/// `j_l(z)`, `h_l^{(1)}(z)` or `h_l^{(2)}(z)` for real `z`.
pub fn sph_bessel(kind: BesselKind, l: usize, z: f64) -> Result<Complex64> {
    check_args(kind, z)?;
    Ok(match kind {
        BesselKind::J => Complex64::new(sph_j_array(l, z)[l], 0.0),
        BesselKind::H1 => sph_h_with_deriv(l, z, false).0[l],
        BesselKind::H2 => sph_h_with_deriv(l, z, true).0[l],
    })
}

/// Derivative with respect to the argument of [`sph_bessel`].
pub fn sph_bessel_zderiv(kind: BesselKind, l: usize, z: f64) -> Result<Complex64> {
    check_args(kind, z)?;
    Ok(match kind {
        BesselKind::J => Complex64::new(sph_j_with_deriv(l, z).1[l], 0.0),
        BesselKind::H1 => sph_h_with_deriv(l, z, false).1[l],
        BesselKind::H2 => sph_h_with_deriv(l, z, true).1[l],
    })
}
