//! Port bookkeeping: the linear index `p` over spherical-harmonic modes
//! `(l, m)`, ordered `l` ascending then `m` ascending.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub p: usize,
    pub l: usize,
    pub m: i64,
}

impl ModeIndex {
    pub fn from_lm(l: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return domain(format!("|m| = {} exceeds l = {l}", m.abs()));
        }
        Ok(ModeIndex {
            p: ((l * l + l) as i64 + m) as usize,
            l,
            m,
        })
    }

    pub fn from_linear(p: usize) -> Self {
        let l = (p as f64).sqrt() as usize;
        // guard against rounding in the square root
        let l = if (l + 1) * (l + 1) <= p {
            l + 1
        } else if l * l > p {
            l - 1
        } else {
            l
        };
        let m = p as i64 - (l * l + l) as i64;
        ModeIndex { p, l, m }
    }

    /// `p̃ = (l, -m)`.
    pub fn tilde(self) -> Self {
        ModeIndex::from_lm(self.l, -self.m).expect("|m| <= l is preserved")
    }

    /// `p̂ = (l, -m)`; identical map to [`ModeIndex::tilde`], kept separate to
    /// mirror where each appears (conjugation vs. the `Ī` pattern).
    pub fn hat(self) -> Self {
        self.tilde()
    }

    /// `(-1)^{1+l+m}`, the sign attached to the `Ī` coupling.
    pub fn ibar_sign(self) -> f64 {
        if (1 + self.l as i64 + self.m).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Parameters of the `l_max = floor(ka + c (ka)^{1/3})` truncation rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub k: f64,
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub l_max: usize,
    pub modes: Vec<ModeIndex>,
    /// Present when the set came from the truncation rule.
    pub truncation: Option<Truncation>,
}

impl ModeSet {
    pub fn with_lmax(l_max: usize) -> Self {
        let modes = (0..(l_max + 1) * (l_max + 1))
            .map(ModeIndex::from_linear)
            .collect();
        ModeSet {
            l_max,
            modes,
            truncation: None,
        }
    }

    /// Number of ports `M = (l_max + 1)^2`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeIndex> {
        self.modes.iter()
    }

    /// The same truncation extended by `margin` degrees.
    pub fn extended(&self, margin: usize) -> Self {
        let mut out = ModeSet::with_lmax(self.l_max + margin);
        out.truncation = self.truncation;
        out
    }
}

/// `l_max` from the truncation rule.
pub fn lmax_rule(k: f64, a: f64, c: f64) -> Result<usize> {
    if !(k > 0.0 && k.is_finite()) || !(a > 0.0 && a.is_finite()) {
        return domain(format!("k and a must be positive (k = {k}, a = {a})"));
    }
    if !(c > 2.0 && c < 4.0) {
        return domain(format!("truncation constant c = {c} outside (2, 4)"));
    }
    let ka = k * a;
    Ok((ka + c * ka.cbrt()).floor() as usize)
}

pub fn build_mode_set(k: f64, a: f64, c: f64) -> Result<ModeSet> {
    let l_max = lmax_rule(k, a, c)?;
    let mut set = ModeSet::with_lmax(l_max);
    set.truncation = Some(Truncation { k, a, c });
    Ok(set)
}
