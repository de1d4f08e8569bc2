//! Special functions and the mode index every other module consumes.

mod bessel;
mod harmonics;
mod modes;

pub use bessel::{
    sph_bessel, sph_bessel_zderiv, sph_h_with_deriv, sph_j_array, sph_j_with_deriv, sph_y_array,
    BesselKind, HANKEL_MIN_ARG,
};
pub use harmonics::{spherical_harmonic, HarmonicTable};
pub(crate) use harmonics::idx as harmonic_index;
pub use modes::{build_mode_set, lmax_rule, ModeIndex, ModeSet, Truncation};
