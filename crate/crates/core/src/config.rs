//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::generate::{icosphere, two_plates};
use crate::mesh::{load_mesh_file, MeshFormat, SurfaceMesh};
use crate::operators::{AssemblyOptions, BoundaryCondition, Coupling};
use crate::specfun::{build_mode_set, ModeSet};
use crate::wsm::Route;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSource {
    /// Relative paths are resolved against the configuration file.
    File {
        path: PathBuf,
        #[serde(default)]
        format: Option<MeshFormat>,
    },
    Icosphere {
        level: usize,
        radius: f64,
    },
    TwoPlates {
        length: f64,
        width: f64,
        thickness: f64,
        gap: f64,
        divisions: [usize; 3],
    },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    pub outer_order: usize,
    pub inner_order: usize,
    pub near_factor: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        let d = AssemblyOptions::default();
        Quadrature {
            outer_order: d.outer_order,
            inner_order: d.inner_order,
            near_factor: d.near_factor,
        }
    }
}

/// Pass/fail thresholds for sphere validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub phase_deg: f64,
    pub magnitude: f64,
    pub delay_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            phase_deg: 2.0,
            magnitude: 2e-2,
            delay_rel: 2e-2,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn solver_tol() -> f64 {
    1e-8
}
fn out_dir() -> PathBuf {
    PathBuf::from("wsbem-out")
}
fn yes() -> bool {
    true
}
fn eps() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub k: f64,
    #[serde(default = "one")]
    pub v: f64,
    pub bc: BoundaryCondition,
    /// Defaults to 0.5 (sound-soft) or 1.0 (sound-hard).
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub coupling: Coupling,
    /// Constant in `l_max = ka + c (ka)^{1/3}`.
    #[serde(default = "three")]
    pub c: f64,
    #[serde(default)]
    pub l_max: Option<usize>,
    /// Radius of the smallest origin-centred sphere enclosing the scatterer;
    /// defaults to the mesh circumradius.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default = "solver_tol")]
    pub solver_tolerance: f64,
    #[serde(default = "out_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "yes")]
    pub deterministic: bool,
    /// Extra harmonic degrees in the mode sum of the direct route.
    #[serde(default)]
    pub identity_margin: usize,
    /// Delays with `|τ| ≤ epsilon` are classified as zero.
    #[serde(default = "eps")]
    pub epsilon: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a file; relative mesh paths are made relative to its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let MeshSource::File { path: mesh, .. } = &mut cfg.mesh {
            if mesh.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh = dir.join(&*mesh);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad(format!("v must be positive, got {}", self.v));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("alpha must lie in [0, 1], got {a}"));
            }
        }
        if self.l_max.is_none() && !(self.c > 2.0 && self.c < 4.0) {
            return bad(format!("c must lie in (2, 4), got {}", self.c));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        if !(self.solver_tolerance > 0.0) || !(self.epsilon >= 0.0) {
            return bad("solver_tolerance must be positive and epsilon nonnegative".into());
        }
        let q = &self.quadrature;
        if q.outer_order == 0 || q.inner_order == 0 || !(q.near_factor > 0.0) {
            return bad("quadrature orders and near_factor must be positive".into());
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| self.bc.default_alpha())
    }

    pub fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions {
            outer_order: self.quadrature.outer_order,
            inner_order: self.quadrature.inner_order,
            near_factor: self.quadrature.near_factor,
            deterministic: self.deterministic,
            coupling: self.coupling,
        }
    }

    pub fn load_mesh(&self) -> Result<SurfaceMesh> {
        match &self.mesh {
            MeshSource::File { path, format } => load_mesh_file(path, *format),
            MeshSource::Icosphere { level, radius } => icosphere(*level, *radius),
            MeshSource::TwoPlates {
                length,
                width,
                thickness,
                gap,
                divisions,
            } => two_plates(*length, *width, *thickness, *gap, *divisions),
            MeshSource::Empty => Ok(SurfaceMesh::empty()),
        }
    }

    pub fn mode_set(&self, mesh: &SurfaceMesh) -> Result<ModeSet> {
        if let Some(l) = self.l_max {
            return Ok(ModeSet::with_lmax(l));
        }
        let a = self.radius.unwrap_or_else(|| mesh.circumradius());
        if !(a > 0.0) {
            return Err(Error::Config("empty scatterer needs l_max or radius".into()));
        }
        build_mode_set(self.k, a, self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(
            r#"{"mesh": {"kind": "icosphere", "level": 1, "radius": 1.0}, "k": 2.0, "bc": "sound_soft"}"#,
        )
        .unwrap();
        assert_eq!(c.v, 1.0);
        assert_eq!(c.c, 3.0);
        assert_eq!(c.alpha(), 0.5);
        assert_eq!(c.route, Route::Both);
        assert!(c.deterministic);
        let mesh = c.load_mesh().unwrap();
        // ka + 3 (ka)^{1/3} with a the circumradius (1)
        assert_eq!(c.mode_set(&mesh).unwrap().l_max, 5);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::from_json(r#"{"mesh": {"kind": "empty"}, "k": 2.0, "bc": "sound_soft", "kk": 1}"#);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            r#"{"mesh": {"kind": "empty"}, "k": -2.0, "bc": "sound_soft"}"#,
            r#"{"mesh": {"kind": "empty"}, "k": 2.0, "bc": "sound_soft", "alpha": 1.5}"#,
            r#"{"mesh": {"kind": "empty"}, "k": 2.0, "bc": "sound_soft", "c": 5.0}"#,
        ] {
            assert!(RunConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_mesh_needs_modes() {
        let c = RunConfig::from_json(r#"{"mesh": {"kind": "empty"}, "k": 2.0, "bc": "sound_hard"}"#).unwrap();
        assert!(c.mode_set(&SurfaceMesh::empty()).is_err());
        let c = RunConfig { l_max: Some(2), ..c };
        assert_eq!(c.mode_set(&SurfaceMesh::empty()).unwrap().len(), 9);
        assert_eq!(c.alpha(), 1.0);
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::from_json(
            r#"{"mesh": {"kind": "file", "path": "a.off"}, "k": 1.0, "bc": "sound_soft", "route": "direct"}"#,
        )
        .unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
