//! Galerkin assembly of the BEM matrices with one pulse basis function per
//! panel.
//!
//! Sound-soft (single-layer density, `φ_sca = ∫ G σ`):
//! `Z = L`, `Z̃ = ½ I_A + K_t`, `V = -∫ φ_inc f`, `Ṽ = -∫ ∂_n φ_inc f`.
//!
//! Sound-hard (double-layer density, `φ_sca = ∫ ∂_n' G σ`):
//! `Z = M`, `Z̃ = -½ I_A + D`, `V = -∫ ∂_n φ_inc f`, `Ṽ = -∫ φ_inc f`.
//!
//! `K_t` carries the normal at the observation panel, `D = K_tᵀ` the normal
//! at the source panel, and `M` is the hypersingular operator. The combined
//! system is `Ẑ = (1-α) Z + α Z̃`, `V̂ = (1-α) V + α Ṽ`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mesh::singular::{coincident_static, maue_edge_term, near_static, remainder_radial};
use crate::mesh::{Adjacency, Panel, QuadratureRule, SurfaceMesh};
use crate::specfun::ModeSet;
use crate::waves::{cvec, double_normal, green_radial, green_radial_kderiv, StandingTable};
use crate::CMatrix;

const FOUR_PI: f64 = 4.0 * PI;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    SoundSoft,
    SoundHard,
}

impl BoundaryCondition {
    pub fn default_alpha(self) -> f64 {
        match self {
            BoundaryCondition::SoundSoft => 0.5,
            BoundaryCondition::SoundHard => 1.0,
        }
    }
}

/// Scaling of the `α` terms in the combined system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `Ẑ = (1-α) Z + α Z̃`.
    #[default]
    Plain,
    /// `Ẑ = (1-α) Z + α (j/k) Z̃`, with `V̂` scaled alike; balances the
    /// dimensions of the two equations.
    KScaled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyOptions {
    /// Exactness degree of the observation-panel rule.
    pub outer_order: usize,
    /// Exactness degree of the source-panel rule.
    pub inner_order: usize,
    /// Pairs with centroid distance below `near_factor · max(diam)` get the
    /// singular treatment.
    pub near_factor: f64,
    /// Assemble panel rows sequentially instead of on the thread pool.
    pub deterministic: bool,
    pub coupling: Coupling,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            outer_order: 3,
            inner_order: 6,
            near_factor: 2.0,
            deterministic: false,
            coupling: Coupling::Plain,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BemSystem {
    pub bc: BoundaryCondition,
    pub k: f64,
    pub alpha: f64,
    pub coupling: Coupling,
    pub modes: ModeSet,
    pub mesh: Arc<SurfaceMesh>,
    pub z: CMatrix,
    pub z_tilde: CMatrix,
    pub v: CMatrix,
    pub v_tilde: CMatrix,
    pub z_prime: Option<CMatrix>,
    pub v_prime: Option<CMatrix>,
}

impl BemSystem {
    pub fn n_panels(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.v.ncols()
    }

    fn beta(&self) -> Complex64 {
        match self.coupling {
            Coupling::Plain => Complex64::new(self.alpha, 0.0),
            Coupling::KScaled => Complex64::new(0.0, self.alpha / self.k),
        }
    }

    /// `Ẑ`.
    pub fn z_hat(&self) -> CMatrix {
        let a = Complex64::new(1.0 - self.alpha, 0.0);
        &self.z * a + &self.z_tilde * self.beta()
    }

    /// `V̂`.
    pub fn v_hat(&self) -> CMatrix {
        let a = Complex64::new(1.0 - self.alpha, 0.0);
        &self.v * a + &self.v_tilde * self.beta()
    }

    pub fn z_prime(&self) -> Result<&CMatrix> {
        self.z_prime
            .as_ref()
            .ok_or_else(|| Error::Missing("Z' has not been assembled".into()))
    }

    pub fn v_prime(&self) -> Result<&CMatrix> {
        self.v_prime
            .as_ref()
            .ok_or_else(|| Error::Missing("V' has not been assembled".into()))
    }
}

/// Integrals for one unordered panel pair `(m, n)`.
#[derive(Debug, Clone, Copy, Default)]
struct PairBlock {
    /// `Z_mn = Z_nm`.
    z: Complex64,
    z_k: Complex64,
    /// `K_t` entries `(m, n)` and `(n, m)`.
    kt_mn: Complex64,
    kt_nm: Complex64,
}

struct Rules {
    outer: QuadratureRule,
    inner: QuadratureRule,
}

fn far_pair(pm: &Panel, pn: &Panel, k: f64, rules: &Rules, hard: bool, derivs: bool) -> PairBlock {
    let mut b = PairBlock::default();
    let nn = pm.normal.dot(&pn.normal);
    let qn = rules.inner.mapped(pn);
    for (p, wp) in rules.outer.mapped(pm) {
        for (q, wq) in &qn {
            let w = wp * wq;
            let r = p - q;
            let d = r.norm();
            let rh = r / d;
            let (g, g1, g2) = green_radial(k, d);
            let (a, c) = (rh.dot(&pm.normal), rh.dot(&pn.normal));
            b.kt_mn += g1 * (a * w);
            b.kt_nm -= g1 * (c * w);
            if hard {
                b.z += double_normal(g1, g2, d, a, c, nn) * w;
                if derivs {
                    let (_, h1, h2) = green_radial_kderiv(k, d);
                    b.z_k += double_normal(h1, h2, d, a, c, nn) * w;
                }
            } else {
                b.z += g * w;
                if derivs {
                    b.z_k += green_radial_kderiv(k, d).0 * w;
                }
            }
        }
    }
    b
}

fn near_pair(
    pm: &Panel,
    pn: &Panel,
    adj: Adjacency,
    k: f64,
    rules: &Rules,
    hard: bool,
) -> PairBlock {
    let (l_static, kt_mn_s, kt_nm_s) = if adj == Adjacency::Coincident {
        (coincident_static(pm), 0.0, 0.0)
    } else {
        let (l1, a) = near_static(pm, pn, adj);
        let (l2, c) = near_static(pn, pm, adj);
        (0.5 * (l1 + l2), a, c)
    };
    let mut l = ZERO;
    let mut l_k = ZERO;
    let mut kt_mn = ZERO;
    let mut kt_nm = ZERO;
    let qn = rules.inner.mapped(pn);
    for (p, wp) in rules.outer.mapped(pm) {
        for (q, wq) in &qn {
            let w = wp * wq;
            let r = p - q;
            let d = r.norm();
            let (f, fp) = remainder_radial(k, d);
            l += f * w;
            l_k += Complex64::from_polar(w, -k * d);
            if d > 0.0 {
                let rh = r / d;
                kt_mn += fp * (rh.dot(&pm.normal) * w);
                kt_nm -= fp * (rh.dot(&pn.normal) * w);
            }
        }
    }
    let l = (l + l_static) / FOUR_PI;
    let l_k = l_k * Complex64::new(0.0, -1.0 / FOUR_PI);
    let kt_mn = (kt_mn + kt_mn_s) / FOUR_PI;
    let kt_nm = (kt_nm + kt_nm_s) / FOUR_PI;
    if !hard {
        return PairBlock {
            z: l,
            z_k: l_k,
            kt_mn,
            kt_nm,
        };
    }
    let nn = pm.normal.dot(&pn.normal);
    let (edges, edges_k) = maue_edge_term(pm, pn, k);
    PairBlock {
        z: k * k * nn * l - edges,
        z_k: 2.0 * k * nn * l + k * k * nn * l_k - edges_k,
        kt_mn,
        kt_nm,
    }
}

fn centroid_key(p: &Panel) -> (f64, f64, f64) {
    (p.centroid.x, p.centroid.y, p.centroid.z)
}

fn pair_list(mesh: &SurfaceMesh, near_factor: f64) -> Vec<Vec<(usize, Adjacency, bool)>> {
    (0..mesh.len())
        .map(|m| {
            let pm = &mesh.panels[m];
            (m..mesh.len())
                .map(|n| {
                    let pn = &mesh.panels[n];
                    let adj = mesh.adjacency(m, n);
                    let dist = (pm.centroid - pn.centroid).norm();
                    let near = adj != Adjacency::Disjoint
                        || dist < near_factor * pm.diameter.max(pn.diameter);
                    (n, adj, near)
                })
                .collect()
        })
        .collect()
}

struct Operators {
    z: CMatrix,
    z_k: CMatrix,
    kt: CMatrix,
}

fn assemble_operators(
    mesh: &SurfaceMesh,
    k: f64,
    hard: bool,
    derivs: bool,
    opts: &AssemblyOptions,
) -> Result<Operators> {
    let n = mesh.len();
    let rules = Rules {
        outer: QuadratureRule::triangle(opts.outer_order),
        inner: QuadratureRule::triangle(opts.inner_order),
    };
    let pairs = pair_list(mesh, opts.near_factor);
    let row = |m: usize| -> Result<Vec<(usize, PairBlock)>> {
        pairs[m]
            .iter()
            .map(|&(j, adj, near)| {
                let (pm, pn) = (&mesh.panels[m], &mesh.panels[j]);
                // orient by geometry so relabeling panels cannot change the
                // quadrature applied to a pair
                let swap = centroid_key(pn) < centroid_key(pm);
                let (po, pi) = if swap { (pn, pm) } else { (pm, pn) };
                let mut b = if near {
                    near_pair(po, pi, adj, k, &rules, hard)
                } else {
                    far_pair(po, pi, k, &rules, hard, derivs)
                };
                if swap {
                    std::mem::swap(&mut b.kt_mn, &mut b.kt_nm);
                }
                if !(b.z.norm().is_finite() && b.kt_mn.norm().is_finite() && b.kt_nm.norm().is_finite()) {
                    return Err(Error::Quadrature {
                        m,
                        n: j,
                        msg: "non-finite panel-pair integral".into(),
                    });
                }
                Ok((j, b))
            })
            .collect()
    };
    let rows: Vec<Result<Vec<(usize, PairBlock)>>> = if opts.deterministic {
        (0..n).map(row).collect()
    } else {
        (0..n).into_par_iter().map(row).collect()
    };
    let mut ops = Operators {
        z: DMatrix::zeros(n, n),
        z_k: DMatrix::zeros(if derivs { n } else { 0 }, if derivs { n } else { 0 }),
        kt: DMatrix::zeros(n, n),
    };
    for (m, r) in rows.into_iter().enumerate() {
        for (j, b) in r? {
            ops.z[(m, j)] = b.z;
            ops.z[(j, m)] = b.z;
            if derivs {
                ops.z_k[(m, j)] = b.z_k;
                ops.z_k[(j, m)] = b.z_k;
            }
            ops.kt[(m, j)] = b.kt_mn;
            if j != m {
                ops.kt[(j, m)] = b.kt_nm;
            }
        }
    }
    Ok(ops)
}

/// Incident-field test integrals `(V, Ṽ, V')` for the given modes.
pub fn assemble_incident(
    mesh: &SurfaceMesh,
    modes: &ModeSet,
    k: f64,
    bc: BoundaryCondition,
    opts: &AssemblyOptions,
) -> (CMatrix, CMatrix, CMatrix) {
    let nm = modes.len();
    let rule = QuadratureRule::triangle(opts.outer_order);
    let row = |panel: &Panel| {
        let mut val = vec![ZERO; nm];
        let mut dn = vec![ZERO; nm];
        let mut kval = vec![ZERO; nm];
        let mut kdn = vec![ZERO; nm];
        let n = cvec(&panel.normal);
        for (q, w) in rule.mapped(panel) {
            let t = StandingTable::new(modes.l_max, k, &q);
            for p in 0..nm {
                val[p] -= t.value[p] * w;
                dn[p] -= t.gradient[p].dot(&n) * w;
                kval[p] -= t.kderiv[p] * w;
                kdn[p] -= t.kderiv_gradient[p].dot(&n) * w;
            }
        }
        (val, dn, kval, kdn)
    };
    let rows: Vec<_> = if opts.deterministic {
        mesh.panels.iter().map(row).collect()
    } else {
        mesh.panels.par_iter().map(row).collect()
    };
    let n = mesh.len();
    let mut v = DMatrix::zeros(n, nm);
    let mut vt = DMatrix::zeros(n, nm);
    let mut vk = DMatrix::zeros(n, nm);
    for (i, (val, dn, kval, kdn)) in rows.into_iter().enumerate() {
        for p in 0..nm {
            match bc {
                BoundaryCondition::SoundSoft => {
                    v[(i, p)] = val[p];
                    vt[(i, p)] = dn[p];
                    vk[(i, p)] = kval[p];
                }
                BoundaryCondition::SoundHard => {
                    v[(i, p)] = dn[p];
                    vt[(i, p)] = val[p];
                    vk[(i, p)] = kdn[p];
                }
            }
        }
    }
    (v, vt, vk)
}

fn check_inputs(mesh: &SurfaceMesh, k: f64, alpha: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return domain(format!("wavenumber must be positive, got {k}"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    let h = mesh.panels.iter().map(|p| p.diameter).fold(0.0, f64::max);
    if k * h > 1.0 {
        log::warn!("k·h = {:.3} exceeds 1; the mesh under-resolves the wavelength", k * h);
    }
    Ok(())
}

fn build(
    mesh: Arc<SurfaceMesh>,
    modes: &ModeSet,
    k: f64,
    bc: BoundaryCondition,
    alpha: f64,
    opts: &AssemblyOptions,
    derivs: bool,
) -> Result<BemSystem> {
    check_inputs(&mesh, k, alpha)?;
    let hard = bc == BoundaryCondition::SoundHard;
    let ops = assemble_operators(&mesh, k, hard, derivs, opts)?;
    let (v, v_tilde, v_k) = assemble_incident(&mesh, modes, k, bc, opts);
    let half = Complex64::new(if hard { -0.5 } else { 0.5 }, 0.0);
    let mut z_tilde = if hard { ops.kt.transpose() } else { ops.kt };
    for (i, p) in mesh.panels.iter().enumerate() {
        z_tilde[(i, i)] += half * p.area;
    }
    Ok(BemSystem {
        bc,
        k,
        alpha,
        coupling: opts.coupling,
        modes: modes.clone(),
        mesh,
        z: ops.z,
        z_tilde,
        v,
        v_tilde,
        z_prime: derivs.then_some(ops.z_k),
        v_prime: derivs.then_some(v_k),
    })
}

/// Assemble `Z`, `Z̃`, `V`, `Ṽ`.
pub fn assemble_system(
    mesh: Arc<SurfaceMesh>,
    modes: &ModeSet,
    k: f64,
    bc: BoundaryCondition,
    alpha: f64,
    opts: &AssemblyOptions,
) -> Result<BemSystem> {
    build(mesh, modes, k, bc, alpha, opts, false)
}

/// Assemble everything including `Z'` and `V'` in a single pass.
pub fn assemble_system_with_kderivs(
    mesh: Arc<SurfaceMesh>,
    modes: &ModeSet,
    k: f64,
    bc: BoundaryCondition,
    alpha: f64,
    opts: &AssemblyOptions,
) -> Result<BemSystem> {
    build(mesh, modes, k, bc, alpha, opts, true)
}

/// Populate `Z'` and `V'` on an assembled system.
pub fn assemble_kderivs(mut system: BemSystem, opts: &AssemblyOptions) -> Result<BemSystem> {
    let hard = system.bc == BoundaryCondition::SoundHard;
    let ops = assemble_operators(&system.mesh, system.k, hard, true, opts)?;
    let (_, _, v_k) = assemble_incident(&system.mesh, &system.modes, system.k, system.bc, opts);
    system.z_prime = Some(ops.z_k);
    system.v_prime = Some(v_k);
    Ok(system)
}

/// `‖Z - Z* + (j/2k) V* Vᵀ‖_F / ‖Z - Z*‖_F` (absolute when the denominator
/// vanishes).
pub fn identity_residual_with(z: &CMatrix, v: &CMatrix, k: f64) -> f64 {
    let diff = z - z.conjugate();
    let lhs = &diff + v.conjugate() * v.transpose() * Complex64::new(0.0, 0.5 / k);
    let den = diff.norm();
    if den < 1e-14 {
        lhs.norm()
    } else {
        lhs.norm() / den
    }
}

pub fn identity_residual(system: &BemSystem) -> f64 {
    identity_residual_with(&system.z, &system.v, system.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::icosphere;
    use crate::mesh::Point;
    use crate::specfun::{sph_j_array, ModeSet};

    fn sphere(level: usize) -> Arc<SurfaceMesh> {
        Arc::new(icosphere(level, 1.0).unwrap())
    }

    fn opts() -> AssemblyOptions {
        AssemblyOptions {
            deterministic: true,
            ..Default::default()
        }
    }

    #[test]
    fn static_limit_for_distant_panels() {
        let a = Panel::new([
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ]);
        let b = Panel::new([
            Point::new(0.0, 0.0, 20.0),
            Point::new(0.0, 1.0, 20.0),
            Point::new(1.0, 0.0, 20.0),
        ]);
        let rules = Rules {
            outer: QuadratureRule::triangle(3),
            inner: QuadratureRule::triangle(6),
        };
        let z = far_pair(&a, &b, 1e-3, &rules, false, false).z;
        let approx = a.area * b.area / (FOUR_PI * (a.centroid - b.centroid).norm());
        assert!((z.re - approx).abs() < 1e-2 * approx);
    }

    #[test]
    fn sphere_soft_properties() {
        let mesh = sphere(1);
        let modes = ModeSet::with_lmax(2);
        let s = assemble_system_with_kderivs(mesh.clone(), &modes, 1.0, BoundaryCondition::SoundSoft, 0.5, &opts())
            .unwrap();
        assert_eq!(s.z, s.z.transpose());
        for i in 0..s.n_panels() {
            assert!(s.z[(i, i)].im < 0.0);
        }
        // monopole incident column against centroid sampling
        let c = Complex64::new(0.0, 2.0 * 1.0) / (4.0 * PI).sqrt();
        for (i, p) in mesh.panels.iter().enumerate() {
            let approx = -c * sph_j_array(0, p.centroid.norm())[0] * p.area;
            assert!((s.v[(i, 0)] - approx).norm() < 2e-2 * approx.norm());
        }
        // convex-combination endpoints are exact
        let mut a0 = s.clone();
        a0.alpha = 0.0;
        assert_eq!(a0.z_hat(), s.z);
        let mut a1 = s.clone();
        a1.alpha = 1.0;
        assert_eq!(a1.z_hat(), s.z_tilde);
    }

    #[test]
    fn zprime_self_term_at_small_k() {
        let mesh = sphere(0);
        let modes = ModeSet::with_lmax(0);
        let s = assemble_system_with_kderivs(mesh.clone(), &modes, 1e-14, BoundaryCondition::SoundSoft, 0.5, &opts())
            .unwrap();
        let zp = s.z_prime().unwrap();
        let a = mesh.panels[0].area;
        let expect = Complex64::new(0.0, -1.0 / FOUR_PI) * a * a;
        assert!((zp[(0, 0)] - expect).norm() < 1e-12);
    }

    fn fd_check(bc: BoundaryCondition, tol: f64) {
        let mesh = sphere(1);
        let modes = ModeSet::with_lmax(3);
        let k = 1.3;
        let h = 1e-4 * k;
        let s = assemble_system_with_kderivs(mesh.clone(), &modes, k, bc, 0.5, &opts()).unwrap();
        let up = assemble_system(mesh.clone(), &modes, k + h, bc, 0.5, &opts()).unwrap();
        let dn = assemble_system(mesh, &modes, k - h, bc, 0.5, &opts()).unwrap();
        let fz = (&up.z - &dn.z) / Complex64::new(2.0 * h, 0.0);
        let fv = (&up.v - &dn.v) / Complex64::new(2.0 * h, 0.0);
        let zp = s.z_prime().unwrap();
        let vp = s.v_prime().unwrap();
        let scale_z = zp.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let worst_z = (zp - &fz).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(worst_z < tol * scale_z, "Z' {worst_z} vs {scale_z}");
        let scale_v = vp.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let worst_v = (vp - &fv).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(worst_v < tol * scale_v, "V' {worst_v} vs {scale_v}");
    }

    #[test]
    fn soft_derivatives_match_finite_differences() {
        fd_check(BoundaryCondition::SoundSoft, 1e-6);
    }

    #[test]
    fn hard_derivatives_match_finite_differences() {
        fd_check(BoundaryCondition::SoundHard, 1e-6);
    }

    #[test]
    fn identity_residual_decreases_with_margin() {
        let mesh = sphere(2);
        let k = 1.0;
        let base = ModeSet::with_lmax(3);
        let s = assemble_system(mesh.clone(), &base, k, BoundaryCondition::SoundSoft, 0.5, &opts()).unwrap();
        let mut last = f64::INFINITY;
        for margin in 0..=5 {
            let ext = base.extended(margin);
            let (v, _, _) = assemble_incident(&mesh, &ext, k, BoundaryCondition::SoundSoft, &opts());
            let r = identity_residual_with(&s.z, &v, k);
            // non-increasing down to the rounding floor
            assert!(r <= last * (1.0 + 1e-6) + 1e-12, "margin {margin}: {r} > {last}");
            last = r;
        }
        assert!(last < 5e-3, "{last}");
    }

    #[test]
    fn hard_identity_residual() {
        let mesh = sphere(2);
        let k = 1.0;
        let modes = ModeSet::with_lmax(8);
        let s = assemble_system(mesh, &modes, k, BoundaryCondition::SoundHard, 1.0, &opts()).unwrap();
        assert!(identity_residual(&s) < 1e-2, "{}", identity_residual(&s));
    }

    #[test]
    fn parallel_and_sequential_assembly_agree_bitwise() {
        let mesh = sphere(1);
        let modes = ModeSet::with_lmax(2);
        let a = assemble_system(mesh.clone(), &modes, 1.1, BoundaryCondition::SoundSoft, 0.5, &opts()).unwrap();
        let par = AssemblyOptions::default();
        let b = assemble_system(mesh, &modes, 1.1, BoundaryCondition::SoundSoft, 0.5, &par).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.z_tilde, b.z_tilde);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mesh = sphere(0);
        let modes = ModeSet::with_lmax(0);
        assert!(assemble_system(mesh.clone(), &modes, -1.0, BoundaryCondition::SoundSoft, 0.5, &opts()).is_err());
        assert!(assemble_system(mesh, &modes, 1.0, BoundaryCondition::SoundSoft, 1.5, &opts()).is_err());
    }
}
