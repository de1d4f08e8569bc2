//! Scattering matrix, its wavenumber derivative, the time-delay matrix by
//! both routes, and the delay eigenmodes.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{assemble_incident, AssemblyOptions, BemSystem};
use crate::solver::DensitySolution;
use crate::specfun::ModeSet;
use crate::CMatrix;

const J: Complex64 = Complex64::new(0.0, 1.0);

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `Ī`: entry `(p̂, p)` is `(-1)^{1+l+m}`, all else zero.
pub fn ibar(modes: &ModeSet) -> CMatrix {
    let m = modes.len();
    let mut out = CMatrix::zeros(m, m);
    for p in modes.iter() {
        out[(p.hat().p, p.p)] = c(p.ibar_sign());
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub s: CMatrix,
    /// `P = S - Ī`.
    pub p: CMatrix,
    pub ibar: CMatrix,
    pub s_prime: Option<CMatrix>,
}

fn check_densities(j: &CMatrix, system: &BemSystem) -> Result<()> {
    if j.nrows() != system.n_panels() || j.ncols() != system.n_modes() {
        return Err(Error::Dimension(format!(
            "densities are {}x{}, system has {} panels and {} modes",
            j.nrows(),
            j.ncols(),
            system.n_panels(),
            system.n_modes()
        )));
    }
    Ok(())
}

/// `S = Ī + (j/2k) Vᵀ J`.
pub fn scattering_matrix(j: &CMatrix, system: &BemSystem) -> Result<ScatteringResult> {
    check_densities(j, system)?;
    let ib = ibar(&system.modes);
    let p = system.v.transpose() * j * (J / (2.0 * system.k));
    Ok(ScatteringResult {
        s: &ib + &p,
        p,
        ibar: ib,
        s_prime: None,
    })
}

/// `S' = -(j/2k²) VᵀJ + (j/2k) V'ᵀJ + (j/2k) JᵀV' - (j/2k) JᵀZ'J`.
pub fn scattering_matrix_kderiv(j: &CMatrix, system: &BemSystem) -> Result<CMatrix> {
    check_densities(j, system)?;
    let k = system.k;
    let zp = system.z_prime()?;
    let vp = system.v_prime()?;
    let jt = j.transpose();
    let a = J / (2.0 * k);
    Ok(system.v.transpose() * j * (-a / k) + vp.transpose() * j * a + &jt * vp * a - &jt * zp * j * a)
}

/// `Q = j S† S'`.
pub fn ws_matrix_indirect(s: &CMatrix, s_prime: &CMatrix) -> Result<CMatrix> {
    if !s.is_square() || s.shape() != s_prime.shape() {
        return Err(Error::Dimension(format!(
            "S is {:?} and S' is {:?}",
            s.shape(),
            s_prime.shape()
        )));
    }
    Ok(s.adjoint() * s_prime * J)
}

/// Incident matrices `(V, V')` over `modes` extended by `margin` degrees,
/// used for the mode sum in the last term of the direct route.
pub fn extended_incident(system: &BemSystem, margin: usize, opts: &AssemblyOptions) -> (CMatrix, CMatrix) {
    let modes = system.modes.extended(margin);
    let (v, _, vp) = assemble_incident(&system.mesh, &modes, system.k, system.bc, opts);
    (v, vp)
}

/// Direct route:
/// `-(1/2k) J†V' - (1/2k) V'†J + (1/4k²) J†(Z+Z*)J + (1/4k) J†(Z'+Z'*)J
///  + (j/8k²) J†(V* V'ᵀ - V'* Vᵀ)J`.
///
/// `extended` supplies `(V, V')` over a larger mode set for the last term;
/// by default the port modes are used.
pub fn ws_matrix_direct(
    j: &CMatrix,
    system: &BemSystem,
    extended: Option<(&CMatrix, &CMatrix)>,
) -> Result<CMatrix> {
    check_densities(j, system)?;
    let k = system.k;
    let zp = system.z_prime()?;
    let vp = system.v_prime()?;
    let (ve, vpe) = extended.unwrap_or((&system.v, vp));
    if ve.nrows() != j.nrows() || vpe.shape() != ve.shape() {
        return Err(Error::Dimension("extended incident matrices do not match the mesh".into()));
    }
    let jh = j.adjoint();
    let t1 = &jh * vp * c(-0.5 / k);
    let t2 = t1.adjoint();
    let z = &system.z + system.z.conjugate();
    let t3 = &jh * z * j * c(0.25 / (k * k));
    let zz = zp + zp.conjugate();
    let t4 = &jh * zz * j * c(0.25 / k);
    // J†V* is (VᵀJ)^*, so the N×N product never forms
    let a = ve.transpose() * j;
    let b = vpe.transpose() * j;
    let t5 = (a.adjoint() * &b - b.adjoint() * &a) * (J / (8.0 * k * k));
    Ok(t1 + t2 + t3 + t4 + t5)
}

/// `(Q + Q†)/2`.
pub fn symmetrize(q: &CMatrix) -> CMatrix {
    (q + q.adjoint()) * c(0.5)
}

#[derive(Debug, Clone)]
pub struct WsModes {
    /// Eigenvalues of the symmetrized `Q` in length units, ascending.
    pub spatial: Vec<f64>,
    /// The same divided by the wave speed.
    pub delays: Vec<f64>,
    pub w: CMatrix,
    /// `J W`: surface density of each delay mode.
    pub sigma: CMatrix,
}

/// Diagonalize a Hermitian `Q`. Each eigenvector is scaled so its
/// largest-magnitude entry is real and positive.
pub fn ws_modes(q: &CMatrix, j: &CMatrix, v: f64) -> Result<WsModes> {
    if !q.is_square() || j.ncols() != q.nrows() {
        return Err(Error::Dimension(format!(
            "Q is {:?}, densities are {:?}",
            q.shape(),
            j.shape()
        )));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!("wave speed must be positive, got {v}")));
    }
    let m = q.nrows();
    if m == 0 {
        return Ok(WsModes {
            spatial: Vec::new(),
            delays: Vec::new(),
            w: CMatrix::zeros(0, 0),
            sigma: CMatrix::zeros(j.nrows(), 0),
        });
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("Q has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(q.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut w = CMatrix::zeros(m, m);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, x)| if x.norm() > best.1 { (i, x.norm()) } else { best });
        let phase = v[imax].conj() / v[imax].norm();
        w.set_column(col, &(v * phase));
    }
    let spatial: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(WsModes {
        delays: spatial.iter().map(|x| x / v).collect(),
        spatial,
        sigma: j * &w,
        w,
    })
}

/// `‖S†S - I‖_F / √M`.
pub fn unitarity_defect(s: &CMatrix) -> f64 {
    let m = s.nrows();
    if m == 0 {
        return 0.0;
    }
    (s.adjoint() * s - CMatrix::identity(m, m)).norm() / (m as f64).sqrt()
}

/// `‖S - Sᵀ‖_F / ‖S‖_F`.
pub fn symmetry_defect(s: &CMatrix) -> f64 {
    let n = s.norm();
    if n == 0.0 {
        0.0
    } else {
        (s - s.transpose()).norm() / n
    }
}

/// `‖Q_direct - Q_indirect‖_F / ‖Q_indirect‖_F` (absolute when both vanish).
pub fn cross_route_gap(q_direct: &CMatrix, q_indirect: &CMatrix) -> f64 {
    let d = (q_direct - q_indirect).norm();
    let n = q_indirect.norm().max(q_direct.norm());
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

/// Modal coefficient `s_p = S_{p̂p} (-1)^{1+l+m}` for each mode.
pub fn modal_coefficients(s: &CMatrix, modes: &ModeSet) -> Vec<Complex64> {
    modes.iter().map(|p| s[(p.hat().p, p.p)] * p.ibar_sign()).collect()
}

#[derive(Debug, Clone)]
pub struct WsResult {
    pub scattering: ScatteringResult,
    pub q_direct: Option<CMatrix>,
    pub q_indirect: Option<CMatrix>,
    /// Symmetrized matrix used for the eigen-analysis.
    pub q: CMatrix,
    pub modes: WsModes,
    pub diagnostics: WsDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct WsDiagnostics {
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
    pub cross_route_gap: Option<f64>,
    pub q_anti_hermitian: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Direct,
    Indirect,
    #[default]
    Both,
}

/// Everything downstream of the density solve. The indirect route feeds the
/// eigen-analysis when both are computed: the direct route's `J†ZJ` term
/// converges only at first order for sound-hard pulse densities.
pub fn analyze(
    system: &BemSystem,
    solution: &DensitySolution,
    route: Route,
    v: f64,
    extended: Option<(&CMatrix, &CMatrix)>,
) -> Result<WsResult> {
    let j = &solution.j;
    let mut scattering = scattering_matrix(j, system)?;
    let sp = scattering_matrix_kderiv(j, system)?;
    let q_indirect = match route {
        Route::Direct => None,
        _ => Some(ws_matrix_indirect(&scattering.s, &sp)?),
    };
    let q_direct = match route {
        Route::Indirect => None,
        _ => Some(ws_matrix_direct(j, system, extended)?),
    };
    scattering.s_prime = Some(sp);
    let raw = q_indirect.as_ref().or(q_direct.as_ref()).expect("at least one route");
    let q = symmetrize(raw);
    let q_anti_hermitian = (raw - raw.adjoint()).norm() * 0.5;
    let modes = ws_modes(&q, j, v)?;
    let cross_route_gap = match (&q_direct, &q_indirect) {
        (Some(d), Some(i)) => Some(cross_route_gap(d, i)),
        _ => None,
    };
    let identity_residual = match extended {
        Some((ve, _)) => crate::operators::identity_residual_with(&system.z, ve, system.k),
        None => crate::operators::identity_residual(system),
    };
    let diagnostics = WsDiagnostics {
        unitarity_defect: unitarity_defect(&scattering.s),
        symmetry_defect: symmetry_defect(&scattering.s),
        cross_route_gap,
        q_anti_hermitian,
        identity_residual,
    };
    Ok(WsResult {
        scattering,
        q_direct,
        q_indirect,
        q,
        modes,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::icosphere;
    use crate::mesh::SurfaceMesh;
    use crate::operators::{assemble_system_with_kderivs, BoundaryCondition};
    use crate::oracle::{mie_scattering, MieSphere};
    use crate::solver::solve_densities;
    use std::sync::Arc;

    fn sphere_run(level: usize, k: f64, bc: BoundaryCondition, lmax: usize) -> (BemSystem, DensitySolution) {
        let mesh = Arc::new(icosphere(level, 1.0).unwrap());
        let modes = ModeSet::with_lmax(lmax);
        let opts = AssemblyOptions::default();
        let sys = assemble_system_with_kderivs(mesh, &modes, k, bc, bc.default_alpha(), &opts).unwrap();
        let sol = solve_densities(&sys, 1e-8).unwrap();
        (sys, sol)
    }

    #[test]
    fn ibar_is_unitary_and_symmetric() {
        let ib = ibar(&ModeSet::with_lmax(4));
        assert_eq!(unitarity_defect(&ib), 0.0);
        assert_eq!(symmetry_defect(&ib), 0.0);
    }

    #[test]
    fn empty_mesh_is_trivial() {
        let modes = ModeSet::with_lmax(3);
        let sys = assemble_system_with_kderivs(
            Arc::new(SurfaceMesh::empty()),
            &modes,
            2.0,
            BoundaryCondition::SoundSoft,
            0.5,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let sol = solve_densities(&sys, 1e-10).unwrap();
        let r = analyze(&sys, &sol, Route::Both, 1.0, None).unwrap();
        assert_eq!(r.scattering.s, ibar(&modes));
        assert_eq!(r.q_direct.as_ref().unwrap().norm(), 0.0);
        assert_eq!(r.q_indirect.as_ref().unwrap().norm(), 0.0);
        assert!(r.modes.spatial.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn constant_s_gives_zero_q() {
        let s = ibar(&ModeSet::with_lmax(2));
        let q = ws_matrix_indirect(&s, &CMatrix::zeros(9, 9)).unwrap();
        assert_eq!(q.norm(), 0.0);
        assert!(ws_matrix_indirect(&s, &CMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn diagonal_q_eigen() {
        let q = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(-1.0), c(2.0)]));
        let r = ws_modes(&q, &CMatrix::identity(3, 3), 2.0).unwrap();
        assert_eq!(r.spatial, vec![-1.0, 2.0, 3.0]);
        assert_eq!(r.delays, vec![-0.5, 1.0, 1.5]);
        assert!((r.w[(1, 0)] - c(1.0)).norm() < 1e-15);
        assert!((r.w[(2, 1)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let m = 7;
        let a = CMatrix::from_fn(m, m, |i, j| Complex64::new((i * 3 + j) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0 - 1.0));
        let q = symmetrize(&a);
        let r = ws_modes(&q, &CMatrix::identity(m, m), 1.0).unwrap();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, r.spatial.iter().map(|x| c(*x))));
        let rec = &r.w * d * r.w.adjoint();
        assert!((rec - &q).norm() < 1e-10 * q.norm());
        assert!((r.w.adjoint() * &r.w - CMatrix::identity(m, m)).norm() < 1e-10);
        for col in 0..m {
            let v = r.w.column(col);
            let big = v.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(big.im.abs() < 1e-14 && big.re > 0.0);
        }
    }

    #[test]
    fn sphere_matches_mie_at_level_two() {
        let (k, lmax) = (1.0, 3);
        let (sys, sol) = sphere_run(2, k, BoundaryCondition::SoundSoft, lmax);
        let r = analyze(&sys, &sol, Route::Both, 1.0, None).unwrap();
        let mie = mie_scattering(&MieSphere { a: 1.0, bc: BoundaryCondition::SoundSoft, k, l_max: lmax }).unwrap();
        let s = modal_coefficients(&r.scattering.s, &sys.modes);
        for p in sys.modes.iter() {
            let e = mie.s_l[p.l];
            assert!((s[p.p] / e).arg().abs().to_degrees() < 5.0, "l={} {} vs {}", p.l, s[p.p], e);
        }
        let mono = r.modes.spatial[0];
        assert!(r.modes.spatial.iter().all(|x| *x < 0.0));
        assert!((r.q[(0, 0)].re + 2.0).abs() < 0.05 * 2.0, "{mono}");
        assert!(r.diagnostics.cross_route_gap.unwrap() < 0.05);
    }

    #[test]
    fn hard_sphere_matches_mie_at_level_two() {
        let (k, lmax) = (1.0, 3);
        let (sys, sol) = sphere_run(2, k, BoundaryCondition::SoundHard, lmax);
        let r = analyze(&sys, &sol, Route::Both, 1.0, None).unwrap();
        let mie = mie_scattering(&MieSphere { a: 1.0, bc: BoundaryCondition::SoundHard, k, l_max: lmax }).unwrap();
        let s = modal_coefficients(&r.scattering.s, &sys.modes);
        for p in sys.modes.iter() {
            let e = mie.s_l[p.l];
            assert!((s[p.p] / e).arg().abs().to_degrees() < 5.0, "l={} {} vs {}", p.l, s[p.p], e);
        }
        let qd = r.q_direct.as_ref().unwrap();
        for p in sys.modes.iter() {
            let e = mie.q[(p.p, p.p)].re;
            assert!((r.q[(p.p, p.p)].re - e).abs() < 0.05 * e.abs().max(0.2), "l={}", p.l);
            assert!((qd[(p.p, p.p)].re - e).abs() < 0.25 * e.abs().max(0.2), "l={}", p.l);
        }
    }

    #[test]
    fn s_prime_matches_finite_difference() {
        let (k, lmax, level) = (1.0, 2, 1);
        let (sys, sol) = sphere_run(level, k, BoundaryCondition::SoundSoft, lmax);
        let sp = scattering_matrix_kderiv(&sol.j, &sys).unwrap();
        let d = 1e-3 * k;
        let s_at = |kk: f64| {
            let (sys, sol) = sphere_run(level, kk, BoundaryCondition::SoundSoft, lmax);
            scattering_matrix(&sol.j, &sys).unwrap().s
        };
        let fd = (s_at(k + d) - s_at(k - d)) / c(2.0 * d);
        assert!((&sp - &fd).norm() / fd.norm() < 1e-2);
    }

    #[test]
    fn missing_derivatives_are_reported() {
        let mesh = Arc::new(icosphere(0, 1.0).unwrap());
        let modes = ModeSet::with_lmax(1);
        let sys = crate::operators::assemble_system(
            mesh,
            &modes,
            1.0,
            BoundaryCondition::SoundSoft,
            0.5,
            &AssemblyOptions::default(),
        )
        .unwrap();
        let sol = solve_densities(&sys, 1e-8).unwrap();
        assert!(matches!(scattering_matrix_kderiv(&sol.j, &sys), Err(Error::Missing(_))));
        assert!(matches!(ws_matrix_direct(&sol.j, &sys, None), Err(Error::Missing(_))));
        assert!(scattering_matrix(&CMatrix::zeros(3, 4), &sys).is_err());
    }
}
