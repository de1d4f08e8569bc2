//! Dense LU solve of `Ẑ J = V̂` for all incident modes at once.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::BemSystem;
use crate::CMatrix;

/// Factorizations whose 1-norm condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct DensitySolution {
    /// `N × M`; column `p` holds the panel coefficients of `σ_p`.
    pub j: CMatrix,
    /// `‖Ẑ J_p - V̂_p‖ / ‖V̂_p‖` per column.
    pub residuals: Vec<f64>,
    /// Estimate of `‖Ẑ‖₁ ‖Ẑ⁻¹‖₁`.
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub max_residual: f64,
    pub condition: f64,
}

impl DensitySolution {
    pub fn report(&self) -> SolveReport {
        SolveReport {
            max_residual: self.residuals.iter().copied().fold(0.0, f64::max),
            condition: self.condition,
        }
    }
}

fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct Factor {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factor {
    fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.lu.solve(b).expect("factor checked invertible")
    }

    /// `A^{-H} b` from the same factors: `P A = L U` gives `A^H = U^H L^H P`.
    fn solve_adjoint(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let uh = self.lu.u().adjoint();
        let lh = self.lu.l().adjoint();
        let w = uh.solve_lower_triangular(b).expect("nonzero pivots");
        let mut z = lh.solve_upper_triangular(&w).expect("unit diagonal");
        self.lu.p().inv_permute_rows(&mut z);
        z
    }
}

/// Hager–Higham lower bound on `‖A⁻¹‖₁`.
fn inverse_norm1_estimate(f: &Factor, n: usize) -> f64 {
    let mut x = DVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = f.solve(&x);
        est = y.iter().map(|v| v.norm()).sum::<f64>();
        let xi = y.map(|v| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) });
        let z = f.solve_adjoint(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if zmax <= z.dotc(&x).re || j == last_j {
            break;
        }
        last_j = j;
        x = DVector::zeros(n);
        x[j] = Complex64::new(1.0, 0.0);
    }
    // alternating-sign probe guards against the classic counterexamples
    let alt = DVector::from_fn(n, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
    });
    let y = f.solve(&alt);
    let alt_est = 2.0 * y.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
    est.max(alt_est)
}

/// Solve `A X = B` with one factorization; returns `(X, residuals, condition)`.
pub fn solve_dense(a: &CMatrix, b: &CMatrix, tolerance: f64) -> Result<DensitySolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension(format!(
            "system is {}x{} with right-hand side {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if n == 0 {
        return Ok(DensitySolution {
            j: CMatrix::zeros(0, b.ncols()),
            residuals: vec![0.0; b.ncols()],
            condition: 0.0,
        });
    }
    let f = Factor { lu: a.clone().lu() };
    if !f.lu.is_invertible() {
        return Err(Error::IllConditioned {
            estimate: f64::INFINITY,
        });
    }
    let condition = norm1(a) * inverse_norm1_estimate(&f, n);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            estimate: condition,
        });
    }
    let x = f.lu.solve(b).expect("factor checked invertible");
    let r = a * &x - b;
    let residuals: Vec<f64> = (0..b.ncols())
        .map(|p| {
            let bn = b.column(p).norm();
            let rn = r.column(p).norm();
            if bn > 0.0 {
                rn / bn
            } else {
                rn
            }
        })
        .collect();
    if let Some((p, worst)) = residuals
        .iter()
        .enumerate()
        .find(|(_, r)| !(**r <= tolerance))
    {
        return Err(Error::Validation(format!(
            "column {p} residual {worst:e} exceeds tolerance {tolerance:e}"
        )));
    }
    Ok(DensitySolution {
        j: x,
        residuals,
        condition,
    })
}

/// Solve the combined system of `system` for every mode.
pub fn solve_densities(system: &BemSystem, tolerance: f64) -> Result<DensitySolution> {
    solve_dense(&system.z_hat(), &system.v_hat(), tolerance)
}
