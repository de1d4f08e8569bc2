//! End-to-end commands behind the CLI.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::export::{classify_delay, eigenvalues_csv, matrix_csv, vtk_panels, write_wsbm};
use crate::mesh::{MeshSummary, SurfaceMesh};
use crate::operators::{assemble_system_with_kderivs, BemSystem};
use crate::oracle::{mie_scattering, MieSphere};
use crate::solver::{solve_densities, DensitySolution, SolveReport};
use crate::wsm::{analyze, extended_incident, modal_coefficients, WsDiagnostics, WsResult};
use crate::CMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Exit status for an error: bad or missing input is 2, everything else 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Mesh(_)
        | Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Missing(_) => EXIT_INPUT,
        _ => EXIT_VALIDATION,
    }
}

/// Machine-readable error record.
pub fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::SingularPoint(_) => "singular_point",
        Error::Parse { .. } => "parse",
        Error::Mesh(_) => "mesh",
        Error::Quadrature { .. } => "quadrature",
        Error::IllConditioned { .. } => "ill_conditioned",
        Error::Dimension(_) => "dimension",
        Error::Missing(_) => "missing",
        Error::Eigen(_) => "eigen",
        Error::Config(_) => "config",
        Error::Validation(_) => "validation",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    let mut v = serde_json::json!({ "error": kind, "message": e.to_string(), "exit_code": exit_code(e) });
    match e {
        Error::Parse { line, .. } => v["line"] = (*line).into(),
        Error::IllConditioned { estimate } => v["condition_estimate"] = (*estimate).into(),
        _ => {}
    }
    v
}

/// Apply `WSBEM_OUTPUT_DIR`.
pub fn apply_env(cfg: &mut RunConfig) {
    if let Ok(dir) = std::env::var("WSBEM_OUTPUT_DIR") {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
}

/// Read a run configuration, or the configuration echoed in a manifest.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if value.get("manifest_version").is_some() {
        let cfg: RunConfig =
            serde_json::from_value(value["config"].clone()).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        return Ok(cfg);
    }
    RunConfig::from_path(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub assembly_s: f64,
    pub solve_s: f64,
    pub analysis_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub mesh: MeshSummary,
    pub l_max: usize,
    pub n_modes: usize,
    pub n_panels: usize,
    pub alpha: f64,
    pub solve: SolveReport,
    pub diagnostics: WsDiagnostics,
    pub delays: Vec<f64>,
    pub timings: Timings,
    pub files: Vec<FileRecord>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn matrix(&mut self, stem: &str, m: &CMatrix) -> Result<()> {
        let mut buf = Vec::new();
        write_wsbm(&mut buf, m)?;
        self.put(&format!("{stem}.wsbm"), &buf)?;
        self.put(&format!("{stem}.csv"), matrix_csv(m).as_bytes())
    }
}

/// In-memory result of a run.
pub struct RunOutput {
    pub system: BemSystem,
    pub solution: DensitySolution,
    pub result: WsResult,
    pub manifest: Manifest,
}

/// Assemble, solve and analyze without writing anything.
pub fn compute(cfg: &RunConfig, mesh: SurfaceMesh) -> Result<(BemSystem, DensitySolution, WsResult, Timings)> {
    cfg.validate()?;
    let t0 = Instant::now();
    let modes = cfg.mode_set(&mesh)?;
    let opts = cfg.assembly();
    log::info!("{} panels, l_max = {}, {} modes", mesh.len(), modes.l_max, modes.len());
    let system = assemble_system_with_kderivs(Arc::new(mesh), &modes, cfg.k, cfg.bc, cfg.alpha(), &opts)?;
    let ext = (cfg.identity_margin > 0).then(|| extended_incident(&system, cfg.identity_margin, &opts));
    let t1 = Instant::now();
    let solution = solve_densities(&system, cfg.solver_tolerance)?;
    let t2 = Instant::now();
    let result = analyze(&system, &solution, cfg.route, cfg.v, ext.as_ref().map(|(a, b)| (a, b)))?;
    let t3 = Instant::now();
    let timings = Timings {
        assembly_s: (t1 - t0).as_secs_f64(),
        solve_s: (t2 - t1).as_secs_f64(),
        analysis_s: (t3 - t2).as_secs_f64(),
        total_s: (t3 - t0).as_secs_f64(),
    };
    Ok((system, solution, result, timings))
}

/// Full pipeline with artifacts and manifest in `cfg.output_dir`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    let mesh = cfg.load_mesh()?;
    let summary = mesh.summary();
    let (system, solution, result, timings) = compute(cfg, mesh)?;
    let mut w = Writer::new(&cfg.output_dir)?;
    w.matrix("S", &result.scattering.s)?;
    if let Some(sp) = &result.scattering.s_prime {
        w.matrix("Sprime", sp)?;
    }
    if let Some(q) = &result.q_direct {
        w.matrix("Q_direct", q)?;
    }
    if let Some(q) = &result.q_indirect {
        w.matrix("Q_indirect", q)?;
    }
    w.matrix("Q", &result.q)?;
    w.matrix("W", &result.modes.w)?;
    let mut jbuf = Vec::new();
    write_wsbm(&mut jbuf, &solution.j)?;
    w.put("J.wsbm", &jbuf)?;
    w.put(
        "eigenvalues.csv",
        eigenvalues_csv(&result.modes.delays, &result.modes.spatial).as_bytes(),
    )?;
    if system.n_panels() > 0 {
        for q in 0..result.modes.sigma.ncols() {
            let col: Vec<_> = result.modes.sigma.column(q).iter().copied().collect();
            let vtk = vtk_panels(&system.mesh, &col, &format!("sigma_ws_{q}"))?;
            w.put(&format!("modes/mode_{q:04}.vtk"), vtk.as_bytes())?;
        }
    }
    let manifest = Manifest {
        manifest_version: 1,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        mesh: summary,
        l_max: system.modes.l_max,
        n_modes: system.n_modes(),
        n_panels: system.n_panels(),
        alpha: system.alpha,
        solve: solution.report(),
        diagnostics: result.diagnostics.clone(),
        delays: result.modes.delays.clone(),
        timings,
        files: w.files.clone(),
    };
    std::fs::write(
        cfg.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(RunOutput {
        system,
        solution,
        result,
        manifest,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereRow {
    pub l: usize,
    pub s_mie: [f64; 2],
    /// Largest `||s| - 1|` over `m`.
    pub magnitude_error: f64,
    /// Largest phase error over `m`, degrees.
    pub phase_error_deg: f64,
    pub delay_mie: f64,
    /// Mean of the eigenvalues assigned to this degree, time units.
    pub delay: f64,
    /// `|delay - delay_mie| / max_l |delay_mie|`.
    pub delay_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereReport {
    pub radius: f64,
    pub ka: f64,
    pub n_panels: usize,
    pub rows: Vec<SphereRow>,
    pub monopole_relative_error: f64,
    pub pass: bool,
}

impl SphereReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>3} {:>12} {:>12} {:>12} {:>12} {:>10}  status\n",
            "l", "|s|-1", "phase(deg)", "delay", "mie delay", "delay err"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>3} {:>12.3e} {:>12.4} {:>12.5e} {:>12.5e} {:>10.2e}  {}\n",
                r.l,
                r.magnitude_error,
                r.phase_error_deg,
                r.delay,
                r.delay_mie,
                r.delay_error,
                if r.pass { "ok" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "monopole delay relative error {:.3e}; overall {}\n",
            self.monopole_relative_error,
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Compare a sphere run with the analytic solution. Eigenvalues are matched
/// to degrees after sorting both spectra.
pub fn sphere_report(cfg: &RunConfig, system: &BemSystem, result: &WsResult) -> Result<SphereReport> {
    let radius = cfg.radius.unwrap_or_else(|| system.mesh.circumradius());
    let l_max = system.modes.l_max;
    let mie = mie_scattering(&MieSphere {
        a: radius,
        bc: system.bc,
        k: system.k,
        l_max,
    })?;
    let s = modal_coefficients(&result.scattering.s, &system.modes);
    let q_l: Vec<f64> = (0..=l_max)
        .map(|l| (mie.s_l[l].conj() * mie.ds_l[l] * crate::Complex64::new(0.0, 1.0)).re / cfg.v)
        .collect();
    let mut slots: Vec<(f64, usize)> = system.modes.iter().map(|p| (q_l[p.l], p.l)).collect();
    slots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sums = vec![0.0; l_max + 1];
    for ((_, l), d) in slots.iter().zip(&result.modes.delays) {
        sums[*l] += d;
    }
    let scale = q_l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = cfg.tolerances;
    let rows: Vec<SphereRow> = (0..=l_max)
        .map(|l| {
            let ms = system.modes.iter().filter(|p| p.l == l);
            let (mut mag, mut phase) = (0.0f64, 0.0f64);
            for p in ms {
                mag = mag.max((s[p.p].norm() - 1.0).abs());
                phase = phase.max((s[p.p] / mie.s_l[l]).arg().abs().to_degrees());
            }
            let delay = sums[l] / (2 * l + 1) as f64;
            let delay_error = (delay - q_l[l]).abs() / scale;
            SphereRow {
                l,
                s_mie: [mie.s_l[l].re, mie.s_l[l].im],
                magnitude_error: mag,
                phase_error_deg: phase,
                delay_mie: q_l[l],
                delay,
                delay_error,
                pass: mag <= tol.magnitude && phase <= tol.phase_deg && delay_error <= tol.delay_rel,
            }
        })
        .collect();
    let monopole_relative_error = ((rows[0].delay - q_l[0]) / q_l[0]).abs();
    let pass = rows.iter().all(|r| r.pass) && monopole_relative_error <= tol.delay_rel;
    Ok(SphereReport {
        radius,
        ka: system.k * radius,
        n_panels: system.n_panels(),
        rows,
        monopole_relative_error,
        pass,
    })
}

/// Run a sphere configuration and compare with the analytic solution;
/// a tolerance breach is an error carrying the table.
pub fn cmd_validate_sphere(cfg: &RunConfig) -> Result<SphereReport> {
    let mesh = cfg.load_mesh()?;
    if mesh.is_empty() {
        return Err(Error::Config("sphere validation needs a non-empty mesh".into()));
    }
    let (system, _, result, _) = compute(cfg, mesh)?;
    let report = sphere_report(cfg, &system, &result)?;
    if report.pass {
        Ok(report)
    } else {
        Err(Error::Validation(format!("sphere tolerances exceeded\n{}", report.table())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub delay: f64,
    pub class: &'static str,
}

/// Read `eigenvalues.csv` from a run directory, classify, and write
/// `spectrum.csv`. `eps` defaults to the run's configured threshold.
pub fn cmd_spectrum(dir: &Path, eps: Option<f64>) -> Result<Vec<SpectrumRow>> {
    let path = dir.join("eigenvalues.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Missing(format!("{}: {e}", path.display())))?;
    let eps = match eps {
        Some(e) => e,
        None => std::fs::read_to_string(dir.join("manifest.json"))
            .ok()
            .and_then(|m| serde_json::from_str::<serde_json::Value>(&m).ok())
            .and_then(|m| m["config"]["epsilon"].as_f64())
            .unwrap_or(1e-3),
    };
    let mut delays = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
        let field = line.split(',').nth(1).ok_or_else(|| Error::Parse {
            line: n + 1,
            msg: "missing delay column".into(),
        })?;
        let d: f64 = field.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
            line: n + 1,
            msg: e.to_string(),
        })?;
        delays.push(d);
    }
    delays.sort_by(f64::total_cmp);
    let rows: Vec<SpectrumRow> = delays
        .iter()
        .enumerate()
        .map(|(index, &delay)| SpectrumRow {
            index,
            delay,
            class: classify_delay(delay, eps),
        })
        .collect();
    let mut out = String::from("index,delay,class\n");
    for r in &rows {
        out.push_str(&format!("{},{:e},{}\n", r.index, r.delay, r.class));
    }
    std::fs::write(dir.join("spectrum.csv"), out)?;
    Ok(rows)
}
