//! File formats for matrices and surface densities.
//!
//! WSBM1 layout: the 5 magic bytes `WSBM1`, then `rows` and `cols` as
//! little-endian `u64`, then `rows·cols` entries in column-major order, each
//! as little-endian `f64` real part followed by imaginary part.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::CMatrix;

pub const WSBM_MAGIC: &[u8; 5] = b"WSBM1";

pub fn write_wsbm<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    w.write_all(WSBM_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.len());
    for z in m.iter() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_wsbm<R: Read>(mut r: R) -> Result<CMatrix> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != WSBM_MAGIC {
        return Err(Error::Validation("not a WSBM1 file".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let count = rows
        .checked_mul(cols)
        .filter(|c| c.checked_mul(16).is_some())
        .ok_or_else(|| Error::Validation(format!("implausible WSBM1 shape {rows}x{cols}")))?;
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() != 16 * count {
        return Err(Error::Validation(format!(
            "WSBM1 payload has {} bytes, expected {}",
            data.len(),
            16 * count
        )));
    }
    let f = |i: usize| f64::from_le_bytes(data[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    Ok(CMatrix::from_iterator(
        rows,
        cols,
        (0..count).map(|i| Complex64::new(f(2 * i), f(2 * i + 1))),
    ))
}

pub fn save_wsbm(path: &Path, m: &CMatrix) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_wsbm(std::io::BufWriter::new(file), m)
}

pub fn load_wsbm(path: &Path) -> Result<CMatrix> {
    read_wsbm(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// One line per row; each entry written as `re,im`.
pub fn matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:e},{:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<CMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })?;
        if !vals.len().is_multiple_of(2) {
            return Err(Error::Parse { line: n + 1, msg: "odd number of values".into() });
        }
        rows.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    let cols = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Parse { line: bad + 1, msg: "ragged row".into() });
    }
    Ok(CMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Classification of a delay relative to the threshold `eps`.
pub fn classify_delay(delay: f64, eps: f64) -> &'static str {
    if delay.abs() <= eps {
        "zero"
    } else if delay < 0.0 {
        "negative"
    } else {
        "positive"
    }
}

/// `index,delay,spatial` rows, ascending.
pub fn eigenvalues_csv(delays: &[f64], spatial: &[f64]) -> String {
    let mut out = String::from("index,delay,spatial\n");
    for (i, (d, s)) in delays.iter().zip(spatial).enumerate() {
        let _ = writeln!(out, "{i},{d:e},{s:e}");
    }
    out
}

/// Legacy ASCII VTK polydata with the real part of `values` as cell data.
pub fn vtk_panels(mesh: &SurfaceMesh, values: &[Complex64], name: &str) -> Result<String> {
    if values.len() != mesh.len() {
        return Err(Error::Dimension(format!(
            "{} values for {} panels",
            values.len(),
            mesh.len()
        )));
    }
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{name}");
    out.push_str("ASCII\nDATASET POLYDATA\n");
    let _ = writeln!(out, "POINTS {} double", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    let _ = writeln!(out, "POLYGONS {} {}", mesh.triangles.len(), 4 * mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_DATA {}", mesh.len());
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{:e}", v.re);
    }
    Ok(out)
}
