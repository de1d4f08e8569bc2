//! OFF and Gmsh v2 ASCII readers.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Point, SurfaceMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    Off,
    GmshV2,
}

impl MeshFormat {
    /// Guess from a file extension (`.off`, `.msh`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "msh" => Some(MeshFormat::GmshV2),
            _ => None,
        }
    }
}

pub fn load_mesh(bytes: &[u8], format: MeshFormat) -> Result<SurfaceMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("mesh is not valid UTF-8: {e}"),
    })?;
    let (v, t) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::GmshV2 => parse_gmsh(text)?,
    };
    SurfaceMesh::new(v, t)
}

pub fn load_mesh_file(path: &Path, format: Option<MeshFormat>) -> Result<SurfaceMesh> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| Error::Config(format!("cannot infer mesh format of {}", path.display())))?;
    load_mesh(&std::fs::read(path)?, format)
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str, comment: Option<char>) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(move |(i, l)| {
        let l = match comment {
            Some(c) => l.split(c).next().unwrap_or(""),
            None => l,
        };
        let l = l.trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} '{tok}'"),
    })
}

fn parse_off(text: &str) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let mut lines = content_lines(text, Some('#'));
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty OFF file".into(),
    })?;
    // counts may share the header line ("OFF 6 8 0")
    let rest = header.strip_prefix("OFF").ok_or(Error::Parse {
        line: hl,
        msg: "missing OFF header".into(),
    })?;
    let (cl, counts) = if rest.trim().is_empty() {
        lines.next().ok_or(Error::Parse {
            line: hl,
            msg: "missing element counts".into(),
        })?
    } else {
        (hl, rest)
    };
    let mut tok = counts.split_whitespace();
    let nv: usize = field(tok.next(), cl, "vertex count")?;
    let nf: usize = field(tok.next(), cl, "face count")?;
    let mut verts = Vec::with_capacity(nv);
    for i in 0..nv {
        let (l, s) = lines.next().ok_or(Error::Parse {
            line: cl,
            msg: format!("file ends after {i} of {nv} vertices"),
        })?;
        let mut tok = s.split_whitespace();
        let x = field(tok.next(), l, "x coordinate")?;
        let y = field(tok.next(), l, "y coordinate")?;
        let z = field(tok.next(), l, "z coordinate")?;
        verts.push(Point::new(x, y, z));
    }
    let mut tris = Vec::with_capacity(nf);
    for i in 0..nf {
        let (l, s) = lines.next().ok_or(Error::Parse {
            line: cl,
            msg: format!("file ends after {i} of {nf} faces"),
        })?;
        let mut tok = s.split_whitespace();
        let n: usize = field(tok.next(), l, "face size")?;
        if n != 3 {
            return Err(Error::Parse {
                line: l,
                msg: format!("only triangles are supported, face has {n} vertices"),
            });
        }
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            *v = field(tok.next(), l, "vertex index")?;
            if *v >= nv {
                return Err(Error::Parse {
                    line: l,
                    msg: format!("vertex index {v} out of range"),
                });
            }
        }
        tris.push(tri);
    }
    Ok((verts, tris))
}

fn parse_gmsh(text: &str) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let lines: Vec<(usize, &str)> = content_lines(text, None).collect();
    let section = |name: &str| -> Result<usize> {
        lines
            .iter()
            .position(|(_, l)| *l == name)
            .ok_or(Error::Parse {
                line: 0,
                msg: format!("missing {name} section"),
            })
    };
    let fmt = section("$MeshFormat")?;
    let (fl, fs) = *lines.get(fmt + 1).ok_or(Error::Parse {
        line: lines[fmt].0,
        msg: "truncated $MeshFormat".into(),
    })?;
    let version: f64 = field(fs.split_whitespace().next(), fl, "format version")?;
    if !(2.0..3.0).contains(&version) {
        return Err(Error::Parse {
            line: fl,
            msg: format!("unsupported Gmsh version {version}, expected 2.x"),
        });
    }
    if fs.split_whitespace().nth(1) != Some("0") {
        return Err(Error::Parse {
            line: fl,
            msg: "binary Gmsh files are not supported".into(),
        });
    }

    let ns = section("$Nodes")?;
    let (cl, cs) = *lines.get(ns + 1).ok_or(Error::Parse {
        line: lines[ns].0,
        msg: "truncated $Nodes".into(),
    })?;
    let nn: usize = field(cs.split_whitespace().next(), cl, "node count")?;
    let mut ids = std::collections::HashMap::with_capacity(nn);
    let mut verts = Vec::with_capacity(nn);
    for i in 0..nn {
        let (l, s) = *lines.get(ns + 2 + i).ok_or(Error::Parse {
            line: cl,
            msg: format!("file ends after {i} of {nn} nodes"),
        })?;
        let mut tok = s.split_whitespace();
        let id: usize = field(tok.next(), l, "node id")?;
        let x = field(tok.next(), l, "x coordinate")?;
        let y = field(tok.next(), l, "y coordinate")?;
        let z = field(tok.next(), l, "z coordinate")?;
        ids.insert(id, verts.len());
        verts.push(Point::new(x, y, z));
    }

    let es = section("$Elements")?;
    let (cl, cs) = *lines.get(es + 1).ok_or(Error::Parse {
        line: lines[es].0,
        msg: "truncated $Elements".into(),
    })?;
    let ne: usize = field(cs.split_whitespace().next(), cl, "element count")?;
    let mut tris = Vec::new();
    for i in 0..ne {
        let (l, s) = *lines.get(es + 2 + i).ok_or(Error::Parse {
            line: cl,
            msg: format!("file ends after {i} of {ne} elements"),
        })?;
        let mut tok = s.split_whitespace();
        let _id: usize = field(tok.next(), l, "element id")?;
        let etype: usize = field(tok.next(), l, "element type")?;
        let ntags: usize = field(tok.next(), l, "tag count")?;
        for _ in 0..ntags {
            let _: i64 = field(tok.next(), l, "tag")?;
        }
        // only 3-node triangles form the surface; points and lines are skipped
        if etype != 2 {
            continue;
        }
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            let id: usize = field(tok.next(), l, "node reference")?;
            *v = *ids.get(&id).ok_or(Error::Parse {
                line: l,
                msg: format!("unknown node {id}"),
            })?;
        }
        tris.push(tri);
    }
    Ok((verts, tris))
}
