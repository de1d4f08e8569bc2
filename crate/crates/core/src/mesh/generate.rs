//! Built-in test geometries: icosphere, box, and a pair of parallel plates.

use std::collections::HashMap;

use super::{Point, SurfaceMesh};
use crate::error::{domain, Result};

/// Icosahedron refined `level` times, vertices projected to the sphere.
/// Yields `20 · 4^level` triangles.
pub fn icosphere(level: usize, radius: f64) -> Result<SurfaceMesh> {
    if !(radius > 0.0) {
        return domain(format!("sphere radius must be positive, got {radius}"));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    for v in &mut verts {
        *v *= radius;
    }
    SurfaceMesh::new(verts, tris)
}

/// Axis-aligned box `[lo, hi]` with `n[i]` divisions along axis `i`.
pub fn box_mesh(lo: Point, hi: Point, n: [usize; 3]) -> Result<SurfaceMesh> {
    if (0..3).any(|i| !(hi[i] > lo[i]) || n[i] == 0) {
        return domain("box needs hi > lo and at least one division per axis");
    }
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    // (fixed axis, at max?, u axis, v axis) with u × v outward
    let faces = [
        (0, false, 2, 1),
        (0, true, 1, 2),
        (1, false, 0, 2),
        (1, true, 2, 0),
        (2, false, 1, 0),
        (2, true, 0, 1),
    ];
    for &(w, at_max, u, v) in &faces {
        let mut id = |i: usize, j: usize| {
            let mut g = [0usize; 3];
            g[w] = if at_max { n[w] } else { 0 };
            g[u] = i;
            g[v] = j;
            *index.entry(g).or_insert_with(|| {
                let p = Point::from_fn(|a, _| lo[a] + (hi[a] - lo[a]) * g[a] as f64 / n[a] as f64);
                verts.push(p);
                verts.len() - 1
            })
        };
        for i in 0..n[u] {
            for j in 0..n[v] {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
    }
    SurfaceMesh::new(verts, tris)
}

/// Cube surface with `n × n` squares per face projected radially onto a
/// sphere: `12 n²` triangles of comparable size.
pub fn cubed_sphere(n: usize, radius: f64) -> Result<SurfaceMesh> {
    if !(radius > 0.0) {
        return domain(format!("sphere radius must be positive, got {radius}"));
    }
    let cube = box_mesh(Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0), [n, n, n])?;
    let verts = cube.vertices.iter().map(|v| v * (radius / v.norm())).collect();
    SurfaceMesh::new(verts, cube.triangles)
}

/// Two thin closed plates of size `length × width × thickness`, parallel to
/// the xy-plane and separated by `gap` along z, centred on the origin.
pub fn two_plates(
    length: f64,
    width: f64,
    thickness: f64,
    gap: f64,
    divisions: [usize; 3],
) -> Result<SurfaceMesh> {
    if !(gap > 0.0) {
        return domain(format!("plate gap must be positive, got {gap}"));
    }
    let (hl, hw) = (length / 2.0, width / 2.0);
    let upper = box_mesh(
        Point::new(-hl, -hw, gap / 2.0),
        Point::new(hl, hw, gap / 2.0 + thickness),
        divisions,
    )?;
    let lower = box_mesh(
        Point::new(-hl, -hw, -gap / 2.0 - thickness),
        Point::new(hl, hw, -gap / 2.0),
        divisions,
    )?;
    let offset = upper.vertices.len();
    let mut verts = upper.vertices;
    verts.extend(lower.vertices);
    let mut tris = upper.triangles;
    tris.extend(
        lower
            .triangles
            .iter()
            .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
    );
    SurfaceMesh::new(verts, tris)
}
