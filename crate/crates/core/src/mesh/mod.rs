//! Triangulated scatterer surfaces carrying one pulse basis function per
//! triangle, plus the quadrature used to integrate over them.

pub mod generate;
pub mod io;
pub mod quadrature;
pub mod singular;

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};

pub use io::{load_mesh, load_mesh_file, MeshFormat};
pub use quadrature::{gauss_legendre, panel_integral_regular, QuadratureRule};

pub type Point = Vector3<f64>;

/// A flat triangle with cached geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub vertices: [Point; 3],
    pub normal: Point,
    pub area: f64,
    pub centroid: Point,
    /// Longest edge.
    pub diameter: f64,
}

impl Panel {
    pub fn new(vertices: [Point; 3]) -> Self {
        let cross = (vertices[1] - vertices[0]).cross(&(vertices[2] - vertices[0]));
        let twice = cross.norm();
        let normal = if twice > 0.0 { cross / twice } else { Point::zeros() };
        let diameter = (0..3)
            .map(|i| (vertices[(i + 1) % 3] - vertices[i]).norm())
            .fold(0.0, f64::max);
        Panel {
            vertices,
            normal,
            area: 0.5 * twice,
            centroid: (vertices[0] + vertices[1] + vertices[2]) / 3.0,
            diameter,
        }
    }

    #[inline]
    pub fn point(&self, bary: &[f64; 3]) -> Point {
        self.vertices[0] * bary[0] + self.vertices[1] * bary[1] + self.vertices[2] * bary[2]
    }
}

/// How two panels touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Coincident,
    Edge,
    Vertex,
    Disjoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub components: usize,
    pub area: f64,
    pub volume: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub circumradius: f64,
}

impl SurfaceMesh {
    pub fn empty() -> Self {
        SurfaceMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            panels: Vec::new(),
        }
    }

    /// Build and validate: closed, manifold, non-degenerate, outward.
    /// Inward-wound components are flipped with a warning.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
        }
        let mut mesh = SurfaceMesh {
            panels: Vec::new(),
            vertices,
            triangles,
        };
        mesh.rebuild_panels();
        mesh.check_degenerate()?;
        let comps = mesh.check_closed()?;
        mesh.orient_outward(&comps);
        Ok(mesh)
    }

    fn rebuild_panels(&mut self) {
        self.panels = self
            .triangles
            .iter()
            .map(|t| Panel::new([self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]))
            .collect();
    }

    fn check_degenerate(&self) -> Result<()> {
        if self.panels.is_empty() {
            return Ok(());
        }
        let mean = self.total_area() / self.len() as f64;
        for (t, p) in self.panels.iter().enumerate() {
            if !(p.area > 1e-12 * mean) {
                return Err(Error::Mesh(format!("triangle {t} is degenerate (area {:e})", p.area)));
            }
        }
        Ok(())
    }

    /// Checks every edge is shared by exactly two consistently wound
    /// triangles and each connected component has genus zero. Returns the
    /// component label of every triangle.
    fn check_closed(&self) -> Result<Vec<usize>> {
        let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                edges
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((t, a < b));
            }
        }
        // union-find over triangles
        let mut parent: Vec<usize> = (0..self.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for key in &keys {
            let users = &edges[key];
            if users.len() != 2 {
                return Err(Error::Mesh(format!(
                    "surface is not closed: edge ({}, {}) is used by {} triangle(s)",
                    key.0,
                    key.1,
                    users.len()
                )));
            }
            if users[0].1 == users[1].1 {
                return Err(Error::Mesh(format!(
                    "inconsistent winding across edge ({}, {}) between triangles {} and {}",
                    key.0, key.1, users[0].0, users[1].0
                )));
            }
            let (a, b) = (find(&mut parent, users[0].0), find(&mut parent, users[1].0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let roots: Vec<usize> = (0..self.len()).map(|t| find(&mut parent, t)).collect();
        let mut label_of = HashMap::new();
        let labels: Vec<usize> = roots
            .iter()
            .map(|r| {
                let next = label_of.len();
                *label_of.entry(*r).or_insert(next)
            })
            .collect();
        let ncomp = label_of.len();
        let mut f = vec![0i64; ncomp];
        let mut e = vec![0i64; ncomp];
        let mut v: Vec<std::collections::HashSet<usize>> = vec![Default::default(); ncomp];
        for (t, tri) in self.triangles.iter().enumerate() {
            f[labels[t]] += 1;
            v[labels[t]].extend(tri.iter().copied());
        }
        for key in &keys {
            e[labels[edges[key][0].0]] += 1;
        }
        for c in 0..ncomp {
            let chi = v[c].len() as i64 - e[c] + f[c];
            if chi != 2 {
                return Err(Error::Mesh(format!(
                    "component {c} has Euler characteristic {chi}, expected 2"
                )));
            }
        }
        Ok(labels)
    }

    fn orient_outward(&mut self, labels: &[usize]) {
        let ncomp = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut vol = vec![0.0; ncomp];
        for (t, p) in self.panels.iter().enumerate() {
            vol[labels[t]] += signed_volume_term(p);
        }
        let mut flipped = false;
        for (t, tri) in self.triangles.iter_mut().enumerate() {
            if vol[labels[t]] < 0.0 {
                tri.swap(1, 2);
                flipped = true;
            }
        }
        if flipped {
            log::warn!("mesh had inward-oriented components; winding flipped to outward");
            self.rebuild_panels();
        }
    }

    /// Number of pulse basis functions.
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    pub fn signed_volume(&self) -> f64 {
        self.panels.iter().map(signed_volume_term).sum()
    }

    /// Radius of the smallest origin-centred sphere containing the mesh.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn adjacency(&self, m: usize, n: usize) -> Adjacency {
        if m == n {
            return Adjacency::Coincident;
        }
        let shared = self.triangles[m]
            .iter()
            .filter(|v| self.triangles[n].contains(v))
            .count();
        match shared {
            0 => Adjacency::Disjoint,
            1 => Adjacency::Vertex,
            2 => Adjacency::Edge,
            _ => Adjacency::Coincident,
        }
    }

    /// Same surface with triangles reordered: new triangle `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let triangles: Vec<_> = perm.iter().map(|&i| self.triangles[i]).collect();
        let panels = perm.iter().map(|&i| self.panels[i].clone()).collect();
        SurfaceMesh {
            vertices: self.vertices.clone(),
            triangles,
            panels,
        }
    }

    pub fn summary(&self) -> MeshSummary {
        let h = self.panels.iter().map(|p| p.diameter);
        MeshSummary {
            vertices: self.vertices.len(),
            triangles: self.len(),
            components: if self.is_empty() {
                0
            } else {
                self.check_closed().map_or(0, |l| l.iter().max().unwrap() + 1)
            },
            area: self.total_area(),
            volume: self.signed_volume(),
            h_min: h.clone().fold(f64::INFINITY, f64::min),
            h_max: h.fold(0.0, f64::max),
            circumradius: self.circumradius(),
        }
    }
}

fn signed_volume_term(p: &Panel) -> f64 {
    p.vertices[0].dot(&p.vertices[1].cross(&p.vertices[2])) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn octahedron(inward: bool) -> SurfaceMesh {
        let v = vec![
            Point::new(1.0, 0.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(0.0, 0.0, -1.0),
        ];
        let mut t = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        if inward {
            for tri in &mut t {
                tri.swap(0, 1);
            }
        }
        SurfaceMesh::new(v, t).unwrap()
    }

    #[test]
    fn octahedron_geometry() {
        let m = octahedron(false);
        assert_eq!(m.len(), 8);
        assert!((m.signed_volume() - 4.0 / 3.0).abs() < 1e-14);
        for p in &m.panels {
            assert!(p.normal.dot(&p.centroid) > 0.0);
        }
    }

    #[test]
    fn inward_mesh_is_flipped() {
        let m = octahedron(true);
        assert!((m.signed_volume() - 4.0 / 3.0).abs() < 1e-14);
        assert!(m.panels.iter().all(|p| p.normal.dot(&p.centroid) > 0.0));
    }

    #[test]
    fn open_surface_rejected() {
        let m = octahedron(false);
        let err = SurfaceMesh::new(m.vertices.clone(), m.triangles[..7].to_vec()).unwrap_err();
        assert!(err.to_string().contains("not closed"));
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let mut m = octahedron(false);
        m.vertices.push(Point::new(0.5, 0.5, 0.0));
        m.vertices.push(Point::new(0.5, 0.5, 0.0));
        let mut t = m.triangles.clone();
        t.push([0, 6, 7]);
        assert!(SurfaceMesh::new(m.vertices, t).is_err());
    }

    #[test]
    fn adjacency_classes() {
        let m = octahedron(false);
        assert_eq!(m.adjacency(0, 0), Adjacency::Coincident);
        assert_eq!(m.adjacency(0, 1), Adjacency::Edge);
        assert_eq!(m.adjacency(0, 2), Adjacency::Vertex);
        assert_eq!(m.adjacency(0, 6), Adjacency::Disjoint);
    }
}
