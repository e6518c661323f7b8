//! Conforming triangulations of the unit disc.
//!
//! A [`Mesh2D`] is immutable once built. Edges are stored with the
//! orientation `lower vertex index -> higher vertex index`, and the local edge
//! `i` of a triangle is the edge opposite its local vertex `i`.

mod generate;
mod locate;
mod project;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

pub use generate::generate_disc_mesh;
pub use locate::Location;
pub use project::{project_field, ProjectionReport};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance for boundary vertices lying on the unit circle.
pub const CIRCLE_TOL: f64 = 1e-12;

const NO_TRIANGLE: usize = usize::MAX;

/// Fingerprint of a mesh, used to tag where a field was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshId(pub u64);

impl std::fmt::Display for MeshId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug)]
pub struct Mesh2D {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<[usize; 2]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    id: MeshId,
    locator: OnceLock<locate::Locator>,
}

impl Mesh2D {
    /// Builds the edge structure for a triangle soup. Triangles given in
    /// clockwise order are flipped; degenerate triangles are rejected.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::invalid("mesh has no triangles"));
        }
        let mut triangles = triangles;
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(Error::invalid(format!("triangle {t} is degenerate")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut edge_triangles: Vec<[usize; 2]> = Vec::with_capacity(edges.capacity());
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([NO_TRIANGLE, NO_TRIANGLE]);
                    edges.len() - 1
                });
                let slots = &mut edge_triangles[e];
                if slots[0] == NO_TRIANGLE {
                    slots[0] = t;
                } else if slots[1] == NO_TRIANGLE {
                    slots[1] = t;
                } else {
                    return Err(Error::invalid(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key[0], key[1]
                    )));
                }
                *slot = e;
            }
            triangle_edges.push(local);
        }

        let boundary_edge: Vec<bool> = edge_triangles.iter().map(|s| s[1] == NO_TRIANGLE).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &b) in boundary_edge.iter().enumerate() {
            if b {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }
        let id = fingerprint(&vertices, &triangles);
        Ok(Mesh2D {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_triangles,
            boundary_vertex,
            boundary_edge,
            id,
            locator: OnceLock::new(),
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edges of triangle `t`; entry `i` is opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// The one or two triangles adjacent to edge `e`.
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        let s = self.edge_triangles[e];
        (s[0], (s[1] != NO_TRIANGLE).then_some(s[1]))
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn boundary_edge_flags(&self) -> &[bool] {
        &self.boundary_edge
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(&self.vertices[a], &self.vertices[b])
    }

    /// Mean edge length, used as the mesh size `h`.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).sum::<f64>() / self.num_edges() as f64
    }

    /// Area of the barycentric dual cell of each vertex (lumped P1 mass).
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.area(t) / 3.0;
            for &v in tri {
                out[v] += a;
            }
        }
        out
    }

    /// Checks every structural invariant of a disc mesh.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            if self.area(t) <= 0.0 {
                return Err(Error::invalid(format!("triangle {t} has non-positive area")));
            }
        }
        for (v, &b) in self.boundary_vertex.iter().enumerate() {
            if b {
                let r = norm(&self.vertices[v]);
                if (r - 1.0).abs() > CIRCLE_TOL {
                    return Err(Error::invalid(format!(
                        "boundary vertex {v} is off the unit circle by {:.3e}",
                        (r - 1.0).abs()
                    )));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::invalid("mesh is not connected"));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_triangles()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(t) = stack.pop() {
            for &e in &self.triangle_edges[t] {
                for &n in &self.edge_triangles[e] {
                    if n != NO_TRIANGLE && !seen[n] {
                        seen[n] = true;
                        count += 1;
                        stack.push(n);
                    }
                }
            }
        }
        count == self.num_triangles()
    }

    /// Uniform midpoint refinement. Midpoints of boundary edges are pushed
    /// radially onto the unit circle.
    pub fn refine(&self) -> Result<Mesh2D> {
        let nv = self.num_vertices();
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.num_edges());
        for e in 0..self.num_edges() {
            let mut m = self.edge_midpoint(e);
            if self.boundary_edge[e] {
                let r = norm(&m);
                m = [m[0] / r, m[1] / r];
            }
            vertices.push(m);
        }
        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [ea, eb, ec] = self.triangle_edges[t];
            let (ma, mb, mc) = (nv + ea, nv + eb, nv + ec);
            // ma is opposite a, i.e. the midpoint of bc.
            triangles.push([a, mc, mb]);
            triangles.push([mc, b, ma]);
            triangles.push([mb, ma, c]);
            triangles.push([ma, mb, mc]);
        }
        Mesh2D::from_parts(vertices, triangles)
    }

    pub(crate) fn locator(&self) -> &locate::Locator {
        self.locator.get_or_init(|| locate::Locator::new(self))
    }
}

fn fingerprint(vertices: &[Point], triangles: &[[usize; 3]]) -> MeshId {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    vertices.len().hash(&mut h);
    for v in vertices {
        v[0].to_bits().hash(&mut h);
        v[1].to_bits().hash(&mut h);
    }
    triangles.hash(&mut h);
    MeshId(h.finish())
}

pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn norm(p: &Point) -> f64 {
    p[0].hypot(p[1])
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh2D {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        Mesh2D::from_parts(v, vec![[0, 1, 2], [0, 3, 2]]).unwrap()
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let m = square();
        assert!(m.area(1) > 0.0);
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.boundary_edge_flags().iter().filter(|b| **b).count(), 4);
    }

    #[test]
    fn local_edge_is_opposite_local_vertex() {
        let m = square();
        for t in 0..m.num_triangles() {
            let tri = m.triangles()[t];
            for i in 0..3 {
                let e = m.edges()[m.triangle_edges(t)[i]];
                assert!(!e.contains(&tri[i]));
            }
        }
    }

    #[test]
    fn rejects_degenerate_and_nonmanifold() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(Mesh2D::from_parts(v, vec![[0, 1, 2]]).is_err());
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]];
        let tris = vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]];
        assert!(Mesh2D::from_parts(v, tris).is_err());
    }

    #[test]
    fn refinement_quadruples() {
        let m = generate_disc_mesh(40, 3).unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        r.validate().unwrap();
        assert!((r.total_area() - m.total_area()) >= 0.0);
    }
}
