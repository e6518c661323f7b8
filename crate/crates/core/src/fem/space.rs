use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::{Mesh2D, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Lagrange1,
    Lagrange2,
    RaviartThomas0,
}

/// Degrees of freedom of a discrete space over a mesh.
#[derive(Debug)]
pub struct FunctionSpace {
    kind: SpaceKind,
    mesh: Arc<Mesh2D>,
    dof_count: usize,
    local_dim: usize,
    dof_map: Vec<usize>,
    signs: Vec<[f64; 3]>,
    boundary_dofs: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh2D>, kind: SpaceKind) -> Arc<Self> {
        let nv = mesh.num_vertices();
        let nt = mesh.num_triangles();
        let (dof_count, local_dim) = match kind {
            SpaceKind::Lagrange1 => (nv, 3),
            SpaceKind::Lagrange2 => (nv + mesh.num_edges(), 6),
            SpaceKind::RaviartThomas0 => (mesh.num_edges(), 3),
        };
        let mut dof_map = Vec::with_capacity(nt * local_dim);
        let mut signs = Vec::new();
        for t in 0..nt {
            let tri = mesh.triangles()[t];
            let te = mesh.triangle_edges(t);
            match kind {
                SpaceKind::Lagrange1 => dof_map.extend_from_slice(&tri),
                SpaceKind::Lagrange2 => {
                    dof_map.extend_from_slice(&tri);
                    dof_map.extend(te.iter().map(|e| nv + e));
                }
                SpaceKind::RaviartThomas0 => {
                    dof_map.extend_from_slice(&te);
                    signs.push(rt_signs(&mesh, t));
                }
            }
        }
        let boundary_dofs = match kind {
            SpaceKind::Lagrange1 => (0..nv).filter(|&v| mesh.is_boundary_vertex(v)).collect(),
            SpaceKind::Lagrange2 => (0..nv)
                .filter(|&v| mesh.is_boundary_vertex(v))
                .chain((0..mesh.num_edges()).filter(|&e| mesh.is_boundary_edge(e)).map(|e| nv + e))
                .collect(),
            SpaceKind::RaviartThomas0 => (0..mesh.num_edges()).filter(|&e| mesh.is_boundary_edge(e)).collect(),
        };
        Arc::new(FunctionSpace {
            kind,
            mesh,
            dof_count,
            local_dim,
            dof_map,
            signs,
            boundary_dofs,
        })
    }

    pub fn lagrange1(mesh: &Arc<Mesh2D>) -> Arc<Self> {
        Self::new(mesh.clone(), SpaceKind::Lagrange1)
    }

    pub fn lagrange2(mesh: &Arc<Mesh2D>) -> Arc<Self> {
        Self::new(mesh.clone(), SpaceKind::Lagrange2)
    }

    pub fn raviart_thomas0(mesh: &Arc<Mesh2D>) -> Arc<Self> {
        Self::new(mesh.clone(), SpaceKind::RaviartThomas0)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dofs(&self, t: usize) -> &[usize] {
        &self.dof_map[t * self.local_dim..(t + 1) * self.local_dim]
    }

    /// Orientation signs of the RT0 basis functions of triangle `t`.
    pub fn rt_signs(&self, t: usize) -> [f64; 3] {
        self.signs[t]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_vector(&self) -> bool {
        self.kind == SpaceKind::RaviartThomas0
    }

    /// Nodal positions of a Lagrange space.
    pub fn dof_points(&self) -> Vec<Point> {
        let mesh = &self.mesh;
        match self.kind {
            SpaceKind::Lagrange1 => mesh.vertices().to_vec(),
            SpaceKind::Lagrange2 => mesh
                .vertices()
                .iter()
                .copied()
                .chain((0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)))
                .collect(),
            SpaceKind::RaviartThomas0 => (0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)).collect(),
        }
    }
}

/// Sign `+1` when the global normal of local edge `i` points out of `t`.
fn rt_signs(mesh: &Mesh2D, t: usize) -> [f64; 3] {
    let pts = mesh.triangle_points(t);
    let te = mesh.triangle_edges(t);
    let mut s = [0.0; 3];
    for i in 0..3 {
        let n = edge_normal(mesh, te[i]);
        let m = mesh.edge_midpoint(te[i]);
        let out = [m[0] - pts[i][0], m[1] - pts[i][1]];
        s[i] = if out[0] * n[0] + out[1] * n[1] > 0.0 { 1.0 } else { -1.0 };
    }
    s
}

/// Unit normal of edge `e`: its tangent (low -> high vertex) turned clockwise.
pub fn edge_normal(mesh: &Mesh2D, e: usize) -> [f64; 2] {
    let [a, b] = mesh.edges()[e];
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let l = mesh.edge_length(e);
    [(pb[1] - pa[1]) / l, -(pb[0] - pa[0]) / l]
}

/// Per-triangle geometric data for basis evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl Element {
    pub fn new(mesh: &Mesh2D, t: usize) -> Self {
        let points = mesh.triangle_points(t);
        let [a, b, c] = points;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let g1 = [(c[1] - a[1]) / det, -(c[0] - a[0]) / det];
        let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Element {
            points,
            area: 0.5 * det,
            grad_bary: [g0, g1, g2],
        }
    }

    pub fn point(&self, bary: &[f64; 3]) -> Point {
        let [a, b, c] = self.points;
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    pub fn p1_values(&self, bary: &[f64; 3]) -> [f64; 3] {
        *bary
    }

    pub fn p1_grads(&self) -> [[f64; 2]; 3] {
        self.grad_bary
    }

    /// P2 basis: vertex functions first, then the edge function opposite
    /// vertex `i` (between the other two vertices).
    pub fn p2_values(&self, l: &[f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
            4.0 * l[0] * l[1],
        ]
    }

    pub fn p2_grads(&self, l: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_bary;
        let comb = |i: usize, j: usize| {
            [4.0 * (l[i] * g[j][0] + l[j] * g[i][0]), 4.0 * (l[i] * g[j][1] + l[j] * g[i][1])]
        };
        let vert = |i: usize| [(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]];
        [vert(0), vert(1), vert(2), comb(1, 2), comb(2, 0), comb(0, 1)]
    }

    /// RT0 basis with unit flux through its edge (relative to the global edge
    /// normal): `s_i / (2|T|) (x - p_i)`.
    pub fn rt_values(&self, signs: &[f64; 3], x: &Point) -> [[f64; 2]; 3] {
        let mut out = [[0.0; 2]; 3];
        for i in 0..3 {
            let c = signs[i] / (2.0 * self.area);
            out[i] = [c * (x[0] - self.points[i][0]), c * (x[1] - self.points[i][1])];
        }
        out
    }

    pub fn rt_divs(&self, signs: &[f64; 3]) -> [f64; 3] {
        [signs[0] / self.area, signs[1] / self.area, signs[2] / self.area]
    }
}
