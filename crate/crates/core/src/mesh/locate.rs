use super::{Mesh2D, Point};
use crate::error::{Error, Result};

const BARY_TOL: f64 = 1e-12;

/// Containing triangle and barycentric coordinates of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug)]
pub(crate) struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Locator {
    pub(crate) fn new(mesh: &Mesh2D) -> Self {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let n = ((mesh.num_triangles() as f64).sqrt() * 0.75).ceil().max(1.0) as usize;
        let cell = side / n as f64 * (1.0 + 1e-9);
        let (nx, ny) = (n, n);
        let ranges: Vec<[usize; 4]> = (0..mesh.num_triangles())
            .map(|t| {
                let pts = mesh.triangle_points(t);
                let mut r = [usize::MAX, 0, usize::MAX, 0];
                for p in pts {
                    let ix = (((p[0] - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
                    let iy = (((p[1] - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
                    r[0] = r[0].min(ix);
                    r[1] = r[1].max(ix);
                    r[2] = r[2].min(iy);
                    r[3] = r[3].max(iy);
                }
                r
            })
            .collect();
        let mut counts = vec![0usize; nx * ny + 1];
        for r in &ranges {
            for iy in r[2]..=r[3] {
                for ix in r[0]..=r[1] {
                    counts[iy * nx + ix + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; start[nx * ny]];
        for (t, r) in ranges.iter().enumerate() {
            for iy in r[2]..=r[3] {
                for ix in r[0]..=r[1] {
                    let c = iy * nx + ix;
                    items[fill[c]] = t;
                    fill[c] += 1;
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            start,
            items,
        }
    }

    fn candidates(&self, x: &Point) -> &[usize] {
        let fx = (x[0] - self.origin[0]) / self.cell;
        let fy = (x[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 || fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return &[];
        }
        let ix = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        let c = iy * self.nx + ix;
        &self.items[self.start[c]..self.start[c + 1]]
    }
}

pub(crate) fn barycentric(pts: &[Point; 3], x: &Point) -> [f64; 3] {
    let [a, b, c] = pts;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

impl Mesh2D {
    /// Finds the triangle containing `x`. On shared edges and vertices the
    /// lowest triangle index wins.
    pub fn locate_point(&self, x: Point) -> Result<Location> {
        let mut best: Option<Location> = None;
        for &t in self.locator().candidates(&x) {
            if best.is_some_and(|b| b.triangle < t) {
                continue;
            }
            let bary = barycentric(&self.triangle_points(t), &x);
            if bary.iter().all(|&l| l >= -BARY_TOL) {
                best = Some(Location {
                    triangle: t,
                    bary: clamp_bary(bary),
                });
            }
        }
        best.ok_or(Error::PointNotFound { x: x[0], y: x[1] })
    }

    /// Closest point of the meshed polygon, restricted to triangles touching
    /// the boundary. Used for points between the polygon and the true circle.
    pub fn nearest_boundary_location(&self, x: Point) -> Location {
        let mut best = (f64::MAX, Location { triangle: 0, bary: [1.0, 0.0, 0.0] });
        for e in 0..self.num_edges() {
            if !self.is_boundary_edge(e) {
                continue;
            }
            let [a, b] = self.edges()[e];
            let (pa, pb) = (self.vertices()[a], self.vertices()[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let s = (((x[0] - pa[0]) * d[0] + (x[1] - pa[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]))
                .clamp(0.0, 1.0);
            let q = [pa[0] + s * d[0], pa[1] + s * d[1]];
            let dist = (q[0] - x[0]).hypot(q[1] - x[1]);
            if dist < best.0 {
                let (t, _) = self.edge_triangles(e);
                let bary = clamp_bary(barycentric(&self.triangle_points(t), &q));
                best = (dist, Location { triangle: t, bary });
            }
        }
        best.1
    }
}

fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = [b[0].clamp(0.0, 1.0), b[1].clamp(0.0, 1.0), b[2].clamp(0.0, 1.0)];
    let s = c[0] + c[1] + c[2];
    [c[0] / s, c[1] / s, c[2] / s]
}
