//! Ring-based disc mesher.
//!
//! Vertices are placed on concentric rings (ring `k` carries roughly `m k`
//! points), every ring gets a seeded angular offset and interior rings a small
//! seeded jitter. Neighbouring rings are stitched by merging their angular
//! orderings, and the result is made Delaunay by Lawson edge flips. For a
//! triangulation of `V` points with `B` of them on the hull the triangle count
//! is `2V - B - 2`, so the size of the outermost ring is chosen to hit the
//! requested element count exactly.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{signed_area, Mesh2D, Point};
use crate::error::{Error, Result};

const JITTER: f64 = 0.18;

pub fn generate_disc_mesh(target_elements: usize, seed: u64) -> Result<Mesh2D> {
    if target_elements < 8 {
        return Err(Error::invalid(format!(
            "target_elements must be at least 8 (got {target_elements})"
        )));
    }
    let counts = ring_counts(target_elements);
    let rings = counts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut vertices: Vec<Point> = vec![[0.0, 0.0]];
    // (start index, angles) per ring, angles unwrapped and increasing.
    let mut ring_data: Vec<(usize, Vec<f64>)> = vec![(0, vec![0.0])];
    for (k, &n) in counts.iter().enumerate() {
        let level = k + 1;
        let boundary = level == rings;
        let step = TAU / n as f64;
        let offset = rng.random::<f64>() * step;
        let radius = level as f64 / rings as f64;
        let start = vertices.len();
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let (mut theta, mut r) = (offset + i as f64 * step, radius);
            if !boundary {
                theta += JITTER * step * (rng.random::<f64>() - 0.5);
                r += JITTER / rings as f64 * (rng.random::<f64>() - 0.5);
            }
            angles.push(theta);
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
        ring_data.push((start, angles));
    }

    let mut triangles = Vec::with_capacity(target_elements);
    for k in 1..ring_data.len() {
        stitch(&ring_data[k - 1], &ring_data[k], &vertices, &mut triangles);
    }
    lawson_flips(&vertices, &mut triangles);
    let mesh = Mesh2D::from_parts(vertices, triangles)?;
    debug_assert_eq!(mesh.num_triangles(), target_elements);
    Ok(mesh)
}

fn ring_counts(target: usize) -> Vec<usize> {
    let rings = ((target as f64 / TAU).sqrt().round() as usize).max(1);
    let density = target as f64 / (rings * rings) as f64;
    let mut counts: Vec<usize> = (1..rings)
        .map(|k| ((density * k as f64).round() as usize).max(5))
        .collect();
    let inner: usize = counts.iter().sum();
    counts.push(target - 2 * inner);
    counts
}

/// Triangulates the annulus between two rings by merging their angular orders.
fn stitch(
    inner: &(usize, Vec<f64>),
    outer: &(usize, Vec<f64>),
    vertices: &[Point],
    out: &mut Vec<[usize; 3]>,
) {
    let (a_start, a_angles) = inner;
    let (b_start, b_angles) = outer;
    let (na, nb) = (a_angles.len(), b_angles.len());
    if na == 1 {
        for j in 0..nb {
            push_oriented(vertices, out, [*a_start, b_start + j, b_start + (j + 1) % nb]);
        }
        return;
    }
    let a0 = a_angles[0];
    let unwrap = |theta: f64| a0 + (theta - a0 + PI).rem_euclid(TAU) - PI;
    // Outer vertex angularly closest to the first inner vertex.
    let j0 = (0..nb)
        .min_by(|&x, &y| {
            let dx = (unwrap(b_angles[x]) - a0).abs();
            let dy = (unwrap(b_angles[y]) - a0).abs();
            dx.total_cmp(&dy)
        })
        .unwrap();
    let b_base = unwrap(b_angles[j0]);
    let a_at = |i: usize| a_angles[i % na] + if i >= na { TAU } else { 0.0 };
    let b_at = |j: usize| {
        let raw = b_angles[(j0 + j) % nb];
        b_base + (raw - b_angles[j0]).rem_euclid(TAU) + if j >= nb { TAU } else { 0.0 }
    };
    let a_idx = |i: usize| a_start + i % na;
    let b_idx = |j: usize| b_start + (j0 + j) % nb;

    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_inner = if i == na {
            false
        } else if j == nb {
            true
        } else {
            a_at(i + 1) < b_at(j + 1)
        };
        if advance_inner {
            push_oriented(vertices, out, [a_idx(i), a_idx(i + 1), b_idx(j)]);
            i += 1;
        } else {
            push_oriented(vertices, out, [a_idx(i), b_idx(j), b_idx(j + 1)]);
            j += 1;
        }
    }
}

fn push_oriented(vertices: &[Point], out: &mut Vec<[usize; 3]>, tri: [usize; 3]) {
    let area = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
    out.push(if area < 0.0 { [tri[0], tri[2], tri[1]] } else { tri });
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
fn in_circle(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn lawson_flips(vertices: &[Point], triangles: &mut [[usize; 3]]) {
    for _pass in 0..200 {
        let mut adjacency: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                adjacency.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut interior: Vec<((usize, usize), [usize; 2])> = adjacency
            .into_iter()
            .filter(|(_, ts)| ts.len() == 2)
            .map(|(k, ts)| (k, [ts[0], ts[1]]))
            .collect();
        interior.sort_unstable();

        let mut touched = vec![false; triangles.len()];
        let mut flips = 0;
        for ((a, b), [t0, t1]) in interior {
            if touched[t0] || touched[t1] {
                continue;
            }
            let c = opposite(&triangles[t0], a, b);
            let d = opposite(&triangles[t1], a, b);
            let tri0 = triangles[t0];
            let (pa, pb, pc, pd) = (vertices[tri0[0]], vertices[tri0[1]], vertices[tri0[2]], vertices[d]);
            let scale = edge_sq(&vertices[a], &vertices[b]) * edge_sq(&vertices[c], &vertices[d]);
            if in_circle(&pa, &pb, &pc, &pd) <= 1e-10 * scale {
                continue;
            }
            let n0 = [c, d, b];
            let n1 = [d, c, a];
            let ar0 = signed_area(&vertices[n0[0]], &vertices[n0[1]], &vertices[n0[2]]);
            let ar1 = signed_area(&vertices[n1[0]], &vertices[n1[1]], &vertices[n1[2]]);
            if ar0.abs() <= 1e-14 || ar1.abs() <= 1e-14 || ar0.signum() != ar1.signum() {
                continue;
            }
            triangles[t0] = if ar0 > 0.0 { n0 } else { [c, b, d] };
            triangles[t1] = if ar1 > 0.0 { n1 } else { [d, a, c] };
            touched[t0] = true;
            touched[t1] = true;
            flips += 1;
        }
        if flips == 0 {
            break;
        }
    }
}

fn opposite(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).unwrap()
}

fn edge_sq(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}
