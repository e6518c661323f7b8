//! Principal symbols of the linearised measurement operators, ellipticity
//! tests, characteristic directions and bicharacteristic curves.
//!
//! For a reference gradient `g` and exponent `p` the symbol of measurement `j` is
//! `p_j(x, xi) = |g|^p (1 - p (g.xi)^2 / (|g|^2 |xi|^2))`, homogeneous of
//! degree zero in `xi`. It vanishes exactly when the angle between `xi` and
//! `g` is `arccos(p^{-1/2})` (or its supplement), which requires `p >= 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{nodal_average, HarmonicExtension};
use crate::mesh::{Mesh2D, Point};

/// Angular resolution of ellipticity scans over `[0, pi)`.
pub const ANGULAR_SAMPLES: usize = 721;
/// Tolerance of the analytic cone intersection, in radians.
pub const CONE_TOL: f64 = 1e-9;

/// A cotangent point with the reference gradients of all measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolQuery {
    pub x: Point,
    pub xi: [f64; 2],
    pub gradients: Vec<[f64; 2]>,
    pub p: f64,
}

impl SymbolQuery {
    pub fn new(x: Point, xi: [f64; 2], gradients: Vec<[f64; 2]>, p: f64) -> Result<Self> {
        if !(xi[0].hypot(xi[1]) > 0.0) || !xi.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("covector xi must be finite and non-zero"));
        }
        if gradients.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gradients must be finite"));
        }
        if !(p > 0.0) {
            return Err(Error::invalid(format!("exponent p must be positive (got {p})")));
        }
        Ok(SymbolQuery { x, xi, gradients, p })
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Angle of a direction reduced to `[0, pi)`.
pub fn line_angle(v: [f64; 2]) -> f64 {
    let a = v[1].atan2(v[0]).rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

/// Distance between two line directions (angles modulo `pi`).
pub fn line_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Symbol of a single measurement with gradient `g`.
pub fn symbol(g: [f64; 2], xi: [f64; 2], p: f64) -> Result<f64> {
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let c = dot(g, xi);
    let cos2 = c * c / (gn * gn * dot(xi, xi));
    Ok(gn.powf(p) * (1.0 - p * cos2))
}

/// `d p_j / d xi`.
pub fn symbol_xi_gradient(g: [f64; 2], xi: [f64; 2], p: f64) -> Result<[f64; 2]> {
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let x2 = dot(xi, xi);
    let c = dot(g, xi);
    let f = 2.0 * p * gn.powf(p - 2.0) * c / x2;
    Ok([f * (c * xi[0] / x2 - g[0]), f * (c * xi[1] / x2 - g[1])])
}

/// `d p_j / d g`, used with the Hessian of `u~` for the spatial derivative.
fn symbol_g_gradient(g: [f64; 2], xi: [f64; 2], p: f64) -> [f64; 2] {
    let gn = norm(g);
    let g2 = gn * gn;
    let x2 = dot(xi, xi);
    let c = dot(g, xi);
    let cos2 = c * c / (g2 * x2);
    let gp = gn.powf(p);
    let a = p * gp / g2 * (1.0 - p * cos2);
    let b = -p * gp * 2.0 * c / (g2 * x2);
    let d = p * gp * 2.0 * c * c / (g2 * g2 * x2);
    [a * g[0] + b * xi[0] + d * g[0], a * g[1] + b * xi[1] + d * g[1]]
}

/// `p_j^0(x, xi)` for measurement `j` of the query.
pub fn principal_symbol(q: &SymbolQuery, j: usize) -> Result<f64> {
    let g = *q
        .gradients
        .get(j)
        .ok_or_else(|| Error::invalid(format!("measurement {j} out of range")))?;
    symbol(g, q.xi, q.p)
}

/// Symbol of the normal operator `sum_j P_j^* P_j`: `sum_j p_j^2`.
/// Measurements with vanishing gradient contribute nothing.
pub fn normal_symbol(q: &SymbolQuery) -> Result<f64> {
    let mut any = false;
    let mut s = 0.0;
    for &g in &q.gradients {
        if norm(g) > 0.0 {
            any = true;
            let v = symbol(g, q.xi, q.p)?;
            s += v * v;
        }
    }
    if any {
        Ok(s)
    } else {
        Err(Error::ZeroGradient)
    }
}

/// Half-opening angle `arccos(p^{-1/2})` of the characteristic cone, or
/// `None` when `p < 1` (no characteristic directions).
pub fn cone_angle(p: f64) -> Option<f64> {
    (p >= 1.0).then(|| (1.0 / p.sqrt()).min(1.0).acos())
}

/// Pointwise ellipticity verdict for one measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityVerdict {
    /// Analytic verdict: the symbol has no zero on the unit circle.
    pub elliptic: bool,
    /// Characteristic directions (angles in `[0, pi)`), empty when elliptic.
    pub characteristic_angles: Vec<f64>,
    /// `min |p_j| / |g|^p` over the angular grid.
    pub grid_min_ratio: f64,
    /// Whether the symbol changes sign between neighbouring grid angles.
    pub grid_sign_change: bool,
}

/// Ellipticity of `P_j` at a point with reference gradient `g`. The verdict
/// comes from the cone intersection, which catches the tangential zeros at
/// `p = 1` that a finite angular grid cannot see; the grid scan is reported
/// alongside as a cross-check.
pub fn is_elliptic_single(g: [f64; 2], p: f64) -> Result<EllipticityVerdict> {
    if !(p > 0.0) {
        return Err(Error::invalid(format!("exponent p must be positive (got {p})")));
    }
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let scale = gn.powf(p);
    let mut min_ratio = f64::INFINITY;
    let mut sign_change = false;
    let mut prev: Option<f64> = None;
    for k in 0..=ANGULAR_SAMPLES {
        // The closing sample repeats angle 0 so the scan wraps around.
        let a = PI * (k % ANGULAR_SAMPLES) as f64 / ANGULAR_SAMPLES as f64;
        let s = symbol(g, [a.cos(), a.sin()], p)?;
        min_ratio = min_ratio.min(s.abs() / scale);
        if let Some(ps) = prev {
            sign_change |= ps * s < 0.0;
        }
        prev = Some(s);
    }
    let characteristic_angles = match cone_angle(p) {
        None => Vec::new(),
        Some(alpha) => dedup_angles(vec![
            (line_angle(g) + alpha).rem_euclid(PI),
            (line_angle(g) - alpha).rem_euclid(PI),
        ]),
    };
    Ok(EllipticityVerdict {
        elliptic: characteristic_angles.is_empty(),
        characteristic_angles,
        grid_min_ratio: min_ratio,
        grid_sign_change: sign_change,
    })
}

/// Summary of [`is_elliptic_single`] over a field of gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub elliptic_everywhere: bool,
    pub non_elliptic_points: usize,
    pub points: usize,
}

pub fn ellipticity_map(gradients: &[[f64; 2]], p: f64) -> Result<EllipticityReport> {
    let mut bad = 0;
    for &g in gradients {
        if !is_elliptic_single(g, p)?.elliptic {
            bad += 1;
        }
    }
    Ok(EllipticityReport {
        elliptic_everywhere: bad == 0,
        non_elliptic_points: bad,
        points: gradients.len(),
    })
}

fn dedup_angles(mut v: Vec<f64>) -> Vec<f64> {
    for a in v.iter_mut() {
        if PI - *a < CONE_TOL {
            *a = 0.0;
        }
    }
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for a in v {
        if out.iter().all(|&b| line_distance(a, b) >= CONE_TOL) {
            out.push(a);
        }
    }
    out
}

/// Directions (angles in `[0, pi)`) where the normal symbol vanishes: the
/// common points of all characteristic cones.
pub fn loss_angles(gradients: &[[f64; 2]], p: f64) -> Result<Vec<f64>> {
    if gradients.is_empty() {
        return Err(Error::invalid("at least one gradient is required"));
    }
    if gradients.iter().any(|&g| norm(g) == 0.0) {
        return Err(Error::ZeroGradient);
    }
    let Some(alpha) = cone_angle(p) else {
        return Ok(Vec::new());
    };
    let on_cone = |theta: f64, g: [f64; 2]| {
        let beta = line_distance(theta, line_angle(g));
        (beta - alpha).abs() < CONE_TOL || (beta - (PI - alpha)).abs() < CONE_TOL
    };
    let g0 = line_angle(gradients[0]);
    let candidates = dedup_angles(vec![(g0 + alpha).rem_euclid(PI), (g0 - alpha).rem_euclid(PI)]);
    Ok(candidates
        .into_iter()
        .filter(|&th| gradients[1..].iter().all(|&g| on_cone(th, g)))
        .collect())
}

/// Unit covectors (angle in `[0, pi)`) where the normal symbol vanishes.
pub fn loss_directions(gradients: &[[f64; 2]], p: f64) -> Result<Vec<[f64; 2]>> {
    Ok(loss_angles(gradients, p)?.into_iter().map(|a| [a.cos(), a.sin()]).collect())
}

/// Propagation directions in degrees `[0, 180)`: loss directions turned by 90.
pub fn predicted_streak_angles_deg(gradients: &[[f64; 2]], p: f64) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = loss_angles(gradients, p)?
        .into_iter()
        .map(|a| (a.to_degrees() + 90.0).rem_euclid(180.0))
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Rotates `xi` (keeping its length) onto the nearest zero of `p_j`.
pub fn project_to_characteristic(g: [f64; 2], xi: [f64; 2], p: f64) -> Result<[f64; 2]> {
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let alpha = cone_angle(p).ok_or(Error::NotCharacteristic {
        value: symbol(g, xi, p)?,
    })?;
    let th = xi[1].atan2(xi[0]);
    let tg = g[1].atan2(g[0]);
    let r = norm(xi);
    let best = [tg + alpha, tg - alpha, tg + PI + alpha, tg + PI - alpha]
        .into_iter()
        .min_by(|a, b| {
            let da = (th - a).sin().abs() + (1.0 - (th - a).cos());
            let db = (th - b).sin().abs() + (1.0 - (th - b).cos());
            da.total_cmp(&db)
        })
        .unwrap();
    Ok([r * best.cos(), r * best.sin()])
}

/// Result of [`real_principal_type_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalTypeReport {
    /// `|d p / d xi| > 1e-10` at every checked characteristic point.
    pub real_principal_type: bool,
    pub checked_points: usize,
    /// Smallest `|d p / d xi|` over the checked points (infinite if none).
    pub min_xi_gradient: f64,
}

/// Checks that the `xi`-gradient of the symbol does not vanish on the
/// characteristic set, at every sample gradient and each of its
/// characteristic unit covectors. This fails at `p = 1`, where the zero of
/// the symbol is a double zero at `xi` parallel to `g`.
pub fn real_principal_type_check(gradients: &[[f64; 2]], p: f64) -> Result<PrincipalTypeReport> {
    let mut min = f64::INFINITY;
    let mut n = 0;
    for &g in gradients {
        let v = is_elliptic_single(g, p)?;
        for a in v.characteristic_angles {
            let d = symbol_xi_gradient(g, [a.cos(), a.sin()], p)?;
            min = min.min(norm(d));
            n += 1;
        }
    }
    Ok(PrincipalTypeReport {
        real_principal_type: !(min <= 1e-10),
        checked_points: n,
        min_xi_gradient: min,
    })
}

/// A reference gradient field `x -> grad u~(x)` with its Jacobian.
pub trait GradientField: Send + Sync {
    fn gradient(&self, x: Point) -> [f64; 2];
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2];
}

/// Spatially constant gradient.
#[derive(Debug, Clone, Copy)]
pub struct ConstantGradient(pub [f64; 2]);

impl GradientField for ConstantGradient {
    fn gradient(&self, _: Point) -> [f64; 2] {
        self.0
    }
    fn jacobian(&self, _: Point) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// Gradient of a closed-form harmonic extension; the Jacobian is its Hessian.
#[derive(Debug, Clone)]
pub struct ClosedFormGradient(pub HarmonicExtension);

impl GradientField for ClosedFormGradient {
    fn gradient(&self, x: Point) -> [f64; 2] {
        self.0.gradient(x)
    }
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        self.0.hessian(x)
    }
}

/// Finite element gradient: per-triangle values averaged to the nodes and
/// interpolated linearly; the Jacobian uses central differences with
/// half-width equal to the mean edge length.
#[derive(Debug, Clone)]
pub struct FeGradient {
    mesh: Arc<Mesh2D>,
    nodal: Vec<[f64; 2]>,
    h: f64,
}

impl FeGradient {
    pub fn from_triangles(mesh: &Arc<Mesh2D>, per_triangle: &[[f64; 2]]) -> Result<Self> {
        if per_triangle.len() != mesh.num_triangles() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self::from_nodes(mesh, nodal_average(mesh, per_triangle)))
    }

    pub fn from_nodes(mesh: &Arc<Mesh2D>, nodal: Vec<[f64; 2]>) -> Self {
        FeGradient {
            mesh: mesh.clone(),
            h: mesh.mesh_size(),
            nodal,
        }
    }
}

impl GradientField for FeGradient {
    fn gradient(&self, x: Point) -> [f64; 2] {
        let loc = self
            .mesh
            .locate_point(x)
            .unwrap_or_else(|_| self.mesh.nearest_boundary_location(x));
        let tri = self.mesh.triangles()[loc.triangle];
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += loc.bary[k] * self.nodal[tri[k]][0];
            g[1] += loc.bary[k] * self.nodal[tri[k]][1];
        }
        g
    }

    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let d = self.h;
        let gxp = self.gradient([x[0] + d, x[1]]);
        let gxm = self.gradient([x[0] - d, x[1]]);
        let gyp = self.gradient([x[0], x[1] + d]);
        let gym = self.gradient([x[0], x[1] - d]);
        // Row m holds d g_m / d x.
        [
            [(gxp[0] - gxm[0]) / (2.0 * d), (gyp[0] - gym[0]) / (2.0 * d)],
            [(gxp[1] - gxm[1]) / (2.0 * d), (gyp[1] - gym[1]) / (2.0 * d)],
        ]
    }
}

/// Which Hamiltonian drives the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceMode {
    /// Symbol of a single measurement.
    Single(usize),
    /// Normal operator. Its symbol `sum_j p_j^2` has a double zero, so its
    /// Hamiltonian field vanishes on the characteristic set; the curve is
    /// traced with the vanishing measurement symbol of largest
    /// `|d p_j / d xi|` at the start point.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LeftDomain,
    MaxSteps,
    SymbolDrift,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceOptions {
    pub step: f64,
    pub max_steps: usize,
    pub drift_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step: 1e-3,
            max_steps: 1000,
            drift_tol: 1e-6,
        }
    }
}

/// A traced bicharacteristic: samples of `(x(t), xi(t))` with unit `xi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bicharacteristic {
    pub t_values: Vec<f64>,
    pub points: Vec<(Point, [f64; 2])>,
    pub terminated: Termination,
    /// Measurement whose symbol generated the flow.
    pub measurement: usize,
    /// Largest `|p(x(t), xi(t))|` over the accepted samples.
    pub max_symbol: f64,
    /// Largest `|dx/dt . xi| / |dx/dt|` over the accepted samples.
    pub max_perpendicularity: f64,
}

fn hamiltonian(field: &dyn GradientField, x: Point, xi: [f64; 2], p: f64) -> Result<([f64; 2], [f64; 2])> {
    let g = field.gradient(x);
    let dxi = symbol_xi_gradient(g, xi, p)?;
    let dg = symbol_g_gradient(g, xi, p);
    let jac = field.jacobian(x);
    // d p / d x_k = sum_m (d p / d g_m) (d g_m / d x_k).
    let dx = [dg[0] * jac[0][0] + dg[1] * jac[1][0], dg[0] * jac[0][1] + dg[1] * jac[1][1]];
    Ok((dxi, [-dx[0], -dx[1]]))
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Integrates `dx/dt = d p / d xi`, `d xi / dt = -d p / d x` with classical
/// RK4, renormalizing `xi` after each step. Stops when `x` leaves the
/// domain (the unit disc, or the given mesh), after `max_steps`, or when the
/// symbol drifts above `drift_tol`.
pub fn trace_bicharacteristic(
    x0: Point,
    xi0: [f64; 2],
    fields: &[&dyn GradientField],
    p: f64,
    mode: TraceMode,
    opts: &TraceOptions,
    domain: Option<&Mesh2D>,
) -> Result<Bicharacteristic> {
    if !(opts.step > 0.0) {
        return Err(Error::invalid("trace step must be positive"));
    }
    if norm(xi0) == 0.0 {
        return Err(Error::invalid("covector xi must be non-zero"));
    }
    let xi0 = normalize(xi0);
    let j = match mode {
        TraceMode::Single(j) => {
            let f = fields
                .get(j)
                .ok_or_else(|| Error::invalid(format!("measurement {j} out of range")))?;
            let s = symbol(f.gradient(x0), xi0, p)?;
            if s.abs() > 1e-10 {
                return Err(Error::NotCharacteristic { value: s });
            }
            j
        }
        TraceMode::Normal => {
            let mut best: Option<(usize, f64)> = None;
            let mut total = 0.0;
            for (j, f) in fields.iter().enumerate() {
                let g = f.gradient(x0);
                let s = symbol(g, xi0, p)?;
                total += s * s;
                let d = norm(symbol_xi_gradient(g, xi0, p)?);
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
            if total.sqrt() > 1e-10 {
                return Err(Error::NotCharacteristic { value: total });
            }
            best.ok_or_else(|| Error::invalid("at least one gradient field is required"))?.0
        }
    };
    let field = fields[j];
    let inside = |x: Point| match domain {
        Some(m) => m.locate_point(x).is_ok(),
        None => norm(x) <= 1.0,
    };

    let mut x = x0;
    let mut xi = xi0;
    let mut t = 0.0;
    let mut out = Bicharacteristic {
        t_values: vec![0.0],
        points: vec![(x, xi)],
        terminated: Termination::MaxSteps,
        measurement: j,
        max_symbol: symbol(field.gradient(x), xi, p)?.abs(),
        max_perpendicularity: 0.0,
    };
    let perp = |d: [f64; 2], xi: [f64; 2]| {
        let n = norm(d);
        if n > 0.0 {
            dot(d, xi).abs() / n
        } else {
            0.0
        }
    };
    out.max_perpendicularity = perp(hamiltonian(field, x, xi, p)?.0, xi);

    let h = opts.step;
    for _ in 0..opts.max_steps {
        let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
        let (k1x, k1k) = hamiltonian(field, x, xi, p)?;
        let (k2x, k2k) = hamiltonian(field, add(x, k1x, h / 2.0), add(xi, k1k, h / 2.0), p)?;
        let (k3x, k3k) = hamiltonian(field, add(x, k2x, h / 2.0), add(xi, k2k, h / 2.0), p)?;
        let (k4x, k4k) = hamiltonian(field, add(x, k3x, h), add(xi, k3k, h), p)?;
        let nx = [
            x[0] + h / 6.0 * (k1x[0] + 2.0 * k2x[0] + 2.0 * k3x[0] + k4x[0]),
            x[1] + h / 6.0 * (k1x[1] + 2.0 * k2x[1] + 2.0 * k3x[1] + k4x[1]),
        ];
        let nxi = normalize([
            xi[0] + h / 6.0 * (k1k[0] + 2.0 * k2k[0] + 2.0 * k3k[0] + k4k[0]),
            xi[1] + h / 6.0 * (k1k[1] + 2.0 * k2k[1] + 2.0 * k3k[1] + k4k[1]),
        ]);
        if !inside(nx) {
            out.terminated = Termination::LeftDomain;
            return Ok(out);
        }
        let s = symbol(field.gradient(nx), nxi, p)?.abs();
        if s > opts.drift_tol {
            out.terminated = Termination::SymbolDrift;
            return Ok(out);
        }
        x = nx;
        xi = nxi;
        t += h;
        out.max_symbol = out.max_symbol.max(s);
        out.max_perpendicularity = out.max_perpendicularity.max(perp(hamiltonian(field, x, xi, p)?.0, xi));
        out.t_values.push(t);
        out.points.push((x, xi));
    }
    Ok(out)
}
