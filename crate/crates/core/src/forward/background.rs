use std::sync::Arc;

use rayon::prelude::*;

use super::{compute_interior_data, nodal_average, solve_forward_mixed, BoundaryCondition, Conductivity};
use crate::error::{Error, Result};
use crate::fem::{FemField, FunctionSpace, SolveDiagnostics, SolverOptions};
use crate::mesh::{Mesh2D, MeshId};

/// Reference state `sigma~`, `u~_j`, `grad u~_j` and `H~_j` on the
/// reconstruction mesh.
#[derive(Debug, Clone)]
pub struct BackgroundState {
    pub mesh: Arc<Mesh2D>,
    /// Mesh on which the reference forward problems were solved.
    pub forward_mesh: MeshId,
    pub p: f64,
    pub boundary_conditions: Vec<BoundaryCondition>,
    pub sigma_ref: FemField,
    pub potentials: Vec<FemField>,
    /// Reference gradients at the vertices of the reconstruction mesh.
    pub nodal_gradients: Vec<Vec<[f64; 2]>>,
    /// Per-triangle reference gradients (mean of the vertex values).
    pub gradients: Vec<Vec<[f64; 2]>>,
    pub data_ref: Vec<FemField>,
    /// `min_T |grad u~_j|` for each measurement.
    pub gradient_lower_bounds: Vec<f64>,
    pub diagnostics: Vec<SolveDiagnostics>,
}

impl BackgroundState {
    pub fn measurement_count(&self) -> usize {
        self.gradients.len()
    }

    /// Per-triangle gradient of the P1 reference conductivity.
    pub fn sigma_gradients(&self) -> Vec<[f64; 2]> {
        (0..self.mesh.num_triangles()).map(|t| self.sigma_ref.p1_gradient(t)).collect()
    }

    /// Fails with the first triangle where some reference gradient is at or
    /// below `floor`.
    pub fn check_nonvanishing(&self, floor: f64) -> Result<()> {
        for g in &self.gradients {
            for (t, v) in g.iter().enumerate() {
                let m = v[0].hypot(v[1]);
                if !(m > floor) {
                    return Err(Error::VanishingGradient { triangle: t, magnitude: m });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BackgroundOptions {
    pub solver: SolverOptions,
    /// Declares the reference gradients nowhere vanishing; this is checked.
    pub require_nonvanishing: bool,
    pub gradient_floor: f64,
}

impl Default for BackgroundOptions {
    fn default() -> Self {
        BackgroundOptions {
            solver: SolverOptions::with_tol(1e-12),
            require_nonvanishing: true,
            gradient_floor: 1e-8,
        }
    }
}

fn transfer(field: &FemField, dst: &Arc<Mesh2D>) -> Result<FemField> {
    if field.mesh_id() == dst.id() {
        Ok(field.clone())
    } else {
        Ok(field.project_p1(dst)?.0)
    }
}

/// Solves the reference problems on `forward_mesh` and carries the results
/// over to `recon_mesh` by nodal interpolation.
pub fn make_background(
    bcs: &[BoundaryCondition],
    p: f64,
    sigma_ref: &Conductivity,
    forward_mesh: &Arc<Mesh2D>,
    recon_mesh: &Arc<Mesh2D>,
    opts: &BackgroundOptions,
) -> Result<BackgroundState> {
    if bcs.is_empty() {
        return Err(Error::invalid("at least one boundary condition is required"));
    }
    if !(p > 0.0) {
        return Err(Error::invalid(format!("exponent p must be positive (got {p})")));
    }
    let sigma_forward = match sigma_ref {
        Conductivity::Nodal(f) if f.mesh_id() != forward_mesh.id() => Conductivity::Nodal(transfer(f, forward_mesh)?),
        s => s.clone(),
    };
    let sigma_recon = match sigma_ref {
        Conductivity::Nodal(f) => transfer(f, recon_mesh)?,
        s => s.interpolate(recon_mesh)?,
    };
    let fwd_p1 = FunctionSpace::lagrange1(forward_mesh);

    let per_bc: Vec<_> = bcs
        .par_iter()
        .map(|bc| -> Result<_> {
            let sol = solve_forward_mixed(forward_mesh, &sigma_forward, bc, &opts.solver)?;
            let (h, _) = compute_interior_data(forward_mesh, &sigma_forward, &sol.gradients, p)?;
            let nodal = nodal_average(forward_mesh, &sol.gradients);
            let gx = FemField::new(fwd_p1.clone(), nodal.iter().map(|g| g[0]).collect())?;
            let gy = FemField::new(fwd_p1.clone(), nodal.iter().map(|g| g[1]).collect())?;
            let u = transfer(&sol.potential, recon_mesh)?;
            let h = transfer(&h, recon_mesh)?;
            let gx = transfer(&gx, recon_mesh)?;
            let gy = transfer(&gy, recon_mesh)?;
            let nodal: Vec<[f64; 2]> = gx.values().iter().zip(gy.values()).map(|(a, b)| [*a, *b]).collect();
            let per_tri: Vec<[f64; 2]> = recon_mesh
                .triangles()
                .iter()
                .map(|tri| {
                    let mut g = [0.0; 2];
                    for &v in tri {
                        g[0] += nodal[v][0] / 3.0;
                        g[1] += nodal[v][1] / 3.0;
                    }
                    g
                })
                .collect();
            Ok((u, nodal, per_tri, h, sol.diagnostics))
        })
        .collect::<Result<_>>()?;

    let mut state = BackgroundState {
        mesh: recon_mesh.clone(),
        forward_mesh: forward_mesh.id(),
        p,
        boundary_conditions: bcs.to_vec(),
        sigma_ref: sigma_recon,
        potentials: Vec::new(),
        nodal_gradients: Vec::new(),
        gradients: Vec::new(),
        data_ref: Vec::new(),
        gradient_lower_bounds: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (u, nodal, per_tri, h, diag) in per_bc {
        let lb = per_tri.iter().map(|g| g[0].hypot(g[1])).fold(f64::INFINITY, f64::min);
        state.potentials.push(u);
        state.nodal_gradients.push(nodal);
        state.gradients.push(per_tri);
        state.data_ref.push(h);
        state.gradient_lower_bounds.push(lb);
        state.diagnostics.push(diag);
    }
    if state.sigma_ref.values().iter().any(|s| !(*s > 0.0)) {
        return Err(Error::NonPositive {
            what: "reference conductivity",
            value: state.sigma_ref.values().iter().copied().fold(f64::INFINITY, f64::min),
            location: "reconstruction mesh".into(),
        });
    }
    if opts.require_nonvanishing {
        state.check_nonvanishing(opts.gradient_floor)?;
    }
    Ok(state)
}

/// Interior data `H_j` for conductivity `sigma`, computed on `mesh` (the
/// forward mesh of the two-mesh protocol).
pub fn simulate_data(
    bcs: &[BoundaryCondition],
    p: f64,
    sigma: &Conductivity,
    mesh: &Arc<Mesh2D>,
    solver: &SolverOptions,
) -> Result<Vec<FemField>> {
    bcs.par_iter()
        .map(|bc| {
            let sol = solve_forward_mixed(mesh, sigma, bc, solver)?;
            Ok(compute_interior_data(mesh, sigma, &sol.gradients, p)?.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disc_mesh;

    #[test]
    fn constant_gradients_survive_projection() {
        let fwd = Arc::new(generate_disc_mesh(1300, 1).unwrap());
        let rec = Arc::new(generate_disc_mesh(1000, 0).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bcs = [BoundaryCondition::linear(1.0, 0.0), BoundaryCondition::linear(s, s)];
        let bg = make_background(&bcs, 2.0, &Conductivity::Constant(1.0), &fwd, &rec, &BackgroundOptions::default()).unwrap();
        assert_eq!(bg.measurement_count(), 2);
        assert_eq!(bg.forward_mesh, fwd.id());
        for g in &bg.gradients[0] {
            assert!((g[0] - 1.0).abs() < 1e-8 && g[1].abs() < 1e-8);
        }
        for g in &bg.gradients[1] {
            assert!((g[0] - s).abs() < 1e-6 && (g[1] - s).abs() < 1e-6);
        }
        assert!(bg.data_ref.iter().all(|h| h.values().iter().all(|v| (v - 1.0).abs() < 1e-8)));
        assert!(bg.gradient_lower_bounds.iter().all(|b| (b - 1.0).abs() < 1e-6));
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let m = Arc::new(generate_disc_mesh(400, 0).unwrap());
        // grad Re z^2 = (2x, -2y) vanishes at the origin.
        let bcs = [BoundaryCondition::parse("re2").unwrap()];
        let opts = BackgroundOptions {
            gradient_floor: 0.3,
            ..Default::default()
        };
        let r = make_background(&bcs, 2.0, &Conductivity::Constant(1.0), &m, &m, &opts);
        assert!(matches!(r, Err(Error::VanishingGradient { .. })));
        let relaxed = BackgroundOptions {
            require_nonvanishing: false,
            ..opts
        };
        assert!(make_background(&bcs, 2.0, &Conductivity::Constant(1.0), &m, &m, &relaxed).is_ok());
    }
}
