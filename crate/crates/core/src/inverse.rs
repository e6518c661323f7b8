//! Least-squares finite element reconstruction of `delta sigma` from
//! linearised data `dH_j[delta sigma] = H_j - H~_j`.
//!
//! The second-order system
//! `div(delta sigma grad u~_j) + div(sigma~ grad delta u_j) = 0`,
//! `|grad u~_j|^p delta sigma + p sigma~ |grad u~_j|^{p-2} grad u~_j . grad delta u_j = H_j - H~_j`
//! is rewritten with auxiliary unknowns `x0 ~ delta sigma` (P1) and
//! `x_j ~ grad delta u_j` (RT0), and the sum of squared residuals of the
//! first-order system plus `|delta sigma - x0|^2 + sum_j |grad delta u_j - x_j|^2`
//! is minimized over P1 x [P1_0]^J x P1 x [RT0]^J.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble, homogeneous_boundary, ElementDofs, LocalSystem};
use crate::fem::quadrature::DEGREE_4;
use crate::fem::{
    apply_dirichlet, assemble_form, solve_spd, Coefficient, Element, FemField, FormTag, FunctionSpace, SolverOptions,
    SparseSystem, Symmetry,
};
use crate::forward::{nodal_average, BackgroundState};
use crate::mesh::Mesh2D;

/// Tikhonov term `eps (delta sigma, delta sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tikhonov {
    /// Fixed `eps >= 0`.
    Absolute(f64),
    /// `eps = factor * (largest diagonal entry of the unregularized matrix)`.
    RelativeToDiagonal(f64),
}

impl Default for Tikhonov {
    fn default() -> Self {
        Tikhonov::Absolute(0.0)
    }
}

/// Linearised problem on the reconstruction mesh of `background`.
#[derive(Debug, Clone)]
pub struct LinearizedProblem {
    pub background: Arc<BackgroundState>,
    /// `H_j - H~_j` as P1 fields on the reconstruction mesh.
    pub data_diff: Vec<FemField>,
    pub tikhonov: Tikhonov,
}

impl LinearizedProblem {
    /// Validates the data. Data whose provenance is the reconstruction mesh
    /// itself is rejected unless it is marked as manufactured.
    pub fn new(background: Arc<BackgroundState>, data_diff: Vec<FemField>, tikhonov: Tikhonov) -> Result<Self> {
        if data_diff.len() != background.measurement_count() {
            return Err(Error::invalid(format!(
                "{} data fields for {} measurements",
                data_diff.len(),
                background.measurement_count()
            )));
        }
        let mesh_id = background.mesh.id();
        for (j, d) in data_diff.iter().enumerate() {
            if d.mesh_id() != mesh_id || d.space().is_vector() || d.space().local_dim() != 3 {
                return Err(Error::MeshMismatch);
            }
            let prov = d.provenance();
            if prov.origin == mesh_id && !prov.manufactured {
                return Err(Error::InverseCrime(format!(
                    "data for measurement {j} was computed on the reconstruction mesh {mesh_id}"
                )));
            }
        }
        match tikhonov {
            Tikhonov::Absolute(e) | Tikhonov::RelativeToDiagonal(e) if !(e >= 0.0 && e.is_finite()) => {
                return Err(Error::invalid("Tikhonov parameter must be a finite non-negative number"))
            }
            _ => {}
        }
        Ok(LinearizedProblem {
            background,
            data_diff,
            tikhonov,
        })
    }

    /// Builds `H_j - H~_j` from measured data on the forward mesh by nodal
    /// interpolation onto the reconstruction mesh.
    pub fn from_measurements(background: Arc<BackgroundState>, measured: &[FemField], tikhonov: Tikhonov) -> Result<Self> {
        if measured.len() != background.measurement_count() {
            return Err(Error::invalid("one measured field per boundary condition is required"));
        }
        let mesh = background.mesh.clone();
        let mut diff = Vec::with_capacity(measured.len());
        for (h, href) in measured.iter().zip(&background.data_ref) {
            let projected = if h.mesh_id() == mesh.id() {
                h.clone()
            } else {
                h.project_p1(&mesh)?.0
            };
            diff.push(projected.axpby(1.0, href, -1.0)?);
        }
        Self::new(background, diff, tikhonov)
    }

    pub fn measurement_count(&self) -> usize {
        self.data_diff.len()
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.background.mesh
    }
}

/// Positions of the unknown blocks in the compound vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub vertices: usize,
    pub edges: usize,
    pub measurements: usize,
}

impl BlockLayout {
    pub fn delta_sigma(&self) -> std::ops::Range<usize> {
        0..self.vertices
    }
    pub fn delta_u(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.vertices * (1 + j);
        s..s + self.vertices
    }
    pub fn sigma_copy(&self) -> std::ops::Range<usize> {
        let s = self.vertices * (1 + self.measurements);
        s..s + self.vertices
    }
    pub fn flux(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.vertices * (2 + self.measurements) + self.edges * j;
        s..s + self.edges
    }
    pub fn len(&self) -> usize {
        self.vertices * (2 + self.measurements) + self.edges * self.measurements
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assembled least-squares system with its bookkeeping.
#[derive(Debug, Clone)]
pub struct LsSystem {
    /// SPD system with the `delta u_j` boundary values eliminated.
    pub system: SparseSystem,
    pub layout: BlockLayout,
    pub eps_used: f64,
    /// `sum_j ||H_j - H~_j||^2` under the assembly quadrature.
    pub data_norm_sq: f64,
}

impl LsSystem {
    /// Value of the least-squares functional (including the Tikhonov term)
    /// at a vector satisfying the boundary constraints.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let kx = self.system.matrix.apply(x);
        let xkx: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
        let bx: f64 = x.iter().zip(&self.system.rhs).map(|(a, b)| a * b).sum();
        xkx - 2.0 * bx + self.data_norm_sq
    }
}

fn norm2(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Assembles the least-squares normal system.
pub fn assemble_ls_system(problem: &LinearizedProblem) -> Result<LsSystem> {
    let bg = &problem.background;
    let mesh = bg.mesh.clone();
    let j_count = problem.measurement_count();
    let p = bg.p;
    for (j, g) in bg.gradients.iter().enumerate() {
        if g.len() != mesh.num_triangles() {
            return Err(Error::MeshMismatch);
        }
        if let Some(t) = g.iter().position(|v| !(norm2(*v) > 0.0)) {
            let _ = j;
            return Err(Error::VanishingGradient {
                triangle: t,
                magnitude: norm2(g[t]),
            });
        }
    }
    let p1 = FunctionSpace::lagrange1(&mesh);
    let rt = FunctionSpace::raviart_thomas0(&mesh);
    let layout = BlockLayout {
        vertices: p1.dof_count(),
        edges: rt.dof_count(),
        measurements: j_count,
    };
    let sigma_grad = bg.sigma_gradients();

    let row_dofs: Vec<Vec<usize>> = (0..mesh.num_triangles())
        .map(|t| {
            let v = p1.dofs(t);
            let e = rt.dofs(t);
            let mut d = Vec::with_capacity(6 + 6 * j_count);
            d.extend(v.iter().map(|&i| layout.delta_sigma().start + i));
            for j in 0..j_count {
                d.extend(v.iter().map(|&i| layout.delta_u(j).start + i));
            }
            d.extend(v.iter().map(|&i| layout.sigma_copy().start + i));
            for j in 0..j_count {
                d.extend(e.iter().map(|&i| layout.flux(j).start + i));
            }
            d
        })
        .collect();
    let dofs = ElementDofs {
        row_dofs,
        col_dofs: None,
    };
    let du_loc = |j: usize| 3 + 3 * j;
    let x0_loc = 3 + 3 * j_count;
    let xj_loc = |j: usize| 6 + 3 * j_count + 3 * j;

    let kernel = |t: usize, loc: &mut LocalSystem| {
        let el = Element::new(&mesh, t);
        let grads = el.p1_grads();
        let signs = rt.rt_signs(t);
        let divs = el.rt_divs(&signs);
        let gs = sigma_grad[t];
        let mut r: Vec<(usize, f64)> = Vec::with_capacity(6);
        for (bary, wq) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
            let w = wq * el.area;
            let x = el.point(bary);
            let phi = el.rt_values(&signs, &x);
            let s = bg.sigma_ref.eval_local(t, bary);
            for j in 0..j_count {
                let g = bg.gradients[j][t];
                let gn = norm2(g);
                // div g_j from div(sigma~ g_j) = 0.
                let divg = -(gs[0] * g[0] + gs[1] * g[1]) / s;

                r.clear();
                for k in 0..3 {
                    r.push((x0_loc + k, g[0] * grads[k][0] + g[1] * grads[k][1] + divg * bary[k]));
                }
                for k in 0..3 {
                    r.push((xj_loc(j) + k, s * divs[k] + gs[0] * phi[k][0] + gs[1] * phi[k][1]));
                }
                loc.add_residual(w, &r, 0.0);

                let a0 = gn.powf(p);
                let a1 = p * s * gn.powf(p - 2.0);
                r.clear();
                for k in 0..3 {
                    r.push((x0_loc + k, a0 * bary[k]));
                }
                for k in 0..3 {
                    r.push((xj_loc(j) + k, a1 * (g[0] * phi[k][0] + g[1] * phi[k][1])));
                }
                loc.add_residual(w, &r, problem.data_diff[j].eval_local(t, bary));

                for c in 0..2 {
                    r.clear();
                    for k in 0..3 {
                        r.push((du_loc(j) + k, grads[k][c]));
                    }
                    for k in 0..3 {
                        r.push((xj_loc(j) + k, -phi[k][c]));
                    }
                    loc.add_residual(w, &r, 0.0);
                }
            }
            r.clear();
            for k in 0..3 {
                r.push((k, bary[k]));
            }
            for k in 0..3 {
                r.push((x0_loc + k, -bary[k]));
            }
            loc.add_residual(w, &r, 0.0);
        }
    };
    let (mut matrix, rhs) = assemble(layout.len(), layout.len(), &dofs, kernel);

    let eps = match problem.tikhonov {
        Tikhonov::Absolute(e) => e,
        Tikhonov::RelativeToDiagonal(f) => f * matrix.diagonal().iter().copied().fold(0.0, f64::max),
    };
    if eps > 0.0 {
        let mass = assemble_form(&p1, &p1, FormTag::Mass)?;
        for i in 0..mass.nrows() {
            let (cols, vals) = mass.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                matrix.add_to(i, c, eps * v);
            }
        }
    }

    let mut data_norm_sq = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        for (bary, wq) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
            for d in &problem.data_diff {
                let v = d.eval_local(t, bary);
                data_norm_sq += wq * area * v * v;
            }
        }
    }

    let mut constraints = Vec::new();
    for j in 0..j_count {
        constraints.extend(homogeneous_boundary(&p1, layout.delta_u(j).start));
    }
    let system = apply_dirichlet(SparseSystem::new(matrix, rhs, Symmetry::Spd)?, &constraints)?;
    Ok(LsSystem {
        system,
        layout,
        eps_used: eps,
        data_norm_sq,
    })
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub delta_sigma: FemField,
    pub delta_u: Vec<FemField>,
    /// RT0 approximations of `grad delta u_j`.
    pub fluxes: Vec<FemField>,
    /// Relative residual of the linear solve.
    pub residual_norm: f64,
    pub iterations: usize,
    pub solver: String,
    pub eps_used: f64,
    /// Least-squares functional at the solution and at zero.
    pub energy: f64,
    pub energy_at_zero: f64,
}

/// Splits a solution vector of the compound system into fields.
pub fn split_solution(mesh: &Arc<Mesh2D>, layout: &BlockLayout, x: &[f64]) -> Result<(FemField, Vec<FemField>, Vec<FemField>)> {
    let p1 = FunctionSpace::lagrange1(mesh);
    let rt = FunctionSpace::raviart_thomas0(mesh);
    let ds = FemField::new(p1.clone(), x[layout.delta_sigma()].to_vec())?;
    let du = (0..layout.measurements)
        .map(|j| FemField::new(p1.clone(), x[layout.delta_u(j)].to_vec()))
        .collect::<Result<_>>()?;
    let fl = (0..layout.measurements)
        .map(|j| FemField::new(rt.clone(), x[layout.flux(j)].to_vec()))
        .collect::<Result<_>>()?;
    Ok((ds, du, fl))
}

/// Assembles and solves the least-squares system with Jacobi-preconditioned
/// conjugate gradients.
pub fn solve_reconstruction(problem: &LinearizedProblem, opts: &SolverOptions) -> Result<ReconstructionResult> {
    let ls = assemble_ls_system(problem)?;
    let sol = solve_spd(&ls.system, opts)?;
    let (delta_sigma, delta_u, fluxes) = split_solution(problem.mesh(), &ls.layout, &sol.x)?;
    Ok(ReconstructionResult {
        energy: ls.energy(&sol.x),
        energy_at_zero: ls.data_norm_sq,
        delta_sigma,
        delta_u,
        fluxes,
        residual_norm: sol.diagnostics.rel_residual,
        iterations: sol.diagnostics.iterations,
        solver: sol.diagnostics.method,
        eps_used: ls.eps_used,
    })
}

/// Fréchet derivative of the data map at the background:
/// `dH_j = delta sigma |g_j|^p + p sigma~ |g_j|^{p-2} g_j . grad delta u_j`
/// with `div(sigma~ grad delta u_j) = -div(delta sigma g_j)`, `delta u_j = 0`
/// on the boundary (P1 Galerkin). Gradients are averaged to the nodes by
/// area, matching how interior data are evaluated.
pub fn apply_linearised_forward(bg: &BackgroundState, delta_sigma: &FemField, opts: &SolverOptions) -> Result<Vec<FemField>> {
    let mesh = bg.mesh.clone();
    if delta_sigma.mesh_id() != mesh.id() || delta_sigma.space().is_vector() || delta_sigma.space().local_dim() != 3 {
        return Err(Error::MeshMismatch);
    }
    let p1 = FunctionSpace::lagrange1(&mesh);
    let k = assemble_form(&p1, &p1, FormTag::Stiffness(Coefficient::Field(&bg.sigma_ref)))?;
    let constraints = homogeneous_boundary(&p1, 0);
    let p = bg.p;
    let mut out = Vec::with_capacity(bg.measurement_count());
    for j in 0..bg.measurement_count() {
        let mut rhs = vec![0.0; p1.dof_count()];
        for t in 0..mesh.num_triangles() {
            let el = Element::new(&mesh, t);
            let grads = el.p1_grads();
            let g = bg.gradients[j][t];
            let dofs = p1.dofs(t);
            for (bary, wq) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
                let ds = delta_sigma.eval_local(t, bary);
                for i in 0..3 {
                    rhs[dofs[i]] -= wq * el.area * ds * (g[0] * grads[i][0] + g[1] * grads[i][1]);
                }
            }
        }
        let system = apply_dirichlet(SparseSystem::new(k.clone(), rhs, Symmetry::Spd)?, &constraints)?;
        let du = FemField::new(p1.clone(), solve_spd(&system, opts)?.x)?;
        let tri_grads: Vec<[f64; 2]> = (0..mesh.num_triangles()).map(|t| du.p1_gradient(t)).collect();
        let dg = nodal_average(&mesh, &tri_grads);
        let values = (0..mesh.num_vertices())
            .map(|v| {
                let g = bg.nodal_gradients[j][v];
                let gn = norm2(g);
                let s = bg.sigma_ref.values()[v];
                delta_sigma.values()[v] * gn.powf(p) + p * s * gn.powf(p - 2.0) * (g[0] * dg[v][0] + g[1] * dg[v][1])
            })
            .collect();
        let mut field = FemField::new(p1.clone(), values)?;
        let mut prov = field.provenance();
        prov.manufactured = true;
        field = field.with_provenance(prov);
        out.push(field);
    }
    Ok(out)
}
