//! Conductivity forward problem `div(sigma grad u) = 0`, `u = f` on the
//! circle, in mixed (P1 x RT0) and primal (P2) form, and the interior data
//! `H = sigma |grad u|^p`.

mod background;
mod boundary;
mod conductivity;

use std::sync::Arc;

pub use background::{make_background, simulate_data, BackgroundOptions, BackgroundState};
pub use boundary::{harmonic_extension, BoundaryCondition, HarmonicExtension, HarmonicFunction, HarmonicPolynomial};
pub use conductivity::Conductivity;

use crate::error::{Error, Result};
use crate::fem::quadrature::DEGREE_4;
use crate::fem::{
    apply_dirichlet, assemble_form, solve_saddle_with, solve_spd, Coefficient, CsrMatrix, Element, FemField, FormTag,
    FunctionSpace, SolveDiagnostics, SolverOptions, SparseSystem, Symmetry,
};
use crate::mesh::Mesh2D;

/// Result of a forward solve on one mesh.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    /// `u = v + I_h F` at the P1 nodes.
    pub potential: FemField,
    /// RT0 flux `w = sigma grad v`.
    pub flux: FemField,
    /// Per-triangle mean of `grad u = sigma^{-1} w + grad F`.
    pub gradients: Vec<[f64; 2]>,
    pub diagnostics: SolveDiagnostics,
}

/// Solves the homogeneous mixed problem for `v = u - F` and `w = sigma grad v`:
/// `(w / sigma, psi) + (v, div psi) = 0`, `(div w, phi) = (sigma grad F, grad phi)`
/// with `v = 0` on the boundary, then adds the harmonic extension back.
pub fn solve_forward_mixed(
    mesh: &Arc<Mesh2D>,
    sigma: &Conductivity,
    bc: &BoundaryCondition,
    opts: &SolverOptions,
) -> Result<ForwardSolution> {
    sigma.check(mesh)?;
    let f = harmonic_extension(bc);
    let p1 = FunctionSpace::lagrange1(mesh);
    let rt = FunctionSpace::raviart_thomas0(mesh);
    let (nv, ne) = (p1.dof_count(), rt.dof_count());

    let inv_sigma = |t: usize, b: &[f64; 3], x: &[f64; 2]| 1.0 / sigma.eval_local(t, b, x);
    let a = assemble_form(&rt, &rt, FormTag::WeightedMass(Coefficient::Local(&inv_sigma)))?;
    let b = assemble_form(&p1, &rt, FormTag::DivPairing)?;
    let bt = b.transpose();
    // Explicit zero diagonal on the boundary rows so that constraints can be
    // imposed on the (otherwise empty) lower-right block.
    let zero = CsrMatrix::from_triplets(nv, nv, p1.boundary_dofs().iter().map(|&d| (d, d, 0.0)).collect());
    let matrix = CsrMatrix::from_blocks(&[vec![Some(&a), Some(&bt)], vec![Some(&b), Some(&zero)]])?;

    let mut rhs = vec![0.0; ne + nv];
    for t in 0..mesh.num_triangles() {
        let el = Element::new(mesh, t);
        let grads = el.p1_grads();
        let dofs = p1.dofs(t);
        for (bary, w) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
            let x = el.point(bary);
            let s = sigma.eval_local(t, bary, &x);
            let g = f.gradient(x);
            for i in 0..3 {
                rhs[ne + dofs[i]] += w * el.area * s * (g[0] * grads[i][0] + g[1] * grads[i][1]);
            }
        }
    }

    let constraints: Vec<(usize, f64)> = p1.boundary_dofs().iter().map(|&d| (ne + d, 0.0)).collect();
    let system = apply_dirichlet(SparseSystem::new(matrix, rhs, Symmetry::SymmetricIndefinite)?, &constraints)?;

    // Block-diagonal preconditioner: diag(A) for the flux and the diagonal of
    // B diag(A)^{-1} B^T for the potential.
    let da = a.diagonal();
    let mut prec = vec![1.0; ne + nv];
    prec[..ne].copy_from_slice(&da);
    for i in 0..nv {
        let (cols, vals) = b.row(i);
        let s: f64 = cols.iter().zip(vals).map(|(&e, v)| v * v / da[e]).sum();
        if s > 0.0 {
            prec[ne + i] = s;
        }
    }
    for &d in p1.boundary_dofs() {
        prec[ne + d] = 1.0;
    }
    let sol = solve_saddle_with(&system, opts, Some(&prec))?;

    let flux = FemField::new(rt.clone(), sol.x[..ne].to_vec())?;
    let potential = FemField::new(
        p1.clone(),
        sol.x[ne..]
            .iter()
            .zip(mesh.vertices())
            .map(|(v, x)| v + f.value(*x))
            .collect(),
    )?;
    let gradients = (0..mesh.num_triangles())
        .map(|t| {
            let el = Element::new(mesh, t);
            let mut g = [0.0; 2];
            for (bary, w) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
                let x = el.point(bary);
                let s = sigma.eval_local(t, bary, &x);
                let wv = flux.eval_vector_local(t, &x);
                let gf = f.gradient(x);
                g[0] += w * (wv[0] / s + gf[0]);
                g[1] += w * (wv[1] / s + gf[1]);
            }
            g
        })
        .collect();
    Ok(ForwardSolution {
        potential,
        flux,
        gradients,
        diagnostics: sol.diagnostics,
    })
}

/// Standard Galerkin solve in P2 with the Dirichlet data interpolated at the
/// boundary nodes. Used to cross-check the mixed solver.
pub fn solve_forward_primal(
    mesh: &Arc<Mesh2D>,
    sigma: &Conductivity,
    bc: &BoundaryCondition,
    opts: &SolverOptions,
) -> Result<(FemField, SolveDiagnostics)> {
    sigma.check(mesh)?;
    let p2 = FunctionSpace::lagrange2(mesh);
    let coef = |t: usize, b: &[f64; 3], x: &[f64; 2]| sigma.eval_local(t, b, x);
    let k = assemble_form(&p2, &p2, FormTag::Stiffness(Coefficient::Local(&coef)))?;
    let n = p2.dof_count();
    let points = p2.dof_points();
    let constraints: Vec<(usize, f64)> = p2.boundary_dofs().iter().map(|&d| (d, bc.value(points[d]))).collect();
    let system = apply_dirichlet(SparseSystem::new(k, vec![0.0; n], Symmetry::Spd)?, &constraints)?;
    let sol = solve_spd(&system, opts)?;
    Ok((FemField::new(p2, sol.x)?, sol.diagnostics))
}

/// Area-weighted average of per-triangle vectors at the mesh vertices.
pub fn nodal_average(mesh: &Mesh2D, per_triangle: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut acc = vec![[0.0; 2]; mesh.num_vertices()];
    let mut wsum = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t);
        for &v in tri {
            acc[v][0] += a * per_triangle[t][0];
            acc[v][1] += a * per_triangle[t][1];
            wsum[v] += a;
        }
    }
    acc.iter().zip(&wsum).map(|(g, w)| [g[0] / w, g[1] / w]).collect()
}

/// `H = sigma |grad u|^p` at the P1 nodes, with per-triangle gradients
/// averaged to the nodes by area. Returns the field and the number of nodes
/// where the averaged gradient vanishes.
pub fn compute_interior_data(
    mesh: &Arc<Mesh2D>,
    sigma: &Conductivity,
    gradients: &[[f64; 2]],
    p: f64,
) -> Result<(FemField, usize)> {
    if !(p > 0.0) {
        return Err(Error::invalid(format!("exponent p must be positive (got {p})")));
    }
    if gradients.len() != mesh.num_triangles() {
        return Err(Error::MeshMismatch);
    }
    sigma.check(mesh)?;
    let nodal = nodal_average(mesh, gradients);
    let mut zeros = 0;
    let values = nodal
        .iter()
        .enumerate()
        .map(|(v, g)| {
            let m = g[0].hypot(g[1]);
            if m == 0.0 {
                zeros += 1;
            }
            sigma.at_vertex(mesh, v) * m.powf(p)
        })
        .collect();
    Ok((FemField::new(FunctionSpace::lagrange1(mesh), values)?, zeros))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disc_mesh;
    use crate::phantom::RectPhantom;

    fn mesh(n: usize) -> Arc<Mesh2D> {
        Arc::new(generate_disc_mesh(n, 0).unwrap())
    }

    #[test]
    fn mixed_reproduces_linear_potential() {
        let m = mesh(1500);
        let s = solve_forward_mixed(&m, &Conductivity::Constant(1.0), &BoundaryCondition::linear(1.0, 0.0), &SolverOptions::with_tol(1e-12))
            .unwrap();
        for (u, x) in s.potential.values().iter().zip(m.vertices()) {
            assert!((u - x[0]).abs() < 1e-8);
        }
        for g in &s.gradients {
            assert!((g[0] - 1.0).abs() < 1e-8 && g[1].abs() < 1e-8);
        }
    }

    #[test]
    fn mixed_flux_is_conservative() {
        let m = mesh(1500);
        let opts = SolverOptions::with_tol(1e-12);
        let bc = BoundaryCondition::parse("re2").unwrap();
        let total = |s: &ForwardSolution| -> (f64, f64) {
            let d: Vec<f64> = (0..m.num_triangles()).map(|t| s.flux.divergence(t) * m.area(t)).collect();
            (d.iter().sum(), d.iter().map(|v| v.abs()).sum())
        };
        let smooth = solve_forward_mixed(&m, &Conductivity::Constant(1.0), &bc, &opts).unwrap();
        assert!(total(&smooth).0.abs() < 1e-8);
        // With a jump inside, the test function 1 is outside the discrete
        // space and the balance only holds up to discretization error.
        let jump = solve_forward_mixed(&m, &Conductivity::Phantom(RectPhantom::default()), &bc, &opts).unwrap();
        let (net, gross) = total(&jump);
        assert!(net.abs() < 1e-2 * gross, "{net} vs {gross}");
    }

    #[test]
    fn primal_linear_and_scaled_conductivity() {
        let m = mesh(800);
        let opts = SolverOptions::with_tol(1e-12);
        let (u, _) = solve_forward_primal(&m, &Conductivity::Constant(1.0), &BoundaryCondition::linear(0.0, 1.0), &opts).unwrap();
        assert!(u.l2_error_sq(|x| x[1]).sqrt() < 1e-8);
        let (u2, _) = solve_forward_primal(&m, &Conductivity::Constant(2.0), &BoundaryCondition::linear(1.0, 0.0), &opts).unwrap();
        let pts = u2.space().dof_points();
        for (v, x) in u2.values().iter().zip(pts) {
            assert!((v - x[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn non_positive_conductivity_is_rejected() {
        let m = mesh(100);
        let r = solve_forward_mixed(&m, &Conductivity::Constant(-1.0), &BoundaryCondition::linear(1.0, 0.0), &SolverOptions::default());
        assert!(matches!(r, Err(Error::NonPositive { .. })));
    }

    #[test]
    fn interior_data_for_constant_gradient() {
        let m = mesh(300);
        let g = vec![[1.0, 0.0]; m.num_triangles()];
        for p in [1.0, 2.0] {
            let (h, zeros) = compute_interior_data(&m, &Conductivity::Constant(1.0), &g, p).unwrap();
            assert_eq!(zeros, 0);
            assert!(h.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
        let g2 = vec![[0.6, 0.8]; m.num_triangles()];
        let (h, _) = compute_interior_data(&m, &Conductivity::Constant(1.5), &g2, 3.0).unwrap();
        assert!(h.values().iter().all(|v| (v - 1.5).abs() < 1e-12));
        let zero = vec![[0.0, 0.0]; m.num_triangles()];
        let (h, zeros) = compute_interior_data(&m, &Conductivity::Constant(1.0), &zero, 2.0).unwrap();
        assert_eq!(zeros, m.num_vertices());
        assert!(h.values().iter().all(|v| *v == 0.0));
    }
}
