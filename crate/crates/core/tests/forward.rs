use std::sync::Arc;

use hybridtomo::fem::{FemField, SolverOptions};
use hybridtomo::forward::{compute_interior_data, solve_forward_mixed, solve_forward_primal, BoundaryCondition, Conductivity};
use hybridtomo::mesh::{generate_disc_mesh, Mesh2D, Point};
use hybridtomo::phantom::RectPhantom;

fn hierarchy() -> Vec<Arc<Mesh2D>> {
    let m0 = generate_disc_mesh(3000, 0).unwrap();
    let m1 = m0.refine().unwrap();
    let m2 = m1.refine().unwrap();
    vec![Arc::new(m0), Arc::new(m1), Arc::new(m2)]
}

fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn re_z3(x: Point) -> f64 {
    x[0].powi(3) - 3.0 * x[0] * x[1] * x[1]
}

#[test]
fn mixed_and_primal_converge_under_refinement() {
    let opts = SolverOptions::with_tol(1e-12);
    let sigma = Conductivity::Constant(1.0);
    let quad = BoundaryCondition::parse("re2").unwrap();
    let cubic = BoundaryCondition::parse("re3").unwrap();
    let mut mixed = Vec::new();
    let mut p2_cubic = Vec::new();
    for m in hierarchy() {
        let s = solve_forward_mixed(&m, &sigma, &quad, &opts).unwrap();
        mixed.push(s.potential.l2_error_sq(|x| x[0] * x[0] - x[1] * x[1]).sqrt());
        let (u, _) = solve_forward_primal(&m, &sigma, &quad, &opts).unwrap();
        let exact = u.l2_error_sq(|x| x[0] * x[0] - x[1] * x[1]).sqrt();
        assert!(exact < 1e-8, "P2 on a quadratic: {exact:.2e}");
        let (u3, _) = solve_forward_primal(&m, &sigma, &cubic, &opts).unwrap();
        p2_cubic.push(u3.l2_error_sq(re_z3).sqrt());
    }
    let (rm, rp) = (rates(&mixed), rates(&p2_cubic));
    eprintln!("mixed {mixed:?} rates {rm:.2?}; P2 cubic {p2_cubic:?} rates {rp:.2?}");
    assert!(rm.iter().all(|r| *r >= 1.8));
    assert!(rp.iter().all(|r| *r >= 2.8));
}

#[test]
fn affine_potentials_are_reproduced() {
    let m = Arc::new(generate_disc_mesh(3000, 0).unwrap());
    let opts = SolverOptions::with_tol(1e-12);
    let bc = BoundaryCondition::parse("0.3*x-0.7*y").unwrap();
    let s = solve_forward_mixed(&m, &Conductivity::Constant(1.0), &bc, &opts).unwrap();
    assert!(s.potential.l2_error_sq(|x| 0.3 * x[0] - 0.7 * x[1]).sqrt() < 1e-8);
    let (u, _) = solve_forward_primal(&m, &Conductivity::Constant(2.5), &bc, &opts).unwrap();
    assert!(u.l2_error_sq(|x| 0.3 * x[0] - 0.7 * x[1]).sqrt() < 1e-8);
}

fn eval(f: &FemField, x: Point) -> f64 {
    let loc = f.space().mesh().locate_point(x).unwrap_or_else(|_| f.space().mesh().nearest_boundary_location(x));
    f.eval_at(&loc)
}

#[test]
fn mixed_and_primal_agree_for_smooth_conductivity() {
    let m = Arc::new(generate_disc_mesh(6000, 2).unwrap());
    let opts = SolverOptions::with_tol(1e-12);
    let sigma = Conductivity::closed(|x| 1.0 + 0.3 * x[0] * x[0] + 0.2 * x[1]);
    let bc = BoundaryCondition::parse("x+0.5*re2").unwrap();
    let mixed = solve_forward_mixed(&m, &sigma, &bc, &opts).unwrap();
    let (primal, _) = solve_forward_primal(&m, &sigma, &bc, &opts).unwrap();
    let diff = mixed.potential.l2_error_sq(|x| eval(&primal, x)).sqrt();
    let h = m.mesh_size();
    let bound = 10.0 * h * h * mixed.potential.l2_norm();
    eprintln!("difference {diff:.3e}, bound {bound:.3e}");
    assert!(diff < bound);
}

#[test]
fn interior_data_is_nonnegative_for_the_phantom() {
    let m = Arc::new(generate_disc_mesh(2000, 1).unwrap());
    let sigma = Conductivity::Phantom(RectPhantom::default());
    for label in ["x", "y", "angle:45", "re2"] {
        let bc = BoundaryCondition::parse(label).unwrap();
        let s = solve_forward_mixed(&m, &sigma, &bc, &SolverOptions::with_tol(1e-10)).unwrap();
        for p in [0.5, 1.0, 2.0, 4.0] {
            let (h, _) = compute_interior_data(&m, &sigma, &s.gradients, p).unwrap();
            assert!(h.values().iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }
}
