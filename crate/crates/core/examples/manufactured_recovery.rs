//! Manufactured data test of the least squares solver: a smooth perturbation
//! is pushed through the linearised forward map and recovered again, in the
//! elliptic configuration (p = 2, gradients 45 degrees apart).
//!
//! ```bash
//! cargo run --release --example manufactured_recovery -- 12000
//! ```

use std::sync::Arc;

use hybridtomo::fem::{FemField, FunctionSpace, SolverOptions};
use hybridtomo::forward::{make_background, BackgroundOptions, BoundaryCondition, Conductivity};
use hybridtomo::inverse::{apply_linearised_forward, solve_reconstruction, LinearizedProblem, Tikhonov};
use hybridtomo::mesh::generate_disc_mesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6000);
    let mesh = Arc::new(generate_disc_mesh(n, 0)?);
    let bcs = [BoundaryCondition::linear(1.0, 0.0), BoundaryCondition::at_angle(45.0)];
    let bg = Arc::new(make_background(&bcs, 2.0, &Conductivity::Constant(1.0), &mesh, &mesh, &BackgroundOptions::default())?);

    let truth = FemField::interpolate(&FunctionSpace::lagrange1(&mesh), |x| {
        0.1 * (-((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2)) / 0.05).exp()
    });
    let data = apply_linearised_forward(&bg, &truth, &SolverOptions::with_tol(1e-12))?;
    let problem = LinearizedProblem::new(bg, data, Tikhonov::Absolute(0.0))?;
    let r = solve_reconstruction(&problem, &SolverOptions::with_tol(1e-10))?;
    let rel = r.delta_sigma.l2_distance(&truth)? / truth.l2_norm();
    println!("{n} triangles: relative L2 error {:.2}% after {} CG iterations", 100.0 * rel, r.iterations);
    Ok(())
}
