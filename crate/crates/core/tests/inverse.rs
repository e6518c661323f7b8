use std::sync::Arc;

use hybridtomo::fem::{FemField, FunctionSpace, Provenance, SolverOptions};
use hybridtomo::forward::{make_background, simulate_data, BackgroundOptions, BackgroundState, BoundaryCondition, Conductivity};
use hybridtomo::inverse::{apply_linearised_forward, assemble_ls_system, solve_reconstruction, LinearizedProblem, Tikhonov};
use hybridtomo::mesh::{generate_disc_mesh, Point};

fn bump(x: Point) -> f64 {
    let r2 = (x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2);
    0.1 * (-r2 / 0.05).exp()
}

fn background(n: usize, bcs: &[BoundaryCondition], p: f64) -> Arc<BackgroundState> {
    let m = Arc::new(generate_disc_mesh(n, 0).unwrap());
    Arc::new(make_background(bcs, p, &Conductivity::Constant(1.0), &m, &m, &BackgroundOptions::default()).unwrap())
}

fn elliptic_pair() -> Vec<BoundaryCondition> {
    vec![BoundaryCondition::linear(1.0, 0.0), BoundaryCondition::at_angle(45.0)]
}

fn manufactured(bg: &BackgroundState, truth: &FemField) -> Vec<FemField> {
    apply_linearised_forward(bg, truth, &SolverOptions::with_tol(1e-12)).unwrap()
}

#[test]
fn manufactured_data_is_recovered_in_the_elliptic_case() {
    let bg = background(12000, &elliptic_pair(), 2.0);
    let p1 = FunctionSpace::lagrange1(&bg.mesh);
    let truth = FemField::interpolate(&p1, bump);
    let data = manufactured(&bg, &truth);
    let prob = LinearizedProblem::new(bg, data, Tikhonov::Absolute(0.0)).unwrap();
    let r = solve_reconstruction(&prob, &SolverOptions::with_tol(1e-10)).unwrap();
    let rel = r.delta_sigma.l2_distance(&truth).unwrap() / truth.l2_norm();
    eprintln!("relative error {rel:.3e}, iterations {}", r.iterations);
    assert!(rel < 0.05);
    assert!(r.energy <= r.energy_at_zero);
}

#[test]
fn reconstruction_is_linear_in_the_data() {
    let bg = background(800, &elliptic_pair(), 2.0);
    let p1 = FunctionSpace::lagrange1(&bg.mesh);
    let data = manufactured(&bg, &FemField::interpolate(&p1, bump));
    let opts = SolverOptions::with_tol(1e-10);
    let eps = Tikhonov::Absolute(1e-6);
    let a = solve_reconstruction(&LinearizedProblem::new(bg.clone(), data.clone(), eps).unwrap(), &opts).unwrap();
    let scaled: Vec<FemField> = data.iter().map(|d| d.scaled(-2.5)).collect();
    let b = solve_reconstruction(&LinearizedProblem::new(bg, scaled, eps).unwrap(), &opts).unwrap();
    let diff = b.delta_sigma.l2_distance(&a.delta_sigma.scaled(-2.5)).unwrap();
    assert!(diff < 1e-6 * b.delta_sigma.l2_norm());
}

#[test]
fn ls_matrix_satisfies_adjoint_consistency() {
    use rand::{Rng, SeedableRng};
    let bg = background(150, &elliptic_pair(), 1.0);
    let p1 = FunctionSpace::lagrange1(&bg.mesh);
    let data = manufactured(&bg, &FemField::interpolate(&p1, bump));
    let ls = assemble_ls_system(&LinearizedProblem::new(bg, data, Tikhonov::default()).unwrap()).unwrap();
    let n = ls.layout.len();
    assert!(n <= 2000);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let k = &ls.system.matrix;
    let ab: f64 = a.iter().zip(k.apply(&b)).map(|(x, y)| x * y).sum();
    let ba: f64 = b.iter().zip(k.apply(&a)).map(|(x, y)| x * y).sum();
    assert!((ab - ba).abs() < 1e-9 * ab.abs().max(1.0));
}

fn fd_check(p: f64, bcs: &[BoundaryCondition]) -> f64 {
    let m = Arc::new(generate_disc_mesh(12000, 0).unwrap());
    let bg = make_background(bcs, p, &Conductivity::Constant(1.0), &m, &m, &BackgroundOptions::default()).unwrap();
    let p1 = FunctionSpace::lagrange1(&m);
    let ds = FemField::interpolate(&p1, bump);
    let lin = apply_linearised_forward(&bg, &ds, &SolverOptions::with_tol(1e-11)).unwrap();
    let t = 1e-4;
    let solver = SolverOptions::with_tol(1e-11);
    let pert = simulate_data(bcs, p, &Conductivity::closed(move |x| 1.0 + t * bump(x)), &m, &solver).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..bcs.len() {
        let fd = pert[j].axpby(1.0 / t, &bg.data_ref[j], -1.0 / t).unwrap();
        num += fd.l2_distance(&lin[j]).unwrap().powi(2);
        den += lin[j].l2_norm().powi(2);
    }
    (num / den).sqrt()
}

#[test]
fn linearisation_matches_finite_differences() {
    for p in [1.0, 2.0] {
        for bcs in [vec![BoundaryCondition::linear(1.0, 0.0)], elliptic_pair()] {
            let e = fd_check(p, &bcs);
            eprintln!("p={p} J={} rel={e:.3e}", bcs.len());
            assert!(e < 1e-2);
        }
    }
}

#[test]
fn provenance_marks_inverse_crime() {
    let bg = background(200, &elliptic_pair(), 2.0);
    let measured = simulate_data(&elliptic_pair(), 2.0, &Conductivity::Constant(1.1), &bg.mesh, &SolverOptions::default()).unwrap();
    assert!(measured.iter().all(|h| h.provenance() == Provenance { origin: bg.mesh.id(), manufactured: false }));
    assert!(LinearizedProblem::from_measurements(bg, &measured, Tikhonov::default()).is_err());
}
