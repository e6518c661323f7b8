//! Implementations of the command-line subcommands. Each takes a validated
//! config, writes into `cfg.output_dir` and returns a short text summary.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{build_meshes, corner_overlay, run_experiment, streak_metric, support_mass_fraction, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::fem::{FemField, FunctionSpace, SolverOptions};
use crate::forward::{compute_interior_data, harmonic_extension, solve_forward_mixed, BoundaryCondition, Conductivity};
use crate::io::{self, VtkData};
use crate::microlocal::{
    is_elliptic_single, loss_angles, normal_symbol, predicted_streak_angles_deg, principal_symbol, real_principal_type_check,
    SymbolQuery,
};

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => e.in_stage(stage),
    })
}

fn boundary_conditions(cfg: &ExperimentConfig) -> Result<Vec<BoundaryCondition>> {
    cfg.boundary_conditions.iter().map(|s| BoundaryCondition::parse(s)).collect()
}

fn gradients_at_center(cfg: &ExperimentConfig) -> Result<Vec<[f64; 2]>> {
    Ok(boundary_conditions(cfg)?
        .iter()
        .map(|bc| harmonic_extension(bc).gradient(cfg.phantom.center))
        .collect())
}

/// Writes both meshes as VTK and node/element listings.
pub fn mesh(cfg: &ExperimentConfig) -> Result<String> {
    let meshes = staged("mesh", build_meshes(cfg))?;
    let dir = &cfg.output_dir;
    staged("export", (|| {
        for (name, m) in [("forward", &meshes.forward), ("inverse", &meshes.inverse)] {
            io::write_vtk(&dir.join(format!("{name}_mesh.vtk")), m, &VtkData::default())?;
            io::write_mesh_text(&dir.join(format!("{name}_mesh.txt")), m)?;
        }
        Ok(())
    })())?;
    Ok(format!(
        "forward mesh: {} triangles, {} vertices\ninverse mesh: {} triangles, {} vertices, h = {:.4}\n",
        meshes.forward.num_triangles(),
        meshes.forward.num_vertices(),
        meshes.inverse.num_triangles(),
        meshes.inverse.num_vertices(),
        meshes.inverse.mesh_size()
    ))
}

/// Mixed forward solves with the phantom conductivity on the forward mesh.
pub fn forward(cfg: &ExperimentConfig) -> Result<String> {
    let bcs = staged("config", boundary_conditions(cfg))?;
    let meshes = staged("mesh", build_meshes(cfg))?;
    let mesh = &meshes.forward;
    let sigma = Conductivity::Phantom(cfg.phantom);
    let opts = SolverOptions::with_tol(cfg.solver.forward_tol);
    let mut summary = String::new();
    let mut fields: Vec<(String, FemField)> = Vec::new();
    for (j, bc) in bcs.iter().enumerate() {
        let sol = staged("forward", solve_forward_mixed(mesh, &sigma, bc, &opts))?;
        let (h, zeros) = staged("forward", compute_interior_data(mesh, &sigma, &sol.gradients, cfg.p))?;
        let _ = writeln!(
            summary,
            "measurement {j} ({}): {} iterations, residual {:.2e}, H in [{:.4}, {:.4}], {zeros} zero-gradient nodes",
            bc.label(),
            sol.diagnostics.iterations,
            sol.diagnostics.rel_residual,
            h.values().iter().copied().fold(f64::INFINITY, f64::min),
            h.values().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        fields.push((format!("potential_{j}"), sol.potential));
        fields.push((format!("H_{j}"), h));
    }
    let sigma_field = staged("forward", sigma.interpolate(mesh))?;
    fields.push(("sigma".into(), sigma_field));
    let refs: Vec<(&str, &FemField)> = fields.iter().map(|(n, f)| (n.as_str(), f)).collect();
    staged(
        "export",
        io::write_vtk(
            &cfg.output_dir.join("forward.vtk"),
            mesh,
            &VtkData {
                point_scalars: refs.clone(),
                ..Default::default()
            },
        ),
    )?;
    staged("export", io::write_fields_csv(&cfg.output_dir.join("forward.csv"), mesh, &refs))?;
    Ok(summary)
}

/// A single reconstruction with the configured p and boundary data.
pub fn reconstruct(cfg: &ExperimentConfig) -> Result<String> {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::Custom,
        ..cfg.clone()
    };
    experiment(&cfg)
}

/// Runs the configured experiment kind.
pub fn experiment(cfg: &ExperimentConfig) -> Result<String> {
    let out = run_experiment(cfg)?;
    let mut s = String::new();
    for c in &out.cases {
        let _ = writeln!(
            s,
            "{}: p = {}, J = {}, {}, {} iterations, mass fraction {:.3}, peaks {:?}, predicted {:?}",
            c.spec.name,
            c.spec.p,
            c.spec.boundary_conditions.len(),
            if c.elliptic { "elliptic" } else { "not elliptic" },
            c.reconstruction.iterations,
            c.mass_fraction,
            c.streaks.detected_peaks,
            c.streaks.predicted_directions.iter().map(|a| (a * 100.0).round() / 100.0).collect::<Vec<_>>(),
        );
    }
    let _ = writeln!(s, "manifest: {}", out.manifest_path.display());
    Ok(s)
}

/// Symbol scan at the phantom center: one row per 0.25 degree direction.
pub fn symbols(cfg: &ExperimentConfig) -> Result<String> {
    let grads = staged("config", gradients_at_center(cfg))?;
    let p = cfg.p;
    let run = || -> Result<String> {
        let mut csv = String::from("angle_deg");
        for j in 0..grads.len() {
            let _ = write!(csv, ",p_{j}");
        }
        csv.push_str(",normal\n");
        for k in 0..720 {
            let a = (k as f64 * 0.25).to_radians();
            let q = SymbolQuery::new(cfg.phantom.center, [a.cos(), a.sin()], grads.clone(), p)?;
            let _ = write!(csv, "{}", k as f64 * 0.25);
            for j in 0..grads.len() {
                let _ = write!(csv, ",{}", principal_symbol(&q, j)?);
            }
            let _ = writeln!(csv, ",{}", normal_symbol(&q)?);
        }
        io::write_text(&cfg.output_dir.join("symbols.csv"), &csv)?;

        let mut s = String::new();
        for (j, g) in grads.iter().enumerate() {
            let v = is_elliptic_single(*g, p)?;
            let _ = writeln!(
                s,
                "measurement {j}: gradient ({:.4}, {:.4}), elliptic {}, characteristic angles {:?} deg",
                g[0],
                g[1],
                v.elliptic,
                v.characteristic_angles.iter().map(|a| a.to_degrees()).collect::<Vec<_>>()
            );
        }
        let loss: Vec<f64> = loss_angles(&grads, p)?.into_iter().map(f64::to_degrees).collect();
        let _ = writeln!(s, "normal operator loss directions: {loss:?} deg");
        let _ = writeln!(s, "predicted streak directions: {:?} deg", predicted_streak_angles_deg(&grads, p)?);
        let rpt = real_principal_type_check(&grads, p)?;
        let _ = writeln!(
            s,
            "real principal type: {} (min |d p/d xi| = {:.3e})",
            rpt.real_principal_type, rpt.min_xi_gradient
        );
        Ok(s)
    };
    staged("symbols", run())
}

/// Bicharacteristics from the phantom corners along each loss direction.
pub fn bichar(cfg: &ExperimentConfig) -> Result<String> {
    let grads = staged("config", gradients_at_center(cfg))?;
    let meshes = staged("mesh", build_meshes(cfg))?;
    let traces = staged("bichar", corner_overlay(cfg, &grads, cfg.p, &meshes.inverse))?;
    staged("export", io::write_text(&cfg.output_dir.join("bicharacteristics.csv"), &io::traces_csv(&traces)))?;
    staged("export", io::write_text(&cfg.output_dir.join("bicharacteristics.vtk"), &io::traces_vtk(&traces)))?;
    let worst = traces.iter().map(|t| t.max_perpendicularity).fold(0.0, f64::max);
    Ok(format!(
        "{} traces, {} samples, max |dx/dt . xi| / |dx/dt| = {worst:.2e}\n",
        traces.len(),
        traces.iter().map(|t| t.points.len()).sum::<usize>()
    ))
}

/// Streak report and mass fraction for an exported reconstruction
/// (`reconstruction.vtk` with a `delta_sigma` array).
pub fn metrics(cfg: &ExperimentConfig, input: &Path) -> Result<String> {
    let (mesh, values) = staged("metrics", io::read_vtk_point_scalars(input, "delta_sigma"))?;
    let mesh = Arc::new(mesh);
    let field = staged("metrics", FemField::new(FunctionSpace::lagrange1(&mesh), values))?;
    let grads = staged("config", gradients_at_center(cfg))?;
    let report = staged("metrics", streak_metric(&field, &cfg.phantom, &grads, cfg.p))?;
    let mass = staged("metrics", support_mass_fraction(&field, &cfg.phantom))?;
    let text = toml::to_string(&report).map_err(|e| Error::invalid(e.to_string()).in_stage("export"))?;
    staged("export", io::write_text(&cfg.output_dir.join("streak_report.toml"), &text))?;
    Ok(format!(
        "mass fraction {mass:.3}\ndetected peaks {:?}\npredicted {:?}\nprediction errors {:?}\n",
        report.detected_peaks,
        report.predicted_directions,
        report.prediction_errors()
    ))
}
