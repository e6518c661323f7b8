//! Config-driven experiment pipeline: meshes, reference and phantom forward
//! solves, projection, least-squares reconstruction, artifact metrics and
//! export.

pub mod commands;
pub mod streak;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{FemField, FunctionSpace, SolverOptions};
use crate::forward::{
    harmonic_extension, make_background, simulate_data, BackgroundOptions, BoundaryCondition, Conductivity,
};
use crate::inverse::{solve_reconstruction, LinearizedProblem, ReconstructionResult, Tikhonov};
use crate::io::{self, VtkData};
use crate::mesh::{generate_disc_mesh, Mesh2D};
use crate::microlocal::{loss_directions, trace_bicharacteristic, Bicharacteristic, ConstantGradient, GradientField, TraceMode, TraceOptions};
use crate::phantom::RectPhantom;

pub use streak::{artifact_field, streak_metric, support_mass_fraction, StreakReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Elliptic (J=2) and non-elliptic (J=1) reconstructions for each p.
    EllipticVsNonelliptic,
    /// J=1 reconstructions over a list of exponents.
    PSweep,
    /// J=1 reconstructions with the reference gradient rotated over a list
    /// of angles.
    WavefrontAlignment,
    /// A single reconstruction with the configured p and boundary data.
    Custom,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "elliptic_vs_nonelliptic" => Ok(Self::EllipticVsNonelliptic),
            "p_sweep" => Ok(Self::PSweep),
            "wavefront_alignment" => Ok(Self::WavefrontAlignment),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::invalid(format!(
                "unknown experiment kind '{s}' (expected elliptic_vs_nonelliptic, p_sweep, wavefront_alignment or custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub forward_elements: usize,
    pub inverse_elements: usize,
    /// Generate the data on the reconstruction mesh itself. The
    /// reconstruction stage then refuses the data.
    pub reuse_reconstruction_mesh: bool,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            forward_elements: 14000,
            inverse_elements: 12000,
            reuse_reconstruction_mesh: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub forward_tol: f64,
    pub inverse_tol: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            forward_tol: 1e-12,
            inverse_tol: 1e-8,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub p_values: Vec<f64>,
    pub angles_deg: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_values: Vec::new(),
            angles_deg: vec![0.0, 22.5, 45.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub p: f64,
    /// Boundary conditions in `BoundaryCondition::parse` syntax.
    pub boundary_conditions: Vec<String>,
    /// Reference conductivity (constant).
    pub sigma_ref: f64,
    pub tikhonov: Tikhonov,
    /// Uniform multiplicative noise level applied to the measured data.
    pub noise: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub mesh: MeshConfig,
    pub phantom: RectPhantom,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    /// Bicharacteristic overlay from each phantom corner.
    pub trace: TraceOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Custom,
            p: 2.0,
            boundary_conditions: vec!["x".into(), "angle:45".into()],
            sigma_ref: 1.0,
            tikhonov: Tikhonov::RelativeToDiagonal(1e-8),
            noise: 0.0,
            seed: 0,
            output_dir: PathBuf::from("output"),
            mesh: MeshConfig::default(),
            phantom: RectPhantom::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            trace: TraceOptions {
                step: 2e-3,
                max_steps: 2000,
                drift_tol: 1e-6,
            },
        }
    }
}

/// One reconstruction inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub name: String,
    pub p: f64,
    pub boundary_conditions: Vec<String>,
    /// Required ellipticity at the phantom center, checked before solving.
    pub expect_elliptic: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            context: "experiment config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                context: path.display().to_string(),
                message,
            },
            e => e,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive (got {v})")))
            }
        };
        positive(self.p, "p")?;
        positive(self.sigma_ref, "sigma_ref")?;
        positive(self.solver.forward_tol, "solver.forward_tol")?;
        positive(self.solver.inverse_tol, "solver.inverse_tol")?;
        for &p in &self.sweep.p_values {
            positive(p, "sweep.p_values entry")?;
        }
        if self.mesh.forward_elements < 8 || self.mesh.inverse_elements < 8 {
            return Err(Error::invalid("meshes need at least 8 elements"));
        }
        if self.mesh.forward_elements == self.mesh.inverse_elements && !self.mesh.reuse_reconstruction_mesh {
            return Err(Error::invalid("forward and inverse meshes must have different element counts"));
        }
        if !(self.noise >= 0.0 && self.noise < 1.0) {
            return Err(Error::invalid("noise must lie in [0, 1)"));
        }
        if self.boundary_conditions.is_empty() {
            return Err(Error::invalid("at least one boundary condition is required"));
        }
        for bc in &self.boundary_conditions {
            BoundaryCondition::parse(bc)?;
        }
        self.phantom.validate()?;
        if self.phantom.background != self.sigma_ref {
            return Err(Error::invalid("phantom.background must equal sigma_ref"));
        }
        if self.trace.step <= 0.0 {
            return Err(Error::invalid("trace.step must be positive"));
        }
        Ok(())
    }

    /// Reconstructions run by this experiment.
    pub fn cases(&self) -> Vec<CaseSpec> {
        let ps = |default: &[f64]| -> Vec<f64> {
            if self.sweep.p_values.is_empty() {
                default.to_vec()
            } else {
                self.sweep.p_values.clone()
            }
        };
        let first = self.boundary_conditions[0].clone();
        match self.kind {
            ExperimentKind::Custom => vec![CaseSpec {
                name: "custom".into(),
                p: self.p,
                boundary_conditions: self.boundary_conditions.clone(),
                expect_elliptic: None,
            }],
            ExperimentKind::EllipticVsNonelliptic => ps(&[self.p, 1.0])
                .into_iter()
                .flat_map(|p| {
                    [
                        CaseSpec {
                            name: format!("p{p}_elliptic"),
                            p,
                            boundary_conditions: vec!["x".into(), "angle:45".into()],
                            expect_elliptic: Some(true),
                        },
                        CaseSpec {
                            name: format!("p{p}_nonelliptic"),
                            p,
                            boundary_conditions: vec!["x".into()],
                            expect_elliptic: Some(p < 1.0),
                        },
                    ]
                })
                .collect(),
            ExperimentKind::PSweep => ps(&[1.5, 2.0, 3.0, 4.0])
                .into_iter()
                .map(|p| CaseSpec {
                    name: format!("p{p}"),
                    p,
                    boundary_conditions: vec![first.clone()],
                    expect_elliptic: None,
                })
                .collect(),
            ExperimentKind::WavefrontAlignment => self
                .sweep
                .angles_deg
                .iter()
                .map(|&a| CaseSpec {
                    name: format!("angle{a}"),
                    p: self.p,
                    boundary_conditions: vec![format!("angle:{a}")],
                    expect_elliptic: None,
                })
                .collect(),
        }
    }

    fn forward_solver(&self) -> SolverOptions {
        let mut s = SolverOptions::with_tol(self.solver.forward_tol);
        if let Some(m) = self.solver.max_iterations {
            s.max_iter = Some(m);
        }
        s
    }

    fn inverse_solver(&self) -> SolverOptions {
        let mut s = SolverOptions::with_tol(self.solver.inverse_tol);
        if let Some(m) = self.solver.max_iterations {
            s.max_iter = Some(m);
        }
        s
    }
}

/// Forward and reconstruction meshes of an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentMeshes {
    pub forward: Arc<Mesh2D>,
    pub inverse: Arc<Mesh2D>,
}

pub fn build_meshes(cfg: &ExperimentConfig) -> Result<ExperimentMeshes> {
    let inverse = Arc::new(generate_disc_mesh(cfg.mesh.inverse_elements, cfg.seed)?);
    let forward = if cfg.mesh.reuse_reconstruction_mesh {
        inverse.clone()
    } else {
        Arc::new(generate_disc_mesh(cfg.mesh.forward_elements, cfg.seed.wrapping_add(1))?)
    };
    Ok(ExperimentMeshes { forward, inverse })
}

/// In-memory result of one reconstruction.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub spec: CaseSpec,
    pub reconstruction: ReconstructionResult,
    pub streaks: StreakReport,
    pub mass_fraction: f64,
    /// Reference gradients at the phantom center.
    pub gradients: Vec<[f64; 2]>,
    pub elliptic: bool,
    pub overlay: Vec<Bicharacteristic>,
    pub forward_iterations: Vec<usize>,
    pub wall_time_s: f64,
}

fn staged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Runs one reconstruction: forward data on the forward mesh, projection,
/// least squares solve and metrics.
pub fn run_case(cfg: &ExperimentConfig, meshes: &ExperimentMeshes, spec: &CaseSpec, index: usize) -> Result<CaseOutcome> {
    let start = Instant::now();
    let bcs = staged(
        "config",
        spec.boundary_conditions.iter().map(|s| BoundaryCondition::parse(s)).collect::<Result<Vec<_>>>(),
    )?;
    let gradients: Vec<[f64; 2]> = bcs.iter().map(|bc| harmonic_extension(bc).gradient(cfg.phantom.center)).collect();
    let elliptic = staged("symbols", loss_directions(&gradients, spec.p))?.is_empty();
    if spec.expect_elliptic.is_some_and(|e| e != elliptic) {
        return Err(Error::invalid(format!(
            "case {} expects elliptic = {}, but the loss directions say {elliptic}",
            spec.name,
            !elliptic
        ))
        .in_stage("symbols"));
    }

    let fwd_opts = cfg.forward_solver();
    let bg_opts = BackgroundOptions {
        solver: fwd_opts,
        ..Default::default()
    };
    let sigma_ref = Conductivity::Constant(cfg.sigma_ref);
    let bg = staged(
        "background",
        make_background(&bcs, spec.p, &sigma_ref, &meshes.forward, &meshes.inverse, &bg_opts),
    )?;
    let forward_iterations = bg.diagnostics.iter().map(|d| d.iterations).collect();
    let mut measured = staged(
        "forward",
        simulate_data(&bcs, spec.p, &Conductivity::Phantom(cfg.phantom), &meshes.forward, &fwd_opts),
    )?;
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        for h in &mut measured {
            for v in h.values_mut() {
                *v *= 1.0 + cfg.noise * rng.random_range(-1.0..=1.0);
            }
        }
    }
    let problem = staged(
        "reconstruct",
        LinearizedProblem::from_measurements(Arc::new(bg), &measured, cfg.tikhonov),
    )?;
    let reconstruction = staged("reconstruct", solve_reconstruction(&problem, &cfg.inverse_solver()))?;

    let streaks = staged(
        "metrics",
        streak_metric(&reconstruction.delta_sigma, &cfg.phantom, &gradients, spec.p),
    )?;
    let mass_fraction = staged("metrics", support_mass_fraction(&reconstruction.delta_sigma, &cfg.phantom))?;
    let overlay = staged("bichar", corner_overlay(cfg, &gradients, spec.p, &meshes.inverse))?;
    Ok(CaseOutcome {
        spec: spec.clone(),
        reconstruction,
        streaks,
        mass_fraction,
        gradients,
        elliptic,
        overlay,
        forward_iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Bicharacteristics from every phantom corner, started in each loss
/// direction and its opposite.
pub fn corner_overlay(cfg: &ExperimentConfig, gradients: &[[f64; 2]], p: f64, mesh: &Mesh2D) -> Result<Vec<Bicharacteristic>> {
    let fields: Vec<ConstantGradient> = gradients.iter().map(|&g| ConstantGradient(g)).collect();
    let refs: Vec<&dyn GradientField> = fields.iter().map(|f| f as &dyn GradientField).collect();
    let mut out = Vec::new();
    for xi in loss_directions(gradients, p)? {
        for c in cfg.phantom.corners() {
            for s in [1.0, -1.0] {
                out.push(trace_bicharacteristic(c, [s * xi[0], s * xi[1]], &refs, p, TraceMode::Normal, &cfg.trace, Some(mesh))?);
            }
        }
    }
    Ok(out)
}

/// Written experiment: manifest location and per-case results.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub output_dir: PathBuf,
    pub manifest_path: PathBuf,
    pub cases: Vec<CaseOutcome>,
}

#[derive(Serialize)]
struct CaseManifest<'a> {
    name: &'a str,
    p: f64,
    boundary_conditions: &'a [String],
    gradients_at_phantom_center: &'a [[f64; 2]],
    elliptic: bool,
    eps_used: f64,
    residual_norm: f64,
    iterations: usize,
    solver: &'a str,
    energy: f64,
    energy_at_zero: f64,
    forward_iterations: &'a [usize],
    mass_fraction: f64,
    detected_peaks_deg: &'a [f64],
    predicted_directions_deg: &'a [f64],
    peak_match_errors_deg: &'a [f64],
    streak_threshold: f64,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct MeshManifest {
    forward_elements: usize,
    forward_vertices: usize,
    forward_seed: u64,
    inverse_elements: usize,
    inverse_vertices: usize,
    inverse_seed: u64,
    inverse_mesh_size: f64,
    same_mesh: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    meshes: MeshManifest,
    cases: Vec<CaseManifest<'a>>,
    total_wall_time_s: f64,
}

/// Runs every case of the experiment and writes fields, metrics, overlays
/// and `manifest.toml` into `cfg.output_dir`. Output is assembled in a
/// sibling directory and moved into place only after all stages succeed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    staged("config", cfg.validate())?;
    let start = Instant::now();
    let out = cfg.output_dir.clone();
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    let tmp = out.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e).in_stage("export"))?;
    }
    let result = run_into(cfg, &tmp, start);
    match result {
        Ok(cases) => {
            let finish = || -> Result<()> {
                if out.exists() {
                    fs::remove_dir_all(&out).map_err(|e| Error::io(&out, e))?;
                }
                fs::rename(&tmp, &out).map_err(|e| Error::io(&out, e))
            };
            if let Err(e) = finish() {
                let _ = fs::remove_dir_all(&tmp);
                return Err(e.in_stage("export"));
            }
            Ok(ExperimentOutcome {
                manifest_path: out.join("manifest.toml"),
                output_dir: out,
                cases,
            })
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

fn run_into(cfg: &ExperimentConfig, dir: &Path, start: Instant) -> Result<Vec<CaseOutcome>> {
    let meshes = staged("mesh", build_meshes(cfg))?;
    let mut cases = Vec::new();
    for (i, spec) in cfg.cases().iter().enumerate() {
        let case = run_case(cfg, &meshes, spec, i)?;
        staged("export", export_case(dir, &meshes, cfg, &case))?;
        cases.push(case);
    }
    let manifest = Manifest {
        config: cfg,
        meshes: MeshManifest {
            forward_elements: meshes.forward.num_triangles(),
            forward_vertices: meshes.forward.num_vertices(),
            forward_seed: if cfg.mesh.reuse_reconstruction_mesh { cfg.seed } else { cfg.seed.wrapping_add(1) },
            inverse_elements: meshes.inverse.num_triangles(),
            inverse_vertices: meshes.inverse.num_vertices(),
            inverse_seed: cfg.seed,
            inverse_mesh_size: meshes.inverse.mesh_size(),
            same_mesh: cfg.mesh.reuse_reconstruction_mesh,
        },
        cases: cases.iter().map(case_manifest).collect(),
        total_wall_time_s: start.elapsed().as_secs_f64(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::invalid(e.to_string()).in_stage("export"))?;
    staged("export", io::write_text(&dir.join("manifest.toml"), &text))?;
    Ok(cases)
}

fn case_manifest(c: &CaseOutcome) -> CaseManifest<'_> {
    CaseManifest {
        name: &c.spec.name,
        p: c.spec.p,
        boundary_conditions: &c.spec.boundary_conditions,
        gradients_at_phantom_center: &c.gradients,
        elliptic: c.elliptic,
        eps_used: c.reconstruction.eps_used,
        residual_norm: c.reconstruction.residual_norm,
        iterations: c.reconstruction.iterations,
        solver: &c.reconstruction.solver,
        energy: c.reconstruction.energy,
        energy_at_zero: c.reconstruction.energy_at_zero,
        forward_iterations: &c.forward_iterations,
        mass_fraction: c.mass_fraction,
        detected_peaks_deg: &c.streaks.detected_peaks,
        predicted_directions_deg: &c.streaks.predicted_directions,
        peak_match_errors_deg: &c.streaks.peak_match_errors,
        streak_threshold: c.streaks.threshold,
        wall_time_s: c.wall_time_s,
    }
}

fn export_case(dir: &Path, meshes: &ExperimentMeshes, cfg: &ExperimentConfig, c: &CaseOutcome) -> Result<()> {
    let mesh = &meshes.inverse;
    let p1 = FunctionSpace::lagrange1(mesh);
    let ph = cfg.phantom;
    let truth = FemField::interpolate(&p1, |x| ph.evaluate(x) - ph.background);
    let artifact = artifact_field(&c.reconstruction.delta_sigma, &ph)?;
    let flux_cells: Vec<(String, Vec<[f64; 2]>)> = c
        .reconstruction
        .fluxes
        .iter()
        .enumerate()
        .map(|(j, f)| (format!("flux_{j}"), (0..mesh.num_triangles()).map(|t| f.eval_vector_local(t, &mesh.centroid(t))).collect()))
        .collect();
    let data = VtkData {
        point_scalars: vec![
            ("delta_sigma", &c.reconstruction.delta_sigma),
            ("phantom_perturbation", &truth),
            ("artifact", &artifact),
        ],
        cell_scalars: Vec::new(),
        cell_vectors: flux_cells.iter().map(|(n, v)| (n.as_str(), v.clone())).collect(),
    };
    let base = dir.join(&c.spec.name);
    io::write_vtk(&base.join("reconstruction.vtk"), mesh, &data)?;
    io::write_fields_csv(
        &base.join("reconstruction.csv"),
        mesh,
        &[("delta_sigma", &c.reconstruction.delta_sigma), ("phantom_perturbation", &truth)],
    )?;
    let mut hist = String::from("angle_deg,energy\n");
    for (k, h) in c.streaks.orientation_histogram.iter().enumerate() {
        hist.push_str(&format!("{k},{h}\n"));
    }
    io::write_text(&base.join("streak_histogram.csv"), &hist)?;
    io::write_text(&base.join("overlay.csv"), &io::traces_csv(&c.overlay))?;
    io::write_text(&base.join("overlay.vtk"), &io::traces_vtk(&c.overlay))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_validates() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            kind = "p_sweep"
            boundary_conditions = ["x"]
            [sweep]
            p_values = [1.5, 2.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.cases().len(), 2);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back.cases(), cfg.cases());
        assert!(ExperimentConfig::from_toml_str("p = -1.0").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[mesh]\nforward_elements = 100\ninverse_elements = 100").is_err());
    }

    #[test]
    fn experiment_kinds_expand_to_cases() {
        let mut cfg = ExperimentConfig {
            kind: ExperimentKind::EllipticVsNonelliptic,
            ..Default::default()
        };
        let names: Vec<String> = cfg.cases().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["p2_elliptic", "p2_nonelliptic", "p1_elliptic", "p1_nonelliptic"]);
        cfg.kind = ExperimentKind::WavefrontAlignment;
        assert_eq!(cfg.cases()[1].boundary_conditions, vec!["angle:22.5".to_string()]);
    }

    #[test]
    fn small_experiment_writes_manifest_and_fields() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Custom,
            boundary_conditions: vec!["x".into()],
            output_dir: dir.path().join("run"),
            mesh: MeshConfig {
                forward_elements: 500,
                inverse_elements: 400,
                reuse_reconstruction_mesh: false,
            },
            ..Default::default()
        };
        let out = run_experiment(&cfg).unwrap();
        let manifest = fs::read_to_string(&out.manifest_path).unwrap();
        assert!(manifest.contains("eps_used"));
        assert!(manifest.contains("boundary_conditions"));
        assert!(out.output_dir.join("custom/reconstruction.vtk").exists());
        assert_eq!(out.cases[0].overlay.len(), 16);
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn reused_mesh_fails_in_the_reconstruct_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            output_dir: dir.path().join("run"),
            mesh: MeshConfig {
                forward_elements: 300,
                inverse_elements: 300,
                reuse_reconstruction_mesh: true,
            },
            ..Default::default()
        };
        match run_experiment(&cfg) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "reconstruct");
                assert!(matches!(*source, Error::InverseCrime(_)));
            }
            other => panic!("expected a stage error, got {other:?}"),
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn ellipticity_expectation_is_enforced() {
        let cfg = ExperimentConfig {
            boundary_conditions: vec!["x".into()],
            mesh: MeshConfig {
                forward_elements: 120,
                inverse_elements: 100,
                reuse_reconstruction_mesh: false,
            },
            ..Default::default()
        };
        let meshes = build_meshes(&cfg).unwrap();
        let spec = CaseSpec {
            expect_elliptic: Some(true),
            ..cfg.cases()[0].clone()
        };
        match run_case(&cfg, &meshes, &spec, 0) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "symbols"),
            other => panic!("expected a stage error, got {:?}", other.map(|c| c.spec)),
        }
        let kinds = ExperimentConfig {
            kind: ExperimentKind::EllipticVsNonelliptic,
            ..cfg.clone()
        };
        let expected: Vec<Option<bool>> = kinds.cases().iter().map(|c| c.expect_elliptic).collect();
        assert_eq!(expected, [Some(true), Some(false), Some(true), Some(false)]);
    }
}
