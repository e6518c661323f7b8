//! Exponent sweep with a single horizontal reference field: for each p the
//! streak report compares the detected orientation peaks with the predicted
//! directions 90 +- arccos(p^{-1/2}) degrees. Writes fields, histograms,
//! overlays and a manifest under `output/p_sweep`.
//!
//! ```bash
//! cargo run --release --example p_sweep -- 24000
//! ```

use hybridtomo::experiments::{run_experiment, ExperimentConfig, ExperimentKind, MeshConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12000);
    let cfg = ExperimentConfig {
        kind: ExperimentKind::PSweep,
        boundary_conditions: vec!["x".into()],
        output_dir: "output/p_sweep".into(),
        mesh: MeshConfig {
            forward_elements: n + n / 6,
            inverse_elements: n,
            reuse_reconstruction_mesh: false,
        },
        ..Default::default()
    };
    let out = run_experiment(&cfg)?;
    for c in &out.cases {
        println!(
            "p = {}: peaks {:?}, predicted {:?}, errors {:?}, mass fraction {:.3}",
            c.spec.p,
            c.streaks.detected_peaks,
            c.streaks.predicted_directions.iter().map(|a| (a * 100.0).round() / 100.0).collect::<Vec<_>>(),
            c.streaks.prediction_errors().iter().map(|e| e.map(|v| (v * 100.0).round() / 100.0)).collect::<Vec<_>>(),
            c.mass_fraction
        );
    }
    println!("manifest: {}", out.manifest_path.display());
    Ok(())
}
