//! p = 2 with the reference field rotated by 0, 22.5 and 45 degrees. At 45
//! degrees the predicted streaks run along the rectangle edges, where the
//! phantom itself is singular.
//!
//! ```bash
//! cargo run --release --example wavefront_alignment -- 24000
//! ```

use hybridtomo::experiments::{run_experiment, ExperimentConfig, ExperimentKind, MeshConfig};
use hybridtomo::phantom::wavefront;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12000);
    let cfg = ExperimentConfig {
        kind: ExperimentKind::WavefrontAlignment,
        p: 2.0,
        boundary_conditions: vec!["x".into()],
        output_dir: "output/wavefront_alignment".into(),
        mesh: MeshConfig {
            forward_elements: n + n / 6,
            inverse_elements: n,
            reuse_reconstruction_mesh: false,
        },
        ..Default::default()
    };
    let wf = wavefront(&cfg.phantom);
    let out = run_experiment(&cfg)?;
    for c in &out.cases {
        let pred = &c.streaks.predicted_directions;
        // A streak along an edge has its loss direction along the edge normal.
        let along_edges = pred.iter().any(|d| {
            wf.edges
                .iter()
                .any(|e| ((d + 90.0).to_radians().cos() * e.normal[1] - (d + 90.0).to_radians().sin() * e.normal[0]).abs() < 1e-9)
        });
        println!(
            "{}: predicted {:?} (along the edges: {along_edges}), peaks {:?}, mass fraction {:.3}",
            c.spec.name,
            pred.iter().map(|a| (a * 100.0).round() / 100.0).collect::<Vec<_>>(),
            c.streaks.detected_peaks,
            c.mass_fraction
        );
    }
    println!("manifest: {}", out.manifest_path.display());
    Ok(())
}
