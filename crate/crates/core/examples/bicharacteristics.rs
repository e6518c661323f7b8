//! Bicharacteristic curves: straight lines perpendicular to the loss
//! direction for a constant background, and a curved trace for the
//! background u = 0.3 x + 0.1 (x^2 - y^2). Curves are written as CSV and VTK
//! polylines.
//!
//! ```bash
//! cargo run --example bicharacteristics
//! ```

use std::path::Path;

use hybridtomo::forward::{harmonic_extension, BoundaryCondition};
use hybridtomo::io;
use hybridtomo::microlocal::{
    line_angle, loss_directions, project_to_characteristic, trace_bicharacteristic, ClosedFormGradient,
    ConstantGradient, GradientField, TraceMode, TraceOptions,
};
use hybridtomo::phantom::RectPhantom;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = TraceOptions {
        step: 2.5e-4,
        max_steps: 4000,
        drift_tol: 1e-6,
    };
    let mut traces = Vec::new();

    let flat = ConstantGradient([1.0, 0.0]);
    for p in [2.0, 4.0] {
        for xi in loss_directions(&[[1.0, 0.0]], p)? {
            for corner in RectPhantom::default().corners() {
                let tr = trace_bicharacteristic(corner, xi, &[&flat], p, TraceMode::Single(0), &opts, None)?;
                let (end, _) = *tr.points.last().unwrap();
                let dir = [end[0] - corner[0], end[1] - corner[1]];
                println!(
                    "p = {p}, xi at {:.1} deg: curve direction {:.4} deg, {} steps ({:?}), max |dx/dt . xi|/|dx/dt| = {:.1e}",
                    line_angle(xi).to_degrees(),
                    line_angle(dir).to_degrees(),
                    tr.points.len() - 1,
                    tr.terminated,
                    tr.max_perpendicularity
                );
                traces.push(tr);
            }
        }
    }

    let bc = BoundaryCondition::parse("0.3*x+0.1*re2")?;
    let curved = ClosedFormGradient(harmonic_extension(&bc));
    let xi = project_to_characteristic(curved.gradient([0.0, 0.0]), [1.0, 1.0], 2.0)?;
    let tr = trace_bicharacteristic([0.0, 0.0], xi, &[&curved], 2.0, TraceMode::Single(0), &opts, None)?;
    println!(
        "curved background: {} steps, max |symbol| {:.1e}, max perpendicularity {:.1e}",
        tr.points.len() - 1,
        tr.max_symbol,
        tr.max_perpendicularity
    );
    traces.push(tr);

    let out = Path::new("output/bicharacteristics");
    io::write_text(&out.join("traces.csv"), &io::traces_csv(&traces))?;
    io::write_text(&out.join("traces.vtk"), &io::traces_vtk(&traces))?;
    println!("wrote {}", out.display());
    Ok(())
}
