//! The streak metric on synthetic fields: a ridge through a phantom corner at
//! 135 degrees, and two crossing ridges at 45 and 135 degrees. Prints the
//! strongest histogram bins and the detected peaks.
//!
//! ```bash
//! cargo run --release --example streak_metric
//! ```

use std::sync::Arc;

use hybridtomo::experiments::streak::streak_metric;
use hybridtomo::fem::{FemField, FunctionSpace};
use hybridtomo::mesh::{generate_disc_mesh, Point};
use hybridtomo::phantom::RectPhantom;

fn ridge(x: Point, through: Point, angle_deg: f64, width: f64) -> f64 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let r = [x[0] - through[0], x[1] - through[1]];
    (-((r[0] * s - r[1] * c) / width).powi(2)).exp()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(generate_disc_mesh(8000, 0)?);
    let ph = RectPhantom::default();
    let [_, lr, ur, _] = ph.corners();
    let w = 2.0 * mesh.mesh_size();
    let p1 = FunctionSpace::lagrange1(&mesh);

    let cases = [
        ("single ridge", FemField::interpolate(&p1, |x| ridge(x, lr, 135.0, w))),
        ("crossing ridges", FemField::interpolate(&p1, |x| ridge(x, lr, 135.0, w) + ridge(x, ur, 45.0, w))),
    ];
    for (name, field) in cases {
        let r = streak_metric(&field, &ph, &[[1.0, 0.0]], 2.0)?;
        let mut bins: Vec<(usize, f64)> = r.orientation_histogram.iter().copied().enumerate().collect();
        bins.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("{name}: peaks {:?}, predicted {:?}, threshold {:.3e}", r.detected_peaks, r.predicted_directions, r.threshold);
        println!("  strongest bins {:?}", bins.iter().take(5).map(|(k, _)| *k).collect::<Vec<_>>());
    }
    Ok(())
}
