//! Orientation analysis of reconstruction artifacts around a rectangular
//! phantom.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fem::{FemField, SpaceKind};
use crate::microlocal::{line_distance, predicted_streak_angles_deg};
use crate::phantom::RectPhantom;

/// Number of 1 degree orientation bins over `[0, 180)`.
pub const ORIENTATION_BINS: usize = 180;

/// Dilation of the phantom support, in mesh cells.
pub const SUPPORT_DILATION_CELLS: f64 = 3.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreakReport {
    /// Energy of the artifact field along lines through the phantom corners,
    /// bin `k` holding orientation `k` degrees.
    pub orientation_histogram: Vec<f64>,
    /// Detected orientations in degrees, strongest first.
    pub detected_peaks: Vec<f64>,
    /// Loss directions rotated by 90 degrees, in `[0, 180)`.
    pub predicted_directions: Vec<f64>,
    /// For each detected peak, distance in degrees to the nearest predicted
    /// direction (NaN when nothing is predicted).
    pub peak_match_errors: Vec<f64>,
    /// `mean + 2 * standard deviation` of the histogram.
    pub threshold: f64,
}

impl StreakReport {
    /// For each predicted direction, distance in degrees to the nearest
    /// detected peak.
    pub fn prediction_errors(&self) -> Vec<Option<f64>> {
        self.predicted_directions
            .iter()
            .map(|&d| nearest(d, &self.detected_peaks))
            .collect()
    }

    /// Every predicted direction has a detected peak within `tol_deg`.
    pub fn predictions_matched(&self, tol_deg: f64) -> bool {
        self.prediction_errors().iter().all(|e| e.is_some_and(|e| e <= tol_deg))
    }
}

fn nearest(angle: f64, candidates: &[f64]) -> Option<f64> {
    candidates
        .iter()
        .map(|&c| line_distance(angle.to_radians(), c.to_radians()).to_degrees())
        .min_by(f64::total_cmp)
}

/// `delta sigma` with every vertex within `SUPPORT_DILATION_CELLS` mesh
/// sizes of the phantom set to zero.
pub fn artifact_field(delta_sigma: &FemField, phantom: &RectPhantom) -> Result<FemField> {
    let mesh = delta_sigma.space().mesh().clone();
    if delta_sigma.space().kind() != SpaceKind::Lagrange1 {
        return Err(crate::Error::invalid("artifact analysis needs a Lagrange1 field"));
    }
    let reach = SUPPORT_DILATION_CELLS * mesh.mesh_size();
    let mut out = delta_sigma.clone();
    for (v, x) in mesh.vertices().iter().enumerate() {
        if phantom.distance(*x) <= reach {
            out.values_mut()[v] = 0.0;
        }
    }
    Ok(out)
}

/// Fraction of `int |delta sigma|` (lumped by vertex areas) carried by
/// vertices inside the dilated phantom support.
pub fn support_mass_fraction(delta_sigma: &FemField, phantom: &RectPhantom) -> Result<f64> {
    let mesh = delta_sigma.space().mesh().clone();
    if delta_sigma.space().kind() != SpaceKind::Lagrange1 {
        return Err(crate::Error::invalid("mass fraction needs a Lagrange1 field"));
    }
    let reach = SUPPORT_DILATION_CELLS * mesh.mesh_size();
    let areas = mesh.vertex_areas();
    let (mut inside, mut total) = (0.0, 0.0);
    for (v, x) in mesh.vertices().iter().enumerate() {
        let m = areas[v] * delta_sigma.values()[v].abs();
        total += m;
        if phantom.distance(*x) <= reach {
            inside += m;
        }
    }
    Ok(if total > 0.0 { inside / total } else { 1.0 })
}

/// Squared artifact field integrated along the chord of the unit disc
/// through `origin` with direction `angle` (trapezoid rule, spacing `ds`).
fn line_energy(field: &FemField, origin: [f64; 2], angle: f64, ds: f64) -> f64 {
    let mesh = field.space().mesh();
    let d = [angle.cos(), angle.sin()];
    // Chord parameters s with |origin + s d| = 1.
    let b = origin[0] * d[0] + origin[1] * d[1];
    let c = origin[0] * origin[0] + origin[1] * origin[1] - 1.0;
    let disc = b * b - c;
    if disc <= 0.0 {
        return 0.0;
    }
    let (s0, s1) = (-b - disc.sqrt(), -b + disc.sqrt());
    let n = ((s1 - s0) / ds).ceil().max(1.0) as usize;
    let step = (s1 - s0) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let s = s0 + step * i as f64;
        let x = [origin[0] + s * d[0], origin[1] + s * d[1]];
        let v = match mesh.locate_point(x) {
            Ok(loc) => field.eval_at(&loc),
            Err(_) => 0.0,
        };
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * v * v;
    }
    sum * step
}

/// Angular energy profile of the artifacts on line families through the
/// phantom corners, with peaks compared against the propagation directions
/// predicted from `gradients`.
pub fn streak_metric(delta_sigma: &FemField, phantom: &RectPhantom, gradients: &[[f64; 2]], p: f64) -> Result<StreakReport> {
    let artifact = artifact_field(delta_sigma, phantom)?;
    let mut predicted = predicted_streak_angles_deg(gradients, p)?;
    predicted.sort_by(f64::total_cmp);
    Ok(analyse(&artifact, phantom, predicted))
}

/// Same as `streak_metric` on a field that is already restricted to the
/// artifact region, with explicit predicted directions.
pub fn analyse(artifact: &FemField, phantom: &RectPhantom, predicted_directions: Vec<f64>) -> StreakReport {
    let ds = 0.5 * artifact.space().mesh().mesh_size();
    let corners = phantom.corners();
    let histogram: Vec<f64> = (0..ORIENTATION_BINS)
        .map(|k| {
            let a = (k as f64).to_radians();
            corners.iter().map(|c| line_energy(artifact, *c, a, ds)).sum()
        })
        .collect();
    let n = histogram.len() as f64;
    let mean = histogram.iter().sum::<f64>() / n;
    let var = histogram.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + 2.0 * var.sqrt();
    let mut peaks: Vec<(f64, f64)> = (0..ORIENTATION_BINS)
        .filter(|&k| {
            let h = histogram[k];
            let prev = histogram[(k + ORIENTATION_BINS - 1) % ORIENTATION_BINS];
            let next = histogram[(k + 1) % ORIENTATION_BINS];
            h > threshold && h >= prev && h > next
        })
        .map(|k| (k as f64, histogram[k]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let detected_peaks: Vec<f64> = peaks.into_iter().map(|(a, _)| a).collect();
    let peak_match_errors = detected_peaks
        .iter()
        .map(|&a| nearest(a, &predicted_directions).unwrap_or(f64::NAN))
        .collect();
    StreakReport {
        orientation_histogram: histogram,
        detected_peaks,
        predicted_directions,
        peak_match_errors,
        threshold,
    }
}
