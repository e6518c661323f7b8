//! Rectangular conductivity phantom and the singular directions of its jump.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// `background + amplitude * 1_R(x)` for an axis-aligned rectangle `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPhantom {
    pub center: Point,
    pub half_widths: [f64; 2],
    pub amplitude: f64,
    pub background: f64,
}

impl Default for RectPhantom {
    /// Off-centre rectangle with a +0.1 perturbation of a unit background.
    fn default() -> Self {
        RectPhantom {
            center: [0.3, 0.3],
            half_widths: [0.12, 0.08],
            amplitude: 0.1,
            background: 1.0,
        }
    }
}

impl RectPhantom {
    pub fn new(center: Point, half_widths: [f64; 2], amplitude: f64, background: f64) -> Result<Self> {
        let ph = RectPhantom {
            center,
            half_widths,
            amplitude,
            background,
        };
        ph.validate()?;
        Ok(ph)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.half_widths;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid("phantom half-widths must be positive"));
        }
        if self.amplitude == 0.0 || !self.amplitude.is_finite() {
            return Err(Error::invalid("phantom amplitude must be non-zero"));
        }
        if self.corners().iter().any(|c| c[0].hypot(c[1]) >= 1.0) {
            return Err(Error::invalid("phantom rectangle must lie strictly inside the unit disc"));
        }
        if self.background <= 0.0 || self.background + self.amplitude <= 0.0 {
            return Err(Error::invalid("phantom conductivity must stay positive"));
        }
        Ok(())
    }

    /// Closed rectangle: points on the edges count as inside.
    pub fn contains(&self, x: Point) -> bool {
        (x[0] - self.center[0]).abs() <= self.half_widths[0] && (x[1] - self.center[1]).abs() <= self.half_widths[1]
    }

    pub fn evaluate(&self, x: Point) -> f64 {
        if self.contains(x) {
            self.background + self.amplitude
        } else {
            self.background
        }
    }

    /// Corners counter-clockwise from the lower left.
    pub fn corners(&self) -> [Point; 4] {
        let [cx, cy] = self.center;
        let [a, b] = self.half_widths;
        [[cx - a, cy - b], [cx + a, cy - b], [cx + a, cy + b], [cx - a, cy + b]]
    }

    /// Euclidean distance from `x` to the rectangle (zero inside).
    pub fn distance(&self, x: Point) -> f64 {
        let dx = ((x[0] - self.center[0]).abs() - self.half_widths[0]).max(0.0);
        let dy = ((x[1] - self.center[1]).abs() - self.half_widths[1]).max(0.0);
        dx.hypot(dy)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_widths[0] * self.half_widths[1]
    }
}

/// A straight edge of the jump set with its two singular directions `±normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSingularity {
    pub start: Point,
    pub end: Point,
    /// Outward unit normal; the opposite direction is singular as well.
    pub normal: [f64; 2],
}

/// Corner of the jump set. Directions with angle in
/// `[outward.0, outward.1]` (degrees, counter-clockwise) point out of the
/// rectangle; the inward sector is the same arc rotated by 180 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerSingularity {
    pub point: Point,
    pub outward: (f64, f64),
    pub inward: (f64, f64),
}

impl CornerSingularity {
    /// Whether the direction at `angle_deg` is singular at this corner.
    pub fn contains_direction(&self, angle_deg: f64) -> bool {
        let inside = |(lo, hi): (f64, f64)| {
            let a = (angle_deg - lo).rem_euclid(360.0);
            a <= (hi - lo).rem_euclid(360.0) + 1e-12
        };
        inside(self.outward) || inside(self.inward)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontDescription {
    pub edges: Vec<EdgeSingularity>,
    pub corners: Vec<CornerSingularity>,
}

/// A rectangle given by its corners; only axis-aligned ones are supported.
#[derive(Debug, Clone, Copy)]
pub struct RectangleCorners(pub [Point; 4]);

impl RectangleCorners {
    pub fn to_phantom(&self, amplitude: f64, background: f64) -> Result<RectPhantom> {
        let c = &self.0;
        for i in 0..4 {
            let (p, q) = (c[i], c[(i + 1) % 4]);
            let axis_aligned = (p[0] - q[0]).abs() < 1e-14 || (p[1] - q[1]).abs() < 1e-14;
            if !axis_aligned {
                return Err(Error::invalid("only axis-aligned rectangles are supported"));
            }
        }
        let xs = c.iter().map(|p| p[0]);
        let ys = c.iter().map(|p| p[1]);
        let (x0, x1) = xs.clone().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
        let (y0, y1) = ys.clone().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
        RectPhantom::new(
            [0.5 * (x0 + x1), 0.5 * (y0 + y1)],
            [0.5 * (x1 - x0), 0.5 * (y1 - y0)],
            amplitude,
            background,
        )
    }
}

/// Singular directions of the phantom: the jump is singular normal to each
/// edge, and at each corner in every direction between the two adjacent edge
/// normals (plus the opposite sector).
pub fn wavefront(ph: &RectPhantom) -> WavefrontDescription {
    let [ll, lr, ur, ul] = ph.corners();
    let edges = vec![
        EdgeSingularity { start: ll, end: lr, normal: [0.0, -1.0] },
        EdgeSingularity { start: lr, end: ur, normal: [1.0, 0.0] },
        EdgeSingularity { start: ur, end: ul, normal: [0.0, 1.0] },
        EdgeSingularity { start: ul, end: ll, normal: [-1.0, 0.0] },
    ];
    let sector = |point: Point, lo: f64| CornerSingularity {
        point,
        outward: (lo, lo + 90.0),
        inward: ((lo + 180.0) % 360.0, (lo + 270.0) % 360.0),
    };
    let corners = vec![sector(ll, 180.0), sector(lr, 270.0), sector(ur, 0.0), sector(ul, 90.0)];
    WavefrontDescription { edges, corners }
}
