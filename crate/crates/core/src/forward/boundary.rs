//! Dirichlet data given by harmonic closed forms, so that the harmonic
//! extension into the disc is known analytically.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// A closed-form function on the plane, declared harmonic by its author.
pub trait HarmonicFunction: Send + Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> [f64; 2];
    fn hessian(&self, x: Point) -> [[f64; 2]; 2];
}

/// `c + sum_k re[k-1] Re z^k + im[k-1] Im z^k` with `z = x + iy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HarmonicPolynomial {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl HarmonicPolynomial {
    fn terms(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        // Coefficient a - ib makes Re(w z^k) = a Re z^k + b Im z^k.
        let n = self.re.len().max(self.im.len());
        (0..n).map(move |i| {
            let a = self.re.get(i).copied().unwrap_or(0.0);
            let b = self.im.get(i).copied().unwrap_or(0.0);
            (i as u32 + 1, Complex64::new(a, -b))
        })
    }
}

impl HarmonicFunction for HarmonicPolynomial {
    fn value(&self, x: Point) -> f64 {
        let z = Complex64::new(x[0], x[1]);
        self.constant + self.terms().map(|(k, w)| (w * z.powu(k)).re).sum::<f64>()
    }

    fn gradient(&self, x: Point) -> [f64; 2] {
        // For analytic g, grad Re g = (Re g', -Im g').
        let z = Complex64::new(x[0], x[1]);
        let d: Complex64 = self.terms().map(|(k, w)| w * (k as f64) * z.powu(k - 1)).sum();
        [d.re, -d.im]
    }

    fn hessian(&self, x: Point) -> [[f64; 2]; 2] {
        let z = Complex64::new(x[0], x[1]);
        let d2: Complex64 = self
            .terms()
            .filter(|(k, _)| *k >= 2)
            .map(|(k, w)| w * (k * (k - 1)) as f64 * z.powu(k - 2))
            .sum();
        [[d2.re, -d2.im], [-d2.im, -d2.re]]
    }
}

#[derive(Clone)]
enum Form {
    Polynomial(HarmonicPolynomial),
    Custom(Arc<dyn HarmonicFunction>),
}

/// Dirichlet data `f` on the unit circle together with its harmonic
/// extension `F` into the disc.
#[derive(Clone)]
pub struct BoundaryCondition {
    label: String,
    form: Form,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("BoundaryCondition");
        d.field("label", &self.label);
        match &self.form {
            Form::Polynomial(p) => d.field("polynomial", p),
            Form::Custom(_) => d.field("polynomial", &"<custom>"),
        };
        d.finish()
    }
}

impl BoundaryCondition {
    /// `f = a x + b y`.
    pub fn linear(a: f64, b: f64) -> Self {
        let label = match (a, b) {
            (a, b) if a == 1.0 && b == 0.0 => "x".to_string(),
            (a, b) if a == 0.0 && b == 1.0 => "y".to_string(),
            _ => format!("{a}*x+{b}*y"),
        };
        Self::polynomial(label, HarmonicPolynomial {
            constant: 0.0,
            re: vec![a],
            im: vec![b],
        })
    }

    /// `f = cos(theta) x + sin(theta) y`, whose gradient is the unit vector
    /// at `theta_deg` degrees.
    pub fn at_angle(theta_deg: f64) -> Self {
        let t = theta_deg.to_radians();
        let mut bc = Self::linear(t.cos(), t.sin());
        bc.label = format!("angle:{theta_deg}");
        bc
    }

    pub fn polynomial(label: impl Into<String>, poly: HarmonicPolynomial) -> Self {
        BoundaryCondition {
            label: label.into(),
            form: Form::Polynomial(poly),
        }
    }

    /// A user closed form. Harmonicity is checked with a finite-difference
    /// Laplacian at sample points in the disc.
    pub fn custom(label: impl Into<String>, f: Arc<dyn HarmonicFunction>) -> Result<Self> {
        let label = label.into();
        let h = 1e-3;
        let mut worst = 0.0f64;
        for r in [0.0, 0.3, 0.6, 0.9] {
            for k in 0..8 {
                let a = k as f64 * std::f64::consts::FRAC_PI_4 + 0.1;
                let x = [r * a.cos(), r * a.sin()];
                let c = f.value(x);
                let lap = (f.value([x[0] + h, x[1]])
                    + f.value([x[0] - h, x[1]])
                    + f.value([x[0], x[1] + h])
                    + f.value([x[0], x[1] - h])
                    - 4.0 * c)
                    / (h * h);
                if !lap.is_finite() || !c.is_finite() {
                    return Err(Error::invalid(format!("boundary condition '{label}' is not finite in the disc")));
                }
                worst = worst.max(lap.abs() / (1.0 + c.abs()));
            }
        }
        if worst > 1e-4 {
            return Err(Error::NotHarmonic { label, laplacian: worst });
        }
        Ok(BoundaryCondition {
            label,
            form: Form::Custom(f),
        })
    }

    /// Parses the shorthand used in configuration files:
    /// `angle:<degrees>` or a sum of terms `[coef*]name` with names
    /// `x`, `y`, `re<k>`, `im<k>` (real/imaginary part of `z^k`) and bare
    /// constants, e.g. `x`, `0.5*x-2*y`, `re2`, `1+im3`.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let err = |m: &str| Error::Parse {
            context: format!("boundary condition '{text}'"),
            message: m.to_string(),
        };
        if let Some(deg) = s.strip_prefix("angle:") {
            let d: f64 = deg.parse().map_err(|_| err("angle must be a number"))?;
            return Ok(Self::at_angle(d));
        }
        if s.is_empty() {
            return Err(err("empty expression"));
        }
        let mut poly = HarmonicPolynomial::default();
        let mut rest = s.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1.0, &rest[1..]),
                b'-' => (-1.0, &rest[1..]),
                _ => (1.0, rest),
            };
            // A term ends at the next sign not preceded by an exponent marker.
            let bytes = body.as_bytes();
            let mut end = bytes.len();
            for i in 1..bytes.len() {
                if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                    end = i;
                    break;
                }
            }
            let term = &body[..end];
            rest = &body[end..];
            let (coef, name) = match term.split_once('*') {
                Some((c, n)) => (c.parse::<f64>().map_err(|_| err("bad coefficient"))?, n),
                None => match term.parse::<f64>() {
                    Ok(c) => {
                        poly.constant += sign * c;
                        continue;
                    }
                    Err(_) => (1.0, term),
                },
            };
            let c = sign * coef;
            let (slot, k) = match name {
                "x" => (&mut poly.re, 1),
                "y" => (&mut poly.im, 1),
                n if n.starts_with("re") || n.starts_with("im") => {
                    let k: usize = n[2..].parse().map_err(|_| err("bad harmonic degree"))?;
                    if k == 0 {
                        return Err(err("harmonic degree must be at least 1"));
                    }
                    (if n.starts_with("re") { &mut poly.re } else { &mut poly.im }, k)
                }
                _ => return Err(err(&format!("unknown term '{name}'"))),
            };
            if slot.len() < k {
                slot.resize(k, 0.0);
            }
            slot[k - 1] += c;
        }
        Ok(Self::polynomial(s, poly))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Harmonic polynomial coefficients, when the condition has that form.
    pub fn as_polynomial(&self) -> Option<&HarmonicPolynomial> {
        match &self.form {
            Form::Polynomial(p) => Some(p),
            Form::Custom(_) => None,
        }
    }

    /// Boundary value at a point of the circle (or anywhere in the plane).
    pub fn value(&self, x: Point) -> f64 {
        self.function().value(x)
    }

    fn function(&self) -> &dyn HarmonicFunction {
        match &self.form {
            Form::Polynomial(p) => p,
            Form::Custom(f) => f.as_ref(),
        }
    }
}

/// The harmonic extension `F` of a boundary condition with its derivatives.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    bc: BoundaryCondition,
}

impl HarmonicExtension {
    pub fn value(&self, x: Point) -> f64 {
        self.bc.function().value(x)
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        self.bc.function().gradient(x)
    }

    pub fn hessian(&self, x: Point) -> [[f64; 2]; 2] {
        self.bc.function().hessian(x)
    }

    pub fn boundary_condition(&self) -> &BoundaryCondition {
        &self.bc
    }
}

/// Harmonic polynomials are harmonic by construction and custom forms are
/// checked when the condition is built, so this cannot fail afterwards.
pub fn harmonic_extension(bc: &BoundaryCondition) -> HarmonicExtension {
    HarmonicExtension { bc: bc.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14
    }

    #[test]
    fn coordinate_functions() {
        let f = harmonic_extension(&BoundaryCondition::linear(1.0, 0.0));
        assert_eq!(f.value([0.3, -0.2]), 0.3);
        assert!(close(f.gradient([0.3, -0.2]), [1.0, 0.0]));
        let g = harmonic_extension(&BoundaryCondition::linear(1.0, 1.0));
        assert!(close(g.gradient([0.1, 0.5]), [1.0, 1.0]));
        assert!((g.value([0.1, 0.5]) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn real_part_of_z_squared() {
        let bc = BoundaryCondition::parse("re2").unwrap();
        let f = harmonic_extension(&bc);
        let x = [0.4, -0.7];
        assert!((f.value(x) - (0.16 - 0.49)).abs() < 1e-15);
        assert!(close(f.gradient(x), [0.8, 1.4]));
        let h = f.hessian(x);
        assert!(close(h[0], [2.0, 0.0]) && close(h[1], [0.0, -2.0]));
    }

    #[test]
    fn imaginary_parts_match_monomials() {
        // Im z^2 = 2xy, Im z^3 = 3x^2 y - y^3.
        let f = harmonic_extension(&BoundaryCondition::parse("im2+2*im3").unwrap());
        let [x, y] = [0.3, 0.6];
        let exact = 2.0 * x * y + 2.0 * (3.0 * x * x * y - y * y * y);
        assert!((f.value([x, y]) - exact).abs() < 1e-14);
        let g = f.gradient([x, y]);
        let ge = [2.0 * y + 12.0 * x * y, 2.0 * x + 2.0 * (3.0 * x * x - 3.0 * y * y)];
        assert!(close(g, ge));
        let h = f.hessian([x, y]);
        assert!((h[0][0] + h[1][1]).abs() < 1e-14);
        assert!((h[0][1] - (2.0 + 12.0 * x)).abs() < 1e-14);
    }

    #[test]
    fn parse_linear_combinations() {
        let bc = BoundaryCondition::parse("0.5*x - 2*y + 1").unwrap();
        let f = harmonic_extension(&bc);
        assert!((f.value([1.0, 1.0]) - (0.5 - 2.0 + 1.0)).abs() < 1e-15);
        let a = BoundaryCondition::parse("angle:90").unwrap();
        let g = harmonic_extension(&a).gradient([0.0, 0.0]);
        assert!(g[0].abs() < 1e-15 && (g[1] - 1.0).abs() < 1e-15);
        assert!(BoundaryCondition::parse("x*y").is_err());
        assert!(BoundaryCondition::parse("re0").is_err());
        assert!(BoundaryCondition::parse("1e-3*x").is_ok());
    }

    struct NotHarmonic;
    impl HarmonicFunction for NotHarmonic {
        fn value(&self, x: Point) -> f64 {
            x[0] * x[0] + x[1] * x[1]
        }
        fn gradient(&self, x: Point) -> [f64; 2] {
            [2.0 * x[0], 2.0 * x[1]]
        }
        fn hessian(&self, _: Point) -> [[f64; 2]; 2] {
            [[2.0, 0.0], [0.0, 2.0]]
        }
    }

    struct ExpCos;
    impl HarmonicFunction for ExpCos {
        fn value(&self, x: Point) -> f64 {
            x[0].exp() * x[1].cos()
        }
        fn gradient(&self, x: Point) -> [f64; 2] {
            [x[0].exp() * x[1].cos(), -x[0].exp() * x[1].sin()]
        }
        fn hessian(&self, x: Point) -> [[f64; 2]; 2] {
            let (c, s) = (x[0].exp() * x[1].cos(), x[0].exp() * x[1].sin());
            [[c, -s], [-s, -c]]
        }
    }

    #[test]
    fn custom_forms_are_checked() {
        assert!(matches!(
            BoundaryCondition::custom("r2", Arc::new(NotHarmonic)),
            Err(Error::NotHarmonic { .. })
        ));
        let bc = BoundaryCondition::custom("exp", Arc::new(ExpCos)).unwrap();
        assert!((bc.value([0.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
