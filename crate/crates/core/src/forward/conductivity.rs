use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::quadrature::DEGREE_4;
use crate::fem::{Element, FemField, FunctionSpace, SpaceKind};
use crate::mesh::{Mesh2D, Point};
use crate::phantom::RectPhantom;

/// Conductivity evaluated at quadrature points. Discontinuous phantoms are
/// sampled pointwise, without fitting the mesh to the jump.
#[derive(Clone)]
pub enum Conductivity {
    Constant(f64),
    Phantom(RectPhantom),
    /// Lagrange field on the mesh of the solve.
    Nodal(FemField),
    Closed(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Conductivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conductivity::Constant(c) => write!(f, "Constant({c})"),
            Conductivity::Phantom(p) => write!(f, "Phantom({p:?})"),
            Conductivity::Nodal(n) => write!(f, "Nodal({} dofs)", n.values().len()),
            Conductivity::Closed(_) => write!(f, "Closed(..)"),
        }
    }
}

impl Conductivity {
    pub fn closed(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Conductivity::Closed(Arc::new(f))
    }

    pub fn eval_local(&self, t: usize, bary: &[f64; 3], x: &Point) -> f64 {
        match self {
            Conductivity::Constant(c) => *c,
            Conductivity::Phantom(p) => p.evaluate(*x),
            Conductivity::Nodal(f) => f.eval_local(t, bary),
            Conductivity::Closed(f) => f(*x),
        }
    }

    /// Value at vertex `v` of `mesh`.
    pub fn at_vertex(&self, mesh: &Mesh2D, v: usize) -> f64 {
        match self {
            Conductivity::Nodal(f) => f.values()[v],
            _ => {
                let x = mesh.vertices()[v];
                self.eval_local(0, &[1.0, 0.0, 0.0], &x)
            }
        }
    }

    /// P1 interpolant on `mesh`.
    pub fn interpolate(&self, mesh: &Arc<Mesh2D>) -> Result<FemField> {
        self.check(mesh)?;
        let space = FunctionSpace::lagrange1(mesh);
        FemField::new(space, (0..mesh.num_vertices()).map(|v| self.at_vertex(mesh, v)).collect())
    }

    /// Checks that the conductivity lives on `mesh` (for nodal input) and is
    /// strictly positive at every vertex and quadrature point.
    pub fn check(&self, mesh: &Mesh2D) -> Result<()> {
        if let Conductivity::Nodal(f) = self {
            if f.mesh_id() != mesh.id() {
                return Err(Error::MeshMismatch);
            }
            if f.space().kind() != SpaceKind::Lagrange1 {
                return Err(Error::invalid("nodal conductivity must be a P1 field"));
            }
        }
        let bad = |value: f64, location: String| Error::NonPositive {
            what: "conductivity",
            value,
            location,
        };
        for v in 0..mesh.num_vertices() {
            let s = self.at_vertex(mesh, v);
            if !(s > 0.0 && s.is_finite()) {
                return Err(bad(s, format!("vertex {v}")));
            }
        }
        if matches!(self, Conductivity::Constant(_) | Conductivity::Nodal(_)) {
            return Ok(());
        }
        for t in 0..mesh.num_triangles() {
            let el = Element::new(mesh, t);
            for b in DEGREE_4.points {
                let s = self.eval_local(t, b, &el.point(b));
                if !(s > 0.0 && s.is_finite()) {
                    return Err(bad(s, format!("triangle {t}")));
                }
            }
        }
        Ok(())
    }
}
