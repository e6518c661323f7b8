use std::sync::Arc;

use super::quadrature::{DEGREE_4, EDGE_GAUSS_3};
use super::space::{edge_normal, Element, FunctionSpace, SpaceKind};
use crate::error::{Error, Result};
use crate::mesh::{Location, MeshId, Point};

/// Where the values of a field were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Mesh on which the values were originally produced.
    pub origin: MeshId,
    /// Set for fields built from a known answer (test oracles), which are
    /// allowed to share the reconstruction mesh.
    pub manufactured: bool,
}

/// Coefficient vector over a function space.
#[derive(Debug, Clone)]
pub struct FemField {
    space: Arc<FunctionSpace>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl FemField {
    pub fn new(space: Arc<FunctionSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dof_count() {
            return Err(Error::invalid(format!(
                "field has {} coefficients, space has {} dofs",
                values.len(),
                space.dof_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("field coefficient {i} is not finite")));
        }
        let provenance = Provenance {
            origin: space.mesh().id(),
            manufactured: false,
        };
        Ok(FemField {
            space,
            values,
            provenance,
        })
    }

    pub fn zeros(space: &Arc<FunctionSpace>) -> Self {
        FemField::new(space.clone(), vec![0.0; space.dof_count()]).expect("zeros are finite")
    }

    pub fn constant(space: &Arc<FunctionSpace>, c: f64) -> Self {
        assert!(!space.is_vector(), "constant fields need a scalar space");
        FemField::new(space.clone(), vec![c; space.dof_count()]).expect("finite constant")
    }

    /// Nodal interpolation of a scalar function into a Lagrange space.
    pub fn interpolate(space: &Arc<FunctionSpace>, f: impl Fn(Point) -> f64) -> Self {
        assert!(!space.is_vector(), "nodal interpolation needs a Lagrange space");
        let values = space.dof_points().into_iter().map(f).collect();
        FemField::new(space.clone(), values).expect("interpolated values must be finite")
    }

    /// RT0 interpolant: edge fluxes `int_e w . n_e ds` by three-point Gauss.
    pub fn interpolate_flux(space: &Arc<FunctionSpace>, w: impl Fn(Point) -> [f64; 2]) -> Self {
        assert_eq!(space.kind(), SpaceKind::RaviartThomas0);
        let mesh = space.mesh();
        let values = (0..mesh.num_edges())
            .map(|e| {
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                let n = edge_normal(mesh, e);
                let len = mesh.edge_length(e);
                EDGE_GAUSS_3
                    .iter()
                    .map(|&(s, wt)| {
                        let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                        let v = w(x);
                        wt * len * (v[0] * n[0] + v[1] * n[1])
                    })
                    .sum()
            })
            .collect();
        FemField::new(space.clone(), values).expect("flux values must be finite")
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn mesh_id(&self) -> MeshId {
        self.space.mesh().id()
    }

    /// Evaluates a scalar Lagrange field inside triangle `t`.
    pub fn eval_local(&self, t: usize, bary: &[f64; 3]) -> f64 {
        let dofs = self.space.dofs(t);
        match self.space.kind() {
            SpaceKind::Lagrange1 => (0..3).map(|i| bary[i] * self.values[dofs[i]]).sum(),
            SpaceKind::Lagrange2 => {
                let el = Element::new(self.space.mesh(), t);
                el.p2_values(bary).iter().zip(dofs).map(|(n, &d)| n * self.values[d]).sum()
            }
            SpaceKind::RaviartThomas0 => panic!("eval_local on a vector field"),
        }
    }

    pub fn eval_at(&self, loc: &Location) -> f64 {
        self.eval_local(loc.triangle, &loc.bary)
    }

    /// Evaluates an RT0 field at `x` inside triangle `t`.
    pub fn eval_vector_local(&self, t: usize, x: &Point) -> [f64; 2] {
        assert_eq!(self.space.kind(), SpaceKind::RaviartThomas0);
        let el = Element::new(self.space.mesh(), t);
        let phi = el.rt_values(&self.space.rt_signs(t), x);
        let dofs = self.space.dofs(t);
        let mut v = [0.0; 2];
        for i in 0..3 {
            let c = self.values[dofs[i]];
            v[0] += c * phi[i][0];
            v[1] += c * phi[i][1];
        }
        v
    }

    /// Elementwise divergence of an RT0 field (constant per triangle).
    pub fn divergence(&self, t: usize) -> f64 {
        assert_eq!(self.space.kind(), SpaceKind::RaviartThomas0);
        let el = Element::new(self.space.mesh(), t);
        let d = el.rt_divs(&self.space.rt_signs(t));
        self.space.dofs(t).iter().zip(d).map(|(&k, dk)| self.values[k] * dk).sum()
    }

    /// Gradient of a P1 field on triangle `t`.
    pub fn p1_gradient(&self, t: usize) -> [f64; 2] {
        assert_eq!(self.space.kind(), SpaceKind::Lagrange1);
        let el = Element::new(self.space.mesh(), t);
        let dofs = self.space.dofs(t);
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += self.values[dofs[i]] * el.grad_bary[i][0];
            g[1] += self.values[dofs[i]] * el.grad_bary[i][1];
        }
        g
    }

    /// `int (self - f)^2` over the mesh by quadrature.
    pub fn l2_error_sq(&self, f: impl Fn(Point) -> f64) -> f64 {
        let mesh = self.space.mesh();
        let mut acc = 0.0;
        for t in 0..mesh.num_triangles() {
            let el = Element::new(mesh, t);
            for (b, w) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
                let d = self.eval_local(t, b) - f(el.point(b));
                acc += w * el.area * d * d;
            }
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_error_sq(|_| 0.0).sqrt()
    }

    /// L2 distance between two scalar fields on the same mesh.
    pub fn l2_distance(&self, other: &FemField) -> Result<f64> {
        if self.mesh_id() != other.mesh_id() {
            return Err(Error::MeshMismatch);
        }
        let mesh = self.space.mesh();
        let mut acc = 0.0;
        for t in 0..mesh.num_triangles() {
            let el = Element::new(mesh, t);
            for (b, w) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
                let d = self.eval_local(t, b) - other.eval_local(t, b);
                acc += w * el.area * d * d;
            }
        }
        Ok(acc.sqrt())
    }

    /// Pointwise linear combination `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &FemField, b: f64) -> Result<FemField> {
        if self.mesh_id() != other.mesh_id() || self.space.kind() != other.space.kind() {
            return Err(Error::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(FemField::new(self.space.clone(), values)?.with_provenance(self.provenance))
    }

    pub fn scaled(&self, a: f64) -> FemField {
        FemField {
            space: self.space.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
            provenance: self.provenance,
        }
    }
}
