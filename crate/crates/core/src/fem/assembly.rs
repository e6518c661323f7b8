//! Element-loop assembly into CSR matrices.
//!
//! Local element matrices are computed in parallel, then scattered into the
//! global matrix strictly in element order, so the assembled values are
//! independent of the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::field::FemField;
use super::quadrature::DEGREE_4;
use super::space::{Element, FunctionSpace, SpaceKind};
use super::sparse::{CsrMatrix, SparseSystem};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Marks a local dof that does not take part in the global system.
pub const SKIP: usize = usize::MAX;

const CHUNK: usize = 2048;

/// Dense local matrix (row-major) and vector for one element.
#[derive(Debug, Clone, Default)]
pub struct LocalSystem {
    pub rows: usize,
    pub cols: usize,
    pub mat: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LocalSystem {
    fn reset(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.mat.clear();
        self.mat.resize(rows * cols, 0.0);
        self.rhs.clear();
        self.rhs.resize(rows, 0.0);
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.mat[i * self.cols + j] += v;
    }

    /// Adds `w * r r^T` and `w * target * r`, the contribution of one
    /// least-squares residual row `r . x - target`.
    #[inline]
    pub fn add_residual(&mut self, w: f64, r: &[(usize, f64)], target: f64) {
        for &(i, ri) in r {
            let wri = w * ri;
            self.rhs[i] += wri * target;
            for &(j, rj) in r {
                self.mat[i * self.cols + j] += wri * rj;
            }
        }
    }
}

/// Global dof lists of every element.
pub struct ElementDofs {
    pub row_dofs: Vec<Vec<usize>>,
    pub col_dofs: Option<Vec<Vec<usize>>>,
}

impl ElementDofs {
    fn cols(&self, t: usize) -> &[usize] {
        match &self.col_dofs {
            Some(c) => &c[t],
            None => &self.row_dofs[t],
        }
    }
}

fn build_pattern(nrows: usize, ncols: usize, dofs: &ElementDofs) -> CsrMatrix {
    let nel = dofs.row_dofs.len();
    let mut count = vec![0usize; nrows + 1];
    for r in &dofs.row_dofs {
        for &d in r {
            if d != SKIP {
                count[d + 1] += 1;
            }
        }
    }
    for i in 0..nrows {
        count[i + 1] += count[i];
    }
    let mut incidence = vec![0usize; count[nrows]];
    let mut fill = count.clone();
    for (t, r) in dofs.row_dofs.iter().enumerate() {
        for &d in r {
            if d != SKIP {
                incidence[fill[d]] = t;
                fill[d] += 1;
            }
        }
    }
    let mut marker = vec![usize::MAX; ncols];
    let mut rows = Vec::with_capacity(nrows);
    for i in 0..nrows {
        let mut cols = Vec::new();
        for &t in &incidence[count[i]..count[i + 1]] {
            debug_assert!(t < nel);
            for &c in dofs.cols(t) {
                if c != SKIP && marker[c] != i {
                    marker[c] = i;
                    cols.push(c);
                }
            }
        }
        cols.sort_unstable();
        rows.push(cols);
    }
    CsrMatrix::from_pattern(nrows, ncols, rows)
}

/// Assembles `sum_t P_t^T K_t Q_t` and the matching load vector. `kernel`
/// fills the local system of element `t`.
pub fn assemble<F>(nrows: usize, ncols: usize, dofs: &ElementDofs, kernel: F) -> (CsrMatrix, Vec<f64>)
where
    F: Fn(usize, &mut LocalSystem) + Sync,
{
    let mut matrix = build_pattern(nrows, ncols, dofs);
    let mut rhs = vec![0.0; nrows];
    let nel = dofs.row_dofs.len();
    let mut start = 0;
    while start < nel {
        let end = (start + CHUNK).min(nel);
        let locals: Vec<LocalSystem> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut loc = LocalSystem::default();
                loc.reset(dofs.row_dofs[t].len(), dofs.cols(t).len());
                kernel(t, &mut loc);
                loc
            })
            .collect();
        for (k, loc) in locals.iter().enumerate() {
            let t = start + k;
            let rd = &dofs.row_dofs[t];
            let cd = dofs.cols(t);
            for (i, &gi) in rd.iter().enumerate() {
                if gi == SKIP {
                    continue;
                }
                rhs[gi] += loc.rhs[i];
                for (j, &gj) in cd.iter().enumerate() {
                    if gj != SKIP {
                        let v = loc.mat[i * loc.cols + j];
                        if v != 0.0 {
                            matrix.add_to(gi, gj, v);
                        }
                    }
                }
            }
        }
        start = end;
    }
    (matrix, rhs)
}

/// Scalar coefficient evaluated at quadrature points.
#[derive(Clone, Copy)]
pub enum Coefficient<'a> {
    Constant(f64),
    /// Lagrange field on the same mesh.
    Field(&'a FemField),
    PerTriangle(&'a [f64]),
    Function(&'a (dyn Fn(Point) -> f64 + Sync)),
    /// Evaluated from the triangle, barycentric point and physical point.
    Local(&'a (dyn Fn(usize, &[f64; 3], &Point) -> f64 + Sync)),
}

impl Coefficient<'_> {
    pub fn eval(&self, t: usize, bary: &[f64; 3], x: &Point) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Field(f) => f.eval_local(t, bary),
            Coefficient::PerTriangle(v) => v[t],
            Coefficient::Function(f) => f(*x),
            Coefficient::Local(f) => f(t, bary, x),
        }
    }

    fn check_mesh(&self, space: &FunctionSpace) -> Result<()> {
        match self {
            Coefficient::Field(f) if f.mesh_id() != space.mesh().id() => Err(Error::MeshMismatch),
            Coefficient::Field(f) if f.space().is_vector() => {
                Err(Error::invalid("scalar coefficient given as a vector field"))
            }
            Coefficient::PerTriangle(v) if v.len() != space.mesh().num_triangles() => Err(Error::MeshMismatch),
            _ => Ok(()),
        }
    }
}

/// Vector coefficient `b` for gradient pairings.
#[derive(Clone, Copy)]
pub enum VectorCoefficient<'a> {
    Constant([f64; 2]),
    PerTriangle(&'a [[f64; 2]]),
    Function(&'a (dyn Fn(Point) -> [f64; 2] + Sync)),
}

impl VectorCoefficient<'_> {
    fn eval(&self, t: usize, x: &Point) -> [f64; 2] {
        match self {
            VectorCoefficient::Constant(c) => *c,
            VectorCoefficient::PerTriangle(v) => v[t],
            VectorCoefficient::Function(f) => f(*x),
        }
    }
}

/// Bilinear forms available through [`assemble_form`]. Rows are test
/// functions, columns trial functions.
#[derive(Clone, Copy)]
pub enum FormTag<'a> {
    /// `(u, v)`.
    Mass,
    /// `(c u, v)` with `c > 0`.
    WeightedMass(Coefficient<'a>),
    /// `(c grad u, grad v)` with `c > 0`.
    Stiffness(Coefficient<'a>),
    /// `(div w, phi)`: trial RT0, test Lagrange.
    DivPairing,
    /// `(b . grad u, v)`: trial and test Lagrange.
    GradientPairing(VectorCoefficient<'a>),
    /// `(|g|^p u, v)` for per-triangle reference gradients `g`.
    DataPairing { gradients: &'a [[f64; 2]], p: f64 },
}

/// Values (and gradients for scalar spaces) of a space's local basis.
enum Basis {
    Scalar { vals: Vec<f64>, grads: Vec<[f64; 2]> },
    Vector { vals: Vec<[f64; 2]>, divs: Vec<f64> },
}

fn basis_at(space: &FunctionSpace, el: &Element, t: usize, bary: &[f64; 3], x: &Point) -> Basis {
    match space.kind() {
        SpaceKind::Lagrange1 => Basis::Scalar {
            vals: bary.to_vec(),
            grads: el.p1_grads().to_vec(),
        },
        SpaceKind::Lagrange2 => Basis::Scalar {
            vals: el.p2_values(bary).to_vec(),
            grads: el.p2_grads(bary).to_vec(),
        },
        SpaceKind::RaviartThomas0 => {
            let s = space.rt_signs(t);
            Basis::Vector {
                vals: el.rt_values(&s, x).to_vec(),
                divs: el.rt_divs(&s).to_vec(),
            }
        }
    }
}

fn require_positive(c: f64, t: usize) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            what: "form coefficient",
            value: c,
            location: format!("triangle {t}"),
        })
    }
}

/// Galerkin matrix of a bilinear form with the degree-4 rule.
pub fn assemble_form(row_space: &FunctionSpace, col_space: &FunctionSpace, form: FormTag<'_>) -> Result<CsrMatrix> {
    if row_space.mesh().id() != col_space.mesh().id() {
        return Err(Error::MeshMismatch);
    }
    let mesh = row_space.mesh().clone();
    match form {
        FormTag::WeightedMass(c) | FormTag::Stiffness(c) => c.check_mesh(row_space)?,
        FormTag::DataPairing { gradients, .. } if gradients.len() != mesh.num_triangles() => {
            return Err(Error::MeshMismatch)
        }
        _ => {}
    }
    let (rk, ck) = (row_space.kind(), col_space.kind());
    let scalar = |k: SpaceKind| k != SpaceKind::RaviartThomas0;
    let ok = match form {
        FormTag::Mass | FormTag::WeightedMass(_) => rk == ck,
        FormTag::Stiffness(_) | FormTag::GradientPairing(_) | FormTag::DataPairing { .. } => {
            scalar(rk) && scalar(ck)
        }
        FormTag::DivPairing => scalar(rk) && ck == SpaceKind::RaviartThomas0,
    };
    if !ok {
        return Err(Error::invalid("form is not defined for this pair of spaces"));
    }

    // Positivity is checked up front so the kernel itself cannot fail.
    if let FormTag::WeightedMass(c) | FormTag::Stiffness(c) = form {
        for t in 0..mesh.num_triangles() {
            let el = Element::new(&mesh, t);
            for b in DEGREE_4.points {
                require_positive(c.eval(t, b, &el.point(b)), t)?;
            }
        }
    }

    let nel = mesh.num_triangles();
    let dofs = ElementDofs {
        row_dofs: (0..nel).map(|t| row_space.dofs(t).to_vec()).collect(),
        col_dofs: Some((0..nel).map(|t| col_space.dofs(t).to_vec()).collect()),
    };
    let (m, _) = assemble(row_space.dof_count(), col_space.dof_count(), &dofs, |t, loc| {
        let el = Element::new(&mesh, t);
        for (b, &w) in DEGREE_4.points.iter().zip(DEGREE_4.weights) {
            let x = el.point(b);
            let wq = w * el.area;
            let rb = basis_at(row_space, &el, t, b, &x);
            let cb = basis_at(col_space, &el, t, b, &x);
            match (form, &rb, &cb) {
                (FormTag::Mass, Basis::Scalar { vals: r, .. }, Basis::Scalar { vals: c, .. }) => {
                    outer(loc, wq, r, c)
                }
                (FormTag::WeightedMass(k), Basis::Scalar { vals: r, .. }, Basis::Scalar { vals: c, .. }) => {
                    outer(loc, wq * k.eval(t, b, &x), r, c)
                }
                (FormTag::Mass, Basis::Vector { vals: r, .. }, Basis::Vector { vals: c, .. }) => {
                    outer_vec(loc, wq, r, c)
                }
                (FormTag::WeightedMass(k), Basis::Vector { vals: r, .. }, Basis::Vector { vals: c, .. }) => {
                    outer_vec(loc, wq * k.eval(t, b, &x), r, c)
                }
                (FormTag::Stiffness(k), Basis::Scalar { grads: r, .. }, Basis::Scalar { grads: c, .. }) => {
                    outer_vec(loc, wq * k.eval(t, b, &x), r, c)
                }
                (FormTag::DivPairing, Basis::Scalar { vals: r, .. }, Basis::Vector { divs: c, .. }) => {
                    outer(loc, wq, r, c)
                }
                (FormTag::GradientPairing(bv), Basis::Scalar { vals: r, .. }, Basis::Scalar { grads: c, .. }) => {
                    let g = bv.eval(t, &x);
                    let bc: Vec<f64> = c.iter().map(|d| g[0] * d[0] + g[1] * d[1]).collect();
                    outer(loc, wq, r, &bc)
                }
                (FormTag::DataPairing { gradients, p }, Basis::Scalar { vals: r, .. }, Basis::Scalar { vals: c, .. }) => {
                    let g = gradients[t];
                    outer(loc, wq * g[0].hypot(g[1]).powf(p), r, c)
                }
                _ => unreachable!("space compatibility checked above"),
            }
        }
    });
    Ok(m)
}

fn outer(loc: &mut LocalSystem, w: f64, r: &[f64], c: &[f64]) {
    for (i, ri) in r.iter().enumerate() {
        for (j, cj) in c.iter().enumerate() {
            loc.add(i, j, w * ri * cj);
        }
    }
}

fn outer_vec(loc: &mut LocalSystem, w: f64, r: &[[f64; 2]], c: &[[f64; 2]]) {
    for (i, ri) in r.iter().enumerate() {
        for (j, cj) in c.iter().enumerate() {
            loc.add(i, j, w * (ri[0] * cj[0] + ri[1] * cj[1]));
        }
    }
}

/// Imposes `x[dof] = value` by symmetric elimination: known values move to
/// the right-hand side, constrained rows and columns become identity.
pub fn apply_dirichlet(system: SparseSystem, constraints: &[(usize, f64)]) -> Result<SparseSystem> {
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    for &(dof, value) in constraints {
        if dof >= system.len() {
            return Err(Error::invalid(format!("constrained dof {dof} out of range")));
        }
        match fixed.get(&dof) {
            Some(&prev) if prev != value => {
                return Err(Error::ConflictingConstraint {
                    dof,
                    first: prev,
                    second: value,
                })
            }
            _ => {
                fixed.insert(dof, value);
            }
        }
    }
    let n = system.len();
    let mut is_fixed = vec![None; n];
    for (&d, &v) in &fixed {
        is_fixed[d] = Some(v);
    }
    let SparseSystem {
        mut matrix,
        mut rhs,
        symmetry,
    } = system;
    for i in 0..n {
        let row_fixed = is_fixed[i].is_some();
        let (cols, vals) = matrix.row_mut(i);
        for (&j, v) in cols.iter().zip(vals.iter_mut()) {
            if row_fixed {
                *v = if i == j { 1.0 } else { 0.0 };
            } else if let Some(g) = is_fixed[j] {
                rhs[i] -= *v * g;
                *v = 0.0;
            }
        }
    }
    for (&d, &v) in &fixed {
        if matrix.get(d, d) != 1.0 {
            return Err(Error::invalid(format!("dof {d} has no diagonal entry")));
        }
        rhs[d] = v;
    }
    SparseSystem::new(matrix, rhs, symmetry)
}

/// Homogeneous constraints on the boundary dofs of a Lagrange space placed at
/// `offset` within a compound system.
pub fn homogeneous_boundary(space: &FunctionSpace, offset: usize) -> Vec<(usize, f64)> {
    space.boundary_dofs().iter().map(|&d| (offset + d, 0.0)).collect()
}
