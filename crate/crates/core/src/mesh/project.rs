use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{FemField, FunctionSpace, SpaceKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectionReport {
    /// Destination nodes that fell outside the source polygon and were
    /// evaluated on the nearest boundary triangle instead.
    pub fallback_nodes: Vec<usize>,
}

/// Nodal interpolation of a scalar Lagrange field onto the Lagrange space of
/// `dst_space`. The source provenance is kept so that projected data can be
/// traced back to the mesh it was computed on.
pub fn project_field(src: &FemField, dst_space: &Arc<FunctionSpace>) -> Result<(FemField, ProjectionReport)> {
    if src.space().is_vector() || dst_space.is_vector() {
        return Err(Error::invalid("projection is defined for scalar Lagrange fields only"));
    }
    let src_mesh = src.space().mesh();
    let mut report = ProjectionReport::default();
    let mut values = Vec::with_capacity(dst_space.dof_count());
    for (i, x) in dst_space.dof_points().into_iter().enumerate() {
        let loc = match src_mesh.locate_point(x) {
            Ok(loc) => loc,
            Err(Error::PointNotFound { .. }) if x[0].hypot(x[1]) <= 1.0 + 1e-10 => {
                report.fallback_nodes.push(i);
                src_mesh.nearest_boundary_location(x)
            }
            Err(e) => return Err(e),
        };
        values.push(src.eval_at(&loc));
    }
    let out = FemField::new(dst_space.clone(), values)?.with_provenance(src.provenance());
    Ok((out, report))
}

impl FemField {
    /// Projects onto the P1 space of another mesh.
    pub fn project_p1(&self, dst_mesh: &Arc<super::Mesh2D>) -> Result<(FemField, ProjectionReport)> {
        let dst = FunctionSpace::new(dst_mesh.clone(), SpaceKind::Lagrange1);
        project_field(self, &dst)
    }
}
