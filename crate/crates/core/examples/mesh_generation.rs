//! Generates a disc mesh, refines it once and writes both as legacy VTK and
//! as plain node/element listings.
//!
//! ```bash
//! cargo run --release --example mesh_generation -- 5000 7
//! ```

use std::path::Path;

use hybridtomo::io::{self, VtkData};
use hybridtomo::mesh::generate_disc_mesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let target: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let mesh = generate_disc_mesh(target, seed)?;
    let fine = mesh.refine()?;
    for (name, m) in [("coarse", &mesh), ("refined", &fine)] {
        println!(
            "{name}: {} triangles, {} vertices, {} edges, h = {:.4}, |area - pi| = {:.2e}",
            m.num_triangles(),
            m.num_vertices(),
            m.num_edges(),
            m.mesh_size(),
            (m.total_area() - std::f64::consts::PI).abs()
        );
    }

    let out = Path::new("output/mesh_generation");
    io::write_vtk(&out.join("coarse.vtk"), &mesh, &VtkData::default())?;
    io::write_vtk(&out.join("refined.vtk"), &fine, &VtkData::default())?;
    io::write_mesh_text(&out.join("coarse.txt"), &mesh)?;

    // Point location: every centroid maps back to its own triangle.
    let misplaced = (0..mesh.num_triangles())
        .filter(|&t| mesh.locate_point(mesh.centroid(t)).ok().map(|l| l.triangle) != Some(t))
        .count();
    println!("centroids located in the wrong triangle: {misplaced}");
    println!("wrote {}", out.display());
    Ok(())
}
