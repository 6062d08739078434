//! Legacy ASCII VTK export of a piecewise vector field.

use crate::mesh::Mesh;
use crate::whitney::{eval_bary, FEFunction};
use std::io::Write;

const VTK_TETRA: u8 = 10;
const CENTROID: [f64; 4] = [0.25; 4];

/// Writes the mesh with `field` sampled at tet barycenters and an optional
/// per-tet scalar.
pub fn write_vtk<W: Write>(
    w: &mut W,
    m: &Mesh,
    field: &FEFunction,
    scalar: Option<(&str, &[f64])>,
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "curldiv solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", m.n_vertices())?;
    for p in m.vertices() {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    writeln!(w, "CELLS {} {}", m.n_tets(), 5 * m.n_tets())?;
    for t in m.tets() {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {}", m.n_tets())?;
    for _ in 0..m.n_tets() {
        writeln!(w, "{VTK_TETRA}")?;
    }
    writeln!(w, "CELL_DATA {}", m.n_tets())?;
    writeln!(w, "VECTORS u double")?;
    for t in 0..m.n_tets() {
        let v = eval_bary(m, field, t, &CENTROID)
            .vector()
            .expect("vector-valued field");
        writeln!(w, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
    }
    if let Some((name, values)) = scalar {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v:.16e}")?;
        }
    }
    Ok(())
}
