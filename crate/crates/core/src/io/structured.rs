//! Kuhn-split structured meshes on unions of axis-aligned unit blocks.

use crate::mesh::{build_mesh, Mesh};
use crate::Point3;

/// The six tetrahedra of the Kuhn split of a cube, as corner bit masks
/// (bit 0 = +x, bit 1 = +y, bit 2 = +z). All share the main diagonal.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Mesh of the cells `(i, j, k)` of an `nx x ny x nz` grid of spacing `h`
/// for which `keep` holds. Unused grid vertices are dropped.
pub fn masked_grid_mesh(
    dims: [usize; 3],
    h: f64,
    keep: impl Fn(usize, usize, usize) -> bool,
) -> Mesh {
    let [nx, ny, nz] = dims;
    let vid = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut tets = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                let corner =
                    |bits: usize| vid(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                for t in KUHN {
                    tets.push(t.map(corner));
                }
            }
        }
    }
    let n_grid = (nx + 1) * (ny + 1) * (nz + 1);
    let mut new_index = vec![usize::MAX; n_grid];
    for t in &tets {
        for &v in t {
            new_index[v] = 0;
        }
    }
    let mut coords = Vec::new();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let v = vid(i, j, k);
                if new_index[v] == 0 {
                    new_index[v] = coords.len();
                    coords.push(Point3::new(i as f64 * h, j as f64 * h, k as f64 * h));
                }
            }
        }
    }
    let tets: Vec<[usize; 4]> = tets.iter().map(|t| t.map(|v| new_index[v])).collect();
    build_mesh(&coords, &tets).expect("structured mesh is valid")
}

/// Unit cube split into `n^3` subcubes of six tetrahedra each.
pub fn cube_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "cube_mesh needs n >= 1");
    masked_grid_mesh([n; 3], 1.0 / n as f64, |_, _, _| true)
}

/// `[0,3] x [0,3] x [0,1]` with the column `[1,2] x [1,2] x [0,1]` removed,
/// `res` cells per unit length. Genus one, one boundary component.
pub fn solid_torus_mesh(res: usize) -> Mesh {
    assert!(res >= 1);
    let hole = res..2 * res;
    masked_grid_mesh([3 * res, 3 * res, res], 1.0 / res as f64, |i, j, _| {
        !(hole.contains(&i) && hole.contains(&j))
    })
}

/// `[0,3]^3` with the cube `[1,2]^3` removed, `res` cells per unit length.
/// Two boundary components.
pub fn hollow_ball_mesh(res: usize) -> Mesh {
    assert!(res >= 1);
    let hole = res..2 * res;
    masked_grid_mesh([3 * res; 3], 1.0 / res as f64, |i, j, k| {
        !(hole.contains(&i) && hole.contains(&j) && hole.contains(&k))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_refinement_counts() {
        let m = cube_mesh(2);
        assert_eq!(m.n_tets(), 48);
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.euler_characteristic(), 1);
        let h1 = cube_mesh(1).max_edge_length();
        assert!((h1 / m.max_edge_length() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn masked_grids_drop_unused_vertices() {
        let m = hollow_ball_mesh(2);
        // 7^3 grid vertices minus the single vertex strictly inside the cavity
        assert_eq!(m.n_vertices(), 343 - 1);
        assert_eq!(m.n_tets(), 6 * (216 - 8));
        assert_eq!(solid_torus_mesh(1).n_tets(), 48);
    }
}
