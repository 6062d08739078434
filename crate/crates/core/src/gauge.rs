//! Gauged bases of the constrained spaces.
//!
//! The curl-conforming unknowns are the cotree edge functions, with the `2g`
//! closing edges replaced by the `g` combinations dictated by `ker A`; their
//! curls span the discretely divergence-free fields with zero flux through
//! every internal boundary component. The nodal unknowns drop the last vertex.

use crate::exact::{self, rat, Rational};
use crate::mesh::{IncidenceOperators, Mesh};
use crate::topology::{HomologyBasis, TreeCotree};
use num_traits::Zero;
use thiserror::Error;

pub const PERIOD_TOLERANCE: f64 = 1e-10;

/// Sparse real vector as `(index, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("combined field {field} has period {period:e} over cycle {cycle}")]
    PeriodViolation {
        field: usize,
        cycle: usize,
        period: f64,
    },
}

#[derive(Debug, Clone)]
pub struct GaugedCurlBasis {
    pub g: usize,
    /// Edge coefficient vectors: `g` combined fields, then the plain cotree
    /// fields in cotree order.
    pub fields: Vec<SparseVec>,
    exact_fields: Vec<Vec<(usize, Rational)>>,
    edge_dofs: Vec<Vec<(usize, f64)>>,
}

impl GaugedCurlBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn n_combined(&self) -> usize {
        self.g
    }

    /// Basis fields touching edge `e`, with their coefficient on it.
    pub fn edge_dofs(&self, e: usize) -> &[(usize, f64)] {
        &self.edge_dofs[e]
    }

    /// Edge coefficients of `sum_l w[l] * fields[l]`.
    pub fn expand(&self, n_edges: usize, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n_edges];
        for (field, &wl) in self.fields.iter().zip(w) {
            for &(e, c) in field {
                out[e] += wl * c;
            }
        }
        out
    }

    pub fn exact_fields(&self) -> &[Vec<(usize, Rational)>] {
        &self.exact_fields
    }
}

pub fn build_n_star(m: &Mesh, tc: &TreeCotree, hb: &HomologyBasis) -> GaugedCurlBasis {
    let closing = tc.closing_edges();
    let mut exact_fields: Vec<Vec<(usize, Rational)>> = hb
        .kernel
        .iter()
        .map(|c| {
            let mut f: Vec<(usize, Rational)> = closing
                .iter()
                .zip(c)
                .filter(|(_, v)| !v.is_zero())
                .map(|(&e, v)| (e, v.clone()))
                .collect();
            f.sort_by_key(|&(e, _)| e);
            f
        })
        .collect();
    exact_fields.extend(
        tc.cotree_edges[tc.n_closing..]
            .iter()
            .map(|&e| vec![(e, rat(1))]),
    );
    let fields: Vec<SparseVec> = exact_fields
        .iter()
        .map(|f| f.iter().map(|(e, v)| (*e, exact::to_f64(v))).collect())
        .collect();
    let mut edge_dofs = vec![Vec::new(); m.n_edges()];
    for (l, f) in fields.iter().enumerate() {
        for &(e, c) in f {
            edge_dofs[e].push((l, c));
        }
    }
    GaugedCurlBasis {
        g: hb.g,
        fields,
        exact_fields,
        edge_dofs,
    }
}

/// Face coefficient vectors `C * omega_l`.
pub fn curl_image_basis(ops: &IncidenceOperators, gb: &GaugedCurlBasis) -> Vec<SparseVec> {
    let ct = ops.curl.transpose();
    gb.fields
        .iter()
        .map(|field| {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for &(e, c) in field {
                let (faces, signs) = ct.row(e);
                acc.extend(
                    faces
                        .iter()
                        .zip(signs)
                        .map(|(&f, &s)| (f, c * f64::from(s))),
                );
            }
            merge_sparse(acc)
        })
        .collect()
}

/// Exact rank of the curl images, computed over the rationals.
pub fn curl_image_rank(ops: &IncidenceOperators, gb: &GaugedCurlBasis) -> usize {
    let ct = ops.curl.transpose();
    let rows: Vec<Vec<(usize, Rational)>> = gb
        .exact_fields()
        .iter()
        .map(|field| {
            let mut acc = Vec::new();
            for (e, c) in field {
                let (faces, signs) = ct.row(*e);
                acc.extend(
                    faces
                        .iter()
                        .zip(signs)
                        .map(|(&f, &s)| (f, c * rat(i64::from(s)))),
                );
            }
            acc
        })
        .collect();
    exact::sparse_rank(ops.curl.nrows(), rows)
}

fn merge_sparse(mut v: SparseVec) -> SparseVec {
    v.sort_by_key(|&(i, _)| i);
    let mut out: SparseVec = Vec::with_capacity(v.len());
    for (i, x) in v {
        match out.last_mut() {
            Some((li, lx)) if *li == i => *lx += x,
            _ => out.push((i, x)),
        }
    }
    out.retain(|&(_, x)| x != 0.0);
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PeriodReport {
    /// `periods[field][n]`: circulation of combined field `field` along
    /// `sigma_n`.
    pub periods: Vec<Vec<f64>>,
    pub max_abs: f64,
}

pub fn verify_periods(
    m: &Mesh,
    gb: &GaugedCurlBasis,
    hb: &HomologyBasis,
) -> Result<PeriodReport, GaugeError> {
    let mut report = PeriodReport::default();
    for (l, field) in gb.fields[..gb.g].iter().enumerate() {
        let mut dense = vec![0.0; m.n_edges()];
        for &(e, c) in field {
            dense[e] = c;
        }
        let row: Vec<f64> = (0..hb.g).map(|n| hb.period(n, &dense)).collect();
        for (n, &p) in row.iter().enumerate() {
            if p.abs() > PERIOD_TOLERANCE {
                return Err(GaugeError::PeriodViolation {
                    field: l,
                    cycle: n,
                    period: p,
                });
            }
            report.max_abs = report.max_abs.max(p.abs());
        }
        report.periods.push(row);
    }
    Ok(report)
}

/// Nodal basis with the highest-index vertex removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedNodalBasis {
    pub retained: Vec<usize>,
    pub excluded: usize,
}

impl ReducedNodalBasis {
    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// Degree of freedom of vertex `v`, if retained.
    pub fn dof(&self, v: usize) -> Option<usize> {
        (v != self.excluded).then(|| if v < self.excluded { v } else { v - 1 })
    }

    /// Vertex values from reduced coefficients.
    pub fn expand(&self, n_vertices: usize, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n_vertices];
        for (&vert, &x) in self.retained.iter().zip(v) {
            out[vert] = x;
        }
        out
    }
}

pub fn build_l_star(m: &Mesh) -> ReducedNodalBasis {
    let excluded = m.n_vertices() - 1;
    ReducedNodalBasis {
        retained: (0..excluded).collect(),
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::structured::{cube_mesh, hollow_ball_mesh, solid_torus_mesh};
    use crate::topology::Topology;

    #[test]
    fn cube_has_twelve_plain_fields() {
        let m = cube_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let gb = build_n_star(&m, &t.tree, &t.homology);
        assert_eq!(gb.len(), 12);
        assert_eq!(gb.n_combined(), 0);
        assert!(gb.fields.iter().all(|f| f.len() == 1 && f[0].1 == 1.0));
        assert_eq!(curl_image_rank(&t.ops, &gb), 12);
        assert!(verify_periods(&m, &gb, &t.homology)
            .unwrap()
            .periods
            .is_empty());
    }

    #[test]
    fn torus_has_one_combined_field() {
        let m = solid_torus_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let gb = build_n_star(&m, &t.tree, &t.homology);
        assert_eq!(gb.len(), t.tree.n_q() - 1);
        assert_eq!(gb.n_combined(), 1);
        let closing = t.tree.closing_edges();
        assert!(gb.fields[0].iter().all(|(e, _)| closing.contains(e)));
        let rep = verify_periods(&m, &gb, &t.homology).unwrap();
        assert_eq!(rep.periods.len(), 1);
        assert!(rep.max_abs <= PERIOD_TOLERANCE);
    }

    #[test]
    fn curl_images_are_supported_on_cotree() {
        let m = hollow_ball_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let gb = build_n_star(&m, &t.tree, &t.homology);
        for f in &gb.fields {
            assert!(f.iter().all(|&(e, _)| !t.tree.is_tree_edge(e)));
        }
        let images = curl_image_basis(&t.ops, &gb);
        let d = t.ops.div.map(f64::from);
        for v in &images {
            let mut dense = vec![0.0; m.n_faces()];
            for &(f, x) in v {
                dense[f] = x;
            }
            assert!(d.matvec(&dense).iter().all(|&x| x == 0.0));
            for c in &t.boundary.components {
                assert!(c.flux(&dense).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reduced_nodal_basis() {
        let m = cube_mesh(1);
        let rb = build_l_star(&m);
        assert_eq!(rb.len(), 7);
        assert_eq!(rb.excluded, 7);
        assert_eq!(rb.dof(7), None);
        assert_eq!(rb.dof(3), Some(3));
    }
}
