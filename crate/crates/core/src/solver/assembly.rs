//! Element-by-element assembly of the two reduced systems.

use super::{NormalProblem, TangentialProblem};
use crate::gauge::{GaugedCurlBasis, ReducedNodalBasis};
use crate::mesh::{Mesh, TET_EDGES};
use crate::quadrature::{rule, Simplex};
use crate::sparse::CsrMatrix;
use crate::whitney::{edge_basis, edge_curl, eval_bary, CoefficientField, FEFunction};
use crate::{Point3, Vec3};
use nalgebra::Matrix3;

/// Volume right-hand sides.
pub const VOLUME_DEGREE: usize = 2;
/// Boundary right-hand sides.
pub const BOUNDARY_DEGREE: usize = 3;

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: CsrMatrix<f64>,
    pub rhs: Vec<f64>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `z^T K z`.
    pub fn energy(&self, z: &[f64]) -> f64 {
        self.k.matvec(z).iter().zip(z).map(|(a, b)| a * b).sum()
    }
}

/// `int_t coeff`, by the volume rule (exact for piecewise constants).
fn integrated_coefficient(m: &Mesh, c: &CoefficientField, t: usize) -> Matrix3<f64> {
    let geo = m.geometry(t);
    let region = m.region(t);
    if c.is_piecewise_constant() {
        return c.eval(region, &geo.centroid()) * geo.volume;
    }
    let q = rule(Simplex::Tet, VOLUME_DEGREE);
    q.points
        .iter()
        .zip(q.scaled_weights(geo.volume))
        .fold(Matrix3::zeros(), |acc, (b, w)| {
            acc + c.eval(region, &geo.point_at(b)) * w
        })
}

/// Boundary faces with the owning tet, outward unit normal and area.
fn boundary_faces(m: &Mesh) -> impl Iterator<Item = (usize, usize, usize, Vec3, f64)> + '_ {
    (0..m.n_faces())
        .filter(|&f| m.is_boundary_face(f))
        .map(move |f| {
            let t = m.face_tets(f)[0];
            let lf = m.tet_faces(t).iter().position(|&x| x == f).unwrap();
            let n = m.face_normal(f) * f64::from(m.face_sign(t, lf));
            (f, t, lf, n, m.face_area(f))
        })
}

fn face_point(p: &[Point3; 3], l: &[f64; 4]) -> Point3 {
    Point3::from(p[0].coords * l[0] + p[1].coords * l[1] + p[2].coords * l[2])
}

pub fn assemble_tangential(
    m: &Mesh,
    p: &TangentialProblem,
    gb: &GaugedCurlBasis,
    lift: &FEFunction,
) -> AssembledSystem {
    let n = gb.len();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    let qv = rule(Simplex::Tet, VOLUME_DEGREE);
    for t in 0..m.n_tets() {
        let geo = m.geometry(t);
        let region = m.region(t);
        // (dof, local edge, coefficient)
        let mut local: Vec<(usize, usize, f64)> = Vec::new();
        for (k, &e) in m.tet_edges(t).iter().enumerate() {
            local.extend(gb.edge_dofs(e).iter().map(|&(l, c)| (l, k, c)));
        }
        if local.is_empty() {
            continue;
        }
        let mut dofs: Vec<usize> = local.iter().map(|x| x.0).collect();
        dofs.sort_unstable();
        dofs.dedup();
        let curls: Vec<Vec3> = dofs
            .iter()
            .map(|&l| {
                local
                    .iter()
                    .filter(|x| x.0 == l)
                    .fold(Vec3::zeros(), |acc, &(_, k, c)| acc + edge_curl(geo, k) * c)
            })
            .collect();
        let eta = integrated_coefficient(m, &p.eta, t);
        for (a, &lm) in dofs.iter().enumerate() {
            let ec = eta * curls[a];
            for (b, &ll) in dofs.iter().enumerate() {
                trip.push((lm, ll, curls[b].dot(&ec)));
            }
        }
        for (b, w) in qv.points.iter().zip(qv.scaled_weights(geo.volume)) {
            let x = geo.point_at(b);
            let jx = (p.j)(&x);
            let us = eval_bary(m, lift, t, b).vector().unwrap();
            let eta_us = p.eta.eval(region, &x) * us;
            for (a, &lm) in dofs.iter().enumerate() {
                let omega = local
                    .iter()
                    .filter(|x| x.0 == lm)
                    .fold(Vec3::zeros(), |acc, &(_, k, c)| {
                        acc + edge_basis(geo, b, k) * c
                    });
                rhs[lm] += w * (jx.dot(&omega) - eta_us.dot(&curls[a]));
            }
        }
    }
    let qb = rule(Simplex::Triangle, BOUNDARY_DEGREE);
    for (f, t, lf, n, area) in boundary_faces(m) {
        let geo = m.geometry(t);
        let pts = m.face_points(f);
        let mut local: Vec<(usize, usize, f64)> = Vec::new();
        for (k, &e) in m.tet_edges(t).iter().enumerate() {
            if TET_EDGES[k].contains(&lf) {
                continue;
            }
            local.extend(gb.edge_dofs(e).iter().map(|&(l, c)| (l, k, c)));
        }
        if local.is_empty() {
            continue;
        }
        for (l, w) in qb.points.iter().zip(qb.scaled_weights(area)) {
            let x = face_point(&pts, l);
            let a = (p.a)(&x, &n);
            let a_t = a - n * a.dot(&n);
            let bary = geo.barycentric(&x);
            for &(dof, k, c) in &local {
                rhs[dof] += w * c * a_t.dot(&edge_basis(geo, &bary, k));
            }
        }
    }
    AssembledSystem {
        k: CsrMatrix::from_triplets(n, n, trip),
        rhs,
    }
}

pub fn assemble_normal(
    m: &Mesh,
    p: &NormalProblem,
    rb: &ReducedNodalBasis,
    lift: &FEFunction,
) -> AssembledSystem {
    let n = rb.len();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    let qv = rule(Simplex::Tet, VOLUME_DEGREE);
    for t in 0..m.n_tets() {
        let geo = m.geometry(t);
        let region = m.region(t);
        let verts = m.tets()[t];
        let dofs: Vec<Option<usize>> = verts.iter().map(|&v| rb.dof(v)).collect();
        let mu = integrated_coefficient(m, &p.mu, t);
        for i in 0..4 {
            let Some(di) = dofs[i] else { continue };
            let mg = mu * geo.grads[i];
            for j in 0..4 {
                if let Some(dj) = dofs[j] {
                    trip.push((di, dj, geo.grads[j].dot(&mg)));
                }
            }
        }
        for (b, w) in qv.points.iter().zip(qv.scaled_weights(geo.volume)) {
            let x = geo.point_at(b);
            let gx = (p.g)(&x);
            let us = eval_bary(m, lift, t, b).vector().unwrap();
            let mu_us = p.mu.eval(region, &x) * us;
            for i in 0..4 {
                if let Some(di) = dofs[i] {
                    rhs[di] -= w * (gx * b[i] + mu_us.dot(&geo.grads[i]));
                }
            }
        }
    }
    let qb = rule(Simplex::Triangle, BOUNDARY_DEGREE);
    for (f, _, _, n, area) in boundary_faces(m) {
        let verts = m.faces()[f];
        let pts = m.face_points(f);
        for (l, w) in qb.points.iter().zip(qb.scaled_weights(area)) {
            let bx = (p.b)(&face_point(&pts, l), &n);
            for (i, &v) in verts.iter().enumerate() {
                if let Some(d) = rb.dof(v) {
                    rhs[d] += w * bx * l[i];
                }
            }
        }
    }
    AssembledSystem {
        k: CsrMatrix::from_triplets(n, n, trip),
        rhs,
    }
}
