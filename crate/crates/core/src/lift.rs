//! Discrete source potentials.
//!
//! `rt_potential` finds face fluxes with a prescribed divergence and prescribed
//! fluxes through the internal boundary components by a leaf-to-root sweep
//! over a spanning tree of the dual graph. `nedelec_potential` finds edge
//! circulations with a prescribed curl and prescribed periods by sweeping the
//! face equations over the cotree, with a least-squares fallback for whatever
//! the sweep leaves undetermined.

use crate::mesh::{BoundaryStructure, IncidenceOperators, Mesh};
use crate::topology::{HomologyBasis, TreeCotree};
use crate::whitney::{FEFunction, Space};
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;
use thiserror::Error;

pub const LIFT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("expected {expected} {what}, got {found}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("data must be finite")]
    NonFinite,
    #[error("incompatible divergence data: residual {0:e}")]
    IncompatibleDivergenceData(f64),
    #[error("incompatible curl data: {0}")]
    IncompatibleCurlData(String),
    #[error("period system is unsolvable: residual {0:e}")]
    PeriodMismatch(f64),
    #[error("dual graph sweep did not reach tetrahedron {0}")]
    SingularSweep(usize),
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), LiftError> {
    if expected == found {
        Ok(())
    } else {
        Err(LiftError::Length {
            what,
            expected,
            found,
        })
    }
}

/// Face fluxes `u` with `div u = g_h` cellwise and flux `alpha[r - 1]` through
/// internal boundary component `r`.
pub fn rt_potential(
    m: &Mesh,
    ops: &IncidenceOperators,
    b: &BoundaryStructure,
    g_h: &FEFunction,
    alpha: &[f64],
) -> Result<FEFunction, LiftError> {
    check_len("cell values", m.n_tets(), g_h.coeffs.len())?;
    check_len("component fluxes", b.p(), alpha.len())?;
    if g_h.coeffs.iter().chain(alpha).any(|x| !x.is_finite()) {
        return Err(LiftError::NonFinite);
    }
    let n_t = m.n_tets();
    let ghost = n_t;
    let mut u = vec![0.0; m.n_faces()];
    let mut fixed = vec![false; m.n_faces()];
    for (r, comp) in b.components.iter().enumerate().skip(1) {
        let total: f64 = comp.faces.iter().map(|&f| m.face_area(f)).sum();
        for (&f, &s) in comp.faces.iter().zip(&comp.outward) {
            u[f] = alpha[r - 1] * f64::from(s) * m.face_area(f) / total;
            fixed[f] = true;
        }
    }
    // breadth-first tree of the dual graph rooted at the external ghost node
    let mut parent_face = vec![usize::MAX; n_t];
    let mut seen = vec![false; n_t + 1];
    let mut order = Vec::with_capacity(n_t);
    let mut queue = VecDeque::new();
    seen[ghost] = true;
    for (&f, _) in b.components[0].faces.iter().zip(&b.components[0].outward) {
        let t = m.face_tets(f)[0];
        if !seen[t] {
            seen[t] = true;
            parent_face[t] = f;
            queue.push_back(t);
        }
    }
    while let Some(t) = queue.pop_front() {
        order.push(t);
        for &f in m.tet_faces(t) {
            if fixed[f] {
                continue;
            }
            for &s in m.face_tets(f) {
                if !seen[s] {
                    seen[s] = true;
                    parent_face[s] = f;
                    queue.push_back(s);
                }
            }
        }
    }
    if let Some(t) = (0..n_t).find(|&t| !seen[t]) {
        return Err(LiftError::SingularSweep(t));
    }
    for &t in order.iter().rev() {
        let pf = parent_face[t];
        let (faces, signs) = ops.div.row(t);
        let mut rest = g_h.coeffs[t] * m.volume(t);
        let mut pivot = 0.0;
        for (&f, &s) in faces.iter().zip(signs) {
            if f == pf {
                pivot = f64::from(s);
            } else {
                rest -= f64::from(s) * u[f];
            }
        }
        u[pf] = rest / pivot;
    }
    let lift = FEFunction {
        space: Space::Face,
        coeffs: u,
    };
    let res = divergence_residual(m, ops, &lift, g_h);
    let scale = 1.0 + g_h.max_abs();
    if res > LIFT_TOLERANCE * scale {
        return Err(LiftError::IncompatibleDivergenceData(res));
    }
    Ok(lift)
}

/// `|(D u)_t / vol_t - g_t|` for every tet.
pub fn divergence_cell_residuals(
    m: &Mesh,
    ops: &IncidenceOperators,
    u: &FEFunction,
    g_h: &FEFunction,
) -> Vec<f64> {
    (0..m.n_tets())
        .map(|t| {
            let (faces, signs) = ops.div.row(t);
            let d: f64 = faces
                .iter()
                .zip(signs)
                .map(|(&f, &s)| f64::from(s) * u.coeffs[f])
                .sum();
            (d / m.volume(t) - g_h.coeffs[t]).abs()
        })
        .collect()
}

/// `max_t |(D u)_t / vol_t - g_t|`.
pub fn divergence_residual(
    m: &Mesh,
    ops: &IncidenceOperators,
    u: &FEFunction,
    g_h: &FEFunction,
) -> f64 {
    divergence_cell_residuals(m, ops, u, g_h)
        .into_iter()
        .fold(0.0, f64::max)
}

fn face_curl_residuals(ops: &IncidenceOperators, u: &FEFunction, j_h: &FEFunction) -> Vec<f64> {
    (0..ops.curl.nrows())
        .map(|f| {
            let (edges, signs) = ops.curl.row(f);
            let c: f64 = edges
                .iter()
                .zip(signs)
                .map(|(&e, &s)| f64::from(s) * u.coeffs[e])
                .sum();
            (c - j_h.coeffs[f]).abs()
        })
        .collect()
}

/// `max_f |(C u)_f - J_f|`.
pub fn curl_residual(ops: &IncidenceOperators, u: &FEFunction, j_h: &FEFunction) -> f64 {
    face_curl_residuals(ops, u, j_h)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Largest `|(C u)_f - J_f|` over the faces of every tet.
pub fn curl_cell_residuals(
    m: &Mesh,
    ops: &IncidenceOperators,
    u: &FEFunction,
    j_h: &FEFunction,
) -> Vec<f64> {
    let faces = face_curl_residuals(ops, u, j_h);
    (0..m.n_tets())
        .map(|t| m.tet_faces(t).iter().map(|&f| faces[f]).fold(0.0, f64::max))
        .collect()
}

/// Edge circulations `u` with `curl u = J_h` and period `beta[n]` along
/// `sigma_n`.
pub fn nedelec_potential(
    m: &Mesh,
    ops: &IncidenceOperators,
    b: &BoundaryStructure,
    tc: &TreeCotree,
    hb: &HomologyBasis,
    j_h: &FEFunction,
    beta: &[f64],
) -> Result<FEFunction, LiftError> {
    check_len("face fluxes", m.n_faces(), j_h.coeffs.len())?;
    check_len("periods", hb.g, beta.len())?;
    if j_h.coeffs.iter().chain(beta).any(|x| !x.is_finite()) {
        return Err(LiftError::NonFinite);
    }
    let j_scale = 1.0 + j_h.max_abs();
    let div_res = (0..m.n_tets())
        .map(|t| {
            let (faces, signs) = ops.div.row(t);
            faces
                .iter()
                .zip(signs)
                .map(|(&f, &s)| f64::from(s) * j_h.coeffs[f])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    if div_res > LIFT_TOLERANCE * j_scale {
        return Err(LiftError::IncompatibleCurlData(format!(
            "discrete divergence {div_res:e}"
        )));
    }
    for (r, comp) in b.components.iter().enumerate().skip(1) {
        let flux = comp.flux(&j_h.coeffs);
        if flux.abs() > LIFT_TOLERANCE * j_scale {
            return Err(LiftError::IncompatibleCurlData(format!(
                "net flux {flux:e} through boundary component {r}"
            )));
        }
    }

    // equations: one per face, then one per cycle
    let n_f = m.n_faces();
    let mut eqs: Vec<Vec<(usize, f64)>> = (0..n_f)
        .map(|f| {
            let (edges, signs) = ops.curl.row(f);
            edges
                .iter()
                .zip(signs)
                .map(|(&e, &s)| (e, f64::from(s)))
                .collect()
        })
        .collect();
    let mut rhs: Vec<f64> = j_h.coeffs.clone();
    for (n, sigma) in hb.sigma.iter().enumerate() {
        eqs.push(sigma.iter().map(|&(e, c)| (e, c as f64)).collect());
        rhs.push(beta[n]);
    }
    let mut known: Vec<bool> = (0..m.n_edges()).map(|e| tc.is_tree_edge(e)).collect();
    let mut x = vec![0.0; m.n_edges()];
    let mut edge_eqs = vec![Vec::new(); m.n_edges()];
    for (i, eq) in eqs.iter().enumerate() {
        for &(e, _) in eq {
            edge_eqs[e].push(i);
        }
    }
    let mut unknowns: Vec<usize> = eqs
        .iter()
        .map(|eq| eq.iter().filter(|(e, _)| !known[*e]).count())
        .collect();
    // period rows go first so that closing edges are fixed by the cycles
    let mut queue: VecDeque<usize> = (n_f..eqs.len())
        .chain(0..n_f)
        .filter(|&i| unknowns[i] == 1)
        .collect();
    while let Some(i) = queue.pop_front() {
        if unknowns[i] != 1 {
            continue;
        }
        let mut rest = rhs[i];
        let mut target = None;
        for &(e, c) in &eqs[i] {
            if known[e] {
                rest -= c * x[e];
            } else {
                target = Some((e, c));
            }
        }
        let (e, c) = target.expect("one unknown remains");
        x[e] = rest / c;
        known[e] = true;
        for &k in &edge_eqs[e] {
            unknowns[k] -= 1;
            if unknowns[k] == 1 {
                queue.push_back(k);
            }
        }
    }
    let free: Vec<usize> = (0..m.n_edges()).filter(|&e| !known[e]).collect();
    if !free.is_empty() {
        solve_remaining(&eqs, &rhs, &free, &mut x);
    }

    let lift = FEFunction {
        space: Space::Edge,
        coeffs: x,
    };
    let res = curl_residual(ops, &lift, j_h);
    if res > LIFT_TOLERANCE * j_scale {
        return Err(LiftError::IncompatibleCurlData(format!(
            "curl residual {res:e}"
        )));
    }
    let period_res = (0..hb.g)
        .map(|n| (hb.period(n, &lift.coeffs) - beta[n]).abs())
        .fold(0.0, f64::max);
    let b_scale = 1.0 + beta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if period_res > LIFT_TOLERANCE * b_scale {
        return Err(LiftError::PeriodMismatch(period_res));
    }
    Ok(lift)
}

/// Minimum-norm least-squares values for the edges the sweep left open.
fn solve_remaining(eqs: &[Vec<(usize, f64)>], rhs: &[f64], free: &[usize], x: &mut [f64]) {
    let col: std::collections::HashMap<usize, usize> =
        free.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let rows: Vec<usize> = (0..eqs.len())
        .filter(|&i| eqs[i].iter().any(|(e, _)| col.contains_key(e)))
        .collect();
    let mut a = DMatrix::zeros(rows.len(), free.len());
    let mut r = DVector::zeros(rows.len());
    for (k, &i) in rows.iter().enumerate() {
        r[k] = rhs[i];
        for &(e, c) in &eqs[i] {
            match col.get(&e) {
                Some(&j) => a[(k, j)] = c,
                None => r[k] -= c * x[e],
            }
        }
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&r, 1e-12).expect("SVD with both factors");
    for (&e, v) in free.iter().zip(sol.iter()) {
        x[e] = *v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::structured::{cube_mesh, hollow_ball_mesh, solid_torus_mesh};
    use crate::topology::Topology;
    use crate::whitney::{interpolate, Field};
    use crate::Vec3;

    #[test]
    fn constant_divergence_on_cube() {
        let m = cube_mesh(2);
        let t = Topology::analyze(&m).unwrap();
        let g = FEFunction {
            space: Space::Cell,
            coeffs: vec![1.0; m.n_tets()],
        };
        let u = rt_potential(&m, &t.ops, &t.boundary, &g, &[]).unwrap();
        assert!(divergence_residual(&m, &t.ops, &u, &g) <= 1e-12);
    }

    #[test]
    fn cavity_flux_is_imposed() {
        let m = hollow_ball_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let g = FEFunction::zeros(&m, Space::Cell);
        let u = rt_potential(&m, &t.ops, &t.boundary, &g, &[1.0]).unwrap();
        assert!((t.boundary.components[1].flux(&u.coeffs) - 1.0).abs() <= 1e-10);
        assert!(divergence_residual(&m, &t.ops, &u, &g) <= 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_lifts() {
        let m = solid_torus_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let g = FEFunction::zeros(&m, Space::Cell);
        assert_eq!(
            rt_potential(&m, &t.ops, &t.boundary, &g, &[])
                .unwrap()
                .max_abs(),
            0.0
        );
        let j = FEFunction::zeros(&m, Space::Face);
        let u =
            nedelec_potential(&m, &t.ops, &t.boundary, &t.tree, &t.homology, &j, &[0.0]).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn curl_lift_on_cube() {
        use std::f64::consts::PI;
        let m = cube_mesh(2);
        let t = Topology::analyze(&m).unwrap();
        // u = (sin(pi y), 0, 0) has curl (0, 0, -pi cos(pi y))
        let j = interpolate(
            &m,
            Space::Face,
            Field::Vector(&|p| Vec3::new(0.0, 0.0, -PI * (PI * p.y).cos())),
        )
        .unwrap();
        let u = nedelec_potential(&m, &t.ops, &t.boundary, &t.tree, &t.homology, &j, &[]).unwrap();
        assert!(curl_residual(&t.ops, &u, &j) <= 1e-10);
    }

    #[test]
    fn unit_period_on_torus() {
        let m = solid_torus_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let j = FEFunction::zeros(&m, Space::Face);
        let u =
            nedelec_potential(&m, &t.ops, &t.boundary, &t.tree, &t.homology, &j, &[1.0]).unwrap();
        assert!(curl_residual(&t.ops, &u, &j) <= 1e-12);
        assert!((t.homology.period(0, &u.coeffs) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn divergent_curl_data_rejected() {
        let m = cube_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let j = interpolate(
            &m,
            Space::Face,
            Field::Vector(&|p| Vec3::new(p.x, 0.0, 0.0)),
        )
        .unwrap();
        let err =
            nedelec_potential(&m, &t.ops, &t.boundary, &t.tree, &t.homology, &j, &[]).unwrap_err();
        assert!(matches!(err, LiftError::IncompatibleCurlData(_)));
    }

    #[test]
    fn wrong_lengths_rejected() {
        let m = hollow_ball_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        let g = FEFunction::zeros(&m, Space::Cell);
        assert!(matches!(
            rt_potential(&m, &t.ops, &t.boundary, &g, &[]),
            Err(LiftError::Length { .. })
        ));
    }
}
