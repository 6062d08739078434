//! Shared helpers for the integration tests.
#![allow(dead_code)]

use curldiv::io::gmsh::read_gmsh;
use curldiv::solver::{NormalProblem, TangentialProblem};
use curldiv::whitney::{eval_fe, CoefficientField};
use curldiv::{FEFunction, Mesh, Point3, Topology, Vec3};
use std::path::PathBuf;
use std::sync::Arc;

pub const FIXTURES: [&str; 4] = ["single_tet", "cube", "solid_torus", "hollow_ball"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.msh"))
}

pub fn fixture(name: &str) -> (Mesh, Topology) {
    let m = read_gmsh(fixture_path(name)).unwrap().mesh;
    let t = Topology::analyze(&m).unwrap();
    (m, t)
}

pub fn all_fixtures() -> Vec<(&'static str, Mesh, Topology)> {
    FIXTURES
        .iter()
        .map(|&n| {
            let (m, t) = fixture(n);
            (n, m, t)
        })
        .collect()
}

pub fn zero_tangential(eta: CoefficientField, p: usize) -> TangentialProblem {
    TangentialProblem {
        eta,
        j: Arc::new(|_| Vec3::zeros()),
        g: Arc::new(|_| 0.0),
        a: Arc::new(|_, _| Vec3::zeros()),
        alpha: vec![0.0; p],
    }
}

pub fn zero_normal(mu: CoefficientField, g: usize) -> NormalProblem {
    NormalProblem {
        mu,
        j: Arc::new(|_| Vec3::zeros()),
        g: Arc::new(|_| 0.0),
        b: Arc::new(|_, _| 0.0),
        beta: vec![0.0; g],
    }
}

/// Interior points spread over the mesh: centroids of evenly spaced tets.
pub fn probe_points(m: &Mesh, count: usize) -> Vec<Point3> {
    let step = (m.n_tets() / count).max(1);
    (0..m.n_tets())
        .step_by(step)
        .take(count)
        .map(|t| m.geometry(t).centroid())
        .collect()
}

pub fn eval_at(m: &Mesh, f: &FEFunction, p: &Point3) -> Vec3 {
    let t = m.locate(p).expect("probe point inside the mesh");
    eval_fe(m, f, t, p).unwrap().vector().unwrap()
}
