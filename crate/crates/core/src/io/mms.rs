//! Manufactured solutions.
//!
//! Each case stores an exact field `u`, its hand-derived Jacobian and a
//! constant coefficient matrix; every datum of both formulations follows from
//! these. On registration the Jacobian is checked against fourth-order
//! central differences of `u`.

use crate::mesh::Mesh;
use crate::solver::{ExactSolution, NormalProblem, TangentialProblem};
use crate::topology::Topology;
use crate::whitney::{interpolate, CoefficientField, Field, Space, Sym3};
use crate::{Point3, Vec3};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

pub const CONSISTENCY_SAMPLES: usize = 20;
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MmsError {
    #[error("unknown manufactured solution '{0}'")]
    UnknownCase(String),
    #[error("case '{case}': {what} differs from finite differences by {error:e} at {point:?}")]
    Inconsistent {
        case: &'static str,
        what: &'static str,
        error: f64,
        point: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy)]
pub struct MmsCase {
    pub name: &'static str,
    pub description: &'static str,
    pub u: fn(&Point3) -> Vec3,
    /// `jacobian[(i, j)] = d u_i / d x_j`.
    pub jacobian: fn(&Point3) -> Matrix3<f64>,
    pub coefficient: Sym3,
    /// True when the exact solution lies in both discrete spaces.
    pub reproducible: bool,
}

fn curl_of(j: &Matrix3<f64>) -> Vec3 {
    Vec3::new(
        j[(2, 1)] - j[(1, 2)],
        j[(0, 2)] - j[(2, 0)],
        j[(1, 0)] - j[(0, 1)],
    )
}

fn mms1_u(p: &Point3) -> Vec3 {
    Vec3::new((PI * p.y).sin() + p.x, (PI * p.z).sin(), (PI * p.x).sin())
}

fn mms1_jac(p: &Point3) -> Matrix3<f64> {
    Matrix3::new(
        1.0,
        PI * (PI * p.y).cos(),
        0.0,
        0.0,
        0.0,
        PI * (PI * p.z).cos(),
        PI * (PI * p.x).cos(),
        0.0,
        0.0,
    )
}

fn quadratic_u(p: &Point3) -> Vec3 {
    Vec3::new(p.y * p.y + p.x, p.z * p.z, p.x * p.y)
}

fn quadratic_jac(p: &Point3) -> Matrix3<f64> {
    Matrix3::new(1.0, 2.0 * p.y, 0.0, 0.0, 0.0, 2.0 * p.z, p.y, p.x, 0.0)
}

fn unit_x(_: &Point3) -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}

fn skew_constant(_: &Point3) -> Vec3 {
    Vec3::new(1.0, -2.0, 0.5)
}

fn zero_jac(_: &Point3) -> Matrix3<f64> {
    Matrix3::zeros()
}

fn aniso() -> Sym3 {
    Sym3::from_array([2.0, 1.5, 1.0, 0.5, 0.0, 0.25])
}

pub fn registry() -> Vec<MmsCase> {
    vec![
        MmsCase {
            name: "mms1",
            description: "u = (sin(pi y) + x, sin(pi z), sin(pi x)), identity coefficient",
            u: mms1_u,
            jacobian: mms1_jac,
            coefficient: Sym3::identity(),
            reproducible: false,
        },
        MmsCase {
            name: "mms1-aniso",
            description: "mms1 field with a constant anisotropic coefficient",
            u: mms1_u,
            jacobian: mms1_jac,
            coefficient: aniso(),
            reproducible: false,
        },
        MmsCase {
            name: "quadratic",
            description: "u = (y^2 + x, z^2, x y), identity coefficient",
            u: quadratic_u,
            jacobian: quadratic_jac,
            coefficient: Sym3::identity(),
            reproducible: false,
        },
        MmsCase {
            name: "constant",
            description: "u = (1, 0, 0), identity coefficient",
            u: unit_x,
            jacobian: zero_jac,
            coefficient: Sym3::identity(),
            reproducible: true,
        },
        MmsCase {
            name: "constant-aniso",
            description: "u = (1, -2, 1/2) with a constant anisotropic coefficient",
            u: skew_constant,
            jacobian: zero_jac,
            coefficient: aniso(),
            reproducible: true,
        },
    ]
}

/// Looks a case up by name and runs its consistency check.
pub fn case(name: &str) -> Result<MmsCase, MmsError> {
    let c = registry()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| MmsError::UnknownCase(name.to_string()))?;
    c.check_consistency()?;
    Ok(c)
}

fn fd_jacobian(u: fn(&Point3) -> Vec3, p: &Point3, h: f64) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for k in 0..3 {
        let shift = |s: f64| {
            let mut q = *p;
            q[k] += s * h;
            u(&q)
        };
        let d = (shift(-2.0) - shift(-1.0) * 8.0 + shift(1.0) * 8.0 - shift(2.0)) / (12.0 * h);
        j.set_column(k, &d);
    }
    j
}

impl MmsCase {
    pub fn coefficient_field(&self) -> CoefficientField {
        if self.coefficient == Sym3::identity() {
            CoefficientField::Identity
        } else {
            CoefficientField::Constant(self.coefficient)
        }
    }

    /// Compares the stored derivatives with finite differences at
    /// [`CONSISTENCY_SAMPLES`] random points of the unit cube.
    pub fn check_consistency(&self) -> Result<(), MmsError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let e = self.coefficient.matrix();
        for _ in 0..CONSISTENCY_SAMPLES {
            let p = Point3::new(rng.random(), rng.random(), rng.random());
            let fd = fd_jacobian(self.u, &p, 1e-3);
            let jac = (self.jacobian)(&p);
            let checks = [
                ("div u", (fd.trace() - jac.trace()).abs()),
                ("curl u", (curl_of(&fd) - curl_of(&jac)).norm()),
                ("div(eta u)", ((e * fd).trace() - (e * jac).trace()).abs()),
                (
                    "curl(eta u)",
                    (curl_of(&(e * fd)) - curl_of(&(e * jac))).norm(),
                ),
            ];
            for (what, error) in checks {
                if error > CONSISTENCY_TOLERANCE {
                    return Err(MmsError::Inconsistent {
                        case: self.name,
                        what,
                        error,
                        point: [p.x, p.y, p.z],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn exact(&self) -> ExactSolution {
        let (u, jac) = (self.u, self.jacobian);
        ExactSolution {
            u: Arc::new(u),
            div: Arc::new(move |p| jac(p).trace()),
            curl: Arc::new(move |p| curl_of(&jac(p))),
        }
    }

    /// Data of the tangential formulation; `alpha` holds the fluxes of `u`
    /// through the internal boundary components.
    pub fn tangential_problem(&self, m: &Mesh, topo: &Topology) -> TangentialProblem {
        let (u, jac) = (self.u, self.jacobian);
        let e = self.coefficient.matrix();
        let fluxes = interpolate(m, Space::Face, Field::Vector(&u)).expect("vector into faces");
        TangentialProblem {
            eta: self.coefficient_field(),
            j: Arc::new(move |p| curl_of(&(e * jac(p)))),
            g: Arc::new(move |p| jac(p).trace()),
            a: Arc::new(move |p, n| (e * u(p)).cross(n)),
            alpha: topo.boundary.components[1..]
                .iter()
                .map(|c| c.flux(&fluxes.coeffs))
                .collect(),
        }
    }

    /// Data of the normal formulation; `beta` holds the periods of `u` along
    /// the homology cycles.
    pub fn normal_problem(&self, m: &Mesh, topo: &Topology) -> NormalProblem {
        let (u, jac) = (self.u, self.jacobian);
        let e = self.coefficient.matrix();
        let circ = interpolate(m, Space::Edge, Field::Vector(&u)).expect("vector into edges");
        NormalProblem {
            mu: self.coefficient_field(),
            j: Arc::new(move |p| curl_of(&jac(p))),
            g: Arc::new(move |p| (e * jac(p)).trace()),
            b: Arc::new(move |p, n| (e * u(p)).dot(n)),
            beta: (0..topo.homology.g)
                .map(|n| topo.homology.period(n, &circ.coeffs))
                .collect(),
        }
    }
}
