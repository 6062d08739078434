//! The two gauged formulations: problem data, compatibility checks, the
//! solve pipeline, solution recovery and error norms.

pub mod assembly;
pub mod cg;

pub use assembly::{assemble_normal, assemble_tangential, AssembledSystem};
pub use cg::{solve_spd, CgError, CgOptions, CgStats};

use crate::gauge::{build_l_star, build_n_star, GaugedCurlBasis, ReducedNodalBasis};
use crate::lift::{self, curl_residual, divergence_residual, LiftError};
use crate::mesh::{IncidenceOperators, Mesh};
use crate::quadrature::{rule, Simplex};
use crate::topology::Topology;
use crate::whitney::{
    edge_curl, eval_bary, interpolate, CoefficientField, FEFunction, Field, Space, WhitneyError,
};
use crate::{Point3, Vec3};
use std::sync::Arc;
use thiserror::Error;

pub type ScalarFn = Arc<dyn Fn(&Point3) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point3) -> Vec3 + Send + Sync>;
/// Boundary data as a function of the point and the outward unit normal.
pub type TangentTraceFn = Arc<dyn Fn(&Point3, &Vec3) -> Vec3 + Send + Sync>;
pub type NormalTraceFn = Arc<dyn Fn(&Point3, &Vec3) -> f64 + Send + Sync>;

/// Quadrature degree of the error integrals.
pub const ERROR_DEGREE: usize = 6;
/// Relative tolerance of the data compatibility checks.
pub const VALIDATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Tangential,
    Normal,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Tangential => "tangential",
            Formulation::Normal => "normal",
        }
    }
}

/// `curl(eta u) = J`, `div u = g`, `(eta u) x n = a`, fluxes `alpha` through
/// the internal boundary components.
#[derive(Clone)]
pub struct TangentialProblem {
    pub eta: CoefficientField,
    pub j: VectorFn,
    pub g: ScalarFn,
    pub a: TangentTraceFn,
    pub alpha: Vec<f64>,
}

/// `curl u = J`, `div(mu u) = g`, `mu u . n = b`, periods `beta` along the
/// homology cycles.
#[derive(Clone)]
pub struct NormalProblem {
    pub mu: CoefficientField,
    pub j: VectorFn,
    pub g: ScalarFn,
    pub b: NormalTraceFn,
    pub beta: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Coefficient(#[from] WhitneyError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Cg(#[from] CgError),
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub formulation: Formulation,
    /// Face fluxes for the tangential formulation, edge circulations for the
    /// normal one.
    pub u_h: FEFunction,
    /// `W_h` (face fluxes) or `V_h` (edge circulations).
    pub correction: FEFunction,
    pub lift: FEFunction,
    /// Reduced coefficients solved for.
    pub coefficients: Vec<f64>,
    pub stats: CgStats,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `max |div u_h - g_h|` or `max |curl u_h - J_h|`.
    pub derivative_residual: f64,
    /// Largest error in the component fluxes or the cycle periods.
    pub constraint_residual: f64,
    /// Scale the residuals are measured against.
    pub scale: f64,
}

impl Diagnostics {
    pub fn passes(&self, tol: f64) -> bool {
        self.derivative_residual <= tol * self.scale && self.constraint_residual <= tol * self.scale
    }
}

/// The basis a reduced coefficient vector refers to.
#[derive(Debug, Clone, Copy)]
pub enum ReducedBasis<'a> {
    Gauged(&'a GaugedCurlBasis),
    Nodal(&'a ReducedNodalBasis),
}

/// `u_h = sum_l W_l curl omega_l + lift` or `u_h = sum_i V_i grad psi_i + lift`.
/// Returns `(u_h, correction)`.
pub fn recover_solution(
    m: &Mesh,
    ops: &IncidenceOperators,
    basis: ReducedBasis<'_>,
    coeffs: &[f64],
    lift: &FEFunction,
) -> (FEFunction, FEFunction) {
    let correction = match basis {
        ReducedBasis::Gauged(gb) => {
            let edges = gb.expand(m.n_edges(), coeffs);
            FEFunction {
                space: Space::Face,
                coeffs: ops.curl.map(f64::from).matvec(&edges),
            }
        }
        ReducedBasis::Nodal(rb) => {
            let nodal = rb.expand(m.n_vertices(), coeffs);
            FEFunction {
                space: Space::Edge,
                coeffs: ops.grad.map(f64::from).matvec(&nodal),
            }
        }
    };
    let u_h = FEFunction {
        space: correction.space,
        coeffs: correction
            .coeffs
            .iter()
            .zip(&lift.coeffs)
            .map(|(a, b)| a + b)
            .collect(),
    };
    (u_h, correction)
}

/// Compatibility report for tangential data.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `max_t |(D J_h)_t|`, relative to the face fluxes of `t`.
    pub divergence: f64,
    pub divergence_ok: bool,
    /// Worst face-wise mismatch, relative to the magnitudes involved.
    pub trace: f64,
    pub trace_ok: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.divergence_ok && self.trace_ok
    }
}

fn relative_divergence(m: &Mesh, ops: &IncidenceOperators, j_h: &FEFunction) -> f64 {
    (0..m.n_tets())
        .map(|t| {
            let (faces, signs) = ops.div.row(t);
            let (mut d, mut scale) = (0.0, 0.0);
            for (&f, &s) in faces.iter().zip(signs) {
                d += f64::from(s) * j_h.coeffs[f];
                scale += j_h.coeffs[f].abs();
            }
            d.abs() / (scale + m.volume(t))
        })
        .fold(0.0, f64::max)
}

fn outward_boundary_faces(m: &Mesh) -> Vec<(usize, Vec3)> {
    (0..m.n_faces())
        .filter(|&f| m.is_boundary_face(f))
        .map(|f| {
            let t = m.face_tets(f)[0];
            let lf = m.tet_faces(t).iter().position(|&x| x == f).unwrap();
            (f, m.face_normal(f) * f64::from(m.face_sign(t, lf)))
        })
        .collect()
}

/// Checks `div J = 0` through the interpolated fluxes, and `J . n = div_t a`
/// face by face via Stokes' theorem on each boundary triangle. Report only.
pub fn validate_tangential(
    m: &Mesh,
    ops: &IncidenceOperators,
    p: &TangentialProblem,
) -> ValidationReport {
    let j_h = interpolate(m, Space::Face, Field::Vector(&*p.j)).expect("vector into faces");
    let divergence = relative_divergence(m, ops, &j_h);
    let qf = rule(Simplex::Triangle, crate::whitney::DATA_DEGREE);
    let qe = rule(Simplex::Edge, crate::whitney::DATA_DEGREE);
    let mut trace: f64 = 0.0;
    for (f, n) in outward_boundary_faces(m) {
        let pts = m.face_points(f);
        let area = m.face_area(f);
        let flux: f64 = qf
            .points
            .iter()
            .zip(qf.scaled_weights(area))
            .map(|(l, w)| {
                let x = Point3::from(
                    pts[0].coords * l[0] + pts[1].coords * l[1] + pts[2].coords * l[2],
                );
                w * (p.j)(&x).dot(&n)
            })
            .sum();
        // counterclockwise about n
        let order = if m.face_area_normal(f).dot(&n) > 0.0 {
            [0, 1, 2]
        } else {
            [0, 2, 1]
        };
        let mut circ = 0.0;
        let mut scale = flux.abs() + area;
        for s in 0..3 {
            let (pa, pb) = (pts[order[s]], pts[order[(s + 1) % 3]]);
            let d = pb - pa;
            let conormal = d.cross(&n);
            let c: f64 = qe
                .points
                .iter()
                .zip(&qe.weights)
                .map(|(l, w)| w * (p.a)(&(pa + d * l[1]), &n).dot(&conormal))
                .sum();
            circ += c;
            scale += c.abs();
        }
        trace = trace.max((flux - circ).abs() / scale);
    }
    ValidationReport {
        divergence,
        divergence_ok: divergence <= VALIDATION_TOLERANCE,
        trace,
        trace_ok: trace <= VALIDATION_TOLERANCE,
        notes: vec!["compatibility against Neumann harmonic fields is not checked".to_string()],
    }
}

/// Checks `div J = 0`, `J . n = 0` on the boundary and `int g = int b`.
pub fn validate_normal(m: &Mesh, ops: &IncidenceOperators, p: &NormalProblem) -> ValidationReport {
    let j_h = interpolate(m, Space::Face, Field::Vector(&*p.j)).expect("vector into faces");
    let divergence = relative_divergence(m, ops, &j_h);
    let g_h = interpolate(m, Space::Cell, Field::Scalar(&*p.g)).expect("scalar into cells");
    let volume_integral: f64 = (0..m.n_tets()).map(|t| g_h.coeffs[t] * m.volume(t)).sum();
    let qf = rule(Simplex::Triangle, crate::whitney::DATA_DEGREE);
    let mut boundary_integral = 0.0;
    let mut scale = volume_integral.abs();
    let mut normal_flux: f64 = 0.0;
    let mut flux_scale: f64 = 0.0;
    for (f, n) in outward_boundary_faces(m) {
        let pts = m.face_points(f);
        for (l, w) in qf.points.iter().zip(qf.scaled_weights(m.face_area(f))) {
            let x =
                Point3::from(pts[0].coords * l[0] + pts[1].coords * l[1] + pts[2].coords * l[2]);
            let b = w * (p.b)(&x, &n);
            boundary_integral += b;
            scale += b.abs();
        }
        normal_flux = normal_flux.max(j_h.coeffs[f].abs());
        flux_scale = flux_scale.max(j_h.coeffs[f].abs() + m.face_area(f));
    }
    let trace = (volume_integral - boundary_integral).abs() / scale.max(f64::MIN_POSITIVE);
    let mut notes = Vec::new();
    if normal_flux > VALIDATION_TOLERANCE * flux_scale {
        notes.push(format!(
            "J . n does not vanish on the boundary (largest face flux {normal_flux:e})"
        ));
    }
    ValidationReport {
        divergence,
        divergence_ok: divergence <= VALIDATION_TOLERANCE,
        trace,
        trace_ok: trace <= VALIDATION_TOLERANCE,
        notes,
    }
}

/// Interpolates the data, builds the divergence lift and solves.
pub fn solve_tangential(
    m: &Mesh,
    topo: &Topology,
    p: &TangentialProblem,
    opts: CgOptions,
) -> Result<Solution, SolveError> {
    p.eta.validate(m)?;
    let g_h = interpolate(m, Space::Cell, Field::Scalar(&*p.g))?;
    let lift = lift::rt_potential(m, &topo.ops, &topo.boundary, &g_h, &p.alpha)?;
    solve_tangential_with_lift(m, topo, p, lift, opts)
}

/// As [`solve_tangential`] with a caller-supplied lift.
pub fn solve_tangential_with_lift(
    m: &Mesh,
    topo: &Topology,
    p: &TangentialProblem,
    lift: FEFunction,
    opts: CgOptions,
) -> Result<Solution, SolveError> {
    p.eta.validate(m)?;
    let g_h = interpolate(m, Space::Cell, Field::Scalar(&*p.g))?;
    let gb = build_n_star(m, &topo.tree, &topo.homology);
    let sys = assemble_tangential(m, p, &gb, &lift);
    let (w, stats) = solve_spd(&sys.k, &sys.rhs, opts)?;
    let (u_h, correction) = recover_solution(m, &topo.ops, ReducedBasis::Gauged(&gb), &w, &lift);
    let constraint_residual = topo.boundary.components[1..]
        .iter()
        .zip(&p.alpha)
        .map(|(c, a)| (c.flux(&u_h.coeffs) - a).abs())
        .fold(0.0, f64::max);
    let diagnostics = Diagnostics {
        derivative_residual: divergence_residual(m, &topo.ops, &u_h, &g_h),
        constraint_residual,
        scale: 1.0 + g_h.max_abs() + p.alpha.iter().fold(0.0f64, |a, x| a.max(x.abs())),
    };
    Ok(Solution {
        formulation: Formulation::Tangential,
        u_h,
        correction,
        lift,
        coefficients: w,
        stats,
        diagnostics,
    })
}

pub fn solve_normal(
    m: &Mesh,
    topo: &Topology,
    p: &NormalProblem,
    opts: CgOptions,
) -> Result<Solution, SolveError> {
    p.mu.validate(m)?;
    let j_h = interpolate(m, Space::Face, Field::Vector(&*p.j))?;
    let lift = lift::nedelec_potential(
        m,
        &topo.ops,
        &topo.boundary,
        &topo.tree,
        &topo.homology,
        &j_h,
        &p.beta,
    )?;
    solve_normal_with_lift(m, topo, p, lift, opts)
}

pub fn solve_normal_with_lift(
    m: &Mesh,
    topo: &Topology,
    p: &NormalProblem,
    lift: FEFunction,
    opts: CgOptions,
) -> Result<Solution, SolveError> {
    p.mu.validate(m)?;
    let j_h = interpolate(m, Space::Face, Field::Vector(&*p.j))?;
    let rb = build_l_star(m);
    let sys = assemble_normal(m, p, &rb, &lift);
    let (v, stats) = solve_spd(&sys.k, &sys.rhs, opts)?;
    let (u_h, correction) = recover_solution(m, &topo.ops, ReducedBasis::Nodal(&rb), &v, &lift);
    let constraint_residual = (0..topo.homology.g)
        .map(|n| (topo.homology.period(n, &u_h.coeffs) - p.beta[n]).abs())
        .fold(0.0, f64::max);
    let diagnostics = Diagnostics {
        derivative_residual: curl_residual(&topo.ops, &u_h, &j_h),
        constraint_residual,
        scale: 1.0 + j_h.max_abs() + p.beta.iter().fold(0.0f64, |a, x| a.max(x.abs())),
    };
    Ok(Solution {
        formulation: Formulation::Normal,
        u_h,
        correction,
        lift,
        coefficients: v,
        stats,
        diagnostics,
    })
}

/// Analytic solution with its divergence and curl.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: VectorFn,
    pub div: ScalarFn,
    pub curl: VectorFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub l2: f64,
    /// `||div(u - u_h)||` or `||curl(u - u_h)||`.
    pub derivative: f64,
    /// `H(div)` or `H(curl)` norm of the error.
    pub graph: f64,
}

/// Errors of a face or edge function against `exact`, by element quadrature.
pub fn error_norms(
    m: &Mesh,
    ops: &IncidenceOperators,
    u_h: &FEFunction,
    exact: &ExactSolution,
) -> ErrorNorms {
    let q = rule(Simplex::Tet, ERROR_DEGREE);
    let (mut l2, mut der) = (0.0, 0.0);
    for t in 0..m.n_tets() {
        let geo = m.geometry(t);
        let local_curl = match u_h.space {
            Space::Edge => Some(
                m.tet_edges(t)
                    .iter()
                    .enumerate()
                    .fold(Vec3::zeros(), |acc, (k, &e)| {
                        acc + edge_curl(geo, k) * u_h.coeffs[e]
                    }),
            ),
            _ => None,
        };
        let local_div = match u_h.space {
            Space::Face => {
                let (faces, signs) = ops.div.row(t);
                Some(
                    faces
                        .iter()
                        .zip(signs)
                        .map(|(&f, &s)| f64::from(s) * u_h.coeffs[f])
                        .sum::<f64>()
                        / geo.volume,
                )
            }
            _ => None,
        };
        for (b, w) in q.points.iter().zip(q.scaled_weights(geo.volume)) {
            let x = geo.point_at(b);
            let v = eval_bary(m, u_h, t, b)
                .vector()
                .expect("vector-valued space");
            l2 += w * ((exact.u)(&x) - v).norm_squared();
            if let Some(c) = local_curl {
                der += w * ((exact.curl)(&x) - c).norm_squared();
            }
            if let Some(d) = local_div {
                der += w * ((exact.div)(&x) - d).powi(2);
            }
        }
    }
    ErrorNorms {
        l2: l2.sqrt(),
        derivative: der.sqrt(),
        graph: (l2 + der).sqrt(),
    }
}
