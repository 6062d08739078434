//! Lowest-order Whitney spaces: nodal (`L_h`), edge (`N_h`), face (`RT_h`)
//! and cell (`PC_h`) elements, their differentials and interpolants.
//!
//! Degrees of freedom are vertex values, edge circulations, face fluxes and
//! cell values. Because tetrahedra are stored with sorted vertices, the local
//! edge `(i, j)` and face `(i, j, k)` carry the global orientation directly.

use crate::mesh::{IncidenceOperators, Mesh, TetGeometry, TET_EDGES, TET_FACES};
use crate::quadrature::{rule, Simplex};
use crate::{Point3, Vec3};
use nalgebra::Matrix3;
use std::collections::BTreeMap;
use thiserror::Error;

pub const INSIDE_TOLERANCE: f64 = 1e-10;

/// Quadrature degree used to interpolate analytic data.
pub const DATA_DEGREE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Lagrange,
    Edge,
    Face,
    Cell,
}

impl Space {
    pub fn dim(self, m: &Mesh) -> usize {
        match self {
            Space::Lagrange => m.n_vertices(),
            Space::Edge => m.n_edges(),
            Space::Face => m.n_faces(),
            Space::Cell => m.n_tets(),
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Space::Edge | Space::Face)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhitneyError {
    #[error("{space:?} function needs {expected} coefficients, got {found}")]
    DimensionMismatch {
        space: Space,
        expected: usize,
        found: usize,
    },
    #[error("tetrahedron {0} does not exist")]
    TetOutOfRange(usize),
    #[error("point lies outside tetrahedron {tet} (barycentric coordinate {coordinate:e})")]
    OutsideTet { tet: usize, coordinate: f64 },
    #[error("cell functions have no differential")]
    NoDifferential,
    #[error("a {0} field cannot be interpolated into {1:?}")]
    FieldKind(&'static str, Space),
    #[error("coefficient is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("no coefficient given for region {0}")]
    MissingRegion(i32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FEFunction {
    pub space: Space,
    pub coeffs: Vec<f64>,
}

impl FEFunction {
    pub fn new(m: &Mesh, space: Space, coeffs: Vec<f64>) -> Result<Self, WhitneyError> {
        let expected = space.dim(m);
        if coeffs.len() != expected {
            return Err(WhitneyError::DimensionMismatch {
                space,
                expected,
                found: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(m: &Mesh, space: Space) -> Self {
        Self {
            space,
            coeffs: vec![0.0; space.dim(m)],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec3),
}

impl Value {
    pub fn scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(s) => Some(s),
            Value::Vector(_) => None,
        }
    }

    pub fn vector(self) -> Option<Vec3> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }
}

/// `lambda_i grad lambda_j - lambda_j grad lambda_i` for local edge `k`.
pub fn edge_basis(geo: &TetGeometry, bary: &[f64; 4], k: usize) -> Vec3 {
    let [i, j] = TET_EDGES[k];
    geo.grads[j] * bary[i] - geo.grads[i] * bary[j]
}

/// Constant curl of the local edge basis function `k`.
pub fn edge_curl(geo: &TetGeometry, k: usize) -> Vec3 {
    let [i, j] = TET_EDGES[k];
    geo.grads[i].cross(&geo.grads[j]) * 2.0
}

/// Face basis function for the local face opposite vertex `lf`.
pub fn face_basis(geo: &TetGeometry, bary: &[f64; 4], lf: usize) -> Vec3 {
    let [i, j, k] = TET_FACES[lf];
    let g = &geo.grads;
    (g[j].cross(&g[k]) * bary[i] + g[k].cross(&g[i]) * bary[j] + g[i].cross(&g[j]) * bary[k]) * 2.0
}

/// Local coefficients of the function restricted to tet `t`.
fn local_coeffs(m: &Mesh, f: &FEFunction, t: usize) -> Vec<f64> {
    match f.space {
        Space::Lagrange => m.tets()[t].iter().map(|&v| f.coeffs[v]).collect(),
        Space::Edge => m.tet_edges(t).iter().map(|&e| f.coeffs[e]).collect(),
        Space::Face => m.tet_faces(t).iter().map(|&e| f.coeffs[e]).collect(),
        Space::Cell => vec![f.coeffs[t]],
    }
}

/// Evaluation from barycentric coordinates, without bounds checks.
pub fn eval_bary(m: &Mesh, f: &FEFunction, t: usize, bary: &[f64; 4]) -> Value {
    let geo = m.geometry(t);
    let c = local_coeffs(m, f, t);
    match f.space {
        Space::Lagrange => Value::Scalar(c.iter().zip(bary).map(|(a, l)| a * l).sum()),
        Space::Edge => Value::Vector((0..6).fold(Vec3::zeros(), |acc, k| {
            acc + edge_basis(geo, bary, k) * c[k]
        })),
        Space::Face => Value::Vector((0..4).fold(Vec3::zeros(), |acc, k| {
            acc + face_basis(geo, bary, k) * c[k]
        })),
        Space::Cell => Value::Scalar(c[0]),
    }
}

pub fn eval_fe(m: &Mesh, f: &FEFunction, tet: usize, p: &Point3) -> Result<Value, WhitneyError> {
    if tet >= m.n_tets() {
        return Err(WhitneyError::TetOutOfRange(tet));
    }
    let expected = f.space.dim(m);
    if f.coeffs.len() != expected {
        return Err(WhitneyError::DimensionMismatch {
            space: f.space,
            expected,
            found: f.coeffs.len(),
        });
    }
    let bary = m.geometry(tet).barycentric(p);
    if let Some(&worst) = bary.iter().min_by(|a, b| a.total_cmp(b)) {
        if worst < -INSIDE_TOLERANCE {
            return Err(WhitneyError::OutsideTet {
                tet,
                coordinate: worst,
            });
        }
    }
    Ok(eval_bary(m, f, tet, &bary))
}

/// grad, curl or div, depending on the space of `f`.
pub fn differential(
    m: &Mesh,
    ops: &IncidenceOperators,
    f: &FEFunction,
) -> Result<FEFunction, WhitneyError> {
    let to_f64 = |op: &crate::sparse::CsrMatrix<i32>| op.map(f64::from);
    Ok(match f.space {
        Space::Lagrange => FEFunction {
            space: Space::Edge,
            coeffs: to_f64(&ops.grad).matvec(&f.coeffs),
        },
        Space::Edge => FEFunction {
            space: Space::Face,
            coeffs: to_f64(&ops.curl).matvec(&f.coeffs),
        },
        Space::Face => FEFunction {
            space: Space::Cell,
            coeffs: to_f64(&ops.div)
                .matvec(&f.coeffs)
                .into_iter()
                .enumerate()
                .map(|(t, x)| x / m.volume(t))
                .collect(),
        },
        Space::Cell => return Err(WhitneyError::NoDifferential),
    })
}

/// Analytic data to be interpolated.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a dyn Fn(&Point3) -> f64),
    Vector(&'a dyn Fn(&Point3) -> Vec3),
}

pub fn interpolate(m: &Mesh, space: Space, field: Field<'_>) -> Result<FEFunction, WhitneyError> {
    interpolate_with_degree(m, space, field, DATA_DEGREE)
}

/// Canonical interpolant with DOF integrals computed by a rule of the given
/// degree.
pub fn interpolate_with_degree(
    m: &Mesh,
    space: Space,
    field: Field<'_>,
    degree: usize,
) -> Result<FEFunction, WhitneyError> {
    let coeffs = match (space, field) {
        (Space::Lagrange, Field::Scalar(f)) => m.vertices().iter().map(f).collect(),
        (Space::Cell, Field::Scalar(f)) => {
            let q = rule(Simplex::Tet, degree);
            (0..m.n_tets())
                .map(|t| {
                    let geo = m.geometry(t);
                    q.points
                        .iter()
                        .zip(&q.weights)
                        .map(|(b, w)| 6.0 * w * f(&geo.point_at(b)))
                        .sum()
                })
                .collect()
        }
        (Space::Edge, Field::Vector(f)) => {
            let q = rule(Simplex::Edge, degree);
            m.edges()
                .iter()
                .map(|&[a, b]| {
                    let (pa, pb) = (m.vertex(a), m.vertex(b));
                    let d = pb - pa;
                    q.points
                        .iter()
                        .zip(&q.weights)
                        .map(|(l, w)| w * f(&(pa + d * l[1])).dot(&d))
                        .sum()
                })
                .collect()
        }
        (Space::Face, Field::Vector(f)) => {
            let q = rule(Simplex::Triangle, degree);
            (0..m.n_faces())
                .map(|face| {
                    let [pa, pb, pc] = m.face_points(face);
                    let n = m.face_area_normal(face);
                    q.points
                        .iter()
                        .zip(&q.weights)
                        .map(|(l, w)| {
                            let x = Point3::from(
                                pa.coords * l[0] + pb.coords * l[1] + pc.coords * l[2],
                            );
                            w * f(&x).dot(&n)
                        })
                        .sum()
                })
                .collect()
        }
        (s, Field::Scalar(_)) => return Err(WhitneyError::FieldKind("scalar", s)),
        (s, Field::Vector(_)) => return Err(WhitneyError::FieldKind("vector", s)),
    };
    Ok(FEFunction { space, coeffs })
}

/// Symmetric 3x3 matrix stored by its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl Sym3 {
    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    pub fn scalar(c: f64) -> Self {
        Self::diagonal(c, c, c)
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Self {
        Self {
            xx,
            yy,
            zz,
            xy: 0.0,
            xz: 0.0,
            yz: 0.0,
        }
    }

    /// From `[xx, yy, zz, xy, xz, yz]`.
    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            xx: a[0],
            yy: a[1],
            zz: a[2],
            xy: a[3],
            xz: a[4],
            yz: a[5],
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, self.xy, self.yy, self.yz, self.xz, self.yz, self.zz,
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_array([self.xx, self.yy, self.zz, self.xy, self.xz, self.yz].map(|v| v * c))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix().symmetric_eigenvalues().min()
    }
}

/// Built-in smooth, uniformly positive definite coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticCoefficient {
    /// `(1 + |x|^2) I`.
    Graded,
    /// Anisotropic, diagonally dominant, varying in every direction.
    Layered,
}

impl AnalyticCoefficient {
    pub fn name(self) -> &'static str {
        match self {
            AnalyticCoefficient::Graded => "graded",
            AnalyticCoefficient::Layered => "layered",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "graded" => Some(Self::Graded),
            "layered" => Some(Self::Layered),
            _ => None,
        }
    }

    fn eval(self, p: &Point3) -> Sym3 {
        use std::f64::consts::PI;
        match self {
            AnalyticCoefficient::Graded => Sym3::scalar(1.0 + p.coords.norm_squared()),
            AnalyticCoefficient::Layered => Sym3 {
                xx: 2.0 + (PI * p.x).sin(),
                yy: 1.5 + 0.5 * (PI * p.y).cos(),
                zz: 1.0 + p.z * p.z,
                xy: 0.25 * (PI * p.z).sin(),
                xz: 0.0,
                yz: 0.0,
            },
        }
    }

    /// Lower bound of the smallest eigenvalue over all of space.
    pub fn lower_bound(self) -> f64 {
        match self {
            AnalyticCoefficient::Graded => 1.0,
            AnalyticCoefficient::Layered => 0.75,
        }
    }
}

/// Material coefficient `eta` or `mu`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientField {
    Identity,
    Scalar(f64),
    Constant(Sym3),
    PerRegion(BTreeMap<i32, Sym3>),
    Analytic(AnalyticCoefficient),
}

impl CoefficientField {
    /// Checks positive definiteness and, for per-region data, that every
    /// region of the mesh is covered.
    pub fn validate(&self, m: &Mesh) -> Result<(), WhitneyError> {
        let check = |s: &Sym3, what: String| {
            let ev = s.min_eigenvalue();
            if ev.is_finite() && ev > 0.0 {
                Ok(())
            } else {
                Err(WhitneyError::NotPositiveDefinite(format!(
                    "{what} has smallest eigenvalue {ev:e}"
                )))
            }
        };
        match self {
            CoefficientField::Identity | CoefficientField::Analytic(_) => Ok(()),
            CoefficientField::Scalar(c) => check(&Sym3::scalar(*c), "scalar coefficient".into()),
            CoefficientField::Constant(s) => check(s, "constant coefficient".into()),
            CoefficientField::PerRegion(map) => {
                for (r, s) in map {
                    check(s, format!("region {r}"))?;
                }
                for &r in m.regions() {
                    if !map.contains_key(&r) {
                        return Err(WhitneyError::MissingRegion(r));
                    }
                }
                Ok(())
            }
        }
    }

    /// Value at `p` in a cell of the given region. Per-region fields must be
    /// validated against the mesh first.
    pub fn eval(&self, region: i32, p: &Point3) -> Matrix3<f64> {
        match self {
            CoefficientField::Identity => Matrix3::identity(),
            CoefficientField::Scalar(c) => Matrix3::identity() * *c,
            CoefficientField::Constant(s) => s.matrix(),
            CoefficientField::PerRegion(map) => map
                .get(&region)
                .unwrap_or_else(|| panic!("no coefficient for region {region}"))
                .matrix(),
            CoefficientField::Analytic(a) => a.eval(p).matrix(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            CoefficientField::Identity => CoefficientField::Scalar(c),
            CoefficientField::Scalar(s) => CoefficientField::Scalar(s * c),
            CoefficientField::Constant(s) => CoefficientField::Constant(s.scaled(c)),
            CoefficientField::PerRegion(map) => {
                CoefficientField::PerRegion(map.iter().map(|(&r, s)| (r, s.scaled(c))).collect())
            }
            CoefficientField::Analytic(_) => {
                panic!("analytic coefficients cannot be rescaled")
            }
        }
    }

    /// True when the field does not vary within a cell.
    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self, CoefficientField::Analytic(_))
    }
}
