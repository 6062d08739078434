//! JSON problem configuration for the `solve` workflow.

use super::mms::{self, MmsError};
use crate::mesh::Mesh;
use crate::solver::{CgOptions, Formulation, NormalProblem, TangentialProblem};
use crate::topology::Topology;
use crate::whitney::{AnalyticCoefficient, CoefficientField, Sym3, INSIDE_TOLERANCE};
use crate::{Point3, Vec3};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Mms(#[from] MmsError),
    #[error("unknown analytic coefficient '{0}'")]
    UnknownAnalytic(String),
    #[error("region key '{0}' is not an integer")]
    RegionKey(String),
    #[error("{name} has length {found}, the mesh requires {expected}")]
    Length {
        name: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("no data given for region {0}")]
    MissingRegion(i32),
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FormulationSpec {
    Tangential,
    Normal,
}

impl From<FormulationSpec> for Formulation {
    fn from(f: FormulationSpec) -> Self {
        match f {
            FormulationSpec::Tangential => Formulation::Tangential,
            FormulationSpec::Normal => Formulation::Normal,
        }
    }
}

/// Symmetric matrices are written `[xx, yy, zz, xy, xz, yz]`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Identity,
    Scalar { value: f64 },
    Constant { matrix: [f64; 6] },
    PerRegion { regions: BTreeMap<String, [f64; 6]> },
    Analytic { name: String },
}

/// Constant data on one region. `trace` is the tangential boundary vector
/// `a` or the normal boundary value `b`, depending on the formulation.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionData {
    #[serde(default)]
    pub j: [f64; 3],
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub a: [f64; 3],
    #[serde(default)]
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// A built-in manufactured solution; its fluxes or periods are used
    /// unless `alpha` or `beta` are given.
    Mms {
        case: String,
    },
    Uniform(RegionData),
    PerRegion {
        regions: BTreeMap<String, RegionData>,
    },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

fn default_tol() -> f64 {
    CgOptions::default().tol
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_vtk")]
    pub vtk: String,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_vtk() -> String {
    "solution.vtk".into()
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            vtk: default_vtk(),
            report: default_report(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub formulation: FormulationSpec,
    #[serde(default = "default_coefficient")]
    pub coefficient: CoefficientSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_coefficient() -> CoefficientSpec {
    CoefficientSpec::Identity
}

fn parse_region(key: &str) -> Result<i32, ConfigError> {
    key.trim()
        .parse()
        .map_err(|_| ConfigError::RegionKey(key.to_string()))
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<CoefficientField, ConfigError> {
        Ok(match self {
            CoefficientSpec::Identity => CoefficientField::Identity,
            CoefficientSpec::Scalar { value } => CoefficientField::Scalar(*value),
            CoefficientSpec::Constant { matrix } => {
                CoefficientField::Constant(Sym3::from_array(*matrix))
            }
            CoefficientSpec::PerRegion { regions } => CoefficientField::PerRegion(
                regions
                    .iter()
                    .map(|(k, v)| Ok((parse_region(k)?, Sym3::from_array(*v))))
                    .collect::<Result<_, ConfigError>>()?,
            ),
            CoefficientSpec::Analytic { name } => CoefficientField::Analytic(
                AnalyticCoefficient::from_name(name)
                    .ok_or_else(|| ConfigError::UnknownAnalytic(name.clone()))?,
            ),
        })
    }
}

/// Finds the tetrahedron containing a point through a uniform bucket grid.
#[derive(Debug, Clone)]
pub struct RegionLocator {
    lo: Point3,
    cell: Vec3,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    regions: Vec<i32>,
    geometry: Vec<crate::mesh::TetGeometry>,
}

impl RegionLocator {
    pub fn new(m: &Mesh) -> Self {
        let (lo, hi) = m.bounding_box();
        let per_axis = ((m.n_tets() as f64).cbrt().ceil() as usize).max(1);
        let extent = (hi - lo).map(|x| x.max(f64::EPSILON));
        let cell = extent / per_axis as f64;
        let dims = [per_axis; 3];
        let mut buckets = vec![Vec::new(); per_axis.pow(3)];
        let pad = extent * 1e-9;
        let index = |x: f64, k: usize| -> usize {
            (((x - lo[k]) / cell[k]).floor().max(0.0) as usize).min(per_axis - 1)
        };
        for t in 0..m.n_tets() {
            let pts: Vec<&Point3> = m.tets()[t].iter().map(|&v| m.vertex(v)).collect();
            let range = |k: usize| {
                let a = pts.iter().map(|p| index(p[k] - pad[k], k)).min().unwrap();
                let b = pts.iter().map(|p| index(p[k] + pad[k], k)).max().unwrap();
                a..=b
            };
            for i in range(0) {
                for j in range(1) {
                    for l in range(2) {
                        buckets[(i * per_axis + j) * per_axis + l].push(t);
                    }
                }
            }
        }
        Self {
            lo,
            cell,
            dims,
            buckets,
            regions: m.regions().to_vec(),
            geometry: (0..m.n_tets()).map(|t| *m.geometry(t)).collect(),
        }
    }

    pub fn locate(&self, p: &Point3) -> Option<usize> {
        let mut idx = [0; 3];
        for k in 0..3 {
            let x = (p[k] - self.lo[k]) / self.cell[k];
            if !x.is_finite() {
                return None;
            }
            idx[k] = (x.floor().max(0.0) as usize).min(self.dims[k] - 1);
        }
        let b = &self.buckets[(idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]];
        b.iter()
            .copied()
            .filter(|&t| {
                self.geometry[t]
                    .barycentric(p)
                    .iter()
                    .all(|&l| l >= -INSIDE_TOLERANCE)
            })
            .min()
    }

    pub fn region(&self, p: &Point3) -> Option<i32> {
        self.locate(p).map(|t| self.regions[t])
    }
}

/// Region-wise constant data resolved against a mesh.
struct PiecewiseData {
    locator: RegionLocator,
    data: BTreeMap<i32, RegionData>,
}

impl PiecewiseData {
    fn at(&self, p: &Point3) -> &RegionData {
        let r = self
            .locator
            .region(p)
            .unwrap_or_else(|| panic!("point {p} lies outside the mesh"));
        &self.data[&r]
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn check_length(name: &'static str, v: &[f64], expected: usize) -> Result<(), ConfigError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(ConfigError::Length {
            name,
            found: v.len(),
            expected,
        })
    }
}

fn region_table(
    m: &Mesh,
    data: &DataSpec,
) -> Result<Option<BTreeMap<i32, RegionData>>, ConfigError> {
    let table: BTreeMap<i32, RegionData> = match data {
        DataSpec::Mms { .. } => return Ok(None),
        DataSpec::Uniform(d) => m.regions().iter().map(|&r| (r, d.clone())).collect(),
        DataSpec::PerRegion { regions } => regions
            .iter()
            .map(|(k, v)| Ok((parse_region(k)?, v.clone())))
            .collect::<Result<_, ConfigError>>()?,
    };
    for &r in m.regions() {
        if !table.contains_key(&r) {
            return Err(ConfigError::MissingRegion(r));
        }
    }
    Ok(Some(table))
}

impl ProblemConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation.into()
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    fn check_formulation_fields(&self) -> Result<(), ConfigError> {
        match self.formulation {
            FormulationSpec::Tangential if self.beta.is_some() => Err(ConfigError::Inconsistent(
                "beta belongs to the normal formulation".into(),
            )),
            FormulationSpec::Normal if self.alpha.is_some() => Err(ConfigError::Inconsistent(
                "alpha belongs to the tangential formulation".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Builds the tangential problem; `alpha` must have one entry per
    /// internal boundary component.
    pub fn tangential_problem(
        &self,
        m: &Mesh,
        topo: &Topology,
    ) -> Result<TangentialProblem, ConfigError> {
        if self.formulation != FormulationSpec::Tangential {
            return Err(ConfigError::Inconsistent(
                "config is for the normal formulation".into(),
            ));
        }
        self.check_formulation_fields()?;
        let eta = self.coefficient.build()?;
        let mut problem = match region_table(m, &self.data)? {
            None => {
                let DataSpec::Mms { case } = &self.data else {
                    unreachable!()
                };
                let c = mms::case(case)?;
                let mut p = c.tangential_problem(m, topo);
                p.eta = eta;
                p
            }
            Some(data) => {
                let d = Arc::new(PiecewiseData {
                    locator: RegionLocator::new(m),
                    data,
                });
                let (dj, dg, da) = (d.clone(), d.clone(), d);
                TangentialProblem {
                    eta,
                    j: Arc::new(move |p| vec3(dj.at(p).j)),
                    g: Arc::new(move |p| dg.at(p).g),
                    a: Arc::new(move |p, _| vec3(da.at(p).a)),
                    alpha: Vec::new(),
                }
            }
        };
        if let Some(alpha) = &self.alpha {
            problem.alpha = alpha.clone();
        }
        check_length("alpha", &problem.alpha, topo.p())?;
        Ok(problem)
    }

    /// Builds the normal problem; `beta` must have one entry per homology
    /// generator.
    pub fn normal_problem(&self, m: &Mesh, topo: &Topology) -> Result<NormalProblem, ConfigError> {
        if self.formulation != FormulationSpec::Normal {
            return Err(ConfigError::Inconsistent(
                "config is for the tangential formulation".into(),
            ));
        }
        self.check_formulation_fields()?;
        let mu = self.coefficient.build()?;
        let mut problem = match region_table(m, &self.data)? {
            None => {
                let DataSpec::Mms { case } = &self.data else {
                    unreachable!()
                };
                let c = mms::case(case)?;
                let mut p = c.normal_problem(m, topo);
                p.mu = mu;
                p
            }
            Some(data) => {
                let d = Arc::new(PiecewiseData {
                    locator: RegionLocator::new(m),
                    data,
                });
                let (dj, dg, db) = (d.clone(), d.clone(), d);
                NormalProblem {
                    mu,
                    j: Arc::new(move |p| vec3(dj.at(p).j)),
                    g: Arc::new(move |p| dg.at(p).g),
                    b: Arc::new(move |p, _| db.at(p).b),
                    beta: Vec::new(),
                }
            }
        };
        if let Some(beta) = &self.beta {
            problem.beta = beta.clone();
        }
        check_length("beta", &problem.beta, topo.g())?;
        Ok(problem)
    }
}
