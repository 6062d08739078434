//! Refinement studies on the structured unit cube.

use super::mms::{self, MmsError};
use super::structured::cube_mesh;
use crate::solver::{self, error_norms, CgOptions, Formulation, SolveError};
use crate::topology::{AnalysisError, Topology};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

/// Graph-norm errors below this are treated as exact reproduction.
pub const EXACT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Case(#[from] MmsError),
    #[error("level n={n}: {source}")]
    Topology { n: usize, source: AnalysisError },
    #[error("level n={n}: {source}")]
    Solve { n: usize, source: SolveError },
    #[error("at least one level is required")]
    NoLevels,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LevelResult {
    /// Subdivisions per side.
    pub n: usize,
    /// Largest edge length.
    pub h: f64,
    pub dofs: usize,
    pub l2: f64,
    pub derivative: f64,
    pub graph: f64,
    pub cg_iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub formulation: String,
    pub levels: Vec<LevelResult>,
    /// `log2(e_k / e_{k+1})` of the graph-norm error; `None` when both errors
    /// are at reproduction level.
    pub graph_rates: Vec<Option<f64>>,
    pub l2_rates: Vec<Option<f64>>,
    /// Every level reproduced the exact solution.
    pub exact: bool,
}

impl ConvergenceReport {
    pub fn final_graph_rate(&self) -> Option<f64> {
        self.graph_rates.last().copied().flatten()
    }

    pub fn total_seconds(&self) -> f64 {
        self.levels.iter().map(|l| l.seconds).sum()
    }

    pub fn to_text(&self) -> String {
        let norm = if self.formulation == "tangential" {
            "H(div)"
        } else {
            "H(curl)"
        };
        let mut s = String::new();
        let _ = writeln!(s, "case {} ({} formulation)", self.case, self.formulation);
        let _ = writeln!(
            s,
            "{:>4} {:>12} {:>8} {:>13} {:>8} {:>13} {:>8} {:>6} {:>9}",
            "n", "h", "dofs", "L2", "rate", norm, "rate", "iters", "seconds"
        );
        let fmt_rate = |r: Option<&Option<f64>>| match r {
            None => "-".to_string(),
            Some(None) => "exact".to_string(),
            Some(Some(x)) => format!("{x:.3}"),
        };
        for (k, l) in self.levels.iter().enumerate() {
            let prev = k.checked_sub(1);
            let _ = writeln!(
                s,
                "{:>4} {:>12.6e} {:>8} {:>13.6e} {:>8} {:>13.6e} {:>8} {:>6} {:>9.3}",
                l.n,
                l.h,
                l.dofs,
                l.l2,
                fmt_rate(prev.map(|p| &self.l2_rates[p])),
                l.graph,
                fmt_rate(prev.map(|p| &self.graph_rates[p])),
                l.cg_iterations,
                l.seconds
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<stem>.txt` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.txt")), self.to_text())?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json())
    }
}

fn rates(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| {
            if w[0] <= EXACT_THRESHOLD && w[1] <= EXACT_THRESHOLD {
                None
            } else {
                Some((w[0] / w[1]).log2())
            }
        })
        .collect()
}

/// Solves `case` on `cube_mesh(2^k)` for `k = start_level .. start_level + levels`.
pub fn run_convergence(
    case: &str,
    formulation: Formulation,
    levels: usize,
    start_level: usize,
    cg: CgOptions,
) -> Result<ConvergenceReport, ConvergenceError> {
    if levels == 0 {
        return Err(ConvergenceError::NoLevels);
    }
    let c = mms::case(case)?;
    let exact = c.exact();
    let mut out = Vec::with_capacity(levels);
    for k in start_level..start_level + levels {
        let n = 1usize << k;
        let start = Instant::now();
        let m = cube_mesh(n);
        let topo =
            Topology::analyze(&m).map_err(|source| ConvergenceError::Topology { n, source })?;
        let sol = match formulation {
            Formulation::Tangential => {
                solver::solve_tangential(&m, &topo, &c.tangential_problem(&m, &topo), cg)
            }
            Formulation::Normal => {
                solver::solve_normal(&m, &topo, &c.normal_problem(&m, &topo), cg)
            }
        }
        .map_err(|source| ConvergenceError::Solve { n, source })?;
        let e = error_norms(&m, &topo.ops, &sol.u_h, &exact);
        out.push(LevelResult {
            n,
            h: m.max_edge_length(),
            dofs: sol.coefficients.len(),
            l2: e.l2,
            derivative: e.derivative,
            graph: e.graph,
            cg_iterations: sol.stats.iterations,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let graph: Vec<f64> = out.iter().map(|l| l.graph).collect();
    let l2: Vec<f64> = out.iter().map(|l| l.l2).collect();
    Ok(ConvergenceReport {
        case: case.to_string(),
        formulation: formulation.name().to_string(),
        graph_rates: rates(&graph),
        l2_rates: rates(&l2),
        exact: graph.iter().all(|&e| e <= EXACT_THRESHOLD),
        levels: out,
    })
}
