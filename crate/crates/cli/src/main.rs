//! Command-line front end: solve a configured problem, report mesh topology,
//! or run a refinement study.

use clap::{Parser, Subcommand, ValueEnum};
use curldiv::io::config::ProblemConfig;
use curldiv::io::convergence::run_convergence;
use curldiv::io::gmsh::read_gmsh;
use curldiv::io::report::topology_report;
use curldiv::io::vtk::write_vtk;
use curldiv::lift::{curl_cell_residuals, divergence_cell_residuals, LIFT_TOLERANCE};
use curldiv::solver::{
    self, validate_normal, validate_tangential, CgOptions, Formulation, Solution, ValidationReport,
};
use curldiv::whitney::{interpolate, Field, Space};
use curldiv::{Mesh, Topology};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "curldiv",
    version,
    about = "Gauged finite element solvers for the curl-div system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the problem described by a JSON config on a Gmsh mesh.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the VTK field and the JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print counts, Betti numbers and homology generators as JSON.
    Topology {
        #[arg(long)]
        mesh: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study of a manufactured solution on the unit cube.
    Convergence {
        #[arg(long)]
        case: String,
        #[arg(long)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        formulation: Which,
        /// Level k uses 2^(start_level + k) cells per side.
        #[arg(long, default_value_t = 0)]
        start_level: usize,
        /// Directory for the text and JSON tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Tangential,
    Normal,
    Both,
}

/// Exit status 1: data, validation or residual failure. 2: IO or parse failure.
#[derive(Debug)]
enum Failure {
    Data(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Data(m) | Failure::Input(m) => m,
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { mesh, config, out } => solve(&mesh, &config, &out),
        Command::Topology { mesh, out } => topology(&mesh, out.as_deref()),
        Command::Convergence {
            case,
            levels,
            formulation,
            start_level,
            out,
        } => convergence(&case, levels, formulation, start_level, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_mesh(path: &Path) -> Result<(Mesh, Topology), Failure> {
    let g = read_gmsh(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let topo = Topology::analyze(&g.mesh).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok((g.mesh, topo))
}

fn validation_json(v: &ValidationReport) -> serde_json::Value {
    json!({
        "divergence": v.divergence,
        "divergence_ok": v.divergence_ok,
        "trace": v.trace,
        "trace_ok": v.trace_ok,
        "notes": v.notes,
    })
}

fn solve(mesh: &Path, config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg =
        ProblemConfig::load(config).map_err(|e| input(format!("{}: {e}", config.display())))?;
    let (m, topo) = load_mesh(mesh)?;
    let opts = cfg.cg_options();
    let (validation, result, residuals) = match cfg.formulation() {
        Formulation::Tangential => {
            let p = cfg.tangential_problem(&m, &topo).map_err(data)?;
            let v = validate_tangential(&m, &topo.ops, &p);
            let sol = solver::solve_tangential(&m, &topo, &p, opts).map_err(data)?;
            let g_h = interpolate(&m, Space::Cell, Field::Scalar(&*p.g)).map_err(data)?;
            let r = divergence_cell_residuals(&m, &topo.ops, &sol.u_h, &g_h);
            (v, sol, r)
        }
        Formulation::Normal => {
            let p = cfg.normal_problem(&m, &topo).map_err(data)?;
            let v = validate_normal(&m, &topo.ops, &p);
            let sol = solver::solve_normal(&m, &topo, &p, opts).map_err(data)?;
            let j_h = interpolate(&m, Space::Face, Field::Vector(&*p.j)).map_err(data)?;
            let r = curl_cell_residuals(&m, &topo.ops, &sol.u_h, &j_h);
            (v, sol, r)
        }
    };
    let residuals_ok = result.diagnostics.passes(LIFT_TOLERANCE);
    write_outputs(
        &cfg,
        &m,
        &topo,
        &result,
        &validation,
        &residuals,
        residuals_ok,
        out,
    )?;
    println!(
        "{} formulation: {} unknowns, {} CG iterations, relative residual {:.3e}",
        result.formulation.name(),
        result.coefficients.len(),
        result.stats.iterations,
        result.stats.relative_residual
    );
    println!(
        "residuals: derivative {:.3e}, constraints {:.3e} ({})",
        result.diagnostics.derivative_residual,
        result.diagnostics.constraint_residual,
        if residuals_ok { "ok" } else { "FAILED" }
    );
    for note in &validation.notes {
        println!("note: {note}");
    }
    if !validation.ok() {
        return Err(Failure::Data(format!(
            "data failed compatibility checks (divergence {:.3e}, trace {:.3e})",
            validation.divergence, validation.trace
        )));
    }
    if !residuals_ok {
        return Err(Failure::Data("solution residuals exceed tolerance".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    cfg: &ProblemConfig,
    m: &Mesh,
    topo: &Topology,
    sol: &Solution,
    validation: &ValidationReport,
    residuals: &[f64],
    residuals_ok: bool,
    out: &Path,
) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| input(format!("{}: {e}", out.display())))?;
    let vtk_path = out.join(&cfg.output.vtk);
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&vtk_path)
            .map_err(|e| input(format!("{}: {e}", vtk_path.display())))?,
    );
    write_vtk(&mut file, m, &sol.u_h, Some(("residual", residuals)))
        .and_then(|()| file.flush())
        .map_err(|e| input(format!("{}: {e}", vtk_path.display())))?;
    let report = json!({
        "formulation": sol.formulation.name(),
        "n_t": m.n_tets(),
        "p": topo.p(),
        "g": topo.g(),
        "unknowns": sol.coefficients.len(),
        "cg": {
            "iterations": sol.stats.iterations,
            "relative_residual": sol.stats.relative_residual,
        },
        "residuals": {
            "derivative": sol.diagnostics.derivative_residual,
            "constraints": sol.diagnostics.constraint_residual,
            "scale": sol.diagnostics.scale,
            "ok": residuals_ok,
        },
        "validation": validation_json(validation),
    });
    let report_path = out.join(&cfg.output.report);
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(|e| input(format!("{}: {e}", report_path.display())))
}

fn topology(mesh: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let (m, topo) = load_mesh(mesh)?;
    let json = topology_report(&m, &topo).to_json();
    println!("{json}");
    if let Some(path) = out {
        std::fs::write(path, &json).map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn convergence(
    case: &str,
    levels: usize,
    which: Which,
    start_level: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let formulations: &[Formulation] = match which {
        Which::Tangential => &[Formulation::Tangential],
        Which::Normal => &[Formulation::Normal],
        Which::Both => &[Formulation::Tangential, Formulation::Normal],
    };
    for &f in formulations {
        let report =
            run_convergence(case, f, levels, start_level, CgOptions::default()).map_err(data)?;
        print!("{}", report.to_text());
        println!("total {:.3} s\n", report.total_seconds());
        if let Some(dir) = out {
            report
                .write(dir, &format!("{case}-{}", f.name()))
                .map_err(|e| input(format!("{}: {e}", dir.display())))?;
        }
    }
    Ok(())
}
