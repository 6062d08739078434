//! Mesh ingestion, configuration, export and the command-line workflows.

pub mod config;
pub mod convergence;
pub mod gmsh;
pub mod mms;
pub mod report;
pub mod structured;
pub mod vtk;
