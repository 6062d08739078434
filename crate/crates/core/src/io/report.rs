//! JSON topology report.

use crate::mesh::Mesh;
use crate::topology::{betti, surface_genera, Chain, Topology};
use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CycleEdge {
    pub edge: usize,
    pub vertices: [usize; 2],
    pub coefficient: i64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TopologyReport {
    pub n_v: usize,
    pub n_e: usize,
    pub n_f: usize,
    pub n_t: usize,
    /// Internal boundary components.
    pub p: usize,
    /// First Betti number of the domain.
    pub g: usize,
    pub betti: [usize; 3],
    pub euler_characteristic: i64,
    pub surface_genera: Vec<usize>,
    pub n_q: usize,
    /// `n_Q - g`.
    pub dim_w0h: usize,
    pub closing_edges: Vec<usize>,
    pub surface_cycles: Vec<Vec<CycleEdge>>,
    pub domain_cycles: Vec<Vec<CycleEdge>>,
    /// Coefficients of the domain cycles in the surface cycles.
    pub a: Vec<Vec<i64>>,
}

fn edge_list(m: &Mesh, chain: &Chain) -> Vec<CycleEdge> {
    chain
        .iter()
        .map(|&(edge, coefficient)| CycleEdge {
            edge,
            vertices: m.edges()[edge],
            coefficient,
        })
        .collect()
}

pub fn topology_report(m: &Mesh, topo: &Topology) -> TopologyReport {
    let (b0, b1, b2) = betti(m, &topo.ops);
    let n_q = topo.tree.n_q();
    let g = topo.g();
    TopologyReport {
        n_v: m.n_vertices(),
        n_e: m.n_edges(),
        n_f: m.n_faces(),
        n_t: m.n_tets(),
        p: topo.p(),
        g,
        betti: [b0, b1, b2],
        euler_characteristic: m.euler_characteristic(),
        surface_genera: surface_genera(&topo.boundary),
        n_q,
        dim_w0h: n_q - g,
        closing_edges: topo.tree.closing_edges().to_vec(),
        surface_cycles: topo
            .surface
            .cycles
            .iter()
            .map(|c| edge_list(m, c))
            .collect(),
        domain_cycles: topo
            .homology
            .sigma
            .iter()
            .map(|c| edge_list(m, c))
            .collect(),
        a: topo.homology.a.clone(),
    }
}

impl TopologyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
