//! Spanning trees, cotrees and integer homology generators of the mesh.
//!
//! The vertex-edge graph is spanned by a tree whose restriction to every
//! boundary surface is itself a spanning tree of that surface. Cotree edges
//! on the boundary whose fundamental cycles are not boundaries on the surface
//! are the closing edges; their cycles generate the first homology of the
//! boundary. Domain generators are integer combinations of those surface
//! cycles, recorded through the coefficient matrix `A`.

use crate::exact::{self, rat, Rational, SparseEliminator};
use crate::mesh::{BoundaryStructure, IncidenceOperators, Mesh, UnionFind};
use num_traits::{ToPrimitive, Zero};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("vertex graph is disconnected (vertex {vertex} unreachable)")]
    Disconnected { vertex: usize },
    #[error("boundary tree of component {component} is not a tree")]
    BoundaryTreeCycle { component: usize },
    #[error("surface rank deficiency on component {component}: {detail}")]
    RankDeficiency { component: usize, detail: String },
    #[error("inconsistent homology ranks: {0}")]
    InconsistentRanks(String),
    #[error("chain {index} is not a cycle")]
    NotACycle { index: usize },
}

/// An integer 1-chain, as `(edge, coefficient)` pairs sorted by edge.
pub type Chain = Vec<(usize, i64)>;

#[derive(Debug, Clone)]
pub struct TreeCotree {
    /// Tree edges, sorted.
    pub tree_edges: Vec<usize>,
    /// Cotree edges: the closing edges first, then the remaining cotree edges
    /// in increasing order.
    pub cotree_edges: Vec<usize>,
    /// Number of closing edges (`2g`); they occupy `cotree_edges[..n_closing]`.
    pub n_closing: usize,
    in_tree: Vec<bool>,
    cotree_position: Vec<Option<usize>>,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
}

impl TreeCotree {
    pub fn n_q(&self) -> usize {
        self.cotree_edges.len()
    }

    pub fn closing_edges(&self) -> &[usize] {
        &self.cotree_edges[..self.n_closing]
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    /// Position of `e` in the cotree ordering.
    pub fn cotree_position(&self, e: usize) -> Option<usize> {
        self.cotree_position[e]
    }

    /// Tree path from `from` to `to` as an oriented chain.
    pub fn tree_path(&self, m: &Mesh, from: usize, to: usize) -> Chain {
        let mut a = from;
        let mut b = to;
        let mut up: Vec<(usize, i64)> = Vec::new();
        let mut down: Vec<(usize, i64)> = Vec::new();
        let step = |v: usize| self.parent[v].expect("root has no parent");
        while self.depth[a] > self.depth[b] {
            let (p, e) = step(a);
            up.push((e, orient(m, e, a, p)));
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let (p, e) = step(b);
            down.push((e, orient(m, e, p, b)));
            b = p;
        }
        while a != b {
            let (pa, ea) = step(a);
            up.push((ea, orient(m, ea, a, pa)));
            a = pa;
            let (pb, eb) = step(b);
            down.push((eb, orient(m, eb, pb, b)));
            b = pb;
        }
        up.extend(down.into_iter().rev());
        normalize_chain(up)
    }

    /// Cycle closed by cotree edge `e` through the tree.
    pub fn fundamental_cycle(&self, m: &Mesh, e: usize) -> Chain {
        let [a, b] = m.edges()[e];
        let mut chain = self.tree_path(m, b, a);
        chain.push((e, 1));
        normalize_chain(chain)
    }
}

fn orient(m: &Mesh, e: usize, from: usize, to: usize) -> i64 {
    let [a, b] = m.edges()[e];
    debug_assert!((a, b) == (from, to) || (a, b) == (to, from));
    if a == from {
        1
    } else {
        -1
    }
}

fn normalize_chain(mut c: Chain) -> Chain {
    c.sort_unstable_by_key(|&(e, _)| e);
    let mut out: Chain = Vec::with_capacity(c.len());
    for (e, v) in c {
        match out.last_mut() {
            Some((le, lv)) if *le == e => *lv += v,
            _ => out.push((e, v)),
        }
    }
    out.retain(|&(_, v)| v != 0);
    out
}

/// Boundary of a 1-chain as a vertex-indexed 0-chain.
pub fn chain_boundary(m: &Mesh, chain: &Chain) -> Vec<i64> {
    let mut out = vec![0i64; m.n_vertices()];
    for &(e, c) in chain {
        let [a, b] = m.edges()[e];
        out[a] -= c;
        out[b] += c;
    }
    out
}

pub fn is_cycle(m: &Mesh, chain: &Chain) -> bool {
    chain_boundary(m, chain).iter().all(|&x| x == 0)
}

fn vertex_edges(m: &Mesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.n_vertices()];
    for (e, &[a, b]) in m.edges().iter().enumerate() {
        adj[a].push(e);
        adj[b].push(e);
    }
    adj
}

/// Boundary-first spanning tree with closing edges identified.
pub fn build_boundary_first_tree(
    m: &Mesh,
    ops: &IncidenceOperators,
    b: &BoundaryStructure,
) -> Result<TreeCotree, TopologyError> {
    let adj = vertex_edges(m);
    let other = |e: usize, v: usize| {
        let [x, y] = m.edges()[e];
        if x == v {
            y
        } else {
            x
        }
    };
    let mut uf = UnionFind::new(m.n_vertices());
    let mut in_tree = vec![false; m.n_edges()];

    for (r, comp) in b.components.iter().enumerate() {
        let mut seen = vec![false; m.n_vertices()];
        let root = comp.vertices[0];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                if b.edge_component(e) != Some(r) {
                    continue;
                }
                let w = other(e, v);
                if !seen[w] {
                    seen[w] = true;
                    if !uf.union(v, w) {
                        return Err(TopologyError::BoundaryTreeCycle { component: r });
                    }
                    in_tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
    }

    let mut visited = vec![false; m.n_vertices()];
    visited[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v] {
            let w = other(e, v);
            if uf.union(v, w) {
                in_tree[e] = true;
            }
            if !visited[w] {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(vertex) = visited.iter().position(|&x| !x) {
        return Err(TopologyError::Disconnected { vertex });
    }

    // closing edges: surface cotree edges left free by eliminating the
    // surface face relations
    let mut closing = Vec::new();
    for (r, comp) in b.components.iter().enumerate() {
        let cot: Vec<usize> = comp
            .edges
            .iter()
            .copied()
            .filter(|&e| !in_tree[e])
            .collect();
        let rows = surface_rows(ops, &comp.faces, &in_tree);
        let mut el = SparseEliminator::new(m.n_edges(), rows);
        let res = el.eliminate(&cot);
        if res.pivots.len() + 1 != comp.faces.len() {
            return Err(TopologyError::RankDeficiency {
                component: r,
                detail: format!(
                    "face relations have rank {}, expected {}",
                    res.pivots.len(),
                    comp.faces.len() - 1
                ),
            });
        }
        closing.extend(res.free);
    }
    closing.sort_unstable();

    let tree_edges: Vec<usize> = (0..m.n_edges()).filter(|&e| in_tree[e]).collect();
    let mut cotree_edges = closing.clone();
    cotree_edges
        .extend((0..m.n_edges()).filter(|&e| !in_tree[e] && closing.binary_search(&e).is_err()));
    let mut cotree_position = vec![None; m.n_edges()];
    for (i, &e) in cotree_edges.iter().enumerate() {
        cotree_position[e] = Some(i);
    }

    // rooted tree for path queries
    let mut parent = vec![None; m.n_vertices()];
    let mut depth = vec![0usize; m.n_vertices()];
    let mut seen = vec![false; m.n_vertices()];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &e in &adj[v] {
            let w = other(e, v);
            if in_tree[e] && !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, e));
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }

    Ok(TreeCotree {
        tree_edges,
        cotree_edges,
        n_closing: closing.len(),
        in_tree,
        cotree_position,
        parent,
        depth,
    })
}

/// Face boundaries restricted to non-tree edges.
fn surface_rows(
    ops: &IncidenceOperators,
    faces: &[usize],
    in_tree: &[bool],
) -> Vec<Vec<(usize, Rational)>> {
    faces
        .iter()
        .map(|&f| {
            let (cols, vals) = ops.curl.row(f);
            cols.iter()
                .zip(vals)
                .filter(|(&e, _)| !in_tree[e])
                .map(|(&e, &v)| (e, rat(v as i64)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SurfaceCycleBasis {
    /// `cycles[q]` is closed by `tc.closing_edges()[q]`.
    pub cycles: Vec<Chain>,
}

pub fn surface_cycle_basis(
    m: &Mesh,
    ops: &IncidenceOperators,
    b: &BoundaryStructure,
    tc: &TreeCotree,
) -> Result<SurfaceCycleBasis, TopologyError> {
    let cycles: Vec<Chain> = tc
        .closing_edges()
        .iter()
        .map(|&e| tc.fundamental_cycle(m, e))
        .collect();
    for (q, c) in cycles.iter().enumerate() {
        if !is_cycle(m, c) {
            return Err(TopologyError::NotACycle { index: q });
        }
        if c.iter().any(|&(e, _)| b.edge_component(e).is_none()) {
            return Err(TopologyError::RankDeficiency {
                component: 0,
                detail: format!("cycle {q} leaves the boundary"),
            });
        }
    }
    // independence modulo surface boundaries: the cycle rows together with the
    // face relations must have full rank on each component
    for (r, comp) in b.components.iter().enumerate() {
        let mut rows = surface_rows(ops, &comp.faces, tc.in_tree.as_slice());
        let mine: Vec<&Chain> = cycles
            .iter()
            .filter(|c| c.iter().any(|&(e, _)| b.edge_component(e) == Some(r)))
            .collect();
        for c in &mine {
            rows.push(
                c.iter()
                    .filter(|&&(e, _)| !tc.is_tree_edge(e))
                    .map(|&(e, v)| (e, rat(v)))
                    .collect(),
            );
        }
        let cot: Vec<usize> = comp
            .edges
            .iter()
            .copied()
            .filter(|&e| !tc.is_tree_edge(e))
            .collect();
        let rank = exact::sparse_rank(m.n_edges(), rows);
        let expected = comp.faces.len() - 1 + mine.len();
        if rank != expected || rank != cot.len() {
            return Err(TopologyError::RankDeficiency {
                component: r,
                detail: format!("surface cycles span rank {rank}, expected {expected}"),
            });
        }
    }
    Ok(SurfaceCycleBasis { cycles })
}

#[derive(Debug, Clone)]
pub struct HomologyBasis {
    /// First Betti number of the domain.
    pub g: usize,
    /// `sigma[n] = sum_q a[n][q] * gamma_q`, as an edge chain.
    pub sigma: Vec<Chain>,
    /// Integer coefficient matrix, `g x 2g`.
    pub a: Vec<Vec<i64>>,
    /// Coefficients of each `sigma[n]` on tree edges.
    pub tree_parts: Vec<Chain>,
    /// Exact basis of `ker A`.
    pub kernel: Vec<Vec<Rational>>,
}

impl HomologyBasis {
    pub fn kernel_f64(&self) -> Vec<Vec<f64>> {
        self.kernel
            .iter()
            .map(|c| c.iter().map(exact::to_f64).collect())
            .collect()
    }

    /// Line integral of an edge cochain along `sigma[n]`.
    pub fn period(&self, n: usize, edge_values: &[f64]) -> f64 {
        self.sigma[n]
            .iter()
            .map(|&(e, c)| c as f64 * edge_values[e])
            .sum()
    }
}

pub fn domain_homology_basis(
    m: &Mesh,
    ops: &IncidenceOperators,
    tc: &TreeCotree,
    scb: &SurfaceCycleBasis,
) -> Result<HomologyBasis, TopologyError> {
    let n_closing = tc.n_closing;
    let rows: Vec<Vec<(usize, Rational)>> = (0..m.n_faces())
        .map(|f| {
            let (cols, vals) = ops.curl.row(f);
            cols.iter()
                .zip(vals)
                .filter_map(|(&e, &v)| tc.cotree_position(e).map(|p| (p, rat(v as i64))))
                .collect()
        })
        .collect();
    let mut el = SparseEliminator::new(tc.n_q(), rows);
    let primary: Vec<usize> = (n_closing..tc.n_q()).collect();
    let res = el.eliminate(&primary);
    if !res.free.is_empty() {
        return Err(TopologyError::InconsistentRanks(format!(
            "{} interior cotree edges are not determined by face relations",
            res.free.len()
        )));
    }
    // remaining relations live on the closing edges only
    let mut relations: Vec<Vec<Rational>> = el
        .live_rows()
        .map(|(_, row)| {
            let mut dense = vec![Rational::zero(); n_closing];
            for (&p, v) in row {
                debug_assert!(p < n_closing);
                dense[p] = v.clone();
            }
            dense
        })
        .collect();
    let pivots = exact::rref(&mut relations);
    let g = n_closing - pivots.len();
    if 2 * g != n_closing {
        return Err(TopologyError::InconsistentRanks(format!(
            "domain first Betti number {g} is not half the surface rank {n_closing}"
        )));
    }

    // generators: surface cycles whose classes complement the relations
    let generators: Vec<usize> = (0..n_closing).filter(|q| !pivots.contains(q)).collect();
    let a: Vec<Vec<i64>> = generators
        .iter()
        .map(|&q| (0..n_closing).map(|k| i64::from(k == q)).collect())
        .collect();
    let mut sigma = Vec::with_capacity(g);
    let mut tree_parts = Vec::with_capacity(g);
    for row in &a {
        let mut chain: Chain = Vec::new();
        for (q, &coef) in row.iter().enumerate() {
            if coef != 0 {
                chain.extend(scb.cycles[q].iter().map(|&(e, c)| (e, c * coef)));
            }
        }
        let chain = normalize_chain(chain);
        tree_parts.push(
            chain
                .iter()
                .copied()
                .filter(|&(e, _)| tc.is_tree_edge(e))
                .collect(),
        );
        sigma.push(chain);
    }
    for (n, s) in sigma.iter().enumerate() {
        if !is_cycle(m, s) {
            return Err(TopologyError::NotACycle { index: n });
        }
    }

    let a_rat: Vec<Vec<Rational>> = a
        .iter()
        .map(|r| r.iter().map(|&x| rat(x)).collect())
        .collect();
    if exact::dense_rank(&a_rat) != g {
        return Err(TopologyError::InconsistentRanks("rank(A) != g".into()));
    }
    let kernel = if g == 0 {
        Vec::new()
    } else {
        exact::nullspace(&a_rat, n_closing)
    };
    if kernel.len() != g {
        return Err(TopologyError::InconsistentRanks(format!(
            "ker A has dimension {}, expected {g}",
            kernel.len()
        )));
    }
    Ok(HomologyBasis {
        g,
        sigma,
        a,
        tree_parts,
        kernel,
    })
}

/// Betti numbers `(b0, b1, b2)` from exact ranks of the incidence operators.
pub fn betti(m: &Mesh, ops: &IncidenceOperators) -> (usize, usize, usize) {
    let rg = exact::integer_rank(&ops.grad);
    let rc = exact::integer_rank(&ops.curl);
    let rd = exact::integer_rank(&ops.div);
    (
        m.n_vertices() - rg,
        m.n_edges() - rg - rc,
        m.n_faces() - rc - rd,
    )
}

/// Everything topological the solvers need, computed once per mesh.
#[derive(Debug, Clone)]
pub struct Topology {
    pub ops: IncidenceOperators,
    pub boundary: BoundaryStructure,
    pub tree: TreeCotree,
    pub surface: SurfaceCycleBasis,
    pub homology: HomologyBasis,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl Topology {
    pub fn analyze(m: &Mesh) -> Result<Self, AnalysisError> {
        let ops = crate::mesh::derive_incidence(m);
        let boundary = crate::mesh::extract_boundary(m)?;
        let tree = build_boundary_first_tree(m, &ops, &boundary)?;
        let surface = surface_cycle_basis(m, &ops, &boundary, &tree)?;
        let homology = domain_homology_basis(m, &ops, &tree, &surface)?;
        Ok(Self {
            ops,
            boundary,
            tree,
            surface,
            homology,
        })
    }

    pub fn g(&self) -> usize {
        self.homology.g
    }

    pub fn p(&self) -> usize {
        self.boundary.p()
    }
}

/// Genus of each boundary surface from its Euler characteristic.
pub fn surface_genera(b: &BoundaryStructure) -> Vec<usize> {
    b.components
        .iter()
        .map(|c| {
            let chi = c.vertices.len() as i64 - c.edges.len() as i64 + c.faces.len() as i64;
            ((2 - chi) / 2).to_usize().unwrap_or(0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::structured::{cube_mesh, hollow_ball_mesh, solid_torus_mesh};
    use crate::mesh::{build_mesh, derive_incidence, extract_boundary};
    use crate::Point3;

    fn single_tet() -> Mesh {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        build_mesh(&pts, &[[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn tree_counts() {
        let m = single_tet();
        let t = Topology::analyze(&m).unwrap();
        assert_eq!(t.tree.tree_edges.len(), 3);
        assert_eq!(t.tree.n_q(), 3);
        assert_eq!(t.tree.n_closing, 0);

        let m = cube_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        assert_eq!(t.tree.tree_edges.len(), 7);
        assert_eq!(t.tree.n_q(), 12);
        assert_eq!(t.tree.n_closing, 0);
        assert_eq!(t.g(), 0);
        assert!(t.homology.a.is_empty());
        assert!(t.homology.kernel.is_empty());
    }

    #[test]
    fn boundary_first_property() {
        for m in [cube_mesh(2), solid_torus_mesh(1), hollow_ball_mesh(1)] {
            let t = Topology::analyze(&m).unwrap();
            assert_eq!(t.tree.n_q(), m.n_edges() - (m.n_vertices() - 1));
            for comp in &t.boundary.components {
                // tree edges on the component form a spanning tree of it
                let on: Vec<usize> = comp
                    .edges
                    .iter()
                    .copied()
                    .filter(|&e| t.tree.is_tree_edge(e))
                    .collect();
                assert_eq!(on.len(), comp.vertices.len() - 1);
                let mut uf = UnionFind::new(m.n_vertices());
                for &e in &on {
                    let [a, b] = m.edges()[e];
                    assert!(uf.union(a, b));
                }
            }
            for &e in t.tree.closing_edges() {
                assert!(t.boundary.edge_component(e).is_some());
                assert!(!t.tree.is_tree_edge(e));
            }
        }
    }

    #[test]
    fn torus_homology() {
        let m = solid_torus_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        assert_eq!(t.tree.n_closing, 2);
        assert_eq!(t.g(), 1);
        assert_eq!(t.homology.a.len(), 1);
        assert_eq!(t.homology.a[0].len(), 2);
        assert_eq!(t.homology.kernel.len(), 1);
        for c in &t.homology.kernel {
            let s: Rational = t.homology.a[0]
                .iter()
                .zip(c)
                .map(|(&a, x)| rat(a) * x)
                .sum();
            assert!(s.is_zero());
        }
        for (n, s) in t.homology.sigma.iter().enumerate() {
            assert!(is_cycle(&m, s), "sigma {n}");
            // sigma = sum_q A[n][q] gamma_q exactly
            let mut acc: Chain = Vec::new();
            for (q, &a) in t.homology.a[n].iter().enumerate() {
                acc.extend(t.surface.cycles[q].iter().map(|&(e, c)| (e, a * c)));
            }
            assert_eq!(normalize_chain(acc), *s);
        }
    }

    #[test]
    fn hollow_ball_has_no_cycles() {
        let m = hollow_ball_mesh(1);
        let t = Topology::analyze(&m).unwrap();
        assert_eq!(t.tree.n_closing, 0);
        assert_eq!(t.g(), 0);
        assert_eq!(t.p(), 1);
    }

    #[test]
    fn betti_numbers() {
        let m = cube_mesh(1);
        assert_eq!(betti(&m, &derive_incidence(&m)), (1, 0, 0));
        let m = solid_torus_mesh(1);
        assert_eq!(betti(&m, &derive_incidence(&m)), (1, 1, 0));
        let m = hollow_ball_mesh(1);
        assert_eq!(betti(&m, &derive_incidence(&m)), (1, 0, 1));
    }

    #[test]
    fn betti_agrees_with_euler_and_genus() {
        for m in [cube_mesh(2), solid_torus_mesh(2), hollow_ball_mesh(1)] {
            let ops = derive_incidence(&m);
            let b = extract_boundary(&m).unwrap();
            let genus: usize = surface_genera(&b).iter().sum();
            let (b0, b1, b2) = betti(&m, &ops);
            assert_eq!((b0, b1, b2), (1, genus, b.p()));
            assert_eq!(m.euler_characteristic(), 1 - genus as i64 + b.p() as i64);
        }
    }

    #[test]
    fn surface_cycles_are_cycles() {
        let m = solid_torus_mesh(2);
        let t = Topology::analyze(&m).unwrap();
        assert_eq!(t.surface.cycles.len(), 2);
        for c in &t.surface.cycles {
            assert!(is_cycle(&m, c));
            let closing: Vec<_> = c
                .iter()
                .filter(|&&(e, _)| !t.tree.is_tree_edge(e))
                .collect();
            assert_eq!(closing.len(), 1);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut pts = single_tet().vertices().to_vec();
        pts.push(Point3::new(5.0, 5.0, 5.0));
        let m = build_mesh(&pts, &[[0, 1, 2, 3]]).unwrap();
        let err = Topology::analyze(&m).unwrap_err();
        assert!(matches!(
            err,
            AnalysisError::Topology(TopologyError::Disconnected { vertex: 4 })
        ));
    }
}
