//! Oriented tetrahedral complex and its signed incidence operators.
//!
//! Vertices carry a total order (their index). Every edge `[a, b]` and face
//! `[a, b, c]` is stored with strictly increasing vertex indices, which fixes
//! its orientation: the tangent runs from `a` to `b`, and the face normal
//! follows the right-hand rule `(v_b - v_a) x (v_c - v_a)`. Tetrahedra are
//! stored with sorted vertices too, so every local edge and face of a cell
//! already carries its global orientation.

use crate::sparse::CsrMatrix;
use crate::{Point3, Vec3};
use nalgebra::Matrix3;
use thiserror::Error;

/// Local edges of a sorted tetrahedron, as pairs of local vertex indices.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces of a sorted tetrahedron; face `i` is opposite local vertex `i`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Local edges of a sorted triangle.
pub const TRI_EDGES: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];

const DEGENERATE_VOLUME_FACTOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteCoordinate { vertex: usize },
    #[error("tetrahedron {tet} references vertex {index}, but only {n_vertices} vertices exist")]
    IndexOutOfRange {
        tet: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("tetrahedron {tet} is degenerate (volume {volume:e})")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("tetrahedron {tet} duplicates tetrahedron {first}")]
    DuplicateTet { tet: usize, first: usize },
    #[error("face {face:?} is shared by more than two tetrahedra")]
    NonManifoldFace { face: [usize; 3] },
    #[error("boundary is empty; closed complexes are not supported")]
    EmptyBoundary,
    #[error("boundary edge {edge:?} has {count} adjacent faces in its component")]
    NonManifoldBoundaryEdge { edge: [usize; 2], count: usize },
}

/// Affine data of one tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct TetGeometry {
    pub points: [Point3; 4],
    /// Gradients of the barycentric coordinates.
    pub grads: [Vec3; 4],
    /// Positive volume.
    pub volume: f64,
    /// +1 when the sorted vertex order is positively oriented.
    pub orientation: i8,
}

impl TetGeometry {
    pub fn new(points: [Point3; 4]) -> Self {
        let jac = Matrix3::from_columns(&[
            points[1] - points[0],
            points[2] - points[0],
            points[3] - points[0],
        ]);
        let det = jac.determinant();
        let inv = jac.try_inverse().unwrap_or_else(Matrix3::zeros);
        let g1: Vec3 = inv.row(0).transpose();
        let g2: Vec3 = inv.row(1).transpose();
        let g3: Vec3 = inv.row(2).transpose();
        Self {
            points,
            grads: [-(g1 + g2 + g3), g1, g2, g3],
            volume: det.abs() / 6.0,
            orientation: if det >= 0.0 { 1 } else { -1 },
        }
    }

    pub fn barycentric(&self, p: &Point3) -> [f64; 4] {
        let d = p - self.points[0];
        let l1 = self.grads[1].dot(&d);
        let l2 = self.grads[2].dot(&d);
        let l3 = self.grads[3].dot(&d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    pub fn point_at(&self, bary: &[f64; 4]) -> Point3 {
        let mut v = Vec3::zeros();
        for (p, &w) in self.points.iter().zip(bary) {
            v += p.coords * w;
        }
        Point3::from(v)
    }

    pub fn centroid(&self) -> Point3 {
        self.point_at(&[0.25; 4])
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point3>,
    tets: Vec<[usize; 4]>,
    regions: Vec<i32>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    tet_faces: Vec<[usize; 4]>,
    face_tets: Vec<Vec<usize>>,
    geometry: Vec<TetGeometry>,
}

/// Builds the complex with every cell in region 0.
pub fn build_mesh(coords: &[Point3], tet_list: &[[usize; 4]]) -> Result<Mesh, MeshError> {
    build_mesh_with_regions(coords, tet_list, &vec![0; tet_list.len()])
}

pub fn build_mesh_with_regions(
    coords: &[Point3],
    tet_list: &[[usize; 4]],
    regions: &[i32],
) -> Result<Mesh, MeshError> {
    assert_eq!(tet_list.len(), regions.len());
    if tet_list.is_empty() {
        return Err(MeshError::Empty);
    }
    for (i, p) in coords.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(MeshError::NonFiniteCoordinate { vertex: i });
        }
    }
    let n_v = coords.len();
    let (lo, hi) = bounding_box(coords.iter());
    let diag = (hi - lo).norm();
    let min_volume = DEGENERATE_VOLUME_FACTOR * diag.powi(3);

    let mut tets = Vec::with_capacity(tet_list.len());
    let mut geometry = Vec::with_capacity(tet_list.len());
    for (t, tet) in tet_list.iter().enumerate() {
        if let Some(&index) = tet.iter().find(|&&v| v >= n_v) {
            return Err(MeshError::IndexOutOfRange {
                tet: t,
                index,
                n_vertices: n_v,
            });
        }
        let mut s = *tet;
        s.sort_unstable();
        let geo = TetGeometry::new(s.map(|v| coords[v]));
        let distinct = s.windows(2).all(|w| w[0] != w[1]);
        if !distinct || geo.volume < min_volume || !geo.volume.is_finite() {
            return Err(MeshError::DegenerateTet {
                tet: t,
                volume: if distinct { geo.volume } else { 0.0 },
            });
        }
        tets.push(s);
        geometry.push(geo);
    }

    let mut order: Vec<usize> = (0..tets.len()).collect();
    order.sort_by_key(|&t| tets[t]);
    for w in order.windows(2) {
        if tets[w[0]] == tets[w[1]] {
            let (first, tet) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(MeshError::DuplicateTet { tet, first });
        }
    }

    let mut edges: Vec<[usize; 2]> = tets
        .iter()
        .flat_map(|t| TET_EDGES.map(|[a, b]| [t[a], t[b]]))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let mut faces: Vec<[usize; 3]> = tets
        .iter()
        .flat_map(|t| TET_FACES.map(|[a, b, c]| [t[a], t[b], t[c]]))
        .collect();
    faces.sort_unstable();
    faces.dedup();

    let tet_edges: Vec<[usize; 6]> = tets
        .iter()
        .map(|t| TET_EDGES.map(|[a, b]| edges.binary_search(&[t[a], t[b]]).unwrap()))
        .collect();
    let tet_faces: Vec<[usize; 4]> = tets
        .iter()
        .map(|t| TET_FACES.map(|[a, b, c]| faces.binary_search(&[t[a], t[b], t[c]]).unwrap()))
        .collect();
    let mut face_tets = vec![Vec::with_capacity(2); faces.len()];
    for (t, fs) in tet_faces.iter().enumerate() {
        for &f in fs {
            face_tets[f].push(t);
            if face_tets[f].len() > 2 {
                return Err(MeshError::NonManifoldFace { face: faces[f] });
            }
        }
    }

    Ok(Mesh {
        vertices: coords.to_vec(),
        tets,
        regions: regions.to_vec(),
        edges,
        faces,
        tet_edges,
        tet_faces,
        face_tets,
        geometry,
    })
}

pub(crate) fn bounding_box<'a>(points: impl Iterator<Item = &'a Point3>) -> (Point3, Point3) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }
    pub fn vertex(&self, v: usize) -> &Point3 {
        &self.vertices[v]
    }
    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }
    pub fn regions(&self) -> &[i32] {
        &self.regions
    }
    pub fn region(&self, t: usize) -> i32 {
        self.regions[t]
    }
    pub fn tet_edges(&self, t: usize) -> &[usize; 6] {
        &self.tet_edges[t]
    }
    pub fn tet_faces(&self, t: usize) -> &[usize; 4] {
        &self.tet_faces[t]
    }
    /// Tetrahedra adjacent to face `f` (one or two).
    pub fn face_tets(&self, f: usize) -> &[usize] {
        &self.face_tets[f]
    }
    pub fn geometry(&self, t: usize) -> &TetGeometry {
        &self.geometry[t]
    }
    pub fn volume(&self, t: usize) -> f64 {
        self.geometry[t].volume
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edges.binary_search(&key).ok()
    }

    pub fn face_index(&self, mut key: [usize; 3]) -> Option<usize> {
        key.sort_unstable();
        self.faces.binary_search(&key).ok()
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_tets[f].len() == 1
    }

    /// Unit tangent of edge `[a, b]`, pointing from `a` to `b`.
    pub fn edge_tangent(&self, e: usize) -> Vec3 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).normalize()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// `(v_b - v_a) x (v_c - v_a)`: twice the area times the unit normal.
    pub fn face_area_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        let pa = self.vertices[a];
        (self.vertices[b] - pa).cross(&(self.vertices[c] - pa))
    }

    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_area_normal(f).normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_area_normal(f).norm()
    }

    pub fn face_points(&self, f: usize) -> [Point3; 3] {
        self.faces[f].map(|v| self.vertices[v])
    }

    /// +1 if the face normal points out of tetrahedron `t`.
    pub fn face_sign(&self, t: usize, local_face: usize) -> i8 {
        let parity = if local_face.is_multiple_of(2) { 1 } else { -1 };
        parity * self.geometry[t].orientation
    }

    /// Largest edge length.
    pub fn max_edge_length(&self) -> f64 {
        (0..self.n_edges())
            .map(|e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
            - self.n_tets() as i64
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        bounding_box(self.vertices.iter())
    }

    /// Tetrahedron containing `p`, if any.
    pub fn locate(&self, p: &Point3) -> Option<usize> {
        (0..self.n_tets()).find(|&t| {
            self.geometry[t]
                .barycentric(p)
                .iter()
                .all(|&l| l >= -crate::whitney::INSIDE_TOLERANCE)
        })
    }
}

/// Signed incidence matrices realizing grad, curl and div on cochains.
#[derive(Debug, Clone)]
pub struct IncidenceOperators {
    /// Edge-vertex, `n_e x n_v`.
    pub grad: CsrMatrix<i32>,
    /// Face-edge, `n_f x n_e`.
    pub curl: CsrMatrix<i32>,
    /// Tet-face, `n_t x n_f`.
    pub div: CsrMatrix<i32>,
}

pub fn derive_incidence(m: &Mesh) -> IncidenceOperators {
    let mut g = Vec::with_capacity(2 * m.n_edges());
    for (e, &[a, b]) in m.edges().iter().enumerate() {
        g.push((e, a, -1));
        g.push((e, b, 1));
    }
    let mut c = Vec::with_capacity(3 * m.n_faces());
    for (f, &[a, b, cc]) in m.faces().iter().enumerate() {
        // boundary of [a,b,c] is [b,c] - [a,c] + [a,b]
        c.push((f, m.edge_index(a, b).unwrap(), 1));
        c.push((f, m.edge_index(b, cc).unwrap(), 1));
        c.push((f, m.edge_index(a, cc).unwrap(), -1));
    }
    let mut d = Vec::with_capacity(4 * m.n_tets());
    for t in 0..m.n_tets() {
        for (i, &f) in m.tet_faces(t).iter().enumerate() {
            d.push((t, f, m.face_sign(t, i) as i32));
        }
    }
    IncidenceOperators {
        grad: CsrMatrix::from_triplets(m.n_edges(), m.n_vertices(), g),
        curl: CsrMatrix::from_triplets(m.n_faces(), m.n_edges(), c),
        div: CsrMatrix::from_triplets(m.n_tets(), m.n_faces(), d),
    }
}

/// One connected component of the boundary surface.
#[derive(Debug, Clone)]
pub struct BoundaryComponent {
    pub faces: Vec<usize>,
    /// +1 where the stored face normal points out of the domain.
    pub outward: Vec<i8>,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

impl BoundaryComponent {
    /// Net outward flux of an RT coefficient vector through this component.
    pub fn flux(&self, rt_coeffs: &[f64]) -> f64 {
        self.faces
            .iter()
            .zip(&self.outward)
            .map(|(&f, &s)| s as f64 * rt_coeffs[f])
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryStructure {
    /// Component 0 is the external one.
    pub components: Vec<BoundaryComponent>,
    face_component: Vec<Option<usize>>,
    edge_component: Vec<Option<usize>>,
    vertex_component: Vec<Option<usize>>,
}

impl BoundaryStructure {
    /// Number of internal components, `p`.
    pub fn p(&self) -> usize {
        self.components.len() - 1
    }

    pub fn external_index(&self) -> usize {
        0
    }

    pub fn face_component(&self, f: usize) -> Option<usize> {
        self.face_component[f]
    }

    pub fn edge_component(&self, e: usize) -> Option<usize> {
        self.edge_component[e]
    }

    pub fn vertex_component(&self, v: usize) -> Option<usize> {
        self.vertex_component[v]
    }

    /// All boundary faces with their outward sign, in increasing face order.
    pub fn boundary_faces(&self) -> Vec<(usize, i8)> {
        let mut out: Vec<(usize, i8)> = self
            .components
            .iter()
            .flat_map(|c| c.faces.iter().copied().zip(c.outward.iter().copied()))
            .collect();
        out.sort_unstable();
        out
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// Groups boundary faces into connected surfaces via shared edges.
pub fn extract_boundary(m: &Mesh) -> Result<BoundaryStructure, MeshError> {
    let bfaces: Vec<usize> = (0..m.n_faces())
        .filter(|&f| m.is_boundary_face(f))
        .collect();
    if bfaces.is_empty() {
        return Err(MeshError::EmptyBoundary);
    }
    // boundary edge -> boundary faces (positions in `bfaces`)
    let mut edge_faces: Vec<Vec<usize>> = vec![Vec::new(); m.n_edges()];
    for (k, &f) in bfaces.iter().enumerate() {
        let [a, b, c] = m.faces()[f];
        for (x, y) in [(a, b), (b, c), (a, c)] {
            edge_faces[m.edge_index(x, y).unwrap()].push(k);
        }
    }
    let mut uf = UnionFind::new(bfaces.len());
    for fs in &edge_faces {
        for w in fs.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for k in 0..bfaces.len() {
        groups.entry(uf.find(k)).or_default().push(bfaces[k]);
    }

    let mut components = Vec::with_capacity(groups.len());
    for faces in groups.into_values() {
        let outward = faces
            .iter()
            .map(|&f| {
                let t = m.face_tets(f)[0];
                let local = m.tet_faces(t).iter().position(|&x| x == f).unwrap();
                m.face_sign(t, local)
            })
            .collect();
        let mut edges = Vec::new();
        let mut vertices = Vec::new();
        for &f in &faces {
            let [a, b, c] = m.faces()[f];
            vertices.extend([a, b, c]);
            for (x, y) in [(a, b), (b, c), (a, c)] {
                edges.push(m.edge_index(x, y).unwrap());
            }
        }
        edges.sort_unstable();
        edges.dedup();
        vertices.sort_unstable();
        vertices.dedup();
        for &e in &edges {
            let count = edge_faces[e].len();
            if count != 2 {
                return Err(MeshError::NonManifoldBoundaryEdge {
                    edge: m.edges()[e],
                    count,
                });
            }
        }
        components.push(BoundaryComponent {
            faces,
            outward,
            edges,
            vertices,
        });
    }

    // the external component's bounding box encloses every other one
    let boxes: Vec<(Point3, Point3)> = components
        .iter()
        .map(|c| bounding_box(c.vertices.iter().map(|&v| m.vertex(v))))
        .collect();
    let encloses = |i: usize, j: usize| {
        let (lo_i, hi_i) = boxes[i];
        let (lo_j, hi_j) = boxes[j];
        (0..3).all(|k| lo_i[k] <= lo_j[k] && hi_i[k] >= hi_j[k])
    };
    let external = (0..components.len())
        .find(|&i| (0..components.len()).all(|j| encloses(i, j)))
        .unwrap_or_else(|| {
            // fall back to the largest box
            (0..components.len())
                .max_by(|&i, &j| {
                    let di = (boxes[i].1 - boxes[i].0).norm();
                    let dj = (boxes[j].1 - boxes[j].0).norm();
                    di.total_cmp(&dj)
                })
                .unwrap()
        });
    let ext = components.remove(external);
    components.insert(0, ext);

    let mut face_component = vec![None; m.n_faces()];
    let mut edge_component = vec![None; m.n_edges()];
    let mut vertex_component = vec![None; m.n_vertices()];
    for (r, c) in components.iter().enumerate() {
        c.faces.iter().for_each(|&f| face_component[f] = Some(r));
        c.edges.iter().for_each(|&e| edge_component[e] = Some(r));
        c.vertices
            .iter()
            .for_each(|&v| vertex_component[v] = Some(r));
    }
    Ok(BoundaryStructure {
        components,
        face_component,
        edge_component,
        vertex_component,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::structured::{cube_mesh, hollow_ball_mesh, solid_torus_mesh};

    fn unit_tet() -> Mesh {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        build_mesh(&pts, &[[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn single_tet_counts() {
        let m = unit_tet();
        assert_eq!(
            (m.n_vertices(), m.n_edges(), m.n_faces(), m.n_tets()),
            (4, 6, 4, 1)
        );
    }

    #[test]
    fn kuhn_cube_counts() {
        let m = cube_mesh(1);
        assert_eq!(
            (m.n_vertices(), m.n_edges(), m.n_faces(), m.n_tets()),
            (8, 19, 18, 6)
        );
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let err = build_mesh(&pts, &[[0, 1, 2, 2]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateTet { tet: 0, .. }));
    }

    #[test]
    fn flat_tet_is_degenerate() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        assert!(matches!(
            build_mesh(&pts, &[[0, 1, 2, 3]]),
            Err(MeshError::DegenerateTet { .. })
        ));
    }

    #[test]
    fn duplicate_and_out_of_range() {
        let m = unit_tet();
        let pts = m.vertices().to_vec();
        assert_eq!(
            build_mesh(&pts, &[[0, 1, 2, 3], [3, 2, 1, 0]]).unwrap_err(),
            MeshError::DuplicateTet { tet: 1, first: 0 }
        );
        assert!(matches!(
            build_mesh(&pts, &[[0, 1, 2, 7]]),
            Err(MeshError::IndexOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn non_manifold_face() {
        let pts = [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(1.0, 1.0, 1.0),
        ];
        let err = build_mesh(&pts, &[[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]]).unwrap_err();
        assert_eq!(err, MeshError::NonManifoldFace { face: [0, 1, 2] });
    }

    #[test]
    fn incidence_rows_follow_orientation() {
        let m = unit_tet();
        let ops = derive_incidence(&m);
        // edge [v0, v1]
        assert_eq!(ops.grad.get(0, 0), -1);
        assert_eq!(ops.grad.get(0, 1), 1);
        // face [v0,v1,v2]: +[v0,v1] +[v1,v2] -[v0,v2]
        let f = m.face_index([0, 1, 2]).unwrap();
        assert_eq!(ops.curl.get(f, m.edge_index(0, 1).unwrap()), 1);
        assert_eq!(ops.curl.get(f, m.edge_index(1, 2).unwrap()), 1);
        assert_eq!(ops.curl.get(f, m.edge_index(0, 2).unwrap()), -1);
        // reference tet: [1,2,3] normal (1,1,1) points out, [0,1,2] normal +z points in
        assert_eq!(ops.div.get(0, m.face_index([1, 2, 3]).unwrap()), 1);
        assert_eq!(ops.div.get(0, m.face_index([0, 1, 2]).unwrap()), -1);
    }

    #[test]
    fn div_sign_matches_geometry() {
        for m in [cube_mesh(2), solid_torus_mesh(1), hollow_ball_mesh(1)] {
            let ops = derive_incidence(&m);
            for t in 0..m.n_tets() {
                let c = m.geometry(t).centroid();
                for &f in m.tet_faces(t) {
                    let fc = m
                        .face_points(f)
                        .iter()
                        .fold(Vec3::zeros(), |a, p| a + p.coords)
                        / 3.0;
                    let outward = m.face_normal(f).dot(&(fc - c.coords)) > 0.0;
                    assert_eq!(ops.div.get(t, f) == 1, outward);
                }
            }
        }
    }

    #[test]
    fn complex_identities_exact() {
        for m in [
            unit_tet(),
            cube_mesh(2),
            solid_torus_mesh(1),
            hollow_ball_mesh(1),
        ] {
            let ops = derive_incidence(&m);
            assert_eq!(ops.curl.matmul(&ops.grad).nnz(), 0);
            assert_eq!(ops.div.matmul(&ops.curl).nnz(), 0);
        }
    }

    #[test]
    fn boundary_components() {
        let b = extract_boundary(&cube_mesh(2)).unwrap();
        assert_eq!(b.p(), 0);
        let b = extract_boundary(&solid_torus_mesh(1)).unwrap();
        assert_eq!(b.p(), 0);
        let m = hollow_ball_mesh(1);
        let b = extract_boundary(&m).unwrap();
        assert_eq!(b.p(), 1);
        let (lo0, hi0) = bounding_box(b.components[0].vertices.iter().map(|&v| m.vertex(v)));
        let (lo1, hi1) = bounding_box(b.components[1].vertices.iter().map(|&v| m.vertex(v)));
        assert!((hi0 - lo0).norm() > (hi1 - lo1).norm());
    }

    #[test]
    fn euler_poincare_on_fixtures() {
        assert_eq!(cube_mesh(3).euler_characteristic(), 1);
        assert_eq!(solid_torus_mesh(1).euler_characteristic(), 0);
        assert_eq!(hollow_ball_mesh(1).euler_characteristic(), 2);
    }

    #[test]
    fn numbering_is_deterministic() {
        let a = cube_mesh(2);
        let b = build_mesh(a.vertices(), a.tets()).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.faces(), b.faces());
    }
}
