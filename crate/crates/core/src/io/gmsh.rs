//! Gmsh MSH 2.2 ASCII input and output.

use crate::mesh::{build_mesh_with_regions, Mesh, MeshError};
use crate::Point3;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

const TRIANGLE: u32 = 2;
const TETRAHEDRON: u32 = 4;

#[derive(Debug, Error)]
pub enum GmshError {
    #[error("cannot read mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported mesh format version {0} (expected 2.2 ASCII)")]
    UnsupportedVersion(String),
    #[error("line {line}, section {section}: {message}")]
    Parse {
        line: usize,
        section: &'static str,
        message: String,
    },
    #[error("file ends inside section {0}")]
    Truncated(&'static str),
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("mesh contains no tetrahedra")]
    NoTetrahedra,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone)]
pub struct GmshMesh {
    pub mesh: Mesh,
    /// Original node number of each mesh vertex.
    pub node_ids: Vec<usize>,
    /// Boundary triangles as sorted vertex triples with their physical tag.
    pub boundary_triangles: Vec<([usize; 3], i32)>,
    /// `(dimension, tag) -> name`.
    pub physical_names: BTreeMap<(u32, i32), String>,
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_in(&mut self, section: &'static str) -> Result<String, GmshError> {
        loop {
            match self.inner.next() {
                None => return Err(GmshError::Truncated(section)),
                Some(l) => {
                    self.number += 1;
                    let l = l?;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t.to_string());
                    }
                }
            }
        }
    }

    fn err(&self, section: &'static str, message: impl Into<String>) -> GmshError {
        GmshError::Parse {
            line: self.number,
            section,
            message: message.into(),
        }
    }

    fn expect_end(&mut self, section: &'static str, end: &str) -> Result<(), GmshError> {
        let l = self.next_in(section)?;
        if l == end {
            Ok(())
        } else {
            Err(self.err(section, format!("expected {end}, found '{l}'")))
        }
    }
}

fn parse<T: std::str::FromStr, R: BufRead>(
    lines: &Lines<R>,
    section: &'static str,
    tok: Option<&str>,
) -> Result<T, GmshError> {
    let tok = tok.ok_or_else(|| lines.err(section, "missing field"))?;
    tok.parse()
        .map_err(|_| lines.err(section, format!("cannot parse '{tok}'")))
}

pub fn read_gmsh(path: impl AsRef<Path>) -> Result<GmshMesh, GmshError> {
    let file = std::fs::File::open(path)?;
    parse_gmsh(std::io::BufReader::new(file))
}

pub fn parse_gmsh<R: BufRead>(reader: R) -> Result<GmshMesh, GmshError> {
    let mut lines = Lines {
        inner: reader.lines(),
        number: 0,
    };
    let mut version_seen = false;
    let mut nodes: Option<(Vec<usize>, Vec<Point3>)> = None;
    let mut tets: Vec<([usize; 4], i32)> = Vec::new();
    let mut tris: Vec<([usize; 3], i32)> = Vec::new();
    let mut elements_seen = false;
    let mut physical_names = BTreeMap::new();

    loop {
        let header = match lines.inner.next() {
            None => break,
            Some(l) => {
                lines.number += 1;
                l?.trim().to_string()
            }
        };
        match header.as_str() {
            "" => continue,
            "$MeshFormat" => {
                const S: &str = "$MeshFormat";
                let l = lines.next_in(S)?;
                let mut it = l.split_whitespace();
                let version = it.next().unwrap_or_default().to_string();
                let file_type: i32 = parse(&lines, S, it.next())?;
                if !version.starts_with("2.2") || file_type != 0 {
                    return Err(GmshError::UnsupportedVersion(format!(
                        "{version} (file type {file_type})"
                    )));
                }
                lines.expect_end(S, "$EndMeshFormat")?;
                version_seen = true;
            }
            "$PhysicalNames" => {
                const S: &str = "$PhysicalNames";
                let l = lines.next_in(S)?;
                let n: usize = parse(&lines, S, Some(&l))?;
                for _ in 0..n {
                    let l = lines.next_in(S)?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: u32 = parse(&lines, S, it.next())?;
                    let tag: i32 = parse(&lines, S, it.next())?;
                    let name = it
                        .next()
                        .unwrap_or_default()
                        .trim()
                        .trim_matches('"')
                        .to_string();
                    physical_names.insert((dim, tag), name);
                }
                lines.expect_end(S, "$EndPhysicalNames")?;
            }
            "$Nodes" => {
                const S: &str = "$Nodes";
                let l = lines.next_in(S)?;
                let n: usize = parse(&lines, S, Some(&l))?;
                let mut ids = Vec::with_capacity(n);
                let mut pts = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = lines.next_in(S)?;
                    let mut it = l.split_whitespace();
                    ids.push(parse(&lines, S, it.next())?);
                    let x: f64 = parse(&lines, S, it.next())?;
                    let y: f64 = parse(&lines, S, it.next())?;
                    let z: f64 = parse(&lines, S, it.next())?;
                    pts.push(Point3::new(x, y, z));
                }
                lines.expect_end(S, "$EndNodes")?;
                nodes = Some((ids, pts));
            }
            "$Elements" => {
                const S: &str = "$Elements";
                let l = lines.next_in(S)?;
                let n: usize = parse(&lines, S, Some(&l))?;
                for _ in 0..n {
                    let l = lines.next_in(S)?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    let kind: u32 = parse(&lines, S, fields.get(1).copied())?;
                    let ntags: usize = parse(&lines, S, fields.get(2).copied())?;
                    let physical: i32 = if ntags > 0 {
                        parse(&lines, S, fields.get(3).copied())?
                    } else {
                        0
                    };
                    let conn = &fields[(3 + ntags).min(fields.len())..];
                    let ids = |k: usize| -> Result<Vec<usize>, GmshError> {
                        if conn.len() != k {
                            return Err(lines.err(
                                S,
                                format!(
                                    "element of type {kind} needs {k} nodes, found {}",
                                    conn.len()
                                ),
                            ));
                        }
                        conn.iter().map(|t| parse(&lines, S, Some(t))).collect()
                    };
                    match kind {
                        TETRAHEDRON => {
                            let v = ids(4)?;
                            tets.push(([v[0], v[1], v[2], v[3]], physical));
                        }
                        TRIANGLE => {
                            let v = ids(3)?;
                            tris.push(([v[0], v[1], v[2]], physical));
                        }
                        _ => {}
                    }
                }
                lines.expect_end(S, "$EndElements")?;
                elements_seen = true;
            }
            other if other.starts_with("$End") => {
                return Err(lines.err("(top level)", format!("unexpected '{other}'")));
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                let section: &'static str = "(unknown section)";
                while lines.next_in(section)? != end {}
            }
            other => return Err(lines.err("(top level)", format!("unexpected '{other}'"))),
        }
    }
    if !version_seen {
        return Err(GmshError::MissingSection("$MeshFormat"));
    }
    let (ids, pts) = nodes.ok_or(GmshError::MissingSection("$Nodes"))?;
    if !elements_seen {
        return Err(GmshError::MissingSection("$Elements"));
    }
    if tets.is_empty() {
        return Err(GmshError::NoTetrahedra);
    }
    let position: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let lookup = |id: usize| {
        position.get(&id).copied().ok_or_else(|| GmshError::Parse {
            line: 0,
            section: "$Elements",
            message: format!("element references unknown node {id}"),
        })
    };
    // keep only nodes used by tetrahedra, in file order
    let mut used = vec![false; ids.len()];
    for (t, _) in &tets {
        for &id in t {
            used[lookup(id)?] = true;
        }
    }
    let mut new_index = vec![usize::MAX; ids.len()];
    let mut coords = Vec::new();
    let mut node_ids = Vec::new();
    for i in 0..ids.len() {
        if used[i] {
            new_index[i] = coords.len();
            coords.push(pts[i]);
            node_ids.push(ids[i]);
        }
    }
    let mut tet_list = Vec::with_capacity(tets.len());
    let mut regions = Vec::with_capacity(tets.len());
    for (t, r) in &tets {
        let mut v = [0; 4];
        for (k, &id) in t.iter().enumerate() {
            v[k] = new_index[lookup(id)?];
        }
        tet_list.push(v);
        regions.push(*r);
    }
    let mut boundary_triangles = Vec::new();
    for (t, r) in &tris {
        let mut v = [0; 3];
        for (k, &id) in t.iter().enumerate() {
            v[k] = new_index[lookup(id)?];
        }
        if v.contains(&usize::MAX) {
            continue;
        }
        v.sort_unstable();
        boundary_triangles.push((v, *r));
    }
    let mesh = build_mesh_with_regions(&coords, &tet_list, &regions)?;
    Ok(GmshMesh {
        mesh,
        node_ids,
        boundary_triangles,
        physical_names,
    })
}

/// Writes the mesh with its boundary triangles, tagged by boundary
/// component (`component + 1`), and its tetrahedra tagged by region.
pub fn write_gmsh<W: Write>(
    w: &mut W,
    m: &Mesh,
    boundary_tags: &[(usize, i32)],
) -> std::io::Result<()> {
    writeln!(w, "$MeshFormat\n2.2 0 8\n$EndMeshFormat")?;
    writeln!(w, "$Nodes\n{}", m.n_vertices())?;
    for (i, p) in m.vertices().iter().enumerate() {
        writeln!(w, "{} {} {} {}", i + 1, p.x, p.y, p.z)?;
    }
    writeln!(w, "$EndNodes")?;
    writeln!(w, "$Elements\n{}", boundary_tags.len() + m.n_tets())?;
    let mut id = 1;
    for &(f, tag) in boundary_tags {
        let [a, b, c] = m.faces()[f];
        writeln!(w, "{id} 2 2 {tag} {tag} {} {} {}", a + 1, b + 1, c + 1)?;
        id += 1;
    }
    for (t, v) in m.tets().iter().enumerate() {
        let r = m.region(t);
        writeln!(
            w,
            "{id} 4 2 {r} {r} {} {} {} {}",
            v[0] + 1,
            v[1] + 1,
            v[2] + 1,
            v[3] + 1
        )?;
        id += 1;
    }
    writeln!(w, "$EndElements")
}
