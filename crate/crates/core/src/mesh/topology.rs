use std::collections::HashMap;

use super::{dist, edge_key, Mesh, UNTAGGED};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub nodes: [usize; 2],
    pub left: usize,
    /// `None` on the boundary.
    pub right: Option<usize>,
    /// Boundary tag; `None` for interior edges.
    pub tag: Option<i32>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    pub fn length(&self, mesh: &Mesh) -> f64 {
        dist(mesh.nodes[self.nodes[0]], mesh.nodes[self.nodes[1]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTopology {
    pub edges: Vec<Edge>,
    /// `element_edges[e][i]` is the edge from local vertex `i` to `i + 1`.
    pub element_edges: Vec<[usize; 3]>,
    /// Topological boundary edges with no entry in `mesh.boundary_edges`.
    pub untagged_boundary: usize,
}

impl EdgeTopology {
    pub fn n_interior(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn n_boundary(&self) -> usize {
        self.edges.len() - self.n_interior()
    }

    /// The element across edge `edge` from `e`, if any.
    pub fn neighbor(&self, edge: usize, e: usize) -> Option<usize> {
        let ed = &self.edges[edge];
        if ed.left == e {
            ed.right
        } else {
            Some(ed.left)
        }
    }
}

/// Builds the edge list and element-to-edge map.
///
/// Every tagged boundary edge of `mesh` must be a topological boundary edge;
/// topological boundary edges without a tag get [`UNTAGGED`].
pub fn build_topology(mesh: &Mesh) -> Result<EdgeTopology> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.n_elements() * 2);
    let mut edges: Vec<Edge> = Vec::with_capacity(mesh.n_elements() * 2);
    let mut element_edges = Vec::with_capacity(mesh.n_elements());

    for (e, el) in mesh.elements.iter().enumerate() {
        let mut local = [0usize; 3];
        for i in 0..3 {
            let key = edge_key(el.nodes[i], el.nodes[(i + 1) % 3]);
            let id = *index.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    nodes: [key.0, key.1],
                    left: e,
                    right: None,
                    tag: None,
                });
                edges.len() - 1
            });
            let edge = &mut edges[id];
            if edge.left != e {
                if let Some(right) = edge.right {
                    return Err(Error::Topology(format!(
                        "edge {key:?} is shared by more than two elements ({}, {right}, {e})",
                        edge.left
                    )));
                }
                edge.right = Some(e);
            }
            local[i] = id;
        }
        element_edges.push(local);
    }

    for be in &mesh.boundary_edges {
        let key = edge_key(be.nodes[0], be.nodes[1]);
        match index.get(&key) {
            Some(&id) if edges[id].right.is_none() => edges[id].tag = Some(be.tag),
            Some(_) => {
                return Err(Error::Topology(format!("tagged edge {key:?} is interior")));
            }
            None => {
                return Err(Error::Topology(format!(
                    "tagged edge {key:?} is not a mesh edge"
                )))
            }
        }
    }

    let mut untagged_boundary = 0;
    for edge in &mut edges {
        if edge.right.is_none() && edge.tag.is_none() {
            edge.tag = Some(UNTAGGED);
            untagged_boundary += 1;
        }
    }

    Ok(EdgeTopology {
        edges,
        element_edges,
        untagged_boundary,
    })
}

/// Counts nodes lying in the relative interior of some element edge.
///
/// Purely geometric, independent of the refinement bookkeeping. Such a node
/// can only sit on a topological boundary edge, so only those are scanned.
pub fn count_hanging_nodes(mesh: &Mesh, topo: &EdgeTopology) -> usize {
    let boundary: Vec<&Edge> = topo.edges.iter().filter(|e| e.is_boundary()).collect();
    let mut candidates: Vec<usize> = boundary.iter().flat_map(|e| e.nodes).collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return 0;
    }

    let (lo, hi) = mesh.bounding_box();
    let cells = ((candidates.len() as f64).sqrt().ceil() as usize).max(1);
    let w = [
        (hi[0] - lo[0]).max(f64::MIN_POSITIVE),
        (hi[1] - lo[1]).max(f64::MIN_POSITIVE),
    ];
    let cell_of = |x: f64, d: usize| -> usize {
        (((x - lo[d]) / w[d] * cells as f64).floor().max(0.0) as usize).min(cells - 1)
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for &n in &candidates {
        let p = mesh.nodes[n];
        grid[cell_of(p[0], 0) * cells + cell_of(p[1], 1)].push(n);
    }

    let mut hanging = std::collections::HashSet::new();
    for edge in boundary {
        let a = mesh.nodes[edge.nodes[0]];
        let b = mesh.nodes[edge.nodes[1]];
        let len = dist(a, b);
        let (i0, i1) = (cell_of(a[0].min(b[0]), 0), cell_of(a[0].max(b[0]), 0));
        let (j0, j1) = (cell_of(a[1].min(b[1]), 1), cell_of(a[1].max(b[1]), 1));
        for i in i0..=i1 {
            for j in j0..=j1 {
                for &n in &grid[i * cells + j] {
                    if edge.nodes.contains(&n) {
                        continue;
                    }
                    let p = mesh.nodes[n];
                    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]))
                        / (len * len);
                    if t <= 1e-9 || t >= 1.0 - 1e-9 {
                        continue;
                    }
                    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                    if cross.abs() <= 1e-9 * len * len {
                        hanging.insert(n);
                    }
                }
            }
        }
    }
    hanging.len()
}
