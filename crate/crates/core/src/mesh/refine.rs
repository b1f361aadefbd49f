//! Conforming red-green refinement.
//!
//! Marked triangles are split red (four similar children, all edges halved).
//! Closure: a triangle with two or more bisected edges is promoted to red, a
//! triangle with exactly one bisected edge is split green (median from the
//! opposite vertex). Green halves are never split again: whenever a green half
//! is marked or receives a bisected edge, the pair is merged back into its
//! parent and the parent is split red instead.

use std::collections::{HashMap, VecDeque};

use super::{build_topology, edge_key, BoundaryEdge, Element, GreenParent, Mesh};
use crate::{Error, Point, Result};

#[derive(Debug, Clone)]
pub struct RefinementResult {
    pub mesh: Mesh,
    /// For every element of the new mesh, the input element it came from.
    pub parent: Vec<usize>,
    /// Number of distinct marked elements that were refined.
    pub n_refined: usize,
    /// Endpoints of the edge each new node bisects, for nodes
    /// `input.n_nodes()..` in order.
    pub new_node_parents: Vec<[usize; 2]>,
}

impl RefinementResult {
    fn unchanged(mesh: &Mesh) -> Self {
        Self {
            mesh: mesh.clone(),
            parent: (0..mesh.n_elements()).collect(),
            n_refined: 0,
            new_node_parents: Vec::new(),
        }
    }

    /// Interpolates nodal data of the input mesh onto the refined mesh.
    /// New nodes take the mean of their edge endpoints.
    pub fn prolongate<T: Copy>(&self, values: &[T], mean: impl Fn(T, T) -> T) -> Vec<T> {
        let mut out = values.to_vec();
        for &[a, b] in &self.new_node_parents {
            let v = mean(out[a], out[b]);
            out.push(v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Origin {
    Input(usize),
    /// A red child of a parent restored from a green pair, owned by the
    /// input half it overlaps.
    Restored(usize),
}

#[derive(Debug, Clone)]
struct WorkTri {
    nodes: [usize; 3],
    generation: u32,
    green: Option<GreenParent>,
    tag: i32,
    origin: Origin,
    red: bool,
    alive: bool,
}

struct Closure<'a> {
    mesh: &'a Mesh,
    tris: Vec<WorkTri>,
    by_edge: HashMap<(usize, usize), Vec<usize>>,
    /// Bisected edges and their midpoint node.
    midpoint: HashMap<(usize, usize), usize>,
    new_nodes: Vec<Point>,
    new_node_parents: Vec<[usize; 2]>,
    boundary_tag: HashMap<(usize, usize), i32>,
    green_pairs: HashMap<[usize; 3], Vec<usize>>,
    queue: VecDeque<usize>,
}

impl<'a> Closure<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let mut by_edge: HashMap<(usize, usize), Vec<usize>> =
            HashMap::with_capacity(mesh.n_elements() * 2);
        let mut green_pairs: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        let mut midpoint = HashMap::new();
        let mut tris = Vec::with_capacity(mesh.n_elements());
        for (e, el) in mesh.elements.iter().enumerate() {
            for i in 0..3 {
                by_edge
                    .entry(edge_key(el.nodes[i], el.nodes[(i + 1) % 3]))
                    .or_default()
                    .push(e);
            }
            if let Some(g) = el.green {
                green_pairs.entry(g.nodes).or_default().push(e);
                let split = green_split_edge(&g);
                midpoint.insert(edge_key(split[0], split[1]), g.midpoint);
            }
            tris.push(WorkTri {
                nodes: el.nodes,
                generation: el.generation,
                green: el.green,
                tag: mesh.element_tags[e],
                origin: Origin::Input(e),
                red: false,
                alive: true,
            });
        }
        let boundary_tag = mesh
            .boundary_edges
            .iter()
            .map(|b| (edge_key(b.nodes[0], b.nodes[1]), b.tag))
            .collect();
        Self {
            mesh,
            tris,
            by_edge,
            midpoint,
            new_nodes: Vec::new(),
            new_node_parents: Vec::new(),
            boundary_tag,
            green_pairs,
            queue: VecDeque::new(),
        }
    }

    fn edges_of(nodes: &[usize; 3]) -> [(usize, usize); 3] {
        [
            edge_key(nodes[0], nodes[1]),
            edge_key(nodes[1], nodes[2]),
            edge_key(nodes[2], nodes[0]),
        ]
    }

    fn bisected_count(&self, t: usize) -> usize {
        Self::edges_of(&self.tris[t].nodes)
            .iter()
            .filter(|k| self.midpoint.contains_key(k))
            .count()
    }

    fn node(&self, i: usize) -> Point {
        let n = self.mesh.n_nodes();
        if i < n {
            self.mesh.nodes[i]
        } else {
            self.new_nodes[i - n]
        }
    }

    fn bisect(&mut self, key: (usize, usize)) {
        if self.midpoint.contains_key(&key) {
            return;
        }
        let (a, b) = (self.node(key.0), self.node(key.1));
        let mut p = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if let Some(tag) = self.boundary_tag.get(&key) {
            if let Some(curve) = self.mesh.curve_for_tag(*tag) {
                p = curve.project(p);
            }
        }
        let id = self.mesh.n_nodes() + self.new_nodes.len();
        self.new_nodes.push(p);
        self.new_node_parents.push([key.0, key.1]);
        self.midpoint.insert(key, id);
        if let Some(ts) = self.by_edge.get(&key) {
            self.queue.extend(ts.iter().copied());
        }
    }

    fn kill(&mut self, t: usize) {
        self.tris[t].alive = false;
        for k in Self::edges_of(&self.tris[t].nodes) {
            if let Some(v) = self.by_edge.get_mut(&k) {
                v.retain(|&x| x != t);
            }
        }
    }

    /// Merges the green pair containing `t` back into its parent and splits
    /// the parent red. The four children join the closure as ordinary
    /// triangles.
    fn ungreen(&mut self, t: usize) -> Result<()> {
        let g = self.tris[t]
            .green
            .expect("ungreen called on a non-green triangle");
        let pair: Vec<usize> = self
            .green_pairs
            .get(&g.nodes)
            .map(|v| v.iter().copied().filter(|&s| self.tris[s].alive).collect())
            .unwrap_or_default();
        if pair.len() != 2 || !pair.contains(&t) {
            return Err(Error::Invariant(format!(
                "green element with parent {:?} has {} live halves",
                g.nodes,
                pair.len()
            )));
        }
        let input_index = |s: usize| match self.tris[s].origin {
            Origin::Input(e) => Ok(e),
            Origin::Restored(_) => Err(Error::Invariant("restored child flagged green".into())),
        };
        let halves = [input_index(pair[0])?, input_index(pair[1])?];
        let (generation, tag) = (self.tris[t].generation, self.tris[t].tag);
        for &s in &pair {
            self.kill(s);
        }
        // p -> q is the split edge; the halves are (p, m, r) and (m, q, r)
        let [p, q, r] = g.nodes;
        let with_p = if self.mesh.elements[halves[0]].nodes.contains(&p) {
            halves[0]
        } else {
            halves[1]
        };
        let with_q = if with_p == halves[0] {
            halves[1]
        } else {
            halves[0]
        };
        self.bisect(edge_key(q, r));
        self.bisect(edge_key(r, p));
        let mid = |x: usize, y: usize| self.midpoint[&edge_key(x, y)];
        let (pq, qr, rp) = (mid(p, q), mid(q, r), mid(r, p));
        let children = [
            ([p, pq, rp], with_p),
            ([pq, q, qr], with_q),
            ([rp, qr, r], with_p),
            ([pq, qr, rp], with_q),
        ];
        for (nodes, owner) in children {
            let id = self.tris.len();
            self.tris.push(WorkTri {
                nodes,
                generation,
                green: None,
                tag,
                origin: Origin::Restored(owner),
                red: false,
                alive: true,
            });
            for k in Self::edges_of(&nodes) {
                self.by_edge.entry(k).or_default().push(id);
            }
            self.queue.push_back(id);
        }
        Ok(())
    }

    fn run(&mut self, marked: &[usize]) -> Result<()> {
        for &e in marked {
            if !self.tris[e].alive {
                // the other half of an already merged green pair
                continue;
            }
            if self.tris[e].green.is_some() {
                self.ungreen(e)?;
            } else {
                self.tris[e].red = true;
                self.queue.push_back(e);
            }
        }
        while let Some(t) = self.queue.pop_front() {
            if !self.tris[t].alive {
                continue;
            }
            if self.tris[t].red {
                for k in Self::edges_of(&self.tris[t].nodes) {
                    self.bisect(k);
                }
                continue;
            }
            let count = self.bisected_count(t);
            if count == 0 {
                continue;
            }
            if self.tris[t].green.is_some() {
                self.ungreen(t)?;
            } else if count >= 2 {
                self.tris[t].red = true;
                self.queue.push_back(t);
            }
        }
        Ok(())
    }

    fn finish(self, n_refined: usize) -> Result<RefinementResult> {
        let mut nodes = self.mesh.nodes.clone();
        nodes.extend_from_slice(&self.new_nodes);
        let mut elements = Vec::new();
        let mut tags = Vec::new();
        let mut parent = Vec::new();

        for t in self.tris.iter().filter(|t| t.alive) {
            let owner = match t.origin {
                Origin::Input(e) | Origin::Restored(e) => e,
            };
            let [a, b, c] = t.nodes;
            if t.red {
                let mid = |x: usize, y: usize| self.midpoint[&edge_key(x, y)];
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                // corner at a, corner at b, corner at c, middle
                let children = [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]];
                for child in children {
                    elements.push(Element {
                        nodes: child,
                        generation: t.generation + 1,
                        green: None,
                    });
                    tags.push(t.tag);
                    parent.push(owner);
                }
                continue;
            }
            let split = (0..3).find(|&i| {
                self.midpoint
                    .contains_key(&edge_key(t.nodes[i], t.nodes[(i + 1) % 3]))
            });
            match split {
                None => {
                    elements.push(Element {
                        nodes: t.nodes,
                        generation: t.generation,
                        green: t.green,
                    });
                    tags.push(t.tag);
                    parent.push(owner);
                }
                Some(i) => {
                    let (p, q, r) = (t.nodes[i], t.nodes[(i + 1) % 3], t.nodes[(i + 2) % 3]);
                    let m = self.midpoint[&edge_key(p, q)];
                    let g = Some(GreenParent {
                        nodes: [p, q, r],
                        midpoint: m,
                    });
                    for child in [[p, m, r], [m, q, r]] {
                        elements.push(Element {
                            nodes: child,
                            generation: t.generation + 1,
                            green: g,
                        });
                        tags.push(t.tag);
                        parent.push(owner);
                    }
                }
            }
        }

        let mut boundary_edges = Vec::with_capacity(self.mesh.boundary_edges.len());
        for be in &self.mesh.boundary_edges {
            match self.midpoint.get(&edge_key(be.nodes[0], be.nodes[1])) {
                Some(&m) => {
                    boundary_edges.push(BoundaryEdge {
                        nodes: [be.nodes[0], m],
                        tag: be.tag,
                    });
                    boundary_edges.push(BoundaryEdge {
                        nodes: [m, be.nodes[1]],
                        tag: be.tag,
                    });
                }
                None => boundary_edges.push(*be),
            }
        }

        let mesh = Mesh {
            nodes,
            elements,
            boundary_edges,
            element_tags: tags,
            curves: self.mesh.curves.clone(),
        };
        mesh.validate()?;
        Ok(RefinementResult {
            mesh,
            parent,
            n_refined,
            new_node_parents: self.new_node_parents,
        })
    }
}

/// The parent edge a green pair was cut along (stored first by convention).
fn green_split_edge(g: &GreenParent) -> [usize; 2] {
    [g.nodes[0], g.nodes[1]]
}

/// Refines the marked elements red and restores conformity with green
/// closure. An empty `marked` returns the input unchanged.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Result<RefinementResult> {
    if let Some(&bad) = marked.iter().find(|&&e| e >= mesh.n_elements()) {
        return Err(Error::Input(format!(
            "marked element {bad} out of range ({} elements)",
            mesh.n_elements()
        )));
    }
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    if marked.is_empty() {
        return Ok(RefinementResult::unchanged(mesh));
    }
    mesh.validate()?;
    let topo = build_topology(mesh).map_err(|e| Error::Invariant(e.to_string()))?;
    if topo.untagged_boundary > 0 && !mesh.boundary_edges.is_empty() {
        return Err(Error::Invariant(format!(
            "{} boundary edges are missing from the boundary list (hanging nodes?)",
            topo.untagged_boundary
        )));
    }

    let mut closure = Closure::new(mesh);
    closure.run(&marked)?;
    closure.finish(marked.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{count_hanging_nodes, dist, rectangle, CurvedBoundary, Diagonal};

    fn unit_square() -> Mesh {
        rectangle([0.0, 0.0], [1.0, 1.0], 1, 1, Diagonal::Right).unwrap()
    }

    fn conforming(m: &Mesh) -> bool {
        let topo = build_topology(m).unwrap();
        topo.untagged_boundary == 0 && count_hanging_nodes(m, &topo) == 0
    }

    fn edge_lengths(m: &Mesh, e: usize) -> Vec<f64> {
        let v = m.vertices(e);
        let mut l: Vec<f64> = (0..3).map(|i| dist(v[i], v[(i + 1) % 3])).collect();
        l.sort_by(f64::total_cmp);
        l
    }

    #[test]
    fn one_red_one_green() {
        let m = unit_square();
        let r = refine(&m, &[0]).unwrap();
        assert_eq!(r.mesh.n_elements(), 6);
        assert_eq!(r.mesh.n_nodes(), 7);
        assert_eq!(r.n_refined, 1);
        assert!(conforming(&r.mesh));
        assert_eq!(r.parent.iter().filter(|&&p| p == 0).count(), 4);
        assert_eq!(r.mesh.elements.iter().filter(|e| e.is_green()).count(), 2);
    }

    #[test]
    fn uniform_refinement_halves_every_edge() {
        let m = rectangle([0.0, 0.0], [2.0, 1.0], 3, 2, Diagonal::CrissCross).unwrap();
        let all: Vec<usize> = (0..m.n_elements()).collect();
        let r = refine(&m, &all).unwrap();
        assert_eq!(r.mesh.n_elements(), 4 * m.n_elements());
        assert!(conforming(&r.mesh));
        for (child, &p) in r.parent.iter().enumerate() {
            let lc = edge_lengths(&r.mesh, child);
            let lp = edge_lengths(&m, p);
            for k in 0..3 {
                assert!((lc[k] - 0.5 * lp[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn repeated_marking_quarters_edges() {
        let m = unit_square();
        let r1 = refine(&m, &[0]).unwrap();
        let corner = (0..r1.mesh.n_elements())
            .find(|&e| r1.parent[e] == 0 && r1.mesh.elements[e].nodes.contains(&0))
            .unwrap();
        let r2 = refine(&r1.mesh, &[corner]).unwrap();
        assert!(conforming(&r2.mesh));
        let lp = edge_lengths(&m, 0);
        let grandchildren: Vec<usize> = (0..r2.mesh.n_elements())
            .filter(|&e| r2.parent[e] == corner)
            .collect();
        assert_eq!(grandchildren.len(), 4);
        for g in grandchildren {
            let lg = edge_lengths(&r2.mesh, g);
            for k in 0..3 {
                assert!((lg[k] - 0.25 * lp[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn marking_a_green_half_restores_and_splits_its_parent() {
        let m = unit_square();
        let r1 = refine(&m, &[0]).unwrap();
        let green = r1.mesh.elements.iter().position(|e| e.is_green()).unwrap();
        let r2 = refine(&r1.mesh, &[green]).unwrap();
        assert!(conforming(&r2.mesh));
        assert!(r2.mesh.elements.iter().all(|e| !e.is_green()));
        assert_eq!(r2.mesh.n_elements(), 8);
        assert!((r2.mesh.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_mark_is_identity() {
        let m = unit_square();
        let r = refine(&m, &[]).unwrap();
        assert_eq!(r.mesh, m);
        assert_eq!(r.n_refined, 0);
        assert!(refine(&m, &[2]).is_err());
    }

    #[test]
    fn boundary_tags_follow_children() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 2, 2, Diagonal::Left).unwrap();
        let all: Vec<usize> = (0..m.n_elements()).collect();
        let r = refine(&m, &all).unwrap();
        assert_eq!(r.mesh.boundary_edges.len(), 2 * m.boundary_edges.len());
        let mut tags: Vec<i32> = r.mesh.boundary_edges.iter().map(|b| b.tag).collect();
        tags.sort_unstable();
        let mut expected: Vec<i32> = m
            .boundary_edges
            .iter()
            .flat_map(|b| [b.tag, b.tag])
            .collect();
        expected.sort_unstable();
        assert_eq!(tags, expected);
    }

    #[test]
    fn curved_midpoints_are_projected() {
        // quarter annulus piece with the inner arc on tag 9
        let c = 0.5f64.sqrt();
        let nodes = vec![[1.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.0, 1.0], [c, c]];
        let tris = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4]];
        let bnd = vec![
            BoundaryEdge {
                nodes: [0, 1],
                tag: 1,
            },
            BoundaryEdge {
                nodes: [1, 2],
                tag: 2,
            },
            BoundaryEdge {
                nodes: [2, 3],
                tag: 3,
            },
            BoundaryEdge {
                nodes: [3, 4],
                tag: 9,
            },
            BoundaryEdge {
                nodes: [4, 0],
                tag: 9,
            },
        ];
        let m = Mesh::from_triangles(nodes, tris, bnd)
            .unwrap()
            .with_curves(vec![CurvedBoundary {
                tag: 9,
                center: [0.0, 0.0],
                radius: 1.0,
            }]);
        let r = refine(&m, &[0, 1, 2]).unwrap();
        for b in r.mesh.boundary_edges.iter().filter(|b| b.tag == 9) {
            for n in b.nodes {
                let p = r.mesh.nodes[n];
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn prolongation_averages_endpoints() {
        let m = unit_square();
        let r = refine(&m, &[0, 1]).unwrap();
        let f = |p: Point| 2.0 * p[0] - p[1] + 0.5;
        let coarse: Vec<f64> = m.nodes.iter().map(|&p| f(p)).collect();
        let fine = r.prolongate(&coarse, |a, b| 0.5 * (a + b));
        for (p, v) in r.mesh.nodes.iter().zip(&fine) {
            assert!((f(*p) - v).abs() < 1e-14);
        }
    }
}
