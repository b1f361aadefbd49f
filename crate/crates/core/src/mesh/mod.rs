//! Triangular meshes.
//!
//! A [`Mesh`] owns node coordinates, counterclockwise triangles and the tagged
//! boundary edges. Meshes are never mutated in place by the adaptive loop;
//! [`refine`] returns a new mesh.

mod msh;
mod refine;
mod structured;
mod topology;

pub use msh::{load_msh, parse_msh, save_msh, write_msh};
pub use refine::{refine, RefinementResult};
pub use structured::{rectangle, side, Diagonal};
pub use topology::{build_topology, count_hanging_nodes, Edge, EdgeTopology};

use crate::{Error, Point, Result};

/// Tag assigned to topological boundary edges that carry no explicit tag.
pub const UNTAGGED: i32 = 0;

/// A triangle together with its refinement history.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Node indices in counterclockwise order.
    pub nodes: [usize; 3],
    /// Number of refinements separating this element from the initial mesh.
    pub generation: u32,
    /// Set on the two halves of a green bisection.
    pub green: Option<GreenParent>,
}

/// The triangle a green pair was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GreenParent {
    /// Parent nodes, counterclockwise, rotated so that `nodes[0] -> nodes[1]`
    /// is the bisected edge.
    pub nodes: [usize; 3],
    /// The node inserted on the bisected parent edge.
    pub midpoint: usize,
}

impl Element {
    pub fn new(nodes: [usize; 3]) -> Self {
        Self {
            nodes,
            generation: 0,
            green: None,
        }
    }

    pub fn is_green(&self) -> bool {
        self.green.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: i32,
}

/// Analytic circle carrying a boundary tag. Midpoints created on edges with
/// this tag are projected radially onto the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedBoundary {
    pub tag: i32,
    pub center: Point,
    pub radius: f64,
}

impl CurvedBoundary {
    pub fn project(&self, p: Point) -> Point {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            return p;
        }
        [
            self.center[0] + self.radius * dx / r,
            self.center[1] + self.radius * dy / r,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Region tag per element, aligned with `elements`.
    pub element_tags: Vec<i32>,
    pub curves: Vec<CurvedBoundary>,
}

impl Mesh {
    /// Builds a mesh from raw connectivity, reorienting clockwise triangles.
    ///
    /// Fails on out-of-range or repeated indices and on zero-area triangles.
    pub fn from_triangles(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let n_elem = triangles.len();
        let mut elements = Vec::with_capacity(n_elem);
        for (e, mut t) in triangles.into_iter().enumerate() {
            check_indices(e, &t, nodes.len())?;
            let a = signed_area(&nodes, &t);
            if a < 0.0 {
                t.swap(1, 2);
            } else if a == 0.0 {
                return Err(Error::Invariant(format!("element {e} has zero area")));
            }
            elements.push(Element::new(t));
        }
        let mesh = Mesh {
            nodes,
            elements,
            boundary_edges,
            element_tags: vec![0; n_elem],
            curves: Vec::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_element_tags(mut self, tags: Vec<i32>) -> Result<Self> {
        if tags.len() != self.elements.len() {
            return Err(Error::Invariant(format!(
                "{} element tags for {} elements",
                tags.len(),
                self.elements.len()
            )));
        }
        self.element_tags = tags;
        Ok(self)
    }

    pub fn with_curves(mut self, curves: Vec<CurvedBoundary>) -> Self {
        self.curves = curves;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Checks the per-element invariants: valid distinct indices and strictly
    /// positive signed area. Conformity is checked by [`build_topology`].
    pub fn validate(&self) -> Result<()> {
        if self.element_tags.len() != self.elements.len() {
            return Err(Error::Invariant("element tag count mismatch".into()));
        }
        for (e, el) in self.elements.iter().enumerate() {
            check_indices(e, &el.nodes, self.nodes.len())?;
            let a = signed_area(&self.nodes, &el.nodes);
            if a.is_nan() || a <= 0.0 {
                return Err(Error::Invariant(format!(
                    "element {e} has non-positive area {a:e}"
                )));
            }
        }
        for be in &self.boundary_edges {
            if be.nodes[0] >= self.nodes.len() || be.nodes[1] >= self.nodes.len() {
                return Err(Error::Invariant(format!(
                    "boundary edge {:?} out of range",
                    be.nodes
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self, e: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[e].nodes;
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, e: usize) -> f64 {
        signed_area(&self.nodes, &self.elements[e].nodes)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.area(e)).sum()
    }

    /// Element diameter: the longest edge.
    pub fn element_size(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        (0..3)
            .map(|i| dist(v[i], v[(i + 1) % 3]))
            .fold(0.0, f64::max)
    }

    pub fn element_sizes(&self) -> Vec<f64> {
        (0..self.n_elements())
            .map(|e| self.element_size(e))
            .collect()
    }

    pub fn perimeter(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        (0..3).map(|i| dist(v[i], v[(i + 1) % 3])).sum()
    }

    /// Smallest interior angle of element `e`, in radians.
    pub fn min_angle(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        (0..3)
            .map(|i| {
                let a = v[i];
                let b = v[(i + 1) % 3];
                let c = v[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let w = [c[0] - a[0], c[1] - a[1]];
                let cross = u[0] * w[1] - u[1] * w[0];
                let dot = u[0] * w[0] + u[1] * w[1];
                cross.abs().atan2(dot)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mesh_min_angle(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.min_angle(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(lo, hi)
    }

    /// Nodes lying on boundary edges that carry one of `tags`, sorted and unique.
    pub fn nodes_with_tags(&self, tags: &[i32]) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|b| tags.contains(&b.tag))
            .flat_map(|b| b.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn curve_for_tag(&self, tag: i32) -> Option<&CurvedBoundary> {
        self.curves.iter().find(|c| c.tag == tag)
    }

    /// Index of the node closest to `p` (ties: lowest index).
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        self.nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| dist(**a, p).total_cmp(&dist(**b, p)))
            .map(|(i, _)| i)
    }
}

fn check_indices(e: usize, t: &[usize; 3], n_nodes: usize) -> Result<()> {
    if t.iter().any(|&i| i >= n_nodes) {
        return Err(Error::Invariant(format!(
            "element {e} references a node out of range: {t:?}"
        )));
    }
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        return Err(Error::Invariant(format!(
            "element {e} repeats a node: {t:?}"
        )));
    }
    Ok(())
}

pub fn signed_area(nodes: &[Point], t: &[usize; 3]) -> f64 {
    let a = nodes[t[0]];
    let b = nodes[t[1]];
    let c = nodes[t[2]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_triangle_size_is_hypotenuse() {
        let m = Mesh::from_triangles(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![],
        )
        .unwrap();
        assert!((m.element_size(0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn equilateral_size_is_side() {
        let s = 0.7;
        let m = Mesh::from_triangles(
            vec![[0.0, 0.0], [s, 0.0], [0.5 * s, 0.5 * s * 3f64.sqrt()]],
            vec![[0, 1, 2]],
            vec![],
        )
        .unwrap();
        assert!((m.element_size(0) - s).abs() < 1e-15);
        assert!((m.min_angle(0) - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = Mesh::from_triangles(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![],
        )
        .unwrap();
        assert!(m.area(0) > 0.0);
    }

    #[test]
    fn repeated_and_out_of_range_indices_rejected() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::from_triangles(pts.clone(), vec![[0, 0, 1]], vec![]).is_err());
        assert!(Mesh::from_triangles(pts.clone(), vec![[0, 1, 3]], vec![]).is_err());
        let collinear = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(Mesh::from_triangles(collinear, vec![[0, 1, 2]], vec![]).is_err());
    }

    #[test]
    fn projection_lands_on_circle() {
        let c = CurvedBoundary {
            tag: 5,
            center: [1.0, 2.0],
            radius: 0.5,
        };
        let p = c.project([1.3, 2.1]);
        assert!((dist(p, c.center) - 0.5).abs() < 1e-15);
    }
}
