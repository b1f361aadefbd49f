use super::{BoundaryEdge, Mesh};
use crate::{Error, Point, Result};

/// Boundary tags used by [`rectangle`].
pub mod side {
    pub const BOTTOM: i32 = 1;
    pub const RIGHT: i32 = 2;
    pub const TOP: i32 = 3;
    pub const LEFT: i32 = 4;
}

/// How each grid cell is cut into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    /// Diagonal from lower-left to upper-right.
    Right,
    /// Diagonal from lower-right to upper-left.
    Left,
    /// Four triangles around an added cell-center node.
    CrissCross,
}

/// Structured triangulation of the box `[lo, hi]` with `nx * ny` cells.
///
/// Boundary edges are tagged bottom 1, right 2, top 3, left 4.
pub fn rectangle(lo: Point, hi: Point, nx: usize, ny: usize, diagonal: Diagonal) -> Result<Mesh> {
    if nx == 0 || ny == 0 || hi[0] <= lo[0] || hi[1] <= lo[1] {
        return Err(Error::Input(format!(
            "bad rectangle {lo:?}..{hi:?} with {nx}x{ny} cells"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match diagonal {
                Diagonal::Right => {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
                Diagonal::Left => {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                }
                Diagonal::CrissCross => {
                    let m = nodes.len();
                    let (pa, pc) = (nodes[a], nodes[c]);
                    nodes.push([0.5 * (pa[0] + pc[0]), 0.5 * (pa[1] + pc[1])]);
                    tris.push([a, b, m]);
                    tris.push([b, c, m]);
                    tris.push([c, d, m]);
                    tris.push([d, a, m]);
                }
            }
        }
    }
    let mut bnd = Vec::new();
    for i in 0..nx {
        bnd.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: side::BOTTOM,
        });
        bnd.push(BoundaryEdge {
            nodes: [id(i + 1, ny), id(i, ny)],
            tag: side::TOP,
        });
    }
    for j in 0..ny {
        bnd.push(BoundaryEdge {
            nodes: [id(nx, j), id(nx, j + 1)],
            tag: side::RIGHT,
        });
        bnd.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            tag: side::LEFT,
        });
    }
    Mesh::from_triangles(nodes, tris, bnd)
}
