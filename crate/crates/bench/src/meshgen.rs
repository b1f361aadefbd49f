//! Generators for the initial benchmark meshes.
//!
//! The committed files under `meshes/` were written by these functions; a
//! test keeps the two in sync.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use amr_core::mesh::{dist, BoundaryEdge, CurvedBoundary, Mesh};
use amr_core::{Point, Result};

/// Boundary tags of the slit panel.
pub mod slit {
    pub const OUTER: i32 = 1;
    pub const CRACK: i32 = 2;
}

/// Boundary tags of the plate with a hole.
pub mod plate {
    /// `y = 0`, symmetry in `y`.
    pub const BOTTOM: i32 = 1;
    pub const RIGHT: i32 = 2;
    pub const TOP: i32 = 3;
    /// `x = 0`, symmetry in `x`.
    pub const LEFT: i32 = 4;
    pub const HOLE: i32 = 5;
}

/// Boundary tags of the cavity.
pub mod cavity {
    pub const WALL: i32 = 1;
    pub const LID: i32 = 2;
}

/// Boundary tags of the channel with a cylinder.
pub mod channel {
    pub const INFLOW: i32 = 1;
    pub const WALL: i32 = 2;
    pub const OUTFLOW: i32 = 3;
    pub const CYLINDER: i32 = 4;
}

pub const CHANNEL_LENGTH: f64 = 2.2;
pub const CHANNEL_HEIGHT: f64 = 0.41;
pub const CYLINDER_CENTER: Point = [0.2, 0.2];
pub const CYLINDER_RADIUS: f64 = 0.05;

/// Triangulates quadrilateral cells along their shorter diagonal.
fn from_quads(
    nodes: Vec<Point>,
    quads: &[[usize; 4]],
    boundary: Vec<BoundaryEdge>,
) -> Result<Mesh> {
    let mut tris = Vec::with_capacity(2 * quads.len());
    for &[a, b, c, d] in quads {
        if dist(nodes[a], nodes[c]) <= dist(nodes[b], nodes[d]) {
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        } else {
            tris.push([a, b, d]);
            tris.push([b, c, d]);
        }
    }
    Mesh::from_triangles(nodes, tris, boundary)
}

fn edge(a: usize, b: usize, tag: i32) -> BoundaryEdge {
    BoundaryEdge { nodes: [a, b], tag }
}

/// `[-1, 1]^2` with `n x n` cells (`n` even) and a slit along `y = 0, x <= 0`.
///
/// Nodes on the slit except the tip are duplicated; the copies belong to the
/// lower half.
pub fn slit_panel(n: usize) -> Result<Mesh> {
    assert!(n >= 2 && n % 2 == 0, "slit panel needs an even cell count");
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
    let mut nodes: Vec<Point> = Vec::with_capacity((n + 1) * (n + 1) + n / 2 + 1);
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([coord(i), coord(j)]);
        }
    }
    let mid = n / 2;
    let upper = |i: usize| mid * (n + 1) + i;
    let mut lower: Vec<usize> = (0..=n).map(upper).collect();
    for (i, l) in lower.iter_mut().enumerate().take(mid) {
        *l = nodes.len();
        nodes.push(nodes[upper(i)]);
    }
    let id = |i: usize, j: usize| if j == mid { lower[i] } else { j * (n + 1) + i };
    let top = |i: usize, j: usize| j * (n + 1) + i;

    let mut quads = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            // cells below the slit take the duplicated row as their top edge
            let q = if j + 1 == mid {
                [top(i, j), top(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]
            } else if j == mid {
                [top(i, j), top(i + 1, j), top(i + 1, j + 1), top(i, j + 1)]
            } else {
                [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]
            };
            quads.push(q);
        }
    }
    let mut boundary = Vec::new();
    for i in 0..n {
        boundary.push(edge(top(i, 0), top(i + 1, 0), slit::OUTER));
        boundary.push(edge(top(i, n), top(i + 1, n), slit::OUTER));
    }
    for j in 0..n {
        let below = j < mid;
        let left = |j: usize| {
            if below && j == mid {
                lower[0]
            } else {
                top(0, j)
            }
        };
        boundary.push(edge(left(j), left(j + 1), slit::OUTER));
        boundary.push(edge(top(n, j), top(n, j + 1), slit::OUTER));
    }
    for i in 0..mid {
        boundary.push(edge(upper(i), upper(i + 1), slit::CRACK));
        boundary.push(edge(lower[i], lower[i + 1], slit::CRACK));
    }
    from_quads(nodes, &quads, boundary)
}

/// Geometric spacing on `[0, 1]` with `n` intervals, each `ratio` times the previous.
fn graded(n: usize, ratio: f64) -> Vec<f64> {
    if ratio == 1.0 {
        return (0..=n).map(|j| j as f64 / n as f64).collect();
    }
    let total = ratio.powi(n as i32) - 1.0;
    (0..=n)
        .map(|j| (ratio.powi(j as i32) - 1.0) / total)
        .collect()
}

/// `[0, 4]^2` minus the unit disc, with `ns` cells along each outer edge and
/// `nr` radially graded layers.
pub fn plate_with_hole(ns: usize, nr: usize, ratio: f64) -> Result<Mesh> {
    let nk = 2 * ns;
    let s = graded(nr, ratio);
    let mut nodes = Vec::with_capacity((nk + 1) * (nr + 1));
    for k in 0..=nk {
        let th = FRAC_PI_2 * k as f64 / nk as f64;
        let inner = if k == nk {
            [0.0, 1.0]
        } else {
            [th.cos(), th.sin()]
        };
        let outer = if k <= ns {
            [4.0, 4.0 * k as f64 / ns as f64]
        } else {
            [4.0 - 4.0 * (k - ns) as f64 / ns as f64, 4.0]
        };
        for &t in &s {
            nodes.push([
                inner[0] + t * (outer[0] - inner[0]),
                inner[1] + t * (outer[1] - inner[1]),
            ]);
        }
    }
    let id = |k: usize, j: usize| k * (nr + 1) + j;
    let mut quads = Vec::with_capacity(nk * nr);
    for k in 0..nk {
        for j in 0..nr {
            quads.push([id(k, j), id(k, j + 1), id(k + 1, j + 1), id(k + 1, j)]);
        }
    }
    let mut boundary = Vec::new();
    for j in 0..nr {
        boundary.push(edge(id(0, j), id(0, j + 1), plate::BOTTOM));
        boundary.push(edge(id(nk, j), id(nk, j + 1), plate::LEFT));
    }
    for k in 0..nk {
        boundary.push(edge(id(k, 0), id(k + 1, 0), plate::HOLE));
        let tag = if k < ns { plate::RIGHT } else { plate::TOP };
        boundary.push(edge(id(k, nr), id(k + 1, nr), tag));
    }
    Ok(from_quads(nodes, &quads, boundary)?.with_curves(vec![hole_curve()]))
}

pub fn hole_curve() -> CurvedBoundary {
    CurvedBoundary {
        tag: plate::HOLE,
        center: [0.0, 0.0],
        radius: 1.0,
    }
}

/// The unit square with `n x n` cells, each cut into four triangles.
///
/// Only edges strictly inside the top side are lid edges, so both top corners
/// belong to the walls.
pub fn cavity(n: usize) -> Result<Mesh> {
    let mut m = amr_core::mesh::rectangle(
        [0.0, 0.0],
        [1.0, 1.0],
        n,
        n,
        amr_core::mesh::Diagonal::CrissCross,
    )?;
    for b in &mut m.boundary_edges {
        b.tag = if b.tag == amr_core::mesh::side::TOP {
            cavity::LID
        } else {
            cavity::WALL
        };
    }
    Ok(m)
}

/// Unit cavity whose `n x n` cells shrink geometrically by `ratio` toward
/// every wall, `n` even.
pub fn cavity_graded(n: usize, ratio: f64) -> Result<Mesh> {
    if n % 2 != 0 {
        return Err(amr_core::Error::Input(format!(
            "graded cavity needs an even cell count, got {n}"
        )));
    }
    let half = graded(n / 2, ratio);
    let mut line: Vec<f64> = half.iter().map(|t| 0.5 * t).collect();
    line.extend(half.iter().rev().skip(1).map(|t| 1.0 - 0.5 * t));
    let map = |x: f64| {
        let s = (x * n as f64).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        line[i] + (s - i as f64) * (line[i + 1] - line[i])
    };
    let mut m = cavity(n)?;
    for p in &mut m.nodes {
        *p = [map(p[0]), map(p[1])];
    }
    Ok(m)
}

/// Channel `[0, 2.2] x [0, 0.41]` around a cylinder of radius 0.05 at
/// `(0.2, 0.2)`.
///
/// An O-grid with `ns` cells per side and `nr` graded layers fills the square
/// `[0, 0.41]^2`; a structured block of square-ish cells continues to the
/// outlet.
pub fn channel(ns: usize, nr: usize, ratio: f64) -> Result<Mesh> {
    let h = CHANNEL_HEIGHT;
    let c = CYLINDER_CENTER;
    let corners = [[0.0, 0.0], [h, 0.0], [h, h], [0.0, h]];
    let nk = 4 * ns;
    let s = graded(nr, ratio);
    let mut nodes: Vec<Point> = Vec::new();
    let mut ring: Vec<Vec<usize>> = Vec::with_capacity(nk);
    for k in 0..nk {
        let (side, t) = (k / ns, (k % ns) as f64 / ns as f64);
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        let outer = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let d = dist(outer, c);
        let inner = [
            c[0] + CYLINDER_RADIUS * (outer[0] - c[0]) / d,
            c[1] + CYLINDER_RADIUS * (outer[1] - c[1]) / d,
        ];
        let mut column = Vec::with_capacity(nr + 1);
        for (j, &t) in s.iter().enumerate() {
            column.push(nodes.len());
            nodes.push(if j == nr {
                outer
            } else {
                [
                    inner[0] + t * (outer[0] - inner[0]),
                    inner[1] + t * (outer[1] - inner[1]),
                ]
            });
        }
        ring.push(column);
    }
    let mut quads = Vec::new();
    let mut boundary = Vec::new();
    for k in 0..nk {
        let (a, b) = (&ring[k], &ring[(k + 1) % nk]);
        for j in 0..nr {
            quads.push([a[j], a[j + 1], b[j + 1], b[j]]);
        }
        boundary.push(edge(a[0], b[0], channel::CYLINDER));
        match k / ns {
            0 | 2 => boundary.push(edge(a[nr], b[nr], channel::WALL)),
            3 => boundary.push(edge(a[nr], b[nr], channel::INFLOW)),
            _ => {}
        }
    }

    // downstream block; its first column is the right side of the O-grid
    let nx = ((CHANNEL_LENGTH - h) / (h / ns as f64)).round() as usize;
    let mut grid: HashMap<(usize, usize), usize> = HashMap::new();
    for j in 0..=ns {
        grid.insert((0, j), ring[(ns + j) % nk][nr]);
    }
    for i in 1..=nx {
        for j in 0..=ns {
            grid.insert((i, j), nodes.len());
            nodes.push([
                h + (CHANNEL_LENGTH - h) * i as f64 / nx as f64,
                h * j as f64 / ns as f64,
            ]);
        }
    }
    for i in 0..nx {
        for j in 0..ns {
            quads.push([
                grid[&(i, j)],
                grid[&(i + 1, j)],
                grid[&(i + 1, j + 1)],
                grid[&(i, j + 1)],
            ]);
        }
        boundary.push(edge(grid[&(i, 0)], grid[&(i + 1, 0)], channel::WALL));
        boundary.push(edge(grid[&(i, ns)], grid[&(i + 1, ns)], channel::WALL));
    }
    for j in 0..ns {
        boundary.push(edge(grid[&(nx, j)], grid[&(nx, j + 1)], channel::OUTFLOW));
    }
    Ok(from_quads(nodes, &quads, boundary)?.with_curves(vec![cylinder_curve()]))
}

pub fn cylinder_curve() -> CurvedBoundary {
    CurvedBoundary {
        tag: channel::CYLINDER,
        center: CYLINDER_CENTER,
        radius: CYLINDER_RADIUS,
    }
}
