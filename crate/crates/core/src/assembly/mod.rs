//! P1 finite-element machinery shared by the solid and fluid solvers.

mod amg;
mod quadrature;
mod solver;
mod sparse;

pub use quadrature::{gauss3, QuadratureRule};
pub use solver::{rcm, solve, SolveStats, SolverKind, SolverOptions};
pub use sparse::{dot, norm, CsrMatrix};

use rayon::prelude::*;

use crate::mesh::Mesh;
use crate::{Error, Point, Result};

/// Gradients of the three barycentric shape functions and the area.
///
/// Fails with a geometry error when the signed area is at most `min_shape`
/// times the squared longest edge.
pub fn p1_gradients(v: &[Point; 3], min_shape: f64) -> Result<([[f64; 2]; 3], f64)> {
    let area = 0.5
        * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]));
    let longest = (0..3)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % 3]);
            (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)
        })
        .fold(0.0, f64::max);
    if !(area > min_shape * longest) {
        return Err(Error::Geometry(format!("triangle {v:?} has area {area:e}")));
    }
    let s = 0.5 / area;
    let g = [
        [(v[1][1] - v[2][1]) * s, (v[2][0] - v[1][0]) * s],
        [(v[2][1] - v[0][1]) * s, (v[0][0] - v[2][0]) * s],
        [(v[0][1] - v[1][1]) * s, (v[1][0] - v[0][0]) * s],
    ];
    Ok((g, area))
}

/// Smallest accepted ratio of element area to squared longest edge.
pub const DEGENERATE_SHAPE: f64 = 1e-10;

/// Prescribed value of one component at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirichlet {
    pub node: usize,
    pub component: usize,
    pub value: f64,
}

impl Dirichlet {
    pub fn new(node: usize, component: usize, value: f64) -> Self {
        Self {
            node,
            component,
            value,
        }
    }
}

/// Element contribution with local dofs ordered `node * components + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    /// Row-major dense block.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: vec![0.0; n * n],
            rhs: vec![0.0; n],
        }
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let n = self.size();
        self.matrix[i * n + j] += v;
    }
}

/// Global system; dof `node * components + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub components: usize,
}

impl SparseSystem {
    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.components + component
    }

    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }

    /// Imposes `x[dof] = value` for each constraint by symmetric elimination:
    /// known columns move to the right-hand side and constrained rows become
    /// identity rows.
    pub fn apply_dirichlet(&mut self, constraints: &[(usize, f64)]) -> Result<()> {
        let n = self.n_dofs();
        let mut value: Vec<Option<f64>> = vec![None; n];
        for &(dof, v) in constraints {
            if dof >= n {
                return Err(Error::Input(format!("constraint on dof {dof} of {n}")));
            }
            match value[dof] {
                Some(prev) if prev != v => {
                    return Err(Error::Constraint {
                        dof,
                        first: prev,
                        second: v,
                    })
                }
                _ => value[dof] = Some(v),
            }
        }
        let a = &mut self.matrix;
        for i in 0..n {
            let (lo, hi) = (a.row_ptr[i], a.row_ptr[i + 1]);
            if let Some(g) = value[i] {
                for k in lo..hi {
                    a.values[k] = if a.col_idx[k] == i { 1.0 } else { 0.0 };
                }
                self.rhs[i] = g;
                continue;
            }
            for k in lo..hi {
                if let Some(g) = value[a.col_idx[k]] {
                    self.rhs[i] -= a.values[k] * g;
                    a.values[k] = 0.0;
                }
            }
        }
        for (i, v) in value.iter().enumerate() {
            if v.is_some() && a.find(i, i).is_none() {
                return Err(Error::Assembly(format!(
                    "constrained dof {i} has no diagonal entry"
                )));
            }
        }
        Ok(())
    }

    /// [`SparseSystem::apply_dirichlet`] for nodal constraints.
    pub fn apply_nodal(&mut self, constraints: &[Dirichlet]) -> Result<()> {
        for c in constraints {
            if c.component >= self.components {
                return Err(Error::Input(format!(
                    "constraint on component {} of {}",
                    c.component, self.components
                )));
            }
        }
        let list: Vec<(usize, f64)> = constraints
            .iter()
            .map(|c| (self.dof(c.node, c.component), c.value))
            .collect();
        self.apply_dirichlet(&list)
    }
}

/// Node-to-node adjacency pattern expanded to `components` dofs per node.
pub fn dof_pattern(mesh: &Mesh, components: usize) -> Result<CsrMatrix> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_nodes()];
    for el in &mesh.elements {
        for &a in &el.nodes {
            adj[a].extend_from_slice(&el.nodes);
        }
    }
    let mut rows = Vec::with_capacity(mesh.n_nodes() * components);
    for mut nbrs in adj {
        nbrs.sort_unstable();
        nbrs.dedup();
        let row: Vec<usize> = nbrs
            .iter()
            .flat_map(|&j| (0..components).map(move |d| j * components + d))
            .collect();
        for _ in 0..components {
            rows.push(row.clone());
        }
    }
    CsrMatrix::from_pattern(mesh.n_nodes() * components, rows)
}

const CHUNK: usize = 4096;

/// Sums element contributions into a global system.
///
/// Kernels run in parallel, the scatter runs in element order, so the result
/// does not depend on the thread count.
pub fn assemble<K>(mesh: &Mesh, components: usize, kernel: K) -> Result<SparseSystem>
where
    K: Fn(usize) -> Result<LocalSystem> + Sync,
{
    let matrix = dof_pattern(mesh, components)?;
    let mut system = SparseSystem {
        rhs: vec![0.0; matrix.n],
        matrix,
        components,
    };
    let n_loc = 3 * components;
    for start in (0..mesh.n_elements()).step_by(CHUNK) {
        let end = (start + CHUNK).min(mesh.n_elements());
        let locals: Vec<LocalSystem> = (start..end)
            .into_par_iter()
            .map(&kernel)
            .collect::<Result<_>>()?;
        for (e, local) in (start..end).zip(locals) {
            if local.size() != n_loc || local.matrix.len() != n_loc * n_loc {
                return Err(Error::Assembly(format!(
                    "element {e}: kernel returned a block of size {} for {n_loc} local dofs",
                    local.size()
                )));
            }
            let nodes = mesh.elements[e].nodes;
            let dofs: Vec<usize> = (0..n_loc)
                .map(|k| nodes[k / components] * components + k % components)
                .collect();
            for (i, &gi) in dofs.iter().enumerate() {
                system.rhs[gi] += local.rhs[i];
                for (j, &gj) in dofs.iter().enumerate() {
                    let v = local.matrix[i * n_loc + j];
                    if v != 0.0 {
                        let slot = system.matrix.entry_mut(gi, gj).ok_or_else(|| {
                            Error::Assembly(format!("dof pair ({gi}, {gj}) not in the pattern"))
                        })?;
                        *slot += v;
                    }
                }
            }
        }
    }
    Ok(system)
}

/// Scalar Laplace stiffness kernel, mostly useful for tests.
pub fn laplace_kernel(mesh: &Mesh, e: usize) -> Result<LocalSystem> {
    let (g, area) = p1_gradients(&mesh.vertices(e), DEGENERATE_SHAPE)?;
    let mut local = LocalSystem::zeros(3);
    for i in 0..3 {
        for j in 0..3 {
            local.add(i, j, area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
        }
    }
    Ok(local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, Diagonal};

    #[test]
    fn reference_gradients() {
        let (g, a) = p1_gradients(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.0).unwrap();
        assert_eq!(g, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(a, 0.5);
    }

    #[test]
    fn gradients_sum_to_zero_and_scale() {
        let v = [[0.3, -0.2], [1.7, 0.4], [0.1, 1.3]];
        let (g, _) = p1_gradients(&v, 0.0).unwrap();
        for d in 0..2 {
            assert!((g[0][d] + g[1][d] + g[2][d]).abs() < 1e-15);
        }
        let v2 = v.map(|p| [2.0 * p[0], 2.0 * p[1]]);
        let (g2, _) = p1_gradients(&v2, 0.0).unwrap();
        for i in 0..3 {
            for d in 0..2 {
                assert!((g2[i][d] - 0.5 * g[i][d]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_rejected() {
        let e = p1_gradients(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], DEGENERATE_SHAPE).unwrap_err();
        assert!(matches!(e, Error::Geometry(_)));
    }

    #[test]
    fn two_triangle_laplace_matrix() {
        // nodes (0,0),(1,0),(0,1),(1,1), diagonal 0-3
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 1, 1, Diagonal::Right).unwrap();
        let s = assemble(&m, 1, |e| laplace_kernel(&m, e)).unwrap();
        let expected = [
            [1.0, -0.5, -0.5, 0.0],
            [-0.5, 1.0, 0.0, -0.5],
            [-0.5, 0.0, 1.0, -0.5],
            [0.0, -0.5, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (s.matrix.get(i, j) - expected[i][j]).abs() < 1e-15,
                    "({i},{j}) {}",
                    s.matrix.get(i, j)
                );
            }
        }
    }

    #[test]
    fn lumped_mass_rows_sum_to_area() {
        let m = rectangle([0.0, 0.0], [2.0, 1.5], 3, 4, Diagonal::CrissCross).unwrap();
        let s = assemble(&m, 1, |e| {
            let a = m.area(e);
            let mut l = LocalSystem::zeros(3);
            for i in 0..3 {
                for j in 0..3 {
                    l.add(i, j, a * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 });
                }
            }
            Ok(l)
        })
        .unwrap();
        let total: f64 = s.matrix.values.iter().sum();
        assert!((total - 3.0).abs() < 1e-13);
        assert!(s.matrix.asymmetry() < 1e-15);
    }

    #[test]
    fn empty_mesh_gives_empty_system() {
        let m = Mesh::from_triangles(vec![], vec![], vec![]).unwrap();
        let s = assemble(&m, 2, |_| unreachable!()).unwrap();
        assert_eq!(s.n_dofs(), 0);
    }

    #[test]
    fn conflicting_constraints() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 1, 1, Diagonal::Right).unwrap();
        let mut s = assemble(&m, 1, |e| laplace_kernel(&m, e)).unwrap();
        let e = s.apply_dirichlet(&[(0, 1.0), (0, 2.0)]).unwrap_err();
        assert!(matches!(e, Error::Constraint { dof: 0, .. }));
        assert!(s.apply_dirichlet(&[(0, 1.0), (0, 1.0)]).is_ok());
    }

    #[test]
    fn linear_chain_interpolates() {
        let m = rectangle([0.0, 0.0], [1.0, 0.1], 10, 1, Diagonal::Right).unwrap();
        let mut s = assemble(&m, 1, |e| laplace_kernel(&m, e)).unwrap();
        let mut bc = Vec::new();
        for (i, p) in m.nodes.iter().enumerate() {
            if p[0] == 0.0 {
                bc.push((i, 0.0));
            } else if p[0] == 1.0 {
                bc.push((i, 1.0));
            }
        }
        s.apply_dirichlet(&bc).unwrap();
        assert!(s.matrix.asymmetry() < 1e-15);
        let x = solve(
            &s.matrix,
            &s.rhs,
            SolverKind::Spd,
            &SolverOptions::default(),
            None,
        )
        .unwrap()
        .x;
        for (i, p) in m.nodes.iter().enumerate() {
            assert!((x[i] - p[0]).abs() < 1e-9);
        }
    }
}
