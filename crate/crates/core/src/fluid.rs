//! Steady incompressible Navier-Stokes with equal-order P1P1 elements and
//! Galerkin/least-squares stabilization, solved by Picard iteration.

use std::sync::Arc;

use crate::assembly::{
    assemble, norm, p1_gradients, solve, Dirichlet, LocalSystem, QuadratureRule, SolverKind,
    SolverOptions, DEGENERATE_SHAPE,
};
use crate::mesh::{build_topology, dist, Mesh};
use crate::{Error, Point, Result, SolutionField};

pub type ForceFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct FluidProps {
    pub mu: f64,
    /// Body force; zero when `None`.
    pub force: Option<ForceFn>,
    /// Drop the convective term (Stokes flow).
    pub stokes: bool,
}

impl std::fmt::Debug for FluidProps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FluidProps")
            .field("mu", &self.mu)
            .field("stokes", &self.stokes)
            .finish_non_exhaustive()
    }
}

impl FluidProps {
    pub fn new(mu: f64) -> Self {
        Self {
            mu,
            force: None,
            stokes: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NavierStokes {
    pub props: FluidProps,
    /// Boundary tags carrying the natural (do-nothing) condition. When
    /// empty, the pressure at the node nearest the lower-left corner of the
    /// bounding box is fixed to zero.
    pub outflow_tags: Vec<i32>,
    pub picard_tol: f64,
    pub max_picard: usize,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Velocity in `vector`, pressure in `pressure`.
    pub field: SolutionField,
    /// Relative nonlinear residual before each Picard step; the last entry
    /// belongs to the returned solution.
    pub residuals: Vec<f64>,
}

/// GLS parameter `[(2|a|/h)^2 + (4 mu / h^2)^2]^(-1/2)`.
pub fn gls_tau(speed: f64, h: f64, mu: f64) -> f64 {
    let adv = 2.0 * speed / h;
    let dif = 4.0 * mu / (h * h);
    1.0 / (adv * adv + dif * dif).sqrt()
}

impl NavierStokes {
    pub fn new(props: FluidProps, outflow_tags: Vec<i32>) -> Self {
        Self {
            props,
            outflow_tags,
            picard_tol: 1e-8,
            max_picard: 50,
            solver: SolverOptions {
                fill: 3,
                ..SolverOptions::default()
            },
        }
    }

    fn gauge(&self, mesh: &Mesh) -> Result<Option<usize>> {
        if self.outflow_tags.is_empty() {
            let (lo, _) = mesh.bounding_box();
            return Ok(mesh.nearest_node(lo));
        }
        if !mesh
            .boundary_edges
            .iter()
            .any(|b| self.outflow_tags.contains(&b.tag))
        {
            return Err(Error::Singular(format!(
                "no boundary edge carries an outflow tag {:?}; pressure is undetermined",
                self.outflow_tags
            )));
        }
        Ok(None)
    }

    /// Assembles the linearized system around the convective field `adv`.
    fn linear_system(
        &self,
        mesh: &Mesh,
        adv: &[[f64; 2]],
        constraints: &[Dirichlet],
    ) -> Result<crate::assembly::SparseSystem> {
        let mu = self.props.mu;
        let eps = DEGENERATE_SHAPE;
        let quad = QuadratureRule::triangle(2);
        let mut system = assemble(mesh, 3, |e| {
            let v = mesh.vertices(e);
            let nodes = mesh.elements[e].nodes;
            let (g, area) = p1_gradients(&v, eps)?;
            let a: [[f64; 2]; 3] = if self.props.stokes {
                [[0.0; 2]; 3]
            } else {
                nodes.map(|n| adv[n])
            };
            let sum = [a[0][0] + a[1][0] + a[2][0], a[0][1] + a[1][1] + a[2][1]];
            let abar = [sum[0] / 3.0, sum[1] / 3.0];
            let tau = gls_tau(abar[0].hypot(abar[1]), mesh.element_size(e), mu);
            // a-bar . grad N_b
            let agrad: [f64; 3] = std::array::from_fn(|b| abar[0] * g[b][0] + abar[1] * g[b][1]);
            let mut local = LocalSystem::zeros(9);
            for ia in 0..3 {
                // integral of a N_a
                let m = [
                    area / 12.0 * (sum[0] + a[ia][0]),
                    area / 12.0 * (sum[1] + a[ia][1]),
                ];
                for ib in 0..3 {
                    let lap = g[ia][0] * g[ib][0] + g[ia][1] * g[ib][1];
                    let conv = m[0] * g[ib][0] + m[1] * g[ib][1];
                    let vel = mu * area * lap + conv + tau * area * agrad[ia] * agrad[ib];
                    for c in 0..2 {
                        local.add(3 * ia + c, 3 * ib + c, vel);
                        // -(p, div v) and the GLS coupling (a.grad v, grad p)
                        local.add(
                            3 * ia + c,
                            3 * ib + 2,
                            -area / 3.0 * g[ia][c] + tau * area * agrad[ia] * g[ib][c],
                        );
                        // (q, div u) and (grad q, a.grad u)
                        local.add(
                            3 * ia + 2,
                            3 * ib + c,
                            area / 3.0 * g[ib][c] + tau * area * g[ia][c] * agrad[ib],
                        );
                    }
                    local.add(3 * ia + 2, 3 * ib + 2, tau * area * lap);
                }
            }
            if let Some(f) = &self.props.force {
                for (x, l, w) in quad.map(&v, area) {
                    let fx = f(x);
                    for ia in 0..3 {
                        for c in 0..2 {
                            local.rhs[3 * ia + c] += w * fx[c] * (l[ia] + tau * agrad[ia]);
                        }
                        local.rhs[3 * ia + 2] += w * tau * (g[ia][0] * fx[0] + g[ia][1] * fx[1]);
                    }
                }
            }
            Ok(local)
        })?;
        system.apply_nodal(constraints)?;
        Ok(system)
    }

    /// Picard iteration from `guess` (velocity and pressure) or from zero.
    pub fn solve(
        &self,
        mesh: &Mesh,
        velocity_bc: &[Dirichlet],
        guess: Option<&SolutionField>,
    ) -> Result<FlowSolution> {
        if !(self.props.mu > 0.0) {
            return Err(Error::Config(format!(
                "viscosity must be positive, got {}",
                self.props.mu
            )));
        }
        if velocity_bc.is_empty() {
            return Err(Error::Input(
                "at least one velocity Dirichlet condition is required".into(),
            ));
        }
        if let Some(c) = velocity_bc.iter().find(|c| c.component > 1) {
            return Err(Error::Input(format!(
                "velocity constraint on component {}",
                c.component
            )));
        }
        let n = mesh.n_nodes();
        let mut constraints = velocity_bc.to_vec();
        if let Some(node) = self.gauge(mesh)? {
            constraints.push(Dirichlet::new(node, 2, 0.0));
        }

        let mut x = vec![0.0; 3 * n];
        if let Some(gs) = guess.filter(|g| g.n_nodes() == n) {
            for i in 0..n {
                x[3 * i] = gs.vector[i][0];
                x[3 * i + 1] = gs.vector[i][1];
                x[3 * i + 2] = gs.pressure.as_ref().map_or(0.0, |p| p[i]);
            }
        }
        for c in &constraints {
            x[3 * c.node + c.component] = c.value;
        }

        let mut history = Vec::new();
        for _ in 0..=self.max_picard {
            let adv: Vec<[f64; 2]> = (0..n).map(|i| [x[3 * i], x[3 * i + 1]]).collect();
            let system = self.linear_system(mesh, &adv, &constraints)?;
            let bnorm = norm(&system.rhs);
            let ax = system.matrix.mul_vec(&x);
            let rnorm = norm(
                &ax.iter()
                    .zip(&system.rhs)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            let rel = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
            history.push(rel);
            if !rel.is_finite() {
                return Err(Error::NonlinearStagnation { history });
            }
            if rel <= self.picard_tol {
                return Ok(FlowSolution {
                    field: unpack(&x),
                    residuals: history,
                });
            }
            let k = history.len();
            if k > 5 && rel > 0.99 * history[k - 6] {
                return Err(Error::NonlinearStagnation { history });
            }
            if history.len() > self.max_picard {
                break;
            }
            // linear accuracy tracks the nonlinear residual
            let tol = if self.props.stokes {
                self.solver.tol
            } else {
                self.solver.tol.max(1e-3 * rel)
            };
            let opts = SolverOptions { tol, ..self.solver };
            x = solve(
                &system.matrix,
                &system.rhs,
                SolverKind::General,
                &opts,
                Some(&x),
            )?
            .x;
        }
        Err(Error::NonlinearStagnation { history })
    }
}

fn unpack(x: &[f64]) -> SolutionField {
    let n = x.len() / 3;
    SolutionField {
        vector: (0..n).map(|i| [x[3 * i], x[3 * i + 1]]).collect(),
        pressure: Some((0..n).map(|i| x[3 * i + 2]).collect()),
    }
}

/// Net outward flux `sum over boundary edges of integral u.n` (exact for P1).
pub fn boundary_flux(mesh: &Mesh, u: &[[f64; 2]]) -> Result<f64> {
    let topo = build_topology(mesh)?;
    let mut total = 0.0;
    for edge in topo.edges.iter().filter(|e| e.is_boundary()) {
        let [a, b] = edge.nodes;
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let v = mesh.vertices(edge.left);
        let centroid = [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ];
        let mut n = [pb[1] - pa[1], -(pb[0] - pa[0])];
        if n[0] * (pa[0] - centroid[0]) + n[1] * (pa[1] - centroid[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        // n has the edge length built in
        let um = [0.5 * (u[a][0] + u[b][0]), 0.5 * (u[a][1] + u[b][1])];
        total += um[0] * n[0] + um[1] * n[1];
    }
    Ok(total)
}

/// Bucket-grid point location on a triangle mesh.
#[derive(Debug, Clone)]
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    lo: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let k = ((mesh.n_elements() as f64).sqrt().ceil() as usize).max(1);
        let w = [
            (hi[0] - lo[0]).max(f64::MIN_POSITIVE),
            (hi[1] - lo[1]).max(f64::MIN_POSITIVE),
        ];
        let aspect = w[0] / w[1];
        let nx = ((k as f64 * aspect.sqrt()).ceil() as usize).clamp(1, 4096);
        let ny = ((k as f64 / aspect.sqrt()).ceil() as usize).clamp(1, 4096);
        let cell = [w[0] / nx as f64, w[1] / ny as f64];
        let mut loc = Self {
            mesh,
            lo,
            cell,
            dims: [nx, ny],
            buckets: vec![Vec::new(); nx * ny],
        };
        for e in 0..mesh.n_elements() {
            let v = mesh.vertices(e);
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for p in v {
                let c = loc.cell_of(p);
                for d in 0..2 {
                    a[d] = a[d].min(c[d]);
                    b[d] = b[d].max(c[d]);
                }
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    loc.buckets[j * nx + i].push(e);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: Point) -> [usize; 2] {
        std::array::from_fn(|d| {
            let t = ((p[d] - self.lo[d]) / self.cell[d]).floor();
            (t.max(0.0) as usize).min(self.dims[d] - 1)
        })
    }

    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let v = self.mesh.vertices(e);
        let det =
            (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
        let l1 =
            ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (p[1] - v[0][1]) * (v[2][0] - v[0][0])) / det;
        let l2 =
            ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (v[1][1] - v[0][1]) * (p[0] - v[0][0])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Element containing `p` (with barycentric slack `1e-12`).
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let c = self.cell_of(p);
        self.buckets[c[1] * self.dims[0] + c[0]]
            .iter()
            .find_map(|&e| {
                let l = self.barycentric(e, p);
                l.iter().all(|&x| x >= -1e-12).then_some((e, l))
            })
    }

    /// Element closest to `p` and the distance to it.
    pub fn nearest(&self, p: Point) -> Option<(usize, f64)> {
        if let Some((e, _)) = self.locate(p) {
            return Some((e, 0.0));
        }
        let c = self.cell_of(p);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = self.dims[0].max(self.dims[1]);
        for r in 0..=max_ring {
            let (i0, i1) = (c[0].saturating_sub(r), (c[0] + r).min(self.dims[0] - 1));
            let (j0, j1) = (c[1].saturating_sub(r), (c[1] + r).min(self.dims[1] - 1));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    if i != i0 && i != i1 && j != j0 && j != j1 {
                        continue;
                    }
                    for &e in &self.buckets[j * self.dims[0] + i] {
                        let d = point_triangle_distance(p, &self.mesh.vertices(e));
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((e, d));
                        }
                    }
                }
            }
            if let Some((_, d)) = best {
                if d <= r as f64 * self.cell[0].min(self.cell[1]) {
                    break;
                }
            }
        }
        best
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]))
        .clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn point_triangle_distance(p: Point, v: &[Point; 3]) -> f64 {
    (0..3)
        .map(|i| point_segment_distance(p, v[i], v[(i + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

/// Evaluates a P1 reference field at arbitrary points.
pub struct Interpolator<'a> {
    locator: PointLocator<'a>,
    values: &'a [[f64; 2]],
    tolerance: f64,
}

impl<'a> Interpolator<'a> {
    pub fn new(mesh: &'a Mesh, values: &'a [[f64; 2]]) -> Self {
        Self {
            locator: PointLocator::new(mesh),
            values,
            tolerance: 1e-9 * mesh.diameter(),
        }
    }

    /// P1 value at `p`. Points outside the mesh are accepted within the
    /// tolerance, or anywhere inside a curved-boundary disc (the sliver
    /// between a coarse chord and the arc), using the nearest element's
    /// linear extension.
    pub fn eval(&self, p: Point) -> Result<[f64; 2]> {
        let mesh = self.locator.mesh;
        let (e, l) = match self.locator.locate(p) {
            Some(found) => found,
            None => {
                let (e, d) = self
                    .locator
                    .nearest(p)
                    .ok_or_else(|| Error::Interpolation("reference mesh has no elements".into()))?;
                let in_curve = mesh
                    .curves
                    .iter()
                    .any(|c| dist(p, c.center) <= c.radius + self.tolerance);
                if d > self.tolerance && !in_curve {
                    return Err(Error::Interpolation(format!(
                        "point {p:?} lies {d:e} outside the reference mesh"
                    )));
                }
                (e, self.locator.barycentric(e, p))
            }
        };
        let nodes = mesh.elements[e].nodes;
        let mut out = [0.0; 2];
        for a in 0..3 {
            out[0] += l[a] * self.values[nodes[a]][0];
            out[1] += l[a] * self.values[nodes[a]][1];
        }
        Ok(out)
    }
}

/// `||u_h - u_ref|| / ||u_ref||` in L2, integrated with a degree-4 rule on
/// `mesh_h`; the reference is interpolated from `mesh_ref`.
pub fn l2_velocity_error(
    mesh_h: &Mesh,
    u_h: &[[f64; 2]],
    mesh_ref: &Mesh,
    u_ref: &[[f64; 2]],
) -> Result<f64> {
    use rayon::prelude::*;
    if u_h.len() != mesh_h.n_nodes() || u_ref.len() != mesh_ref.n_nodes() {
        return Err(Error::Input(
            "velocity length does not match its mesh".into(),
        ));
    }
    let interp = Interpolator::new(mesh_ref, u_ref);
    let quad = QuadratureRule::triangle(4);
    let parts: Vec<(f64, f64)> = (0..mesh_h.n_elements())
        .into_par_iter()
        .map(|e| {
            let v = mesh_h.vertices(e);
            let nodes = mesh_h.elements[e].nodes;
            let mut num = 0.0;
            let mut den = 0.0;
            for (x, l, w) in quad.map(&v, mesh_h.area(e)) {
                let r = interp.eval(x)?;
                let mut uh = [0.0; 2];
                for a in 0..3 {
                    uh[0] += l[a] * u_h[nodes[a]][0];
                    uh[1] += l[a] * u_h[nodes[a]][1];
                }
                num += w * ((uh[0] - r[0]).powi(2) + (uh[1] - r[1]).powi(2));
                den += w * (r[0] * r[0] + r[1] * r[1]);
            }
            Ok((num, den))
        })
        .collect::<Result<_>>()?;
    let num: f64 = parts.iter().map(|p| p.0).sum();
    let den: f64 = parts.iter().map(|p| p.1).sum();
    if den == 0.0 {
        return Err(Error::Metric("reference velocity has zero L2 norm".into()));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, Diagonal};

    #[test]
    fn tau_limits() {
        // diffusive limit h^2 / (4 mu)
        assert!((gls_tau(0.0, 0.1, 0.5) - 0.01 / 2.0).abs() < 1e-15);
        // advective limit h / (2 |a|)
        assert!((gls_tau(3.0, 0.1, 1e-12) - 0.1 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_flow() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 4, 4, Diagonal::Right).unwrap();
        let bc: Vec<Dirichlet> = m
            .nodes_with_tags(&[1, 2, 3, 4])
            .into_iter()
            .flat_map(|n| [Dirichlet::new(n, 0, 0.0), Dirichlet::new(n, 1, 0.0)])
            .collect();
        let s = NavierStokes::new(FluidProps::new(0.01), vec![])
            .solve(&m, &bc, None)
            .unwrap();
        assert!(s.field.vector.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
        assert!(s.field.pressure.unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn missing_outflow_boundary() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 2, 2, Diagonal::Right).unwrap();
        let bc = [Dirichlet::new(0, 0, 0.0)];
        let e = NavierStokes::new(FluidProps::new(1.0), vec![99])
            .solve(&m, &bc, None)
            .unwrap_err();
        assert!(matches!(e, Error::Singular(_)));
    }

    #[test]
    fn l2_error_of_scaled_field() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 5, 5, Diagonal::Left).unwrap();
        let u: Vec<[f64; 2]> = m
            .nodes
            .iter()
            .map(|p| [p[0] * p[1] + 1.0, p[0] - 2.0 * p[1]])
            .collect();
        assert!(l2_velocity_error(&m, &u, &m, &u).unwrap() < 1e-12);
        let scaled: Vec<[f64; 2]> = u.iter().map(|v| [1.01 * v[0], 1.01 * v[1]]).collect();
        assert!((l2_velocity_error(&m, &scaled, &m, &u).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn locator_outside_point() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 3, 3, Diagonal::Right).unwrap();
        let u = vec![[1.0, 0.0]; m.n_nodes()];
        let i = Interpolator::new(&m, &u);
        assert!(i.eval([0.5, 0.5]).is_ok());
        assert!(matches!(i.eval([1.5, 0.5]), Err(Error::Interpolation(_))));
    }
}
