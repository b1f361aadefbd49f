//! Plane linear elasticity with P1 elements.

use std::sync::Arc;

use crate::assembly::{
    assemble, gauss3, p1_gradients, solve, Dirichlet, LocalSystem, QuadratureRule, SolverKind,
    SolverOptions, DEGENERATE_SHAPE,
};
use crate::mesh::{build_topology, dist, Mesh};
use crate::{Error, Point, Result, SolutionField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneMode {
    PlaneStrain,
    PlaneStress,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMaterial {
    pub e: f64,
    pub nu: f64,
    pub mode: PlaneMode,
}

impl ElasticMaterial {
    pub fn new(e: f64, nu: f64, mode: PlaneMode) -> Result<Self> {
        let m = Self { e, nu, mode };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0 && self.e.is_finite()) {
            return Err(Error::Config(format!(
                "Young's modulus must be positive, got {}",
                self.e
            )));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::Config(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.nu
            )));
        }
        Ok(())
    }

    /// Constitutive matrix in Voigt form `(xx, yy, engineering xy)`.
    pub fn stiffness(&self) -> [[f64; 3]; 3] {
        let (e, nu) = (self.e, self.nu);
        match self.mode {
            PlaneMode::PlaneStress => {
                let c = e / (1.0 - nu * nu);
                [
                    [c, c * nu, 0.0],
                    [c * nu, c, 0.0],
                    [0.0, 0.0, c * 0.5 * (1.0 - nu)],
                ]
            }
            PlaneMode::PlaneStrain => {
                let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
                [
                    [c * (1.0 - nu), c * nu, 0.0],
                    [c * nu, c * (1.0 - nu), 0.0],
                    [0.0, 0.0, c * 0.5 * (1.0 - 2.0 * nu)],
                ]
            }
        }
    }
}

/// Stress `(sxx, syy, sxy)` as a function of position.
pub type StressFn = Arc<dyn Fn(Point) -> [f64; 3] + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Neumann data: traction from position and outward unit normal, applied on
/// boundary edges with one of `tags`.
#[derive(Clone)]
pub struct TractionField {
    pub tags: Vec<i32>,
    pub eval: Arc<dyn Fn(Point, Point) -> [f64; 2] + Send + Sync>,
}

impl std::fmt::Debug for TractionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TractionField")
            .field("tags", &self.tags)
            .finish_non_exhaustive()
    }
}

impl TractionField {
    pub fn none() -> Self {
        Self {
            tags: Vec::new(),
            eval: Arc::new(|_, _| [0.0, 0.0]),
        }
    }

    pub fn uniform(tags: Vec<i32>, t: [f64; 2]) -> Self {
        Self {
            tags,
            eval: Arc::new(move |_, _| t),
        }
    }

    /// `sigma(x) . n` for an analytic stress field.
    pub fn from_stress(tags: Vec<i32>, stress: StressFn) -> Self {
        Self {
            tags,
            eval: Arc::new(move |x, n| {
                let [sxx, syy, sxy] = stress(x);
                [sxx * n[0] + sxy * n[1], sxy * n[0] + syy * n[1]]
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Elasticity {
    pub material: ElasticMaterial,
    pub traction: TractionField,
    pub body_force: Option<BodyForce>,
    pub solver: SolverOptions,
}

#[derive(Clone)]
pub struct BodyForce(pub VectorFn);

impl std::fmt::Debug for BodyForce {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BodyForce(..)")
    }
}

impl Elasticity {
    pub fn new(material: ElasticMaterial, traction: TractionField) -> Self {
        Self {
            material,
            traction,
            body_force: None,
            solver: SolverOptions::default(),
        }
    }

    /// Solves for the displacement; `guess` seeds the iterative solver.
    pub fn solve(
        &self,
        mesh: &Mesh,
        dirichlet: &[Dirichlet],
        guess: Option<&[[f64; 2]]>,
    ) -> Result<SolutionField> {
        self.material.validate()?;
        check_rigid_modes(mesh, dirichlet)?;
        let c = self.material.stiffness();
        let eps = DEGENERATE_SHAPE;
        let quad = QuadratureRule::triangle(2);
        let mut system = assemble(mesh, 2, |e| {
            let v = mesh.vertices(e);
            let (g, area) = p1_gradients(&v, eps)?;
            let b = strain_operator(&g);
            let mut local = LocalSystem::zeros(6);
            for i in 0..6 {
                for j in 0..6 {
                    let mut s = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            s += b[p][i] * c[p][q] * b[q][j];
                        }
                    }
                    local.add(i, j, area * s);
                }
            }
            if let Some(BodyForce(f)) = &self.body_force {
                for (x, l, w) in quad.map(&v, area) {
                    let fx = f(x);
                    for a in 0..3 {
                        local.rhs[2 * a] += w * l[a] * fx[0];
                        local.rhs[2 * a + 1] += w * l[a] * fx[1];
                    }
                }
            }
            Ok(local)
        })?;
        add_tractions(mesh, &self.traction, &mut system.rhs)?;
        system.apply_nodal(dirichlet)?;
        let x0: Option<Vec<f64>> = guess
            .filter(|g| g.len() == mesh.n_nodes())
            .map(|g| g.iter().flatten().copied().collect());
        let stats = solve(
            &system.matrix,
            &system.rhs,
            SolverKind::SpdMultigrid { block: 2 },
            &self.solver,
            x0.as_deref(),
        )?;
        Ok(SolutionField {
            vector: stats.x.chunks(2).map(|c| [c[0], c[1]]).collect(),
            pressure: None,
        })
    }
}

/// Convenience wrapper with default solver options.
pub fn solve_elasticity(
    mesh: &Mesh,
    material: ElasticMaterial,
    dirichlet: &[Dirichlet],
    traction: &TractionField,
    body_force: Option<BodyForce>,
) -> Result<SolutionField> {
    let problem = Elasticity {
        material,
        traction: traction.clone(),
        body_force,
        solver: SolverOptions::default(),
    };
    problem.solve(mesh, dirichlet, None)
}

/// Voigt strain operator rows `(xx, yy, xy)` over local dofs `(u0, v0, u1, ...)`.
fn strain_operator(g: &[[f64; 2]; 3]) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for a in 0..3 {
        b[0][2 * a] = g[a][0];
        b[1][2 * a + 1] = g[a][1];
        b[2][2 * a] = g[a][1];
        b[2][2 * a + 1] = g[a][0];
    }
    b
}

fn add_tractions(mesh: &Mesh, traction: &TractionField, rhs: &mut [f64]) -> Result<()> {
    if traction.tags.is_empty() {
        return Ok(());
    }
    let topo = build_topology(mesh)?;
    let owner: std::collections::HashMap<(usize, usize), usize> = topo
        .edges
        .iter()
        .filter(|e| e.is_boundary())
        .map(|e| ((e.nodes[0], e.nodes[1]), e.left))
        .collect();
    for be in mesh
        .boundary_edges
        .iter()
        .filter(|b| traction.tags.contains(&b.tag))
    {
        let [a, b] = be.nodes;
        let key = if a < b { (a, b) } else { (b, a) };
        let el = *owner
            .get(&key)
            .ok_or_else(|| Error::Topology(format!("boundary edge {key:?} has no element")))?;
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let len = dist(pa, pb);
        let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let v = mesh.vertices(el);
        let centroid = [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if n[0] * (mid[0] - centroid[0]) + n[1] * (mid[1] - centroid[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        for (s, w) in gauss3() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let t = (traction.eval)(x, n);
            for d in 0..2 {
                rhs[2 * a + d] += w * len * (1.0 - s) * t[d];
                rhs[2 * b + d] += w * len * s * t[d];
            }
        }
    }
    Ok(())
}

/// Fails unless the constraints remove both translations and the rotation.
fn check_rigid_modes(mesh: &Mesh, dirichlet: &[Dirichlet]) -> Result<()> {
    let (lo, hi) = mesh.bounding_box();
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let scale = mesh.diameter().max(f64::MIN_POSITIVE);
    // Gram matrix of the rigid modes restricted to the constrained dofs
    let mut gram = [[0.0; 3]; 3];
    for c in dirichlet {
        if c.node >= mesh.n_nodes() || c.component > 1 {
            return Err(Error::Input(format!(
                "constraint on node {} component {}",
                c.node, c.component
            )));
        }
        let p = mesh.nodes[c.node];
        let (x, y) = ((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
        let row = if c.component == 0 {
            [1.0, 0.0, -y]
        } else {
            [0.0, 1.0, x]
        };
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    let det = gram[0][0] * (gram[1][1] * gram[2][2] - gram[1][2] * gram[2][1])
        - gram[0][1] * (gram[1][0] * gram[2][2] - gram[1][2] * gram[2][0])
        + gram[0][2] * (gram[1][0] * gram[2][1] - gram[1][1] * gram[2][0]);
    let trace = gram[0][0] + gram[1][1] + gram[2][2];
    if !(det > 1e-12 * trace.powi(3)) {
        return Err(Error::Singular(
            "Dirichlet constraints leave a rigid-body mode free".into(),
        ));
    }
    Ok(())
}

/// Constant strain `(xx, yy, engineering xy)` of element `e`.
pub fn element_strain(mesh: &Mesh, field: &SolutionField, e: usize) -> Result<[f64; 3]> {
    let (g, _) = p1_gradients(&mesh.vertices(e), 0.0)?;
    let mut eps = [0.0; 3];
    for (a, &n) in mesh.elements[e].nodes.iter().enumerate() {
        let u = field.vector[n];
        eps[0] += g[a][0] * u[0];
        eps[1] += g[a][1] * u[1];
        eps[2] += g[a][1] * u[0] + g[a][0] * u[1];
    }
    Ok(eps)
}

/// `1/2 sum_e area_e eps_e . C eps_e`.
pub fn strain_energy(
    mesh: &Mesh,
    field: &SolutionField,
    material: &ElasticMaterial,
) -> Result<f64> {
    if field.n_nodes() != mesh.n_nodes() {
        return Err(Error::Input(format!(
            "field has {} nodes, mesh has {}",
            field.n_nodes(),
            mesh.n_nodes()
        )));
    }
    let c = material.stiffness();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let eps = element_strain(mesh, field, e)?;
        let mut s = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                s += eps[p] * c[p][q] * eps[q];
            }
        }
        total += 0.5 * mesh.area(e) * s;
    }
    Ok(total)
}

/// Relative energy-norm error `sqrt(|U - U_h| / |U|)`.
pub fn energy_error(u_h: f64, u_exact: f64) -> Result<f64> {
    if u_exact == 0.0 || !u_exact.is_finite() {
        return Err(Error::Metric(format!(
            "exact energy must be finite and nonzero, got {u_exact}"
        )));
    }
    Ok(((u_exact - u_h).abs() / u_exact.abs()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, side, Diagonal};

    #[test]
    fn material_ranges() {
        assert!(ElasticMaterial::new(0.0, 0.3, PlaneMode::PlaneStress).is_err());
        assert!(ElasticMaterial::new(1.0, 0.5, PlaneMode::PlaneStrain).is_err());
        assert!(ElasticMaterial::new(1.0, -0.99, PlaneMode::PlaneStrain).is_ok());
    }

    #[test]
    fn energy_error_values() {
        assert_eq!(energy_error(2.0, 2.0).unwrap(), 0.0);
        assert!((energy_error(0.99, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert!((energy_error(1.0 - 1e-4, 1.0).unwrap() - 0.01).abs() < 1e-12);
        assert!(matches!(energy_error(1.0, 0.0), Err(Error::Metric(_))));
    }

    #[test]
    fn uniform_strain_energy() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 3, 2, Diagonal::Left).unwrap();
        let mat = ElasticMaterial::new(7.0, 0.25, PlaneMode::PlaneStress).unwrap();
        let field = SolutionField {
            vector: m.nodes.iter().map(|p| [p[0], 0.0]).collect(),
            pressure: None,
        };
        let u = strain_energy(&m, &field, &mat).unwrap();
        assert!((u - 0.5 * 7.0 / (1.0 - 0.0625)).abs() < 1e-12);
        assert_eq!(
            strain_energy(&m, &SolutionField::zeros(m.n_nodes()), &mat).unwrap(),
            0.0
        );
    }

    #[test]
    fn free_body_is_singular() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 2, 2, Diagonal::Right).unwrap();
        let mat = ElasticMaterial::new(1.0, 0.3, PlaneMode::PlaneStrain).unwrap();
        // only translations fixed
        let bc = [Dirichlet::new(0, 0, 0.0), Dirichlet::new(0, 1, 0.0)];
        let e = solve_elasticity(&m, mat, &bc, &TractionField::none(), None).unwrap_err();
        assert!(matches!(e, Error::Singular(_)));
    }

    #[test]
    fn homogeneous_problem_gives_zero() {
        let m = rectangle([0.0, 0.0], [1.0, 1.0], 2, 2, Diagonal::Right).unwrap();
        let mat = ElasticMaterial::new(1.0, 0.3, PlaneMode::PlaneStrain).unwrap();
        let bc: Vec<Dirichlet> = m
            .nodes_with_tags(&[side::LEFT])
            .into_iter()
            .flat_map(|n| [Dirichlet::new(n, 0, 0.0), Dirichlet::new(n, 1, 0.0)])
            .collect();
        let u = solve_elasticity(&m, mat, &bc, &TractionField::none(), None).unwrap();
        assert!(u.vector.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }
}
