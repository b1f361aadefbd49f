//! The four benchmark problems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use amr_core::assembly::Dirichlet;
use amr_core::driver::Problem;
use amr_core::fluid::{l2_velocity_error, FluidProps, NavierStokes};
use amr_core::mesh::{parse_msh, Mesh};
use amr_core::solid::{
    energy_error, strain_energy, ElasticMaterial, Elasticity, PlaneMode, TractionField,
};
use amr_core::{Error, Point, Result, SolutionField};
use serde::{Deserialize, Serialize};

use crate::meshgen::{self, cavity, channel, plate, slit};
use crate::reference::FlowReference;

/// Exact strain energy of the slit panel.
pub const SC0_ENERGY: f64 = 0.04741292416402;
/// Exact strain energy of the plate with a hole.
pub const SC1_ENERGY: f64 = 0.008444912711942;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "SC0")]
    Sc0,
    #[serde(rename = "SC1")]
    Sc1,
    #[serde(rename = "FC0")]
    Fc0,
    #[serde(rename = "FC1")]
    Fc1,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Sc0, CaseId::Sc1, CaseId::Fc0, CaseId::Fc1];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Sc0 => "SC0",
            CaseId::Sc1 => "SC1",
            CaseId::Fc0 => "FC0",
            CaseId::Fc1 => "FC1",
        }
    }

    pub fn is_fluid(self) -> bool {
        matches!(self, CaseId::Fc0 | CaseId::Fc1)
    }

    fn mesh_text(self) -> &'static str {
        match self {
            CaseId::Sc0 => include_str!("../meshes/sc0.msh"),
            CaseId::Sc1 => include_str!("../meshes/sc1.msh"),
            CaseId::Fc0 => include_str!("../meshes/fc0.msh"),
            CaseId::Fc1 => include_str!("../meshes/fc1.msh"),
        }
    }

    /// The committed initial mesh, with its curved boundaries attached.
    pub fn initial_mesh(self) -> Result<Mesh> {
        let path = format!("meshes/{}.msh", self.name().to_ascii_lowercase());
        let mesh = parse_msh(self.mesh_text(), path)?;
        Ok(match self {
            CaseId::Sc1 => mesh.with_curves(vec![meshgen::hole_curve()]),
            CaseId::Fc1 => mesh.with_curves(vec![meshgen::cylinder_curve()]),
            _ => mesh,
        })
    }

    /// Coarse mesh whose uniform refinements carry the reference flow.
    pub fn reference_base_mesh(self) -> Result<Mesh> {
        match self {
            CaseId::Fc0 => meshgen::cavity_graded(16, 1.5),
            _ => self.initial_mesh(),
        }
    }

    /// Regenerates the initial mesh from its generator.
    pub fn generate_mesh(self) -> Result<Mesh> {
        match self {
            CaseId::Sc0 => meshgen::slit_panel(8),
            CaseId::Sc1 => meshgen::plate_with_hole(3, 4, 1.3),
            CaseId::Fc0 => meshgen::cavity(8),
            CaseId::Fc1 => meshgen::channel(6, 5, 1.3),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SC0" => Ok(CaseId::Sc0),
            "SC1" => Ok(CaseId::Sc1),
            "FC0" => Ok(CaseId::Fc0),
            "FC1" => Ok(CaseId::Fc1),
            _ => Err(Error::Config(format!(
                "unknown case {s:?}; valid: SC0, SC1, FC0, FC1"
            ))),
        }
    }
}

/// Mode-I crack-tip stresses with unit stress intensity.
pub fn slit_stress(p: Point) -> [f64; 3] {
    let r = p[0].hypot(p[1]);
    let phi = p[1].atan2(p[0]);
    let k = 1.0 / (2.0 * std::f64::consts::PI * r).sqrt();
    let (s, c) = (0.5 * phi).sin_cos();
    let (s3, c3) = (1.5 * phi).sin_cos();
    [
        k * c * (1.0 - s * s3),
        k * c * (1.0 + s * s3),
        k * s * c * c3,
    ]
}

/// Stresses around a unit hole in an infinite plate under uniaxial tension 10.
pub fn plate_stress(p: Point) -> [f64; 3] {
    let r2 = p[0] * p[0] + p[1] * p[1];
    let r4 = r2 * r2;
    let phi = p[1].atan2(p[0]);
    let (s, c) = phi.sin_cos();
    let (s2, s4) = (s * s, s * s * s * s);
    let sxx = 5.0
        * (2.0 * r4 - 16.0 * r2 * s4 + 22.0 * r2 * s2 - 5.0 * r2 + 24.0 * s4 - 24.0 * s2 + 3.0)
        / r4;
    let syy = 5.0 * (16.0 * r2 * s4 - 14.0 * r2 * s2 + r2 - 24.0 * s4 + 24.0 * s2 - 3.0) / r4;
    let sxy = 10.0 * (8.0 * r2 * s2 - 5.0 * r2 - 12.0 * s2 + 6.0) * s * c / r4;
    [sxx, syy, sxy]
}

/// Elasticity benchmark with an exact strain energy.
#[derive(Debug, Clone)]
pub struct SolidCase {
    pub id: CaseId,
    pub mesh: Mesh,
    pub elasticity: Elasticity,
    pub exact_energy: f64,
}

impl SolidCase {
    pub fn new(id: CaseId) -> Result<Self> {
        Self::with_mesh(id, id.initial_mesh()?)
    }

    pub fn with_mesh(id: CaseId, mesh: Mesh) -> Result<Self> {
        let (material, traction, exact_energy) = match id {
            CaseId::Sc0 => (
                ElasticMaterial::new(10.0, 0.3, PlaneMode::PlaneStrain)?,
                TractionField::from_stress(vec![slit::OUTER], Arc::new(slit_stress)),
                SC0_ENERGY,
            ),
            CaseId::Sc1 => (
                ElasticMaterial::new(1e5, 0.3, PlaneMode::PlaneStress)?,
                TractionField::from_stress(vec![plate::RIGHT, plate::TOP], Arc::new(plate_stress)),
                SC1_ENERGY,
            ),
            _ => return Err(Error::Config(format!("{id} is not a solid case"))),
        };
        Ok(Self {
            id,
            mesh,
            elasticity: Elasticity::new(material, traction),
            exact_energy,
        })
    }

    pub fn dirichlet(&self, mesh: &Mesh) -> Result<Vec<Dirichlet>> {
        match self.id {
            CaseId::Sc0 => {
                // rigid motions only: pin (1, 0) and hold (1, 1) horizontally
                let pin = |p: Point| {
                    mesh.nearest_node(p)
                        .ok_or_else(|| Error::Input("mesh has no nodes".into()))
                };
                let (a, b) = (pin([1.0, 0.0])?, pin([1.0, 1.0])?);
                Ok(vec![
                    Dirichlet::new(a, 0, 0.0),
                    Dirichlet::new(a, 1, 0.0),
                    Dirichlet::new(b, 0, 0.0),
                ])
            }
            _ => {
                let mut bc: Vec<Dirichlet> = mesh
                    .nodes_with_tags(&[plate::LEFT])
                    .into_iter()
                    .map(|n| Dirichlet::new(n, 0, 0.0))
                    .collect();
                bc.extend(
                    mesh.nodes_with_tags(&[plate::BOTTOM])
                        .into_iter()
                        .map(|n| Dirichlet::new(n, 1, 0.0)),
                );
                Ok(bc)
            }
        }
    }

    pub fn energy(&self, mesh: &Mesh, solution: &SolutionField) -> Result<f64> {
        strain_energy(mesh, solution, &self.elasticity.material)
    }
}

impl Problem for SolidCase {
    fn initial_mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn solve(&self, mesh: &Mesh, guess: Option<&SolutionField>) -> Result<SolutionField> {
        let bc = self.dirichlet(mesh)?;
        self.elasticity
            .solve(mesh, &bc, guess.map(|g| g.vector.as_slice()))
    }

    fn error(&self, mesh: &Mesh, solution: &SolutionField) -> Result<f64> {
        energy_error(self.energy(mesh, solution)?, self.exact_energy)
    }
}

/// Flow settings of a fluid case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    pub mu: f64,
    /// Lid speed (FC0) or peak inflow speed (FC1).
    pub speed: f64,
}

impl FlowSettings {
    pub fn default_for(id: CaseId) -> Self {
        match id {
            CaseId::Fc1 => Self {
                mu: 1e-3,
                speed: 0.3,
            },
            _ => Self {
                mu: 1e-2,
                speed: 1.0,
            },
        }
    }
}

/// Parabolic inflow profile across the channel.
pub fn inflow_profile(y: f64, u_max: f64) -> f64 {
    let h = meshgen::CHANNEL_HEIGHT;
    4.0 * u_max * y * (h - y) / (h * h)
}

/// Steady Navier-Stokes benchmark measured against a reference solution.
#[derive(Debug, Clone)]
pub struct FluidCase {
    pub id: CaseId,
    pub mesh: Mesh,
    pub settings: FlowSettings,
    pub solver: NavierStokes,
    pub reference: Option<Arc<FlowReference>>,
}

impl FluidCase {
    pub fn new(id: CaseId, settings: FlowSettings) -> Result<Self> {
        Self::with_mesh(id, id.initial_mesh()?, settings)
    }

    pub fn with_mesh(id: CaseId, mesh: Mesh, settings: FlowSettings) -> Result<Self> {
        let outflow = match id {
            CaseId::Fc0 => vec![],
            CaseId::Fc1 => vec![channel::OUTFLOW],
            _ => return Err(Error::Config(format!("{id} is not a fluid case"))),
        };
        let solver = NavierStokes::new(FluidProps::new(settings.mu), outflow);
        Ok(Self {
            id,
            mesh,
            settings,
            solver,
            reference: None,
        })
    }

    pub fn with_reference(mut self, reference: Arc<FlowReference>) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Velocity constraints: no slip on walls, then the driven boundary.
    pub fn dirichlet(&self, mesh: &Mesh) -> Vec<Dirichlet> {
        let (walls, driven): (Vec<i32>, i32) = match self.id {
            CaseId::Fc0 => (vec![cavity::WALL], cavity::LID),
            _ => (vec![channel::WALL, channel::CYLINDER], channel::INFLOW),
        };
        let fixed = mesh.nodes_with_tags(&walls);
        let mut bc = Vec::with_capacity(2 * fixed.len());
        for &n in &fixed {
            bc.push(Dirichlet::new(n, 0, 0.0));
            bc.push(Dirichlet::new(n, 1, 0.0));
        }
        for n in mesh.nodes_with_tags(&[driven]) {
            if fixed.binary_search(&n).is_ok() {
                continue;
            }
            let u = match self.id {
                CaseId::Fc0 => self.settings.speed,
                _ => inflow_profile(mesh.nodes[n][1], self.settings.speed),
            };
            bc.push(Dirichlet::new(n, 0, u));
            bc.push(Dirichlet::new(n, 1, 0.0));
        }
        bc
    }

    pub fn solve_flow(
        &self,
        mesh: &Mesh,
        guess: Option<&SolutionField>,
    ) -> Result<amr_core::fluid::FlowSolution> {
        self.solver.solve(mesh, &self.dirichlet(mesh), guess)
    }
}

impl Problem for FluidCase {
    fn initial_mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn solve(&self, mesh: &Mesh, guess: Option<&SolutionField>) -> Result<SolutionField> {
        Ok(self.solve_flow(mesh, guess)?.field)
    }

    fn error(&self, mesh: &Mesh, solution: &SolutionField) -> Result<f64> {
        let r = self.reference.as_ref().ok_or_else(|| {
            Error::Metric(format!("{} has no reference solution attached", self.id))
        })?;
        l2_velocity_error(mesh, &solution.vector, &r.mesh, &r.velocity)
    }
}
