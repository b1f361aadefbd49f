use amr_core::assembly::Dirichlet;
use amr_core::driver::{run, run_uniform, AmrConfig, Problem, Termination};
use amr_core::marking::MarkingConfig;
use amr_core::mesh::{rectangle, side, Diagonal, Mesh};
use amr_core::solid::{
    energy_error, strain_energy, ElasticMaterial, Elasticity, PlaneMode, TractionField,
};
use amr_core::{Error, Result, SolutionField};

/// A bar pulled by a traction concentrated near one corner of its free end.
struct Bar {
    mesh: Mesh,
    model: Elasticity,
    exact: f64,
}

impl Bar {
    fn new(exact: f64) -> Self {
        let mesh = rectangle([0.0, 0.0], [2.0, 1.0], 4, 2, Diagonal::Right).unwrap();
        let mat = ElasticMaterial::new(1.0, 0.3, PlaneMode::PlaneStress).unwrap();
        let traction = TractionField {
            tags: vec![side::RIGHT],
            eval: std::sync::Arc::new(|x: [f64; 2], _n| [(1.0 - x[1]).powi(4), 0.0]),
        };
        Self {
            mesh,
            model: Elasticity::new(mat, traction),
            exact,
        }
    }
}

impl Problem for Bar {
    fn initial_mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn solve(&self, mesh: &Mesh, guess: Option<&SolutionField>) -> Result<SolutionField> {
        let bc: Vec<Dirichlet> = mesh
            .nodes_with_tags(&[side::LEFT])
            .into_iter()
            .flat_map(|n| [Dirichlet::new(n, 0, 0.0), Dirichlet::new(n, 1, 0.0)])
            .collect();
        self.model
            .solve(mesh, &bc, guess.map(|g| g.vector.as_slice()))
    }

    fn error(&self, mesh: &Mesh, solution: &SolutionField) -> Result<f64> {
        energy_error(
            strain_energy(mesh, solution, &self.model.material)?,
            self.exact,
        )
    }
}

struct Failing(Mesh);

impl Problem for Failing {
    fn initial_mesh(&self) -> &Mesh {
        &self.0
    }
    fn solve(&self, mesh: &Mesh, _: Option<&SolutionField>) -> Result<SolutionField> {
        if mesh.n_elements() > 8 {
            return Err(Error::Singular("too fine".into()));
        }
        Ok(SolutionField::zeros(mesh.n_nodes()))
    }
    fn error(&self, _: &Mesh, _: &SolutionField) -> Result<f64> {
        Ok(1.0)
    }
}

#[test]
fn huge_threshold_converges_immediately() {
    let bar = Bar::new(1.0);
    let mut cfg = AmrConfig::new(MarkingConfig::Doe { theta: 0.5 });
    cfg.threshold = 1e9;
    let r = run(&bar, &cfg).unwrap();
    assert_eq!(r.termination, Termination::Converged);
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.cycles_to_threshold(), Some(0));
    assert_eq!(r.records[0].n_marked, 0);
}

#[test]
fn max_with_zero_alpha_matches_uniform() {
    let bar = Bar::new(1.0);
    let mut cfg = AmrConfig::new(MarkingConfig::Max { alpha: 0.0 });
    cfg.max_cycles = 3;
    let a = run(&bar, &cfg).unwrap();
    let b = run_uniform(&bar, 3, true).unwrap();
    assert_eq!(a.termination, Termination::CycleCap);
    assert_eq!(a.final_mesh, b.final_mesh);
    let n0 = bar.mesh.n_elements();
    for (k, r) in b.records.iter().enumerate() {
        assert_eq!(r.cycle, k);
        assert_eq!(r.n_elements, n0 * 4usize.pow(k as u32));
    }
}

#[test]
fn adaptive_run_records_grow_and_repeat() {
    let bar = Bar::new(1.0);
    let mut cfg = AmrConfig::new(MarkingConfig::Doe { theta: 0.5 });
    cfg.max_cycles = 6;
    let a = run(&bar, &cfg).unwrap();
    let b = run(&bar, &cfg).unwrap();
    assert_eq!(a.records.len(), 7);
    for w in a.records.windows(2) {
        assert!(w[1].n_nodes > w[0].n_nodes && w[1].n_elements > w[0].n_elements);
        assert!(w[0].n_marked > 0);
    }
    let strip = |r: &amr_core::driver::CycleRecord| {
        (
            r.cycle,
            r.n_nodes,
            r.n_elements,
            r.error,
            r.n_marked,
            r.eta,
            r.size,
        )
    };
    assert_eq!(
        a.records.iter().map(strip).collect::<Vec<_>>(),
        b.records.iter().map(strip).collect::<Vec<_>>()
    );
    assert_eq!(a.final_eta.len(), a.final_mesh.n_elements());
}

#[test]
fn empty_mark_terminates() {
    let bar = Bar::new(1.0);
    let cfg = AmrConfig::new(MarkingConfig::Zsc { z: 50.0 });
    let r = run(&bar, &cfg).unwrap();
    assert_eq!(r.termination, Termination::EmptyMark);
    assert_eq!(r.records.len(), 1);
    assert!(r.cycles_to_threshold().is_none());
}

#[test]
fn solver_failure_keeps_partial_records() {
    let m = rectangle([0.0, 0.0], [1.0, 1.0], 1, 1, Diagonal::Right).unwrap();
    let r = run_uniform(&Failing(m), 5, false).unwrap();
    assert!(matches!(r.termination, Termination::SolverFailure(_)));
    assert_eq!(r.records.len(), 2);
    assert!(r.final_solution.is_none());
}

#[test]
fn invalid_config_rejected() {
    let bar = Bar::new(1.0);
    let mut cfg = AmrConfig::new(MarkingConfig::Qua { gamma: 0.5 });
    cfg.threshold = 0.0;
    assert!(matches!(run(&bar, &cfg), Err(Error::Config(_))));
    assert!(run_uniform(&bar, 0, true).is_err());
}
