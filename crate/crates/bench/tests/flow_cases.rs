use std::path::PathBuf;
use std::sync::Arc;

use amr_bench::cases::{inflow_profile, CaseId, FlowSettings, FluidCase};
use amr_bench::config::DEFAULT_REFERENCE_LEVEL;
use amr_bench::meshgen::{CHANNEL_HEIGHT, CYLINDER_RADIUS};
use amr_bench::reference;
use amr_core::driver::{run, AmrConfig};
use amr_core::fluid::boundary_flux;
use amr_core::marking::{MarkingConfig, Strategy};
use amr_core::mesh::refine;

fn fc1() -> FluidCase {
    FluidCase::new(CaseId::Fc1, FlowSettings::default_for(CaseId::Fc1)).unwrap()
}

fn inflow_flux(u_max: f64) -> f64 {
    let n = 2000;
    let h = CHANNEL_HEIGHT / n as f64;
    (0..n)
        .map(|i| h * inflow_profile((i as f64 + 0.5) * h, u_max))
        .sum()
}

#[test]
fn fc1_reynolds_number_is_twenty() {
    let s = FlowSettings::default_for(CaseId::Fc1);
    let re = 2.0 * s.speed * 2.0 * CYLINDER_RADIUS / (3.0 * s.mu);
    assert!((re - 20.0).abs() < 1e-12, "{re}");
}

#[test]
fn picard_contracts_on_the_initial_mesh() {
    let case = fc1();
    let s = case.solve_flow(&case.mesh, None).unwrap();
    let r = &s.residuals;
    assert!(*r.last().unwrap() <= 1e-8, "{r:?}");
    for k in 2..r.len() - 1 {
        assert!(r[k + 1] < r[k], "residual rose at step {}: {r:?}", k + 1);
    }
}

#[test]
fn converged_flow_conserves_mass() {
    let case = fc1();
    let inflow = inflow_flux(case.settings.speed);
    let mut mesh = case.mesh.clone();
    for _ in 0..2 {
        let u = case.solve_flow(&mesh, None).unwrap().field.vector;
        let net = boundary_flux(&mesh, &u).unwrap();
        assert!(net.abs() <= 1e-8 * inflow, "net flux {net:e}, inflow {inflow}");
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        mesh = refine(&mesh, &all).unwrap().mesh;
    }
}

#[test]
fn fc1_doerfler_error_decreases_every_cycle() {
    let level = DEFAULT_REFERENCE_LEVEL;
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("references");
    let settings = FlowSettings::default_for(CaseId::Fc1);
    let r = reference::load_for(CaseId::Fc1, level, &dir, settings).unwrap_or_else(|_| {
        let r = reference::build(CaseId::Fc1, level, settings).unwrap();
        r.save(dir.join(reference::file_name(CaseId::Fc1, level)))
            .unwrap();
        r
    });
    let case = fc1().with_reference(Arc::new(r));
    let config = AmrConfig::new(MarkingConfig::parse(Strategy::Doe, "0.9", 42).unwrap());
    let result = run(&case, &config).unwrap();
    assert!(result.cycles_to_threshold().is_some());
    let errors: Vec<f64> = result.records.iter().map(|c| c.error).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
}
