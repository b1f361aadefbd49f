use amr_core::assembly::Dirichlet;
use amr_core::mesh::{rectangle, side, Diagonal, Mesh};
use amr_core::solid::{
    solve_elasticity, strain_energy, BodyForce, ElasticMaterial, PlaneMode, TractionField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Structured mesh with interior nodes jittered.
fn distorted_square(seed: u64) -> Mesh {
    let mut m = rectangle([0.0, 0.0], [1.0, 1.0], 6, 5, Diagonal::CrissCross).unwrap();
    let boundary = m.nodes_with_tags(&[1, 2, 3, 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, p) in m.nodes.iter_mut().enumerate() {
        if !boundary.contains(&i) {
            p[0] += rng.gen_range(-0.02..0.02);
            p[1] += rng.gen_range(-0.02..0.02);
        }
    }
    m.validate().unwrap();
    m
}

#[test]
fn uniaxial_patch_test() {
    let (e, nu, t) = (3.0, 0.3, 0.7);
    let mat = ElasticMaterial::new(e, nu, PlaneMode::PlaneStress).unwrap();
    for seed in 0..3 {
        let m = distorted_square(seed);
        let mut bc: Vec<Dirichlet> = m
            .nodes_with_tags(&[side::LEFT])
            .into_iter()
            .map(|n| Dirichlet::new(n, 0, 0.0))
            .collect();
        bc.push(Dirichlet::new(m.nearest_node([0.0, 0.0]).unwrap(), 1, 0.0));
        let traction = TractionField::uniform(vec![side::RIGHT], [t, 0.0]);
        let u = solve_elasticity(&m, mat, &bc, &traction, None).unwrap();
        for (p, v) in m.nodes.iter().zip(&u.vector) {
            assert!((v[0] - t / e * p[0]).abs() < 1e-10, "{p:?} {v:?}");
            assert!((v[1] + nu * t / e * p[1]).abs() < 1e-10, "{p:?} {v:?}");
        }
    }
}

#[test]
fn linear_field_reproduced_from_boundary_data() {
    let mat = ElasticMaterial::new(1.0, 0.3, PlaneMode::PlaneStrain).unwrap();
    let exact = |p: [f64; 2]| {
        [
            0.1 + 0.3 * p[0] - 0.2 * p[1],
            -0.05 + 0.4 * p[0] + 0.15 * p[1],
        ]
    };
    let m = distorted_square(11);
    let bc: Vec<Dirichlet> = m
        .nodes_with_tags(&[1, 2, 3, 4])
        .into_iter()
        .flat_map(|n| {
            let u = exact(m.nodes[n]);
            [Dirichlet::new(n, 0, u[0]), Dirichlet::new(n, 1, u[1])]
        })
        .collect();
    let u = solve_elasticity(&m, mat, &bc, &TractionField::none(), None).unwrap();
    for (p, v) in m.nodes.iter().zip(&u.vector) {
        let x = exact(*p);
        assert!((v[0] - x[0]).abs() < 1e-10 && (v[1] - x[1]).abs() < 1e-10);
    }
}

#[test]
fn rigid_translation_of_dirichlet_data() {
    let mat = ElasticMaterial::new(2.0, 0.25, PlaneMode::PlaneStrain).unwrap();
    let m = rectangle([0.0, 0.0], [2.0, 1.0], 8, 4, Diagonal::Left).unwrap();
    let left = m.nodes_with_tags(&[side::LEFT]);
    let traction = TractionField::uniform(vec![side::TOP], [0.1, -0.3]);
    let gravity = BodyForce(Arc::new(|p: [f64; 2]| [0.0, -0.2 * p[0]]));
    let shift = [0.37, -1.25];
    let solve = |d: [f64; 2]| {
        let bc: Vec<Dirichlet> = left
            .iter()
            .flat_map(|&n| [Dirichlet::new(n, 0, d[0]), Dirichlet::new(n, 1, d[1])])
            .collect();
        solve_elasticity(&m, mat, &bc, &traction, Some(gravity.clone())).unwrap()
    };
    let a = solve([0.0, 0.0]);
    let b = solve(shift);
    let scale = a
        .vector
        .iter()
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max);
    for (va, vb) in a.vector.iter().zip(&b.vector) {
        assert!((vb[0] - va[0] - shift[0]).abs() < 1e-9 * scale.max(1.0));
        assert!((vb[1] - va[1] - shift[1]).abs() < 1e-9 * scale.max(1.0));
    }
    let (ua, ub) = (
        strain_energy(&m, &a, &mat).unwrap(),
        strain_energy(&m, &b, &mat).unwrap(),
    );
    assert!(
        ((ua - ub) / ua).abs() < 1e-12 || (ua - ub).abs() < 1e-9 * ua,
        "{ua} {ub}"
    );
}

#[test]
fn cantilever_energy_matches_work_of_load() {
    // Clapeyron: 2U equals the work done by the applied traction
    let mat = ElasticMaterial::new(1.0, 0.3, PlaneMode::PlaneStress).unwrap();
    let m = rectangle([0.0, 0.0], [4.0, 1.0], 16, 4, Diagonal::Right).unwrap();
    let bc: Vec<Dirichlet> = m
        .nodes_with_tags(&[side::LEFT])
        .into_iter()
        .flat_map(|n| [Dirichlet::new(n, 0, 0.0), Dirichlet::new(n, 1, 0.0)])
        .collect();
    let t = [0.0, -0.01];
    let traction = TractionField::uniform(vec![side::RIGHT], t);
    let u = solve_elasticity(&m, mat, &bc, &traction, None).unwrap();
    let mut work = 0.0;
    for be in m.boundary_edges.iter().filter(|b| b.tag == side::RIGHT) {
        let [a, b] = be.nodes;
        let len = (m.nodes[a][1] - m.nodes[b][1]).abs();
        work += 0.5 * len * (t[1] * (u.vector[a][1] + u.vector[b][1]));
    }
    let energy = strain_energy(&m, &u, &mat).unwrap();
    assert!((2.0 * energy - work).abs() < 1e-8 * work.abs());
}
