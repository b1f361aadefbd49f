use amr_core::estimator::{kelly, kelly_scalar, tangential_jump_residual};
use amr_core::mesh::{build_topology, rectangle, refine, BoundaryEdge, Diagonal, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mesh(seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = [Diagonal::Right, Diagonal::Left, Diagonal::CrissCross][rng.gen_range(0..3)];
    let mut m = rectangle(
        [0.0, 0.0],
        [1.0 + rng.gen::<f64>(), 1.0],
        rng.gen_range(2..6),
        rng.gen_range(2..6),
        diag,
    )
    .unwrap();
    for _ in 0..3 {
        let n = m.n_elements();
        let marked: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
        m = refine(&m, &marked).unwrap().mesh;
    }
    let boundary = m.nodes_with_tags(&[1, 2, 3, 4]);
    let h = m.element_sizes().into_iter().fold(f64::INFINITY, f64::min);
    for (i, p) in m.nodes.iter_mut().enumerate() {
        if !boundary.contains(&i) {
            p[0] += rng.gen_range(-0.1..0.1) * h;
            p[1] += rng.gen_range(-0.1..0.1) * h;
        }
    }
    m.validate().unwrap();
    m
}

#[test]
fn linear_fields_have_zero_indicators() {
    for seed in 0..20 {
        let m = random_mesh(seed);
        let topo = build_topology(&m).unwrap();
        let f: Vec<[f64; 2]> = m
            .nodes
            .iter()
            .map(|p| [0.3 - 1.7 * p[0] + 2.2 * p[1], 5.0 * p[0] + 0.1 * p[1]])
            .collect();
        let eta = kelly(&m, &topo, &f).unwrap();
        assert_eq!(eta.len(), m.n_elements());
        assert!(eta.values.iter().all(|&v| v < 1e-12), "seed {seed}");
    }
}

#[test]
fn tangential_jumps_vanish() {
    for seed in 0..20 {
        let m = random_mesh(seed);
        let topo = build_topology(&m).unwrap();
        let f: Vec<[f64; 2]> = m
            .nodes
            .iter()
            .map(|p| [(3.0 * p[0]).sin() * p[1], (p[0] * p[1]).exp()])
            .collect();
        let r = tangential_jump_residual(&m, &topo, &f).unwrap();
        assert!(r <= 1e-12, "seed {seed} {r:e}");
    }
}

#[test]
fn indicators_scale_with_field() {
    let m = random_mesh(5);
    let topo = build_topology(&m).unwrap();
    let f: Vec<f64> = m.nodes.iter().map(|p| p[0] * p[0] - p[1]).collect();
    let g: Vec<f64> = f.iter().map(|v| -3.0 * v).collect();
    let a = kelly_scalar(&m, &topo, &f).unwrap();
    let b = kelly_scalar(&m, &topo, &g).unwrap();
    let top = b.values.iter().copied().fold(0.0, f64::max);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((3.0 * x - y).abs() <= 1e-12 * top);
    }
}

#[test]
fn reflection_permutes_indicators() {
    let m = random_mesh(9);
    let f = |p: [f64; 2]| [p[0] * p[0] * p[1], (p[0] - p[1]).powi(3)];
    let topo = build_topology(&m).unwrap();
    let field: Vec<[f64; 2]> = m.nodes.iter().map(|&p| f(p)).collect();
    let eta = kelly(&m, &topo, &field).unwrap().values;

    // mirror x -> -x; triangles are reoriented by the constructor
    let nodes: Vec<[f64; 2]> = m.nodes.iter().map(|p| [-p[0], p[1]]).collect();
    let tris: Vec<[usize; 3]> = m.elements.iter().map(|e| e.nodes).collect();
    let bnd: Vec<BoundaryEdge> = m.boundary_edges.clone();
    let mirrored = Mesh::from_triangles(nodes, tris, bnd).unwrap();
    let topo_m = build_topology(&mirrored).unwrap();
    // the reflected field u*(x, y) = R u(-x, y)
    let field_m: Vec<[f64; 2]> = m
        .nodes
        .iter()
        .map(|&p| {
            let v = f(p);
            [-v[0], v[1]]
        })
        .collect();
    let eta_m = kelly(&mirrored, &topo_m, &field_m).unwrap().values;
    for (a, b) in eta.iter().zip(&eta_m) {
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
