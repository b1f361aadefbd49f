//! Gradient-jump (Kelly) error indicator for P1 vector fields.

use rayon::prelude::*;

use crate::assembly::p1_gradients;
use crate::mesh::{EdgeTopology, Mesh};
use crate::{Error, Result};

/// Per-element indicator values aligned with the mesh elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorIndicators {
    pub values: Vec<f64>,
}

impl ErrorIndicators {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Element gradients `G[c][d] = d u_c / d x_d` for `comps` components.
fn gradients(
    mesh: &Mesh,
    comps: usize,
    value: &(impl Fn(usize, usize) -> f64 + Sync),
) -> Result<Vec<Vec<[f64; 2]>>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let (g, _) = p1_gradients(&mesh.vertices(e), 0.0)?;
            let nodes = mesh.elements[e].nodes;
            Ok((0..comps)
                .map(|c| {
                    let mut out = [0.0; 2];
                    for a in 0..3 {
                        let v = value(nodes[a], c);
                        out[0] += g[a][0] * v;
                        out[1] += g[a][1] * v;
                    }
                    out
                })
                .collect())
        })
        .collect()
}

fn kelly_impl(
    mesh: &Mesh,
    topo: &EdgeTopology,
    comps: usize,
    value: impl Fn(usize, usize) -> f64 + Sync,
) -> Result<ErrorIndicators> {
    if topo.element_edges.len() != mesh.n_elements() {
        return Err(Error::Input("topology does not belong to this mesh".into()));
    }
    let grads = gradients(mesh, comps, &value)?;
    let mut sums = vec![0.0; mesh.n_elements()];
    for edge in &topo.edges {
        let Some(r) = edge.right else { continue };
        let l = edge.left;
        let mut jump = 0.0;
        for c in 0..comps {
            for d in 0..2 {
                let j = grads[l][c][d] - grads[r][c][d];
                jump += j * j;
            }
        }
        let w = edge.length(mesh) * jump;
        sums[l] += w;
        sums[r] += w;
    }
    let values = sums
        .iter()
        .enumerate()
        .map(|(e, s)| (mesh.perimeter(e) / 24.0 * s).sqrt())
        .collect();
    Ok(ErrorIndicators { values })
}

/// `eta_e = sqrt(perimeter_e / 24 * sum_f |f| ||G_L - G_R||_F^2)` over the
/// interior edges `f` of each element. Boundary edges contribute nothing.
pub fn kelly(mesh: &Mesh, topo: &EdgeTopology, field: &[[f64; 2]]) -> Result<ErrorIndicators> {
    if field.len() != mesh.n_nodes() {
        return Err(Error::Input(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.n_nodes()
        )));
    }
    kelly_impl(mesh, topo, 2, |n, c| field[n][c])
}

/// Scalar variant of [`kelly`].
pub fn kelly_scalar(mesh: &Mesh, topo: &EdgeTopology, field: &[f64]) -> Result<ErrorIndicators> {
    if field.len() != mesh.n_nodes() {
        return Err(Error::Input(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.n_nodes()
        )));
    }
    kelly_impl(mesh, topo, 1, |n, _| field[n])
}

/// Largest tangential component of the gradient jump over interior edges,
/// relative to the Frobenius norms of the two adjacent gradients.
pub fn tangential_jump_residual(
    mesh: &Mesh,
    topo: &EdgeTopology,
    field: &[[f64; 2]],
) -> Result<f64> {
    if field.len() != mesh.n_nodes() {
        return Err(Error::Input(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.n_nodes()
        )));
    }
    let grads = gradients(mesh, 2, &|n: usize, c: usize| field[n][c])?;
    let frob = |g: &Vec<[f64; 2]>| {
        g.iter()
            .map(|r| r[0] * r[0] + r[1] * r[1])
            .sum::<f64>()
            .sqrt()
    };
    let mut worst = 0.0f64;
    for edge in &topo.edges {
        let Some(r) = edge.right else { continue };
        let l = edge.left;
        let (a, b) = (mesh.nodes[edge.nodes[0]], mesh.nodes[edge.nodes[1]]);
        let len = edge.length(mesh);
        let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let mut tang = 0.0;
        for c in 0..2 {
            let j = [
                grads[l][c][0] - grads[r][c][0],
                grads[l][c][1] - grads[r][c][1],
            ];
            let jt = j[0] * t[0] + j[1] * t[1];
            tang += jt * jt;
        }
        let scale = frob(&grads[l]) + frob(&grads[r]);
        if scale > 0.0 {
            worst = worst.max(tang.sqrt() / scale);
        }
    }
    Ok(worst)
}
