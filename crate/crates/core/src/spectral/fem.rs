//! Piecewise-linear finite elements on a metric graph with Richardson extrapolation.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

/// Mesh refinement: elements of size about `|G| / divisions`.
#[derive(Clone, Debug, PartialEq)]
pub struct FemOptions {
    pub divisions: f64,
    pub min_elements: usize,
}

impl Default for FemOptions {
    fn default() -> Self {
        FemOptions {
            divisions: 200.0,
            min_elements: 4,
        }
    }
}

/// Extrapolated eigenvalues and error estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct FemEstimate {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

fn elements_per_edge(g: &MetricGraph, opts: &FemOptions) -> Vec<usize> {
    let h = g.total_length() / opts.divisions;
    g.edges()
        .iter()
        .map(|e| ((e.length / h).ceil() as usize).max(opts.min_elements))
        .collect()
}

/// Lowest `count` eigenvalues of the P1 discretisation with `n[e]` elements on edge `e`.
pub fn fem_eigenvalues_on_mesh(g: &MetricGraph, n: &[usize], count: usize) -> Result<Vec<f64>> {
    // Unknowns: natural vertices, then interior nodes edge by edge.
    let mut index = vec![usize::MAX; g.vertex_count()];
    let mut dof = 0;
    for (v, slot) in index.iter_mut().enumerate() {
        if !g.is_dirichlet(v) {
            *slot = dof;
            dof += 1;
        }
    }
    let mut interior_start = Vec::with_capacity(g.edge_count());
    for &ne in n {
        interior_start.push(dof);
        dof += ne - 1;
    }
    if dof == 0 || count > dof {
        return Err(Error::Precondition("mesh too coarse for requested count".into()));
    }
    let mut k = DMatrix::<f64>::zeros(dof, dof);
    let mut m = DMatrix::<f64>::zeros(dof, dof);
    for e in 0..g.edge_count() {
        let (a, b) = g.endpoints(e);
        let ne = n[e];
        let h = g.length(e) / ne as f64;
        let node = |j: usize| -> usize {
            if j == 0 {
                index[a]
            } else if j == ne {
                index[b]
            } else {
                interior_start[e] + j - 1
            }
        };
        for j in 0..ne {
            let (p, q) = (node(j), node(j + 1));
            let kl = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
            let ml = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
            let ids = [p, q];
            for r in 0..2 {
                for c in 0..2 {
                    if ids[r] != usize::MAX && ids[c] != usize::MAX {
                        k[(ids[r], ids[c])] += kl[r][c];
                        m[(ids[r], ids[c])] += ml[r][c];
                    }
                }
            }
        }
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Precondition("mass matrix not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("singular mass factor".into()))?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals.truncate(count);
    Ok(vals)
}

/// Meshes `h` and `h/2` (every element halved) with extrapolation `(4 l_{h/2} - l_h) / 3`.
pub fn fem_eigenvalues(g: &MetricGraph, count: usize, opts: &FemOptions) -> Result<FemEstimate> {
    let coarse = elements_per_edge(g, opts);
    let fine: Vec<usize> = coarse.iter().map(|n| 2 * n).collect();
    let lh = fem_eigenvalues_on_mesh(g, &coarse, count)?;
    let lh2 = fem_eigenvalues_on_mesh(g, &fine, count)?;
    let values = lh
        .iter()
        .zip(&lh2)
        .map(|(a, b)| ((4.0 * b - a) / 3.0).max(0.0))
        .collect();
    let errors = lh.iter().zip(&lh2).map(|(a, b)| (b - a).abs() / 3.0).collect();
    Ok(FemEstimate { values, errors })
}
