use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{cluster_values, Partition, Problem};
use crate::spectral::{eigenfunction, EdgeWave};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueResult {
    pub eigenvalue: f64,
    /// Glued eigenfunction on the base graph.
    pub wave: EdgeWave,
    /// Multiplier of each cluster ground state.
    pub coefficients: Vec<f64>,
    /// Largest vertex-condition violation on the subdivided graph.
    pub residual: f64,
}

/// Positive ground state of a cluster, as a wave on the cluster graph.
fn ground_state(c: &crate::partition::Cluster, lambda: f64) -> Result<EdgeWave> {
    let w = eigenfunction(&c.graph, lambda)?.swap_remove(0);
    let mid = (0..c.graph.edge_count())
        .map(|e| w.value(e, c.graph.length(e) / 2.0))
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    Ok(if mid < 0.0 { w.scaled(-1.0) } else { w })
}

/// Glue the ground states of a Dirichlet equipartition of a tree into an
/// eigenfunction of the tree, fixing multipliers one cut point at a time so that
/// the Kirchhoff condition holds at every separating point.
pub fn glue_equipartition(p: &Partition, tol: f64) -> Result<GlueResult> {
    let g = p.base();
    if !g.is_tree() {
        return Err(Error::Precondition("gluing needs a tree".into()));
    }
    let values = cluster_values(p, Problem::Dirichlet)?;
    let lambda = values.iter().sum::<f64>() / values.len() as f64;
    if values.iter().any(|v| (v - lambda).abs() > tol * lambda) {
        return Err(Error::Precondition("partition is not a Dirichlet equipartition".into()));
    }
    let states = p
        .clusters()
        .iter()
        .zip(&values)
        .map(|(c, &l)| ground_state(c, l))
        .collect::<Result<Vec<_>>>()?;
    // outward flux of each cluster ground state through each cut point
    let flux = |ci: usize, images: &[usize]| -> f64 {
        let c = &p.clusters()[ci];
        images
            .iter()
            .flat_map(|&v| c.graph.vertices()[v].slots.iter())
            .map(|&s| states[ci].slot_inward_derivative(&c.graph, s))
            .sum()
    };
    let k = p.k();
    let mut at_point: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (qi, q) in p.cut_points().iter().enumerate() {
        for (ci, imgs) in q.images.iter().enumerate() {
            if !imgs.is_empty() {
                at_point[ci].push(qi);
            }
        }
    }
    let mut t: Vec<Option<f64>> = vec![None; k];
    let mut done = vec![false; p.cut_points().len()];
    let mut queue = VecDeque::from([0]);
    t[0] = Some(1.0);
    while let Some(ci) = queue.pop_front() {
        let tc = t[ci].expect("queued clusters carry a multiplier");
        for &qi in &at_point[ci] {
            if done[qi] {
                continue;
            }
            done[qi] = true;
            let q = &p.cut_points()[qi];
            let children: Vec<usize> = (0..k)
                .filter(|&j| j != ci && !q.images[j].is_empty())
                .collect();
            if children.is_empty() {
                continue;
            }
            let own = flux(ci, &q.images[ci]);
            let rest: f64 = children.iter().map(|&j| flux(j, &q.images[j])).sum();
            let tj = -tc * own / rest;
            for j in children {
                if t[j].is_none() {
                    t[j] = Some(tj);
                    queue.push_back(j);
                }
            }
        }
    }
    let coefficients: Vec<f64> = t
        .into_iter()
        .map(|x| x.ok_or_else(|| Error::Precondition("clusters are not linked".into())))
        .collect::<Result<_>>()?;

    let sub = p.subdivided();
    let kk = lambda.sqrt();
    let mut sub_coeffs = vec![(0.0, 0.0); sub.edge_count()];
    for ((c, w), &tc) in p.clusters().iter().zip(&states).zip(&coefficients) {
        for (i, &s) in c.support.iter().enumerate() {
            let (a, b) = w.coeffs[i];
            sub_coeffs[s] = (tc * a, tc * b);
        }
    }
    let sub_wave = EdgeWave {
        k: kk,
        coeffs: sub_coeffs,
    };
    let residual = sub_wave.vertex_residual(sub);
    // on each base edge the first piece starts at offset 0
    let wave = EdgeWave {
        k: kk,
        coeffs: p.chains().iter().map(|ch| sub_wave.coeffs[ch[0]]).collect(),
    };
    let mut mismatch: f64 = 0.0;
    let amp = sub_wave
        .coeffs
        .iter()
        .map(|&(a, b)| a.hypot(b))
        .fold(0.0, f64::max);
    for (e, ch) in p.chains().iter().enumerate() {
        let mut offset = 0.0;
        for &s in ch {
            let l = sub.length(s);
            for x in [0.0, l / 2.0, l] {
                let d = wave.value(e, offset + x) - sub_wave.value(s, x);
                mismatch = mismatch.max(d.abs() / amp);
            }
            offset += l;
        }
    }
    Ok(GlueResult {
        eigenvalue: lambda,
        wave,
        coefficients,
        residual: residual.max(mismatch),
    })
}
