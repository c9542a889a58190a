use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::nodal_partition;
use crate::error::Result;
use crate::partition::{cluster_values, CutLocation, Partition, Problem};
use crate::spectral::{eigenfunction, EdgeWave};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodalVerdict {
    Nodal,
    GeneralisedNodal,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalCertificate {
    pub verdict: NodalVerdict,
    /// Common Dirichlet energy, when the partition is an equipartition.
    pub energy: Option<f64>,
    /// Dimension of the eigenspace of the energy (0 if it is no eigenvalue).
    pub eigenspace_dimension: usize,
    /// Dimension of the eigenfunctions vanishing at every cut point.
    pub admissible_dimension: usize,
    /// A witnessing eigenfunction.
    pub witness: Option<EdgeWave>,
    pub reason: String,
}

fn neither(energy: Option<f64>, dim: usize, adm: usize, reason: &str) -> NodalCertificate {
    NodalCertificate {
        verdict: NodalVerdict::Neither,
        energy,
        eigenspace_dimension: dim,
        admissible_dimension: adm,
        witness: None,
        reason: reason.into(),
    }
}

/// Decide whether a partition is nodal, generalised nodal or neither.
///
/// An eigenfunction restricts to Dirichlet ground states of the clusters exactly
/// when it vanishes at every cut point and its eigenvalue is the common cluster
/// energy; such functions form a linear subspace of the eigenspace. The partition
/// is generalised nodal if some member of it is nonzero on every cluster, and
/// nodal if a generic member also vanishes on no edge and has exactly `k` domains.
pub fn generalised_nodal_check(p: &Partition, tol: f64) -> Result<NodalCertificate> {
    let g = p.base();
    let values = cluster_values(p, Problem::Dirichlet)?;
    let lambda = values.iter().sum::<f64>() / values.len() as f64;
    if values.iter().any(|v| (v - lambda).abs() > tol * lambda) {
        return Ok(neither(None, 0, 0, "not a Dirichlet equipartition"));
    }
    let basis = match eigenfunction(g, lambda) {
        Ok(b) => b,
        Err(crate::error::Error::NotAnEigenvalue(..)) => {
            return Ok(neither(Some(lambda), 0, 0, "energy is not an eigenvalue"));
        }
        Err(e) => return Err(e),
    };
    let d = basis.len();
    let points: Vec<(usize, f64)> = p
        .cut_points()
        .iter()
        .map(|q| match q.location {
            CutLocation::Vertex { vertex } => {
                let s = g.vertices()[vertex].slots[0];
                let x = match s.end {
                    crate::graph::End::A => 0.0,
                    crate::graph::End::B => g.length(s.edge),
                };
                (s.edge, x)
            }
            CutLocation::Interior { edge, offset, .. } => (edge, offset),
        })
        .collect();
    let amp = 1.0 / g.total_length().sqrt();
    let m = DMatrix::from_fn(points.len().max(1), d, |i, j| {
        points.get(i).map_or(0.0, |&(e, x)| basis[j].value(e, x) / amp)
    });
    let eig = (m.transpose() * &m).symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(1.0, f64::max);
    let null: Vec<Vec<f64>> = (0..d)
        .filter(|&i| eig.eigenvalues[i] <= 1e-14 * top)
        .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let adm = null.len();
    if adm == 0 {
        return Ok(neither(Some(lambda), d, 0, "no eigenfunction vanishes at every cut point"));
    }
    let admissible: Vec<EdgeWave> = null
        .iter()
        .map(|c| EdgeWave::combine(&basis, c))
        .collect();
    // a generic admissible function: irrational weights
    let weights: Vec<f64> = (0..adm)
        .map(|i| 1.0 + ((i + 1) as f64 * std::f64::consts::SQRT_2).fract())
        .collect();
    let psi = EdgeWave::combine(&admissible, &weights);
    let norm = psi.norm(g);
    let alive = |e: usize| psi.coeffs[e].0.hypot(psi.coeffs[e].1) > 1e-9 * norm;
    if p
        .clusters()
        .iter()
        .any(|c| !c.pieces.iter().any(|&(e, _)| alive(e)))
    {
        return Ok(neither(
            Some(lambda),
            d,
            adm,
            "every admissible eigenfunction vanishes on some cluster",
        ));
    }
    let nodal = nodal_partition(g, &psi)?;
    let verdict = if nodal.exhaustive() && nodal.nu == p.k() {
        NodalVerdict::Nodal
    } else {
        NodalVerdict::GeneralisedNodal
    };
    Ok(NodalCertificate {
        verdict,
        energy: Some(lambda),
        eigenspace_dimension: d,
        admissible_dimension: adm,
        witness: Some(psi),
        reason: format!("nodal partition of the witness has {} domains", nodal.nu),
    })
}
