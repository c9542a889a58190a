//! Laplacian eigenvalues and eigenfunctions with natural and Dirichlet vertex conditions.

pub mod fem;
pub mod fork;
pub mod secular;
pub mod vonbelow;
pub mod wave;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

pub use fem::{fem_eigenvalues, FemEstimate, FemOptions};
pub use fork::solve_fork;
pub use secular::{assemble_secular, count_below, SecularMatrix, SecularOptions};
pub use vonbelow::von_below_equilateral;
pub use wave::EdgeWave;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Secular,
    Fem,
    CrossCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Secular,
    FemExtrapolated,
}

/// Ordered eigenvalues, repeated according to multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of the eigenvalue each entry belongs to.
    pub multiplicities: Vec<usize>,
    /// Secular kernel dimension at each entry (equals the multiplicity unless the
    /// singular-value threshold is too loose or too tight).
    pub kernel_dims: Vec<usize>,
    pub errors: Vec<f64>,
    pub method: MethodTag,
    /// Extrapolated finite-element values when a cross-check was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fem: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectralOptions {
    pub secular: SecularOptions,
    pub fem: FemOptions,
}

/// First `count` eigenvalues of `g`.
pub fn eigenvalues(g: &MetricGraph, count: usize, method: Method) -> Result<SpectralResult> {
    eigenvalues_with(g, count, method, &SpectralOptions::default())
}

pub fn eigenvalues_with(
    g: &MetricGraph,
    count: usize,
    method: Method,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    if count == 0 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    match method {
        Method::Secular => secular_result(g, count, &opts.secular),
        Method::Fem => {
            let est = fem_eigenvalues(g, count, &opts.fem)?;
            Ok(SpectralResult {
                multiplicities: vec![1; est.values.len()],
                kernel_dims: vec![1; est.values.len()],
                eigenvalues: est.values,
                errors: est.errors,
                method: MethodTag::FemExtrapolated,
                fem: None,
            })
        }
        Method::CrossCheck => {
            let est = fem_eigenvalues(g, count, &opts.fem)?;
            let mut sec_opts = opts.secular.clone();
            let mut last_err = None;
            for _ in 0..=4 {
                let res = secular_result(g, count, &sec_opts)?;
                match compare(&res, &est) {
                    Ok(()) => {
                        return Ok(SpectralResult {
                            fem: Some(est.values.clone()),
                            ..res
                        })
                    }
                    Err(e) => last_err = Some(e),
                }
                sec_opts.step_divisor *= 2.0;
            }
            Err(last_err.expect("at least one attempt"))
        }
    }
}

fn compare(res: &SpectralResult, est: &FemEstimate) -> Result<()> {
    for (i, (&s, (&f, &fe))) in res
        .eigenvalues
        .iter()
        .zip(est.values.iter().zip(&est.errors))
        .enumerate()
    {
        let tol = fe + res.errors[i] + 1e-10 * (1.0 + s.abs());
        if (s - f).abs() > tol {
            return Err(Error::CrossCheck {
                index: i + 1,
                secular: s,
                fem: f,
                tol,
            });
        }
    }
    Ok(())
}

fn secular_result(g: &MetricGraph, count: usize, opts: &SecularOptions) -> Result<SpectralResult> {
    let roots = secular::secular_roots(g, count, opts)?;
    Ok(expand(&roots, count))
}

fn expand(roots: &[secular::Root], count: usize) -> SpectralResult {
    let mut res = SpectralResult {
        eigenvalues: Vec::with_capacity(count),
        multiplicities: Vec::with_capacity(count),
        kernel_dims: Vec::with_capacity(count),
        errors: Vec::with_capacity(count),
        method: MethodTag::Secular,
        fem: None,
    };
    'outer: for r in roots {
        for _ in 0..r.multiplicity {
            if res.eigenvalues.len() == count {
                break 'outer;
            }
            res.eigenvalues.push(r.lambda);
            res.multiplicities.push(r.multiplicity);
            res.kernel_dims.push(r.kernel_dim);
            res.errors.push(r.error);
        }
    }
    res
}

/// `mu_2` of a connected graph.
pub fn mu2(g: &MetricGraph) -> Result<f64> {
    if !g.is_connected() {
        return Err(Error::Precondition("mu2 requires a connected graph".into()));
    }
    let pi = std::f64::consts::PI;
    let opts = SecularOptions::default();
    let start = if g.has_dirichlet() {
        None
    } else {
        Some(0.999 * pi / g.total_length())
    };
    let roots = secular::secular_roots_from(g, 2, &opts, start)?;
    Ok(expand(&roots, 2).eigenvalues[1])
}

/// `lambda_1` of a graph with a non-empty Dirichlet set.
pub fn lambda1(g: &MetricGraph) -> Result<f64> {
    if !g.has_dirichlet() {
        return Err(Error::Precondition("lambda1 requires a Dirichlet vertex".into()));
    }
    let roots = secular::secular_roots(g, 1, &SecularOptions::default())?;
    Ok(roots[0].lambda)
}

/// Orthonormal basis of the eigenspace of `eigenvalue`.
pub fn eigenfunction(g: &MetricGraph, eigenvalue: f64) -> Result<Vec<EdgeWave>> {
    eigenfunction_with(g, eigenvalue, &SecularOptions::default())
}

pub fn eigenfunction_with(
    g: &MetricGraph,
    eigenvalue: f64,
    opts: &SecularOptions,
) -> Result<Vec<EdgeWave>> {
    let m = g.edge_count();
    let raw: Vec<EdgeWave> = if eigenvalue.abs() < 1e-12 {
        // Constants on Dirichlet-free components.
        let roots = g.edge_components();
        let mut blocked = std::collections::HashSet::new();
        for v in g.dirichlet_vertices() {
            blocked.insert(roots[g.vertices()[v].slots[0].edge]);
        }
        let mut reps: Vec<usize> = roots.iter().copied().filter(|r| !blocked.contains(r)).collect();
        reps.sort_unstable();
        reps.dedup();
        reps.into_iter()
            .map(|r| EdgeWave {
                k: 0.0,
                coeffs: roots
                    .iter()
                    .map(|&x| if x == r { (1.0, 0.0) } else { (0.0, 0.0) })
                    .collect(),
            })
            .collect()
    } else {
        if eigenvalue < 0.0 {
            return Err(Error::NotAnEigenvalue(eigenvalue, f64::INFINITY));
        }
        let k = eigenvalue.sqrt();
        let sm = assemble_secular(g, k);
        let svd = sm.matrix.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let sv = &svd.singular_values;
        let smax = sv.iter().copied().fold(1.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if smin > opts.tol_mult * smax {
            return Err(Error::NotAnEigenvalue(eigenvalue, smin / smax));
        }
        (0..sv.len())
            .filter(|&i| sv[i] < opts.tol_mult * smax)
            .map(|i| EdgeWave {
                k,
                coeffs: (0..m).map(|e| (v_t[(i, 2 * e)], v_t[(i, 2 * e + 1)])).collect(),
            })
            .collect()
    };
    if raw.is_empty() {
        return Err(Error::NotAnEigenvalue(eigenvalue, f64::INFINITY));
    }
    orthonormalize(g, &raw)
}

/// Gram-Schmidt in the `L^2` inner product via a Cholesky factor of the Gram matrix.
pub fn orthonormalize(g: &MetricGraph, waves: &[EdgeWave]) -> Result<Vec<EdgeWave>> {
    let n = waves.len();
    let gram = DMatrix::from_fn(n, n, |i, j| waves[i].inner(&waves[j], g));
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Precondition("eigenspace basis is degenerate".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Precondition("eigenspace basis is degenerate".into()))?;
    Ok((0..n)
        .map(|i| {
            let c: Vec<f64> = (0..n).map(|j| linv[(i, j)]).collect();
            EdgeWave::combine(waves, &c)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn interval_spectrum() {
        let r = eigenvalues(&fixtures::interval(1.0, false, false), 3, Method::Secular).unwrap();
        assert_eq!(r.eigenvalues[0], 0.0);
        assert!(rel(r.eigenvalues[1], PI * PI) < 1e-12);
        assert!(rel(r.eigenvalues[2], 4.0 * PI * PI) < 1e-12);
    }

    #[test]
    fn pumpkin_multiplicity_three() {
        let r = eigenvalues(&fixtures::pumpkin3(), 4, Method::Secular).unwrap();
        assert_eq!(r.eigenvalues[0], 0.0);
        for i in 1..4 {
            assert!(rel(r.eigenvalues[i], PI * PI) < 1e-12);
            assert_eq!(r.multiplicities[i], 3);
            assert_eq!(r.kernel_dims[i], 3);
        }
    }

    #[test]
    fn pumpkin_h_fifth_is_one() {
        let r = eigenvalues(&fixtures::pumpkin_h(), 6, Method::Secular).unwrap();
        assert!((r.eigenvalues[4] - 1.0).abs() < 1e-12);
        assert_eq!(r.multiplicities[4], 1);
        assert!(r.eigenvalues[5] > 1.0 + 1e-3);
    }

    #[test]
    fn loop_second_is_four_pi_squared() {
        let r = eigenvalues(&fixtures::loop_graph(1.0), 3, Method::Secular).unwrap();
        assert!(rel(r.eigenvalues[1], 4.0 * PI * PI) < 1e-12);
        assert_eq!(r.multiplicities[1], 2);
    }

    #[test]
    fn wrappers() {
        assert!(rel(mu2(&fixtures::star3()).unwrap(), PI * PI / 4.0) < 1e-12);
        assert!(rel(mu2(&fixtures::lasso()).unwrap(), PI * PI / 4.0) < 1e-12);
        assert!(rel(lambda1(&fixtures::interval(1.0, true, false)).unwrap(), PI * PI / 4.0) < 1e-12);
        assert!(lambda1(&fixtures::star3()).is_err());
        let two = crate::graph::GraphBuilder::new()
            .edge("a", 1.0, "x", "y")
            .edge("b", 1.0, "z", "w")
            .build()
            .unwrap();
        assert!(mu2(&two).is_err());
    }

    #[test]
    fn cross_check_passes_on_fixtures() {
        for (name, g) in fixtures::all() {
            let r = eigenvalues(&g, 6, Method::CrossCheck);
            assert!(r.is_ok(), "{name}: {r:?}");
        }
    }

    #[test]
    fn interval_eigenfunction_is_cosine() {
        let g = fixtures::interval(1.0, false, false);
        let w = eigenfunction(&g, PI * PI).unwrap();
        assert_eq!(w.len(), 1);
        let c = w[0].value(0, 0.0).signum();
        for x in [0.0, 0.2, 0.5, 0.9] {
            assert!((c * w[0].value(0, x) - 2f64.sqrt() * (PI * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn pumpkin_eigenspace_is_three_dimensional_and_orthonormal() {
        let g = fixtures::pumpkin3();
        let w = eigenfunction(&g, PI * PI).unwrap();
        assert_eq!(w.len(), 3);
        for i in 0..3 {
            assert!(w[i].vertex_residual(&g) < 1e-9);
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((w[i].inner(&w[j], &g) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pumpkin_h_eigenfunction_vanishes_on_short_edge() {
        let g = fixtures::pumpkin_h();
        let w = eigenfunction(&g, 1.0).unwrap();
        assert_eq!(w.len(), 1);
        let (a, b) = w[0].coeffs[0];
        assert!(a.abs().max(b.abs()) < 1e-10);
    }

    #[test]
    fn not_an_eigenvalue() {
        let g = fixtures::interval(1.0, false, false);
        assert!(matches!(eigenfunction(&g, 5.0), Err(Error::NotAnEigenvalue(..))));
    }
}
