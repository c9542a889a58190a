//! Nodal domains of eigenfunctions, Courant bounds, gluing of tree
//! equipartitions, generalised nodal partitions and double covers.

mod cover;
mod generalised;
mod glue;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cut_vertices, subdivide_all, MetricGraph, Slot, UnionFind};
use crate::partition::{make_partition, CutPattern, Partition};
use crate::spectral::{eigenfunction, eigenvalues, EdgeWave, Method};

pub use cover::{antisymmetric_spectrum, build_double_cover, cover_of_partition, CoverSpectrum, DoubleCover};
pub use generalised::{generalised_nodal_check, NodalCertificate, NodalVerdict};
pub use glue::{glue_equipartition, GlueResult};

/// Edges whose amplitude falls below this fraction of the `L^2` norm vanish identically.
pub const ZERO_EDGE_TOL: f64 = 1e-10;
/// Vertices whose value falls below this fraction of the largest amplitude are zeros.
pub const ZERO_VERTEX_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    /// Interior zeros as `(edge, offset)`, sorted.
    pub interior: Vec<(usize, f64)>,
    pub vertices: Vec<usize>,
    /// Edges on which the function vanishes identically.
    pub zero_edges: Vec<usize>,
}

impl ZeroSet {
    pub fn on_edge(&self, e: usize) -> Vec<f64> {
        self.interior
            .iter()
            .filter(|z| z.0 == e)
            .map(|z| z.1)
            .collect()
    }
}

fn amplitude(w: &EdgeWave) -> f64 {
    w.coeffs
        .iter()
        .map(|&(a, b)| a.hypot(b))
        .fold(0.0, f64::max)
}

/// Roots of `a cos(kx) + b sin(kx)` (or `a + bx` for `k = 0`) in `(lo, hi)`.
fn edge_roots(k: f64, a: f64, b: f64, lo: f64, hi: f64) -> Vec<f64> {
    if k == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        let x = -a / b;
        return if x > lo && x < hi { vec![x] } else { Vec::new() };
    }
    // a cos(kx) + b sin(kx) = r cos(kx - phi) vanishes at kx = phi + pi/2 + n pi
    let phi = b.atan2(a);
    let first = ((k * lo - phi - PI / 2.0) / PI).ceil() as i64;
    let mut out = Vec::new();
    let mut n = first;
    loop {
        let x = (phi + PI / 2.0 + n as f64 * PI) / k;
        if x >= hi {
            break;
        }
        if x > lo {
            out.push(x);
        }
        n += 1;
    }
    out
}

/// Zero set of an eigenfunction in closed form.
pub fn zero_set(g: &MetricGraph, w: &EdgeWave) -> ZeroSet {
    let norm = w.norm(g);
    let amp = amplitude(w);
    let zero_edges: Vec<usize> = (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = w.coeffs[e];
            a.hypot(b) <= ZERO_EDGE_TOL * norm
        })
        .collect();
    let vertices: Vec<usize> = (0..g.vertex_count())
        .filter(|&v| {
            g.vertices()[v]
                .slots
                .iter()
                .all(|&s| w.slot_value(g, s).abs() <= ZERO_VERTEX_TOL * amp)
        })
        .collect();
    let mut is_zero_vertex = vec![false; g.vertex_count()];
    for &v in &vertices {
        is_zero_vertex[v] = true;
    }
    let mut interior = Vec::new();
    for e in 0..g.edge_count() {
        if zero_edges.contains(&e) {
            continue;
        }
        let l = g.length(e);
        let (va, vb) = g.endpoints(e);
        let margin = 1e-7 * l;
        let lo = if is_zero_vertex[va] { margin } else { 0.0 };
        let hi = if is_zero_vertex[vb] { l - margin } else { l };
        let (a, b) = w.coeffs[e];
        for x in edge_roots(w.k, a, b, lo, hi) {
            interior.push((e, x));
        }
    }
    ZeroSet {
        interior,
        vertices,
        zero_edges,
    }
}

/// Nodal partition of an eigenfunction: a partition of the support graph.
#[derive(Clone, Debug)]
pub struct NodalResult {
    pub eigenvalue: f64,
    pub wave: EdgeWave,
    pub zeros: ZeroSet,
    /// Number of nodal domains.
    pub nu: usize,
    /// Base edges on which the function does not vanish identically.
    pub support: Vec<usize>,
    /// Partition of the support graph; its base carries Dirichlet conditions
    /// at every zero vertex.
    pub partition: Partition,
}

impl NodalResult {
    pub fn exhaustive(&self) -> bool {
        self.zeros.zero_edges.is_empty()
    }
}

/// Nodal domains of `w`: cut the support at every zero, keeping at a zero vertex
/// the slots of each nodal domain together.
pub fn nodal_partition(g: &MetricGraph, w: &EdgeWave) -> Result<NodalResult> {
    let zeros = zero_set(g, w);
    let support: Vec<usize> = (0..g.edge_count())
        .filter(|e| !zeros.zero_edges.contains(e))
        .collect();
    if support.is_empty() {
        return Err(Error::ZeroFunction);
    }
    let (sub, origin) = g.edge_subgraph(&support);
    let zero_vertices: Vec<usize> = (0..sub.vertex_count())
        .filter(|&v| zeros.vertices.contains(&origin[v]))
        .collect();
    let mut dirichlet = sub.dirichlet_vertices();
    dirichlet.extend(&zero_vertices);
    dirichlet.sort_unstable();
    dirichlet.dedup();
    let sub = sub.with_dirichlet(&dirichlet);
    let edge_cuts: Vec<Vec<f64>> = support.iter().map(|&e| zeros.on_edge(e)).collect();

    // nodal domains: components after cutting every zero into singletons
    let division = subdivide_all(&sub, &edge_cuts)?;
    let cuts: Vec<(usize, Vec<Vec<Slot>>)> = zero_vertices
        .iter()
        .chain(division.dummies.iter().flatten())
        .map(|&v| {
            let blocks = division.graph.vertices()[v].slots.iter().map(|&s| vec![s]).collect();
            (v, blocks)
        })
        .collect();
    let (split, _) = cut_vertices(&division.graph, &cuts)?;
    let roots = split.edge_components();
    let mut uf = UnionFind::new(split.edge_count());
    for (e, &r) in roots.iter().enumerate() {
        uf.union(e, r);
    }

    let mut pattern = CutPattern {
        edge_cuts,
        vertex_blocks: Vec::new(),
    };
    for &v in &zero_vertices {
        let mut groups: Vec<(usize, Vec<Slot>)> = Vec::new();
        for &s in &sub.vertices()[v].slots {
            let chain = &division.chains[s.edge];
            let piece = match s.end {
                crate::graph::End::A => chain[0],
                crate::graph::End::B => *chain.last().unwrap(),
            };
            let root = uf.find(piece);
            match groups.iter_mut().find(|(r, _)| *r == root) {
                Some((_, blocks)) => blocks.push(s),
                None => groups.push((root, vec![s])),
            }
        }
        if groups.len() > 1 {
            pattern
                .vertex_blocks
                .push((v, groups.into_iter().map(|(_, b)| b).collect()));
        }
    }
    let partition = make_partition(&sub, &pattern)?;
    Ok(NodalResult {
        eigenvalue: w.eigenvalue(),
        wave: w.clone(),
        zeros,
        nu: partition.k(),
        support,
        partition,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CourantReport {
    /// 1-based eigenvalue index.
    pub index: usize,
    pub eigenvalue: f64,
    /// Largest index sharing the eigenvalue.
    pub kappa: usize,
    /// Nodal domain counts of an orthonormal eigenspace basis.
    pub nu: Vec<usize>,
    pub pass: bool,
}

/// Weak Courant bound `nu <= kappa` for a basis of the eigenspace of `mu_index`.
pub fn courant_check(g: &MetricGraph, index: usize) -> Result<CourantReport> {
    if index == 0 {
        return Err(Error::Precondition("eigenvalue indices start at 1".into()));
    }
    let spec = eigenvalues(g, index, Method::Secular)?;
    let mu = spec.eigenvalues[index - 1];
    let tol = 1e-8 * mu.abs().max(1.0);
    let first = (0..index)
        .find(|&i| (spec.eigenvalues[i] - mu).abs() <= tol)
        .unwrap_or(index - 1);
    let kappa = first + spec.multiplicities[index - 1];
    let nu = eigenfunction(g, mu)?
        .iter()
        .map(|w| nodal_partition(g, w).map(|r| r.nu))
        .collect::<Result<Vec<usize>>>()?;
    let pass = nu.iter().all(|&n| n <= kappa);
    Ok(CourantReport {
        index,
        eigenvalue: mu,
        kappa,
        nu,
        pass,
    })
}
