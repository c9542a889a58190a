use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, Slot, Vertex};
use crate::partition::{CutLocation, Partition};
use crate::spectral::{eigenfunction, eigenvalues, EdgeWave, Method};

/// Two-sheeted cover with the sheets swapped at marked degree-2 vertices.
#[derive(Clone, Debug)]
pub struct DoubleCover {
    pub base: MetricGraph,
    pub graph: MetricGraph,
    /// Cover edge to `(base edge, sheet)`.
    pub projection: Vec<(usize, usize)>,
    /// Deck involution on cover edges (orientation preserving).
    pub sigma: Vec<usize>,
    pub marked: Vec<usize>,
}

impl DoubleCover {
    /// `sigma` is an involution without fixed edges commuting with the projection,
    /// and the cover is twice as long as the base.
    pub fn check_invariants(&self) -> bool {
        let m = self.base.edge_count();
        let involution = self
            .sigma
            .iter()
            .enumerate()
            .all(|(e, &s)| self.sigma[s] == e && s != e);
        let fibres = self
            .sigma
            .iter()
            .enumerate()
            .all(|(e, &s)| self.projection[e].0 == self.projection[s].0);
        let length = (self.graph.total_length() - 2.0 * self.base.total_length()).abs()
            <= 1e-12 * self.base.total_length();
        involution && fibres && length && self.graph.edge_count() == 2 * m
    }

    /// `psi o sigma`.
    pub fn pull_back(&self, w: &EdgeWave) -> EdgeWave {
        EdgeWave {
            k: w.k,
            coeffs: self.sigma.iter().map(|&s| w.coeffs[s]).collect(),
        }
    }
}

/// Glue two copies of `g`, crossing the sheets at every marked vertex.
pub fn build_double_cover(g: &MetricGraph, marked: &[usize]) -> Result<DoubleCover> {
    let m = g.edge_count();
    let mut is_marked = vec![false; g.vertex_count()];
    for &v in marked {
        if v >= g.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if g.degree(v) != 2 {
            return Err(Error::Precondition(format!(
                "marked vertex `{}` has degree {}, not 2",
                g.vertices()[v].id,
                g.degree(v)
            )));
        }
        is_marked[v] = true;
    }
    let lift = |s: Slot, sheet: usize| Slot::new(s.edge + sheet * m, s.end);
    let mut edges = Vec::with_capacity(2 * m);
    for sheet in 0..2 {
        for e in g.edges() {
            let mut e = e.clone();
            e.id = format!("{}'{}", e.id, sheet);
            edges.push(e);
        }
    }
    let mut vertices = Vec::with_capacity(2 * g.vertex_count());
    let mut dirichlet = Vec::new();
    for (vi, v) in g.vertices().iter().enumerate() {
        for sheet in 0..2 {
            let slots = if is_marked[vi] {
                vec![lift(v.slots[0], sheet), lift(v.slots[1], 1 - sheet)]
            } else {
                v.slots.iter().map(|&s| lift(s, sheet)).collect()
            };
            if g.is_dirichlet(vi) {
                dirichlet.push(vertices.len());
            }
            vertices.push(Vertex {
                id: format!("{}'{}", v.id, sheet),
                slots,
            });
        }
    }
    let graph = MetricGraph::new(edges, vertices, &dirichlet)?;
    let projection = (0..2 * m).map(|e| (e % m, e / m)).collect();
    let sigma = (0..2 * m).map(|e| (e + m) % (2 * m)).collect();
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    Ok(DoubleCover {
        base: g.clone(),
        graph,
        projection,
        sigma,
        marked,
    })
}

/// Cover of the subdivided base of a partition, crossing at its degree-2
/// separating points.
pub fn cover_of_partition(p: &Partition) -> Result<DoubleCover> {
    let sub = p.subdivided();
    let marked: Vec<usize> = p
        .cut_points()
        .iter()
        .filter(|q| q.separating && q.degree == 2)
        .map(|q| match q.location {
            CutLocation::Vertex { vertex } => vertex,
            CutLocation::Interior { edge, index, .. } => {
                sub.vertex_of(Slot::new(p.chains()[edge][index], End::B))
            }
        })
        .collect();
    build_double_cover(sub, &marked)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSpectrum {
    /// Eigenvalues of functions odd under the deck map, with multiplicity.
    pub antisymmetric: Vec<f64>,
    /// Eigenvalues of functions even under the deck map, with multiplicity.
    pub symmetric: Vec<f64>,
    /// Eigenvalues of the cover graph covering both lists.
    pub full: Vec<f64>,
}

/// Split the spectrum of the cover by parity under the deck map until at least
/// `count` antisymmetric eigenvalues are found.
pub fn antisymmetric_spectrum(c: &DoubleCover, count: usize) -> Result<CoverSpectrum> {
    let mut want = (2 * count).max(4);
    loop {
        let spec = eigenvalues(&c.graph, want, Method::Secular)?;
        let ev = &spec.eigenvalues;
        let (mut anti, mut sym, mut full) = (Vec::new(), Vec::new(), Vec::new());
        let mut i = 0;
        while i < ev.len() {
            let mult = spec.multiplicities[i];
            if i + mult > ev.len() {
                break;
            }
            let basis = eigenfunction(&c.graph, ev[i])?;
            if basis.len() != mult {
                return Err(Error::Precondition(format!(
                    "eigenspace of {} has dimension {} but multiplicity {}",
                    ev[i],
                    basis.len(),
                    mult
                )));
            }
            let pulled: Vec<EdgeWave> = basis.iter().map(|w| c.pull_back(w)).collect();
            let s = DMatrix::from_fn(mult, mult, |a, b| basis[a].inner(&pulled[b], &c.graph));
            let s = (&s + s.transpose()) * 0.5;
            for &x in s.symmetric_eigen().eigenvalues.iter() {
                if (x + 1.0).abs() <= 1e-6 {
                    anti.push(ev[i]);
                } else if (x - 1.0).abs() <= 1e-6 {
                    sym.push(ev[i]);
                } else {
                    return Err(Error::Precondition(format!(
                        "deck map does not act as an involution on the eigenspace of {} ({x})",
                        ev[i]
                    )));
                }
            }
            full.extend(std::iter::repeat_n(ev[i], mult));
            i += mult;
        }
        if anti.len() >= count {
            return Ok(CoverSpectrum {
                antisymmetric: anti,
                symmetric: sym,
                full,
            });
        }
        want *= 2;
        if want > 4096 {
            return Err(Error::Precondition("too few antisymmetric eigenvalues".into()));
        }
    }
}
