//! Similarity of partitions (shared cut pattern) and the distance between similar partitions.

use std::collections::{BTreeMap, HashMap};

use super::Partition;
use crate::error::{Error, Result};
use crate::graph::{automorphisms, discrete_isomorphic, DiscreteGraph, Isomorphism, Slot};

/// Position-free description of a cut pattern: interior cut counts per edge and
/// the normalised blocks of every vertex cut into at least two blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Descriptor {
    pub cut_counts: Vec<usize>,
    pub blocks: BTreeMap<usize, Vec<Vec<Slot>>>,
}

fn normalise(mut blocks: Vec<Vec<Slot>>) -> Vec<Vec<Slot>> {
    for b in &mut blocks {
        b.sort();
    }
    blocks.sort();
    blocks
}

impl Descriptor {
    pub fn of(p: &Partition) -> Self {
        Descriptor {
            cut_counts: p.pattern().cut_counts(),
            blocks: p
                .pattern()
                .vertex_blocks
                .iter()
                .filter(|(_, b)| b.len() >= 2)
                .map(|(v, b)| (*v, normalise(b.clone())))
                .collect(),
        }
    }

    /// Image under an isomorphism of the base graphs.
    pub fn mapped(&self, phi: &Isomorphism) -> Self {
        let mut cut_counts = vec![0; self.cut_counts.len()];
        for (e, &c) in self.cut_counts.iter().enumerate() {
            cut_counts[phi.edge_map[e]] = c;
        }
        Descriptor {
            cut_counts,
            blocks: self
                .blocks
                .iter()
                .map(|(&v, b)| {
                    let mapped = b
                        .iter()
                        .map(|blk| blk.iter().map(|&s| phi.map_slot(s)).collect())
                        .collect();
                    (phi.vertex_map[v], normalise(mapped))
                })
                .collect(),
        }
    }
}

const AUTOMORPHISM_LIMIT: usize = 1 << 20;

/// An isomorphism of the base graphs carrying the cut pattern of `p1` onto that
/// of `p2`, preferring the identity when the bases coincide.
pub fn alignment(p1: &Partition, p2: &Partition) -> Result<Option<Isomorphism>> {
    if p1.k() != p2.k() {
        return Ok(None);
    }
    let (d1, d2) = (Descriptor::of(p1), Descriptor::of(p2));
    let (g1, g2) = (DiscreteGraph::of(p1.base()), DiscreteGraph::of(p2.base()));
    if g1 == g2 && d1 == d2 {
        return Ok(Some(Isomorphism::identity(p1.base())));
    }
    let Some(iso0) = discrete_isomorphic(&g1, &g2)? else {
        return Ok(None);
    };
    for alpha in automorphisms(p2.base(), false, AUTOMORPHISM_LIMIT) {
        let phi = iso0.then(&alpha);
        if d1.mapped(&phi) == d2 {
            return Ok(Some(phi));
        }
    }
    Ok(None)
}

/// Whether two partitions share a cut pattern up to relabelling.
pub fn similar(p1: &Partition, p2: &Partition) -> Result<bool> {
    Ok(alignment(p1, p2)?.is_some())
}

/// Sum over matched clusters of the Euclidean distance of their piece lengths.
pub fn partition_distance(p1: &Partition, p2: &Partition) -> Result<f64> {
    let phi = alignment(p1, p2)?.ok_or(Error::NotSimilar)?;
    let counts2 = p2.pattern().cut_counts();
    let mut where2: HashMap<(usize, usize), (usize, f64)> = HashMap::new();
    for (ci, c) in p2.clusters().iter().enumerate() {
        for (&piece, &s) in c.pieces.iter().zip(&c.support) {
            where2.insert(piece, (ci, p2.subdivided().length(s)));
        }
    }
    let mut total = 0.0;
    for c in p1.clusters() {
        let mut target = None;
        let mut sq = 0.0;
        for (&(e, j), &s) in c.pieces.iter().zip(&c.support) {
            let e2 = phi.edge_map[e];
            let j2 = if phi.flipped[e] { counts2[e2] - j } else { j };
            let &(c2, l2) = where2.get(&(e2, j2)).ok_or(Error::NotSimilar)?;
            if *target.get_or_insert(c2) != c2 {
                return Err(Error::NotSimilar);
            }
            let d = p1.subdivided().length(s) - l2;
            sq += d * d;
        }
        total += sq.sqrt();
    }
    Ok(total)
}
