//! Exhaustive partitions of a metric graph: cut patterns, clusters, the
//! rigid/faithful/proper taxonomy, energies and the partition metric.

mod energy;
mod metric;

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::combinatorics::set_partitions;
use crate::error::{Error, Result};
use crate::graph::{cut_vertices, subdivide_all, End, MetricGraph, Slot, UnionFind};

pub use energy::{
    cluster_value, cluster_values, energy, equipartition_check, power_mean, EnergyReport, PExp,
    Problem,
};
pub use metric::{alignment, partition_distance, similar, Descriptor};

/// Concrete cut: sorted interior offsets per edge and set partitions of the slot
/// classes of cut vertices (slots of the base graph).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPattern {
    pub edge_cuts: Vec<Vec<f64>>,
    pub vertex_blocks: Vec<(usize, Vec<Vec<Slot>>)>,
}

impl CutPattern {
    /// The pattern that cuts nothing.
    pub fn none(g: &MetricGraph) -> Self {
        CutPattern {
            edge_cuts: vec![Vec::new(); g.edge_count()],
            vertex_blocks: Vec::new(),
        }
    }

    /// Cut vertex `v` into singletons.
    pub fn split_vertex(mut self, g: &MetricGraph, v: usize) -> Self {
        let blocks = g.vertices()[v].slots.iter().map(|&s| vec![s]).collect();
        self.vertex_blocks.push((v, blocks));
        self
    }

    pub fn cut_counts(&self) -> Vec<usize> {
        self.edge_cuts.iter().map(Vec::len).collect()
    }
}

/// Where a cut point sits on the base graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CutLocation {
    Vertex { vertex: usize },
    /// The `index`-th interior cut (from 0) on `edge`.
    Interior { edge: usize, index: usize, offset: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutPoint {
    pub location: CutLocation,
    /// Degree of the point in the base graph.
    pub degree: usize,
    /// Per cluster, the vertices of the cluster graph that are images of this point.
    pub images: Vec<Vec<usize>>,
    /// Images lie in at least two clusters.
    pub separating: bool,
}

/// One connected component of the cut graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Cluster with Dirichlet conditions at the images of cut points.
    pub graph: MetricGraph,
    /// Same cluster keeping only the Dirichlet vertices of the base graph.
    pub natural: MetricGraph,
    /// Edges of the subdivided base graph forming the support, in cluster edge order.
    pub support: Vec<usize>,
    /// `(base edge, piece index)` of every cluster edge.
    pub pieces: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub loose: bool,
    pub rigid: bool,
    pub faithful: bool,
    pub internally_connected: bool,
    pub proper: bool,
}

/// Class filter used by enumeration and searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionClass {
    Loose,
    Rigid,
    Faithful,
    InternallyConnected,
    Proper,
}

impl Flags {
    pub fn has(&self, class: PartitionClass) -> bool {
        match class {
            PartitionClass::Loose => self.loose,
            PartitionClass::Rigid => self.rigid,
            PartitionClass::Faithful => self.faithful,
            PartitionClass::InternallyConnected => self.internally_connected,
            PartitionClass::Proper => self.proper,
        }
    }
}

impl std::str::FromStr for PartitionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loose" => Ok(PartitionClass::Loose),
            "rigid" => Ok(PartitionClass::Rigid),
            "faithful" => Ok(PartitionClass::Faithful),
            "internally-connected" => Ok(PartitionClass::InternallyConnected),
            "proper" => Ok(PartitionClass::Proper),
            _ => Err(Error::Precondition(format!("unknown partition class `{s}`"))),
        }
    }
}

/// An exhaustive k-partition built from a cut pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    base: MetricGraph,
    pattern: CutPattern,
    subdivided: MetricGraph,
    chains: Vec<Vec<usize>>,
    clusters: Vec<Cluster>,
    cut_points: Vec<CutPoint>,
    flags: Flags,
}

fn base_slot_to_sub(chains: &[Vec<usize>], s: Slot) -> Slot {
    match s.end {
        End::A => Slot::new(chains[s.edge][0], End::A),
        End::B => Slot::new(*chains[s.edge].last().expect("non-empty chain"), End::B),
    }
}

/// Cut `g` according to `pattern` and collect the resulting clusters.
pub fn make_partition(g: &MetricGraph, pattern: &CutPattern) -> Result<Partition> {
    if pattern.edge_cuts.len() != g.edge_count() {
        return Err(Error::Precondition(
            "cut pattern needs one offset list per edge".into(),
        ));
    }
    let sub = subdivide_all(g, &pattern.edge_cuts)?;
    let h0 = &sub.graph;
    let mut seen = vec![false; g.vertex_count()];
    let mut cuts = Vec::new();
    let mut locations = Vec::new();
    for (v, blocks) in &pattern.vertex_blocks {
        if *v >= g.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        if std::mem::replace(&mut seen[*v], true) {
            return Err(Error::InvalidBlocks(g.vertices()[*v].id.clone()));
        }
        let mapped: Vec<Vec<Slot>> = blocks
            .iter()
            .map(|b| b.iter().map(|&s| base_slot_to_sub(&sub.chains, s)).collect())
            .collect();
        cuts.push((*v, mapped));
        locations.push((CutLocation::Vertex { vertex: *v }, g.degree(*v)));
    }
    for (e, dummies) in sub.dummies.iter().enumerate() {
        for (j, &d) in dummies.iter().enumerate() {
            let chain = &sub.chains[e];
            cuts.push((
                d,
                vec![
                    vec![Slot::new(chain[j], End::B)],
                    vec![Slot::new(chain[j + 1], End::A)],
                ],
            ));
            locations.push((
                CutLocation::Interior {
                    edge: e,
                    index: j,
                    offset: pattern.edge_cuts[e][j],
                },
                2,
            ));
        }
    }
    let (h, images) = cut_vertices(h0, &cuts)?;

    // Cut points are the entries that actually split (at least two blocks).
    let mut image_owner: HashMap<usize, usize> = HashMap::new();
    let mut points = Vec::new();
    for (i, (_, blocks)) in cuts.iter().enumerate() {
        if blocks.len() >= 2 {
            for &w in &images[i] {
                image_owner.insert(w, points.len());
            }
            points.push(locations[i]);
        }
    }

    let roots = h.edge_components();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (e, r) in roots.into_iter().enumerate() {
        groups.entry(r).or_default().push(e);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|edges| {
        edges
            .iter()
            .map(|&e| h.edges()[e].id.clone())
            .min()
            .unwrap_or_default()
    });

    let mut piece_of = vec![(0, 0); h0.edge_count()];
    for (e, chain) in sub.chains.iter().enumerate() {
        for (j, &s) in chain.iter().enumerate() {
            piece_of[s] = (e, j);
        }
    }

    let k = groups.len();
    let mut cut_points: Vec<CutPoint> = points
        .iter()
        .map(|&(location, degree)| CutPoint {
            location,
            degree,
            images: vec![Vec::new(); k],
            separating: false,
        })
        .collect();
    let mut clusters = Vec::with_capacity(k);
    for (ci, edges) in groups.into_iter().enumerate() {
        let (cg, origin) = h.edge_subgraph(&edges);
        let mut dirichlet = cg.dirichlet_vertices();
        for (w, &o) in origin.iter().enumerate() {
            if let Some(&c) = image_owner.get(&o) {
                cut_points[c].images[ci].push(w);
                dirichlet.push(w);
            }
        }
        clusters.push(Cluster {
            graph: cg.with_dirichlet(&dirichlet),
            pieces: edges.iter().map(|&e| piece_of[e]).collect(),
            natural: cg,
            support: edges,
        });
    }
    for cp in &mut cut_points {
        cp.separating = cp.images.iter().filter(|i| !i.is_empty()).count() >= 2;
    }
    let mut p = Partition {
        base: g.clone(),
        pattern: pattern.clone(),
        subdivided: sub.graph,
        chains: sub.chains,
        clusters,
        cut_points,
        flags: Flags::default(),
    };
    p.flags = compute_flags(&p);
    Ok(p)
}

fn compute_flags(p: &Partition) -> Flags {
    let rigid = p.cut_points.iter().all(|c| c.separating);
    let faithful = rigid
        && p
            .cut_points
            .iter()
            .all(|c| c.images.iter().all(|i| i.len() <= 1));
    let proper = rigid && p.cut_points.iter().all(|c| c.degree == 2);
    let internally_connected = rigid
        && p.clusters.iter().enumerate().all(|(ci, cl)| {
            let mut boundary = vec![false; cl.graph.vertex_count()];
            for c in &p.cut_points {
                for &w in &c.images[ci] {
                    boundary[w] = true;
                }
            }
            let mut uf = UnionFind::new(cl.graph.edge_count());
            let mut merges = 0;
            for (w, v) in cl.graph.vertices().iter().enumerate() {
                if !boundary[w] {
                    for pair in v.slots.windows(2) {
                        if uf.union(pair[0].edge, pair[1].edge) {
                            merges += 1;
                        }
                    }
                }
            }
            merges + 1 == cl.graph.edge_count()
        });
    Flags {
        loose: true,
        rigid,
        faithful,
        internally_connected,
        proper,
    }
}

impl Partition {
    pub fn base(&self) -> &MetricGraph {
        &self.base
    }

    pub fn pattern(&self) -> &CutPattern {
        &self.pattern
    }

    /// Base graph with a dummy vertex at every interior cut.
    pub fn subdivided(&self) -> &MetricGraph {
        &self.subdivided
    }

    /// Per base edge, the pieces of the subdivided graph in order.
    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn cut_points(&self) -> &[CutPoint] {
        &self.cut_points
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn classify(&self) -> Flags {
        self.flags
    }

    /// Cut points lying on the boundary of at least two clusters.
    pub fn separation_set(&self) -> Vec<CutLocation> {
        self.cut_points
            .iter()
            .filter(|c| c.separating)
            .map(|c| c.location)
            .collect()
    }

    /// Lengths of every piece, per base edge.
    pub fn piece_lengths(&self) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.iter().map(|&s| self.subdivided.length(s)).collect())
            .collect()
    }

    /// Same topology with cuts moved to new offsets (same count per edge).
    pub fn reposition(&self, edge_cuts: &[Vec<f64>]) -> Result<Partition> {
        let pieces = piece_lengths_for(&self.base, &self.pattern, edge_cuts)?;
        let mut sub_lengths = vec![0.0; self.subdivided.edge_count()];
        for (chain, ls) in self.chains.iter().zip(&pieces) {
            for (&s, &l) in chain.iter().zip(ls) {
                sub_lengths[s] = l;
            }
        }
        let mut out = self.clone();
        out.pattern.edge_cuts = edge_cuts.to_vec();
        out.subdivided = self.subdivided.with_lengths(&sub_lengths)?;
        for cl in &mut out.clusters {
            let ls: Vec<f64> = cl.support.iter().map(|&s| sub_lengths[s]).collect();
            cl.graph = cl.graph.with_lengths(&ls)?;
            cl.natural = cl.natural.with_lengths(&ls)?;
        }
        for cp in &mut out.cut_points {
            if let CutLocation::Interior {
                edge,
                index,
                ref mut offset,
            } = cp.location
            {
                *offset = edge_cuts[edge][index];
            }
        }
        Ok(out)
    }

    /// Pairs of clusters sharing a separating point.
    pub fn neighbours(&self) -> Vec<(usize, usize)> {
        let mut pairs = std::collections::BTreeSet::new();
        for c in self.cut_points.iter().filter(|c| c.separating) {
            let owners: Vec<usize> = (0..self.k()).filter(|&i| !c.images[i].is_empty()).collect();
            for (a, &i) in owners.iter().enumerate() {
                for &j in &owners[a + 1..] {
                    pairs.insert((i, j));
                }
            }
        }
        pairs.into_iter().collect()
    }

    /// Signs (`true` for +) making neighbours differ, if such a colouring exists.
    pub fn bipartite_check(&self) -> Option<Vec<bool>> {
        let k = self.k();
        let mut adj = vec![Vec::new(); k];
        for (i, j) in self.neighbours() {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut sign: Vec<Option<bool>> = vec![None; k];
        for start in 0..k {
            if sign[start].is_some() {
                continue;
            }
            sign[start] = Some(true);
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                let si = sign[i].expect("visited");
                for &j in &adj[i] {
                    match sign[j] {
                        None => {
                            sign[j] = Some(!si);
                            queue.push_back(j);
                        }
                        Some(sj) if sj == si => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(sign.into_iter().map(|s| s.expect("all visited")).collect())
    }

    pub fn summary(&self) -> PartitionSummary {
        let edge_id = |e: usize| self.base.edges()[e].id.clone();
        PartitionSummary {
            k: self.k(),
            edge_cuts: self
                .pattern
                .edge_cuts
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_empty())
                .map(|(e, c)| (edge_id(e), c.clone()))
                .collect(),
            vertex_cuts: self
                .pattern
                .vertex_blocks
                .iter()
                .filter(|(_, b)| b.len() >= 2)
                .map(|(v, blocks)| VertexCutSummary {
                    vertex: self.base.vertices()[*v].id.clone(),
                    blocks: blocks
                        .iter()
                        .map(|b| b.iter().map(|s| (edge_id(s.edge), s.end)).collect())
                        .collect(),
                })
                .collect(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterSummary {
                    pieces: c
                        .pieces
                        .iter()
                        .zip(&c.support)
                        .map(|(&(e, j), &s)| PieceSummary {
                            edge: edge_id(e),
                            piece: j,
                            length: self.subdivided.length(s),
                        })
                        .collect(),
                    length: c.graph.total_length(),
                    edges: c.graph.edge_count(),
                    vertices: c.graph.vertex_count(),
                    dirichlet: c.graph.dirichlet_vertices().len(),
                })
                .collect(),
            flags: self.flags,
        }
    }
}

/// Piece lengths for new offsets on the pattern's topology.
pub fn piece_lengths_for(
    g: &MetricGraph,
    pattern: &CutPattern,
    edge_cuts: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if edge_cuts.len() != g.edge_count() {
        return Err(Error::Precondition(
            "cut pattern needs one offset list per edge".into(),
        ));
    }
    let mut out = Vec::with_capacity(g.edge_count());
    for (e, cuts) in edge_cuts.iter().enumerate() {
        if cuts.len() != pattern.edge_cuts[e].len() {
            return Err(Error::Precondition("cut count differs from the pattern".into()));
        }
        let l = g.length(e);
        let mut prev = 0.0;
        let mut pieces = Vec::with_capacity(cuts.len() + 1);
        for &x in cuts.iter().chain(std::iter::once(&l)) {
            if x.partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) || x > l {
                return Err(Error::InvalidPosition(format!(
                    "offsets on edge `{}` must increase strictly inside (0, {l})",
                    g.edges()[e].id
                )));
            }
            pieces.push(x - prev);
            prev = x;
        }
        out.push(pieces);
    }
    Ok(out)
}

/// Serializable description of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub k: usize,
    pub edge_cuts: Vec<(String, Vec<f64>)>,
    pub vertex_cuts: Vec<VertexCutSummary>,
    pub clusters: Vec<ClusterSummary>,
    pub flags: Flags,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexCutSummary {
    pub vertex: String,
    pub blocks: Vec<Vec<(String, End)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub pieces: Vec<PieceSummary>,
    pub length: f64,
    pub edges: usize,
    pub vertices: usize,
    pub dirichlet: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub edge: String,
    pub piece: usize,
    pub length: f64,
}

/// All rigid clusters on an edge support: every way of cutting the boundary
/// vertices (by default those with slots outside the support) that keeps the
/// support connected, with Dirichlet conditions at the images.
pub fn rho(g: &MetricGraph, support: &[usize], boundary: Option<&[usize]>) -> Result<Vec<MetricGraph>> {
    let (sg, origin) = g.edge_subgraph(support);
    if support.is_empty() || !sg.is_connected() {
        return Err(Error::Precondition("support must be a connected edge set".into()));
    }
    let boundary_vertices: Vec<usize> = match boundary {
        Some(b) => (0..sg.vertex_count())
            .filter(|w| b.contains(&origin[*w]))
            .collect(),
        None => (0..sg.vertex_count())
            .filter(|&w| sg.degree(w) < g.degree(origin[w]))
            .collect(),
    };
    let options: Vec<Vec<Vec<Vec<Slot>>>> = boundary_vertices
        .iter()
        .map(|&w| set_partitions(&sg.vertices()[w].slots))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; options.len()];
    loop {
        let cuts: Vec<(usize, Vec<Vec<Slot>>)> = boundary_vertices
            .iter()
            .zip(&choice)
            .zip(&options)
            .map(|((&w, &c), opts)| (w, opts[c].clone()))
            .collect();
        let (cut, images) = cut_vertices(&sg, &cuts)?;
        if cut.is_connected() {
            let mut dirichlet = cut.dirichlet_vertices();
            dirichlet.extend(images.iter().flatten());
            out.push(cut.with_dirichlet(&dirichlet));
        }
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}
