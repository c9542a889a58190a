//! Metric graphs as partitions of edge-endpoint slots, with cut/glue surgery.
//!
//! A vertex is nothing more than a class of endpoint slots. Cutting through a
//! vertex is therefore a set-partition of its class, and suppressing a dummy
//! vertex merges the two edges meeting there.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which end of an edge a slot sits on. An edge is parametrised from `A` (offset 0)
/// to `B` (offset = length).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    A,
    B,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::A => End::B,
            End::B => End::A,
        }
    }

    fn bit(self) -> usize {
        match self {
            End::A => 0,
            End::B => 1,
        }
    }
}

/// An edge endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub edge: usize,
    pub end: End,
}

impl Slot {
    pub fn new(edge: usize, end: End) -> Self {
        Slot { edge, end }
    }

    /// Dense index `2 * edge + end`.
    pub fn index(self) -> usize {
        2 * self.edge + self.end.bit()
    }

    pub fn from_index(i: usize) -> Self {
        Slot {
            edge: i / 2,
            end: if i.is_multiple_of(2) { End::A } else { End::B },
        }
    }

    pub fn opposite(self) -> Slot {
        Slot::new(self.edge, self.end.other())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: String,
    /// Sorted slot class.
    pub slots: Vec<Slot>,
}

/// A point of a metric graph given by an edge and an offset from its `A` end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub edge: usize,
    pub offset: f64,
}

/// Compact metric graph: edges with lengths, vertices as classes of endpoint slots,
/// and a set of Dirichlet vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    edges: Vec<Edge>,
    vertices: Vec<Vertex>,
    dirichlet: Vec<bool>,
    slot_vertex: Vec<usize>,
    labels: BTreeMap<String, String>,
}

impl MetricGraph {
    /// Validating constructor. Slots inside each vertex are sorted.
    pub fn new(edges: Vec<Edge>, mut vertices: Vec<Vertex>, dirichlet: &[usize]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::NonPositiveLength(e.id.clone(), e.length));
            }
            if !seen.insert(e.id.clone()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        let mut vseen = std::collections::HashSet::new();
        let mut slot_vertex = vec![usize::MAX; 2 * edges.len()];
        for (vi, v) in vertices.iter_mut().enumerate() {
            if !vseen.insert(v.id.clone()) {
                return Err(Error::DuplicateId(v.id.clone()));
            }
            if v.slots.is_empty() {
                return Err(Error::EmptyVertex(v.id.clone()));
            }
            v.slots.sort();
            for s in &v.slots {
                if s.edge >= edges.len() {
                    return Err(Error::UnknownEdge(format!("#{}", s.edge)));
                }
                let idx = s.index();
                if slot_vertex[idx] != usize::MAX {
                    return Err(Error::DuplicateSlot(slot_name(&edges, *s)));
                }
                slot_vertex[idx] = vi;
            }
        }
        if let Some(i) = slot_vertex.iter().position(|&v| v == usize::MAX) {
            return Err(Error::DanglingSlot(slot_name(&edges, Slot::from_index(i))));
        }
        let mut dmask = vec![false; vertices.len()];
        for &d in dirichlet {
            if d >= vertices.len() {
                return Err(Error::UnknownVertex(format!("#{d}")));
            }
            dmask[d] = true;
        }
        Ok(MetricGraph {
            edges,
            vertices,
            dirichlet: dmask,
            slot_vertex,
            labels: BTreeMap::new(),
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn length(&self, e: usize) -> f64 {
        self.edges[e].length
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn vertex_of(&self, s: Slot) -> usize {
        self.slot_vertex[s.index()]
    }

    /// Vertices at the `A` and `B` ends of an edge.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        (
            self.vertex_of(Slot::new(e, End::A)),
            self.vertex_of(Slot::new(e, End::B)),
        )
    }

    pub fn degree(&self, v: usize) -> usize {
        self.vertices[v].slots.len()
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    pub fn dirichlet_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.dirichlet[v]).collect()
    }

    pub fn has_dirichlet(&self) -> bool {
        self.dirichlet.iter().any(|&d| d)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn labels(&self) -> &BTreeMap<String, String> {
        &self.labels
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, String>) -> Self {
        self.labels = labels;
        self
    }

    /// Same graph with a different Dirichlet set.
    pub fn with_dirichlet(&self, dirichlet: &[usize]) -> Self {
        let mut g = self.clone();
        g.dirichlet = vec![false; g.vertices.len()];
        for &d in dirichlet {
            g.dirichlet[d] = true;
        }
        g
    }

    /// Same topology with new edge lengths.
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<Self> {
        if lengths.len() != self.edges.len() {
            return Err(Error::Precondition("length vector size mismatch".into()));
        }
        let mut g = self.clone();
        for (e, &l) in g.edges.iter_mut().zip(lengths) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::NonPositiveLength(e.id.clone(), l));
            }
            e.length = l;
        }
        Ok(g)
    }

    /// Union-find component label of every edge.
    pub fn edge_components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.edges.len());
        for v in &self.vertices {
            for w in v.slots.windows(2) {
                uf.union(w[0].edge, w[1].edge);
            }
        }
        (0..self.edges.len()).map(|e| uf.find(e)).collect()
    }

    pub fn component_count(&self) -> usize {
        let mut roots = self.edge_components();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() + 1 == self.vertices.len()
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let (a, b) = self.endpoints(e);
        a == b
    }

    /// Subgraph spanned by the listed edges (in the given order); vertices keep
    /// only slots of those edges. Returns the subgraph and, per new vertex, the
    /// index of the vertex it came from.
    pub fn edge_subgraph(&self, edges: &[usize]) -> (MetricGraph, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.edges.len()];
        for (i, &e) in edges.iter().enumerate() {
            new_index[e] = i;
        }
        let mut vertices = Vec::new();
        let mut origin = Vec::new();
        let mut dirichlet = Vec::new();
        for (vi, v) in self.vertices.iter().enumerate() {
            let slots: Vec<Slot> = v
                .slots
                .iter()
                .filter(|s| new_index[s.edge] != usize::MAX)
                .map(|s| Slot::new(new_index[s.edge], s.end))
                .collect();
            if !slots.is_empty() {
                if self.dirichlet[vi] {
                    dirichlet.push(vertices.len());
                }
                origin.push(vi);
                vertices.push(Vertex {
                    id: v.id.clone(),
                    slots,
                });
            }
        }
        let new_edges = edges.iter().map(|&e| self.edges[e].clone()).collect();
        let g = MetricGraph::new(new_edges, vertices, &dirichlet)
            .expect("edge subgraph of a valid graph is valid");
        (g, origin)
    }
}

fn slot_name(edges: &[Edge], s: Slot) -> String {
    let id = edges.get(s.edge).map(|e| e.id.as_str()).unwrap_or("?");
    format!("({id}, {:?})", s.end)
}

/// Minimal disjoint-set forest.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

// ---------------------------------------------------------------------------
// Builder and file-level description

/// Edge/vertex description as stored in graph files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub edges: Vec<EdgeSpec>,
    pub vertices: Vec<VertexSpec>,
    #[serde(default)]
    pub dirichlet: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    pub slots: Vec<(String, End)>,
}

/// Validate a description and build the graph.
pub fn build_graph(spec: &GraphSpec) -> Result<MetricGraph> {
    let index: HashMap<&str, usize> = spec
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), i))
        .collect();
    let edges: Vec<Edge> = spec
        .edges
        .iter()
        .map(|e| Edge {
            id: e.id.clone(),
            length: e.length,
        })
        .collect();
    let mut vertices = Vec::with_capacity(spec.vertices.len());
    for v in &spec.vertices {
        let mut slots = Vec::with_capacity(v.slots.len());
        for (eid, end) in &v.slots {
            let e = *index
                .get(eid.as_str())
                .ok_or_else(|| Error::UnknownEdge(eid.clone()))?;
            slots.push(Slot::new(e, *end));
        }
        vertices.push(Vertex {
            id: v.id.clone(),
            slots,
        });
    }
    let mut dirichlet = Vec::new();
    for d in &spec.dirichlet {
        let vi = spec
            .vertices
            .iter()
            .position(|v| &v.id == d)
            .ok_or_else(|| Error::UnknownVertex(d.clone()))?;
        dirichlet.push(vi);
    }
    Ok(MetricGraph::new(edges, vertices, &dirichlet)?.with_labels(spec.labels.clone()))
}

impl MetricGraph {
    /// File-level description of this graph.
    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    length: e.length,
                })
                .collect(),
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexSpec {
                    id: v.id.clone(),
                    slots: v
                        .slots
                        .iter()
                        .map(|s| (self.edges[s.edge].id.clone(), s.end))
                        .collect(),
                })
                .collect(),
            dirichlet: self
                .dirichlet_vertices()
                .into_iter()
                .map(|v| self.vertices[v].id.clone())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Convenience builder naming vertices by the edges' endpoints.
#[derive(Default, Debug, Clone)]
pub struct GraphBuilder {
    edges: Vec<Edge>,
    vertex_ids: Vec<String>,
    vertex_slots: Vec<Vec<Slot>>,
    dirichlet: Vec<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn vertex(&mut self, id: &str) -> usize {
        match self.vertex_ids.iter().position(|v| v == id) {
            Some(i) => i,
            None => {
                self.vertex_ids.push(id.to_string());
                self.vertex_slots.push(Vec::new());
                self.vertex_ids.len() - 1
            }
        }
    }

    /// Add an edge running from vertex `from` (end `A`) to vertex `to` (end `B`).
    pub fn edge(mut self, id: &str, length: f64, from: &str, to: &str) -> Self {
        let e = self.edges.len();
        self.edges.push(Edge {
            id: id.to_string(),
            length,
        });
        let a = self.vertex(from);
        self.vertex_slots[a].push(Slot::new(e, End::A));
        let b = self.vertex(to);
        self.vertex_slots[b].push(Slot::new(e, End::B));
        self
    }

    pub fn dirichlet(mut self, vertex: &str) -> Self {
        self.dirichlet.push(vertex.to_string());
        self
    }

    pub fn build(self) -> Result<MetricGraph> {
        let mut dirichlet = Vec::new();
        for d in &self.dirichlet {
            let i = self
                .vertex_ids
                .iter()
                .position(|v| v == d)
                .ok_or_else(|| Error::UnknownVertex(d.clone()))?;
            dirichlet.push(i);
        }
        let vertices = self
            .vertex_ids
            .into_iter()
            .zip(self.vertex_slots)
            .map(|(id, slots)| Vertex { id, slots })
            .collect();
        MetricGraph::new(self.edges, vertices, &dirichlet)
    }
}

// ---------------------------------------------------------------------------
// Canonical form

/// Where a vertex of the input graph ended up after canonicalisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CanonPosition {
    Vertex(usize),
    OnEdge { edge: usize, offset: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForm {
    pub graph: MetricGraph,
    pub vertex_map: Vec<CanonPosition>,
}

/// Suppress every non-Dirichlet vertex of degree two. A component that is a
/// cycle of such vertices becomes one loop edge whose single vertex sits at
/// offset 0 of the lowest-index edge of the cycle.
pub fn canonicalize(g: &MetricGraph) -> CanonicalForm {
    let nv = g.vertex_count();
    let is_branch: Vec<bool> = (0..nv)
        .map(|v| {
            let s = &g.vertices[v].slots;
            g.degree(v) != 2 || g.is_dirichlet(v) || s[0].edge == s[1].edge
        })
        .collect();

    // Each chain: start vertex, end vertex, traversed (edge, forward) list.
    struct Chain {
        from: usize,
        to: usize,
        steps: Vec<(usize, bool)>,
    }
    let mut consumed = vec![false; g.edge_count()];
    let mut chains: Vec<Chain> = Vec::new();

    let walk = |start_slot: Slot, consumed: &mut Vec<bool>| -> Chain {
        let from = g.vertex_of(start_slot);
        let mut steps = Vec::new();
        let mut slot = start_slot;
        loop {
            consumed[slot.edge] = true;
            steps.push((slot.edge, slot.end == End::A));
            let arrive = slot.opposite();
            let w = g.vertex_of(arrive);
            if is_branch[w] || w == from {
                return Chain { from, to: w, steps };
            }
            let next = g.vertices[w]
                .slots
                .iter()
                .copied()
                .find(|&s| s != arrive)
                .expect("degree-two vertex has a second slot");
            if consumed[next.edge] {
                return Chain { from, to: w, steps };
            }
            slot = next;
        }
    };

    for (v, _) in is_branch.iter().enumerate().take(nv).filter(|(_, &b)| b) {
        for &s in &g.vertices[v].slots {
            if !consumed[s.edge] {
                let c = walk(s, &mut consumed);
                chains.push(c);
            }
        }
    }
    // Remaining edges lie on pure cycles of dummy vertices.
    let mut cycle_markers = Vec::new();
    for e in 0..g.edge_count() {
        if !consumed[e] {
            let start = Slot::new(e, End::A);
            let c = walk(start, &mut consumed);
            cycle_markers.push(c.from);
            chains.push(c);
        }
    }

    // New vertex set: branch vertices plus one marker per pure cycle, in input order.
    let mut keep = is_branch.clone();
    for &m in &cycle_markers {
        keep[m] = true;
    }
    let mut new_vertex = vec![usize::MAX; nv];
    let mut order = 0;
    for v in 0..nv {
        if keep[v] {
            new_vertex[v] = order;
            order += 1;
        }
    }

    // Order chains by their lowest original edge index.
    let mut chain_order: Vec<usize> = (0..chains.len()).collect();
    let low = |c: &Chain| c.steps.iter().map(|s| s.0).min().unwrap();
    chain_order.sort_by_key(|&i| low(&chains[i]));

    let mut edges = Vec::new();
    let mut vslots: Vec<Vec<Slot>> = vec![Vec::new(); order];
    let mut vertex_map = vec![CanonPosition::Vertex(usize::MAX); nv];
    for v in 0..nv {
        if keep[v] {
            vertex_map[v] = CanonPosition::Vertex(new_vertex[v]);
        }
    }
    for (ne, &ci) in chain_order.iter().enumerate() {
        let c = &chains[ci];
        let (lo_pos, &(lo_edge, lo_fwd)) = c
            .steps
            .iter()
            .enumerate()
            .min_by_key(|(_, s)| s.0)
            .unwrap();
        let _ = lo_pos;
        let length: f64 = c.steps.iter().map(|s| g.length(s.0)).sum();
        // Orientation follows the lowest-index edge.
        let (from, to, steps): (usize, usize, Vec<(usize, bool)>) = if lo_fwd {
            (c.from, c.to, c.steps.clone())
        } else {
            (
                c.to,
                c.from,
                c.steps.iter().rev().map(|&(e, f)| (e, !f)).collect(),
            )
        };
        edges.push(Edge {
            id: g.edges[lo_edge].id.clone(),
            length,
        });
        vslots[new_vertex[from]].push(Slot::new(ne, End::A));
        vslots[new_vertex[to]].push(Slot::new(ne, End::B));
        let mut acc = 0.0;
        for (i, &(e, fwd)) in steps.iter().enumerate() {
            acc += g.length(e);
            if i + 1 < steps.len() {
                let end = if fwd { End::B } else { End::A };
                let w = g.vertex_of(Slot::new(e, end));
                if !keep[w] {
                    vertex_map[w] = CanonPosition::OnEdge {
                        edge: ne,
                        offset: acc,
                    };
                }
            }
        }
    }
    let vertices: Vec<Vertex> = (0..nv)
        .filter(|&v| keep[v])
        .map(|v| Vertex {
            id: g.vertices[v].id.clone(),
            slots: std::mem::take(&mut vslots[new_vertex[v]]),
        })
        .collect();
    let dirichlet: Vec<usize> = (0..nv)
        .filter(|&v| keep[v] && g.is_dirichlet(v))
        .map(|v| new_vertex[v])
        .collect();
    let graph = MetricGraph::new(edges, vertices, &dirichlet)
        .expect("canonical form of a valid graph is valid")
        .with_labels(g.labels.clone());
    CanonicalForm { graph, vertex_map }
}

// ---------------------------------------------------------------------------
// Subdivision and cutting

/// Result of inserting dummy vertices into edges.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: MetricGraph,
    /// For each original edge, the chain of new edges from its `A` end to its `B` end.
    pub chains: Vec<Vec<usize>>,
    /// For each original edge, the inserted dummy vertices in order.
    pub dummies: Vec<Vec<usize>>,
}

fn check_positions(g: &MetricGraph, e: usize, pos: &[f64]) -> Result<()> {
    let l = g.length(e);
    let mut prev = 0.0;
    for &x in pos {
        if !(x > prev && x < l) || !x.is_finite() {
            return Err(Error::InvalidPosition(format!(
                "offset {x} on edge `{}` must lie in ({prev}, {l}) and increase strictly",
                g.edges[e].id
            )));
        }
        prev = x;
    }
    Ok(())
}

/// Insert dummy vertices at the given sorted interior offsets of every edge.
pub fn subdivide_all(g: &MetricGraph, positions: &[Vec<f64>]) -> Result<Subdivision> {
    if positions.len() != g.edge_count() {
        return Err(Error::Precondition("one position list per edge required".into()));
    }
    for (e, pos) in positions.iter().enumerate() {
        check_positions(g, e, pos)?;
    }
    let mut edges = Vec::new();
    let mut chains = Vec::with_capacity(g.edge_count());
    for (e, pos) in positions.iter().enumerate() {
        let base = &g.edges[e];
        let mut chain = Vec::with_capacity(pos.len() + 1);
        if pos.is_empty() {
            chain.push(edges.len());
            edges.push(base.clone());
        } else {
            let mut prev = 0.0;
            for (j, &x) in pos.iter().chain(std::iter::once(&base.length)).enumerate() {
                chain.push(edges.len());
                edges.push(Edge {
                    id: format!("{}.{}", base.id, j),
                    length: x - prev,
                });
                prev = x;
            }
        }
        chains.push(chain);
    }
    let map_slot = |s: &Slot| -> Slot {
        let chain = &chains[s.edge];
        match s.end {
            End::A => Slot::new(chain[0], End::A),
            End::B => Slot::new(*chain.last().unwrap(), End::B),
        }
    };
    let mut vertices: Vec<Vertex> = g
        .vertices
        .iter()
        .map(|v| Vertex {
            id: v.id.clone(),
            slots: v.slots.iter().map(map_slot).collect(),
        })
        .collect();
    let mut dummies = Vec::with_capacity(g.edge_count());
    for (e, pos) in positions.iter().enumerate() {
        let mut ds = Vec::with_capacity(pos.len());
        for j in 0..pos.len() {
            ds.push(vertices.len());
            vertices.push(Vertex {
                id: format!("{}@{}", g.edges[e].id, j + 1),
                slots: vec![
                    Slot::new(chains[e][j], End::B),
                    Slot::new(chains[e][j + 1], End::A),
                ],
            });
        }
        dummies.push(ds);
    }
    let graph = MetricGraph::new(edges, vertices, &g.dirichlet_vertices())?
        .with_labels(g.labels.clone());
    Ok(Subdivision {
        graph,
        chains,
        dummies,
    })
}

/// Insert dummy vertices on one edge.
pub fn subdivide(g: &MetricGraph, edge: usize, positions: &[f64]) -> Result<Subdivision> {
    if edge >= g.edge_count() {
        return Err(Error::UnknownEdge(format!("#{edge}")));
    }
    let mut all = vec![Vec::new(); g.edge_count()];
    all[edge] = positions.to_vec();
    subdivide_all(g, &all)
}

/// Cut through several vertices at once. Each entry gives a vertex and a set
/// partition of its slot class; returns the new graph and the images of every
/// cut vertex (one new vertex per block).
pub fn cut_vertices(
    g: &MetricGraph,
    cuts: &[(usize, Vec<Vec<Slot>>)],
) -> Result<(MetricGraph, Vec<Vec<usize>>)> {
    let mut plan: Vec<Option<&Vec<Vec<Slot>>>> = vec![None; g.vertex_count()];
    for (v, blocks) in cuts {
        if *v >= g.vertex_count() {
            return Err(Error::UnknownVertex(format!("#{v}")));
        }
        let mut all: Vec<Slot> = blocks.iter().flatten().copied().collect();
        all.sort();
        let ok = blocks.iter().all(|b| !b.is_empty())
            && all.windows(2).all(|w| w[0] != w[1])
            && all == g.vertices[*v].slots;
        if !ok {
            return Err(Error::InvalidBlocks(g.vertices[*v].id.clone()));
        }
        plan[*v] = Some(blocks);
    }
    let mut vertices = Vec::new();
    let mut dirichlet = Vec::new();
    let mut images = vec![Vec::new(); g.vertex_count()];
    for (vi, v) in g.vertices.iter().enumerate() {
        match plan[vi] {
            Some(blocks) if blocks.len() > 1 => {
                for (bi, b) in blocks.iter().enumerate() {
                    if g.is_dirichlet(vi) {
                        dirichlet.push(vertices.len());
                    }
                    images[vi].push(vertices.len());
                    vertices.push(Vertex {
                        id: format!("{}/{}", v.id, bi),
                        slots: b.clone(),
                    });
                }
            }
            _ => {
                if g.is_dirichlet(vi) {
                    dirichlet.push(vertices.len());
                }
                images[vi].push(vertices.len());
                vertices.push(v.clone());
            }
        }
    }
    let graph =
        MetricGraph::new(g.edges.clone(), vertices, &dirichlet)?.with_labels(g.labels.clone());
    let images = cuts.iter().map(|(v, _)| images[*v].clone()).collect();
    Ok((graph, images))
}

/// Cut through one vertex.
pub fn cut_vertex(g: &MetricGraph, vertex: usize, blocks: &[Vec<Slot>]) -> Result<MetricGraph> {
    cut_vertices(g, &[(vertex, blocks.to_vec())]).map(|(g, _)| g)
}

/// Connected components with the indices of the edges they came from, ordered by
/// the lexicographically smallest edge id.
pub fn components(g: &MetricGraph) -> Vec<(MetricGraph, Vec<usize>)> {
    let roots = g.edge_components();
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (e, r) in roots.into_iter().enumerate() {
        groups.entry(r).or_default().push(e);
    }
    let mut comps: Vec<(MetricGraph, Vec<usize>)> = groups
        .into_values()
        .map(|edges| (g.edge_subgraph(&edges).0, edges))
        .collect();
    let key = |c: &(MetricGraph, Vec<usize>)| {
        c.1.iter()
            .map(|&e| g.edges[e].id.clone())
            .min()
            .unwrap_or_default()
    };
    comps.sort_by_key(key);
    comps
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest-path distance between two points; `+inf` across components.
pub fn path_distance(g: &MetricGraph, x: Point, y: Point) -> Result<f64> {
    for p in [x, y] {
        if p.edge >= g.edge_count() {
            return Err(Error::UnknownEdge(format!("#{}", p.edge)));
        }
        let l = g.length(p.edge);
        if !(p.offset >= 0.0 && p.offset <= l) {
            return Err(Error::InvalidPosition(format!(
                "offset {} outside [0, {l}]",
                p.offset
            )));
        }
    }
    let mut best = f64::INFINITY;
    if x.edge == y.edge {
        best = (x.offset - y.offset).abs();
    }
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    let (xa, xb) = g.endpoints(x.edge);
    for (v, d) in [(xa, x.offset), (xb, g.length(x.edge) - x.offset)] {
        if d < dist[v] {
            dist[v] = d;
            heap.push(HeapItem(d, v));
        }
    }
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for s in &g.vertices[v].slots {
            let w = g.vertex_of(s.opposite());
            let nd = d + g.length(s.edge);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapItem(nd, w));
            }
        }
    }
    let (ya, yb) = g.endpoints(y.edge);
    best = best
        .min(dist[ya] + y.offset)
        .min(dist[yb] + g.length(y.edge) - y.offset);
    Ok(best)
}

/// Euclidean distance between the edge-length vectors of two graphs under an edge
/// bijection (`edge_map[i]` is the edge of `g2` matched with edge `i` of `g1`).
pub fn graph_space_distance(g1: &MetricGraph, g2: &MetricGraph, edge_map: &[usize]) -> Result<f64> {
    if g1.edge_count() != g2.edge_count() || edge_map.len() != g1.edge_count() {
        return Err(Error::NotIsomorphic);
    }
    if !extends_to_isomorphism(g1, g2, edge_map) {
        return Err(Error::NotIsomorphic);
    }
    Ok(edge_map
        .iter()
        .enumerate()
        .map(|(i, &j)| (g1.length(i) - g2.length(j)).powi(2))
        .sum::<f64>()
        .sqrt())
}

fn extends_to_isomorphism(g1: &MetricGraph, g2: &MetricGraph, edge_map: &[usize]) -> bool {
    let mut used = vec![false; g2.edge_count()];
    for &j in edge_map {
        if j >= used.len() || used[j] {
            return false;
        }
        used[j] = true;
    }
    if g1.vertex_count() != g2.vertex_count() {
        return false;
    }
    fn rec(
        g1: &MetricGraph,
        g2: &MetricGraph,
        map: &[usize],
        i: usize,
        fwd: &mut Vec<usize>,
        bwd: &mut Vec<usize>,
    ) -> bool {
        if i == map.len() {
            return true;
        }
        let (a1, b1) = g1.endpoints(i);
        let (a2, b2) = g2.endpoints(map[i]);
        for (x, y) in [(a2, b2), (b2, a2)] {
            let mut assigned = Vec::new();
            let mut ok = true;
            for (u, w) in [(a1, x), (b1, y)] {
                if fwd[u] == usize::MAX && bwd[w] == usize::MAX {
                    fwd[u] = w;
                    bwd[w] = u;
                    assigned.push(u);
                } else if fwd[u] != w {
                    ok = false;
                    break;
                }
            }
            if ok && rec(g1, g2, map, i + 1, fwd, bwd) {
                return true;
            }
            for u in assigned {
                bwd[fwd[u]] = usize::MAX;
                fwd[u] = usize::MAX;
            }
        }
        false
    }
    let mut fwd = vec![usize::MAX; g1.vertex_count()];
    let mut bwd = vec![usize::MAX; g2.vertex_count()];
    rec(g1, g2, edge_map, 0, &mut fwd, &mut bwd)
}

/// Contract the listed edges. Returns the contracted graph and, for every vertex
/// of `g`, the vertex of the result its class `[v]` became. A merged vertex is
/// Dirichlet as soon as one member was.
pub fn collapse_zero_edges(g: &MetricGraph, shrink: &[usize]) -> Result<(MetricGraph, Vec<usize>)> {
    let mut gone = vec![false; g.edge_count()];
    for &e in shrink {
        if e >= g.edge_count() {
            return Err(Error::UnknownEdge(format!("#{e}")));
        }
        gone[e] = true;
    }
    if gone.iter().all(|&x| x) {
        return Err(Error::CollapseAll);
    }
    let mut uf = UnionFind::new(g.vertex_count());
    for (e, &s) in gone.iter().enumerate() {
        if s {
            let (a, b) = g.endpoints(e);
            uf.union(a, b);
        }
    }
    let kept: Vec<usize> = (0..g.edge_count()).filter(|&e| !gone[e]).collect();
    let mut new_edge = vec![usize::MAX; g.edge_count()];
    for (i, &e) in kept.iter().enumerate() {
        new_edge[e] = i;
    }
    // Class representatives in order of their smallest member.
    let mut class_index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut reps = Vec::new();
    for v in 0..g.vertex_count() {
        let r = uf.find(v);
        if let std::collections::btree_map::Entry::Vacant(slot) = class_index.entry(r) {
            slot.insert(reps.len());
            reps.push(v);
        }
    }
    let mut slots = vec![Vec::new(); reps.len()];
    let mut dirichlet_flag = vec![false; reps.len()];
    let mut class_map = vec![0; g.vertex_count()];
    for v in 0..g.vertex_count() {
        let c = class_index[&uf.find(v)];
        class_map[v] = c;
        if g.is_dirichlet(v) {
            dirichlet_flag[c] = true;
        }
        for s in &g.vertices[v].slots {
            if !gone[s.edge] {
                slots[c].push(Slot::new(new_edge[s.edge], s.end));
            }
        }
    }
    // Classes that lost every slot disappear; remap.
    let mut final_index = vec![usize::MAX; reps.len()];
    let mut vertices = Vec::new();
    let mut dirichlet = Vec::new();
    for (c, &rep) in reps.iter().enumerate() {
        if !slots[c].is_empty() {
            final_index[c] = vertices.len();
            if dirichlet_flag[c] {
                dirichlet.push(vertices.len());
            }
            vertices.push(Vertex {
                id: g.vertices[rep].id.clone(),
                slots: std::mem::take(&mut slots[c]),
            });
        }
    }
    let edges = kept.iter().map(|&e| g.edges[e].clone()).collect();
    let graph = MetricGraph::new(edges, vertices, &dirichlet)?.with_labels(g.labels.clone());
    let class_map = class_map.into_iter().map(|c| final_index[c]).collect();
    Ok((graph, class_map))
}

// ---------------------------------------------------------------------------
// Discrete structure and isomorphism

/// Underlying multigraph (with loops) of a metric graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<String>,
    pub incidence: Vec<(usize, usize)>,
}

impl DiscreteGraph {
    pub fn of(g: &MetricGraph) -> Self {
        DiscreteGraph {
            vertices: g.vertices.iter().map(|v| v.id.clone()).collect(),
            edges: g.edges.iter().map(|e| e.id.clone()).collect(),
            incidence: (0..g.edge_count()).map(|e| g.endpoints(e)).collect(),
        }
    }

    fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(a, b) in &self.incidence {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }
}

/// An isomorphism: vertex map, edge map and, per edge, whether its orientation is
/// reversed (`A` end mapped to the image's `B` end).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Isomorphism {
    pub vertex_map: Vec<usize>,
    pub edge_map: Vec<usize>,
    pub flipped: Vec<bool>,
}

impl Isomorphism {
    pub fn identity(g: &MetricGraph) -> Self {
        Isomorphism {
            vertex_map: (0..g.vertex_count()).collect(),
            edge_map: (0..g.edge_count()).collect(),
            flipped: vec![false; g.edge_count()],
        }
    }

    pub fn map_slot(&self, s: Slot) -> Slot {
        let end = if self.flipped[s.edge] { s.end.other() } else { s.end };
        Slot::new(self.edge_map[s.edge], end)
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Isomorphism) -> Isomorphism {
        Isomorphism {
            vertex_map: self.vertex_map.iter().map(|&v| other.vertex_map[v]).collect(),
            edge_map: self.edge_map.iter().map(|&e| other.edge_map[e]).collect(),
            flipped: self
                .edge_map
                .iter()
                .zip(&self.flipped)
                .map(|(&e, &f)| f ^ other.flipped[e])
                .collect(),
        }
    }
}

struct IsoProblem<'a> {
    inc1: &'a [(usize, usize)],
    inc2: &'a [(usize, usize)],
    deg1: Vec<usize>,
    deg2: Vec<usize>,
    weight1: Option<&'a [f64]>,
    weight2: Option<&'a [f64]>,
    tag1: Option<&'a [bool]>,
    tag2: Option<&'a [bool]>,
    order: Vec<usize>,
    limit: usize,
}

impl IsoProblem<'_> {
    fn run(&self) -> Vec<Isomorphism> {
        let n1 = self.deg1.len();
        let mut out = Vec::new();
        let mut fwd = vec![usize::MAX; n1];
        let mut bwd = vec![usize::MAX; self.deg2.len()];
        let mut emap = vec![usize::MAX; self.inc1.len()];
        let mut flip = vec![false; self.inc1.len()];
        let mut used = vec![false; self.inc2.len()];
        self.rec(0, &mut fwd, &mut bwd, &mut emap, &mut flip, &mut used, &mut out);
        out
    }

    fn vertex_ok(&self, u: usize, w: usize) -> bool {
        self.deg1[u] == self.deg2[w]
            && match (self.tag1, self.tag2) {
                (Some(t1), Some(t2)) => t1[u] == t2[w],
                _ => true,
            }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        depth: usize,
        fwd: &mut Vec<usize>,
        bwd: &mut Vec<usize>,
        emap: &mut Vec<usize>,
        flip: &mut Vec<bool>,
        used: &mut Vec<bool>,
        out: &mut Vec<Isomorphism>,
    ) {
        if out.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            out.push(Isomorphism {
                vertex_map: fwd.clone(),
                edge_map: emap.clone(),
                flipped: flip.clone(),
            });
            return;
        }
        let i = self.order[depth];
        let (a1, b1) = self.inc1[i];
        for j in 0..self.inc2.len() {
            if used[j] {
                continue;
            }
            if let (Some(w1), Some(w2)) = (self.weight1, self.weight2) {
                if (w1[i] - w2[j]).abs() > 1e-9 * w1[i].abs().max(w2[j].abs()) {
                    continue;
                }
            }
            let (a2, b2) = self.inc2[j];
            if (a1 == b1) != (a2 == b2) {
                continue;
            }
            for f in [false, true] {
                let (x, y) = if f { (b2, a2) } else { (a2, b2) };
                let mut assigned = Vec::new();
                let mut ok = true;
                for (u, w) in [(a1, x), (b1, y)] {
                    if fwd[u] == usize::MAX {
                        if bwd[w] != usize::MAX || !self.vertex_ok(u, w) {
                            ok = false;
                            break;
                        }
                        fwd[u] = w;
                        bwd[w] = u;
                        assigned.push(u);
                    } else if fwd[u] != w {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    used[j] = true;
                    emap[i] = j;
                    flip[i] = f;
                    self.rec(depth + 1, fwd, bwd, emap, flip, used, out);
                    used[j] = false;
                    emap[i] = usize::MAX;
                }
                for u in assigned {
                    bwd[fwd[u]] = usize::MAX;
                    fwd[u] = usize::MAX;
                }
                if out.len() >= self.limit {
                    return;
                }
            }
        }
    }
}

fn bfs_edge_order(n: usize, inc: &[(usize, usize)]) -> Vec<usize> {
    let mut seen_v = vec![false; n];
    let mut taken = vec![false; inc.len()];
    let mut order = Vec::with_capacity(inc.len());
    while order.len() < inc.len() {
        let start = (0..inc.len()).find(|&e| !taken[e]).unwrap();
        taken[start] = true;
        order.push(start);
        seen_v[inc[start].0] = true;
        seen_v[inc[start].1] = true;
        loop {
            let next = (0..inc.len()).find(|&e| !taken[e] && (seen_v[inc[e].0] || seen_v[inc[e].1]));
            match next {
                Some(e) => {
                    taken[e] = true;
                    order.push(e);
                    seen_v[inc[e].0] = true;
                    seen_v[inc[e].1] = true;
                }
                None => break,
            }
        }
    }
    order
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Edge cap above which brute-force isomorphism testing is refused.
pub const ISO_EDGE_CAP: usize = 12;

/// Some isomorphism between two discrete graphs, or `None`.
pub fn discrete_isomorphic(g1: &DiscreteGraph, g2: &DiscreteGraph) -> Result<Option<Isomorphism>> {
    for g in [g1, g2] {
        if g.edges.len() > ISO_EDGE_CAP {
            return Err(Error::SizeCap {
                edges: g.edges.len(),
                cap: ISO_EDGE_CAP,
            });
        }
    }
    if g1.edges.len() != g2.edges.len() || g1.vertices.len() != g2.vertices.len() {
        return Ok(None);
    }
    let (d1, d2) = (g1.degrees(), g2.degrees());
    if sorted(d1.clone()) != sorted(d2.clone()) {
        return Ok(None);
    }
    let loops = |g: &DiscreteGraph| g.incidence.iter().filter(|(a, b)| a == b).count();
    if loops(g1) != loops(g2) {
        return Ok(None);
    }
    let p = IsoProblem {
        inc1: &g1.incidence,
        inc2: &g2.incidence,
        deg1: d1,
        deg2: d2,
        weight1: None,
        weight2: None,
        tag1: None,
        tag2: None,
        order: bfs_edge_order(g1.vertices.len(), &g1.incidence),
        limit: 1,
    };
    Ok(p.run().into_iter().next())
}

/// All automorphisms of a metric graph (up to `limit`). With `metric` set, edge
/// lengths and the Dirichlet set must be preserved.
pub fn automorphisms(g: &MetricGraph, metric: bool, limit: usize) -> Vec<Isomorphism> {
    let d = DiscreteGraph::of(g);
    let deg = d.degrees();
    let lengths = g.lengths();
    let p = IsoProblem {
        inc1: &d.incidence,
        inc2: &d.incidence,
        deg1: deg.clone(),
        deg2: deg,
        weight1: metric.then_some(lengths.as_slice()),
        weight2: metric.then_some(lengths.as_slice()),
        tag1: metric.then_some(g.dirichlet.as_slice()),
        tag2: metric.then_some(g.dirichlet.as_slice()),
        order: bfs_edge_order(d.vertices.len(), &d.incidence),
        limit,
    };
    p.run()
}

/// Some isomorphism of metric graphs preserving lengths and Dirichlet vertices.
pub fn metric_isomorphic(g1: &MetricGraph, g2: &MetricGraph) -> Option<Isomorphism> {
    if g1.edge_count() != g2.edge_count() || g1.vertex_count() != g2.vertex_count() {
        return None;
    }
    let (d1, d2) = (DiscreteGraph::of(g1), DiscreteGraph::of(g2));
    let (l1, l2) = (g1.lengths(), g2.lengths());
    let p = IsoProblem {
        inc1: &d1.incidence,
        inc2: &d2.incidence,
        deg1: d1.degrees(),
        deg2: d2.degrees(),
        weight1: Some(&l1),
        weight2: Some(&l2),
        tag1: Some(&g1.dirichlet),
        tag2: Some(&g2.dirichlet),
        order: bfs_edge_order(d1.vertices.len(), &d1.incidence),
        limit: 1,
    };
    p.run().into_iter().next()
}
