//! Enumeration of cut-pattern templates (cut counts per edge plus vertex blocks).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{for_each_rgs, set_partitions};
use crate::error::{Error, Result};
use crate::graph::{automorphisms, Isomorphism, MetricGraph, Slot, UnionFind};
use crate::partition::{make_partition, CutPattern, Descriptor, Flags, Partition, PartitionClass};

/// Symbolic cut pattern: positions are free inside the open ordered simplex of
/// each edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPatternTemplate {
    pub cut_counts: Vec<usize>,
    /// Vertices cut into at least two blocks (base slots).
    pub vertex_blocks: Vec<(usize, Vec<Vec<Slot>>)>,
    pub k: usize,
    pub flags: Flags,
    /// Readable descriptor, unique within one enumeration.
    pub id: String,
}

impl CutPatternTemplate {
    /// Number of free positions.
    pub fn dimension(&self) -> usize {
        self.cut_counts.iter().sum()
    }

    pub fn pattern(&self, edge_cuts: Vec<Vec<f64>>) -> CutPattern {
        CutPattern {
            edge_cuts,
            vertex_blocks: self.vertex_blocks.clone(),
        }
    }

    /// Evenly spaced cuts on every edge.
    pub fn centre(&self, g: &MetricGraph) -> Vec<Vec<f64>> {
        self.cut_counts
            .iter()
            .enumerate()
            .map(|(e, &c)| {
                let l = g.length(e);
                (1..=c).map(|j| l * j as f64 / (c + 1) as f64).collect()
            })
            .collect()
    }

    pub fn partition(&self, g: &MetricGraph) -> Result<Partition> {
        make_partition(g, &self.pattern(self.centre(g)))
    }
}

/// How templates are identified during deduplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyMode {
    /// Full cut descriptor.
    Descriptor,
    /// Data that determines Dirichlet energies: cluster membership of every piece
    /// and the set of cut vertices. Block refinements inside a cluster collapse.
    DirichletEnergy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumOptions {
    /// Interior cuts allowed per edge; `None` means `k - 1`.
    pub max_cuts_per_edge: Option<usize>,
    pub class: PartitionClass,
    /// Limit on raw (pre-deduplication) templates.
    pub cap: usize,
    /// Deduplicate under length-preserving automorphisms.
    pub symmetry: bool,
    pub key: KeyMode,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_cuts_per_edge: None,
            class: PartitionClass::Rigid,
            cap: 1_000_000,
            symmetry: true,
            key: KeyMode::Descriptor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Descriptor(Descriptor),
    Energy {
        cut_counts: Vec<usize>,
        colours: Vec<Vec<usize>>,
        cut_vertices: Vec<usize>,
    },
}

fn relabel(colours: &mut [Vec<usize>]) {
    let mut map = std::collections::HashMap::new();
    for row in colours.iter_mut() {
        for c in row.iter_mut() {
            let n = map.len();
            *c = *map.entry(*c).or_insert(n);
        }
    }
}

impl Key {
    fn mapped(&self, phi: &Isomorphism) -> Key {
        match self {
            Key::Descriptor(d) => Key::Descriptor(d.mapped(phi)),
            Key::Energy {
                cut_counts,
                colours,
                cut_vertices,
            } => {
                let mut counts = vec![0; cut_counts.len()];
                let mut cols = vec![Vec::new(); colours.len()];
                for (e, row) in colours.iter().enumerate() {
                    let e2 = phi.edge_map[e];
                    counts[e2] = cut_counts[e];
                    let mut r = row.clone();
                    if phi.flipped[e] {
                        r.reverse();
                    }
                    cols[e2] = r;
                }
                relabel(&mut cols);
                let mut cv: Vec<usize> = cut_vertices.iter().map(|&v| phi.vertex_map[v]).collect();
                cv.sort_unstable();
                Key::Energy {
                    cut_counts: counts,
                    colours: cols,
                    cut_vertices: cv,
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BlockMode {
    /// One block per colour at multi-colour vertices; others uncut.
    Faithful,
    /// Any refinement of the colour classes at multi-colour vertices.
    Rigid,
    /// Any refinement of the colour classes anywhere.
    Loose,
    /// Faithful blocks, plus every two-block split of single-colour vertices.
    LooseDirichlet,
}

fn product_of_partitions(classes: &[Vec<Slot>]) -> Vec<Vec<Vec<Slot>>> {
    let mut out: Vec<Vec<Vec<Slot>>> = vec![Vec::new()];
    for class in classes {
        let parts = set_partitions(class);
        let mut next = Vec::with_capacity(out.len() * parts.len());
        for prefix in &out {
            for p in &parts {
                let mut q = prefix.clone();
                q.extend(p.iter().cloned());
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn two_block_splits(slots: &[Slot]) -> Vec<Vec<Vec<Slot>>> {
    let n = slots.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    // the first slot stays in block 0
    for mask in 1..(1u64 << (n - 1)) {
        let mut a = vec![slots[0]];
        let mut b = Vec::new();
        for (i, &s) in slots.iter().enumerate().skip(1) {
            if mask >> (i - 1) & 1 == 1 {
                b.push(s);
            } else {
                a.push(s);
            }
        }
        out.push(vec![a, b]);
    }
    out
}

fn vertex_options(classes: &[Vec<Slot>], mode: BlockMode) -> Vec<Vec<Vec<Slot>>> {
    let all = || classes.iter().flatten().copied().collect::<Vec<Slot>>();
    match mode {
        BlockMode::Faithful => vec![if classes.len() >= 2 {
            classes.to_vec()
        } else {
            vec![all()]
        }],
        BlockMode::Rigid => {
            if classes.len() >= 2 {
                product_of_partitions(classes)
            } else {
                vec![vec![all()]]
            }
        }
        BlockMode::Loose => product_of_partitions(classes),
        BlockMode::LooseDirichlet => {
            if classes.len() >= 2 {
                vec![classes.to_vec()]
            } else {
                let mut v = vec![vec![all()]];
                v.extend(two_block_splits(&all()));
                v
            }
        }
    }
}

fn normalise_blocks(mut blocks: Vec<Vec<Slot>>) -> Vec<Vec<Slot>> {
    for b in &mut blocks {
        b.sort();
    }
    blocks.sort();
    blocks
}

fn template_id(g: &MetricGraph, counts: &[usize], blocks: &[(usize, Vec<Vec<Slot>>)]) -> String {
    let end = |s: &Slot| match s.end {
        crate::graph::End::A => "a",
        crate::graph::End::B => "b",
    };
    let mut parts: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(e, c)| format!("{}x{}", g.edges()[e].id, c))
        .collect();
    for (v, bl) in blocks {
        let b: Vec<String> = bl
            .iter()
            .map(|blk| {
                blk.iter()
                    .map(|s| format!("{}{}", g.edges()[s.edge].id, end(s)))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        parts.push(format!("{}[{}]", g.vertices()[*v].id, b.join("|")));
    }
    if parts.is_empty() {
        "uncut".into()
    } else {
        parts.join(" ")
    }
}

/// All templates with exactly `k` clusters in the requested class.
pub fn enumerate_templates(
    g: &MetricGraph,
    k: usize,
    opts: &EnumOptions,
) -> Result<Vec<CutPatternTemplate>> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    if !g.is_connected() {
        return Err(Error::Precondition("base graph must be connected".into()));
    }
    let m_edges = g.edge_count();
    let max_c = opts.max_cuts_per_edge.unwrap_or(k - 1);
    let mode = match (opts.class, opts.key) {
        (PartitionClass::Faithful, _) => BlockMode::Faithful,
        (PartitionClass::Loose, KeyMode::DirichletEnergy) => BlockMode::LooseDirichlet,
        (PartitionClass::Loose, _) => BlockMode::Loose,
        (_, KeyMode::DirichletEnergy) => BlockMode::Faithful,
        _ => BlockMode::Rigid,
    };
    let rigid_like = opts.class != PartitionClass::Loose;
    let autos = if opts.symmetry {
        automorphisms(g, true, 1 << 16)
    } else {
        Vec::new()
    };

    let mut seen: HashSet<Key> = HashSet::new();
    let mut out = Vec::new();
    let mut raw = 0usize;
    // every cut either adds a component or removes a cycle
    let budget = k - 1 + m_edges + 1 - g.vertex_count();
    let mut counts = vec![0usize; m_edges];
    loop {
        let n_iso: usize = counts.iter().map(|&c| c.saturating_sub(1)).sum();
        if n_iso < k && counts.iter().sum::<usize>() <= budget {
            let m = k - n_iso;
            // free pieces: the single piece of an uncut edge, or the two end pieces
            let mut slot_piece = vec![0usize; 2 * m_edges];
            let mut piece_of_free = Vec::new();
            for (e, &c) in counts.iter().enumerate() {
                slot_piece[2 * e] = piece_of_free.len();
                piece_of_free.push((e, 0));
                if c > 0 {
                    slot_piece[2 * e + 1] = piece_of_free.len();
                    piece_of_free.push((e, c));
                } else {
                    slot_piece[2 * e + 1] = slot_piece[2 * e];
                }
            }
            let n_free = piece_of_free.len();
            let mut failure = None;
            for_each_rgs(n_free, m, |colour| {
                if rigid_like
                    && counts.iter().enumerate().any(|(e, &c)| {
                        c == 1 && colour[slot_piece[2 * e]] == colour[slot_piece[2 * e + 1]]
                    })
                {
                    return true;
                }
                let options: Vec<Vec<Vec<Vec<Slot>>>> = g
                    .vertices()
                    .iter()
                    .map(|v| {
                        let mut classes: Vec<(usize, Vec<Slot>)> = Vec::new();
                        for &s in &v.slots {
                            let c = colour[slot_piece[s.index()]];
                            match classes.iter_mut().find(|(cc, _)| *cc == c) {
                                Some((_, list)) => list.push(s),
                                None => classes.push((c, vec![s])),
                            }
                        }
                        let classes: Vec<Vec<Slot>> = classes.into_iter().map(|x| x.1).collect();
                        vertex_options(&classes, mode)
                    })
                    .collect();
                let mut choice = vec![0usize; options.len()];
                loop {
                    let mut uf = UnionFind::new(n_free);
                    let mut merges = 0;
                    for (vi, opts_v) in options.iter().enumerate() {
                        for block in &opts_v[choice[vi]] {
                            for w in block.windows(2) {
                                if uf.union(slot_piece[w[0].index()], slot_piece[w[1].index()]) {
                                    merges += 1;
                                }
                            }
                        }
                    }
                    if n_free - merges == m {
                        raw += 1;
                        if raw > opts.cap {
                            failure = Some(Error::EnumerationCap(opts.cap));
                            return false;
                        }
                        let blocks: Vec<(usize, Vec<Vec<Slot>>)> = options
                            .iter()
                            .enumerate()
                            .filter(|(vi, o)| o[choice[*vi]].len() >= 2)
                            .map(|(vi, o)| (vi, normalise_blocks(o[choice[vi]].clone())))
                            .collect();
                        let key = match opts.key {
                            KeyMode::Descriptor => Key::Descriptor(Descriptor {
                                cut_counts: counts.clone(),
                                blocks: blocks.iter().cloned().collect(),
                            }),
                            KeyMode::DirichletEnergy => {
                                let mut colours: Vec<Vec<usize>> = counts
                                    .iter()
                                    .map(|&c| vec![usize::MAX; c + 1])
                                    .collect();
                                let mut next = m;
                                for (e, &c) in counts.iter().enumerate() {
                                    colours[e][0] = colour[slot_piece[2 * e]];
                                    colours[e][c] = colour[slot_piece[2 * e + 1]];
                                    for slot in colours[e].iter_mut().take(c).skip(1) {
                                        *slot = next;
                                        next += 1;
                                    }
                                }
                                relabel(&mut colours);
                                Key::Energy {
                                    cut_counts: counts.clone(),
                                    colours,
                                    cut_vertices: blocks.iter().map(|b| b.0).collect(),
                                }
                            }
                        };
                        if !seen.contains(&key) {
                            for phi in &autos {
                                seen.insert(key.mapped(phi));
                            }
                            seen.insert(key);
                            out.push((counts.clone(), blocks));
                        }
                    }
                    let mut i = 0;
                    loop {
                        if i == choice.len() {
                            return true;
                        }
                        choice[i] += 1;
                        if choice[i] < options[i].len() {
                            break;
                        }
                        choice[i] = 0;
                        i += 1;
                    }
                }
            });
            if let Some(err) = failure {
                return Err(err);
            }
        }
        let mut i = 0;
        loop {
            if i == m_edges {
                return finish(g, k, opts.class, out);
            }
            counts[i] += 1;
            if counts[i] <= max_c {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

type RawTemplate = (Vec<usize>, Vec<(usize, Vec<Vec<Slot>>)>);

fn finish(
    g: &MetricGraph,
    k: usize,
    class: PartitionClass,
    raw: Vec<RawTemplate>,
) -> Result<Vec<CutPatternTemplate>> {
    let mut out = Vec::with_capacity(raw.len());
    for (cut_counts, vertex_blocks) in raw {
        let id = template_id(g, &cut_counts, &vertex_blocks);
        let mut t = CutPatternTemplate {
            cut_counts,
            vertex_blocks,
            k,
            flags: Flags::default(),
            id,
        };
        let p = t.partition(g)?;
        debug_assert_eq!(p.k(), k);
        t.flags = p.flags();
        if t.flags.has(class) {
            out.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn opts(class: PartitionClass, symmetry: bool) -> EnumOptions {
        EnumOptions {
            class,
            symmetry,
            ..EnumOptions::default()
        }
    }

    #[test]
    fn interval_has_one_two_partition() {
        let g = fixtures::interval(1.0, false, false);
        let t = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, true)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].cut_counts, vec![1]);
        assert!(t[0].vertex_blocks.is_empty());
    }

    #[test]
    fn lasso_rigid_families_present() {
        let g = fixtures::lasso();
        let t = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, false)).unwrap();
        let v = g.vertex_index("v").unwrap();
        let vertex_only: Vec<_> = t.iter().filter(|t| t.dimension() == 0).collect();
        // faithful {e1}|{e2,e3} and the three-way split at v
        assert!(vertex_only.iter().any(|t| t.vertex_blocks == vec![(
            v,
            vec![vec![g.vertices()[v].slots[0]], vec![g.vertices()[v].slots[1], g.vertices()[v].slots[2]]]
        )]));
        assert!(vertex_only
            .iter()
            .any(|t| t.vertex_blocks.len() == 1 && t.vertex_blocks[0].1.len() == 3));
        // two cuts on the loop (proper)
        assert!(t.iter().any(|t| t.flags.proper && t.dimension() == 2));
        assert!(t.iter().all(|t| t.flags.rigid && t.k == 2));
    }

    #[test]
    fn star_two_partitions_up_to_symmetry() {
        let g = fixtures::star3();
        let t = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, true)).unwrap();
        // one cut on an edge, or a two-block cut at the centre
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|t| t.dimension() == 1));
        assert!(t.iter().any(|t| t.dimension() == 0));
    }

    #[test]
    fn symmetry_only_removes_duplicates() {
        let g = fixtures::pumpkin3();
        let all = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, false)).unwrap();
        let red = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, true)).unwrap();
        // uncut edges: 3 colourings x 3 vertex refinements; one cut edge: 3 x 6;
        // two cut edges: 3 x 2; all three cut: 1
        assert_eq!(all.len(), 34);
        assert!(red.len() < all.len());
        let ids: HashSet<_> = all.iter().map(|t| t.id.clone()).collect();
        assert!(red.iter().all(|t| ids.contains(&t.id)));
    }

    #[test]
    fn cap_is_enforced() {
        let g = fixtures::pumpkin6();
        let o = EnumOptions {
            cap: 10,
            ..opts(PartitionClass::Rigid, true)
        };
        assert!(matches!(
            enumerate_templates(&g, 2, &o),
            Err(Error::EnumerationCap(10))
        ));
    }

    #[test]
    fn loose_contains_rigid() {
        let g = fixtures::lasso();
        let rigid = enumerate_templates(&g, 2, &opts(PartitionClass::Rigid, false)).unwrap();
        let loose = enumerate_templates(&g, 2, &opts(PartitionClass::Loose, false)).unwrap();
        let ids: HashSet<_> = loose.iter().map(|t| t.id.clone()).collect();
        assert!(rigid.iter().all(|t| ids.contains(&t.id)));
        assert!(loose.iter().any(|t| !t.flags.rigid));
    }
}
