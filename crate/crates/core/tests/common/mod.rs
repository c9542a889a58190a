//! Seeded random graphs and the property checks shared by the property and
//! acceptance suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use metpart::graph::UnionFind;
use metpart::nodal::courant_check;
use metpart::partition::{cluster_values, power_mean};
use metpart::search::{enumerate_templates, maximize_with, EnumOptions, SearchOptions};
use metpart::spectral::{eigenvalues, lambda1, mu2, Method};
use metpart::{
    make_partition, minimize, partition_distance, CutPattern, GraphBuilder, MetricGraph, PExp,
    Partition, PartitionClass, Problem, Slot,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub const P_GRID: [PExp; 5] = [
    PExp::Finite(1.0),
    PExp::Finite(1.5),
    PExp::Finite(2.0),
    PExp::Finite(4.0),
    PExp::Infinity,
];

fn build(edges: &[(usize, usize)], rng: &mut ChaCha8Rng) -> MetricGraph {
    let mut b = GraphBuilder::new();
    for (i, &(u, v)) in edges.iter().enumerate() {
        b = b.edge(&format!("e{i}"), rng.random_range(0.5..2.0), &format!("v{u}"), &format!("v{v}"));
    }
    b.build().expect("random graph is valid")
}

/// Connected graph with at most `max_edges` edges and cycle rank at most 2;
/// loops and parallel edges allowed.
pub fn random_graph(rng: &mut ChaCha8Rng, max_edges: usize) -> MetricGraph {
    let m = rng.random_range(1..=max_edges);
    let n = rng.random_range((m.max(3) - 1)..=m + 1);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    while edges.len() < m {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    build(&edges, rng)
}

pub fn random_tree(rng: &mut ChaCha8Rng, max_edges: usize) -> MetricGraph {
    let m = rng.random_range(1..=max_edges);
    let edges: Vec<(usize, usize)> = (1..=m).map(|v| (rng.random_range(0..v), v)).collect();
    build(&edges, rng)
}

pub fn corpus(seed: u64, count: usize, max_edges: usize) -> Vec<MetricGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, max_edges)).collect()
}

pub fn tree_corpus(seed: u64, count: usize, max_edges: usize) -> Vec<MetricGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_tree(&mut rng, max_edges)).collect()
}

pub fn is_path(g: &MetricGraph) -> bool {
    g.is_tree() && (0..g.vertex_count()).all(|v| g.degree(v) <= 2)
}

pub fn bridges(g: &MetricGraph) -> Vec<usize> {
    (0..g.edge_count())
        .filter(|&e| {
            let mut uf = UnionFind::new(g.vertex_count());
            for f in (0..g.edge_count()).filter(|&f| f != e) {
                let (a, b) = g.endpoints(f);
                uf.union(a, b);
            }
            let (a, b) = g.endpoints(e);
            uf.find(a) != uf.find(b)
        })
        .collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: metpart::Error) -> String {
    e.to_string()
}

/// `mu2 >= pi^2/L^2` and `lambda1 >= pi^2/(4 L^2)`, with equality exactly on paths
/// (Dirichlet condition at an end for `lambda1`).
pub fn nicaise(g: &MetricGraph, dirichlet: usize) -> Check {
    let l = g.total_length();
    let bound = PI * PI / (l * l);
    let m = mu2(g).map_err(err)?;
    if is_path(g) {
        ensure((m - bound).abs() <= 1e-9 * bound, || format!("path: mu2 {m} vs {bound}"))?;
    } else {
        ensure(m > bound * (1.0 + 1e-9), || format!("mu2 {m} not above {bound}"))?;
    }
    let gd = g.with_dirichlet(&[dirichlet]);
    let lam = lambda1(&gd).map_err(err)?;
    let b4 = bound / 4.0;
    if is_path(g) && g.degree(dirichlet) == 1 {
        ensure((lam - b4).abs() <= 1e-9 * b4, || format!("path: lambda1 {lam} vs {b4}"))
    } else {
        ensure(lam > b4 * (1.0 + 1e-9), || format!("lambda1 {lam} not above {b4}"))
    }
}

/// `L_q <= L_p <= k^(1/q - 1/p) L_q` for `q <= p`.
pub fn sandwich(grid: &[PExp], values_at: impl Fn(PExp) -> f64, k: usize, rel: f64) -> Check {
    for (i, &q) in grid.iter().enumerate() {
        for &p in &grid[i..] {
            let (lq, lp) = (values_at(q), values_at(p));
            let factor = (k as f64).powf(1.0 / q.value() - 1.0 / p.value());
            ensure(lq <= lp * (1.0 + rel) + 1e-300, || format!("L_{q} = {lq} > L_{p} = {lp}"))?;
            ensure(lp <= factor * lq * (1.0 + rel), || {
                format!("L_{p} = {lp} > {factor} L_{q} = {}", factor * lq)
            })?;
        }
    }
    Ok(())
}

/// Random cut pattern: up to two interior cuts per edge and random vertex splits.
pub fn random_pattern(g: &MetricGraph, rng: &mut ChaCha8Rng) -> CutPattern {
    let mut pat = CutPattern::none(g);
    for e in 0..g.edge_count() {
        let c = rng.random_range(0..=2);
        let mut cuts: Vec<f64> = (0..c).map(|_| g.length(e) * rng.random_range(0.05..0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 0.01);
        pat.edge_cuts[e] = cuts;
    }
    for v in 0..g.vertex_count() {
        if g.degree(v) >= 2 && rng.random_bool(0.3) {
            pat = pat.split_vertex(g, v);
        }
    }
    if pat.vertex_blocks.is_empty() && pat.edge_cuts.iter().all(Vec::is_empty) {
        pat.edge_cuts[0] = vec![g.length(0) / 2.0];
    }
    pat
}

pub fn holder_per_partition(g: &MetricGraph, rng: &mut ChaCha8Rng) -> Check {
    let p = make_partition(g, &random_pattern(g, rng)).map_err(err)?;
    for problem in [Problem::Dirichlet, Problem::Natural] {
        let values = cluster_values(&p, problem).map_err(err)?;
        sandwich(&P_GRID, |q| power_mean(&values, q), p.k(), 1e-12)
            .map_err(|e| format!("{problem} k={}: {e}", p.k()))?;
    }
    Ok(())
}

/// Optimal Dirichlet 2-partition energies at `p = 1, 2, inf`.
pub fn holder_optimal(g: &MetricGraph) -> Check {
    let grid = [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity];
    let mut best = Vec::new();
    for p in grid {
        let r = minimize(g, 2, Problem::Dirichlet, p, PartitionClass::Rigid).map_err(err)?;
        best.push(r.value);
    }
    sandwich(&grid, |q| best[grid.iter().position(|&p| p == q).unwrap()], 2, 1e-6)
}

/// `mu_k <= L^D_{k,inf}` for `k = 2, 3`, and `lambda1 = L^D_{1,inf}` with a Dirichlet vertex.
pub fn mu_k_below_dirichlet_energy(g: &MetricGraph) -> Check {
    let spec = eigenvalues(g, 3, Method::Secular).map_err(err)?;
    for k in 2..=3 {
        let r = minimize(g, k, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid).map_err(err)?;
        let mu = spec.eigenvalues[k - 1];
        ensure(mu <= r.value * (1.0 + 1e-9), || format!("mu_{k} {mu} > energy {}", r.value))?;
    }
    let gd = g.with_dirichlet(&[0]);
    let r = minimize(&gd, 1, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid).map_err(err)?;
    let lam = lambda1(&gd).map_err(err)?;
    ensure((lam - r.value).abs() <= 1e-9 * lam, || format!("lambda1 {lam} vs energy {}", r.value))
}

pub fn weak_courant(g: &MetricGraph, count: usize) -> Check {
    for i in 1..=count {
        let c = courant_check(g, i).map_err(err)?;
        ensure(c.pass, || format!("index {i}: nu {:?} kappa {}", c.nu, c.kappa))?;
    }
    Ok(())
}

/// Positions of a template drawn uniformly from its ordered simplex.
pub fn random_positions(g: &MetricGraph, counts: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(e, &c)| {
            let mut x: Vec<f64> = (0..c).map(|_| g.length(e) * rng.random_range(0.02..0.98)).collect();
            x.sort_by(f64::total_cmp);
            x
        })
        .collect()
}

/// Distance axioms on random members of random rigid templates.
pub fn metric_axioms(g: &MetricGraph, rng: &mut ChaCha8Rng) -> Check {
    let k = rng.random_range(2..=3);
    let templates = enumerate_templates(g, k, &EnumOptions::default()).map_err(err)?;
    let movable: Vec<_> = templates.iter().filter(|t| t.dimension() > 0).collect();
    if movable.is_empty() {
        return Ok(());
    }
    let t = movable[rng.random_range(0..movable.len())];
    let base = t.partition(g).map_err(err)?;
    let ps: Vec<Partition> = (0..3)
        .map(|_| base.reposition(&random_positions(g, &t.cut_counts, rng)))
        .collect::<metpart::Result<_>>()
        .map_err(err)?;
    let d = |a: &Partition, b: &Partition| partition_distance(a, b).map_err(err);
    for a in &ps {
        let daa = d(a, a)?;
        ensure(daa.abs() <= 1e-12, || format!("{}: d(a, a) = {daa}", t.id))?;
    }
    for (i, a) in ps.iter().enumerate() {
        for b in &ps[i + 1..] {
            let (ab, ba) = (d(a, b)?, d(b, a)?);
            ensure(ab >= 0.0 && (ab - ba).abs() <= 1e-12 * ab.max(1.0), || {
                format!("{}: d(a, b) = {ab}, d(b, a) = {ba}", t.id)
            })?;
        }
    }
    let (ab, bc, ac) = (d(&ps[0], &ps[1])?, d(&ps[1], &ps[2])?, d(&ps[0], &ps[2])?);
    ensure(ac <= ab + bc + 1e-12, || format!("{}: triangle {ac} > {ab} + {bc}", t.id))
}

/// The pattern reached when the first cut on `edge` slides onto its `A` end.
pub fn slide_to_vertex(g: &MetricGraph, pattern: &CutPattern, edge: usize) -> CutPattern {
    let mut limit = pattern.clone();
    limit.edge_cuts[edge].remove(0);
    let slot = Slot::new(edge, metpart::End::A);
    let v = g.vertex_of(slot);
    if g.degree(v) == 1 {
        return limit;
    }
    match limit.vertex_blocks.iter_mut().find(|(w, _)| *w == v) {
        Some((_, blocks)) => {
            for b in blocks.iter_mut() {
                b.retain(|&s| s != slot);
            }
            blocks.retain(|b| !b.is_empty());
            blocks.push(vec![slot]);
        }
        None => {
            let rest = g.vertices()[v].slots.iter().copied().filter(|&s| s != slot).collect();
            limit.vertex_blocks.push((v, vec![vec![slot], rest]));
        }
    }
    limit
}

/// Outcome of sliding one cut of a rigid template onto a vertex.
pub struct ClosureSample {
    pub template: String,
    pub k: usize,
    pub limit_k: usize,
    pub rigid_sequence: bool,
    pub rigid_limit: bool,
    /// Rigidity after removing the limit vertex cut when it no longer separates.
    pub rigid_healed: bool,
}

/// Sequences inside rigid templates whose first cut on some edge tends to the
/// edge's `A` end; the classification of every member and of the limit.
pub fn closure_samples(g: &MetricGraph, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ClosureSample>, String> {
    let templates = enumerate_templates(g, k, &EnumOptions::default()).map_err(err)?;
    let mut out = Vec::new();
    for t in templates.iter().filter(|t| t.dimension() > 0) {
        let edges: Vec<usize> = (0..g.edge_count()).filter(|&e| t.cut_counts[e] > 0).collect();
        let edge = edges[rng.random_range(0..edges.len())];
        let x = random_positions(g, &t.cut_counts, rng);
        let base = t.partition(g).map_err(err)?;
        let mut rigid_sequence = true;
        for n in 1..=6 {
            let mut y = x.clone();
            y[edge][0] = x[edge][0] * 0.1f64.powi(n);
            rigid_sequence &= base.reposition(&y).map_err(err)?.classify().rigid;
        }
        let pattern = slide_to_vertex(g, &t.pattern(x), edge);
        let limit = make_partition(g, &pattern).map_err(err)?;
        let v = g.vertex_of(Slot::new(edge, metpart::End::A));
        let stuck = limit.cut_points().iter().any(|q| {
            q.location == metpart::partition::CutLocation::Vertex { vertex: v } && !q.separating
        });
        let rigid_healed = if stuck {
            let mut healed = pattern.clone();
            healed.vertex_blocks.retain(|(w, _)| *w != v);
            make_partition(g, &healed).map_err(err)?.flags().rigid
        } else {
            limit.flags().rigid
        };
        out.push(ClosureSample {
            template: t.id.clone(),
            k: t.k,
            limit_k: limit.k(),
            rigid_sequence,
            rigid_limit: limit.flags().rigid,
            rigid_healed,
        });
    }
    Ok(out)
}

/// Limits of rigid sequences stay rigid. When a cluster vanishes, the point it
/// collapses to is only kept as a cut if it still separates.
pub fn rigid_closure(g: &MetricGraph, rng: &mut ChaCha8Rng) -> Check {
    for k in 2..=3 {
        for s in closure_samples(g, k, rng)? {
            ensure(s.rigid_sequence, || format!("{}: sequence member not rigid", s.template))?;
            let rigid = if s.limit_k == s.k { s.rigid_limit } else { s.rigid_healed };
            ensure(rigid, || {
                format!("{}: limit {}-partition of a {}-partition not rigid", s.template, s.limit_k, s.k)
            })?;
        }
    }
    Ok(())
}

/// With a bridge, some rigid 2-partition keeps both spectral gaps above `mu2`.
pub fn bridge_two_cut(g: &MetricGraph) -> Check {
    if bridges(g).is_empty() {
        return Ok(());
    }
    let r = maximize_with(g, 2, Problem::Natural, &SearchOptions::default()).map_err(err)?;
    let m = mu2(g).map_err(err)?;
    ensure(r.value >= m * (1.0 - 1e-7), || format!("max-min {} below mu2 {m}", r.value))
}
