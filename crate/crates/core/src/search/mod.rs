//! Searches over primitive partitions: enumerate templates, optimise cut
//! positions, keep the best.

pub mod enumerate;
pub mod optimize;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::partition::{
    cluster_value, energy, power_mean, EnergyReport, PExp, Partition, PartitionClass,
    PartitionSummary, Problem,
};
use crate::spectral::lambda1;

pub use enumerate::{enumerate_templates, CutPatternTemplate, EnumOptions, KeyMode};
pub use optimize::{
    optimize_template, Direction, Evaluator, Objective, OptimizeOptions, TemplateOutcome,
};

/// Relative tolerance under which two template values count as tied.
pub const TIE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub class: PartitionClass,
    pub max_cuts_per_edge: Option<usize>,
    pub cap: usize,
    pub symmetry: bool,
    /// Keep optimising templates whose lower bound ties the incumbent, so that
    /// every tied template appears in the audit.
    pub exhaustive: bool,
    pub optimize: OptimizeOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            class: PartitionClass::Rigid,
            max_cuts_per_edge: None,
            cap: 1_000_000,
            symmetry: true,
            exhaustive: false,
            optimize: OptimizeOptions::default(),
        }
    }
}

/// Audit entry for one template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub id: String,
    pub dimension: usize,
    pub lower_bound: Option<f64>,
    pub value: Option<f64>,
    pub boundary: bool,
    pub pruned: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptResult {
    pub objective: Objective,
    pub k: usize,
    pub class: PartitionClass,
    pub value: f64,
    pub template: CutPatternTemplate,
    pub positions: Vec<Vec<f64>>,
    pub energy: EnergyReport,
    pub summary: PartitionSummary,
    /// The winner sits on the boundary of its template (no interior optimum existed).
    pub boundary: bool,
    /// Other non-boundary templates within `TIE_TOL` of the winner.
    pub ties: Vec<String>,
    pub audit: Vec<TemplateRecord>,
    pub max_cuts_per_edge: usize,
    /// Every remaining template was pruned by a lower bound.
    pub certified: bool,
    #[serde(skip)]
    pub partition: Option<Partition>,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn key_mode(problem: Problem) -> KeyMode {
    match problem {
        Problem::Dirichlet => KeyMode::DirichletEnergy,
        Problem::Natural => KeyMode::Descriptor,
    }
}

/// Largest common length `t` with `sum clamp(t, lo_i, hi_i) = total`, returning the
/// clamped lengths (they minimise any power mean of a decreasing convex function).
fn water_fill(lo: &[f64], hi: &[f64], total: f64) -> Vec<f64> {
    let fill = |t: f64| -> f64 { lo.iter().zip(hi).map(|(&a, &b)| t.clamp(a, b)).sum() };
    let (mut a, mut b) = (0.0, hi.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if fill(m) < total {
            a = m;
        } else {
            b = m;
        }
    }
    lo.iter().zip(hi).map(|(&l, &h)| b.clamp(l, h)).collect()
}

/// Lower bound on the energy of a template over all positions.
fn lower_bound(g: &MetricGraph, t: &CutPatternTemplate, problem: Problem, p: PExp) -> Result<f64> {
    let part = t.partition(g)?;
    let pi2 = std::f64::consts::PI.powi(2);
    let mut lo = Vec::with_capacity(part.k());
    let mut hi = Vec::with_capacity(part.k());
    let mut fixed = Vec::with_capacity(part.k());
    for c in part.clusters() {
        let mut edges: Vec<usize> = c.pieces.iter().map(|&(e, _)| e).collect();
        let variable = edges.iter().any(|&e| t.cut_counts[e] > 0);
        edges.sort_unstable();
        edges.dedup();
        hi.push(edges.iter().map(|&e| g.length(e)).sum::<f64>());
        lo.push(
            c.pieces
                .iter()
                .filter(|&&(e, _)| t.cut_counts[e] == 0)
                .map(|&(e, _)| g.length(e))
                .sum::<f64>(),
        );
        fixed.push(if variable {
            None
        } else {
            Some(cluster_value(c, problem)?)
        });
    }
    let lengths = water_fill(&lo, &hi, g.total_length());
    let factor = match problem {
        Problem::Dirichlet => 0.25,
        Problem::Natural => 1.0,
    };
    let nicaise: Vec<f64> = lengths
        .iter()
        .zip(&fixed)
        .map(|(&l, f)| f.unwrap_or(factor * pi2 / (l * l)))
        .collect();
    let mut bound = power_mean(&nicaise, p);
    if problem == Problem::Dirichlet {
        // Lengthening edges lowers the first Dirichlet eigenvalue: extend every piece
        // to its full edge.
        let mut ext = Vec::with_capacity(part.k());
        for (c, f) in part.clusters().iter().zip(&fixed) {
            ext.push(match f {
                Some(v) => *v,
                None => {
                    let ls: Vec<f64> = c.pieces.iter().map(|&(e, _)| g.length(e)).collect();
                    lambda1(&c.graph.with_lengths(&ls)?)?
                }
            });
        }
        bound = bound.max(power_mean(&ext, p));
    }
    Ok(bound)
}

struct Candidate {
    template: CutPatternTemplate,
    outcome: TemplateOutcome,
    partition: Partition,
}

fn check_k(g: &MetricGraph, k: usize, problem: Problem) -> Result<()> {
    if k == 0 {
        return Err(Error::Infeasible("k must be at least 1".into()));
    }
    if problem == Problem::Dirichlet && k == 1 && !g.has_dirichlet() {
        return Err(Error::Infeasible(
            "a Dirichlet 1-partition needs a Dirichlet vertex".into(),
        ));
    }
    if !g.is_connected() {
        return Err(Error::Precondition("base graph must be connected".into()));
    }
    Ok(())
}

fn better(objective: &Objective, a: &Candidate, b: &Candidate) -> bool {
    let (va, vb) = (a.outcome.value, b.outcome.value);
    let scale = va.abs().max(vb.abs()).max(1e-300);
    let strictly = match objective.direction {
        Direction::Minimize => va < vb,
        Direction::MaximizeMin => va > vb,
    };
    if (va - vb).abs() > 1e-12 * scale {
        strictly
    } else {
        a.template.id < b.template.id
    }
}

fn search(
    g: &MetricGraph,
    k: usize,
    objective: Objective,
    opts: &SearchOptions,
    templates: Vec<CutPatternTemplate>,
    bounds: Option<Vec<f64>>,
) -> Result<OptResult> {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..templates.len()).collect();
    if let Some(b) = &bounds {
        order.sort_by(|&i, &j| {
            b[i].total_cmp(&b[j])
                .then_with(|| templates[i].id.cmp(&templates[j].id))
        });
    } else {
        order.sort_by(|&i, &j| templates[i].id.cmp(&templates[j].id));
    }
    let mut audit: Vec<TemplateRecord> = order
        .iter()
        .map(|&i| TemplateRecord {
            id: templates[i].id.clone(),
            dimension: templates[i].dimension(),
            lower_bound: bounds.as_ref().map(|b| b[i]),
            value: None,
            boundary: false,
            pruned: false,
        })
        .collect();
    let mut best: Option<Candidate> = None;
    let mut best_boundary: Option<Candidate> = None;
    let mut outcomes: Vec<(String, f64, bool)> = Vec::new();
    let batch = rayon::current_num_threads().max(1);
    let mut pos = 0;
    let mut certified = false;
    while pos < order.len() {
        if let (Some(b), Some(inc)) = (&bounds, &best) {
            let lb = b[order[pos]];
            let v = inc.outcome.value;
            let prune = if opts.exhaustive {
                lb > v * (1.0 + TIE_TOL)
            } else {
                lb >= v * (1.0 - 1e-12)
            };
            if prune {
                for r in &mut audit[pos..] {
                    r.pruned = true;
                }
                certified = true;
                break;
            }
        }
        let end = (pos + batch).min(order.len());
        let results: Vec<Result<(TemplateOutcome, Partition)>> = order[pos..end]
            .par_iter()
            .map(|&i| optimize_template(g, &templates[i], objective, &opts.optimize))
            .collect();
        for (off, res) in results.into_iter().enumerate() {
            let i = order[pos + off];
            let Ok((outcome, partition)) = res else {
                continue;
            };
            let rec = &mut audit[pos + off];
            rec.value = Some(outcome.value);
            rec.boundary = outcome.boundary;
            outcomes.push((templates[i].id.clone(), outcome.value, outcome.boundary));
            let cand = Candidate {
                template: templates[i].clone(),
                outcome,
                partition,
            };
            let slot = if cand.outcome.boundary {
                &mut best_boundary
            } else {
                &mut best
            };
            if slot.as_ref().is_none_or(|b| better(&objective, &cand, b)) {
                *slot = Some(cand);
            }
        }
        pos = end;
    }
    if bounds.is_some() && pos >= order.len() {
        certified = true;
    }
    let winner = best
        .or(best_boundary)
        .ok_or_else(|| Error::Infeasible(format!("no feasible {k}-partition in the class")))?;
    let ties = outcomes
        .iter()
        .filter(|(id, v, b)| {
            !b && *id != winner.template.id
                && (v - winner.outcome.value).abs() <= TIE_TOL * winner.outcome.value.abs()
        })
        .map(|(id, _, _)| id.clone())
        .collect();
    let report = energy(&winner.partition, objective.problem, objective.p)?;
    Ok(OptResult {
        objective,
        k,
        class: opts.class,
        value: winner.outcome.value,
        positions: winner.outcome.positions.clone(),
        energy: report,
        summary: winner.partition.summary(),
        boundary: winner.outcome.boundary,
        ties,
        audit,
        max_cuts_per_edge: opts.max_cuts_per_edge.unwrap_or(k.saturating_sub(1)),
        certified,
        template: winner.template,
        partition: Some(winner.partition),
        wall_time: start.elapsed(),
    })
}

/// Optimal `k`-partition energy in the requested class.
pub fn minimize(
    g: &MetricGraph,
    k: usize,
    problem: Problem,
    p: PExp,
    class: PartitionClass,
) -> Result<OptResult> {
    minimize_with(
        g,
        k,
        problem,
        p,
        &SearchOptions {
            class,
            ..SearchOptions::default()
        },
    )
}

pub fn minimize_with(
    g: &MetricGraph,
    k: usize,
    problem: Problem,
    p: PExp,
    opts: &SearchOptions,
) -> Result<OptResult> {
    check_k(g, k, problem)?;
    let enum_opts = EnumOptions {
        max_cuts_per_edge: opts.max_cuts_per_edge,
        class: opts.class,
        cap: opts.cap,
        symmetry: opts.symmetry,
        key: key_mode(problem),
    };
    let mut templates = enumerate_templates(g, k, &enum_opts)?;
    if problem == Problem::Natural && opts.class == PartitionClass::Loose {
        // Loose natural optima are attained by partitions into trees.
        templates.retain(|t| {
            t.partition(g)
                .map(|p| p.clusters().iter().all(|c| c.natural.is_tree()))
                .unwrap_or(false)
        });
    }
    let bounds = templates
        .iter()
        .map(|t| lower_bound(g, t, problem, p))
        .collect::<Result<Vec<f64>>>()?;
    search(
        g,
        k,
        Objective::minimize(problem, p),
        opts,
        templates,
        Some(bounds),
    )
}

/// Largest smallest-cluster value over rigid `k`-partitions.
pub fn maximize(g: &MetricGraph, k: usize, problem: Problem) -> Result<OptResult> {
    maximize_with(g, k, problem, &SearchOptions::default())
}

pub fn maximize_with(
    g: &MetricGraph,
    k: usize,
    problem: Problem,
    opts: &SearchOptions,
) -> Result<OptResult> {
    check_k(g, k, problem)?;
    let enum_opts = EnumOptions {
        max_cuts_per_edge: opts.max_cuts_per_edge,
        class: PartitionClass::Rigid,
        cap: opts.cap,
        symmetry: opts.symmetry,
        key: key_mode(problem),
    };
    let templates = enumerate_templates(g, k, &enum_opts)?;
    let opts = SearchOptions {
        class: PartitionClass::Rigid,
        ..opts.clone()
    };
    search(g, k, Objective::maximize(problem), &opts, templates, None)
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// The swept parameter (`p`, with `inf` as infinity, or an edge length).
    pub parameter: f64,
    pub value: f64,
    pub template: String,
    pub positions: Vec<Vec<f64>>,
    pub boundary: bool,
    /// Other templates tied with the winner.
    pub ties: Vec<String>,
    /// The winning template differs from the previous row.
    pub switch: bool,
}

fn row(parameter: f64, r: &OptResult, prev: Option<&SweepRow>) -> SweepRow {
    SweepRow {
        parameter,
        value: r.value,
        template: r.template.id.clone(),
        positions: r.positions.clone(),
        boundary: r.boundary,
        ties: r.ties.clone(),
        switch: prev.is_some_and(|p| p.template != r.template.id),
    }
}

/// Optimal energies over a grid of exponents.
pub fn sweep_p(
    g: &MetricGraph,
    k: usize,
    problem: Problem,
    ps: &[PExp],
    opts: &SearchOptions,
) -> Result<Vec<SweepRow>> {
    if ps.is_empty() {
        return Err(Error::Precondition("empty sweep grid".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ps.len());
    for &p in ps {
        let r = minimize_with(g, k, problem, p, opts)?;
        let next = row(p.value(), &r, rows.last());
        rows.push(next);
    }
    Ok(rows)
}

/// Optimal energies as the length of one edge varies.
#[allow(clippy::too_many_arguments)]
pub fn sweep_length(
    g: &MetricGraph,
    edge: usize,
    lengths: &[f64],
    k: usize,
    problem: Problem,
    p: PExp,
    opts: &SearchOptions,
) -> Result<Vec<SweepRow>> {
    if lengths.is_empty() {
        return Err(Error::Precondition("empty sweep grid".into()));
    }
    if edge >= g.edge_count() {
        return Err(Error::UnknownEdge(format!("#{edge}")));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let mut ls = g.lengths();
        ls[edge] = l;
        let h = g.with_lengths(&ls)?;
        let r = minimize_with(&h, k, problem, p, opts)?;
        let next = row(l, &r, rows.last());
        rows.push(next);
    }
    Ok(rows)
}
