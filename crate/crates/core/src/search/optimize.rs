//! Continuous optimisation of cut positions inside one template.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::enumerate::CutPatternTemplate;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::numeric::golden_min;
use crate::partition::{
    cluster_value, piece_lengths_for, power_mean, Cluster, PExp, Partition, Problem,
};

/// Whether the energy is minimised or the smallest cluster value maximised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Minimize,
    MaximizeMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub problem: Problem,
    pub p: PExp,
    pub direction: Direction,
}

impl Objective {
    pub fn minimize(problem: Problem, p: PExp) -> Self {
        Objective {
            problem,
            p,
            direction: Direction::Minimize,
        }
    }

    pub fn maximize(problem: Problem) -> Self {
        Objective {
            problem,
            p: PExp::Infinity,
            direction: Direction::MaximizeMin,
        }
    }

    /// Scalar to be minimised.
    pub fn score(&self, values: &[f64]) -> f64 {
        match self.direction {
            Direction::Minimize => power_mean(values, self.p),
            Direction::MaximizeMin => -values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Reported value (the energy, or the smallest cluster value).
    pub fn value(&self, values: &[f64]) -> f64 {
        match self.direction {
            Direction::Minimize => self.score(values),
            Direction::MaximizeMin => -self.score(values),
        }
    }

    /// Whether the score is a maximum of smooth pieces (cluster values).
    fn is_max_type(&self) -> bool {
        matches!(self.p, PExp::Infinity) || self.direction == Direction::MaximizeMin
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub seed: u64,
    /// Nelder-Mead iteration limit per run.
    pub max_iter: usize,
    /// Iterations spent on each start before the best are refined.
    pub screen_iter: usize,
    /// Starts refined after screening.
    pub keep: usize,
    /// Gap (relative to the edge length) under which an optimum counts as a boundary point.
    pub boundary_tol: f64,
    /// Iterations of the minimax refinement.
    pub refine_iter: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            seed: 0,
            max_iter: 500,
            screen_iter: 80,
            keep: 2,
            boundary_tol: 1e-4,
            refine_iter: 40,
        }
    }
}

/// Best positions found for one template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateOutcome {
    pub positions: Vec<Vec<f64>>,
    pub value: f64,
    pub values: Vec<f64>,
    /// Some cut lies within `boundary_tol` of a vertex or of another cut.
    pub boundary: bool,
}

/// Evaluates cluster values of a fixed template for varying positions.
pub struct Evaluator<'a> {
    g: &'a MetricGraph,
    template: &'a CutPatternTemplate,
    partition: Partition,
    objective: Objective,
    fixed: Vec<Option<f64>>,
    delta: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(g: &'a MetricGraph, template: &'a CutPatternTemplate, objective: Objective) -> Result<Self> {
        let partition = template.partition(g)?;
        let mut fixed = Vec::with_capacity(partition.k());
        for c in partition.clusters() {
            let variable = c.pieces.iter().any(|&(e, _)| template.cut_counts[e] > 0);
            fixed.push(if variable {
                None
            } else {
                Some(cluster_value(c, objective.problem)?)
            });
        }
        let delta = (0..g.edge_count()).map(|e| 1e-6 * g.length(e)).collect();
        Ok(Evaluator {
            g,
            template,
            partition,
            objective,
            fixed,
            delta,
        })
    }

    pub fn dimension(&self) -> usize {
        self.template.dimension()
    }

    /// Flat position vector to per-edge sorted cuts, kept `delta` apart and away
    /// from the edge ends.
    pub fn cuts_from_flat(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.g.edge_count());
        let mut i = 0;
        for (e, &c) in self.template.cut_counts.iter().enumerate() {
            let mut xs: Vec<f64> = x[i..i + c].to_vec();
            i += c;
            let (l, d) = (self.g.length(e), self.delta[e]);
            xs.sort_by(f64::total_cmp);
            for j in 0..c {
                let lo = if j == 0 { d } else { xs[j - 1] + d };
                xs[j] = xs[j].max(lo);
            }
            for j in (0..c).rev() {
                let hi = if j + 1 == c { l - d } else { xs[j + 1] - d };
                xs[j] = xs[j].min(hi);
            }
            out.push(xs);
        }
        out
    }

    pub fn flat(cuts: &[Vec<f64>]) -> Vec<f64> {
        cuts.iter().flatten().copied().collect()
    }

    fn unit_to_flat(&self, u: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(u.len());
        let mut i = 0;
        for (e, &c) in self.template.cut_counts.iter().enumerate() {
            for _ in 0..c {
                x.push(u[i].clamp(0.0, 1.0) * self.g.length(e));
                i += 1;
            }
        }
        x
    }

    fn flat_to_unit(&self, x: &[f64]) -> Vec<f64> {
        let mut u = Vec::with_capacity(x.len());
        let mut i = 0;
        for (e, &c) in self.template.cut_counts.iter().enumerate() {
            for _ in 0..c {
                u.push(x[i] / self.g.length(e));
                i += 1;
            }
        }
        u
    }

    fn cluster_lengths(&self, cuts: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let pieces = piece_lengths_for(self.g, &self.partition.pattern().clone(), cuts)?;
        Ok(self
            .partition
            .clusters()
            .iter()
            .map(|c: &Cluster| c.pieces.iter().map(|&(e, j)| pieces[e][j]).collect())
            .collect())
    }

    /// Cluster values at the given cuts.
    pub fn values(&self, cuts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let lengths = self.cluster_lengths(cuts)?;
        let mut out = Vec::with_capacity(lengths.len());
        for ((c, ls), fixed) in self.partition.clusters().iter().zip(&lengths).zip(&self.fixed) {
            match fixed {
                Some(v) => out.push(*v),
                None => {
                    let moved = Cluster {
                        graph: c.graph.with_lengths(ls)?,
                        natural: c.natural.with_lengths(ls)?,
                        support: c.support.clone(),
                        pieces: c.pieces.clone(),
                    };
                    out.push(cluster_value(&moved, self.objective.problem)?);
                }
            }
        }
        Ok(out)
    }

    fn values_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.values(&self.cuts_from_flat(x))
    }

    fn score_flat(&self, x: &[f64]) -> f64 {
        match self.values_flat(x) {
            Ok(v) => self.objective.score(&v),
            Err(_) => f64::INFINITY,
        }
    }

    fn score_unit(&self, u: &[f64]) -> f64 {
        self.score_flat(&self.unit_to_flat(u))
    }

    /// Smooth pieces whose maximum is the score (a single piece for smooth scores).
    fn pieces_flat(&self, x: &[f64]) -> Option<Vec<f64>> {
        let v = self.values_flat(x).ok()?;
        Some(if self.objective.is_max_type() {
            match self.objective.direction {
                Direction::Minimize => v,
                Direction::MaximizeMin => v.iter().map(|x| -x).collect(),
            }
        } else {
            vec![self.objective.score(&v)]
        })
    }

    fn boundary(&self, cuts: &[Vec<f64>], tol: f64) -> bool {
        cuts.iter().enumerate().any(|(e, xs)| {
            let l = self.g.length(e);
            let mut prev = 0.0;
            xs.iter()
                .chain(std::iter::once(&l))
                .any(|&x| {
                    let gap = x - prev;
                    prev = x;
                    gap < tol * l
                })
        })
    }
}

/// Nelder-Mead on the unit cube. Returns the best vertex and its value.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    scale: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let clamp = |mut v: Vec<f64>| {
        for x in &mut v {
            *x = x.clamp(0.0, 1.0);
        }
        v
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut v = start.to_vec();
        v[i] += if v[i] + scale <= 1.0 { scale } else { -scale };
        simplex.push(clamp(v));
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[d])
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < fv[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                fv[d] = fe;
            } else {
                simplex[d] = xr;
                fv[d] = fr;
            }
        } else if fr < fv[d - 1] {
            simplex[d] = xr;
            fv[d] = fr;
        } else {
            let (xc, fc) = if fr < fv[d] {
                let x = along(0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = along(-0.5);
                let fx = f(&x);
                (x, fx)
            };
            if fc < fv[d].min(fr) {
                simplex[d] = xc;
                fv[d] = fc;
            } else {
                for i in 1..=d {
                    let v: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    fv[i] = f(&v);
                    simplex[i] = v;
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).expect("non-empty simplex");
    (simplex[best].clone(), fv[best])
}

/// Maximiser over the simplex of `lambda . f - (rho / 2) |sum lambda_i g_i|^2`
/// (dual of the proximal linearised minimax step), by enumerating supports.
fn dual_weights(f: &[f64], gram: &DMatrix<f64>, rho: f64) -> Option<Vec<f64>> {
    let n = f.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let m = s.len();
        let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut b = DVector::<f64>::zeros(m + 1);
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate() {
                a[(r, c)] = rho * gram[(i, j)];
            }
            a[(r, m)] = 1.0;
            a[(m, r)] = 1.0;
            b[r] = f[i];
        }
        b[m] = 1.0;
        let svd = a.clone().svd(true, true);
        let Ok(sol) = svd.solve(&b, 1e-13) else {
            continue;
        };
        if (&a * &sol - &b).norm() > 1e-9 * (1.0 + b.norm()) {
            continue;
        }
        let mut lambda = vec![0.0; n];
        for (r, &i) in s.iter().enumerate() {
            lambda[i] = sol[r];
        }
        if lambda.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let gl: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| gram[(i, j)] * lambda[j]).sum())
            .collect();
        let obj: f64 = (0..n).map(|i| lambda[i] * f[i]).sum::<f64>()
            - 0.5 * rho * (0..n).map(|i| lambda[i] * gl[i]).sum::<f64>();
        let mu = sol[m];
        let scale = 1e-10 * (1.0 + f.iter().map(|x| x.abs()).fold(0.0, f64::max));
        if (0..n).any(|j| f[j] - rho * gl[j] > mu + scale) {
            continue;
        }
        if best.as_ref().is_none_or(|(o, _)| obj > *o) {
            best = Some((obj, lambda));
        }
    }
    best.map(|(_, l)| l)
}

/// Proximal linearised minimax steps on the flat positions.
fn refine(ev: &Evaluator, x0: Vec<f64>, iters: usize) -> Vec<f64> {
    let d = x0.len();
    if d == 0 {
        return x0;
    }
    let project = |x: &[f64]| Evaluator::flat(&ev.cuts_from_flat(x));
    let edge_of: Vec<usize> = ev
        .template
        .cut_counts
        .iter()
        .enumerate()
        .flat_map(|(e, &c)| std::iter::repeat_n(e, c))
        .collect();
    let total = ev.g.total_length();
    let mut x = project(&x0);
    let Some(mut fx) = ev.pieces_flat(&x) else {
        return x;
    };
    for _ in 0..iters {
        let fmax = fx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // central differences
        let mut grads = vec![vec![0.0; d]; fx.len()];
        let mut ok = true;
        for j in 0..d {
            let h = 1e-7 * ev.g.length(edge_of[j]);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let (xp, xm) = (project(&xp), project(&xm));
            let span = xp[j] - xm[j];
            if span <= 0.0 {
                continue;
            }
            match (ev.pieces_flat(&xp), ev.pieces_flat(&xm)) {
                (Some(a), Some(b)) => {
                    for (i, g) in grads.iter_mut().enumerate() {
                        g[j] = (a[i] - b[i]) / span;
                    }
                }
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let n = fx.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            grads[i].iter().zip(&grads[j]).map(|(a, b)| a * b).sum()
        });
        let fscale = fmax.abs().max(1e-300);
        let mut rho = 1e8 * total * total / fscale;
        let mut accepted = false;
        for _ in 0..40 {
            let Some(lambda) = dual_weights(&fx, &gram, rho) else {
                rho *= 0.25;
                continue;
            };
            let step: Vec<f64> = (0..d)
                .map(|j| -rho * (0..n).map(|i| lambda[i] * grads[i][j]).sum::<f64>())
                .collect();
            let model = (0..n)
                .map(|i| fx[i] + grads[i].iter().zip(&step).map(|(g, s)| g * s).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let predicted = fmax - model;
            if predicted <= 1e-15 * fscale {
                return x;
            }
            let cand = project(&x.iter().zip(&step).map(|(a, b)| a + b).collect::<Vec<_>>());
            if let Some(fc) = ev.pieces_flat(&cand) {
                let cmax = fc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if cmax < fmax - 0.1 * predicted {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
            }
            rho *= 0.25;
        }
        if !accepted {
            break;
        }
    }
    x
}

/// Optimise the free positions of `template`.
pub fn optimize_template(
    g: &MetricGraph,
    template: &CutPatternTemplate,
    objective: Objective,
    opts: &OptimizeOptions,
) -> Result<(TemplateOutcome, Partition)> {
    let ev = Evaluator::new(g, template, objective)?;
    let d = ev.dimension();
    let centre = template.centre(g);
    let x = if d == 0 {
        Vec::new()
    } else {
        let f = |u: &[f64]| ev.score_unit(u);
        let u_best = if d == 1 {
            let n = 64;
            let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let vals: Vec<f64> = grid.iter().map(|&u| f(&[u])).collect();
            let i = (0..n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("grid");
            let lo = if i == 0 { 0.0 } else { grid[i - 1] };
            let hi = if i + 1 == n { 1.0 } else { grid[i + 1] };
            let (u, fu) = golden_min(|u| f(&[u]), lo, hi, 1e-13);
            if fu <= vals[i] {
                vec![u]
            } else {
                vec![grid[i]]
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut starts = vec![ev.flat_to_unit(&Evaluator::flat(&centre))];
            let n_lhs = 2 * d;
            let mut strata: Vec<Vec<usize>> = (0..d)
                .map(|_| {
                    let mut s: Vec<usize> = (0..n_lhs).collect();
                    for i in (1..n_lhs).rev() {
                        s.swap(i, rng.random_range(0..=i));
                    }
                    s
                })
                .collect();
            #[allow(clippy::needless_range_loop)]
            for i in 0..n_lhs {
                starts.push(
                    (0..d)
                        .map(|j| (strata[j][i] as f64 + rng.random::<f64>()) / n_lhs as f64)
                        .collect(),
                );
            }
            strata.clear();
            let mut screened: Vec<(Vec<f64>, f64)> = starts
                .iter()
                .map(|s| nelder_mead(&f, s, 0.1, opts.screen_iter, 1e-10))
                .collect();
            screened.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut best: Option<(Vec<f64>, f64)> = None;
            for (u, _) in screened.into_iter().take(opts.keep.max(1)) {
                let (u, fu) = nelder_mead(&f, &u, 0.02, opts.max_iter, 1e-10);
                if best.as_ref().is_none_or(|b| fu < b.1) {
                    best = Some((u, fu));
                }
            }
            let (mut u, mut fu) = best.expect("at least one start");
            // coordinate polish
            for j in 0..d {
                let w = 1e-3;
                let (lo, hi) = ((u[j] - w).max(0.0), (u[j] + w).min(1.0));
                let mut probe = u.clone();
                let (t, ft) = golden_min(
                    |t| {
                        probe[j] = t;
                        f(&probe)
                    },
                    lo,
                    hi,
                    1e-13,
                );
                if ft < fu {
                    u[j] = t;
                    fu = ft;
                }
            }
            u
        };
        let x0 = Evaluator::flat(&ev.cuts_from_flat(&ev.unit_to_flat(&u_best)));
        let x1 = refine(&ev, x0.clone(), opts.refine_iter);
        if ev.score_flat(&x1) <= ev.score_flat(&x0) {
            x1
        } else {
            x0
        }
    };
    let cuts = if d == 0 { centre } else { ev.cuts_from_flat(&x) };
    let values = ev.values(&cuts)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("objective evaluation failed".into()));
    }
    let partition = ev.partition.reposition(&cuts)?;
    let outcome = TemplateOutcome {
        boundary: ev.boundary(&cuts, opts.boundary_tol),
        value: objective.value(&values),
        values,
        positions: cuts,
    };
    Ok((outcome, partition))
}
