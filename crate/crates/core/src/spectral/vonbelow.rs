//! Spectra of equilateral graphs from the discrete transition operator.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

/// First `count` natural eigenvalues of an equilateral graph without Dirichlet
/// vertices, as `(value, multiplicity)` pairs of distinct values covering at least
/// `count` eigenvalues.
pub fn von_below_equilateral(g: &MetricGraph, count: usize) -> Result<Vec<(f64, usize)>> {
    let l = g.length(0);
    if g
        .edges()
        .iter()
        .any(|e| (e.length - l).abs() > 1e-12 * l)
    {
        return Err(Error::NotEquilateral);
    }
    if g.has_dirichlet() {
        return Err(Error::Precondition("Dirichlet vertices are not supported".into()));
    }
    let n = g.vertex_count();
    let m = g.edge_count();
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for e in 0..m {
        let (a, b) = g.endpoints(e);
        adj[(a, b)] += 1.0;
        adj[(b, a)] += 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| adj[(i, j)] / (deg[i] * deg[j]).sqrt());
    let mus: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();

    let components = g.component_count();
    let bipartite = bipartite_components(g);
    let edge_excess = m as isize - n as isize;

    let tol = 1e-10;
    let interior: Vec<f64> = mus
        .iter()
        .copied()
        .filter(|&mu| mu.abs() < 1.0 - tol)
        .collect();

    // Generate all k up to a bound large enough to cover `count` values.
    let mut k_max = PI / l;
    loop {
        let mut entries: Vec<(f64, usize)> = Vec::new();
        entries.push((0.0, components));
        for &mu in &interior {
            let theta = mu.clamp(-1.0, 1.0).acos();
            let mut j = 0;
            loop {
                let k1 = (theta + 2.0 * PI * j as f64) / l;
                let k2 = (2.0 * PI * (j + 1) as f64 - theta) / l;
                if k1 > k_max {
                    break;
                }
                entries.push((k1, 1));
                if k2 <= k_max {
                    entries.push((k2, 1));
                }
                j += 1;
            }
        }
        let mut nn = 1;
        while nn as f64 * PI / l <= k_max + 1e-12 {
            let extra = if nn % 2 == 0 { 2 * components } else { 2 * bipartite };
            let mult = edge_excess + extra as isize;
            if mult > 0 {
                entries.push((nn as f64 * PI / l, mult as usize));
            }
            nn += 1;
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, usize)> = Vec::new();
        for (k, mult) in entries {
            match merged.last_mut() {
                Some(last) if (k - last.0).abs() <= 1e-12 * k.max(1.0) => last.1 += mult,
                _ => merged.push((k, mult)),
            }
        }
        let covered: usize = merged.iter().map(|x| x.1).sum();
        if covered >= count + 2 * n + m {
            let mut out = Vec::new();
            let mut total = 0;
            for (k, mult) in merged {
                if total >= count {
                    break;
                }
                out.push((k * k, mult));
                total += mult;
            }
            return Ok(out);
        }
        k_max *= 2.0;
    }
}

fn bipartite_components(g: &MetricGraph) -> usize {
    let n = g.vertex_count();
    let mut colour = vec![-1i8; n];
    let mut count = 0;
    for s in 0..n {
        if colour[s] >= 0 {
            continue;
        }
        let mut ok = true;
        colour[s] = 0;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for slot in &g.vertices()[v].slots {
                let w = g.vertex_of(slot.opposite());
                if colour[w] < 0 {
                    colour[w] = 1 - colour[v];
                    stack.push(w);
                } else if colour[w] == colour[v] {
                    ok = false;
                }
            }
        }
        if ok {
            count += 1;
        }
    }
    count
}
