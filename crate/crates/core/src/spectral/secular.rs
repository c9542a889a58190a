//! Secular matrix in the `(A_m, B_m)` amplitudes and the root search built on it.
//!
//! On edge `m`, `f_m(x) = A_m cos(kx) + B_m sin(kx)`. Rows impose continuity and
//! Kirchhoff at natural vertices and vanishing at Dirichlet vertices; derivative
//! rows are divided by `k`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, Slot};
use crate::numeric::{brent_root, golden_min};

/// Square `2M x 2M` matrix at wavenumber `k`.
#[derive(Clone, Debug)]
pub struct SecularMatrix {
    pub k: f64,
    pub matrix: DMatrix<f64>,
}

fn value_coeffs(g: &MetricGraph, s: Slot, k: f64) -> (f64, f64) {
    match s.end {
        End::A => (1.0, 0.0),
        End::B => {
            let kl = k * g.length(s.edge);
            (kl.cos(), kl.sin())
        }
    }
}

fn inward_derivative_coeffs(g: &MetricGraph, s: Slot, k: f64) -> (f64, f64) {
    match s.end {
        End::A => (0.0, 1.0),
        End::B => {
            let kl = k * g.length(s.edge);
            (kl.sin(), -kl.cos())
        }
    }
}

/// Assemble the secular matrix of `g` at `k > 0`.
pub fn assemble_secular(g: &MetricGraph, k: f64) -> SecularMatrix {
    let n = 2 * g.edge_count();
    let mut m = DMatrix::zeros(n, n);
    let mut row = 0;
    let add = |m: &mut DMatrix<f64>, row: usize, s: Slot, c: (f64, f64), sign: f64| {
        m[(row, 2 * s.edge)] += sign * c.0;
        m[(row, 2 * s.edge + 1)] += sign * c.1;
    };
    for (vi, v) in g.vertices().iter().enumerate() {
        if g.is_dirichlet(vi) {
            for &s in &v.slots {
                add(&mut m, row, s, value_coeffs(g, s, k), 1.0);
                row += 1;
            }
        } else {
            let s0 = v.slots[0];
            for &s in &v.slots[1..] {
                add(&mut m, row, s, value_coeffs(g, s, k), 1.0);
                add(&mut m, row, s0, value_coeffs(g, s0, k), -1.0);
                row += 1;
            }
            for &s in &v.slots {
                add(&mut m, row, s, inward_derivative_coeffs(g, s, k), 1.0);
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, n);
    SecularMatrix { k, matrix: m }
}

impl SecularMatrix {
    pub fn determinant(&self) -> f64 {
        self.matrix.clone().lu().determinant()
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// `sigma_min / max(sigma_max, 1)`. The floor matters for a lone loop, whose
    /// matrix vanishes identically at its eigenvalues.
    pub fn singular_ratio(&self) -> f64 {
        let s = self.singular_values();
        s[s.len() - 1] / s[0].max(1.0)
    }

    /// Number of singular values below `tol * max(sigma_max, 1)`.
    pub fn kernel_dimension(&self, tol: f64) -> usize {
        let s = self.singular_values();
        s.iter().filter(|&&x| x < tol * s[0].max(1.0)).count()
    }
}

fn det_at(g: &MetricGraph, k: f64) -> f64 {
    assemble_secular(g, k).determinant()
}

fn ratio_at(g: &MetricGraph, k: f64) -> f64 {
    assemble_secular(g, k).singular_ratio()
}

/// Minimum of `|sin(k l_e)|` over edges; small values mean `k` is close to a
/// Dirichlet eigenvalue of some edge.
fn pole_distance(g: &MetricGraph, k: f64) -> f64 {
    g.edges()
        .iter()
        .map(|e| (k * e.length).sin().abs())
        .fold(f64::INFINITY, f64::min)
}

const POLE_TOL: f64 = 1e-6;

/// Number of eigenvalues strictly below `k^2`, for `k` away from edge poles.
///
/// Counts edge Dirichlet eigenvalues below `k^2` plus the positive inertia of
/// the matrix of summed inward derivatives of the edgewise harmonic extension
/// of vertex values.
pub fn count_below(g: &MetricGraph, k: f64) -> usize {
    let pi = std::f64::consts::PI;
    let mut count = 0usize;
    for e in g.edges() {
        let q = k * e.length / pi;
        let fl = q.floor();
        count += if q == fl { fl as usize - 1 } else { fl as usize };
    }
    let mut index = vec![usize::MAX; g.vertex_count()];
    let mut n = 0;
    for (v, slot) in index.iter_mut().enumerate() {
        if !g.is_dirichlet(v) {
            *slot = n;
            n += 1;
        }
    }
    if n == 0 {
        return count;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in 0..g.edge_count() {
        let (a, b) = g.endpoints(e);
        let kl = k * g.length(e);
        let (s, c) = kl.sin_cos();
        let diag = -k * c / s;
        let off = k / s;
        let (ia, ib) = (index[a], index[b]);
        if ia != usize::MAX {
            m[(ia, ia)] += diag;
        }
        if ib != usize::MAX {
            m[(ib, ib)] += diag;
        }
        if ia != usize::MAX && ib != usize::MAX {
            m[(ia, ib)] += off;
            m[(ib, ia)] += off;
        }
    }
    let eig = SymmetricEigen::new(m).eigenvalues;
    count + eig.iter().filter(|&&x| x > 0.0).count()
}

/// A point in `(lo, hi)` near the midpoint that keeps away from edge poles.
fn safe_point(g: &MetricGraph, lo: f64, hi: f64) -> Option<f64> {
    const OFFSETS: [f64; 9] = [0.0, 0.11, -0.13, 0.23, -0.27, 0.31, -0.37, 0.41, -0.43];
    let mid = 0.5 * (lo + hi);
    let w = hi - lo;
    OFFSETS
        .iter()
        .map(|t| mid + t * w)
        .find(|&k| k > lo && k < hi && pole_distance(g, k) > POLE_TOL)
}

/// Tuning of the secular root search.
#[derive(Clone, Debug, PartialEq)]
pub struct SecularOptions {
    /// Grid step is `pi / (step_divisor * |G|)`.
    pub step_divisor: f64,
    /// Accept a root when `sigma_min < tol_root * sigma_max`.
    pub tol_root: f64,
    /// Kernel dimension counts singular values below `tol_mult * sigma_max`.
    pub tol_mult: f64,
}

impl Default for SecularOptions {
    fn default() -> Self {
        SecularOptions {
            step_divisor: 16.0,
            tol_root: 1e-8,
            tol_mult: 1e-6,
        }
    }
}

/// One distinct eigenvalue found by the secular search.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    pub lambda: f64,
    pub multiplicity: usize,
    pub kernel_dim: usize,
    pub error: f64,
}

/// Components of `g` without a Dirichlet vertex; each carries a zero eigenvalue.
pub fn zero_multiplicity(g: &MetricGraph) -> usize {
    let roots = g.edge_components();
    let mut has_d = std::collections::HashMap::<usize, bool>::new();
    for &r in roots.iter().take(g.edge_count()) {
        has_d.entry(r).or_insert(false);
    }
    for v in g.dirichlet_vertices() {
        let e = g.vertices()[v].slots[0].edge;
        has_d.insert(roots[e], true);
    }
    has_d.values().filter(|&&d| !d).count()
}

struct Search<'a> {
    g: &'a MetricGraph,
    opts: &'a SecularOptions,
    wanted: usize,
    found: usize,
    out: Vec<Root>,
}

impl Search<'_> {
    fn iso_width(k: f64) -> f64 {
        1e-9 * k.max(1.0)
    }

    fn isolate(&mut self, a: f64, b: f64, na: usize, nb: usize) -> Result<()> {
        if na >= nb || self.found >= self.wanted {
            return Ok(());
        }
        let jump = nb - na;
        if jump == 1 {
            let (da, db) = (det_at(self.g, a), det_at(self.g, b));
            if da * db < 0.0 {
                let tol = 1e-14 * b.max(1.0);
                let (k, w) = brent_root(|k| det_at(self.g, k), a, b, tol);
                return self.emit(k, w.max(tol), jump);
            }
        }
        let mid = if b - a > Self::iso_width(b) {
            safe_point(self.g, a, b)
        } else {
            None
        };
        match mid {
            Some(m) => {
                let nm = count_below(self.g, m);
                let nm = nm.clamp(na, nb);
                self.isolate(a, m, na, nm)?;
                self.isolate(m, b, nm, nb)
            }
            None => {
                let tol = 1e-15 * b.max(1.0);
                let (k, _) = golden_min(|k| ratio_at(self.g, k), a, b, tol);
                self.emit(k, (b - a).min(1e-12 * b.max(1.0)), jump)
            }
        }
    }

    fn emit(&mut self, k: f64, dk: f64, multiplicity: usize) -> Result<()> {
        let sm = assemble_secular(self.g, k);
        let ratio = sm.singular_ratio();
        if ratio > self.opts.tol_root {
            return Err(Error::NotAnEigenvalue(k * k, ratio));
        }
        let kernel_dim = sm.kernel_dimension(self.opts.tol_mult);
        self.found += multiplicity;
        self.out.push(Root {
            lambda: k * k,
            multiplicity,
            kernel_dim,
            error: 2.0 * k * dk + 4.0 * f64::EPSILON * k * k,
        });
        Ok(())
    }
}

/// Distinct eigenvalues (with multiplicities) until at least `count` eigenvalues
/// are covered, scanning from `k_start` (or the Nicaise lower bound) on a grid.
pub fn secular_roots(g: &MetricGraph, count: usize, opts: &SecularOptions) -> Result<Vec<Root>> {
    secular_roots_from(g, count, opts, None)
}

pub fn secular_roots_from(
    g: &MetricGraph,
    count: usize,
    opts: &SecularOptions,
    k_start: Option<f64>,
) -> Result<Vec<Root>> {
    let pi = std::f64::consts::PI;
    let total = g.total_length();
    let z = zero_multiplicity(g);
    let mut out = Vec::new();
    if z > 0 {
        out.push(Root {
            lambda: 0.0,
            multiplicity: z,
            kernel_dim: z,
            error: 0.0,
        });
    }
    if count <= z {
        return Ok(out);
    }
    let step = pi / (opts.step_divisor * total);
    let lower = 0.999 * pi / (2.0 * total);
    let mut k = k_start.unwrap_or(lower).max(lower);
    if pole_distance(g, k) <= POLE_TOL {
        k = safe_point(g, k, k + 0.5 * step).unwrap_or(k);
    }
    let mut nk = count_below(g, k);
    if nk != z {
        // Start above the first positive eigenvalue: restart from the bound.
        k = lower;
        nk = count_below(g, k);
    }
    let k_max = pi * (count + g.edge_count() + 2) as f64 / total * 1.01 + 2.0 * step;
    let mut search = Search {
        g,
        opts,
        wanted: count,
        found: nk,
        out,
    };
    while search.found < count {
        if k > k_max {
            return Err(Error::ScanExhausted {
                found: search.found,
                wanted: count,
                k_max,
            });
        }
        let mut next = k + step;
        if pole_distance(g, next) <= POLE_TOL {
            next = safe_point(g, next - 0.25 * step, next + 0.25 * step).unwrap_or(next);
        }
        let nn = count_below(g, next);
        if nn > nk {
            search.isolate(k, next, nk, nn)?;
        }
        k = next;
        nk = nn.max(nk);
    }
    Ok(search.out)
}
