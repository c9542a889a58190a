//! Eigenfunctions stored as per-edge trigonometric amplitudes.

use serde::{Deserialize, Serialize};

use crate::graph::{End, MetricGraph, Slot};

/// `f_m(x) = A_m cos(kx) + B_m sin(kx)` on edge `m`; for `k = 0`,
/// `f_m(x) = A_m + B_m x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeWave {
    pub k: f64,
    pub coeffs: Vec<(f64, f64)>,
}

impl EdgeWave {
    pub fn eigenvalue(&self) -> f64 {
        self.k * self.k
    }

    pub fn value(&self, edge: usize, x: f64) -> f64 {
        let (a, b) = self.coeffs[edge];
        if self.k == 0.0 {
            a + b * x
        } else {
            let (s, c) = (self.k * x).sin_cos();
            a * c + b * s
        }
    }

    pub fn derivative(&self, edge: usize, x: f64) -> f64 {
        let (a, b) = self.coeffs[edge];
        if self.k == 0.0 {
            b
        } else {
            let (s, c) = (self.k * x).sin_cos();
            self.k * (-a * s + b * c)
        }
    }

    /// Value at an endpoint slot.
    pub fn slot_value(&self, g: &MetricGraph, s: Slot) -> f64 {
        match s.end {
            End::A => self.value(s.edge, 0.0),
            End::B => self.value(s.edge, g.length(s.edge)),
        }
    }

    /// Derivative at an endpoint slot, pointing into the edge.
    pub fn slot_inward_derivative(&self, g: &MetricGraph, s: Slot) -> f64 {
        match s.end {
            End::A => self.derivative(s.edge, 0.0),
            End::B => -self.derivative(s.edge, g.length(s.edge)),
        }
    }

    /// `L^2` inner product with exact edgewise integrals. Both waves must share `k`.
    pub fn inner(&self, other: &EdgeWave, g: &MetricGraph) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for e in 0..g.edge_count() {
            let l = g.length(e);
            let (a1, b1) = self.coeffs[e];
            let (a2, b2) = other.coeffs[e];
            let (icc, ics, iss) = if k == 0.0 {
                (l, l * l / 2.0, l * l * l / 3.0)
            } else {
                let s2 = (2.0 * k * l).sin();
                let s = (k * l).sin();
                (
                    l / 2.0 + s2 / (4.0 * k),
                    s * s / (2.0 * k),
                    l / 2.0 - s2 / (4.0 * k),
                )
            };
            total += a1 * a2 * icc + (a1 * b2 + b1 * a2) * ics + b1 * b2 * iss;
        }
        total
    }

    pub fn norm(&self, g: &MetricGraph) -> f64 {
        self.inner(self, g).max(0.0).sqrt()
    }

    pub fn scaled(&self, c: f64) -> EdgeWave {
        EdgeWave {
            k: self.k,
            coeffs: self.coeffs.iter().map(|&(a, b)| (c * a, c * b)).collect(),
        }
    }

    /// Linear combination `sum_i c_i w_i` of waves sharing `k`.
    pub fn combine(waves: &[EdgeWave], c: &[f64]) -> EdgeWave {
        let m = waves[0].coeffs.len();
        let mut coeffs = vec![(0.0, 0.0); m];
        for (w, &ci) in waves.iter().zip(c) {
            for (acc, &(a, b)) in coeffs.iter_mut().zip(&w.coeffs) {
                acc.0 += ci * a;
                acc.1 += ci * b;
            }
        }
        EdgeWave {
            k: waves[0].k,
            coeffs,
        }
    }

    /// Largest vertex-condition violation (continuity spread, Kirchhoff sum,
    /// Dirichlet value), relative to the largest amplitude times `max(1, k)`.
    pub fn vertex_residual(&self, g: &MetricGraph) -> f64 {
        let amp = self
            .coeffs
            .iter()
            .map(|&(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let scale = amp * self.k.max(1.0);
        let mut worst: f64 = 0.0;
        for (vi, v) in g.vertices().iter().enumerate() {
            let vals: Vec<f64> = v.slots.iter().map(|&s| self.slot_value(g, s)).collect();
            if g.is_dirichlet(vi) {
                for x in vals {
                    worst = worst.max(x.abs() / amp);
                }
            } else {
                for x in &vals[1..] {
                    worst = worst.max((x - vals[0]).abs() / amp);
                }
                let kirchhoff: f64 = v
                    .slots
                    .iter()
                    .map(|&s| self.slot_inward_derivative(g, s))
                    .sum();
                worst = worst.max(kirchhoff.abs() / scale);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn quad(w: &EdgeWave, v: &EdgeWave, g: &MetricGraph) -> f64 {
        let n = 20000;
        let mut total = 0.0;
        for e in 0..g.edge_count() {
            let l = g.length(e);
            let h = l / n as f64;
            for i in 0..n {
                let x = (i as f64 + 0.5) * h;
                total += w.value(e, x) * v.value(e, x) * h;
            }
        }
        total
    }

    #[test]
    fn exact_integrals_match_quadrature() {
        let g = fixtures::star(&[0.7, 1.3, 0.4]);
        let w = EdgeWave {
            k: 2.3,
            coeffs: vec![(0.3, -1.1), (0.8, 0.2), (-0.5, 0.9)],
        };
        let v = EdgeWave {
            k: 2.3,
            coeffs: vec![(1.0, 0.5), (-0.2, 0.7), (0.1, 0.1)],
        };
        assert!((w.inner(&v, &g) - quad(&w, &v, &g)).abs() < 1e-8);
        let z = EdgeWave {
            k: 0.0,
            coeffs: vec![(1.0, 0.5), (-0.2, 0.7), (0.1, 0.1)],
        };
        assert!((z.inner(&z, &g) - quad(&z, &z, &g)).abs() < 1e-8);
    }

    #[test]
    fn cosine_on_interval_satisfies_conditions() {
        let g = fixtures::interval(1.0, false, false);
        let w = EdgeWave {
            k: PI,
            coeffs: vec![(2f64.sqrt(), 0.0)],
        };
        assert!(w.vertex_residual(&g) < 1e-15);
        assert!((w.norm(&g) - 1.0).abs() < 1e-15);
    }
}
