//! Dirichlet and natural energies of partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Cluster, Partition};
use crate::error::{Error, Result};
use crate::spectral::{lambda1, mu2};

/// Which cluster eigenvalue enters the energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// First eigenvalue with Dirichlet conditions at the cut points.
    Dirichlet,
    /// Spectral gap with natural conditions everywhere.
    Natural,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Problem::Dirichlet),
            "natural" => Ok(Problem::Natural),
            _ => Err(Error::Precondition(format!("unknown problem `{s}`"))),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Dirichlet => "dirichlet",
            Problem::Natural => "natural",
        })
    }
}

/// Exponent of the power mean; `inf` is the maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PExp {
    Finite(f64),
    Infinity,
}

impl PExp {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(PExp::Infinity)
        } else if p > 0.0 {
            Ok(PExp::Finite(p))
        } else {
            Err(Error::Precondition(format!("p must be positive, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            PExp::Finite(p) => p,
            PExp::Infinity => f64::INFINITY,
        }
    }
}

impl FromStr for PExp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(PExp::Infinity);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::Precondition(format!("invalid p `{s}`")))?;
        PExp::new(p)
    }
}

impl fmt::Display for PExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExp::Finite(p) => write!(f, "{p}"),
            PExp::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for PExp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PExp::Finite(p) => s.serialize_f64(*p),
            PExp::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => PExp::new(p).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `(k^{-1} sum x_i^p)^{1/p}`, or the maximum for `p = inf`.
pub fn power_mean(values: &[f64], p: PExp) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match p {
        PExp::Infinity => max,
        PExp::Finite(p) => {
            if max <= 0.0 {
                return max.max(0.0);
            }
            let mean =
                values.iter().map(|&x| (x / max).powf(p)).sum::<f64>() / values.len() as f64;
            max * mean.powf(1.0 / p)
        }
    }
}

pub fn cluster_value(c: &Cluster, problem: Problem) -> Result<f64> {
    match problem {
        Problem::Dirichlet => {
            if !c.graph.has_dirichlet() {
                return Err(Error::Infeasible(
                    "a cluster has no Dirichlet point; cut at least once".into(),
                ));
            }
            lambda1(&c.graph)
        }
        Problem::Natural => mu2(&c.natural),
    }
}

pub fn cluster_values(p: &Partition, problem: Problem) -> Result<Vec<f64>> {
    p.clusters()
        .iter()
        .map(|c| cluster_value(c, problem))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub problem: Problem,
    pub p: PExp,
    pub values: Vec<f64>,
    pub value: f64,
    pub min: f64,
}

impl EnergyReport {
    pub fn from_values(problem: Problem, p: PExp, values: Vec<f64>) -> Self {
        EnergyReport {
            problem,
            p,
            value: power_mean(&values, p),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            values,
        }
    }
}

pub fn energy(p: &Partition, problem: Problem, pexp: PExp) -> Result<EnergyReport> {
    Ok(EnergyReport::from_values(
        problem,
        pexp,
        cluster_values(p, problem)?,
    ))
}

/// All cluster eigenvalues agree within relative tolerance `tol`.
pub fn equipartition_check(p: &Partition, problem: Problem, tol: f64) -> Result<bool> {
    let v = cluster_values(p, problem)?;
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min <= tol * max.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::partition::{make_partition, CutPattern};
    use std::f64::consts::PI;

    #[test]
    fn power_mean_limits() {
        let v = [1.0, 4.0];
        assert_eq!(power_mean(&v, PExp::Infinity), 4.0);
        assert!((power_mean(&v, PExp::Finite(1.0)) - 2.5).abs() < 1e-15);
        assert!((power_mean(&v, PExp::Finite(2.0)) - 8.5f64.sqrt()).abs() < 1e-15);
        assert!(power_mean(&[1e300, 1e300], PExp::Finite(8.0)).is_finite());
    }

    #[test]
    fn pexp_text_round_trip() {
        for p in [PExp::Infinity, PExp::Finite(2.5)] {
            let s = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<PExp>(&s).unwrap(), p);
            assert_eq!(p.to_string().parse::<PExp>().unwrap(), p);
        }
        assert!("0".parse::<PExp>().is_err());
        assert!("-1".parse::<PExp>().is_err());
    }

    #[test]
    fn interval_midpoint_dirichlet() {
        let g = fixtures::interval(2.0, false, false);
        let mut pat = CutPattern::none(&g);
        pat.edge_cuts[0] = vec![1.0];
        let p = make_partition(&g, &pat).unwrap();
        let r = energy(&p, Problem::Dirichlet, PExp::Infinity).unwrap();
        for v in &r.values {
            assert!((v - PI * PI / 4.0).abs() < 1e-10);
        }
        assert!((r.value - PI * PI / 4.0).abs() < 1e-10);
        assert!(equipartition_check(&p, Problem::Dirichlet, 1e-8).unwrap());
    }

    #[test]
    fn pumpkin_two_partition_natural() {
        // middle edge cut at its midpoint, each outer edge kept with one half:
        // two paths of length 3/2
        use crate::graph::{End, Slot};
        let g = fixtures::pumpkin3();
        let (u, v) = (g.vertex_index("u").unwrap(), g.vertex_index("v").unwrap());
        let s = |e: usize, end: End| Slot::new(e, end);
        let mut pat = CutPattern::none(&g);
        pat.edge_cuts[1] = vec![0.5];
        pat.vertex_blocks = vec![
            (u, vec![vec![s(0, End::A), s(1, End::A)], vec![s(2, End::A)]]),
            (v, vec![vec![s(0, End::B)], vec![s(1, End::B), s(2, End::B)]]),
        ];
        let p = make_partition(&g, &pat).unwrap();
        assert_eq!(p.k(), 2);
        assert!(p.flags().rigid);
        for pexp in [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity] {
            let r = energy(&p, Problem::Natural, pexp).unwrap();
            assert!(((r.value - 4.0 * PI * PI / 9.0) / r.value).abs() < 1e-9);
        }
    }

    #[test]
    fn star_centre_three_partition() {
        let g = fixtures::star3();
        let p = make_partition(&g, &CutPattern::none(&g).split_vertex(&g, 0)).unwrap();
        let r = energy(&p, Problem::Dirichlet, PExp::Infinity).unwrap();
        assert!((r.value - PI * PI / 4.0).abs() < 1e-10);
        assert!(equipartition_check(&p, Problem::Dirichlet, 1e-8).unwrap());
        let ge = fixtures::star3_eps();
        let pe = make_partition(&ge, &CutPattern::none(&ge).split_vertex(&ge, 0)).unwrap();
        assert!(!equipartition_check(&pe, Problem::Dirichlet, 1e-8).unwrap());
    }

    #[test]
    fn uncut_cluster_has_no_dirichlet_energy() {
        let g = fixtures::star3();
        let p = make_partition(&g, &CutPattern::none(&g)).unwrap();
        assert!(matches!(
            energy(&p, Problem::Dirichlet, PExp::Infinity),
            Err(Error::Infeasible(_))
        ));
    }
}
