//! Fixture verification suite.

use std::f64::consts::PI;

use anyhow::Result;
use metpart::graph::subdivide_all;
use metpart::nodal::{courant_check, glue_equipartition};
use metpart::partition::{equipartition_check, make_partition, CutPattern};
use metpart::search::{minimize_with, SearchOptions};
use metpart::spectral::{eigenvalues, mu2, von_below_equilateral, Method};
use metpart::{fixtures, minimize, MetricGraph, PExp, PartitionClass, Problem};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub fixture: String,
    pub check: String,
    pub value: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

struct Suite<'a> {
    fixture: &'a str,
    tol_override: Option<f64>,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn close(&mut self, check: &str, value: f64, expected: f64, tol: f64) {
        let tol = self.tol_override.unwrap_or(tol);
        let pass = (value - expected).abs() <= tol * expected.abs().max(1e-300);
        self.checks.push(Check {
            fixture: self.fixture.into(),
            check: check.into(),
            value: Some(value),
            expected: Some(expected),
            tolerance: Some(tol),
            pass,
            detail: String::new(),
        });
    }

    /// A nonnegative error that must stay below `tol`.
    fn small(&mut self, check: &str, error: f64, tol: f64) {
        let tol = self.tol_override.unwrap_or(tol);
        self.checks.push(Check {
            fixture: self.fixture.into(),
            check: check.into(),
            value: Some(error),
            expected: Some(0.0),
            tolerance: Some(tol),
            pass: error <= tol,
            detail: String::new(),
        });
    }

    fn holds(&mut self, check: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            fixture: self.fixture.into(),
            check: check.into(),
            value: None,
            expected: None,
            tolerance: None,
            pass,
            detail,
        });
    }

    /// Record a failed computation instead of aborting the run.
    fn attempt(&mut self, check: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.holds(check, false, format!("error: {e:#}"));
        }
    }
}

fn dirichlet_two_equals_mu2(s: &mut Suite, g: &MetricGraph) {
    s.attempt("dirichlet 2-partition equals mu2", |s| {
        let r = minimize(g, 2, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid)?;
        s.close("dirichlet 2-partition equals mu2", r.value, mu2(g)?, 1e-6);
        Ok(())
    });
}

fn natural_two(s: &mut Suite, g: &MetricGraph, ps: &[PExp], expected: f64) {
    for &p in ps {
        let name = format!("natural 2-partition at p={p}");
        s.attempt(&name.clone(), |s| {
            let r = minimize(g, 2, Problem::Natural, p, PartitionClass::Rigid)?;
            s.close(&name, r.value, expected, 1e-7);
            Ok(())
        });
    }
}

fn check_fixture(name: &str, g: &MetricGraph, tol_override: Option<f64>) -> Vec<Check> {
    let pi2 = PI * PI;
    let mut s = Suite {
        fixture: name,
        tol_override,
        checks: Vec::new(),
    };
    match name {
        "lasso" | "reinforced-loop" => dirichlet_two_equals_mu2(&mut s, g),
        "star3" => {
            s.attempt("mu2", |s| {
                s.close("mu2", mu2(g)?, pi2 / 4.0, 1e-9);
                Ok(())
            });
            dirichlet_two_equals_mu2(&mut s, g);
            s.attempt("centre cut glues to an eigenfunction", |s| {
                let c = g.vertex_index("c").unwrap_or(0);
                let p = make_partition(g, &CutPattern::none(g).split_vertex(g, c))?;
                let r = glue_equipartition(&p, 1e-8)?;
                s.holds(
                    "centre cut glues to an eigenfunction",
                    r.residual <= 1e-8,
                    format!("residual {:.3e}", r.residual),
                );
                Ok(())
            });
        }
        "star3-eps" => {
            for p in [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity] {
                let check = format!("centre cut is the unique 3-partition winner at p={p}");
                s.attempt(&check.clone(), |s| {
                    let r = minimize(g, 3, Problem::Dirichlet, p, PartitionClass::Rigid)?;
                    let centre = r.template.dimension() == 0 && r.template.vertex_blocks.len() == 1;
                    s.holds(
                        &check,
                        centre && r.ties.is_empty(),
                        format!("winner {} ties {:?}", r.template.id, r.ties),
                    );
                    if p == PExp::Infinity {
                        let part = r.partition.as_ref().expect("search keeps the winner");
                        let eq = equipartition_check(part, Problem::Dirichlet, 1e-8)?;
                        s.holds("winner is no equipartition", !eq, String::new());
                    }
                    Ok(())
                });
            }
        }
        "pumpkin3" => {
            s.attempt("mu2 is triple", |s| {
                let e = eigenvalues(g, 4, Method::Secular)?;
                s.close("mu2", e.eigenvalues[1], pi2, 1e-9);
                s.holds(
                    "mu2 is triple",
                    e.multiplicities[1] == 3,
                    format!("multiplicity {}", e.multiplicities[1]),
                );
                Ok(())
            });
            let ps = [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity];
            natural_two(&mut s, g, &ps, 4.0 * pi2 / 9.0);
            dirichlet_two_equals_mu2(&mut s, g);
        }
        "pumpkin6" => {
            natural_two(&mut s, g, &[PExp::Infinity], pi2 / 9.0);
            dirichlet_two_equals_mu2(&mut s, g);
        }
        "pumpkin-H" => {
            s.attempt("spectrum matches the equilateral oracle", |s| {
                let half: Vec<Vec<f64>> = g
                    .lengths()
                    .iter()
                    .map(|&l| if l > 1.5 * PI { vec![l / 2.0] } else { Vec::new() })
                    .collect();
                let eq = subdivide_all(g, &half)?.graph;
                let oracle: Vec<f64> = von_below_equilateral(&eq, 8)?
                    .iter()
                    .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
                    .take(8)
                    .collect();
                let sec = eigenvalues(g, 8, Method::Secular)?;
                let worst = oracle
                    .iter()
                    .zip(&sec.eigenvalues)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                    .fold(0.0, f64::max);
                s.small("spectrum matches the equilateral oracle", worst, 1e-9);
                s.close("mu5", sec.eigenvalues[4], 1.0, 1e-9);
                s.holds(
                    "mu5 is simple",
                    sec.multiplicities[4] == 1,
                    format!("multiplicity {}", sec.multiplicities[4]),
                );
                Ok(())
            });
            for k in [4, 5] {
                let name = format!("dirichlet {k}-partition");
                s.attempt(&name.clone(), |s| {
                    let r = minimize(g, k, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid)?;
                    s.close(&name, r.value, 1.0, 1e-6);
                    Ok(())
                });
            }
            s.attempt("weak Courant at mu5", |s| {
                let c = courant_check(g, 5)?;
                s.holds("weak Courant at mu5", c.pass, format!("nu {:?} kappa {}", c.nu, c.kappa));
                Ok(())
            });
        }
        "dumbbell" => {
            dirichlet_two_equals_mu2(&mut s, g);
            s.attempt("loose natural 2-partition", |s| {
                let opts = |class| SearchOptions {
                    class,
                    ..SearchOptions::default()
                };
                let loose =
                    minimize_with(g, 2, Problem::Natural, PExp::Infinity, &opts(PartitionClass::Loose))?;
                let rigid =
                    minimize_with(g, 2, Problem::Natural, PExp::Infinity, &opts(PartitionClass::Rigid))?;
                let total = g.total_length();
                s.close("loose natural 2-partition", loose.value, 4.0 * pi2 / (total * total), 1e-7);
                s.holds(
                    "rigid and loose minimisers differ",
                    (rigid.value - loose.value).abs() > 1e-6 * loose.value,
                    format!("rigid {} loose {}", rigid.value, loose.value),
                );
                Ok(())
            });
        }
        _ => {
            s.attempt("secular and finite elements agree", |s| {
                let r = eigenvalues(g, 6, Method::CrossCheck)?;
                s.holds(
                    "secular and finite elements agree",
                    r.fem.is_some(),
                    String::new(),
                );
                Ok(())
            });
            s.attempt("mu2 bounds the dirichlet 2-partition", |s| {
                let r = minimize(g, 2, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid)?;
                let m = mu2(g)?;
                s.holds(
                    "mu2 bounds the dirichlet 2-partition",
                    m <= r.value * (1.0 + 1e-9),
                    format!("mu2 {m} energy {}", r.value),
                );
                Ok(())
            });
        }
    }
    s.checks
}

/// Run the suite on one fixture or on all of them.
pub fn run(fixture: Option<&str>, tol_override: Option<f64>) -> Result<Vec<Check>> {
    let all = fixtures::all();
    let selected: Vec<_> = match fixture {
        Some(name) => {
            let found: Vec<_> = all.into_iter().filter(|(n, _)| *n == name).collect();
            if found.is_empty() {
                return Err(metpart::Error::Precondition(format!("unknown fixture `{name}`")).into());
            }
            found
        }
        None => all,
    };
    Ok(selected
        .iter()
        .flat_map(|(name, g)| check_fixture(name, g, tol_override))
        .collect())
}
