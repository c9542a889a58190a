//! Fixture graphs shipped with the crate.

use crate::graph::MetricGraph;
use crate::io::graph_from_json;

macro_rules! fixture {
    ($name:ident, $file:literal) => {
        pub fn $name() -> MetricGraph {
            graph_from_json(include_str!(concat!("../fixtures/", $file)))
                .expect(concat!("fixture ", $file, " is valid"))
        }
    };
}

fixture!(lasso, "lasso.json");
fixture!(star3, "star3.json");
fixture!(star3_eps, "star3_eps.json");
fixture!(pumpkin3, "pumpkin3.json");
fixture!(pumpkin6, "pumpkin6.json");
fixture!(pumpkin_h, "pumpkin_h.json");
fixture!(dumbbell, "dumbbell.json");
fixture!(reinforced_loop, "reinforced_loop.json");
fixture!(double_dumbbell, "double_dumbbell.json");

/// Every fixture with its name.
pub fn all() -> Vec<(&'static str, MetricGraph)> {
    vec![
        ("lasso", lasso()),
        ("star3", star3()),
        ("star3-eps", star3_eps()),
        ("pumpkin3", pumpkin3()),
        ("pumpkin6", pumpkin6()),
        ("pumpkin-H", pumpkin_h()),
        ("dumbbell", dumbbell()),
        ("reinforced-loop", reinforced_loop()),
        ("double-dumbbell", double_dumbbell()),
    ]
}

pub fn by_name(name: &str) -> Option<MetricGraph> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, g)| g)
}

/// Interval of the given length with optional Dirichlet ends.
pub fn interval(length: f64, dirichlet_a: bool, dirichlet_b: bool) -> MetricGraph {
    let mut b = crate::graph::GraphBuilder::new().edge("e", length, "x", "y");
    if dirichlet_a {
        b = b.dirichlet("x");
    }
    if dirichlet_b {
        b = b.dirichlet("y");
    }
    b.build().expect("interval is valid")
}

/// Single loop of the given length.
pub fn loop_graph(length: f64) -> MetricGraph {
    crate::graph::GraphBuilder::new()
        .edge("e", length, "v", "v")
        .build()
        .expect("loop is valid")
}

/// Star with edges oriented away from the centre.
pub fn star(lengths: &[f64]) -> MetricGraph {
    let mut b = crate::graph::GraphBuilder::new();
    for (i, &l) in lengths.iter().enumerate() {
        b = b.edge(&format!("e{}", i + 1), l, "c", &format!("p{}", i + 1));
    }
    b.build().expect("star is valid")
}

/// Pumpkin (parallel edges between two vertices).
pub fn pumpkin(lengths: &[f64]) -> MetricGraph {
    let mut b = crate::graph::GraphBuilder::new();
    for (i, &l) in lengths.iter().enumerate() {
        b = b.edge(&format!("e{}", i + 1), l, "u", "v");
    }
    b.build().expect("pumpkin is valid")
}

/// Lasso with pendant edge `e1` of length `a` and a loop of two unit arcs.
pub fn lasso_with(a: f64) -> MetricGraph {
    crate::graph::GraphBuilder::new()
        .edge("e1", a, "u", "v")
        .edge("e2", 1.0, "v", "z")
        .edge("e3", 1.0, "z", "v")
        .build()
        .expect("lasso is valid")
}
