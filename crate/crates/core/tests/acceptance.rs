mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use metpart::nodal::{antisymmetric_spectrum, cover_of_partition, glue_equipartition};
use metpart::partition::{cluster_values, equipartition_check};
use metpart::search::{maximize_with, minimize_with, sweep_length, SearchOptions};
use metpart::spectral::{eigenvalues, lambda1, mu2, solve_fork, von_below_equilateral, Method};
use metpart::{
    energy, fixtures, make_partition, minimize, subdivide_all, CutPattern, End, MetricGraph, PExp,
    PartitionClass, Problem, Slot,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PI2: f64 = PI * PI;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel(value: f64, expected: f64) -> f64 {
    (value - expected).abs() / expected.abs()
}

fn close(what: &str, value: f64, expected: f64, tol: f64) -> Result<(), String> {
    if rel(value, expected) <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {value} vs {expected} (rel {:.2e} > {tol:e})", rel(value, expected)))
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn exact_spectra() -> Outcome {
    let cases = [
        ("interval mu2", mu2(&fixtures::interval(1.0, false, false)), PI2),
        ("interval lambda1 (D-N)", lambda1(&fixtures::interval(1.0, true, false)), PI2 / 4.0),
        ("loop mu2", mu2(&fixtures::loop_graph(1.0)), 4.0 * PI2),
        ("3-star mu2", mu2(&fixtures::star3()), PI2 / 4.0),
    ];
    let mut worst: f64 = 0.0;
    for (what, value, expected) in cases {
        let value = value.map_err(s)?;
        close(what, value, expected, 1e-9)?;
        worst = worst.max(rel(value, expected));
    }
    Ok(format!("worst rel error {worst:.1e}"))
}

fn von_below_oracle() -> Outcome {
    let g = fixtures::pumpkin_h();
    let half: Vec<Vec<f64>> = g
        .lengths()
        .iter()
        .map(|&l| if l > 1.5 * PI { vec![l / 2.0] } else { Vec::new() })
        .collect();
    let eq = subdivide_all(&g, &half).map_err(s)?.graph;
    let oracle: Vec<f64> = von_below_equilateral(&eq, 8)
        .map_err(s)?
        .iter()
        .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
        .take(8)
        .collect();
    let spec = eigenvalues(&g, 8, Method::CrossCheck).map_err(s)?;
    for (i, (a, b)) in oracle.iter().zip(&spec.eigenvalues).enumerate() {
        check((a - b).abs() <= 1e-9 * a.max(1.0), || format!("mu_{}: secular {b} vs oracle {a}", i + 1))?;
    }
    close("mu5", spec.eigenvalues[4], 1.0, 1e-9)?;
    check(spec.multiplicities[4] == 1, || format!("mu5 multiplicity {}", spec.multiplicities[4]))?;
    check(spec.fem.is_some(), || "no finite element cross-check".into())?;
    Ok("8 eigenvalues match, mu5 = 1 simple, secular and FEM agree".into())
}

fn pumpkin3_natural() -> Outcome {
    let g = fixtures::pumpkin3();
    for p in [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity] {
        let r = minimize(&g, 2, Problem::Natural, p, PartitionClass::Rigid).map_err(s)?;
        close(&format!("p={p}"), r.value, 4.0 * PI2 / 9.0, 1e-7)?;
        check(r.ties.is_empty(), || format!("p={p}: ties {:?}", r.ties))?;
    }
    Ok("4 pi^2/9 at p = 1, 2, inf with a unique winner".into())
}

fn pumpkin6_natural() -> Outcome {
    let g = fixtures::pumpkin6();
    let r = minimize(&g, 2, Problem::Natural, PExp::Infinity, PartitionClass::Rigid).map_err(s)?;
    close("energy", r.value, PI2 / 9.0, 1e-7)?;
    let p = r.partition.as_ref().ok_or("winner not retained")?;
    for c in p.clusters() {
        let len = c.natural.total_length();
        check(is_path(&c.natural) && (len - 3.0).abs() <= 1e-7, || {
            format!("cluster of length {len} with {} edges is no path of length 3", c.natural.edge_count())
        })?;
    }
    Ok(format!("pi^2/9 via {}, both clusters paths of length 3", r.template.id))
}

fn dirichlet_two_is_mu2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, g) in fixtures::all() {
        let r = minimize(&g, 2, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid).map_err(s)?;
        let m = mu2(&g).map_err(s)?;
        close(name, r.value, m, 1e-6)?;
        worst = worst.max(rel(r.value, m));
    }
    Ok(format!("{} fixtures, worst rel error {worst:.1e}", fixtures::all().len()))
}

fn pumpkin_h_dirichlet() -> Outcome {
    let g = fixtures::pumpkin_h();
    for k in [4, 5] {
        let r = minimize(&g, k, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid).map_err(s)?;
        check((r.value - 1.0).abs() <= 1e-6, || format!("k={k}: {}", r.value))?;
    }
    Ok("L^D_4 = L^D_5 = 1".into())
}

/// Distance from the centre of the 3-star to the cut on `edge` at offset `x`.
fn from_centre(g: &MetricGraph, edge: usize, x: f64) -> f64 {
    let a = g.vertex_of(Slot::new(edge, End::A));
    if g.degree(a) == 3 {
        x
    } else {
        g.length(edge) - x
    }
}

/// `F(a) = (pi / (2 (1 - a)))^2 + omega(a)^2`, minimised by a two-stage
/// 2000-point scan.
fn brute_a1() -> (f64, f64) {
    let f = |a: f64| (PI / (2.0 * (1.0 - a))).powi(2) + solve_fork(a).powi(2);
    let scan = |lo: f64, hi: f64| {
        (0..2000)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / 2000.0)
            .map(|a| (a, f(a)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty scan")
    };
    let (a, _) = scan(0.0, 1.0);
    scan((a - 1e-3).max(0.0), a + 1e-3)
}

fn star_p_sweep() -> Outcome {
    let g = fixtures::star3();
    let mut offsets = Vec::new();
    let mut a1_value = 0.0;
    for p in [1.0, 1.5, 2.0, 4.0, 8.0, 16.0] {
        let r = minimize(&g, 2, Problem::Dirichlet, PExp::Finite(p), PartitionClass::Rigid).map_err(s)?;
        let cuts: Vec<(usize, f64)> = r
            .positions
            .iter()
            .enumerate()
            .flat_map(|(e, xs)| xs.iter().map(move |&x| (e, x)))
            .collect();
        check(cuts.len() == 1, || format!("p={p}: winner {} has {} cuts", r.template.id, cuts.len()))?;
        offsets.push(from_centre(&g, cuts[0].0, cuts[0].1));
        if p == 1.0 {
            a1_value = r.value;
        }
    }
    check(offsets.iter().all(|&a| a > 0.0), || format!("offsets {offsets:?}"))?;
    check(offsets.windows(2).all(|w| w[1] < w[0]), || format!("offsets not decreasing {offsets:?}"))?;
    let r = minimize(&g, 2, Problem::Dirichlet, PExp::Infinity, PartitionClass::Rigid).map_err(s)?;
    check(r.template.dimension() == 0 && !r.template.vertex_blocks.is_empty(), || {
        format!("p=inf winner {}", r.template.id)
    })?;
    close("p=inf energy", r.value, PI2 / 4.0, 1e-7)?;
    let (a1, f1) = brute_a1();
    check((offsets[0] - a1).abs() <= 1e-4, || format!("a_1 {} vs scan {a1}", offsets[0]))?;
    close("p=1 energy vs F/2", a1_value, f1 / 2.0, 1e-7)?;
    Ok(format!(
        "a_p = {}; a_1 scan {a1:.6}",
        offsets.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>().join(", ")
    ))
}

fn near_equilateral_star() -> Outcome {
    let g = fixtures::star3_eps();
    let centre = (0..g.vertex_count()).find(|&v| g.degree(v) == 3).ok_or("no centre")?;
    for p in [PExp::Finite(1.0), PExp::Finite(2.0), PExp::Infinity] {
        let r = minimize(&g, 3, Problem::Dirichlet, p, PartitionClass::Rigid).map_err(s)?;
        let centre_cut = r.template.dimension() == 0
            && r.template.vertex_blocks.len() == 1
            && r.template.vertex_blocks[0].0 == centre;
        check(centre_cut && r.ties.is_empty(), || {
            format!("p={p}: winner {} ties {:?}", r.template.id, r.ties)
        })?;
    }
    let cut = make_partition(&g, &CutPattern::none(&g).split_vertex(&g, centre)).map_err(s)?;
    check(!equipartition_check(&cut, Problem::Dirichlet, 1e-8).map_err(s)?, || {
        "centre cut is an equipartition".into()
    })?;
    let eq = fixtures::star3();
    let c0 = (0..eq.vertex_count()).find(|&v| eq.degree(v) == 3).ok_or("no centre")?;
    let eq_cut = make_partition(&eq, &CutPattern::none(&eq).split_vertex(&eq, c0)).map_err(s)?;
    check(eq_cut.bipartite_check().is_none(), || "equilateral centre cut is bipartite".into())?;
    Ok("centre cut unique at p = 1, 2, inf; no equipartition; not bipartite".into())
}

fn lasso_sweep() -> Outcome {
    let g = fixtures::lasso();
    let edge = g.edge_index("e1").ok_or("lasso has no edge e1")?;
    let grid: Vec<f64> = (0..7).map(|i| 2.0 + 0.25 * i as f64).collect();
    let opts = SearchOptions {
        exhaustive: true,
        ..SearchOptions::default()
    };
    let rows = sweep_length(&g, edge, &grid, 2, Problem::Natural, PExp::Infinity, &opts).map_err(s)?;
    for r in rows.iter().filter(|r| r.parameter <= 3.0) {
        close(&format!("a={}", r.parameter), r.value, PI2 / 4.0, 1e-7)?;
    }
    let after: Vec<f64> = rows.iter().filter(|r| r.parameter >= 3.0).map(|r| r.value).collect();
    check(after.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing after 3: {after:?}"))?;
    let at3 = rows.iter().find(|r| r.parameter == 3.0).ok_or("no row at 3")?;
    check(at3.switch && !at3.ties.is_empty(), || {
        format!("a=3: winner {} switch {} ties {:?}", at3.template, at3.switch, at3.ties)
    })?;
    Ok(format!("plateau to a=3, switch at 3: {} ties {:?}", at3.template, at3.ties))
}

fn property_suites() -> Outcome {
    let graphs = corpus(2024, 50, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut bridged = 0;
    for (i, g) in graphs.iter().enumerate() {
        let v = i % g.vertex_count();
        bridged += usize::from(!bridges(g).is_empty());
        let results = [
            ("nicaise", nicaise(g, v)),
            ("holder per partition", holder_per_partition(g, &mut rng)),
            ("holder optimal", holder_optimal(g)),
            ("mu_k <= L^D_k", mu_k_below_dirichlet_energy(g)),
            ("weak courant", weak_courant(g, 6)),
            ("rigid closure", rigid_closure(g, &mut rng)),
            ("metric axioms", metric_axioms(g, &mut rng)),
            ("bridge 2-cut", bridge_two_cut(g)),
        ];
        for (name, r) in results {
            if let Err(e) = r {
                failures.push(format!("graph {i} {name}: {e}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{} graphs ({bridged} with a bridge), 8 properties, 0 failures", graphs.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn tree_gluing() -> Outcome {
    let trees = tree_corpus(11, 20, 8);
    let mut glued = 0;
    let mut worst: f64 = 0.0;
    for (i, g) in trees.iter().enumerate() {
        for k in 2..=3 {
            let opts = SearchOptions::default();
            let found = [
                minimize_with(g, k, Problem::Dirichlet, PExp::Infinity, &opts),
                maximize_with(g, k, Problem::Dirichlet, &opts),
            ];
            for r in found {
                let r = r.map_err(s)?;
                let p = r.partition.as_ref().ok_or("winner not retained")?;
                if !equipartition_check(p, Problem::Dirichlet, 1e-8).map_err(s)? {
                    continue;
                }
                let gl = glue_equipartition(p, 1e-8).map_err(|e| format!("tree {i} k={k} {}: {e}", r.template.id))?;
                check(gl.residual <= 1e-8, || format!("tree {i} k={k}: residual {:.2e}", gl.residual))?;
                worst = worst.max(gl.residual);
                glued += 1;
            }
        }
    }
    check(glued > 0, || "no equipartition produced".into())?;
    Ok(format!("{glued} equipartitions glued on {} trees, worst residual {worst:.1e}", trees.len()))
}

fn double_cover() -> Outcome {
    let g = fixtures::loop_graph(1.0);
    let mut pat = CutPattern::none(&g).split_vertex(&g, 0);
    pat.edge_cuts[0] = vec![1.0 / 3.0, 2.0 / 3.0];
    let p = make_partition(&g, &pat).map_err(s)?;
    let lambda = energy(&p, Problem::Dirichlet, PExp::Infinity).map_err(s)?.value;
    close("energy", lambda, 9.0 * PI2, 1e-8)?;
    let values = cluster_values(&p, Problem::Dirichlet).map_err(s)?;
    check(values.iter().all(|v| rel(*v, lambda) <= 1e-8), || format!("values {values:?}"))?;
    let c = cover_of_partition(&p).map_err(s)?;
    check(c.check_invariants(), || "cover invariants fail".into())?;
    check(
        c.projection.iter().enumerate().all(|(e, &(b, sheet))| b == e % 3 && sheet == e / 3),
        || "fibres".into(),
    )?;
    let spec = antisymmetric_spectrum(&c, 3).map_err(s)?;
    close("mu^a_3", spec.antisymmetric[2], lambda, 1e-8)?;
    let mut merged = [spec.antisymmetric.clone(), spec.symmetric.clone()].concat();
    merged.sort_by(f64::total_cmp);
    check(merged == spec.full, || "antisymmetric and symmetric parts do not split the spectrum".into())?;
    Ok(format!("energy 9 pi^2 = mu^a_3 = {:.12}", spec.antisymmetric[2]))
}

fn dumbbell_loose() -> Outcome {
    let g = fixtures::dumbbell();
    let with = |class| SearchOptions {
        class,
        ..SearchOptions::default()
    };
    let loose = minimize_with(&g, 2, Problem::Natural, PExp::Infinity, &with(PartitionClass::Loose)).map_err(s)?;
    let rigid = minimize_with(&g, 2, Problem::Natural, PExp::Infinity, &with(PartitionClass::Rigid)).map_err(s)?;
    let l = g.total_length();
    close("loose energy", loose.value, 4.0 * PI2 / (l * l), 1e-7)?;
    check(rigid.value > loose.value * (1.0 + 1e-6), || {
        format!("rigid {} vs loose {}", rigid.value, loose.value)
    })?;
    Ok(format!("loose {:.9} < rigid {:.9}", loose.value, rigid.value))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 13] = [
        ("exact spectra", exact_spectra),
        ("equilateral oracle on the H pumpkin", von_below_oracle),
        ("natural 2-partition of the 3-pumpkin", pumpkin3_natural),
        ("natural 2-partition of the 6-pumpkin", pumpkin6_natural),
        ("dirichlet 2-partition equals mu2", dirichlet_two_is_mu2),
        ("dirichlet 4- and 5-partitions of the H pumpkin", pumpkin_h_dirichlet),
        ("3-star p-sweep", star_p_sweep),
        ("near-equilateral 3-star", near_equilateral_star),
        ("lasso length sweep", lasso_sweep),
        ("property suites", property_suites),
        ("tree gluing", tree_gluing),
        ("double cover", double_cover),
        ("dumbbell rigid and loose", dumbbell_loose),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|m| m.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
