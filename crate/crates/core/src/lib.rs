//! Spectral minimal and maximal partitions of compact metric graphs.

pub mod combinatorics;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod nodal;
pub mod numeric;
pub mod partition;
pub mod search;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{
    automorphisms, build_graph, canonicalize, collapse_zero_edges, components, cut_vertex,
    cut_vertices, discrete_isomorphic, graph_space_distance, metric_isomorphic, path_distance,
    subdivide, subdivide_all, CanonPosition, CanonicalForm, DiscreteGraph, Edge, End, GraphBuilder,
    GraphSpec, Isomorphism, MetricGraph, Point, Slot, Subdivision, Vertex,
};
pub use partition::{
    energy, make_partition, partition_distance, rho, similar, CutPattern, EnergyReport, Flags, PExp,
    Partition, PartitionClass, Problem,
};
pub use search::{
    enumerate_templates, maximize, minimize, optimize_template, sweep_length, sweep_p,
    CutPatternTemplate, OptResult,
};
pub use nodal::{
    antisymmetric_spectrum, build_double_cover, courant_check, generalised_nodal_check,
    glue_equipartition, nodal_partition, zero_set, DoubleCover, NodalResult, NodalVerdict,
};
