//! JSON graph files.

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::graph::{build_graph, GraphSpec, MetricGraph};

pub fn graph_from_json(text: &str) -> Result<MetricGraph> {
    let spec: GraphSpec = serde_json::from_str(text)?;
    build_graph(&spec)
}

pub fn graph_to_json(g: &MetricGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&g.to_spec())?)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<MetricGraph> {
    graph_from_json(&fs::read_to_string(path)?)
}

pub fn save_graph(g: &MetricGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, graph_to_json(g)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_is_lossless() {
        for (_, g) in fixtures::all() {
            let back = graph_from_json(&graph_to_json(&g).unwrap()).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn save_and_load() {
        let dir = std::env::temp_dir().join(format!("metpart-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("h.json");
        let g = fixtures::pumpkin_h();
        save_graph(&g, &path).unwrap();
        assert_eq!(load_graph(&path).unwrap(), g);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_unknown_edge() {
        let text = r#"{"edges":[{"id":"e","length":1}],"vertices":[{"id":"v","slots":[["f","a"],["e","b"]]}]}"#;
        assert!(graph_from_json(text).is_err());
    }
}
