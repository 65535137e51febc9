//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use rand::Rng;
use wsnloc_core::geometry::Position;
use wsnloc_core::io::parse_scenario_file;
use wsnloc_core::localization::Measurement;
use wsnloc_core::rng::RngStreams;
use wsnloc_core::sim::{build_radio_map, synthesize_query, MapSource};
use wsnloc_core::{RadioMap, Scenario};

pub fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    parse_scenario_file(&path).expect("bundled scenario parses")
}

/// The scenario's radio map plus `n` queries drawn uniformly over its
/// reference bounds.
pub fn map_and_queries(name: &str, n: usize) -> (RadioMap, Vec<Measurement>) {
    let sc = scenario(name);
    let map = build_radio_map(&sc).expect("map builds");
    let MapSource::Synthesize { bounds, .. } = sc.map else {
        panic!("{name} does not synthesize its map");
    };
    let mut rng = RngStreams::new(sc.seed).stream("bench-query", &[]);
    let mut queries = Vec::with_capacity(n);
    while queries.len() < n {
        let at = Position::new(
            bounds.min_x + rng.random::<f64>() * bounds.width(),
            bounds.min_y + rng.random::<f64>() * bounds.height(),
        );
        if let Some(q) = synthesize_query(&sc.propagation, &sc.anchors, at, 1, queries.len() as f64, &mut rng) {
            queries.push(q);
        }
    }
    (map, queries)
}
