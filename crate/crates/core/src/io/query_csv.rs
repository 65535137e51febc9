//! Online query files for the `locate` subcommand.
//!
//! Input `query_id,anchor_id,rssi_dbm`, one row per heard anchor; anchors a
//! query does not list are unheard. Output `query_id,est_x_m,est_y_m,k_used`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::localization::{MatchResult, Measurement};
use crate::radio_map::{RadioMap, Rssi};

pub const QUERY_HEADER: &str = "query_id,anchor_id,rssi_dbm";
pub const ESTIMATE_HEADER: &str = "query_id,est_x_m,est_y_m,k_used";

#[derive(Debug, Deserialize)]
struct QueryRow {
    query_id: u64,
    anchor_id: u32,
    rssi_dbm: i32,
}

/// Reads queries against the anchor order of `map`, sorted by query id.
pub fn read_queries(path: &Path, map: &RadioMap) -> Result<Vec<(u64, Measurement)>> {
    let file = path.display().to_string();
    let bad = |line: u64, message: String| Error::Parse {
        file: file.clone(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => bad(1, format!("{kind:?}")),
        })?;
    let header = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != QUERY_HEADER {
        return Err(bad(1, format!("expected header `{QUERY_HEADER}`")));
    }
    let mut queries: BTreeMap<u64, Vec<Option<Rssi>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: QueryRow = record
            .deserialize(Some(&header))
            .map_err(|e| bad(line, e.to_string()))?;
        let slot = map
            .anchor_index(row.anchor_id)
            .ok_or_else(|| bad(line, format!("anchor {} is not in the radio map", row.anchor_id)))?;
        let rssi = Rssi::new(row.rssi_dbm).map_err(|e| bad(line, e.to_string()))?;
        let rss = queries
            .entry(row.query_id)
            .or_insert_with(|| vec![None; map.anchor_count()]);
        if rss[slot].replace(rssi).is_some() {
            return Err(bad(
                line,
                format!("query {} lists anchor {} twice", row.query_id, row.anchor_id),
            ));
        }
    }
    queries
        .into_iter()
        .map(|(id, rss)| Ok((id, Measurement::new(0, rss, 0.0)?)))
        .collect()
}

pub fn estimates_csv(results: &[(u64, MatchResult)]) -> String {
    let mut out = format!("{ESTIMATE_HEADER}\n");
    for (id, r) in results {
        out.push_str(&format!("{id},{},{},{}\n", r.estimate.x, r.estimate.y, r.k_used));
    }
    out
}
