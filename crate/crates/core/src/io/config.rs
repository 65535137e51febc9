//! Scenario files (TOML).
//!
//! ```toml
//! name = "demo"
//! seed = 7
//! duration_s = 60.0
//!
//! [map]
//! bounds = [0.6, 0.6, 8.4, 4.2]
//! spacing_m = 1.2
//!
//! [[zones]]
//! id = 1
//! rect = [0.0, 0.0, 9.0, 4.8]
//! head_anchor = 1
//!
//! [[anchors]]
//! id = 1
//! zone = 1
//! position = [1.0, 1.0]
//!
//! [[mobile_nodes]]
//! id = 1
//! waypoints = [[1.0, 1.0], [8.0, 1.0]]
//! speeds_mps = [0.9]
//! ```
//!
//! Every other table is optional and falls back to the library defaults.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::{Position, Rect, Zone};
use crate::localization::{AlgorithmKind, AwknnParams};
use crate::netproto::{ChannelId, SwitchParams};
use crate::propagation::PropagationModel;
use crate::radio_map::Anchor;
use crate::sim::mobility::Route;
use crate::sim::scenario::{
    ChannelMode, LocalizationParams, MapSource, MobileNode, NetworkParams, Scenario, TrackingParams,
};
use crate::sim::synth::SurveyParams;
use crate::tracking::ReceivePolicy;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "default_name")]
    name: String,
    seed: u64,
    duration_s: f64,
    map: RawMap,
    #[serde(default)]
    propagation: RawPropagation,
    zones: Vec<RawZone>,
    anchors: Vec<RawAnchor>,
    #[serde(default)]
    localization: RawLocalization,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    tracking: RawTracking,
    #[serde(default)]
    energy: RawEnergy,
    #[serde(default)]
    mobile_nodes: Vec<RawMobileNode>,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    #[serde(default = "default_source")]
    source: String,
    path: Option<PathBuf>,
    bounds: Option<[f64; 4]>,
    spacing_m: Option<f64>,
    scans: Option<usize>,
    trim_count: Option<usize>,
}

fn default_source() -> String {
    "synthesize".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagation {
    preset: Option<String>,
    tx_power_dbm: Option<f64>,
    pl_d0_db: Option<f64>,
    d0_m: Option<f64>,
    exponent: Option<f64>,
    shadowing_sigma_db: Option<f64>,
    noise_floor_dbm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZone {
    id: u32,
    rect: [f64; 4],
    head_anchor: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnchor {
    id: u32,
    zone: u32,
    position: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLocalization {
    algorithm: Option<AlgorithmKind>,
    k: Option<usize>,
    #[serde(default)]
    awknn: RawAwknn,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAwknn {
    gamma0_offset_db: Option<f64>,
    delta_db: Option<f64>,
    theta_l: Option<f64>,
    theta_s: Option<f64>,
    max_iters: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    mode: Option<ChannelMode>,
    compare_baseline: Option<bool>,
    channels: Option<Vec<u8>>,
    reuse_min_distance_m: Option<f64>,
    backoff_window_s: Option<f64>,
    forward_duration_s: Option<f64>,
    interference_range_m: Option<f64>,
    min_reports: Option<usize>,
    rss_threshold_dbm: Option<i32>,
    min_anchor_count: Option<usize>,
    beacon_jitter_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTracking {
    adaptive_sounding: Option<bool>,
    adaptive_receive: Option<bool>,
    required_consecutive: Option<u32>,
    initial_transmit_period_s: Option<f64>,
    initial_receive_period_s: Option<f64>,
    edge_band_m: Option<f64>,
    edge_period_s: Option<f64>,
    center_period_s: Option<f64>,
    rx_window_s: Option<f64>,
    scan_retry_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    voltage_v: Option<f64>,
    current_tx_a: Option<f64>,
    current_rx_a: Option<f64>,
    current_sleep_a: Option<f64>,
    tx_duration_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMobileNode {
    id: u32,
    waypoints: Vec<[f64; 2]>,
    #[serde(default)]
    /// One speed per segment, or a single speed for every segment.
    speeds_mps: Vec<f64>,
    #[serde(default)]
    repeat: bool,
    start_offset_s: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line where `key` is assigned, as a fallback location for errors
/// raised after deserialization.
fn find_key_line(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let leaf = leaf.split('[').next().unwrap_or(leaf);
    if leaf.is_empty() {
        return None;
    }
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(leaf)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
                || t.trim_start_matches('[').trim_end_matches(']') == leaf
        })
        .map(|i| i + 1)
}

fn config_error(text: &str, path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        line: find_key_line(text, path),
        message: message.into(),
    }
}

/// Parses and validates a scenario document. Relative map paths are kept as
/// written; use [`parse_scenario_file`] to resolve them against the file.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
        path: String::new(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner
            .span()
            .map(|s| line_of(text, s.start))
            .or_else(|| find_key_line(text, &path));
        Error::Config {
            path: if path == "." { String::new() } else { path },
            line,
            message: inner.message().to_string(),
        }
    })?;
    let scenario = convert(raw, text)?;
    scenario.validate().map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            path: String::new(),
            line: None,
            message: other.to_string(),
        },
    })?;
    Ok(scenario)
}

/// Reads a scenario file; a relative `map.path` is taken relative to the file.
pub fn parse_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let mut scenario = parse_scenario(&text).map_err(|e| match e {
        Error::Config {
            path: key,
            line,
            message,
        } => Error::Config {
            path: key,
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    if let MapSource::File(dir) = &scenario.map {
        if dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            scenario.map = MapSource::File(base.join(dir));
        }
    }
    Ok(scenario)
}

fn rect(text: &str, key: &str, r: [f64; 4]) -> Result<Rect> {
    Rect::new(r[0], r[1], r[2], r[3]).map_err(|e| config_error(text, key, e.to_string()))
}

fn convert(raw: RawScenario, text: &str) -> Result<Scenario> {
    let map = match raw.map.source.as_str() {
        "synthesize" => {
            let bounds = raw
                .map
                .bounds
                .ok_or_else(|| config_error(text, "map.bounds", "missing field `bounds`"))?;
            let spacing = raw
                .map
                .spacing_m
                .ok_or_else(|| config_error(text, "map.spacing_m", "missing field `spacing_m`"))?;
            let d = SurveyParams::default();
            MapSource::Synthesize {
                bounds: rect(text, "map.bounds", bounds)?,
                spacing,
                survey: SurveyParams {
                    scans: raw.map.scans.unwrap_or(d.scans),
                    trim_count: raw.map.trim_count.unwrap_or(d.trim_count),
                },
            }
        }
        "file" => MapSource::File(
            raw.map
                .path
                .ok_or_else(|| config_error(text, "map.path", "missing field `path`"))?,
        ),
        other => {
            return Err(config_error(
                text,
                "map.source",
                format!("unknown map source `{other}`, expected `synthesize` or `file`"),
            ))
        }
    };

    let p = &raw.propagation;
    let base = match p.preset.as_deref() {
        None | Some("indoor") => PropagationModel::indoor(),
        Some("outdoor") => PropagationModel::outdoor(),
        Some(other) => {
            return Err(config_error(
                text,
                "propagation.preset",
                format!("unknown preset `{other}`, expected `indoor` or `outdoor`"),
            ))
        }
    };
    let propagation = PropagationModel {
        tx_power: p.tx_power_dbm.unwrap_or(base.tx_power),
        pl_d0: p.pl_d0_db.unwrap_or(base.pl_d0),
        d0: p.d0_m.unwrap_or(base.d0),
        exponent: p.exponent.unwrap_or(base.exponent),
        shadowing_sigma: p.shadowing_sigma_db.unwrap_or(base.shadowing_sigma),
        noise_floor: p.noise_floor_dbm.unwrap_or(base.noise_floor),
    };

    let mut anchors: Vec<Anchor> = raw
        .anchors
        .iter()
        .map(|a| Anchor {
            id: a.id,
            position: Position::new(a.position[0], a.position[1]),
        })
        .collect();
    anchors.sort_by_key(|a| a.id);

    let mut zones = Vec::with_capacity(raw.zones.len());
    for (i, z) in raw.zones.iter().enumerate() {
        let key = format!("zones[{i}]");
        let mut ids: Vec<u32> = raw.anchors.iter().filter(|a| a.zone == z.id).map(|a| a.id).collect();
        ids.sort_unstable();
        let r = rect(text, &format!("{key}.rect"), z.rect)?;
        zones.push(Zone::new(z.id, r, ids, z.head_anchor).map_err(|e| config_error(text, &key, e.to_string()))?);
    }
    for (i, a) in raw.anchors.iter().enumerate() {
        if !raw.zones.iter().any(|z| z.id == a.zone) {
            return Err(config_error(
                text,
                &format!("anchors[{i}].zone"),
                format!("anchor {} refers to unknown zone {}", a.id, a.zone),
            ));
        }
    }

    let l = &raw.localization;
    let dl = LocalizationParams::default();
    let da = AwknnParams::default();
    let localization = LocalizationParams {
        algorithm: l.algorithm.unwrap_or(dl.algorithm),
        k: l.k.unwrap_or(dl.k),
        awknn: AwknnParams {
            gamma0_offset: l.awknn.gamma0_offset_db.unwrap_or(da.gamma0_offset),
            delta: l.awknn.delta_db.unwrap_or(da.delta),
            theta_l: l.awknn.theta_l.unwrap_or(da.theta_l),
            theta_s: l.awknn.theta_s.unwrap_or(da.theta_s),
            max_iters: l.awknn.max_iters.unwrap_or(da.max_iters),
        },
    };

    let n = &raw.network;
    let dn = NetworkParams::default();
    let channels = match &n.channels {
        None => dn.channels.clone(),
        Some(list) => list
            .iter()
            .map(|c| ChannelId::mn_facing(*c))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| config_error(text, "network.channels", e.to_string()))?,
    };
    let ds = SwitchParams::default();
    let network = NetworkParams {
        mode: n.mode.unwrap_or(dn.mode),
        compare_baseline: n.compare_baseline.unwrap_or(dn.compare_baseline),
        channels,
        reuse_min_distance: n.reuse_min_distance_m.unwrap_or(dn.reuse_min_distance),
        backoff_window: n.backoff_window_s.unwrap_or(dn.backoff_window),
        forward_duration: n.forward_duration_s.unwrap_or(dn.forward_duration),
        interference_range: n.interference_range_m.or(dn.interference_range),
        min_reports: n.min_reports.unwrap_or(dn.min_reports),
        switch: SwitchParams {
            rss_threshold: n.rss_threshold_dbm.unwrap_or(ds.rss_threshold),
            min_anchor_count: n.min_anchor_count.unwrap_or(ds.min_anchor_count),
        },
        beacon_jitter: n.beacon_jitter_s.unwrap_or(dn.beacon_jitter),
    };

    let t = &raw.tracking;
    let dt = TrackingParams::default();
    let tracking = TrackingParams {
        adaptive_sounding: t.adaptive_sounding.unwrap_or(dt.adaptive_sounding),
        adaptive_receive: t.adaptive_receive.unwrap_or(dt.adaptive_receive),
        required_consecutive: t.required_consecutive.unwrap_or(dt.required_consecutive),
        initial_transmit_period: t.initial_transmit_period_s.unwrap_or(dt.initial_transmit_period),
        initial_receive_period: t.initial_receive_period_s.unwrap_or(dt.initial_receive_period),
        receive: ReceivePolicy {
            edge_band: t.edge_band_m.unwrap_or(dt.receive.edge_band),
            edge_period: t.edge_period_s.unwrap_or(dt.receive.edge_period),
            center_period: t.center_period_s.unwrap_or(dt.receive.center_period),
        },
        rx_window: t.rx_window_s.unwrap_or(dt.rx_window),
        scan_retry: t.scan_retry_s.unwrap_or(dt.scan_retry),
    };

    let e = &raw.energy;
    let de = EnergyModel::default();
    let energy = EnergyModel {
        voltage: e.voltage_v.unwrap_or(de.voltage),
        current_tx: e.current_tx_a.unwrap_or(de.current_tx),
        current_rx: e.current_rx_a.unwrap_or(de.current_rx),
        current_sleep: e.current_sleep_a.unwrap_or(de.current_sleep),
        tx_duration: e.tx_duration_s.unwrap_or(de.tx_duration),
    };

    let mobile_nodes = raw
        .mobile_nodes
        .iter()
        .map(|m| MobileNode {
            id: m.id,
            route: Route {
                waypoints: m.waypoints.iter().map(|w| Position::new(w[0], w[1])).collect(),
                speeds: match m.speeds_mps.as_slice() {
                    [v] if m.waypoints.len() > 2 => vec![*v; m.waypoints.len() - 1],
                    s => s.to_vec(),
                },
                repeat: m.repeat,
            },
            start_offset: m.start_offset_s,
        })
        .collect();

    Ok(Scenario {
        name: raw.name,
        seed: raw.seed,
        duration: raw.duration_s,
        zones,
        anchors,
        map,
        propagation,
        network,
        localization,
        tracking,
        energy,
        mobile_nodes,
    })
}
