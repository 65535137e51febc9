//! Validated scenario description consumed by the engine.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::{check_disjoint, Rect, Zone};
use crate::localization::{Algorithm, AlgorithmKind, AwknnParams};
use crate::netproto::{ChannelId, SwitchParams};
use crate::propagation::PropagationModel;
use crate::radio_map::Anchor;
use crate::tracking::ReceivePolicy;

use super::mobility::Route;
use super::synth::SurveyParams;

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Synthesize {
        bounds: Rect,
        spacing: f64,
        survey: SurveyParams,
    },
    /// Directory holding a persisted radio map.
    File(PathBuf),
}

/// How MN-facing channels are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// One channel per zone from the allocator, coordinated backoff.
    Zoned,
    /// Everything on one channel, unslotted random forwarding.
    Shared,
}

impl ChannelMode {
    /// Key used for this variant in the PLR summary.
    pub fn variant(self) -> &'static str {
        match self {
            ChannelMode::Zoned => "elot",
            ChannelMode::Shared => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub mode: ChannelMode,
    /// Also run the other channel mode and report its PLR.
    pub compare_baseline: bool,
    pub channels: Vec<ChannelId>,
    pub reuse_min_distance: f64,
    /// T_w, s.
    pub backoff_window: f64,
    /// AN→HAN frame airtime, s.
    pub forward_duration: f64,
    /// `None` means twice the hearing range.
    pub interference_range: Option<f64>,
    /// Reports the server needs before it can localize a beacon.
    pub min_reports: usize,
    pub switch: SwitchParams,
    /// Upper bound of the uniform delay added to each beacon, s.
    pub beacon_jitter: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            mode: ChannelMode::Zoned,
            compare_baseline: false,
            channels: ChannelId::mn_facing_all(),
            reuse_min_distance: 0.0,
            backoff_window: 0.1,
            forward_duration: 0.002,
            interference_range: None,
            min_reports: 3,
            switch: SwitchParams::default(),
            beacon_jitter: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingParams {
    pub adaptive_sounding: bool,
    pub adaptive_receive: bool,
    pub required_consecutive: u32,
    pub initial_transmit_period: f64,
    pub initial_receive_period: f64,
    pub receive: ReceivePolicy,
    /// Listening time per receive window, s.
    pub rx_window: f64,
    /// Time between channel scans while unassociated, s.
    pub scan_retry: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            adaptive_sounding: true,
            adaptive_receive: true,
            required_consecutive: 3,
            initial_transmit_period: crate::tracking::INITIAL_TRANSMIT_PERIOD_S,
            initial_receive_period: crate::tracking::INITIAL_RECEIVE_PERIOD_S,
            receive: ReceivePolicy::default(),
            rx_window: 0.0002,
            scan_retry: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationParams {
    pub algorithm: AlgorithmKind,
    pub k: usize,
    pub awknn: AwknnParams,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmKind::Awknn,
            k: 3,
            awknn: AwknnParams::default(),
        }
    }
}

impl LocalizationParams {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm.with(self.k, self.awknn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileNode {
    pub id: u32,
    pub route: Route,
    /// Power-on time; drawn from the seed when absent.
    pub start_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// s
    pub duration: f64,
    pub zones: Vec<Zone>,
    /// Sorted by id; this is the anchor order of RSS vectors.
    pub anchors: Vec<Anchor>,
    pub map: MapSource,
    pub propagation: PropagationModel,
    pub network: NetworkParams,
    pub localization: LocalizationParams,
    pub tracking: TrackingParams,
    pub energy: EnergyModel,
    pub mobile_nodes: Vec<MobileNode>,
}

/// Spacing used when checking that routes stay inside the zones, m.
const ROUTE_CHECK_STEP: f64 = 0.25;

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(format!("{what} must be positive, got {v}")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        positive(self.duration, "duration")?;
        if self.zones.is_empty() {
            return Err(Error::InvalidScenario("no zones".into()));
        }
        check_disjoint(&self.zones)?;
        if self.anchors.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(Error::InvalidScenario("anchor ids must be unique and sorted".into()));
        }
        for a in &self.anchors {
            if !a.position.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "anchor {} has a non-finite position",
                    a.id
                )));
            }
            let owners = self.zones.iter().filter(|z| z.anchor_ids.contains(&a.id)).count();
            if owners != 1 {
                return Err(Error::InvalidScenario(format!(
                    "anchor {} belongs to {owners} zones, expected exactly one",
                    a.id
                )));
            }
        }
        for z in &self.zones {
            if let Some(missing) = z.anchor_ids.iter().find(|id| self.anchor(**id).is_none()) {
                return Err(Error::InvalidScenario(format!(
                    "zone {} lists unknown anchor {missing}",
                    z.id
                )));
            }
        }
        let mut zone_ids: Vec<u32> = self.zones.iter().map(|z| z.id).collect();
        zone_ids.sort_unstable();
        zone_ids.dedup();
        if zone_ids.len() != self.zones.len() {
            return Err(Error::InvalidScenario("duplicate zone id".into()));
        }

        self.propagation.validate()?;
        self.energy.validate()?;
        self.localization.awknn.validate()?;
        if self.localization.k == 0 {
            return Err(Error::InvalidScenario("k must be at least 1".into()));
        }
        if let MapSource::Synthesize { spacing, survey, .. } = &self.map {
            positive(*spacing, "grid spacing")?;
            if survey.scans <= survey.trim_count {
                return Err(Error::InvalidScenario(format!(
                    "{} survey scans cannot survive trimming {}",
                    survey.scans, survey.trim_count
                )));
            }
        }

        let net = &self.network;
        if net.channels.is_empty() {
            return Err(Error::InvalidScenario("no MN-facing channels".into()));
        }
        if net.channels.contains(&ChannelId::BACKHAUL) {
            return Err(Error::InvalidScenario("channel 21 is reserved for the backhaul".into()));
        }
        positive(net.backoff_window, "backoff window")?;
        positive(net.forward_duration, "forward frame duration")?;
        for z in self.zones.iter().filter(|z| z.anchor_ids.len() > 1) {
            crate::netproto::check_backoff(z.anchor_ids.len() - 1, net.backoff_window, net.forward_duration)
                .map_err(|e| Error::InvalidScenario(format!("zone {}: {e}", z.id)))?;
        }
        if let Some(r) = net.interference_range {
            positive(r, "interference range")?;
        }
        if !(net.reuse_min_distance >= 0.0) {
            return Err(Error::InvalidScenario("reuse distance must be non-negative".into()));
        }
        if !(net.beacon_jitter >= 0.0) {
            return Err(Error::InvalidScenario("beacon jitter must be non-negative".into()));
        }
        if net.min_reports == 0 {
            return Err(Error::InvalidScenario("min_reports must be at least 1".into()));
        }

        let tr = &self.tracking;
        positive(tr.initial_transmit_period, "initial transmit period")?;
        positive(tr.initial_receive_period, "initial receive period")?;
        positive(tr.receive.edge_period, "edge receive period")?;
        positive(tr.receive.center_period, "center receive period")?;
        positive(tr.scan_retry, "scan retry interval")?;
        if !(tr.receive.edge_band >= 0.0) || !(tr.rx_window >= 0.0) {
            return Err(Error::InvalidScenario(
                "edge band and receive window must be non-negative".into(),
            ));
        }
        if tr.initial_transmit_period < self.energy.tx_duration {
            return Err(Error::InvalidScenario("transmit period shorter than the beacon".into()));
        }
        if tr.required_consecutive == 0 {
            return Err(Error::InvalidScenario("required_consecutive must be at least 1".into()));
        }

        let mut mn_ids: Vec<u32> = self.mobile_nodes.iter().map(|m| m.id).collect();
        mn_ids.sort_unstable();
        mn_ids.dedup();
        if mn_ids.len() != self.mobile_nodes.len() {
            return Err(Error::InvalidScenario("duplicate mobile node id".into()));
        }
        for mn in &self.mobile_nodes {
            mn.route.validate()?;
            if let Some(off) = mn.start_offset {
                if !(off >= 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "MN {} has a negative start offset",
                        mn.id
                    )));
                }
            }
            if let Some(p) = mn
                .route
                .sample_path(ROUTE_CHECK_STEP)
                .into_iter()
                .find(|p| !self.zones.iter().any(|z| z.contains(p)))
            {
                return Err(Error::InvalidScenario(format!(
                    "route of MN {} leaves the zones at ({}, {})",
                    mn.id, p.x, p.y
                )));
            }
        }
        Ok(())
    }

    pub fn anchor(&self, id: u32) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.id == id)
    }

    pub fn zone(&self, id: u32) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn interference_range(&self) -> f64 {
        self.network
            .interference_range
            .unwrap_or(2.0 * self.propagation.hearing_range())
    }
}
