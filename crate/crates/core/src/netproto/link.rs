//! Mobile-node channel access and location-driven channel switching.

use crate::error::{Error, Result};
use crate::geometry::{Position, Zone};
use crate::radio_map::Rssi;

use super::channel::{ChannelId, ChannelPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkMode {
    Scanning,
    Associated,
    Switching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MnLinkState {
    pub mn_id: u32,
    pub mode: LinkMode,
    pub current_channel: Option<ChannelId>,
    pub pending_channel: Option<ChannelId>,
}

impl MnLinkState {
    pub fn scanning(mn_id: u32) -> Self {
        Self {
            mn_id,
            mode: LinkMode::Scanning,
            current_channel: None,
            pending_channel: None,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let violation = match self.mode {
            LinkMode::Associated if self.current_channel.is_none() => Some("associated without a channel"),
            LinkMode::Switching if self.pending_channel.is_none() => Some("switching without a pending channel"),
            _ => None,
        };
        if let Some(v) = violation {
            return Err(Error::InvariantViolation {
                event: format!("link state of MN {}", self.mn_id),
                detail: v.into(),
            });
        }
        if [self.current_channel, self.pending_channel]
            .iter()
            .flatten()
            .any(|c| *c == ChannelId::BACKHAUL)
        {
            return Err(Error::InvariantViolation {
                event: format!("link state of MN {}", self.mn_id),
                detail: "mobile node on the backhaul channel".into(),
            });
        }
        Ok(())
    }
}

fn require(state: &MnLinkState, mode: LinkMode, what: &str) -> Result<()> {
    if state.mode != mode {
        return Err(Error::ProtocolViolation(format!(
            "MN {}: {what} while {:?}",
            state.mn_id, state.mode
        )));
    }
    Ok(())
}

/// Scans 11..=26 (skipping 21) in ascending order and associates with the
/// first channel served by a zone covering the node. Stays scanning when
/// nothing answers.
pub fn scan_and_access(state: &MnLinkState, covering: &[ChannelId]) -> Result<MnLinkState> {
    require(state, LinkMode::Scanning, "scan")?;
    let found = ChannelId::mn_facing_all().into_iter().find(|ch| covering.contains(ch));
    Ok(match found {
        Some(ch) => MnLinkState {
            mode: LinkMode::Associated,
            current_channel: Some(ch),
            pending_channel: None,
            ..*state
        },
        None => *state,
    })
}

/// Accepts a switch command. A command for the current channel is a no-op.
pub fn begin_switch(state: &MnLinkState, channel: ChannelId) -> Result<MnLinkState> {
    require(state, LinkMode::Associated, "switch command")?;
    if channel == ChannelId::BACKHAUL {
        return Err(Error::ProtocolViolation(format!(
            "MN {} told to switch to the backhaul channel",
            state.mn_id
        )));
    }
    if state.current_channel == Some(channel) {
        return Ok(*state);
    }
    Ok(MnLinkState {
        mode: LinkMode::Switching,
        pending_channel: Some(channel),
        ..*state
    })
}

/// Re-associates on the pending channel.
pub fn complete_switch(state: &MnLinkState) -> Result<MnLinkState> {
    require(state, LinkMode::Switching, "switch completion")?;
    Ok(MnLinkState {
        mode: LinkMode::Associated,
        current_channel: state.pending_channel,
        pending_channel: None,
        ..*state
    })
}

/// Command received and re-association done in one step.
pub fn apply_switch(state: &MnLinkState, channel: ChannelId) -> Result<MnLinkState> {
    let next = begin_switch(state, channel)?;
    match next.mode {
        LinkMode::Switching => complete_switch(&next),
        _ => Ok(next),
    }
}

pub fn link_lost(state: &MnLinkState) -> MnLinkState {
    MnLinkState::scanning(state.mn_id)
}

/// Inputs of the link state machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkEvent {
    Scan(Vec<ChannelId>),
    SwitchCommand(ChannelId),
    SwitchComplete,
    LinkLost,
}

/// One transition; rejected inputs leave the caller's state untouched.
pub fn transition(state: &MnLinkState, event: &LinkEvent) -> Result<MnLinkState> {
    let next = match event {
        LinkEvent::Scan(covering) => scan_and_access(state, covering)?,
        LinkEvent::SwitchCommand(ch) => begin_switch(state, *ch)?,
        LinkEvent::SwitchComplete => complete_switch(state)?,
        LinkEvent::LinkLost => link_lost(state),
    };
    next.check_invariants()?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchParams {
    /// RSSI at or above this counts as a strong link, dBm.
    pub rss_threshold: i32,
    pub min_anchor_count: usize,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self {
            rss_threshold: -65,
            min_anchor_count: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchDecision {
    Stay,
    Switch {
        zone: u32,
        channel: ChannelId,
    },
    /// The link is weak but the current zone has no neighbour to move to.
    Isolated,
}

/// Server-side switch check for one MN.
///
/// `zone_rssi` holds what the current zone's anchors reported for the latest
/// beacon; `history` is the recent estimate track, oldest first. When too few
/// anchors hear the node strongly, the neighbour whose centroid lies most in
/// the direction of travel is chosen (cosine alignment, ties to the lower zone
/// id). Neighbours behind the node are never chosen, so a node that just
/// switched does not bounce straight back.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_switch(
    zone_rssi: &[Option<Rssi>],
    params: &SwitchParams,
    history: &[Position],
    current_zone: u32,
    zones: &[Zone],
    adjacency: &[(u32, u32)],
    plan: &ChannelPlan,
) -> Result<SwitchDecision> {
    if history.len() < 2 {
        return Err(Error::InsufficientData(
            "switch evaluation needs at least two position estimates".into(),
        ));
    }
    let strong = zone_rssi
        .iter()
        .flatten()
        .filter(|r| r.dbm() >= params.rss_threshold)
        .count();
    if strong >= params.min_anchor_count {
        return Ok(SwitchDecision::Stay);
    }

    let latest = history[history.len() - 1];
    let heading = latest.sub(&history[0]);
    let mut neighbours: Vec<&Zone> = zones
        .iter()
        .filter(|z| {
            adjacency
                .iter()
                .any(|&(a, b)| (a == current_zone && b == z.id) || (b == current_zone && a == z.id))
        })
        .collect();
    neighbours.sort_by_key(|z| z.id);

    if neighbours.is_empty() {
        return Ok(SwitchDecision::Isolated);
    }

    let mut best: Option<(f64, &Zone)> = None;
    for z in neighbours {
        let score = alignment(&heading, &z.rect.centroid().sub(&latest));
        if score <= 0.0 {
            continue;
        }
        match best {
            Some((s, _)) if score <= s + 1e-12 => {}
            _ => best = Some((score, z)),
        }
    }
    let Some((_, zone)) = best else {
        return Ok(SwitchDecision::Stay);
    };
    let channel = plan
        .channel_of(zone.id)
        .ok_or_else(|| Error::InvalidScenario(format!("zone {} has no channel assigned", zone.id)))?;
    Ok(SwitchDecision::Switch { zone: zone.id, channel })
}

fn alignment(heading: &Position, direction: &Position) -> f64 {
    let n = heading.norm() * direction.norm();
    if n == 0.0 {
        0.0
    } else {
        heading.dot(direction) / n
    }
}
