use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Zone;

/// IEEE 802.15.4 2.4 GHz channel number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ChannelId(u8);

impl ChannelId {
    pub const FIRST: u8 = 11;
    pub const LAST: u8 = 26;
    /// Reserved for the head-anchor backhaul.
    pub const BACKHAUL: ChannelId = ChannelId(21);

    pub fn new(value: u8) -> Result<Self> {
        if (Self::FIRST..=Self::LAST).contains(&value) {
            Ok(ChannelId(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "channel {value} outside {}..={}",
                Self::FIRST,
                Self::LAST
            )))
        }
    }

    /// A channel mobile nodes may be told to use.
    pub fn mn_facing(value: u8) -> Result<Self> {
        let ch = Self::new(value)?;
        if ch == Self::BACKHAUL {
            return Err(Error::ProtocolViolation(
                "channel 21 is reserved for the backhaul".into(),
            ));
        }
        Ok(ch)
    }

    /// Channels 11..=26 except the backhaul, ascending.
    pub fn mn_facing_all() -> Vec<ChannelId> {
        (Self::FIRST..=Self::LAST)
            .map(ChannelId)
            .filter(|c| *c != Self::BACKHAUL)
            .collect()
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for ChannelId {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        ChannelId::new(value)
    }
}

impl From<ChannelId> for u8 {
    fn from(c: ChannelId) -> u8 {
        c.0
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub assignments: BTreeMap<u32, ChannelId>,
    pub reuse_min_distance: f64,
}

impl ChannelPlan {
    pub fn channel_of(&self, zone: u32) -> Option<ChannelId> {
        self.assignments.get(&zone).copied()
    }

    /// Re-checks the plan against its zones.
    pub fn validate(&self, zones: &[Zone], adjacency: &[(u32, u32)]) -> Result<()> {
        for (&zone, &ch) in &self.assignments {
            if ch == ChannelId::BACKHAUL {
                return Err(Error::ProtocolViolation(format!(
                    "zone {zone} assigned the backhaul channel"
                )));
            }
        }
        for &(a, b) in adjacency {
            if self.channel_of(a) == self.channel_of(b) {
                return Err(Error::ProtocolViolation(format!(
                    "adjacent zones {a} and {b} share a channel"
                )));
            }
        }
        for (i, za) in zones.iter().enumerate() {
            for zb in &zones[i + 1..] {
                let same = self.channel_of(za.id).is_some() && self.channel_of(za.id) == self.channel_of(zb.id);
                let d = za.rect.centroid().distance_to(&zb.rect.centroid());
                if same && d < self.reuse_min_distance {
                    return Err(Error::ProtocolViolation(format!(
                        "zones {} and {} reuse a channel {d:.2} m apart",
                        za.id, zb.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Greedy allocation in ascending zone id: each zone takes the lowest
/// available channel not used by an adjacent zone nor by any zone whose
/// centroid is closer than `reuse_min_distance`.
pub fn allocate_channels(
    zones: &[Zone],
    adjacency: &[(u32, u32)],
    available: &[ChannelId],
    reuse_min_distance: f64,
) -> Result<ChannelPlan> {
    let mut channels: Vec<ChannelId> = available.to_vec();
    channels.sort_unstable();
    channels.dedup();
    if let Some(bad) = channels.iter().find(|c| **c == ChannelId::BACKHAUL) {
        return Err(Error::ProtocolViolation(format!(
            "channel {bad} cannot be offered to mobile nodes"
        )));
    }

    let mut order: Vec<&Zone> = zones.iter().collect();
    order.sort_by_key(|z| z.id);

    let mut assignments = BTreeMap::new();
    for zone in order {
        let centroid = zone.rect.centroid();
        let blocked = |ch: ChannelId| {
            zones.iter().any(|other| {
                if other.id == zone.id || assignments.get(&other.id) != Some(&ch) {
                    return false;
                }
                let adjacent = adjacency
                    .iter()
                    .any(|&(a, b)| (a, b) == (zone.id, other.id) || (b, a) == (zone.id, other.id));
                adjacent || centroid.distance_to(&other.rect.centroid()) < reuse_min_distance
            })
        };
        let ch = channels
            .iter()
            .copied()
            .find(|&ch| !blocked(ch))
            .ok_or(Error::AllocationInfeasible { zone: zone.id })?;
        assignments.insert(zone.id, ch);
    }
    Ok(ChannelPlan {
        assignments,
        reuse_min_distance,
    })
}
