//! Adaptive sounding: speed estimation, the speed-to-period table with
//! debounced adjustment, and the zone-edge receive period.

use crate::error::{Error, Result};
use crate::geometry::{Position, Zone};

/// Estimates used for the path-length speed estimate.
pub const SPEED_WINDOW: usize = 5;
/// Sounding period used below the slowest speed band.
pub const STATIONARY_PERIOD_S: f64 = 3.0;
pub const INITIAL_TRANSMIT_PERIOD_S: f64 = 1.0;
pub const INITIAL_RECEIVE_PERIOD_S: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub position: Position,
}

/// Server-side view of one mobile node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mn_id: u32,
    pub history: Vec<TrackPoint>,
    pub speed_estimate: Option<f64>,
    pub transmit_period: f64,
    pub receive_period: f64,
    pub consecutive_band_hits: u32,
    /// Period the pending hits are counting toward.
    pending_period: Option<f64>,
}

impl TrackState {
    pub fn new(mn_id: u32, transmit_period: f64, receive_period: f64) -> Self {
        Self {
            mn_id,
            history: Vec::new(),
            speed_estimate: None,
            transmit_period,
            receive_period,
            consecutive_band_hits: 0,
            pending_period: None,
        }
    }

    /// Appends an estimate and refreshes the speed estimate.
    pub fn push(&mut self, t: f64, position: Position) -> Result<()> {
        if let Some(last) = self.history.last() {
            if t <= last.t {
                return Err(Error::InvariantViolation {
                    event: format!("track update for MN {}", self.mn_id),
                    detail: format!("timestamp {t} not after {}", last.t),
                });
            }
        }
        self.history.push(TrackPoint { t, position });
        self.speed_estimate = estimate_speed(&self.history, SPEED_WINDOW);
        Ok(())
    }

    /// The last `n` estimated positions, oldest first.
    pub fn recent_positions(&self, n: usize) -> Vec<Position> {
        let start = self.history.len().saturating_sub(n);
        self.history[start..].iter().map(|p| p.position).collect()
    }
}

/// Path length over the last `window` estimates divided by the time they span.
/// `None` with fewer than two estimates.
pub fn estimate_speed(history: &[TrackPoint], window: usize) -> Option<f64> {
    let start = history.len().saturating_sub(window.max(2));
    let recent = &history[start..];
    if recent.len() < 2 {
        return None;
    }
    let path: f64 = recent
        .windows(2)
        .map(|w| w[0].position.distance_to(&w[1].position))
        .sum();
    let elapsed = recent[recent.len() - 1].t - recent[0].t;
    (elapsed > 0.0).then(|| path / elapsed)
}

/// Sounding period for a speed, bands half-open `[lo, hi)`.
///
/// | speed (m/s) | period (s) |
/// |-------------|-----------|
/// | < 0.1       | 3         |
/// | 0.1 – 0.5   | 2         |
/// | 0.5 – 1     | 1         |
/// | 1 – 1.5     | 0.5       |
/// | ≥ 1.5       | 0.2       |
pub fn duty_cycle_for_speed(speed: f64) -> f64 {
    match speed {
        s if s < 0.1 => STATIONARY_PERIOD_S,
        s if s < 0.5 => 2.0,
        s if s < 1.0 => 1.0,
        s if s < 1.5 => 0.5,
        _ => 0.2,
    }
}

/// Debounced period update. Returns the new period when `required`
/// consecutive evaluations asked for the same different period.
pub fn maybe_adjust_sounding(track: &mut TrackState, required: u32) -> Option<f64> {
    let speed = track.speed_estimate?;
    let target = duty_cycle_for_speed(speed);
    if target == track.transmit_period {
        track.consecutive_band_hits = 0;
        track.pending_period = None;
        return None;
    }
    if track.pending_period == Some(target) {
        track.consecutive_band_hits += 1;
    } else {
        track.pending_period = Some(target);
        track.consecutive_band_hits = 1;
    }
    if track.consecutive_band_hits >= required {
        track.transmit_period = target;
        track.consecutive_band_hits = 0;
        track.pending_period = None;
        Some(target)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivePolicy {
    /// Distance from the zone border that counts as the edge, m.
    pub edge_band: f64,
    pub edge_period: f64,
    pub center_period: f64,
}

impl Default for ReceivePolicy {
    fn default() -> Self {
        Self {
            edge_band: 2.0,
            edge_period: 1.0,
            center_period: INITIAL_RECEIVE_PERIOD_S,
        }
    }
}

/// Short receive period near the zone border, long one in the interior.
pub fn receive_period_for_position(position: &Position, zone: &Zone, policy: &ReceivePolicy) -> Result<f64> {
    let d = zone.rect.distance_to_border(position).ok_or(Error::OutOfZone {
        zone: zone.id,
        x: position.x,
        y: position.y,
    })?;
    Ok(if d < policy.edge_band {
        policy.edge_period
    } else {
        policy.center_period
    })
}
