use rand::Rng;

use crate::error::{Error, Result};

/// Per-anchor forwarding offsets within one contention window.
///
/// Anchor `i` (1-based) waits `T_i + i * window / slot_count`, with `T_i` drawn
/// from `[0, window / slot_count - frame)`, so every anchor's frame of length
/// `frame` stays inside its own slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffSchedule {
    pub window: f64,
    pub slot_count: usize,
    /// Airtime of one forwarded frame, s.
    pub frame: f64,
    pub offsets: Vec<f64>,
    pub starts: Vec<f64>,
}

impl BackoffSchedule {
    pub fn from_offsets(slot_count: usize, window: f64, frame: f64, offsets: Vec<f64>) -> Result<Self> {
        check(slot_count, window, frame)?;
        if offsets.len() != slot_count {
            return Err(Error::DimensionMismatch {
                expected: slot_count,
                found: offsets.len(),
            });
        }
        let free = window / slot_count as f64 - frame;
        if let Some(bad) = offsets.iter().find(|t| !(**t >= 0.0 && **t < free)) {
            return Err(Error::InvalidParameter(format!(
                "backoff offset {bad} outside [0, {free})"
            )));
        }
        let starts = offsets
            .iter()
            .enumerate()
            .map(|(k, t)| t + (k + 1) as f64 * (window / slot_count as f64))
            .collect();
        Ok(Self {
            window,
            slot_count,
            frame,
            offsets,
            starts,
        })
    }

    pub fn slot_len(&self) -> f64 {
        self.window / self.slot_count as f64
    }

    /// `[i * slot, (i + 1) * slot)` for 1-based anchor index `i`.
    pub fn slot_interval(&self, i: usize) -> (f64, f64) {
        let s = self.slot_len();
        (i as f64 * s, (i + 1) as f64 * s)
    }

    /// Start offset of the 1-based anchor index `i`.
    pub fn start(&self, i: usize) -> f64 {
        self.starts[i - 1]
    }

    /// On-air interval of anchor `i`'s frame.
    pub fn busy_interval(&self, i: usize) -> (f64, f64) {
        let s = self.start(i);
        (s, s + self.frame)
    }
}

/// Checks that `slot_count` frames of length `frame` fit in `window`.
pub fn check(slot_count: usize, window: f64, frame: f64) -> Result<()> {
    if slot_count == 0 || !(window > 0.0 && window.is_finite()) || !(frame >= 0.0 && frame.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "backoff needs slot_count >= 1, window > 0 and frame >= 0 (got {slot_count}, {window}, {frame})"
        )));
    }
    if window / slot_count as f64 <= frame {
        return Err(Error::InvalidParameter(format!(
            "{slot_count} slots of a {window} s window cannot hold {frame} s frames"
        )));
    }
    Ok(())
}

/// Draws one schedule from a generator shared by all anchors of the zone.
pub fn backoff_schedule<R: Rng + ?Sized>(
    slot_count: usize,
    window: f64,
    frame: f64,
    rng: &mut R,
) -> Result<BackoffSchedule> {
    check(slot_count, window, frame)?;
    let free = window / slot_count as f64 - frame;
    let offsets = (0..slot_count).map(|_| rng.random_range(0.0..free)).collect();
    BackoffSchedule::from_offsets(slot_count, window, frame, offsets)
}
