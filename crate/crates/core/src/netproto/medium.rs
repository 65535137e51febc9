//! Hard-collision medium: overlapping frames on one channel destroy each
//! other at every receiver within interference range of the other sender.

use crate::geometry::Position;

use super::channel::ChannelId;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub channel: ChannelId,
    /// seconds
    pub start: f64,
    /// seconds
    pub duration: f64,
    pub tx_position: Position,
    /// Intended receivers as `(node id, position)`.
    pub receivers: Vec<(u32, Position)>,
}

impl Frame {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Half-open interval overlap on the same channel.
pub fn frames_overlap(a: &Frame, b: &Frame) -> bool {
    a.channel == b.channel && a.start < b.end() && b.start < a.end()
}

/// Delivery flags of `frame` at each of its receivers given other traffic.
pub fn frame_delivery<'a>(
    frame: &Frame,
    others: impl IntoIterator<Item = &'a Frame> + Clone,
    interference_range: f64,
) -> Vec<bool> {
    frame
        .receivers
        .iter()
        .map(|(_, rx)| {
            !others.clone().into_iter().any(|o| {
                !std::ptr::eq(o, frame)
                    && frames_overlap(frame, o)
                    && o.tx_position.distance_to(rx) <= interference_range
            })
        })
        .collect()
}

/// Delivery flags for every frame at every receiver.
pub fn resolve_collisions(frames: &[Frame], interference_range: f64) -> Vec<Vec<bool>> {
    frames
        .iter()
        .map(|f| frame_delivery(f, frames.iter(), interference_range))
        .collect()
}
