//! Synthetic offline survey and online queries drawn from a propagation model.

use rand::Rng;

use crate::error::Result;
use crate::geometry::{Position, ReferenceGrid};
use crate::localization::Measurement;
use crate::propagation::{sample_rss, PropagationModel};
use crate::radio_map::{assemble_radio_map, build_fingerprint, Anchor, RadioMap, RssVector};
use crate::rng::RngStreams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveyParams {
    /// Scans collected per reference point.
    pub scans: usize,
    /// Outliers dropped per anchor before averaging.
    pub trim_count: usize,
}

impl Default for SurveyParams {
    fn default() -> Self {
        Self {
            scans: 30,
            trim_count: 3,
        }
    }
}

/// One RSS reading per anchor for a transmitter at `at`.
pub fn sample_scan<R: Rng + ?Sized>(
    model: &PropagationModel,
    anchors: &[Anchor],
    at: Position,
    rng: &mut R,
) -> RssVector {
    anchors.iter().map(|a| sample_rss(model, at, a.position, rng)).collect()
}

/// Surveys every grid point with every anchor listening.
///
/// An anchor heard in too few scans to survive trimming is stored as unheard.
pub fn synthesize_radio_map(
    grid: &ReferenceGrid,
    anchors: &[Anchor],
    model: &PropagationModel,
    survey: &SurveyParams,
    streams: &RngStreams,
) -> Result<RadioMap> {
    let mut per_point = Vec::with_capacity(grid.len());
    for p in &grid.points {
        let mut rng = streams.stream("survey", &[p.index as u64]);
        let scans: Vec<RssVector> = (0..survey.scans)
            .map(|_| sample_scan(model, anchors, p.position, &mut rng))
            .collect();
        let mut rss = Vec::with_capacity(anchors.len());
        for j in 0..anchors.len() {
            let column: Vec<RssVector> = scans.iter().map(|s| vec![s[j]]).collect();
            let heard = column.iter().filter(|s| s[0].is_some()).count();
            rss.push(if heard > survey.trim_count {
                build_fingerprint(&column, survey.trim_count)?[0]
            } else {
                None
            });
        }
        per_point.push((p.index, rss));
    }
    assemble_radio_map(grid.clone(), per_point, anchors.to_vec())
}

/// A single-scan query from `at`. `None` when no anchor hears it.
pub fn synthesize_query<R: Rng + ?Sized>(
    model: &PropagationModel,
    anchors: &[Anchor],
    at: Position,
    mn_id: u32,
    timestamp: f64,
    rng: &mut R,
) -> Option<Measurement> {
    Measurement::new(mn_id, sample_scan(model, anchors, at, rng), timestamp).ok()
}
