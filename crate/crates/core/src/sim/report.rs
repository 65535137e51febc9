//! Run results and the statistics derived from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::{EfficiencyReport, EnergyLedger};
use crate::geometry::Position;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRow {
    /// Beacon time, s.
    pub timestamp: f64,
    pub mn_id: u32,
    pub true_position: Position,
    pub estimate: Position,
    /// m
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Option<Self> {
        if errors.is_empty() {
            return None;
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: sorted.len(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            median: percentile(&sorted, 0.5)?,
            p90: percentile(&sorted, 0.9)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlrStats {
    pub sent: u64,
    pub delivered: u64,
}

impl PlrStats {
    pub fn lost(&self) -> u64 {
        self.sent - self.delivered
    }

    pub fn plr(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.lost() as f64 / self.sent as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scenario: String,
    pub seed: u64,
    pub duration: f64,
    pub algorithm: String,
    /// Channel mode the track and energy figures come from.
    pub variant: String,
    pub track: Vec<TrackRow>,
    /// Zone of each track row's true position, lowest id on shared borders.
    pub row_zones: Vec<Option<u32>>,
    pub plr: BTreeMap<String, PlrStats>,
    pub mn_energy: BTreeMap<u32, EnergyLedger>,
    pub an_energy: BTreeMap<u32, EnergyLedger>,
    pub efficiency: Option<EfficiencyReport>,
    pub event_counts: BTreeMap<String, u64>,
    pub commands: BTreeMap<String, u64>,
    pub channel_plan: BTreeMap<u32, u8>,
}

impl SimReport {
    pub fn overall_error(&self) -> Option<ErrorStats> {
        let e: Vec<f64> = self.track.iter().map(|r| r.error).collect();
        ErrorStats::from_errors(&e)
    }

    pub fn zone_errors(&self) -> BTreeMap<u32, ErrorStats> {
        let mut by_zone: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (row, zone) in self.track.iter().zip(&self.row_zones) {
            if let Some(z) = zone {
                by_zone.entry(*z).or_default().push(row.error);
            }
        }
        by_zone
            .into_iter()
            .filter_map(|(z, e)| ErrorStats::from_errors(&e).map(|s| (z, s)))
            .collect()
    }

    /// Mean total energy per mobile node, J.
    pub fn mean_mn_energy(&self) -> Option<f64> {
        if self.mn_energy.is_empty() {
            return None;
        }
        Some(self.mn_energy.values().map(|l| l.total_j).sum::<f64>() / self.mn_energy.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), Some(3.0));
        assert!((percentile(&v, 0.9).unwrap() - 4.6).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 0.9), Some(7.0));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn stats_and_plr() {
        let s = ErrorStats::from_errors(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.count, 4);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        let p = PlrStats {
            sent: 50,
            delivered: 47,
        };
        assert_eq!(p.lost(), 3);
        assert!((p.plr() - 0.06).abs() < 1e-12);
        assert_eq!(PlrStats::default().plr(), 0.0);
    }
}
