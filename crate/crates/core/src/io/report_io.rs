//! `track.csv` and `summary.toml` output of a simulation run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::sim::report::{ErrorStats, SimReport, TrackRow};

pub const TRACK_FILE: &str = "track.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const TRACK_HEADER: &str = "timestamp_s,mn_id,true_x_m,true_y_m,est_x_m,est_y_m,error_m";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub duration_s: f64,
    pub algorithm: String,
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorStats>,
    /// Keyed by zone id.
    #[serde(default)]
    pub error_by_zone: BTreeMap<String, ErrorStats>,
    /// Keyed by system variant.
    #[serde(default)]
    pub plr: BTreeMap<String, PlrSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencySummary>,
    pub energy: EnergySummary,
    #[serde(default)]
    pub events: BTreeMap<String, u64>,
    #[serde(default)]
    pub commands: BTreeMap<String, u64>,
    /// Zone id to channel.
    #[serde(default)]
    pub channels: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlrSummary {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub plr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySummary {
    pub mean_error_m: f64,
    pub energy_j: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_mn_total_j: Option<f64>,
    /// Keyed by node id.
    #[serde(default)]
    pub mn: BTreeMap<String, NodeEnergy>,
    #[serde(default)]
    pub an: BTreeMap<String, NodeEnergy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEnergy {
    pub transmit_j: f64,
    pub receive_j: f64,
    pub sleep_j: f64,
    pub total_j: f64,
    /// Transmit plus sleep: the per-cycle sounding cost without listening.
    pub sounding_j: f64,
}

impl From<&EnergyLedger> for NodeEnergy {
    fn from(l: &EnergyLedger) -> Self {
        Self {
            transmit_j: l.transmit_j,
            receive_j: l.receive_j,
            sleep_j: l.sleep_j,
            total_j: l.total_j,
            sounding_j: l.transmit_j + l.sleep_j,
        }
    }
}

impl Summary {
    pub fn from_report(report: &SimReport) -> Self {
        let energy_map =
            |m: &BTreeMap<u32, EnergyLedger>| m.iter().map(|(id, l)| (id.to_string(), NodeEnergy::from(l))).collect();
        Self {
            scenario: report.scenario.clone(),
            seed: report.seed,
            duration_s: report.duration,
            algorithm: report.algorithm.clone(),
            variant: report.variant.clone(),
            error: report.overall_error(),
            error_by_zone: report
                .zone_errors()
                .into_iter()
                .map(|(z, s)| (z.to_string(), s))
                .collect(),
            plr: report
                .plr
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        PlrSummary {
                            sent: p.sent,
                            delivered: p.delivered,
                            lost: p.lost(),
                            plr: p.plr(),
                        },
                    )
                })
                .collect(),
            efficiency: report.efficiency.map(|e| EfficiencySummary {
                mean_error_m: e.mean_error,
                energy_j: e.energy,
                eta: e.eta,
            }),
            energy: EnergySummary {
                mean_mn_total_j: report.mean_mn_energy(),
                mn: energy_map(&report.mn_energy),
                an: energy_map(&report.an_energy),
            },
            events: report.event_counts.clone(),
            commands: report.commands.clone(),
            channels: report.channel_plan.iter().map(|(z, c)| (z.to_string(), *c)).collect(),
        }
    }
}

pub fn track_csv(rows: &[TrackRow]) -> String {
    let mut out = String::from(TRACK_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.timestamp, r.mn_id, r.true_position.x, r.true_position.y, r.estimate.x, r.estimate.y, r.error
        ));
    }
    out
}

/// Writes `track.csv` and `summary.toml` into `dir`, creating it if needed.
pub fn write_report(report: &SimReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TRACK_FILE), track_csv(&report.track))?;
    let summary = toml::to_string(&Summary::from_report(report)).map_err(|e| Error::Config {
        path: SUMMARY_FILE.into(),
        line: None,
        message: e.to_string(),
    })?;
    fs::write(dir.join(SUMMARY_FILE), summary)?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e
            .span()
            .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
            .unwrap_or(0),
        message: e.message().to_string(),
    })
}

pub fn read_track(dir: &Path) -> Result<Vec<TrackRow>> {
    let path = dir.join(TRACK_FILE);
    let text = fs::read_to_string(&path)?;
    let bad = |line: u64, message: String| Error::Parse {
        file: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some(TRACK_HEADER) {
        return Err(bad(1, format!("expected header `{TRACK_HEADER}`")));
    }
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let line = i as u64 + 2;
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 7 {
            return Err(bad(line, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse::<f64>()
                .map_err(|_| bad(line, format!("bad number `{}`", f[k])))
        };
        rows.push(TrackRow {
            timestamp: num(0)?,
            mn_id: f[1].parse().map_err(|_| bad(line, format!("bad MN id `{}`", f[1])))?,
            true_position: Position::new(num(2)?, num(3)?),
            estimate: Position::new(num(4)?, num(5)?),
            error: num(6)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EfficiencyReport;
    use crate::sim::report::{percentile, PlrStats};

    fn report(rows: Vec<TrackRow>) -> SimReport {
        let zones = rows
            .iter()
            .map(|r| Some(if r.true_position.x < 5.0 { 1 } else { 2 }))
            .collect();
        let l = EnergyLedger {
            transmit_j: 0.01,
            sleep_j: 0.001,
            total_j: 0.011,
            ..Default::default()
        };
        let mut r = SimReport {
            scenario: "t".into(),
            seed: 3,
            duration: 10.0,
            algorithm: "awknn".into(),
            variant: "elot".into(),
            track: rows,
            row_zones: zones,
            plr: BTreeMap::from([("elot".to_string(), PlrStats { sent: 10, delivered: 9 })]),
            mn_energy: BTreeMap::from([(1, l)]),
            an_energy: BTreeMap::new(),
            efficiency: None,
            event_counts: BTreeMap::new(),
            commands: BTreeMap::new(),
            channel_plan: BTreeMap::from([(1, 11)]),
        };
        if let Some(e) = r.overall_error() {
            r.efficiency = Some(EfficiencyReport::new(e.mean, 0.011).unwrap());
        }
        r
    }

    fn row(t: f64, x: f64, err: f64) -> TrackRow {
        TrackRow {
            timestamp: t,
            mn_id: 1,
            true_position: Position::new(x, 1.0),
            estimate: Position::new(x + err, 1.0),
            error: err,
        }
    }

    #[test]
    fn empty_track_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_report(&report(vec![]), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(TRACK_FILE)).unwrap();
        assert_eq!(text, format!("{TRACK_HEADER}\n"));
        let s = read_summary(dir.path()).unwrap();
        assert!(s.error.is_none() && s.efficiency.is_none());
    }

    #[test]
    fn summary_consistent_with_track() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<TrackRow> = (0..23)
            .map(|i| row(i as f64, (i % 9) as f64, 0.1 + (i * 7 % 11) as f64 * 0.3))
            .collect();
        write_report(&report(rows), dir.path()).unwrap();
        let s = read_summary(dir.path()).unwrap();
        let back = read_track(dir.path()).unwrap();
        // percentile oracle over the written rows
        let mut errs: Vec<f64> = back.iter().map(|r| r.error).collect();
        errs.sort_by(f64::total_cmp);
        let p90 = percentile(&errs, 0.9).unwrap();
        assert_eq!(s.error.unwrap().p90, p90);
        let mut z1: Vec<f64> = back
            .iter()
            .filter(|r| r.true_position.x < 5.0)
            .map(|r| r.error)
            .collect();
        z1.sort_by(f64::total_cmp);
        assert_eq!(s.error_by_zone["1"].p90, percentile(&z1, 0.9).unwrap());
        let eff = s.efficiency.unwrap();
        let eta = 1.0 / (eff.mean_error_m * eff.mean_error_m) / eff.energy_j;
        assert!((eta / eff.eta - 1.0).abs() < 1e-9);
        assert_eq!(s.plr["elot"].lost, 1);
    }

    #[test]
    fn bad_track_line() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(TRACK_FILE),
            format!("{TRACK_HEADER}\n1,1,0,0,0,0,0\n2,1,x,0,0,0,0\n"),
        )
        .unwrap();
        assert!(matches!(read_track(dir.path()), Err(Error::Parse { line: 3, .. })));
    }
}
