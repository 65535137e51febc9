//! Deterministic fingerprint matchers: KNN, WKNN and adaptive WKNN.
//!
//! All matchers rank reference locations by the Euclidean distance between
//! RSS vectors (unheard entries read as the RSSI floor on either side), break
//! ties by lower grid index, and return a convex combination of the selected
//! reference positions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::radio_map::{RadioMap, RssVector, Rssi};

/// Distances below this (dB) count as an exact fingerprint match.
pub const ZERO_DISTANCE_DB: f64 = 1e-6;

/// Adaptive selection needs more than this many references.
const AWKNN_MIN_SELECTED: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub mn_id: u32,
    pub rss: RssVector,
    pub timestamp: f64,
}

impl Measurement {
    pub fn new(mn_id: u32, rss: RssVector, timestamp: f64) -> Result<Self> {
        if rss.iter().all(Option::is_none) {
            return Err(Error::InsufficientData(format!(
                "measurement from MN {mn_id} at t={timestamp} has no heard anchor"
            )));
        }
        Ok(Self { mn_id, rss, timestamp })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selected {
    pub grid_index: u32,
    pub distance: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub estimate: Position,
    /// Sorted by non-decreasing distance; weights sum to one.
    pub selected: Vec<Selected>,
    pub k_used: usize,
    /// No selected fingerprint shares a heard anchor with the query.
    pub low_confidence: bool,
    /// The adaptive matcher had too few references and fell back to WKNN.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwknnParams {
    /// Added to the smallest distance to seed the threshold, dB.
    pub gamma0_offset: f64,
    /// Threshold step, dB.
    pub delta: f64,
    pub theta_l: f64,
    pub theta_s: f64,
    pub max_iters: u32,
}

impl Default for AwknnParams {
    fn default() -> Self {
        Self {
            gamma0_offset: 1.0,
            delta: 1.5,
            theta_l: 3.0,
            theta_s: 1.2,
            max_iters: 50,
        }
    }
}

impl AwknnParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta.is_finite()
            && self.gamma0_offset.is_finite()
            && self.theta_s >= 1.0
            && self.theta_l > self.theta_s
            && self.theta_l.is_finite()
            && self.max_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("AWKNN parameters {self:?}")))
        }
    }
}

/// Which matcher the server runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Knn { k: usize },
    Wknn { k: usize },
    Awknn(AwknnParams),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Knn { .. } => "knn",
            Algorithm::Wknn { .. } => "wknn",
            Algorithm::Awknn(_) => "awknn",
        }
    }
}

/// Selector string without parameters; pair with [`AlgorithmKind::with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Knn,
    Wknn,
    Awknn,
}

impl AlgorithmKind {
    pub fn with(self, k: usize, awknn: AwknnParams) -> Algorithm {
        match self {
            AlgorithmKind::Knn => Algorithm::Knn { k },
            AlgorithmKind::Wknn => Algorithm::Wknn { k },
            AlgorithmKind::Awknn => Algorithm::Awknn(awknn),
        }
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(AlgorithmKind::Knn),
            "wknn" => Ok(AlgorithmKind::Wknn),
            "awknn" => Ok(AlgorithmKind::Awknn),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm `{other}` (expected knn, wknn or awknn)"
            ))),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmKind::Knn => "knn",
            AlgorithmKind::Wknn => "wknn",
            AlgorithmKind::Awknn => "awknn",
        })
    }
}

fn floor_substituted(v: Option<Rssi>) -> f64 {
    v.unwrap_or(Rssi::FLOOR).dbm() as f64
}

/// Euclidean distance in signal space, dB.
pub fn rss_distance(fingerprint: &[Option<Rssi>], query: &[Option<Rssi>]) -> Result<f64> {
    if fingerprint.len() != query.len() {
        return Err(Error::DimensionMismatch {
            expected: fingerprint.len(),
            found: query.len(),
        });
    }
    let sq: f64 = fingerprint
        .iter()
        .zip(query)
        .map(|(&a, &b)| {
            let d = floor_substituted(a) - floor_substituted(b);
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}

/// Number of anchors heard in both vectors.
pub fn heard_overlap(a: &[Option<Rssi>], b: &[Option<Rssi>]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x.is_some() && y.is_some()).count()
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    slot: usize,
    grid_index: u32,
    distance: f64,
}

fn rank(map: &RadioMap, m: &Measurement) -> Result<Vec<Ranked>> {
    if m.rss.len() != map.anchor_count() {
        return Err(Error::DimensionMismatch {
            expected: map.anchor_count(),
            found: m.rss.len(),
        });
    }
    let mut ranked = map
        .fingerprints
        .iter()
        .enumerate()
        .map(|(slot, fp)| {
            Ok(Ranked {
                slot,
                grid_index: fp.grid_index,
                distance: rss_distance(&fp.rss, &m.rss)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.grid_index.cmp(&b.grid_index)));
    Ok(ranked)
}

fn check_k(k: usize, l: usize) -> Result<()> {
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!("K = {k} must lie in 1..={l}")));
    }
    Ok(())
}

/// Normalized inverse-distance weights for distances sorted ascending. An
/// exact match takes all the weight.
fn inverse_distance_weights(distances: &[f64]) -> Vec<f64> {
    if distances.first().is_some_and(|&d| d < ZERO_DISTANCE_DB) {
        let mut w = vec![0.0; distances.len()];
        w[0] = 1.0;
        return w;
    }
    let raw: Vec<f64> = distances.iter().map(|d| 1.0 / d.max(ZERO_DISTANCE_DB)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn finish(map: &RadioMap, m: &Measurement, picked: &[Ranked], weights: Vec<f64>) -> MatchResult {
    let mut estimate = Position::default();
    for (r, &w) in picked.iter().zip(&weights) {
        let p = map.fingerprints[r.slot].location;
        estimate.x += w * p.x;
        estimate.y += w * p.y;
    }
    let low_confidence = picked
        .iter()
        .all(|r| heard_overlap(&map.fingerprints[r.slot].rss, &m.rss) == 0);
    let selected: Vec<Selected> = picked
        .iter()
        .zip(weights)
        .map(|(r, weight)| Selected {
            grid_index: r.grid_index,
            distance: r.distance,
            weight,
        })
        .collect();
    MatchResult {
        estimate,
        k_used: selected.len(),
        selected,
        low_confidence,
        degenerate: false,
    }
}

/// Unweighted centroid of the `k` closest references.
pub fn knn_estimate(map: &RadioMap, m: &Measurement, k: usize) -> Result<MatchResult> {
    check_k(k, map.len())?;
    let ranked = rank(map, m)?;
    let picked = &ranked[..k];
    Ok(finish(map, m, picked, vec![1.0 / k as f64; k]))
}

/// Inverse-distance weighted centroid of the `k` closest references. An
/// exact match returns that reference alone.
pub fn wknn_estimate(map: &RadioMap, m: &Measurement, k: usize) -> Result<MatchResult> {
    check_k(k, map.len())?;
    let ranked = rank(map, m)?;
    Ok(wknn_over(map, m, &ranked[..k]))
}

fn wknn_over(map: &RadioMap, m: &Measurement, picked: &[Ranked]) -> MatchResult {
    if picked[0].distance < ZERO_DISTANCE_DB {
        return finish(map, m, &picked[..1], vec![1.0]);
    }
    let distances: Vec<f64> = picked.iter().map(|r| r.distance).collect();
    finish(map, m, picked, inverse_distance_weights(&distances))
}

/// How the adaptive threshold search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AwknnStop {
    /// The distance ratio landed inside `[theta_s, theta_l]`.
    Converged,
    /// Every reference is selected and the ratio still asks for more.
    Exhausted,
    /// The threshold returned to a value whose ratio was already checked.
    Oscillation,
    MaxIters,
}

/// Trace of the threshold search, exposed for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct AwknnTrace {
    /// Thresholds visited, in order.
    pub thresholds: Vec<f64>,
    /// Number of references selected at each visited threshold.
    pub counts: Vec<usize>,
    pub stop: AwknnStop,
    /// Final number of selected references.
    pub selected: usize,
}

/// Runs the threshold search over distances sorted ascending (`len >= 4`).
pub fn awknn_search(sorted: &[f64], params: &AwknnParams) -> AwknnTrace {
    let l = sorted.len();
    debug_assert!(l >= AWKNN_MIN_SELECTED);
    let base = sorted[0] + params.gamma0_offset;
    let count_within = |gamma: f64| {
        let limit = gamma + 1e-9 * gamma.abs().max(1.0);
        sorted.partition_point(|&d| d <= limit)
    };

    let mut step: i64 = 0;
    let mut ratio_checked = BTreeSet::new();
    let mut last_valid: Option<usize> = None;
    let mut thresholds = Vec::new();
    let mut counts = Vec::new();
    let mut iters = 0u32;

    let stop = loop {
        let gamma = base + step as f64 * params.delta;
        let n_r = count_within(gamma);
        thresholds.push(gamma);
        counts.push(n_r);
        if n_r >= AWKNN_MIN_SELECTED {
            last_valid = Some(n_r);
        }

        let next = if n_r < AWKNN_MIN_SELECTED {
            step + 1
        } else {
            if !ratio_checked.insert(step) {
                break AwknnStop::Oscillation;
            }
            let ratio = sorted[n_r - 1] / sorted[0].max(ZERO_DISTANCE_DB);
            if ratio > params.theta_l {
                step - 1
            } else if ratio < params.theta_s {
                if n_r == l {
                    break AwknnStop::Exhausted;
                }
                step + 1
            } else {
                break AwknnStop::Converged;
            }
        };

        iters += 1;
        if iters >= params.max_iters {
            break AwknnStop::MaxIters;
        }
        step = next;
    };

    AwknnTrace {
        thresholds,
        counts,
        stop,
        selected: last_valid.unwrap_or(AWKNN_MIN_SELECTED),
    }
}

/// WKNN over an adaptively sized neighbour set.
///
/// With fewer than four references the search is meaningless; the matcher
/// then runs WKNN over the whole map and marks the result degenerate.
pub fn awknn_estimate(map: &RadioMap, m: &Measurement, params: &AwknnParams) -> Result<MatchResult> {
    params.validate()?;
    if map.len() < AWKNN_MIN_SELECTED {
        let mut r = wknn_estimate(map, m, map.len())?;
        r.degenerate = true;
        return Ok(r);
    }
    let ranked = rank(map, m)?;
    let distances: Vec<f64> = ranked.iter().map(|r| r.distance).collect();
    let trace = awknn_search(&distances, params);
    let picked = &ranked[..trace.selected];
    Ok(finish(
        map,
        m,
        picked,
        inverse_distance_weights(&distances[..trace.selected]),
    ))
}

pub fn locate(map: &RadioMap, m: &Measurement, algorithm: &Algorithm) -> Result<MatchResult> {
    match algorithm {
        Algorithm::Knn { k } => knn_estimate(map, m, *k),
        Algorithm::Wknn { k } => wknn_estimate(map, m, *k),
        Algorithm::Awknn(p) => awknn_estimate(map, m, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridPoint, ReferenceGrid};
    use crate::radio_map::{assemble_radio_map, Anchor};
    use approx::assert_abs_diff_eq;

    fn r(v: i32) -> Option<Rssi> {
        Some(Rssi::new(v).unwrap())
    }

    fn map_of(points: &[(f64, f64, Vec<Option<Rssi>>)]) -> RadioMap {
        let n = points[0].2.len();
        let grid = ReferenceGrid::from_points(
            points
                .iter()
                .enumerate()
                .map(|(k, p)| GridPoint {
                    index: k as u32 + 1,
                    position: Position::new(p.0, p.1),
                })
                .collect(),
            1.0,
        )
        .unwrap();
        let anchors = (0..n)
            .map(|j| Anchor {
                id: j as u32 + 1,
                position: Position::new(j as f64, 0.0),
            })
            .collect();
        let fps = points
            .iter()
            .enumerate()
            .map(|(k, p)| (k as u32 + 1, p.2.clone()))
            .collect();
        assemble_radio_map(grid, fps, anchors).unwrap()
    }

    fn query(rss: Vec<Option<Rssi>>) -> Measurement {
        Measurement::new(1, rss, 0.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            rss_distance(&[r(-40), r(-50), r(-60)], &[r(-43), r(-46), r(-60)]).unwrap(),
            5.0
        );
        assert_eq!(rss_distance(&[r(-40), r(-50)], &[r(-40), r(-50)]).unwrap(), 0.0);
        assert_eq!(rss_distance(&[r(-40), None], &[r(-40), r(-60)]).unwrap(), 10.0);
        assert_eq!(rss_distance(&[None, None], &[None, None]).unwrap(), 0.0);
        assert!(matches!(
            rss_distance(&[None], &[None, None]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn measurement_needs_a_heard_entry() {
        assert!(Measurement::new(1, vec![None, None], 0.0).is_err());
    }

    #[test]
    fn knn_exact_match_and_full_selection() {
        let map = map_of(&[
            (0.0, 0.0, vec![r(-30), r(-60)]),
            (2.0, 4.0, vec![r(-45), r(-45)]),
            (6.0, 2.0, vec![r(-60), r(-30)]),
        ]);
        let res = knn_estimate(&map, &query(vec![r(-45), r(-45)]), 1).unwrap();
        assert_eq!(res.estimate, Position::new(2.0, 4.0));
        let all = knn_estimate(&map, &query(vec![r(-20), r(-70)]), 3).unwrap();
        assert_abs_diff_eq!(all.estimate.x, 8.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(all.estimate.y, 2.0, epsilon = 1e-12);
        assert!(knn_estimate(&map, &query(vec![r(-20), r(-70)]), 4).is_err());
        assert!(knn_estimate(&map, &query(vec![r(-20), r(-70)]), 0).is_err());
    }

    #[test]
    fn wknn_inverse_distance_weights() {
        // distances 1 and 3 from the query
        let map = map_of(&[
            (0.0, 0.0, vec![r(-41)]),
            (4.0, 0.0, vec![r(-43)]),
            (9.0, 0.0, vec![r(-60)]),
        ]);
        let res = wknn_estimate(&map, &query(vec![r(-40)]), 2).unwrap();
        assert_abs_diff_eq!(res.selected[0].weight, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(res.selected[1].weight, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(res.estimate.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.estimate.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wknn_exact_match_clamps() {
        let map = map_of(&[(0.0, 0.0, vec![r(-41)]), (4.0, 0.0, vec![r(-43)])]);
        let res = wknn_estimate(&map, &query(vec![r(-43)]), 2).unwrap();
        assert_eq!(res.k_used, 1);
        assert_eq!(res.selected[0].weight, 1.0);
        assert_eq!(res.estimate, Position::new(4.0, 0.0));
    }

    #[test]
    fn ties_prefer_lower_grid_index() {
        let map = map_of(&[
            (0.0, 0.0, vec![r(-42)]),
            (5.0, 0.0, vec![r(-38)]),
            (9.0, 0.0, vec![r(-42)]),
        ]);
        let res = knn_estimate(&map, &query(vec![r(-40)]), 2).unwrap();
        let idx: Vec<u32> = res.selected.iter().map(|s| s.grid_index).collect();
        assert_eq!(idx, vec![1, 2]);
    }

    #[test]
    fn awknn_converges_on_four_nearest() {
        let p = AwknnParams {
            gamma0_offset: 0.2,
            delta: 0.2,
            theta_l: 4.0,
            theta_s: 1.2,
            max_iters: 50,
        };
        let t = awknn_search(&[1.0, 1.2, 1.3, 1.4, 5.0], &p);
        assert_eq!(t.stop, AwknnStop::Converged);
        assert_eq!(t.selected, 4);
        assert_eq!(t.counts, vec![2, 4]);
    }

    #[test]
    fn awknn_detects_oscillation() {
        let p = AwknnParams {
            gamma0_offset: 0.2,
            delta: 0.2,
            theta_l: 4.0,
            theta_s: 1.2,
            max_iters: 50,
        };
        let t = awknn_search(&[1.0, 1.5, 2.0, 8.0], &p);
        assert_eq!(t.stop, AwknnStop::Oscillation);
        assert_eq!(t.selected, 4);
        let n = t.counts.len();
        assert_eq!(&t.counts[n - 3..], &[4, 3, 4]);
    }

    #[test]
    fn awknn_exact_match_still_selects_four() {
        let map = map_of(&[
            (0.0, 0.0, vec![r(-40), r(-40)]),
            (1.0, 0.0, vec![r(-50), r(-50)]),
            (2.0, 0.0, vec![r(-52), r(-50)]),
            (3.0, 0.0, vec![r(-54), r(-50)]),
            (4.0, 0.0, vec![r(-56), r(-50)]),
        ]);
        let res = awknn_estimate(&map, &query(vec![r(-40), r(-40)]), &AwknnParams::default()).unwrap();
        assert!(res.k_used >= 4);
        assert_eq!(res.estimate, Position::new(0.0, 0.0));
        assert_eq!(res.selected[0].weight, 1.0);
    }

    #[test]
    fn awknn_small_map_falls_back() {
        let map = map_of(&[(0.0, 0.0, vec![r(-41)]), (4.0, 0.0, vec![r(-43)])]);
        let res = awknn_estimate(&map, &query(vec![r(-40)]), &AwknnParams::default()).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.k_used, 2);
    }

    #[test]
    fn awknn_equal_distances_exhaust() {
        let p = AwknnParams::default();
        let t = awknn_search(&[2.0, 2.0, 2.0, 2.0, 2.0], &p);
        assert_eq!(t.stop, AwknnStop::Exhausted);
        assert_eq!(t.selected, 5);
    }

    #[test]
    fn algorithm_selector_strings() {
        assert_eq!("awknn".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::Awknn);
        assert!("mmse".parse::<AlgorithmKind>().is_err());
        assert_eq!(AlgorithmKind::Wknn.to_string(), "wknn");
    }
}
