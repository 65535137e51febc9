//! Offline fingerprint database: RSSI values, fingerprints and the radio map.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Position, ReferenceGrid};

/// Quantized received signal strength indicator, integer dBm in
/// [`Rssi::MIN`, `Rssi::MAX`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rssi(i8);

impl Rssi {
    pub const MIN: i32 = -70;
    pub const MAX: i32 = -10;
    /// Value substituted for an unheard anchor when comparing vectors.
    pub const FLOOR: Rssi = Rssi(-70);

    pub fn new(dbm: i32) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&dbm) {
            Ok(Rssi(dbm as i8))
        } else {
            Err(Error::InvalidParameter(format!(
                "RSSI {dbm} dBm outside [{}, {}]",
                Self::MIN,
                Self::MAX
            )))
        }
    }

    pub fn dbm(self) -> i32 {
        self.0 as i32
    }
}

impl fmt::Display for Rssi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One entry per anchor; `None` marks an anchor that did not hear the node.
pub type RssVector = Vec<Option<Rssi>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub id: u32,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub grid_index: u32,
    pub location: Position,
    pub rss: RssVector,
}

/// The fingerprint database: one fingerprint per reference location, with
/// RSS vectors ordered like `anchors`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    pub grid: ReferenceGrid,
    pub fingerprints: Vec<Fingerprint>,
    pub anchors: Vec<Anchor>,
}

impl RadioMap {
    pub fn len(&self) -> usize {
        self.fingerprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty()
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn anchor_index(&self, id: u32) -> Option<usize> {
        self.anchors.iter().position(|a| a.id == id)
    }

    /// The same map seen by a subset of anchors, in the given order.
    pub fn restrict(&self, anchor_ids: &[u32]) -> Result<RadioMap> {
        let cols = anchor_ids
            .iter()
            .map(|id| {
                self.anchor_index(*id)
                    .ok_or_else(|| Error::InconsistentMap(format!("anchor {id} is not in the map")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RadioMap {
            grid: self.grid.clone(),
            fingerprints: self
                .fingerprints
                .iter()
                .map(|f| Fingerprint {
                    rss: cols.iter().map(|&c| f.rss[c]).collect(),
                    ..f.clone()
                })
                .collect(),
            anchors: cols.iter().map(|&c| self.anchors[c]).collect(),
        })
    }
}

/// `ceil(sum / n - 1/2)`: the mean rounded to the nearest integer, ties toward −∞.
fn rounded_mean(sum: i64, n: i64) -> i64 {
    let num = 2 * sum - n;
    let den = 2 * n;
    -((-num).div_euclid(den))
}

fn median(sorted: &[i32]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        0.5 * (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64)
    }
}

/// Robust per-anchor average of repeated scans at one reference location.
///
/// For each anchor the `trim_count` heard samples furthest from the median are
/// dropped (equal deviations drop the weaker sample first), and the rest are
/// averaged and rounded to whole dBm with ties toward −∞. Anchors never heard
/// stay unheard.
pub fn build_fingerprint(scans: &[RssVector], trim_count: usize) -> Result<RssVector> {
    let Some(first) = scans.first() else {
        return Err(Error::InsufficientData("no scans".into()));
    };
    let n = first.len();
    if let Some(bad) = scans.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }

    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut heard: Vec<i32> = scans.iter().filter_map(|s| s[j]).map(Rssi::dbm).collect();
        if heard.is_empty() {
            out.push(None);
            continue;
        }
        if heard.len() <= trim_count {
            return Err(Error::InsufficientData(format!(
                "anchor slot {j}: {} heard samples, {} to trim",
                heard.len(),
                trim_count
            )));
        }
        heard.sort_unstable();
        let med = median(&heard);
        let mut ranked = heard.clone();
        ranked.sort_by(|a, b| {
            let da = (*a as f64 - med).abs();
            let db = (*b as f64 - med).abs();
            db.total_cmp(&da).then(a.cmp(b))
        });
        let kept = &ranked[trim_count..];
        let sum: i64 = kept.iter().map(|&v| v as i64).sum();
        let mean = rounded_mean(sum, kept.len() as i64);
        out.push(Some(Rssi::new(mean as i32)?));
    }
    Ok(out)
}

/// Builds a radio map from one RSS vector per grid point.
pub fn assemble_radio_map(
    grid: ReferenceGrid,
    per_point: Vec<(u32, RssVector)>,
    anchors: Vec<Anchor>,
) -> Result<RadioMap> {
    let mut ids = BTreeSet::new();
    for a in &anchors {
        if !ids.insert(a.id) {
            return Err(Error::InconsistentMap(format!("duplicate anchor id {}", a.id)));
        }
    }
    let n = anchors.len();
    let mut slots: Vec<Option<RssVector>> = vec![None; grid.len()];
    for (index, rss) in per_point {
        if rss.len() != n {
            return Err(Error::InconsistentMap(format!(
                "grid point {index} has {} RSS entries, expected {n}",
                rss.len()
            )));
        }
        let slot = (index as usize)
            .checked_sub(1)
            .and_then(|k| slots.get_mut(k))
            .ok_or_else(|| Error::InconsistentMap(format!("unknown grid index {index}")))?;
        if slot.is_some() {
            return Err(Error::InconsistentMap(format!("duplicate grid index {index}")));
        }
        *slot = Some(rss);
    }
    let fingerprints = grid
        .points
        .iter()
        .zip(slots)
        .map(|(p, rss)| {
            rss.map(|rss| Fingerprint {
                grid_index: p.index,
                location: p.position,
                rss,
            })
            .ok_or_else(|| Error::InconsistentMap(format!("missing fingerprint for grid index {}", p.index)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadioMap {
        grid,
        fingerprints,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_reference_grid, Rect};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn scans_of(values: &[i32]) -> Vec<RssVector> {
        values.iter().map(|&v| vec![Some(Rssi::new(v).unwrap())]).collect()
    }

    /// Reference implementation: drop the worst samples by repeatedly removing
    /// the current maximum-deviation sample, then average in exact rationals.
    fn oracle(values: &[i32], trim: usize) -> i32 {
        let mut sorted = values.to_vec();
        sorted.sort();
        let n = sorted.len();
        let med2 = if n % 2 == 1 {
            2 * sorted[n / 2]
        } else {
            sorted[n / 2 - 1] + sorted[n / 2]
        };
        let mut pool = values.to_vec();
        for _ in 0..trim {
            let mut worst = 0;
            for k in 1..pool.len() {
                let dk = (2 * pool[k] - med2).abs();
                let dw = (2 * pool[worst] - med2).abs();
                if dk > dw || (dk == dw && pool[k] < pool[worst]) {
                    worst = k;
                }
            }
            pool.remove(worst);
        }
        let sum: i32 = pool.iter().sum();
        let m = pool.len() as i32;
        // smallest integer r with r >= sum/m - 1/2
        let mut r = -100;
        while 2 * r * m < 2 * sum - m {
            r += 1;
        }
        r
    }

    #[test]
    fn identical_samples() {
        let fp = build_fingerprint(&scans_of(&[-40; 30]), 3).unwrap();
        assert_eq!(fp, vec![Some(Rssi::new(-40).unwrap())]);
    }

    #[test]
    fn single_outlier_removed() {
        let mut v = vec![-40; 29];
        v.push(-70);
        let fp = build_fingerprint(&scans_of(&v), 1).unwrap();
        assert_eq!(fp[0].unwrap().dbm(), -40);
    }

    #[test]
    fn matches_bruteforce_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let v: Vec<i32> = (0..30).map(|_| rng.random_range(-70..=-30)).collect();
            let fp = build_fingerprint(&scans_of(&v), 3).unwrap();
            assert_eq!(fp[0].unwrap().dbm(), oracle(&v, 3), "samples {v:?}");
        }
    }

    #[test]
    fn ties_round_toward_negative_infinity() {
        let fp = build_fingerprint(&scans_of(&[-40, -41]), 0).unwrap();
        assert_eq!(fp[0].unwrap().dbm(), -41);
    }

    #[test]
    fn unheard_anchor_stays_unheard() {
        let scans: Vec<RssVector> = (0..5).map(|_| vec![Some(Rssi::new(-50).unwrap()), None]).collect();
        let fp = build_fingerprint(&scans, 1).unwrap();
        assert_eq!(fp[1], None);
    }

    #[test]
    fn errors() {
        assert!(matches!(build_fingerprint(&[], 3), Err(Error::InsufficientData(_))));
        assert!(matches!(
            build_fingerprint(&scans_of(&[-40, -41, -42]), 3),
            Err(Error::InsufficientData(_))
        ));
        let ragged = vec![vec![None], vec![None, None]];
        assert!(matches!(
            build_fingerprint(&ragged, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn anchor(id: u32) -> Anchor {
        Anchor {
            id,
            position: Position::new(id as f64, 0.0),
        }
    }

    #[test]
    fn assemble_single_point() {
        let grid = make_reference_grid(Rect::new(0.0, 0.0, 0.0, 0.0).unwrap(), 1.0).unwrap();
        let map = assemble_radio_map(grid, vec![(1, vec![Some(Rssi::new(-40).unwrap())])], vec![anchor(1)]).unwrap();
        assert_eq!(map.len(), 1);
        assert_eq!(map.anchor_count(), 1);
    }

    #[test]
    fn assemble_rejects_bad_input() {
        let grid = make_reference_grid(Rect::new(0.0, 0.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let v = vec![Some(Rssi::new(-40).unwrap())];
        let dup = assemble_radio_map(grid.clone(), vec![(1, v.clone()), (1, v.clone())], vec![anchor(1)]);
        assert!(matches!(dup, Err(Error::InconsistentMap(_))));
        let missing = assemble_radio_map(grid.clone(), vec![(1, v.clone())], vec![anchor(1)]);
        assert!(matches!(missing, Err(Error::InconsistentMap(_))));
        let dim = assemble_radio_map(
            grid.clone(),
            vec![(1, v.clone()), (2, vec![None, None])],
            vec![anchor(1)],
        );
        assert!(matches!(dim, Err(Error::InconsistentMap(_))));
        let ids = assemble_radio_map(
            grid,
            vec![(1, vec![None, None]), (2, vec![None, None])],
            vec![anchor(1), anchor(1)],
        );
        assert!(matches!(ids, Err(Error::InconsistentMap(_))));
    }

    proptest! {
        #[test]
        fn output_within_retained_range_and_order_free(
            mut v in proptest::collection::vec(-70i32..=-10, 4..40),
            trim in 0usize..4,
            seed in any::<u64>(),
        ) {
            let fp = build_fingerprint(&scans_of(&v), trim).unwrap()[0].unwrap().dbm();
            let lo = *v.iter().min().unwrap();
            let hi = *v.iter().max().unwrap();
            prop_assert!(fp >= lo && fp <= hi);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for k in (1..v.len()).rev() {
                v.swap(k, rng.random_range(0..=k));
            }
            let again = build_fingerprint(&scans_of(&v), trim).unwrap()[0].unwrap().dbm();
            prop_assert_eq!(fp, again);
        }
    }
}
