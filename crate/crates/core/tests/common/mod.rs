//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use wsnloc_core::geometry::{GridPoint, Position, ReferenceGrid};
use wsnloc_core::localization::AwknnParams;
use wsnloc_core::radio_map::{assemble_radio_map, Anchor, RadioMap, RssVector, Rssi};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

/// Random map with `l` references at arbitrary positions and `n` anchors.
/// About one entry in five is unheard.
pub fn random_map<R: Rng>(rng: &mut R, l: usize, n: usize) -> RadioMap {
    let points = (0..l)
        .map(|k| GridPoint {
            index: k as u32 + 1,
            position: Position::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)),
        })
        .collect();
    let grid = ReferenceGrid::from_points(points, 1.0).unwrap();
    let anchors = (0..n)
        .map(|k| Anchor {
            id: 10 + k as u32,
            position: Position::new(k as f64, 0.0),
        })
        .collect();
    let per_point = (0..l).map(|k| (k as u32 + 1, random_rss(rng, n))).collect();
    assemble_radio_map(grid, per_point, anchors).unwrap()
}

/// Random RSS vector with at least one heard entry.
pub fn random_rss<R: Rng>(rng: &mut R, n: usize) -> RssVector {
    loop {
        let v: RssVector = (0..n)
            .map(|_| (rng.random_range(0..5) != 0).then(|| Rssi::new(rng.random_range(-70..=-10)).unwrap()))
            .collect();
        if v.iter().any(Option::is_some) {
            return v;
        }
    }
}

fn dbm(v: Option<Rssi>) -> f64 {
    match v {
        Some(r) => r.dbm() as f64,
        None => -70.0,
    }
}

pub fn oracle_distance(a: &[Option<Rssi>], b: &[Option<Rssi>]) -> f64 {
    let mut sq = 0.0;
    for i in 0..a.len() {
        sq += (dbm(a[i]) - dbm(b[i])).powi(2);
    }
    sq.sqrt()
}

/// Reference order: repeated selection of the smallest (distance, grid index).
pub fn oracle_order(map: &RadioMap, q: &[Option<Rssi>]) -> Vec<(usize, f64)> {
    let mut left: Vec<(usize, f64)> = map
        .fingerprints
        .iter()
        .enumerate()
        .map(|(i, f)| (i, oracle_distance(&f.rss, q)))
        .collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for j in 1..left.len() {
            let (a, b) = (left[j], left[best]);
            let idx = |i: usize| map.fingerprints[i].grid_index;
            if a.1 < b.1 || (a.1 == b.1 && idx(a.0) < idx(b.0)) {
                best = j;
            }
        }
        out.push(left.remove(best));
    }
    out
}

fn weighted(map: &RadioMap, picked: &[(usize, f64)], w: &[f64]) -> Position {
    let total: f64 = w.iter().sum();
    let (mut x, mut y) = (0.0, 0.0);
    for ((i, _), wi) in picked.iter().zip(w) {
        x += wi / total * map.fingerprints[*i].location.x;
        y += wi / total * map.fingerprints[*i].location.y;
    }
    Position::new(x, y)
}

pub fn oracle_knn(map: &RadioMap, q: &[Option<Rssi>], k: usize) -> Position {
    let order = oracle_order(map, q);
    weighted(map, &order[..k], &vec![1.0; k])
}

fn inverse_weighted(map: &RadioMap, picked: &[(usize, f64)]) -> Position {
    if picked[0].1 < 1e-6 {
        return map.fingerprints[picked[0].0].location;
    }
    let w: Vec<f64> = picked.iter().map(|p| 1.0 / p.1).collect();
    weighted(map, picked, &w)
}

pub fn oracle_wknn(map: &RadioMap, q: &[Option<Rssi>], k: usize) -> Position {
    let order = oracle_order(map, q);
    inverse_weighted(map, &order[..k])
}

/// Threshold walk: raise the threshold while fewer than four references fall
/// under it or their spread ratio is below `theta_s`, lower it while the ratio
/// exceeds `theta_l`, and stop on convergence, exhaustion, a revisited
/// threshold or the iteration cap.
pub fn oracle_awknn_count(d: &[f64], p: &AwknnParams) -> usize {
    let l = d.len();
    let mut level: i64 = 0;
    let mut seen: Vec<i64> = Vec::new();
    let mut keep = 4;
    for _ in 0..p.max_iters {
        let gamma = d[0] + p.gamma0_offset + level as f64 * p.delta;
        let tol = 1e-9 * gamma.abs().max(1.0);
        let n = d.iter().filter(|&&x| x <= gamma + tol).count();
        if n < 4 {
            level += 1;
            continue;
        }
        keep = n;
        if seen.contains(&level) {
            break;
        }
        seen.push(level);
        let ratio = d[n - 1] / d[0].max(1e-6);
        if ratio > p.theta_l {
            level -= 1;
        } else if ratio < p.theta_s && n < l {
            level += 1;
        } else {
            break;
        }
    }
    keep
}

pub fn oracle_awknn(map: &RadioMap, q: &[Option<Rssi>], p: &AwknnParams) -> Position {
    let order = oracle_order(map, q);
    if order.len() < 4 {
        return inverse_weighted(map, &order);
    }
    let d: Vec<f64> = order.iter().map(|o| o.1).collect();
    inverse_weighted(map, &order[..oracle_awknn_count(&d, p)])
}
