//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsnloc_core::energy::{localization_efficiency, sounding_energy, EnergyModel};
use wsnloc_core::geometry::Position;
use wsnloc_core::io::{parse_scenario_file, write_report};
use wsnloc_core::localization::*;
use wsnloc_core::netproto::{backoff_schedule, transition, ChannelId, LinkEvent, LinkMode, MnLinkState};
use wsnloc_core::rng::RngStreams;
use wsnloc_core::sim::{build_radio_map, run_scenario, synthesize_query, MapSource, Scenario};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(name: &str) -> Result<Scenario, String> {
    parse_scenario_file(&scenario_path(name)).map_err(|e| format!("{name}: {e}"))
}

/// Mean errors of KNN(3), WKNN(3) and AWKNN over `n` uniform queries inside
/// the scenario's reference bounds, every anchor listening.
fn mean_errors(sc: &Scenario, n: usize) -> Result<[f64; 3], String> {
    let map = build_radio_map(sc).map_err(|e| e.to_string())?;
    let MapSource::Synthesize { bounds, .. } = sc.map else {
        return Err("expected a synthesized map".into());
    };
    let algs = [
        Algorithm::Knn { k: 3 },
        Algorithm::Wknn { k: 3 },
        Algorithm::Awknn(AwknnParams::default()),
    ];
    let mut rng = RngStreams::new(sc.seed).stream("query", &[]);
    let mut sum = [0.0; 3];
    let mut used = 0;
    while used < n {
        let x = bounds.min_x + rng.random::<f64>() * bounds.width();
        let y = bounds.min_y + rng.random::<f64>() * bounds.height();
        let at = Position::new(x, y);
        let Some(q) = synthesize_query(&sc.propagation, &sc.anchors, at, 1, used as f64, &mut rng) else {
            continue;
        };
        for (s, alg) in sum.iter_mut().zip(&algs) {
            *s += locate(&map, &q, alg)
                .map_err(|e| e.to_string())?
                .estimate
                .distance_to(&at);
        }
        used += 1;
    }
    Ok(sum.map(|s| s / n as f64))
}

fn c1_algorithm_ordering() -> Outcome {
    let start = Instant::now();
    let [knn, wknn, awknn] = mean_errors(&load("scenario_a")?, 2000)?;
    let [_, _, outdoor] = mean_errors(&load("scenario_b")?, 2000)?;
    let elapsed = start.elapsed().as_secs_f64();
    let gain = 1.0 - awknn / knn;
    let detail = format!(
        "indoor KNN {knn:.3} WKNN {wknn:.3} AWKNN {awknn:.3} m (AWKNN {:.1}% below KNN), outdoor AWKNN {outdoor:.3} m, {elapsed:.1} s",
        100.0 * gain
    );
    ensure(awknn <= wknn && wknn <= knn, || format!("ordering broken: {detail}"))?;
    ensure(gain >= 0.03, || format!("gain under 3%: {detail}"))?;
    ensure(awknn < 2.0 && outdoor < 4.5, || format!("error too large: {detail}"))?;
    ensure(elapsed < 60.0, || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn c2_sounding_energy() -> Outcome {
    let m = EnergyModel::default();
    let e1 = sounding_energy(&m, 1.0).map_err(|e| e.to_string())? * 1e6;
    let e2 = sounding_energy(&m, 2.0).map_err(|e| e.to_string())? * 1e6;
    let detail = format!("E_s(1 s) = {e1:.4} uJ, E_s(2 s) = {e2:.4} uJ");
    ensure((e1 - 366.3).abs() <= 0.05 && (e2 - 369.6).abs() <= 0.05, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn c3_adaptive_saving() -> Outcome {
    let m = EnergyModel::default();
    let e = |t| sounding_energy(&m, t).map_err(|e| e.to_string());
    let arithmetic = (60.0 * e(1.0)? + 20.0 * e(2.0)?) / (100.0 * e(1.0)?);

    let mut sc = load("speed_drop")?;
    let adaptive = run_scenario(&sc).map_err(|e| e.to_string())?;
    sc.tracking.adaptive_sounding = false;
    let fixed = run_scenario(&sc).map_err(|e| e.to_string())?;
    let sounding = |r: &wsnloc_core::SimReport| {
        let l = &r.mn_energy[&1];
        l.transmit_j + l.sleep_j
    };
    let simulated = sounding(&adaptive) / sounding(&fixed);
    let beacons = |r: &wsnloc_core::SimReport| r.event_counts["beacon_tx"];
    let detail = format!(
        "arithmetic ratio {arithmetic:.4}, simulated ratio {simulated:.4} ({} vs {} beacons)",
        beacons(&adaptive),
        beacons(&fixed)
    );
    ensure((arithmetic - 0.802).abs() <= 0.01, || detail.clone())?;
    ensure((simulated - 0.802).abs() <= 0.03, || detail.clone())?;
    Ok(detail)
}

fn c4_efficiency() -> Outcome {
    let a = localization_efficiency(1.39, 0.366).map_err(|e| e.to_string())?;
    let b = localization_efficiency(1.43, 0.2936).map_err(|e| e.to_string())?;
    let detail = format!("eta {a:.4} -> {b:.4}");
    ensure((a - 1.414).abs() <= 0.005 && (b - 1.666).abs() <= 0.005, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn c5_plr_ordering() -> Outcome {
    let base = load("contention")?;
    let mut worst: f64 = 0.0;
    let (mut z_sum, mut b_sum) = (0.0, 0.0);
    for seed in 1..=20 {
        let mut sc = base.clone();
        sc.seed = seed;
        sc.network.compare_baseline = true;
        let r = run_scenario(&sc).map_err(|e| e.to_string())?;
        let (z, b) = (r.plr["elot"].plr(), r.plr["baseline"].plr());
        ensure(z < 0.5 * b, || {
            format!("seed {seed}: zoned PLR {z:.4} vs shared {b:.4}")
        })?;
        worst = worst.max(z / b);
        z_sum += z;
        b_sum += b;
    }
    Ok(format!(
        "20 seeds, mean PLR zoned {:.2}% vs shared {:.2}%, worst ratio {worst:.3}",
        5.0 * z_sum,
        5.0 * b_sum
    ))
}

fn c6_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = AwknnParams::default();
    let mut cases = 0;
    for l in 1..=8 {
        for _ in 0..500 {
            let n = rng.random_range(1..=6);
            let map = random_map(&mut rng, l, n);
            let q = Measurement::new(1, random_rss(&mut rng, n), 0.0).map_err(|e| e.to_string())?;
            let k = rng.random_range(1..=l);
            for f in &map.fingerprints {
                let d = rss_distance(&f.rss, &q.rss).map_err(|e| e.to_string())?;
                ensure((d - oracle_distance(&f.rss, &q.rss)).abs() <= 1e-9, || {
                    format!("distance mismatch, L={l}")
                })?;
            }
            let pairs = [
                (knn_estimate(&map, &q, k), oracle_knn(&map, &q.rss, k)),
                (wknn_estimate(&map, &q, k), oracle_wknn(&map, &q.rss, k)),
                (awknn_estimate(&map, &q, &p), oracle_awknn(&map, &q.rss, &p)),
            ];
            for (got, want) in pairs {
                let got = got.map_err(|e| e.to_string())?.estimate;
                ensure((got.x - want.x).abs() <= 1e-9 && (got.y - want.y).abs() <= 1e-9, || {
                    format!("estimate mismatch, L={l}: {got:?} vs {want:?}")
                })?;
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} random maps with L <= 8, three matchers each"))
}

fn c7_determinism() -> Outcome {
    let names = ["minimal", "scenario_a", "scenario_b", "speed_drop", "contention"];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in names {
        let sc = load(name)?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{name}_{run}"));
            let r = run_scenario(&sc).map_err(|e| e.to_string())?;
            write_report(&r, &dir).map_err(|e| e.to_string())?;
            let read = |f: &str| fs::read(dir.join(f)).map_err(|e| e.to_string());
            outputs.push((read("track.csv")?, read("summary.toml")?));
        }
        ensure(outputs[0] == outputs[1], || {
            format!("{name}: outputs differ between runs")
        })?;
    }
    Ok(format!(
        "{} corpus scenarios byte-identical across two runs",
        names.len()
    ))
}

/// Every event sequence of length <= `depth` from a scanning node.
fn model_check(depth: usize) -> Result<(usize, usize), String> {
    let ch = |v| ChannelId::new(v).expect("channel");
    let alphabet = vec![
        LinkEvent::Scan(vec![]),
        LinkEvent::Scan(vec![ch(12)]),
        LinkEvent::Scan(vec![ch(15), ch(12)]),
        LinkEvent::SwitchCommand(ch(12)),
        LinkEvent::SwitchCommand(ch(15)),
        LinkEvent::SwitchCommand(ChannelId::BACKHAUL),
        LinkEvent::SwitchComplete,
        LinkEvent::LinkLost,
    ];
    let mut seen = BTreeSet::new();
    let mut sequences = 0;
    let mut frontier = vec![MnLinkState::scanning(1)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for state in &frontier {
            for event in &alphabet {
                sequences += 1;
                let after = transition(state, event).unwrap_or(*state);
                after
                    .check_invariants()
                    .map_err(|e| format!("{state:?} --{event:?}--> {e}"))?;
                let ok = match after.mode {
                    LinkMode::Scanning => after.current_channel.is_none() && after.pending_channel.is_none(),
                    LinkMode::Associated => after.current_channel.is_some() && after.pending_channel.is_none(),
                    LinkMode::Switching => {
                        after.current_channel.is_some() && after.pending_channel != after.current_channel
                    }
                };
                ensure(ok, || format!("{state:?} --{event:?}--> inconsistent {after:?}"))?;
                seen.insert(format!("{after:?}"));
                next.push(after);
            }
        }
        frontier = next;
    }
    Ok((sequences, seen.len()))
}

fn c8_protocol_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws = 100_000;
    for _ in 0..draws {
        let slots = rng.random_range(1..=8);
        let s = backoff_schedule(slots, 0.1, 0.002, &mut rng).map_err(|e| e.to_string())?;
        for i in 1..=slots {
            let (lo, hi) = s.slot_interval(i);
            let (a, b) = s.busy_interval(i);
            ensure(lo <= a && b <= hi, || format!("frame {i} leaves its slot: {s:?}"))?;
            if i < slots {
                ensure(b <= s.busy_interval(i + 1).0, || {
                    format!("frames {i} and {} overlap: {s:?}", i + 1)
                })?;
            }
        }
    }
    let (sequences, states) = model_check(6)?;
    Ok(format!(
        "{draws} backoff draws without overlap; {sequences} transitions over all sequences of length <= 6, {states} distinct states"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("algorithm ordering", c1_algorithm_ordering),
        ("sounding energy per cycle", c2_sounding_energy),
        ("adaptive sounding saving", c3_adaptive_saving),
        ("localization efficiency", c4_efficiency),
        ("PLR ordering", c5_plr_ordering),
        ("oracle equivalence", c6_oracle_equivalence),
        ("determinism", c7_determinism),
        ("protocol invariants", c8_protocol_invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
