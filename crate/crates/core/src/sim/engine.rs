//! The event loop: beacons, anchor reception, forwarding to the head anchor,
//! server-side localization and tracking, downlink commands, energy.

use std::collections::BTreeMap;

use rand::Rng;

use crate::energy::{ledger_accrue, EfficiencyReport, EnergyLedger, RadioMode};
use crate::error::{Error, Result};
use crate::geometry::{make_reference_grid, zone_adjacency, Position, Zone};
use crate::localization::{locate, Algorithm, Measurement};
use crate::netproto::{
    allocate_channels, backoff_schedule, evaluate_switch, frame_delivery, transition, ChannelId, ChannelPlan, Frame,
    LinkEvent, LinkMode, MnLinkState, SwitchDecision,
};
use crate::propagation::sample_rss;
use crate::radio_map::{RadioMap, Rssi};
use crate::rng::RngStreams;
use crate::tracking::{maybe_adjust_sounding, receive_period_for_position, TrackState, SPEED_WINDOW};

use super::event::{EventKind, EventQueue, SimTime};
use super::mobility::mobility_position;
use super::report::{PlrStats, SimReport, TrackRow};
use super::scenario::{ChannelMode, MapSource, Scenario};
use super::synth::synthesize_radio_map;

/// Slack after the last possible forward before the server evaluates, s.
const COLLECTION_MARGIN_S: f64 = 0.001;
/// Frames older than this are dropped from the medium, s.
const MEDIUM_MEMORY_S: f64 = 1.0;

/// Offline radio map for a scenario: synthesized from its propagation model or
/// read from disk.
pub fn build_radio_map(scenario: &Scenario) -> Result<RadioMap> {
    let map = match &scenario.map {
        MapSource::Synthesize {
            bounds,
            spacing,
            survey,
        } => {
            let grid = make_reference_grid(*bounds, *spacing)?;
            synthesize_radio_map(
                &grid,
                &scenario.anchors,
                &scenario.propagation,
                survey,
                &RngStreams::new(scenario.seed),
            )?
        }
        MapSource::File(dir) => crate::io::read_radio_map(dir)?,
    };
    for a in &scenario.anchors {
        match map.anchor_index(a.id) {
            Some(j) if map.anchors[j].position == a.position => {}
            _ => {
                return Err(Error::InvalidScenario(format!(
                    "radio map does not match anchor {} of the scenario",
                    a.id
                )))
            }
        }
    }
    Ok(map)
}

/// Runs the scenario to its end and assembles the report. With
/// `compare_baseline` the other channel mode is run too, for its PLR only.
pub fn run_scenario(scenario: &Scenario) -> Result<SimReport> {
    scenario.validate()?;
    let map = build_radio_map(scenario)?;
    let mode = scenario.network.mode;
    let mut report = Sim::new(scenario, &map, mode)?.run()?;
    if scenario.network.compare_baseline {
        let other = match mode {
            ChannelMode::Zoned => ChannelMode::Shared,
            ChannelMode::Shared => ChannelMode::Zoned,
        };
        let second = Sim::new(scenario, &map, other)?.run()?;
        report.plr.extend(second.plr);
    }
    Ok(report)
}

type BeaconKey = (u32, u64);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Command {
    TransmitPeriod(f64),
    ReceivePeriod(f64),
    SwitchChannel(ChannelId),
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    BeaconTx { mn: u32, generation: u64 },
    FrameRx { frame: u64 },
    ForwardTx { anchor: u32, beacon: BeaconKey, rssi: Rssi },
    ServerEval { beacon: BeaconKey },
    CommandRx { mn: u32 },
    MobilityTick { mn: u32 },
}

impl Payload {
    fn kind(&self) -> EventKind {
        match self {
            Payload::BeaconTx { .. } => EventKind::BeaconTx,
            Payload::FrameRx { .. } => EventKind::FrameRx,
            Payload::ForwardTx { .. } => EventKind::ForwardTx,
            Payload::ServerEval { .. } => EventKind::ServerEval,
            Payload::CommandRx { .. } => EventKind::CommandRx,
            Payload::MobilityTick { .. } => EventKind::MobilityTick,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum FrameKind {
    Beacon(BeaconKey),
    Forward { anchor: u32, beacon: BeaconKey, rssi: Rssi },
}

#[derive(Debug)]
struct FrameRecord {
    frame: Frame,
    kind: FrameKind,
}

#[derive(Debug)]
struct BeaconRecord {
    time: SimTime,
    true_position: Position,
    channel: ChannelId,
    /// zone -> anchor -> RSSI that reached the zone's head
    reports: BTreeMap<u32, BTreeMap<u32, Rssi>>,
    eval_scheduled: bool,
}

#[derive(Debug)]
struct MnState {
    link: MnLinkState,
    start: f64,
    transmit_period: f64,
    receive_period: f64,
    last_nominal: Option<SimTime>,
    next_nominal: SimTime,
    generation: u64,
    beacon_seq: u64,
    ledger: EnergyLedger,
    /// Energy is booked up to here; the gap before the next activity is sleep.
    accounted_to: f64,
}

#[derive(Debug)]
struct ServerMn {
    track: TrackState,
    outbox: Vec<Command>,
    switch_target: Option<ChannelId>,
}

struct Sim<'a> {
    sc: &'a Scenario,
    mode: ChannelMode,
    streams: RngStreams,
    algorithm: Algorithm,
    plan: ChannelPlan,
    adjacency: Vec<(u32, u32)>,
    zone_maps: BTreeMap<u32, RadioMap>,
    anchor_zone: BTreeMap<u32, u32>,
    anchor_pos: BTreeMap<u32, Position>,
    /// 1-based slot of each non-head anchor within its zone.
    forward_slot: BTreeMap<u32, usize>,
    interference_range: f64,
    collection_delay: f64,
    end: SimTime,
    queue: EventQueue<Payload>,
    mns: BTreeMap<u32, MnState>,
    server: BTreeMap<u32, ServerMn>,
    an_tx_time: BTreeMap<u32, f64>,
    frames: BTreeMap<u64, FrameRecord>,
    next_frame: u64,
    beacons: BTreeMap<BeaconKey, BeaconRecord>,
    rows: Vec<TrackRow>,
    counts: BTreeMap<String, u64>,
    commands: BTreeMap<String, u64>,
    plr: PlrStats,
}

fn lowest_zone_containing<'z>(zones: &'z [Zone], p: &Position) -> Option<&'z Zone> {
    zones.iter().filter(|z| z.contains(p)).min_by_key(|z| z.id)
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario, map: &RadioMap, mode: ChannelMode) -> Result<Self> {
        let adjacency = zone_adjacency(&sc.zones);
        let plan = match mode {
            ChannelMode::Zoned => allocate_channels(
                &sc.zones,
                &adjacency,
                &sc.network.channels,
                sc.network.reuse_min_distance,
            )?,
            ChannelMode::Shared => {
                let shared = *sc.network.channels.iter().min().expect("validated non-empty");
                ChannelPlan {
                    assignments: sc.zones.iter().map(|z| (z.id, shared)).collect(),
                    reuse_min_distance: 0.0,
                }
            }
        };
        let mut zone_maps = BTreeMap::new();
        let mut anchor_zone = BTreeMap::new();
        let mut forward_slot = BTreeMap::new();
        for z in &sc.zones {
            let mut ids = z.anchor_ids.clone();
            ids.sort_unstable();
            zone_maps.insert(z.id, map.restrict(&ids)?);
            for (i, a) in ids.iter().filter(|a| **a != z.head_anchor_id).enumerate() {
                forward_slot.insert(*a, i + 1);
            }
            for a in ids {
                anchor_zone.insert(a, z.id);
            }
        }
        let net = &sc.network;
        let collection_delay =
            sc.energy.tx_duration + 2.0 * net.backoff_window + net.forward_duration + COLLECTION_MARGIN_S;
        let mut mns = BTreeMap::new();
        let mut server = BTreeMap::new();
        let mut queue = EventQueue::new();
        let streams = RngStreams::new(sc.seed);
        for mn in &sc.mobile_nodes {
            let start = match mn.start_offset {
                Some(s) => s,
                None => streams
                    .stream("start", &[mn.id as u64])
                    .random_range(0.0..sc.tracking.initial_transmit_period),
            };
            mns.insert(
                mn.id,
                MnState {
                    link: MnLinkState::scanning(mn.id),
                    start,
                    transmit_period: sc.tracking.initial_transmit_period,
                    receive_period: sc.tracking.initial_receive_period,
                    last_nominal: None,
                    next_nominal: SimTime::ZERO,
                    generation: 0,
                    beacon_seq: 0,
                    ledger: EnergyLedger::default(),
                    accounted_to: 0.0,
                },
            );
            server.insert(
                mn.id,
                ServerMn {
                    track: TrackState::new(
                        mn.id,
                        sc.tracking.initial_transmit_period,
                        sc.tracking.initial_receive_period,
                    ),
                    outbox: Vec::new(),
                    switch_target: None,
                },
            );
            queue.schedule(
                SimTime::from_secs(start)?,
                Payload::MobilityTick { mn: mn.id },
                "mobility_tick",
            )?;
        }
        Ok(Self {
            sc,
            mode,
            streams,
            algorithm: sc.localization.algorithm(),
            plan,
            adjacency,
            zone_maps,
            anchor_zone,
            anchor_pos: sc.anchors.iter().map(|a| (a.id, a.position)).collect(),
            forward_slot,
            interference_range: sc.interference_range(),
            collection_delay,
            end: SimTime::from_secs(sc.duration)?,
            queue,
            mns,
            server,
            an_tx_time: sc.anchors.iter().map(|a| (a.id, 0.0)).collect(),
            frames: BTreeMap::new(),
            next_frame: 0,
            beacons: BTreeMap::new(),
            rows: Vec::new(),
            counts: EventKind::ALL.iter().map(|k| (k.name().to_string(), 0)).collect(),
            commands: ["receive_period", "switch_channel", "transmit_period"]
                .iter()
                .map(|k| (k.to_string(), 0))
                .collect(),
            plr: PlrStats::default(),
        })
    }

    fn run(mut self) -> Result<SimReport> {
        while let Some(t) = self.queue.peek_time() {
            if t >= self.end {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            let kind = ev.payload.kind();
            let processed = match ev.payload {
                Payload::BeaconTx { mn, generation } => self.on_beacon(ev.time, mn, generation)?,
                Payload::FrameRx { frame } => self.on_frame_end(ev.time, frame)?,
                Payload::ForwardTx { anchor, beacon, rssi } => self.on_forward(ev.time, anchor, beacon, rssi)?,
                Payload::ServerEval { beacon } => self.on_server_eval(ev.time, beacon)?,
                Payload::CommandRx { mn } => self.on_command_window(ev.time, mn)?,
                Payload::MobilityTick { mn } => self.on_mobility_tick(ev.time, mn)?,
            };
            if processed {
                *self.counts.get_mut(kind.name()).expect("all kinds present") += 1;
            }
        }
        self.finish()
    }

    fn schedule(&mut self, at: SimTime, payload: Payload) -> Result<()> {
        let what = payload.kind().name();
        self.queue.schedule(at, payload, what).map(|_| ())
    }

    fn route_position(&self, mn: u32, t: SimTime) -> Result<Position> {
        let node = self.sc.mobile_nodes.iter().find(|m| m.id == mn).expect("known MN");
        let local = (t.secs() - self.mns[&mn].start).max(0.0);
        Ok(mobility_position(&node.route, local)?.0)
    }

    /// Books sleep up to `t`, then `mode` for `duration`, clipped at the end.
    fn spend(&mut self, mn: u32, t: SimTime, mode: RadioMode, duration: f64) -> Result<()> {
        let end = self.sc.duration;
        let model = self.sc.energy;
        let st = self.mns.get_mut(&mn).expect("known MN");
        let from = t.secs().max(st.accounted_to).min(end);
        ledger_accrue(&mut st.ledger, RadioMode::Sleep, from - st.accounted_to, &model)?;
        let busy = duration.min(end - from);
        ledger_accrue(&mut st.ledger, mode, busy, &model)?;
        st.accounted_to = from + busy;
        Ok(())
    }

    fn set_link(&mut self, mn: u32, event: LinkEvent, t: SimTime) -> Result<()> {
        let st = self.mns.get_mut(&mn).expect("known MN");
        st.link = transition(&st.link, &event).map_err(|e| match e {
            Error::InvariantViolation { detail, .. } | Error::ProtocolViolation(detail) => Error::InvariantViolation {
                event: format!("{event:?} for MN {mn} at {t}"),
                detail,
            },
            other => other,
        })?;
        Ok(())
    }

    fn covering_channels(&self, p: &Position) -> Vec<ChannelId> {
        let mut chans: Vec<ChannelId> = self
            .sc
            .zones
            .iter()
            .filter(|z| z.contains(p))
            .filter_map(|z| self.plan.channel_of(z.id))
            .collect();
        chans.sort_unstable();
        chans.dedup();
        chans
    }

    fn on_mobility_tick(&mut self, t: SimTime, mn: u32) -> Result<bool> {
        if self.mns[&mn].link.mode != LinkMode::Scanning {
            return Ok(true);
        }
        let p = self.route_position(mn, t)?;
        let covering = self.covering_channels(&p);
        // one listen per channel tried
        let all = ChannelId::mn_facing_all();
        let tried = covering
            .first()
            .map(|c| all.iter().position(|x| x == c).unwrap_or(0) + 1)
            .unwrap_or(all.len());
        self.spend(mn, t, RadioMode::Receive, tried as f64 * self.sc.tracking.rx_window)?;
        self.set_link(mn, LinkEvent::Scan(covering), t)?;
        if self.mns[&mn].link.mode == LinkMode::Associated {
            let st = self.mns.get_mut(&mn).expect("known MN");
            st.next_nominal = t;
            st.generation += 1;
            let generation = st.generation;
            let first_window = t.after(st.receive_period / 2.0)?;
            self.schedule(t, Payload::BeaconTx { mn, generation })?;
            self.schedule(first_window, Payload::CommandRx { mn })?;
        } else {
            let retry = t.after(self.sc.tracking.scan_retry)?;
            self.schedule(retry, Payload::MobilityTick { mn })?;
        }
        Ok(true)
    }

    fn on_beacon(&mut self, t: SimTime, mn: u32, generation: u64) -> Result<bool> {
        if self.mns[&mn].generation != generation {
            return Ok(false);
        }
        if self.mns[&mn].link.mode == LinkMode::Switching {
            // the first beacon on the new channel re-associates
            self.set_link(mn, LinkEvent::SwitchComplete, t)?;
        }
        let channel = self.mns[&mn]
            .link
            .current_channel
            .ok_or_else(|| Error::InvariantViolation {
                event: format!("beacon_tx for MN {mn} at {t}"),
                detail: "beacon without a channel".into(),
            })?;
        let tx = self.sc.energy.tx_duration;
        self.spend(mn, t, RadioMode::Transmit, tx)?;
        let position = self.route_position(mn, t)?;

        let st = self.mns.get_mut(&mn).expect("known MN");
        let seq = st.beacon_seq;
        st.beacon_seq += 1;
        st.last_nominal = Some(st.next_nominal);
        st.next_nominal = st.next_nominal.after(st.transmit_period)?;
        let jitter = self.sc.network.beacon_jitter;
        let delay = if jitter > 0.0 {
            self.streams
                .stream("jitter", &[mn as u64, seq + 1])
                .random_range(0.0..jitter)
        } else {
            0.0
        };
        let next = st.next_nominal.after(delay)?;

        let key = (mn, seq);
        if t.secs() + self.collection_delay < self.sc.duration {
            self.plr.sent += 1;
        }
        let receivers = self
            .sc
            .anchors
            .iter()
            .filter(|a| self.plan.channel_of(self.anchor_zone[&a.id]) == Some(channel))
            .map(|a| (a.id, a.position))
            .collect();
        self.beacons.insert(
            key,
            BeaconRecord {
                time: t,
                true_position: position,
                channel,
                reports: BTreeMap::new(),
                eval_scheduled: false,
            },
        );
        self.emit_frame(
            t,
            Frame {
                channel,
                start: t.secs(),
                duration: tx,
                tx_position: position,
                receivers,
            },
            FrameKind::Beacon(key),
        )?;
        self.schedule(next, Payload::BeaconTx { mn, generation })?;
        Ok(true)
    }

    fn emit_frame(&mut self, t: SimTime, frame: Frame, kind: FrameKind) -> Result<()> {
        let id = self.next_frame;
        self.next_frame += 1;
        let end = t.after(frame.duration)?;
        self.frames.insert(id, FrameRecord { frame, kind });
        self.schedule(end, Payload::FrameRx { frame: id })
    }

    fn on_frame_end(&mut self, t: SimTime, id: u64) -> Result<bool> {
        let horizon = t.secs() - MEDIUM_MEMORY_S;
        self.frames.retain(|_, f| f.frame.end() >= horizon);
        let rec = &self.frames[&id];
        let delivered = frame_delivery(
            &rec.frame,
            self.frames.values().map(|r| &r.frame),
            self.interference_range,
        );
        let receivers: Vec<(u32, bool)> = rec
            .frame
            .receivers
            .iter()
            .zip(delivered)
            .map(|((a, _), ok)| (*a, ok))
            .collect();
        let tx_position = rec.frame.tx_position;
        match rec.kind {
            FrameKind::Beacon(key) => {
                for (anchor, ok) in receivers {
                    if !ok {
                        continue;
                    }
                    let mut rng = self.streams.stream("rss", &[key.0 as u64, key.1, anchor as u64]);
                    let Some(rssi) = sample_rss(&self.sc.propagation, tx_position, self.anchor_pos[&anchor], &mut rng)
                    else {
                        continue;
                    };
                    let zone = self.anchor_zone[&anchor];
                    let head = self.sc.zone(zone).expect("zone of anchor").head_anchor_id;
                    if anchor == head {
                        self.add_report(t, key, zone, anchor, rssi)?;
                    } else {
                        let delay = self.forward_delay(zone, anchor, key)?;
                        self.schedule(
                            t.after(delay)?,
                            Payload::ForwardTx {
                                anchor,
                                beacon: key,
                                rssi,
                            },
                        )?;
                    }
                }
            }
            FrameKind::Forward { anchor, beacon, rssi } => {
                if receivers.first().is_some_and(|(_, ok)| *ok) {
                    let zone = self.anchor_zone[&anchor];
                    self.add_report(t, beacon, zone, anchor, rssi)?;
                }
            }
        }
        Ok(true)
    }

    fn forward_delay(&self, zone: u32, anchor: u32, key: BeaconKey) -> Result<f64> {
        let window = self.sc.network.backoff_window;
        match self.mode {
            ChannelMode::Zoned => {
                let z = self.sc.zone(zone).expect("zone");
                let slots = z.anchor_ids.len() - 1;
                let mut rng = self.streams.stream("backoff", &[zone as u64, key.0 as u64, key.1]);
                let schedule = backoff_schedule(slots, window, self.sc.network.forward_duration, &mut rng)?;
                Ok(schedule.start(self.forward_slot[&anchor]))
            }
            ChannelMode::Shared => Ok(self
                .streams
                .stream("forward_delay", &[anchor as u64, key.0 as u64, key.1])
                .random_range(0.0..window)),
        }
    }

    fn on_forward(&mut self, t: SimTime, anchor: u32, beacon: BeaconKey, rssi: Rssi) -> Result<bool> {
        let zone = self.anchor_zone[&anchor];
        let head = self.sc.zone(zone).expect("zone").head_anchor_id;
        let channel = self.plan.channel_of(zone).expect("planned zone");
        let duration = self.sc.network.forward_duration;
        *self.an_tx_time.get_mut(&anchor).expect("anchor") += duration;
        self.emit_frame(
            t,
            Frame {
                channel,
                start: t.secs(),
                duration,
                tx_position: self.anchor_pos[&anchor],
                receivers: vec![(head, self.anchor_pos[&head])],
            },
            FrameKind::Forward { anchor, beacon, rssi },
        )?;
        Ok(true)
    }

    fn add_report(&mut self, t: SimTime, key: BeaconKey, zone: u32, anchor: u32, rssi: Rssi) -> Result<()> {
        let min_reports = self.sc.network.min_reports;
        let delay = self.collection_delay;
        let Some(rec) = self.beacons.get_mut(&key) else {
            return Ok(());
        };
        let reports = rec.reports.entry(zone).or_default();
        reports.insert(anchor, rssi);
        if !rec.eval_scheduled && reports.len() >= min_reports {
            rec.eval_scheduled = true;
            let at = rec.time.after(delay)?.max(t);
            self.schedule(at, Payload::ServerEval { beacon: key })?;
        }
        Ok(())
    }

    fn on_server_eval(&mut self, t: SimTime, key: BeaconKey) -> Result<bool> {
        let rec = self.beacons.remove(&key).ok_or_else(|| Error::InvariantViolation {
            event: format!("server_eval for MN {} beacon {} at {t}", key.0, key.1),
            detail: "no collection record".into(),
        })?;
        // drop records of beacons that never reached enough anchors
        let cutoff = rec.time;
        self.beacons
            .retain(|k, r| k.0 != key.0 || r.time > cutoff || r.eval_scheduled);

        let (zone_id, reports) = rec
            .reports
            .iter()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
            .map(|(z, r)| (*z, r.clone()))
            .expect("evaluation needs reports");
        self.plr.delivered += 1;
        let mn = key.0;
        let zone_map = &self.zone_maps[&zone_id];
        let rss: Vec<Option<Rssi>> = zone_map.anchors.iter().map(|a| reports.get(&a.id).copied()).collect();
        let beacon_time = rec.time.secs();
        let measurement = Measurement::new(mn, rss.clone(), beacon_time)?;
        let estimate = locate(zone_map, &measurement, &self.algorithm)?.estimate;
        self.rows.push(TrackRow {
            timestamp: beacon_time,
            mn_id: mn,
            true_position: rec.true_position,
            estimate,
            error: rec.true_position.distance_to(&estimate),
        });

        // backhaul hop from the head anchor
        let head = self.sc.zone(zone_id).expect("zone").head_anchor_id;
        *self.an_tx_time.get_mut(&head).expect("anchor") += self.sc.network.forward_duration;

        let tracking = &self.sc.tracking;
        let srv = self.server.get_mut(&mn).expect("known MN");
        srv.track.push(beacon_time, estimate)?;
        if tracking.adaptive_sounding {
            if let Some(p) = maybe_adjust_sounding(&mut srv.track, tracking.required_consecutive) {
                srv.outbox.push(Command::TransmitPeriod(p));
            }
        }
        if tracking.adaptive_receive {
            if let Some(z) = lowest_zone_containing(&self.sc.zones, &estimate) {
                let rp = receive_period_for_position(&estimate, z, &tracking.receive)?;
                if rp != srv.track.receive_period {
                    srv.track.receive_period = rp;
                    srv.outbox.push(Command::ReceivePeriod(rp));
                }
            }
        }
        if srv.switch_target == Some(rec.channel) {
            srv.switch_target = None;
        }
        if self.mode == ChannelMode::Zoned && srv.switch_target.is_none() {
            let history = srv.track.recent_positions(SPEED_WINDOW);
            if history.len() >= 2 {
                let decision = evaluate_switch(
                    &rss,
                    &self.sc.network.switch,
                    &history,
                    zone_id,
                    &self.sc.zones,
                    &self.adjacency,
                    &self.plan,
                )?;
                match decision {
                    SwitchDecision::Switch { channel, .. } if channel != rec.channel => {
                        srv.switch_target = Some(channel);
                        srv.outbox.push(Command::SwitchChannel(channel));
                    }
                    SwitchDecision::Isolated => {
                        *self.commands.entry("isolated".into()).or_default() += 1;
                    }
                    _ => {}
                }
            }
        }
        Ok(true)
    }

    fn on_command_window(&mut self, t: SimTime, mn: u32) -> Result<bool> {
        let window = self.sc.tracking.rx_window;
        self.spend(mn, t, RadioMode::Receive, window)?;
        let inbox = std::mem::take(&mut self.server.get_mut(&mn).expect("known MN").outbox);
        for cmd in inbox {
            match cmd {
                Command::TransmitPeriod(p) => {
                    *self.commands.get_mut("transmit_period").expect("key") += 1;
                    let st = self.mns.get_mut(&mn).expect("known MN");
                    st.transmit_period = p;
                    if let Some(last) = st.last_nominal {
                        st.generation += 1;
                        st.next_nominal = last.after(p)?.max(t);
                        let (at, generation) = (st.next_nominal, st.generation);
                        self.schedule(at, Payload::BeaconTx { mn, generation })?;
                    }
                }
                Command::ReceivePeriod(p) => {
                    *self.commands.get_mut("receive_period").expect("key") += 1;
                    self.mns.get_mut(&mn).expect("known MN").receive_period = p;
                }
                Command::SwitchChannel(ch) => {
                    *self.commands.get_mut("switch_channel").expect("key") += 1;
                    if self.mns[&mn].link.mode == LinkMode::Associated {
                        self.set_link(mn, LinkEvent::SwitchCommand(ch), t)?;
                    }
                }
            }
        }
        let next = t.after(self.mns[&mn].receive_period)?;
        self.schedule(next, Payload::CommandRx { mn })?;
        Ok(true)
    }

    fn finish(mut self) -> Result<SimReport> {
        let duration = self.sc.duration;
        let end = self.end;
        let ids: Vec<u32> = self.mns.keys().copied().collect();
        for mn in ids {
            self.spend(mn, end, RadioMode::Sleep, 0.0)?;
        }
        let model = self.sc.energy;
        let mut an_energy = BTreeMap::new();
        for (a, tx) in &self.an_tx_time {
            let tx = tx.min(duration);
            let mut l = EnergyLedger::default();
            ledger_accrue(&mut l, RadioMode::Transmit, tx, &model)?;
            ledger_accrue(&mut l, RadioMode::Receive, duration - tx, &model)?;
            an_energy.insert(*a, l);
        }
        let mn_energy: BTreeMap<u32, EnergyLedger> = self.mns.iter().map(|(id, s)| (*id, s.ledger)).collect();
        let row_zones = self
            .rows
            .iter()
            .map(|r| lowest_zone_containing(&self.sc.zones, &r.true_position).map(|z| z.id))
            .collect();

        let mut report = SimReport {
            scenario: self.sc.name.clone(),
            seed: self.sc.seed,
            duration,
            algorithm: self.algorithm.name().to_string(),
            variant: self.mode.variant().to_string(),
            track: self.rows,
            row_zones,
            plr: BTreeMap::from([(self.mode.variant().to_string(), self.plr)]),
            mn_energy,
            an_energy,
            efficiency: None,
            event_counts: self.counts,
            commands: self.commands,
            channel_plan: self.plan.assignments.iter().map(|(z, c)| (*z, c.value())).collect(),
        };
        if let (Some(err), Some(energy)) = (report.overall_error(), report.mean_mn_energy()) {
            report.efficiency = EfficiencyReport::new(err.mean, energy).ok();
        }
        Ok(report)
    }
}
