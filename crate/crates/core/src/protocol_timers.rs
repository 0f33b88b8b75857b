//! Discrete-event runs of the timer-controlled LTE-M procedures whose
//! behaviour changes under satellite round-trip times: random access
//! (RAR window and contention resolution), scheduling requests, and RLC
//! t-Reordering.
//!
//! Messages take exactly `rtt / 2` per direction. Runs are single-threaded
//! and deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// RLC PDUs are sent back to back, one per subframe.
const PDU_SPACING_MS: f64 = 1.0;

/// Periodic DRX on-durations gating downlink reception.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrxConfig {
    pub cycle_ms: f64,
    pub on_duration_ms: f64,
    #[serde(default)]
    pub offset_ms: f64,
}

impl DrxConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("drx.cycle_ms", self.cycle_ms)?;
        require_positive("drx.on_duration_ms", self.on_duration_ms)?;
        require_non_negative("drx.offset_ms", self.offset_ms)?;
        if self.on_duration_ms > self.cycle_ms {
            return Err(Error::invalid("drx.on_duration_ms", "exceeds the cycle"));
        }
        Ok(())
    }

    /// Whether the UE monitors the downlink at `t_ms`.
    pub fn is_awake(&self, t_ms: f64) -> bool {
        (t_ms - self.offset_ms).rem_euclid(self.cycle_ms) < self.on_duration_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimerConfig {
    pub ra_response_window_ms: f64,
    pub mac_contention_resolution_ms: f64,
    pub sr_prohibit_periods: u32,
    pub sr_period_ms: f64,
    pub t_reordering_ms: f64,
    /// Delay the start of the RAR window and contention-resolution timer
    /// by one RTT.
    #[serde(default)]
    pub rtt_offset_enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drx: Option<DrxConfig>,
}

impl TimerConfig {
    /// Legacy values for tests and the default scenario. The 10 ms RAR
    /// window and 64 ms contention-resolution timer are fixtures; 7 SR
    /// periods and 200 ms t-Reordering are the legacy maximum and
    /// second-largest values.
    pub fn legacy_fixture() -> Self {
        Self {
            ra_response_window_ms: 10.0,
            mac_contention_resolution_ms: 64.0,
            sr_prohibit_periods: 7,
            sr_period_ms: 10.0,
            t_reordering_ms: 200.0,
            rtt_offset_enabled: false,
            drx: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("ra_response_window_ms", self.ra_response_window_ms)?;
        require_positive("mac_contention_resolution_ms", self.mac_contention_resolution_ms)?;
        require_positive("sr_period_ms", self.sr_period_ms)?;
        require_positive("t_reordering_ms", self.t_reordering_ms)?;
        if self.sr_prohibit_periods == 0 {
            return Err(Error::invalid("sr_prohibit_periods", "must be >= 1"));
        }
        if let Some(drx) = &self.drx {
            drx.validate()?;
        }
        Ok(())
    }

    pub fn sr_prohibit_ms(&self) -> f64 {
        f64::from(self.sr_prohibit_periods) * self.sr_period_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Ue,
    Enb,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::Ue => "ue",
            Actor::Enb => "enb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub t_ms: f64,
    pub actor: Actor,
    pub event: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    TimerExpiry,
    MaxAttempts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTrace {
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
}

impl EventTrace {
    /// Timestamps never decrease and every `*_start` has a later matching
    /// `*_stop` or `*_expiry`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if let Some(w) = self.events.windows(2).find(|w| w[1].t_ms < w[0].t_ms) {
            return Err(format!("time goes backwards: {:?} -> {:?}", w[0], w[1]));
        }
        let mut open: Vec<(Actor, &str)> = Vec::new();
        for e in &self.events {
            if let Some(name) = e.event.strip_suffix("_start") {
                open.push((e.actor, name));
            } else if let Some(name) = e
                .event
                .strip_suffix("_stop")
                .or_else(|| e.event.strip_suffix("_expiry"))
            {
                match open.iter().position(|&(a, n)| a == e.actor && n == name) {
                    Some(i) => {
                        open.remove(i);
                    }
                    None => return Err(format!("{} closes a timer that is not running", e.event)),
                }
            }
        }
        match open.first() {
            Some((_, n)) => Err(format!("timer {n} never stopped")),
            None => Ok(()),
        }
    }
}

/// Ties at the same instant resolve by `rank`, then insertion order.
struct Scheduled<E> {
    t_ms: f64,
    rank: u8,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t_ms
            .total_cmp(&self.t_ms)
            .then(other.rank.cmp(&self.rank))
            .then(other.seq.cmp(&self.seq))
    }
}

struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    seq: u64,
    trace: Vec<TraceEvent>,
}

impl<E> EventQueue<E> {
    fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
            trace: Vec::new(),
        }
    }

    fn schedule(&mut self, t_ms: f64, rank: u8, event: E) {
        self.seq += 1;
        self.heap.push(Scheduled {
            t_ms,
            rank,
            seq: self.seq,
            event,
        });
    }

    fn pop(&mut self) -> Option<(f64, E)> {
        self.heap.pop().map(|s| (s.t_ms, s.event))
    }

    fn log(&mut self, t_ms: f64, actor: Actor, event: impl Into<String>) {
        self.trace.push(TraceEvent {
            t_ms,
            actor,
            event: event.into(),
        });
    }
}

// Tie ranks: timers open before messages land, and messages land before
// timers expire, so an arrival exactly at a window edge counts as inside.
const RANK_OPEN: u8 = 0;
const RANK_ARRIVAL: u8 = 1;
const RANK_EXPIRY: u8 = 2;

fn check_rtt(rtt_ms: f64) -> Result<()> {
    require_non_negative("rtt_ms", rtt_ms)
}

#[derive(Debug, Clone, Copy)]
enum RaEvent {
    SendPreamble(u32),
    PreambleAtEnb(u32),
    WindowOpen(u32),
    RarArrives(u32),
    WindowExpires(u32),
    Msg3AtEnb(u32),
    CrOpen(u32),
    Msg4Arrives(u32),
    CrExpires(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RaPhase {
    AwaitWindow(u32),
    InWindow(u32),
    AwaitCr(u32),
    InCr(u32),
    Done,
}

/// Preamble, RAR window, Msg3 and contention resolution for one UE.
///
/// Each failed attempt (window or contention-resolution expiry) triggers a
/// new preamble immediately, up to `preamble_attempts_max`. A run with a
/// single allowed attempt ends in [`Outcome::TimerExpiry`]; exhausting
/// several ends in [`Outcome::MaxAttempts`].
pub fn run_random_access(cfg: &TimerConfig, rtt_ms: f64, preamble_attempts_max: u32) -> Result<EventTrace> {
    cfg.validate()?;
    check_rtt(rtt_ms)?;
    if preamble_attempts_max == 0 {
        return Err(Error::invalid("preamble_attempts_max", "must be >= 1"));
    }
    let half = rtt_ms / 2.0;
    let offset = if cfg.rtt_offset_enabled { rtt_ms } else { 0.0 };
    let awake = |t: f64| cfg.drx.is_none_or(|d| d.is_awake(t));

    let mut q = EventQueue::new();
    q.schedule(0.0, RANK_ARRIVAL, RaEvent::SendPreamble(1));
    let mut phase = RaPhase::Done;
    let mut outcome = None;

    // Failure of attempt `n` at time `t`: retry or finish.
    let fail = |q: &mut EventQueue<RaEvent>, t: f64, n: u32| -> Option<Outcome> {
        if n < preamble_attempts_max {
            q.schedule(t, RANK_ARRIVAL, RaEvent::SendPreamble(n + 1));
            None
        } else if preamble_attempts_max == 1 {
            Some(Outcome::TimerExpiry)
        } else {
            Some(Outcome::MaxAttempts)
        }
    };

    while let Some((t, ev)) = q.pop() {
        if outcome.is_some() {
            break;
        }
        match ev {
            RaEvent::SendPreamble(n) => {
                q.log(t, Actor::Ue, format!("preamble_tx attempt={n}"));
                q.schedule(t + half, RANK_ARRIVAL, RaEvent::PreambleAtEnb(n));
                q.schedule(t + offset, RANK_OPEN, RaEvent::WindowOpen(n));
                phase = RaPhase::AwaitWindow(n);
            }
            RaEvent::PreambleAtEnb(n) => {
                q.log(t, Actor::Enb, "preamble_rx");
                q.log(t, Actor::Enb, "rar_tx");
                q.schedule(t + half, RANK_ARRIVAL, RaEvent::RarArrives(n));
            }
            RaEvent::WindowOpen(n) => {
                if phase == RaPhase::AwaitWindow(n) {
                    q.log(t, Actor::Ue, "ra_response_window_start");
                    q.schedule(t + cfg.ra_response_window_ms, RANK_EXPIRY, RaEvent::WindowExpires(n));
                    phase = RaPhase::InWindow(n);
                }
            }
            RaEvent::RarArrives(n) => {
                if phase == RaPhase::InWindow(n) && awake(t) {
                    q.log(t, Actor::Ue, "rar_rx");
                    q.log(t, Actor::Ue, "ra_response_window_stop");
                    q.log(t, Actor::Ue, "msg3_tx");
                    q.schedule(t + half, RANK_ARRIVAL, RaEvent::Msg3AtEnb(n));
                    q.schedule(t + offset, RANK_OPEN, RaEvent::CrOpen(n));
                    phase = RaPhase::AwaitCr(n);
                } else {
                    q.log(t, Actor::Ue, "rar_missed");
                }
            }
            RaEvent::WindowExpires(n) => {
                if phase == RaPhase::InWindow(n) {
                    q.log(t, Actor::Ue, "ra_response_window_expiry");
                    phase = RaPhase::Done;
                    outcome = fail(&mut q, t, n);
                }
            }
            RaEvent::Msg3AtEnb(n) => {
                q.log(t, Actor::Enb, "msg3_rx");
                q.log(t, Actor::Enb, "msg4_tx");
                q.schedule(t + half, RANK_ARRIVAL, RaEvent::Msg4Arrives(n));
            }
            RaEvent::CrOpen(n) => {
                if phase == RaPhase::AwaitCr(n) {
                    q.log(t, Actor::Ue, "mac_contention_resolution_start");
                    q.schedule(t + cfg.mac_contention_resolution_ms, RANK_EXPIRY, RaEvent::CrExpires(n));
                    phase = RaPhase::InCr(n);
                }
            }
            RaEvent::Msg4Arrives(n) => {
                if phase == RaPhase::InCr(n) && awake(t) {
                    q.log(t, Actor::Ue, "msg4_rx");
                    q.log(t, Actor::Ue, "mac_contention_resolution_stop");
                    phase = RaPhase::Done;
                    outcome = Some(Outcome::Success);
                } else {
                    q.log(t, Actor::Ue, "msg4_missed");
                }
            }
            RaEvent::CrExpires(n) => {
                if phase == RaPhase::InCr(n) {
                    q.log(t, Actor::Ue, "mac_contention_resolution_expiry");
                    phase = RaPhase::Done;
                    outcome = fail(&mut q, t, n);
                }
            }
        }
    }
    Ok(EventTrace {
        events: q.trace,
        outcome: outcome.expect("random access always terminates"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrRun {
    pub sr_transmissions: u32,
    /// SRs sent after the first while its grant was already on the way.
    pub duplicate_srs: u32,
    pub trace: EventTrace,
}

#[derive(Debug, Clone, Copy)]
enum SrEvent {
    SendSr,
    SrAtEnb(u32),
    GrantArrives,
    ProhibitExpires,
}

/// Scheduling requests gated by sr-ProhibitTimer. The first SR's grant
/// reaches the UE after `rtt + grant_issue_delay`; every prohibit expiry
/// before then produces another SR.
pub fn run_sr_sequence(cfg: &TimerConfig, rtt_ms: f64, grant_issue_delay_ms: f64) -> Result<SrRun> {
    cfg.validate()?;
    check_rtt(rtt_ms)?;
    require_non_negative("grant_issue_delay_ms", grant_issue_delay_ms)?;
    let half = rtt_ms / 2.0;
    let prohibit = cfg.sr_prohibit_ms();

    let mut q = EventQueue::new();
    q.schedule(0.0, RANK_ARRIVAL, SrEvent::SendSr);
    let mut sent = 0u32;
    let mut granted = false;

    while let Some((t, ev)) = q.pop() {
        match ev {
            SrEvent::SendSr => {
                sent += 1;
                q.log(t, Actor::Ue, format!("sr_tx n={sent}"));
                q.log(t, Actor::Ue, "sr_prohibit_start");
                q.schedule(t + half, RANK_ARRIVAL, SrEvent::SrAtEnb(sent));
                q.schedule(t + prohibit, RANK_EXPIRY, SrEvent::ProhibitExpires);
            }
            SrEvent::SrAtEnb(n) => {
                if n == 1 {
                    q.log(t, Actor::Enb, "sr_rx");
                    q.log(t + grant_issue_delay_ms, Actor::Enb, "ul_grant_tx");
                    q.schedule(t + grant_issue_delay_ms + half, RANK_ARRIVAL, SrEvent::GrantArrives);
                } else {
                    q.log(t, Actor::Enb, "sr_rx_duplicate");
                }
            }
            SrEvent::GrantArrives => {
                granted = true;
                q.log(t, Actor::Ue, "ul_grant_rx");
                q.log(t, Actor::Ue, "sr_prohibit_stop");
            }
            SrEvent::ProhibitExpires => {
                if !granted {
                    q.log(t, Actor::Ue, "sr_prohibit_expiry");
                    q.schedule(t, RANK_ARRIVAL, SrEvent::SendSr);
                }
            }
        }
    }
    q.trace.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
    Ok(SrRun {
        sr_transmissions: sent,
        duplicate_srs: sent - 1,
        trace: EventTrace {
            events: q.trace,
            outcome: Outcome::Success,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReorderingRun {
    /// t-Reordering expiries while the missing PDU's retransmission was
    /// already in flight.
    pub spurious_status_reports: u32,
    pub recovered: bool,
    pub lost: u32,
    pub trace: EventTrace,
}

#[derive(Debug, Clone, Copy)]
enum RlcEvent {
    PduArrives(u32),
    RetxArrives(u32),
    TailPoll,
    ReorderingExpires(u64),
}

/// RLC receiver with t-Reordering under MAC-level losses.
///
/// PDUs leave one per subframe. A gap is detected when a later PDU (or the
/// transmitter's poll after the last PDU) arrives; the missing PDU's
/// retransmission lands one RTT after detection. Receiver state follows
/// the usual lower-edge / highest-received / trigger variables. At a tie
/// the timer expires before the retransmission is processed.
pub fn run_rlc_reordering(
    cfg: &TimerConfig,
    rtt_ms: f64,
    loss_pattern: &BTreeSet<u32>,
    n_pdus: u32,
) -> Result<ReorderingRun> {
    cfg.validate()?;
    check_rtt(rtt_ms)?;
    if n_pdus < 2 {
        return Err(Error::invalid("n_pdus", "must be >= 2"));
    }
    if let Some(&sn) = loss_pattern.iter().find(|&&sn| sn >= n_pdus) {
        return Err(Error::invalid("loss_pattern", format!("SN {sn} is outside 0..{n_pdus}")));
    }
    let half = rtt_ms / 2.0;
    // Expiry outranks arrivals for this procedure.
    const RANK_TIMER: u8 = 0;
    const RANK_PDU: u8 = 1;

    let mut q = EventQueue::new();
    for sn in 0..n_pdus {
        let tx = f64::from(sn) * PDU_SPACING_MS;
        if loss_pattern.contains(&sn) {
            q.log(tx, Actor::Enb, format!("pdu_tx_lost sn={sn}"));
        } else {
            q.schedule(tx + half, RANK_PDU, RlcEvent::PduArrives(sn));
        }
    }
    if loss_pattern.contains(&(n_pdus - 1)) {
        q.schedule(f64::from(n_pdus) * PDU_SPACING_MS + half, RANK_PDU, RlcEvent::TailPoll);
    }

    let n = n_pdus as usize;
    let mut received = vec![false; n];
    let mut detected = vec![false; n];
    let mut lower_edge = 0u32; // first SN not yet received or skipped
    let mut highest = 0u32; // one past the highest SN received
    let mut trigger: Option<(u32, u64)> = None; // (trigger SN, timer generation)
    let mut generation = 0u64;
    let mut spurious = 0u32;

    let advance = |from: u32, received: &[bool]| -> u32 {
        (from..n_pdus).find(|&s| !received[s as usize]).unwrap_or(n_pdus)
    };

    while let Some((t, ev)) = q.pop() {
        let mut detect_up_to = None;
        match ev {
            RlcEvent::PduArrives(sn) | RlcEvent::RetxArrives(sn) => {
                let label = if matches!(ev, RlcEvent::RetxArrives(_)) { "retx_rx" } else { "pdu_rx" };
                q.log(t, Actor::Ue, format!("{label} sn={sn}"));
                received[sn as usize] = true;
                highest = highest.max(sn + 1);
                if sn == lower_edge {
                    lower_edge = advance(lower_edge, &received);
                }
                detect_up_to = Some(sn);
            }
            RlcEvent::TailPoll => {
                q.log(t, Actor::Ue, "poll_rx");
                detect_up_to = Some(n_pdus);
            }
            RlcEvent::ReorderingExpires(g) => {
                if let Some((x, gen)) = trigger {
                    if gen == g {
                        q.log(t, Actor::Ue, "t_reordering_expiry");
                        q.log(t, Actor::Ue, "status_report_tx");
                        spurious += 1;
                        trigger = None;
                        lower_edge = advance(x, &received);
                        if highest > lower_edge {
                            generation += 1;
                            trigger = Some((highest, generation));
                            q.log(t, Actor::Ue, "t_reordering_start");
                            q.schedule(t + cfg.t_reordering_ms, RANK_TIMER, RlcEvent::ReorderingExpires(generation));
                        }
                    }
                }
            }
        }

        if let Some(limit) = detect_up_to {
            for m in 0..limit.min(n_pdus) {
                let i = m as usize;
                if !received[i] && !detected[i] {
                    detected[i] = true;
                    q.log(t, Actor::Ue, format!("gap_detected sn={m}"));
                    q.schedule(t + rtt_ms, RANK_PDU, RlcEvent::RetxArrives(m));
                }
            }
            if let Some((x, _)) = trigger {
                if lower_edge >= x {
                    q.log(t, Actor::Ue, "t_reordering_stop");
                    trigger = None;
                }
            }
            if trigger.is_none() && highest > lower_edge && !matches!(ev, RlcEvent::TailPoll) {
                generation += 1;
                trigger = Some((highest, generation));
                q.log(t, Actor::Ue, "t_reordering_start");
                q.schedule(t + cfg.t_reordering_ms, RANK_TIMER, RlcEvent::ReorderingExpires(generation));
            }
        }
    }
    q.trace.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms));
    let recovered = received.iter().all(|&r| r);
    Ok(ReorderingRun {
        spurious_status_reports: spurious,
        recovered,
        lost: loss_pattern.len() as u32,
        trace: EventTrace {
            events: q.trace,
            outcome: if recovered { Outcome::Success } else { Outcome::TimerExpiry },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GEO_RTT: f64 = 541.0;

    fn legacy() -> TimerConfig {
        TimerConfig::legacy_fixture()
    }

    fn with_offset() -> TimerConfig {
        TimerConfig {
            rtt_offset_enabled: true,
            ..legacy()
        }
    }

    #[test]
    fn geo_random_access_needs_offset() {
        let fail = run_random_access(&legacy(), GEO_RTT, 1).unwrap();
        assert_eq!(fail.outcome, Outcome::TimerExpiry);
        fail.check_invariants().unwrap();
        let ok = run_random_access(&with_offset(), GEO_RTT, 1).unwrap();
        assert_eq!(ok.outcome, Outcome::Success);
        ok.check_invariants().unwrap();
        let rx = ok.events.iter().find(|e| e.event == "rar_rx").unwrap();
        assert_eq!(rx.t_ms, GEO_RTT);
    }

    #[test]
    fn terrestrial_random_access_succeeds() {
        let tr = run_random_access(&legacy(), 0.0, 1).unwrap();
        assert_eq!(tr.outcome, Outcome::Success);
        tr.check_invariants().unwrap();
    }

    #[test]
    fn repeated_attempts_end_in_max_attempts() {
        let tr = run_random_access(&legacy(), GEO_RTT, 3).unwrap();
        assert_eq!(tr.outcome, Outcome::MaxAttempts);
        assert_eq!(tr.events.iter().filter(|e| e.event.starts_with("preamble_tx")).count(), 3);
        tr.check_invariants().unwrap();
    }

    #[test]
    fn contention_resolution_fails_without_offset() {
        // RAR fits in a 50 ms window but Msg4 needs 40 ms against a 30 ms timer.
        let cfg = TimerConfig {
            ra_response_window_ms: 50.0,
            mac_contention_resolution_ms: 30.0,
            ..legacy()
        };
        let tr = run_random_access(&cfg, 15.0, 1).unwrap();
        assert_eq!(tr.outcome, Outcome::Success);
        let tr = run_random_access(&cfg, 40.0, 1).unwrap();
        assert_eq!(tr.outcome, Outcome::TimerExpiry);
        assert!(tr.events.iter().any(|e| e.event == "mac_contention_resolution_expiry"));
        tr.check_invariants().unwrap();
    }

    #[test]
    fn drx_gates_reception() {
        let asleep = TimerConfig {
            drx: Some(DrxConfig { cycle_ms: 1000.0, on_duration_ms: 5.0, offset_ms: 700.0 }),
            ..with_offset()
        };
        let tr = run_random_access(&asleep, GEO_RTT, 1).unwrap();
        assert_eq!(tr.outcome, Outcome::TimerExpiry);
        assert!(tr.events.iter().any(|e| e.event == "rar_missed"));
    }

    #[test]
    fn sr_duplicates() {
        let run = run_sr_sequence(&legacy(), GEO_RTT, 0.0).unwrap();
        assert!(run.duplicate_srs >= 6);
        // floor((541 - 70) / 70) + 1 = 7
        assert_eq!(run.duplicate_srs, 7);
        run.trace.check_invariants().unwrap();
        let long = TimerConfig { sr_prohibit_periods: 55, ..legacy() };
        assert_eq!(run_sr_sequence(&long, GEO_RTT, 0.0).unwrap().duplicate_srs, 0);
        assert_eq!(run_sr_sequence(&legacy(), 0.0, 0.0).unwrap().duplicate_srs, 0);
    }

    #[test]
    fn reordering_single_loss() {
        let loss: BTreeSet<u32> = [5].into();
        let short = run_rlc_reordering(&legacy(), GEO_RTT, &loss, 20).unwrap();
        assert_eq!(short.spurious_status_reports, 1);
        assert!(short.recovered);
        short.trace.check_invariants().unwrap();
        let long = TimerConfig { t_reordering_ms: 1600.0, ..legacy() };
        let run = run_rlc_reordering(&long, GEO_RTT, &loss, 20).unwrap();
        assert_eq!(run.spurious_status_reports, 0);
        assert!(run.recovered);
        run.trace.check_invariants().unwrap();
    }

    #[test]
    fn reordering_without_loss() {
        let run = run_rlc_reordering(&legacy(), GEO_RTT, &BTreeSet::new(), 10).unwrap();
        assert_eq!(run.spurious_status_reports, 0);
        assert!(run.recovered);
        assert!(run_rlc_reordering(&legacy(), GEO_RTT, &BTreeSet::new(), 1).is_err());
        assert!(run_rlc_reordering(&legacy(), GEO_RTT, &[10].into(), 10).is_err());
    }

    #[test]
    fn reordering_tail_loss_and_bursts() {
        let run = run_rlc_reordering(&legacy(), GEO_RTT, &[9].into(), 10).unwrap();
        assert!(run.recovered);
        assert_eq!(run.spurious_status_reports, 0);
        let run = run_rlc_reordering(&legacy(), GEO_RTT, &[1, 2, 3, 7, 9].into(), 12).unwrap();
        assert!(run.recovered);
        assert!(run.spurious_status_reports >= 1);
        run.trace.check_invariants().unwrap();
    }

    proptest! {
        #[test]
        fn offset_makes_ra_rtt_independent(rtt in 0.0f64..2000.0) {
            let tr = run_random_access(&with_offset(), rtt, 1).unwrap();
            prop_assert_eq!(tr.outcome, Outcome::Success);
            prop_assert!(tr.check_invariants().is_ok());
        }

        #[test]
        fn sr_duplicates_iff_prohibit_short(periods in 1u32..80, period in prop::sample::select(vec![1.0f64, 2.0, 5.0, 10.0, 20.0]), rtt in 0.0f64..800.0, delay in 0.0f64..20.0) {
            let cfg = TimerConfig { sr_prohibit_periods: periods, sr_period_ms: period, ..legacy() };
            let run = run_sr_sequence(&cfg, rtt, delay).unwrap();
            prop_assert_eq!(run.duplicate_srs == 0, cfg.sr_prohibit_ms() >= rtt + delay);
            prop_assert!(run.trace.check_invariants().is_ok());
        }

        #[test]
        fn spurious_iff_timer_short(t_reord in 1.0f64..2000.0, rtt in 0.0f64..1500.0, sn in 0u32..18) {
            let cfg = TimerConfig { t_reordering_ms: t_reord, ..legacy() };
            let run = run_rlc_reordering(&cfg, rtt, &[sn].into(), 20).unwrap();
            prop_assert!(run.recovered);
            prop_assert_eq!(run.spurious_status_reports == 0, t_reord > rtt);
            prop_assert!(run.trace.check_invariants().is_ok());
        }

        #[test]
        fn drx_never_drops_messages_inside_on_duration(rtt in 0.0f64..1000.0, on in 1.0f64..50.0, cycle_mult in 1.0f64..10.0) {
            // On-duration aligned with the offset-scheduled RAR and Msg4 arrivals.
            let cycle = on * cycle_mult;
            let cfg = TimerConfig {
                drx: Some(DrxConfig { cycle_ms: cycle, on_duration_ms: on, offset_ms: 0.0 }),
                ..with_offset()
            };
            let tr = run_random_access(&cfg, rtt, 1).unwrap();
            let arrivals: Vec<f64> = vec![rtt, 2.0 * rtt];
            if arrivals.iter().all(|&t| cfg.drx.unwrap().is_awake(t)) {
                prop_assert_eq!(tr.outcome, Outcome::Success);
            }
        }
    }
}
