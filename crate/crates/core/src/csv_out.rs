//! CSV writers for every tabular output. Headers are fixed by the row
//! types' field names.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::mobility::ServingInterval;
use crate::orbit::PassSample;
use crate::protocol_timers::EventTrace;
use crate::sync::TaTraceRow;
use crate::tables::{CheckRow, FigureRow};

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Explicit header so empty tables still carry one.
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const PASS_HEADER: [&str; 6] = ["t_s", "elevation_deg", "slant_range_km", "one_way_delay_ms", "rtt_ms", "doppler_ppm"];
pub const SWEEP_HEADER: [&str; 2] = ["bandwidth_hz", "snr_db"];
pub const FIGURE_HEADER: [&str; 5] = ["snr_db", "policy", "n", "residual_bler", "expected_subframes"];
pub const TA_HEADER: [&str; 3] = ["t_s", "error_us", "command_issued"];
pub const TRACE_HEADER: [&str; 3] = ["t_ms", "actor", "event"];
pub const SCHEDULE_HEADER: [&str; 3] = ["sat_id", "t_start_s", "t_stop_s"];
pub const CHECK_HEADER: [&str; 6] = ["item", "unit", "computed", "reference", "tolerance", "pass"];

pub fn write_pass<W: Write>(out: W, samples: &[PassSample]) -> Result<()> {
    write_rows(out, samples, &PASS_HEADER)
}

pub fn write_sweep<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    write_rows(out, points, &SWEEP_HEADER)
}

pub fn write_figure<W: Write>(out: W, rows: &[FigureRow]) -> Result<()> {
    write_rows(out, rows, &FIGURE_HEADER)
}

pub fn write_ta_trace<W: Write>(out: W, rows: &[TaTraceRow]) -> Result<()> {
    write_rows(out, rows, &TA_HEADER)
}

pub fn write_event_trace<W: Write>(out: W, trace: &EventTrace) -> Result<()> {
    write_rows(out, trace.events.iter().map(|e| (e.t_ms, e.actor.to_string(), &e.event)), &TRACE_HEADER)
}

pub fn write_schedule<W: Write>(out: W, intervals: &[ServingInterval]) -> Result<()> {
    write_rows(out, intervals, &SCHEDULE_HEADER)
}

pub fn write_checks<W: Write>(out: W, rows: &[CheckRow]) -> Result<()> {
    write_rows(out, rows, &CHECK_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol_timers::{run_random_access, TimerConfig};
    use crate::tables::Usage;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn headers_are_exact() {
        let s = text(|b| write_pass(b, &[]));
        assert_eq!(s, "t_s,elevation_deg,slant_range_km,one_way_delay_ms,rtt_ms,doppler_ppm\n");
        let s = text(|b| write_sweep(b, &[(30e3, -3.19)]));
        assert_eq!(s, "bandwidth_hz,snr_db\n30000.0,-3.19\n");
        let s = text(|b| write_schedule(b, &[]));
        assert_eq!(s, "sat_id,t_start_s,t_stop_s\n");
        let s = text(|b| write_ta_trace(b, &[TaTraceRow { t_s: 2.0, error_us: 0.0, command_issued: true }]));
        assert_eq!(s, "t_s,error_us,command_issued\n2.0,0.0,true\n");
    }

    #[test]
    fn nonconverged_marker() {
        let rows = [FigureRow {
            snr_db: -20.0,
            policy: "blind4".into(),
            n: 4,
            residual_bler: 0.99,
            expected_subframes: Usage::NonConverged,
        }];
        let s = text(|b| write_figure(b, &rows));
        assert_eq!(s.lines().nth(1).unwrap(), "-20.0,blind4,4,0.99,nonconverged");
    }

    #[test]
    fn trace_rows_use_actor_names() {
        let t = run_random_access(&TimerConfig::legacy_fixture(), 0.0, 1).unwrap();
        let s = text(|b| write_event_trace(b, &t));
        assert!(s.starts_with("t_ms,actor,event\n"));
        assert!(s.lines().skip(1).all(|l| l.split(',').nth(1).is_some_and(|a| a == "ue" || a == "enb")));
    }
}
