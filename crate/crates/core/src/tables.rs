//! Computed-versus-reference checks for the delay/Doppler table, the link
//! budget table and the sub-PRB sweep, plus the retransmission figure data.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linkbudget::{self, S_BAND_CARRIER_HZ};
use crate::orbit::{self, EarthModel};
use crate::retx::{self, RetxPolicy};
use crate::scenario::Scenario;

/// Pass sampling step for the Doppler-rate cells, s.
pub const PASS_STEP_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Abs(f64),
    /// Fraction of the reference value.
    Rel(f64),
    /// Computed value must not exceed the reference.
    AtMost,
}

impl Tolerance {
    pub fn accepts(self, computed: f64, reference: f64) -> bool {
        if !computed.is_finite() {
            return false;
        }
        match self {
            Tolerance::Abs(t) => (computed - reference).abs() <= t,
            Tolerance::Rel(f) => (computed - reference).abs() <= f * reference.abs(),
            Tolerance::AtMost => computed <= reference,
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Abs(t) => write!(f, "+-{t}"),
            Tolerance::Rel(r) => write!(f, "+-{}%", r * 100.0),
            Tolerance::AtMost => f.write_str("<="),
        }
    }
}

impl Serialize for Tolerance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub item: String,
    pub unit: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(item: impl Into<String>, unit: &'static str, computed: f64, reference: f64, tolerance: Tolerance) -> Self {
        CheckRow {
            item: item.into(),
            unit,
            computed,
            reference,
            tolerance,
            pass: tolerance.accepts(computed, reference),
        }
    }
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

struct OrbitColumn {
    key: &'static str,
    distance_km: f64,
    rtt_max_ms: f64,
    rtt_min_ms: f64,
    /// None for the geostationary column.
    doppler_ppm: Option<f64>,
    doppler_rate_ppm_s: Option<f64>,
}

const ORBIT_COLUMNS: [OrbitColumn; 3] = [
    OrbitColumn {
        key: "leo600",
        distance_km: 1932.0,
        rtt_max_ms: 8.0,
        rtt_min_ms: 25.8,
        doppler_ppm: Some(24.0),
        doppler_rate_ppm_s: Some(0.27),
    },
    OrbitColumn {
        key: "leo1200",
        distance_km: 3131.0,
        rtt_max_ms: 16.0,
        rtt_min_ms: 41.8,
        doppler_ppm: Some(21.0),
        doppler_rate_ppm_s: Some(0.13),
    },
    OrbitColumn {
        key: "geo",
        distance_km: 40581.0,
        rtt_max_ms: 477.0,
        rtt_min_ms: 541.0,
        doppler_ppm: None,
        doppler_rate_ppm_s: None,
    },
];

/// Bound for the geostationary Doppler cell, ppm.
const GEO_DOPPLER_BOUND_PPM: f64 = 1.0;
/// Bound standing in for "approximately zero" Doppler variation, ppm/s.
const GEO_DOPPLER_RATE_BOUND_PPM_S: f64 = 0.01;

/// Delay, distance and Doppler cells for the three reference orbits.
pub fn table1(scenario: &Scenario) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for col in &ORBIT_COLUMNS {
        let o = scenario.orbit(col.key)?;
        let delay_tol = if o.is_geostationary() { Tolerance::Abs(1.0) } else { Tolerance::Abs(0.2) };
        let k = col.key;
        rows.push(CheckRow::new(
            format!("{k}.distance_min_elevation"),
            "km",
            orbit::slant_range(o, o.min_elevation_deg)?,
            col.distance_km,
            Tolerance::Abs(1.0),
        ));
        rows.push(CheckRow::new(format!("{k}.rtt_max_elevation"), "ms", orbit::rtt_transparent(o, 90.0)?, col.rtt_max_ms, delay_tol));
        rows.push(CheckRow::new(
            format!("{k}.rtt_min_elevation"),
            "ms",
            orbit::rtt_transparent(o, o.min_elevation_deg)?,
            col.rtt_min_ms,
            delay_tol,
        ));
        let doppler = orbit::max_doppler_ppm(o)?;
        rows.push(match col.doppler_ppm {
            Some(r) => CheckRow::new(format!("{k}.max_doppler"), "ppm", doppler, r, Tolerance::Abs(1.5)),
            None => CheckRow::new(format!("{k}.max_doppler"), "ppm", doppler, GEO_DOPPLER_BOUND_PPM, Tolerance::AtMost),
        });
        let rate = if o.is_geostationary() {
            0.0
        } else {
            orbit::propagate_pass(o, EarthModel::Rotating, PASS_STEP_S)?.max_doppler_rate_ppm_s
        };
        rows.push(match col.doppler_rate_ppm_s {
            Some(r) => CheckRow::new(format!("{k}.max_doppler_rate"), "ppm/s", rate, r, Tolerance::Rel(0.25)),
            None => CheckRow::new(format!("{k}.max_doppler_rate"), "ppm/s", rate, GEO_DOPPLER_RATE_BOUND_PPM_S, Tolerance::AtMost),
        });
    }
    Ok(rows)
}

const TABLE2_SNR: [(&str, f64); 4] = [("geo_dl", -3.04), ("geo_ul", -3.19), ("leo_dl", 3.6), ("leo_ul", 10.6)];

/// Budget SNR cells and the FSPL helper check.
pub fn table2(scenario: &Scenario) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (name, reference) in TABLE2_SNR {
        let snr = linkbudget::snr(scenario.budget(name)?)?.snr_db;
        rows.push(CheckRow::new(format!("{name}.snr"), "dB", snr, reference, Tolerance::Abs(0.05)));
    }
    rows.push(CheckRow::new(
        "fspl_40581km_2ghz",
        "dB",
        linkbudget::fspl(40581.0, S_BAND_CARRIER_HZ)?,
        190.63,
        Tolerance::Abs(0.02),
    ));
    Ok(rows)
}

pub const GEO_UL_SWEEP: [(f64, f64); 4] = [(30e3, -3.19), (45e3, -4.95), (90e3, -7.96), (180e3, -10.97)];
pub const LEO_UL_SWEEP: [(f64, f64); 3] = [(30e3, 10.6), (45e3, 8.8), (90e3, 5.8)];

/// Uplink SNR against allocation bandwidth for both uplink budgets.
pub fn subprb(scenario: &Scenario) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for (name, points) in [("geo_ul", &GEO_UL_SWEEP[..]), ("leo_ul", &LEO_UL_SWEEP[..])] {
        let bws: Vec<f64> = points.iter().map(|p| p.0).collect();
        let sweep = linkbudget::sub_prb_sweep(scenario.budget(name)?, &bws)?;
        for ((bw, snr), (_, reference)) in sweep.into_iter().zip(points) {
            rows.push(CheckRow::new(
                format!("{name}.snr_{}khz", bw / 1e3),
                "dB",
                snr,
                *reference,
                Tolerance::Abs(0.05),
            ));
        }
    }
    Ok(rows)
}

/// Grid used when none is given: deep outage to well past the budget SNRs.
pub const DEFAULT_GRID: SnrGrid = SnrGrid { start: -15.0, stop: 10.0, step: 0.5 };

/// Parsed `start:stop:step` SNR grid in dB, inclusive of `stop` when it
/// falls on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::invalid("grid", "bounds must be finite"));
        }
        if self.step <= 0.0 || self.stop < self.start {
            return Err(Error::invalid("grid", "need step > 0 and stop >= start"));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::invalid("grid", "more than 100000 points"));
        }
        // Multiply rather than accumulate so each point is exact to one rounding.
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

impl std::str::FromStr for SnrGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(Error::invalid("grid", format!("expected start:stop:step, got '{s}'")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("grid", format!("'{x}' is not a number")))
        };
        let g = SnrGrid { start: num(a)?, stop: num(b)?, step: num(c)? };
        g.points()?;
        Ok(g)
    }
}

/// Expected usage, or a marker when truncation leaves too much mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Usage {
    Subframes(f64),
    NonConverged,
}

impl Usage {
    pub fn value(self) -> Option<f64> {
        match self {
            Usage::Subframes(v) => Some(v),
            Usage::NonConverged => None,
        }
    }
}

impl Serialize for Usage {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Usage::Subframes(v) => s.serialize_f64(*v),
            Usage::NonConverged => s.serialize_str("nonconverged"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub snr_db: f64,
    pub policy: String,
    pub n: u32,
    pub residual_bler: f64,
    pub expected_subframes: Usage,
}

fn usage(policy: &RetxPolicy, curve: &retx::BlerCurve, snr: f64) -> Result<Usage> {
    match retx::expected_subframes(policy, curve, snr) {
        Ok(v) => Ok(Usage::Subframes(v)),
        Err(Error::NonConvergence { .. }) => Ok(Usage::NonConverged),
        Err(e) => Err(e),
    }
}

fn row(policy: RetxPolicy, n: u32, curve: &retx::BlerCurve, snr: f64) -> Result<FigureRow> {
    Ok(FigureRow {
        snr_db: snr,
        policy: policy.label(),
        n,
        residual_bler: retx::residual_bler(&policy, curve, snr, n)?,
        expected_subframes: usage(&policy, curve, snr)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figures {
    /// Residual BLER, HARQ n in {1, 2, 4} against ARQ n in {2, 4}.
    pub fig1: Vec<FigureRow>,
    /// HARQ after four transmissions against four blind repetitions.
    pub fig2: Vec<FigureRow>,
    /// Expected subframes per block, HARQ against blind-4 with RLC cleanup.
    pub fig3: Vec<FigureRow>,
}

pub fn figures(scenario: &Scenario, grid: &[f64]) -> Result<Figures> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must contain at least one point"));
    }
    let curve = scenario.curve()?;
    let section = scenario.retx()?;
    let mut f = Figures { fig1: Vec::new(), fig2: Vec::new(), fig3: Vec::new() };
    for &snr in grid {
        for n in [1, 2, 4] {
            f.fig1.push(row(RetxPolicy::HarqCombining { max_transmissions: n }, n, &curve, snr)?);
        }
        for n in [2, 4] {
            f.fig1.push(row(RetxPolicy::PlainArq { max_transmissions: n }, n, &curve, snr)?);
        }
        f.fig2.push(row(RetxPolicy::HarqCombining { max_transmissions: 4 }, 4, &curve, snr)?);
        f.fig2.push(row(RetxPolicy::BlindPlusArq { n_blind: 4, max_rlc_rounds: 1 }, 4, &curve, snr)?);

        let cap = section.harq_usage_cap;
        f.fig3.push(row(RetxPolicy::HarqCombining { max_transmissions: cap }, cap, &curve, snr)?);
        let blind = RetxPolicy::BlindPlusArq { n_blind: 4, max_rlc_rounds: section.blind_rlc_rounds };
        f.fig3.push(row(blind, 4 * section.blind_rlc_rounds, &curve, snr)?);
    }
    Ok(f)
}
