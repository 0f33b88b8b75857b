//! Calculators and simulators for LTE-M machine-type communication over
//! GEO and LEO satellite links.
//!
//! The crate is organised by subsystem:
//!
//! - [`orbit`]: circular-orbit geometry, transparent-payload delays, Doppler
//!   and pass propagation.
//! - [`linkbudget`]: receiver SNR from EIRP, G/T, losses and bandwidth,
//!   with the built-in GEO/LEO budget fixtures.
//! - [`retx`]: HARQ combining, plain ARQ and blind repetition strategies,
//!   analytic and Monte Carlo.
//! - [`sync`]: GNSS/ephemeris uplink pre-compensation and TA maintenance.
//! - [`protocol_timers`]: discrete-event runs of random access, SR and RLC
//!   reordering under long round-trip times.
//! - [`mobility`]: coverage footprint, visibility windows, service-link
//!   switch schedules and assistance-aided cell selection.
//! - [`scenario`] and [`tables`]: scenario files and the reference-value
//!   checks driven by the command-line tool.

pub mod csv_out;
mod error;
pub mod linkbudget;
pub mod mobility;
pub mod orbit;
pub mod protocol_timers;
pub mod retx;
pub mod scenario;
pub mod sync;
pub mod tables;

pub use error::{Error, Result};
pub use linkbudget::{LinkBudgetInput, LinkBudgetResult};
pub use mobility::{AssistanceInfo, CellCandidate, CellId, ConstellationPlane, SatId};
pub use orbit::{EarthModel, OrbitScenario, PassSample, PhysicalConstants};
pub use protocol_timers::{EventTrace, Outcome, TimerConfig};
pub use retx::{BlerCurve, HarqConfig, RetxPolicy};
pub use scenario::Scenario;
pub use sync::{EphemerisRecord, SyncLimits, UeState};
