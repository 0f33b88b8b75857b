//! Scenario files: one JSON document bundling every input the command-line
//! tool needs. Sections are optional so partial scenarios load; commands
//! that need a missing section fail with [`Error::MissingSection`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::linkbudget::{self, LinkBudgetInput};
use crate::mobility::ConstellationPlane;
use crate::orbit::{rtt_transparent, OrbitScenario};
use crate::protocol_timers::TimerConfig;
use crate::retx::{BlerCurve, RetxPolicy};
use crate::sync::{SyncLimits, EPHEMERIS_VALIDITY_S};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Named orbits. The reference tables expect `leo600`, `leo1200` and
    /// `geo`.
    #[serde(default)]
    pub orbits: BTreeMap<String, OrbitScenario>,
    #[serde(default)]
    pub budgets: BTreeMap<String, LinkBudgetInput>,
    #[serde(default)]
    pub retx: Option<RetxSection>,
    #[serde(default)]
    pub timers: Option<TimersSection>,
    #[serde(default)]
    pub sync: Option<SyncSection>,
    #[serde(default)]
    pub mobility: Option<MobilitySection>,
}

/// How the BLER curve is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Explicit(BlerCurve),
    /// Place the curve so the BLER after `combined_copies` copies equals
    /// `target_bler` at the SNR of budget `budget`.
    Calibrated {
        budget: String,
        slope_per_db: f64,
        target_bler: f64,
        combined_copies: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetxSection {
    pub curve: CurveSpec,
    pub policies: Vec<RetxPolicy>,
    /// Cap used for the HARQ usage curve.
    pub harq_usage_cap: u32,
    /// Cap on RLC rounds for the blind usage curve.
    pub blind_rlc_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimersSection {
    pub config: TimerConfig,
    /// Orbit whose minimum-elevation round trip drives the runs, unless
    /// `rtt_ms` is set.
    #[serde(default)]
    pub rtt_orbit: Option<String>,
    #[serde(default)]
    pub rtt_ms: Option<f64>,
    pub preamble_attempts_max: u32,
    pub grant_issue_delay_ms: f64,
    pub loss_pattern: BTreeSet<u32>,
    pub n_pdus: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncSection {
    pub limits: SyncLimits,
    pub common_delay_ms: f64,
    #[serde(default = "default_validity")]
    pub ephemeris_validity_s: f64,
    pub drift_us_per_s: f64,
    pub error_budget_us: f64,
    pub duration_s: f64,
}

fn default_validity() -> f64 {
    EPHEMERIS_VALIDITY_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilitySection {
    pub orbit: OrbitScenario,
    pub n_satellites: u32,
    #[serde(default)]
    pub phase_offset_rad: f64,
    pub horizon_s: f64,
    pub hysteresis_db: f64,
}

impl MobilitySection {
    pub fn plane(&self) -> Result<ConstellationPlane> {
        ConstellationPlane::evenly_phased(self.orbit, self.n_satellites, self.phase_offset_rad)
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::invalid("scenario", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks every embedded invariant and that referenced names resolve.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::invalid("name", "must be a non-empty file-name-safe string"));
        }
        for o in self.orbits.values() {
            o.validate()?;
        }
        for b in self.budgets.values() {
            b.validate()?;
        }
        if let Some(r) = &self.retx {
            match &r.curve {
                CurveSpec::Explicit(c) => c.validate()?,
                CurveSpec::Calibrated { budget, .. } => {
                    self.budget(budget)?;
                }
            }
            for p in &r.policies {
                p.validate()?;
            }
            if r.harq_usage_cap == 0 || r.blind_rlc_rounds == 0 {
                return Err(Error::invalid("retx", "usage caps must be >= 1"));
            }
            self.curve()?;
        }
        if let Some(t) = &self.timers {
            t.config.validate()?;
            if t.preamble_attempts_max == 0 {
                return Err(Error::invalid("preamble_attempts_max", "must be >= 1"));
            }
            if t.n_pdus < 2 {
                return Err(Error::invalid("n_pdus", "must be >= 2"));
            }
            self.timers_rtt_ms()?;
        }
        if let Some(s) = &self.sync {
            s.limits.validate()?;
            require_positive("ephemeris_validity_s", s.ephemeris_validity_s)?;
            require_positive("error_budget_us", s.error_budget_us)?;
            require_positive("duration_s", s.duration_s)?;
        }
        if let Some(m) = &self.mobility {
            m.plane()?;
            require_positive("horizon_s", m.horizon_s)?;
        }
        Ok(())
    }

    pub fn orbit(&self, name: &str) -> Result<&OrbitScenario> {
        self.orbits
            .get(name)
            .ok_or_else(|| Error::UnknownFixture(format!("orbit '{name}'")))
    }

    pub fn budget(&self, name: &str) -> Result<&LinkBudgetInput> {
        self.budgets
            .get(name)
            .ok_or_else(|| Error::UnknownFixture(format!("budget '{name}'")))
    }

    pub fn retx(&self) -> Result<&RetxSection> {
        self.retx.as_ref().ok_or(Error::MissingSection("retx"))
    }

    pub fn timers(&self) -> Result<&TimersSection> {
        self.timers.as_ref().ok_or(Error::MissingSection("timers"))
    }

    pub fn sync(&self) -> Result<&SyncSection> {
        self.sync.as_ref().ok_or(Error::MissingSection("sync"))
    }

    pub fn mobility(&self) -> Result<&MobilitySection> {
        self.mobility.as_ref().ok_or(Error::MissingSection("mobility"))
    }

    pub fn curve(&self) -> Result<BlerCurve> {
        match &self.retx()?.curve {
            CurveSpec::Explicit(c) => Ok(*c),
            CurveSpec::Calibrated {
                budget,
                slope_per_db,
                target_bler,
                combined_copies,
            } => {
                let snr = linkbudget::snr(self.budget(budget)?)?.snr_db;
                BlerCurve::calibrated(*slope_per_db, snr, *target_bler, *combined_copies)
            }
        }
    }

    pub fn timers_rtt_ms(&self) -> Result<f64> {
        let t = self.timers()?;
        if let Some(rtt) = t.rtt_ms {
            if !(rtt.is_finite() && rtt >= 0.0) {
                return Err(Error::invalid("rtt_ms", "must be finite and >= 0"));
            }
            return Ok(rtt);
        }
        let name = t.rtt_orbit.as_deref().ok_or_else(|| {
            Error::invalid("timers", "set either rtt_ms or rtt_orbit")
        })?;
        let o = self.orbit(name)?;
        rtt_transparent(o, o.min_elevation_deg)
    }
}

impl Default for Scenario {
    /// The reference setup: Table-1 orbits, the four budget fixtures, GEO
    /// round trips for the timers and a 70-satellite plane at 750 km.
    fn default() -> Self {
        let orbits = [("leo600", 600.0), ("leo1200", 1200.0), ("geo", 35786.0)]
            .into_iter()
            .map(|(n, h)| (n.to_string(), OrbitScenario::new(h, 10.0).expect("valid orbit")))
            .collect();
        Scenario {
            name: "default".into(),
            orbits,
            budgets: LinkBudgetInput::fixtures(),
            retx: Some(RetxSection {
                curve: CurveSpec::Calibrated {
                    budget: "geo_dl".into(),
                    slope_per_db: 1.0,
                    target_bler: 0.1,
                    combined_copies: 4,
                },
                policies: vec![
                    RetxPolicy::HarqCombining { max_transmissions: 4 },
                    RetxPolicy::PlainArq { max_transmissions: 4 },
                    RetxPolicy::BlindPlusArq {
                        n_blind: 4,
                        max_rlc_rounds: 1000,
                    },
                ],
                harq_usage_cap: 64,
                blind_rlc_rounds: 1000,
            }),
            timers: Some(TimersSection {
                config: TimerConfig::legacy_fixture(),
                rtt_orbit: Some("geo".into()),
                rtt_ms: None,
                preamble_attempts_max: 1,
                grant_issue_delay_ms: 0.0,
                loss_pattern: BTreeSet::from([5]),
                n_pdus: 20,
            }),
            sync: Some(SyncSection {
                limits: SyncLimits {
                    prach_cp_us: 100.0,
                    prach_scs_hz: crate::sync::PRACH_SCS_HZ,
                    carrier_hz: linkbudget::S_BAND_CARRIER_HZ,
                },
                common_delay_ms: 0.0,
                ephemeris_validity_s: EPHEMERIS_VALIDITY_S,
                drift_us_per_s: 40.0,
                error_budget_us: 80.0,
                duration_s: 3600.0,
            }),
            mobility: Some(MobilitySection {
                orbit: OrbitScenario::new(750.0, 10.0).expect("valid orbit"),
                n_satellites: 70,
                phase_offset_rad: 0.0,
                horizon_s: 3.0 * 3600.0,
                hysteresis_db: 3.0,
            }),
        }
    }
}
