//! UE-side uplink pre-compensation from GNSS position and broadcast
//! ephemeris, residual checks against PRACH limits, and connected-mode
//! timing-advance maintenance.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::orbit::PhysicalConstants;

/// Default ephemeris validity, s.
pub const EPHEMERIS_VALIDITY_S: f64 = 30.0;

/// PRACH subcarrier spacing, Hz.
pub const PRACH_SCS_HZ: f64 = 1250.0;

/// Longest single integration step when propagating ephemeris, s.
const PROPAGATION_STEP_S: f64 = 0.5;

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled(a: Vec3, b: Vec3, k: f64) -> Vec3 {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Satellite state vector in the Earth-fixed frame (z is the rotation axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EphemerisRecord {
    pub epoch_s: f64,
    pub position_km: Vec3,
    pub velocity_km_s: Vec3,
}

impl EphemerisRecord {
    pub fn validate(&self, constants: &PhysicalConstants) -> Result<()> {
        if !self.epoch_s.is_finite() {
            return Err(Error::invalid("epoch_s", "must be finite"));
        }
        if self.velocity_km_s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("velocity_km_s", "must be finite"));
        }
        let r = norm(self.position_km);
        if !(r.is_finite() && r > constants.earth_radius_km) {
            return Err(Error::invalid(
                "position_km",
                format!("satellite radius {r} km is not above the Earth's surface"),
            ));
        }
        Ok(())
    }

    /// Two-body propagation in the rotating Earth-fixed frame (RK4).
    pub fn propagate(&self, t_s: f64, constants: &PhysicalConstants) -> EphemerisRecord {
        let w = constants.earth_rotation_rad_s;
        let mu = constants.mu_km3_s2;
        let accel = |r: Vec3, v: Vec3| -> Vec3 {
            let rn = norm(r);
            let g = -mu / (rn * rn * rn);
            // gravity - 2 w x v - w x (w x r), rotation about z
            [
                g * r[0] + 2.0 * w * v[1] + w * w * r[0],
                g * r[1] - 2.0 * w * v[0] + w * w * r[1],
                g * r[2],
            ]
        };
        let span = t_s - self.epoch_s;
        let steps = (span.abs() / PROPAGATION_STEP_S).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let (mut r, mut v) = (self.position_km, self.velocity_km_s);
        if span != 0.0 {
            for _ in 0..steps {
                let a1 = accel(r, v);
                let (r2, v2) = (add_scaled(r, v, h / 2.0), add_scaled(v, a1, h / 2.0));
                let a2 = accel(r2, v2);
                let (r3, v3) = (add_scaled(r, v2, h / 2.0), add_scaled(v, a2, h / 2.0));
                let a3 = accel(r3, v3);
                let (r4, v4) = (add_scaled(r, v3, h), add_scaled(v, a3, h));
                let a4 = accel(r4, v4);
                for i in 0..3 {
                    r[i] += h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
                    v[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
                }
            }
        }
        EphemerisRecord {
            epoch_s: t_s,
            position_km: r,
            velocity_km_s: v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    /// Position as reported by GNSS, Earth-fixed km.
    pub position_km: Vec3,
    /// 1-sigma GNSS position error, m.
    #[serde(default)]
    pub gnss_position_error_m: f64,
    #[serde(default)]
    pub local_clock_error_ppm: f64,
}

/// Height band around the mean radius accepted for ground UEs, km.
const GROUND_BAND_KM: f64 = 10.0;

impl UeState {
    pub fn at(position_km: Vec3) -> Self {
        Self {
            position_km,
            gnss_position_error_m: 0.0,
            local_clock_error_ppm: 0.0,
        }
    }

    pub fn validate(&self, constants: &PhysicalConstants, airborne: bool) -> Result<()> {
        let r = norm(self.position_km);
        if !r.is_finite() {
            return Err(Error::invalid("position_km", "must be finite"));
        }
        if !airborne && (r - constants.earth_radius_km).abs() > GROUND_BAND_KM {
            return Err(Error::invalid(
                "position_km",
                format!("UE radius {r:.1} km is not on the ground"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncLimits {
    /// PRACH cyclic prefix, us. No default: deployments configure it.
    pub prach_cp_us: f64,
    #[serde(default = "default_scs")]
    pub prach_scs_hz: f64,
    pub carrier_hz: f64,
}

fn default_scs() -> f64 {
    PRACH_SCS_HZ
}

impl SyncLimits {
    pub fn validate(&self) -> Result<()> {
        require_positive("prach_cp_us", self.prach_cp_us)?;
        require_positive("prach_scs_hz", self.prach_scs_hz)?;
        require_positive("carrier_hz", self.carrier_hz)
    }

    /// Largest CFO the PRACH receiver tolerates (exclusive), Hz.
    pub fn max_cfo_hz(&self) -> f64 {
        self.prach_scs_hz / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Precompensation {
    /// Timing advance to apply, ms.
    pub ta_ms: f64,
    /// Frequency pre-shift to apply to the uplink carrier, Hz.
    pub freq_offset_hz: f64,
    pub slant_range_km: f64,
    /// d|sat - ue|/dt, km/s; positive while receding.
    pub range_rate_km_s: f64,
}

/// Pre-compensation with a configurable validity window.
#[derive(Debug, Clone, Copy)]
pub struct Precompensator {
    pub constants: PhysicalConstants,
    pub validity_s: f64,
}

impl Default for Precompensator {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            validity_s: EPHEMERIS_VALIDITY_S,
        }
    }
}

impl Precompensator {
    /// Timing advance is the service-link round trip plus the broadcast
    /// common (feeder) delay. The frequency pre-shift `+d'/c * f` cancels
    /// the `-d'/c * f` Doppler shift the satellite would observe.
    pub fn compute(
        &self,
        ue: &UeState,
        eph: &EphemerisRecord,
        limits: &SyncLimits,
        common_feeder_delay_ms: f64,
        at_s: f64,
    ) -> Result<Precompensation> {
        limits.validate()?;
        eph.validate(&self.constants)?;
        ue.validate(&self.constants, true)?;
        if !(common_feeder_delay_ms.is_finite() && common_feeder_delay_ms >= 0.0) {
            return Err(Error::invalid("common_feeder_delay_ms", "must be finite and >= 0"));
        }
        let age = at_s - eph.epoch_s;
        if age.is_nan() || age.abs() > self.validity_s {
            return Err(Error::StaleEphemeris {
                epoch_s: eph.epoch_s,
                age_s: age,
                validity_s: self.validity_s,
            });
        }
        let sat = eph.propagate(at_s, &self.constants);
        let los = sub(sat.position_km, ue.position_km);
        let d = norm(los);
        let range_rate = dot(los, sat.velocity_km_s) / d;
        let c_km_s = self.constants.c_km_s();
        Ok(Precompensation {
            ta_ms: 2.0 * d / c_km_s * 1000.0 + common_feeder_delay_ms,
            freq_offset_hz: range_rate / c_km_s * limits.carrier_hz,
            slant_range_km: d,
            range_rate_km_s: range_rate,
        })
    }
}

/// [`Precompensator::compute`] with default constants and a 30 s window.
pub fn precompensation(
    ue: &UeState,
    eph: &EphemerisRecord,
    limits: &SyncLimits,
    common_feeder_delay_ms: f64,
    at_s: f64,
) -> Result<Precompensation> {
    Precompensator::default().compute(ue, eph, limits, common_feeder_delay_ms, at_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub timing_ok: bool,
    pub cfo_ok: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.timing_ok && self.cfo_ok
    }

    pub fn failed_limits(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.timing_ok {
            v.push("timing");
        }
        if !self.cfo_ok {
            v.push("cfo");
        }
        v
    }
}

/// Both residuals must be strictly inside their limits.
pub fn validate_residuals(timing_residual_us: f64, cfo_residual_hz: f64, limits: &SyncLimits) -> Result<Verdict> {
    limits.validate()?;
    Ok(Verdict {
        timing_ok: timing_residual_us.abs() < limits.prach_cp_us,
        cfo_ok: cfo_residual_hz.abs() < limits.max_cfo_hz(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaMode {
    NetworkCommands,
    Autonomous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaMaintenanceConfig {
    pub drift_us_per_s: f64,
    pub error_budget_us: f64,
    pub duration_s: f64,
    pub mode: TaMode,
    /// Recomputation period in autonomous mode, s. Shortened when the
    /// drift would otherwise breach the budget between updates.
    #[serde(default = "default_autonomous_update")]
    pub autonomous_update_s: f64,
}

fn default_autonomous_update() -> f64 {
    1.0
}

impl TaMaintenanceConfig {
    pub fn new(drift_us_per_s: f64, error_budget_us: f64, duration_s: f64, mode: TaMode) -> Self {
        Self {
            drift_us_per_s,
            error_budget_us,
            duration_s,
            mode,
            autonomous_update_s: default_autonomous_update(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaTraceRow {
    pub t_s: f64,
    pub error_us: f64,
    pub command_issued: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaMaintenanceRun {
    pub commands_sent: u64,
    pub max_error_us: f64,
    pub trace: Vec<TaTraceRow>,
}

/// Timing error accumulates at the drift rate. The network corrects it
/// with a TA command each time it reaches the budget; an autonomous UE
/// re-derives its timing from ephemeris every update period and needs no
/// commands.
pub fn ta_maintenance_sim(cfg: &TaMaintenanceConfig) -> Result<TaMaintenanceRun> {
    require_positive("error_budget_us", cfg.error_budget_us)?;
    require_positive("duration_s", cfg.duration_s)?;
    require_positive("autonomous_update_s", cfg.autonomous_update_s)?;
    let drift = cfg.drift_us_per_s.abs();
    if !drift.is_finite() {
        return Err(Error::invalid("drift_us_per_s", "must be finite"));
    }

    let mut trace = vec![TaTraceRow {
        t_s: 0.0,
        error_us: 0.0,
        command_issued: false,
    }];
    let mut commands_sent = 0u64;
    let mut max_error_us = 0.0f64;
    let mut t_last = 0.0;

    if drift > 0.0 {
        let period = match cfg.mode {
            TaMode::NetworkCommands => cfg.error_budget_us / drift,
            TaMode::Autonomous => cfg.autonomous_update_s.min(cfg.error_budget_us / drift),
        };
        let mut k = 1u64;
        loop {
            let t = k as f64 * period;
            if t > cfg.duration_s {
                break;
            }
            let err = drift * period;
            max_error_us = max_error_us.max(err);
            let command = cfg.mode == TaMode::NetworkCommands;
            commands_sent += u64::from(command);
            trace.push(TaTraceRow {
                t_s: t,
                error_us: err,
                command_issued: command,
            });
            t_last = t;
            k += 1;
        }
    }
    if t_last < cfg.duration_s {
        let err = drift * (cfg.duration_s - t_last);
        max_error_us = max_error_us.max(err);
        trace.push(TaTraceRow {
            t_s: cfg.duration_s,
            error_us: err,
            command_issued: false,
        });
    }
    Ok(TaMaintenanceRun {
        commands_sent,
        max_error_us,
        trace,
    })
}
