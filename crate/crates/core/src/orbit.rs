//! Circular-orbit geometry for a transparent (bent-pipe) satellite payload.
//!
//! Angles are taken in degrees at the public boundary and converted once.
//! Distances are km, velocities km/s, delays ms, Doppler in parts per
//! million of the carrier.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Minimum number of samples a propagated pass must contain.
pub const MIN_PASS_SAMPLES: usize = 10;

/// Relative tolerance on `|w_sat - w_earth| / w_earth` below which an orbit
/// is treated as geostationary.
const GEOSTATIONARY_RATE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    /// Speed of light, m/s.
    pub c_m_s: f64,
    /// Mean Earth radius, km.
    pub earth_radius_km: f64,
    /// Geocentric gravitational parameter, km^3/s^2.
    pub mu_km3_s2: f64,
    /// Equatorial surface rotation speed, km/s.
    pub v_eq_km_s: f64,
    /// Sidereal rotation rate, rad/s.
    pub earth_rotation_rad_s: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann_j_per_k: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            c_m_s: 299_792_458.0,
            earth_radius_km: 6371.0,
            mu_km3_s2: 398_600.441_8,
            v_eq_km_s: 0.4651,
            earth_rotation_rad_s: 7.2921e-5,
            boltzmann_j_per_k: 1.380649e-23,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        require_positive("c_m_s", self.c_m_s)?;
        require_positive("earth_radius_km", self.earth_radius_km)?;
        require_positive("mu_km3_s2", self.mu_km3_s2)?;
        require_positive("v_eq_km_s", self.v_eq_km_s)?;
        require_positive("earth_rotation_rad_s", self.earth_rotation_rad_s)?;
        require_positive("boltzmann_j_per_k", self.boltzmann_j_per_k)
    }

    pub fn c_km_s(&self) -> f64 {
        self.c_m_s / 1000.0
    }

    /// `10 log10(k)` in dBW/(K Hz).
    pub fn boltzmann_db(&self) -> f64 {
        10.0 * self.boltzmann_j_per_k.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitScenario {
    pub altitude_km: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
    /// Transparent payload with the gateway as far from the satellite as
    /// the UE. When false, `feeder_distance_km` must be set.
    #[serde(default = "default_true")]
    pub feeder_equals_service: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feeder_distance_km: Option<f64>,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

fn default_min_elevation() -> f64 {
    10.0
}

fn default_true() -> bool {
    true
}

impl OrbitScenario {
    /// Scenario with default constants and feeder distance equal to the
    /// service-link distance.
    pub fn new(altitude_km: f64, min_elevation_deg: f64) -> Result<Self> {
        let s = Self {
            altitude_km,
            min_elevation_deg,
            feeder_equals_service: true,
            feeder_distance_km: None,
            constants: PhysicalConstants::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_feeder_distance(mut self, feeder_km: f64) -> Result<Self> {
        require_positive("feeder_distance_km", feeder_km)?;
        self.feeder_equals_service = false;
        self.feeder_distance_km = Some(feeder_km);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("altitude_km", self.altitude_km)?;
        if !(self.min_elevation_deg.is_finite()
            && (0.0..90.0).contains(&self.min_elevation_deg))
        {
            return Err(Error::invalid(
                "min_elevation_deg",
                format!("must lie in [0, 90), got {}", self.min_elevation_deg),
            ));
        }
        if !self.feeder_equals_service {
            match self.feeder_distance_km {
                Some(d) => require_positive("feeder_distance_km", d)?,
                None => {
                    return Err(Error::invalid(
                        "feeder_distance_km",
                        "required when feeder_equals_service is false",
                    ))
                }
            }
        }
        self.constants.validate()
    }

    /// Orbit radius from the Earth's centre, km.
    pub fn orbit_radius_km(&self) -> f64 {
        self.constants.earth_radius_km + self.altitude_km
    }

    /// Inertial angular rate of the satellite, rad/s.
    pub fn angular_rate_rad_s(&self) -> f64 {
        let r = self.orbit_radius_km();
        (self.constants.mu_km3_s2 / (r * r * r)).sqrt()
    }

    /// True when the orbit co-rotates with the Earth.
    pub fn is_geostationary(&self) -> bool {
        let w_e = self.constants.earth_rotation_rad_s;
        ((self.angular_rate_rad_s() - w_e) / w_e).abs() < GEOSTATIONARY_RATE_TOLERANCE
    }
}

fn check_elevation(elevation_deg: f64) -> Result<()> {
    if elevation_deg.is_finite() && (0.0..=90.0).contains(&elevation_deg) {
        Ok(())
    } else {
        Err(Error::invalid(
            "elevation_deg",
            format!("must lie in [0, 90], got {elevation_deg}"),
        ))
    }
}

/// UE-to-satellite distance at the given elevation, km.
pub fn slant_range(scenario: &OrbitScenario, elevation_deg: f64) -> Result<f64> {
    require_positive("altitude_km", scenario.altitude_km)?;
    check_elevation(elevation_deg)?;
    let re = scenario.constants.earth_radius_km;
    let r = scenario.orbit_radius_km();
    let eps = elevation_deg.to_radians();
    let (sin_e, cos_e) = eps.sin_cos();
    Ok((r * r - re * re * cos_e * cos_e).sqrt() - re * sin_e)
}

/// Feeder-link distance paired with a service-link distance.
fn feeder_distance(scenario: &OrbitScenario, service_km: f64) -> f64 {
    if scenario.feeder_equals_service {
        service_km
    } else {
        scenario.feeder_distance_km.unwrap_or(service_km)
    }
}

fn rtt_for_range(scenario: &OrbitScenario, service_km: f64) -> f64 {
    let path_km = 2.0 * (service_km + feeder_distance(scenario, service_km));
    path_km / scenario.constants.c_km_s() * 1000.0
}

/// Round-trip time through a transparent payload, ms.
pub fn rtt_transparent(scenario: &OrbitScenario, elevation_deg: f64) -> Result<f64> {
    let d = slant_range(scenario, elevation_deg)?;
    Ok(rtt_for_range(scenario, d))
}

/// Circular orbital speed, km/s.
pub fn orbital_velocity(scenario: &OrbitScenario) -> Result<f64> {
    require_positive("altitude_km", scenario.altitude_km)?;
    Ok((scenario.constants.mu_km3_s2 / scenario.orbit_radius_km()).sqrt())
}

/// Orbital period, minutes.
pub fn orbital_period(scenario: &OrbitScenario) -> Result<f64> {
    require_positive("altitude_km", scenario.altitude_km)?;
    Ok(std::f64::consts::TAU / scenario.angular_rate_rad_s() / 60.0)
}

/// Worst-case Doppler shift seen at the horizon, ppm.
///
/// Adds the equatorial ground speed to the orbital speed (counter-rotating
/// UE) and projects onto the horizon line of sight, `Re / (Re + h)`.
/// Geostationary orbits return zero.
pub fn max_doppler_ppm(scenario: &OrbitScenario) -> Result<f64> {
    scenario.validate()?;
    if scenario.is_geostationary() {
        return Ok(0.0);
    }
    let v = orbital_velocity(scenario)? + scenario.constants.v_eq_km_s;
    let projection = scenario.constants.earth_radius_km / scenario.orbit_radius_km();
    Ok(v / scenario.constants.c_km_s() * projection * 1e6)
}

/// Frame used for pass propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarthModel {
    /// Ground point fixed in inertial space.
    NonRotating,
    /// Ground point on the equator rotating with the Earth under a
    /// prograde equatorial orbit.
    #[default]
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassSample {
    /// Seconds since the pass started (rise at minimum elevation).
    pub t_s: f64,
    pub elevation_deg: f64,
    pub slant_range_km: f64,
    pub one_way_delay_ms: f64,
    pub rtt_ms: f64,
    /// Positive while the satellite approaches.
    pub doppler_ppm: f64,
}

/// Satellite and UE state in the Earth-fixed frame of the pass: the UE sits
/// at `(Re, 0, 0)` and the orbit lies in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassState {
    pub sat_position_km: [f64; 3],
    pub sat_velocity_km_s: [f64; 3],
    pub ue_position_km: [f64; 3],
}

/// Overhead pass of a circular orbit above a ground point on its track.
#[derive(Debug, Clone)]
pub struct Pass {
    pub scenario: OrbitScenario,
    pub earth: EarthModel,
    pub step_s: f64,
    pub samples: Vec<PassSample>,
    /// Largest |d(doppler)/dt| over consecutive samples, ppm/s.
    pub max_doppler_rate_ppm_s: f64,
    /// Time of the zenith sample, s since pass start.
    pub zenith_t_s: f64,
}

impl Pass {
    /// Satellite state at `t_s` seconds since pass start.
    pub fn state_at(&self, t_s: f64) -> PassState {
        pass_state(&self.scenario, self.earth, t_s - self.zenith_t_s)
    }
}

/// Angular rate of the satellite as seen from the ground point, rad/s.
pub fn relative_angular_rate(scenario: &OrbitScenario, earth: EarthModel) -> f64 {
    let w = scenario.angular_rate_rad_s();
    match earth {
        EarthModel::NonRotating => w,
        EarthModel::Rotating => w - scenario.constants.earth_rotation_rad_s,
    }
}

/// Earth central angle between the ground point and the edge of
/// visibility at the minimum elevation, rad.
pub fn visibility_half_angle(scenario: &OrbitScenario) -> f64 {
    let re = scenario.constants.earth_radius_km;
    let eps = scenario.min_elevation_deg.to_radians();
    (re / scenario.orbit_radius_km() * eps.cos()).acos() - eps
}

/// State at `tau_s` seconds relative to the zenith instant.
pub fn pass_state(scenario: &OrbitScenario, earth: EarthModel, tau_s: f64) -> PassState {
    let w = relative_angular_rate(scenario, earth);
    let r = scenario.orbit_radius_km();
    let (s, c) = (w * tau_s).sin_cos();
    PassState {
        sat_position_km: [r * c, r * s, 0.0],
        sat_velocity_km_s: [-w * r * s, w * r * c, 0.0],
        ue_position_km: [scenario.constants.earth_radius_km, 0.0, 0.0],
    }
}

/// Samples one overhead pass from rise to set at `step_s` resolution.
///
/// Samples are placed symmetrically about the zenith instant, so the zenith
/// itself is always a sample. Range rate comes from the planar geometry,
/// `d' = R Re w sin(theta) / d`, and the Doppler rate from finite
/// differences of the resulting series.
pub fn propagate_pass(scenario: &OrbitScenario, earth: EarthModel, step_s: f64) -> Result<Pass> {
    scenario.validate()?;
    require_positive("step_s", step_s)?;
    let w = relative_angular_rate(scenario, earth);
    if earth == EarthModel::Rotating && scenario.is_geostationary() {
        return Err(Error::NoPass);
    }
    if w <= 0.0 {
        return Err(Error::invalid(
            "altitude_km",
            "orbit is slower than the Earth's rotation; no overhead pass",
        ));
    }

    let half_duration_s = visibility_half_angle(scenario) / w;
    let half_steps = (half_duration_s / step_s).floor();
    let count = 2.0 * half_steps + 1.0;
    if count < MIN_PASS_SAMPLES as f64 {
        return Err(Error::TooFewSamples {
            samples: count as usize,
            step_s,
            min: MIN_PASS_SAMPLES,
        });
    }
    let half_steps = half_steps as i64;

    let re = scenario.constants.earth_radius_km;
    let r = scenario.orbit_radius_km();
    let c_km_s = scenario.constants.c_km_s();

    let samples: Vec<PassSample> = (-half_steps..=half_steps)
        .map(|k| {
            let tau = k as f64 * step_s;
            let theta = w * tau;
            let (sin_t, cos_t) = theta.sin_cos();
            let d = (r * r + re * re - 2.0 * r * re * cos_t).sqrt();
            let range_rate = r * re * sin_t * w / d;
            let elevation = (r * cos_t - re).atan2(r * sin_t.abs()).to_degrees();
            let rtt_ms = rtt_for_range(scenario, d);
            PassSample {
                t_s: (k + half_steps) as f64 * step_s,
                elevation_deg: elevation,
                slant_range_km: d,
                one_way_delay_ms: rtt_ms / 2.0,
                rtt_ms,
                doppler_ppm: -range_rate / c_km_s * 1e6,
            }
        })
        .collect();

    let max_doppler_rate_ppm_s = samples
        .windows(2)
        .map(|p| ((p[1].doppler_ppm - p[0].doppler_ppm) / step_s).abs())
        .fold(0.0, f64::max);

    Ok(Pass {
        scenario: *scenario,
        earth,
        step_s,
        zenith_t_s: half_steps as f64 * step_s,
        samples,
        max_doppler_rate_ppm_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leo600() -> OrbitScenario {
        OrbitScenario::new(600.0, 10.0).unwrap()
    }

    /// Slant range by bisection along the line of sight.
    fn slant_range_bisection(h: f64, eps_deg: f64) -> f64 {
        let re = 6371.0;
        let r = re + h;
        let eps = eps_deg.to_radians();
        // UE at (0, re), look direction (cos eps, sin eps).
        let radius_at = |d: f64| ((d * eps.cos()).powi(2) + (re + d * eps.sin()).powi(2)).sqrt();
        let (mut lo, mut hi) = (0.0, 2.0 * r);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if radius_at(mid) < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn slant_range_matches_bisection() {
        for &(h, e) in &[(600.0, 10.0), (1200.0, 10.0), (35786.0, 10.0), (750.0, 37.0)] {
            let s = OrbitScenario::new(h, 10.0).unwrap();
            let got = slant_range(&s, e).unwrap();
            assert!((got - slant_range_bisection(h, e)).abs() < 1e-6, "{h} {e}");
        }
    }

    #[test]
    fn slant_range_reference_points() {
        assert!((slant_range(&leo600(), 10.0).unwrap() - 1932.0).abs() < 1.0);
        let geo = OrbitScenario::new(35786.0, 10.0).unwrap();
        assert!((slant_range(&geo, 10.0).unwrap() - 40581.0).abs() < 1.0);
        assert!((slant_range(&leo600(), 90.0).unwrap() - 600.0).abs() < 1e-9);
    }

    #[test]
    fn slant_range_rejects_bad_input() {
        assert!(slant_range(&leo600(), -0.1).is_err());
        assert!(slant_range(&leo600(), 90.5).is_err());
        let mut s = leo600();
        s.altitude_km = 0.0;
        assert!(slant_range(&s, 45.0).is_err());
        assert!(OrbitScenario::new(600.0, 90.0).is_err());
    }

    #[test]
    fn rtt_reference_points() {
        assert!((rtt_transparent(&leo600(), 90.0).unwrap() - 8.0).abs() < 0.1);
        assert!((rtt_transparent(&leo600(), 10.0).unwrap() - 25.8).abs() < 0.1);
        let geo = OrbitScenario::new(35786.0, 10.0).unwrap();
        assert!((rtt_transparent(&geo, 10.0).unwrap() - 541.0).abs() < 1.0);
    }

    #[test]
    fn feeder_override_changes_rtt() {
        let s = leo600().with_feeder_distance(1000.0).unwrap();
        let expected = 2.0 * (600.0 + 1000.0) / 299_792.458 * 1000.0;
        assert!((rtt_transparent(&s, 90.0).unwrap() - expected).abs() < 1e-9);
        let mut bad = leo600();
        bad.feeder_equals_service = false;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn velocity_and_period() {
        let s750 = OrbitScenario::new(750.0, 10.0).unwrap();
        let v = orbital_velocity(&s750).unwrap();
        assert!((v - 7.48).abs() < 0.01, "{v}");
        // 2 pi sqrt(6971^3 / mu) / 60
        let t = orbital_period(&leo600()).unwrap();
        assert!((t - 96.54).abs() < 0.2, "{t}");
        assert!((90.0..120.0).contains(&t));
        let geo = OrbitScenario::new(35786.0, 10.0).unwrap();
        let hours = orbital_period(&geo).unwrap() / 60.0;
        assert!((hours - 23.93).abs() < 0.02, "{hours}");
    }

    #[test]
    fn max_doppler_reference_points() {
        let d600 = max_doppler_ppm(&leo600()).unwrap();
        let d1200 = max_doppler_ppm(&OrbitScenario::new(1200.0, 10.0).unwrap()).unwrap();
        assert!((d600 - 24.0).abs() < 1.5, "{d600}");
        assert!((d1200 - 21.0).abs() < 1.5, "{d1200}");
        let geo = OrbitScenario::new(35786.0, 10.0).unwrap();
        assert!(geo.is_geostationary());
        assert_eq!(max_doppler_ppm(&geo).unwrap(), 0.0);
    }

    #[test]
    fn pass_zenith_sample_has_zero_doppler() {
        for earth in [EarthModel::NonRotating, EarthModel::Rotating] {
            let pass = propagate_pass(&leo600(), earth, 1.0).unwrap();
            let mid = pass.samples.len() / 2;
            let z = pass.samples[mid];
            assert_eq!(z.doppler_ppm, 0.0);
            assert!((z.elevation_deg - 90.0).abs() < 1e-9);
            assert_eq!(z.t_s, pass.zenith_t_s);
            let max_el = pass
                .samples
                .iter()
                .map(|s| s.elevation_deg)
                .fold(f64::MIN, f64::max);
            assert_eq!(max_el, z.elevation_deg);
        }
    }

    #[test]
    fn pass_endpoints_at_minimum_elevation() {
        let pass = propagate_pass(&leo600(), EarthModel::Rotating, 0.5).unwrap();
        let first = pass.samples[0];
        assert!(first.elevation_deg >= 10.0 - 1e-9);
        assert!(first.elevation_deg < 10.2, "{}", first.elevation_deg);
        assert!(first.slant_range_km >= 600.0);
    }

    #[test]
    fn doppler_rate_matches_zenith_closed_form() {
        // d'' at zenith = R Re w^2 / h, independent of the finite-difference path.
        for earth in [EarthModel::NonRotating, EarthModel::Rotating] {
            let s = leo600();
            let w = relative_angular_rate(&s, earth);
            let closed = 6971.0 * 6371.0 * w * w / 600.0 / 299_792.458 * 1e6;
            let pass = propagate_pass(&s, earth, 0.05).unwrap();
            let rel = (pass.max_doppler_rate_ppm_s - closed).abs() / closed;
            assert!(rel < 1e-3, "{earth:?}: {} vs {closed}", pass.max_doppler_rate_ppm_s);
        }
    }

    #[test]
    fn doppler_rate_converges_under_step_halving() {
        let s = OrbitScenario::new(1200.0, 10.0).unwrap();
        let mut prev = propagate_pass(&s, EarthModel::Rotating, 8.0).unwrap().max_doppler_rate_ppm_s;
        for step in [4.0, 2.0, 1.0, 0.5] {
            let cur = propagate_pass(&s, EarthModel::Rotating, step).unwrap().max_doppler_rate_ppm_s;
            assert!(((cur - prev) / cur).abs() < 0.02, "{step}: {prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn doppler_antisymmetric_on_non_rotating_earth() {
        let pass = propagate_pass(&leo600(), EarthModel::NonRotating, 2.0).unwrap();
        let n = pass.samples.len();
        for i in 0..n / 2 {
            let a = pass.samples[i].doppler_ppm;
            let b = pass.samples[n - 1 - i].doppler_ppm;
            assert!((a + b).abs() < 1e-9, "{i}: {a} {b}");
        }
    }

    #[test]
    fn coarse_step_rejected() {
        let err = propagate_pass(&leo600(), EarthModel::Rotating, 200.0).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { .. }));
        assert!(propagate_pass(&leo600(), EarthModel::Rotating, 0.0).is_err());
    }

    #[test]
    fn geostationary_has_no_pass() {
        let geo = OrbitScenario::new(35786.0, 10.0).unwrap();
        assert!(matches!(
            propagate_pass(&geo, EarthModel::Rotating, 1.0),
            Err(Error::NoPass)
        ));
    }

    #[test]
    fn pass_state_agrees_with_samples() {
        let pass = propagate_pass(&leo600(), EarthModel::Rotating, 5.0).unwrap();
        for s in pass.samples.iter().step_by(7) {
            let st = pass.state_at(s.t_s);
            let rel: Vec<f64> = (0..3)
                .map(|i| st.sat_position_km[i] - st.ue_position_km[i])
                .collect();
            let d = rel.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((d - s.slant_range_km).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn slant_range_monotone(h in 300.0f64..40000.0, e in 0.0f64..89.0, de in 0.01f64..1.0, dh in 1.0f64..500.0) {
            let s = OrbitScenario::new(h, 10.0).unwrap();
            let s2 = OrbitScenario::new(h + dh, 10.0).unwrap();
            let d = slant_range(&s, e).unwrap();
            prop_assert!(slant_range(&s, e + de).unwrap() < d);
            prop_assert!(slant_range(&s2, e).unwrap() > d);
        }

        #[test]
        fn rtt_at_min_elevation_dominates_zenith(h in 300.0f64..40000.0, e in 0.0f64..89.9) {
            let s = OrbitScenario::new(h, e).unwrap();
            prop_assert!(rtt_transparent(&s, e).unwrap() >= rtt_transparent(&s, 90.0).unwrap());
        }

        #[test]
        fn halving_light_speed_doubles_delay(h in 300.0f64..40000.0, e in 0.0f64..90.0) {
            let s = OrbitScenario::new(h, 10.0).unwrap();
            let mut slow = s;
            slow.constants.c_m_s /= 2.0;
            let a = rtt_transparent(&s, e).unwrap();
            let b = rtt_transparent(&slow, e).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        }
    }
}
