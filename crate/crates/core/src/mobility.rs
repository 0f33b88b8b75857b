//! LEO coverage geometry, service-link switch scheduling for a ground point
//! on the track of a single orbital plane, and assistance-aided cell
//! selection.
//!
//! Each satellite carries one cell whose footprint is its visibility
//! region. The ground point sits on the equator under a prograde
//! equatorial plane, so satellites move past it at `w_sat - w_earth`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::orbit::{rtt_transparent, visibility_half_angle, EarthModel, OrbitScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SatId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageGeometry {
    /// Earth central angle from the sub-satellite point to the footprint edge.
    pub central_angle_deg: f64,
    /// Great-circle footprint diameter, km.
    pub diameter_km: f64,
}

pub fn coverage_geometry(scenario: &OrbitScenario) -> Result<CoverageGeometry> {
    scenario.validate()?;
    let lambda = visibility_half_angle(scenario);
    Ok(CoverageGeometry {
        central_angle_deg: lambda.to_degrees(),
        diameter_km: 2.0 * scenario.constants.earth_radius_km * lambda,
    })
}

/// Duration of an overhead pass from rise to set at the minimum
/// elevation, s.
pub fn visibility_window(scenario: &OrbitScenario) -> Result<f64> {
    visibility_window_in(scenario, EarthModel::Rotating)
}

pub fn visibility_window_in(scenario: &OrbitScenario, earth: EarthModel) -> Result<f64> {
    scenario.validate()?;
    let w = crate::orbit::relative_angular_rate(scenario, earth);
    if w <= 0.0 || (earth == EarthModel::Rotating && scenario.is_geostationary()) {
        return Err(Error::NoPass);
    }
    Ok(2.0 * visibility_half_angle(scenario) / w)
}

/// Satellites sharing one circular orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationPlane {
    pub orbit: OrbitScenario,
    /// Phase of each satellite at t = 0, rad; 0 is overhead the ground point.
    pub phases_rad: Vec<f64>,
}

impl ConstellationPlane {
    /// `n` satellites spaced `2 pi / n` apart, the first at `offset_rad`.
    pub fn evenly_phased(orbit: OrbitScenario, n: u32, offset_rad: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n_satellites", "must be >= 1"));
        }
        let plane = Self {
            orbit,
            phases_rad: (0..n)
                .map(|i| offset_rad + TAU * f64::from(i) / f64::from(n))
                .collect(),
        };
        plane.validate()?;
        Ok(plane)
    }

    pub fn validate(&self) -> Result<()> {
        self.orbit.validate()?;
        if self.phases_rad.is_empty() {
            return Err(Error::invalid("phases_rad", "plane needs at least one satellite"));
        }
        let mut wrapped: Vec<f64> = self.phases_rad.iter().map(|p| p.rem_euclid(TAU)).collect();
        if wrapped.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phases_rad", "must be finite"));
        }
        wrapped.sort_by(f64::total_cmp);
        let duplicate = wrapped.windows(2).any(|w| w[1] - w[0] < 1e-12)
            || (wrapped.len() > 1 && TAU - wrapped[wrapped.len() - 1] + wrapped[0] < 1e-12);
        if duplicate {
            return Err(Error::invalid("phases_rad", "phases must be distinct modulo 2 pi"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phases_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases_rad.is_empty()
    }

    fn relative_rate(&self) -> f64 {
        crate::orbit::relative_angular_rate(&self.orbit, EarthModel::Rotating)
    }

    /// Central angle between satellite `i` and the ground point at `t_s`,
    /// wrapped to (-pi, pi].
    pub fn central_angle(&self, i: usize, t_s: f64) -> f64 {
        let a = (self.phases_rad[i] + self.relative_rate() * t_s).rem_euclid(TAU);
        if a > std::f64::consts::PI {
            a - TAU
        } else {
            a
        }
    }

    pub fn is_visible(&self, i: usize, t_s: f64) -> bool {
        self.central_angle(i, t_s).abs() <= visibility_half_angle(&self.orbit)
    }

    /// Elevation of satellite `i` from the ground point, degrees (negative
    /// below the horizon).
    pub fn elevation_deg(&self, i: usize, t_s: f64) -> f64 {
        let theta = self.central_angle(i, t_s);
        let r = self.orbit.orbit_radius_km();
        let re = self.orbit.constants.earth_radius_km;
        (r * theta.cos() - re).atan2(r * theta.sin().abs()).to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServingInterval {
    pub sat_id: SatId,
    pub t_start_s: f64,
    pub t_stop_s: f64,
}

/// Broadcast information for one service-link switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssistanceInfo {
    pub serving: SatId,
    pub target: SatId,
    /// When the serving satellite stops covering the area.
    pub t_stop_serving_s: f64,
    /// When the target satellite starts covering it.
    pub t_start_serving_s: f64,
    /// Round trip to the target at the switch instant, ms.
    pub ta_to_target_ms: f64,
    pub serving_elevation_deg: f64,
    pub target_elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageGap {
    pub from_s: f64,
    pub to_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchSchedule {
    /// Per-satellite visibility intervals clipped to the horizon, ordered
    /// by start time.
    pub intervals: Vec<ServingInterval>,
    pub handovers: Vec<AssistanceInfo>,
    pub gaps: Vec<CoverageGap>,
}

impl SwitchSchedule {
    pub fn is_gap_free(&self) -> bool {
        self.gaps.is_empty()
    }
}

/// Serving intervals, switch assistance and coverage gaps over
/// `[0, horizon_s]`.
///
/// The serving satellite keeps the cell until it sets. The successor is
/// the satellite visible at that instant with the latest set time; if none
/// is visible, the time until the next rise is reported as a gap instead
/// of a handover.
pub fn switch_schedule(plane: &ConstellationPlane, horizon_s: f64) -> Result<SwitchSchedule> {
    plane.validate()?;
    require_positive("horizon_s", horizon_s)?;
    let w = plane.relative_rate();
    if w <= 0.0 || plane.orbit.is_geostationary() {
        return Err(Error::NoPass);
    }
    let lambda = visibility_half_angle(&plane.orbit);
    let period = TAU / w;
    let spacing = match plane.len() {
        1 => period,
        _ => {
            let mut p: Vec<f64> = plane.phases_rad.iter().map(|x| x.rem_euclid(TAU)).collect();
            p.sort_by(f64::total_cmp);
            let mut max_gap: f64 = TAU - p[p.len() - 1] + p[0];
            for win in p.windows(2) {
                max_gap = max_gap.max(win[1] - win[0]);
            }
            max_gap / w
        }
    };
    if horizon_s < spacing {
        return Err(Error::invalid(
            "horizon_s",
            format!("{horizon_s} s is shorter than the largest inter-satellite interval {spacing:.1} s"),
        ));
    }

    // Unclipped windows: satellite i rises when its angle reaches -lambda.
    let mut raw: Vec<(usize, f64, f64)> = Vec::new();
    for (i, &phase) in plane.phases_rad.iter().enumerate() {
        let first_rise = (-lambda - phase) / w;
        let k0 = ((-first_rise - 2.0 * lambda / w) / period).floor() as i64;
        let mut k = k0;
        loop {
            let rise = first_rise + k as f64 * period;
            let set = rise + 2.0 * lambda / w;
            if rise > horizon_s {
                break;
            }
            if set >= 0.0 {
                raw.push((i, rise, set));
            }
            k += 1;
        }
    }
    raw.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let intervals: Vec<ServingInterval> = raw
        .iter()
        .map(|&(i, rise, set)| ServingInterval {
            sat_id: SatId(i as u32),
            t_start_s: rise.max(0.0),
            t_stop_s: set.min(horizon_s),
        })
        .collect();

    let mut handovers = Vec::new();
    let mut gaps = Vec::new();

    // Serving chain.
    let latest_covering = |t: f64| {
        raw.iter()
            .filter(|&&(_, rise, set)| rise <= t && set > t)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
            .copied()
    };
    let mut current = match latest_covering(0.0) {
        Some(c) => c,
        None => match raw.first() {
            Some(&first) => {
                gaps.push(CoverageGap { from_s: 0.0, to_s: first.1.min(horizon_s) });
                first
            }
            None => {
                gaps.push(CoverageGap { from_s: 0.0, to_s: horizon_s });
                return Ok(SwitchSchedule { intervals, handovers, gaps });
            }
        },
    };
    while current.2 < horizon_s {
        let t_stop = current.2;
        // Overlapping successor, or the next riser after a gap.
        let next = raw
            .iter()
            .filter(|&&(i, rise, set)| rise <= t_stop && set > t_stop && !(i == current.0 && rise == current.1))
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
            .copied();
        match next {
            Some(n) => {
                let target_theta = plane.central_angle(n.0, t_stop);
                let target_elevation = plane.elevation_deg(n.0, t_stop);
                let ta = rtt_transparent(&plane.orbit, target_elevation.clamp(0.0, 90.0))?;
                let _ = target_theta;
                handovers.push(AssistanceInfo {
                    serving: SatId(current.0 as u32),
                    target: SatId(n.0 as u32),
                    t_stop_serving_s: t_stop,
                    t_start_serving_s: n.1.max(0.0),
                    ta_to_target_ms: ta,
                    serving_elevation_deg: plane.orbit.min_elevation_deg,
                    target_elevation_deg: target_elevation,
                });
                current = n;
            }
            None => {
                let after = raw.iter().filter(|&&(_, rise, _)| rise > t_stop).min_by(|a, b| a.1.total_cmp(&b.1)).copied();
                match after {
                    Some(a) => {
                        gaps.push(CoverageGap { from_s: t_stop, to_s: a.1.min(horizon_s) });
                        current = a;
                    }
                    None => {
                        gaps.push(CoverageGap { from_s: t_stop, to_s: horizon_s });
                        break;
                    }
                }
            }
        }
    }
    Ok(SwitchSchedule { intervals, handovers, gaps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCandidate {
    pub cell_id: CellId,
    pub rsrp_db: f64,
    pub assistance: AssistanceInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// The strongest cell was clear of the hysteresis margin.
    RsrpArgmax,
    /// Near-equal RSRP; longest remaining service time wins.
    RemainingServiceTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSelection {
    pub cell_id: CellId,
    pub rule: SelectionRule,
}

/// Picks the strongest cell when it leads the runner-up by at least
/// `hysteresis_db`; otherwise, among cells within the hysteresis of the
/// strongest, the one that keeps serving longest after `now_s`. Ties go to
/// the lower cell id.
pub fn select_cell(candidates: &[CellCandidate], hysteresis_db: f64, now_s: f64) -> Result<CellSelection> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "need at least one cell"));
    }
    if let Some(c) = candidates.iter().find(|c| !c.rsrp_db.is_finite()) {
        return Err(Error::invalid("rsrp_db", format!("cell {} has non-finite RSRP", c.cell_id)));
    }
    if !(hysteresis_db.is_finite() && hysteresis_db >= 0.0) {
        return Err(Error::invalid("hysteresis_db", "must be finite and >= 0"));
    }
    let mut ranked: Vec<&CellCandidate> = candidates.iter().collect();
    ranked.sort_by(|a, b| b.rsrp_db.total_cmp(&a.rsrp_db).then(a.cell_id.cmp(&b.cell_id)));
    let best = ranked[0];
    let margin = ranked.get(1).map_or(f64::INFINITY, |second| best.rsrp_db - second.rsrp_db);
    if margin >= hysteresis_db {
        return Ok(CellSelection {
            cell_id: best.cell_id,
            rule: SelectionRule::RsrpArgmax,
        });
    }
    let chosen = ranked
        .iter()
        .filter(|c| best.rsrp_db - c.rsrp_db < hysteresis_db)
        .max_by(|a, b| {
            let ra = a.assistance.t_stop_serving_s - now_s;
            let rb = b.assistance.t_stop_serving_s - now_s;
            ra.total_cmp(&rb).then(b.cell_id.cmp(&a.cell_id))
        })
        .expect("best is always within its own hysteresis");
    Ok(CellSelection {
        cell_id: chosen.cell_id,
        rule: SelectionRule::RemainingServiceTime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn orbit(h: f64, e: f64) -> OrbitScenario {
        OrbitScenario::new(h, e).unwrap()
    }

    /// Footprint half-angle from the law of sines, independent of the
    /// arccos form.
    fn half_angle_law_of_sines(h: f64, e_deg: f64) -> f64 {
        let re = 6371.0;
        let e = e_deg.to_radians();
        let nadir = (re / (re + h) * e.cos()).asin();
        std::f64::consts::FRAC_PI_2 - e - nadir
    }

    #[test]
    fn coverage_diameters() {
        for (h, e) in [(750.0, 10.0), (750.0, 5.0), (600.0, 30.0)] {
            let g = coverage_geometry(&orbit(h, e)).unwrap();
            let oracle = half_angle_law_of_sines(h, e).to_degrees();
            assert!((g.central_angle_deg - oracle).abs() < 1e-9);
        }
        let d10 = coverage_geometry(&orbit(750.0, 10.0)).unwrap().diameter_km;
        let d5 = coverage_geometry(&orbit(750.0, 5.0)).unwrap().diameter_km;
        assert!((d10 - 4054.0).abs() < 10.0, "{d10}");
        assert!((d5 - 4884.0).abs() < 10.0, "{d5}");
        let mut zen = orbit(750.0, 10.0);
        zen.min_elevation_deg = 90.0;
        let lambda = visibility_half_angle(&zen);
        assert!(lambda.abs() < 1e-12);
    }

    #[test]
    fn visibility_window_about_ten_minutes() {
        let w = visibility_window(&orbit(750.0, 10.0)).unwrap() / 60.0;
        assert!((w - 10.0).abs() <= 2.0, "{w} min");
        let low = visibility_window(&orbit(600.0, 10.0)).unwrap();
        let high = visibility_window(&orbit(1200.0, 10.0)).unwrap();
        assert!(low < high);
        let inertial = visibility_window_in(&orbit(750.0, 10.0), EarthModel::NonRotating).unwrap();
        assert!(inertial < visibility_window(&orbit(750.0, 10.0)).unwrap());
    }

    #[test]
    fn seventy_satellites_gap_free() {
        let plane = ConstellationPlane::evenly_phased(orbit(750.0, 10.0), 70, 0.3).unwrap();
        let s = switch_schedule(&plane, 3.0 * 3600.0).unwrap();
        assert!(s.is_gap_free());
        assert!(!s.handovers.is_empty());
        for h in &s.handovers {
            assert!(h.t_start_serving_s <= h.t_stop_serving_s);
            assert!(h.target_elevation_deg >= 10.0 - 1e-9);
        }
    }

    #[test]
    fn sparse_plane_reports_gaps() {
        let plane = ConstellationPlane::evenly_phased(orbit(750.0, 10.0), 9, 0.0).unwrap();
        let s = switch_schedule(&plane, 3.0 * 3600.0).unwrap();
        assert!(!s.is_gap_free());
        for g in &s.gaps {
            assert!(g.to_s > g.from_s);
        }
    }

    #[test]
    fn spacing_equal_to_window_gives_zero_overlap() {
        let o = orbit(750.0, 10.0);
        let lambda = visibility_half_angle(&o);
        let plane = ConstellationPlane { orbit: o, phases_rad: vec![0.0, -2.0 * lambda] };
        let s = switch_schedule(&plane, 7200.0).unwrap();
        let h = s.handovers.first().expect("one switch");
        assert!((h.t_start_serving_s - h.t_stop_serving_s).abs() < 1e-6);
    }

    #[test]
    fn schedule_matches_pointwise_visibility() {
        let plane = ConstellationPlane::evenly_phased(orbit(750.0, 10.0), 12, 0.1).unwrap();
        let horizon = 7200.0;
        let s = switch_schedule(&plane, horizon).unwrap();
        for w in s.intervals.windows(2) {
            assert!(w[0].t_start_s <= w[1].t_start_s);
        }
        for sat in 0..plane.len() {
            let mine: Vec<_> = s.intervals.iter().filter(|iv| iv.sat_id.0 as usize == sat).collect();
            for w in mine.windows(2) {
                assert!(w[0].t_stop_s < w[1].t_start_s);
            }
        }
        let mut t = 0.5;
        while t < horizon {
            let covered = s.intervals.iter().any(|iv| iv.t_start_s <= t && t <= iv.t_stop_s);
            let visible = (0..plane.len()).any(|i| plane.is_visible(i, t));
            assert_eq!(covered, visible, "t = {t}");
            t += 3.7;
        }
    }

    #[test]
    fn short_horizon_rejected() {
        let plane = ConstellationPlane::evenly_phased(orbit(750.0, 10.0), 10, 0.0).unwrap();
        assert!(switch_schedule(&plane, 10.0).is_err());
        assert!(ConstellationPlane { orbit: orbit(750.0, 10.0), phases_rad: vec![0.0, TAU] }.validate().is_err());
    }

    fn cand(id: u32, rsrp: f64, stop: f64) -> CellCandidate {
        CellCandidate {
            cell_id: CellId(id),
            rsrp_db: rsrp,
            assistance: AssistanceInfo {
                serving: SatId(id),
                target: SatId(id),
                t_stop_serving_s: stop,
                t_start_serving_s: 0.0,
                ta_to_target_ms: 0.0,
                serving_elevation_deg: 45.0,
                target_elevation_deg: 45.0,
            },
        }
    }

    #[test]
    fn near_equal_cells_use_service_time() {
        let cells = [cand(1, -100.0, 30.0), cand(2, -100.4, 300.0)];
        let s = select_cell(&cells, 3.0, 0.0).unwrap();
        assert_eq!(s.cell_id, CellId(2));
        assert_eq!(s.rule, SelectionRule::RemainingServiceTime);
        let clear = [cand(1, -90.0, 30.0), cand(2, -100.0, 300.0)];
        assert_eq!(select_cell(&clear, 3.0, 0.0).unwrap().cell_id, CellId(1));
        assert_eq!(select_cell(&[cand(9, -120.0, 1.0)], 3.0, 0.0).unwrap().cell_id, CellId(9));
        assert!(select_cell(&[], 3.0, 0.0).is_err());
    }

    fn any_cells() -> impl Strategy<Value = Vec<CellCandidate>> {
        prop::collection::vec((-140.0f64..-60.0, 0.0f64..600.0), 1..8).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (r, s))| cand(i as u32, r, s))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn coverage_monotone(h in 400.0f64..2000.0, e in 0.0f64..80.0, de in 0.1f64..5.0, dh in 10.0f64..300.0) {
            let base = coverage_geometry(&orbit(h, e)).unwrap().diameter_km;
            prop_assert!(coverage_geometry(&orbit(h, e + de)).unwrap().diameter_km < base);
            prop_assert!(coverage_geometry(&orbit(h + dh, e)).unwrap().diameter_km > base);
            let wbase = visibility_window(&orbit(h, e)).unwrap();
            prop_assert!(visibility_window(&orbit(h, e + de)).unwrap() < wbase);
            prop_assert!(visibility_window(&orbit(h + dh, e)).unwrap() > wbase);
        }

        #[test]
        fn selection_shift_invariant(cells in any_cells(), shift in -30.0f64..30.0, hyst in 0.0f64..6.0) {
            let shifted: Vec<_> = cells.iter().map(|c| CellCandidate { rsrp_db: c.rsrp_db + shift, ..*c }).collect();
            prop_assert_eq!(select_cell(&cells, hyst, 0.0).unwrap(), select_cell(&shifted, hyst, 0.0).unwrap());
        }
    }
}
