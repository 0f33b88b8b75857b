//! Receiver SNR from a satellite link budget.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::orbit::PhysicalConstants;

/// S-band carrier of the built-in budgets.
pub const S_BAND_CARRIER_HZ: f64 = 2.0e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetInput {
    pub eirp_dbw: f64,
    pub g_over_t_db_per_k: f64,
    pub bandwidth_hz: f64,
    pub fspl_db: f64,
    pub atmospheric_loss_db: f64,
    pub polarization_loss_db: f64,
    pub scintillation_loss_db: f64,
    pub shadow_fading_db: f64,
}

impl LinkBudgetInput {
    pub fn validate(&self) -> Result<()> {
        require_positive("bandwidth_hz", self.bandwidth_hz)?;
        for (name, v) in [
            ("eirp_dbw", self.eirp_dbw),
            ("g_over_t_db_per_k", self.g_over_t_db_per_k),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        require_non_negative("fspl_db", self.fspl_db)?;
        require_non_negative("atmospheric_loss_db", self.atmospheric_loss_db)?;
        require_non_negative("polarization_loss_db", self.polarization_loss_db)?;
        require_non_negative("scintillation_loss_db", self.scintillation_loss_db)?;
        require_non_negative("shadow_fading_db", self.shadow_fading_db)
    }

    pub fn with_bandwidth(self, bandwidth_hz: f64) -> Self {
        Self {
            bandwidth_hz,
            ..self
        }
    }

    /// GEO downlink, 1080 kHz.
    pub fn geo_dl() -> Self {
        Self {
            eirp_dbw: 59.3,
            g_over_t_db_per_k: -31.6,
            bandwidth_hz: 1.08e6,
            fspl_db: 190.63,
            atmospheric_loss_db: 0.19,
            polarization_loss_db: 3.0,
            scintillation_loss_db: 2.2,
            shadow_fading_db: 3.0,
        }
    }

    /// GEO uplink, 30 kHz sub-PRB, 23 dBm UE.
    pub fn geo_ul() -> Self {
        Self {
            eirp_dbw: -7.0,
            g_over_t_db_per_k: 19.0,
            bandwidth_hz: 30e3,
            ..Self::geo_dl()
        }
    }

    /// LEO downlink, 1080 kHz.
    pub fn leo_dl() -> Self {
        Self {
            eirp_dbw: 34.3,
            g_over_t_db_per_k: -31.6,
            bandwidth_hz: 1.08e6,
            fspl_db: 159.1,
            atmospheric_loss_db: 0.1,
            polarization_loss_db: 3.0,
            scintillation_loss_db: 2.2,
            shadow_fading_db: 3.0,
        }
    }

    /// LEO uplink, 30 kHz sub-PRB, 23 dBm UE.
    pub fn leo_ul() -> Self {
        Self {
            eirp_dbw: -7.0,
            g_over_t_db_per_k: 1.1,
            bandwidth_hz: 30e3,
            ..Self::leo_dl()
        }
    }

    /// Built-in budget by name: `geo_dl`, `geo_ul`, `leo_dl`, `leo_ul`.
    pub fn fixture(name: &str) -> Result<Self> {
        match name {
            "geo_dl" => Ok(Self::geo_dl()),
            "geo_ul" => Ok(Self::geo_ul()),
            "leo_dl" => Ok(Self::leo_dl()),
            "leo_ul" => Ok(Self::leo_ul()),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }

    pub fn fixtures() -> BTreeMap<String, Self> {
        ["geo_dl", "geo_ul", "leo_dl", "leo_ul"]
            .into_iter()
            .map(|n| (n.to_string(), Self::fixture(n).unwrap()))
            .collect()
    }
}

/// One additive term of the SNR equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkTerm {
    Eirp,
    GOverT,
    Boltzmann,
    Fspl,
    ShadowFading,
    Scintillation,
    Atmospheric,
    Polarization,
    Bandwidth,
}

impl LinkTerm {
    pub fn name(self) -> &'static str {
        match self {
            LinkTerm::Eirp => "eirp",
            LinkTerm::GOverT => "g_over_t",
            LinkTerm::Boltzmann => "boltzmann",
            LinkTerm::Fspl => "fspl",
            LinkTerm::ShadowFading => "shadow_fading",
            LinkTerm::Scintillation => "scintillation",
            LinkTerm::Atmospheric => "atmospheric",
            LinkTerm::Polarization => "polarization",
            LinkTerm::Bandwidth => "bandwidth",
        }
    }
}

impl fmt::Display for LinkTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetResult {
    pub snr_db: f64,
    /// Signed dB contributions in equation order; summing them left to
    /// right reproduces `snr_db` exactly.
    pub breakdown: Vec<(LinkTerm, f64)>,
}

impl LinkBudgetResult {
    pub fn breakdown_map(&self) -> BTreeMap<&'static str, f64> {
        self.breakdown.iter().map(|(t, v)| (t.name(), *v)).collect()
    }
}

/// Receiver SNR with default physical constants.
pub fn snr(input: &LinkBudgetInput) -> Result<LinkBudgetResult> {
    snr_with(input, &PhysicalConstants::default())
}

/// `SNR = EIRP + G/T - 10log10(k) - FSPL - SF - SL - AL - PL - 10log10(BW)`
pub fn snr_with(input: &LinkBudgetInput, constants: &PhysicalConstants) -> Result<LinkBudgetResult> {
    input.validate()?;
    constants.validate()?;
    let breakdown = vec![
        (LinkTerm::Eirp, input.eirp_dbw),
        (LinkTerm::GOverT, input.g_over_t_db_per_k),
        (LinkTerm::Boltzmann, -constants.boltzmann_db()),
        (LinkTerm::Fspl, -input.fspl_db),
        (LinkTerm::ShadowFading, -input.shadow_fading_db),
        (LinkTerm::Scintillation, -input.scintillation_loss_db),
        (LinkTerm::Atmospheric, -input.atmospheric_loss_db),
        (LinkTerm::Polarization, -input.polarization_loss_db),
        (LinkTerm::Bandwidth, -10.0 * input.bandwidth_hz.log10()),
    ];
    let snr_db = breakdown.iter().fold(0.0, |acc, (_, v)| acc + v);
    Ok(LinkBudgetResult { snr_db, breakdown })
}

/// Free-space path loss, dB.
pub fn fspl(distance_km: f64, carrier_hz: f64) -> Result<f64> {
    fspl_with(distance_km, carrier_hz, &PhysicalConstants::default())
}

pub fn fspl_with(distance_km: f64, carrier_hz: f64, constants: &PhysicalConstants) -> Result<f64> {
    require_positive("distance_km", distance_km)?;
    require_positive("carrier_hz", carrier_hz)?;
    let ratio = 4.0 * std::f64::consts::PI * distance_km * 1e3 * carrier_hz / constants.c_m_s;
    Ok(20.0 * ratio.log10())
}

/// Distance at which free-space loss equals `fspl_db`, km.
pub fn distance_for_fspl(fspl_db: f64, carrier_hz: f64) -> Result<f64> {
    require_positive("carrier_hz", carrier_hz)?;
    if !fspl_db.is_finite() {
        return Err(Error::invalid("fspl_db", "must be finite"));
    }
    let c = PhysicalConstants::default().c_m_s;
    Ok(10f64.powf(fspl_db / 20.0) * c / (4.0 * std::f64::consts::PI * carrier_hz) / 1e3)
}

/// SNR of `base` re-evaluated at each bandwidth, other terms held fixed.
pub fn sub_prb_sweep(base: &LinkBudgetInput, bandwidths_hz: &[f64]) -> Result<Vec<(f64, f64)>> {
    if bandwidths_hz.is_empty() {
        return Err(Error::invalid("bandwidths_hz", "sweep needs at least one bandwidth"));
    }
    base.validate()?;
    bandwidths_hz
        .iter()
        .map(|&bw| Ok((bw, snr(&base.with_bandwidth(bw))?.snr_db)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_rows() {
        let cases = [
            (LinkBudgetInput::geo_dl(), -3.04, 0.02),
            (LinkBudgetInput::geo_ul(), -3.19, 0.02),
            (LinkBudgetInput::leo_dl(), 3.6, 0.05),
        ];
        for (input, expected, tol) in cases {
            let got = snr(&input).unwrap().snr_db;
            assert!((got - expected).abs() <= tol, "{got} vs {expected}");
        }
    }

    #[test]
    fn leo_uplink_evaluates_to_10_53() {
        // -7 + 1.1 + 228.599 - 159.1 - 8.3 - 44.771
        let got = snr(&LinkBudgetInput::leo_ul()).unwrap().snr_db;
        assert!((got - 10.528).abs() < 1e-3, "{got}");
    }

    #[test]
    fn only_boltzmann_survives() {
        let input = LinkBudgetInput {
            eirp_dbw: 0.0,
            g_over_t_db_per_k: 0.0,
            bandwidth_hz: 1.0,
            fspl_db: 0.0,
            atmospheric_loss_db: 0.0,
            polarization_loss_db: 0.0,
            scintillation_loss_db: 0.0,
            shadow_fading_db: 0.0,
        };
        let got = snr(&input).unwrap().snr_db;
        assert!((got - 228.599).abs() < 5e-4, "{got}");
        assert!((got - 228.601).abs() < 3e-3);
    }

    #[test]
    fn zero_bandwidth_rejected() {
        let bad = LinkBudgetInput::geo_ul().with_bandwidth(0.0);
        assert!(matches!(snr(&bad), Err(Error::InvalidInput { field: "bandwidth_hz", .. })));
        let mut neg = LinkBudgetInput::geo_ul();
        neg.shadow_fading_db = -1.0;
        assert!(snr(&neg).is_err());
    }

    #[test]
    fn fspl_reference_points() {
        let got = fspl(40581.0, S_BAND_CARRIER_HZ).unwrap();
        assert!((got - 190.63).abs() < 0.02, "{got}");
        let d1 = fspl(1000.0, 2e9).unwrap();
        let d2 = fspl(2000.0, 2e9).unwrap();
        assert!((d2 - d1 - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(fspl(0.0, 2e9).is_err());
        assert!(fspl(10.0, -1.0).is_err());
    }

    #[test]
    fn fspl_inverse_matches_bisection() {
        let (mut lo, mut hi) = (1.0f64, 1e6f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if fspl(mid, 2e9).unwrap() < 159.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let bisected = (lo * hi).sqrt();
        assert!((bisected - 1075.0).abs() < 5.0, "{bisected}");
        let closed = distance_for_fspl(159.1, 2e9).unwrap();
        assert!((closed - bisected).abs() < 1e-6);
    }

    #[test]
    fn geo_sweep() {
        let rows = sub_prb_sweep(&LinkBudgetInput::geo_ul(), &[30e3, 45e3, 90e3, 180e3]).unwrap();
        for ((_, got), want) in rows.iter().zip([-3.19, -4.95, -7.96, -10.97]) {
            assert!((got - want).abs() <= 0.02, "{got} vs {want}");
        }
        assert!(sub_prb_sweep(&LinkBudgetInput::geo_ul(), &[]).is_err());
        assert!(sub_prb_sweep(&LinkBudgetInput::geo_ul(), &[0.0]).is_err());
    }

    #[test]
    fn breakdown_reconstructs_exactly() {
        for (_, input) in LinkBudgetInput::fixtures() {
            let r = snr(&input).unwrap();
            let sum = r.breakdown.iter().fold(0.0, |a, (_, v)| a + v);
            assert_eq!(sum.to_bits(), r.snr_db.to_bits());
            assert_eq!(r.breakdown_map().len(), 9);
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(LinkBudgetInput::fixture("meo"), Err(Error::UnknownFixture(_))));
    }

    proptest! {
        #[test]
        fn snr_is_affine(x in -20.0f64..20.0, loss in 0.0f64..20.0) {
            let base = LinkBudgetInput::geo_dl();
            let s0 = snr(&base).unwrap().snr_db;
            let up = LinkBudgetInput { eirp_dbw: base.eirp_dbw + x, ..base };
            prop_assert!((snr(&up).unwrap().snr_db - s0 - x).abs() < 1e-9);
            let lossy = LinkBudgetInput { scintillation_loss_db: base.scintillation_loss_db + loss, ..base };
            prop_assert!((snr(&lossy).unwrap().snr_db - s0 + loss).abs() < 1e-9);
        }

        #[test]
        fn sweep_differences_follow_bandwidth_ratio(a in 1e3f64..1e7, b in 1e3f64..1e7) {
            let rows = sub_prb_sweep(&LinkBudgetInput::leo_ul(), &[a, b]).unwrap();
            let diff = rows[0].1 - rows[1].1;
            prop_assert!((diff - 10.0 * (b / a).log10()).abs() < 1e-9);
        }
    }
}
