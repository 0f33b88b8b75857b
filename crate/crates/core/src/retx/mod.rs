//! Retransmission strategies: HARQ with chase combining, plain ARQ, and
//! blind repetitions with RLC ARQ cleaning up residual errors.
//!
//! Combining is modelled as energy accumulation: `m` combined copies decode
//! like a single copy at `snr + 10 log10(m)`.

mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

pub use monte_carlo::{monte_carlo_retx, McEstimate, MIN_TRIALS};

/// LTE subframe, ms.
pub const TTI_MS: f64 = 1.0;

/// Repetition levels available to the physical layer, up to 2048.
pub const DEFAULT_REPETITIONS: [u32; 12] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048];

/// Truncated expectations leaving more than this much mass are rejected.
pub const NON_CONVERGENCE_RESIDUAL: f64 = 0.5;

/// Logistic SNR-to-BLER mapping in the dB domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerCurve {
    /// SNR at 50% BLER, dB.
    pub snr50_db: f64,
    /// Steepness, 1/dB.
    pub slope_per_db: f64,
}

impl BlerCurve {
    pub fn new(snr50_db: f64, slope_per_db: f64) -> Result<Self> {
        let c = Self {
            snr50_db,
            slope_per_db,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("slope_per_db", self.slope_per_db)?;
        if !self.snr50_db.is_finite() {
            return Err(Error::invalid("snr50_db", "must be finite"));
        }
        Ok(())
    }

    /// Curve with the given slope whose BLER after `combined` copies equals
    /// `target_bler` at `reference_snr_db`.
    pub fn calibrated(
        slope_per_db: f64,
        reference_snr_db: f64,
        target_bler: f64,
        combined: u32,
    ) -> Result<Self> {
        require_positive("slope_per_db", slope_per_db)?;
        if !(target_bler > 0.0 && target_bler < 1.0) {
            return Err(Error::invalid("target_bler", format!("must lie in (0, 1), got {target_bler}")));
        }
        if combined == 0 {
            return Err(Error::invalid("combined", "must be >= 1"));
        }
        let effective = reference_snr_db + combining_gain_db(combined);
        let snr50 = effective - ((1.0 - target_bler) / target_bler).ln() / slope_per_db;
        Self::new(snr50, slope_per_db)
    }

    pub fn bler(&self, snr_db: f64) -> f64 {
        1.0 / (1.0 + (self.slope_per_db * (snr_db - self.snr50_db)).exp())
    }
}

/// `10 log10(m)`.
pub fn combining_gain_db(copies: u32) -> f64 {
    10.0 * f64::from(copies).log10()
}

pub fn bler(curve: &BlerCurve, snr_db: f64) -> f64 {
    curve.bler(snr_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetxPolicy {
    /// MAC HARQ; every retransmission is soft-combined with earlier copies.
    HarqCombining { max_transmissions: u32 },
    /// Independent attempts without combining (HARQ disabled, RLC ARQ only).
    PlainArq { max_transmissions: u32 },
    /// `n_blind` combined physical-layer repetitions per RLC round.
    BlindPlusArq { n_blind: u32, max_rlc_rounds: u32 },
}

impl RetxPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RetxPolicy::HarqCombining { max_transmissions }
            | RetxPolicy::PlainArq { max_transmissions } => {
                if max_transmissions == 0 {
                    return Err(Error::invalid("max_transmissions", "must be >= 1"));
                }
            }
            RetxPolicy::BlindPlusArq {
                n_blind,
                max_rlc_rounds,
            } => {
                if n_blind == 0 {
                    return Err(Error::invalid("n_blind", "must be >= 1"));
                }
                if max_rlc_rounds == 0 {
                    return Err(Error::invalid("max_rlc_rounds", "must be >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Blind repetitions restricted to the physical-layer repetition levels.
    pub fn blind_repetitions(n_blind: u32, max_rlc_rounds: u32) -> Result<Self> {
        if !DEFAULT_REPETITIONS.contains(&n_blind) {
            return Err(Error::invalid(
                "n_blind",
                format!("{n_blind} is not an allowed repetition level"),
            ));
        }
        let p = RetxPolicy::BlindPlusArq {
            n_blind,
            max_rlc_rounds,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn label(&self) -> String {
        match *self {
            RetxPolicy::HarqCombining { .. } => "harq".into(),
            RetxPolicy::PlainArq { .. } => "arq".into(),
            RetxPolicy::BlindPlusArq { n_blind, .. } => format!("blind{n_blind}"),
        }
    }

    /// Largest number of subframes one transport block may consume.
    pub fn max_subframes(&self) -> u64 {
        match *self {
            RetxPolicy::HarqCombining { max_transmissions }
            | RetxPolicy::PlainArq { max_transmissions } => u64::from(max_transmissions),
            RetxPolicy::BlindPlusArq {
                n_blind,
                max_rlc_rounds,
            } => u64::from(n_blind) * u64::from(max_rlc_rounds),
        }
    }
}

/// Probability the block is still undecoded after `n` subframes.
///
/// For [`RetxPolicy::BlindPlusArq`], `n` counts subframes across whole
/// blind rounds and must be a multiple of `n_blind`. The policy's own
/// limits do not cap `n`.
pub fn residual_bler(policy: &RetxPolicy, curve: &BlerCurve, snr_db: f64, n: u32) -> Result<f64> {
    policy.validate()?;
    curve.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", "must be finite"));
    }
    Ok(match *policy {
        RetxPolicy::PlainArq { .. } => curve.bler(snr_db).powi(n as i32),
        RetxPolicy::HarqCombining { .. } => curve.bler(snr_db + combining_gain_db(n)),
        RetxPolicy::BlindPlusArq { n_blind, .. } => {
            if !n.is_multiple_of(n_blind) {
                return Err(Error::invalid(
                    "n",
                    format!("{n} subframes is not a whole number of {n_blind}-subframe rounds"),
                ));
            }
            let rounds = n / n_blind;
            curve
                .bler(snr_db + combining_gain_db(n_blind))
                .powi(rounds as i32)
        }
    })
}

/// Expected subframes spent on one transport block, truncated at the
/// policy's limits.
///
/// Fails with [`Error::NonConvergence`] when the probability of still
/// failing after the last allowed attempt exceeds one half.
pub fn expected_subframes(policy: &RetxPolicy, curve: &BlerCurve, snr_db: f64) -> Result<f64> {
    policy.validate()?;
    curve.validate()?;
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", "must be finite"));
    }
    let (partial, residual) = match *policy {
        RetxPolicy::HarqCombining { max_transmissions } => {
            // Attempt m+1 is made iff the first m combined copies failed.
            let mut sum = 1.0;
            for m in 1..max_transmissions {
                sum += curve.bler(snr_db + combining_gain_db(m));
            }
            (sum, curve.bler(snr_db + combining_gain_db(max_transmissions)))
        }
        RetxPolicy::PlainArq { max_transmissions } => {
            let p = curve.bler(snr_db);
            (geometric_partial_sum(p, max_transmissions), p.powi(max_transmissions as i32))
        }
        RetxPolicy::BlindPlusArq {
            n_blind,
            max_rlc_rounds,
        } => {
            let p = curve.bler(snr_db + combining_gain_db(n_blind));
            (
                f64::from(n_blind) * geometric_partial_sum(p, max_rlc_rounds),
                p.powi(max_rlc_rounds as i32),
            )
        }
    };
    if residual > NON_CONVERGENCE_RESIDUAL {
        return Err(Error::NonConvergence { partial, residual });
    }
    Ok(partial)
}

/// `sum_{k=0}^{terms-1} p^k`
fn geometric_partial_sum(p: f64, terms: u32) -> f64 {
    if p >= 1.0 {
        return f64::from(terms);
    }
    (1.0 - p.powi(terms as i32)) / (1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarqConfig {
    pub n_processes: u32,
    pub tbs_bits: u32,
    pub rtt_ms: f64,
    #[serde(default = "default_tti")]
    pub tti_ms: f64,
}

fn default_tti() -> f64 {
    TTI_MS
}

impl HarqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_processes == 0 {
            return Err(Error::invalid("n_processes", "must be >= 1"));
        }
        if self.tbs_bits == 0 {
            return Err(Error::invalid("tbs_bits", "must be >= 1"));
        }
        require_positive("rtt_ms", self.rtt_ms)?;
        require_positive("tti_ms", self.tti_ms)
    }
}

/// Stop-and-wait throughput ceiling, bit/s: each process carries one block
/// per RTT, and at most one block leaves per TTI.
pub fn peak_rate(cfg: &HarqConfig) -> Result<f64> {
    cfg.validate()?;
    let tbs = f64::from(cfg.tbs_bits);
    let per_rtt = f64::from(cfg.n_processes) * tbs / (cfg.rtt_ms / 1000.0);
    let per_tti = tbs / (cfg.tti_ms / 1000.0);
    Ok(per_rtt.min(per_tti))
}

/// HARQ processes needed to keep every TTI busy across one RTT.
pub fn harq_processes_for_peak(rtt_ms: f64, tti_ms: f64) -> Result<u32> {
    require_positive("rtt_ms", rtt_ms)?;
    require_positive("tti_ms", tti_ms)?;
    Ok((rtt_ms / tti_ms).ceil() as u32)
}

/// Smallest repetition level covering the airtime of one transport block
/// at `rate_bps`, with 1 ms subframes.
pub fn required_repetitions(tbs_bits: u32, rate_bps: f64, repetition_set: &[u32]) -> Result<u32> {
    require_positive("rate_bps", rate_bps)?;
    if repetition_set.is_empty() {
        return Err(Error::invalid("repetition_set", "must not be empty"));
    }
    if repetition_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("repetition_set", "must be strictly ascending"));
    }
    // bits * 1000 / rate keeps integer-valued durations exact.
    let duration_ms = (f64::from(tbs_bits) * 1000.0 / rate_bps).ceil() as u64;
    repetition_set
        .iter()
        .copied()
        .find(|&r| u64::from(r) >= duration_ms)
        .ok_or(Error::RepetitionsExceeded {
            duration_ms,
            max: *repetition_set.last().unwrap(),
        })
}

/// Coverage-enhancement mode presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeMode {
    CeModeA,
    CeModeB,
}

impl CeMode {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "ce_mode_a" => Ok(CeMode::CeModeA),
            "ce_mode_b" => Ok(CeMode::CeModeB),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }

    pub fn max_repetitions(self) -> u32 {
        match self {
            CeMode::CeModeA => 32,
            CeMode::CeModeB => 2048,
        }
    }

    pub fn harq_processes(self) -> u32 {
        match self {
            CeMode::CeModeA => 10,
            CeMode::CeModeB => 2,
        }
    }

    pub fn harq_config(self, tbs_bits: u32, rtt_ms: f64) -> HarqConfig {
        HarqConfig {
            n_processes: self.harq_processes(),
            tbs_bits,
            rtt_ms,
            tti_ms: TTI_MS,
        }
    }
}
