//! Monte Carlo counterpart of the analytic retransmission model.
//!
//! Trials are split into fixed-size blocks; block `b` draws from a ChaCha
//! stream selected by `b` under the master seed. Results are therefore
//! identical for any number of rayon workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{combining_gain_db, BlerCurve, RetxPolicy};
use crate::error::{Error, Result};

pub const MIN_TRIALS: u64 = 1000;

const BLOCK_TRIALS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub residual_bler: f64,
    pub mean_subframes: f64,
    /// Standard error of `residual_bler`.
    pub residual_sigma: f64,
    /// Standard error of `mean_subframes`.
    pub subframes_sigma: f64,
    /// `3 * residual_sigma`.
    pub confidence_halfwidth: f64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    failures: u64,
    subframes: u64,
    subframes_sq: u128,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            failures: self.failures + o.failures,
            subframes: self.subframes + o.subframes,
            subframes_sq: self.subframes_sq + o.subframes_sq,
        }
    }
}

/// Per-trial sampler with the thresholds precomputed.
enum Sampler {
    /// Failure thresholds after 1..=max combined copies, one shared draw.
    Combining(Vec<f64>),
    Independent { p: f64, attempts: u32, cost: u64 },
}

impl Sampler {
    fn new(policy: &RetxPolicy, curve: &BlerCurve, snr_db: f64) -> Self {
        match *policy {
            RetxPolicy::HarqCombining { max_transmissions } => Sampler::Combining(
                (1..=max_transmissions)
                    .map(|m| curve.bler(snr_db + combining_gain_db(m)))
                    .collect(),
            ),
            RetxPolicy::PlainArq { max_transmissions } => Sampler::Independent {
                p: curve.bler(snr_db),
                attempts: max_transmissions,
                cost: 1,
            },
            RetxPolicy::BlindPlusArq {
                n_blind,
                max_rlc_rounds,
            } => Sampler::Independent {
                p: curve.bler(snr_db + combining_gain_db(n_blind)),
                attempts: max_rlc_rounds,
                cost: u64::from(n_blind),
            },
        }
    }

    /// Returns (failed, subframes used).
    fn trial(&self, rng: &mut ChaCha8Rng) -> (bool, u64) {
        match self {
            Sampler::Combining(thresholds) => {
                let u: f64 = rng.random();
                match thresholds.iter().position(|&t| u > t) {
                    Some(i) => (false, i as u64 + 1),
                    None => (true, thresholds.len() as u64),
                }
            }
            Sampler::Independent { p, attempts, cost } => {
                for k in 1..=u64::from(*attempts) {
                    let u: f64 = rng.random();
                    if u > *p {
                        return (false, k * cost);
                    }
                }
                (true, u64::from(*attempts) * cost)
            }
        }
    }
}

pub fn monte_carlo_retx(
    policy: &RetxPolicy,
    curve: &BlerCurve,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    policy.validate()?;
    curve.validate()?;
    if trials < MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("need at least {MIN_TRIALS}, got {trials}"),
        ));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", "must be finite"));
    }
    let sampler = Sampler::new(policy, curve, snr_db);
    let blocks = trials.div_ceil(BLOCK_TRIALS);

    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut t = Tally::default();
            for _ in 0..n {
                let (failed, used) = sampler.trial(&mut rng);
                t.failures += u64::from(failed);
                t.subframes += used;
                t.subframes_sq += u128::from(used) * u128::from(used);
            }
            t
        })
        .collect();
    let total = tallies.into_iter().fold(Tally::default(), Tally::merge);

    let n = trials as f64;
    let p = total.failures as f64 / n;
    let mean = total.subframes as f64 / n;
    let var = (total.subframes_sq as f64 / n - mean * mean).max(0.0);
    let residual_sigma = (p * (1.0 - p) / n).sqrt();
    Ok(McEstimate {
        trials,
        residual_bler: p,
        mean_subframes: mean,
        residual_sigma,
        subframes_sigma: (var / n).sqrt(),
        confidence_halfwidth: 3.0 * residual_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_trial_counts() {
        let c = BlerCurve::new(0.0, 1.0).unwrap();
        let p = RetxPolicy::PlainArq { max_transmissions: 2 };
        assert!(monte_carlo_retx(&p, &c, 0.0, 999, 1).is_err());
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let c = BlerCurve::new(0.0, 1.0).unwrap();
        let p = RetxPolicy::HarqCombining { max_transmissions: 4 };
        let a = monte_carlo_retx(&p, &c, -2.0, 50_000, 7).unwrap();
        let b = monte_carlo_retx(&p, &c, -2.0, 50_000, 7).unwrap();
        assert_eq!(a, b);
        let other = monte_carlo_retx(&p, &c, -2.0, 50_000, 8).unwrap();
        assert_ne!(a.residual_bler, other.residual_bler);
    }

    #[test]
    fn independent_of_worker_count() {
        let c = BlerCurve::new(0.0, 1.0).unwrap();
        let p = RetxPolicy::BlindPlusArq { n_blind: 4, max_rlc_rounds: 6 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_retx(&p, &c, -7.0, 100_000, 42).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn certain_success_uses_minimum() {
        let c = BlerCurve::new(-100.0, 1.0).unwrap();
        let p = RetxPolicy::BlindPlusArq { n_blind: 4, max_rlc_rounds: 3 };
        let e = monte_carlo_retx(&p, &c, 10.0, 2000, 3).unwrap();
        assert_eq!(e.residual_bler, 0.0);
        assert_eq!(e.mean_subframes, 4.0);
        assert_eq!(e.subframes_sigma, 0.0);
    }
}
