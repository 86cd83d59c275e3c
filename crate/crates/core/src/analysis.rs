//! Monte-Carlo characterization of reciprocity beamforming under noisy
//! channel knowledge.
//!
//! Each trial corrupts the channel with white circular Gaussian noise at a
//! given channel SNR, re-derives conjugate weights from the corrupted
//! estimate, and scores them on the true channel. Trials are seeded
//! independently from a base seed, so results are reproducible bit-for-bit
//! under any parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::beamforming::{conjugate_bf, planewave_los_bf, random_bf, spherical_los_bf, spherical_smc_bf};
use crate::channel::{add_csi_noise, synthesize_channel, ChannelVector, CsiQuality};
use crate::error::{Error, Result};
use crate::fieldmetrics::{pg_miso, pg_siso, power_gain};
use crate::geometry::Scenario;
use crate::scalar::{real, Scalar};
use crate::seeding::derive_seed;

/// Empirical power-gain distribution at one channel SNR, with symmetric
/// probability intervals `[mean − U_ς, mean + U_ς]` for ς ∈ {50, 90, 98} %.
#[derive(Clone, Debug)]
pub struct PgDistribution<T> {
    /// Linear channel SNR the samples were drawn at; zero for distributions
    /// that do not depend on an SNR (random beamforming).
    pub snr: T,
    pub samples: Vec<T>,
    /// Linear-domain sample mean.
    pub mean: T,
    pub u50: T,
    pub u90: T,
    pub u98: T,
}

impl<T: Scalar> PgDistribution<T> {
    pub fn from_samples(snr: T, samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mean = samples.iter().copied().sum::<T>() / real::<T>(samples.len() as f64);
        let u50 = symmetric_interval(&samples, mean, real::<T>(0.50))?;
        let u90 = symmetric_interval(&samples, mean, real::<T>(0.90))?;
        let u98 = symmetric_interval(&samples, mean, real::<T>(0.98))?;
        Ok(Self { snr, samples, mean, u50, u90, u98 })
    }
}

/// Power-gain samples of a reciprocity beamformer built from noisy channel
/// estimates: per trial, `ĥ = h + noise(snr)`, `w = ĥ*/‖ĥ‖`, `PG(h, w)`.
pub fn pg_samples<T: Scalar>(
    h: &ChannelVector<T>,
    snr: T,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<T>>
where
    StandardNormal: Distribution<T>,
{
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let quality = CsiQuality::new(snr)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let noisy = add_csi_noise(h, quality, derive_seed(base_seed, i as u64));
            let weights = conjugate_bf(&noisy)?;
            Ok(power_gain(h, &weights))
        })
        .collect()
}

/// Smallest `U ≥ 0` such that at least a fraction ς of the samples falls in
/// `[mean − U, mean + U]`: the `⌈ς·n⌉`-th smallest absolute deviation.
pub fn symmetric_interval<T: Scalar>(samples: &[T], mean: T, varsigma: T) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len();
    let k = (varsigma * real::<T>(n as f64))
        .ceil()
        .to_usize()
        .unwrap_or(0)
        .min(n);
    if k == 0 {
        return Ok(T::zero());
    }
    let mut deviations: Vec<T> = samples.iter().map(|&s| (s - mean).abs()).collect();
    deviations.sort_by(|a, b| a.partial_cmp(b).expect("deviations are comparable"));
    Ok(deviations[k - 1])
}

/// One [`PgDistribution`] per SNR point; the backbone of the efficiency
/// versus channel-knowledge curve.
pub fn pg_vs_snr_curve<T: Scalar>(
    h: &ChannelVector<T>,
    snrs: &[T],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<PgDistribution<T>>>
where
    StandardNormal: Distribution<T>,
{
    snrs.iter()
        .enumerate()
        .map(|(i, &snr)| {
            // Decorrelate SNR points without letting their trial seeds
            // overlap.
            let seed = derive_seed(base_seed, (i as u64) << 32);
            PgDistribution::from_samples(snr, pg_samples(h, snr, trials, seed)?)
        })
        .collect()
}

/// Power-gain distribution of weights drawn uniformly from the complex unit
/// sphere. Its mean sits at the single-antenna baseline; for large arrays
/// the normalized gain is asymptotically unit-mean exponential.
pub fn random_bf_distribution<T: Scalar>(
    h: &ChannelVector<T>,
    trials: usize,
    base_seed: u64,
) -> Result<PgDistribution<T>>
where
    StandardNormal: Distribution<T>,
{
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let samples: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let w = random_bf(h.len(), derive_seed(base_seed, i as u64))?;
            Ok(power_gain(h, &w))
        })
        .collect::<Result<_>>()?;
    PgDistribution::from_samples(T::zero(), samples)
}

/// SNR-independent reference levels for the curve: the two baselines and the
/// geometry-based beamformers evaluated on the same synthesized channel.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceLines<T> {
    pub pg_siso: T,
    pub pg_miso: T,
    pub planewave_los: T,
    pub spherical_los: T,
    pub spherical_smc: T,
}

pub fn reference_lines<T: Scalar>(
    scenario: &Scenario<T>,
    components: &[u32],
) -> Result<ReferenceLines<T>> {
    let h = synthesize_channel(scenario, components)?;
    Ok(ReferenceLines {
        pg_siso: pg_siso(&h),
        pg_miso: pg_miso(&h),
        planewave_los: power_gain(&h, &planewave_los_bf(scenario)?),
        spherical_los: power_gain(&h, &spherical_los_bf(scenario)?),
        spherical_smc: power_gain(&h, &spherical_smc_bf(scenario, components)?),
    })
}

/// Writes a curve as CSV: one row per SNR point with the mean and the dB
/// edges of the 50/90/98 % intervals. A lower edge at or below zero power is
/// written as `-inf`.
pub fn write_curve_csv<T: Scalar, W: std::io::Write>(
    curve: &[PgDistribution<T>],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "snr_db,mean_pg_db,u50_db_lo,u50_db_hi,u90_db_lo,u90_db_hi,u98_db_lo,u98_db_hi"
    )?;
    let edge_lo = |mean: T, u: T| -> T {
        let lo = mean - u;
        if lo > T::zero() {
            crate::db(lo)
        } else {
            T::neg_infinity()
        }
    };
    for d in curve {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            crate::db(d.snr),
            crate::db(d.mean),
            edge_lo(d.mean, d.u50),
            crate::db(d.mean + d.u50),
            edge_lo(d.mean, d.u90),
            crate::db(d.mean + d.u90),
            edge_lo(d.mean, d.u98),
            crate::db(d.mean + d.u98),
        )?;
    }
    Ok(())
}

/// Draws `n` unit-mean exponential variates (test oracle helper for the
/// low-SNR limit; inverse-CDF over a seeded uniform generator).
pub fn exponential_samples<T: Scalar>(n: usize, seed: u64) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: T = real(rng.random::<f64>());
            -(T::one() - u).ln()
        })
        .collect()
}
