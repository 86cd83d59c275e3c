//! Transmit weight vectors and the wake-up beam sweep.
//!
//! All strategies return unit-norm weights. The received field amplitude is
//! `Σ_l h_l w_l`, so the conjugate (maximum-ratio) weights `w = h*/‖h‖`
//! align every term in phase and attain the Cauchy–Schwarz bound `‖h‖²` on
//! power gain.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{synthesize_channel, ChannelVector};
use crate::error::{Error, Result};
use crate::fieldmetrics::{power_density_at, received_power};
use crate::geometry::{Scenario, Vec3};
use crate::scalar::{real, Scalar};

/// How the weights were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Conjugate of a supplied channel vector (maximum-ratio transmission).
    Conjugate,
    /// Far-field weights from azimuth/elevation of the device only.
    PlanewaveLos,
    /// Spherical-wavefront weights from exact per-antenna distances.
    SphericalLos,
    /// Conjugate of the synthesized multipath channel.
    SphericalSmc,
    /// Uniform draw from the complex unit sphere.
    Random,
}

/// Unit-norm complex transmit weights.
#[derive(Clone, Debug)]
pub struct BeamWeights<T> {
    weights: Vec<Complex<T>>,
    strategy: Strategy,
}

impl<T: Scalar> BeamWeights<T> {
    /// Normalizes a raw weight vector to unit L2 norm.
    pub fn from_unnormalized(weights: Vec<Complex<T>>, strategy: Strategy) -> Result<Self> {
        let norm_sq: T = weights.iter().map(|w| w.norm_sqr()).sum();
        if !(norm_sq > T::zero()) || !norm_sq.is_finite() {
            return Err(Error::ZeroChannel);
        }
        let inv = norm_sq.sqrt().recip();
        let weights = weights.into_iter().map(|w| w * inv).collect();
        Ok(Self { weights, strategy })
    }

    pub fn weights(&self) -> &[Complex<T>] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn norm(&self) -> T {
        self.weights.iter().map(|w| w.norm_sqr()).sum::<T>().sqrt()
    }
}

/// Maximum-ratio weights `w = h*/‖h‖` for the aggregate channel.
pub fn conjugate_bf<T: Scalar>(h: &ChannelVector<T>) -> Result<BeamWeights<T>> {
    let raw: Vec<Complex<T>> = h.aggregate().iter().map(|c| c.conj()).collect();
    BeamWeights::from_unnormalized(raw, Strategy::Conjugate)
}

/// Far-field weights steered at the device direction: a linear phase ramp
/// `w_l ∝ e^{+j2π(u·p_l)/λ}` with `u` the unit vector from the array center
/// to the device.
pub fn planewave_los_bf<T: Scalar>(scenario: &Scenario<T>) -> Result<BeamWeights<T>> {
    let u = (scenario.device - scenario.array.center)
        .normalized()
        .ok_or(Error::DegenerateDirection)?;
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let raw: Vec<Complex<T>> = scenario
        .antenna_positions()
        .iter()
        .map(|&p| Complex::from_polar(T::one(), two_pi * u.dot(p) / lam))
        .collect();
    BeamWeights::from_unnormalized(raw, Strategy::PlanewaveLos)
}

/// Per-antenna magnitude handling for the spherical-wavefront beamformer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LosWeighting {
    /// `w = h_LOS*/‖h_LOS‖`: conjugate of the direct-path channel, with its
    /// mild near-field amplitude taper.
    MagnitudeWeighted,
    /// Classic focused phased array: equal magnitudes, phases
    /// `e^{+j2πd_l/λ}`.
    PhaseOnly,
}

/// Spherical-wavefront weights focused at the device using exact per-antenna
/// distances; magnitude-weighted by default.
pub fn spherical_los_bf<T: Scalar>(scenario: &Scenario<T>) -> Result<BeamWeights<T>> {
    spherical_los_bf_with(scenario, LosWeighting::MagnitudeWeighted)
}

/// [`spherical_los_bf`] with an explicit magnitude convention.
pub fn spherical_los_bf_with<T: Scalar>(
    scenario: &Scenario<T>,
    weighting: LosWeighting,
) -> Result<BeamWeights<T>> {
    match weighting {
        LosWeighting::MagnitudeWeighted => {
            let h = synthesize_channel(scenario, &[1])?;
            let raw: Vec<Complex<T>> = h.aggregate().iter().map(|c| c.conj()).collect();
            BeamWeights::from_unnormalized(raw, Strategy::SphericalLos)
        }
        LosWeighting::PhaseOnly => {
            let lam = scenario.wavelength();
            let two_pi = real::<T>(2.0) * T::PI();
            let raw: Vec<Complex<T>> = scenario
                .antenna_positions()
                .iter()
                .map(|&p| Complex::from_polar(T::one(), two_pi * p.distance(scenario.device) / lam))
                .collect();
            BeamWeights::from_unnormalized(raw, Strategy::SphericalLos)
        }
    }
}

/// Multipath-aware weights: conjugate of the channel synthesized from the
/// given component set. With all components this is the multibeam that
/// splits power across the direct path and every visible reflection.
pub fn spherical_smc_bf<T: Scalar>(
    scenario: &Scenario<T>,
    components: &[u32],
) -> Result<BeamWeights<T>> {
    let h = synthesize_channel(scenario, components)?;
    let raw: Vec<Complex<T>> = h.aggregate().iter().map(|c| c.conj()).collect();
    BeamWeights::from_unnormalized(raw, Strategy::SphericalSmc)
}

/// Weights drawn uniformly from the complex unit sphere (i.i.d. circular
/// Gaussian entries, normalized). Deterministic per seed.
pub fn random_bf<T: Scalar>(len: usize, seed: u64) -> Result<BeamWeights<T>>
where
    StandardNormal: Distribution<T>,
{
    if len == 0 {
        return Err(Error::ZeroChannel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let raw: Vec<Complex<T>> = (0..len)
            .map(|_| {
                let re: T = rng.sample(StandardNormal);
                let im: T = rng.sample(StandardNormal);
                Complex::new(re, im)
            })
            .collect();
        // A zero draw has probability zero but would break normalization.
        if let Ok(w) = BeamWeights::from_unnormalized(raw, Strategy::Random) {
            return Ok(w);
        }
    }
}

/// Outcome of a wake-up beam sweep.
#[derive(Clone, Debug)]
pub struct SweepOutcome<T> {
    /// Index of the first candidate whose delivered power reached the
    /// threshold, if any.
    pub hit: Option<usize>,
    /// Delivered power per evaluated candidate, in list order. The sweep
    /// stops at the first hit, so the trace ends there.
    pub trace: Vec<T>,
}

/// Sweeps spherical-wavefront focus points over `candidates` until the power
/// delivered to the true device position reaches `wake_threshold_w`.
///
/// Delivered power is the physical power density at the device (all scenario
/// components) times its effective aperture. Ties go to the earliest
/// candidate in list order.
pub fn beam_sweep<T: Scalar>(
    scenario: &Scenario<T>,
    candidates: &[Vec3<T>],
    wake_threshold_w: T,
) -> Result<SweepOutcome<T>> {
    if candidates.is_empty() {
        return Err(Error::InvalidScenario("candidate list is empty".into()));
    }
    let components = scenario.component_indices();
    let mut trace = Vec::with_capacity(candidates.len());
    for (i, &candidate) in candidates.iter().enumerate() {
        let mut focused = scenario.clone();
        focused.device = candidate;
        let w = spherical_los_bf(&focused)?;
        let s = power_density_at(scenario.device, &w, scenario, &components)?;
        let p_r = received_power(s, scenario.device_aperture_m2);
        trace.push(p_r);
        if p_r >= wake_threshold_w {
            return Ok(SweepOutcome { hit: Some(i), trace });
        }
    }
    Ok(SweepOutcome { hit: None, trace })
}
