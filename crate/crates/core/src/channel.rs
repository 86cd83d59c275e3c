//! Complex channel synthesis for the direct path and single-bounce specular
//! components, and noisy channel-state estimates.
//!
//! Coefficients are field transmission ratios: `|h|²` is the power collected
//! by an isotropic reference receiver divided by the power fed to one
//! transmit antenna. The direct path follows the free-space law
//! `h = λ/(4πd) · e^{−j2πd/λ}`; a specular bounce is the same law applied
//! from the mirrored antenna, scaled by the Fresnel reflection coefficient
//! and any configured per-bounce loss, and gated by visibility.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{mirror_point, visibility, Polarization, Reflector, Scenario, Vec3};
use crate::scalar::{real, Scalar};

/// Component key used for estimates whose per-path decomposition is unknown
/// (e.g. noisy aggregates).
pub const ESTIMATE_COMPONENT: u32 = 0;

/// Per-antenna complex transmission coefficients, split by multipath
/// component.
///
/// Every component list has the same length `L`; the aggregate channel is
/// their element-wise sum.
#[derive(Clone, Debug)]
pub struct ChannelVector<T> {
    wavelength: T,
    components: BTreeMap<u32, Vec<Complex<T>>>,
    aggregate: Vec<Complex<T>>,
}

impl<T: Scalar> ChannelVector<T> {
    pub fn from_components(
        wavelength: T,
        components: BTreeMap<u32, Vec<Complex<T>>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyComponents);
        }
        let len = components.values().next().expect("nonempty").len();
        if len == 0 || components.values().any(|v| v.len() != len) {
            return Err(Error::InvalidScenario(
                "all component lists must share the same nonzero length".into(),
            ));
        }
        let mut aggregate = vec![Complex::new(T::zero(), T::zero()); len];
        for list in components.values() {
            for (acc, &c) in aggregate.iter_mut().zip(list) {
                *acc += c;
            }
        }
        Ok(Self { wavelength, components, aggregate })
    }

    /// Wraps an aggregate vector whose per-component split is not known; it
    /// is stored under [`ESTIMATE_COMPONENT`].
    pub fn from_aggregate(wavelength: T, aggregate: Vec<Complex<T>>) -> Self {
        let mut components = BTreeMap::new();
        components.insert(ESTIMATE_COMPONENT, aggregate.clone());
        Self { wavelength, components, aggregate }
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    /// Number of transmit antennas `L`.
    pub fn len(&self) -> usize {
        self.aggregate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aggregate.is_empty()
    }

    pub fn component(&self, k: u32) -> Option<&[Complex<T>]> {
        self.components.get(&k).map(|v| v.as_slice())
    }

    pub fn component_indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.components.keys().copied()
    }

    /// Element-wise sum of all components.
    pub fn aggregate(&self) -> &[Complex<T>] {
        &self.aggregate
    }

    /// `‖h‖²` of the aggregate vector.
    pub fn norm_sq(&self) -> T {
        self.aggregate.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Quality of a channel estimate, expressed as a linear per-antenna SNR.
#[derive(Clone, Copy, Debug)]
pub struct CsiQuality<T> {
    snr: T,
}

impl<T: Scalar> CsiQuality<T> {
    pub fn new(snr: T) -> Result<Self> {
        if !(snr > T::zero()) {
            return Err(Error::NonpositiveSnr);
        }
        Ok(Self { snr })
    }

    pub fn snr(&self) -> T {
        self.snr
    }

    /// Noise variance per complex entry, `‖h‖²/(L·SNR)`.
    pub fn noise_variance(&self, h: &ChannelVector<T>) -> T {
        h.norm_sq() / (real::<T>(h.len() as f64) * self.snr)
    }
}

/// Free-space line-of-sight coefficient `λ/(4πd) · e^{−j2πd/λ}`.
pub fn los_coefficient<T: Scalar>(distance: T, wavelength: T) -> Result<Complex<T>> {
    if !(distance > T::zero()) {
        return Err(Error::ZeroDistance);
    }
    let amplitude = wavelength / (real::<T>(4.0) * T::PI() * distance);
    let phase = -(real::<T>(2.0) * T::PI() * distance / wavelength);
    Ok(Complex::from_polar(amplitude, phase))
}

/// Fresnel amplitude reflection coefficient of a lossless dielectric for
/// incidence angle `θ_i` measured from the surface normal.
///
/// Sign convention: at normal incidence the parallel (p) branch gives
/// `(√ε−1)/(√ε+1) > 0` and the perpendicular (s) branch `(1−√ε)/(1+√ε) < 0`.
/// The parallel branch vanishes at the Brewster angle `arctan √ε`. An
/// infinite `ε_r` models a perfect mirror: `+1` parallel, `−1` perpendicular.
pub fn fresnel_reflection<T: Scalar>(
    incidence: T,
    epsilon_r: T,
    polarization: Polarization,
) -> T {
    fresnel_from_cos(incidence.cos(), epsilon_r, polarization)
}

/// [`fresnel_reflection`] parametrized by `cos θ_i`, which the specular
/// geometry yields directly.
pub(crate) fn fresnel_from_cos<T: Scalar>(
    cos_incidence: T,
    epsilon_r: T,
    polarization: Polarization,
) -> T {
    if epsilon_r.is_infinite() {
        return match polarization {
            Polarization::Parallel => T::one(),
            Polarization::Perpendicular => -T::one(),
        };
    }
    let c = cos_incidence.max(T::zero()).min(T::one());
    let sin_sq = T::one() - c * c;
    let root = (epsilon_r - sin_sq).sqrt();
    match polarization {
        Polarization::Parallel => (epsilon_r * c - root) / (epsilon_r * c + root),
        Polarization::Perpendicular => (c - root) / (c + root),
    }
}

/// Per-bounce amplitude factor for the configured extra attenuation.
pub(crate) fn attenuation_amplitude<T: Scalar>(attenuation_db: T) -> T {
    real::<T>(10.0).powf(-attenuation_db / real::<T>(20.0))
}

/// Element amplitude pattern `cos^{q/2}` of the angle between the array
/// normal and the departure direction; `q = 0` keeps elements isotropic.
pub(crate) fn element_amplitude<T: Scalar>(
    array_normal: Vec3<T>,
    departure: Vec3<T>,
    exponent: T,
) -> T {
    if exponent == T::zero() {
        return T::one();
    }
    let d = departure.norm();
    if d == T::zero() {
        return T::one();
    }
    let cos = (array_normal.dot(departure) / d).abs();
    cos.powf(exponent / real::<T>(2.0))
}

/// Coefficient of the single-bounce specular path from one transmit antenna
/// to the device: visibility gate × Fresnel reflection × per-bounce loss ×
/// free-space law over the mirrored-source distance.
pub fn smc_coefficient<T: Scalar>(
    tx: Vec3<T>,
    scenario: &Scenario<T>,
    reflector: &Reflector<T>,
    wavelength: T,
) -> Result<Complex<T>> {
    if !visibility(tx, scenario.device, reflector)? {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let mirrored = mirror_point(tx, reflector);
    let path = scenario.device - mirrored;
    let d_tot = path.norm();
    let cos_incidence = (path.dot(reflector.normal) / d_tot).abs();
    let gamma = fresnel_from_cos(cos_incidence, reflector.epsilon_r, scenario.polarization);
    let att = attenuation_amplitude(reflector.attenuation_db);
    // The physical ray leaves the antenna toward the specular point, i.e.
    // toward the mirrored device.
    let element = element_amplitude(
        scenario.array.normal(),
        mirror_point(scenario.device, reflector) - tx,
        scenario.element_gain_exponent,
    );
    Ok(los_coefficient(d_tot, wavelength)? * (gamma * att * element))
}

/// Synthesizes the image-source channel for the requested multipath
/// components (`1` = direct path, `k ≥ 2` = configured reflectors).
pub fn synthesize_channel<T: Scalar>(
    scenario: &Scenario<T>,
    components: &[u32],
) -> Result<ChannelVector<T>> {
    if components.is_empty() {
        return Err(Error::EmptyComponents);
    }
    let mut ks: Vec<u32> = components.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        if k != 1 && scenario.reflector(k).is_none() {
            return Err(Error::UnknownComponent(k));
        }
    }
    let wavelength = scenario.wavelength();
    let positions = scenario.antenna_positions();
    let normal = scenario.array.normal();
    let mut map = BTreeMap::new();
    for &k in &ks {
        let list: Vec<Complex<T>> = if k == 1 {
            positions
                .iter()
                .map(|&p| {
                    let element = element_amplitude(
                        normal,
                        scenario.device - p,
                        scenario.element_gain_exponent,
                    );
                    los_coefficient(p.distance(scenario.device), wavelength)
                        .map(|c| c * element)
                })
                .collect::<Result<_>>()?
        } else {
            let reflector = scenario.reflector(k).expect("validated above");
            positions
                .iter()
                .map(|&p| smc_coefficient(p, scenario, reflector, wavelength))
                .collect::<Result<_>>()?
        };
        map.insert(k, list);
    }
    ChannelVector::from_components(wavelength, map)
}

/// Adds i.i.d. circular complex Gaussian noise with per-entry variance
/// `‖h‖²/(L·SNR)` to the aggregate channel. Deterministic for a given seed.
///
/// The per-component split is not meaningful for a noisy estimate, so the
/// result carries a single [`ESTIMATE_COMPONENT`] entry.
pub fn add_csi_noise<T: Scalar>(
    h: &ChannelVector<T>,
    quality: CsiQuality<T>,
    seed: u64,
) -> ChannelVector<T>
where
    StandardNormal: Distribution<T>,
{
    let sigma = (quality.noise_variance(h) / real::<T>(2.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<Complex<T>> = h
        .aggregate()
        .iter()
        .map(|&c| {
            let re: T = rng.sample(StandardNormal);
            let im: T = rng.sample(StandardNormal);
            c + Complex::new(re * sigma, im * sigma)
        })
        .collect();
    ChannelVector::from_aggregate(h.wavelength(), noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ReflectorExtent, Spacing, Ura};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn small_free_space(count_a: usize, count_b: usize) -> Scenario<f64> {
        let ura = Ura::new(
            Vec3::new(0.0, 0.0, 1.5),
            Vec3::unit_y(),
            Vec3::unit_z(),
            count_a,
            count_b,
            Spacing::Wavelengths(0.75),
        )
        .unwrap();
        Scenario::free_space(3.8e9, 10.0, ura, Vec3::new(12.3, 0.0, 1.5))
    }

    #[test]
    fn los_unit_magnitude_anchor() {
        let lam = 0.0789;
        let h = los_coefficient(lam / (4.0 * PI), lam).unwrap();
        assert_relative_eq!(h.norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn los_friis_at_hallway_range() {
        let lam = crate::wavelength::<f64>(3.8e9).unwrap();
        let d = 12.3;
        let h = los_coefficient(d, lam).unwrap();
        // Independent evaluation of the free-space law.
        let expected_power = (lam / (4.0 * PI * d)).powi(2);
        assert_relative_eq!(h.norm_sqr(), expected_power, max_relative = 1e-12);
        assert!((h.norm_sqr() - 2.61e-7).abs() < 0.01e-7);
        assert!((crate::db(h.norm_sqr()) + 65.8).abs() < 0.1);
        // Phase is −2πd/λ modulo 2π.
        let want = (-(2.0 * PI * d / lam)).rem_euclid(2.0 * PI);
        let got = h.arg().rem_euclid(2.0 * PI);
        assert_relative_eq!(got, want, max_relative = 1e-9);
    }

    #[test]
    fn los_inverse_square_in_db() {
        let lam = 0.0789;
        let a = los_coefficient(5.0, lam).unwrap().norm_sqr();
        let b = los_coefficient(10.0, lam).unwrap().norm_sqr();
        assert_relative_eq!(crate::db(a / b), 6.020599913, max_relative = 1e-9);
    }

    #[test]
    fn los_rejects_zero_distance() {
        assert_eq!(los_coefficient(0.0, 0.0789), Err(Error::ZeroDistance));
    }

    #[test]
    fn fresnel_brewster_null() {
        for eps in [2.0, 5.0, 10.0] {
            let brewster = eps.sqrt().atan();
            let g = fresnel_reflection(brewster, eps, Polarization::Parallel);
            assert!(g.abs() <= 1e-12, "eps {eps}: {g}");
        }
    }

    #[test]
    fn fresnel_normal_incidence() {
        let eps = 5.0f64;
        let want = (1.0 - eps.sqrt()) / (1.0 + eps.sqrt());
        assert_relative_eq!(
            fresnel_reflection(0.0, eps, Polarization::Perpendicular),
            want,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            fresnel_reflection(0.0, eps, Polarization::Parallel),
            -want,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fresnel_grazing_limit() {
        let theta = PI / 2.0 - 1e-9;
        for pol in [Polarization::Parallel, Polarization::Perpendicular] {
            let g = fresnel_reflection(theta, 5.0, pol);
            assert!(g.abs() > 1.0 - 1e-6, "{pol:?}: {g}");
            assert!(g.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn smc_gated_by_visibility() {
        let mut sc = small_free_space(1, 1);
        // A finite floor patch far from the specular point: invisible bounce.
        let r = Reflector::new(
            2,
            Vec3::new(-100.0, 0.0, 0.0),
            Vec3::unit_z(),
            ReflectorExtent::Rectangle {
                axis_a: Vec3::unit_x(),
                axis_b: Vec3::unit_y(),
                half_width_a: 0.5,
                half_width_b: 0.5,
            },
            5.0,
            0.0,
        )
        .unwrap();
        sc.reflectors.push(r.clone());
        let h = smc_coefficient(Vec3::new(0.0, 0.0, 1.5), &sc, &r, sc.wavelength()).unwrap();
        assert_eq!(h, Complex::new(0.0, 0.0));
    }

    #[test]
    fn smc_perfect_mirror_equals_image_source_los() {
        let mut sc = small_free_space(1, 1);
        sc.polarization = Polarization::Parallel;
        let r = Reflector::new(
            2,
            Vec3::zero(),
            Vec3::unit_z(),
            ReflectorExtent::Unbounded,
            f64::INFINITY,
            0.0,
        )
        .unwrap();
        sc.reflectors.push(r.clone());
        let tx = Vec3::new(0.0, 0.0, 1.5);
        let lam = sc.wavelength();
        let h = smc_coefficient(tx, &sc, &r, lam).unwrap();
        let d_tot = mirror_point(tx, &r).distance(sc.device);
        let los = los_coefficient(d_tot, lam).unwrap();
        assert_relative_eq!(h.re, los.re, max_relative = 1e-12);
        assert_relative_eq!(h.im, los.im, max_relative = 1e-12);
    }

    #[test]
    fn smc_weaker_than_los_in_hallway() {
        let sc: Scenario<f64> = Scenario::hallway_3p8();
        let lam = sc.wavelength();
        let tx = sc.array.center;
        let r = sc.reflector(3).unwrap();
        let h_smc = smc_coefficient(tx, &sc, r, lam).unwrap();
        let h_los = los_coefficient(tx.distance(sc.device), lam).unwrap();
        assert!(h_smc.norm_sqr() < h_los.norm_sqr());
        // Cross-check against the free-space law over the mirrored distance
        // times the reflection and attenuation power factors.
        let d_tot = mirror_point(tx, r).distance(sc.device);
        let path = sc.device - mirror_point(tx, r);
        let cos_i = (path.dot(r.normal) / path.norm()).abs();
        let gamma = fresnel_from_cos(cos_i, r.epsilon_r, sc.polarization);
        let expected = los_coefficient(d_tot, lam).unwrap().norm_sqr()
            * gamma.powi(2)
            * attenuation_amplitude(r.attenuation_db).powi(2);
        assert_relative_eq!(h_smc.norm_sqr(), expected, max_relative = 1e-12);
    }

    #[test]
    fn synthesize_pure_los_magnitudes() {
        let sc = small_free_space(4, 2);
        let h = synthesize_channel(&sc, &[1]).unwrap();
        assert_eq!(h.len(), 8);
        let lam = sc.wavelength();
        for (p, c) in sc.antenna_positions().iter().zip(h.aggregate()) {
            assert_relative_eq!(
                c.norm(),
                lam / (4.0 * PI * p.distance(sc.device)),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn synthesize_is_linear_in_components() {
        let sc: Scenario<f64> = Scenario::hallway_3p8();
        let h13 = synthesize_channel(&sc, &[1, 3]).unwrap();
        let h1 = synthesize_channel(&sc, &[1]).unwrap();
        let h3 = synthesize_channel(&sc, &[3]).unwrap();
        for ((a, b), c) in h1.aggregate().iter().zip(h3.aggregate()).zip(h13.aggregate()) {
            let sum = a + b;
            assert_relative_eq!(sum.re, c.re, max_relative = 1e-12);
            assert_relative_eq!(sum.im, c.im, max_relative = 1e-12);
        }
        // Aggregate equals the component sum.
        let agg: f64 = h13
            .aggregate()
            .iter()
            .zip(h13.component(1).unwrap().iter().zip(h13.component(3).unwrap()))
            .map(|(tot, (a, b))| (tot - (a + b)).norm())
            .sum();
        assert!(agg < 1e-12);
    }

    #[test]
    fn synthesize_two_path_toy_oracle() {
        // 1×2 array over a perfect floor: brute-force the two-path sum.
        let ura = Ura::new(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::unit_y(),
            Vec3::unit_z(),
            2,
            1,
            Spacing::Meters(0.1),
        )
        .unwrap();
        let mut sc = Scenario::free_space(3.8e9, 1.0, ura, Vec3::new(4.0, 0.0, 1.0));
        let r = Reflector::new(
            2,
            Vec3::zero(),
            Vec3::unit_z(),
            ReflectorExtent::Unbounded,
            5.0,
            3.0,
        )
        .unwrap();
        sc.reflectors.push(r);
        let lam = sc.wavelength();
        let h = synthesize_channel(&sc, &[1, 2]).unwrap();
        for (i, p) in sc.antenna_positions().iter().enumerate() {
            // Direct path.
            let d1 = p.distance(sc.device);
            let los = Complex::from_polar(lam / (4.0 * PI * d1), -2.0 * PI * d1 / lam);
            // Bounce via the image source two meters below ground.
            let m = Vec3::new(p.x, p.y, -p.z);
            let d2 = m.distance(sc.device);
            let cos_i = ((sc.device.z - m.z) / d2).abs();
            let gamma = fresnel_from_cos(cos_i, 5.0, sc.polarization);
            let att = 10.0f64.powf(-3.0 / 20.0);
            let smc = Complex::from_polar(lam / (4.0 * PI * d2), -2.0 * PI * d2 / lam)
                * (gamma * att);
            let want = los + smc;
            let got = h.aggregate()[i];
            assert_relative_eq!(got.re, want.re, max_relative = 1e-12);
            assert_relative_eq!(got.im, want.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn synthesize_rejects_unknown_component() {
        let sc = small_free_space(2, 2);
        assert!(matches!(
            synthesize_channel(&sc, &[1, 7]),
            Err(Error::UnknownComponent(7))
        ));
        assert!(matches!(synthesize_channel(&sc, &[]), Err(Error::EmptyComponents)));
    }

    #[test]
    fn csi_noise_vanishes_at_high_snr() {
        let sc = small_free_space(4, 4);
        let h = synthesize_channel(&sc, &[1]).unwrap();
        let noisy = add_csi_noise(&h, CsiQuality::new(1e12).unwrap(), 7);
        let diff: f64 = h
            .aggregate()
            .iter()
            .zip(noisy.aggregate())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!((diff / h.norm_sq()).sqrt() < 1e-5);
    }

    #[test]
    fn csi_noise_moment_matches_snr() {
        let sc = small_free_space(4, 4);
        let h = synthesize_channel(&sc, &[1]).unwrap();
        let snr = 2.5;
        let q = CsiQuality::new(snr).unwrap();
        let trials = 10_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let noisy = add_csi_noise(&h, q, crate::seeding::derive_seed(99, t));
            let n2: f64 = h
                .aggregate()
                .iter()
                .zip(noisy.aggregate())
                .map(|(a, b)| (b - a).norm_sqr())
                .sum();
            acc += n2;
        }
        let ratio = acc / trials as f64 / h.norm_sq();
        assert!((ratio * snr - 1.0).abs() < 0.01, "E‖n‖²/‖h‖²·SNR = {}", ratio * snr);
    }

    #[test]
    fn csi_noise_deterministic_per_seed() {
        let sc = small_free_space(3, 3);
        let h = synthesize_channel(&sc, &[1]).unwrap();
        let q = CsiQuality::new(1.0).unwrap();
        let a = add_csi_noise(&h, q, 1234);
        let b = add_csi_noise(&h, q, 1234);
        assert_eq!(a.aggregate(), b.aggregate());
        let c = add_csi_noise(&h, q, 1235);
        assert_ne!(a.aggregate(), c.aggregate());
    }

    #[test]
    fn wavelength_scaling_leaves_coefficients_invariant() {
        // Shrinking the geometry by s while raising the frequency by 1/s
        // preserves every phase and magnitude.
        let s = 0.1;
        let base: Scenario<f64> = Scenario::hallway_3p8();
        let mut scaled = base.clone();
        scaled.frequency_hz = base.frequency_hz / s;
        scaled.array.center = base.array.center * s;
        scaled.device = base.device * s;
        for r in &mut scaled.reflectors {
            r.anchor = r.anchor * s;
            if let ReflectorExtent::Rectangle { half_width_a, half_width_b, .. } = &mut r.extent {
                *half_width_a *= s;
                *half_width_b *= s;
            }
        }
        let h = synthesize_channel(&base, &[1, 2, 3, 4]).unwrap();
        let hs = synthesize_channel(&scaled, &[1, 2, 3, 4]).unwrap();
        for (a, b) in h.aggregate().iter().zip(hs.aggregate()) {
            assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-300), "{a} vs {b}");
        }
    }
}
