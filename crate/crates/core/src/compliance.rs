//! Human-exposure power-density limits, receivable-power budgets, and
//! compliance reporting.
//!
//! Both the EU reference levels and the FCC maximum-permissible-exposure
//! rules cap power density at 10 W/m² above a regional corner frequency
//! (2 GHz EU, 1.5 GHz FCC) and scale the cap linearly with frequency below
//! it. EIRP is reported alongside: transmit power times the maximum
//! far-field array gain.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::BeamWeights;
use crate::error::{Error, Result};
use crate::fieldmetrics::{ff_gain_max, FieldGrid};
use crate::geometry::Scenario;
use crate::scalar::{real, Scalar};

/// Regulatory region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Eu,
    Fcc,
}

impl Region {
    /// Frequency above which the flat 10 W/m² cap applies.
    pub fn corner_frequency_hz<T: Scalar>(self) -> T {
        match self {
            Region::Eu => real::<T>(2.0e9),
            Region::Fcc => real::<T>(1.5e9),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Eu => "EU",
            Region::Fcc => "FCC",
        }
    }
}

/// Regional power-density limit at a carrier frequency: 10 W/m² above the
/// corner frequency, scaled by `f/f_corner` below it.
pub fn s_max<T: Scalar>(frequency_hz: T, region: Region) -> Result<T> {
    if !(frequency_hz > T::zero()) {
        return Err(Error::NonpositiveFrequency);
    }
    let cap = real::<T>(10.0);
    let corner = region.corner_frequency_hz::<T>();
    if frequency_hz >= corner {
        Ok(cap)
    } else {
        Ok(cap * frequency_hz / corner)
    }
}

/// Exposure profile: region plus an optional EIRP cap to report against.
#[derive(Clone, Copy, Debug)]
pub struct RegulatoryProfile<T> {
    pub region: Region,
    pub eirp_limit_w: Option<T>,
}

impl<T: Scalar> RegulatoryProfile<T> {
    pub fn new(region: Region) -> Self {
        Self { region, eirp_limit_w: None }
    }

    pub fn s_max(&self, frequency_hz: T) -> Result<T> {
        s_max(frequency_hz, self.region)
    }
}

/// Largest power an isotropic receive antenna can draw from a power density
/// `s`: `P = S · λ²/4π`.
pub fn max_receivable_power<T: Scalar>(frequency_hz: T, s: T) -> Result<T> {
    let lam = crate::wavelength(frequency_hz)?;
    Ok(s * lam * lam / (real::<T>(4.0) * T::PI()))
}

/// How the power density is chosen per budget row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetMode {
    /// Flat 10 W/m² at every frequency.
    Flat10,
    /// The regional limit [`s_max`], which drops below the corner frequency.
    RegionScaled,
}

/// One row of a receivable-power budget.
#[derive(Clone, Copy, Debug)]
pub struct BudgetRow<T> {
    pub frequency_hz: T,
    pub s_w_per_m2: T,
    /// Isotropic effective aperture `λ²/4π`, m².
    pub aperture_m2: T,
    pub p_r_max_w: T,
}

/// Default budget frequencies: 917 MHz, 2.4, 3.8, 6 and 30 GHz.
pub const DEFAULT_BUDGET_FREQUENCIES_HZ: [f64; 5] = [917.0e6, 2.4e9, 3.8e9, 6.0e9, 30.0e9];

/// Receivable-power budget over a set of frequencies.
pub fn budget_table<T: Scalar>(
    frequencies_hz: &[T],
    mode: BudgetMode,
    region: Region,
) -> Result<Vec<BudgetRow<T>>> {
    frequencies_hz
        .iter()
        .map(|&f| {
            let s = match mode {
                BudgetMode::Flat10 => {
                    if !(f > T::zero()) {
                        return Err(Error::NonpositiveFrequency);
                    }
                    real::<T>(10.0)
                }
                BudgetMode::RegionScaled => s_max(f, region)?,
            };
            let lam = crate::wavelength(f)?;
            let aperture = lam * lam / (real::<T>(4.0) * T::PI());
            Ok(BudgetRow { frequency_hz: f, s_w_per_m2: s, aperture_m2: aperture, p_r_max_w: s * aperture })
        })
        .collect()
}

/// Compliance evaluation of one beamformed configuration against a regional
/// power-density limit.
#[derive(Clone, Debug, Serialize)]
pub struct ComplianceReport<T> {
    pub region: String,
    pub s_max_w_per_m2: T,
    pub max_power_density_w_per_m2: T,
    pub max_location_m: [T; 3],
    pub device_power_density_w_per_m2: T,
    /// True when the grid maximum stays within the limit (plus a 0.01 dB
    /// sampling allowance).
    pub compliant: bool,
    /// Headroom `10·log10(S_max / max S)`; negative when over the limit.
    pub margin_db: T,
    pub eirp_w: T,
    pub eirp_limit_w: Option<T>,
    pub eirp_within_limit: Option<bool>,
    pub g_nf_max_db: T,
    pub g_ff_max_db: T,
    pub tx_power_w: T,
    pub exclusion_radius_m: T,
}

impl<T: Scalar + Serialize> ComplianceReport<T> {
    /// JSON document with units spelled out in the field names.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evaluates a precomputed power-density grid against the regional limit.
///
/// Grid samples within `exclusion_radius` of the array plane are ignored,
/// as are masked (NaN) samples. The near-field gain maximum is evaluated
/// over the same grid; EIRP uses the global far-field gain maximum.
pub fn compliance_report<T: Scalar>(
    scenario: &Scenario<T>,
    weights: &BeamWeights<T>,
    grid: &FieldGrid<T>,
    profile: &RegulatoryProfile<T>,
    exclusion_radius: T,
) -> Result<ComplianceReport<T>> {
    let limit = profile.s_max(scenario.frequency_hz)?;
    let normal = scenario.array.normal();
    let center = scenario.array.center;
    let plane = &grid.plane;

    // Grid maximum outside the exclusion slab, ties to the lowest index.
    let mut best: Option<(usize, T)> = None;
    for iu in 0..plane.count_u {
        for iv in 0..plane.count_v {
            let (_, _, p) = plane.point(iu, iv);
            if (p - center).dot(normal).abs() < exclusion_radius {
                continue;
            }
            let v = grid.value(iu, iv);
            if !v.is_finite() {
                continue;
            }
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((iu * plane.count_v + iv, v)),
            }
        }
    }
    let (max_idx, max_s) = best.ok_or(Error::EmptyGrid)?;
    let (_, _, max_location) =
        plane.point(max_idx / plane.count_v, max_idx % plane.count_v);

    // Device sample: nearest grid point.
    let rel = scenario.device - plane.origin;
    let clamp_index = |coord: T, start: T, step: T, count: usize| -> usize {
        let idx = ((coord - start) / step).round().to_isize().unwrap_or(0);
        idx.clamp(0, count as isize - 1) as usize
    };
    let iu_dev = clamp_index(rel.dot(plane.axis_u), plane.u_start, plane.step_u, plane.count_u);
    let iv_dev = clamp_index(rel.dot(plane.axis_v), plane.v_start, plane.step_v, plane.count_v);
    let device_s = grid.value(iu_dev, iv_dev);

    // Near-field gain maximum over the same (non-excluded) sample points.
    let positions = scenario.antenna_positions();
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let min_distance = lam * real::<T>(0.5);
    let w = weights.weights();
    let count_v = plane.count_v;
    let nf_values: Vec<T> = (0..plane.len())
        .into_par_iter()
        .map(|idx| {
            let (_, _, q) = plane.point(idx / count_v, idx % count_v);
            if (q - center).dot(normal).abs() < exclusion_radius {
                return T::neg_infinity();
            }
            let mut sum = Complex::new(T::zero(), T::zero());
            for (&p, &wl) in positions.iter().zip(w) {
                let d = p.distance(q);
                if d < min_distance {
                    return T::neg_infinity();
                }
                sum += wl * Complex::from_polar(T::one(), -(two_pi * d / lam));
            }
            sum.norm_sqr()
        })
        .collect();
    let g_nf_max = nf_values
        .into_iter()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });

    let (_, _, g_ff_max) = ff_gain_max(scenario, weights);
    let eirp = scenario.tx_power_w * g_ff_max;

    // Allow the grid maximum to exceed the limit by 0.01 dB before flagging,
    // absorbing grid-sampling error.
    let tolerance = real::<T>(10.0).powf(real::<T>(0.001));
    let compliant = max_s <= limit * tolerance;
    let eirp_within_limit = profile.eirp_limit_w.map(|cap| eirp <= cap);

    Ok(ComplianceReport {
        region: profile.region.label().to_string(),
        s_max_w_per_m2: limit,
        max_power_density_w_per_m2: max_s,
        max_location_m: max_location.to_array(),
        device_power_density_w_per_m2: device_s,
        compliant,
        margin_db: crate::db(limit / max_s),
        eirp_w: eirp,
        eirp_limit_w: profile.eirp_limit_w,
        eirp_within_limit,
        g_nf_max_db: crate::db(g_nf_max),
        g_ff_max_db: crate::db(g_ff_max),
        tx_power_w: scenario.tx_power_w,
        exclusion_radius_m: exclusion_radius,
    })
}
