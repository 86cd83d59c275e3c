//! Power-density fields, array gain patterns, power gain, and received power.
//!
//! The field of a weighted array is the coherent sum of spherical waves from
//! every antenna and every visible mirror antenna:
//!
//! `S(q) = (P_t/4π) · |Σ_l w_l Σ_k V·Γ·10^{−att/20} · e^{−j2π d/λ} / d|²`
//!
//! with `d` measured from the mirrored antenna position for bounce
//! components. Near-field array gain uses unit-modulus spherical-wave
//! steering entries over direct-path distances only; multipath enters
//! through the weights, not the steering vector.

use num_complex::Complex;
use rayon::prelude::*;

use crate::beamforming::BeamWeights;
use crate::channel::{attenuation_amplitude, element_amplitude, fresnel_from_cos, ChannelVector};
use crate::error::{Error, Result};
use crate::geometry::{mirror_array, mirror_point, Reflector, Scenario, Vec3};
use crate::scalar::{real, Scalar};

/// What a grid holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// Power density, W/m².
    PowerDensity,
    /// Array gain, dimensionless.
    ArrayGain,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::PowerDensity => "power_density",
            Quantity::ArrayGain => "array_gain",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Quantity::PowerDensity => "w_per_m2",
            Quantity::ArrayGain => "dimensionless",
        }
    }
}

/// Sampling plan for a planar field cut.
#[derive(Clone, Debug)]
pub struct PlaneSpec<T> {
    pub origin: Vec3<T>,
    pub axis_u: Vec3<T>,
    pub axis_v: Vec3<T>,
    pub u_start: T,
    pub v_start: T,
    pub step_u: T,
    pub step_v: T,
    pub count_u: usize,
    pub count_v: usize,
}

impl<T: Scalar> PlaneSpec<T> {
    pub fn new(
        origin: Vec3<T>,
        axis_u: Vec3<T>,
        axis_v: Vec3<T>,
        u_start: T,
        v_start: T,
        step_u: T,
        step_v: T,
        count_u: usize,
        count_v: usize,
    ) -> Result<Self> {
        let tol = real::<T>(1e-9);
        if (axis_u.norm() - T::one()).abs() > tol
            || (axis_v.norm() - T::one()).abs() > tol
            || axis_u.dot(axis_v).abs() > tol
        {
            return Err(Error::InvalidScenario("plane axes must be orthonormal".into()));
        }
        if count_u == 0 || count_v == 0 {
            return Err(Error::InvalidScenario("plane sample counts must be positive".into()));
        }
        if !(step_u > T::zero()) || !(step_v > T::zero()) {
            return Err(Error::InvalidScenario("plane steps must be positive".into()));
        }
        Ok(Self { origin, axis_u, axis_v, u_start, v_start, step_u, step_v, count_u, count_v })
    }

    /// Vertical cut through the array center and the device: `u` runs from
    /// 1 m behind the array to 1 m past the device, `v` spans ±1.5 m around
    /// the array center height.
    pub fn default_vertical(scenario: &Scenario<T>, step: T) -> Result<Self> {
        let center = scenario.array.center;
        let axis_u = (scenario.device - center)
            .normalized()
            .ok_or(Error::DegenerateDirection)?;
        // Vertical-ish in-plane axis; fall back to x when the link itself is
        // vertical.
        let reference = if axis_u.dot(Vec3::unit_z()).abs() < real::<T>(0.99) {
            Vec3::unit_z()
        } else {
            Vec3::unit_x()
        };
        let axis_v = (reference - axis_u * axis_u.dot(reference))
            .normalized()
            .expect("reference is not collinear with axis_u");
        let reach = (scenario.device - center).norm() + T::one();
        let u_start = -T::one();
        let v_half = real::<T>(1.5);
        let count_u = ((reach - u_start) / step).floor().to_usize().unwrap_or(0) + 1;
        let count_v = ((v_half + v_half) / step).floor().to_usize().unwrap_or(0) + 1;
        Self::new(center, axis_u, axis_v, u_start, -v_half, step, step, count_u, count_v)
    }

    /// Plane coordinates and world position of sample `(iu, iv)`.
    pub fn point(&self, iu: usize, iv: usize) -> (T, T, Vec3<T>) {
        let u = self.u_start + self.step_u * real::<T>(iu as f64);
        let v = self.v_start + self.step_v * real::<T>(iv as f64);
        (u, v, self.origin + self.axis_u * u + self.axis_v * v)
    }

    pub fn len(&self) -> usize {
        self.count_u * self.count_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sampled field values over a plane. Samples that fall within half a
/// wavelength of an antenna or mirror antenna are stored as NaN.
#[derive(Clone, Debug)]
pub struct FieldGrid<T> {
    pub plane: PlaneSpec<T>,
    pub quantity: Quantity,
    values: Vec<T>,
}

impl<T: Scalar> FieldGrid<T> {
    pub fn new(plane: PlaneSpec<T>, quantity: Quantity, values: Vec<T>) -> Result<Self> {
        if values.len() != plane.len() {
            return Err(Error::InvalidScenario("value count does not match the plane".into()));
        }
        Ok(Self { plane, quantity, values })
    }

    /// Row-major over `(u, v)`: index `iu·count_v + iv`.
    pub fn value(&self, iu: usize, iv: usize) -> T {
        self.values[iu * self.plane.count_v + iv]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Writes the grid as CSV with header `u,v,x,y,z,value,quantity,units`,
    /// row-major over `(u, v)`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "u,v,x,y,z,value,quantity,units")?;
        for iu in 0..self.plane.count_u {
            for iv in 0..self.plane.count_v {
                let (u, v, p) = self.plane.point(iu, iv);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    u,
                    v,
                    p.x,
                    p.y,
                    p.z,
                    self.value(iu, iv),
                    self.quantity.label(),
                    self.quantity.units()
                )?;
            }
        }
        Ok(())
    }
}

/// One propagation route: the direct path or a mirror array behind one
/// reflector.
struct Route<'a, T> {
    positions: Vec<Vec3<T>>,
    reflector: Option<&'a Reflector<T>>,
    /// Sign of the array side of the reflector plane; field points on the
    /// other side receive no reflected ray.
    array_side: T,
}

struct FieldEvaluator<'a, T> {
    scenario: &'a Scenario<T>,
    weights: &'a [Complex<T>],
    routes: Vec<Route<'a, T>>,
    real_positions: Vec<Vec3<T>>,
    wavelength: T,
}

enum FieldSample<T> {
    Value(Complex<T>),
    TooClose,
}

impl<'a, T: Scalar> FieldEvaluator<'a, T> {
    fn new(
        scenario: &'a Scenario<T>,
        weights: &'a BeamWeights<T>,
        components: &[u32],
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyComponents);
        }
        let mut ks: Vec<u32> = components.to_vec();
        ks.sort_unstable();
        ks.dedup();
        let real_positions = scenario.antenna_positions();
        if weights.len() != real_positions.len() {
            return Err(Error::InvalidScenario(
                "weight vector length does not match the array".into(),
            ));
        }
        let mut routes = Vec::with_capacity(ks.len());
        for &k in &ks {
            if k == 1 {
                routes.push(Route {
                    positions: real_positions.clone(),
                    reflector: None,
                    array_side: T::one(),
                });
            } else {
                let reflector = scenario.reflector(k).ok_or(Error::UnknownComponent(k))?;
                let side = reflector.signed_distance(scenario.array.center).signum();
                routes.push(Route {
                    positions: mirror_array(&real_positions, reflector),
                    reflector: Some(reflector),
                    array_side: side,
                });
            }
        }
        Ok(Self {
            scenario,
            weights: weights.weights(),
            routes,
            real_positions,
            wavelength: scenario.wavelength(),
        })
    }

    /// Coherent sum `Σ_l w_l Σ_k V·Γ·att · e^{−j2πd/λ}/d` at `q`.
    ///
    /// Reports `TooClose` when `q` comes nearer than `min_distance` (or
    /// exactly coincides) to any contributing antenna or mirror antenna.
    fn field_sum_at(&self, q: Vec3<T>, min_distance: T) -> FieldSample<T> {
        let two_pi = real::<T>(2.0) * T::PI();
        let exponent = self.scenario.element_gain_exponent;
        let normal = self.scenario.array.normal();
        let mut total = Complex::new(T::zero(), T::zero());
        for route in &self.routes {
            let (gate, mirrored_q) = match route.reflector {
                None => (true, None),
                Some(r) => {
                    let sd_q = r.signed_distance(q);
                    // No reflected ray reaches a point on or behind the
                    // reflector plane.
                    if sd_q * route.array_side <= T::zero() {
                        (false, None)
                    } else if exponent != T::zero() {
                        (true, Some(mirror_point(q, r)))
                    } else {
                        (true, None)
                    }
                }
            };
            if !gate {
                continue;
            }
            for (l, (&pos, &w)) in route.positions.iter().zip(self.weights).enumerate() {
                let path = q - pos;
                let d = path.norm();
                if d == T::zero() || d < min_distance {
                    return FieldSample::TooClose;
                }
                let mut amp = d.recip();
                if let Some(r) = route.reflector {
                    let cos_i = (path.dot(r.normal) / d).abs();
                    let gamma =
                        fresnel_from_cos(cos_i, r.epsilon_r, self.scenario.polarization);
                    let visible = match &r.extent {
                        crate::geometry::ReflectorExtent::Unbounded => true,
                        crate::geometry::ReflectorExtent::Rectangle { .. } => {
                            let sd_m = r.signed_distance(pos);
                            let sd_q = r.signed_distance(q);
                            let t = sd_m / (sd_m - sd_q);
                            r.contains_on_plane(pos + (q - pos) * t)
                        }
                    };
                    if !visible {
                        continue;
                    }
                    amp = amp * gamma * attenuation_amplitude(r.attenuation_db);
                }
                if exponent != T::zero() {
                    let target = mirrored_q.unwrap_or(q);
                    amp = amp
                        * element_amplitude(normal, target - self.real_positions[l], exponent);
                }
                total += w * Complex::from_polar(amp, -(two_pi * d / self.wavelength));
            }
        }
        FieldSample::Value(total)
    }

    fn power_density(&self, sum: Complex<T>) -> T {
        self.scenario.tx_power_w / (real::<T>(4.0) * T::PI()) * sum.norm_sqr()
    }
}

/// Power density at a single point, W/m². The point must not coincide with
/// any antenna or mirror-antenna position of the evaluated components.
pub fn power_density_at<T: Scalar>(
    q: Vec3<T>,
    weights: &BeamWeights<T>,
    scenario: &Scenario<T>,
    components: &[u32],
) -> Result<T> {
    let eval = FieldEvaluator::new(scenario, weights, components)?;
    match eval.field_sum_at(q, T::zero()) {
        FieldSample::TooClose => Err(Error::SingularPoint),
        FieldSample::Value(sum) => Ok(eval.power_density(sum)),
    }
}

/// Power density sampled over a plane. Points within half a wavelength of a
/// (mirror-)antenna are recorded as NaN instead of erroring.
pub fn power_density_grid<T: Scalar>(
    scenario: &Scenario<T>,
    weights: &BeamWeights<T>,
    plane: &PlaneSpec<T>,
    components: &[u32],
) -> Result<FieldGrid<T>> {
    let eval = FieldEvaluator::new(scenario, weights, components)?;
    let min_distance = scenario.wavelength() * real::<T>(0.5);
    let count_v = plane.count_v;
    let values: Vec<T> = (0..plane.len())
        .into_par_iter()
        .map(|idx| {
            let (_, _, q) = plane.point(idx / count_v, idx % count_v);
            match eval.field_sum_at(q, min_distance) {
                FieldSample::TooClose => T::nan(),
                FieldSample::Value(sum) => eval.power_density(sum),
            }
        })
        .collect();
    FieldGrid::new(plane.clone(), Quantity::PowerDensity, values)
}

/// Power gain `PG = |Σ_l h_l w_l|²`: the ratio of power received at the
/// device to total radiated power. Conjugate weights maximize it.
pub fn power_gain<T: Scalar>(h: &ChannelVector<T>, weights: &BeamWeights<T>) -> T {
    assert_eq!(h.len(), weights.len(), "channel and weights must have equal length");
    let sum: Complex<T> = h
        .aggregate()
        .iter()
        .zip(weights.weights())
        .map(|(&hl, &wl)| hl * wl)
        .sum();
    sum.norm_sqr()
}

/// Average single-antenna power gain `‖h‖²/L`: the efficiency baseline of an
/// equivalent single-transmit-antenna system.
pub fn pg_siso<T: Scalar>(h: &ChannelVector<T>) -> T {
    h.norm_sq() / real::<T>(h.len() as f64)
}

/// Coherent upper bound `‖h‖²` attained by maximum-ratio weights.
pub fn pg_miso<T: Scalar>(h: &ChannelVector<T>) -> T {
    h.norm_sq()
}

/// Summary of a link's power gain figures.
#[derive(Clone, Debug)]
pub struct PgReport<T> {
    pub pg: T,
    pub pg_db: T,
    pub pg_siso: T,
    pub pg_miso: T,
    pub received_power_w: T,
}

/// Evaluates [`power_gain`] along with its baselines and the received power
/// `PG · P_t`.
pub fn pg_report<T: Scalar>(
    h: &ChannelVector<T>,
    weights: &BeamWeights<T>,
    tx_power_w: T,
) -> PgReport<T> {
    let pg = power_gain(h, weights);
    PgReport {
        pg,
        pg_db: crate::db(pg),
        pg_siso: pg_siso(h),
        pg_miso: pg_miso(h),
        received_power_w: pg * tx_power_w,
    }
}

/// Near-field array gain at a point: `G(q) = |Σ_l a_l(q) w_l|²` with
/// unit-modulus spherical-wave steering entries `a_l = e^{−j2π d_l/λ}` over
/// direct-path distances. Bounded by the antenna count `L`.
pub fn nf_gain_at<T: Scalar>(
    q: Vec3<T>,
    weights: &BeamWeights<T>,
    scenario: &Scenario<T>,
) -> Result<T> {
    let positions = scenario.antenna_positions();
    assert_eq!(positions.len(), weights.len(), "weights must match the array");
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let mut sum = Complex::new(T::zero(), T::zero());
    for (&p, &w) in positions.iter().zip(weights.weights()) {
        let d = p.distance(q);
        if d == T::zero() {
            return Err(Error::SingularPoint);
        }
        sum += w * Complex::from_polar(T::one(), -(two_pi * d / lam));
    }
    Ok(sum.norm_sqr())
}

/// Near-field array gain sampled over a plane; NaN within half a wavelength
/// of an antenna.
pub fn nf_gain_grid<T: Scalar>(
    scenario: &Scenario<T>,
    weights: &BeamWeights<T>,
    plane: &PlaneSpec<T>,
) -> Result<FieldGrid<T>> {
    let positions = scenario.antenna_positions();
    if positions.len() != weights.len() {
        return Err(Error::InvalidScenario(
            "weight vector length does not match the array".into(),
        ));
    }
    let lam = scenario.wavelength();
    let min_distance = lam * real::<T>(0.5);
    let two_pi = real::<T>(2.0) * T::PI();
    let count_v = plane.count_v;
    let w = weights.weights();
    let values: Vec<T> = (0..plane.len())
        .into_par_iter()
        .map(|idx| {
            let (_, _, q) = plane.point(idx / count_v, idx % count_v);
            let mut sum = Complex::new(T::zero(), T::zero());
            for (&p, &wl) in positions.iter().zip(w) {
                let d = p.distance(q);
                if d < min_distance {
                    return T::nan();
                }
                sum += wl * Complex::from_polar(T::one(), -(two_pi * d / lam));
            }
            sum.norm_sqr()
        })
        .collect();
    FieldGrid::new(plane.clone(), Quantity::ArrayGain, values)
}

/// Far-field array gain toward `(azimuth, elevation)` in the array frame:
/// boresight is the array normal, azimuth rotates toward `axis_a`, elevation
/// toward `axis_b`. `G = |Σ_l a_l w_l|²` with `a_l = e^{−j2π (u·p_l)/λ}`.
pub fn ff_gain<T: Scalar>(
    scenario: &Scenario<T>,
    weights: &BeamWeights<T>,
    azimuth: T,
    elevation: T,
) -> T {
    let n = scenario.array.normal();
    let a = scenario.array.axis_a;
    let b = scenario.array.axis_b;
    let u = (n * azimuth.cos() + a * azimuth.sin()) * elevation.cos() + b * elevation.sin();
    ff_gain_toward(scenario, weights, u)
}

fn ff_gain_toward<T: Scalar>(scenario: &Scenario<T>, weights: &BeamWeights<T>, u: Vec3<T>) -> T {
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let sum: Complex<T> = scenario
        .antenna_positions()
        .iter()
        .zip(weights.weights())
        .map(|(&p, &w)| w * Complex::from_polar(T::one(), -(two_pi * u.dot(p) / lam)))
        .sum();
    sum.norm_sqr()
}

/// Far-field gain over a grid of directions; rows are `(azimuth, elevation,
/// gain)` with azimuth varying slowest.
pub fn ff_gain_table<T: Scalar>(
    scenario: &Scenario<T>,
    weights: &BeamWeights<T>,
    azimuths: &[T],
    elevations: &[T],
) -> Vec<(T, T, T)> {
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let positions = scenario.antenna_positions();
    let n = scenario.array.normal();
    let a = scenario.array.axis_a;
    let b = scenario.array.axis_b;
    let w = weights.weights();
    let mut cells: Vec<(T, T)> = Vec::with_capacity(azimuths.len() * elevations.len());
    for &az in azimuths {
        for &el in elevations {
            cells.push((az, el));
        }
    }
    cells
        .into_par_iter()
        .map(|(az, el)| {
            let u = (n * az.cos() + a * az.sin()) * el.cos() + b * el.sin();
            let sum: Complex<T> = positions
                .iter()
                .zip(w)
                .map(|(&p, &wl)| wl * Complex::from_polar(T::one(), -(two_pi * u.dot(p) / lam)))
                .sum();
            (az, el, sum.norm_sqr())
        })
        .collect()
}

/// Global maximum of the far-field gain over all directions.
///
/// The pattern of a planar array with unit-modulus steering entries depends
/// on the direction only through its two in-plane components, so the search
/// runs over the unit disk (coarse scan plus local refinement) and is
/// mirror-symmetric about the array plane.
pub fn ff_gain_max<T: Scalar>(scenario: &Scenario<T>, weights: &BeamWeights<T>) -> (T, T, T) {
    let lam = scenario.wavelength();
    let two_pi = real::<T>(2.0) * T::PI();
    let center = scenario.array.center;
    let a = scenario.array.axis_a;
    let b = scenario.array.axis_b;
    let coords: Vec<(T, T, Complex<T>)> = scenario
        .antenna_positions()
        .iter()
        .zip(weights.weights())
        .map(|(&p, &w)| ((p - center).dot(a), (p - center).dot(b), w))
        .collect();
    let gain_at = |ua: T, ub: T| -> T {
        let sum: Complex<T> = coords
            .iter()
            .map(|&(pa, pb, w)| {
                w * Complex::from_polar(T::one(), -(two_pi * (ua * pa + ub * pb) / lam))
            })
            .sum();
        sum.norm_sqr()
    };
    // Coarse scan of the unit disk; the argmax is taken sequentially in
    // index order so the result does not depend on the thread count.
    let coarse = real::<T>(0.005);
    let steps = (real::<T>(2.0) / coarse).to_usize().unwrap_or(400);
    let gains: Vec<(T, T, T)> = (0..=steps)
        .into_par_iter()
        .flat_map_iter(|i| {
            let coords = &coords;
            (0..=steps).map(move |j| {
                let ua = -T::one() + coarse * real::<T>(i as f64);
                let ub = -T::one() + coarse * real::<T>(j as f64);
                if ua * ua + ub * ub > T::one() {
                    (ua, ub, T::neg_infinity())
                } else {
                    let sum: Complex<T> = coords
                        .iter()
                        .map(|&(pa, pb, w)| {
                            w * Complex::from_polar(
                                T::one(),
                                -(two_pi * (ua * pa + ub * pb) / lam),
                            )
                        })
                        .sum();
                    (ua, ub, sum.norm_sqr())
                }
            })
        })
        .collect();
    let (mut best_ua, mut best_ub, mut best_gain) =
        (T::zero(), T::zero(), T::neg_infinity());
    for (ua, ub, g) in gains {
        if g > best_gain {
            best_ua = ua;
            best_ub = ub;
            best_gain = g;
        }
    }
    // Local refinement around the best coarse cell.
    let mut step = coarse;
    for _ in 0..10 {
        step = step * real::<T>(0.5);
        for di in -2i32..=2 {
            for dj in -2i32..=2 {
                let ua = best_ua + step * real::<T>(di as f64);
                let ub = best_ub + step * real::<T>(dj as f64);
                if ua * ua + ub * ub > T::one() {
                    continue;
                }
                let g = gain_at(ua, ub);
                if g > best_gain {
                    best_gain = g;
                    best_ua = ua;
                    best_ub = ub;
                }
            }
        }
    }
    let elevation = best_ub.max(-T::one()).min(T::one()).asin();
    let cos_el = (T::one() - best_ub * best_ub).sqrt();
    let azimuth = if cos_el > T::zero() {
        (best_ua / cos_el).max(-T::one()).min(T::one()).asin()
    } else {
        T::zero()
    };
    (azimuth, elevation, best_gain)
}

/// Sample holding the grid's largest finite value; ties go to the lowest
/// linear index. NaN (masked) samples are skipped.
pub fn find_global_max<T: Scalar>(grid: &FieldGrid<T>) -> Result<(Vec3<T>, T)> {
    let mut best: Option<(usize, T)> = None;
    for (idx, &v) in grid.values().iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((idx, v)),
        }
    }
    let (idx, value) = best.ok_or(Error::EmptyGrid)?;
    let (_, _, p) = grid.plane.point(idx / grid.plane.count_v, idx % grid.plane.count_v);
    Ok((p, value))
}

/// Grid axis selector for 1-D cuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridAxis {
    U,
    V,
}

/// Half-power (−3 dB) extent of the field along one grid axis through the
/// sample nearest to `device`.
///
/// Crossings are linearly interpolated; if the field never drops below the
/// threshold toward an edge, the extent is measured to the edge (a constant
/// field therefore spans the whole axis).
pub fn focal_width<T: Scalar>(
    grid: &FieldGrid<T>,
    device: Vec3<T>,
    axis: GridAxis,
) -> Result<T> {
    let plane = &grid.plane;
    let rel = device - plane.origin;
    let to_index = |coord: T, start: T, step: T, count: usize| -> usize {
        let idx = ((coord - start) / step).round().to_isize().unwrap_or(0);
        idx.clamp(0, count as isize - 1) as usize
    };
    let iu = to_index(rel.dot(plane.axis_u), plane.u_start, plane.step_u, plane.count_u);
    let iv = to_index(rel.dot(plane.axis_v), plane.v_start, plane.step_v, plane.count_v);
    let reference = grid.value(iu, iv);
    if !reference.is_finite() || !(reference > T::zero()) {
        return Err(Error::EmptyGrid);
    }
    let threshold = reference * real::<T>(10.0).powf(real::<T>(-0.3));
    let (center, count, step) = match axis {
        GridAxis::U => (iu, plane.count_u, plane.step_u),
        GridAxis::V => (iv, plane.count_v, plane.step_v),
    };
    let sample = |i: usize| -> T {
        let v = match axis {
            GridAxis::U => grid.value(i, iv),
            GridAxis::V => grid.value(iu, i),
        };
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    let walk = |indices: &mut dyn Iterator<Item = usize>| -> T {
        let mut prev = reference;
        let mut travelled = T::zero();
        for i in indices {
            let cur = sample(i);
            if cur < threshold {
                let frac = (prev - threshold) / (prev - cur);
                return travelled + step * frac;
            }
            travelled += step;
            prev = cur;
        }
        travelled
    };
    let right = walk(&mut ((center + 1)..count));
    let left = walk(&mut (0..center).rev());
    Ok(left + right)
}

/// Power collected by an aperture of `a_r` m² in a field of `s` W/m².
pub fn received_power<T: Scalar>(s: T, a_r: T) -> T {
    s * a_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{conjugate_bf, random_bf, spherical_los_bf_with, LosWeighting, Strategy};
    use crate::channel::synthesize_channel;
    use crate::geometry::{Spacing, Ura};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn free_space(count_a: usize, count_b: usize, device: Vec3<f64>) -> Scenario<f64> {
        let ura = Ura::new(
            Vec3::new(0.0, 0.0, 1.5),
            Vec3::unit_y(),
            Vec3::unit_z(),
            count_a,
            count_b,
            Spacing::Wavelengths(0.75),
        )
        .unwrap();
        Scenario::free_space(3.8e9, 10.0, ura, device)
    }

    fn channel_from(entries: Vec<Complex<f64>>) -> ChannelVector<f64> {
        let mut map = BTreeMap::new();
        map.insert(1, entries);
        ChannelVector::from_components(0.0789, map).unwrap()
    }

    #[test]
    fn single_isotropic_radiator() {
        let sc = free_space(1, 1, Vec3::new(7.0, 0.0, 1.5));
        let w = BeamWeights::from_unnormalized(vec![Complex::new(1.0, 0.0)], Strategy::Conjugate)
            .unwrap();
        let q = Vec3::new(3.0, 1.0, 0.5);
        let d = sc.array.center.distance(q);
        let s = power_density_at(q, &w, &sc, &[1]).unwrap();
        assert_relative_eq!(s, sc.tx_power_w / (4.0 * PI * d * d), max_relative = 1e-12);
    }

    #[test]
    fn two_elements_interfere_coherently() {
        // Equidistant point: in-phase contributions quadruple the density of
        // a single antenna fed half the power.
        let ura = Ura::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::unit_y(),
            Vec3::unit_z(),
            2,
            1,
            Spacing::Meters(0.5),
        )
        .unwrap();
        let sc = Scenario::free_space(3.8e9, 10.0, ura, Vec3::new(5.0, 0.0, 0.0));
        let w = BeamWeights::from_unnormalized(
            vec![Complex::new(1.0, 0.0); 2],
            Strategy::Conjugate,
        )
        .unwrap();
        let q = Vec3::new(4.0, 0.0, 0.0); // equidistant from both antennas
        let s = power_density_at(q, &w, &sc, &[1]).unwrap();

        let single = Ura::new(
            Vec3::new(0.0, 0.25, 0.0),
            Vec3::unit_y(),
            Vec3::unit_z(),
            1,
            1,
            Spacing::Meters(0.5),
        )
        .unwrap();
        let sc1 = Scenario::free_space(3.8e9, 5.0, single, Vec3::new(5.0, 0.0, 0.0));
        let w1 = BeamWeights::from_unnormalized(vec![Complex::new(1.0, 0.0)], Strategy::Conjugate)
            .unwrap();
        let s1 = power_density_at(q, &w1, &sc1, &[1]).unwrap();
        assert_relative_eq!(s, 4.0 * s1, max_relative = 1e-12);

        // Against the direct complex sum.
        let lam = sc.wavelength();
        let mut total = Complex::new(0.0, 0.0);
        for p in sc.antenna_positions() {
            let d = p.distance(q);
            total += Complex::from_polar(1.0 / d, -2.0 * PI * d / lam) / 2.0f64.sqrt();
        }
        assert_relative_eq!(
            s,
            sc.tx_power_w / (4.0 * PI) * total.norm_sqr(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn friis_closure_between_field_and_channel() {
        let sc = free_space(8, 4, Vec3::new(9.0, 0.4, 2.0));
        let h = synthesize_channel(&sc, &[1]).unwrap();
        let w = random_bf(h.len(), 11).unwrap();
        let s = power_density_at(sc.device, &w, &sc, &[1]).unwrap();
        let lam = sc.wavelength();
        let closure = s * lam * lam / (4.0 * PI) / sc.tx_power_w;
        assert_relative_eq!(closure, power_gain(&h, &w), max_relative = 1e-9);
    }

    #[test]
    fn field_point_on_antenna_is_singular() {
        let sc = free_space(2, 2, Vec3::new(7.0, 0.0, 1.5));
        let pos = sc.antenna_positions()[0];
        let w = random_bf(4, 3).unwrap();
        assert!(matches!(
            power_density_at(pos, &w, &sc, &[1]),
            Err(Error::SingularPoint)
        ));
    }

    #[test]
    fn superposition_is_coherent_not_additive() {
        let sc: Scenario<f64> = Scenario::hallway_3p8();
        let w = conjugate_bf(&synthesize_channel(&sc, &[1, 3]).unwrap()).unwrap();
        let q = Vec3::new(8.0, 0.3, 1.2);
        let s13 = power_density_at(q, &w, &sc, &[1, 3]).unwrap();
        let s1 = power_density_at(q, &w, &sc, &[1]).unwrap();
        let s3 = power_density_at(q, &w, &sc, &[3]).unwrap();
        // |E1 + E3|² differs from S1 + S3 whenever the paths are out of phase.
        assert!((s13 - (s1 + s3)).abs() > 1e-6 * s13);
        // Cross-check the coherent value from the component fields.
        let e1 = (s1 * 4.0 * PI / sc.tx_power_w).sqrt();
        let e3 = (s3 * 4.0 * PI / sc.tx_power_w).sqrt();
        assert!(s13 <= sc.tx_power_w / (4.0 * PI) * (e1 + e3).powi(2) * (1.0 + 1e-9));
    }

    #[test]
    fn power_gain_matches_brute_force_dot() {
        let h = channel_from(
            (0..8)
                .map(|i| Complex::from_polar(0.1 + 0.05 * i as f64, 0.7 * i as f64))
                .collect(),
        );
        let w = random_bf(8, 21).unwrap();
        let mut sum = Complex::new(0.0, 0.0);
        for (a, b) in h.aggregate().iter().zip(w.weights()) {
            sum += a * b;
        }
        assert!((power_gain(&h, &w) - sum.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn power_gain_orthogonal_weights_give_zero() {
        let h = channel_from(vec![Complex::new(0.3, 0.0), Complex::new(0.0, 0.3)]);
        // w ⊥ h*: h·w = 0.3·w0 + 0.3j·w1 = 0 for w ∝ (1, j)… pick (1, i·(−1))·…
        let w = BeamWeights::from_unnormalized(
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)],
            Strategy::Conjugate,
        )
        .unwrap();
        // 0.3·1 + 0.3j·j = 0.3 − 0.3 = 0.
        assert!(power_gain(&h, &w).abs() < 1e-15);
    }

    #[test]
    fn siso_and_miso_baselines() {
        let h = channel_from(vec![Complex::new(0.2, 0.0); 4]);
        assert_relative_eq!(pg_siso(&h), 0.04, max_relative = 1e-12);
        assert_relative_eq!(pg_miso(&h), 0.16, max_relative = 1e-12);
        let h1 = channel_from(vec![Complex::new(0.0, 0.5)]);
        assert_relative_eq!(pg_siso(&h1), pg_miso(&h1), max_relative = 1e-12);
        // Mean of per-antenna |h_l|².
        let h2 = channel_from(vec![Complex::new(0.1, 0.0), Complex::new(0.0, 0.3)]);
        let mean = (0.01 + 0.09) / 2.0;
        assert_relative_eq!(pg_siso(&h2), mean, max_relative = 1e-12);
        assert_relative_eq!(pg_miso(&h2), 2.0 * pg_siso(&h2), max_relative = 1e-12);
    }

    #[test]
    fn phase_only_focus_attains_full_gain() {
        let sc = free_space(10, 10, Vec3::new(6.0, 0.0, 1.5));
        let w = spherical_los_bf_with(&sc, LosWeighting::PhaseOnly).unwrap();
        let g = nf_gain_at(sc.device, &w, &sc).unwrap();
        assert_relative_eq!(g, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn gain_bounded_by_antenna_count() {
        let sc = free_space(6, 6, Vec3::new(6.0, 1.0, 2.0));
        for seed in 0..50 {
            let w = random_bf(36, seed).unwrap();
            let q = Vec3::new(
                1.0 + (seed % 7) as f64,
                -2.0 + (seed % 5) as f64,
                0.5 + (seed % 3) as f64,
            );
            let g = nf_gain_at(q, &w, &sc).unwrap();
            assert!(g <= 36.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gain_near_array_far_below_focus() {
        let sc: Scenario<f64> = Scenario::hallway_3p8();
        let w = spherical_los_bf_with(&sc, LosWeighting::PhaseOnly).unwrap();
        let g_dev = nf_gain_at(sc.device, &w, &sc).unwrap();
        for iz in 0..7 {
            let q = Vec3::new(0.5, 0.0, 0.3 + 0.4 * iz as f64);
            let g = nf_gain_at(q, &w, &sc).unwrap();
            assert!(
                crate::db(g_dev / g) >= 10.0,
                "gain near array only {:.1} dB below focus",
                crate::db(g_dev / g)
            );
        }
    }

    #[test]
    fn ff_gain_peaks_at_steered_direction() {
        let sc = free_space(8, 8, Vec3::new(100.0, 30.0, 1.5));
        let w = crate::beamforming::planewave_los_bf(&sc).unwrap();
        // Steered direction in the array frame.
        let u = (sc.device - sc.array.center).normalized().unwrap();
        let el = u.dot(sc.array.axis_b).asin();
        let az = (u.dot(sc.array.axis_a) / el.cos()).asin();
        let g = ff_gain(&sc, &w, az, el);
        assert_relative_eq!(g, 64.0, max_relative = 1e-9);
    }

    #[test]
    fn ff_pattern_symmetric_for_broadside_focus() {
        let sc = free_space(8, 4, Vec3::new(50.0, 0.0, 1.5));
        let w = crate::beamforming::planewave_los_bf(&sc).unwrap();
        for i in 0..10 {
            let az = 0.05 + 0.12 * i as f64;
            let el = 0.03 * i as f64;
            assert_relative_eq!(
                ff_gain(&sc, &w, az, el),
                ff_gain(&sc, &w, -az, el),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn ff_max_finds_steered_peak() {
        let sc = free_space(8, 8, Vec3::new(80.0, 25.0, 10.0));
        let w = crate::beamforming::planewave_los_bf(&sc).unwrap();
        let (_, _, g) = ff_gain_max(&sc, &w);
        assert!(g > 64.0 * (1.0 - 1e-6));
        assert!(g <= 64.0 * (1.0 + 1e-9));
    }

    #[test]
    fn global_max_constant_grid_takes_first() {
        let plane = PlaneSpec::new(
            Vec3::zero(),
            Vec3::unit_x(),
            Vec3::unit_y(),
            0.0,
            0.0,
            1.0,
            1.0,
            3,
            3,
        )
        .unwrap();
        let grid = FieldGrid::new(plane, Quantity::PowerDensity, vec![2.0; 9]).unwrap();
        let (p, v) = find_global_max(&grid).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(p, Vec3::zero());
    }

    #[test]
    fn global_max_single_peak() {
        let plane = PlaneSpec::new(
            Vec3::zero(),
            Vec3::unit_x(),
            Vec3::unit_y(),
            0.0,
            0.0,
            0.5,
            0.5,
            5,
            5,
        )
        .unwrap();
        let mut values = vec![0.1; 25];
        values[2 * 5 + 3] = 9.0;
        let grid = FieldGrid::new(plane, Quantity::PowerDensity, values).unwrap();
        let (p, v) = find_global_max(&grid).unwrap();
        assert_eq!(v, 9.0);
        assert_relative_eq!(p.x, 1.0);
        assert_relative_eq!(p.y, 1.5);
    }

    #[test]
    fn global_max_all_nan_is_empty() {
        let plane = PlaneSpec::new(
            Vec3::zero(),
            Vec3::unit_x(),
            Vec3::unit_y(),
            0.0,
            0.0,
            1.0,
            1.0,
            2,
            2,
        )
        .unwrap();
        let grid = FieldGrid::new(plane, Quantity::PowerDensity, vec![f64::NAN; 4]).unwrap();
        assert!(matches!(find_global_max(&grid), Err(Error::EmptyGrid)));
    }

    #[test]
    fn focal_width_matches_analytic_sinc_cut() {
        // Dense sinc² profile along u centered on the device.
        let n = 4001usize;
        let step = 0.001;
        let plane = PlaneSpec::new(
            Vec3::zero(),
            Vec3::unit_x(),
            Vec3::unit_y(),
            -(2.0),
            0.0,
            step,
            1.0,
            n,
            1,
        )
        .unwrap();
        let profile = |x: f64| {
            if x == 0.0 {
                1.0
            } else {
                (PI * x).sin().powi(2) / (PI * x).powi(2)
            }
        };
        let values: Vec<f64> = (0..n).map(|i| profile(-2.0 + step * i as f64)).collect();
        let grid = FieldGrid::new(plane, Quantity::PowerDensity, values).unwrap();
        let width = focal_width(&grid, Vec3::zero(), GridAxis::U).unwrap();
        // Independent dense search for the −3 dB crossing of sinc².
        let half = 10.0f64.powf(-0.3);
        let mut x = 0.0;
        while profile(x) >= half {
            x += 1e-6;
        }
        assert!((width - 2.0 * x).abs() < 2.0 * step, "width {width} vs {}", 2.0 * x);
    }

    #[test]
    fn focal_width_constant_field_spans_axis() {
        let n = 11;
        let plane = PlaneSpec::new(
            Vec3::zero(),
            Vec3::unit_x(),
            Vec3::unit_y(),
            0.0,
            0.0,
            0.5,
            0.5,
            n,
            1,
        )
        .unwrap();
        let grid = FieldGrid::new(plane, Quantity::PowerDensity, vec![1.0; n]).unwrap();
        let width = focal_width(&grid, Vec3::new(2.5, 0.0, 0.0), GridAxis::U).unwrap();
        assert_relative_eq!(width, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn multipath_focus_narrows_the_spot() {
        let sc: Scenario<f64> = Scenario::hallway_3p8();
        // 1-D cut along the link axis through the device.
        let plane = PlaneSpec::new(
            Vec3::new(0.0, 0.0, 1.5),
            Vec3::unit_x(),
            Vec3::unit_z(),
            9.0,
            0.0,
            0.02,
            0.02,
            301,
            1,
        )
        .unwrap();
        let w_los = crate::beamforming::spherical_los_bf(&sc).unwrap();
        let w_smc = crate::beamforming::spherical_smc_bf(&sc, &[1, 2, 3, 4]).unwrap();
        let g_los = power_density_grid(&sc, &w_los, &plane, &[1]).unwrap();
        let g_smc = power_density_grid(&sc, &w_smc, &plane, &[1, 2, 3, 4]).unwrap();
        let wid_los = focal_width(&g_los, sc.device, GridAxis::U).unwrap();
        let wid_smc = focal_width(&g_smc, sc.device, GridAxis::U).unwrap();
        assert!(
            wid_smc < wid_los,
            "multibeam focal width {wid_smc} should be below {wid_los}"
        );
    }

    #[test]
    fn received_power_is_bilinear() {
        assert_eq!(received_power(0.0, 0.05), 0.0);
        assert_relative_eq!(received_power(10.0, 8.5e-3), 0.085, max_relative = 1e-12);
        assert_relative_eq!(
            received_power(3.0, 2.0),
            3.0 * received_power(1.0, 2.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn grid_csv_layout() {
        let plane = PlaneSpec::new(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::unit_x(),
            Vec3::unit_z(),
            0.0,
            0.0,
            0.5,
            0.5,
            2,
            2,
        )
        .unwrap();
        let grid =
            FieldGrid::new(plane, Quantity::PowerDensity, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u,v,x,y,z,value,quantity,units");
        assert_eq!(lines.len(), 5);
        // Row-major over (u, v): second line is (u=0, v=0.5).
        assert_eq!(lines[2], "0,0.5,0,0,1.5,2,power_density,w_per_m2");
        assert_eq!(lines[3], "0.5,0,0.5,0,1,3,power_density,w_per_m2");
    }
}
