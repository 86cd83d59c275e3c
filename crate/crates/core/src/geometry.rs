//! Arrays, reflectors, and the image-source construction.
//!
//! Walls and floors are modeled as planar reflectors; each one turns the
//! transmit array into a mirror array on the far side of its plane. A
//! single-bounce specular path from antenna to device is equivalent to a
//! straight ray from the mirrored antenna, provided the specular point falls
//! on the actual (possibly finite) reflecting surface — the *visibility*
//! condition.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};
use crate::SPEED_OF_LIGHT;

/// Cartesian position or direction in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self * n.recip())
        } else {
            None
        }
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

impl<T: Scalar> std::ops::Add for Vec3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Scalar> std::ops::Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Scalar> std::ops::Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> std::ops::Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Antenna spacing, either absolute or relative to the carrier wavelength.
#[derive(Clone, Copy, Debug)]
pub enum Spacing<T> {
    Meters(T),
    Wavelengths(T),
}

impl<T: Scalar> Spacing<T> {
    pub fn resolve(self, wavelength: T) -> T {
        match self {
            Spacing::Meters(s) => s,
            Spacing::Wavelengths(m) => m * wavelength,
        }
    }
}

/// Uniform rectangular array on a plane.
///
/// `count_a` antennas along `axis_a` and `count_b` along `axis_b`, equally
/// spaced and centered on `center`. The axes must be orthonormal.
#[derive(Clone, Debug)]
pub struct Ura<T> {
    pub center: Vec3<T>,
    pub axis_a: Vec3<T>,
    pub axis_b: Vec3<T>,
    pub count_a: usize,
    pub count_b: usize,
    pub spacing: Spacing<T>,
}

impl<T: Scalar> Ura<T> {
    pub fn new(
        center: Vec3<T>,
        axis_a: Vec3<T>,
        axis_b: Vec3<T>,
        count_a: usize,
        count_b: usize,
        spacing: Spacing<T>,
    ) -> Result<Self> {
        let tol = real::<T>(1e-9);
        if (axis_a.norm() - T::one()).abs() > tol || (axis_b.norm() - T::one()).abs() > tol {
            return Err(Error::InvalidScenario("array axes must be unit length".into()));
        }
        if axis_a.dot(axis_b).abs() > tol {
            return Err(Error::InvalidScenario("array axes must be orthogonal".into()));
        }
        if count_a == 0 || count_b == 0 {
            return Err(Error::InvalidScenario("array counts must be positive".into()));
        }
        Ok(Self { center, axis_a, axis_b, count_a, count_b, spacing })
    }

    /// Total number of antennas.
    pub fn len(&self) -> usize {
        self.count_a * self.count_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unit normal of the array plane (`axis_a × axis_b`).
    pub fn normal(&self) -> Vec3<T> {
        self.axis_a.cross(self.axis_b)
    }

    /// Physical extents `(count - 1) · spacing` along the two axes.
    pub fn extents(&self, wavelength: T) -> (T, T) {
        let s = self.spacing.resolve(wavelength);
        (
            real::<T>((self.count_a - 1) as f64) * s,
            real::<T>((self.count_b - 1) as f64) * s,
        )
    }

    /// Diagonal of the array aperture.
    pub fn aperture_diagonal(&self, wavelength: T) -> T {
        let (ea, eb) = self.extents(wavelength);
        (ea * ea + eb * eb).sqrt()
    }
}

/// Antenna positions of a rectangular array once the wavelength is known.
///
/// Exactly `count_a · count_b` points, ordered with the `axis_b` index
/// varying fastest; the centroid coincides with the array center.
pub fn build_array<T: Scalar>(ura: &Ura<T>, wavelength: T) -> Vec<Vec3<T>> {
    let s = ura.spacing.resolve(wavelength);
    let half = real::<T>(0.5);
    let off_a = real::<T>((ura.count_a - 1) as f64) * half;
    let off_b = real::<T>((ura.count_b - 1) as f64) * half;
    let mut out = Vec::with_capacity(ura.len());
    for ia in 0..ura.count_a {
        let ua = (real::<T>(ia as f64) - off_a) * s;
        for ib in 0..ura.count_b {
            let ub = (real::<T>(ib as f64) - off_b) * s;
            out.push(ura.center + ura.axis_a * ua + ura.axis_b * ub);
        }
    }
    out
}

/// Spatial extent of a reflecting surface.
#[derive(Clone, Debug)]
pub enum ReflectorExtent<T> {
    /// Infinite plane; every specular point lies on the surface.
    Unbounded,
    /// Finite rectangle centered on the reflector anchor. A half-width may be
    /// `infinity` to leave that axis unbounded.
    Rectangle {
        axis_a: Vec3<T>,
        axis_b: Vec3<T>,
        half_width_a: T,
        half_width_b: T,
    },
}

/// Planar specular reflector (wall, floor, ceiling).
#[derive(Clone, Debug)]
pub struct Reflector<T> {
    /// Multipath component index; `k = 1` is reserved for the direct path,
    /// so reflectors carry `k ≥ 2`.
    pub component: u32,
    pub anchor: Vec3<T>,
    /// Unit normal of the reflector plane.
    pub normal: Vec3<T>,
    pub extent: ReflectorExtent<T>,
    /// Relative permittivity of the surface material, `> 1`. `infinity`
    /// models a perfect mirror.
    pub epsilon_r: T,
    /// Extra attenuation applied per reflection, dB ≥ 0.
    pub attenuation_db: T,
}

impl<T: Scalar> Reflector<T> {
    pub fn new(
        component: u32,
        anchor: Vec3<T>,
        normal: Vec3<T>,
        extent: ReflectorExtent<T>,
        epsilon_r: T,
        attenuation_db: T,
    ) -> Result<Self> {
        if component < 2 {
            return Err(Error::InvalidScenario(
                "reflector component index must be ≥ 2 (1 is the direct path)".into(),
            ));
        }
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::InvalidScenario("reflector normal must be nonzero".into()))?;
        if !(epsilon_r > T::one()) {
            return Err(Error::InvalidScenario("relative permittivity must exceed 1".into()));
        }
        if attenuation_db < T::zero() {
            return Err(Error::InvalidScenario("attenuation must be ≥ 0 dB".into()));
        }
        if let ReflectorExtent::Rectangle { axis_a, axis_b, half_width_a, half_width_b } = &extent
        {
            let tol = real::<T>(1e-9);
            if (axis_a.norm() - T::one()).abs() > tol
                || (axis_b.norm() - T::one()).abs() > tol
                || axis_a.dot(*axis_b).abs() > tol
            {
                return Err(Error::InvalidScenario("extent axes must be orthonormal".into()));
            }
            if axis_a.dot(normal).abs() > tol || axis_b.dot(normal).abs() > tol {
                return Err(Error::InvalidScenario(
                    "extent axes must lie in the reflector plane".into(),
                ));
            }
            if !(*half_width_a > T::zero()) || !(*half_width_b > T::zero()) {
                return Err(Error::InvalidScenario("half-widths must be positive".into()));
            }
        }
        Ok(Self { component, anchor, normal, extent, epsilon_r, attenuation_db })
    }

    /// Signed distance from a point to the reflector plane (positive on the
    /// normal side).
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        (p - self.anchor).dot(self.normal)
    }

    /// Whether an on-plane point falls on the reflecting surface; the
    /// boundary counts as on-surface.
    pub fn contains_on_plane(&self, p: Vec3<T>) -> bool {
        match &self.extent {
            ReflectorExtent::Unbounded => true,
            ReflectorExtent::Rectangle { axis_a, axis_b, half_width_a, half_width_b } => {
                let rel = p - self.anchor;
                rel.dot(*axis_a).abs() <= *half_width_a && rel.dot(*axis_b).abs() <= *half_width_b
            }
        }
    }
}

/// Reflection of a point across the reflector plane.
pub fn mirror_point<T: Scalar>(p: Vec3<T>, reflector: &Reflector<T>) -> Vec3<T> {
    let d = reflector.signed_distance(p);
    p - reflector.normal * (d + d)
}

/// Element-wise [`mirror_point`]; order is preserved.
pub fn mirror_array<T: Scalar>(positions: &[Vec3<T>], reflector: &Reflector<T>) -> Vec<Vec3<T>> {
    positions.iter().map(|&p| mirror_point(p, reflector)).collect()
}

/// Point where the specular ray from `tx` to `rx` meets the reflector plane:
/// the intersection of the segment `[mirror_point(tx), rx]` with the plane.
///
/// Both endpoints must lie strictly on the same side of the plane. Returns
/// `None` only in the degenerate parallel case.
pub fn specular_point<T: Scalar>(
    tx: Vec3<T>,
    rx: Vec3<T>,
    reflector: &Reflector<T>,
) -> Result<Option<Vec3<T>>> {
    let st = reflector.signed_distance(tx);
    let sr = reflector.signed_distance(rx);
    if st * sr <= T::zero() {
        return Err(Error::SameSideViolation);
    }
    let m = mirror_point(tx, reflector);
    let sm = -st;
    let denom = sr - sm; // = sr + st, nonzero and same sign as both
    if denom == T::zero() {
        return Ok(None);
    }
    let t = -sm / denom;
    Ok(Some(m + (rx - m) * t))
}

/// Whether the specular path `tx → rx` actually bounces off the reflecting
/// surface: the specular point exists and lies within the (possibly finite)
/// extent. Boundary hits count as visible.
pub fn visibility<T: Scalar>(tx: Vec3<T>, rx: Vec3<T>, reflector: &Reflector<T>) -> Result<bool> {
    match specular_point(tx, rx, reflector)? {
        None => Ok(false),
        Some(p) => Ok(reflector.contains_on_plane(p)),
    }
}

/// Fraunhofer distance `2·D²/λ` separating the radiative near field from the
/// far field of an aperture with diagonal `D`.
pub fn fraunhofer_distance<T: Scalar>(aperture_diagonal: T, wavelength: T) -> T {
    let two = real::<T>(2.0);
    two * aperture_diagonal * aperture_diagonal / wavelength
}

/// Which Fresnel branch applies at every reflector.
///
/// `Parallel` is the p branch (field in the plane of incidence, the branch
/// with a Brewster null); `Perpendicular` is the s branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    Parallel,
    Perpendicular,
}

/// Complete transmit-side scene: carrier, array, reflectors, device.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub frequency_hz: T,
    pub tx_power_w: T,
    pub array: Ura<T>,
    pub reflectors: Vec<Reflector<T>>,
    pub device: Vec3<T>,
    pub polarization: Polarization,
    /// Effective receive aperture of the device, m².
    pub device_aperture_m2: T,
    /// Element power-pattern exponent `q` in `cos^q`; 0 means isotropic
    /// elements.
    pub element_gain_exponent: T,
}

impl<T: Scalar> Scenario<T> {
    /// Free-space scene (no reflectors) with an isotropic device aperture.
    pub fn free_space(frequency_hz: T, tx_power_w: T, array: Ura<T>, device: Vec3<T>) -> Self {
        let mut sc = Self {
            frequency_hz,
            tx_power_w,
            array,
            reflectors: Vec::new(),
            device,
            polarization: Polarization::Perpendicular,
            device_aperture_m2: T::one(),
            element_gain_exponent: T::zero(),
        };
        sc.device_aperture_m2 = sc.isotropic_aperture();
        sc
    }

    /// Bundled indoor scene: a 40×25 panel at 3.8 GHz facing down a hallway.
    ///
    /// The array hangs vertically with boresight `+x`, centered 1.5 m above
    /// the floor; the device sits 12.3 m away at the same height. The floor
    /// (`k = 2`) and the wall at `y = −2 m` (`k = 3`) are unbounded; the wall
    /// at `y = +2 m` (`k = 4`) only spans `x ∈ [0, 6] m`, so part of its
    /// mirror array is invisible from the device. All surfaces: `ε_r = 5`
    /// with 3 dB of extra loss per bounce.
    pub fn hallway_3p8() -> Self {
        let frequency_hz = real::<T>(3.8e9);
        let array = Ura::new(
            Vec3::new(T::zero(), T::zero(), real::<T>(1.5)),
            Vec3::unit_y(),
            Vec3::unit_z(),
            40,
            25,
            Spacing::Wavelengths(real::<T>(0.75)),
        )
        .expect("preset array is valid");
        let eps = real::<T>(5.0);
        let att = real::<T>(3.0);
        let floor = Reflector::new(
            2,
            Vec3::zero(),
            Vec3::unit_z(),
            ReflectorExtent::Unbounded,
            eps,
            att,
        )
        .expect("preset reflector is valid");
        let wall_neg_y = Reflector::new(
            3,
            Vec3::new(T::zero(), real::<T>(-2.0), T::zero()),
            Vec3::unit_y(),
            ReflectorExtent::Unbounded,
            eps,
            att,
        )
        .expect("preset reflector is valid");
        let wall_pos_y = Reflector::new(
            4,
            Vec3::new(real::<T>(3.0), real::<T>(2.0), real::<T>(1.5)),
            -Vec3::unit_y(),
            ReflectorExtent::Rectangle {
                axis_a: Vec3::unit_x(),
                axis_b: Vec3::unit_z(),
                half_width_a: real::<T>(3.0),
                half_width_b: T::infinity(),
            },
            eps,
            att,
        )
        .expect("preset reflector is valid");
        let mut sc = Self {
            frequency_hz,
            tx_power_w: real::<T>(10.0),
            array,
            reflectors: vec![floor, wall_neg_y, wall_pos_y],
            device: Vec3::new(real::<T>(12.3), T::zero(), real::<T>(1.5)),
            polarization: Polarization::Perpendicular,
            device_aperture_m2: T::one(),
            element_gain_exponent: T::zero(),
        };
        sc.device_aperture_m2 = sc.isotropic_aperture();
        sc
    }

    pub fn wavelength(&self) -> T {
        real::<T>(SPEED_OF_LIGHT) / self.frequency_hz
    }

    /// Effective aperture of an isotropic receive antenna, `λ²/4π`.
    pub fn isotropic_aperture(&self) -> T {
        let lam = self.wavelength();
        lam * lam / (real::<T>(4.0) * T::PI())
    }

    pub fn antenna_positions(&self) -> Vec<Vec3<T>> {
        build_array(&self.array, self.wavelength())
    }

    pub fn reflector(&self, component: u32) -> Option<&Reflector<T>> {
        self.reflectors.iter().find(|r| r.component == component)
    }

    /// Direct path plus every configured reflector, sorted.
    pub fn component_indices(&self) -> Vec<u32> {
        let mut ks: Vec<u32> = std::iter::once(1)
            .chain(self.reflectors.iter().map(|r| r.component))
            .collect();
        ks.sort_unstable();
        ks
    }

    /// Checks the scenario invariants, including that the whole array and
    /// the device lie strictly on the same side of every reflector (the
    /// image-source model is only valid there).
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > T::zero()) {
            return Err(Error::NonpositiveFrequency);
        }
        if !(self.tx_power_w > T::zero()) {
            return Err(Error::InvalidScenario("transmit power must be positive".into()));
        }
        if !(self.device_aperture_m2 > T::zero()) {
            return Err(Error::InvalidScenario("device aperture must be positive".into()));
        }
        if !self.device.is_finite() {
            return Err(Error::InvalidScenario("device position must be finite".into()));
        }
        if self.element_gain_exponent < T::zero() {
            return Err(Error::InvalidScenario("element gain exponent must be ≥ 0".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.reflectors {
            if r.component < 2 {
                return Err(Error::InvalidScenario(
                    "reflector component index must be ≥ 2".into(),
                ));
            }
            if !seen.insert(r.component) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate component index {}",
                    r.component
                )));
            }
        }
        let positions = self.antenna_positions();
        for r in &self.reflectors {
            let sd = r.signed_distance(self.device);
            if sd == T::zero() {
                return Err(Error::InvalidScenario(format!(
                    "device lies on reflector plane k={}",
                    r.component
                )));
            }
            for &p in &positions {
                if r.signed_distance(p) * sd <= T::zero() {
                    return Err(Error::InvalidScenario(format!(
                        "array and device must lie strictly on the same side of reflector k={}",
                        r.component
                    )));
                }
            }
        }
        Ok(())
    }
}
