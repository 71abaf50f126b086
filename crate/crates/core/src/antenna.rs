//! Uniform planar arrays with λ/2 spacing and the 3GPP element pattern.
//!
//! Arrays are vertical planes facing the horizon. Directions are expressed in
//! the array's local frame: `theta` is the angle from zenith and `phi` the
//! azimuth measured from boresight. Element `(p, q)` (row `p` along the
//! vertical axis, column `q` along the horizontal axis) has response
//!
//! ```text
//! a_pq(theta, phi) = exp(j * 2*pi * 0.5 * (p * cos(theta) + q * sin(theta) * sin(phi)))
//! ```
//!
//! so broadside (`theta = 90°`, `phi = 0`) is the all-ones vector. Beams are
//! conjugate (matched) steering vectors normalized to unit norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::numeric::db_to_linear;

/// Inter-element spacing in wavelengths.
pub const ELEMENT_SPACING_WAVELENGTHS: f64 = 0.5;

/// 3GPP element pattern: peak gain, 3 dB beamwidth and attenuation caps.
pub const ELEMENT_MAX_GAIN_DBI: f64 = 8.0;
pub const ELEMENT_BEAMWIDTH_DEG: f64 = 65.0;
pub const ELEMENT_FRONT_BACK_DB: f64 = 30.0;
pub const ELEMENT_SIDELOBE_DB: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AntennaError {
    #[error("angle out of range: theta = {theta_deg} deg (expected [0, 180]), phi = {phi_deg} deg (expected [-180, 180])")]
    AngleOutOfRange { theta_deg: f64, phi_deg: f64 },
}

/// Radiation pattern of a single array element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPattern {
    ThreeGpp,
    Isotropic,
}

impl ElementPattern {
    /// Gain in dBi. Out-of-range angles are an error.
    pub fn gain_db(&self, theta_deg: f64, phi_deg: f64) -> Result<f64, AntennaError> {
        match self {
            ElementPattern::ThreeGpp => element_gain_db(theta_deg, phi_deg),
            ElementPattern::Isotropic => {
                check_angles(theta_deg, phi_deg)?;
                Ok(0.0)
            }
        }
    }

    pub fn max_gain_db(&self) -> f64 {
        match self {
            ElementPattern::ThreeGpp => ELEMENT_MAX_GAIN_DBI,
            ElementPattern::Isotropic => 0.0,
        }
    }

    fn gain_linear(&self, dir: Direction) -> f64 {
        match self {
            ElementPattern::ThreeGpp => db_to_linear(pattern_db(dir.theta.to_degrees(), dir.phi.to_degrees())),
            ElementPattern::Isotropic => 1.0,
        }
    }
}

fn check_angles(theta_deg: f64, phi_deg: f64) -> Result<(), AntennaError> {
    if (0.0..=180.0).contains(&theta_deg) && (-180.0..=180.0).contains(&phi_deg) {
        Ok(())
    } else {
        Err(AntennaError::AngleOutOfRange { theta_deg, phi_deg })
    }
}

fn pattern_db(theta_deg: f64, phi_deg: f64) -> f64 {
    let a_v = -(12.0 * ((theta_deg - 90.0) / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(ELEMENT_SIDELOBE_DB);
    let a_h = -(12.0 * (phi_deg / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(ELEMENT_FRONT_BACK_DB);
    ELEMENT_MAX_GAIN_DBI - (-(a_v + a_h)).min(ELEMENT_FRONT_BACK_DB)
}

/// 3GPP element gain in dBi (`theta` from zenith, `phi` from boresight).
pub fn element_gain_db(theta_deg: f64, phi_deg: f64) -> Result<f64, AntennaError> {
    check_angles(theta_deg, phi_deg)?;
    Ok(pattern_db(theta_deg, phi_deg))
}

/// A direction in an array's local frame, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// From zenith, `[0, pi]`.
    pub theta: f64,
    /// From boresight, `[-pi, pi]`.
    pub phi: f64,
}

impl Direction {
    pub const BROADSIDE: Direction = Direction { theta: PI / 2.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self { theta: theta_deg.to_radians(), phi: phi_deg.to_radians() }
    }
}

/// Wraps an angle to `[-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        w = -PI;
    }
    w
}

/// Direction of the vector `(dx, dy, dz)` seen by an array whose boresight
/// points at azimuth `orientation` (radians, counter-clockwise from +x).
pub fn local_direction(orientation: f64, dx: f64, dy: f64, dz: f64) -> Direction {
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    let theta = if r > 0.0 { (dz / r).clamp(-1.0, 1.0).acos() } else { PI / 2.0 };
    let phi = wrap_angle(dy.atan2(dx) - orientation);
    Direction { theta, phi }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Boresight azimuth in the global frame, radians.
    pub orientation: f64,
    pub element: ElementPattern,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, orientation: f64, element: ElementPattern) -> Self {
        assert!(rows >= 1 && cols >= 1, "array needs at least one element");
        Self { rows, cols, orientation, element }
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Largest possible gain of this array, `N * g_elem,max` (linear).
    pub fn max_gain_linear(&self) -> f64 {
        self.elements() as f64 * db_to_linear(self.element.max_gain_db())
    }

    /// Local-frame direction of a global vector.
    pub fn local(&self, dx: f64, dy: f64, dz: f64) -> Direction {
        local_direction(self.orientation, dx, dy, dz)
    }
}

/// Phase increments along rows and columns for a direction.
fn phase_slopes(dir: Direction) -> (f64, f64) {
    let k = 2.0 * PI * ELEMENT_SPACING_WAVELENGTHS;
    (k * dir.theta.cos(), k * dir.theta.sin() * dir.phi.sin())
}

/// Unit-magnitude array response, element `(p, q)` at index `p * cols + q`.
pub fn array_response(geom: &ArrayGeometry, dir: Direction) -> Vec<Complex64> {
    let (u, v) = phase_slopes(dir);
    let mut out = Vec::with_capacity(geom.elements());
    for p in 0..geom.rows {
        for q in 0..geom.cols {
            out.push(Complex64::from_polar(1.0, p as f64 * u + q as f64 * v));
        }
    }
    out
}

/// Unit-norm conjugate beamformer toward `dir`.
pub fn steering_vector(geom: &ArrayGeometry, dir: Direction) -> Vec<Complex64> {
    let scale = 1.0 / (geom.elements() as f64).sqrt();
    array_response(geom, dir).into_iter().map(|a| a * scale).collect()
}

/// `|sum_{n<len} exp(j * n * delta)|^2`.
fn linear_array_factor(len: usize, delta: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..len {
        acc += Complex64::from_polar(1.0, n as f64 * delta);
    }
    acc.norm_sqr()
}

/// `|w(steer)^H a(actual)|^2`, in `[0, N]`. The planar response factorizes
/// into a row sum and a column sum.
pub fn array_factor(geom: &ArrayGeometry, steer: Direction, actual: Direction) -> f64 {
    let (us, vs) = phase_slopes(steer);
    let (ua, va) = phase_slopes(actual);
    linear_array_factor(geom.rows, ua - us) * linear_array_factor(geom.cols, va - vs) / geom.elements() as f64
}

/// Directional gain of one side: array factor times linear element gain.
pub fn directional_gain(geom: &ArrayGeometry, steer: Direction, actual: Direction) -> f64 {
    array_factor(geom, steer, actual) * geom.element.gain_linear(actual)
}

/// One end of a link: the array, where its beam points and where the other
/// end actually is (both in the array's local frame).
#[derive(Debug, Clone, Copy)]
pub struct LinkEnd<'a> {
    pub geometry: &'a ArrayGeometry,
    pub steer: Direction,
    pub actual: Direction,
}

/// Linear power gain of a link, product of both ends' directional gains.
/// Equal to `N_tx * g_tx * N_rx * g_rx` when both beams are aligned.
pub fn beamforming_gain(tx: LinkEnd<'_>, rx: LinkEnd<'_>) -> f64 {
    directional_gain(tx.geometry, tx.steer, tx.actual) * directional_gain(rx.geometry, rx.steer, rx.actual)
}

/// One row of an exported antenna pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternPoint {
    pub phi_deg: f64,
    pub theta_deg: f64,
    pub gain_db: f64,
}

/// Inclusive angle grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AngleRange {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Gain of `geom` steered toward `steer` over a (phi, theta) grid, dB.
pub fn pattern_grid(
    geom: &ArrayGeometry,
    steer: Direction,
    phi: AngleRange,
    theta: AngleRange,
) -> Result<Vec<PatternPoint>, AntennaError> {
    for r in [phi, theta] {
        if !(r.step > 0.0) || !(r.stop >= r.start) {
            return Err(AntennaError::AngleOutOfRange { theta_deg: theta.start, phi_deg: phi.start });
        }
    }
    check_angles(theta.start, phi.start)?;
    check_angles(theta.stop, phi.stop)?;
    let mut out = Vec::new();
    for phi_deg in phi.values() {
        for theta_deg in theta.values() {
            let actual = Direction::from_degrees(theta_deg, phi_deg);
            let g = directional_gain(geom, steer, actual).max(1e-30);
            out.push(PatternPoint { phi_deg, theta_deg, gain_db: 10.0 * g.log10() });
        }
    }
    Ok(out)
}
