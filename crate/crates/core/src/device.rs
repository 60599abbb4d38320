//! Maps doubly clamped beam geometry and material constants to the physical
//! rates of the model: single-NV strain coupling, fundamental flexural
//! frequency, mechanical damping and thermal occupation.
//!
//! The strain coupling near the beam surface follows
//! g/2pi = 180 GHz * sqrt(hbar / (L^3 w sqrt(rho E))), where the radicand is
//! dimensionless; the GHz prefactor is calibrated so the reference geometry
//! (0.5 x 0.05 x 0.05 um diamond beam) lands at a few kHz. The flexural
//! frequency is the first clamped-clamped Euler-Bernoulli mode
//! f1 = (beta1 L)^2 / (2 pi L^2) * sqrt(E I / (rho w h)), beta1 L = 4.7300,
//! I = w h^3 / 12. Damping comes from the quality factor, kappa = omega_m/Q,
//! and the thermal occupation from the Bose factor at temperature T.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SystemParams, TWO_PI};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const K_B: f64 = 1.380_649e-23;

/// Calibrated prefactor of the surface strain coupling, in Hz.
pub const COUPLING_PREFACTOR_HZ: f64 = 180.0e9;
/// First clamped-clamped flexural root beta1 * L.
pub const BETA1_L: f64 = 4.7300;

/// Diamond defaults.
pub const DIAMOND_YOUNGS_MODULUS: f64 = 1.05e12;
pub const DIAMOND_DENSITY: f64 = 3500.0;

/// A doubly clamped beam with embedded NV centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Length, m.
    pub length: f64,
    /// Width, m.
    pub width: f64,
    /// Height (thickness along the flexural direction), m.
    pub height: f64,
    /// Density, kg/m^3.
    pub density: f64,
    /// Young's modulus, Pa.
    pub youngs_modulus: f64,
    pub quality_factor: f64,
    /// Bath temperature, K.
    pub temperature: f64,
}

impl BeamGeometry {
    /// Diamond beam with default material constants, Q = 1e6, T = 10 mK.
    pub fn diamond(length: f64, width: f64, height: f64) -> Self {
        Self {
            length,
            width,
            height,
            density: DIAMOND_DENSITY,
            youngs_modulus: DIAMOND_YOUNGS_MODULUS,
            quality_factor: 1.0e6,
            temperature: 0.01,
        }
    }

    /// Reference geometry: (L, w, h) = (0.5, 0.05, 0.05) um.
    pub fn reference() -> Self {
        Self::diamond(0.5e-6, 0.05e-6, 0.05e-6)
    }

    pub fn check(&self) -> Result<Vec<GeometryWarning>> {
        for (name, value) in [
            ("length", self.length),
            ("width", self.width),
            ("height", self.height),
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("quality_factor", self.quality_factor),
            ("temperature", self.temperature),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "geometry field {name} must be positive and finite, got {value}"
                )));
            }
        }
        let mut warnings = Vec::new();
        if self.length < 5.0 * self.width.max(self.height) {
            warnings.push(GeometryWarning::NotSlender {
                length: self.length,
                cross: self.width.max(self.height),
            });
        }
        Ok(warnings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryWarning {
    /// Thin-beam theory assumes L >> w, h.
    NotSlender { length: f64, cross: f64 },
}

impl std::fmt::Display for GeometryWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeometryWarning::NotSlender { length, cross } => write!(
                f,
                "beam is not slender (L = {length:.2e} m < 5 x {cross:.2e} m); \
                 thin-beam estimates are unreliable"
            ),
        }
    }
}

/// Single-NV strain coupling g, rad/s.
pub fn estimate_coupling(geom: &BeamGeometry) -> Result<f64> {
    geom.check()?;
    let radicand = HBAR
        / (geom.length.powi(3)
            * geom.width
            * (geom.density * geom.youngs_modulus).sqrt());
    Ok(TWO_PI * COUPLING_PREFACTOR_HZ * radicand.sqrt())
}

/// Collective coupling sqrt(N) g, rad/s.
pub fn collective_coupling(geom: &BeamGeometry, n_spins: u32) -> Result<f64> {
    Ok((n_spins as f64).sqrt() * estimate_coupling(geom)?)
}

/// Fundamental clamped-clamped flexural frequency omega_m, rad/s.
pub fn estimate_mech_frequency(geom: &BeamGeometry) -> Result<f64> {
    geom.check()?;
    let inertia = geom.width * geom.height.powi(3) / 12.0;
    let f1 = BETA1_L * BETA1_L / (TWO_PI * geom.length.powi(2))
        * (geom.youngs_modulus * inertia / (geom.density * geom.width * geom.height)).sqrt();
    Ok(TWO_PI * f1)
}

/// Damping rate kappa = omega_m / Q and Bose occupation at (omega_m, T).
pub fn thermal_and_damping(geom: &BeamGeometry, omega_m: f64) -> Result<(f64, f64)> {
    geom.check()?;
    if !(omega_m > 0.0) {
        return Err(Error::InvalidParams(format!("omega_m must be > 0, got {omega_m}")));
    }
    let kappa = omega_m / geom.quality_factor;
    let x = HBAR * omega_m / (K_B * geom.temperature);
    let n_th = if x > 700.0 { 0.0 } else { 1.0 / (x.exp() - 1.0) };
    Ok((kappa, n_th))
}

/// All device-derived rates in one table.
#[derive(Clone, Debug, Serialize)]
pub struct DeviceReport {
    pub geometry: BeamGeometry,
    pub n_spins: u32,
    /// Single-NV coupling g/2pi, Hz.
    pub g_single_hz: f64,
    /// Collective coupling sqrt(N) g / 2pi, Hz.
    pub g_collective_hz: f64,
    /// Fundamental flexural frequency, Hz.
    pub f_mech_hz: f64,
    /// kappa/2pi from omega_m/Q, Hz.
    pub kappa_formula_hz: f64,
    pub n_th: f64,
    pub warnings: Vec<String>,
}

/// Evaluate every estimate for one beam.
pub fn device_report(geom: &BeamGeometry, n_spins: u32) -> Result<DeviceReport> {
    let warnings = geom.check()?;
    let g_single = estimate_coupling(geom)?;
    let omega_m = estimate_mech_frequency(geom)?;
    let (kappa, n_th) = thermal_and_damping(geom, omega_m)?;
    Ok(DeviceReport {
        geometry: *geom,
        n_spins,
        g_single_hz: g_single / TWO_PI,
        g_collective_hz: (n_spins as f64).sqrt() * g_single / TWO_PI,
        f_mech_hz: omega_m / TWO_PI,
        kappa_formula_hz: kappa / TWO_PI,
        n_th,
        warnings: warnings.iter().map(|w| w.to_string()).collect(),
    })
}

/// Assemble a full parameter set from device estimates, with the hopping
/// strength and Zeeman detuning supplied by the experimenter (the junction
/// coupling has no closed-form estimate; it is set by the beam separation).
pub fn params_from_device(
    geom: &BeamGeometry,
    n_spins: u32,
    v: f64,
    detuning: f64,
) -> Result<SystemParams> {
    let omega_m = estimate_mech_frequency(geom)?;
    let (kappa, n_th) = thermal_and_damping(geom, omega_m)?;
    SystemParams::new(
        omega_m,
        omega_m + detuning,
        omega_m + detuning,
        collective_coupling(geom, n_spins)?,
        v,
        n_spins,
        kappa,
        n_th,
    )
}
