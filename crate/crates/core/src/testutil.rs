//! Shared fixtures for unit tests.

use crate::model::{SystemParams, SystemParamsHz};

/// Reference squeezing parameters: g/2pi = 40 kHz, v/2pi = 1 MHz,
/// omega_m/2pi = 2 GHz, detuning omega = ratio * v, N = 100.
pub(crate) fn reference_params(omega_over_v: f64, kappa_hz: f64, n_th: f64) -> SystemParams {
    SystemParams::from_hz(SystemParamsHz {
        omega_m: 2.0e9,
        delta_b1: 2.0e9 + omega_over_v * 1.0e6,
        delta_b2: 2.0e9 + omega_over_v * 1.0e6,
        g: 40.0e3,
        v: 1.0e6,
        n_spins: 100,
        kappa: kappa_hz,
        n_th,
    })
    .unwrap()
}

/// Same base point with a Zeeman offset Delta = Delta_B1 - Delta_B2 applied.
pub(crate) fn reference_params_with_offset(omega_over_v: f64, delta: f64) -> SystemParams {
    let mut p = reference_params(omega_over_v, 0.0, 0.0);
    p.delta_b2 = p.delta_b1 - delta;
    p
}
