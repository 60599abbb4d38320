//! Closed-form reference results for the eliminated two-mode models.
//!
//! For equal Zeeman splitting (Delta = 0) the ladder pair (c1, c2†) evolves
//! under the 2x2 generator -i [[A, B], [-B, -A]], whose square is
//! lambda^2 = A^2 - B^2 times the identity. From vacuum this gives the
//! propagator coefficients
//!
//! ```text
//! nu1 = cos(lambda t) - i (A/lambda) sin(lambda t)
//! nu2 = i (B/lambda) sin(lambda t)
//! c1(t) = nu1 c1(0) - nu2 c2†(0)
//! ```
//!
//! the joint-quadrature variance
//!
//! ```text
//! V(X(0)) = 1/4 [1 - (2v/(omega + v)) sin^2(lambda t)]
//! ```
//!
//! and the per-ensemble excitation (B/lambda)^2 sin^2(lambda t). The
//! oscillation argument `lambda t` follows from the nu coefficients; the
//! alternative `2 lambda t` normalisation is kept available as an explicit
//! convention and is ruled out by the Fock oracle
//! (see [`fock::adjudicate_variance_convention`](crate::fock::adjudicate_variance_convention)).
//!
//! With unequal splitting the generator picks up Delta and the solutions are
//! oscillatory exactly when |Delta + 2A| > 2|B|. At the special point
//! Delta = -2A the removable rotation A(c1†c1 - c2†c2) drops out and the pure
//! squeeze generator B(c1 c2 + c1†c2†) yields V = (1/4) e^{-2Bt} on the
//! squeezed joint quadrature, e^{+2Bt} on its conjugate, and excitation
//! sinh^2(Bt) per ensemble.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{effective_params, SystemParams};

/// Oscillation-argument convention for the equal-splitting variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscConvention {
    /// sin^2(lambda t); consistent with the nu-coefficient algebra. Default.
    #[default]
    LambdaT,
    /// sin^2(2 lambda t); kept for comparison, rejected by the Fock oracle.
    TwoLambdaT,
}

/// Dynamical character of the eliminated model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// |Delta + 2A| > 2|B|: purely imaginary drift spectrum, bounded variance.
    Oscillatory,
    /// |Delta + 2A| < 2|B|: a growing mode, exponentially deepening squeezing.
    Exponential,
    /// On the dividing line within relative tolerance 1e-9.
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Oscillatory => "oscillatory",
            Regime::Exponential => "exponential",
            Regime::Boundary => "boundary",
        })
    }
}

/// Propagator coefficients of the equal-splitting solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuCoefficients {
    pub nu1: Complex64,
    pub nu2: Complex64,
}

impl NuCoefficients {
    /// |nu1|^2 + nu2^2 = 1 for real lambda (nu2 is purely imaginary).
    pub fn identity_residue(&self) -> f64 {
        (self.nu1.norm_sqr() + (self.nu2 * self.nu2).re - 1.0).abs()
    }
}

/// Closed-form results at the Delta = -2A special point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialCase {
    /// Squeezed joint-quadrature variance (1/4) e^{-2Bt}.
    pub v_min: f64,
    /// Conjugate (anti-squeezed) variance (1/4) e^{+2Bt}.
    pub v_max: f64,
    /// Per-ensemble excitation sinh^2(Bt).
    pub excitation: f64,
}

fn real_lambda(p: &SystemParams) -> Result<(f64, f64, f64)> {
    let eff = effective_params(p)?;
    if !eff.lambda_real() || eff.lambda.re == 0.0 {
        return Err(Error::OscillatoryDomain { omega: p.detuning(), v: p.v });
    }
    Ok((eff.a_coef, eff.b_coef, eff.lambda.re))
}

/// Joint-quadrature variance V(X_{c1c2}(0)) at equal Zeeman splitting.
///
/// Needs |omega| > v (real lambda); vacuum value 1/4 at t = 0.
pub fn variance_equal_splitting(p: &SystemParams, t: f64, conv: OscConvention) -> Result<f64> {
    let (_, _, lambda) = real_lambda(p)?;
    let omega = p.detuning();
    let arg = match conv {
        OscConvention::LambdaT => lambda * t,
        OscConvention::TwoLambdaT => 2.0 * lambda * t,
    };
    Ok(0.25 * (1.0 - 2.0 * p.v / (omega + p.v) * arg.sin().powi(2)))
}

/// Per-ensemble excitation <c†c> = (B/lambda)^2 sin^2(lambda t) at equal
/// splitting.
pub fn excitation_equal_splitting(p: &SystemParams, t: f64) -> Result<f64> {
    let (_, b, lambda) = real_lambda(p)?;
    Ok((b / lambda).powi(2) * (lambda * t).sin().powi(2))
}

/// Relative width of the boundary band between regimes.
pub const REGIME_BOUNDARY_REL_TOL: f64 = 1e-9;

/// Classify the eliminated model by the spectrum of its drift:
/// oscillatory iff |Delta + 2A| > 2|B|.
pub fn classify_regime(p: &SystemParams) -> Result<Regime> {
    let eff = effective_params(p)?;
    let shifted = (eff.delta + 2.0 * eff.a_coef).abs();
    let squeeze = 2.0 * eff.b_coef.abs();
    let scale = shifted.max(squeeze);
    if (shifted - squeeze).abs() <= REGIME_BOUNDARY_REL_TOL * scale {
        Ok(Regime::Boundary)
    } else if shifted > squeeze {
        Ok(Regime::Oscillatory)
    } else {
        Ok(Regime::Exponential)
    }
}

/// Closed forms at the Delta = -2A point. The caller asserts the Delta
/// intent; only B matters here and lambda is ignored. The squeezed
/// quadrature sits at angle pi/2 on the rotated modes c' = e^{i pi/4} c,
/// i.e. 3 pi/4 on the bare modes.
pub fn exponential_case(p: &SystemParams, t: f64) -> Result<ExponentialCase> {
    let eff = effective_params(p)?;
    let bt = eff.b_coef * t;
    Ok(ExponentialCase {
        v_min: 0.25 * (-2.0 * bt).exp(),
        v_max: 0.25 * (2.0 * bt).exp(),
        excitation: bt.sinh().powi(2),
    })
}

/// Propagator coefficients nu1, nu2 at time t. Fails at lambda = 0, where
/// the generator is defective.
pub fn propagator_coefficients(p: &SystemParams, t: f64) -> Result<NuCoefficients> {
    let eff = effective_params(p)?;
    if eff.lambda.norm() == 0.0 {
        return Err(Error::DegenerateLambda);
    }
    let lt = eff.lambda * t;
    let nu1 = lt.cos() - Complex64::I * (eff.a_coef / eff.lambda) * lt.sin();
    let nu2 = Complex64::I * (eff.b_coef / eff.lambda) * lt.sin();
    Ok(NuCoefficients { nu1, nu2 })
}

/// Second moments assembled from the nu coefficients (vacuum initial state):
/// (<c1 c2>, <c1 c1†>, <c1†c1>, <c1†c2†>).
pub fn moments_from_nu(nu: &NuCoefficients) -> (Complex64, Complex64, Complex64, Complex64) {
    let c1c2 = -nu.nu1 * nu.nu2;
    let c1c1d = Complex64::new(nu.nu1.norm_sqr(), 0.0);
    let c1dc1 = -nu.nu2 * nu.nu2;
    let c1dc2d = nu.nu2 * nu.nu1.conj();
    (c1c2, c1c1d, c1dc1, c1dc2d)
}

/// Time of the first variance minimum at equal splitting:
/// t* = pi / (2 lambda) under the `LambdaT` convention.
pub fn first_minimum_time(p: &SystemParams) -> Result<f64> {
    let delta = p.zeeman_offset();
    let scale = p.delta_b1.abs().max(p.delta_b2.abs());
    if delta.abs() > 1e-12 * scale {
        return Err(Error::RegimeMismatch(format!(
            "first_minimum_time needs equal Zeeman splitting, got Delta = {delta:.3e} rad/s"
        )));
    }
    match classify_regime(p)? {
        Regime::Oscillatory => {}
        other => {
            return Err(Error::RegimeMismatch(format!(
                "first_minimum_time needs the oscillatory regime, got {other}"
            )))
        }
    }
    let (_, _, lambda) = real_lambda(p)?;
    Ok(std::f64::consts::FRAC_PI_2 / lambda)
}
