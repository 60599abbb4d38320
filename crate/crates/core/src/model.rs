//! Physical parameter sets, unit conventions and the mode layout shared by
//! every other module.
//!
//! Internally every rate is an angular frequency in rad/s. Configuration I/O
//! uses ordinary frequencies in Hz (the f = omega/2pi values quoted in the
//! literature); [`SystemParams::from_hz`] / [`SystemParams::to_hz`] convert at
//! the boundary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Relative tolerance of the |omega| = v resonance guard.
pub const RESONANCE_REL_TOL: f64 = 1e-9;

/// Adiabaticity threshold on g/|omega +- v| and kappa/|omega +- v|.
pub const ADIABATIC_RATIO_MAX: f64 = 0.1;

/// Bosonic modes of the model: two collective spin modes and two mechanical
/// modes. Quadratures follow x = (c + c†)/√2, p = -i(c - c†)/√2, so the
/// vacuum covariance is identity/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Ground-state-prepared spin ensemble (beam-splitter coupling to `A`).
    C1,
    /// Inverted spin ensemble (pair-creation coupling to `B`).
    C2,
    /// Mechanical mode of the first beam.
    A,
    /// Mechanical mode of the second beam.
    B,
}

impl Mode {
    pub fn is_mechanical(self) -> bool {
        matches!(self, Mode::A | Mode::B)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::C1 => "c1",
            Mode::C2 => "c2",
            Mode::A => "a",
            Mode::B => "b",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Ordered list of modes fixing the quadrature basis.
///
/// Mode k occupies quadrature indices (2k, 2k+1) = (x_k, p_k). The layout is
/// immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeLayout {
    modes: Vec<Mode>,
}

impl ModeLayout {
    /// Human-readable statement of the basis convention.
    pub const QUADRATURE_CONVENTION: &'static str =
        "x = (c + c\u{2020})/\u{221a}2, p = -i(c - c\u{2020})/\u{221a}2; vacuum covariance = identity/2";

    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParams("layout needs at least one mode".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::InvalidParams(format!("duplicate mode {m} in layout")));
            }
        }
        Ok(Self { modes })
    }

    /// Standard layout of the eliminated models: [c1, c2].
    pub fn two_spin() -> Self {
        Self { modes: vec![Mode::C1, Mode::C2] }
    }

    /// Standard layout of the full model: [c1, c2, a, b].
    pub fn four_mode() -> Self {
        Self { modes: vec![Mode::C1, Mode::C2, Mode::A, Mode::B] }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Dimension of the quadrature vector (2 per mode).
    pub fn dim(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.modes.contains(&mode)
    }

    pub fn index_of(&self, mode: Mode) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or_else(|| Error::UnknownMode { label: mode.label().into() })
    }

    pub fn x_index(&self, mode: Mode) -> Result<usize> {
        Ok(2 * self.index_of(mode)?)
    }

    pub fn p_index(&self, mode: Mode) -> Result<usize> {
        Ok(2 * self.index_of(mode)? + 1)
    }

    /// Symplectic form for this layout: block-diagonal [[0, 1], [-1, 0]] per
    /// mode, so [r_i, r_j] = i Omega_ij.
    pub fn symplectic_form(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut omega = nalgebra::DMatrix::zeros(n, n);
        for k in 0..self.n_modes() {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }
}

/// All physical rates of the four-mode model, in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical frequency omega_m of both beams.
    pub omega_m: f64,
    /// Zeeman splitting of ensemble 1.
    pub delta_b1: f64,
    /// Zeeman splitting of ensemble 2.
    pub delta_b2: f64,
    /// Collective spin-phonon coupling sqrt(N) * g_single.
    pub g_collective: f64,
    /// Phonon-phonon hopping strength.
    pub v: f64,
    /// Spins per ensemble; used only for Holstein-Primakoff validity checks.
    pub n_spins: u32,
    /// Mechanical damping rate, shared by both beams.
    pub kappa: f64,
    /// Thermal phonon occupation of the mechanical bath.
    pub n_th: f64,
}

/// The same parameters with every rate expressed as an ordinary frequency in
/// Hz. This is the shape used for configuration files and report echoes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParamsHz {
    pub omega_m: f64,
    pub delta_b1: f64,
    pub delta_b2: f64,
    pub g: f64,
    pub v: f64,
    pub n_spins: u32,
    pub kappa: f64,
    pub n_th: f64,
}

impl SystemParams {
    /// Build from angular frequencies, checking the hard invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega_m: f64,
        delta_b1: f64,
        delta_b2: f64,
        g_collective: f64,
        v: f64,
        n_spins: u32,
        kappa: f64,
        n_th: f64,
    ) -> Result<Self> {
        let p = Self { omega_m, delta_b1, delta_b2, g_collective, v, n_spins, kappa, n_th };
        p.check()?;
        Ok(p)
    }

    pub fn from_hz(hz: SystemParamsHz) -> Result<Self> {
        Self::new(
            TWO_PI * hz.omega_m,
            TWO_PI * hz.delta_b1,
            TWO_PI * hz.delta_b2,
            TWO_PI * hz.g,
            TWO_PI * hz.v,
            hz.n_spins,
            TWO_PI * hz.kappa,
            hz.n_th,
        )
    }

    pub fn to_hz(&self) -> SystemParamsHz {
        SystemParamsHz {
            omega_m: self.omega_m / TWO_PI,
            delta_b1: self.delta_b1 / TWO_PI,
            delta_b2: self.delta_b2 / TWO_PI,
            g: self.g_collective / TWO_PI,
            v: self.v / TWO_PI,
            n_spins: self.n_spins,
            kappa: self.kappa / TWO_PI,
            n_th: self.n_th,
        }
    }

    fn check(&self) -> Result<()> {
        let fields = [
            ("omega_m", self.omega_m),
            ("delta_b1", self.delta_b1),
            ("delta_b2", self.delta_b2),
            ("g_collective", self.g_collective),
            ("v", self.v),
            ("kappa", self.kappa),
            ("n_th", self.n_th),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {value}")));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::InvalidParams(format!("omega_m must be > 0, got {}", self.omega_m)));
        }
        if self.n_spins < 1 {
            return Err(Error::InvalidParams("n_spins must be >= 1".into()));
        }
        for (name, value) in [
            ("g_collective", self.g_collective),
            ("v", self.v),
            ("kappa", self.kappa),
            ("n_th", self.n_th),
        ] {
            if value < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Detuning omega = Delta_B1 - omega_m between ensemble 1 and the beams.
    pub fn detuning(&self) -> f64 {
        self.delta_b1 - self.omega_m
    }

    /// Zeeman offset Delta = Delta_B1 - Delta_B2 between the two ensembles.
    pub fn zeeman_offset(&self) -> f64 {
        self.delta_b1 - self.delta_b2
    }

    /// True when |omega| and v coincide within [`RESONANCE_REL_TOL`].
    pub fn on_resonance(&self) -> bool {
        let omega = self.detuning().abs();
        let scale = omega.max(self.v);
        (omega - self.v).abs() <= RESONANCE_REL_TOL * scale
    }

    /// Soft sanity checks; an empty list means nothing looks suspicious.
    pub fn validate(&self) -> Vec<ParamWarning> {
        let mut warnings = Vec::new();
        let omega = self.detuning();
        for (denom, label) in [(omega - self.v, "|omega - v|"), (omega + self.v, "|omega + v|")] {
            let ratio = if denom == 0.0 { f64::INFINITY } else { self.g_collective / denom.abs() };
            if ratio > ADIABATIC_RATIO_MAX {
                warnings.push(ParamWarning::Adiabaticity { ratio, denom: label });
            }
        }
        if self.g_collective > 0.0 && self.kappa >= self.g_collective {
            warnings.push(ParamWarning::DampingDominatesCoupling {
                kappa: self.kappa,
                g: self.g_collective,
            });
        }
        if self.n_th > 1.0 {
            warnings.push(ParamWarning::HotBath { n_th: self.n_th });
        }
        warnings
    }
}

/// Soft diagnostics emitted by [`SystemParams::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamWarning {
    /// g/|omega +- v| above [`ADIABATIC_RATIO_MAX`]: adiabatic elimination is
    /// unreliable.
    Adiabaticity { ratio: f64, denom: &'static str },
    /// kappa >= g: the mechanical bus decays faster than it couples.
    DampingDominatesCoupling { kappa: f64, g: f64 },
    /// More than one thermal phonon on average.
    HotBath { n_th: f64 },
}

impl std::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamWarning::Adiabaticity { ratio, denom } => write!(
                f,
                "adiabaticity ratio g/{denom} = {ratio:.3} exceeds {ADIABATIC_RATIO_MAX}"
            ),
            ParamWarning::DampingDominatesCoupling { kappa, g } => write!(
                f,
                "mechanical damping kappa = {kappa:.3e} rad/s is not small against g = {g:.3e} rad/s"
            ),
            ParamWarning::HotBath { n_th } => {
                write!(f, "thermal occupation n_th = {n_th:.3} exceeds 1")
            }
        }
    }
}

/// Derived constants of the adiabatically eliminated two-mode model:
/// A = omega g^2/(omega^2 - v^2), B = v g^2/(omega^2 - v^2),
/// lambda = sqrt(A^2 - B^2) (complex when |A| < |B|),
/// Delta = Delta_B1 - Delta_B2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    pub a_coef: f64,
    pub b_coef: f64,
    pub lambda: Complex64,
    pub delta: f64,
}

impl EffectiveParams {
    /// True when lambda is real (oscillatory solutions, |omega| > v).
    pub fn lambda_real(&self) -> bool {
        self.lambda.im == 0.0
    }
}

/// Evaluate the eliminated-model constants from the system rates.
///
/// Fails with [`Error::Resonance`] when |omega| = v within
/// [`RESONANCE_REL_TOL`], where A and B diverge.
pub fn effective_params(p: &SystemParams) -> Result<EffectiveParams> {
    let omega = p.detuning();
    if p.on_resonance() {
        return Err(Error::Resonance { omega, v: p.v });
    }
    let g2 = p.g_collective * p.g_collective;
    let denom = omega * omega - p.v * p.v;
    let a_coef = omega * g2 / denom;
    let b_coef = p.v * g2 / denom;
    let lambda = Complex64::new(a_coef * a_coef - b_coef * b_coef, 0.0).sqrt();
    Ok(EffectiveParams { a_coef, b_coef, lambda, delta: p.zeeman_offset() })
}
