//! Constructors for the linear (Gaussian) dynamical models.
//!
//! Every model is expressed as first/second-moment generators in the real
//! quadrature basis:
//!
//! ```text
//! d<r>/dt = F <r>,      dsigma/dt = F sigma + sigma F' + D
//! ```
//!
//! The rotating-frame ladder equations of motion are
//!
//! ```text
//! dc1/dt = -i g a
//! dc2/dt = -i Delta c2 - i g b†
//! da/dt  =  i omega a - i g c1 - i v b - (kappa/2) a
//! db/dt  =  i omega b - i g c2† - i v a - (kappa/2) b
//! ```
//!
//! with omega = Delta_B1 - omega_m and Delta = Delta_B1 - Delta_B2; the
//! creation-type coupling of the inverted ensemble (b†c2† + b c2) is what
//! enables pair creation. Mechanical damping enters as -kappa/2 drift plus
//! diffusion kappa(2 n_th + 1)/2 on each mechanical quadrature.
//!
//! Adiabatic elimination of the far-detuned mechanical modes leaves the
//! two-mode effective Hamiltonian
//!
//! ```text
//! H_eff = A c1†c1 + (A + Delta) c2†c2 + B (c1 c2 + c1†c2†)
//! ```
//!
//! with A, B from [`effective_params`](crate::model::effective_params).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::model::{effective_params, Mode, ModeLayout, SystemParams, ADIABATIC_RATIO_MAX};

/// A set of labeled bosonic modes with real drift and diffusion generators in
/// the quadrature basis (units rad/s).
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub layout: ModeLayout,
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    /// Free-text provenance: which model, which frame.
    pub description: String,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Eigenvalues of the drift generator.
    pub fn drift_eigenvalues(&self) -> Vec<Complex64> {
        crate::linalg::eigenvalues(&self.drift)
    }

    /// Largest |eigenvalue| of the drift, in rad/s.
    pub fn spectral_radius(&self) -> f64 {
        crate::linalg::spectral_radius(&self.drift)
    }
}

/// Dynamics of the ladder vector (o_1..o_n, o_1†..o_n†): d xi/dt = M xi with
/// M = [[E, G], [G*, E*]]. Only E (annihilation -> annihilation) and G
/// (creation -> annihilation) are stored; the conjugate rows follow from
/// Hermiticity of the operator equations.
struct LadderDynamics {
    n: usize,
    e: DMatrix<Complex64>,
    g: DMatrix<Complex64>,
}

impl LadderDynamics {
    fn new(n: usize) -> Self {
        Self { n, e: DMatrix::zeros(n, n), g: DMatrix::zeros(n, n) }
    }

    fn e(&mut self, row: usize, col: usize, z: Complex64) {
        self.e[(row, col)] = z;
    }

    fn g(&mut self, row: usize, col: usize, z: Complex64) {
        self.g[(row, col)] = z;
    }

    /// Transform to the real quadrature basis r = U xi with
    /// x_k = (o_k + o_k†)/√2, p_k = -i(o_k - o_k†)/√2. U is unitary, so
    /// F = U M U†; the result must come out real.
    fn quadrature_drift(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.e);
        m.view_mut((0, n), (n, n)).copy_from(&self.g);
        m.view_mut((n, 0), (n, n)).copy_from(&self.g.map(|z| z.conj()));
        m.view_mut((n, n), (n, n)).copy_from(&self.e.map(|z| z.conj()));

        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut u = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for k in 0..n {
            u[(2 * k, k)] = inv_sqrt2;
            u[(2 * k, n + k)] = inv_sqrt2;
            u[(2 * k + 1, k)] = minus_i * inv_sqrt2;
            u[(2 * k + 1, n + k)] = -minus_i * inv_sqrt2;
        }
        let f = &u * m * u.adjoint();
        let scale = f.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let spill = f.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        debug_assert!(
            spill <= 1e-10 * scale,
            "quadrature drift has imaginary residue {spill:e} (scale {scale:e})"
        );
        f.map(|z| z.re)
    }
}

/// Full four-mode model: drift from the rotating-frame equations of motion,
/// diffusion kappa(2 n_th + 1)/2 on each mechanical quadrature. Equal Zeeman
/// splitting (Delta = 0) reproduces the symmetric special case.
pub fn build_full_model(p: &SystemParams) -> LinearModel {
    let omega = p.detuning();
    let delta = p.zeeman_offset();
    let g = p.g_collective;
    let v = p.v;
    let i = Complex64::I;

    // Mode order [c1, c2, a, b] = indices 0..4.
    let mut dyn4 = LadderDynamics::new(4);
    dyn4.e(0, 2, -i * g);
    dyn4.e(1, 1, -i * delta);
    dyn4.g(1, 3, -i * g);
    dyn4.e(2, 0, -i * g);
    dyn4.e(2, 2, i * omega - Complex64::new(p.kappa / 2.0, 0.0));
    dyn4.e(2, 3, -i * v);
    dyn4.g(3, 1, -i * g);
    dyn4.e(3, 2, -i * v);
    dyn4.e(3, 3, i * omega - Complex64::new(p.kappa / 2.0, 0.0));

    let layout = ModeLayout::four_mode();
    let mut diffusion = DMatrix::zeros(8, 8);
    let d_mech = p.kappa * (2.0 * p.n_th + 1.0) / 2.0;
    for mode in [Mode::A, Mode::B] {
        let k = layout.index_of(mode).expect("mechanical mode in layout");
        diffusion[(2 * k, 2 * k)] = d_mech;
        diffusion[(2 * k + 1, 2 * k + 1)] = d_mech;
    }

    LinearModel {
        drift: dyn4.quadrature_drift(),
        diffusion,
        layout,
        description: format!(
            "four-mode rotating-frame model (omega = {:.6e} rad/s, Delta = {:.6e} rad/s, \
             kappa = {:.3e} rad/s, n_th = {:.3e})",
            omega, delta, p.kappa, p.n_th
        ),
    }
}

/// Two-mode model with the mechanical bus eliminated:
/// H_eff = A c1†c1 + (A + Delta) c2†c2 + B(c1 c2 + c1†c2†), no diffusion.
///
/// Requires |omega| != v. Adiabaticity (g << |omega +- v|) is advisory only;
/// consult [`adiabaticity_report`].
pub fn build_effective_model(p: &SystemParams) -> Result<LinearModel> {
    let eff = effective_params(p)?;
    let i = Complex64::I;
    let mut dyn2 = LadderDynamics::new(2);
    dyn2.e(0, 0, -i * eff.a_coef);
    dyn2.g(0, 1, -i * eff.b_coef);
    dyn2.e(1, 1, -i * (eff.a_coef + eff.delta));
    dyn2.g(1, 0, -i * eff.b_coef);

    Ok(LinearModel {
        drift: dyn2.quadrature_drift(),
        diffusion: DMatrix::zeros(4, 4),
        layout: ModeLayout::two_spin(),
        description: format!(
            "eliminated two-mode model (A = {:.6e} rad/s, B = {:.6e} rad/s, Delta = {:.6e} rad/s)",
            eff.a_coef, eff.b_coef, eff.delta
        ),
    })
}

/// Pure two-mode-squeeze generator H = B(c1 c2 + c1†c2†): the reduced form of
/// the eliminated model at Delta = -2A, with the removable A(c1†c1 - c2†c2)
/// rotation taken out.
pub fn build_squeeze_model(p: &SystemParams) -> Result<LinearModel> {
    let eff = effective_params(p)?;
    let i = Complex64::I;
    let mut dyn2 = LadderDynamics::new(2);
    dyn2.g(0, 1, -i * eff.b_coef);
    dyn2.g(1, 0, -i * eff.b_coef);

    Ok(LinearModel {
        drift: dyn2.quadrature_drift(),
        diffusion: DMatrix::zeros(4, 4),
        layout: ModeLayout::two_spin(),
        description: format!("pure squeeze generator (B = {:.6e} rad/s)", eff.b_coef),
    })
}

/// Basis-change record returned by [`normal_mode_transform`].
#[derive(Clone, Debug)]
pub struct NormalModeMap {
    /// Orthogonal quadrature basis change r' = R r with
    /// a~ = (a + b)/√2, b~ = (a - b)/√2 on the mechanical block.
    pub basis_change: DMatrix<f64>,
    /// Lab-frame frequencies of (a~, b~): omega_m + v and omega_m - v.
    pub mech_frequencies: (f64, f64),
    /// Rotating-frame detunings of (a~, b~): omega - v and omega + v.
    pub detunings: (f64, f64),
    /// Coupling of each spin mode to each normal mode: g/√2.
    pub coupling: f64,
}

/// Re-express the full model in the mechanical normal-mode basis
/// a~ = (a + b)/√2, b~ = (a - b)/√2, which decouples the phonon hopping and
/// splits the mechanical frequencies to omega_m +- v.
pub fn normal_mode_transform(p: &SystemParams) -> (LinearModel, NormalModeMap) {
    let full = build_full_model(p);
    let n = full.dim();
    let mut r = DMatrix::<f64>::identity(n, n);
    let layout = &full.layout;
    let xa = layout.x_index(Mode::A).expect("mode a");
    let xb = layout.x_index(Mode::B).expect("mode b");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for off in 0..2 {
        // x and p components transform identically.
        r[(xa + off, xa + off)] = s;
        r[(xa + off, xb + off)] = s;
        r[(xb + off, xa + off)] = s;
        r[(xb + off, xb + off)] = -s;
    }

    let drift = &r * &full.drift * r.transpose();
    let diffusion = &r * &full.diffusion * r.transpose();
    let omega = p.detuning();
    let map = NormalModeMap {
        basis_change: r,
        mech_frequencies: (p.omega_m + p.v, p.omega_m - p.v),
        detunings: (omega - p.v, omega + p.v),
        coupling: p.g_collective * s,
    };
    let model = LinearModel {
        layout: full.layout,
        drift,
        diffusion,
        description: format!("{} in the mechanical normal-mode basis", full.description),
    };
    (model, map)
}

/// The ratios governing the validity of the adiabatic elimination.
#[derive(Clone, Copy, Debug)]
pub struct AdiabaticityReport {
    pub g_over_omega_minus_v: f64,
    pub g_over_omega_plus_v: f64,
    pub kappa_over_omega_minus_v: f64,
    pub kappa_over_omega_plus_v: f64,
    /// All four ratios at or below [`ADIABATIC_RATIO_MAX`].
    pub adiabatic: bool,
}

impl AdiabaticityReport {
    pub fn worst_ratio(&self) -> f64 {
        self.g_over_omega_minus_v
            .max(self.g_over_omega_plus_v)
            .max(self.kappa_over_omega_minus_v)
            .max(self.kappa_over_omega_plus_v)
    }
}

/// Compare g and kappa against the normal-mode detunings |omega -+ v|.
pub fn adiabaticity_report(p: &SystemParams) -> AdiabaticityReport {
    let omega = p.detuning();
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den.abs() };
    let report = AdiabaticityReport {
        g_over_omega_minus_v: ratio(p.g_collective, omega - p.v),
        g_over_omega_plus_v: ratio(p.g_collective, omega + p.v),
        kappa_over_omega_minus_v: ratio(p.kappa, omega - p.v),
        kappa_over_omega_plus_v: ratio(p.kappa, omega + p.v),
        adiabatic: false,
    };
    AdiabaticityReport { adiabatic: report.worst_ratio() <= ADIABATIC_RATIO_MAX, ..report }
}
