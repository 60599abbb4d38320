//! Physical quantities extracted from moment states: joint-quadrature
//! variances, the optimal squeezing angle, excitations, Holstein-Primakoff
//! validity and minimum-variance search.
//!
//! The joint quadrature of a mode pair at angle theta is
//!
//! ```text
//! X(theta) = [cos(theta) (x_i + x_j) - sin(theta) (p_i + p_j)] / 2
//! ```
//!
//! equal to (e^{i theta}(c_i + c_j) + h.c.)/(2 sqrt(2)) under the layout's
//! quadrature convention; the vacuum gives V = 1/4. Variances below 1/4
//! witness two-mode squeezing. Values are reported in this normalisation,
//! not dB (the CLI offers dB as an output-only conversion).

use nalgebra::DVector;

use crate::builder::LinearModel;
use crate::error::{Error, Result};
use crate::gaussian::{propagate_exact, MomentState, Trajectory};
use crate::model::{Mode, ModeLayout};

/// Fraction of N up to which the Holstein-Primakoff picture is trusted.
pub const HP_FRACTION: f64 = 0.1;

/// Variance of the joint quadrature X(theta) of two distinct modes.
pub fn joint_quadrature_variance(
    s: &MomentState,
    layout: &ModeLayout,
    mode_i: Mode,
    mode_j: Mode,
    theta: f64,
) -> Result<f64> {
    let w = joint_weights(layout, mode_i, mode_j, theta)?;
    Ok((&w.transpose() * &s.cov * &w)[(0, 0)])
}

fn joint_weights(
    layout: &ModeLayout,
    mode_i: Mode,
    mode_j: Mode,
    theta: f64,
) -> Result<DVector<f64>> {
    if mode_i == mode_j {
        return Err(Error::InvalidParams(format!("joint quadrature needs two distinct modes, got {mode_i}")));
    }
    let mut w = DVector::zeros(layout.dim());
    let (c, s) = (theta.cos() / 2.0, theta.sin() / 2.0);
    for m in [mode_i, mode_j] {
        w[layout.x_index(m)?] = c;
        w[layout.p_index(m)?] = -s;
    }
    Ok(w)
}

/// Minimise V(X(theta)) over theta analytically.
///
/// V(theta) is a quadratic form on (cos theta, sin theta); the minimum is the
/// smaller eigenvalue of the associated 2x2 matrix. Returns the angle in
/// (-pi/2, pi/2] (the variance is pi-periodic in theta) and the minimum.
/// Degenerate (isotropic) states report theta = 0.
pub fn optimal_angle(
    s: &MomentState,
    layout: &ModeLayout,
    mode_i: Mode,
    mode_j: Mode,
) -> Result<(f64, f64)> {
    if mode_i == mode_j {
        return Err(Error::InvalidParams(format!("joint quadrature needs two distinct modes, got {mode_i}")));
    }
    let mut u = DVector::<f64>::zeros(layout.dim());
    let mut v = DVector::<f64>::zeros(layout.dim());
    for m in [mode_i, mode_j] {
        u[layout.x_index(m)?] = 1.0;
        v[layout.p_index(m)?] = 1.0;
    }
    let a = (&u.transpose() * &s.cov * &u)[(0, 0)];
    let b = (&v.transpose() * &s.cov * &v)[(0, 0)];
    let c = (&u.transpose() * &s.cov * &v)[(0, 0)];

    let half_diff = (a - b) / 2.0;
    let radius = (half_diff * half_diff + c * c).sqrt();
    if radius <= 1e-14 * (a + b) {
        return Ok((0.0, (a + b) / 8.0));
    }
    let theta = 0.5 * c.atan2(-half_diff);
    let v_min = (a + b) / 8.0 - radius / 4.0;
    Ok((theta, v_min))
}

/// Mean occupation <c†c> of one mode.
pub fn mode_excitation(s: &MomentState, layout: &ModeLayout, mode: Mode) -> Result<f64> {
    let x = layout.x_index(mode)?;
    let p = layout.p_index(mode)?;
    Ok((s.cov[(x, x)] + s.cov[(p, p)] - 1.0) / 2.0
        + (s.mean[x] * s.mean[x] + s.mean[p] * s.mean[p]) / 2.0)
}

/// Two-mode separability witness at angle theta:
/// V(X_sum(theta)) + V(P_diff(theta)), where P_diff pairs the commuting
/// difference quadrature with X_sum. Separable states satisfy >= 1/2; any
/// smaller value certifies entanglement.
pub fn duan_witness(
    s: &MomentState,
    layout: &ModeLayout,
    mode_i: Mode,
    mode_j: Mode,
    theta: f64,
) -> Result<f64> {
    let w_sum = joint_weights(layout, mode_i, mode_j, theta)?;
    let mut w_diff = DVector::zeros(layout.dim());
    let (c, sn) = (theta.cos() / 2.0, theta.sin() / 2.0);
    w_diff[layout.p_index(mode_i)?] = c;
    w_diff[layout.p_index(mode_j)?] = -c;
    w_diff[layout.x_index(mode_i)?] = sn;
    w_diff[layout.x_index(mode_j)?] = -sn;
    let v_sum = (&w_sum.transpose() * &s.cov * &w_sum)[(0, 0)];
    let v_diff = (&w_diff.transpose() * &s.cov * &w_diff)[(0, 0)];
    Ok(v_sum + v_diff)
}

/// Time series of squeezing observables for one mode pair.
#[derive(Clone, Debug)]
pub struct SqueezingTrace {
    pub times: Vec<f64>,
    /// V(X(theta)) at the requested angle.
    pub variance_theta: Vec<f64>,
    /// V minimised over theta (pointwise <= variance_theta).
    pub variance_opt: Vec<f64>,
    pub theta_opt: Vec<f64>,
    /// Excitations of the pair modes (c1, c2).
    pub excitations: Vec<(f64, f64)>,
    /// Mechanical occupations (a, b); zero when the modes are absent.
    pub phonon_occupations: Vec<(f64, f64)>,
    pub hp_valid: Vec<bool>,
    /// Requested angle, for provenance.
    pub theta: f64,
    /// Excitation threshold the HP flags were evaluated against.
    pub hp_threshold: f64,
}

impl SqueezingTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evaluate the squeezing observables along a trajectory. HP flags compare
/// the larger pair excitation against hp_fraction * n_spins.
pub fn squeezing_trace(
    traj: &Trajectory,
    layout: &ModeLayout,
    pair: (Mode, Mode),
    theta: f64,
    n_spins: u32,
    hp_fraction: f64,
) -> Result<SqueezingTrace> {
    let n = traj.states.len();
    let threshold = hp_fraction * n_spins as f64;
    let mut out = SqueezingTrace {
        times: Vec::with_capacity(n),
        variance_theta: Vec::with_capacity(n),
        variance_opt: Vec::with_capacity(n),
        theta_opt: Vec::with_capacity(n),
        excitations: Vec::with_capacity(n),
        phonon_occupations: Vec::with_capacity(n),
        hp_valid: Vec::with_capacity(n),
        theta,
        hp_threshold: threshold,
    };
    for s in &traj.states {
        out.times.push(s.time);
        out.variance_theta.push(joint_quadrature_variance(s, layout, pair.0, pair.1, theta)?);
        let (th, vopt) = optimal_angle(s, layout, pair.0, pair.1)?;
        out.theta_opt.push(th);
        out.variance_opt.push(vopt);
        let e1 = mode_excitation(s, layout, pair.0)?;
        let e2 = mode_excitation(s, layout, pair.1)?;
        out.excitations.push((e1, e2));
        let occ_a = if layout.contains(Mode::A) {
            mode_excitation(s, layout, Mode::A)?
        } else {
            0.0
        };
        let occ_b = if layout.contains(Mode::B) {
            mode_excitation(s, layout, Mode::B)?
        } else {
            0.0
        };
        out.phonon_occupations.push((occ_a, occ_b));
        out.hp_valid.push(e1.max(e2) <= threshold);
    }
    Ok(out)
}

/// Outcome of re-flagging a trace against a Holstein-Primakoff threshold.
#[derive(Clone, Copy, Debug)]
pub struct HpReport {
    pub threshold: f64,
    pub first_violation_time: Option<f64>,
    pub n_invalid: usize,
}

/// Re-evaluate the HP flags of a trace in place.
pub fn hp_check(trace: &mut SqueezingTrace, n_spins: u32, hp_fraction: f64) -> HpReport {
    let threshold = hp_fraction * n_spins as f64;
    trace.hp_threshold = threshold;
    let mut first = None;
    let mut n_invalid = 0;
    for k in 0..trace.len() {
        let (e1, e2) = trace.excitations[k];
        let valid = e1.max(e2) <= threshold;
        trace.hp_valid[k] = valid;
        if !valid {
            n_invalid += 1;
            if first.is_none() {
                first = Some(trace.times[k]);
            }
        }
    }
    HpReport { threshold, first_violation_time: first, n_invalid }
}

/// A located variance minimum.
#[derive(Clone, Copy, Debug)]
pub struct MinVariance {
    pub t_min: f64,
    pub v_min: f64,
    pub theta_opt: f64,
}

/// Global minimum of `variance_opt` over the HP-valid samples of a trace,
/// refined by golden-section re-propagation around the best grid sample to
/// relative 1e-6 in time.
pub fn find_min_variance(
    model: &LinearModel,
    s0: &MomentState,
    trace: &SqueezingTrace,
    pair: (Mode, Mode),
) -> Result<MinVariance> {
    let (best_idx, grid_best) = best_valid_sample(trace)?;

    // Bracket the refinement between the neighbours of the best sample,
    // shrinking a side to the midpoint when the neighbour is HP-invalid.
    let t_best = trace.times[best_idx];
    let mut lo = if best_idx > 0 { trace.times[best_idx - 1] } else { t_best };
    let mut hi = if best_idx + 1 < trace.len() { trace.times[best_idx + 1] } else { t_best };
    if best_idx > 0 && !trace.hp_valid[best_idx - 1] {
        lo = 0.5 * (lo + t_best);
    }
    if best_idx + 1 < trace.len() && !trace.hp_valid[best_idx + 1] {
        hi = 0.5 * (hi + t_best);
    }

    let t0 = s0.time;
    let eval = |t: f64| -> Result<(f64, f64)> {
        let s = propagate_exact(model, s0, t - t0)?;
        optimal_angle(&s, &model.layout, pair.0, pair.1)
    };

    let mut best = grid_best;
    if hi > lo {
        let (t_ref, _) = golden_min(
            |t| eval(t).map(|(_, v)| v),
            lo,
            hi,
            1e-6,
        )?;
        let (theta, v) = eval(t_ref)?;
        if v < best.v_min {
            best = MinVariance { t_min: t_ref, v_min: v, theta_opt: theta };
        }
    }
    Ok(best)
}

/// Grid-only minimum (with parabolic sharpening) for traces that cannot be
/// re-propagated, e.g. Fock-oracle output.
pub fn find_min_variance_grid(trace: &SqueezingTrace) -> Result<MinVariance> {
    let (idx, best) = best_valid_sample(trace)?;
    // Parabola through the three samples around the minimum.
    if idx == 0 || idx + 1 >= trace.len() {
        return Ok(best);
    }
    let (t0, t1, t2) = (trace.times[idx - 1], trace.times[idx], trace.times[idx + 1]);
    let (v0, v1, v2) = (
        trace.variance_opt[idx - 1],
        trace.variance_opt[idx],
        trace.variance_opt[idx + 1],
    );
    let curvature = v0 - 2.0 * v1 + v2;
    if curvature <= 0.0 {
        return Ok(best);
    }
    let h = 0.5 * (t2 - t0);
    let shift = 0.5 * (v0 - v2) / curvature;
    if !shift.is_finite() || shift.abs() > 1.0 {
        return Ok(best);
    }
    let t_min = t1 + shift * h;
    let v_min = v1 - (v0 - v2) * (v0 - v2) / (8.0 * curvature);
    Ok(MinVariance { t_min, v_min: v_min.min(best.v_min), theta_opt: best.theta_opt })
}

fn best_valid_sample(trace: &SqueezingTrace) -> Result<(usize, MinVariance)> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut best: Option<(usize, f64)> = None;
    for k in 0..trace.len() {
        if !trace.hp_valid[k] {
            continue;
        }
        let v = trace.variance_opt[k];
        if best.map_or(true, |(_, bv)| v < bv) {
            best = Some((k, v));
        }
    }
    let (idx, v) =
        best.ok_or(Error::NoValidSamples { threshold: trace.hp_threshold })?;
    Ok((idx, MinVariance { t_min: trace.times[idx], v_min: v, theta_opt: trace.theta_opt[idx] }))
}

/// Golden-section minimisation to relative tolerance in the argument.
fn golden_min<F>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while (hi - lo) > rel_tol * scale {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_effective_model, build_squeeze_model};
    use crate::gaussian::{propagate_trace, vacuum_state};
    use crate::model::effective_params;
    use crate::testutil::{reference_params, reference_params_with_offset};
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_variance_quarter_any_angle() {
        let layout = ModeLayout::two_spin();
        let s = vacuum_state(&layout);
        for k in 0..12 {
            let theta = k as f64 * 0.55;
            let v = joint_quadrature_variance(&s, &layout, Mode::C1, Mode::C2, theta).unwrap();
            assert_relative_eq!(v, 0.25, max_relative = 1e-12);
        }
        let (theta, v) = optimal_angle(&s, &layout, Mode::C1, Mode::C2).unwrap();
        assert_eq!(theta, 0.0);
        assert_relative_eq!(v, 0.25, max_relative = 1e-12);
        assert_eq!(mode_excitation(&s, &layout, Mode::C1).unwrap(), 0.0);
    }

    #[test]
    fn distinct_modes_required_and_layout_errors() {
        let layout = ModeLayout::two_spin();
        let s = vacuum_state(&layout);
        assert!(joint_quadrature_variance(&s, &layout, Mode::C1, Mode::C1, 0.0).is_err());
        assert!(joint_quadrature_variance(&s, &layout, Mode::C1, Mode::A, 0.0).is_err());
        assert!(mode_excitation(&s, &layout, Mode::B).is_err());
    }

    #[test]
    fn squeezed_state_variance_at_rotated_angle() {
        // Pure squeeze evolution to B t = 1: the squeezed quadrature sits at
        // theta = 3 pi/4 on the bare modes and reads (1/4) e^{-2}.
        let p = reference_params(2.0, 0.0, 0.0);
        let eff = effective_params(&p).unwrap();
        let model = build_squeeze_model(&p).unwrap();
        let s = propagate_exact(&model, &vacuum_state(&model.layout), 1.0 / eff.b_coef).unwrap();
        let v = joint_quadrature_variance(&s, &model.layout, Mode::C1, Mode::C2,
            3.0 * std::f64::consts::FRAC_PI_4).unwrap();
        assert_relative_eq!(v, 0.25 * (-2.0_f64).exp(), max_relative = 1e-9);
        assert_relative_eq!(v, 0.0338, max_relative = 2e-3);

        // The angle optimiser finds the same quadrature and value.
        let (theta, v_min) = optimal_angle(&s, &model.layout, Mode::C1, Mode::C2).unwrap();
        assert_relative_eq!(v_min, 0.25 * (-2.0_f64).exp(), max_relative = 1e-9);
        let wrapped = (theta - 3.0 * std::f64::consts::FRAC_PI_4)
            .rem_euclid(std::f64::consts::PI);
        assert!(wrapped < 1e-9 || (std::f64::consts::PI - wrapped) < 1e-9, "theta = {theta}");

        // theta and theta + pi give the same variance.
        for k in 0..8 {
            let th = k as f64 * 0.4;
            let a = joint_quadrature_variance(&s, &model.layout, Mode::C1, Mode::C2, th).unwrap();
            let b = joint_quadrature_variance(&s, &model.layout, Mode::C1, Mode::C2,
                th + std::f64::consts::PI).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }

        // Optimum really is the minimum over sampled angles.
        for k in 0..32 {
            let th = k as f64 * std::f64::consts::PI / 32.0;
            let v_th =
                joint_quadrature_variance(&s, &model.layout, Mode::C1, Mode::C2, th).unwrap();
            assert!(v_min <= v_th + 1e-12);
        }
    }

    #[test]
    fn excitation_matches_squeeze_law() {
        let p = reference_params(2.0, 0.0, 0.0);
        let eff = effective_params(&p).unwrap();
        let model = build_squeeze_model(&p).unwrap();
        let bt = 1.117;
        let s = propagate_exact(&model, &vacuum_state(&model.layout), bt / eff.b_coef).unwrap();
        let n1 = mode_excitation(&s, &model.layout, Mode::C1).unwrap();
        assert_relative_eq!(n1, bt.sinh().powi(2), max_relative = 1e-9);
        assert_relative_eq!(n1, 1.86, max_relative = 2e-3);
    }

    #[test]
    fn effective_minimum_is_envelope_at_theta_zero() {
        let p = reference_params(2.0, 0.0, 0.0);
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let t_star = crate::analytic::first_minimum_time(&p).unwrap();
        let s = propagate_exact(&model, &s0, t_star).unwrap();
        let (theta, v_min) = optimal_angle(&s, &model.layout, Mode::C1, Mode::C2).unwrap();
        assert_relative_eq!(v_min, 1.0 / 12.0, max_relative = 1e-9);
        assert!(theta.abs() < 1e-6, "theta_opt = {theta}");
        let v0 = joint_quadrature_variance(&s, &model.layout, Mode::C1, Mode::C2, 0.0).unwrap();
        assert_relative_eq!(v0, v_min, max_relative = 1e-9);
    }

    #[test]
    fn duan_witness_flags_squeezed_states_only() {
        let layout = ModeLayout::two_spin();
        let vac = vacuum_state(&layout);
        let theta = 3.0 * std::f64::consts::FRAC_PI_4;
        assert_relative_eq!(
            duan_witness(&vac, &layout, Mode::C1, Mode::C2, theta).unwrap(),
            0.5,
            max_relative = 1e-12
        );

        let p = reference_params(2.0, 0.0, 0.0);
        let eff = effective_params(&p).unwrap();
        let model = build_squeeze_model(&p).unwrap();
        for bt in [0.2, 0.7, 1.3] {
            let s =
                propagate_exact(&model, &vacuum_state(&model.layout), bt / eff.b_coef).unwrap();
            let w = duan_witness(&s, &model.layout, Mode::C1, Mode::C2, theta).unwrap();
            assert_relative_eq!(w, 0.5 * (-2.0 * bt).exp(), max_relative = 1e-9);
            assert!(w < 0.5);
        }
    }

    #[test]
    fn trace_and_hp_flags() {
        let p = reference_params(2.0, 0.0, 0.0);
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let traj = propagate_trace(&model, &s0, 1.0e-3, 400).unwrap();
        let mut trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        assert_eq!(trace.len(), 400);
        for k in 0..trace.len() {
            assert!(trace.variance_opt[k] <= trace.variance_theta[k] + 1e-12);
            assert!(trace.variance_opt[k] > 0.0);
            assert_eq!(trace.phonon_occupations[k], (0.0, 0.0));
        }
        // Peak excitation 1/3 never threatens the HP threshold of 10.
        let report = hp_check(&mut trace, 100, HP_FRACTION);
        assert_eq!(report.first_violation_time, None);
        assert_eq!(report.n_invalid, 0);
        assert!(trace.hp_valid.iter().all(|&x| x));
    }

    #[test]
    fn hp_first_violation_time_on_growing_squeeze() {
        // sinh^2(B t) crosses 10 at t = asinh(sqrt(10))/B.
        let mut hz = reference_params(2.0, 0.0, 0.0).to_hz();
        hz.v = 1.5e6;
        hz.delta_b1 = hz.omega_m + 3.0e6;
        hz.delta_b2 = hz.delta_b1;
        let p = crate::model::SystemParams::from_hz(hz).unwrap();
        let eff = effective_params(&p).unwrap();
        let model = build_squeeze_model(&p).unwrap();
        let traj = propagate_trace(&model, &vacuum_state(&model.layout), 1.0e-3, 2001).unwrap();
        let mut trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let report = hp_check(&mut trace, 100, HP_FRACTION);
        let t_cross = 10.0_f64.sqrt().asinh() / eff.b_coef;
        let t_first = report.first_violation_time.expect("must violate");
        assert!((t_first - t_cross).abs() <= 1.0e-3 / 2000.0 + 1e-12,
            "t_first = {t_first}, expected near {t_cross}");

        // With unlimited spins nothing is flagged.
        let report = hp_check(&mut trace, u32::MAX, HP_FRACTION);
        assert_eq!(report.n_invalid, 0);
    }

    #[test]
    fn find_min_refines_to_analytic_minimum() {
        let p = reference_params(2.0, 0.0, 0.0);
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let traj = propagate_trace(&model, &s0, 1.0e-3, 301).unwrap();
        let trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let min = find_min_variance(&model, &s0, &trace, (Mode::C1, Mode::C2)).unwrap();
        let t_star = crate::analytic::first_minimum_time(&p).unwrap();
        assert_relative_eq!(min.v_min, 1.0 / 12.0, max_relative = 1e-9);
        assert_relative_eq!(min.t_min, t_star, max_relative = 2e-6);
        assert!(min.theta_opt.abs() < 1e-5);
    }

    #[test]
    fn find_min_on_flat_vacuum_returns_t0() {
        let mut p = reference_params(2.0, 0.0, 0.0);
        p.g_collective = 0.0;
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let traj = propagate_trace(&model, &s0, 1.0e-3, 50).unwrap();
        let trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let min = find_min_variance(&model, &s0, &trace, (Mode::C1, Mode::C2)).unwrap();
        assert_eq!(min.t_min, 0.0);
        assert_relative_eq!(min.v_min, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn find_min_skips_invalid_samples() {
        // Growing squeeze: the deepest *valid* variance is bounded by the
        // HP threshold, later samples are excluded.
        let p = reference_params(2.0, 0.0, 0.0);
        let model = build_squeeze_model(&p).unwrap();
        let eff = effective_params(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let horizon = 3.5 / eff.b_coef;
        let traj = propagate_trace(&model, &s0, horizon, 500).unwrap();
        let trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let min = find_min_variance(&model, &s0, &trace, (Mode::C1, Mode::C2)).unwrap();
        // sinh^2(B t) = 10 at B t ~ 1.8686; v_min there ~ (1/4) e^{-3.737}.
        let bt_cap = 10.0_f64.sqrt().asinh();
        assert!(min.t_min <= (bt_cap / eff.b_coef) * (1.0 + 2.0 / 500.0));
        assert!(min.v_min >= 0.25 * (-2.0 * (bt_cap + 0.05)).exp());

        // A trace with every sample invalid errors out (the t = 0 sample has
        // exactly zero excitation, so it must be flagged by hand).
        let mut all_bad = trace.clone();
        all_bad.hp_valid.iter_mut().for_each(|b| *b = false);
        assert!(matches!(
            find_min_variance(&model, &s0, &all_bad, (Mode::C1, Mode::C2)),
            Err(Error::NoValidSamples { .. })
        ));
    }

    #[test]
    fn grid_min_parabolic_refinement() {
        let p = reference_params(2.0, 0.0, 0.0);
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let traj = propagate_trace(&model, &s0, 6.0e-4, 120).unwrap();
        let trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let min = find_min_variance_grid(&trace).unwrap();
        let t_star = crate::analytic::first_minimum_time(&p).unwrap();
        assert_relative_eq!(min.t_min, t_star, max_relative = 1e-3);
        assert_relative_eq!(min.v_min, 1.0 / 12.0, max_relative = 1e-4);
    }

    #[test]
    fn empty_trace_errors() {
        let trace = SqueezingTrace {
            times: vec![],
            variance_theta: vec![],
            variance_opt: vec![],
            theta_opt: vec![],
            excitations: vec![],
            phonon_occupations: vec![],
            hp_valid: vec![],
            theta: 0.0,
            hp_threshold: 10.0,
        };
        assert!(matches!(find_min_variance_grid(&trace), Err(Error::EmptyTrace)));
    }

    #[test]
    fn local_rotations_of_vacuum_stay_separable() {
        // Random local phase rotations leave the product vacuum at V = 1/4.
        let layout = ModeLayout::two_spin();
        let vac = vacuum_state(&layout);
        let mut seed = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..25 {
            let phi1 = next() * std::f64::consts::TAU;
            let phi2 = next() * std::f64::consts::TAU;
            let mut r = nalgebra::DMatrix::<f64>::zeros(4, 4);
            for (k, phi) in [(0, phi1), (1, phi2)] {
                r[(2 * k, 2 * k)] = phi.cos();
                r[(2 * k, 2 * k + 1)] = -phi.sin();
                r[(2 * k + 1, 2 * k)] = phi.sin();
                r[(2 * k + 1, 2 * k + 1)] = phi.cos();
            }
            let s = MomentState {
                time: 0.0,
                mean: nalgebra::DVector::zeros(4),
                cov: &r * &vac.cov * r.transpose(),
            };
            let (_, v_min) = optimal_angle(&s, &layout, Mode::C1, Mode::C2).unwrap();
            assert_relative_eq!(v_min, 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn detuned_runs_dip_below_equal_splitting_floor() {
        // A Zeeman offset Delta = -0.77 A squeezes deeper than the Delta = 0
        // envelope 1/12 at matched parameters.
        let p0 = reference_params(2.0, 0.0, 0.0);
        let eff = effective_params(&p0).unwrap();
        let p = reference_params_with_offset(2.0, -0.77 * eff.a_coef);
        let model = build_effective_model(&p).unwrap();
        let s0 = vacuum_state(&model.layout);
        let traj = propagate_trace(&model, &s0, 2.0e-2, 4000).unwrap();
        let trace =
            squeezing_trace(&traj, &model.layout, (Mode::C1, Mode::C2), 0.0, 100, HP_FRACTION)
                .unwrap();
        let min = find_min_variance(&model, &s0, &trace, (Mode::C1, Mode::C2)).unwrap();
        assert!(min.v_min < 1.0 / 12.0, "v_min = {}", min.v_min);
    }
}
