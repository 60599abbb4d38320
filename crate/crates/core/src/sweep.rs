//! Deterministic parameter-space exploration: grids over detuning ratio,
//! Zeeman offset, couplings and damping, plus a constrained minimum-variance
//! search.
//!
//! Grid points evaluate independently (rayon) and merge by grid index, so a
//! sweep's output is a pure function of its specification. Per-point errors
//! are recorded in the row instead of aborting the sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{classify_regime, Regime};
use crate::builder::{adiabaticity_report, build_effective_model};
use crate::error::{Error, Result};
use crate::fock::{evolve_fock, suggested_cutoff, FockConfig, HamiltonianSource};
use crate::gaussian::{propagate_trace_with, vacuum_state, ExcitationCap, TraceOptions};
use crate::model::{effective_params, Mode, SystemParams, TWO_PI};
use crate::observables::{
    find_min_variance, find_min_variance_grid, squeezing_trace, MinVariance, HP_FRACTION,
};

pub const MAX_AXES: usize = 3;
pub const MAX_RUNS: usize = 10_000;

/// Parameter dimensions a sweep can scan. Frequencies are given in Hz, the
/// dimensionless axes reshape the Zeeman fields around the base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParam {
    /// Collective coupling g/2pi, Hz.
    CouplingHz,
    /// Phonon hopping v/2pi, Hz.
    HoppingHz,
    /// Detuning ratio omega/v; moves Delta_B1 (and Delta_B2 with it).
    OmegaOverV,
    /// Zeeman offset as a fraction of A; moves Delta_B2.
    DeltaOverA,
    /// Zeeman offset Delta/2pi directly, Hz; moves Delta_B2.
    DeltaHz,
    /// Mechanical damping kappa/2pi, Hz.
    KappaHz,
    /// Thermal occupation n_th.
    ThermalOccupation,
}

impl AxisParam {
    pub fn label(self) -> &'static str {
        match self {
            AxisParam::CouplingHz => "g_hz",
            AxisParam::HoppingHz => "v_hz",
            AxisParam::OmegaOverV => "omega_over_v",
            AxisParam::DeltaOverA => "delta_over_a",
            AxisParam::DeltaHz => "delta_hz",
            AxisParam::KappaHz => "kappa_hz",
            AxisParam::ThermalOccupation => "n_th",
        }
    }

    /// Apply one axis setting to a parameter set.
    fn apply(self, p: &mut SystemParams, value: f64) -> Result<()> {
        match self {
            AxisParam::CouplingHz => p.g_collective = TWO_PI * value,
            AxisParam::HoppingHz => p.v = TWO_PI * value,
            AxisParam::OmegaOverV => {
                let offset = p.zeeman_offset();
                p.delta_b1 = p.omega_m + value * p.v;
                p.delta_b2 = p.delta_b1 - offset;
            }
            AxisParam::DeltaOverA => {
                let eff = effective_params(p)?;
                p.delta_b2 = p.delta_b1 - value * eff.a_coef;
            }
            AxisParam::DeltaHz => p.delta_b2 = p.delta_b1 - TWO_PI * value,
            AxisParam::KappaHz => p.kappa = TWO_PI * value,
            AxisParam::ThermalOccupation => p.n_th = value,
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: AxisParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Gaussian,
    Fock,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub base: SystemParams,
    /// Axes applied in order; up to [`MAX_AXES`], row-major grid.
    pub axes: Vec<SweepAxis>,
    pub horizon: f64,
    pub samples_per_run: usize,
    pub hp_fraction: f64,
    pub engine: Engine,
}

impl SweepSpec {
    pub fn new(base: SystemParams, horizon: f64) -> Self {
        Self {
            base,
            axes: Vec::new(),
            horizon,
            samples_per_run: 400,
            hp_fraction: HP_FRACTION,
            engine: Engine::Gaussian,
        }
    }

    fn check(&self) -> Result<usize> {
        if self.axes.len() > MAX_AXES {
            return Err(Error::InvalidSpec(format!(
                "at most {MAX_AXES} axes, got {}",
                self.axes.len()
            )));
        }
        if self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::InvalidSpec("every axis needs at least one value".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidSpec(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.samples_per_run < 2 {
            return Err(Error::InvalidSpec("samples_per_run must be >= 2".into()));
        }
        let runs = self.axes.iter().map(|a| a.values.len()).product::<usize>().max(1);
        if runs > MAX_RUNS {
            return Err(Error::InvalidSpec(format!("{runs} runs exceed the budget of {MAX_RUNS}")));
        }
        Ok(runs)
    }
}

/// Outcome of one grid point. `v_min` is the deepest variance among
/// HP-valid samples only; `peak_excitation` spans the whole trace, so
/// `hp_valid` reports whether the trace ever left the trusted region.
#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub regime: Regime,
    pub v_min: f64,
    pub t_min: f64,
    pub theta_opt: f64,
    pub peak_excitation: f64,
    /// Excitation at the reported minimum.
    pub excitation_at_min: f64,
    pub hp_valid: bool,
    pub adiabatic: bool,
    pub worst_adiabaticity_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    /// (axis label, value) pairs in axis order.
    pub settings: Vec<(String, f64)>,
    /// Point outcome, or the error message for this point.
    pub outcome: std::result::Result<PointResult, String>,
}

/// Run every grid point; deterministic row order, errors recorded in-row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let n_runs = spec.check()?;
    let grid: Vec<Vec<f64>> = (0..n_runs).map(|idx| unravel(spec, idx)).collect();
    let mut rows: Vec<SweepRow> = grid
        .par_iter()
        .enumerate()
        .map(|(index, values)| {
            let settings = spec
                .axes
                .iter()
                .zip(values)
                .map(|(a, &v)| (a.param.label().to_string(), v))
                .collect();
            SweepRow { index, settings, outcome: evaluate_point(spec, values).map_err(|e| e.to_string()) }
        })
        .collect();
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

fn unravel(spec: &SweepSpec, mut idx: usize) -> Vec<f64> {
    let mut values = vec![0.0; spec.axes.len()];
    for (k, axis) in spec.axes.iter().enumerate().rev() {
        let n = axis.values.len();
        values[k] = axis.values[idx % n];
        idx /= n;
    }
    values
}

fn apply_settings(spec: &SweepSpec, values: &[f64]) -> Result<SystemParams> {
    let mut p = spec.base;
    for (axis, &value) in spec.axes.iter().zip(values) {
        axis.param.apply(&mut p, value)?;
    }
    Ok(p)
}

fn evaluate_point(spec: &SweepSpec, values: &[f64]) -> Result<PointResult> {
    let p = apply_settings(spec, values)?;
    let regime = classify_regime(&p)?;
    let adiab = adiabaticity_report(&p);

    let (min, peak, exc_at_min): (MinVariance, f64, f64) = match spec.engine {
        Engine::Gaussian => {
            let model = build_effective_model(&p)?;
            let s0 = vacuum_state(&model.layout);
            let opts = TraceOptions {
                cap: Some(ExcitationCap::hp_breakdown(p.n_spins)),
                ..TraceOptions::default()
            };
            let traj =
                propagate_trace_with(&model, &s0, spec.horizon, spec.samples_per_run, &opts)?;
            let trace = squeezing_trace(
                &traj,
                &model.layout,
                (Mode::C1, Mode::C2),
                0.0,
                p.n_spins,
                spec.hp_fraction,
            )?;
            let peak = peak_excitation(&trace.excitations);
            let min = find_min_variance(&model, &s0, &trace, (Mode::C1, Mode::C2))?;
            let at_min = crate::gaussian::propagate_exact(&model, &s0, min.t_min)?;
            let exc = [Mode::C1, Mode::C2]
                .iter()
                .map(|&m| {
                    crate::observables::mode_excitation(&at_min, &model.layout, m)
                        .expect("spin mode present")
                })
                .fold(0.0, f64::max);
            (min, peak, exc)
        }
        Engine::Fock => {
            let predicted = predicted_spin_peak(&p, spec.horizon)?;
            let cutoff = suggested_cutoff(predicted);
            let cfg = FockConfig {
                cutoffs: vec![cutoff, cutoff],
                source: HamiltonianSource::Effective,
                dissipation: false,
                integrator_step: None,
            };
            let run = evolve_fock(&p, &cfg, spec.horizon, spec.samples_per_run, 0.0)?;
            let mut trace = run.trace;
            crate::observables::hp_check(&mut trace, p.n_spins, spec.hp_fraction);
            let peak = peak_excitation(&trace.excitations);
            let min = find_min_variance_grid(&trace)?;
            // Excitation at the sample nearest the reported minimum.
            let nearest = trace
                .times
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - min.t_min).abs().total_cmp(&(*b - min.t_min).abs())
                })
                .map(|(k, _)| k)
                .unwrap_or(0);
            let (e1, e2) = trace.excitations[nearest];
            (min, peak, e1.max(e2))
        }
    };

    Ok(PointResult {
        regime,
        v_min: min.v_min,
        t_min: min.t_min,
        theta_opt: min.theta_opt,
        peak_excitation: peak,
        excitation_at_min: exc_at_min,
        hp_valid: peak <= spec.hp_fraction * p.n_spins as f64,
        adiabatic: adiab.adiabatic,
        worst_adiabaticity_ratio: adiab.worst_ratio(),
    })
}

fn peak_excitation(excitations: &[(f64, f64)]) -> f64 {
    excitations.iter().map(|&(a, b)| a.max(b)).fold(0.0, f64::max)
}

/// Quick Gaussian prediction of the spin-mode excitation peak, for sizing
/// the oracle's cutoffs.
fn predicted_spin_peak(p: &SystemParams, horizon: f64) -> Result<f64> {
    let model = build_effective_model(p)?;
    let s0 = vacuum_state(&model.layout);
    let traj = propagate_trace_with(&model, &s0, horizon, 257, &TraceOptions::default())?;
    let mut peak: f64 = 0.0;
    for s in &traj.states {
        for m in [Mode::C1, Mode::C2] {
            peak = peak.max(crate::observables::mode_excitation(s, &model.layout, m)?);
        }
    }
    Ok(peak)
}

/// Search bounds of [`optimize_min_squeezing`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptimizeBounds {
    /// Inclusive range of omega/v.
    pub omega_over_v: (f64, f64),
    /// Inclusive range of Delta/A.
    pub delta_over_a: (f64, f64),
}

/// Which constraint pins the reported optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveConstraint {
    /// The excitation cap: deeper squeezing would break the spin picture.
    HpValidity,
    /// A bound of the search box.
    BoundsEdge,
    /// The simulated horizon.
    Horizon,
    /// Interior optimum.
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeResult {
    pub omega_over_v: f64,
    pub delta_over_a: f64,
    pub v_min: f64,
    pub t_min: f64,
    pub theta_opt: f64,
    /// Largest excitation anywhere on the winning trace.
    pub peak_excitation: f64,
    /// Excitation at the reported minimum; bounded by the HP filter.
    pub excitation_at_min: f64,
    pub active_constraint: ActiveConstraint,
    pub evaluations: usize,
}

/// Constrained minimum-variance search over (omega/v, Delta/A): coarse grid
/// then compass refinement, with Holstein-Primakoff validity as a hard
/// filter.
pub fn optimize_min_squeezing(
    base: &SystemParams,
    bounds: &OptimizeBounds,
    horizon: f64,
) -> Result<OptimizeResult> {
    let (w_lo, w_hi) = bounds.omega_over_v;
    let (d_lo, d_hi) = bounds.delta_over_a;
    if !(w_lo <= w_hi) || !(d_lo <= d_hi) {
        return Err(Error::InvalidSpec("optimizer bounds must be ordered".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidSpec(format!("horizon must be > 0, got {horizon}")));
    }

    // The HP constraint is hard: the minimum itself comes from HP-valid
    // samples only (evaluate_point guarantees that), and points where no
    // valid sample exists are skipped.
    let mut evaluations = 0usize;
    let mut eval = |w: f64, d: f64| -> Option<(PointResult, f64, f64)> {
        evaluations += 1;
        let mut spec = SweepSpec::new(*base, horizon);
        spec.axes = vec![
            SweepAxis { param: AxisParam::OmegaOverV, values: vec![w] },
            SweepAxis { param: AxisParam::DeltaOverA, values: vec![d] },
        ];
        evaluate_point(&spec, &[w, d]).ok().map(|point| (point, w, d))
    };

    // Coarse grid, 9 points per free axis.
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        if hi == lo {
            vec![lo]
        } else {
            (0..9).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect()
        }
    };
    let mut best: Option<(PointResult, f64, f64)> = None;
    for &w in &grid(w_lo, w_hi) {
        for &d in &grid(d_lo, d_hi) {
            if let Some(candidate) = eval(w, d) {
                if best.as_ref().map_or(true, |b| candidate.0.v_min < b.0.v_min) {
                    best = Some(candidate);
                }
            }
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::Infeasible("no HP-valid point inside the optimizer bounds".into())
    })?;

    // Compass refinement with shrinking steps.
    let mut step_w = if w_hi > w_lo { (w_hi - w_lo) / 8.0 } else { 0.0 };
    let mut step_d = if d_hi > d_lo { (d_hi - d_lo) / 8.0 } else { 0.0 };
    for _ in 0..40 {
        if step_w.max(step_d) < 1e-4 * (w_hi - w_lo).max(d_hi - d_lo).max(1e-30) {
            break;
        }
        let (_, w0, d0) = best;
        let mut improved = false;
        for (dw, dd) in [(step_w, 0.0), (-step_w, 0.0), (0.0, step_d), (0.0, -step_d)] {
            if dw == 0.0 && dd == 0.0 {
                continue;
            }
            let w = (w0 + dw).clamp(w_lo, w_hi);
            let d = (d0 + dd).clamp(d_lo, d_hi);
            if w == w0 && d == d0 {
                continue;
            }
            if let Some(candidate) = eval(w, d) {
                if candidate.0.v_min < best.0.v_min {
                    best = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            step_w /= 2.0;
            step_d /= 2.0;
        }
    }

    let (point, w, d) = best;
    let hp_limit = HP_FRACTION * base.n_spins as f64;
    let span_w = (w_hi - w_lo).max(1e-30);
    let span_d = (d_hi - d_lo).max(1e-30);
    let on_edge = (w - w_lo).abs() < 1e-9 * span_w
        || (w_hi - w).abs() < 1e-9 * span_w
        || (d - d_lo).abs() < 1e-9 * span_d
        || (d_hi - d).abs() < 1e-9 * span_d;
    let active_constraint = if point.excitation_at_min >= 0.8 * hp_limit {
        ActiveConstraint::HpValidity
    } else if point.t_min >= 0.98 * horizon {
        ActiveConstraint::Horizon
    } else if on_edge {
        ActiveConstraint::BoundsEdge
    } else {
        ActiveConstraint::None
    };

    Ok(OptimizeResult {
        omega_over_v: w,
        delta_over_a: d,
        v_min: point.v_min,
        t_min: point.t_min,
        theta_opt: point.theta_opt,
        peak_excitation: point.peak_excitation,
        excitation_at_min: point.excitation_at_min,
        active_constraint,
        evaluations,
    })
}
