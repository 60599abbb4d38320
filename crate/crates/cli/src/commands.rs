//! Implementations of the CLI subcommands.

use std::path::Path;

use serde::Serialize;

use nve_squeeze::analytic::classify_regime;
use nve_squeeze::builder::{
    adiabaticity_report, build_effective_model, build_full_model, build_squeeze_model,
    AdiabaticityReport, LinearModel,
};
use nve_squeeze::device::device_report;
use nve_squeeze::fock::{adjudicate_variance_convention, evolve_fock};
use nve_squeeze::gaussian::{
    propagate_trace_with, vacuum_state, ExcitationCap, MomentState, TraceOptions, Trajectory,
};
use nve_squeeze::model::{ModeLayout, SystemParams, SystemParamsHz};
use nve_squeeze::observables::{
    find_min_variance, find_min_variance_grid, hp_check, squeezing_trace, MinVariance,
    SqueezingTrace, HP_FRACTION,
};
use nve_squeeze::sweep::{
    optimize_min_squeezing, run_sweep, Engine, OptimizeBounds, SweepAxis, SweepRow, SweepSpec,
};
use nve_squeeze::Mode;

use crate::config::{EngineChoice, Format, ModelChoice, RunConfig};
use crate::output::{
    csv_field, ensure_dir, json_path, plot_manifest, sig, to_db, trace_csv, write_file,
};
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Effective settings after command-line overrides.
pub struct Overrides {
    pub out: Option<std::path::PathBuf>,
    pub engine: Option<EngineChoice>,
    pub model: Option<ModelChoice>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

struct Effective {
    out: std::path::PathBuf,
    formats: Vec<Format>,
    engine: EngineChoice,
    model: ModelChoice,
    seed: Option<u64>,
}

fn effective(config: &RunConfig, over: &Overrides) -> Effective {
    Effective {
        out: over.out.clone().unwrap_or_else(|| config.output.dir.clone()),
        formats: over
            .format
            .map(|f| vec![f])
            .unwrap_or_else(|| config.output.formats.clone()),
        engine: over.engine.unwrap_or(config.run.engine),
        model: over.model.unwrap_or(config.run.model),
        seed: over.seed,
    }
}

fn wants(formats: &[Format], f: Format) -> bool {
    formats.contains(&f)
}

#[derive(Serialize)]
struct AdiabaticityJson {
    g_over_omega_minus_v: f64,
    g_over_omega_plus_v: f64,
    kappa_over_omega_minus_v: f64,
    kappa_over_omega_plus_v: f64,
    adiabatic: bool,
}

impl From<AdiabaticityReport> for AdiabaticityJson {
    fn from(r: AdiabaticityReport) -> Self {
        Self {
            g_over_omega_minus_v: r.g_over_omega_minus_v,
            g_over_omega_plus_v: r.g_over_omega_plus_v,
            kappa_over_omega_minus_v: r.kappa_over_omega_minus_v,
            kappa_over_omega_plus_v: r.kappa_over_omega_plus_v,
            adiabatic: r.adiabatic,
        }
    }
}

#[derive(Serialize)]
struct HpJson {
    threshold: f64,
    first_violation_time_s: Option<f64>,
    n_invalid: usize,
}

#[derive(Serialize)]
struct OracleStats {
    step_s: f64,
    norm_drift: f64,
    boundary_population: f64,
    richardson_error: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    version: &'static str,
    command: &'static str,
    engine: &'static str,
    model: &'static str,
    parameters_hz: SystemParamsHz,
    horizon_s: f64,
    samples: usize,
    theta: f64,
    v_min: f64,
    v_min_db: f64,
    t_min_s: f64,
    theta_opt: f64,
    regime: String,
    adiabaticity: AdiabaticityJson,
    hp: HpJson,
    truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleStats>,
    seed: Option<u64>,
}

fn gaussian_model(p: &SystemParams, model: ModelChoice) -> Result<LinearModel, CliError> {
    Ok(match model {
        ModelChoice::Full => build_full_model(p),
        ModelChoice::Effective => build_effective_model(p)?,
        ModelChoice::SqueezeSpecial => build_squeeze_model(p)?,
    })
}

fn regime_label(p: &SystemParams) -> String {
    classify_regime(p).map(|r| r.to_string()).unwrap_or_else(|_| "undefined".into())
}

/// A t = 0-only "trajectory" for zero horizons.
fn vacuum_only(layout: &ModeLayout) -> Trajectory {
    Trajectory {
        states: vec![vacuum_state(layout)],
        provenance: nve_squeeze::gaussian::Provenance {
            model: "vacuum state (zero horizon)".into(),
            integrator: "none".into(),
            step_control: "single sample at t = 0".into(),
        },
        truncation: None,
    }
}

struct EngineRun {
    trajectory: Trajectory,
    layout: ModeLayout,
    oracle: Option<OracleStats>,
    model_for_refinement: Option<LinearModel>,
}

fn run_engine(
    config: &RunConfig,
    p: &SystemParams,
    eff: &Effective,
) -> Result<EngineRun, CliError> {
    let horizon = config.run.horizon;
    match eff.engine {
        EngineChoice::Gaussian => {
            let model = gaussian_model(p, eff.model)?;
            let trajectory = if horizon == 0.0 {
                vacuum_only(&model.layout)
            } else {
                let opts = TraceOptions {
                    cap: Some(ExcitationCap::hp_breakdown(p.n_spins)),
                    ..TraceOptions::default()
                };
                propagate_trace_with(
                    &model,
                    &vacuum_state(&model.layout),
                    horizon,
                    config.run.samples,
                    &opts,
                )?
            };
            Ok(EngineRun {
                layout: model.layout.clone(),
                trajectory,
                oracle: None,
                model_for_refinement: Some(model),
            })
        }
        EngineChoice::Fock => {
            let source = eff.model.fock_source();
            let fock = config.fock_section()?.to_config(source);
            let layout = if source.n_modes() == 4 {
                ModeLayout::four_mode()
            } else {
                ModeLayout::two_spin()
            };
            if horizon == 0.0 {
                return Ok(EngineRun {
                    trajectory: vacuum_only(&layout),
                    layout,
                    oracle: None,
                    model_for_refinement: None,
                });
            }
            let run = evolve_fock(p, &fock, horizon, config.run.samples, config.run.thetas[0])?;
            Ok(EngineRun {
                oracle: Some(OracleStats {
                    step_s: run.step,
                    norm_drift: run.norm_drift,
                    boundary_population: run.boundary_population,
                    richardson_error: run.richardson_error,
                }),
                layout,
                trajectory: run.trajectory,
                model_for_refinement: None,
            })
        }
    }
}

fn locate_minimum(
    run: &EngineRun,
    trace: &SqueezingTrace,
) -> Result<MinVariance, CliError> {
    match &run.model_for_refinement {
        Some(model) => {
            let s0 = vacuum_state(&run.layout);
            Ok(find_min_variance(model, &s0, trace, (Mode::C1, Mode::C2))?)
        }
        None => Ok(find_min_variance_grid(trace)?),
    }
}

fn emit_traces(
    config: &RunConfig,
    eff: &Effective,
    run: &EngineRun,
    p: &SystemParams,
    dir: &Path,
) -> Result<SqueezingTrace, CliError> {
    let mut primary = None;
    for (k, &theta) in config.run.thetas.iter().enumerate() {
        let trace = squeezing_trace(
            &run.trajectory,
            &run.layout,
            (Mode::C1, Mode::C2),
            theta,
            p.n_spins,
            HP_FRACTION,
        )?;
        if wants(&eff.formats, Format::Csv) {
            let name = if k == 0 {
                "trace.csv".to_string()
            } else {
                format!("trace_theta_{k}.csv")
            };
            write_file(&dir.join(&name), &trace_csv(&trace, config.output.db))?;
        }
        if k == 0 {
            primary = Some(trace);
        }
    }
    Ok(primary.expect("thetas is non-empty"))
}

pub fn simulate(config: &RunConfig, over: &Overrides) -> Result<(), CliError> {
    let eff = effective(config, over);
    let p = config.params()?;
    ensure_dir(&eff.out)?;

    let run = run_engine(config, &p, &eff)?;
    let mut trace = emit_traces(config, &eff, &run, &p, &eff.out)?;
    let hp = hp_check(&mut trace, p.n_spins, HP_FRACTION);
    let min = locate_minimum(&run, &trace)?;

    if wants(&eff.formats, Format::Json) {
        let summary = SimulateSummary {
            version: VERSION,
            command: "simulate",
            engine: match eff.engine {
                EngineChoice::Gaussian => "gaussian",
                EngineChoice::Fock => "fock",
            },
            model: eff.model.label(),
            parameters_hz: p.to_hz(),
            horizon_s: config.run.horizon,
            samples: trace.len(),
            theta: config.run.thetas[0],
            v_min: min.v_min,
            v_min_db: to_db(min.v_min),
            t_min_s: min.t_min,
            theta_opt: min.theta_opt,
            regime: regime_label(&p),
            adiabaticity: adiabaticity_report(&p).into(),
            hp: HpJson {
                threshold: hp.threshold,
                first_violation_time_s: hp.first_violation_time,
                n_invalid: hp.n_invalid,
            },
            truncated: run.trajectory.truncation.is_some(),
            oracle: run.oracle,
            seed: eff.seed,
        };
        write_json(&eff.out, "summary.json", &summary)?;
        let manifest = plot_manifest(
            "trace.csv",
            ("t_s", "time (s)"),
            &[
                ("variance_theta", "V(X(theta))"),
                ("variance_opt", "V minimized over theta"),
                ("exc_c1", "<c1' c1>"),
                ("exc_c2", "<c2' c2>"),
            ],
        );
        write_json(&eff.out, "plot_manifest.json", &manifest)?;
    }
    println!(
        "simulate: v_min = {} at t = {} s (theta_opt = {:.6}); outputs in {}",
        sig(min.v_min),
        sig(min.t_min),
        min.theta_opt,
        eff.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    version: &'static str,
    command: &'static str,
    parameters_hz: SystemParamsHz,
    horizon_s: f64,
    samples: usize,
    max_abs_deviation: f64,
    mean_abs_deviation: f64,
    threshold: f64,
    flagged: bool,
    adiabaticity: AdiabaticityJson,
}

pub fn compare(config: &RunConfig, over: &Overrides) -> Result<(), CliError> {
    let eff = effective(config, over);
    let p = config.params()?;
    if config.run.horizon <= 0.0 {
        return Err(CliError::Config("compare needs run.horizon > 0".into()));
    }
    ensure_dir(&eff.out)?;

    let full = build_full_model(&p);
    let eliminated = build_effective_model(&p)?;
    let n = config.run.samples;
    let traj_full =
        propagate_trace_with(&full, &vacuum_state(&full.layout), config.run.horizon, n,
            &TraceOptions::default())?;
    let traj_eff = propagate_trace_with(&eliminated, &vacuum_state(&eliminated.layout),
        config.run.horizon, n, &TraceOptions::default())?;

    let variance = |s: &MomentState, layout: &ModeLayout| {
        nve_squeeze::observables::joint_quadrature_variance(s, layout, Mode::C1, Mode::C2, 0.0)
    };

    let mut csv = String::from("t_s,variance_full,variance_effective\n");
    let mut max_dev: f64 = 0.0;
    let mut sum_dev = 0.0;
    for (a, b) in traj_full.states.iter().zip(&traj_eff.states) {
        let va = variance(a, &full.layout)?;
        let vb = variance(b, &eliminated.layout)?;
        max_dev = max_dev.max((va - vb).abs());
        sum_dev += (va - vb).abs();
        csv.push_str(&format!("{},{},{}\n", sig(a.time), sig(va), sig(vb)));
    }
    let mean_dev = sum_dev / n as f64;

    if wants(&eff.formats, Format::Csv) {
        write_file(&eff.out.join("compare.csv"), &csv)?;
    }
    let flagged = max_dev > 0.02;
    if wants(&eff.formats, Format::Json) {
        let summary = CompareSummary {
            version: VERSION,
            command: "compare",
            parameters_hz: p.to_hz(),
            horizon_s: config.run.horizon,
            samples: n,
            max_abs_deviation: max_dev,
            mean_abs_deviation: mean_dev,
            threshold: 0.02,
            flagged,
            adiabaticity: adiabaticity_report(&p).into(),
        };
        write_json(&eff.out, "compare.json", &summary)?;
        let manifest = plot_manifest(
            "compare.csv",
            ("t_s", "time (s)"),
            &[
                ("variance_full", "V, four-mode model"),
                ("variance_effective", "V, eliminated model"),
            ],
        );
        write_json(&eff.out, "plot_manifest.json", &manifest)?;
    }
    println!(
        "compare: max |dV| = {}, mean |dV| = {}{}",
        sig(max_dev),
        sig(mean_dev),
        if flagged { " — FLAGGED (> 0.02, elimination unreliable)" } else { "" }
    );
    Ok(())
}

pub fn sweep(config: &RunConfig, over: &Overrides) -> Result<(), CliError> {
    let eff = effective(config, over);
    let p = config.params()?;
    let section = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let horizon = section.horizon.unwrap_or(config.run.horizon);
    if horizon <= 0.0 {
        return Err(CliError::Config("sweep horizon must be > 0".into()));
    }
    ensure_dir(&eff.out)?;

    let mut spec = SweepSpec::new(p, horizon);
    spec.axes = section
        .axes
        .iter()
        .map(|a| SweepAxis { param: a.param, values: a.values.clone() })
        .collect();
    if let Some(samples) = section.samples {
        spec.samples_per_run = samples;
    } else {
        spec.samples_per_run = config.run.samples;
    }
    if let Some(frac) = section.hp_fraction {
        spec.hp_fraction = frac;
    }
    if let Some(engine) = section.engine {
        spec.engine = engine;
    } else if eff.engine == EngineChoice::Fock {
        spec.engine = Engine::Fock;
    }

    let rows = run_sweep(&spec)?;
    let csv = sweep_csv(&spec, &rows);
    if wants(&eff.formats, Format::Csv) {
        write_file(&eff.out.join("sweep.csv"), &csv)?;
    }
    if wants(&eff.formats, Format::Json) {
        let best = rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|p| (r.index, p.v_min)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let summary = serde_json::json!({
            "version": VERSION,
            "command": "sweep",
            "parameters_hz": p.to_hz(),
            "horizon_s": horizon,
            "rows": rows.len(),
            "errors": rows.iter().filter(|r| r.outcome.is_err()).count(),
            "best": best.map(|(index, v_min)| serde_json::json!({
                "index": index, "v_min": v_min
            })),
        });
        write_json(&eff.out, "sweep.json", &summary)?;
    }
    println!("sweep: {} rows written to {}", rows.len(), eff.out.display());
    Ok(())
}

fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut header = String::from("index");
    for axis in &spec.axes {
        header.push(',');
        header.push_str(axis.param.label());
    }
    header.push_str(
        ",regime,v_min,t_min_s,theta_opt,peak_excitation,excitation_at_min,hp_valid,adiabatic,\
         worst_adiabaticity_ratio,error",
    );
    let mut out = header;
    out.push('\n');
    for row in rows {
        out.push_str(&row.index.to_string());
        for (_, value) in &row.settings {
            out.push(',');
            out.push_str(&sig(*value));
        }
        match &row.outcome {
            Ok(p) => out.push_str(&format!(
                ",{},{},{},{},{},{},{},{},{},",
                p.regime,
                sig(p.v_min),
                sig(p.t_min),
                sig(p.theta_opt),
                sig(p.peak_excitation),
                sig(p.excitation_at_min),
                p.hp_valid,
                p.adiabatic,
                sig(p.worst_adiabaticity_ratio),
            )),
            Err(msg) => {
                out.push_str(",,,,,,,,,,");
                out.push_str(&csv_field(msg));
            }
        }
        out.push('\n');
    }
    out
}

pub fn optimize(config: &RunConfig, over: &Overrides) -> Result<(), CliError> {
    let eff = effective(config, over);
    let p = config.params()?;
    let section = config
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Config("optimize needs an [optimize] section".into()))?;
    let horizon = section.horizon.unwrap_or(config.run.horizon);
    if horizon <= 0.0 {
        return Err(CliError::Config("optimize horizon must be > 0".into()));
    }
    ensure_dir(&eff.out)?;

    let bounds = OptimizeBounds {
        omega_over_v: (section.omega_over_v[0], section.omega_over_v[1]),
        delta_over_a: (section.delta_over_a[0], section.delta_over_a[1]),
    };
    let result = optimize_min_squeezing(&p, &bounds, horizon)?;
    if wants(&eff.formats, Format::Json) {
        let summary = serde_json::json!({
            "version": VERSION,
            "command": "optimize",
            "parameters_hz": p.to_hz(),
            "horizon_s": horizon,
            "bounds": { "omega_over_v": section.omega_over_v, "delta_over_a": section.delta_over_a },
            "result": result,
        });
        write_json(&eff.out, "optimize.json", &summary)?;
    }
    println!(
        "optimize: v_min = {} at omega/v = {:.6}, Delta/A = {:.6} (t = {} s, {} evaluations, \
         active constraint: {:?})",
        sig(result.v_min),
        result.omega_over_v,
        result.delta_over_a,
        sig(result.t_min),
        result.evaluations,
        result.active_constraint
    );
    Ok(())
}

pub fn device(config: &RunConfig, over: &Overrides) -> Result<(), CliError> {
    let eff = effective(config, over);
    let geom = config.beam_geometry()?;
    let report = device_report(&geom, config.system.n_spins)?;
    ensure_dir(&eff.out)?;
    if wants(&eff.formats, Format::Json) {
        let summary = serde_json::json!({
            "version": VERSION,
            "command": "device",
            "report": report,
            // The Q-formula value and the independently configured damping
            // are both reported; they need not coincide.
            "kappa_configured_hz": config.system.kappa,
        });
        write_json(&eff.out, "device.json", &summary)?;
    }
    println!("device estimates for L = {:.3e} m, w = {:.3e} m, h = {:.3e} m:",
        report.geometry.length, report.geometry.width, report.geometry.height);
    println!("  g/2pi (single NV)      {} Hz", sig(report.g_single_hz));
    println!("  g/2pi (collective, N={}) {} Hz", report.n_spins, sig(report.g_collective_hz));
    println!("  f1 (clamped-clamped)   {} Hz", sig(report.f_mech_hz));
    println!("  kappa/2pi = f1/Q       {} Hz", sig(report.kappa_formula_hz));
    println!("  kappa/2pi (configured) {} Hz", sig(config.system.kappa));
    println!("  n_th at T = {} K   {}", report.geometry.temperature, sig(report.n_th));
    for w in &report.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

pub fn oracle(config: &RunConfig, over: &Overrides, adjudicate: bool) -> Result<(), CliError> {
    let eff = effective(config, over);
    let p = config.params()?;
    ensure_dir(&eff.out)?;

    if adjudicate {
        let convention = adjudicate_variance_convention(&p)?;
        if wants(&eff.formats, Format::Json) {
            let summary = serde_json::json!({
                "version": VERSION,
                "command": "oracle",
                "parameters_hz": p.to_hz(),
                "adjudicated_convention": convention,
            });
            write_json(&eff.out, "oracle.json", &summary)?;
        }
        println!("oracle: variance oscillation argument resolves to {convention:?}");
        return Ok(());
    }

    if config.run.horizon <= 0.0 {
        return Err(CliError::Config("oracle needs run.horizon > 0".into()));
    }
    let source = eff.model.fock_source();
    let fock = config.fock_section()?.to_config(source);
    let run = evolve_fock(&p, &fock, config.run.horizon, config.run.samples,
        config.run.thetas[0])?;
    let mut trace = run.trace;
    let hp = hp_check(&mut trace, p.n_spins, HP_FRACTION);
    let min = find_min_variance_grid(&trace)?;
    if wants(&eff.formats, Format::Csv) {
        write_file(&eff.out.join("trace.csv"), &trace_csv(&trace, config.output.db))?;
    }
    if wants(&eff.formats, Format::Json) {
        let summary = SimulateSummary {
            version: VERSION,
            command: "oracle",
            engine: "fock",
            model: eff.model.label(),
            parameters_hz: p.to_hz(),
            horizon_s: config.run.horizon,
            samples: trace.len(),
            theta: config.run.thetas[0],
            v_min: min.v_min,
            v_min_db: to_db(min.v_min),
            t_min_s: min.t_min,
            theta_opt: min.theta_opt,
            regime: regime_label(&p),
            adiabaticity: adiabaticity_report(&p).into(),
            hp: HpJson {
                threshold: hp.threshold,
                first_violation_time_s: hp.first_violation_time,
                n_invalid: hp.n_invalid,
            },
            truncated: false,
            oracle: Some(OracleStats {
                step_s: run.step,
                norm_drift: run.norm_drift,
                boundary_population: run.boundary_population,
                richardson_error: run.richardson_error,
            }),
            seed: eff.seed,
        };
        write_json(&eff.out, "oracle.json", &summary)?;
    }
    println!(
        "oracle: v_min = {} at t = {} s (norm drift {}, boundary population {})",
        sig(min.v_min),
        sig(min.t_min),
        sig(run.norm_drift),
        sig(run.boundary_population)
    );
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    write_file(&json_path(dir, name), &format!("{text}\n"))
}
