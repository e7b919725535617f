//! One function per subcommand. Each writes its files under `out` and
//! returns the results that go into `report.json`.

use std::path::Path;

use acc_core::averaged::averaged_jacobian;
use acc_core::harmonic_balance::{k_star, HbPrediction};
use acc_core::numerics::eigenvalues;
use acc_core::sampled_data::{
    classify_stability, frequency_response, linearize, monodromy, transfer_response,
    StabilityVerdict, TransferKind,
};
use acc_core::simulator::{
    detect_period, simulate_with, PeriodClass, Saturation, MIN_CYCLES_FOR_PERIOD,
};
use acc_core::steady_state::{
    averaged_equilibrium, find_periodic_orbit, find_periodic_orbit_with, mean_output,
    orbit_waveform, output_ripple, PeriodicOrbit, SolverOptions,
};
use acc_core::{build_buck_model, ConverterParams, Error, SwitchedModel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{InitialState, Perturbation, RunConfig, TfChoice};
use crate::error::{CliError, CliResult};
use crate::output::{self, FrequencyRow};
use crate::sweep::{run_sweep, SweepReport};

pub const REPORT_FILE: &str = "report.json";

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn ensure_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Adds `fraction · scale_i · ξ_i` with `ξ_i` uniform on `[−1, 1]`.
pub fn perturb(x: &DVector<f64>, scale: &DVector<f64>, p: Perturbation) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    DVector::from_iterator(
        x.len(),
        x.iter()
            .zip(scale.iter())
            .map(|(&xi, &si)| xi + p.fraction * si * rng.random_range(-1.0..=1.0)),
    )
}

pub fn initial_state(
    model: &SwitchedModel,
    p: &ConverterParams,
    cfg: &RunConfig,
) -> CliResult<DVector<f64>> {
    let x = match cfg.simulate.initial {
        InitialState::Orbit => find_periodic_orbit(model, p.input(), 1, None)?.x_start,
        InitialState::Equilibrium => averaged_equilibrium(model, p.input(), 0.5)?.state,
        InitialState::Zero => DVector::zeros(model.dim()),
    };
    Ok(match cfg.simulate.perturbation {
        Some(pert) => perturb(&x, &model.state_scale, pert),
        None => x,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResult {
    pub cycles: usize,
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    pub period_class: Option<PeriodClass>,
    pub last_duty_fractions: Vec<f64>,
    pub saturated_cycles: usize,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> CliResult<SimulateResult> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let model = build_buck_model(&p)?;
    let x0 = initial_state(&model, &p, cfg)?;
    let csv = out.join("trajectory.csv");
    let opts = &cfg.simulate;
    let tr = match simulate_with(&model, &x0, p.input(), opts.cycles, opts.samples_per_cycle) {
        Ok(tr) => tr,
        Err(Error::Divergence { cycle, partial }) => {
            if let Some(tr) = &partial {
                output::write_time_series(&csv, &model.state_labels, &tr.samples)?;
            }
            return Err(Error::Divergence { cycle, partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    output::write_time_series(&csv, &model.state_labels, &tr.samples)?;
    let period_class = if tr.cycles() >= MIN_CYCLES_FOR_PERIOD {
        Some(detect_period(&tr, opts.period_tol)?)
    } else {
        None
    };
    let tail = tr.cycles().saturating_sub(16);
    let res = SimulateResult {
        cycles: tr.cycles(),
        initial_state: vec_of(&x0),
        final_state: vec_of(tr.strobe.last().unwrap()),
        period_class,
        last_duty_fractions: tr.duties[tail..].iter().map(|d| d / tr.period).collect(),
        saturated_cycles: tr
            .saturation
            .iter()
            .filter(|s| **s != Saturation::None)
            .count(),
    };
    output::write_report(&out.join(REPORT_FILE), "simulate", cfg, &res)?;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitResult {
    pub period_multiple: usize,
    pub x_start: Vec<f64>,
    pub state_labels: Vec<String>,
    pub duty_fractions: Vec<f64>,
    pub mean_duty: f64,
    pub period_doubled: bool,
    pub residual: f64,
    pub mean_output_v: f64,
    pub output_ripple_v: f64,
}

fn solve_orbit(
    model: &SwitchedModel,
    p: &ConverterParams,
    cfg: &RunConfig,
) -> CliResult<PeriodicOrbit> {
    let opts = SolverOptions {
        max_iter: cfg.orbit.max_iter,
        tol: cfg.orbit.tol,
        ..SolverOptions::default()
    };
    Ok(find_periodic_orbit_with(
        model,
        p.input(),
        cfg.orbit.period_multiple,
        None,
        &opts,
    )?)
}

pub fn orbit(cfg: &RunConfig, out: &Path) -> CliResult<OrbitResult> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let model = build_buck_model(&p)?;
    let o = solve_orbit(&model, &p, cfg)?;
    let spc = cfg.orbit.samples_per_cycle;
    let wave = orbit_waveform(&model, &o, spc)?;
    output::write_time_series(&out.join("orbit.csv"), &model.state_labels, &wave)?;
    let res = OrbitResult {
        period_multiple: o.m,
        x_start: vec_of(&o.x_start),
        state_labels: model.state_labels.clone(),
        duty_fractions: o.duty_fractions(),
        mean_duty: o.mean_duty(),
        period_doubled: o.is_period_doubled(),
        residual: o.residual,
        mean_output_v: mean_output(&model, &o)?,
        output_ripple_v: output_ripple(&model, &o, spc)?,
    };
    output::write_report(&out.join(REPORT_FILE), "orbit", cfg, &res)?;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityResult {
    pub period_multiple: usize,
    pub duty_fractions: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    /// Empty for period-2 orbits.
    pub gamma_v_s: Vec<f64>,
    pub gamma_v_r: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub verdict: StabilityVerdict,
    pub averaged_poles: Vec<Complex64>,
    pub averaged_max_re: f64,
}

pub fn stability(cfg: &RunConfig, out: &Path) -> CliResult<StabilityResult> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let model = build_buck_model(&p)?;
    let o = solve_orbit(&model, &p, cfg)?;
    let (phi, g1, g2, eigs) = if o.m == 1 {
        let lin = linearize(&model, &o)?;
        (lin.phi, vec_of(&lin.gamma1), vec_of(&lin.gamma2), lin.eigs)
    } else {
        let mono = monodromy(&model, &o)?;
        let eigs = eigenvalues(&mono)?;
        (mono, Vec::new(), Vec::new(), eigs)
    };
    let avg = averaged_jacobian(&model, p.input())?;
    let res = StabilityResult {
        period_multiple: o.m,
        duty_fractions: o.duty_fractions(),
        phi: rows(&phi),
        gamma_v_s: g1,
        gamma_v_r: g2,
        verdict: classify_stability(&eigs, cfg.stability.tol),
        eigenvalues: eigs,
        averaged_max_re: avg.max_real_part(),
        averaged_poles: avg.poles,
    };
    output::write_report(&out.join(REPORT_FILE), "stability", cfg, &res)?;
    Ok(res)
}

pub fn sweep_pole(cfg: &RunConfig, out: &Path) -> CliResult<SweepReport> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let report = run_sweep(&p, &cfg.sweep, cfg.stability.tol)?;
    output::write_sweep(&out.join("sweep.csv"), &report)?;
    output::write_report(&out.join(REPORT_FILE), "sweep-pole", cfg, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct HbResult {
    #[serde(flatten)]
    pub prediction: HbPrediction,
    pub k_star: f64,
    pub omega_p_star_rad_s: f64,
}

pub fn hb(cfg: &RunConfig, out: &Path) -> CliResult<HbResult> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let res = HbResult {
        prediction: HbPrediction::predict(&p)?,
        k_star: k_star(),
        omega_p_star_rad_s: k_star() * p.omega_s(),
    };
    output::write_report(&out.join(REPORT_FILE), "hb", cfg, &res)?;
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct TfResult {
    pub dc_control_to_output: Option<f64>,
    pub dc_audio: Option<f64>,
    pub points: usize,
    pub poles: Vec<Complex64>,
}

pub fn tf(cfg: &RunConfig, out: &Path) -> CliResult<TfResult> {
    ensure_dir(out)?;
    let p = cfg.params()?;
    let model = build_buck_model(&p)?;
    let o = find_periodic_orbit(&model, p.input(), 1, None)?;
    let lin = linearize(&model, &o)?;
    let kinds: &[(TransferKind, &'static str)] = match cfg.tf.which {
        TfChoice::ControlToOutput => &[(TransferKind::ControlToOutput, "control_to_output")],
        TfChoice::Audio => &[(TransferKind::Audio, "audio")],
        TfChoice::Both => &[
            (TransferKind::ControlToOutput, "control_to_output"),
            (TransferKind::Audio, "audio"),
        ],
    };
    let nyq = 0.5 * p.omega_s();
    let (lo, hi) = (cfg.tf.min_frac_nyquist.ln(), cfg.tf.max_frac_nyquist.ln());
    let n = cfg.tf.points;
    let mut rows_out = Vec::with_capacity(n * kinds.len());
    for &(kind, name) in kinds {
        for i in 0..n {
            let w = nyq * (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            rows_out.push(FrequencyRow {
                omega_rad_s: w,
                kind: name,
                value: frequency_response(&lin, &model, kind, w)?,
            });
        }
    }
    output::write_frequency_response(&out.join("tf.csv"), &rows_out)?;
    let one = Complex64::new(1.0, 0.0);
    let dc = |k| transfer_response(&lin, &model, k, one).ok().map(|z| z.re);
    let wants = |k: TransferKind| kinds.iter().any(|(kk, _)| *kk == k);
    let res = TfResult {
        dc_control_to_output: wants(TransferKind::ControlToOutput)
            .then(|| dc(TransferKind::ControlToOutput))
            .flatten(),
        dc_audio: wants(TransferKind::Audio)
            .then(|| dc(TransferKind::Audio))
            .flatten(),
        points: n,
        poles: lin.eigs,
    };
    output::write_report(&out.join(REPORT_FILE), "tf", cfg, &res)?;
    Ok(res)
}
