//! Compensator-pole sweep with bisection of stability boundaries.

use acc_core::averaged::averaged_jacobian;
use acc_core::numerics::bracket_root;
use acc_core::sampled_data::{classify_stability, linearize, StabilityClass};
use acc_core::steady_state::find_periodic_orbit;
use acc_core::{build_buck_model, ConverterParams};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SweepOptions;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub k: f64,
    pub omega_p_rad_s: f64,
    pub duty: Option<f64>,
    pub eigs: Vec<Complex64>,
    pub max_mag: Option<f64>,
    pub verdict: Option<StabilityClass>,
    pub avg_max_re: Option<f64>,
    /// Error category when the point is a gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn is_gap(&self) -> bool {
        self.verdict.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundary {
    pub k: f64,
    pub omega_p_rad_s: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub width: f64,
    pub from: StabilityClass,
    pub to: StabilityClass,
    /// Largest-magnitude eigenvalue of `Φ` at `k`.
    pub dominant: Complex64,
    /// False when the bracket could not be bisected and is the grid cell.
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub boundaries: Vec<Boundary>,
}

impl SweepReport {
    pub fn unstable_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points
            .iter()
            .filter(|p| matches!(p.verdict, Some(v) if v != StabilityClass::Stable))
    }
}

struct Eval {
    duty: f64,
    eigs: Vec<Complex64>,
    class: StabilityClass,
    max_mag: f64,
}

fn eval_at(base: &ConverterParams, k: f64, tol: f64) -> acc_core::Result<(Eval, f64)> {
    let p = base.with_pole_ratio(k);
    let model = build_buck_model(&p)?;
    let orbit = find_periodic_orbit(&model, p.input(), 1, None)?;
    let lin = linearize(&model, &orbit)?;
    let v = classify_stability(&lin.eigs, tol);
    let avg = averaged_jacobian(&model, p.input())?;
    Ok((
        Eval {
            duty: orbit.duty_fractions()[0],
            eigs: lin.eigs,
            class: v.class,
            max_mag: v.max_magnitude,
        },
        avg.max_real_part(),
    ))
}

pub fn evaluate_point(base: &ConverterParams, k: f64, tol: f64) -> SweepPoint {
    let omega_p_rad_s = k * base.omega_s();
    match eval_at(base, k, tol) {
        Ok((e, avg)) => SweepPoint {
            k,
            omega_p_rad_s,
            duty: Some(e.duty),
            eigs: e.eigs,
            max_mag: Some(e.max_mag),
            verdict: Some(e.class),
            avg_max_re: Some(avg),
            error: None,
        },
        Err(err) => SweepPoint {
            k,
            omega_p_rad_s,
            duty: None,
            eigs: Vec::new(),
            max_mag: None,
            verdict: None,
            avg_max_re: None,
            error: Some(err.category().to_string()),
        },
    }
}

fn dominant(eigs: &[Complex64]) -> Complex64 {
    eigs.iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default()
}

fn refine(
    base: &ConverterParams,
    left: &SweepPoint,
    right: &SweepPoint,
    opts: &SweepOptions,
    tol: f64,
) -> Boundary {
    let (from, to) = (left.verdict.unwrap(), right.verdict.unwrap());
    let (ml, mr) = (left.max_mag.unwrap(), right.max_mag.unwrap());
    let unrefined = || {
        let near = if (ml - 1.0).abs() <= (mr - 1.0).abs() {
            left
        } else {
            right
        };
        Boundary {
            k: 0.5 * (left.k + right.k),
            omega_p_rad_s: 0.5 * (left.omega_p_rad_s + right.omega_p_rad_s),
            k_lo: left.k,
            k_hi: right.k,
            width: right.k - left.k,
            from,
            to,
            dominant: dominant(&near.eigs),
            refined: false,
        }
    };
    if (ml - 1.0) * (mr - 1.0) >= 0.0 {
        return unrefined();
    }
    let mut failed = false;
    let g = |k: f64| match eval_at(base, k, tol) {
        Ok((e, _)) => e.max_mag - 1.0,
        Err(_) => {
            failed = true;
            f64::NAN
        }
    };
    let found = bracket_root(g, left.k, right.k, opts.boundary_width);
    match found {
        Ok((root, other)) if !failed => match eval_at(base, root, tol) {
            Ok((e, _)) => Boundary {
                k: root,
                omega_p_rad_s: root * base.omega_s(),
                k_lo: root.min(other),
                k_hi: root.max(other),
                width: (root - other).abs(),
                from,
                to,
                dominant: dominant(&e.eigs),
                refined: true,
            },
            Err(_) => unrefined(),
        },
        _ => unrefined(),
    }
}

/// Evaluates the `k` grid, then bisects every verdict change.
pub fn run_sweep(base: &ConverterParams, opts: &SweepOptions, tol: f64) -> CliResult<SweepReport> {
    let n = opts.points;
    let ks: Vec<f64> = (0..n)
        .map(|i| opts.k_min + (opts.k_max - opts.k_min) * i as f64 / (n - 1) as f64)
        .collect();
    let points: Vec<SweepPoint> = if opts.parallel {
        ks.par_iter()
            .map(|&k| evaluate_point(base, k, tol))
            .collect()
    } else {
        ks.iter().map(|&k| evaluate_point(base, k, tol)).collect()
    };
    if points.iter().all(SweepPoint::is_gap) {
        return Err(CliError::Sweep(format!("all {n} grid points failed")));
    }

    // adjacent non-gap pairs whose verdict differs
    let valid: Vec<&SweepPoint> = points.iter().filter(|p| !p.is_gap()).collect();
    let pairs: Vec<(&SweepPoint, &SweepPoint)> = valid
        .windows(2)
        .filter(|w| w[0].verdict != w[1].verdict)
        .map(|w| (w[0], w[1]))
        .collect();
    let boundaries = if opts.parallel {
        pairs
            .par_iter()
            .map(|(l, r)| refine(base, l, r, opts, tol))
            .collect()
    } else {
        pairs
            .iter()
            .map(|(l, r)| refine(base, l, r, opts, tol))
            .collect()
    };
    Ok(SweepReport { points, boundaries })
}
