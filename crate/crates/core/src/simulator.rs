//! Exact cycle-by-cycle simulation of the switched model.
//!
//! Each clock period starts in the on stage. The switch latches off at the
//! first downward crossing of the ramp by `y = C x + D u` and stays off until
//! the next clock edge. All propagation uses matrix exponentials; the dense
//! sample grid is for output only.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Input, SwitchedModel};
use crate::numerics::{affine_flow, bracket_root};

/// Coarse scan resolution for bracketing the ramp crossing.
pub const CROSSING_GRID: usize = 64;
/// Crossing instants are located to this fraction of the period.
pub const CROSSING_TOL: f64 = 1e-12;
/// Scaled state norm above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub const DEFAULT_SAMPLES_PER_CYCLE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    None,
    FullOn,
    FullOff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    pub x_end: DVector<f64>,
    /// Time spent in the on stage, in `[0, T]`.
    pub duty_time: f64,
    pub saturated: Saturation,
    /// Downward crossings of the ramp seen on the coarse grid along the
    /// realized trajectory, including the one that switched.
    pub crossing_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: DVector<f64>,
    pub y: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Index into `samples` of the first sample of each cycle.
    pub cycle_boundaries: Vec<usize>,
    /// Duty time of each completed cycle.
    pub duties: Vec<f64>,
    pub saturation: Vec<Saturation>,
    /// Stroboscopic states `x(nT)`, `n = 0..=cycles`.
    pub strobe: Vec<DVector<f64>>,
    pub state_scale: DVector<f64>,
    pub period: f64,
}

impl Trajectory {
    pub fn cycles(&self) -> usize {
        self.duties.len()
    }
}

fn g_on(
    model: &SwitchedModel,
    x: &DVector<f64>,
    u: Input,
    bu1: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    let (phi, f) = affine_flow(&model.a1, bu1, t)?;
    let xt = phi * x + f;
    Ok(model.output(&xt, u) - model.ramp.value_in_cycle(t))
}

fn state_at(
    model: &SwitchedModel,
    bu1: &DVector<f64>,
    bu2: &DVector<f64>,
    x: &DVector<f64>,
    x_d: &DVector<f64>,
    d: f64,
    t: f64,
) -> Result<DVector<f64>> {
    if t < d {
        let (phi, f) = affine_flow(&model.a1, bu1, t)?;
        Ok(phi * x + f)
    } else {
        let (phi, f) = affine_flow(&model.a2, bu2, t - d)?;
        Ok(phi * x_d + f)
    }
}

/// Advances one clock period from `x_n` with input `u_n`.
///
/// Returns the cycle summary and `samples_per_cycle` evenly spaced samples
/// at `t = j·T/samples_per_cycle`, `j = 0..samples_per_cycle`, with times
/// relative to the cycle start.
pub fn advance_cycle(
    model: &SwitchedModel,
    x_n: &DVector<f64>,
    u_n: Input,
    samples_per_cycle: usize,
) -> Result<(CycleResult, Vec<Sample>)> {
    let n = model.dim();
    if x_n.len() != n {
        return Err(Error::Dimension(format!(
            "state has length {}, model dimension is {n}",
            x_n.len()
        )));
    }
    if x_n.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            cycle: 0,
            partial: None,
        });
    }
    let period = model.period();
    let bu1 = model.forcing_on(u_n);
    let bu2 = model.forcing_off(u_n);
    let dt = period / CROSSING_GRID as f64;

    let (duty, saturated) = if model.output(x_n, u_n) < model.ramp.v_l {
        (0.0, Saturation::FullOff)
    } else {
        let (step_phi, step_f) = affine_flow(&model.a1, &bu1, dt)?;
        let mut x = x_n.clone();
        let mut bracket = None;
        for k in 1..=CROSSING_GRID {
            x = &step_phi * &x + &step_f;
            let t = k as f64 * dt;
            let g = model.output(&x, u_n) - model.ramp.value_in_cycle(t);
            if g < 0.0 {
                bracket = Some(((k - 1) as f64 * dt, t));
                break;
            }
        }
        match bracket {
            None => (period, Saturation::FullOn),
            Some((lo, hi)) => {
                let mut err = None;
                let (root, _) = bracket_root(
                    |t| match g_on(model, x_n, u_n, &bu1, t) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    lo,
                    hi,
                    CROSSING_TOL * period,
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                if root <= 0.0 {
                    (0.0, Saturation::FullOff)
                } else {
                    (root, Saturation::None)
                }
            }
        }
    };

    let x_d = if duty > 0.0 {
        let (phi, f) = affine_flow(&model.a1, &bu1, duty)?;
        phi * x_n + f
    } else {
        x_n.clone()
    };
    let x_end = if duty < period {
        let (phi, f) = affine_flow(&model.a2, &bu2, period - duty)?;
        &phi * &x_d + f
    } else {
        x_d.clone()
    };
    if x_end.iter().any(|v| !v.is_finite()) || model.scaled_norm(&x_end) > DIVERGENCE_LIMIT {
        return Err(Error::Divergence {
            cycle: 0,
            partial: None,
        });
    }

    // Latched crossings after switch-off, for diagnostics.
    let mut crossing_count = usize::from(saturated == Saturation::None);
    if duty < period {
        let first = ((duty / dt).floor() as usize + 1).min(CROSSING_GRID);
        let mut prev = None;
        for k in first..=CROSSING_GRID {
            let t = k as f64 * dt;
            let xk = state_at(model, &bu1, &bu2, x_n, &x_d, duty, t)?;
            let g = model.output(&xk, u_n) - model.ramp.value_in_cycle(t);
            if let Some(gp) = prev {
                if gp >= 0.0 && g < 0.0 {
                    crossing_count += 1;
                }
            }
            prev = Some(g);
        }
    }

    let mut samples = Vec::with_capacity(samples_per_cycle);
    for j in 0..samples_per_cycle {
        let t = j as f64 * period / samples_per_cycle as f64;
        let x = if j == 0 {
            x_n.clone()
        } else {
            state_at(model, &bu1, &bu2, x_n, &x_d, duty, t)?
        };
        samples.push(Sample {
            t,
            y: model.output(&x, u_n),
            h: model.ramp.value(t),
            x,
        });
    }

    Ok((
        CycleResult {
            x_end,
            duty_time: duty,
            saturated,
            crossing_count,
        },
        samples,
    ))
}

/// Simulates `n_cycles` periods with [`DEFAULT_SAMPLES_PER_CYCLE`] output samples per cycle.
pub fn simulate(
    model: &SwitchedModel,
    x0: &DVector<f64>,
    u: Input,
    n_cycles: usize,
) -> Result<Trajectory> {
    simulate_with(model, x0, u, n_cycles, DEFAULT_SAMPLES_PER_CYCLE)
}

pub fn simulate_with(
    model: &SwitchedModel,
    x0: &DVector<f64>,
    u: Input,
    n_cycles: usize,
    samples_per_cycle: usize,
) -> Result<Trajectory> {
    if n_cycles == 0 {
        return Err(Error::Domain("simulate needs n_cycles >= 1".into()));
    }
    let period = model.period();
    let mut tr = Trajectory {
        state_scale: model.state_scale.clone(),
        period,
        strobe: vec![x0.clone()],
        ..Default::default()
    };
    let mut x = x0.clone();
    for cycle in 0..n_cycles {
        let t0 = cycle as f64 * period;
        match advance_cycle(model, &x, u, samples_per_cycle) {
            Ok((res, samples)) => {
                tr.cycle_boundaries.push(tr.samples.len());
                tr.samples.extend(samples.into_iter().map(|mut s| {
                    s.t += t0;
                    s
                }));
                tr.duties.push(res.duty_time);
                tr.saturation.push(res.saturated);
                tr.strobe.push(res.x_end.clone());
                x = res.x_end;
            }
            Err(Error::Divergence { .. }) => {
                return Err(Error::Divergence {
                    cycle,
                    partial: Some(Box::new(tr)),
                })
            }
            Err(e) => return Err(e),
        }
    }
    if samples_per_cycle > 0 {
        let t = n_cycles as f64 * period;
        tr.samples.push(Sample {
            t,
            y: model.output(&x, u),
            h: model.ramp.value(t),
            x,
        });
    }
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "multiple")]
pub enum PeriodClass {
    Periodic(usize),
    Aperiodic,
    Diverging,
}

/// Minimum completed cycles accepted by [`detect_period`].
pub const MIN_CYCLES_FOR_PERIOD: usize = 32;
const CANDIDATE_PERIODS: [usize; 5] = [1, 2, 4, 8, 16];

/// Classifies the steady behaviour from the stroboscopic samples.
///
/// Over the trailing quarter of the run (at least 16 cycles) finds the
/// smallest `m` with `|x_i((n+m)T) − x_i(nT)| ≤ tol_rel · scale_i` for every
/// coordinate and every trailing `n`.
pub fn detect_period(tr: &Trajectory, tol_rel: f64) -> Result<PeriodClass> {
    if !(tol_rel > 0.0) {
        return Err(Error::Domain(format!("tol_rel must be > 0, got {tol_rel}")));
    }
    let cycles = tr.strobe.len().saturating_sub(1);
    if cycles < MIN_CYCLES_FOR_PERIOD {
        return Err(Error::InsufficientData(format!(
            "{cycles} cycles, need at least {MIN_CYCLES_FOR_PERIOD}"
        )));
    }
    let scaled = |x: &DVector<f64>| -> f64 {
        x.iter()
            .zip(tr.state_scale.iter())
            .map(|(v, s)| (v / s).abs())
            .fold(0.0, f64::max)
    };
    let window = (cycles / 4).max(16);
    let last = tr.strobe.len() - 1;

    for &m in &CANDIDATE_PERIODS {
        if window + m > last {
            break;
        }
        let repeats = (last - window - m..=last - m).all(|n| {
            let a = &tr.strobe[n];
            let b = &tr.strobe[n + m];
            a.iter()
                .zip(b.iter())
                .zip(tr.state_scale.iter())
                .all(|((p, q), s)| (q - p).abs() <= tol_rel * s)
        });
        if repeats {
            return Ok(PeriodClass::Periodic(m));
        }
    }

    // Envelope growth over blocks of 8 cycles.
    let initial = scaled(&tr.strobe[0]).max(1.0);
    let env: Vec<f64> = tr.strobe[1..]
        .chunks(8)
        .map(|c| c.iter().map(scaled).fold(0.0, f64::max))
        .collect();
    let monotone = env.windows(2).all(|w| w[1] >= w[0]);
    if monotone && env.last().copied().unwrap_or(0.0) > 1e3 * initial {
        return Ok(PeriodClass::Diverging);
    }
    Ok(PeriodClass::Aperiodic)
}
