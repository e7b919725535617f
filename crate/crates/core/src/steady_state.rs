//! Periodic orbits as fixed points of the cycle map.
//!
//! A `m·T`-periodic orbit is parametrized by its start state `x(0)` and one
//! switching instant per cycle. Newton's method drives the periodicity
//! defect and the ramp-crossing conditions to zero; stability is not
//! required, so unstable orbits are found just as well as stable ones.

use nalgebra::{DMatrix, DVector, SVD};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Input, SwitchedModel};
use crate::numerics::{affine_flow, expm_integral, solve};
use crate::simulator::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumEstimate {
    pub state: DVector<f64>,
    /// Numerical rank of the averaged system matrix (in scaled coordinates).
    pub rank: usize,
}

/// Least-squares, minimum-norm equilibrium of the duty-averaged dynamics
/// `(d A1 + (1-d) A2) x + (d B1 + (1-d) B2) u = 0`.
///
/// Pure integrator coordinates make the system rank deficient; they are
/// left at zero by the minimum-norm solution.
pub fn averaged_equilibrium(
    model: &SwitchedModel,
    u: Input,
    d_guess: f64,
) -> Result<EquilibriumEstimate> {
    if !(0.0..=1.0).contains(&d_guess) {
        return Err(Error::Domain(format!(
            "duty guess must be in [0, 1], got {d_guess}"
        )));
    }
    let a = &model.a1 * d_guess + &model.a2 * (1.0 - d_guess);
    let b = model.forcing_on(u) * d_guess + model.forcing_off(u) * (1.0 - d_guess);
    let s = DMatrix::from_diagonal(&model.state_scale);
    let svd = SVD::new(&a * &s, true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = 1e-12 * sigma_max.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|v| **v > cutoff).count();
    let z = svd
        .solve(&(-b), cutoff)
        .map_err(|e| Error::Domain(format!("averaged equilibrium: {e}")))?;
    Ok(EquilibriumEstimate { state: s * z, rank })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    /// Number of clock periods per orbit.
    pub m: usize,
    pub period: f64,
    /// The fixed point `x⁰(0)`.
    pub x_start: DVector<f64>,
    /// Switching instant within each cycle, seconds from that cycle's start.
    pub duties: Vec<f64>,
    pub u: Input,
    /// Scaled max-norm of the periodicity and crossing defects at exit.
    pub residual: f64,
    /// State at the start of each cycle.
    pub cycle_starts: Vec<DVector<f64>>,
    /// State at each switching instant, `x⁰(d_i)`.
    pub switch_states: Vec<DVector<f64>>,
    /// `ẋ⁰(d_i⁻)` per switching.
    pub deriv_minus: Vec<DVector<f64>>,
    /// `ẋ⁰(d_i⁺)` per switching.
    pub deriv_plus: Vec<DVector<f64>>,
}

impl PeriodicOrbit {
    /// Duty fractions `d_i / T`.
    pub fn duty_fractions(&self) -> Vec<f64> {
        self.duties.iter().map(|d| d / self.period).collect()
    }

    pub fn mean_duty(&self) -> f64 {
        self.duty_fractions().iter().sum::<f64>() / self.m as f64
    }

    /// True when the cycles of an `m > 1` orbit actually differ.
    pub fn is_period_doubled(&self) -> bool {
        self.m > 1
            && self
                .duties
                .iter()
                .any(|d| (d - self.duties[0]).abs() > DISTINCT_DUTY * self.period)
    }
}

/// Starting point for the Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGuess {
    pub x_start: DVector<f64>,
    /// Switching instants in seconds, one per cycle.
    pub duties: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Duty fraction used to seed the averaged equilibrium.
    pub d_guess: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            d_guess: None,
            max_iter: 50,
            tol: 1e-10,
        }
    }
}

const DISTINCT_DUTY: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
const MAX_HALVINGS: usize = 8;
/// Duty splits tried for period-2 orbits, as fractions of the duty guess.
const PERIOD2_SPLITS: [f64; 4] = [0.05, 0.15, 0.30, 0.45];

struct Shooting<'a> {
    model: &'a SwitchedModel,
    u: Input,
    m: usize,
    bu1: DVector<f64>,
    bu2: DVector<f64>,
}

struct Propagated {
    x_end: DVector<f64>,
    cycle_starts: Vec<DVector<f64>>,
    switch_states: Vec<DVector<f64>>,
    crossing: Vec<f64>,
}

impl<'a> Shooting<'a> {
    fn new(model: &'a SwitchedModel, u: Input, m: usize) -> Self {
        Self {
            model,
            u,
            m,
            bu1: model.forcing_on(u),
            bu2: model.forcing_off(u),
        }
    }

    fn n(&self) -> usize {
        self.model.dim()
    }

    fn propagate(&self, x0: &DVector<f64>, duties: &[f64]) -> Result<Propagated> {
        let period = self.model.period();
        let mut x = x0.clone();
        let mut out = Propagated {
            x_end: x0.clone(),
            cycle_starts: Vec::with_capacity(self.m),
            switch_states: Vec::with_capacity(self.m),
            crossing: Vec::with_capacity(self.m),
        };
        for &d in duties {
            out.cycle_starts.push(x.clone());
            let (p1, f1) = affine_flow(&self.model.a1, &self.bu1, d)?;
            let xd = p1 * &x + f1;
            out.crossing
                .push(self.model.output(&xd, self.u) - self.model.ramp.value_in_cycle(d));
            let (p2, f2) = affine_flow(&self.model.a2, &self.bu2, period - d)?;
            x = p2 * &xd + f2;
            out.switch_states.push(xd);
        }
        out.x_end = x;
        Ok(out)
    }

    fn unpack(&self, z: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
        let n = self.n();
        let x = z.rows(0, n).component_mul(&self.model.state_scale);
        let period = self.model.period();
        let duties = (0..self.m).map(|j| z[n + j] * period).collect();
        (x, duties)
    }

    fn pack(&self, x: &DVector<f64>, duties: &[f64]) -> DVector<f64> {
        let n = self.n();
        let mut z = DVector::zeros(n + self.m);
        z.rows_mut(0, n)
            .copy_from(&x.component_div(&self.model.state_scale));
        for (j, d) in duties.iter().enumerate() {
            z[n + j] = d / self.model.period();
        }
        z
    }

    fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n();
        let (x, duties) = self.unpack(z);
        let p = self.propagate(&x, &duties)?;
        let mut r = DVector::zeros(n + self.m);
        r.rows_mut(0, n)
            .copy_from(&(&p.x_end - &x).component_div(&self.model.state_scale));
        let amp = self.model.ramp.amplitude();
        for (j, g) in p.crossing.iter().enumerate() {
            r[n + j] = g / amp;
        }
        Ok(r)
    }

    fn jacobian(&self, z: &DVector<f64>, r0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let dim = z.len();
        let mut jac = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let h = FD_STEP * z[i].abs().max(1.0);
            let mut zp = z.clone();
            zp[i] += h;
            let rp = self.residual(&zp)?;
            jac.set_column(i, &((rp - r0) / h));
        }
        Ok(jac)
    }

    fn newton(&self, mut z: DVector<f64>, opts: &SolverOptions) -> Result<(DVector<f64>, f64)> {
        let mut r = self.residual(&z)?;
        let mut rn = r.amax();
        for _ in 0..opts.max_iter {
            if rn <= opts.tol {
                return Ok((z, rn));
            }
            let jac = self.jacobian(&z, &r)?;
            let step = solve(&jac, &(-&r))?;
            let mut accepted = false;
            let mut lambda = 1.0;
            for _ in 0..=MAX_HALVINGS {
                let zt = &z + &step * lambda;
                if let Ok(rt) = self.residual(&zt) {
                    let rtn = rt.amax();
                    if rtn.is_finite() && rtn < rn {
                        z = zt;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if rn <= opts.tol {
            Ok((z, rn))
        } else {
            Err(Error::NoConvergence {
                iterations: opts.max_iter,
                residual: rn,
            })
        }
    }

    fn finish(&self, z: &DVector<f64>, residual: f64) -> Result<PeriodicOrbit> {
        let (x, duties) = self.unpack(z);
        let period = self.model.period();
        if let Some(d) = duties.iter().find(|d| !(**d > 0.0 && **d < period)) {
            return Err(Error::Saturated { duty: d / period });
        }
        let p = self.propagate(&x, &duties)?;
        let deriv_minus = p
            .switch_states
            .iter()
            .map(|xd| &self.model.a1 * xd + &self.bu1)
            .collect();
        let deriv_plus = p
            .switch_states
            .iter()
            .map(|xd| &self.model.a2 * xd + &self.bu2)
            .collect();
        Ok(PeriodicOrbit {
            m: self.m,
            period,
            x_start: x,
            duties,
            u: self.u,
            residual,
            cycle_starts: p.cycle_starts,
            switch_states: p.switch_states,
            deriv_minus,
            deriv_plus,
        })
    }
}

pub fn find_periodic_orbit(
    model: &SwitchedModel,
    u: Input,
    period_multiple: usize,
    init: Option<&OrbitGuess>,
) -> Result<PeriodicOrbit> {
    find_periodic_orbit_with(model, u, period_multiple, init, &SolverOptions::default())
}

/// Newton shooting for an `m_p·T`-periodic orbit, `m_p ∈ {1, 2}`.
///
/// Without `init`, the start state is the averaged equilibrium for the duty
/// guess and every duty starts at the guess. For `m_p = 2` the duties are
/// split apart by a ladder of increasing amounts until a solution with
/// distinct duties is found. If every split collapses onto the period-1
/// orbit, that doubled orbit is returned (see [`PeriodicOrbit::is_period_doubled`]).
pub fn find_periodic_orbit_with(
    model: &SwitchedModel,
    u: Input,
    period_multiple: usize,
    init: Option<&OrbitGuess>,
    opts: &SolverOptions,
) -> Result<PeriodicOrbit> {
    if !(1..=2).contains(&period_multiple) {
        return Err(Error::Domain(format!(
            "period multiple must be 1 or 2, got {period_multiple}"
        )));
    }
    let shoot = Shooting::new(model, u, period_multiple);
    let period = model.period();

    if let Some(g) = init {
        if g.duties.len() != period_multiple || g.x_start.len() != model.dim() {
            return Err(Error::Dimension(format!(
                "initial guess has {} duties and state length {}, expected {} and {}",
                g.duties.len(),
                g.x_start.len(),
                period_multiple,
                model.dim()
            )));
        }
        let (z, res) = shoot.newton(shoot.pack(&g.x_start, &g.duties), opts)?;
        return shoot.finish(&z, res);
    }

    let d_guess = opts.d_guess.unwrap_or(0.5);
    let x0 = averaged_equilibrium(model, u, d_guess)?.state;
    if period_multiple == 1 {
        let (z, res) = shoot.newton(shoot.pack(&x0, &[d_guess * period]), opts)?;
        return shoot.finish(&z, res);
    }

    let mut fallback: Option<PeriodicOrbit> = None;
    let mut last_err = None;
    for split in PERIOD2_SPLITS {
        let duties = [
            (d_guess * (1.0 + split)).min(0.999) * period,
            d_guess * (1.0 - split) * period,
        ];
        match shoot
            .newton(shoot.pack(&x0, &duties), opts)
            .and_then(|(z, res)| shoot.finish(&z, res))
        {
            Ok(orbit) if orbit.is_period_doubled() => return Ok(orbit),
            Ok(orbit) => {
                fallback.get_or_insert(orbit);
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (fallback, last_err) {
        (Some(orbit), _) => Ok(orbit),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("split ladder is non-empty"),
    }
}

/// One-sided derivatives `(ẋ⁰(d⁻), ẋ⁰(d⁺))` at each switching instant.
pub fn orbit_derivatives(
    model: &SwitchedModel,
    orbit: &PeriodicOrbit,
) -> Vec<(DVector<f64>, DVector<f64>)> {
    let bu1 = model.forcing_on(orbit.u);
    let bu2 = model.forcing_off(orbit.u);
    orbit
        .switch_states
        .iter()
        .map(|xd| (&model.a1 * xd + &bu1, &model.a2 * xd + &bu2))
        .collect()
}

/// Time average of `E·x(t)` over the whole orbit, computed in closed form
/// from integrals of the augmented stage exponentials.
pub fn mean_output(model: &SwitchedModel, orbit: &PeriodicOrbit) -> Result<f64> {
    let n = model.dim();
    let e = model.e_avg();
    let stage_integral =
        |a: &DMatrix<f64>, bu: &DVector<f64>, x: &DVector<f64>, t: f64| -> Result<f64> {
            let mut aug = DMatrix::zeros(n + 1, n + 1);
            aug.view_mut((0, 0), (n, n)).copy_from(a);
            aug.view_mut((0, n), (n, 1)).copy_from(bu);
            let w = expm_integral(&aug, t)?;
            let mut z = DVector::zeros(n + 1);
            z.rows_mut(0, n).copy_from(x);
            z[n] = 1.0;
            let integral = (w * z).rows(0, n).into_owned();
            Ok((&e * integral)[0])
        };
    let bu1 = model.forcing_on(orbit.u);
    let bu2 = model.forcing_off(orbit.u);
    let mut total = 0.0;
    for j in 0..orbit.m {
        let d = orbit.duties[j];
        total += stage_integral(&model.a1, &bu1, &orbit.cycle_starts[j], d)?;
        total += stage_integral(&model.a2, &bu2, &orbit.switch_states[j], orbit.period - d)?;
    }
    Ok(total / (orbit.m as f64 * orbit.period))
}

/// Dense samples of one full orbit using its own switching instants.
/// Each switching instant is included as an extra sample.
pub fn orbit_waveform(
    model: &SwitchedModel,
    orbit: &PeriodicOrbit,
    samples_per_cycle: usize,
) -> Result<Vec<Sample>> {
    let bu1 = model.forcing_on(orbit.u);
    let bu2 = model.forcing_off(orbit.u);
    let n = samples_per_cycle.max(1);
    let mut out = Vec::with_capacity(orbit.m * (n + 1) + 1);
    for j in 0..orbit.m {
        let t0 = j as f64 * orbit.period;
        let d = orbit.duties[j];
        let mut times: Vec<f64> = (0..n).map(|k| k as f64 * orbit.period / n as f64).collect();
        if let Err(pos) = times.binary_search_by(|t| t.partial_cmp(&d).unwrap()) {
            times.insert(pos, d);
        }
        for t in times {
            let x = if t < d {
                let (p, f) = affine_flow(&model.a1, &bu1, t)?;
                p * &orbit.cycle_starts[j] + f
            } else {
                let (p, f) = affine_flow(&model.a2, &bu2, t - d)?;
                p * &orbit.switch_states[j] + f
            };
            let ta = t0 + t;
            out.push(Sample {
                t: ta,
                y: model.output(&x, orbit.u),
                h: model.ramp.value_in_cycle(t),
                x,
            });
        }
    }
    let t_end = orbit.m as f64 * orbit.period;
    out.push(Sample {
        t: t_end,
        y: model.output(&orbit.x_start, orbit.u),
        h: model.ramp.v_l,
        x: orbit.x_start.clone(),
    });
    Ok(out)
}

/// Peak-to-peak excursion of the compensator output along the orbit.
pub fn output_ripple(
    model: &SwitchedModel,
    orbit: &PeriodicOrbit,
    samples_per_cycle: usize,
) -> Result<f64> {
    let w = orbit_waveform(model, orbit, samples_per_cycle)?;
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.y), hi.max(s.y))
        });
    Ok(hi - lo)
}
