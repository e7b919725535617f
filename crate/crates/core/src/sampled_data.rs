//! Linearized sampled-data dynamics around a periodic orbit:
//! `x̂_{n+1} = Φ x̂_n + Γ1 v̂_s,n + Γ2 v̂_r,n`, orbital stability from the
//! spectrum of `Φ`, and the discrete transfer functions built on it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Input, SwitchedModel};
use crate::numerics::{eigenvalues, expm, expm_integral};
use crate::steady_state::PeriodicOrbit;

/// Relative size below which the transversality denominator counts as zero.
const GRAZING_TOL: f64 = 1e-9;
/// Distance from an eigenvalue of `Φ` treated as a pole.
const POLE_TOL: f64 = 1e-9;
pub const DEFAULT_STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearization {
    pub phi: DMatrix<f64>,
    pub gamma1: DVector<f64>,
    pub gamma2: DVector<f64>,
    pub eigs: Vec<Complex64>,
    pub orbit_ref: PeriodicOrbit,
}

/// One-cycle Jacobians `(Φ, Γ)` of the cycle map at a switching state `x_d` and instant `d`.
pub fn cycle_jacobians(
    model: &SwitchedModel,
    u: Input,
    x_d: &DVector<f64>,
    d: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = model.dim();
    let period = model.period();
    let bu1 = model.forcing_on(u);
    let bu2 = model.forcing_off(u);
    let deriv_minus = &model.a1 * x_d + &bu1;
    let deriv_plus = &model.a2 * x_d + &bu2;
    let c_rate = (&model.c_row * &deriv_minus)[0];
    let h_rate = model.ramp.slope();
    let denom = c_rate - h_rate;
    if denom.abs() <= GRAZING_TOL * (c_rate.abs() + h_rate.abs()) {
        return Err(Error::Grazing { denominator: denom });
    }
    let jump = (deriv_minus - deriv_plus) / denom;

    let e_on = expm(&model.a1, d)?;
    let e_off = expm(&model.a2, period - d)?;
    let saltation = DMatrix::identity(n, n) - &jump * &model.c_row;
    let phi = &e_off * saltation * e_on;

    let w_on_b = expm_integral(&model.a1, d)? * &model.b1;
    let w_off_b = expm_integral(&model.a2, period - d)? * &model.b2;
    let sens = &model.c_row * &w_on_b + &model.d_row;
    let gamma = &e_off * (&w_on_b - &jump * sens) + w_off_b;
    Ok((phi, gamma))
}

/// `Φ` and `Γ` for a period-1 orbit, plus the spectrum of `Φ`.
pub fn linearize(model: &SwitchedModel, orbit: &PeriodicOrbit) -> Result<Linearization> {
    if orbit.m != 1 {
        return Err(Error::Domain(format!(
            "linearize expects a period-1 orbit, got m = {} (use monodromy)",
            orbit.m
        )));
    }
    let d = orbit.duties[0];
    if !(d > 0.0 && d < orbit.period) {
        return Err(Error::Saturated {
            duty: d / orbit.period,
        });
    }
    let (phi, gamma) = cycle_jacobians(model, orbit.u, &orbit.switch_states[0], d)?;
    let eigs = eigenvalues(&phi)?;
    Ok(Linearization {
        gamma1: gamma.column(0).into_owned(),
        gamma2: gamma.column(1).into_owned(),
        phi,
        eigs,
        orbit_ref: orbit.clone(),
    })
}

/// `Φ` written with the stage differences `(A1 − A2) x⁰(d) + (B1 − B2) u`
/// instead of the derivative jump. Algebraically identical to the `phi` of [`linearize`].
pub fn phi_stage_difference_form(
    model: &SwitchedModel,
    orbit: &PeriodicOrbit,
) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let d = orbit.duties[0];
    let x_d = &orbit.switch_states[0];
    let u = orbit.u.to_vector();
    let num = (&model.a1 - &model.a2) * x_d + (&model.b1 - &model.b2) * &u;
    let denom = (&model.c_row * (&model.a1 * x_d + &model.b1 * &u))[0] - model.ramp.slope();
    let inner = DMatrix::identity(n, n) - num * &model.c_row / denom;
    Ok(expm(&model.a2, orbit.period - d)? * inner * expm(&model.a1, d)?)
}

/// Monodromy matrix of an `m`-cycle orbit: product of the per-cycle `Φ_i`.
pub fn monodromy(model: &SwitchedModel, orbit: &PeriodicOrbit) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let mut total = DMatrix::identity(n, n);
    for (x_d, &d) in orbit.switch_states.iter().zip(&orbit.duties) {
        let (phi, _) = cycle_jacobians(model, orbit.u, x_d, d)?;
        total = phi * total;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stable,
    PeriodDoubling,
    Neimark,
    RealUnstable,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::PeriodDoubling => "period_doubling",
            StabilityClass::Neimark => "neimark",
            StabilityClass::RealUnstable => "real_unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub max_magnitude: f64,
    /// Eigenvalues with `|λ| ≥ 1 − tol`, dominant first.
    pub critical_eigs: Vec<Complex64>,
    pub tolerance: f64,
    /// `max|λ|` is within `tol` of the unit circle.
    pub marginal: bool,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.class == StabilityClass::Stable
    }

    pub fn dominant(&self) -> Option<Complex64> {
        self.critical_eigs.first().copied()
    }
}

/// Orbital stability from the multipliers.
pub fn classify_stability(eigs: &[Complex64], tol: f64) -> StabilityVerdict {
    let max_magnitude = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut critical: Vec<Complex64> = eigs
        .iter()
        .copied()
        .filter(|z| z.norm() >= 1.0 - tol)
        .collect();
    // Dominant first; conjugates ordered by sign of the imaginary part so the
    // result does not depend on the input order.
    critical.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let class = match critical.first() {
        None => StabilityClass::Stable,
        Some(z) if z.im.abs() <= tol => {
            if z.re < 0.0 {
                StabilityClass::PeriodDoubling
            } else {
                StabilityClass::RealUnstable
            }
        }
        Some(_) => StabilityClass::Neimark,
    };
    StabilityVerdict {
        class,
        max_magnitude,
        critical_eigs: critical,
        tolerance: tol,
        marginal: (max_magnitude - 1.0).abs() <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKind {
    /// `v̂_o / v̂_r`.
    ControlToOutput,
    /// `v̂_o / v̂_s` (audio susceptibility).
    Audio,
}

/// `E (zI − Φ)⁻¹ Γ_k` with `E = (E1 + E2)/2`.
pub fn transfer_response(
    lin: &Linearization,
    model: &SwitchedModel,
    which: TransferKind,
    z: Complex64,
) -> Result<Complex64> {
    if let Some(l) = lin.eigs.iter().find(|l| (*l - z).norm() <= POLE_TOL) {
        return Err(Error::Pole(format!(
            "z = {z} is within {POLE_TOL} of eigenvalue {l}"
        )));
    }
    let n = model.dim();
    let gamma = match which {
        TransferKind::ControlToOutput => &lin.gamma2,
        TransferKind::Audio => &lin.gamma1,
    };
    let shifted = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        let ident = if i == j { z } else { Complex64::new(0.0, 0.0) };
        ident - Complex64::new(lin.phi[(i, j)], 0.0)
    });
    let rhs = gamma.map(|v| Complex64::new(v, 0.0));
    let v = shifted
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Pole(format!("zI - Φ singular at z = {z}")))?;
    let e = model.e_avg();
    Ok((0..n).map(|i| v[i] * e[i]).sum())
}

/// Frequency response `T(e^{jωT})`, defined for `|ω| < π/T`.
pub fn frequency_response(
    lin: &Linearization,
    model: &SwitchedModel,
    which: TransferKind,
    omega: f64,
) -> Result<Complex64> {
    let period = model.period();
    let limit = PI / period;
    if !(omega.abs() < limit) {
        return Err(Error::FrequencyRange { omega, limit });
    }
    transfer_response(
        lin,
        model,
        which,
        Complex64::from_polar(1.0, omega * period),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_buck_model, presets, RampSignal};
    use crate::steady_state::find_periodic_orbit;
    use nalgebra::RowDVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classify_period_doubling() {
        let v = classify_stability(
            &[c(-1.05, 0.0), c(0.3, 0.0), c(0.1, 0.0), c(0.02, 0.0)],
            1e-6,
        );
        assert_eq!(v.class, StabilityClass::PeriodDoubling);
        assert_eq!(v.critical_eigs, vec![c(-1.05, 0.0)]);
        assert!(!v.marginal);
    }

    #[test]
    fn classify_stable_complex_pair() {
        let p = Complex64::from_polar(0.9, 1.0);
        let v = classify_stability(&[p, p.conj(), c(0.5, 0.0), c(0.1, 0.0)], 1e-6);
        assert_eq!(v.class, StabilityClass::Stable);
        assert!(v.critical_eigs.is_empty());
        assert!((v.max_magnitude - 0.9).abs() < 1e-15);
    }

    #[test]
    fn classify_neimark_and_real() {
        let p = Complex64::from_polar(1.02, 0.4);
        assert_eq!(
            classify_stability(&[p, p.conj(), c(0.5, 0.0)], 1e-6).class,
            StabilityClass::Neimark
        );
        assert_eq!(
            classify_stability(&[c(1.3, 0.0), c(0.5, 0.0)], 1e-6).class,
            StabilityClass::RealUnstable
        );
    }

    #[test]
    fn marginal_gets_nearest_unstable_class() {
        let v = classify_stability(&[c(-1.0 + 1e-8, 0.0), c(0.2, 0.0)], 1e-6);
        assert!(v.marginal);
        assert_eq!(v.class, StabilityClass::PeriodDoubling);
        assert!(!v.critical_eigs.is_empty());
    }

    #[test]
    fn classification_invariant_under_conjugation() {
        let set = [
            Complex64::from_polar(1.1, 2.0),
            Complex64::from_polar(1.1, -2.0),
            c(-0.4, 0.0),
        ];
        let conj: Vec<_> = set.iter().map(|z| z.conj()).collect();
        assert_eq!(
            classify_stability(&set, 1e-6),
            classify_stability(&conj, 1e-6)
        );
    }

    #[test]
    fn no_jump_phi_is_full_period_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[-300.0, 100.0, -50.0, -200.0]);
        let b = DMatrix::from_row_slice(2, 2, &[500.0, 0.0, 0.0, 50.0]);
        let model = SwitchedModel::new(
            a.clone(),
            a.clone(),
            b.clone(),
            b,
            RowDVector::from_vec(vec![-1.0, 0.5]),
            RowDVector::from_vec(vec![0.0, 1.0]),
            RowDVector::from_vec(vec![1.0, 0.0]),
            RowDVector::from_vec(vec![1.0, 0.0]),
            RampSignal {
                v_l: 0.0,
                v_h: 1.0,
                period: 1e-3,
            },
        )
        .unwrap();
        let orbit = find_periodic_orbit(&model, Input::new(1.0, 2.0), 1, None).unwrap();
        let lin = linearize(&model, &orbit).unwrap();
        let full = expm(&a, 1e-3).unwrap();
        assert!((&lin.phi - &full).amax() < 1e-13);
    }

    #[test]
    fn both_phi_forms_agree() {
        for k in [0.14, 0.3, 0.81] {
            let p = presets::buck_14v_50khz(k);
            let m = build_buck_model(&p).unwrap();
            let orbit = find_periodic_orbit(&m, p.input(), 1, None).unwrap();
            let lin = linearize(&m, &orbit).unwrap();
            let other = phi_stage_difference_form(&m, &orbit).unwrap();
            let scale = lin.phi.amax();
            assert!((&lin.phi - &other).amax() <= 1e-12 * scale);
        }
    }

    #[test]
    fn low_pole_is_stable() {
        let p = presets::buck_14v_50khz(0.14);
        let m = build_buck_model(&p).unwrap();
        let orbit = find_periodic_orbit(&m, p.input(), 1, None).unwrap();
        let lin = linearize(&m, &orbit).unwrap();
        assert!(lin.eigs.iter().all(|z| z.norm() < 1.0));
        assert!(classify_stability(&lin.eigs, DEFAULT_STABILITY_TOL).is_stable());
    }

    #[test]
    fn transfer_function_properties() {
        let p = presets::buck_14v_50khz(0.81);
        let m = build_buck_model(&p).unwrap();
        let orbit = find_periodic_orbit(&m, p.input(), 1, None).unwrap();
        let lin = linearize(&m, &orbit).unwrap();
        for which in [TransferKind::ControlToOutput, TransferKind::Audio] {
            let far = transfer_response(&lin, &m, which, c(1e6, 0.0)).unwrap();
            let near = transfer_response(&lin, &m, which, c(1.5, 0.0)).unwrap();
            assert!(far.norm() < 1e-4 * near.norm());
            let z = c(0.3, 0.8);
            let a = transfer_response(&lin, &m, which, z.conj()).unwrap();
            let b = transfer_response(&lin, &m, which, z).unwrap().conj();
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
        let pole = lin.eigs[0];
        assert!(matches!(
            transfer_response(&lin, &m, TransferKind::Audio, pole),
            Err(Error::Pole(_))
        ));
        let limit = PI / m.period();
        assert!(matches!(
            frequency_response(&lin, &m, TransferKind::Audio, limit),
            Err(Error::FrequencyRange { .. })
        ));
        assert!(frequency_response(&lin, &m, TransferKind::Audio, 0.5 * limit).is_ok());
    }

    #[test]
    fn linearize_rejects_period_two() {
        let p = presets::buck_14v_50khz(0.3);
        let m = build_buck_model(&p).unwrap();
        let mut orbit = find_periodic_orbit(&m, p.input(), 1, None).unwrap();
        orbit.m = 2;
        assert!(matches!(linearize(&m, &orbit), Err(Error::Domain(_))));
    }

    #[test]
    fn grazing_detected() {
        // tilt the ramp so its slope equals C·ẋ(d⁻): the denominator vanishes
        let p = presets::buck_14v_50khz(0.3);
        let mut m = build_buck_model(&p).unwrap();
        let orbit = find_periodic_orbit(&m, p.input(), 1, None).unwrap();
        let c_rate = (&m.c_row * &orbit.deriv_minus[0])[0];
        m.ramp.v_h = m.ramp.v_l + c_rate * m.ramp.period;
        assert!(matches!(linearize(&m, &orbit), Err(Error::Grazing { .. })));
    }
}
