//! Harmonic-balance prediction of period doubling for the buck loop.
//!
//! The threshold source voltage `V_s*` is where the loop gain at the
//! switching frequency and at half of it permits a subharmonic. Its
//! simplified form is `2(V_h − V_l) L ω_z ω_s / (3 R_s K_c) · φ(k)` with
//! `k = ω_p / ω_s`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compensator_response, ConverterParams};
use crate::numerics::bracket_root;

/// Duty-to-inductor-current transfer function `(RCs + 1) / (RLCs² + Ls + R)`.
pub fn g1(p: &ConverterParams, s: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let den = p.r * p.l * p.c * s * s + p.l * s + p.r;
    if den.norm() <= 1e-300 {
        return Err(Error::Pole(format!("plant pole at s = {s}")));
    }
    Ok((p.r * p.c * s + one) / den)
}

/// `G(s) = R_s H_c(s) G_1(s)`.
pub fn loop_gain(p: &ConverterParams, s: Complex64) -> Result<Complex64> {
    Ok(p.r_s * compensator_response(p, s)? * g1(p, s)?)
}

/// Threshold from the loop gain, or `None` when no finite threshold is
/// predicted.
pub fn critical_voltage_exact(p: &ConverterParams) -> Option<f64> {
    let ws = p.omega_s();
    let full = loop_gain(p, Complex64::new(0.0, ws)).ok()?;
    let half = loop_gain(p, Complex64::new(0.0, 0.5 * ws)).ok()?;
    let den = 2.0 * (full - half).re;
    if !(den > 0.0) || !den.is_finite() {
        return None;
    }
    let v = p.ramp().amplitude() / den;
    v.is_finite().then_some(v)
}

pub fn phi(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("phi needs k > 0, got {k}")));
    }
    let k2 = k * k;
    Ok((1.0 + k2) * (0.25 + k2) / k)
}

/// Minimizer of `φ`: the positive root of `3k⁴ + 1.25k² − 0.25 = 0`.
pub fn k_star() -> f64 {
    let (a, b, c) = (3.0_f64, 1.25_f64, -0.25_f64);
    let k2 = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    k2.sqrt()
}

fn simplified_coefficient(p: &ConverterParams) -> f64 {
    2.0 * p.ramp().amplitude() * p.l * p.omega_z * p.omega_s() / (3.0 * p.r_s * p.k_c)
}

pub fn critical_voltage_simplified(p: &ConverterParams) -> f64 {
    critical_voltage_simplified_at(p, p.pole_ratio())
}

/// Simplified threshold at an arbitrary pole ratio `k`.
pub fn critical_voltage_simplified_at(p: &ConverterParams, k: f64) -> f64 {
    let ph = phi(k).unwrap_or(f64::INFINITY);
    simplified_coefficient(p) * ph
}

pub fn vs_min(p: &ConverterParams) -> f64 {
    critical_voltage_simplified_at(p, k_star())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HbVerdict {
    UnstableRangeExists,
    PoleInsensitive,
}

impl HbVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            HbVerdict::UnstableRangeExists => "unstable_range_exists",
            HbVerdict::PoleInsensitive => "pole_insensitive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRangePrediction {
    pub verdict: HbVerdict,
    /// Approximate `k` range with `V_s*(k) ≤ v_s`.
    pub unstable_k: Option<(f64, f64)>,
}

const K_TOL: f64 = 1e-12;

pub fn theorem1_predict(p: &ConverterParams) -> PoleRangePrediction {
    let ks = k_star();
    let vmin = vs_min(p);
    if !(p.v_s >= vmin) {
        return PoleRangePrediction {
            verdict: HbVerdict::PoleInsensitive,
            unstable_k: None,
        };
    }
    let target = p.v_s / simplified_coefficient(p);
    let f = |k: f64| phi(k).map(|v| v - target).unwrap_or(f64::INFINITY);
    let edge = |inner: f64, step: f64| -> f64 {
        if f(inner) >= 0.0 {
            return inner;
        }
        let mut outer = inner;
        for _ in 0..200 {
            outer *= step;
            if f(outer) >= 0.0 {
                break;
            }
        }
        bracket_root(f, inner, outer, K_TOL)
            .map(|(r, _)| r)
            .unwrap_or(outer)
    };
    let lo = edge(ks, 0.5);
    let hi = edge(ks, 2.0);
    PoleRangePrediction {
        verdict: HbVerdict::UnstableRangeExists,
        unstable_k: Some((lo, hi)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbPrediction {
    pub vs_star_exact: Option<f64>,
    pub vs_star_simplified: f64,
    pub vs_min: f64,
    pub k: f64,
    pub phi_value: f64,
    pub verdict: HbVerdict,
    pub unstable_k: Option<(f64, f64)>,
}

impl HbPrediction {
    pub fn predict(p: &ConverterParams) -> Result<Self> {
        p.validate()?;
        let k = p.pole_ratio();
        let t1 = theorem1_predict(p);
        Ok(HbPrediction {
            vs_star_exact: critical_voltage_exact(p),
            vs_star_simplified: critical_voltage_simplified(p),
            vs_min: vs_min(p),
            k,
            phi_value: phi(k)?,
            verdict: t1.verdict,
            unstable_k: t1.unstable_k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn phi_values() {
        assert!((phi(0.5).unwrap() - 1.25).abs() < 1e-15);
        assert!((phi(1.0).unwrap() / phi(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(phi(0.0), Err(Error::Domain(_))));
        assert!(matches!(phi(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn k_star_minimizes_phi() {
        let ks = k_star();
        assert!((ks - 0.384).abs() < 0.005);
        let quartic = 3.0 * ks.powi(4) + 1.25 * ks * ks - 0.25;
        assert!(quartic.abs() < 1e-14);
        let pk = phi(ks).unwrap();
        assert!((2.0 / 3.0 * pk - 0.79).abs() < 0.005);
        let mut prev = f64::INFINITY;
        for i in 1..=400 {
            let k = i as f64 * 0.01;
            let v = phi(k).unwrap();
            assert!(v >= pk - 1e-15);
            if k < ks {
                assert!(v < prev);
            } else if k - 0.01 > ks {
                assert!(v > prev);
            }
            prev = v;
        }
    }

    #[test]
    fn vs_min_examples() {
        assert!(rel(vs_min(&presets::buck_14v_50khz(0.3)), 8.57) < 0.01);
        assert!(rel(vs_min(&presets::buck_5v_180khz(5655.0)), 35.86) < 0.01);
    }

    #[test]
    fn simplified_at_038() {
        let p = presets::buck_14v_50khz(0.38);
        let v = critical_voltage_simplified(&p);
        assert!(rel(v, 8.59) < 0.005);
        assert!(rel(v, vs_min(&p)) < 0.005);
    }

    #[test]
    fn vs_min_is_grid_minimum() {
        let p = presets::buck_14v_50khz(0.3);
        let grid_min = (1..4000)
            .map(|i| critical_voltage_simplified_at(&p, i as f64 * 1e-3))
            .fold(f64::INFINITY, f64::min);
        assert!(vs_min(&p) <= grid_min);
        assert!(rel(grid_min, vs_min(&p)) < 1e-5);
    }

    #[test]
    fn exact_close_to_simplified() {
        let p = presets::buck_14v_50khz(0.38);
        let exact = critical_voltage_exact(&p).unwrap();
        assert!(rel(exact, critical_voltage_simplified(&p)) < 0.2);
    }

    #[test]
    fn exact_scales_with_ramp() {
        let p = presets::buck_14v_50khz(0.3);
        let mut q = p;
        q.v_h = q.v_l + 2.0 * (p.v_h - p.v_l);
        let a = critical_voltage_exact(&p).unwrap();
        let b = critical_voltage_exact(&q).unwrap();
        assert!(rel(b, 2.0 * a) < 1e-12);
    }

    #[test]
    fn simplified_scalings() {
        let p = presets::buck_14v_50khz(0.3);
        let base = critical_voltage_simplified(&p);
        let mut q = p;
        q.l *= 2.0;
        assert!(rel(critical_voltage_simplified(&q), 2.0 * base) < 1e-14);
        let mut q = p;
        q.k_c *= 2.0;
        assert!(rel(critical_voltage_simplified(&q), 0.5 * base) < 1e-14);
    }

    #[test]
    fn monotone_sensitivities() {
        let p = presets::buck_14v_50khz(0.3);
        let base = vs_min(&p);
        let bump = |f: &dyn Fn(&mut ConverterParams)| {
            let mut q = p;
            f(&mut q);
            vs_min(&q)
        };
        assert!(bump(&|q| q.v_h += 0.1) > base);
        assert!(bump(&|q| q.l *= 1.1) > base);
        assert!(bump(&|q| q.omega_z *= 1.1) > base);
        assert!(bump(&|q| q.f_s *= 1.1) > base);
        assert!(bump(&|q| q.r_s *= 1.1) < base);
        assert!(bump(&|q| q.k_c *= 1.1) < base);
    }

    #[test]
    fn g1_at_dc_and_symmetry() {
        let p = presets::buck_14v_50khz(0.3);
        let dc = g1(&p, Complex64::new(0.0, 0.0)).unwrap();
        assert!((dc.re - 1.0 / p.r).abs() < 1e-15 && dc.im == 0.0);
        let w = 1234.5;
        let a = g1(&p, Complex64::new(0.0, w)).unwrap();
        let b = g1(&p, Complex64::new(0.0, -w)).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn loop_gain_split_factor_oracle() {
        let p = presets::buck_14v_50khz(0.3);
        let s = Complex64::new(0.0, 0.5 * p.omega_s());
        let hc = p.k_c * (1.0 + s / p.omega_z) / (s * (1.0 + s / p.omega_p));
        let num = p.r * p.c * s + 1.0;
        let den = (p.r * p.l * p.c * s + p.l) * s + p.r;
        let want = p.r_s * hc * num / den;
        let got = loop_gain(&p, s).unwrap();
        assert!((got - want).norm() <= 1e-12 * want.norm());
        assert!(matches!(
            loop_gain(&p, Complex64::new(0.0, 0.0)),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn pole_range_examples() {
        let a = theorem1_predict(&presets::buck_14v_50khz(0.3));
        assert_eq!(a.verdict, HbVerdict::UnstableRangeExists);
        let (lo, hi) = a.unstable_k.unwrap();
        assert!(lo < k_star() && k_star() < hi);
        let p = presets::buck_14v_50khz(0.3);
        assert!(rel(critical_voltage_simplified_at(&p, lo), p.v_s) < 1e-9);
        assert!(rel(critical_voltage_simplified_at(&p, hi), p.v_s) < 1e-9);

        let b = theorem1_predict(&presets::buck_5v_180khz(5655.0));
        assert_eq!(b.verdict, HbVerdict::PoleInsensitive);
        assert!(b.unstable_k.is_none());
    }

    #[test]
    fn verdict_ignores_pole() {
        for k in [0.05, 0.2, 0.38, 0.6, 2.0] {
            let v = theorem1_predict(&presets::buck_14v_50khz(k));
            assert_eq!(v.verdict, HbVerdict::UnstableRangeExists);
        }
    }

    #[test]
    fn verdict_at_threshold() {
        let mut p = presets::buck_14v_50khz(0.3);
        p.v_s = vs_min(&p);
        let t = theorem1_predict(&p);
        assert_eq!(t.verdict, HbVerdict::UnstableRangeExists);
        let (lo, hi) = t.unstable_k.unwrap();
        assert!((hi - lo).abs() < 1e-6);
        assert!((lo - k_star()).abs() < 1e-6);
    }

    #[test]
    fn prediction_bundle() {
        let p = presets::buck_14v_50khz(0.3);
        let h = HbPrediction::predict(&p).unwrap();
        assert!(h.vs_min <= h.vs_star_simplified);
        assert_eq!(h.phi_value, phi(0.3).unwrap());
    }
}
