//! JSON run configuration.

use std::path::Path;

use acc_core::ConverterParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Converter description with SI-suffixed field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterConfig {
    pub v_s_v: f64,
    pub v_r_v: f64,
    pub f_s_hz: f64,
    #[serde(rename = "L_h")]
    pub l_h: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "R_c_ohm")]
    pub r_c_ohm: f64,
    #[serde(rename = "R_ohm")]
    pub r_ohm: f64,
    #[serde(rename = "R_s_ohm")]
    pub r_s_ohm: f64,
    #[serde(rename = "V_l_v")]
    pub v_l_v: f64,
    #[serde(rename = "V_h_v")]
    pub v_h_v: f64,
    #[serde(rename = "K_c")]
    pub k_c: f64,
    pub omega_z_rad_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p_over_omega_s: Option<f64>,
}

impl ConverterConfig {
    pub fn from_params(p: &ConverterParams) -> Self {
        ConverterConfig {
            v_s_v: p.v_s,
            v_r_v: p.v_r,
            f_s_hz: p.f_s,
            l_h: p.l,
            c_f: p.c,
            r_c_ohm: p.r_c,
            r_ohm: p.r,
            r_s_ohm: p.r_s,
            v_l_v: p.v_l,
            v_h_v: p.v_h,
            k_c: p.k_c,
            omega_z_rad_s: p.omega_z,
            omega_p_rad_s: Some(p.omega_p),
            omega_p_over_omega_s: None,
        }
    }

    pub fn to_params(&self) -> CliResult<ConverterParams> {
        let omega_s = 2.0 * std::f64::consts::PI * self.f_s_hz;
        let omega_p = match (self.omega_p_rad_s, self.omega_p_over_omega_s) {
            (Some(w), None) => w,
            (None, Some(k)) => k * omega_s,
            _ => {
                return Err(CliError::Config(
                    "exactly one of omega_p_rad_s or omega_p_over_omega_s must be given".into(),
                ))
            }
        };
        let p = ConverterParams {
            v_s: self.v_s_v,
            v_r: self.v_r_v,
            f_s: self.f_s_hz,
            l: self.l_h,
            c: self.c_f,
            r_c: self.r_c_ohm,
            r: self.r_ohm,
            r_s: self.r_s_ohm,
            v_l: self.v_l_v,
            v_h: self.v_h_v,
            k_c: self.k_c,
            omega_z: self.omega_z_rad_s,
            omega_p,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Seeded additive perturbation: `x_i += fraction · scale_i · ξ_i`, `ξ_i ~ U(−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub fraction: f64,
    pub seed: u64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            fraction: 0.01,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Fixed point of the period-1 orbit.
    Orbit,
    /// Averaged-model equilibrium.
    Equilibrium,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    pub cycles: usize,
    pub samples_per_cycle: usize,
    pub initial: InitialState,
    pub perturbation: Option<Perturbation>,
    /// Relative tolerance for period detection.
    pub period_tol: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            cycles: 200,
            samples_per_cycle: 32,
            initial: InitialState::Orbit,
            perturbation: None,
            period_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitOptions {
    /// Orbit length in clock periods (1 or 2).
    pub period_multiple: usize,
    pub samples_per_cycle: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            period_multiple: 1,
            samples_per_cycle: 64,
            max_iter: 50,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    /// Width of the band around the unit circle treated as marginal.
    pub tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            tol: acc_core::sampled_data::DEFAULT_STABILITY_TOL,
        }
    }
}

/// Pole sweep over `k = ω_p/ω_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    /// Target bracket width in `k` for refined boundaries.
    pub boundary_width: f64,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            k_min: 0.14,
            k_max: 0.81,
            points: 68,
            boundary_width: 1e-4,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfChoice {
    ControlToOutput,
    Audio,
    Both,
}

/// Frequency grid, log-spaced, as fractions of the Nyquist frequency `ω_s/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfOptions {
    pub which: TfChoice,
    pub min_frac_nyquist: f64,
    pub max_frac_nyquist: f64,
    pub points: usize,
}

impl Default for TfOptions {
    fn default() -> Self {
        TfOptions {
            which: TfChoice::Both,
            min_frac_nyquist: 1e-3,
            max_frac_nyquist: 0.99,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub converter: ConverterConfig,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub orbit: OrbitOptions,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub tf: TfOptions,
}

impl RunConfig {
    pub fn new(converter: ConverterConfig) -> Self {
        RunConfig {
            converter,
            simulate: SimulateOptions::default(),
            orbit: OrbitOptions::default(),
            stability: StabilityOptions::default(),
            sweep: SweepOptions::default(),
            tf: TfOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> CliResult<ConverterParams> {
        self.converter.to_params()
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        let bad = |msg: String| Err(CliError::Config(msg));
        let s = &self.simulate;
        if s.cycles == 0 {
            return bad("simulate.cycles must be >= 1".into());
        }
        if !(s.period_tol > 0.0) {
            return bad(format!(
                "simulate.period_tol must be > 0, got {}",
                s.period_tol
            ));
        }
        if let Some(pert) = s.perturbation {
            if !(pert.fraction >= 0.0) || !pert.fraction.is_finite() {
                return bad(format!(
                    "perturbation.fraction must be >= 0, got {}",
                    pert.fraction
                ));
            }
        }
        let o = &self.orbit;
        if !(1..=2).contains(&o.period_multiple) {
            return bad(format!(
                "orbit.period_multiple must be 1 or 2, got {}",
                o.period_multiple
            ));
        }
        if !(o.tol > 0.0) || o.max_iter == 0 {
            return bad("orbit.tol must be > 0 and orbit.max_iter >= 1".into());
        }
        if !(self.stability.tol > 0.0) {
            return bad(format!(
                "stability.tol must be > 0, got {}",
                self.stability.tol
            ));
        }
        let w = &self.sweep;
        if !(w.k_min > 0.0 && w.k_max > w.k_min) {
            return bad(format!(
                "sweep range must satisfy 0 < k_min < k_max, got [{}, {}]",
                w.k_min, w.k_max
            ));
        }
        if w.points < 2 {
            return bad(format!("sweep.points must be >= 2, got {}", w.points));
        }
        if !(w.boundary_width > 0.0) {
            return bad(format!(
                "sweep.boundary_width must be > 0, got {}",
                w.boundary_width
            ));
        }
        let t = &self.tf;
        if !(t.min_frac_nyquist > 0.0
            && t.max_frac_nyquist > t.min_frac_nyquist
            && t.max_frac_nyquist < 1.0)
        {
            return bad(format!(
                "tf range must satisfy 0 < min < max < 1, got [{}, {}]",
                t.min_frac_nyquist, t.max_frac_nyquist
            ));
        }
        if t.points < 2 {
            return bad(format!("tf.points must be >= 2, got {}", t.points));
        }
        Ok(())
    }
}
