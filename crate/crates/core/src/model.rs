//! Converter parameters and the switched state-space model built from them.
//!
//! The model has two affine stages, `ẋ = A1 x + B1 u` (switch on) and
//! `ẋ = A2 x + B2 u` (switch off), with input `u = (v_s, v_r)`, comparator
//! signal `y = C x + D u` and output voltage `v_o = E_i x`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One buck converter under average current control, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// Source voltage (V).
    pub v_s: f64,
    /// Current reference (V).
    pub v_r: f64,
    /// Switching frequency (Hz).
    pub f_s: f64,
    /// Inductance (H).
    pub l: f64,
    /// Output capacitance (F).
    pub c: f64,
    /// Capacitor ESR (Ω).
    pub r_c: f64,
    /// Load resistance (Ω).
    pub r: f64,
    /// Current-sense resistance (Ω).
    pub r_s: f64,
    /// Ramp valley (V).
    pub v_l: f64,
    /// Ramp peak (V).
    pub v_h: f64,
    /// Compensator gain.
    pub k_c: f64,
    /// Compensator zero (rad/s).
    pub omega_z: f64,
    /// Compensator pole (rad/s).
    pub omega_p: f64,
}

impl ConverterParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_s", self.v_s),
            ("v_r", self.v_r),
            ("f_s", self.f_s),
            ("L", self.l),
            ("C", self.c),
            ("R_c", self.r_c),
            ("R", self.r),
            ("R_s", self.r_s),
            ("V_l", self.v_l),
            ("V_h", self.v_h),
            ("K_c", self.k_c),
            ("omega_z", self.omega_z),
            ("omega_p", self.omega_p),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite ({v})")));
        }
        let positive = [
            ("f_s", self.f_s),
            ("L", self.l),
            ("C", self.c),
            ("R", self.r),
            ("R_s", self.r_s),
            ("omega_z", self.omega_z),
            ("omega_p", self.omega_p),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
        }
        if self.v_h <= self.v_l {
            return Err(Error::InvalidParams(format!(
                "ramp needs V_h > V_l, got V_l={} V_h={}",
                self.v_l, self.v_h
            )));
        }
        if self.r_c < 0.0 {
            return Err(Error::InvalidParams(format!(
                "R_c must be >= 0, got {}",
                self.r_c
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_s
    }

    pub fn omega_s(&self) -> f64 {
        2.0 * PI * self.f_s
    }

    /// Compensator pole as a fraction of the switching frequency.
    pub fn pole_ratio(&self) -> f64 {
        self.omega_p / self.omega_s()
    }

    pub fn with_pole_ratio(mut self, k: f64) -> Self {
        self.omega_p = k * self.omega_s();
        self
    }

    pub fn ramp(&self) -> RampSignal {
        RampSignal {
            v_l: self.v_l,
            v_h: self.v_h,
            period: self.period(),
        }
    }

    pub fn input(&self) -> Input {
        Input {
            v_s: self.v_s,
            v_r: self.v_r,
        }
    }
}

/// Reference configurations.
pub mod presets {
    use super::ConverterParams;

    /// 14 V → 5 V buck at 50 kHz (46.1 µH, 380 µF with 20 mΩ ESR, 1 Ω load),
    /// with the compensator pole at `pole_ratio · ω_s`.
    pub fn buck_14v_50khz(pole_ratio: f64) -> ConverterParams {
        ConverterParams {
            v_s: 14.0,
            v_r: 0.5,
            f_s: 50e3,
            l: 46.1e-6,
            c: 380e-6,
            r_c: 0.02,
            r: 1.0,
            r_s: 0.1,
            v_l: 0.0,
            v_h: 1.0,
            k_c: 75506.0,
            omega_z: 5652.9,
            omega_p: 0.0,
        }
        .with_pole_ratio(pole_ratio)
    }

    /// 5 V → 2 V buck at 180 kHz (13 µH, 750 µF with 5 mΩ ESR, 0.43 Ω load),
    /// compensator pole in rad/s.
    pub fn buck_5v_180khz(omega_p: f64) -> ConverterParams {
        ConverterParams {
            v_s: 5.0,
            v_r: 0.279,
            f_s: 180e3,
            l: 13e-6,
            c: 750e-6,
            r_c: 5e-3,
            r: 0.43,
            r_s: 0.06,
            v_l: 0.0,
            v_h: 2.7,
            k_c: 98000.0,
            omega_z: 6723.0,
            omega_p,
        }
    }
}

/// Input pair `u = (v_s, v_r)`, held constant within a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub v_s: f64,
    pub v_r: f64,
}

impl Input {
    pub fn new(v_s: f64, v_r: f64) -> Self {
        Self { v_s, v_r }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![self.v_s, self.v_r])
    }
}

/// Sawtooth rising from `v_l` at each clock edge to `v_h` just before the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSignal {
    pub v_l: f64,
    pub v_h: f64,
    pub period: f64,
}

impl RampSignal {
    /// `h(t)`. At `t = nT` the value is `v_l`; the left limit `v_h` is never returned.
    pub fn value(&self, t: f64) -> f64 {
        let phase = t / self.period;
        let mut frac = phase - phase.floor();
        if frac >= 1.0 {
            frac = 0.0;
        }
        self.v_l + (self.v_h - self.v_l) * frac
    }

    /// `h` within a single cycle, `t ∈ [0, T]`, with `h(T) = v_h` (the left limit).
    pub fn value_in_cycle(&self, t: f64) -> f64 {
        self.v_l + (self.v_h - self.v_l) * (t / self.period)
    }

    pub fn slope(&self) -> f64 {
        (self.v_h - self.v_l) / self.period
    }

    pub fn amplitude(&self) -> f64 {
        self.v_h - self.v_l
    }
}

/// The complete two-stage switched model.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedModel {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c_row: RowDVector<f64>,
    pub d_row: RowDVector<f64>,
    pub e1: RowDVector<f64>,
    pub e2: RowDVector<f64>,
    pub ramp: RampSignal,
    pub state_labels: Vec<String>,
    /// Characteristic magnitude of each state coordinate. Used to scale
    /// residuals, finite-difference steps and perturbations.
    pub state_scale: DVector<f64>,
}

impl SwitchedModel {
    /// Checks that all blocks agree on one state dimension.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a1: DMatrix<f64>,
        a2: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        c_row: RowDVector<f64>,
        d_row: RowDVector<f64>,
        e1: RowDVector<f64>,
        e2: RowDVector<f64>,
        ramp: RampSignal,
    ) -> Result<Self> {
        let n = a1.nrows();
        let ok = n >= 1
            && a1.shape() == (n, n)
            && a2.shape() == (n, n)
            && b1.shape() == (n, 2)
            && b2.shape() == (n, 2)
            && c_row.len() == n
            && d_row.len() == 2
            && e1.len() == n
            && e2.len() == n;
        if !ok {
            return Err(Error::Dimension(format!(
                "inconsistent switched model blocks for N={n}: A1 {:?}, A2 {:?}, B1 {:?}, B2 {:?}, C {}, D {}, E1 {}, E2 {}",
                a1.shape(),
                a2.shape(),
                b1.shape(),
                b2.shape(),
                c_row.len(),
                d_row.len(),
                e1.len(),
                e2.len()
            )));
        }
        Ok(Self {
            a1,
            a2,
            b1,
            b2,
            c_row,
            d_row,
            e1,
            e2,
            ramp,
            state_labels: (0..n).map(|i| format!("x{i}")).collect(),
            state_scale: DVector::from_element(n, 1.0),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.dim());
        self.state_labels = labels;
        self
    }

    pub fn with_scale(mut self, scale: DVector<f64>) -> Self {
        assert_eq!(scale.len(), self.dim());
        self.state_scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }

    pub fn period(&self) -> f64 {
        self.ramp.period
    }

    /// Compensator output `y = C x + D u`.
    pub fn output(&self, x: &DVector<f64>, u: Input) -> f64 {
        (&self.c_row * x)[0] + (&self.d_row * u.to_vector())[0]
    }

    /// Output voltage with the averaged row `E = (E1 + E2)/2`.
    pub fn e_avg(&self) -> RowDVector<f64> {
        (&self.e1 + &self.e2) * 0.5
    }

    /// Forcing `B1 u` of the on stage.
    pub fn forcing_on(&self, u: Input) -> DVector<f64> {
        &self.b1 * u.to_vector()
    }

    /// Forcing `B2 u` of the off stage.
    pub fn forcing_off(&self, u: Input) -> DVector<f64> {
        &self.b2 * u.to_vector()
    }

    /// Divergence check: coordinate-wise magnitude relative to the state scale.
    pub(crate) fn scaled_norm(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(self.state_scale.iter())
            .map(|(v, s)| (v / s).abs())
            .fold(0.0, f64::max)
    }
}

/// Buck converter with the two-state compensator, state `(i_L, v_C, v_e1, v_e2)`.
pub fn build_buck_model(p: &ConverterParams) -> Result<SwitchedModel> {
    p.validate()?;
    let rr = p.r + p.r_c;
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.r * p.r_c / (rr * p.l),
            -p.r / (rr * p.l),
            0.0,
            0.0,
            p.r / (rr * p.c),
            -1.0 / (rr * p.c),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            1.0,
            -p.omega_p * p.r_s,
            0.0,
            0.0,
            -p.omega_p,
        ],
    );
    let b1 = DMatrix::from_row_slice(4, 2, &[1.0 / p.l, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p.omega_p]);
    let mut b2 = b1.clone();
    b2[(0, 0)] = 0.0;
    let c_row = RowDVector::from_vec(vec![0.0, 0.0, p.k_c, p.k_c / p.omega_z]);
    let d_row = RowDVector::from_vec(vec![0.0, 1.0]);
    let e = RowDVector::from_vec(vec![p.r * p.r_c / rr, p.r / rr, 0.0, 0.0]);

    let ramp_amp = p.v_h - p.v_l;
    let scale = DVector::from_vec(vec![
        p.v_s / p.r,
        p.v_s,
        ramp_amp / p.k_c,
        ramp_amp * p.omega_z / p.k_c,
    ]);
    let labels = ["i_L_A", "v_C_V", "v_e1", "v_e2"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    Ok(
        SwitchedModel::new(a.clone(), a, b1, b2, c_row, d_row, e.clone(), e, p.ramp())?
            .with_labels(labels)
            .with_scale(scale),
    )
}

/// `K_c (1 + s/ω_z) / (s (1 + s/ω_p))`.
pub fn compensator_response(p: &ConverterParams, s: Complex64) -> Result<Complex64> {
    let tiny = 1e-12 * p.omega_p.max(p.omega_z);
    if s.norm() <= tiny {
        return Err(Error::Pole("compensator integrator pole at s = 0".into()));
    }
    let lag = Complex64::new(1.0, 0.0) + s / p.omega_p;
    if lag.norm() <= 1e-12 {
        return Err(Error::Pole(format!(
            "compensator pole at s = -{}",
            p.omega_p
        )));
    }
    Ok(p.k_c * (Complex64::new(1.0, 0.0) + s / p.omega_z) / (s * lag))
}
