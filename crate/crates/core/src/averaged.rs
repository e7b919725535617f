//! State-space averaged model, linearized: `ẋ̂ = (A1 + (B1 − B2) u C / (V_h − V_l)) x̂`.
//!
//! Only the system matrix and its poles are built; there is no averaged
//! input matrix or transfer function.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Input, SwitchedModel};
use crate::numerics::eigenvalues;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedJacobian {
    pub a_avg: DMatrix<f64>,
    pub poles: Vec<Complex64>,
}

impl AveragedJacobian {
    pub fn max_real_part(&self) -> f64 {
        self.poles
            .iter()
            .map(|p| p.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Complex poles in the open right half-plane.
    pub fn unstable_complex_poles(&self) -> Vec<Complex64> {
        self.poles
            .iter()
            .copied()
            .filter(|p| p.re > 0.0 && p.im != 0.0)
            .collect()
    }
}

/// Requires `A1 == A2` (buck-type stage structure).
pub fn averaged_jacobian(model: &SwitchedModel, u: Input) -> Result<AveragedJacobian> {
    if model.a1 != model.a2 {
        return Err(Error::UnsupportedTopology(
            "averaged Jacobian needs identical stage matrices A1 = A2".into(),
        ));
    }
    let jump = (&model.b1 - &model.b2) * u.to_vector();
    let a_avg = &model.a1 + jump * &model.c_row / model.ramp.amplitude();
    let poles = eigenvalues(&a_avg)?;
    Ok(AveragedJacobian { a_avg, poles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_buck_model, presets};
    use nalgebra::RowDVector;

    #[test]
    fn zero_c_leaves_a1() {
        let p = presets::buck_14v_50khz(0.3);
        let mut m = build_buck_model(&p).unwrap();
        m.c_row = RowDVector::zeros(4);
        let j = averaged_jacobian(&m, p.input()).unwrap();
        assert_eq!(j.a_avg, m.a1);
        let mut want = eigenvalues(&m.a1).unwrap();
        let mut got = j.poles.clone();
        let key = |z: &Complex64| (z.re, z.im);
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(want, got);
    }

    #[test]
    fn correction_is_rank_one() {
        let p = presets::buck_14v_50khz(0.5);
        let m = build_buck_model(&p).unwrap();
        let j = averaged_jacobian(&m, p.input()).unwrap();
        let diff = &j.a_avg - &m.a1;
        let sv = diff.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[0] > 0.0);
        assert!(sv[1] <= 1e-12 * sv[0]);
    }

    #[test]
    fn poles_conjugate_symmetric() {
        let p = presets::buck_5v_180khz(5655.0);
        let m = build_buck_model(&p).unwrap();
        let j = averaged_jacobian(&m, p.input()).unwrap();
        for z in &j.poles {
            assert!(j
                .poles
                .iter()
                .any(|w| (w - z.conj()).norm() <= 1e-9 * z.norm()));
        }
    }

    #[test]
    fn distinct_stage_matrices_rejected() {
        let p = presets::buck_14v_50khz(0.3);
        let mut m = build_buck_model(&p).unwrap();
        m.a2[(0, 0)] += 1.0;
        assert!(matches!(
            averaged_jacobian(&m, p.input()),
            Err(Error::UnsupportedTopology(_))
        ));
    }
}
