//! EMG-to-intent decoding, volitional calibration, and the volitional torque
//! component.
//!
//! Intent `u` runs from 1 (maximum plantarflexion) to -1 (maximum
//! dorsiflexion). Under the crate's dorsiflexion-positive torque convention,
//! positive intent therefore produces negative (plantarflexor) torque,
//! shifting the effective equilibrium angle toward plantarflexion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default normalized activation below which both channels read as rest.
pub const DEFAULT_NOISE_FLOOR: f64 = 0.05;

/// Normalized activations above the MVA are recorded up to this cap.
pub const ACTIVATION_RECORD_CAP: f64 = 1.5;

/// How the intent-direction bisector slope is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BisectorRule {
    /// Slope of the angular bisector of the two co-contraction rays.
    Angular,
    /// Compatibility form applying tan/atan to the slope values directly.
    SlopeTangent,
}

/// Parameters found during volitional calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolitionalCalibration {
    /// Maximum voluntary activation of the gastrocnemius, volts.
    pub mva_gas: f64,
    /// Maximum voluntary activation of the tibialis anterior, volts.
    pub mva_ta: f64,
    /// Average co-contraction slope under plantarflexion intent.
    pub m_gas: f64,
    /// Average co-contraction slope under dorsiflexion intent.
    pub m_ta: f64,
    /// Intent-direction bisector slope.
    pub m0: f64,
    /// Normalized-activation rest threshold.
    pub noise_floor: f64,
}

impl VolitionalCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.mva_gas > 0.0) || !(self.mva_ta > 0.0) {
            return Err(Error::InvalidCalibration(format!(
                "MVA levels must be positive, got GAS={} TA={}",
                self.mva_gas, self.mva_ta
            )));
        }
        if !(self.m_ta > 0.0 && self.m0 > self.m_ta && self.m_gas > self.m0) {
            return Err(Error::InvalidCalibration(format!(
                "slope ordering m_gas > m0 > m_ta > 0 violated: {} / {} / {}",
                self.m_gas, self.m0, self.m_ta
            )));
        }
        if !(0.0..1.0).contains(&self.noise_floor) {
            return Err(Error::InvalidCalibration(format!(
                "noise floor must be in [0, 1), got {}",
                self.noise_floor
            )));
        }
        Ok(())
    }
}

/// One decoded intent sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentSample {
    /// Normalized plantarflexor (GAS) activation.
    pub u_p: f64,
    /// Normalized dorsiflexor (TA) activation.
    pub u_d: f64,
    /// Intent in `[-1, 1]`.
    pub u: f64,
}

/// Normalizes a rectified-filtered EMG sample by its MVA level.
///
/// The result is capped at [`ACTIVATION_RECORD_CAP`] for logging; the decoder
/// separately constrains the activation magnitude to 1.
pub fn normalize_emg(emg: f64, mva: f64) -> Result<f64> {
    if !(mva > 0.0) || !mva.is_finite() {
        return Err(Error::CalibrationMissing(format!(
            "MVA level must be positive, got {mva}"
        )));
    }
    if !(emg >= 0.0) || !emg.is_finite() {
        return Err(Error::SignalFault(format!(
            "rectified EMG must be non-negative and finite, got {emg}"
        )));
    }
    Ok((emg / mva).min(ACTIVATION_RECORD_CAP))
}

/// Slope of the angular bisector of the two co-contraction rays in
/// `(u_d, u_p)` space.
pub fn bisector(m_gas: f64, m_ta: f64) -> Result<f64> {
    bisector_with_rule(m_gas, m_ta, BisectorRule::Angular)
}

/// [`bisector`] with an explicit rule, keeping the slope-tangent
/// compatibility form available for comparison.
pub fn bisector_with_rule(m_gas: f64, m_ta: f64, rule: BisectorRule) -> Result<f64> {
    if !(m_ta > 0.0) || !(m_gas >= m_ta) || !m_gas.is_finite() {
        return Err(Error::InvalidCalibration(format!(
            "slopes must satisfy m_gas >= m_ta > 0, got {m_gas} / {m_ta}"
        )));
    }
    Ok(match rule {
        BisectorRule::Angular => (0.5 * (m_gas.atan() + m_ta.atan())).tan(),
        BisectorRule::SlopeTangent => (0.5 * (m_gas.tan() + m_ta.tan())).atan(),
    })
}

/// Decodes normalized activations into a single intent value.
///
/// The co-contraction slope `u_p / u_d` is clamped to `[m_ta, m_gas]`
/// (a zero dorsiflexor activation clamps to `m_gas`), the activation
/// magnitude is constrained to 1, and the sign splits at the bisector.
/// Both channels below the noise floor read as rest (`u = 0`).
pub fn decode_intent(u_p: f64, u_d: f64, cal: &VolitionalCalibration) -> f64 {
    if u_p < cal.noise_floor && u_d < cal.noise_floor {
        return 0.0;
    }
    let slope = if u_d > 0.0 { u_p / u_d } else { f64::INFINITY };
    let m = slope.clamp(cal.m_ta, cal.m_gas);
    let magnitude = (u_p * u_p + u_d * u_d).sqrt().min(1.0);
    if m >= cal.m0 {
        magnitude * (m - cal.m0) / (cal.m_gas - cal.m0)
    } else {
        -magnitude * (m - cal.m0) / (cal.m_ta - cal.m0)
    }
}

/// Maximum voluntary activation from isometric-contraction trial peaks.
pub fn calibrate_mva(trial_peaks: &[f64]) -> Result<f64> {
    if trial_peaks.is_empty() {
        return Err(Error::CalibrationMissing("no MVIC trials provided".into()));
    }
    let max = trial_peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::CalibrationMissing(format!(
            "MVA must be positive, best trial peak was {max}"
        )));
    }
    Ok(max)
}

/// Co-contraction slopes from a dynamic walking calibration.
///
/// `m_gas` averages the slope over samples with `u_p > 0.5` and `u_d < 0.5`;
/// `m_ta` averages over the mirrored condition; `m0` is their bisector.
/// Samples with zero dorsiflexor activation have no finite slope and are
/// skipped.
pub fn calibrate_cocontraction(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let mut gas_sum = 0.0;
    let mut gas_n = 0usize;
    let mut ta_sum = 0.0;
    let mut ta_n = 0usize;
    for &(u_p, u_d) in samples {
        if u_d <= 0.0 {
            continue;
        }
        let m = u_p / u_d;
        if u_p > 0.5 && u_d < 0.5 {
            gas_sum += m;
            gas_n += 1;
        } else if u_p < 0.5 && u_d > 0.5 {
            ta_sum += m;
            ta_n += 1;
        }
    }
    if gas_n == 0 {
        return Err(Error::InsufficientCalibrationData(
            "no plantarflexion-intent samples (u_p > 0.5, u_d < 0.5)".into(),
        ));
    }
    if ta_n == 0 {
        return Err(Error::InsufficientCalibrationData(
            "no dorsiflexion-intent samples (u_p < 0.5, u_d > 0.5)".into(),
        ));
    }
    let m_gas = gas_sum / gas_n as f64;
    let m_ta = ta_sum / ta_n as f64;
    if !(m_gas > m_ta) {
        return Err(Error::InvalidCalibration(format!(
            "calibrated slopes not separated: m_gas={m_gas} <= m_ta={m_ta}"
        )));
    }
    let m0 = bisector(m_gas, m_ta)?;
    Ok((m_gas, m_ta, m0))
}

/// Volitional torque: `-K * gamma * u` with `gamma = theta_max - |theta_eq|`.
///
/// Combined with the impedance law this shifts the effective equilibrium to
/// `theta_eq - gamma * u`, which stays within the range of motion for any
/// `|u| <= 1`.
pub fn volitional_torque(u: f64, stiffness: f64, theta_eq: f64, theta_max: f64) -> Result<f64> {
    if theta_eq.abs() > theta_max {
        return Err(Error::RomViolation {
            theta_eq,
            theta_max,
        });
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let gamma = theta_max - theta_eq.abs();
    Ok(-stiffness * gamma * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn test_cal() -> VolitionalCalibration {
        VolitionalCalibration {
            mva_gas: 1.0,
            mva_ta: 1.0,
            m_gas: 4.0,
            m_ta: 0.25,
            m0: 1.0,
            noise_floor: 0.05,
        }
    }

    #[test]
    fn normalize_basic_and_capped() {
        assert_eq!(normalize_emg(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(normalize_emg(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(normalize_emg(1.2, 1.0).unwrap(), 1.2);
        assert_eq!(normalize_emg(2.0, 1.0).unwrap(), 1.5); // record cap
        assert!(matches!(
            normalize_emg(0.5, 0.0),
            Err(Error::CalibrationMissing(_))
        ));
    }

    #[test]
    fn decode_rest_is_zero() {
        let cal = test_cal();
        assert_eq!(decode_intent(0.0, 0.0, &cal), 0.0);
        assert_eq!(decode_intent(0.04, 0.04, &cal), 0.0);
    }

    #[test]
    fn decode_pure_plantarflexion_saturates() {
        let cal = test_cal();
        assert_eq!(decode_intent(1.0, 0.0, &cal), 1.0);
    }

    #[test]
    fn decode_mixed_activation_example() {
        let cal = test_cal();
        let u = decode_intent(0.6, 0.3, &cal);
        // straight-line evaluation: m = 2, magnitude = sqrt(0.45)
        let expect = 0.45f64.sqrt() * (2.0 - 1.0) / (4.0 - 1.0);
        assert_relative_eq!(u, expect, max_relative = 1e-15);
        assert_relative_eq!(u, 0.2236, max_relative = 1e-3);
    }

    #[test]
    fn decode_magnitude_capped_above_mva() {
        let cal = test_cal();
        // over-unity activations: magnitude term still constrained to 1
        let u = decode_intent(1.4, 0.0, &cal);
        assert_eq!(u, 1.0);
    }

    #[test]
    fn bisector_reciprocal_slopes_give_unity() {
        // atan(4) + atan(1/4) = 90 degrees, so the bisector ray is at 45
        let m0 = bisector(4.0, 0.25).unwrap();
        assert_relative_eq!(m0, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bisector_of_identical_slopes_is_identity() {
        for m in [0.5, 1.0, 2.5] {
            assert_relative_eq!(bisector(m, m).unwrap(), m, max_relative = 1e-12);
        }
    }

    #[test]
    fn bisector_rejects_bad_ordering() {
        assert!(bisector(0.25, 4.0).is_err());
        assert!(bisector(4.0, 0.0).is_err());
        assert!(bisector(4.0, -1.0).is_err());
    }

    #[test]
    fn bisector_rules_differ_in_general() {
        let angular = bisector_with_rule(0.9, 0.3, BisectorRule::Angular).unwrap();
        let literal = bisector_with_rule(0.9, 0.3, BisectorRule::SlopeTangent).unwrap();
        assert!((angular - literal).abs() > 1e-3);
    }

    #[test]
    fn mva_is_max_over_trials() {
        assert_eq!(calibrate_mva(&[0.8, 1.0, 0.9, 0.95, 0.85]).unwrap(), 1.0);
        assert_eq!(calibrate_mva(&[0.7]).unwrap(), 0.7);
        assert!(matches!(
            calibrate_mva(&[]),
            Err(Error::CalibrationMissing(_))
        ));
        assert!(matches!(
            calibrate_mva(&[0.0, 0.0]),
            Err(Error::CalibrationMissing(_))
        ));
    }

    #[test]
    fn cocontraction_from_constant_segments() {
        let mut samples = vec![(0.8, 0.2); 50];
        samples.extend(vec![(0.2, 0.8); 50]);
        let (m_gas, m_ta, m0) = calibrate_cocontraction(&samples).unwrap();
        assert_relative_eq!(m_gas, 4.0, max_relative = 1e-12);
        assert_relative_eq!(m_ta, 0.25, max_relative = 1e-12);
        assert_relative_eq!(m0, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cocontraction_mean_invariant_under_duplication() {
        let mut samples = vec![(0.9, 0.1), (0.7, 0.3), (0.1, 0.9), (0.3, 0.7)];
        let once = calibrate_cocontraction(&samples).unwrap();
        let copy = samples.clone();
        samples.extend(copy);
        let twice = calibrate_cocontraction(&samples).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn cocontraction_requires_both_conditions() {
        let samples = vec![(0.8, 0.2); 50];
        assert!(matches!(
            calibrate_cocontraction(&samples),
            Err(Error::InsufficientCalibrationData(_))
        ));
    }

    #[test]
    fn volitional_torque_values() {
        assert_eq!(volitional_torque(0.0, 0.2, 10.0, 15.0).unwrap(), 0.0);
        assert_relative_eq!(
            volitional_torque(1.0, 0.09, 0.0, 15.0).unwrap(),
            -1.35,
            max_relative = 1e-15
        );
        assert_eq!(volitional_torque(0.7, 0.2, 15.0, 15.0).unwrap(), 0.0);
        assert_eq!(volitional_torque(-0.7, 0.2, -15.0, 15.0).unwrap(), 0.0);
        assert!(matches!(
            volitional_torque(0.5, 0.2, 16.0, 15.0),
            Err(Error::RomViolation { .. })
        ));
    }

    proptest! {
        #[test]
        fn decoded_intent_is_bounded(
            u_p in 0.0f64..1.5,
            u_d in 0.0f64..1.5,
            m_gas in 1.5f64..20.0,
            m_ta in 0.05f64..0.9,
        ) {
            let m0 = bisector(m_gas, m_ta).unwrap();
            let cal = VolitionalCalibration {
                mva_gas: 1.0,
                mva_ta: 1.0,
                m_gas,
                m_ta,
                m0,
                noise_floor: 0.05,
            };
            let u = decode_intent(u_p, u_d, &cal);
            prop_assert!(u.abs() <= 1.0 + 1e-12, "u = {u}");
        }

        #[test]
        fn decoded_sign_follows_bisector(
            u_p in 0.0f64..1.5,
            u_d in 0.0f64..1.5,
        ) {
            let cal = test_cal();
            prop_assume!(u_p >= cal.noise_floor || u_d >= cal.noise_floor);
            let slope = if u_d > 0.0 { u_p / u_d } else { f64::INFINITY };
            let m = slope.clamp(cal.m_ta, cal.m_gas);
            let u = decode_intent(u_p, u_d, &cal);
            if m >= cal.m0 {
                prop_assert!(u >= 0.0);
            } else {
                prop_assert!(u <= 0.0);
            }
        }

        #[test]
        fn intent_monotone_in_plantarflexor_activation(
            u_d in 0.05f64..1.0,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let cal = test_cal();
            // keep the slope inside the clamp range where monotonicity holds
            let lo = cal.m_ta * u_d * 1.001;
            let hi = cal.m_gas * u_d * 0.999;
            let (pa, pb) = (lo + a * (hi - lo), lo + b * (hi - lo));
            let (pa, pb) = if pa <= pb { (pa, pb) } else { (pb, pa) };
            let ua = decode_intent(pa, u_d, &cal);
            let ub = decode_intent(pb, u_d, &cal);
            prop_assert!(ub >= ua - 1e-12);
        }

        #[test]
        fn effective_equilibrium_stays_in_rom(
            u in -1.0f64..1.0,
            theta_eq in -15.0f64..15.0,
            stiffness in 0.0f64..0.5,
        ) {
            let tau = volitional_torque(u, stiffness, theta_eq, 15.0).unwrap();
            // tau = -K * gamma * u, so the equilibrium shift is gamma * u
            let gamma = 15.0 - theta_eq.abs();
            let effective = theta_eq - gamma * u;
            prop_assert!(effective.abs() <= 15.0 + 1e-12);
            if stiffness > 0.0 && u != 0.0 {
                prop_assert!((tau + stiffness * gamma * u).abs() < 1e-12);
            }
        }
    }
}
