//! Controller composition and the fixed-rate control step: passive benchmark,
//! phase-variable impedance control, and its hybrid volitional extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::{
    pvic_torque, ImpedanceProfile, PASSIVE_DAMPING, PASSIVE_EQUILIBRIUM, PASSIVE_STIFFNESS,
};
use crate::phase::{phase_variable, scale_shift, PhaseCalibration, PhaseMap, PhaseTracker};
use crate::signals::{ChannelFilters, SensorFrame};
use crate::volitional::{decode_intent, normalize_emg, volitional_torque, VolitionalCalibration};

/// Default commanded-torque safety limit, Nm/kg.
pub const DEFAULT_TORQUE_LIMIT: f64 = 2.5;

/// How long a signal fault holds the last command before dropping to the
/// zero-torque safe state, seconds.
pub const FAULT_HOLD_S: f64 = 0.05;

/// Which controller runs the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Constant impedance mimicking a passive prosthesis.
    Passive,
    /// Phase-variable impedance control.
    Pvic,
    /// Hybrid volitional control on top of the phase-variable base.
    PviHvc,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ControllerKind::Passive => "passive",
            ControllerKind::Pvic => "pvic",
            ControllerKind::PviHvc => "pvi_hvc",
        };
        f.write_str(name)
    }
}

/// Everything a controller needs to run, validated at construction.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub profile: ImpedanceProfile,
    /// Phase calibration and map; required unless passive.
    pub phase: Option<(PhaseCalibration, PhaseMap)>,
    /// Volitional calibration; required for the hybrid controller.
    pub volitional: Option<VolitionalCalibration>,
    /// Body mass for absolute-torque reporting, kg.
    pub body_mass_kg: f64,
    /// Commanded-torque clamp, Nm/kg.
    pub torque_limit: f64,
    pub rate_hz: f64,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate_hz must be positive, got {}",
                self.rate_hz
            )));
        }
        if !(self.torque_limit > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "torque_limit must be positive, got {}",
                self.torque_limit
            )));
        }
        if !(self.body_mass_kg > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "body_mass_kg must be positive, got {}",
                self.body_mass_kg
            )));
        }
        let report = self.profile.validate();
        if let Some(first) = report.violations.first() {
            return Err(Error::InvalidCalibration(format!(
                "impedance profile invalid: {first}"
            )));
        }
        match self.kind {
            ControllerKind::Passive => {}
            ControllerKind::Pvic | ControllerKind::PviHvc => {
                let (cal, _) = self.phase.as_ref().ok_or_else(|| {
                    Error::CalibrationMissing("phase calibration required".into())
                })?;
                cal.validate()?;
            }
        }
        if self.kind == ControllerKind::PviHvc {
            let vol = self.volitional.as_ref().ok_or_else(|| {
                Error::CalibrationMissing("volitional calibration required for PVI-HVC".into())
            })?;
            vol.validate()?;
        }
        Ok(())
    }
}

/// Health of the control loop at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultState {
    /// Normal operation.
    Ok,
    /// Signal fault: holding the last good command.
    Held,
    /// Signal fault persisted past the hold window: zero-torque safe state.
    Safe,
}

/// Controller output for one step, with the full decomposition for logging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueCommand {
    /// Commanded torque after the safety clamp, Nm/kg.
    pub tau_total: f64,
    /// Impedance-law contribution, Nm/kg.
    pub tau_pvic: f64,
    /// Volitional contribution, Nm/kg (zero unless hybrid).
    pub tau_vc: f64,
    /// Estimated gait percentage.
    pub s_est: f64,
    /// Wrapped phase variable, degrees.
    pub phi: f64,
    /// Equilibrium angle at the estimate, degrees.
    pub theta_eq: f64,
    /// Stiffness at the estimate, Nm/deg/kg.
    pub stiffness: f64,
    /// Damping at the estimate, Nms/deg/kg.
    pub damping: f64,
    /// Decoded volitional intent.
    pub u: f64,
    /// True when the safety clamp limited the command.
    pub clamped: bool,
    pub fault: FaultState,
}

impl TorqueCommand {
    fn zero_safe() -> Self {
        Self {
            tau_total: 0.0,
            tau_pvic: 0.0,
            tau_vc: 0.0,
            s_est: 0.0,
            phi: 0.0,
            theta_eq: 0.0,
            stiffness: 0.0,
            damping: 0.0,
            u: 0.0,
            clamped: false,
            fault: FaultState::Safe,
        }
    }
}

/// Clamps a commanded torque to the symmetric safety limit.
pub fn clamp_command(tau: f64, limit: f64) -> f64 {
    tau.min(limit).max(-limit)
}

/// Streaming controller: owns the channel filters, the phase tracker, and the
/// fault state. One instance per loop.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    filters: ChannelFilters,
    tracker: PhaseTracker,
    last_good: Option<TorqueCommand>,
    fault_run: u32,
    hold_limit: u32,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        let filters = ChannelFilters::new(cfg.rate_hz)?;
        let hold_limit = (FAULT_HOLD_S * cfg.rate_hz).round() as u32;
        Ok(Self {
            cfg,
            filters,
            tracker: PhaseTracker::new(),
            last_good: None,
            fault_run: 0,
            hold_limit,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// Runs one control step at the fixed rate.
    ///
    /// A faulty frame (any non-finite channel) holds the last command for up
    /// to [`FAULT_HOLD_S`], then falls to the zero-torque safe state until a
    /// valid frame arrives.
    pub fn step(&mut self, frame: &SensorFrame) -> TorqueCommand {
        match self.try_step(frame) {
            Ok(cmd) => {
                self.fault_run = 0;
                self.last_good = Some(cmd);
                cmd
            }
            Err(_) => {
                self.fault_run = self.fault_run.saturating_add(1);
                match self.last_good {
                    Some(mut held) if self.fault_run <= self.hold_limit => {
                        held.fault = FaultState::Held;
                        held
                    }
                    _ => TorqueCommand::zero_safe(),
                }
            }
        }
    }

    fn try_step(&mut self, frame: &SensorFrame) -> Result<TorqueCommand> {
        let cond = self.filters.apply(frame)?;

        let (s_est, phi, point) = match self.cfg.kind {
            ControllerKind::Passive => (
                0.0,
                0.0,
                crate::impedance::ImpedancePoint {
                    theta_eq: PASSIVE_EQUILIBRIUM,
                    stiffness: PASSIVE_STIFFNESS,
                    damping: PASSIVE_DAMPING,
                },
            ),
            ControllerKind::Pvic | ControllerKind::PviHvc => {
                let (cal, map) = self.cfg.phase.as_ref().expect("validated at construction");
                let (x, y) = scale_shift(cond.theta_tib, cond.theta_dot_tib, cal);
                let phi = phase_variable(x, y)?;
                let s_est = self.tracker.step(map, phi);
                (s_est, phi, self.cfg.profile.eval(s_est))
            }
        };

        let tau_pvic = pvic_torque(
            cond.theta_ankle,
            cond.theta_dot_ankle,
            point.theta_eq,
            point.stiffness,
            point.damping,
        );

        let (u, tau_vc) = if self.cfg.kind == ControllerKind::PviHvc {
            let vol = self
                .cfg
                .volitional
                .as_ref()
                .expect("validated at construction");
            let u_p = normalize_emg(cond.emg_gas, vol.mva_gas)?;
            let u_d = normalize_emg(cond.emg_ta, vol.mva_ta)?;
            let u = decode_intent(u_p, u_d, vol);
            let tau_vc = volitional_torque(u, point.stiffness, point.theta_eq, self.cfg.profile.theta_max)?;
            (u, tau_vc)
        } else {
            (0.0, 0.0)
        };

        let raw = tau_pvic + tau_vc;
        let tau_total = clamp_command(raw, self.cfg.torque_limit);
        Ok(TorqueCommand {
            tau_total,
            tau_pvic,
            tau_vc,
            s_est,
            phi,
            theta_eq: point.theta_eq,
            stiffness: point.stiffness,
            damping: point.damping,
            u,
            clamped: tau_total != raw,
            fault: FaultState::Ok,
        })
    }
}
