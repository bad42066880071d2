//! Phase-variable impedance control for a robotic transtibial ankle, driven
//! by global tibia kinematics, with a hybrid volitional (EMG) extension.
//!
//! The crate covers the full desk-scale loop:
//!
//! - [`signals`]: stream conditioning, heel-strike detection, stride
//!   segmentation, ground-truth gait percentage
//! - [`phase`]: phase-portrait calibration (critical-point centering), the
//!   phase variable, and the monotonic phase-to-gait-percentage map
//! - [`impedance`]: gait-indexed impedance schedules and the torque law
//! - [`volitional`]: EMG normalization, intent decoding, volitional torque
//! - [`control`]: the fixed-rate controller (passive / PVIC / PVI-HVC)
//! - [`plant`]: synthetic gait generation and a toy ankle plant
//! - [`replay`], [`report`]: telemetry, stride-averaged metrics, bands
//! - [`profile`], [`io`]: versioned profile files and CSV schemas

pub mod control;
pub mod design;
pub mod error;
pub mod impedance;
pub mod io;
pub mod phase;
pub mod plant;
pub mod profile;
pub mod replay;
pub mod report;
pub mod signals;
pub mod volitional;

pub use control::{
    clamp_command, Controller, ControllerConfig, ControllerKind, FaultState, TorqueCommand,
};
pub use error::{Error, Result};
pub use impedance::{
    expected_torque, passive_profile, pvic_torque, ImpedancePoint, ImpedanceProfile,
    ReferencePoint, ReferenceTrajectories, ValidationReport, ROM_LIMIT_DEG,
};
pub use phase::{
    build_phase_map, calibrate_cpc, calibrate_from_stream, estimate_gait_pct, phase_variable,
    scale_shift, PhaseCalibration, PhaseKnot, PhaseMap, PhaseTracker,
};
pub use plant::{plant_step, synth_gait, AnkleState, EmgBurst, GaitSynthParams, NoiseParams};
pub use profile::{CalibrationProfile, ImpedanceProfileFile, PROFILE_SCHEMA_VERSION};
pub use replay::{run_replay, run_simulation, RunOutput, TelemetryRecord};
pub use report::{compute_report, BandRow, StrideReport};
pub use signals::{
    detect_heel_strike, ground_truth_pct, segment_strides, MovingAverage, SensorFrame, Stride,
    DEFAULT_HEEL_THRESHOLD, NOMINAL_RATE_HZ,
};
pub use volitional::{
    bisector, calibrate_cocontraction, calibrate_mva, decode_intent, normalize_emg,
    volitional_torque, VolitionalCalibration,
};
