//! Versioned JSON persistence for calibration results and impedance profiles.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::ImpedanceProfile;
use crate::phase::{PhaseCalibration, PhaseKnot, PhaseMap};
use crate::volitional::VolitionalCalibration;

/// Current schema version for both profile file formats.
pub const PROFILE_SCHEMA_VERSION: u32 = 1;

const SIGN_CONVENTION: &str =
    "dorsiflexion-positive angles, velocities, and torques; torques in Nm/kg";

fn default_sign_convention() -> String {
    SIGN_CONVENTION.to_string()
}

/// Unit declarations embedded in profile files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUnits {
    pub angle: String,
    pub angular_velocity: String,
    pub time: String,
    pub phase: String,
}

impl Default for ProfileUnits {
    fn default() -> Self {
        Self {
            angle: "deg".into(),
            angular_velocity: "deg/s".into(),
            time: "s".into(),
            phase: "deg".into(),
        }
    }
}

/// Phase map stored as parallel knot arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapData {
    /// Unwrapped phase knots, degrees, strictly decreasing.
    pub phi_deg: Vec<f64>,
    /// Gait-percentage knots, strictly increasing 0..100.
    pub gait_pct: Vec<f64>,
}

impl PhaseMapData {
    pub fn from_map(map: &PhaseMap) -> Self {
        Self {
            phi_deg: map.knots().iter().map(|k| k.phi).collect(),
            gait_pct: map.knots().iter().map(|k| k.s).collect(),
        }
    }

    pub fn into_map(self) -> Result<PhaseMap> {
        if self.phi_deg.len() != self.gait_pct.len() {
            return Err(Error::SchemaMismatch(format!(
                "phase map arrays differ in length: {} vs {}",
                self.phi_deg.len(),
                self.gait_pct.len()
            )));
        }
        PhaseMap::new(
            self.phi_deg
                .into_iter()
                .zip(self.gait_pct)
                .map(|(phi, s)| PhaseKnot { phi, s })
                .collect(),
        )
    }
}

/// On-disk calibration profile: phase calibration and map, plus the optional
/// volitional calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub schema_version: u32,
    #[serde(default)]
    pub units: ProfileUnits,
    #[serde(default = "default_sign_convention")]
    pub sign_convention: String,
    pub phase: PhaseCalibration,
    pub phase_map: PhaseMapData,
    pub volitional: Option<VolitionalCalibration>,
}

impl CalibrationProfile {
    pub fn new(
        phase: PhaseCalibration,
        map: &PhaseMap,
        volitional: Option<VolitionalCalibration>,
    ) -> Self {
        Self {
            schema_version: PROFILE_SCHEMA_VERSION,
            units: ProfileUnits::default(),
            sign_convention: default_sign_convention(),
            phase,
            phase_map: PhaseMapData::from_map(map),
            volitional,
        }
    }

    /// Validates component calibrations and reconstructs the phase map.
    pub fn into_parts(
        self,
    ) -> Result<(PhaseCalibration, PhaseMap, Option<VolitionalCalibration>)> {
        if self.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported profile schema version {}",
                self.schema_version
            )));
        }
        self.phase.validate()?;
        if let Some(vol) = &self.volitional {
            vol.validate()?;
        }
        let map = self.phase_map.into_map()?;
        Ok((self.phase, map, self.volitional))
    }

    /// Canonical serialized form (stable across runs for identical content).
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// On-disk impedance profile with schema and unit declarations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceProfileFile {
    pub schema_version: u32,
    #[serde(default = "default_sign_convention")]
    pub sign_convention: String,
    pub units: ImpedanceUnits,
    /// Range-of-motion half range, degrees.
    pub theta_max_deg: f64,
    /// `(s, deg)` equilibrium-angle knots.
    pub knots_eq: Vec<(f64, f64)>,
    /// `(s, Nm/deg/kg)` stiffness knots.
    pub knots_k: Vec<(f64, f64)>,
    /// `(s, Nms/deg/kg)` damping knots.
    pub knots_b: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpedanceUnits {
    pub gait: String,
    pub equilibrium: String,
    pub stiffness: String,
    pub damping: String,
}

impl Default for ImpedanceUnits {
    fn default() -> Self {
        Self {
            gait: "percent".into(),
            equilibrium: "deg".into(),
            stiffness: "Nm/deg/kg".into(),
            damping: "Nms/deg/kg".into(),
        }
    }
}

impl ImpedanceProfileFile {
    pub fn from_profile(profile: &ImpedanceProfile) -> Self {
        Self {
            schema_version: PROFILE_SCHEMA_VERSION,
            sign_convention: default_sign_convention(),
            units: ImpedanceUnits::default(),
            theta_max_deg: profile.theta_max,
            knots_eq: profile.knots_eq.clone(),
            knots_k: profile.knots_k.clone(),
            knots_b: profile.knots_b.clone(),
        }
    }

    /// Converts to a runtime profile, rejecting files that fail validation.
    pub fn into_profile(self) -> Result<ImpedanceProfile> {
        if self.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported impedance profile schema version {}",
                self.schema_version
            )));
        }
        let profile = ImpedanceProfile {
            knots_eq: self.knots_eq,
            knots_k: self.knots_k,
            knots_b: self.knots_b,
            theta_max: self.theta_max_deg,
        };
        let report = profile.validate();
        if let Some(first) = report.violations.first() {
            return Err(Error::InvalidCalibration(format!(
                "impedance profile invalid: {first}"
            )));
        }
        Ok(profile)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
