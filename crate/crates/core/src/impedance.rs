//! Gait-percentage-indexed impedance model and the phase-variable impedance
//! torque law, plus the passive benchmark parameter set.
//!
//! Sign convention, used crate-wide: ankle angle, velocity, and torque are
//! dorsiflexion-positive, so plantarflexor moments are negative. Torques and
//! powers are body-mass normalized (Nm/kg, W/kg).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prosthesis range of motion, degrees each way.
pub const ROM_LIMIT_DEG: f64 = 15.0;

/// Passive benchmark stiffness, Nm/deg/kg.
pub const PASSIVE_STIFFNESS: f64 = 0.09;

/// Passive benchmark damping, Nms/deg/kg.
pub const PASSIVE_DAMPING: f64 = 0.075;

/// Passive benchmark equilibrium angle, degrees.
pub const PASSIVE_EQUILIBRIUM: f64 = 0.0;

/// Impedance parameters at one gait percentage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedancePoint {
    /// Equilibrium angle, degrees.
    pub theta_eq: f64,
    /// Stiffness, Nm/deg/kg.
    pub stiffness: f64,
    /// Damping, Nms/deg/kg.
    pub damping: f64,
}

/// Knot tables for equilibrium angle, stiffness, and damping versus gait
/// percentage, interpolated piecewise-linearly and periodic across 100 -> 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceProfile {
    /// `(s, theta_eq)` knots, degrees.
    pub knots_eq: Vec<(f64, f64)>,
    /// `(s, K)` knots, Nm/deg/kg.
    pub knots_k: Vec<(f64, f64)>,
    /// `(s, B)` knots, Nms/deg/kg.
    pub knots_b: Vec<(f64, f64)>,
    /// Range-of-motion half range, degrees.
    pub theta_max: f64,
}

impl ImpedanceProfile {
    /// Piecewise-linear evaluation of all three curves, periodic in `s`
    /// modulo 100.
    pub fn eval(&self, s: f64) -> ImpedancePoint {
        let s = wrap_pct(s);
        ImpedancePoint {
            theta_eq: interp_knots(&self.knots_eq, s),
            stiffness: interp_knots(&self.knots_k, s),
            damping: interp_knots(&self.knots_b, s),
        }
    }

    /// Largest absolute slope of each curve in units per percent gait:
    /// `(d theta_eq/ds, dK/ds, dB/ds)`. Used for continuity bounds.
    pub fn slope_bounds(&self) -> (f64, f64, f64) {
        (
            max_abs_slope(&self.knots_eq),
            max_abs_slope(&self.knots_k),
            max_abs_slope(&self.knots_b),
        )
    }

    /// Checks construction rules and reports every violation found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (curve, knots) in [
            ("theta_eq", &self.knots_eq),
            ("stiffness", &self.knots_k),
            ("damping", &self.knots_b),
        ] {
            validate_knot_table(curve, knots, &mut violations);
        }
        for &(s, k) in &self.knots_k {
            if k < 0.0 {
                violations.push(Violation {
                    curve: "stiffness".into(),
                    s: Some(s),
                    message: format!("negative stiffness {k}"),
                });
            }
        }
        for &(s, b) in &self.knots_b {
            if b < 0.0 {
                violations.push(Violation {
                    curve: "damping".into(),
                    s: Some(s),
                    message: format!("negative damping {b}"),
                });
            }
        }
        if !(self.theta_max > 0.0) || !self.theta_max.is_finite() {
            violations.push(Violation {
                curve: "theta_max".into(),
                s: None,
                message: format!("theta_max must be positive, got {}", self.theta_max),
            });
        }
        for &(s, eq) in &self.knots_eq {
            if eq.abs() > self.theta_max {
                violations.push(Violation {
                    curve: "theta_eq".into(),
                    s: Some(s),
                    message: format!(
                        "equilibrium {eq} exceeds range of motion +/-{}",
                        self.theta_max
                    ),
                });
            }
        }
        ValidationReport { violations }
    }
}

fn validate_knot_table(curve: &str, knots: &[(f64, f64)], out: &mut Vec<Violation>) {
    if knots.len() < 2 {
        out.push(Violation {
            curve: curve.into(),
            s: None,
            message: "fewer than two knots".into(),
        });
        return;
    }
    for w in knots.windows(2) {
        if !(w[1].0 > w[0].0) {
            out.push(Violation {
                curve: curve.into(),
                s: Some(w[1].0),
                message: format!("knot ordering violated at s={}", w[1].0),
            });
        }
    }
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if first.0 != 0.0 || last.0 != 100.0 {
        out.push(Violation {
            curve: curve.into(),
            s: None,
            message: format!("knots must span s=0..100, got {}..{}", first.0, last.0),
        });
    }
    if first.1 != last.1 {
        out.push(Violation {
            curve: curve.into(),
            s: Some(100.0),
            message: format!(
                "endpoint continuity violated: value {} at s=0 vs {} at s=100",
                first.1, last.1
            ),
        });
    }
    for &(s, v) in knots {
        if !v.is_finite() || !s.is_finite() {
            out.push(Violation {
                curve: curve.into(),
                s: Some(s),
                message: "non-finite knot".into(),
            });
        }
    }
}

/// One rule violation found by [`ImpedanceProfile::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub curve: String,
    /// Gait percentage of the violation, when localized.
    pub s: Option<f64>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.s {
            Some(s) => write!(f, "{} at s={}: {}", self.curve, s, self.message),
            None => write!(f, "{}: {}", self.curve, self.message),
        }
    }
}

/// Outcome of profile validation; carries failures rather than erroring.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Phase-variable impedance torque law: `-K (theta - theta_eq) - B theta_dot`.
pub fn pvic_torque(
    theta_ankle: f64,
    theta_dot_ankle: f64,
    theta_eq: f64,
    stiffness: f64,
    damping: f64,
) -> f64 {
    debug_assert!(stiffness >= 0.0 && damping >= 0.0);
    -stiffness * (theta_ankle - theta_eq) - damping * theta_dot_ankle
}

/// Constant-parameter profile mimicking a passive ankle-foot prosthesis.
pub fn passive_profile() -> ImpedanceProfile {
    ImpedanceProfile {
        knots_eq: vec![(0.0, PASSIVE_EQUILIBRIUM), (100.0, PASSIVE_EQUILIBRIUM)],
        knots_k: vec![(0.0, PASSIVE_STIFFNESS), (100.0, PASSIVE_STIFFNESS)],
        knots_b: vec![(0.0, PASSIVE_DAMPING), (100.0, PASSIVE_DAMPING)],
        theta_max: ROM_LIMIT_DEG,
    }
}

/// One row of the able-bodied reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    /// Gait percentage.
    pub s: f64,
    /// Reference ankle angle, degrees.
    pub theta_ref: f64,
    /// Reference ankle torque, Nm/kg.
    pub tau_ref: f64,
    /// Reference ankle power, W/kg.
    pub power_ref: f64,
}

/// Reference ankle angle, torque, and power versus gait percentage.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectories {
    pub points: Vec<ReferencePoint>,
    /// Stride period the tables are expressed against, seconds.
    pub stride_period_s: f64,
}

impl ReferenceTrajectories {
    pub fn new(points: Vec<ReferencePoint>, stride_period_s: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter(
                "reference table needs at least 3 points".into(),
            ));
        }
        if !(stride_period_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stride period must be positive, got {stride_period_s}"
            )));
        }
        for w in points.windows(2) {
            if !(w[1].s > w[0].s) {
                return Err(Error::SchemaMismatch(format!(
                    "reference s not strictly increasing at {}",
                    w[1].s
                )));
            }
        }
        Ok(Self {
            points,
            stride_period_s,
        })
    }

    /// Linear interpolation of `(theta_ref, tau_ref, power_ref)` at `s`,
    /// clamped to the table range.
    pub fn sample(&self, s: f64) -> (f64, f64, f64) {
        let pts = &self.points;
        let n = pts.len();
        if s <= pts[0].s {
            return (pts[0].theta_ref, pts[0].tau_ref, pts[0].power_ref);
        }
        if s >= pts[n - 1].s {
            return (
                pts[n - 1].theta_ref,
                pts[n - 1].tau_ref,
                pts[n - 1].power_ref,
            );
        }
        let idx = pts.partition_point(|p| p.s < s);
        let (a, b) = (&pts[idx - 1], &pts[idx]);
        let t = (s - a.s) / (b.s - a.s);
        (
            a.theta_ref * (1.0 - t) + b.theta_ref * t,
            a.tau_ref * (1.0 - t) + b.tau_ref * t,
            a.power_ref * (1.0 - t) + b.power_ref * t,
        )
    }

    /// Reference angular velocity at table index `i` in degrees/second,
    /// by periodic central differencing of the angle column.
    pub fn velocity_dps(&self, i: usize) -> f64 {
        let pts = &self.points;
        let n = pts.len();
        // index n-1 duplicates index 0 across the periodic seam
        let prev = if i == 0 { n - 2 } else { i - 1 };
        let next = if i == n - 1 { 1 } else { i + 1 };
        let ds_prev = (pts[i].s - pts[prev].s).rem_euclid(100.0);
        let ds_next = (pts[next].s - pts[i].s).rem_euclid(100.0);
        let dtheta = pts[next].theta_ref - pts[prev].theta_ref;
        let pct_per_s = 100.0 / self.stride_period_s;
        dtheta / (ds_prev + ds_next) * pct_per_s
    }

    /// Checks that the power column is consistent with torque times the time
    /// derivative of the angle column, within table resolution.
    pub fn validate(&self, tolerance_w_per_kg: f64) -> Result<()> {
        for i in 0..self.points.len() {
            let p = &self.points[i];
            let power = p.tau_ref * self.velocity_dps(i).to_radians();
            if (power - p.power_ref).abs() > tolerance_w_per_kg {
                return Err(Error::SchemaMismatch(format!(
                    "power_ref inconsistent at s={}: table {} vs tau*d(theta)/dt {}",
                    p.s, p.power_ref, power
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates the impedance law along the reference angle trajectory,
/// with the reference velocity obtained by finite differencing the angle
/// table. Returns `(s, tau)` rows.
pub fn expected_torque(
    profile: &ImpedanceProfile,
    refs: &ReferenceTrajectories,
) -> Vec<(f64, f64)> {
    (0..refs.points.len())
        .map(|i| {
            let p = &refs.points[i];
            let point = profile.eval(p.s);
            let tau = pvic_torque(
                p.theta_ref,
                refs.velocity_dps(i),
                point.theta_eq,
                point.stiffness,
                point.damping,
            );
            (p.s, tau)
        })
        .collect()
}

/// Wraps a gait percentage into `[0, 100)`, mapping exact 100 to 0.
fn wrap_pct(s: f64) -> f64 {
    let w = s.rem_euclid(100.0);
    if w == 100.0 {
        0.0
    } else {
        w
    }
}

/// Piecewise-linear interpolation over an ascending knot table, clamped at
/// the ends.
pub(crate) fn interp_knots(knots: &[(f64, f64)], s: f64) -> f64 {
    let n = knots.len();
    if s <= knots[0].0 {
        return knots[0].1;
    }
    if s >= knots[n - 1].0 {
        return knots[n - 1].1;
    }
    let idx = knots.partition_point(|k| k.0 < s);
    let (s0, v0) = knots[idx - 1];
    let (s1, v1) = knots[idx];
    if s == s0 {
        return v0;
    }
    let t = (s - s0) / (s1 - s0);
    v0 * (1.0 - t) + v1 * t
}

fn max_abs_slope(knots: &[(f64, f64)]) -> f64 {
    knots
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max)
}
