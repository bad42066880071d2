//! Authoring of the default impedance profile and the able-bodied reference
//! tables.
//!
//! The shipped defaults live in `data/` as versioned files; the builders here
//! regenerate them and are kept in sync by tests. Reference values are an
//! analytic approximation of slow able-bodied walking, not measured data.

use std::sync::OnceLock;

use crate::error::Result;
use crate::impedance::{ImpedanceProfile, ReferencePoint, ReferenceTrajectories, ROM_LIMIT_DEG};
use crate::io;
use crate::profile::ImpedanceProfileFile;

/// Stride period the default reference tables assume, seconds.
pub const REFERENCE_STRIDE_PERIOD_S: f64 = 1.4;

/// Gait percentage grid used for authored tables.
const GRID: usize = 101;

/// Reference ankle angle anchors `(s, deg)`, dorsiflexion positive.
const THETA_REF_ANCHORS: &[(f64, f64)] = &[
    (0.0, 0.0),
    (8.0, -4.0),
    (20.0, 2.0),
    (35.0, 7.0),
    (48.0, 10.0),
    (56.0, 4.0),
    (62.0, -10.0),
    (66.0, -18.0),
    (76.0, -6.0),
    (85.0, 1.5),
    (93.0, 0.5),
];

/// Reference ankle torque anchors `(s, Nm/kg)`; plantarflexor is negative.
const TAU_REF_ANCHORS: &[(f64, f64)] = &[
    (0.0, 0.0),
    (5.0, 0.10),
    (10.0, 0.0),
    (20.0, -0.30),
    (30.0, -0.60),
    (40.0, -1.00),
    (48.0, -1.35),
    (54.0, -1.10),
    (60.0, -0.45),
    (66.0, -0.05),
    (72.0, 0.0),
    (85.0, 0.0),
    (93.0, 0.0),
];

/// Stiffness knots `(s, Nm/deg/kg)`: flat in early stance, a linear rise
/// through mid-stance, constant through push-off, and a late-swing decrease
/// back to the heel-strike value.
const STIFFNESS_KNOTS: &[(f64, f64)] = &[
    (0.0, 0.08),
    (10.0, 0.08),
    (40.0, 0.16),
    (78.0, 0.16),
    (100.0, 0.08),
];

/// Damping knots `(s, Nms/deg/kg)`: a shock-absorption peak in early stance
/// and a swing-tracking peak in late swing.
const DAMPING_KNOTS: &[(f64, f64)] = &[
    (0.0, 0.006),
    (6.0, 0.012),
    (14.0, 0.005),
    (60.0, 0.004),
    (72.0, 0.005),
    (82.0, 0.015),
    (90.0, 0.012),
    (100.0, 0.006),
];

/// Periodic cubic Hermite interpolant over anchors on a 0..100 cycle.
///
/// Tangents are centered finite differences with periodic wrap, so sampled
/// curves are C1 everywhere including across the 100 -> 0 seam.
#[derive(Debug, Clone)]
pub(crate) struct PeriodicCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl PeriodicCurve {
    pub(crate) fn new(anchors: &[(f64, f64)]) -> Self {
        let n = anchors.len();
        assert!(n >= 3, "need at least 3 anchors");
        let xs: Vec<f64> = anchors.iter().map(|a| a.0).collect();
        let ys: Vec<f64> = anchors.iter().map(|a| a.1).collect();
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let (x_prev, y_prev) = if i == 0 {
                (xs[n - 1] - 100.0, ys[n - 1])
            } else {
                (xs[i - 1], ys[i - 1])
            };
            let (x_next, y_next) = if i == n - 1 {
                (xs[0] + 100.0, ys[0])
            } else {
                (xs[i + 1], ys[i + 1])
            };
            slopes.push((y_next - y_prev) / (x_next - x_prev));
        }
        Self { xs, ys, slopes }
    }

    pub(crate) fn sample(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.rem_euclid(100.0);
        // segment i spans xs[i]..xs[i+1]; the last wraps to xs[0] + 100
        let idx = match self.xs.partition_point(|&k| k <= x) {
            0 => n - 1, // x below first anchor: wrapped tail segment
            i => i - 1,
        };
        let (x0, y0, m0) = (self.xs[idx], self.ys[idx], self.slopes[idx]);
        let (x1, y1, m1) = if idx + 1 < n {
            (self.xs[idx + 1], self.ys[idx + 1], self.slopes[idx + 1])
        } else {
            (self.xs[0] + 100.0, self.ys[0], self.slopes[0])
        };
        let x = if x < x0 { x + 100.0 } else { x };
        let h = x1 - x0;
        let t = (x - x0) / h;
        if t == 0.0 {
            return y0;
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
    }

    /// Derivative of [`Self::sample`] with respect to the cycle coordinate.
    pub(crate) fn sample_derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.rem_euclid(100.0);
        let idx = match self.xs.partition_point(|&k| k <= x) {
            0 => n - 1,
            i => i - 1,
        };
        let (x0, y0, m0) = (self.xs[idx], self.ys[idx], self.slopes[idx]);
        let (x1, y1, m1) = if idx + 1 < n {
            (self.xs[idx + 1], self.ys[idx + 1], self.slopes[idx + 1])
        } else {
            (self.xs[0] + 100.0, self.ys[0], self.slopes[0])
        };
        let x = if x < x0 { x + 100.0 } else { x };
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1
    }
}

/// Builds the analytic able-bodied reference tables on the 101-point grid.
///
/// The power column is torque times the time derivative of the angle column,
/// so the table is self-consistent by construction.
pub fn build_references(stride_period_s: f64) -> Result<ReferenceTrajectories> {
    let theta_curve = PeriodicCurve::new(THETA_REF_ANCHORS);
    let tau_curve = PeriodicCurve::new(TAU_REF_ANCHORS);
    let points: Vec<ReferencePoint> = (0..GRID)
        .map(|i| {
            let s = i as f64;
            ReferencePoint {
                s,
                theta_ref: theta_curve.sample(s),
                tau_ref: tau_curve.sample(s),
                power_ref: 0.0,
            }
        })
        .collect();
    let mut refs = ReferenceTrajectories::new(points, stride_period_s)?;
    for i in 0..refs.points.len() {
        refs.points[i].power_ref = refs.points[i].tau_ref * refs.velocity_dps(i).to_radians();
    }
    Ok(refs)
}

/// Designs the default phase-variable impedance profile from reference
/// trajectories.
///
/// Stiffness and damping follow the fixed knot shapes above. The equilibrium
/// angle is solved on the grid: during stance it is the reference angle offset
/// by `tau_ref / K` so the spring reproduces the reference torque, clamped to
/// the range of motion; from the point of maximum reference plantarflexion
/// onward it is the reference swing kinematics rescaled so peak equilibrium
/// plantarflexion lands exactly on the range-of-motion limit.
pub fn design_pvic_profile(refs: &ReferenceTrajectories) -> Result<ImpedanceProfile> {
    let mut profile = ImpedanceProfile {
        knots_eq: Vec::with_capacity(GRID),
        knots_k: STIFFNESS_KNOTS.to_vec(),
        knots_b: DAMPING_KNOTS.to_vec(),
        theta_max: ROM_LIMIT_DEG,
    };

    // point of maximum plantarflexion in the reference kinematics
    let (pf_idx, pf_point) = refs
        .points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.theta_ref.total_cmp(&b.1.theta_ref))
        .expect("non-empty reference table");
    let pf_magnitude = pf_point.theta_ref.abs();

    for (i, p) in refs.points.iter().enumerate() {
        let eq = if i <= pf_idx {
            let stiffness = crate::impedance::interp_knots(STIFFNESS_KNOTS, p.s);
            (p.theta_ref + p.tau_ref / stiffness).clamp(-ROM_LIMIT_DEG, ROM_LIMIT_DEG)
        } else {
            (ROM_LIMIT_DEG * (p.theta_ref / pf_magnitude)).clamp(-ROM_LIMIT_DEG, ROM_LIMIT_DEG)
        };
        profile.knots_eq.push((p.s, eq));
    }
    // the rescaled swing segment pins the junction knot at exactly -ROM
    profile.knots_eq[pf_idx].1 = -ROM_LIMIT_DEG;

    let report = profile.validate();
    if !report.is_valid() {
        return Err(crate::error::Error::InvalidCalibration(format!(
            "designed profile failed validation: {}",
            report.violations[0]
        )));
    }
    Ok(profile)
}

static DEFAULT_REFERENCES: OnceLock<ReferenceTrajectories> = OnceLock::new();
static DEFAULT_PROFILE: OnceLock<ImpedanceProfile> = OnceLock::new();

/// The shipped able-bodied reference tables (approximate, slow walking).
pub fn default_references() -> ReferenceTrajectories {
    DEFAULT_REFERENCES
        .get_or_init(|| {
            let raw = include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/data/reference_slow_walk.csv"
            ));
            io::read_references_from(raw.as_bytes(), REFERENCE_STRIDE_PERIOD_S)
                .expect("embedded reference table parses")
        })
        .clone()
}

/// The shipped default phase-variable impedance profile.
pub fn default_pvic_profile() -> ImpedanceProfile {
    DEFAULT_PROFILE
        .get_or_init(|| {
            let raw = include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/data/default_pvic_profile.json"
            ));
            let file: ImpedanceProfileFile =
                serde_json::from_str(raw).expect("embedded profile parses");
            file.into_profile().expect("embedded profile is valid")
        })
        .clone()
}
