//! Desk-scale gait synthesis and a toy ankle plant for closed-loop
//! simulation, so calibration and replay can be exercised without human data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::design::PeriodicCurve;
use crate::error::{Error, Result};
use crate::signals::SensorFrame;

/// Ankle-shape anchors for the synthetic walker `(s, deg)`: a gentler version
/// of the able-bodied pattern, scaled by [`GaitSynthParams::ankle_scale`].
const ANKLE_SHAPE_ANCHORS: &[(f64, f64)] = &[
    (0.0, 0.0),
    (8.0, -2.0),
    (20.0, 1.0),
    (35.0, 4.0),
    (48.0, 5.5),
    (56.0, 0.0),
    (62.0, -8.0),
    (66.0, -12.0),
    (76.0, -5.0),
    (85.0, 1.0),
    (93.0, 0.5),
];

/// One EMG burst window on the synthetic stride clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmgBurst {
    /// Burst window start, percent of gait.
    pub start_pct: f64,
    /// Burst window end, percent of gait.
    pub end_pct: f64,
    /// Peak burst amplitude, volts.
    pub amplitude_v: f64,
}

/// Per-channel Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub theta_tib_deg: f64,
    pub theta_dot_tib_dps: f64,
    pub pressure: f64,
    pub emg_v: f64,
    pub ankle_deg: f64,
    pub ankle_dps: f64,
}

impl NoiseParams {
    /// Noise at a fraction of each channel's signal range, given the tibia
    /// oscillation amplitude and stride period of the generator.
    pub fn fraction_of_range(frac: f64, params: &GaitSynthParams) -> Self {
        let omega = 2.0 * std::f64::consts::PI / params.stride_period_s;
        let vel_range = 2.0 * params.tibia_amplitude_deg * omega;
        let ankle_range = 17.5 * params.ankle_scale;
        Self {
            theta_tib_deg: frac * 2.0 * params.tibia_amplitude_deg,
            theta_dot_tib_dps: frac * vel_range,
            pressure: frac * 1.0,
            emg_v: frac * 0.5,
            ankle_deg: frac * ankle_range,
            ankle_dps: frac * ankle_range * omega,
        }
    }
}

/// Synthetic-gait generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitSynthParams {
    pub rate_hz: f64,
    /// Stride periods to generate; segmentation yields one fewer complete
    /// strides.
    pub n_strides: usize,
    pub stride_period_s: f64,
    /// Tibia oscillation amplitude, degrees.
    pub tibia_amplitude_deg: f64,
    /// Tibia midline offset, degrees.
    pub tibia_offset_deg: f64,
    /// Fundamental phase at heel strike, degrees; places heel strike in the
    /// portrait's bottom-right quadrant.
    pub tibia_phase_deg: f64,
    /// Second-harmonic fraction of the tibia amplitude.
    pub tibia_harmonic2: f64,
    /// Fraction of the stride spent in stance.
    pub stance_fraction: f64,
    /// Scale applied to the built-in synthetic ankle shape.
    pub ankle_scale: f64,
    /// Rectified-EMG resting baseline, volts.
    pub emg_baseline_v: f64,
    /// Optional plantarflexor (GAS) burst.
    pub gas_burst: Option<EmgBurst>,
    /// Optional dorsiflexor (TA) burst.
    pub ta_burst: Option<EmgBurst>,
    pub noise: NoiseParams,
    /// Per-stride period jitter as a fraction of the stride period.
    pub period_jitter_frac: f64,
    pub seed: u64,
}

impl Default for GaitSynthParams {
    fn default() -> Self {
        Self {
            rate_hz: 220.0,
            n_strides: 12,
            stride_period_s: 1.4,
            tibia_amplitude_deg: 10.0,
            tibia_offset_deg: 3.0,
            tibia_phase_deg: 135.0,
            tibia_harmonic2: 0.08,
            stance_fraction: 0.62,
            ankle_scale: 1.0,
            emg_baseline_v: 0.02,
            gas_burst: None,
            ta_burst: None,
            noise: NoiseParams::default(),
            period_jitter_frac: 0.0,
            seed: 7,
        }
    }
}

impl GaitSynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0) || !(self.stride_period_s > 0.0) {
            return Err(Error::InvalidParameter(
                "rate and stride period must be positive".into(),
            ));
        }
        if self.n_strides < 1 {
            return Err(Error::InvalidParameter("n_strides must be >= 1".into()));
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "stance fraction must be in (0, 1), got {}",
                self.stance_fraction
            )));
        }
        if !(self.tibia_amplitude_deg > 0.0) {
            return Err(Error::InvalidParameter(
                "tibia amplitude must be positive".into(),
            ));
        }
        if !(self.period_jitter_frac >= 0.0 && self.period_jitter_frac < 0.3) {
            return Err(Error::InvalidParameter(
                "period jitter fraction must be in [0, 0.3)".into(),
            ));
        }
        Ok(())
    }
}

/// Smooth 0->1 ramp (cubic smoothstep) over `[0, 1]`.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Heel-pressure envelope on the stride clock: quick rise at heel strike,
/// loaded through mid-stance, released before toe-off.
fn heel_pressure(tau: f64, stance_fraction: f64) -> f64 {
    let rise = 0.025;
    let release_start = 0.72 * stance_fraction;
    let release_len = 0.06;
    smoothstep(tau / rise) * (1.0 - smoothstep((tau - release_start) / release_len))
}

/// Toe-pressure envelope: loads in mid-stance, releases at toe-off.
fn toe_pressure(tau: f64, stance_fraction: f64) -> f64 {
    let rise_start = 0.35 * stance_fraction;
    let rise_len = 0.08;
    let release_len = 0.05;
    smoothstep((tau - rise_start) / rise_len)
        * (1.0 - smoothstep((tau - stance_fraction) / release_len))
}

fn burst_value(burst: &Option<EmgBurst>, tau: f64) -> f64 {
    match burst {
        Some(b) => {
            let (s, e) = (b.start_pct / 100.0, b.end_pct / 100.0);
            if tau > s && tau < e {
                let x = (tau - s) / (e - s);
                b.amplitude_v * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * x).cos())
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Generates a synthetic sensor stream.
///
/// The tibia traces a simple closed clockwise portrait (fundamental plus a
/// small second harmonic) with heel strike in the bottom-right quadrant;
/// pressures follow the stance fraction; EMG carries a baseline and optional
/// bursts; all channels get seeded Gaussian noise.
pub fn synth_gait(params: &GaitSynthParams) -> Result<Vec<SensorFrame>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    // stride schedule with optional per-stride period jitter
    let mut boundaries = Vec::with_capacity(params.n_strides + 1);
    boundaries.push(0.0f64);
    for _ in 0..params.n_strides {
        let z: f64 = unit.sample(&mut rng);
        let period = params.stride_period_s
            * (1.0 + params.period_jitter_frac * z.clamp(-2.5, 2.5));
        boundaries.push(boundaries.last().unwrap() + period);
    }
    let t_total = *boundaries.last().unwrap();

    let ankle_curve = PeriodicCurve::new(ANKLE_SHAPE_ANCHORS);
    let dt = 1.0 / params.rate_hz;
    let psi = params.tibia_phase_deg.to_radians();
    let psi2 = 2.0 * psi;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut frames = Vec::new();
    let mut stride_idx = 0usize;
    let mut n = 0usize;
    loop {
        let t = n as f64 * dt;
        if t >= t_total {
            break;
        }
        while t >= boundaries[stride_idx + 1] {
            stride_idx += 1;
        }
        let period = boundaries[stride_idx + 1] - boundaries[stride_idx];
        let tau = (t - boundaries[stride_idx]) / period;
        let phase = two_pi * tau + psi;
        let phase2 = 2.0 * two_pi * tau + psi2;
        let omega = two_pi / period;

        let amp = params.tibia_amplitude_deg;
        let h2 = params.tibia_harmonic2;
        let theta_tib = params.tibia_offset_deg + amp * (phase.sin() + h2 * phase2.sin());
        let theta_dot_tib = amp * omega * (phase.cos() + 2.0 * h2 * phase2.cos());

        let s_pct = 100.0 * tau;
        let theta_ankle = params.ankle_scale * ankle_curve.sample(s_pct);
        let theta_dot_ankle =
            params.ankle_scale * ankle_curve.sample_derivative(s_pct) * (100.0 / period);

        let emg_gas = params.emg_baseline_v + burst_value(&params.gas_burst, tau);
        let emg_ta = params.emg_baseline_v + burst_value(&params.ta_burst, tau);

        // one draw per channel per frame, fixed order, so streams with the
        // same seed share noise structure across configurations
        let nz: [f64; 8] = std::array::from_fn(|_| unit.sample(&mut rng));
        let noise = &params.noise;
        frames.push(SensorFrame {
            t,
            theta_tib: theta_tib + noise.theta_tib_deg * nz[0],
            theta_dot_tib: theta_dot_tib + noise.theta_dot_tib_dps * nz[1],
            p_heel: (heel_pressure(tau, params.stance_fraction) + noise.pressure * nz[2])
                .clamp(0.0, 1.0),
            p_toe: (toe_pressure(tau, params.stance_fraction) + noise.pressure * nz[3])
                .clamp(0.0, 1.0),
            emg_gas: (emg_gas + noise.emg_v * nz[4]).max(0.0),
            emg_ta: (emg_ta + noise.emg_v * nz[5]).max(0.0),
            theta_ankle: theta_ankle + noise.ankle_deg * nz[6],
            theta_dot_ankle: theta_dot_ankle + noise.ankle_dps * nz[7],
        });
        n += 1;
    }
    Ok(frames)
}

/// Synthetic maximum-voluntary-contraction trial: ramp up, hold near the
/// plateau, ramp down, with seeded noise. Returns `(t, emg)` samples.
pub fn synth_mvic(plateau_v: f64, duration_s: f64, rate_hz: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let n = (duration_s * rate_hz) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate_hz;
            let tau = t / duration_s;
            let envelope = smoothstep(tau / 0.25) * (1.0 - smoothstep((tau - 0.75) / 0.25));
            let z: f64 = unit.sample(&mut rng);
            (t, (plateau_v * envelope * (1.0 + 0.03 * z)).max(0.0))
        })
        .collect()
}

/// Hard-stop spring stiffness at the range-of-motion limits, Nm/deg/kg.
pub const HARD_STOP_STIFFNESS: f64 = 1.0;

/// Hard-stop damping while penetrating a limit, Nms/deg/kg.
pub const HARD_STOP_DAMPING: f64 = 0.05;

/// Range-of-motion limit of the toy plant, degrees.
pub const PLANT_ROM_DEG: f64 = 15.0;

/// Toy ankle state: a point inertia with a stance spring-damper and hard
/// stops at the range-of-motion limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnkleState {
    /// Ankle angle, degrees.
    pub theta: f64,
    /// Ankle angular velocity, degrees/second.
    pub theta_dot: f64,
    /// Rotational inertia per unit body mass, kg m^2 / kg.
    pub inertia: f64,
    /// Ground-interaction stiffness engaged during stance, Nm/deg/kg.
    pub ground_stiffness: f64,
    /// Ground-interaction damping engaged during stance, Nms/deg/kg.
    pub ground_damping: f64,
}

impl AnkleState {
    /// Neutral ankle at rest with default plant constants.
    pub fn at_rest() -> Self {
        Self {
            theta: 0.0,
            theta_dot: 0.0,
            inertia: 0.012,
            ground_stiffness: 0.05,
            ground_damping: 0.01,
        }
    }
}

/// One semi-implicit Euler step of the toy ankle dynamics.
pub fn plant_step(state: &AnkleState, tau: f64, stance: bool, dt: f64) -> Result<AnkleState> {
    if !tau.is_finite() {
        return Err(Error::SignalFault(format!("non-finite torque {tau}")));
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "dt must be in (0, 0.1], got {dt}"
        )));
    }
    let mut torque = tau;
    if stance {
        torque += -state.ground_stiffness * state.theta - state.ground_damping * state.theta_dot;
    }
    if state.theta > PLANT_ROM_DEG {
        torque +=
            -HARD_STOP_STIFFNESS * (state.theta - PLANT_ROM_DEG) - HARD_STOP_DAMPING * state.theta_dot;
    } else if state.theta < -PLANT_ROM_DEG {
        torque += -HARD_STOP_STIFFNESS * (state.theta + PLANT_ROM_DEG)
            - HARD_STOP_DAMPING * state.theta_dot;
    }
    let accel_deg = torque / state.inertia * (180.0 / std::f64::consts::PI);
    let theta_dot = state.theta_dot + dt * accel_deg;
    let theta = state.theta + dt * theta_dot;
    Ok(AnkleState {
        theta,
        theta_dot,
        ..*state
    })
}
