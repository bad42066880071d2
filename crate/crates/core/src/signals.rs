//! Streaming conditioning of raw sensor channels: rectification, moving-average
//! filtering, heel-strike detection, stride segmentation, and ground-truth gait
//! percentage.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal sensing and control rate in hertz.
pub const NOMINAL_RATE_HZ: f64 = 220.0;

/// Moving-average window applied to rectified EMG, in milliseconds.
pub const EMG_WINDOW_MS: f64 = 300.0;

/// Moving-average window applied to the pressure sensors, in milliseconds.
pub const PRESSURE_WINDOW_MS: f64 = 60.0;

/// Moving-average window applied to the tibia angular velocity, in milliseconds.
pub const TIBIA_VELOCITY_WINDOW_MS: f64 = 70.0;

/// Default normalized heel-pressure threshold for gait-event detection.
pub const DEFAULT_HEEL_THRESHOLD: f64 = 0.5;

/// Default heel-strike refractory lockout in seconds.
pub const DEFAULT_REFRACTORY_S: f64 = 0.3;

/// One sensor sample.
///
/// Angles are in degrees with dorsiflexion positive for the ankle; the tibia
/// angle is the global sagittal angle relative to the gravity vertical.
/// Pressures are normalized to `[0, 1]`; EMG is rectified volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    /// Timestamp in seconds; strictly increasing within a stream.
    pub t: f64,
    /// Global sagittal tibia angle, degrees.
    pub theta_tib: f64,
    /// Global sagittal tibia angular velocity, degrees/second.
    pub theta_dot_tib: f64,
    /// Normalized heel pressure.
    pub p_heel: f64,
    /// Normalized toe pressure.
    pub p_toe: f64,
    /// Gastrocnemius EMG, rectified volts.
    pub emg_gas: f64,
    /// Tibialis anterior EMG, rectified volts.
    pub emg_ta: f64,
    /// Ankle angle, degrees (dorsiflexion positive).
    pub theta_ankle: f64,
    /// Ankle angular velocity, degrees/second.
    pub theta_dot_ankle: f64,
}

impl SensorFrame {
    /// Checks that every channel is finite and that pressures are normalized.
    pub fn validate(&self) -> Result<()> {
        let channels = [
            ("t", self.t),
            ("theta_tib", self.theta_tib),
            ("theta_dot_tib", self.theta_dot_tib),
            ("p_heel", self.p_heel),
            ("p_toe", self.p_toe),
            ("emg_gas", self.emg_gas),
            ("emg_ta", self.emg_ta),
            ("theta_ankle", self.theta_ankle),
            ("theta_dot_ankle", self.theta_dot_ankle),
        ];
        for (name, value) in channels {
            if !value.is_finite() {
                return Err(Error::SignalFault(format!("non-finite {name}: {value}")));
            }
        }
        for (name, value) in [("p_heel", self.p_heel), ("p_toe", self.p_toe)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::SignalFault(format!(
                    "{name} out of [0, 1]: {value}"
                )));
            }
        }
        Ok(())
    }

    /// True when every channel is finite.
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.theta_tib,
            self.theta_dot_tib,
            self.p_heel,
            self.p_toe,
            self.emg_gas,
            self.emg_ta,
            self.theta_ankle,
            self.theta_dot_ankle,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Streaming moving-average filter.
///
/// Before the window fills, the output is the mean of the samples seen so far
/// (no zero padding), so there is no startup transient toward zero.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window_len: usize,
    buf: VecDeque<f64>,
}

impl MovingAverage {
    /// Filter with an explicit window length in samples (minimum 1).
    pub fn new(window_len: usize) -> Self {
        Self {
            window_len: window_len.max(1),
            buf: VecDeque::with_capacity(window_len.max(1)),
        }
    }

    /// Filter sized from a window duration and a sample rate.
    ///
    /// The window length is `window_ms * rate_hz / 1000` rounded half to even,
    /// clamped to at least one sample.
    pub fn from_window_ms(window_ms: f64, rate_hz: f64) -> Result<Self> {
        if !(window_ms > 0.0) || !window_ms.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window_ms must be positive and finite, got {window_ms}"
            )));
        }
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rate_hz must be positive and finite, got {rate_hz}"
            )));
        }
        let len = (window_ms * rate_hz / 1000.0).round_ties_even() as usize;
        Ok(Self::new(len.max(1)))
    }

    /// Window length in samples.
    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Advances the filter by one sample and returns the mean of the retained
    /// window.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::SignalFault(format!("non-finite filter input: {x}")));
        }
        if self.buf.len() == self.window_len {
            self.buf.pop_front();
        }
        self.buf.push_back(x);
        // Summed fresh each step so the mean stays within the window's min/max
        // on arbitrarily long streams.
        let sum: f64 = self.buf.iter().sum();
        Ok(sum / self.buf.len() as f64)
    }

    /// Discards all retained samples.
    pub fn reset(&mut self) {
        self.buf.clear();
    }
}

/// Rising-edge heel-strike test between two consecutive pressure samples.
///
/// Fires iff the previous sample was below the threshold and the current one
/// is at or above it. Stream-level refractory handling lives in
/// [`HeelStrikeDetector`].
pub fn detect_heel_strike(prev_p: f64, curr_p: f64, threshold: f64) -> bool {
    prev_p < threshold && curr_p >= threshold
}

/// Stateful heel-strike detector with a refractory lockout.
#[derive(Debug, Clone)]
pub struct HeelStrikeDetector {
    threshold: f64,
    refractory_s: f64,
    prev_p: Option<f64>,
    last_strike_t: Option<f64>,
}

impl HeelStrikeDetector {
    pub fn new(threshold: f64, refractory_s: f64) -> Self {
        Self {
            threshold,
            refractory_s,
            prev_p: None,
            last_strike_t: None,
        }
    }

    /// Detector with the default threshold and lockout.
    pub fn with_defaults() -> Self {
        Self::new(DEFAULT_HEEL_THRESHOLD, DEFAULT_REFRACTORY_S)
    }

    /// Feeds one heel-pressure sample; returns true when a heel strike fires.
    pub fn step(&mut self, t: f64, p_heel: f64) -> bool {
        let edge = match self.prev_p {
            Some(prev) => detect_heel_strike(prev, p_heel, self.threshold),
            None => false,
        };
        self.prev_p = Some(p_heel);
        if !edge {
            return false;
        }
        if let Some(last) = self.last_strike_t {
            if t - last < self.refractory_s {
                return false;
            }
        }
        self.last_strike_t = Some(t);
        true
    }
}

/// One gait cycle between consecutive heel strikes.
#[derive(Debug, Clone)]
pub struct Stride {
    /// Frames from the opening heel strike (inclusive) to the closing heel
    /// strike (exclusive).
    pub frames: Vec<SensorFrame>,
    /// Time of the opening heel strike, seconds.
    pub t_start: f64,
    /// Time of the closing heel strike, seconds.
    pub t_end: f64,
    /// Ground-truth gait percentage per frame, in `[0, 100)`.
    pub gait_pct: Vec<f64>,
    /// Stance flag per frame (heel pressure at or above the threshold).
    pub stance: Vec<bool>,
}

impl Stride {
    /// Builds a stride from its frames and closing heel-strike time, assigning
    /// ground-truth percentages and stance flags.
    pub fn from_frames(frames: Vec<SensorFrame>, t_end: f64, stance_threshold: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidParameter("stride with no frames".into()))?;
        let t_start = first.t;
        let mut gait_pct = Vec::with_capacity(frames.len());
        for f in &frames {
            gait_pct.push(ground_truth_pct(f.t, t_start, t_end)?);
        }
        let stance = frames.iter().map(|f| f.p_heel >= stance_threshold).collect();
        Ok(Self {
            frames,
            t_start,
            t_end,
            gait_pct,
            stance,
        })
    }

    /// Stride duration in seconds.
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// True when at least one frame is in stance.
    pub fn has_stance(&self) -> bool {
        self.stance.iter().any(|&s| s)
    }
}

/// Ground-truth gait percentage by normalizing time between heel strikes.
pub fn ground_truth_pct(t: f64, t_hs: f64, t_hs_next: f64) -> Result<f64> {
    let duration = t_hs_next - t_hs;
    if !(duration > 0.0) {
        return Err(Error::DegenerateStride {
            t_start: t_hs,
            t_end: t_hs_next,
        });
    }
    Ok(100.0 * (t - t_hs) / duration)
}

/// Splits a time-ordered stream into complete strides at heel strikes.
///
/// Data before the first strike and after the last one is discarded. Fewer
/// than two strikes yields an empty list.
pub fn segment_strides(frames: &[SensorFrame], threshold: f64) -> Result<Vec<Stride>> {
    segment_strides_with(frames, threshold, DEFAULT_REFRACTORY_S)
}

/// [`segment_strides`] with an explicit refractory lockout.
pub fn segment_strides_with(
    frames: &[SensorFrame],
    threshold: f64,
    refractory_s: f64,
) -> Result<Vec<Stride>> {
    let strike_idx = heel_strike_indices(frames, threshold, refractory_s)?;
    let mut strides = Vec::new();
    for pair in strike_idx.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let stride_frames = frames[start..end].to_vec();
        strides.push(Stride::from_frames(stride_frames, frames[end].t, threshold)?);
    }
    Ok(strides)
}

/// Frame indices of detected heel strikes, after validating the stream.
pub fn heel_strike_indices(
    frames: &[SensorFrame],
    threshold: f64,
    refractory_s: f64,
) -> Result<Vec<usize>> {
    let mut detector = HeelStrikeDetector::new(threshold, refractory_s);
    let mut strike_idx = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        f.validate()?;
        if i > 0 && f.t <= frames[i - 1].t {
            return Err(Error::SignalFault(format!(
                "non-increasing timestamps at t={}",
                f.t
            )));
        }
        if detector.step(f.t, f.p_heel) {
            strike_idx.push(i);
        }
    }
    Ok(strike_idx)
}

/// Per-channel streaming conditioning: EMG rectification plus the standard
/// moving-average windows for EMG, pressure, and tibia velocity.
///
/// The tibia angle and both ankle channels pass through unfiltered.
#[derive(Debug, Clone)]
pub struct ChannelFilters {
    emg_gas: MovingAverage,
    emg_ta: MovingAverage,
    p_heel: MovingAverage,
    p_toe: MovingAverage,
    theta_dot_tib: MovingAverage,
}

impl ChannelFilters {
    pub fn new(rate_hz: f64) -> Result<Self> {
        Ok(Self {
            emg_gas: MovingAverage::from_window_ms(EMG_WINDOW_MS, rate_hz)?,
            emg_ta: MovingAverage::from_window_ms(EMG_WINDOW_MS, rate_hz)?,
            p_heel: MovingAverage::from_window_ms(PRESSURE_WINDOW_MS, rate_hz)?,
            p_toe: MovingAverage::from_window_ms(PRESSURE_WINDOW_MS, rate_hz)?,
            theta_dot_tib: MovingAverage::from_window_ms(TIBIA_VELOCITY_WINDOW_MS, rate_hz)?,
        })
    }

    /// Conditions one frame, advancing all filter states.
    pub fn apply(&mut self, frame: &SensorFrame) -> Result<SensorFrame> {
        if !frame.is_finite() {
            return Err(Error::SignalFault(format!(
                "non-finite frame at t={}",
                frame.t
            )));
        }
        Ok(SensorFrame {
            t: frame.t,
            theta_tib: frame.theta_tib,
            theta_dot_tib: self.theta_dot_tib.step(frame.theta_dot_tib)?,
            p_heel: self.p_heel.step(frame.p_heel)?,
            p_toe: self.p_toe.step(frame.p_toe)?,
            emg_gas: self.emg_gas.step(frame.emg_gas.abs())?,
            emg_ta: self.emg_ta.step(frame.emg_ta.abs())?,
            theta_ankle: frame.theta_ankle,
            theta_dot_ankle: frame.theta_dot_ankle,
        })
    }

    pub fn reset(&mut self) {
        self.emg_gas.reset();
        self.emg_ta.reset();
        self.p_heel.reset();
        self.p_toe.reset();
        self.theta_dot_tib.reset();
    }
}

/// Conditions a whole stream with fresh filter state.
pub fn condition_stream(frames: &[SensorFrame], rate_hz: f64) -> Result<Vec<SensorFrame>> {
    let mut filters = ChannelFilters::new(rate_hz)?;
    frames.iter().map(|f| filters.apply(f)).collect()
}
