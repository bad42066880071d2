//! CSV ingestion and emission for sensor streams, reference tables, and MVIC
//! trials. All formats are documented in `docs/formats.md`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::impedance::{ReferencePoint, ReferenceTrajectories};
use crate::signals::SensorFrame;

/// Column order of the sensor-stream CSV schema.
pub const SENSOR_CSV_HEADER: [&str; 9] = [
    "t",
    "theta_tib",
    "theta_dot_tib",
    "p_heel",
    "p_toe",
    "emg_gas",
    "emg_ta",
    "theta_ankle",
    "theta_dot_ankle",
];

fn check_header(actual: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let actual: Vec<&str> = actual.iter().collect();
    if actual != expected {
        return Err(Error::SchemaMismatch(format!(
            "expected header {:?}, got {:?}",
            expected.join(","),
            actual.join(",")
        )));
    }
    Ok(())
}

/// Reads a sensor stream, enforcing the header, finite values, normalized
/// pressures, and strictly increasing timestamps. Negative EMG (unrectified
/// input) is rectified on ingest.
pub fn read_frames_from<R: Read>(reader: R) -> Result<Vec<SensorFrame>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    check_header(rdr.headers()?, &SENSOR_CSV_HEADER)?;
    let mut frames = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for row in rdr.deserialize::<SensorFrame>() {
        let mut frame = row?;
        frame.emg_gas = frame.emg_gas.abs();
        frame.emg_ta = frame.emg_ta.abs();
        frame.validate()?;
        if frame.t <= prev_t {
            return Err(Error::SignalFault(format!(
                "non-increasing timestamp {}",
                frame.t
            )));
        }
        prev_t = frame.t;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn read_frames_csv<P: AsRef<Path>>(path: P) -> Result<Vec<SensorFrame>> {
    read_frames_from(File::open(path)?)
}

pub fn write_frames_to<W: Write>(writer: W, frames: &[SensorFrame]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for frame in frames {
        wtr.serialize(frame)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_frames_csv<P: AsRef<Path>>(path: P, frames: &[SensorFrame]) -> Result<()> {
    write_frames_to(File::create(path)?, frames)
}

/// Column order of the reference-table CSV schema.
pub const REFERENCE_CSV_HEADER: [&str; 4] = ["s", "theta_ref", "tau_ref", "power_ref"];

/// Reads a reference table (`#` comment lines allowed).
pub fn read_references_from<R: Read>(
    reader: R,
    stride_period_s: f64,
) -> Result<ReferenceTrajectories> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    check_header(rdr.headers()?, &REFERENCE_CSV_HEADER)?;
    let mut points = Vec::new();
    for row in rdr.deserialize::<ReferencePoint>() {
        points.push(row?);
    }
    ReferenceTrajectories::new(points, stride_period_s)
}

pub fn read_references_csv<P: AsRef<Path>>(
    path: P,
    stride_period_s: f64,
) -> Result<ReferenceTrajectories> {
    read_references_from(File::open(path)?, stride_period_s)
}

/// Writes a reference table with a comment header naming units, convention,
/// and provenance.
pub fn write_references_to<W: Write>(mut writer: W, refs: &ReferenceTrajectories) -> Result<()> {
    writeln!(
        writer,
        "# approximate able-bodied slow-walking reference, stride period {} s",
        refs.stride_period_s
    )?;
    writeln!(
        writer,
        "# units: s = percent gait, theta_ref = deg (dorsiflexion positive), tau_ref = Nm/kg, power_ref = W/kg"
    )?;
    let mut wtr = csv::Writer::from_writer(writer);
    for p in &refs.points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_references_csv<P: AsRef<Path>>(path: P, refs: &ReferenceTrajectories) -> Result<()> {
    write_references_to(File::create(path)?, refs)
}

/// One sample of a maximum-voluntary-contraction trial: `(t, emg)`.
pub const MVIC_CSV_HEADER: [&str; 2] = ["t", "emg"];

/// Reads an MVIC trial recording.
pub fn read_mvic_from<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    check_header(rdr.headers()?, &MVIC_CSV_HEADER)?;
    let mut samples = Vec::new();
    for row in rdr.deserialize::<(f64, f64)>() {
        let (t, emg) = row?;
        if !t.is_finite() || !emg.is_finite() {
            return Err(Error::SignalFault("non-finite MVIC sample".into()));
        }
        samples.push((t, emg));
    }
    Ok(samples)
}

pub fn read_mvic_csv<P: AsRef<Path>>(path: P) -> Result<Vec<(f64, f64)>> {
    read_mvic_from(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> SensorFrame {
        SensorFrame {
            t,
            theta_tib: 1.25,
            theta_dot_tib: -10.5,
            p_heel: 0.75,
            p_toe: 0.0,
            emg_gas: 0.125,
            emg_ta: 0.0625,
            theta_ankle: -2.5,
            theta_dot_ankle: 30.0,
        }
    }

    #[test]
    fn frames_round_trip() {
        let frames: Vec<SensorFrame> = (0..5).map(|i| frame(i as f64 * 0.1)).collect();
        let mut buf = Vec::new();
        write_frames_to(&mut buf, &frames).unwrap();
        let back = read_frames_from(buf.as_slice()).unwrap();
        assert_eq!(frames, back);
    }

    #[test]
    fn wrong_header_is_schema_mismatch() {
        let data = "time,theta\n0.0,1.0\n";
        assert!(matches!(
            read_frames_from(data.as_bytes()),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn non_increasing_time_is_signal_fault() {
        let mut frames = vec![frame(0.0), frame(0.1)];
        frames.push(frame(0.1));
        let mut buf = Vec::new();
        write_frames_to(&mut buf, &frames).unwrap();
        assert!(matches!(
            read_frames_from(buf.as_slice()),
            Err(Error::SignalFault(_))
        ));
    }

    #[test]
    fn negative_emg_is_rectified_on_ingest() {
        let data = "t,theta_tib,theta_dot_tib,p_heel,p_toe,emg_gas,emg_ta,theta_ankle,theta_dot_ankle\n\
                    0.0,0,0,0,0,-0.5,0.25,0,0\n";
        let frames = read_frames_from(data.as_bytes()).unwrap();
        assert_eq!(frames[0].emg_gas, 0.5);
        assert_eq!(frames[0].emg_ta, 0.25);
    }

    #[test]
    fn out_of_range_pressure_rejected() {
        let data = "t,theta_tib,theta_dot_tib,p_heel,p_toe,emg_gas,emg_ta,theta_ankle,theta_dot_ankle\n\
                    0.0,0,0,1.5,0,0,0,0,0\n";
        assert!(matches!(
            read_frames_from(data.as_bytes()),
            Err(Error::SignalFault(_))
        ));
    }

    #[test]
    fn references_round_trip_with_comments() {
        let refs = crate::design::build_references(1.4).unwrap();
        let mut buf = Vec::new();
        write_references_to(&mut buf, &refs).unwrap();
        let back = read_references_from(buf.as_slice(), 1.4).unwrap();
        assert_eq!(refs, back);
    }

    #[test]
    fn mvic_reads_pairs() {
        let data = "t,emg\n0.0,0.1\n0.1,0.8\n0.2,0.3\n";
        let samples = read_mvic_from(data.as_bytes()).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[1], (0.1, 0.8));
    }
}
