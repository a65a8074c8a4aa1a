// Copyright 2026 The robustctl Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON files. CSVs are comma-separated with a header row and LF
//! line endings; floats use Rust's shortest round-trip formatting, so every
//! value reads back to the same bits.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{ErrorSpectrum, MinTimeRow};
use crate::grape::PulseSchedule;

/// Shortest decimal string that parses back to `x`.
pub fn fmt_float(x: f64) -> String {
    format!("{x}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn parse_f64(field: &str, what: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::PulseFormat(format!("row {row}: bad {what} `{field}`")))
}

pub fn write_pulse_csv<W: Write>(w: W, schedule: &PulseSchedule) -> Result<()> {
    let mut out = writer(w);
    let mut header = vec![
        "segment_index".to_string(),
        "t_start".into(),
        "t_end".into(),
    ];
    header.extend((0..schedule.n_controls()).map(|k| format!("control_{k}")));
    out.write_record(&header)?;
    for m in 0..schedule.n_segments() {
        let (t0, t1) = schedule.segment_bounds(m);
        let mut rec = vec![m.to_string(), fmt_float(t0), fmt_float(t1)];
        rec.extend(schedule.amplitudes().iter().map(|row| fmt_float(row[m])));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a pulse file written by [`write_pulse_csv`]. Segments must be
/// listed in order, start at 0 and be contiguous; the total time is the last
/// `t_end`.
pub fn read_pulse_csv<R: Read>(r: R, amplitude_bound: f64) -> Result<PulseSchedule> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let fixed = ["segment_index", "t_start", "t_end"];
    if header.len() < 4 || header.iter().take(3).ne(fixed.iter().copied()) {
        return Err(Error::PulseFormat(
            "header must be segment_index,t_start,t_end followed by one column per control".into(),
        ));
    }
    let n_controls = header.len() - 3;
    let mut amps = vec![Vec::new(); n_controls];
    let mut last_end = 0.0;
    let mut spans = Vec::new();
    let mut n = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::PulseFormat(format!("row {}: {e}", i + 1)))?;
        if rec.len() != header.len() {
            return Err(Error::PulseFormat(format!(
                "row {}: expected {} columns, got {}",
                i + 1,
                header.len(),
                rec.len()
            )));
        }
        let idx: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::PulseFormat(format!("row {}: bad segment_index", i + 1)))?;
        if idx != i {
            return Err(Error::PulseFormat(format!(
                "row {}: segment_index {idx} out of order",
                i + 1
            )));
        }
        let t0 = parse_f64(&rec[1], "t_start", i + 1)?;
        let t1 = parse_f64(&rec[2], "t_end", i + 1)?;
        let tol = 1e-9 * t1.abs().max(1.0);
        if (t0 - last_end).abs() > tol || t1 < t0 {
            return Err(Error::PulseFormat(format!(
                "row {}: segments are not contiguous",
                i + 1
            )));
        }
        last_end = t1;
        spans.push(t1 - t0);
        for (k, col) in amps.iter_mut().enumerate() {
            col.push(parse_f64(&rec[3 + k], "amplitude", i + 1)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::PulseFormat("no segments".into()));
    }
    let sched = PulseSchedule::new(last_end, amps, amplitude_bound)
        .map_err(|e| Error::PulseFormat(e.to_string()))?;
    let dt = sched.segment_duration();
    // Segments must be uniform.
    let uniform = spans.iter().all(|w| (w - dt).abs() <= 1e-9 * dt.max(1.0));
    if !uniform {
        return Err(Error::PulseFormat(
            "segments must have equal durations".into(),
        ));
    }
    Ok(sched)
}

pub fn save_pulse(path: &Path, schedule: &PulseSchedule) -> Result<()> {
    let mut buf = Vec::new();
    write_pulse_csv(&mut buf, schedule)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_pulse(path: &Path, amplitude_bound: f64) -> Result<PulseSchedule> {
    read_pulse_csv(fs::File::open(path)?, amplitude_bound)
}

pub fn write_spectrum_csv<W: Write>(w: W, spectrum: &ErrorSpectrum) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "omega",
        "error_literal",
        "error_phase_insensitive",
        "grid_point",
    ])?;
    for i in 0..spectrum.omegas.len() {
        out.write_record([
            fmt_float(spectrum.omegas[i]),
            fmt_float(spectrum.errors_literal[i]),
            fmt_float(spectrum.errors_phase_insensitive[i]),
            u8::from(spectrum.grid_point[i]).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mintime_csv<W: Write>(w: W, rows: &[MinTimeRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record([
        "N",
        "epsilon",
        "T",
        "converged",
        "restarts_used",
        "wall_time_s",
    ])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            fmt_float(r.epsilon),
            r.t.to_string(),
            r.converged.to_string(),
            r.restarts_used.to_string(),
            fmt_float(r.wall_time_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_polyfit_csv<W: Write>(w: W, table: &[(usize, f64)]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["K", "sup_error"])?;
    for (k, e) in table {
        out.write_record([k.to_string(), fmt_float(*e)])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary file and a rename, so a
/// crash never leaves a half-written file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
