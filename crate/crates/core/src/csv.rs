//! CSV layouts for every artifact the tools write. Reals are printed in
//! scientific notation with 15 significant digits.

use std::io::{self, Write};

use crate::precomp::IterationRecord;
use crate::signal::SampledSignal;

pub const SIGNAL_HEADER: &str = "time_s,amplitude";
pub const TAPS_HEADER: &str = "index,coefficient";
pub const RESPONSE_HEADER: &str = "frequency_hz,magnitude_db";
pub const DEVICE_CURVE_HEADER: &str = "input_volts,output,derivative";
pub const CONVERGENCE_HEADER: &str = "iteration,residual_ratio,mean_signed_error,max_abs_tap";

/// Formats a real with 15 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.14e}")
}

pub fn write_signal<W: Write>(mut w: W, s: &SampledSignal) -> io::Result<()> {
    writeln!(w, "{SIGNAL_HEADER}")?;
    for (n, v) in s.samples().iter().enumerate() {
        writeln!(w, "{},{}", real(s.time_at(n)), real(*v))?;
    }
    Ok(())
}

pub fn write_taps<W: Write>(mut w: W, taps: &[f64]) -> io::Result<()> {
    writeln!(w, "{TAPS_HEADER}")?;
    for (k, c) in taps.iter().enumerate() {
        writeln!(w, "{k},{}", real(*c))?;
    }
    Ok(())
}

/// `(frequency_hz, magnitude_db)` rows; used for spectra and filter responses.
pub fn write_response<W: Write>(mut w: W, rows: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "{RESPONSE_HEADER}")?;
    for (f, db) in rows {
        writeln!(w, "{},{}", real(*f), real(*db))?;
    }
    Ok(())
}

pub fn write_device_curve<W: Write>(mut w: W, rows: &[(f64, f64, f64)]) -> io::Result<()> {
    writeln!(w, "{DEVICE_CURVE_HEADER}")?;
    for (v, out, d) in rows {
        writeln!(w, "{},{},{}", real(*v), real(*out), real(*d))?;
    }
    Ok(())
}

pub fn write_convergence<W: Write>(mut w: W, records: &[IterationRecord]) -> io::Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.iteration,
            real(r.residual_ratio),
            real(r.mean_signed_error),
            real(r.max_abs_tap)
        )?;
    }
    Ok(())
}

/// Parses a numeric CSV into its header fields and rows.
pub fn parse_numeric(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| "empty CSV".to_string())?
        .split(',')
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("row {}: {e}", i + 1))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
