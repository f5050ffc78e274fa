// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{EnvelopeReport, ErrorTrace, RunTrace};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::Scalar;

fn cell<T: Scalar>(v: T) -> String {
    if v == T::neg_infinity() {
        "-inf".to_string()
    } else {
        format!("{:.16e}", v.to_f64_lossless())
    }
}

/// Writes one row per (round, node), round-major. Estimate columns are
/// padded to the widest node; `bound_envelope` is empty without `envelope`.
pub fn write_trace_csv<T: Scalar, W: Write>(
    trace: &RunTrace<T>,
    err: &ErrorTrace<T>,
    envelope: Option<&EnvelopeReport<T>>,
    out: W,
) -> std::result::Result<(), csv::Error> {
    if err.rounds.len() != trace.rounds.len() {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "error trace and run trace have different lengths",
        )));
    }
    let width = trace.rounds.iter().flat_map(|r| r.estimates.iter().map(Vec::len)).max().unwrap_or(1).max(1);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["round".to_string(), "node_id".to_string()];
    header.extend((1..=width).map(|c| format!("est_{c}")));
    header.extend(["abs_error", "y1", "bound_envelope"].map(String::from));
    w.write_record(&header)?;

    for (k, r) in trace.rounds.iter().enumerate() {
        let bound = envelope.and_then(|e| e.envelope.get(k)).map(|v| cell(*v)).unwrap_or_default();
        for (i, est) in r.estimates.iter().enumerate() {
            let mut row = vec![r.round.to_string(), NodeId::from_index(i).to_string()];
            row.extend((0..width).map(|c| est.get(c).map(|v| cell(*v)).unwrap_or_default()));
            row.push(cell(err.abs_errors[k][i]));
            row.push(cell(err.y1[k]));
            row.push(bound.clone());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_trace_csv<T: Scalar>(
    trace: &RunTrace<T>,
    err: &ErrorTrace<T>,
    envelope: Option<&EnvelopeReport<T>>,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_trace_csv(trace, err, envelope, BufWriter::new(file))
        .map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}

/// Whitespace-separated `round y1 bound_y1` columns for gnuplot. Exact
/// rounds are written as `NaN` so plotting tools skip them.
pub fn export_plot_data<T: Scalar>(
    err: &ErrorTrace<T>,
    envelope: Option<&EnvelopeReport<T>>,
    path: &Path,
) -> Result<()> {
    let plot = |v: T| if v.is_finite() { format!("{:.10e}", v.to_f64_lossless()) } else { "NaN".to_string() };
    let bound_y1 = envelope.map(EnvelopeReport::envelope_y1);
    let mut text = String::from("# round y1 bound_y1\n");
    for (k, round) in err.rounds.iter().enumerate() {
        let b = bound_y1.as_ref().and_then(|b| b.get(k).copied()).map(plot).unwrap_or_else(|| "NaN".into());
        text.push_str(&format!("{round} {} {b}\n", plot(err.y1[k])));
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
