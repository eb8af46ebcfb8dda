//! CSV recordings with per-sample timestamps and their JSON sidecars.
//!
//! Real loggers jitter by about a percent, so rows are interpolated onto a
//! uniform grid at the sidecar's nominal rate before anything else runs.

use serde::{Deserialize, Serialize};

use super::{parse_class, Recording, RecordingMeta};
use crate::error::{malformed, Error, Result};

const WHAT: &str = "recording csv";
pub const CSV_HEADER: [&str; 5] = ["t_s", "ax_mg", "ay_mg", "az_mg", "label"];

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CsvSample {
    pub t_s: f64,
    pub ax_mg: f32,
    pub ay_mg: f32,
    pub az_mg: f32,
    pub label: u16,
}

#[derive(Deserialize)]
struct RawRow {
    t_s: f64,
    ax_mg: f32,
    ay_mg: f32,
    az_mg: f32,
    label: String,
}

pub fn parse_sidecar(json: &str) -> Result<RecordingMeta> {
    let meta: RecordingMeta =
        serde_json::from_str(json).map_err(|e| malformed("recording sidecar", e.to_string()))?;
    if !(meta.source_rate_hz > 0.0) || !meta.source_rate_hz.is_finite() {
        return Err(malformed("recording sidecar", "source_rate_hz must be positive"));
    }
    Ok(meta)
}

/// Parses `t_s,ax_mg,ay_mg,az_mg,label` rows and resamples them onto a
/// uniform grid at `meta.source_rate_hz` by linear interpolation. Labels
/// take the nearest row's value.
pub fn parse_recording_csv(data: &[u8], meta: RecordingMeta, id: u32) -> Result<Recording> {
    if !(meta.source_rate_hz > 0.0) || !meta.source_rate_hz.is_finite() {
        return Err(malformed(WHAT, "source rate must be positive"));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
    let header = reader.headers().map_err(|e| malformed(WHAT, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(malformed(WHAT, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut rows: Vec<CsvSample> = Vec::new();
    for (line, row) in reader.deserialize::<RawRow>().enumerate() {
        let row = row.map_err(|e| malformed(WHAT, e.to_string()))?;
        let label = parse_class(&row.label)
            .ok_or_else(|| malformed(WHAT, format!("row {}: unknown label {:?}", line + 1, row.label)))?;
        let values = [row.ax_mg, row.ay_mg, row.az_mg];
        if !row.t_s.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(malformed(WHAT, format!("row {}: non-finite value", line + 1)));
        }
        if let Some(prev) = rows.last() {
            if row.t_s <= prev.t_s {
                return Err(malformed(WHAT, format!("row {}: timestamps must increase", line + 1)));
            }
        }
        rows.push(CsvSample {
            t_s: row.t_s,
            ax_mg: row.ax_mg,
            ay_mg: row.ay_mg,
            az_mg: row.az_mg,
            label,
        });
    }
    let rate = meta.source_rate_hz;
    let (samples, labels) = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) => {
            let span = (last.t_s - first.t_s) * rate;
            if span > 1e9 {
                return Err(malformed(WHAT, "recording span too long"));
            }
            let n = span.floor() as usize + 1;
            uniform_grid(&rows, first.t_s, rate, n)
        }
        _ => (vec![Vec::new(); 3], Vec::new()),
    };
    Ok(Recording {
        id,
        samples,
        labels,
        rate_hz: rate,
        meta,
    })
}

fn uniform_grid(rows: &[CsvSample], t0: f64, rate: f64, n: usize) -> (Vec<Vec<f32>>, Vec<u16>) {
    let mut axes = (0..3).map(|_| Vec::with_capacity(n)).collect::<Vec<_>>();
    let mut labels = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = t0 + i as f64 / rate;
        while j + 1 < rows.len() && rows[j + 1].t_s <= t {
            j += 1;
        }
        let a = &rows[j];
        let b = rows.get(j + 1).unwrap_or(a);
        let frac = if b.t_s > a.t_s {
            ((t - a.t_s) / (b.t_s - a.t_s)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let lerp = |x: f32, y: f32| (x as f64 + frac * (y as f64 - x as f64)) as f32;
        axes[0].push(lerp(a.ax_mg, b.ax_mg));
        axes[1].push(lerp(a.ay_mg, b.ay_mg));
        axes[2].push(lerp(a.az_mg, b.az_mg));
        labels.push(if frac <= 0.5 { a.label } else { b.label });
    }
    (axes, labels)
}

/// Writes a tri-axial recording as CSV with uniform timestamps.
pub fn write_recording_csv<W: std::io::Write>(recording: &Recording, out: W) -> Result<()> {
    if recording.channels() != 3 {
        return Err(Error::ExpectedTriAxial(recording.channels()));
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for n in 0..recording.len() {
        w.serialize(CsvSample {
            t_s: n as f64 / recording.rate_hz,
            ax_mg: recording.samples[0][n],
            ay_mg: recording.samples[1][n],
            az_mg: recording.samples[2][n],
            label: recording.labels[n],
        })
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
