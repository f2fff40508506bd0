//! CSV output for results, summaries, coefficients and segments.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the exact `f64` that was computed.

use std::io::Write;

use crate::classifier::MetricKind;
use crate::evaluator::{EvalResult, SummaryCell, COMBOS};
use crate::segmentation::{BoundarySet, Segment};
use crate::wavelet::WaveletCoefficients;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub const RESULTS_HEADER: [&str; 7] = ["representation", "segmentation", "scale", "threshold", "k", "metric", "accuracy"];

/// One row per result; `scale` is the 1-based dyadic index, and `scale` or
/// `threshold` is empty where the combination does not use it.
pub fn write_results_csv<W: Write>(results: &[EvalResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        let c = &r.config;
        w.write_record([
            c.representation().to_string(),
            c.segmentation().to_string(),
            opt(c.scale_index()),
            opt(c.threshold()),
            c.k().to_string(),
            c.metric().to_string(),
            r.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Best/worst table per metric, one column per k, rows in the order
/// wr-ws, wr-lbdm, vr-ws, vr-lbdm.
pub fn write_summary_csv<W: Write>(cells: &[SummaryCell], out: W) -> csv::Result<()> {
    let mut ks: Vec<usize> = cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["metric".to_owned(), "combo".to_owned(), "value".to_owned()];
    header.extend(ks.iter().map(|k| format!("k{k}")));
    w.write_record(&header)?;
    for metric in MetricKind::ALL {
        for (rep, seg) in COMBOS {
            let row_cells: Vec<&SummaryCell> = cells
                .iter()
                .filter(|c| c.metric == metric && c.representation == rep && c.segmentation == seg)
                .collect();
            if row_cells.is_empty() {
                continue;
            }
            for (value, pick) in [("best", true), ("worst", false)] {
                let mut row = vec![metric.to_string(), format!("{rep}-{seg}"), value.to_owned()];
                for k in &ks {
                    let cell = row_cells.iter().find(|c| c.k == *k);
                    row.push(opt(cell.map(|c| if pick { c.best } else { c.worst })));
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per scale (in samples), one column per position.
pub fn write_coefficients_csv<W: Write>(coefficients: &WaveletCoefficients, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scale".to_owned()];
    header.extend((0..coefficients.signal_len()).map(|u| u.to_string()));
    w.write_record(&header)?;
    for (scale, row) in coefficients.scales().iter().zip(coefficients.rows()) {
        let mut record = vec![scale.to_string()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `melody_id,cut_samples` with cut points space-separated in one field.
pub fn write_boundaries_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = (&'a str, &'a BoundarySet)>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["melody_id", "cut_samples"])?;
    for (id, b) in rows {
        let cuts: Vec<String> = b.cuts().iter().map(usize::to_string).collect();
        w.write_record([id, cuts.join(" ").as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// `melody_id,start,end,values…`; rows are as long as their segments.
pub fn write_segments_csv<W: Write>(segments: &[Segment], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["melody_id", "start", "end", "values"])?;
    for s in segments {
        let (start, end) = s.span();
        let mut record = vec![s.melody_id().to_owned(), start.to_string(), end.to_string()];
        record.extend(s.values().iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
