//! Mirror-padded Haar continuous wavelet transform.
//!
//! The Haar kernel at scale `s` has `s` taps: `+1/√s` on the first half and
//! `−1/√s` on the second, so a falling pitch gives a positive coefficient.
//! Coefficient `w_s[u]` is the inner product of the kernel with the signal
//! when the kernel's left edge sits at sample `u`.
//!
//! Before filtering, the signal is extended on both sides by `min(s, L)`
//! reflected samples; the output is cropped back to the original `L`
//! positions. When `s > L + 1` the kernel would run past the right end of the
//! padded signal for the last few positions; those positions reuse the last
//! window that fits completely. A scale longer than the whole padded signal
//! (`s > 3L`) cannot be evaluated and is reported instead.

use thiserror::Error;

use crate::par;

/// Dyadic scale set in samples: `2^j` for `j = 1..=8`.
pub const DYADIC_SCALES: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

/// Maps a 1-based scale index to its dyadic scale in samples.
pub fn dyadic_scale(index: u8) -> Option<usize> {
    DYADIC_SCALES.get(usize::from(index).checked_sub(1)?).copied()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WaveletError {
    #[error("Haar scale {0} is odd")]
    OddScale(usize),
    #[error("Haar scale {0} is smaller than 2")]
    ScaleTooSmall(usize),
    #[error("mirror pad of {pad} exceeds signal length {len}")]
    PadTooLarge { pad: usize, len: usize },
    #[error("scale {scale} does not fit a mirror-padded signal of length {len}")]
    ScaleExceedsSignal { scale: usize, len: usize },
    #[error("signal is empty")]
    EmptySignal,
}

/// Unit-energy, zero-mean Haar filter of even length.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarKernel {
    scale: usize,
    values: Vec<f64>,
}

impl HaarKernel {
    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_scale(scale: usize) -> Result<(), WaveletError> {
    if scale < 2 {
        Err(WaveletError::ScaleTooSmall(scale))
    } else if scale % 2 == 1 {
        Err(WaveletError::OddScale(scale))
    } else {
        Ok(())
    }
}

fn tap(scale: usize) -> f64 {
    1.0 / (scale as f64).sqrt()
}

pub fn haar_kernel(scale: usize) -> Result<HaarKernel, WaveletError> {
    check_scale(scale)?;
    let a = tap(scale);
    let half = scale / 2;
    let values = (0..scale).map(|i| if i < half { a } else { -a }).collect();
    Ok(HaarKernel { scale, values })
}

/// Reflects `pad` samples onto each end, duplicating the edge sample:
/// `[1, 2, 3]` with pad 2 becomes `[2, 1, 1, 2, 3, 3, 2]`.
pub fn mirror_pad(signal: &[f64], pad: usize) -> Result<Vec<f64>, WaveletError> {
    let len = signal.len();
    if pad > len {
        return Err(WaveletError::PadTooLarge { pad, len });
    }
    let mut out = Vec::with_capacity(len + 2 * pad);
    out.extend(signal[..pad].iter().rev());
    out.extend_from_slice(signal);
    out.extend(signal[len - pad..].iter().rev());
    Ok(out)
}

/// Coefficient rows for a set of scales, each aligned with the source signal.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    len: usize,
    scales: Vec<usize>,
    rows: Vec<Vec<f64>>,
    skipped: Vec<WaveletError>,
}

impl WaveletCoefficients {
    /// Scales that were computed, in request order.
    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, scale: usize) -> Option<&[f64]> {
        let i = self.scales.iter().position(|&s| s == scale)?;
        Some(&self.rows[i])
    }

    /// Length of the source signal (and of every row).
    pub fn signal_len(&self) -> usize {
        self.len
    }

    /// Scales that could not be evaluated on this signal.
    pub fn skipped(&self) -> &[WaveletError] {
        &self.skipped
    }
}

/// Haar CWT at every requested scale.
///
/// Invalid scales (odd, below 2) or an empty signal fail the whole call.
/// Scales too long for the signal are listed in
/// [`WaveletCoefficients::skipped`] and the rest are still computed.
pub fn cwt_haar(signal: &[f64], scales: &[usize]) -> Result<WaveletCoefficients, WaveletError> {
    if signal.is_empty() {
        return Err(WaveletError::EmptySignal);
    }
    for &s in scales {
        check_scale(s)?;
    }
    let computed = par::map_slice(scales, |&s| cwt_row(signal, s));
    let mut out = WaveletCoefficients {
        len: signal.len(),
        scales: Vec::new(),
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for (&s, row) in scales.iter().zip(computed) {
        match row {
            Ok(row) => {
                out.scales.push(s);
                out.rows.push(row);
            }
            Err(e) => out.skipped.push(e),
        }
    }
    Ok(out)
}

/// One coefficient row of [`cwt_haar`].
///
/// Window sums come from a prefix-sum table, so for integer-valued signals
/// (pitch numbers) the unscaled differences are exact and the row is bitwise
/// invariant under integer transposition.
pub fn cwt_row(signal: &[f64], scale: usize) -> Result<Vec<f64>, WaveletError> {
    check_scale(scale)?;
    let len = signal.len();
    if len == 0 {
        return Err(WaveletError::EmptySignal);
    }
    let pad = scale.min(len);
    let padded = mirror_pad(signal, pad)?;
    if scale > padded.len() {
        return Err(WaveletError::ScaleExceedsSignal { scale, len });
    }

    let mut prefix = Vec::with_capacity(padded.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in &padded {
        acc += v;
        prefix.push(acc);
    }

    let half = scale / 2;
    let last_start = padded.len() - scale;
    let a = tap(scale);
    Ok((0..len)
        .map(|u| {
            let start = (u + pad).min(last_start);
            let lead = prefix[start + half] - prefix[start];
            let trail = prefix[start + scale] - prefix[start + half];
            (lead - trail) * a
        })
        .collect())
}

/// Number of leading positions whose kernel fits inside the padded signal;
/// coefficients past this point repeat the last full window.
pub fn full_window_len(len: usize, scale: usize) -> usize {
    let pad = scale.min(len);
    (len + pad + 1).saturating_sub(scale).min(len)
}

/// Indices `i` with `series[i-1] < series[i] >= series[i+1]`.
///
/// Only the first index of a plateau can qualify, and the two endpoints never
/// do.
pub fn local_maxima(series: &[f64]) -> Vec<usize> {
    if series.len() < 3 {
        return Vec::new();
    }
    (1..series.len() - 1)
        .filter(|&i| series[i - 1] < series[i] && series[i] >= series[i + 1])
        .collect()
}
