//! Sampling melodies into pitch signals.
//!
//! Sample `l` holds the pitch sounding at time `l / rate`. Rests never reach
//! the signal: a leading rest takes the first note's pitch and any later rest
//! keeps the pitch of the note before it.

use thiserror::Error;

use crate::melody::{Melody, NoteEvent, QuarterNotes};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignalError {
    #[error("sampling rate must be at least 1")]
    ZeroRate,
    #[error("cannot normalize an empty vector")]
    EmptyVector,
}

/// Sampled pitch-over-time series.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchSignal {
    samples: Vec<f64>,
    rate: u32,
}

impl PitchSignal {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Samples per quarter note.
    pub fn rate(&self) -> u32 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// A stretch of the gap-free timeline, `[start, end)` at one pitch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineSpan {
    pub start: QuarterNotes,
    pub end: QuarterNotes,
    pub pitch: u8,
}

/// Removes rests by stretching notes: the first note reaches back to time 0
/// and every note lasts until the next onset.
pub fn rest_fill(notes: &[NoteEvent]) -> Vec<TimelineSpan> {
    let mut spans = Vec::with_capacity(notes.len());
    for (i, note) in notes.iter().enumerate() {
        let start = if i == 0 {
            QuarterNotes::from_integer(0)
        } else {
            note.onset()
        };
        let end = notes.get(i + 1).map_or_else(|| note.end(), NoteEvent::onset);
        spans.push(TimelineSpan {
            start,
            end,
            pitch: note.pitch(),
        });
    }
    spans
}

/// Samples `melody` at `rate` samples per quarter note.
///
/// The signal has `ceil(end × rate)` samples, so a final note shorter than one
/// sample period still gets its sample.
pub fn sample_melody(melody: &Melody, rate: u32) -> Result<PitchSignal, SignalError> {
    if rate == 0 {
        return Err(SignalError::ZeroRate);
    }
    let r = i64::from(rate);
    let to_sample = |t: QuarterNotes| (t * r).ceil().to_integer() as usize;
    let len = to_sample(melody.end());
    let mut samples = Vec::with_capacity(len);
    for span in rest_fill(melody.notes()) {
        let (from, to) = (to_sample(span.start), to_sample(span.end));
        samples.extend(std::iter::repeat_n(f64::from(span.pitch), to.saturating_sub(from)));
    }
    debug_assert_eq!(samples.len(), len);
    Ok(PitchSignal { samples, rate })
}

/// Subtracts the arithmetic mean.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>, SignalError> {
    if values.is_empty() {
        return Err(SignalError::EmptyVector);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(values.iter().map(|v| v - mean).collect())
}
