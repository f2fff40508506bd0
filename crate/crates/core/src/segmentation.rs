//! Segment boundaries from wavelet maxima or the local boundary detection
//! model (LBDM), and cutting representation signals into segments.

use serde::Serialize;
use thiserror::Error;

use crate::melody::Melody;
use crate::pitch_signal::{normalize, PitchSignal};
use crate::wavelet::{cwt_row, full_window_len, local_maxima, WaveletError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("LBDM needs at least 2 notes, got {0}")]
    TooFewNotes(usize),
    #[error("LBDM threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("sampling rate must be at least 1")]
    ZeroRate,
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
}

/// Which signal a segment was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Mean-normalized pitch signal.
    Vr,
    /// Haar coefficient row.
    Wr,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Vr => "vr",
            Representation::Wr => "wr",
        }
    }
}

/// Sorted, deduplicated cut points strictly inside `(0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundarySet {
    cuts: Vec<usize>,
    len: usize,
}

impl BoundarySet {
    /// Keeps candidates in `(0, len)`, sorted and deduplicated.
    pub fn from_candidates(candidates: impl IntoIterator<Item = usize>, len: usize) -> Self {
        let mut cuts: Vec<usize> = candidates.into_iter().filter(|&c| c > 0 && c < len).collect();
        cuts.sort_unstable();
        cuts.dedup();
        Self { cuts, len }
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Length of the signal these boundaries refer to.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// `[start, end)` spans tiling `[0, len)`.
    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let starts = std::iter::once(0).chain(self.cuts.iter().copied());
        let ends = self.cuts.iter().copied().chain(std::iter::once(self.len));
        starts.zip(ends)
    }

    pub fn is_subset_of(&self, other: &BoundarySet) -> bool {
        self.cuts.iter().all(|c| other.cuts.binary_search(c).is_ok())
    }
}

/// Cut points at positive local maxima of a coefficient row.
///
/// Under the fall-positive sign convention these are the locally largest
/// pitch falls; zero or negative peaks are not boundaries. Only positions
/// where the kernel of `scale` fits inside the padded signal are searched:
/// the repeated tail of a long-scale row would otherwise start a spurious
/// plateau peak.
pub fn boundaries_from_row(row: &[f64], scale: usize) -> BoundarySet {
    let searched = &row[..full_window_len(row.len(), scale)];
    let peaks = local_maxima(searched).into_iter().filter(|&i| row[i] > 0.0);
    BoundarySet::from_candidates(peaks, row.len())
}

/// Wavelet segmentation (ws) of a pitch signal at one scale.
pub fn wavelet_boundaries(signal: &PitchSignal, scale: usize) -> Result<BoundarySet, WaveletError> {
    Ok(boundaries_from_row(&cwt_row(signal.samples(), scale)?, scale))
}

/// LBDM boundary strength per note-to-note transition, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStrengthProfile {
    strengths: Vec<f64>,
}

impl BoundaryStrengthProfile {
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }
}

const PITCH_WEIGHT: f64 = 0.25;
const IOI_WEIGHT: f64 = 0.5;
const REST_WEIGHT: f64 = 0.25;

/// Relative change between two non-negative interval sizes.
pub fn degree_of_change(x: f64, y: f64) -> f64 {
    if x + y > 0.0 {
        (x - y).abs() / (x + y)
    } else {
        0.0
    }
}

/// Strength of each interval relative to its neighbours, scaled so that the
/// largest is 1 (or all zero).
fn parameter_strengths(intervals: &[f64]) -> Vec<f64> {
    let n = intervals.len();
    let mut raw: Vec<f64> = (0..n)
        .map(|i| {
            let x = intervals[i];
            let prev = if i > 0 { intervals[i - 1] } else { x };
            let next = if i + 1 < n { intervals[i + 1] } else { x };
            x * (degree_of_change(prev, x) + degree_of_change(x, next))
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for s in &mut raw {
            *s /= max;
        }
    }
    raw
}

pub fn lbdm_profile(melody: &Melody) -> Result<BoundaryStrengthProfile, SegmentationError> {
    let notes = melody.notes();
    if notes.len() < 2 {
        return Err(SegmentationError::TooFewNotes(notes.len()));
    }
    let to_f64 = |q: crate::QuarterNotes| *q.numer() as f64 / *q.denom() as f64;
    let mut pitch = Vec::with_capacity(notes.len() - 1);
    let mut ioi = Vec::with_capacity(notes.len() - 1);
    let mut rest = Vec::with_capacity(notes.len() - 1);
    for pair in notes.windows(2) {
        pitch.push((f64::from(pair[1].pitch()) - f64::from(pair[0].pitch())).abs());
        ioi.push(to_f64(pair[1].onset() - pair[0].onset()));
        rest.push(to_f64(pair[1].onset() - pair[0].end()).max(0.0));
    }
    let (pitch, ioi, rest) = (
        parameter_strengths(&pitch),
        parameter_strengths(&ioi),
        parameter_strengths(&rest),
    );
    let strengths = (0..pitch.len())
        .map(|i| PITCH_WEIGHT * pitch[i] + IOI_WEIGHT * ioi[i] + REST_WEIGHT * rest[i])
        .collect();
    Ok(BoundaryStrengthProfile { strengths })
}

/// LBDM segmentation: a cut at the (rounded) sample of the second note of
/// every transition whose strength exceeds `threshold`.
pub fn lbdm_boundaries(
    melody: &Melody,
    threshold: f64,
    rate: u32,
) -> Result<BoundarySet, SegmentationError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(SegmentationError::InvalidThreshold(threshold));
    }
    if rate == 0 {
        return Err(SegmentationError::ZeroRate);
    }
    let profile = lbdm_profile(melody)?;
    let r = i64::from(rate);
    let len = (melody.end() * r).ceil().to_integer() as usize;
    let notes = melody.notes();
    let cuts = profile
        .strengths
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, _)| (notes[i + 1].onset() * r).round().to_integer() as usize);
    Ok(BoundarySet::from_candidates(cuts, len))
}

/// A contiguous slice of one melody's representation signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    values: Vec<f64>,
    melody_id: String,
    start: usize,
    end: usize,
    representation: Representation,
}

impl Segment {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn melody_id(&self) -> &str {
        &self.melody_id
    }

    /// `[start, end)` sample span in the source signal.
    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a free-standing segment spanning `[0, values.len())`.
    ///
    /// # Panics
    /// If `values` is empty.
    pub fn from_values(values: Vec<f64>, melody_id: impl Into<String>, representation: Representation) -> Self {
        assert!(!values.is_empty(), "segments are non-empty");
        Self {
            end: values.len(),
            values,
            melody_id: melody_id.into(),
            start: 0,
            representation,
        }
    }
}

/// Cuts `series` at `boundaries`. Vr segments are mean-normalized after
/// cutting; wr segments keep the coefficients verbatim.
///
/// # Panics
/// If `boundaries` were built for a different length than `series`.
pub fn extract_segments(
    series: &[f64],
    boundaries: &BoundarySet,
    representation: Representation,
    melody_id: &str,
) -> Vec<Segment> {
    assert_eq!(series.len(), boundaries.signal_len(), "boundaries do not match series");
    boundaries
        .spans()
        .filter(|(start, end)| end > start)
        .map(|(start, end)| {
            let slice = &series[start..end];
            let values = match representation {
                Representation::Vr => normalize(slice).expect("span is non-empty"),
                Representation::Wr => slice.to_vec(),
            };
            Segment {
                values,
                melody_id: melody_id.to_owned(),
                start,
                end,
                representation,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melody::{qn, NoteEvent};
    use crate::pitch_signal::sample_melody;

    fn isochronous(pitches: &[i32]) -> Melody {
        let notes = pitches
            .iter()
            .enumerate()
            .map(|(i, &p)| NoteEvent::new(p, qn(i as i64, 1), qn(1, 1)).unwrap())
            .collect();
        Melody::new("iso", notes).unwrap()
    }

    #[test]
    fn boundary_set_filters_and_sorts() {
        let b = BoundarySet::from_candidates([8, 0, 4, 12, 4], 12);
        assert_eq!(b.cuts(), &[4, 8]);
        assert_eq!(b.spans().collect::<Vec<_>>(), vec![(0, 4), (4, 8), (8, 12)]);
    }

    #[test]
    fn degree_of_change_examples() {
        assert_eq!(degree_of_change(2.0, 6.0), 0.5);
        assert_eq!(degree_of_change(0.0, 0.0), 0.0);
        assert_eq!(degree_of_change(3.0, 3.0), 0.0);
    }

    #[test]
    fn constant_isochronous_profile_is_zero() {
        let p = lbdm_profile(&isochronous(&[60; 6])).unwrap();
        assert_eq!(p.strengths(), &[0.0; 5]);
        for t in [0.0, 0.1, 0.5, 1.0] {
            assert!(lbdm_boundaries(&isochronous(&[60; 6]), t, 8).unwrap().is_empty());
        }
    }

    #[test]
    fn leap_dominates_profile() {
        // Pitch intervals [0, 12, 0]: only the middle one has a non-zero
        // strength, 12·(1 + 1) = 24, normalized to 1 and weighted by 0.25.
        let m = isochronous(&[60, 60, 72, 72]);
        let p = lbdm_profile(&m).unwrap();
        assert_eq!(p.strengths(), &[0.0, 0.25, 0.0]);
        assert_eq!(lbdm_boundaries(&m, 0.0, 8).unwrap().cuts(), &[16]);
        assert!(lbdm_boundaries(&m, 0.25, 8).unwrap().is_empty());
        assert!(lbdm_boundaries(&m, 1.0, 8).unwrap().is_empty());
    }

    #[test]
    fn lbdm_errors() {
        assert_eq!(
            lbdm_profile(&isochronous(&[60])),
            Err(SegmentationError::TooFewNotes(1))
        );
        assert_eq!(
            lbdm_boundaries(&isochronous(&[60, 62]), 1.5, 8),
            Err(SegmentationError::InvalidThreshold(1.5))
        );
    }

    #[test]
    fn rests_and_long_notes_register() {
        // 60 60 (rest) 60 60, isochronous onsets except a longer gap.
        let notes = vec![
            NoteEvent::new(60, qn(0, 1), qn(1, 1)).unwrap(),
            NoteEvent::new(60, qn(1, 1), qn(1, 1)).unwrap(),
            NoteEvent::new(60, qn(3, 1), qn(1, 1)).unwrap(),
            NoteEvent::new(60, qn(4, 1), qn(1, 1)).unwrap(),
        ];
        let m = Melody::new("r", notes).unwrap();
        let p = lbdm_profile(&m).unwrap();
        let s = p.strengths();
        assert!(s[1] > s[0] && s[1] > s[2]);
        assert_eq!(lbdm_boundaries(&m, 0.5, 4).unwrap().cuts(), &[12]);
    }

    #[test]
    fn constant_melody_has_no_wavelet_cuts() {
        let s = sample_melody(&isochronous(&[67; 5]), 8).unwrap();
        for scale in [2, 8, 32] {
            assert!(wavelet_boundaries(&s, scale).unwrap().is_empty());
        }
    }

    #[test]
    fn extract_tiles_series() {
        let series: Vec<f64> = (0..12).map(f64::from).collect();
        let none = extract_segments(&series, &BoundarySet::from_candidates([], 12), Representation::Wr, "m");
        assert_eq!(none.len(), 1);
        assert_eq!(none[0].values(), &series[..]);

        let b = BoundarySet::from_candidates([4, 8], 12);
        let segs = extract_segments(&series, &b, Representation::Wr, "m");
        let spans: Vec<_> = segs.iter().map(Segment::span).collect();
        assert_eq!(spans, vec![(0, 4), (4, 8), (8, 12)]);
        assert_eq!(segs[1].values(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(segs[1].melody_id(), "m");
    }

    #[test]
    fn vr_segments_are_normalized() {
        let b = BoundarySet::from_candidates([], 3);
        let segs = extract_segments(&[60.0, 62.0, 64.0], &b, Representation::Vr, "m");
        assert_eq!(segs[0].values(), &[-2.0, 0.0, 2.0]);
        assert_eq!(segs[0].representation(), Representation::Vr);
    }
}
