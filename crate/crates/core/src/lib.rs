//! Haar-wavelet filtering, segmentation and tune-family classification of
//! symbolic melodies.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`midi`] reads Standard MIDI Files into monophonic [`Melody`] values.
//! 2. [`pitch_signal`] samples a melody into a piecewise-constant pitch signal.
//! 3. [`wavelet`] filters the signal with a mirror-padded Haar CWT.
//! 4. [`segmentation`] cuts the signal (or one coefficient row) at wavelet
//!    maxima or at LBDM boundaries.
//! 5. [`classifier`] and [`evaluator`] label melodies by segment-level kNN and
//!    score configurations with leave-one-out cross-validation.
//!
//! With the default `parallel` feature the per-scale, per-melody and
//! per-configuration loops run on rayon. Disabling it gives a sequential
//! build whose results are bitwise identical.

pub mod classifier;
pub mod corpus;
pub mod evaluator;
pub mod melody;
pub mod midi;
mod par;
pub mod pitch_signal;
pub mod report;
pub mod segmentation;
pub mod wavelet;

pub use classifier::{classify_melody, distance, pad_to, LabeledSegment, MetricKind};
pub use corpus::{load_corpus, synth_corpus, LabeledCorpus, SynthOptions};
pub use evaluator::{
    grid_search, loocv, run_pipeline, EvalResult, Grid, GridReport, PipelineConfig,
    Representation, Segmentation,
};
pub use melody::{Melody, NoteEvent, QuarterNotes};
pub use midi::{encode_midi, parse_midi};
pub use pitch_signal::{normalize, rest_fill, sample_melody, PitchSignal};
pub use segmentation::{
    extract_segments, lbdm_boundaries, lbdm_profile, wavelet_boundaries, BoundarySet,
    BoundaryStrengthProfile, Segment,
};
pub use wavelet::{cwt_haar, haar_kernel, local_maxima, mirror_pad, HaarKernel, WaveletCoefficients};

/// Default sampling rate, in samples per quarter note.
pub const DEFAULT_RATE: u32 = 8;
