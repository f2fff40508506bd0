//! Symbolic note events and monophonic melodies.

use num_rational::Ratio;
use thiserror::Error;

/// Exact time in quarter notes.
pub type QuarterNotes = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MelodyError {
    #[error("pitch {0} is outside the MIDI range 0..=127")]
    PitchOutOfRange(i32),
    #[error("note duration must be positive")]
    NonPositiveDuration,
    #[error("note onset must be non-negative")]
    NegativeOnset,
    #[error("melody has no notes")]
    Empty,
    #[error("note {0} does not start after the previous note")]
    Unordered(usize),
    #[error("note {0} overlaps the following note")]
    Overlap(usize),
}

/// One note: MIDI pitch plus onset and duration in quarter notes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NoteEvent {
    pitch: u8,
    onset: QuarterNotes,
    duration: QuarterNotes,
}

impl NoteEvent {
    pub fn new(pitch: i32, onset: QuarterNotes, duration: QuarterNotes) -> Result<Self, MelodyError> {
        if !(0..=127).contains(&pitch) {
            return Err(MelodyError::PitchOutOfRange(pitch));
        }
        if onset < QuarterNotes::from_integer(0) {
            return Err(MelodyError::NegativeOnset);
        }
        if duration <= QuarterNotes::from_integer(0) {
            return Err(MelodyError::NonPositiveDuration);
        }
        Ok(Self {
            pitch: pitch as u8,
            onset,
            duration,
        })
    }

    pub fn pitch(&self) -> u8 {
        self.pitch
    }

    pub fn onset(&self) -> QuarterNotes {
        self.onset
    }

    pub fn duration(&self) -> QuarterNotes {
        self.duration
    }

    pub fn end(&self) -> QuarterNotes {
        self.onset + self.duration
    }
}

/// A monophonic melody: non-empty, onsets strictly increasing, no overlaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Melody {
    id: String,
    notes: Vec<NoteEvent>,
    label: Option<String>,
}

impl Melody {
    pub fn new(id: impl Into<String>, notes: Vec<NoteEvent>) -> Result<Self, MelodyError> {
        if notes.is_empty() {
            return Err(MelodyError::Empty);
        }
        for (i, pair) in notes.windows(2).enumerate() {
            if pair[1].onset <= pair[0].onset {
                return Err(MelodyError::Unordered(i + 1));
            }
            if pair[0].end() > pair[1].onset {
                return Err(MelodyError::Overlap(i));
            }
        }
        Ok(Self {
            id: id.into(),
            notes,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// End time of the last note.
    pub fn end(&self) -> QuarterNotes {
        self.notes.last().map(NoteEvent::end).unwrap_or_default()
    }

    /// Shifts every pitch by `semitones`, keeping id, label and timing.
    pub fn transpose(&self, semitones: i32) -> Result<Self, MelodyError> {
        let notes = self
            .notes
            .iter()
            .map(|n| NoteEvent::new(n.pitch as i32 + semitones, n.onset, n.duration))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            id: self.id.clone(),
            notes,
            label: self.label.clone(),
        })
    }
}

/// Shorthand for building quarter-note values in tests and generators.
pub fn qn(numer: i64, denom: i64) -> QuarterNotes {
    QuarterNotes::new(numer, denom)
}
