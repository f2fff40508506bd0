//! Labeled melody corpora: loading MIDI directories with a label sidecar,
//! and generating seeded synthetic tune families.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::LabelId;
use crate::melody::{qn, Melody, NoteEvent, QuarterNotes};
use crate::midi::{encode_midi, parse_midi, MidiError};
use crate::par;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("label file: {0}")]
    LabelFile(String),
    #[error("labeled file {0} does not exist")]
    MissingFile(String),
    #[error("MIDI file {0} has no entry in the label file")]
    UnlabeledFile(String),
    #[error("label file lists {0} more than once")]
    DuplicateEntry(String),
    #[error("{file}: {source}")]
    Parse {
        file: String,
        #[source]
        source: MidiError,
    },
    #[error("melody {0} has no tune-family label")]
    UnlabeledMelody(String),
    #[error("corpus is empty")]
    Empty,
    #[error("invalid synthetic corpus options: {0}")]
    InvalidOptions(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Labeled melodies plus the sorted set of distinct labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    melodies: Vec<Melody>,
    labels: Vec<String>,
}

impl LabeledCorpus {
    pub fn new(melodies: Vec<Melody>) -> Result<Self, CorpusError> {
        let mut labels = BTreeSet::new();
        for m in &melodies {
            let label = m.label().ok_or_else(|| CorpusError::UnlabeledMelody(m.id().to_owned()))?;
            labels.insert(label.to_owned());
        }
        Ok(Self {
            melodies,
            labels: labels.into_iter().collect(),
        })
    }

    pub fn melodies(&self) -> &[Melody] {
        &self.melodies
    }

    /// Distinct labels, sorted.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.melodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.melodies.is_empty()
    }

    /// Index of each melody's label in [`labels`](Self::labels).
    pub(crate) fn label_ids(&self) -> Vec<LabelId> {
        self.melodies
            .iter()
            .map(|m| {
                let label = m.label().expect("corpus melodies are labeled");
                self.labels.binary_search_by(|l| l.as_str().cmp(label)).expect("label indexed") as LabelId
            })
            .collect()
    }

    /// The same corpus without the melody at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut melodies = self.melodies.clone();
        melodies.remove(index);
        Self::new(melodies).expect("melodies stay labeled")
    }
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

/// Reads `filename,family` rows (header required).
fn read_labels(path: &Path) -> Result<BTreeMap<String, String>, CorpusError> {
    let text = fs::read(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_slice());
    let headers = reader.headers().map_err(|e| CorpusError::LabelFile(e.to_string()))?;
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["filename", "family"] {
        return Err(CorpusError::LabelFile(format!(
            "expected header \"filename,family\", found {:?}",
            names.join(",")
        )));
    }
    let mut labels = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::LabelFile(e.to_string()))?;
        let (Some(file), Some(family)) = (record.get(0), record.get(1)) else {
            return Err(CorpusError::LabelFile(format!("short row {record:?}")));
        };
        let (file, family) = (file.trim(), family.trim());
        if file.is_empty() || family.is_empty() {
            return Err(CorpusError::LabelFile(format!("empty field in row {record:?}")));
        }
        if labels.insert(file.to_owned(), family.to_owned()).is_some() {
            return Err(CorpusError::DuplicateEntry(file.to_owned()));
        }
    }
    Ok(labels)
}

/// Loads every MIDI file in `dir`, labeled from the CSV at `label_file`.
///
/// Melody ids are file names; melodies are ordered by file name.
pub fn load_corpus(dir: &Path, label_file: &Path) -> Result<LabeledCorpus, CorpusError> {
    let labels = read_labels(label_file)?;
    let mut on_disk = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && is_midi(&path) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                on_disk.insert(name.to_owned());
            }
        }
    }
    if let Some(missing) = labels.keys().find(|f| !dir.join(f).is_file()) {
        return Err(CorpusError::MissingFile(missing.clone()));
    }
    if let Some(stray) = on_disk.iter().find(|f| !labels.contains_key(*f)) {
        return Err(CorpusError::UnlabeledFile(stray.clone()));
    }
    if labels.is_empty() {
        return Err(CorpusError::Empty);
    }

    let entries: Vec<(&String, &String)> = labels.iter().collect();
    let melodies = par::map_slice(&entries, |&(file, family)| {
        let path = dir.join(file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let melody = parse_midi(&bytes, file.as_str()).map_err(|source| CorpusError::Parse {
            file: file.clone(),
            source,
        })?;
        Ok::<_, CorpusError>(melody.with_label(family.as_str()))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    LabeledCorpus::new(melodies)
}

/// Writes one `<id>.mid` per melody plus `labels.csv` into `dir`.
pub fn save_corpus(corpus: &LabeledCorpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels
        .write_record(["filename", "family"])
        .map_err(|e| CorpusError::LabelFile(e.to_string()))?;
    for m in corpus.melodies() {
        let name = if is_midi(Path::new(m.id())) {
            m.id().to_owned()
        } else {
            format!("{}.mid", m.id())
        };
        let path = dir.join(&name);
        fs::write(&path, encode_midi(m, SYNTH_PPQ)).map_err(io_err(&path))?;
        labels
            .write_record([name.as_str(), m.label().unwrap_or_default()])
            .map_err(|e| CorpusError::LabelFile(e.to_string()))?;
    }
    let bytes = labels.into_inner().map_err(|e| CorpusError::LabelFile(e.to_string()))?;
    let path = dir.join("labels.csv");
    fs::write(&path, bytes).map_err(io_err(&path))
}

const SYNTH_PPQ: u16 = 480;

/// Variation applied to each synthetic variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Variants are transposed by a uniform integer in `[-range, range]`.
    pub transpose_range: u8,
    /// Chance that a note is replaced by a two-note neighbour figure.
    pub ornament_prob: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            transpose_range: 7,
            ornament_prob: 0.15,
        }
    }
}

const MAJOR: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];
// Scale degrees relative to C4; keeps prototypes within 48..=84.
const DEGREE_RANGE: (i32, i32) = (-7, 14);
// Prototypes span 48..=84 and neighbour tones add at most 2 semitones, so
// this keeps every generated pitch within 36..=96.
const MAX_TRANSPOSE: u8 = 10;

fn degree_pitch(degree: i32) -> i32 {
    60 + 12 * degree.div_euclid(7) + MAJOR[degree.rem_euclid(7) as usize]
}

fn prototype(rng: &mut ChaCha8Rng) -> Vec<(i32, QuarterNotes)> {
    let durations = [qn(1, 2), qn(1, 1), qn(2, 1)];
    let steps = [-2, -1, 0, 1, 2];
    let count = rng.random_range(16..=32);
    let mut degree = rng.random_range(0..7);
    (0..count)
        .map(|_| {
            let mut step = steps[rng.random_range(0..steps.len())];
            if !(DEGREE_RANGE.0..=DEGREE_RANGE.1).contains(&(degree + step)) {
                step = -step;
            }
            degree += step;
            (degree_pitch(degree), durations[rng.random_range(0..durations.len())])
        })
        .collect()
}

/// Seeded synthetic corpus of `families × variants` melodies.
///
/// Each family has a random-walk prototype on the C major scale (16 to 32
/// notes, durations of 1/2, 1 or 2 quarter notes). Each variant transposes
/// the prototype and, with probability `ornament_prob` per note, replaces a
/// note by itself and a neighbour tone at half duration each. Melody ids are
/// `fNN_vNN` and labels `familyNN`.
pub fn synth_corpus(
    seed: u64,
    families: usize,
    variants: usize,
    options: SynthOptions,
) -> Result<LabeledCorpus, CorpusError> {
    if families < 2 {
        return Err(CorpusError::InvalidOptions("need at least 2 families".into()));
    }
    if variants == 0 {
        return Err(CorpusError::InvalidOptions("need at least 1 variant per family".into()));
    }
    if !(0.0..=1.0).contains(&options.ornament_prob) {
        return Err(CorpusError::InvalidOptions(format!(
            "ornament probability {} is outside [0, 1]",
            options.ornament_prob
        )));
    }
    if options.transpose_range > MAX_TRANSPOSE {
        return Err(CorpusError::InvalidOptions(format!(
            "transposition range {} exceeds {MAX_TRANSPOSE}",
            options.transpose_range
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = i32::from(options.transpose_range);
    let mut melodies = Vec::with_capacity(families * variants);
    for f in 0..families {
        let proto = prototype(&mut rng);
        let label = format!("family{:02}", f + 1);
        for v in 0..variants {
            let shift = rng.random_range(-range..=range);
            let mut notes = Vec::with_capacity(proto.len() * 2);
            let mut t = qn(0, 1);
            for &(pitch, dur) in &proto {
                let pitch = pitch + shift;
                if rng.random_bool(options.ornament_prob) {
                    let half = dur / 2;
                    let neighbour = [-2, -1, 1, 2][rng.random_range(0..4)];
                    notes.push(NoteEvent::new(pitch, t, half).expect("pitch in range"));
                    notes.push(NoteEvent::new(pitch + neighbour, t + half, half).expect("pitch in range"));
                } else {
                    notes.push(NoteEvent::new(pitch, t, dur).expect("pitch in range"));
                }
                t += dur;
            }
            let id = format!("f{:02}_v{:02}", f + 1, v + 1);
            melodies.push(Melody::new(id, notes).expect("notes are contiguous").with_label(label.as_str()));
        }
    }
    LabeledCorpus::new(melodies)
}
