//! Standard MIDI File ingestion (formats 0 and 1, metrical division).
//!
//! All tracks and channels are merged into a single event stream before
//! note-on/note-off pairing. Tempo and velocity are ignored: only pitch,
//! onset and duration survive, with times expressed in quarter notes.

use std::collections::{HashMap, VecDeque};

use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use thiserror::Error;

use crate::melody::{Melody, NoteEvent, QuarterNotes};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MidiError {
    #[error("malformed MIDI file: {0}")]
    MalformedFile(String),
    #[error("MIDI file contains no resolvable notes")]
    EmptyMelody,
    #[error("SMPTE time division is not supported")]
    UnsupportedDivision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    // Offs sort before ons at the same tick so back-to-back repeats of one
    // pitch pair up correctly.
    Off,
    On,
}

#[derive(Debug, Clone, Copy)]
struct RawNote {
    pitch: u8,
    start: u64,
    end: u64,
}

/// Parses a Standard MIDI File into a monophonic melody.
///
/// Overlapping notes are resolved by truncating the earlier note at the later
/// onset; notes sharing an onset keep only the highest pitch.
pub fn parse_midi(bytes: &[u8], id: impl Into<String>) -> Result<Melody, MidiError> {
    let smf = Smf::parse(bytes).map_err(|e| MidiError::MalformedFile(e.to_string()))?;
    let ppq = match smf.header.timing {
        Timing::Metrical(t) => t.as_int(),
        Timing::Timecode(..) => return Err(MidiError::UnsupportedDivision),
    };
    if ppq == 0 {
        return Err(MidiError::MalformedFile("zero ticks per quarter note".into()));
    }
    let declared = bytes.get(10..12).map(|b| usize::from(u16::from_be_bytes([b[0], b[1]])));
    if declared != Some(smf.tracks.len()) {
        return Err(MidiError::MalformedFile(format!(
            "header declares {} tracks, found {}",
            declared.unwrap_or(0),
            smf.tracks.len()
        )));
    }
    if smf.header.format == Format::Sequential {
        return Err(MidiError::MalformedFile(
            "format 2 (sequential tracks) is not supported".into(),
        ));
    }

    let mut events: Vec<(u64, Edge, u8)> = Vec::new();
    let mut last_tick = 0u64;
    for track in &smf.tracks {
        let mut tick = 0u64;
        for event in track {
            tick += u64::from(event.delta.as_int());
            if let TrackEventKind::Midi { message, .. } = event.kind {
                match message {
                    MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                        events.push((tick, Edge::On, key.as_int()))
                    }
                    MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                        events.push((tick, Edge::Off, key.as_int()))
                    }
                    _ => {}
                }
            }
        }
        last_tick = last_tick.max(tick);
    }
    events.sort_by_key(|&(tick, edge, _)| (tick, edge));

    let mut open: HashMap<u8, VecDeque<u64>> = HashMap::new();
    let mut raw = Vec::new();
    for (tick, edge, pitch) in events {
        match edge {
            Edge::On => open.entry(pitch).or_default().push_back(tick),
            Edge::Off => {
                if let Some(start) = open.get_mut(&pitch).and_then(VecDeque::pop_front) {
                    raw.push(RawNote { pitch, start, end: tick });
                }
            }
        }
    }
    // Notes never switched off are closed at the end of the longest track.
    for (&pitch, starts) in &open {
        raw.extend(starts.iter().map(|&start| RawNote {
            pitch,
            start,
            end: last_tick,
        }));
    }
    raw.retain(|n| n.end > n.start);

    let resolved = resolve_monophonic(raw);
    if resolved.is_empty() {
        return Err(MidiError::EmptyMelody);
    }
    let ppq = i64::from(ppq);
    let notes = resolved
        .into_iter()
        .map(|n| {
            NoteEvent::new(
                i32::from(n.pitch),
                QuarterNotes::new(n.start as i64, ppq),
                QuarterNotes::new((n.end - n.start) as i64, ppq),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| MidiError::MalformedFile(e.to_string()))?;
    Melody::new(id, notes).map_err(|e| MidiError::MalformedFile(e.to_string()))
}

fn resolve_monophonic(mut raw: Vec<RawNote>) -> Vec<RawNote> {
    raw.sort_by(|a, b| a.start.cmp(&b.start).then(b.pitch.cmp(&a.pitch)));
    raw.dedup_by_key(|n| n.start);
    let next_starts: Vec<u64> = raw.iter().skip(1).map(|n| n.start).collect();
    for (note, next) in raw.iter_mut().zip(next_starts) {
        note.end = note.end.min(next);
    }
    raw
}

/// Serializes a melody as a format-0 MIDI file at the given resolution.
///
/// Times are rounded to the nearest tick. Output is byte-for-byte
/// deterministic for a given melody and resolution.
pub fn encode_midi(melody: &Melody, ppq: u16) -> Vec<u8> {
    let ppq = ppq.clamp(1, 0x7fff);
    let to_tick = |t: QuarterNotes| -> u64 { (t * i64::from(ppq)).round().to_integer().max(0) as u64 };

    let mut timeline: Vec<(u64, MidiMessage)> = Vec::with_capacity(melody.notes().len() * 2);
    for note in melody.notes() {
        let key = u7::new(note.pitch());
        timeline.push((to_tick(note.onset()), MidiMessage::NoteOn { key, vel: u7::new(64) }));
        timeline.push((to_tick(note.end()), MidiMessage::NoteOff { key, vel: u7::new(0) }));
    }
    // Stable sort keeps each note's on before its off and puts an off that
    // coincides with the next onset first (notes are emitted in time order).
    timeline.sort_by_key(|&(tick, _)| tick);

    let mut track = Vec::with_capacity(timeline.len() + 2);
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::Tempo(u24::new(500_000))),
    });
    let mut now = 0u64;
    for (tick, message) in timeline {
        track.push(TrackEvent {
            delta: u28::new((tick - now) as u32),
            kind: TrackEventKind::Midi {
                channel: u4::new(0),
                message,
            },
        });
        now = tick;
    }
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });

    let mut smf = Smf::new(Header::new(Format::SingleTrack, Timing::Metrical(u15::new(ppq))));
    smf.tracks.push(track);
    let mut out = Vec::new();
    smf.write_std(&mut out).expect("writing to a Vec cannot fail");
    out
}
