//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tunewave::melody::qn;
use tunewave::{Melody, MetricKind, NoteEvent};

/// Sample at position `j` of the mirror-extended signal, where `j` is
/// measured in the original frame and may be negative or past the end.
fn reflected(signal: &[f64], j: isize) -> f64 {
    let len = signal.len() as isize;
    let idx = if j < 0 {
        -j - 1
    } else if j >= len {
        2 * len - 1 - j
    } else {
        j
    };
    signal[idx as usize]
}

/// Direct-summation Haar CWT row: explicit kernel, explicit inner product at
/// each position. `None` when the scale exceeds three signal lengths.
pub fn naive_cwt_row(signal: &[f64], scale: usize) -> Option<Vec<f64>> {
    let len = signal.len();
    let pad = scale.min(len);
    if scale > len + 2 * pad {
        return None;
    }
    let norm = (scale as f64).sqrt();
    let kernel: Vec<f64> = (0..scale)
        .map(|i| if 2 * i < scale { 1.0 / norm } else { -1.0 / norm })
        .collect();
    let last_start = (len + pad) as isize - scale as isize;
    Some(
        (0..len)
            .map(|u| {
                let start = (u as isize).min(last_start);
                kernel
                    .iter()
                    .enumerate()
                    .map(|(i, k)| k * reflected(signal, start + i as isize))
                    .sum()
            })
            .collect(),
    )
}

/// Positions of the largest value (all of them, on ties).
pub fn argmax_all(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&i| values[i] == max).collect()
}

fn pad(values: &[f64], n: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    assert!(v.len() <= n);
    v.resize(n, 0.0);
    v
}

pub fn oracle_distance(a: &[f64], b: &[f64], metric: MetricKind, n: usize) -> f64 {
    let (a, b) = (pad(a, n), pad(b, n));
    match metric {
        MetricKind::Cityblock => a.iter().zip(&b).fold(0.0, |acc, (x, y)| acc + (x - y).abs()),
        MetricKind::Euclidean => a.iter().zip(&b).fold(0.0, |acc, (x, y)| acc + (x - y) * (x - y)).sqrt(),
    }
}

fn decide(tally: HashMap<String, (usize, f64)>) -> (String, f64) {
    let mut entries: Vec<(String, (usize, f64))> = tally.into_iter().collect();
    entries.sort_by(|a, b| {
        b.1 .0
            .cmp(&a.1 .0)
            .then(a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .then(a.0.cmp(&b.0))
    });
    let (label, (_, sum)) = entries.swap_remove(0);
    (label, sum)
}

/// Exhaustive kNN: sort every training distance, let everything up to the
/// k-th distance vote, aggregate segment votes by plurality.
pub fn oracle_classify(
    query: &[Vec<f64>],
    training: &[(Vec<f64>, String)],
    k: usize,
    metric: MetricKind,
    n: usize,
) -> String {
    let mut melody_tally: HashMap<String, (usize, f64)> = HashMap::new();
    for q in query {
        let mut all: Vec<(f64, &str)> = training
            .iter()
            .map(|(t, label)| (oracle_distance(q, t, metric, n), label.as_str()))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let kth = all[k.min(all.len()) - 1].0;
        let mut tally: HashMap<String, (usize, f64)> = HashMap::new();
        for (d, label) in all.iter().filter(|(d, _)| *d <= kth) {
            let e = tally.entry(label.to_string()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d;
        }
        let (label, sum) = decide(tally);
        let e = melody_tally.entry(label).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += sum;
    }
    decide(melody_tally).0
}

/// Seeded random melody: `notes` notes with durations of 1 to 4 eighths,
/// occasional rests, pitches in 48..=84.
pub fn random_melody(rng: &mut ChaCha8Rng, id: &str, notes: usize) -> Melody {
    let mut t = qn(0, 1);
    let mut pitch: i32 = rng.random_range(55..=77);
    let events = (0..notes)
        .map(|_| {
            if rng.random_bool(0.1) {
                t += qn(rng.random_range(1..=2), 2);
            }
            pitch = (pitch + rng.random_range(-5..=5)).clamp(48, 84);
            let dur = qn(rng.random_range(1..=4), 2);
            let n = NoteEvent::new(pitch, t, dur).unwrap();
            t += dur;
            n
        })
        .collect();
    Melody::new(id, events).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Melody of consecutive notes, each `dur` quarter notes long.
pub fn melody_from(id: &str, pitches: &[i32], dur: i64) -> Melody {
    let notes = pitches
        .iter()
        .enumerate()
        .map(|(i, &p)| NoteEvent::new(p, qn(i as i64 * dur, 1), qn(dur, 1)).unwrap())
        .collect();
    Melody::new(id, notes).unwrap()
}
