//! Segment-level k-nearest-neighbour classification.
//!
//! Segments are compared as vectors zero-padded to a common length `n`.
//! Each query segment takes the majority label of its `k` nearest training
//! segments (every candidate tied with the k-th distance votes too), and the
//! melody takes the plurality label over its segments. Vote ties go to the
//! label with the smallest summed neighbour distance, then to the
//! lexicographically smallest label.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::segmentation::Segment;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifierError {
    #[error("segment of length {len} exceeds pad length {n}")]
    SegmentTooLong { len: usize, n: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("query melody has no segments")]
    EmptyQuery,
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Cityblock,
}

impl MetricKind {
    pub const ALL: [MetricKind; 2] = [MetricKind::Euclidean, MetricKind::Cityblock];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Cityblock => "cityblock",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(MetricKind::Euclidean),
            "cityblock" => Ok(MetricKind::Cityblock),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// A training segment and the tune family of its melody.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSegment {
    pub segment: Segment,
    pub label: String,
}

/// Zero-pads `values` at the end to length `n`.
pub fn pad_to(values: &[f64], n: usize) -> Result<Vec<f64>, ClassifierError> {
    if values.len() > n {
        return Err(ClassifierError::SegmentTooLong { len: values.len(), n });
    }
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(values);
    out.resize(n, 0.0);
    Ok(out)
}

/// Distance between `a` and `b` after zero-padding both to `n`.
pub fn distance(a: &[f64], b: &[f64], metric: MetricKind, n: usize) -> Result<f64, ClassifierError> {
    for v in [a, b] {
        if v.len() > n {
            return Err(ClassifierError::SegmentTooLong { len: v.len(), n });
        }
    }
    Ok(padded_distance(a, b, metric))
}

/// Same result as measuring the zero-padded vectors, without padding: terms
/// are accumulated in index order, and the all-zero tail adds nothing.
pub(crate) fn padded_distance(a: &[f64], b: &[f64], metric: MetricKind) -> f64 {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let tail = &long[short.len()..];
    match metric {
        MetricKind::Cityblock => {
            let mut acc = 0.0;
            for (x, y) in short.iter().zip(long) {
                acc += (x - y).abs();
            }
            for y in tail {
                acc += y.abs();
            }
            acc
        }
        MetricKind::Euclidean => {
            let mut acc = 0.0;
            for (x, y) in short.iter().zip(long) {
                let d = x - y;
                acc += d * d;
            }
            for y in tail {
                acc += y * y;
            }
            acc.sqrt()
        }
    }
}

/// Label index into a lexicographically sorted label table, so comparing
/// ids compares labels.
pub(crate) type LabelId = u32;

/// Training neighbours of one query segment, ascending by distance.
#[derive(Debug, Clone, Default)]
pub(crate) struct NeighbourList {
    entries: Vec<(f64, LabelId)>,
}

impl NeighbourList {
    /// Keeps only what a vote with any `k <= max_k` can see: everything up
    /// to and including ties with the `max_k`-th smallest distance.
    pub(crate) fn from_distances(mut entries: Vec<(f64, LabelId)>, max_k: usize) -> Self {
        let max_k = max_k.max(1);
        if entries.len() > max_k {
            let (_, kth, _) = entries.select_nth_unstable_by(max_k - 1, |a, b| a.0.total_cmp(&b.0));
            let cutoff = kth.0;
            entries.retain(|e| e.0 <= cutoff);
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self { entries }
    }

    /// Majority vote among the `k` nearest (plus ties). Returns the winning
    /// label and the summed distance of its voters.
    pub(crate) fn vote(&self, k: usize) -> Option<(LabelId, f64)> {
        let last = self.entries.get(k.max(1).min(self.entries.len()).checked_sub(1)?)?;
        let cutoff = last.0;
        let mut tally: BTreeMap<LabelId, (usize, f64)> = BTreeMap::new();
        for &(d, label) in self.entries.iter().take_while(|e| e.0 <= cutoff) {
            let t = tally.entry(label).or_insert((0, 0.0));
            t.0 += 1;
            t.1 += d;
        }
        pick(tally)
    }
}

/// Highest count wins, then smallest summed distance, then smallest label.
fn pick(tally: BTreeMap<LabelId, (usize, f64)>) -> Option<(LabelId, f64)> {
    tally
        .into_iter()
        .min_by(|(la, (ca, sa)), (lb, (cb, sb))| cb.cmp(ca).then(sa.total_cmp(sb)).then(la.cmp(lb)))
        .map(|(label, (_, sum))| (label, sum))
}

/// Melody-level plurality over per-segment votes.
pub(crate) fn melody_vote(segment_votes: impl IntoIterator<Item = (LabelId, f64)>) -> Option<LabelId> {
    let mut tally: BTreeMap<LabelId, (usize, f64)> = BTreeMap::new();
    for (label, sum) in segment_votes {
        let t = tally.entry(label).or_insert((0, 0.0));
        t.0 += 1;
        t.1 += sum;
    }
    pick(tally).map(|(label, _)| label)
}

/// Classifies a melody, given its segments, against labeled training
/// segments.
pub fn classify_melody(
    query: &[Segment],
    training: &[LabeledSegment],
    k: usize,
    metric: MetricKind,
    n: usize,
) -> Result<String, ClassifierError> {
    if training.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if query.is_empty() {
        return Err(ClassifierError::EmptyQuery);
    }
    if k == 0 {
        return Err(ClassifierError::ZeroK);
    }
    let too_long = query
        .iter()
        .map(Segment::len)
        .chain(training.iter().map(|t| t.segment.len()))
        .find(|&len| len > n);
    if let Some(len) = too_long {
        return Err(ClassifierError::SegmentTooLong { len, n });
    }

    let mut labels: Vec<&str> = training.iter().map(|t| t.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    let ids: Vec<LabelId> = training
        .iter()
        .map(|t| labels.binary_search(&t.label.as_str()).expect("label interned") as LabelId)
        .collect();

    let votes = query.iter().map(|q| {
        let entries = training
            .iter()
            .zip(&ids)
            .map(|(t, &id)| (padded_distance(q.values(), t.segment.values(), metric), id))
            .collect();
        NeighbourList::from_distances(entries, k)
            .vote(k)
            .expect("training set is non-empty")
    });
    let winner = melody_vote(votes).expect("query is non-empty");
    Ok(labels[winner as usize].to_owned())
}
