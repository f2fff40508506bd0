//! Pipeline configurations, leave-one-out cross-validation and the full
//! parameter grid.
//!
//! The four representation × segmentation combinations:
//!
//! | combo     | cut points from                 | segment values            |
//! |-----------|---------------------------------|---------------------------|
//! | wr + ws   | maxima of the scale-s row       | the same scale-s row      |
//! | vr + ws   | maxima of the scale-s row       | pitch signal, normalized  |
//! | wr + lbdm | LBDM at the threshold           | the scale-s row           |
//! | vr + lbdm | LBDM at the threshold           | pitch signal, normalized  |
//!
//! The zero-pad length `n` is the longest segment in the corpus for the
//! configuration. Padding does not change distances, so `n` only matters as
//! an upper bound on segment length.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::classifier::{melody_vote, padded_distance, ClassifierError, LabelId, MetricKind, NeighbourList};
use crate::corpus::LabeledCorpus;
use crate::melody::Melody;
use crate::par;
use crate::pitch_signal::{sample_melody, SignalError};
use crate::segmentation::{boundaries_from_row, extract_segments, lbdm_boundaries, SegmentationError};
use crate::wavelet::{cwt_row, dyadic_scale, WaveletError};

pub use crate::segmentation::{Representation, Segment};

/// Largest supported number of neighbours.
pub const MAX_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmentation {
    Ws,
    Lbdm,
}

impl Segmentation {
    pub fn as_str(self) -> &'static str {
        match self {
            Segmentation::Ws => "ws",
            Segmentation::Lbdm => "lbdm",
        }
    }
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Segmentation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ws" => Ok(Segmentation::Ws),
            "lbdm" => Ok(Segmentation::Lbdm),
            other => Err(format!("unknown segmentation {other:?}")),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vr" => Ok(Representation::Vr),
            "wr" => Ok(Representation::Wr),
            other => Err(format!("unknown representation {other:?}")),
        }
    }
}

/// Row order of the summary tables.
pub const COMBOS: [(Representation, Segmentation); 4] = [
    (Representation::Wr, Segmentation::Ws),
    (Representation::Wr, Segmentation::Lbdm),
    (Representation::Vr, Segmentation::Ws),
    (Representation::Vr, Segmentation::Lbdm),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} requires a scale index")]
    MissingScale(&'static str),
    #[error("{0} does not take a scale index")]
    UnexpectedScale(&'static str),
    #[error("lbdm segmentation requires a threshold")]
    MissingThreshold,
    #[error("ws segmentation does not take a threshold")]
    UnexpectedThreshold,
    #[error("scale index {0} is outside 1..=8")]
    InvalidScaleIndex(u8),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("k = {0} is outside 1..=5")]
    InvalidK(usize),
    #[error("sampling rate must be at least 1")]
    ZeroRate,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    representation: Representation,
    segmentation: Segmentation,
    scale_index: Option<u8>,
    threshold: Option<f64>,
    k: usize,
    metric: MetricKind,
    rate: u32,
}

impl PipelineConfig {
    /// Validates that exactly the parameters the combination needs are set:
    /// a scale index for wr or ws, a threshold for lbdm.
    pub fn new(
        representation: Representation,
        segmentation: Segmentation,
        scale_index: Option<u8>,
        threshold: Option<f64>,
        k: usize,
        metric: MetricKind,
        rate: u32,
    ) -> Result<Self, ConfigError> {
        let needs_scale = representation == Representation::Wr || segmentation == Segmentation::Ws;
        match (needs_scale, scale_index) {
            (true, None) => {
                let who = if representation == Representation::Wr { "wr" } else { "ws" };
                return Err(ConfigError::MissingScale(who));
            }
            (false, Some(_)) => return Err(ConfigError::UnexpectedScale("vr+lbdm")),
            (true, Some(i)) if dyadic_scale(i).is_none() => return Err(ConfigError::InvalidScaleIndex(i)),
            _ => {}
        }
        match (segmentation, threshold) {
            (Segmentation::Lbdm, None) => return Err(ConfigError::MissingThreshold),
            (Segmentation::Ws, Some(_)) => return Err(ConfigError::UnexpectedThreshold),
            (Segmentation::Lbdm, Some(t)) if !(0.0..=1.0).contains(&t) => {
                return Err(ConfigError::InvalidThreshold(t))
            }
            _ => {}
        }
        if !(1..=MAX_K).contains(&k) {
            return Err(ConfigError::InvalidK(k));
        }
        if rate == 0 {
            return Err(ConfigError::ZeroRate);
        }
        Ok(Self {
            representation,
            segmentation,
            scale_index,
            threshold,
            k,
            metric,
            rate,
        })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn segmentation(&self) -> Segmentation {
        self.segmentation
    }

    /// 1-based index into the dyadic scale set.
    pub fn scale_index(&self) -> Option<u8> {
        self.scale_index
    }

    /// Scale in samples.
    pub fn scale(&self) -> Option<usize> {
        self.scale_index.and_then(dyadic_scale)
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn rate(&self) -> u32 {
        self.rate
    }

    fn segment_key(&self) -> SegmentKey {
        SegmentKey {
            representation: self.representation,
            segmentation: self.segmentation,
            scale_index: self.scale_index,
            threshold: self.threshold,
            rate: self.rate,
        }
    }
}

/// The part of a configuration that determines segments.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SegmentKey {
    representation: Representation,
    segmentation: Segmentation,
    scale_index: Option<u8>,
    threshold: Option<f64>,
    rate: u32,
}

impl SegmentKey {
    fn with(&self, k: usize, metric: MetricKind) -> PipelineConfig {
        PipelineConfig {
            representation: self.representation,
            segmentation: self.segmentation,
            scale_index: self.scale_index,
            threshold: self.threshold,
            k,
            metric,
            rate: self.rate,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("corpus needs at least 2 melodies and 2 labels (got {melodies} melodies, {labels} labels)")]
    DegenerateCorpus { melodies: usize, labels: usize },
    #[error("melody {melody}: {source}")]
    Melody {
        melody: String,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

/// Samples, filters and segments one melody.
pub fn run_pipeline(melody: &Melody, config: &PipelineConfig) -> Result<Vec<Segment>, PipelineError> {
    segments_for(melody, &config.segment_key())
}

fn segments_for(melody: &Melody, key: &SegmentKey) -> Result<Vec<Segment>, PipelineError> {
    let signal = sample_melody(melody, key.rate)?;
    let scale = key.scale_index.and_then(dyadic_scale);
    let row = match scale {
        Some(scale) => Some(cwt_row(signal.samples(), scale)?),
        None => None,
    };
    let boundaries = match (key.segmentation, &row, key.threshold) {
        (Segmentation::Ws, Some(row), _) => boundaries_from_row(row, scale.expect("row implies scale")),
        (Segmentation::Lbdm, _, Some(t)) => lbdm_boundaries(melody, t, key.rate)?,
        _ => unreachable!("validated by PipelineConfig::new"),
    };
    let series = match (key.representation, &row) {
        (Representation::Wr, Some(row)) => row.as_slice(),
        (Representation::Vr, _) => signal.samples(),
        _ => unreachable!("validated by PipelineConfig::new"),
    };
    Ok(extract_segments(series, &boundaries, key.representation, melody.id()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub melody_id: String,
    pub truth: String,
    pub predicted: String,
}

/// LOOCV outcome for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub config: PipelineConfig,
    pub accuracy: f64,
    pub predictions: Vec<Prediction>,
}

/// Every melody's segments for one segment key, flattened.
struct PreparedCorpus {
    values: Vec<Vec<f64>>,
    owner: Vec<usize>,
    by_melody: Vec<std::ops::Range<usize>>,
    label_of: Vec<LabelId>,
}

impl PreparedCorpus {
    fn build(corpus: &LabeledCorpus, key: &SegmentKey) -> Result<Self, EvalError> {
        let per_melody = par::map_slice(corpus.melodies(), |m| {
            segments_for(m, key).map_err(|source| EvalError::Melody {
                melody: m.id().to_owned(),
                source,
            })
        });
        let mut out = PreparedCorpus {
            values: Vec::new(),
            owner: Vec::new(),
            by_melody: Vec::with_capacity(corpus.len()),
            label_of: corpus.label_ids(),
        };
        for (i, segments) in per_melody.into_iter().enumerate() {
            let segments = segments?;
            let start = out.values.len();
            for s in segments {
                out.values.push(s.values().to_vec());
                out.owner.push(i);
            }
            out.by_melody.push(start..out.values.len());
        }
        Ok(out)
    }

    /// Leave-one-out predictions for every `k` in `ks`; `[k][melody]`.
    fn predict(&self, metric: MetricKind, ks: &[usize]) -> Vec<Vec<LabelId>> {
        let max_k = ks.iter().copied().max().unwrap_or(1);
        let per_melody: Vec<Vec<LabelId>> = par::map_range(self.by_melody.len(), |m| {
            let lists: Vec<NeighbourList> = self.by_melody[m]
                .clone()
                .map(|q| {
                    let query = &self.values[q];
                    let entries = self
                        .values
                        .iter()
                        .zip(&self.owner)
                        .filter(|(_, &owner)| owner != m)
                        .map(|(t, &owner)| (padded_distance(query, t, metric), self.label_of[owner]))
                        .collect();
                    NeighbourList::from_distances(entries, max_k)
                })
                .collect();
            ks.iter()
                .map(|&k| {
                    melody_vote(lists.iter().map(|l| l.vote(k).expect("training set is non-empty")))
                        .expect("every melody has at least one segment")
                })
                .collect()
        });
        (0..ks.len())
            .map(|ki| per_melody.iter().map(|p| p[ki]).collect())
            .collect()
    }
}

fn check_corpus(corpus: &LabeledCorpus) -> Result<(), EvalError> {
    if corpus.len() < 2 || corpus.labels().len() < 2 {
        return Err(EvalError::DegenerateCorpus {
            melodies: corpus.len(),
            labels: corpus.labels().len(),
        });
    }
    Ok(())
}

fn make_result(corpus: &LabeledCorpus, config: PipelineConfig, predicted: &[LabelId]) -> EvalResult {
    let labels = corpus.labels();
    let truth = corpus.label_ids();
    let predictions: Vec<Prediction> = corpus
        .melodies()
        .iter()
        .zip(predicted)
        .map(|(m, &p)| Prediction {
            melody_id: m.id().to_owned(),
            truth: m.label().unwrap_or_default().to_owned(),
            predicted: labels[p as usize].clone(),
        })
        .collect();
    let correct = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    EvalResult {
        config,
        accuracy: correct as f64 / corpus.len() as f64,
        predictions,
    }
}

/// Leave-one-out cross-validation of one configuration.
pub fn loocv(corpus: &LabeledCorpus, config: &PipelineConfig) -> Result<EvalResult, EvalError> {
    check_corpus(corpus)?;
    let prepared = PreparedCorpus::build(corpus, &config.segment_key())?;
    let predicted = prepared.predict(config.metric, &[config.k]);
    Ok(make_result(corpus, *config, &predicted[0]))
}

/// Parameter axes of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rate: u32,
    pub combos: Vec<(Representation, Segmentation)>,
    pub scale_indices: Vec<u8>,
    pub thresholds: Vec<f64>,
    pub ks: Vec<usize>,
    pub metrics: Vec<MetricKind>,
}

impl Default for Grid {
    /// 8 dyadic scales, thresholds 0.1..=0.8, k 1..=5, both metrics, rate 8.
    fn default() -> Self {
        Self {
            rate: crate::DEFAULT_RATE,
            combos: COMBOS.to_vec(),
            scale_indices: (1..=8).collect(),
            thresholds: (1..=8).map(|t| f64::from(t) / 10.0).collect(),
            ks: (1..=MAX_K).collect(),
            metrics: MetricKind::ALL.to_vec(),
        }
    }
}

impl Grid {
    fn segment_keys(&self) -> Vec<SegmentKey> {
        let mut keys = Vec::new();
        let key = |representation, segmentation, scale_index, threshold| SegmentKey {
            representation,
            segmentation,
            scale_index,
            threshold,
            rate: self.rate,
        };
        for &(rep, seg) in &self.combos {
            match (rep, seg) {
                (_, Segmentation::Ws) => {
                    for &s in &self.scale_indices {
                        keys.push(key(rep, seg, Some(s), None));
                    }
                }
                (Representation::Wr, Segmentation::Lbdm) => {
                    for &s in &self.scale_indices {
                        for &t in &self.thresholds {
                            keys.push(key(rep, seg, Some(s), Some(t)));
                        }
                    }
                }
                (Representation::Vr, Segmentation::Lbdm) => {
                    for &t in &self.thresholds {
                        keys.push(key(rep, seg, None, Some(t)));
                    }
                }
            }
        }
        keys
    }

    /// Every configuration, in results order: combo, scale, threshold,
    /// metric, k.
    pub fn configs(&self) -> Result<Vec<PipelineConfig>, ConfigError> {
        let mut out = Vec::new();
        for key in self.segment_keys() {
            for &metric in &self.metrics {
                for &k in &self.ks {
                    let c = key.with(k, metric);
                    out.push(PipelineConfig::new(
                        c.representation,
                        c.segmentation,
                        c.scale_index,
                        c.threshold,
                        c.k,
                        c.metric,
                        c.rate,
                    )?);
                }
            }
        }
        Ok(out)
    }
}

/// Best and worst accuracy over the scale/threshold axis for one
/// (combo, metric, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryCell {
    pub representation: Representation,
    pub segmentation: Segmentation,
    pub metric: MetricKind,
    pub k: usize,
    pub best: f64,
    pub worst: f64,
    pub evaluated: usize,
}

/// A configuration that could not be evaluated, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub config: PipelineConfig,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub results: Vec<EvalResult>,
    pub skipped: Vec<Skipped>,
}

impl GridReport {
    /// Summary cells ordered by metric (euclidean, cityblock), then combo
    /// (wr-ws, wr-lbdm, vr-ws, vr-lbdm), then k.
    pub fn summary(&self) -> Vec<SummaryCell> {
        let mut cells = Vec::new();
        for metric in MetricKind::ALL {
            for (rep, seg) in COMBOS {
                let mut ks: Vec<usize> = self
                    .results
                    .iter()
                    .filter(|r| r.config.metric == metric && r.config.representation == rep && r.config.segmentation == seg)
                    .map(|r| r.config.k)
                    .collect();
                ks.sort_unstable();
                ks.dedup();
                for k in ks {
                    let accs: Vec<f64> = self
                        .results
                        .iter()
                        .filter(|r| {
                            let c = &r.config;
                            c.metric == metric && c.representation == rep && c.segmentation == seg && c.k == k
                        })
                        .map(|r| r.accuracy)
                        .collect();
                    cells.push(SummaryCell {
                        representation: rep,
                        segmentation: seg,
                        metric,
                        k,
                        best: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        worst: accs.iter().copied().fold(f64::INFINITY, f64::min),
                        evaluated: accs.len(),
                    });
                }
            }
        }
        cells
    }

    /// Highest-accuracy configuration; the first in results order wins ties.
    pub fn best(&self) -> Option<&EvalResult> {
        self.results
            .iter()
            .fold(None, |best: Option<&EvalResult>, r| match best {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
    }
}

/// Evaluates every configuration of `grid` by LOOCV.
///
/// Segments are computed once per (combo, scale, threshold) and shared by all
/// metrics and k values. A segment key that fails for any melody (for
/// example a scale longer than a short melody allows) skips its
/// configurations and records why.
pub fn grid_search(corpus: &LabeledCorpus, grid: &Grid) -> Result<GridReport, EvalError> {
    check_corpus(corpus)?;
    let configs = grid.configs()?;
    debug_assert_eq!(configs.len(), grid.segment_keys().len() * grid.metrics.len() * grid.ks.len());
    let keys = grid.segment_keys();
    let outcomes = par::map_slice(&keys, |key| {
        let prepared = PreparedCorpus::build(corpus, key)?;
        let per_metric = par::map_slice(&grid.metrics, |&metric| {
            let predicted = prepared.predict(metric, &grid.ks);
            grid.ks
                .iter()
                .zip(predicted)
                .map(|(&k, p)| make_result(corpus, key.with(k, metric), &p))
                .collect::<Vec<_>>()
        });
        Ok::<_, EvalError>(per_metric.into_iter().flatten().collect::<Vec<_>>())
    });

    let mut report = GridReport {
        results: Vec::with_capacity(configs.len()),
        skipped: Vec::new(),
    };
    for (key, outcome) in keys.iter().zip(outcomes) {
        match outcome {
            Ok(results) => report.results.extend(results),
            Err(e) => {
                for &metric in &grid.metrics {
                    for &k in &grid.ks {
                        report.skipped.push(Skipped {
                            config: key.with(k, metric),
                            reason: e.to_string(),
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melody::{qn, NoteEvent};

    fn melody(id: &str, pitches: &[i32], label: &str) -> Melody {
        let notes = pitches
            .iter()
            .enumerate()
            .map(|(i, &p)| NoteEvent::new(p, qn(i as i64, 1), qn(1, 1)).unwrap())
            .collect();
        Melody::new(id, notes).unwrap().with_label(label)
    }

    fn cfg(rep: Representation, seg: Segmentation, s: Option<u8>, t: Option<f64>, k: usize) -> PipelineConfig {
        PipelineConfig::new(rep, seg, s, t, k, MetricKind::Cityblock, 8).unwrap()
    }

    #[test]
    fn config_validation() {
        use Representation::*;
        use Segmentation::*;
        let m = MetricKind::Euclidean;
        assert!(PipelineConfig::new(Wr, Ws, Some(3), None, 1, m, 8).is_ok());
        assert!(PipelineConfig::new(Vr, Lbdm, None, Some(0.3), 5, m, 8).is_ok());
        assert!(PipelineConfig::new(Wr, Lbdm, Some(8), Some(0.8), 2, m, 8).is_ok());
        assert_eq!(
            PipelineConfig::new(Wr, Ws, None, None, 1, m, 8),
            Err(ConfigError::MissingScale("wr"))
        );
        assert_eq!(
            PipelineConfig::new(Vr, Ws, Some(2), Some(0.1), 1, m, 8),
            Err(ConfigError::UnexpectedThreshold)
        );
        assert_eq!(
            PipelineConfig::new(Vr, Lbdm, Some(2), Some(0.1), 1, m, 8),
            Err(ConfigError::UnexpectedScale("vr+lbdm"))
        );
        assert_eq!(
            PipelineConfig::new(Vr, Lbdm, None, None, 1, m, 8),
            Err(ConfigError::MissingThreshold)
        );
        assert_eq!(
            PipelineConfig::new(Wr, Ws, Some(9), None, 1, m, 8),
            Err(ConfigError::InvalidScaleIndex(9))
        );
        assert_eq!(
            PipelineConfig::new(Wr, Ws, Some(1), None, 6, m, 8),
            Err(ConfigError::InvalidK(6))
        );
        assert_eq!(
            PipelineConfig::new(Vr, Lbdm, None, Some(1.2), 1, m, 8),
            Err(ConfigError::InvalidThreshold(1.2))
        );
    }

    #[test]
    fn default_grid_has_880_configs() {
        assert_eq!(Grid::default().configs().unwrap().len(), 880);
    }

    #[test]
    fn constant_melody_pipelines() {
        let m = melody("c", &[60; 4], "a");
        let segs = run_pipeline(&m, &cfg(Representation::Wr, Segmentation::Ws, Some(3), None, 1)).unwrap();
        assert_eq!(segs.len(), 1);
        assert!(segs[0].values().iter().all(|&v| v == 0.0));
        for t in [0.0, 0.1, 0.8] {
            let segs = run_pipeline(&m, &cfg(Representation::Vr, Segmentation::Lbdm, None, Some(t), 1)).unwrap();
            assert_eq!(segs.len(), 1);
            assert_eq!(segs[0].values(), &[0.0; 32]);
        }
    }

    #[test]
    fn two_melody_corpus_scores_zero() {
        let corpus = LabeledCorpus::new(vec![melody("x", &[60, 62, 64], "a"), melody("y", &[67, 65, 60], "b")]).unwrap();
        let r = loocv(&corpus, &cfg(Representation::Wr, Segmentation::Ws, Some(1), None, 1)).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.predictions[0].predicted, "b");
        assert_eq!(r.predictions[1].predicted, "a");
    }

    #[test]
    fn degenerate_corpus() {
        let corpus = LabeledCorpus::new(vec![melody("x", &[60], "a"), melody("y", &[62], "a")]).unwrap();
        assert_eq!(
            loocv(&corpus, &cfg(Representation::Wr, Segmentation::Ws, Some(1), None, 1)),
            Err(EvalError::DegenerateCorpus { melodies: 2, labels: 1 })
        );
    }

    #[test]
    fn short_melody_skips_large_scales() {
        let corpus = LabeledCorpus::new(vec![
            melody("x", &[60, 62, 64], "a"),
            melody("y", &[67, 65, 60], "b"),
            melody("z", &[60, 62, 64], "a"),
        ])
        .unwrap();
        let grid = Grid {
            combos: vec![(Representation::Wr, Segmentation::Ws)],
            ks: vec![1],
            metrics: vec![MetricKind::Cityblock],
            ..Grid::default()
        };
        // 24 samples: scales up to 64 fit (3L = 72), 128 and 256 do not.
        let report = grid_search(&corpus, &grid).unwrap();
        assert_eq!(report.results.len(), 6);
        assert_eq!(report.skipped.len(), 2);
        assert!(report.skipped[0].reason.contains("scale 128"));
        let summary = report.summary();
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].evaluated, 6);
    }
}
