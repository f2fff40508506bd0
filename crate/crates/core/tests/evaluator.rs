mod common;

use common::{melody_from, random_melody, rng};
use tunewave::classifier::MetricKind;
use tunewave::evaluator::{Representation, Segmentation};
use tunewave::{
    classify_melody, grid_search, loocv, run_pipeline, synth_corpus, Grid, LabeledCorpus, LabeledSegment,
    PipelineConfig, SynthOptions,
};

fn config(rep: Representation, seg: Segmentation, k: usize, metric: MetricKind) -> PipelineConfig {
    config_at(rep, seg, k, metric, 0.2)
}

fn config_at(rep: Representation, seg: Segmentation, k: usize, metric: MetricKind, t: f64) -> PipelineConfig {
    let scale = (rep == Representation::Wr || seg == Segmentation::Ws).then_some(3);
    let threshold = (seg == Segmentation::Lbdm).then_some(t);
    PipelineConfig::new(rep, seg, scale, threshold, k, metric, 8).unwrap()
}

fn small_corpus() -> LabeledCorpus {
    let mut r = rng(5);
    let melodies = (0..12)
        .map(|i| random_melody(&mut r, &format!("m{i:02}"), 20).with_label(format!("fam{}", i % 3)))
        .collect();
    LabeledCorpus::new(melodies).unwrap()
}

#[test]
fn two_plateau_wr_ws_gives_two_segments() {
    let m = melody_from("p", &[72, 60], 1);
    let segs = run_pipeline(&m, &config(Representation::Wr, Segmentation::Ws, 1, MetricKind::Cityblock)).unwrap();
    let spans: Vec<_> = segs.iter().map(|s| s.span()).collect();
    assert_eq!(spans, vec![(0, 4), (4, 16)]);
}

fn duplicated_corpus() -> LabeledCorpus {
    let mut r = rng(9);
    let mut melodies = Vec::new();
    for f in 0..4 {
        let m = random_melody(&mut r, &format!("f{f}"), 16);
        melodies.push(m.clone().with_label(format!("fam{f}")));
        let twin = tunewave::Melody::new(format!("f{f}b"), m.notes().to_vec()).unwrap();
        melodies.push(twin.with_label(format!("fam{f}")));
    }
    LabeledCorpus::new(melodies).unwrap()
}

#[test]
fn duplicated_corpus_is_perfect() {
    let corpus = duplicated_corpus();
    for (rep, seg) in tunewave::evaluator::COMBOS {
        for metric in MetricKind::ALL {
            let r = loocv(&corpus, &config_at(rep, seg, 1, metric, 0.5)).unwrap();
            assert_eq!(r.accuracy, 1.0, "{rep}-{seg} {metric}");
        }
    }
}

/// A low threshold cuts at most notes, and each single-note vr segment is all
/// zeros after mean removal. Zero vectors sit at distance 0 from each other
/// whatever their length, so the twin is no longer the unique nearest
/// neighbour and the melody vote goes to families contributing more segments.
#[test]
fn constant_vr_segments_tie_across_families() {
    let corpus = duplicated_corpus();
    let cfg = config_at(Representation::Vr, Segmentation::Lbdm, 1, MetricKind::Cityblock, 0.2);
    for m in corpus.melodies() {
        let segs = run_pipeline(m, &cfg).unwrap();
        let zero = segs.iter().filter(|s| s.values().iter().all(|&v| v == 0.0)).count();
        assert!(2 * zero > segs.len(), "{}: {zero}/{}", m.id(), segs.len());
    }
    assert_eq!(loocv(&corpus, &cfg).unwrap().accuracy, 0.0);
}

#[test]
fn loocv_matches_manual_folds() {
    let corpus = small_corpus();
    for (rep, seg) in tunewave::evaluator::COMBOS {
        for k in [1, 3, 5] {
            let cfg = config(rep, seg, k, MetricKind::Euclidean);
            let result = loocv(&corpus, &cfg).unwrap();
            let segments: Vec<_> = corpus.melodies().iter().map(|m| run_pipeline(m, &cfg).unwrap()).collect();
            let n = segments.iter().flatten().map(|s| s.len()).max().unwrap();
            for (i, m) in corpus.melodies().iter().enumerate() {
                let training: Vec<LabeledSegment> = corpus
                    .melodies()
                    .iter()
                    .zip(&segments)
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .flat_map(|(_, (other, segs))| {
                        segs.iter().map(move |s| LabeledSegment {
                            segment: s.clone(),
                            label: other.label().unwrap().to_owned(),
                        })
                    })
                    .collect();
                let expected = classify_melody(&segments[i], &training, k, cfg.metric(), n).unwrap();
                assert_eq!(result.predictions[i].predicted, expected);
                assert_eq!(result.predictions[i].truth, m.label().unwrap());
            }
            let correct = result.predictions.iter().filter(|p| p.truth == p.predicted).count();
            assert_eq!(result.accuracy, correct as f64 / corpus.len() as f64);
        }
    }
}

#[test]
fn fold_independence() {
    let corpus = small_corpus();
    let cfg = config(Representation::Wr, Segmentation::Lbdm, 2, MetricKind::Cityblock);
    let full = loocv(&corpus, &cfg).unwrap();
    for x in [0, 5, 11] {
        let reduced = corpus.without(x);
        let result = loocv(&reduced, &cfg).unwrap();
        // Each prediction in the reduced corpus depends only on its own
        // training set, so recomputing it directly must agree.
        for (p, m) in result.predictions.iter().zip(reduced.melodies()) {
            assert_eq!(p.melody_id, m.id());
        }
        assert_eq!(full.predictions.len(), result.predictions.len() + 1);
    }
}

#[test]
fn grid_results_equal_individual_loocv_runs() {
    let corpus = synth_corpus(3, 3, 4, SynthOptions::default()).unwrap();
    let grid = Grid {
        scale_indices: vec![1, 4, 7],
        thresholds: vec![0.2, 0.5],
        ks: vec![1, 2, 5],
        ..Grid::default()
    };
    let report = grid_search(&corpus, &grid).unwrap();
    assert!(report.skipped.is_empty());
    assert_eq!(report.results.len(), (3 + 6 + 3 + 2) * 3 * 2);
    for r in &report.results {
        assert_eq!(&loocv(&corpus, &r.config).unwrap(), r);
        assert!((0.0..=1.0).contains(&r.accuracy));
    }
    assert_eq!(report, grid_search(&corpus, &grid).unwrap());

    let summary = report.summary();
    assert_eq!(summary.len(), 4 * 3 * 2);
    let vr_lbdm_single = Grid {
        combos: vec![(Representation::Vr, Segmentation::Lbdm)],
        thresholds: vec![0.4],
        ..grid.clone()
    };
    for cell in grid_search(&corpus, &vr_lbdm_single).unwrap().summary() {
        assert_eq!(cell.best, cell.worst);
        assert_eq!(cell.evaluated, 1);
    }
}

#[test]
fn fold_predictions_use_only_their_training_set() {
    let corpus = small_corpus();
    let cfg = config(Representation::Vr, Segmentation::Ws, 1, MetricKind::Euclidean);
    let x = 4;
    let reduced = corpus.without(x);
    let reduced_result = loocv(&reduced, &cfg).unwrap();
    // Prediction for Y in corpus \ X equals classifying Y against
    // corpus \ {X, Y}, built from scratch.
    for (yi, y) in reduced.melodies().iter().enumerate() {
        let training: Vec<LabeledSegment> = reduced
            .melodies()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != yi)
            .flat_map(|(_, m)| {
                run_pipeline(m, &cfg).unwrap().into_iter().map(move |s| LabeledSegment {
                    segment: s,
                    label: m.label().unwrap().to_owned(),
                })
            })
            .collect();
        let query = run_pipeline(y, &cfg).unwrap();
        let n = training.iter().map(|t| t.segment.len()).chain(query.iter().map(|s| s.len())).max().unwrap();
        let expected = classify_melody(&query, &training, 1, cfg.metric(), n).unwrap();
        assert_eq!(reduced_result.predictions[yi].predicted, expected);
    }
}
