//! Command-line front end: segmentation, coefficient dumps, LOOCV evaluation,
//! grid search and synthetic corpus generation.
//!
//! Exit codes: 0 on success, 1 for runtime and domain errors, 2 for usage
//! errors (bad flags or flag combinations).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tunewave::corpus::save_corpus;
use tunewave::report::{
    write_boundaries_csv, write_coefficients_csv, write_results_csv, write_segments_csv, write_summary_csv,
};
use tunewave::wavelet::DYADIC_SCALES;
use tunewave::{
    cwt_haar, grid_search, lbdm_boundaries, load_corpus, loocv, parse_midi, run_pipeline, sample_melody,
    synth_corpus, wavelet_boundaries, Grid, LabeledCorpus, Melody, MetricKind, PipelineConfig, Representation,
    Segmentation, SynthOptions,
};

#[derive(Debug, Parser)]
#[command(name = "tunewave", version, about = "Wavelet segmentation and tune-family classification of MIDI melodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut one melody into segments; prints boundaries, then segment rows.
    Segment(SegmentArgs),
    /// Dump the Haar coefficients of one melody at all eight scales.
    Coefficients(CoefficientArgs),
    /// Leave-one-out accuracy of one configuration on a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Evaluate the full parameter grid; writes results.csv and summary.csv.
    Grid(GridArgs),
    /// Generate a seeded synthetic corpus of MIDI files plus labels.csv.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RepArg {
    Vr,
    Wr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SegArg {
    Ws,
    Lbdm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Cityblock,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags that make up one pipeline configuration.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Samples per quarter note.
    #[arg(long, default_value_t = tunewave::DEFAULT_RATE)]
    pub rate: u32,
    #[arg(long, value_enum, default_value = "wr")]
    pub representation: RepArg,
    #[arg(long, value_enum, default_value = "ws")]
    pub segmentation: SegArg,
    /// Dyadic scale index 1..=8 (2 to 256 samples); needed by wr and ws.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub scale: Option<u8>,
    /// LBDM boundary threshold; needed by lbdm only.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..=5))]
    pub k: u16,
    #[arg(long, value_enum, default_value = "cityblock")]
    pub metric: MetricArg,
}

impl ConfigArgs {
    fn to_config(&self) -> std::result::Result<PipelineConfig, UsageError> {
        let rep = match self.representation {
            RepArg::Vr => Representation::Vr,
            RepArg::Wr => Representation::Wr,
        };
        let seg = match self.segmentation {
            SegArg::Ws => Segmentation::Ws,
            SegArg::Lbdm => Segmentation::Lbdm,
        };
        let metric = match self.metric {
            MetricArg::Euclidean => MetricKind::Euclidean,
            MetricArg::Cityblock => MetricKind::Cityblock,
        };
        PipelineConfig::new(rep, seg, self.scale, self.threshold, usize::from(self.k), metric, self.rate)
            .map_err(|e| UsageError(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory of .mid files.
    pub corpus: PathBuf,
    /// Label CSV with header `filename,family`; defaults to <corpus>/labels.csv.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self) -> Result<LabeledCorpus> {
        let labels = self.labels.clone().unwrap_or_else(|| self.corpus.join("labels.csv"));
        load_corpus(&self.corpus, &labels).with_context(|| format!("loading {}", self.corpus.display()))
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    pub midi: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoefficientArgs {
    pub midi: PathBuf,
    #[arg(long, default_value_t = tunewave::DEFAULT_RATE, value_parser = clap::value_parser!(u32).range(1..))]
    pub rate: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = tunewave::DEFAULT_RATE, value_parser = clap::value_parser!(u32).range(1..))]
    pub rate: u32,
    /// Directory for results.csv and summary.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u16).range(2..))]
    pub families: u16,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(1..))]
    pub variants: u16,
    #[arg(long, default_value_t = 0.15, value_parser = probability)]
    pub ornament_prob: f64,
    /// Variants are transposed by up to this many semitones either way.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u8).range(0..=10))]
    pub transpose_range: u8,
    #[arg(long)]
    pub out: PathBuf,
}

fn probability(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0, 1]"))
    }
}

/// A flag combination that parsed but does not form a valid request.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn read_melody(path: &Path) -> Result<Melody> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let id = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    parse_midi(&bytes, id).with_context(|| format!("parsing {}", path.display()))
}

/// Writes via `write` to `path` through a temporary file in the same
/// directory, so readers never see a partial file; stdout when `None`.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            write(tmp.as_file_mut())?;
            tmp.as_file_mut().flush()?;
            tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
    }
}

fn segment(args: &SegmentArgs) -> Result<()> {
    let config = args.config.to_config()?;
    let melody = read_melody(&args.midi)?;
    let signal = sample_melody(&melody, config.rate())?;
    let boundaries = match config.segmentation() {
        Segmentation::Ws => wavelet_boundaries(&signal, config.scale().expect("ws has a scale"))?,
        Segmentation::Lbdm => {
            lbdm_boundaries(&melody, config.threshold().expect("lbdm has a threshold"), config.rate())?
        }
    };
    let segments = run_pipeline(&melody, &config)?;
    emit(args.out.as_deref(), |w| {
        write_boundaries_csv([(melody.id(), &boundaries)], &mut *w)?;
        writeln!(w)?;
        write_segments_csv(&segments, &mut *w)?;
        Ok(())
    })
}

fn coefficients(args: &CoefficientArgs) -> Result<()> {
    let melody = read_melody(&args.midi)?;
    let signal = sample_melody(&melody, args.rate)?;
    let c = cwt_haar(signal.samples(), &DYADIC_SCALES)?;
    for skipped in c.skipped() {
        eprintln!("warning: {skipped}");
    }
    emit(args.out.as_deref(), |w| Ok(write_coefficients_csv(&c, w)?))
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let config = args.config.to_config()?;
    let corpus = args.corpus.load()?;
    let result = loocv(&corpus, &config)?;
    emit(args.out.as_deref(), |w| match args.format {
        Format::Csv => Ok(write_results_csv(std::slice::from_ref(&result), w)?),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &result)?;
            writeln!(w)?;
            Ok(())
        }
    })
}

fn describe(config: &PipelineConfig) -> String {
    let mut s = format!("{}-{}", config.representation(), config.segmentation());
    if let Some(i) = config.scale_index() {
        s += &format!(" scale={i}");
    }
    if let Some(t) = config.threshold() {
        s += &format!(" threshold={t}");
    }
    s + &format!(" k={} metric={}", config.k(), config.metric())
}

fn grid(args: &GridArgs) -> Result<()> {
    let corpus = args.corpus.load()?;
    let report = grid_search(
        &corpus,
        &Grid {
            rate: args.rate,
            ..Grid::default()
        },
    )?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    // Both files are written only after every configuration has finished.
    emit(Some(&args.out.join("results.csv")), |w| Ok(write_results_csv(&report.results, w)?))?;
    emit(Some(&args.out.join("summary.csv")), |w| Ok(write_summary_csv(&report.summary(), w)?))?;
    if !report.skipped.is_empty() {
        eprintln!(
            "warning: {} configurations skipped, e.g. {}: {}",
            report.skipped.len(),
            describe(&report.skipped[0].config),
            report.skipped[0].reason
        );
    }
    match report.best() {
        Some(best) => println!("best: {} accuracy={}", describe(&best.config), best.accuracy),
        None => println!("best: none (no configuration could be evaluated)"),
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let corpus = synth_corpus(
        args.seed,
        usize::from(args.families),
        usize::from(args.variants),
        SynthOptions {
            transpose_range: args.transpose_range,
            ornament_prob: args.ornament_prob,
        },
    )?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    save_corpus(&corpus, &args.out)?;
    println!("wrote {} melodies to {}", corpus.len(), args.out.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Segment(a) => segment(a),
        Command::Coefficients(a) => coefficients(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Grid(a) => grid(a),
        Command::Synth(a) => synth(a),
    }
}

/// Maps an error from [`run`] to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}
