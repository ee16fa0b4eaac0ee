//! Command-line driver: argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or config errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tsweave::bench::{run_bench, BenchParams};
use tsweave::io::{
    format_timestamp, load_csv, series_file_name, write_matrix, write_series_csv,
    FeatureConfigDoc, LoadOptions, PipelineConfigDoc,
};
use tsweave::{chunk_set, extract, ChunkSpec, Delta, Error, IndexValue, SeriesSet, ValueTag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tsweave", version, about = "Strided-window feature extraction for time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV files; the first column is the index unless --index-column is set.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Header of the index column in every file.
    #[arg(long)]
    index_column: Option<String>,
    /// Sort rows by index instead of rejecting unsorted files.
    #[arg(long)]
    sort: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract features described by a JSON config into a CSV matrix.
    Extract {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Append per-function timings as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        approve_sparsity: bool,
    },
    /// Run a JSON pipeline and write every resulting series.
    Process {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Split series at gaps into chunk directories.
    Chunk {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 4.0)]
        gap_factor: f64,
        #[arg(long)]
        min_dur: Option<String>,
        #[arg(long)]
        max_dur: Option<String>,
        #[arg(long)]
        overlap: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Keep only the features producing the given columns.
    Reduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        keep: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Profile extraction on synthetic data.
    Bench {
        #[arg(long, default_value_t = 5)]
        channels: usize,
        #[arg(long, default_value_t = 1000.0)]
        fs: f64,
        /// Seconds.
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        #[arg(long, default_value = "30s")]
        window: String,
        #[arg(long, default_value = "10s")]
        stride: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Store values as f64 instead of f32.
        #[arg(long)]
        f64: bool,
        /// Also report the process resident-set high-watermark.
        #[arg(long)]
        rss: bool,
        #[arg(long)]
        report: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult = Result<(), CliError>;

fn parse_delta(flag: &str, text: &str) -> Result<Delta, CliError> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse `{text}` as a window length")))
}

fn load_all(args: &DataArgs) -> Result<SeriesSet, CliError> {
    let options = LoadOptions {
        index_column: args.index_column.clone(),
        sort: args.sort,
        ..LoadOptions::default()
    };
    let mut set = SeriesSet::new();
    for path in &args.data {
        for series in load_csv(path, &options)? {
            set.insert(series)?;
        }
    }
    Ok(set)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Extract {
            data,
            config,
            out,
            log,
            workers,
            approve_sparsity,
        } => {
            let set = load_all(&data)?;
            let doc = FeatureConfigDoc::load(&config)?;
            let collection = doc.to_collection()?;
            let mut options = doc.options.to_options();
            options.log_path = log;
            options.approve_sparsity |= approve_sparsity;
            if let Some(n) = workers {
                options.n_workers = n;
            }
            let extraction = extract(&set, &collection, &options)?;
            let stderr = std::io::stderr();
            let mut stderr = stderr.lock();
            for w in &extraction.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            write_matrix(&extraction.matrix, &out)?;
        }
        Command::Process {
            data,
            pipeline,
            out_dir,
        } => {
            let set = load_all(&data)?;
            let pipeline = PipelineConfigDoc::load(&pipeline)?.to_pipeline()?;
            let result = pipeline.run(&set)?;
            fs::create_dir_all(&out_dir)?;
            for s in result.iter() {
                write_series_csv(&[s.view()], &out_dir.join(series_file_name(s.name())))?;
            }
        }
        Command::Chunk {
            data,
            gap_factor,
            min_dur,
            max_dur,
            overlap,
            out_dir,
        } => {
            let spec = ChunkSpec {
                gap_factor,
                min_chunk_dur: min_dur.map(|d| parse_delta("min-dur", &d)).transpose()?,
                max_chunk_dur: max_dur.map(|d| parse_delta("max-dur", &d)).transpose()?,
                sub_chunk_overlap: overlap.map(|d| parse_delta("overlap", &d)).transpose()?,
            };
            let set = load_all(&data)?;
            let groups = chunk_set(&set, &spec)?;
            fs::create_dir_all(&out_dir)?;
            let mut listing = Vec::with_capacity(groups.len());
            for (k, group) in groups.iter().enumerate() {
                let dir = out_dir.join(format!("chunk_{k}"));
                fs::create_dir_all(&dir)?;
                for view in &group.slices {
                    write_series_csv(&[*view], &dir.join(series_file_name(view.name())))?;
                }
                listing.push(ChunkEntry {
                    chunk: k,
                    begin: index_text(group.range.begin),
                    end: index_text(group.range.end),
                    closed_end: group.range.closed_end,
                    series: group
                        .slices
                        .iter()
                        .map(|v| (v.name().to_string(), v.len()))
                        .collect(),
                });
            }
            write_json(&out_dir.join("chunks.json"), &listing)?;
        }
        Command::Reduce { config, keep, out } => {
            let doc = FeatureConfigDoc::load(&config)?;
            let reduced = doc.to_collection()?.reduce(&keep)?;
            let doc = FeatureConfigDoc::from_collection(&reduced, doc.options)?;
            write_json(&out, &doc)?;
        }
        Command::Bench {
            channels,
            fs,
            duration,
            window,
            stride,
            workers,
            seed,
            f64,
            rss,
            report,
        } => {
            let params = BenchParams {
                n_channels: channels,
                fs,
                duration,
                window: parse_delta("window", &window)?,
                stride: parse_delta("stride", &stride)?,
                n_workers: workers,
                seed,
                value_tag: if f64 { ValueTag::F64 } else { ValueTag::F32 },
                functions: None,
                sample_rss: rss,
            };
            let run = run_bench(&params)?;
            write_json(&report, &run.report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ChunkEntry {
    chunk: usize,
    begin: String,
    end: String,
    closed_end: bool,
    /// Series name and row count of each slice.
    series: Vec<(String, usize)>,
}

fn index_text(v: IndexValue) -> String {
    match v {
        IndexValue::Time(ns) => format_timestamp(ns),
        IndexValue::Numeric(x) => x.to_string(),
    }
}
