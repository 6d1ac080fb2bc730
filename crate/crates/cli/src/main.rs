//! `synthpose` command-line tool.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success |
//! | 2 | bad command line |
//! | 3 | config or schedule parameters invalid |
//! | 4 | I/O failure (unreadable input, unwritable output) |
//! | 5 | parse failure (malformed JSON, COCO or CSV input) |
//!
//! Environment overrides for `generate`: `SYNTHPOSE_SEED` replaces the config
//! seed and `SYNTHPOSE_OUT` the output directory. `--seed` and `--out` win
//! over both.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use synthpose::coco_io::{read_coco_file, CocoError, ReadOptions};
use synthpose::config::{ConfigError, ScenarioConfig};
use synthpose::lrsched::{read_metric_trace, simulate_trace, write_trace, ScheduleConfig, ScheduleError};
use synthpose::pipeline::{generate_to_dir, PipelineError};
use synthpose::scene::SceneBuilder;
use synthpose::stats::{compare, write_report, ReportError};
use synthpose::stats::{DatasetStats, StatsOptions};

#[derive(Parser)]
#[command(name = "synthpose", version, about = "Synthetic human keypoint dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a dataset from a scenario config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, env = "SYNTHPOSE_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "SYNTHPOSE_SEED")]
        seed: Option<u64>,
        /// Override the config's frame count.
        #[arg(long)]
        frames: Option<u32>,
    },
    /// Statistics report for one COCO keypoint file.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rasterize polygon segmentations instead of skipping them.
        #[arg(long)]
        polygons: bool,
    },
    /// Side-by-side report for two COCO keypoint files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a metric trace through the learning-rate schedule.
    Lrsim {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON file with schedule parameters; defaults otherwise.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        eval_interval: u64,
    },
    /// Check a scenario config, including its assets.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Print the config with every default filled in.
        #[arg(long)]
        print: bool,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Coco(#[from] CocoError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

const EXIT_INVALID: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_PARSE: u8 = 5;

fn config_code(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Io { .. } => EXIT_IO,
        ConfigError::Parse { .. } => EXIT_PARSE,
        ConfigError::Invalid(_) => EXIT_INVALID,
    }
}

fn coco_code(e: &CocoError) -> u8 {
    match e {
        CocoError::Io { .. } => EXIT_IO,
        _ => EXIT_PARSE,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(e) => config_code(e),
            CliError::Pipeline(PipelineError::Config(e)) => config_code(e),
            CliError::Pipeline(PipelineError::Coco(e)) => coco_code(e),
            CliError::Pipeline(_) => EXIT_IO,
            CliError::Coco(e) => coco_code(e),
            CliError::Report(_) | CliError::Io { .. } => EXIT_IO,
            CliError::Schedule(ScheduleError::Invalid(_)) => EXIT_INVALID,
            CliError::Schedule(ScheduleError::Trace { .. }) | CliError::Parse { .. } => EXIT_PARSE,
            CliError::Schedule(ScheduleError::Io(_)) => EXIT_IO,
        }
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load_dataset_stats(path: &Path, options: &ReadOptions) -> Result<DatasetStats, CliError> {
    let ds = read_coco_file(path, options)?;
    Ok(DatasetStats::compute(&ds, &StatsOptions::default()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, workers, out, seed, frames } => {
            let mut cfg = ScenarioConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = frames {
                cfg.frame_count = n;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            let dir = cfg.output.dir.clone();
            let builder = SceneBuilder::new(cfg)?;
            let start = Instant::now();
            let s = generate_to_dir(&builder, workers, &dir)?;
            let secs = start.elapsed().as_secs_f64();
            println!(
                "{} frames in {:.1}s ({:.1} frames/s, {} workers) -> {}",
                s.frames,
                secs,
                s.frames as f64 / secs.max(1e-9),
                workers,
                dir.display()
            );
            println!(
                "{} humans placed, {} person annotations, {} occluder annotations",
                s.humans_placed, s.person_annotations, s.occluder_annotations
            );
            println!(
                "keypoints: {} not labeled, {} occluded, {} visible",
                s.keypoint_states[0], s.keypoint_states[1], s.keypoint_states[2]
            );
        }
        Command::Stats { dataset, out, polygons } => {
            let mode = if polygons {
                synthpose::coco_io::PolygonMode::Convert
            } else {
                synthpose::coco_io::PolygonMode::Skip
            };
            let stats = load_dataset_stats(&dataset, &ReadOptions { polygons: mode })?;
            let s = write_report(&stats, &out)?;
            println!(
                "{} images, {} instances, {} aligned for heatmaps -> {}",
                s.images,
                s.instances,
                s.aligned_instances,
                out.display()
            );
            let k = s.skipped;
            println!("skipped: {k:?}");
        }
        Command::Compare { a, b, out } => {
            let sa = load_dataset_stats(&a, &ReadOptions::default())?;
            let sb = load_dataset_stats(&b, &ReadOptions::default())?;
            let c = compare(&sa, &sb, &out)?;
            println!(
                "boxes/image {:+.4}, relative size {:+.4}, keypoints/bbox {:+.4}, occupancy L1 {:.4} -> {}",
                c.delta_mean_boxes_per_image,
                c.delta_mean_relative_size,
                c.delta_mean_keypoints_per_bbox,
                c.occupancy_l1,
                out.display()
            );
        }
        Command::Lrsim { trace, out, schedule, eval_interval } => {
            let config: ScheduleConfig<f64> = match schedule {
                Some(p) => serde_json::from_reader(BufReader::new(open(&p)?))
                    .map_err(|e| CliError::Parse { path: p.clone(), message: e.to_string() })?,
                None => ScheduleConfig::default(),
            };
            config.validate()?;
            let metrics = read_metric_trace(BufReader::new(open(&trace)?))?;
            let rows = simulate_trace(&config, &metrics, eval_interval);
            let io = |source| CliError::Io { path: out.clone(), source };
            let mut w = BufWriter::new(File::create(&out).map_err(io)?);
            write_trace(&mut w, &rows)?;
            w.flush().map_err(io)?;
            println!("{} evaluations, {} log rows -> {}", metrics.len(), rows.len(), out.display());
        }
        Command::Validate { config, print } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let builder = SceneBuilder::new(cfg)?;
            if print {
                println!("{}", builder.config().to_json_pretty());
            } else {
                println!("{}: ok", config.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
