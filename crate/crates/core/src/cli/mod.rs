//! The `chromabench` command-line harness.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bd::{Interpolation, Metric, Transform};
use crate::codec::OperatingPoint;
use crate::imageio::ColorSpace;
use crate::report::{Aggregation, THREADS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Invalid combination of command-line arguments.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "chromabench", version, about = "Color-space rate-distortion toolkit")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an image to YUV/LAB planes (16-bit PNGs + JSON), or back.
    Convert(ConvertArgs),
    /// PSNR, MS-SSIM and CIEDE2000 of a pair of images or directories.
    Metrics(MetricsArgs),
    /// Encode an image to a .cbs stream.
    Encode(EncodeArgs),
    /// Decode a .cbs stream to an image.
    Decode(DecodeArgs),
    /// Encode/decode a corpus under a grid of configs.
    Sweep(SweepArgs),
    /// Bjøntegaard delta table against an anchor codec.
    Bd(BdArgs),
    /// Render RD curves as SVG.
    Plot(PlotArgs),
    /// Impulse-response mosaic of the highest-rate latent channels.
    Impulse(ImpulseArgs),
    /// Parameter and kMAC/pixel counts of a layer list.
    Complexity(ComplexityArgs),
    /// Print the operating-point presets.
    Presets,
    /// Write a deterministic synthetic test corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    #[value(alias = "srgb")]
    Rgb,
    Yuv,
    Lab,
    Linear,
}

impl From<SpaceArg> for ColorSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Rgb => ColorSpace::Srgb,
            SpaceArg::Yuv => ColorSpace::Yuv,
            SpaceArg::Lab => ColorSpace::Lab,
            SpaceArg::Linear => ColorSpace::LinearRgb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointArg {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl From<PointArg> for OperatingPoint {
    fn from(p: PointArg) -> Self {
        match p {
            PointArg::Q1 => OperatingPoint::Q1,
            PointArg::Q2 => OperatingPoint::Q2,
            PointArg::Q3 => OperatingPoint::Q3,
            PointArg::Q4 => OperatingPoint::Q4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Source image, or a plane directory with --inverse.
    pub input: PathBuf,
    /// Output directory, or an image path with --inverse.
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "yuv")]
    pub space: SpaceArg,
    /// Rebuild an sRGB image from a plane directory.
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference image or directory.
    pub reference: PathBuf,
    /// Distorted image or directory with the same file names.
    pub distorted: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "yuv")]
    pub space: SpaceArg,
    #[arg(long = "op-point", value_enum, default_value = "q2")]
    pub op_point: PointArg,
    /// Kept chroma latent channels (dual-branch only).
    #[arg(long)]
    pub chroma_channels: Option<usize>,
    /// Write the rate trace and resolved config as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Manifest JSON.
    pub manifest: PathBuf,
    /// Worker threads (overrides the manifest).
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output directory (overrides the manifest).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub aggregation: Option<AggregationArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Pooled,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Mean => Aggregation::MeanOfMeans,
            AggregationArg::Pooled => Aggregation::Pooled,
        }
    }
}

#[derive(Debug, Args)]
pub struct BdArgs {
    /// Curve CSV holding the anchor codec.
    pub anchor: PathBuf,
    /// Curve CSV with the test codecs; defaults to the other codecs of the anchor file.
    pub tests: Option<PathBuf>,
    /// Anchor codec label; defaults to the first codec of the anchor file.
    #[arg(long)]
    pub anchor_codec: Option<String>,
    /// Metric columns (repeatable); defaults to every metric of the anchor.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<Metric>,
    #[arg(long, value_parser = parse_transform, default_value = "quality")]
    pub transform: Transform,
    #[arg(long, value_parser = parse_interp, default_value = "pchip")]
    pub method: Interpolation,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Curve CSV files (`codec,metric,rate_bpp,distortion`).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory receiving one `rd_<metric>.svg` per metric.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Only plot these metrics.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<Metric>,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct ImpulseArgs {
    #[arg(long, value_enum, default_value = "yuv")]
    pub space: SpaceArg,
    /// Kept chroma latent channels (dual-branch only).
    #[arg(long = "channels")]
    pub chroma_channels: Option<usize>,
    #[arg(long = "op-point", value_enum, default_value = "q4")]
    pub op_point: PointArg,
    /// Image used to rank channels; a synthetic image by default.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Seed of the synthetic ranking image.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Mosaic image (PNG or PPM).
    #[arg(long)]
    pub out: PathBuf,
    /// Channel ranking CSV.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// DC-only reconstruction of the ranking image.
    #[arg(long)]
    pub dc_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Architecture JSON: `{"name": ..., "layers": [...]}`.
    pub arch: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_transform(s: &str) -> Result<Transform, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_interp(s: &str) -> Result<Interpolation, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<crate::Error>() {
            return match e {
                crate::Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<crate::codec::BitstreamError>()
            || cause.is::<crate::entropy::EntropyError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
        {
            return EXIT_DATA;
        }
    }
    EXIT_INTERNAL
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    let broken = Some(std::io::ErrorKind::BrokenPipe);
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().map(|e| e.kind()) == broken
            || c.downcast_ref::<serde_json::Error>().and_then(|e| e.io_error_kind()) == broken
    })
}

/// Runs the parsed command, writing reports to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Convert(a) => commands::convert(a, out),
        Command::Metrics(a) => commands::metrics(a, out),
        Command::Encode(a) => commands::encode(a, out),
        Command::Decode(a) => commands::decode(a, out),
        Command::Sweep(a) => commands::sweep(a, out),
        Command::Bd(a) => commands::bd(a, out),
        Command::Plot(a) => commands::plot(a, out),
        Command::Impulse(a) => commands::impulse(a, out),
        Command::Complexity(a) => commands::complexity(a, out),
        Command::Presets => commands::presets(out),
        Command::Synth(a) => commands::synth(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
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
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_default_env().filter_level(level).try_init();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
